//! Shared setups for the criterion benches.

use bqs_core::{InputSpec, ProtocolConfig};

/// The W-state workload: coherent mean 5, ten iterations.
pub fn w_state_setup() -> (InputSpec, ProtocolConfig) {
    let input = InputSpec::coherent_mean(5.0);
    let config = ProtocolConfig::for_input(&input, 10).unwrap();
    (input, config)
}

/// The loss-scan workload: coherent mean 0.02, three iterations.
pub fn loss_setup() -> (InputSpec, ProtocolConfig) {
    let input = InputSpec::coherent_mean(0.02);
    let config = ProtocolConfig::for_input(&input, 3).unwrap();
    (input, config)
}
