//! Sparse-amplitude simulator for single-photon Raman interaction (SPRINT)
//! based quantum state engineering.
//!
//! A three-level Λ system in a single-sided cavity turns every resonant
//! single-photon pass into a deterministic Raman event. Iterating a
//! multiphoton pulse together with one auxiliary V-polarized photon
//! through such a system, with a reinitializing H photon between rounds,
//! realises a family of heralded operations on travelling light:
//!
//! * the inverse annihilation operator (one iteration, herald `v₁`),
//! * kth-order bright quantum scissors, truncating the photon-number
//!   distribution from below (herald `v_k`),
//! * exact Fock states via an antisymmetric Bell measurement of two
//!   consecutive readout photons,
//! * polarization W states over the readout train, heralded on the
//!   photon number of the multiphoton output.
//!
//! The crate propagates exact sparse amplitudes (no sampling), carries
//! sign bookkeeping as integer ±1 factors, cross-checks every heralded
//! probability against its closed-form efficiency, and models per-pass
//! cavity loss by exact branch enumeration.
//!
//! ```
//! use bqs_core::{herald_bqs, InputSpec, ProtocolConfig};
//!
//! let input = InputSpec::coherent_mean(2.0);
//! let config = ProtocolConfig::for_input(&input, 3).unwrap();
//! let outcome = herald_bqs(&input, &config, 3).unwrap();
//! // The heralded state has at least three photons.
//! let dist = outcome.post_state.photon_number_distribution().unwrap();
//! assert!(dist.keys().all(|&n| n >= 3));
//! ```

pub mod error;
pub mod herald;
pub mod loss;
pub mod protocol;
pub mod sprint;
pub mod state;

pub use error::{Error, Result};
pub use herald::{
    apply_annihilation, bell_measure_fock, bqs_success_probability, eta1_analytic,
    eta1_coherent_closed_form, eta2_analytic, eta3_analytic, eta_bqs_analytic, herald_bqs,
    herald_inverse_annihilation, herald_neutral_bqs, herald_w_state, project_readout,
    w_success_distribution, w_success_probability_analytic, w_target_state, BqsSuccess,
    HeraldOutcome, HeraldPattern, WDistribution,
};
pub use loss::{
    lossy_herald_fidelity, run_protocol_lossy, LossBranch, LossConfig, LossEnsemble, LossEvent,
    LossMode, LossSlot,
};
pub use protocol::{brute_force_protocol, run_iteration, run_protocol, ProtocolConfig};
pub use sprint::{cavity_pass, reinit_atom, sprint_event, SprintEventResult};
pub use state::{
    coherent_n_max, make_input, AtomState, InputKind, InputSpec, Polarization, PulseTerm,
    QuantumState, Readout,
};
