//! The iterated addition protocol.
//!
//! One iteration interacts the multiphoton pulse with the atom-cavity
//! system and then reinitializes the atom with a single H photon, whose
//! emitted polarization is appended to the readout record. Running the
//! protocol attaches the auxiliary V photon to the input and applies the
//! configured number of iterations, pruning negligible amplitudes after
//! each one.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sprint::{cavity_pass, reinit_atom, sprint_event};
use crate::state::{
    make_input, AtomState, InputSpec, Polarization, PulseTerm, QuantumState, Readout,
    DEFAULT_PRUNE_TOL,
};

/// Protocol parameters. `iterations` counts complete
/// interact-then-reinitialize rounds and must be at least one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolConfig {
    iterations: u32,
    n_max: u32,
    prune_tol: f64,
}

impl ProtocolConfig {
    pub fn new(iterations: u32, n_max: u32) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidInput(
                "the protocol needs at least one iteration".into(),
            ));
        }
        if iterations > Readout::MAX_LEN {
            return Err(Error::InvalidInput(format!(
                "at most {} iterations are supported",
                Readout::MAX_LEN
            )));
        }
        Ok(ProtocolConfig {
            iterations,
            n_max,
            prune_tol: DEFAULT_PRUNE_TOL,
        })
    }

    /// Configuration matching an input's truncation bound.
    pub fn for_input(input: &InputSpec, iterations: u32) -> Result<Self> {
        ProtocolConfig::new(iterations, input.n_max())
    }

    #[must_use]
    pub fn with_prune_tol(mut self, tol: f64) -> Self {
        self.prune_tol = tol;
        self
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn prune_tol(&self) -> f64 {
        self.prune_tol
    }
}

/// Apply one iteration (cavity pass, then reinitialization) linearly over
/// all terms. `iteration` is 1-based and must match the readout length
/// accumulated so far.
pub fn run_iteration(state: &QuantumState, iteration: u32) -> Result<QuantumState> {
    if state.readout_len() != iteration - 1 {
        return Err(Error::ContractViolation(format!(
            "iteration {iteration} applied to a state with readout length {}",
            state.readout_len()
        )));
    }
    state.map_terms(iteration, |term, amp| {
        let (passed, pass_phase) = cavity_pass(term)?;
        let (done, reinit_phase) = reinit_atom(&passed, iteration)?;
        Ok(vec![(done, amp * f64::from(pass_phase * reinit_phase))])
    })
}

/// Run the full protocol on an input specification.
pub fn run_protocol(input: &InputSpec, config: &ProtocolConfig) -> Result<QuantumState> {
    if config.n_max() < input.n_max() {
        return Err(Error::InvalidInput(format!(
            "protocol truncation bound {} is below the input's {}",
            config.n_max(),
            input.n_max()
        )));
    }
    let mut state = make_input(input)?.expand_with_v()?;
    for iteration in 1..=config.iterations() {
        state = run_iteration(&state, iteration)?.prune(config.prune_tol());
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Upper photon-index limit accepted by [`brute_force_protocol`].
pub const ORACLE_MAX_FOCK: u32 = 5;

/// Upper iteration limit accepted by [`brute_force_protocol`].
pub const ORACLE_MAX_ITERATIONS: u32 = 7;

/// Explicit-sequence term used by the oracle: the pulse is an ordered
/// polarization list, the readout an ordered polarization list, with no
/// compact bookkeeping anywhere.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct SeqTerm {
    pulse: Vec<Polarization>,
    atom: AtomState,
    readout: Vec<Polarization>,
}

/// Independent reference implementation of [`run_protocol`].
///
/// Pulses are kept as explicit ordered polarization sequences over all
/// time orderings and walked photon by photon through [`sprint_event`].
/// Exponentially slower than the engine; inputs are limited to small
/// instances and anything larger is refused.
pub fn brute_force_protocol(input: &InputSpec, config: &ProtocolConfig) -> Result<QuantumState> {
    let (coeffs, _) = input.coefficients()?;
    let top = coeffs.iter().rposition(|c| c.norm_sqr() > 0.0).unwrap_or(0) as u32;
    if top > ORACLE_MAX_FOCK {
        return Err(Error::ResourceLimit(format!(
            "oracle limited to photon indices <= {ORACLE_MAX_FOCK}, input reaches {top}"
        )));
    }
    if config.iterations() > ORACLE_MAX_ITERATIONS {
        return Err(Error::ResourceLimit(format!(
            "oracle limited to {ORACLE_MAX_ITERATIONS} iterations, asked for {}",
            config.iterations()
        )));
    }

    // Initial expansion: |N_h⟩ ⊗ |1_v⟩ as the equal superposition of the
    // N+1 explicit orderings of one V among N H photons.
    let mut terms: BTreeMap<SeqTerm, Complex64> = BTreeMap::new();
    for (n, c) in coeffs.iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let scale = (n as f64 + 1.0).sqrt().recip();
        for v_pos in 0..=n {
            let mut pulse = vec![Polarization::H; n + 1];
            pulse[v_pos] = Polarization::V;
            let key = SeqTerm {
                pulse,
                atom: AtomState::GroundV,
                readout: Vec::new(),
            };
            *terms.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c * scale;
        }
    }

    for _ in 0..config.iterations() {
        let mut next: BTreeMap<SeqTerm, Complex64> = BTreeMap::new();
        for (term, amp) in terms {
            let mut atom = term.atom;
            let mut phase = 1i32;
            let mut pulse_out = Vec::with_capacity(term.pulse.len());
            for &photon in &term.pulse {
                let ev = sprint_event(photon, atom);
                pulse_out.push(ev.out_polarization);
                atom = ev.out_atom;
                phase *= ev.phase;
            }
            let reinit = sprint_event(Polarization::H, atom);
            phase *= reinit.phase;
            let mut readout = term.readout;
            readout.push(reinit.out_polarization);
            let key = SeqTerm {
                pulse: pulse_out,
                atom: reinit.out_atom,
                readout,
            };
            *next.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp * f64::from(phase);
        }
        terms = next;
    }

    let compact = terms.into_iter().map(|(term, amp)| {
        let v_slots: Vec<u32> = term
            .pulse
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == Polarization::V)
            .map(|(i, _)| i as u32 + 1)
            .collect();
        if v_slots.len() > 1 {
            return Err(Error::ContractViolation(
                "oracle produced a pulse with two V photons".into(),
            ));
        }
        let n_h = (term.pulse.len() - v_slots.len()) as u32;
        let mut readout = Readout::new();
        for &p in &term.readout {
            readout = readout.push(p);
        }
        Ok((
            PulseTerm::new(n_h, v_slots.first().copied(), term.atom, readout)?,
            amp,
        ))
    });
    let pairs: Vec<(PulseTerm, Complex64)> = compact.collect::<Result<_>>()?;
    QuantumState::from_terms(pairs, config.n_max())
}
