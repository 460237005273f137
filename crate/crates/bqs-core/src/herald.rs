//! Heralding schemes and their closed-form efficiencies.
//!
//! After the protocol has run, different measurements on the readout
//! train or on the multiphoton output collapse the remaining system into
//! engineered states: a `v` readout in the first iteration realises the
//! inverse annihilation operator, a `v` in iteration k the kth-order
//! bright quantum scissors, an antisymmetric Bell coincidence of two
//! consecutive readout photons an exact Fock state, and a photon-number
//! measurement of the pulse a polarization W state over the readout
//! photons. Every scheme comes with the matching closed-form efficiency
//! so simulation and formula can be checked against each other.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::{run_protocol, ProtocolConfig};
use crate::state::{InputSpec, PulseTerm, QuantumState, Readout, DEFAULT_TAIL_THRESHOLD};

/// A post-selection pattern on the final joint state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeraldPattern {
    /// `v` in readout position k, `h` everywhere else.
    ReadoutVAt(u32),
    /// All readout photons `h` (the no-addition branch).
    ReadoutAllH,
    /// Antisymmetric Bell coincidence of readout photons k and k+1, all
    /// other positions `h`.
    BellAntisym(u32),
    /// Photon-number measurement of the multiphoton output. With
    /// `verify_vacuum` the V mode of the pulse must be empty and the
    /// pulse is measured away; without it the pulse is kept in the
    /// post-state.
    Multiphoton { photons: u32, verify_vacuum: bool },
}

/// Result of applying a herald: its probability and the collapsed,
/// renormalized remainder of the system.
#[derive(Clone, Debug)]
pub struct HeraldOutcome {
    pub pattern: HeraldPattern,
    pub probability: f64,
    pub post_state: QuantumState,
    pub metadata: BTreeMap<String, String>,
}

fn base_metadata(state: &QuantumState) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    if state.discarded_weight() > DEFAULT_TAIL_THRESHOLD {
        meta.insert(
            "truncation_tail".into(),
            state.discarded_weight().to_string(),
        );
    }
    meta
}

fn assemble_outcome(
    pattern: HeraldPattern,
    projected: Vec<(PulseTerm, Complex64)>,
    source: &QuantumState,
) -> Result<HeraldOutcome> {
    // Accumulate first, then drop entries that cancelled exactly (the
    // Bell projection relies on telescoping cancellation).
    let mut raw = QuantumState::from_terms(projected, source.n_max())?;
    raw = raw.prune(f64::MIN_POSITIVE);
    raw.set_discarded_weight(source.discarded_weight());
    let probability = raw.norm_sqr();
    let post_state = if probability > 0.0 {
        raw.normalized()?
    } else {
        raw
    };
    Ok(HeraldOutcome {
        pattern,
        probability,
        post_state,
        metadata: base_metadata(source),
    })
}

/// Project the final state onto a herald pattern. Zero-probability
/// heralds return an empty post-state rather than an error.
pub fn project_readout(state: &QuantumState, pattern: HeraldPattern) -> Result<HeraldOutcome> {
    let len = state.readout_len();
    let stripped = |term: &PulseTerm| term.with_readout(Readout::new());
    match pattern {
        HeraldPattern::ReadoutVAt(k) => {
            if k == 0 || k > len {
                return Err(Error::ContractViolation(format!(
                    "readout herald position {k} outside 1..={len}"
                )));
            }
            let kept = state
                .terms()
                .filter(|(t, _)| t.readout().single_v_position() == Some(k))
                .map(|(t, a)| (stripped(t), *a))
                .collect();
            assemble_outcome(pattern, kept, state)
        }
        HeraldPattern::ReadoutAllH => {
            let kept = state
                .terms()
                .filter(|(t, _)| t.readout().is_all_h())
                .map(|(t, a)| (stripped(t), *a))
                .collect();
            assemble_outcome(pattern, kept, state)
        }
        HeraldPattern::BellAntisym(k) => {
            if k == 0 || k + 1 > len {
                return Err(Error::ContractViolation(format!(
                    "Bell herald needs positions {k} and {} inside 1..={len}",
                    k + 1
                )));
            }
            // (⟨v_k h_{k+1}| − ⟨h_k v_{k+1}|)/√2 with `h` elsewhere; the
            // overall sign is fixed to the minus combination.
            let r = 0.5_f64.sqrt();
            let mut kept = Vec::new();
            for (term, amp) in state.terms() {
                match term.readout().single_v_position() {
                    Some(p) if p == k => kept.push((stripped(term), amp * r)),
                    Some(p) if p == k + 1 => kept.push((stripped(term), -amp * r)),
                    _ => {}
                }
            }
            assemble_outcome(pattern, kept, state)
        }
        HeraldPattern::Multiphoton {
            photons,
            verify_vacuum,
        } => {
            let mut kept = Vec::new();
            for (term, amp) in state.terms() {
                if term.n_h() != photons {
                    continue;
                }
                if verify_vacuum {
                    if term.v_slot().is_none() {
                        // Pulse measured away; the readout register and
                        // atom remain.
                        kept.push((PulseTerm::new(0, None, term.atom(), term.readout())?, *amp));
                    }
                } else {
                    kept.push((*term, *amp));
                }
            }
            assemble_outcome(pattern, kept, state)
        }
    }
}

/// Inverse annihilation: a single protocol iteration heralded on `v₁`.
///
/// The post-state is Σ_N C_N/√(N+1) |N+1⟩ and the probability is
/// η₁ = Σ_N |C_N|²/(N+1).
pub fn herald_inverse_annihilation(
    input: &InputSpec,
    config: &ProtocolConfig,
) -> Result<HeraldOutcome> {
    if config.iterations() != 1 {
        return Err(Error::ContractViolation(format!(
            "inverse annihilation uses exactly one iteration, got {}",
            config.iterations()
        )));
    }
    herald_bqs(input, config, 1)
}

/// kth-order bright quantum scissors: herald on `v` in readout position k.
///
/// The post-state Σ_{N≥k} C_{N−1}/√N |N⟩ has no components below k
/// photons; the probability is η₂ = Σ_{N≥k} |C_{N−1}|²/N.
pub fn herald_bqs(input: &InputSpec, config: &ProtocolConfig, k: u32) -> Result<HeraldOutcome> {
    if k == 0 || k > config.iterations() {
        return Err(Error::ContractViolation(format!(
            "scissors order {k} outside 1..={}",
            config.iterations()
        )));
    }
    let state = run_protocol(input, config)?;
    project_readout(&state, HeraldPattern::ReadoutVAt(k))
}

/// Probability that the scissors fired at all within the configured
/// iterations, together with the input tail that can defeat it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BqsSuccess {
    /// Total probability of any `v` readout within k+1 iterations.
    pub probability: f64,
    /// P(N ≥ k+1) of the input: the scissors is deterministic when this
    /// vanishes.
    pub tail_probability: f64,
}

/// Closed-form scissors success probability after `iterations` = k+1
/// rounds, evaluated from the input coefficients.
pub fn bqs_success_probability(input: &InputSpec, config: &ProtocolConfig) -> Result<BqsSuccess> {
    let (coeffs, _) = input.coefficients()?;
    Ok(eta_bqs_analytic(&coeffs, config.iterations() - 1))
}

/// Ideal bosonic annihilation on a V-free pulse state.
///
/// Returns the mean photon number of the input as the success weight and
/// the normalized image Σ c_N √N |N−1⟩. Annihilating a vacuum-only state
/// yields weight zero and an empty state.
pub fn apply_annihilation(state: &QuantumState) -> Result<(f64, QuantumState)> {
    let mut kept: Vec<(PulseTerm, Complex64)> = Vec::new();
    let mut weight = 0.0;
    let mut total = 0.0;
    for (term, amp) in state.terms() {
        if term.v_slot().is_some() {
            return Err(Error::ContractViolation(
                "annihilation acts on the H mode of a V-free state".into(),
            ));
        }
        total += amp.norm_sqr();
        let n = term.n_h();
        if n == 0 {
            continue;
        }
        weight += f64::from(n) * amp.norm_sqr();
        kept.push((
            PulseTerm::new(n - 1, None, term.atom(), term.readout())?,
            amp * f64::from(n).sqrt(),
        ));
    }
    if total <= 0.0 {
        return Err(Error::InvalidInput("zero-norm state".into()));
    }
    let mut image = QuantumState::from_terms(kept, state.n_max())?;
    image.set_discarded_weight(state.discarded_weight());
    let weight = weight / total;
    if weight > 0.0 {
        Ok((weight, image.normalized()?))
    } else {
        Ok((0.0, image))
    }
}

/// Neutral scissors of order k: scissors of order k+1 followed by ideal
/// annihilation, which removes everything below k photons while keeping
/// the amplitude ratios of the surviving components.
///
/// Costs one extra iteration, so `config.iterations() ≥ k+1` is required.
/// The reported probability is the herald probability of the underlying
/// order-(k+1) scissors; the annihilation success weight is recorded in
/// the metadata.
pub fn herald_neutral_bqs(
    input: &InputSpec,
    config: &ProtocolConfig,
    k: u32,
) -> Result<HeraldOutcome> {
    if k == 0 || k + 1 > config.iterations() {
        return Err(Error::ContractViolation(format!(
            "neutral scissors of order {k} needs at least {} iterations, got {}",
            k + 1,
            config.iterations()
        )));
    }
    let sharp = herald_bqs(input, config, k + 1)?;
    if sharp.probability == 0.0 {
        return Ok(HeraldOutcome {
            pattern: sharp.pattern,
            probability: 0.0,
            post_state: sharp.post_state,
            metadata: sharp.metadata,
        });
    }
    let (weight, post_state) = apply_annihilation(&sharp.post_state)?;
    let mut metadata = sharp.metadata;
    metadata.insert("annihilation_weight".into(), weight.to_string());
    Ok(HeraldOutcome {
        pattern: sharp.pattern,
        probability: sharp.probability,
        post_state,
        metadata,
    })
}

/// Exact Fock-state generation: antisymmetric Bell measurement of the
/// kth and (k+1)th readout photons.
///
/// The two scissors branches interfere destructively everywhere above k
/// photons, leaving |k⟩ with unit fidelity at probability
/// η₃ = |C_{k−1}|²/(2k).
pub fn bell_measure_fock(
    input: &InputSpec,
    config: &ProtocolConfig,
    k: u32,
) -> Result<HeraldOutcome> {
    if k == 0 || k + 1 > config.iterations() {
        return Err(Error::ContractViolation(format!(
            "Fock generation of |{k}⟩ needs at least {} iterations, got {}",
            k + 1,
            config.iterations()
        )));
    }
    let state = run_protocol(input, config)?;
    project_readout(&state, HeraldPattern::BellAntisym(k))
}

/// W-state generation: measure M photons in the multiphoton output with
/// vacuum in the verification port. The readout photons collapse to a
/// polarization W state of min(M, iterations) qubits (trailing readout
/// photons beyond M stay `h`).
pub fn herald_w_state(input: &InputSpec, config: &ProtocolConfig, m: u32) -> Result<HeraldOutcome> {
    if m < 3 {
        return Err(Error::ContractViolation(format!(
            "W states are defined for at least 3 qubits, got M = {m}"
        )));
    }
    if config.iterations() < 3 {
        return Err(Error::ContractViolation(format!(
            "W-state generation needs at least 3 iterations, got {}",
            config.iterations()
        )));
    }
    let state = run_protocol(input, config)?;
    let mut outcome = project_readout(
        &state,
        HeraldPattern::Multiphoton {
            photons: m,
            verify_vacuum: true,
        },
    )?;
    outcome
        .metadata
        .insert("measured_photons".into(), m.to_string());
    outcome
        .metadata
        .insert("w_size".into(), m.min(config.iterations()).to_string());
    Ok(outcome)
}

/// Success probabilities for each W-state size.
#[derive(Clone, Debug, PartialEq)]
pub struct WDistribution {
    /// W-state size → success probability. All photon-number outcomes
    /// M ≥ iterations collapse to the same readout state and are
    /// aggregated under size = iterations.
    pub probabilities: BTreeMap<u32, f64>,
    pub total: f64,
}

/// Tabulate the W-state success probabilities for every reachable size.
pub fn w_success_distribution(input: &InputSpec, config: &ProtocolConfig) -> Result<WDistribution> {
    if config.iterations() < 3 {
        return Err(Error::ContractViolation(format!(
            "W-state generation needs at least 3 iterations, got {}",
            config.iterations()
        )));
    }
    let state = run_protocol(input, config)?;
    let mut probabilities: BTreeMap<u32, f64> = BTreeMap::new();
    let mut total = 0.0;
    for measured in 3..=input.n_max() + 1 {
        let outcome = project_readout(
            &state,
            HeraldPattern::Multiphoton {
                photons: measured,
                verify_vacuum: true,
            },
        )?;
        if outcome.probability == 0.0 {
            continue;
        }
        let size = measured.min(config.iterations());
        *probabilities.entry(size).or_insert(0.0) += outcome.probability;
        total += outcome.probability;
    }
    Ok(WDistribution {
        probabilities,
        total,
    })
}

/// Reference W state of `size` qubits over `readout_len` readout slots:
/// the uniform single-`v` superposition on the first `size` positions
/// with `h` padding after them.
pub fn w_target_state(size: u32, readout_len: u32, n_max: u32) -> Result<QuantumState> {
    if size < 3 || size > readout_len {
        return Err(Error::ContractViolation(format!(
            "W target of size {size} does not fit {readout_len} readout slots"
        )));
    }
    let scale = f64::from(size).sqrt().recip();
    let terms = (1..=size).map(|pos| {
        let mut readout = Readout::new();
        for p in 1..=readout_len {
            readout = readout.push(if p == pos {
                crate::state::Polarization::V
            } else {
                crate::state::Polarization::H
            });
        }
        (
            PulseTerm::new(0, None, crate::state::AtomState::GroundV, readout).unwrap(),
            Complex64::new(scale, 0.0),
        )
    });
    QuantumState::from_terms(terms, n_max)
}

// ---------------------------------------------------------------------------
// Closed-form efficiencies
// ---------------------------------------------------------------------------

/// η₁ = Σ_N |C_N|²/(N+1): inverse-annihilation efficiency.
pub fn eta1_analytic(coeffs: &[Complex64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c.norm_sqr() / (n as f64 + 1.0))
        .sum()
}

/// η₁ for a coherent input in closed form: (1 − e^{−α²})/α², with the
/// α² → 0 limit equal to one.
pub fn eta1_coherent_closed_form(alpha_sq: f64) -> f64 {
    if alpha_sq <= 0.0 {
        1.0
    } else {
        (1.0 - (-alpha_sq).exp()) / alpha_sq
    }
}

/// η₂ = Σ_{N≥k} |C_{N−1}|²/N: kth-order scissors efficiency.
pub fn eta2_analytic(coeffs: &[Complex64], k: u32) -> f64 {
    assert!(k >= 1, "scissors order starts at 1");
    coeffs
        .iter()
        .enumerate()
        .skip(k as usize - 1)
        .map(|(n, c)| c.norm_sqr() / (n as f64 + 1.0))
        .sum()
}

/// Scissors success probability after k+1 iterations:
/// 1 − Σ_{N≥k+1} (N−k)|C_N|²/(N+1), together with the input tail
/// P(N ≥ k+1).
pub fn eta_bqs_analytic(coeffs: &[Complex64], k: u32) -> BqsSuccess {
    let mut deficit = 0.0;
    let mut tail = 0.0;
    for (n, c) in coeffs.iter().enumerate().skip(k as usize + 1) {
        let w = c.norm_sqr();
        deficit += (n as f64 - f64::from(k)) * w / (n as f64 + 1.0);
        tail += w;
    }
    BqsSuccess {
        probability: 1.0 - deficit,
        tail_probability: tail,
    }
}

/// η₃ = |C_{k−1}|²/(2k): Bell-heralded Fock-state efficiency.
pub fn eta3_analytic(coeffs: &[Complex64], k: u32) -> f64 {
    assert!(k >= 1, "Fock generation starts at |1⟩");
    coeffs
        .get(k as usize - 1)
        .map_or(0.0, |c| c.norm_sqr() / (2.0 * f64::from(k)))
}

/// Closed-form W-state success probability for a given state size.
///
/// Sizes below the iteration count occur only for M = size measured
/// photons (probability |C_{size−1}|²); the terminal size aggregates all
/// M ≥ iterations with the resolved fraction iterations/M each.
pub fn w_success_probability_analytic(coeffs: &[Complex64], size: u32, iterations: u32) -> f64 {
    if size < 3 || size > iterations {
        return 0.0;
    }
    let idx = |m: u32| coeffs.get(m as usize - 1).map_or(0.0, |c| c.norm_sqr());
    if size < iterations {
        idx(size)
    } else {
        (iterations..=coeffs.len() as u32)
            .map(|m| idx(m) * f64::from(iterations) / f64::from(m))
            .sum()
    }
}
