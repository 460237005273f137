//! Per-pass optical loss and its effect on heralded fidelities.
//!
//! Each photon entering the cavity during an iteration (every pulse
//! photon and the reinitialization photon) independently survives with
//! probability 1 − L. A lost photon disappears *after* its interaction
//! resolves, so the atom still toggles; a lost reinitialization photon
//! leaves no readout entry for that iteration, which excludes the branch
//! from any full-pattern herald.
//!
//! Loss patterns are enumerated exactly rather than sampled. A branch is
//! labelled by the ordered list of loss events (iteration, slot,
//! polarization as emitted); terms within one branch share a loss history
//! and stay coherent, while distinct histories are orthogonal in the
//! environment and add as a classical mixture. Enumeration stops at a
//! configurable number of loss events; everything beyond the cap is
//! accounted in `truncated_weight` so that total weight is conserved.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::herald::{project_readout, HeraldPattern};
use crate::protocol::ProtocolConfig;
use crate::sprint::sprint_event;
use crate::state::{
    make_input, AtomState, InputSpec, Polarization, PulseTerm, QuantumState, Readout,
};

/// Which photon of an iteration was lost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LossSlot {
    /// 1-based time slot within the multiphoton pulse.
    Pulse(u32),
    /// The reinitialization photon.
    Reinit,
}

/// One recorded loss: where it happened and what the environment absorbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LossEvent {
    pub iteration: u32,
    pub slot: LossSlot,
    pub polarization: Polarization,
}

/// Loss-channel parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    loss: f64,
    max_loss_events: u32,
    mode: LossMode,
    branch_prune: f64,
    max_branches: usize,
}

/// Where loss applies. The default charges every cavity pass; the
/// alternative charges only passes that actually interact with the atom.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossMode {
    #[default]
    PerPass,
    PerInteraction,
}

impl LossConfig {
    pub fn new(loss: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&loss) {
            return Err(Error::InvalidInput(format!(
                "loss probability {loss} outside [0, 1)"
            )));
        }
        Ok(LossConfig {
            loss,
            max_loss_events: 3,
            mode: LossMode::PerPass,
            branch_prune: 1e-16,
            max_branches: 1_000_000,
        })
    }

    #[must_use]
    pub fn with_max_loss_events(mut self, cap: u32) -> Self {
        self.max_loss_events = cap;
        self
    }

    #[must_use]
    pub fn with_mode(mut self, mode: LossMode) -> Self {
        self.mode = mode;
        self
    }

    #[must_use]
    pub fn with_max_branches(mut self, cap: usize) -> Self {
        self.max_branches = cap;
        self
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn max_loss_events(&self) -> u32 {
        self.max_loss_events
    }

    pub fn mode(&self) -> LossMode {
        self.mode
    }
}

/// One classical branch of the loss ensemble.
#[derive(Clone, Debug)]
pub struct LossBranch {
    pub weight: f64,
    pub state: QuantumState,
    pub events: Vec<LossEvent>,
}

/// Classical mixture over loss patterns.
#[derive(Clone, Debug)]
pub struct LossEnsemble {
    pub branches: Vec<LossBranch>,
    /// Weight of loss patterns beyond the enumeration cap, plus pruned
    /// remainders. Branch weights and this sum add to one.
    pub truncated_weight: f64,
}

impl LossEnsemble {
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum::<f64>() + self.truncated_weight
    }

    /// The branch in which no photon was lost.
    pub fn lossless_branch(&self) -> Option<&LossBranch> {
        self.branches.iter().find(|b| b.events.is_empty())
    }
}

/// Packed photon sequence: one bit per time slot, set for V. Keeps the
/// walk keys `Copy` so branch maps never touch the heap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct PackedPulse {
    bits: u64,
    len: u8,
}

impl PackedPulse {
    const MAX_LEN: u32 = 64;

    fn from_term(term: &PulseTerm) -> Result<Self> {
        let len = term.total_photons();
        if len > Self::MAX_LEN {
            return Err(Error::ResourceLimit(format!(
                "loss walk limited to pulses of {} photons, got {len}",
                Self::MAX_LEN
            )));
        }
        let bits = match term.v_slot() {
            Some(slot) => 1u64 << (slot - 1),
            None => 0,
        };
        Ok(PackedPulse {
            bits,
            len: len as u8,
        })
    }

    fn is_empty(self) -> bool {
        self.len == 0
    }

    fn push(mut self, p: Polarization) -> Self {
        debug_assert!(u32::from(self.len) < Self::MAX_LEN);
        if p == Polarization::V {
            self.bits |= 1 << self.len;
        }
        self.len += 1;
        self
    }

    fn pop_front(mut self) -> Option<(Polarization, Self)> {
        if self.len == 0 {
            return None;
        }
        let head = if self.bits & 1 == 1 {
            Polarization::V
        } else {
            Polarization::H
        };
        self.bits >>= 1;
        self.len -= 1;
        Some((head, self))
    }

    /// Split into (H count, V slot), rejecting multi-V pulses.
    fn to_parts(self) -> Result<(u32, Option<u32>)> {
        match self.bits.count_ones() {
            0 => Ok((u32::from(self.len), None)),
            1 => Ok((
                u32::from(self.len) - 1,
                Some(self.bits.trailing_zeros() + 1),
            )),
            _ => Err(Error::ContractViolation(
                "loss walk produced two V photons in one pulse".into(),
            )),
        }
    }
}

/// Mid-iteration term: photons already back out of the cavity, photons
/// still waiting, and the running atom/readout record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct WalkTerm {
    emitted: PackedPulse,
    pending: PackedPulse,
    atom: AtomState,
    readout: Readout,
}

type TermMap<K> = BTreeMap<K, Complex64>;
type BranchMap<K> = BTreeMap<Vec<LossEvent>, TermMap<K>>;

fn map_norm_sqr<K>(terms: &TermMap<K>) -> f64 {
    terms.values().map(|a| a.norm_sqr()).sum()
}

fn add_term<K: Ord>(map: &mut TermMap<K>, key: K, amp: Complex64) {
    *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp;
}

/// Run the protocol through the loss channel, enumerating loss branches.
pub fn run_protocol_lossy(
    input: &InputSpec,
    config: &ProtocolConfig,
    loss: &LossConfig,
) -> Result<LossEnsemble> {
    let initial = make_input(input)?.expand_with_v()?;
    let mut truncated = 0.0;

    let mut branches: BranchMap<PulseTerm> = BTreeMap::new();
    branches.insert(Vec::new(), initial.terms().map(|(t, a)| (*t, *a)).collect());

    for iteration in 1..=config.iterations() {
        branches = lossy_iteration(branches, iteration, loss, &mut truncated)?;
        if branches.len() > loss.max_branches {
            return Err(Error::ResourceLimit(format!(
                "loss enumeration produced {} branches (cap {}); partial results discarded",
                branches.len(),
                loss.max_branches
            )));
        }
        // Drop negligible terms and branches, keeping the weight
        // accounting exact.
        let mut pruned: BranchMap<PulseTerm> = BTreeMap::new();
        for (events, mut terms) in branches {
            let mut removed = 0.0;
            terms.retain(|_, amp| {
                if amp.norm() < config.prune_tol() {
                    removed += amp.norm_sqr();
                    false
                } else {
                    true
                }
            });
            truncated += removed;
            let weight: f64 = terms.values().map(|a| a.norm_sqr()).sum();
            if weight < loss.branch_prune {
                truncated += weight;
            } else {
                pruned.insert(events, terms);
            }
        }
        branches = pruned;
    }

    let readout_len_of = |events: &[LossEvent]| {
        let lost_reinits = events.iter().filter(|e| e.slot == LossSlot::Reinit).count() as u32;
        config.iterations() - lost_reinits
    };

    let mut out = Vec::with_capacity(branches.len());
    for (events, terms) in branches {
        let expected_len = readout_len_of(&events);
        let mut state = QuantumState::from_terms(terms, config.n_max())?;
        if state.readout_len() != expected_len {
            return Err(Error::ContractViolation(format!(
                "branch readout length {} does not match its loss history ({expected_len})",
                state.readout_len()
            )));
        }
        let weight = state.norm_sqr();
        state = state.normalized()?;
        out.push(LossBranch {
            weight,
            state,
            events,
        });
    }
    Ok(LossEnsemble {
        branches: out,
        truncated_weight: truncated,
    })
}

fn lossy_iteration(
    branches: BranchMap<PulseTerm>,
    iteration: u32,
    loss: &LossConfig,
    truncated: &mut f64,
) -> Result<BranchMap<PulseTerm>> {
    let survive_amp = (1.0 - loss.loss).sqrt();
    let lost_amp = loss.loss.sqrt();

    // Into the walk representation.
    let mut frontier: BranchMap<WalkTerm> = BTreeMap::new();
    let mut max_photons = 0u32;
    for (events, terms) in branches {
        let mut walk: TermMap<WalkTerm> = BTreeMap::new();
        for (term, amp) in terms {
            let pending = PackedPulse::from_term(&term)?;
            max_photons = max_photons.max(u32::from(pending.len));
            add_term(
                &mut walk,
                WalkTerm {
                    emitted: PackedPulse::default(),
                    pending,
                    atom: term.atom(),
                    readout: term.readout(),
                },
                amp,
            );
        }
        frontier.insert(events, walk);
    }

    // Pulse photons, one time slot at a time. Slot s is aligned across
    // terms: every term has consumed exactly s−1 photons when slot s is
    // processed, so the environment's time bins coincide.
    for slot in 1..=max_photons {
        let mut next: BranchMap<WalkTerm> = BTreeMap::new();
        for (events, terms) in frontier {
            let mut survive: TermMap<WalkTerm> = BTreeMap::new();
            let mut lost_by_pol: BTreeMap<Polarization, TermMap<WalkTerm>> = BTreeMap::new();
            for (mut term, amp) in terms {
                let Some((photon, rest)) = term.pending.pop_front() else {
                    // No photon in this time bin; the environment stays
                    // in vacuum, coherent with the no-loss branch.
                    add_term(&mut survive, term, amp);
                    continue;
                };
                term.pending = rest;
                let event = sprint_event(photon, term.atom);
                term.atom = event.out_atom;
                let amp = amp * f64::from(event.phase);
                let can_lose = match loss.mode {
                    LossMode::PerPass => true,
                    LossMode::PerInteraction => event.interacted,
                };
                if can_lose && loss.loss > 0.0 {
                    add_term(
                        lost_by_pol.entry(event.out_polarization).or_default(),
                        term,
                        amp * lost_amp,
                    );
                }
                term.emitted = term.emitted.push(event.out_polarization);
                add_term(
                    &mut survive,
                    term,
                    if can_lose && loss.loss > 0.0 {
                        amp * survive_amp
                    } else {
                        amp
                    },
                );
            }
            for (pol, terms) in lost_by_pol {
                // Spawned branches can only lose weight from here on, so
                // ones already below the floor go straight to the
                // truncation account, as do losses past the event cap.
                if events.len() as u32 >= loss.max_loss_events
                    || map_norm_sqr(&terms) < loss.branch_prune
                {
                    *truncated += map_norm_sqr(&terms);
                    continue;
                }
                let mut with_event = events.clone();
                with_event.push(LossEvent {
                    iteration,
                    slot: LossSlot::Pulse(slot),
                    polarization: pol,
                });
                next.insert(with_event, terms);
            }
            if !survive.is_empty() {
                next.insert(events, survive);
            }
        }
        frontier = next;
    }

    // Reinitialization photon.
    let mut done: BranchMap<PulseTerm> = BTreeMap::new();
    for (events, terms) in frontier {
        let mut survive: TermMap<PulseTerm> = BTreeMap::new();
        let mut lost_by_pol: BTreeMap<Polarization, TermMap<PulseTerm>> = BTreeMap::new();
        for (term, amp) in terms {
            debug_assert!(term.pending.is_empty());
            let event = sprint_event(Polarization::H, term.atom);
            let amp = amp * f64::from(event.phase);
            let (n_h, v_slot) = term.emitted.to_parts()?;
            let compact = |readout: Readout| -> Result<PulseTerm> {
                PulseTerm::new(n_h, v_slot, event.out_atom, readout)
            };
            let can_lose = match loss.mode {
                LossMode::PerPass => true,
                LossMode::PerInteraction => event.interacted,
            };
            if can_lose && loss.loss > 0.0 {
                add_term(
                    lost_by_pol.entry(event.out_polarization).or_default(),
                    compact(term.readout)?,
                    amp * lost_amp,
                );
                add_term(
                    &mut survive,
                    compact(term.readout.push(event.out_polarization))?,
                    amp * survive_amp,
                );
            } else {
                add_term(
                    &mut survive,
                    compact(term.readout.push(event.out_polarization))?,
                    amp,
                );
            }
        }
        for (pol, terms) in lost_by_pol {
            if events.len() as u32 >= loss.max_loss_events
                || map_norm_sqr(&terms) < loss.branch_prune
            {
                *truncated += map_norm_sqr(&terms);
                continue;
            }
            let mut with_event = events.clone();
            with_event.push(LossEvent {
                iteration,
                slot: LossSlot::Reinit,
                polarization: pol,
            });
            done.insert(with_event, terms);
        }
        if !survive.is_empty() {
            done.insert(events, survive);
        }
    }
    Ok(done)
}

/// Herald the whole ensemble and average the fidelity to a target over
/// the branches that fire.
///
/// Branches whose readout record is shorter than the protocol (a
/// reinitialization photon was lost) can never match a full pattern and
/// are excluded. Returns (herald probability, heralded fidelity).
pub fn lossy_herald_fidelity(
    input: &InputSpec,
    config: &ProtocolConfig,
    loss: &LossConfig,
    pattern: HeraldPattern,
    target: &QuantumState,
) -> Result<(f64, f64)> {
    let ensemble = run_protocol_lossy(input, config, loss)?;
    let mut herald_prob = 0.0;
    let mut weighted_fidelity = 0.0;
    for branch in &ensemble.branches {
        if branch.state.readout_len() != config.iterations() {
            continue;
        }
        let outcome = project_readout(&branch.state, pattern)?;
        if outcome.probability <= 0.0 {
            continue;
        }
        let joint = branch.weight * outcome.probability;
        herald_prob += joint;
        weighted_fidelity += joint * outcome.post_state.fidelity(target)?;
    }
    if herald_prob <= 0.0 {
        return Err(Error::UndefinedFidelity);
    }
    Ok((herald_prob, weighted_fidelity / herald_prob))
}
