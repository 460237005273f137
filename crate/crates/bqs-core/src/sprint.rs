//! Elementary adiabatic-limit interaction rules.
//!
//! In the adiabatic limit the photons of a pulse reach the atom-cavity
//! system one at a time, so the whole cavity pass of a basis term reduces
//! to a walk over its photons in time order. Each single-photon event
//! either triggers a Raman transition (photon re-emitted in the other
//! mode, atom toggled, amplitude sign flipped) or passes through
//! untouched, depending on whether the photon's mode matches the atom's
//! ground state. Signs are tracked as exact ±1 integers here and only
//! folded into complex amplitudes at the state layer.

use crate::error::{Error, Result};
use crate::state::{AtomState, Polarization, PulseTerm};

/// Outcome of a single photon meeting the atom-cavity system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SprintEventResult {
    pub out_polarization: Polarization,
    pub out_atom: AtomState,
    /// Whether a Raman transition took place.
    pub interacted: bool,
    /// Exact amplitude factor, −1 on interaction and +1 otherwise.
    pub phase: i32,
}

/// Single-photon Raman interaction rule.
///
/// An H photon meeting the atom in `g_h` comes back V with the atom
/// toggled to `g_v` and a sign flip, and symmetrically for V on `g_v`.
/// A photon whose mode does not match the populated ground state is not
/// coupled to the transition and passes through unchanged.
pub fn sprint_event(pol: Polarization, atom: AtomState) -> SprintEventResult {
    match (pol, atom) {
        (Polarization::H, AtomState::GroundH) => SprintEventResult {
            out_polarization: Polarization::V,
            out_atom: AtomState::GroundV,
            interacted: true,
            phase: -1,
        },
        (Polarization::V, AtomState::GroundV) => SprintEventResult {
            out_polarization: Polarization::H,
            out_atom: AtomState::GroundH,
            interacted: true,
            phase: -1,
        },
        _ => SprintEventResult {
            out_polarization: pol,
            out_atom: atom,
            interacted: false,
            phase: 1,
        },
    }
}

/// One full pass of a pulse term through the cavity.
///
/// Walking the photons in time order collapses to four cases:
///
/// * all-H pulse on `g_v`: nothing couples, identity with phase +1;
/// * all-H pulse on `g_h`: the first photon is converted, leaving a V
///   photon in slot 1 and the atom in `g_v`, phase −1 (photon
///   subtraction; the empty pulse is the identity);
/// * V photon in slot k ≤ n_h on `g_v`: two consecutive interactions
///   shift the V photon to slot k+1 and restore `g_v`, phase (−1)² = +1;
/// * V photon in the last slot on `g_v`: a single interaction absorbs it
///   into the H mode, leaving n_h+1 H photons on `g_h`, phase −1
///   (deterministic photon addition).
///
/// A term holding a V photon while the atom sits in `g_h` would scatter
/// into two V photons, which the single-V pulse basis cannot represent;
/// the protocol never produces such a term (the atom is reinitialized to
/// `g_v` before every pass, with or without loss) and it is rejected
/// here.
pub fn cavity_pass(term: &PulseTerm) -> Result<(PulseTerm, i32)> {
    let readout = term.readout();
    let n = term.n_h();
    match (term.v_slot(), term.atom()) {
        (None, AtomState::GroundV) => Ok((*term, 1)),
        (None, AtomState::GroundH) => {
            if n == 0 {
                // Empty pulse: no photon ever reaches the atom.
                Ok((*term, 1))
            } else {
                Ok((
                    PulseTerm::new(n - 1, Some(1), AtomState::GroundV, readout)?,
                    -1,
                ))
            }
        }
        (Some(slot), AtomState::GroundV) => {
            if slot == n + 1 {
                Ok((
                    PulseTerm::new(n + 1, None, AtomState::GroundH, readout)?,
                    -1,
                ))
            } else {
                Ok((
                    PulseTerm::new(n, Some(slot + 1), AtomState::GroundV, readout)?,
                    1,
                ))
            }
        }
        (Some(_), AtomState::GroundH) => Err(Error::ContractViolation(
            "cavity pass on a V-carrying term with the atom in g_h leaves \
             two V photons in the pulse"
                .into(),
        )),
    }
}

/// Reinitialization step: one H photon sent in after the pulse pass.
///
/// If the pass ended in `g_h` (a photon was added) the readout photon
/// emerges as `v` and the atom returns to `g_v` with a sign flip;
/// otherwise the photon passes through as `h`. `iteration` must be the
/// 1-based index of the iteration being completed.
pub fn reinit_atom(term: &PulseTerm, iteration: u32) -> Result<(PulseTerm, i32)> {
    if iteration != term.readout().len() + 1 {
        return Err(Error::ContractViolation(format!(
            "reinitialization {iteration} applied to a term with {} completed iterations",
            term.readout().len()
        )));
    }
    let event = sprint_event(Polarization::H, term.atom());
    let out = term
        .with_atom(event.out_atom)
        .with_readout(term.readout().push(event.out_polarization));
    Ok((out, event.phase))
}
