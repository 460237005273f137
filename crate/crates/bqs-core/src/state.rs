//! Time-ordered basis terms and the sparse state container.
//!
//! A pulse is described by its H-photon count plus (at most) one V photon
//! sitting in a definite time slot. Together with the atomic ground state
//! and the readout record accumulated so far, this labels one basis term
//! of the joint state. States are sparse maps from terms to complex
//! amplitudes; all operations here are pure and leave their inputs intact.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when checking that a state is normalized.
pub const NORM_TOL: f64 = 1e-12;

/// Default pruning tolerance for stored amplitudes.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-14;

/// Default threshold above which a truncated coherent-state tail is
/// considered worth flagging.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-9;

/// Photon polarization. V marks the single added/auxiliary photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "h"),
            Polarization::V => write!(f, "v"),
        }
    }
}

/// Ground state of the Λ system. The excited state is never populated in
/// the adiabatic limit, so two values suffice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomState {
    GroundH,
    GroundV,
}

impl fmt::Display for AtomState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomState::GroundH => write!(f, "gh"),
            AtomState::GroundV => write!(f, "gv"),
        }
    }
}

/// Readout record: one entry per completed iteration, `h` or `v`, packed
/// into a 64-bit word (set bit = `v` at that position).
///
/// Positions are 1-based throughout, matching the slot convention used for
/// pulse photons.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Readout {
    bits: u64,
    len: u8,
}

impl Readout {
    /// Hard cap on the number of recorded iterations.
    pub const MAX_LEN: u32 = 64;

    pub fn new() -> Self {
        Readout::default()
    }

    pub fn len(&self) -> u32 {
        u32::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Append one entry. Panics past [`Readout::MAX_LEN`]; protocol
    /// configuration rejects iteration counts that could get there.
    #[must_use]
    pub fn push(mut self, p: Polarization) -> Self {
        assert!(
            u32::from(self.len) < Self::MAX_LEN,
            "readout record overflow"
        );
        if p == Polarization::V {
            self.bits |= 1 << self.len;
        }
        self.len += 1;
        self
    }

    /// Entry at 1-based position `pos`, or `None` past the end.
    pub fn at(&self, pos: u32) -> Option<Polarization> {
        if pos == 0 || pos > self.len() {
            return None;
        }
        Some(if self.bits >> (pos - 1) & 1 == 1 {
            Polarization::V
        } else {
            Polarization::H
        })
    }

    pub fn count_v(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_all_h(&self) -> bool {
        self.bits == 0
    }

    /// Position of the single `v` entry, if there is exactly one.
    pub fn single_v_position(&self) -> Option<u32> {
        if self.count_v() == 1 {
            Some(self.bits.trailing_zeros() + 1)
        } else {
            None
        }
    }

    /// Parse a string over `{h, v}`; `""` and `"-"` both mean empty.
    pub fn parse(s: &str) -> Result<Self> {
        let mut r = Readout::new();
        if s == "-" {
            return Ok(r);
        }
        for c in s.chars() {
            if r.len() >= Self::MAX_LEN {
                return Err(Error::InvalidInput("readout string too long".into()));
            }
            match c {
                'h' => r = r.push(Polarization::H),
                'v' => r = r.push(Polarization::V),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "readout character {other:?} is not 'h' or 'v'"
                    )))
                }
            }
        }
        Ok(r)
    }
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in 1..=self.len() {
            write!(f, "{}", self.at(pos).unwrap())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Readout(\"{self}\")")
    }
}

/// One basis term: pulse content, atomic state and readout record.
///
/// Invariants enforced at construction: at most one V photon, and if
/// present its slot lies in `1..=n_h + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PulseTerm {
    n_h: u32,
    v_slot: Option<u32>,
    atom: AtomState,
    readout: Readout,
}

impl PulseTerm {
    pub fn new(n_h: u32, v_slot: Option<u32>, atom: AtomState, readout: Readout) -> Result<Self> {
        if let Some(slot) = v_slot {
            if slot == 0 || slot > n_h + 1 {
                return Err(Error::ContractViolation(format!(
                    "v slot {slot} outside 1..={} for {n_h} H photons",
                    n_h + 1
                )));
            }
        }
        Ok(PulseTerm {
            n_h,
            v_slot,
            atom,
            readout,
        })
    }

    /// All-H pulse with an empty readout.
    pub fn all_h(n_h: u32, atom: AtomState) -> Self {
        PulseTerm {
            n_h,
            v_slot: None,
            atom,
            readout: Readout::new(),
        }
    }

    /// Pulse of `n_h` H photons plus one V photon at `slot`, empty readout.
    pub fn with_v(n_h: u32, slot: u32, atom: AtomState) -> Result<Self> {
        PulseTerm::new(n_h, Some(slot), atom, Readout::new())
    }

    pub fn n_h(&self) -> u32 {
        self.n_h
    }

    pub fn v_slot(&self) -> Option<u32> {
        self.v_slot
    }

    pub fn atom(&self) -> AtomState {
        self.atom
    }

    pub fn readout(&self) -> Readout {
        self.readout
    }

    /// Total number of photons in the pulse.
    pub fn total_photons(&self) -> u32 {
        self.n_h + u32::from(self.v_slot.is_some())
    }

    /// Polarization of the pulse photon in 1-based time slot `slot`.
    pub fn polarization_at(&self, slot: u32) -> Option<Polarization> {
        if slot == 0 || slot > self.total_photons() {
            return None;
        }
        Some(if self.v_slot == Some(slot) {
            Polarization::V
        } else {
            Polarization::H
        })
    }

    /// Pulse photons in time order.
    pub fn pulse_sequence(&self) -> Vec<Polarization> {
        (1..=self.total_photons())
            .map(|s| self.polarization_at(s).unwrap())
            .collect()
    }

    #[must_use]
    pub(crate) fn with_readout(mut self, readout: Readout) -> Self {
        self.readout = readout;
        self
    }

    #[must_use]
    pub(crate) fn with_atom(mut self, atom: AtomState) -> Self {
        self.atom = atom;
        self
    }
}

impl fmt::Display for PulseTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}h", self.n_h)?;
        if let Some(slot) = self.v_slot {
            write!(f, ", 1v@{slot}")?;
        }
        write!(f, ", {}⟩", self.atom)?;
        if !self.readout.is_empty() {
            write!(f, "⊗|{}⟩", self.readout)?;
        }
        Ok(())
    }
}

/// How the input pulse is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum InputKind {
    /// Coherent state of amplitude α in the H mode.
    Coherent(Complex64),
    /// Fock state |n⟩ in the H mode.
    Fock(u32),
    /// Explicit coefficients C_0..C_n over the H-mode Fock basis.
    Custom(Vec<Complex64>),
}

/// Input-state specification with its truncation bound.
///
/// Coefficient vectors are normalized after truncation; the discarded tail
/// weight is recorded on the constructed state.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSpec {
    kind: InputKind,
    n_max: u32,
    tail_threshold: f64,
}

/// Truncation bound keeping the Poisson tail below ~1e-9 for mean photon
/// numbers up to ten.
pub fn coherent_n_max(alpha_sq: f64) -> u32 {
    (alpha_sq + 6.0 * alpha_sq.sqrt() + 10.0).ceil() as u32
}

impl InputSpec {
    pub fn coherent(alpha: Complex64) -> Self {
        InputSpec {
            n_max: coherent_n_max(alpha.norm_sqr()),
            kind: InputKind::Coherent(alpha),
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        }
    }

    /// Coherent state with real amplitude √`alpha_sq`.
    pub fn coherent_mean(alpha_sq: f64) -> Self {
        InputSpec::coherent(Complex64::new(alpha_sq.max(0.0).sqrt(), 0.0))
    }

    pub fn fock(n: u32) -> Self {
        InputSpec {
            kind: InputKind::Fock(n),
            n_max: n,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        }
    }

    pub fn custom(coeffs: Vec<Complex64>) -> Self {
        let n_max = coeffs.len().saturating_sub(1) as u32;
        InputSpec {
            kind: InputKind::Custom(coeffs),
            n_max,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        }
    }

    /// Real-valued convenience wrapper around [`InputSpec::custom`].
    pub fn custom_real(coeffs: &[f64]) -> Self {
        InputSpec::custom(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    #[must_use]
    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    #[must_use]
    pub fn with_tail_threshold(mut self, threshold: f64) -> Self {
        self.tail_threshold = threshold;
        self
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn kind(&self) -> &InputKind {
        &self.kind
    }

    pub fn tail_threshold(&self) -> f64 {
        self.tail_threshold
    }

    /// Normalized coefficient vector `C_0..C_{n_max}` plus the squared
    /// weight discarded by truncation.
    pub fn coefficients(&self) -> Result<(Vec<Complex64>, f64)> {
        let n = self.n_max as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        match &self.kind {
            InputKind::Fock(k) => {
                if (*k as usize) > n {
                    return Err(Error::InvalidInput(format!(
                        "fock index {k} exceeds truncation bound {n}"
                    )));
                }
                coeffs[*k as usize] = Complex64::new(1.0, 0.0);
            }
            InputKind::Coherent(alpha) => {
                // C_N = e^{-|α|²/2} α^N / √(N!), built up iteratively.
                let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
                coeffs[0] = c;
                for (k, slot) in coeffs.iter_mut().enumerate().skip(1) {
                    c *= alpha / (k as f64).sqrt();
                    *slot = c;
                }
            }
            InputKind::Custom(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidInput("empty coefficient list".into()));
                }
                for (k, c) in list.iter().enumerate() {
                    if k > n {
                        break;
                    }
                    coeffs[k] = *c;
                }
            }
        }
        let kept: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if kept <= 0.0 {
            return Err(Error::InvalidInput(
                "coefficient vector has zero norm".into(),
            ));
        }
        let full: f64 = match &self.kind {
            InputKind::Custom(list) => list.iter().map(|c| c.norm_sqr()).sum(),
            _ => 1.0,
        };
        let tail = ((full - kept) / full).max(0.0);
        let scale = kept.sqrt().recip();
        for c in &mut coeffs {
            *c *= scale;
        }
        Ok((coeffs, tail))
    }
}

/// Sparse joint state: map from [`PulseTerm`] to complex amplitude.
///
/// Every stored term shares the same readout length. States produced by
/// constructors and protocol steps are normalized; sub-normalized states
/// only appear as explicit projection outputs.
#[derive(Clone, Debug, Default)]
pub struct QuantumState {
    terms: BTreeMap<PulseTerm, Complex64>,
    n_max: u32,
    readout_len: u32,
    discarded_weight: f64,
}

impl QuantumState {
    /// Build a state from (term, amplitude) pairs, accumulating duplicates.
    pub fn from_terms<I>(terms: I, n_max: u32) -> Result<Self>
    where
        I: IntoIterator<Item = (PulseTerm, Complex64)>,
    {
        let mut map = BTreeMap::new();
        let mut readout_len: Option<u32> = None;
        for (term, amp) in terms {
            match readout_len {
                None => readout_len = Some(term.readout().len()),
                Some(len) if len != term.readout().len() => {
                    return Err(Error::ContractViolation(format!(
                        "mixed readout lengths {len} and {} in one state",
                        term.readout().len()
                    )))
                }
                _ => {}
            }
            *map.entry(term).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(QuantumState {
            terms: map,
            n_max,
            readout_len: readout_len.unwrap_or(0),
            discarded_weight: 0.0,
        })
    }

    pub(crate) fn set_discarded_weight(&mut self, w: f64) {
        self.discarded_weight = w;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PulseTerm, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, term: &PulseTerm) -> Complex64 {
        self.terms
            .get(term)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn readout_len(&self) -> u32 {
        self.readout_len
    }

    /// Squared weight lost to truncation and pruning so far.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// ⟨self|other⟩. Fails on mismatched readout lengths.
    pub fn inner_product(&self, other: &QuantumState) -> Result<Complex64> {
        if self.readout_len != other.readout_len {
            return Err(Error::ContractViolation(format!(
                "readout lengths differ: {} vs {}",
                self.readout_len, other.readout_len
            )));
        }
        // Iterate the smaller support; pairing is always bra=self, ket=other.
        let small = if self.len() <= other.len() {
            self
        } else {
            other
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (term, _) in small.terms() {
            acc += self.amplitude(term).conj() * other.amplitude(term);
        }
        Ok(acc)
    }

    /// |⟨target|self⟩|² for normalized states.
    pub fn fidelity(&self, target: &QuantumState) -> Result<f64> {
        Ok(self.inner_product(target)?.norm_sqr())
    }

    /// Drop amplitudes with magnitude below `tol`, recording the removed
    /// weight.
    #[must_use]
    pub fn prune(&self, tol: f64) -> QuantumState {
        let mut out = self.clone();
        let mut removed = 0.0;
        out.terms.retain(|_, amp| {
            if amp.norm() < tol {
                removed += amp.norm_sqr();
                false
            } else {
                true
            }
        });
        out.discarded_weight += removed;
        out
    }

    /// Rescale to unit norm. Zero-norm states are rejected.
    pub fn normalized(&self) -> Result<QuantumState> {
        let n = self.norm();
        if n <= 0.0 {
            return Err(Error::InvalidInput("cannot normalize zero state".into()));
        }
        Ok(self.scaled(n.recip()))
    }

    #[must_use]
    pub(crate) fn scaled(&self, factor: f64) -> QuantumState {
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp *= factor;
        }
        out
    }

    pub(crate) fn map_terms<F>(&self, readout_len: u32, mut f: F) -> Result<QuantumState>
    where
        F: FnMut(&PulseTerm, Complex64) -> Result<Vec<(PulseTerm, Complex64)>>,
    {
        let mut map: BTreeMap<PulseTerm, Complex64> = BTreeMap::new();
        for (term, amp) in self.terms() {
            for (out_term, out_amp) in f(term, *amp)? {
                *map.entry(out_term).or_insert(Complex64::new(0.0, 0.0)) += out_amp;
            }
        }
        Ok(QuantumState {
            terms: map,
            n_max: self.n_max,
            readout_len,
            discarded_weight: self.discarded_weight,
        })
    }

    /// Attach the auxiliary V photon: each all-H term of N photons becomes
    /// the equal superposition of the N+1 possible time orderings, each
    /// with amplitude scaled by 1/√(N+1).
    pub fn expand_with_v(&self) -> Result<QuantumState> {
        self.map_terms(self.readout_len, |term, amp| {
            if term.v_slot().is_some() {
                return Err(Error::ContractViolation(
                    "expand_with_v requires a V-free state".into(),
                ));
            }
            let n = term.n_h();
            let scale = f64::from(n + 1).sqrt().recip();
            (1..=n + 1)
                .map(|slot| {
                    Ok((
                        PulseTerm::new(n, Some(slot), term.atom(), term.readout())?,
                        amp * scale,
                    ))
                })
                .collect()
        })
    }

    /// Photon-number distribution P(N) of a V-free state, marginalized
    /// over atom and readout by incoherent sum and renormalized.
    pub fn photon_number_distribution(&self) -> Result<BTreeMap<u32, f64>> {
        let mut dist: BTreeMap<u32, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (term, amp) in self.terms() {
            if term.v_slot().is_some() {
                return Err(Error::ContractViolation(
                    "photon-number distribution requires a V-free state".into(),
                ));
            }
            let w = amp.norm_sqr();
            *dist.entry(term.n_h()).or_insert(0.0) += w;
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidInput("zero-norm state".into()));
        }
        for p in dist.values_mut() {
            *p /= total;
        }
        Ok(dist)
    }

    /// Line-based text form, one `n_h v_slot atom readout re im` record per
    /// term, in canonical term order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (term, amp) in self.terms() {
            let slot = term
                .v_slot()
                .map_or_else(|| "-".to_string(), |s| s.to_string());
            let readout = if term.readout().is_empty() {
                "-".to_string()
            } else {
                term.readout().to_string()
            };
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                term.n_h(),
                slot,
                term.atom(),
                readout,
                amp.re,
                amp.im
            ));
        }
        out
    }

    /// Parse the [`QuantumState::to_text`] format. The truncation bound is
    /// inferred from the largest photon count present.
    pub fn from_text(text: &str) -> Result<QuantumState> {
        let mut terms = Vec::new();
        let mut n_max = 0u32;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected 6 fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::InvalidInput(format!("line {}: bad {what}", lineno + 1));
            let n_h: u32 = fields[0].parse().map_err(|_| bad("photon count"))?;
            let v_slot = match fields[1] {
                "-" => None,
                s => Some(s.parse::<u32>().map_err(|_| bad("v slot"))?),
            };
            let atom = match fields[2] {
                "gh" => AtomState::GroundH,
                "gv" => AtomState::GroundV,
                _ => return Err(bad("atom state")),
            };
            let readout = Readout::parse(fields[3])?;
            let re: f64 = fields[4].parse().map_err(|_| bad("amplitude"))?;
            let im: f64 = fields[5].parse().map_err(|_| bad("amplitude"))?;
            let term = PulseTerm::new(n_h, v_slot, atom, readout)?;
            n_max = n_max.max(n_h);
            terms.push((term, Complex64::new(re, im)));
        }
        QuantumState::from_terms(terms, n_max)
    }
}

/// Build the protocol input Σ_N C_N |N_h⟩ with the atom in its reinitialized
/// ground state and an empty readout. Coefficients are truncated at the
/// spec's bound and renormalized; the discarded tail weight is recorded on
/// the state.
pub fn make_input(spec: &InputSpec) -> Result<QuantumState> {
    let (coeffs, tail) = spec.coefficients()?;
    let mut state = QuantumState::from_terms(
        coeffs.iter().enumerate().filter_map(|(n, c)| {
            if c.norm_sqr() > 0.0 {
                Some((PulseTerm::all_h(n as u32, AtomState::GroundV), *c))
            } else {
                None
            }
        }),
        spec.n_max(),
    )?;
    state.set_discarded_weight(tail);
    Ok(state)
}
