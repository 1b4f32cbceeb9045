//! Sparse superpositions of multi-mode photon-number states.
//!
//! A [`StateVector`] keeps an ordered mode registry and a sparse map from
//! [`OccupationVector`] to complex amplitude. Every operation returns a new
//! value; nothing is mutated in place once a state has been built.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Terms whose amplitude magnitude falls below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;
pub const NORM_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_CUTOFF: u32 = 4;

/// Label of a spatial optical mode, e.g. `a1`, `c2`, `d1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(String);

impl ModeId {
    pub fn new(label: impl Into<String>) -> Self {
        ModeId(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ModeId {
    fn from(s: &str) -> Self {
        ModeId(s.to_owned())
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Builds a mode list from string labels.
pub fn modes(labels: &[&str]) -> Vec<ModeId> {
    labels.iter().map(|&l| ModeId::from(l)).collect()
}

/// Photon counts, one entry per registered mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(Vec<u32>);

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        OccupationVector(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for OccupationVector {
    fn from(v: Vec<u32>) -> Self {
        OccupationVector(v)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("⟩")
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    modes: Vec<ModeId>,
    terms: BTreeMap<OccupationVector, Amplitude>,
    cutoff: u32,
    norm_tolerance: f64,
}

impl StateVector {
    /// The zero vector over `modes` (no terms at all).
    pub fn zero(modes: Vec<ModeId>) -> Result<Self> {
        check_unique(&modes)?;
        Ok(StateVector {
            modes,
            terms: BTreeMap::new(),
            cutoff: DEFAULT_CUTOFF,
            norm_tolerance: NORM_TOLERANCE,
        })
    }

    /// All modes empty.
    pub fn vacuum(modes: Vec<ModeId>) -> Result<Self> {
        let n = modes.len();
        Self::basis(modes, vec![0; n])
    }

    pub fn basis(modes: Vec<ModeId>, counts: Vec<u32>) -> Result<Self> {
        Self::from_terms(modes, [(counts, Amplitude::new(1.0, 0.0))])
    }

    /// Builds a state from `(counts, amplitude)` pairs. Repeated occupation
    /// vectors are summed.
    pub fn from_terms<I, C>(modes: Vec<ModeId>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, Amplitude)>,
        C: Into<Vec<u32>>,
    {
        Self::from_terms_with_cutoff(modes, terms, DEFAULT_CUTOFF)
    }

    pub fn from_terms_with_cutoff<I, C>(modes: Vec<ModeId>, terms: I, cutoff: u32) -> Result<Self>
    where
        I: IntoIterator<Item = (C, Amplitude)>,
        C: Into<Vec<u32>>,
    {
        let mut state = Self::zero(modes)?;
        state.cutoff = cutoff;
        let mut acc = BTreeMap::new();
        for (counts, amp) in terms {
            let occ = OccupationVector(counts.into());
            state.check_occupation(&occ)?;
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            *acc.entry(occ).or_insert(Amplitude::new(0.0, 0.0)) += amp;
        }
        state.terms = prune(acc);
        Ok(state)
    }

    /// Same registry and cutoff, new terms. Terms are assumed valid.
    pub(crate) fn with_terms(&self, terms: BTreeMap<OccupationVector, Amplitude>) -> Self {
        StateVector {
            modes: self.modes.clone(),
            terms: prune(terms),
            cutoff: self.cutoff,
            norm_tolerance: self.norm_tolerance,
        }
    }

    pub(crate) fn from_parts(
        modes: Vec<ModeId>,
        terms: BTreeMap<OccupationVector, Amplitude>,
        cutoff: u32,
        norm_tolerance: f64,
    ) -> Self {
        StateVector {
            modes,
            terms: prune(terms),
            cutoff,
            norm_tolerance,
        }
    }

    pub fn with_cutoff(mut self, cutoff: u32) -> Result<Self> {
        if let Some(total) = self.max_photons().filter(|&t| t > cutoff) {
            return Err(Error::CutoffExceeded { total, cutoff });
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OccupationVector, &Amplitude)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, counts: &[u32]) -> Amplitude {
        self.terms
            .get(&OccupationVector(counts.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn mode_index(&self, mode: &ModeId) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == mode)
            .ok_or_else(|| Error::UnknownMode(mode.clone()))
    }

    pub fn max_photons(&self) -> Option<u32> {
        self.terms.keys().map(OccupationVector::total).max()
    }

    /// Σ|amplitude|².
    pub fn norm_check(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_check() - 1.0).abs() <= self.norm_tolerance
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm_check()))
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_check();
        if n <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(self.scaled(Amplitude::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        self.with_terms(self.terms.iter().map(|(k, a)| (k.clone(), a * factor)).collect())
    }

    /// `a·self + b·other`; registries must agree as sets.
    pub fn superpose(&self, a: Amplitude, other: &StateVector, b: Amplitude) -> Result<Self> {
        let other = other.reordered(&self.modes)?;
        let mut acc: BTreeMap<_, _> = self.terms.iter().map(|(k, v)| (k.clone(), v * a)).collect();
        for (k, v) in &other.terms {
            *acc.entry(k.clone()).or_insert(Amplitude::new(0.0, 0.0)) += v * b;
        }
        let mut out = self.with_terms(acc);
        out.cutoff = self.cutoff.max(other.cutoff);
        Ok(out)
    }

    /// Tensor product over the union of both registries, `self` modes first.
    pub fn tensor(&self, right: &StateVector) -> Result<Self> {
        if let Some(m) = right.modes.iter().find(|m| self.modes.contains(m)) {
            return Err(Error::RegistryConflict(m.clone()));
        }
        let cutoff = self.cutoff.max(right.cutoff);
        let mut acc = BTreeMap::new();
        for (lk, la) in &self.terms {
            for (rk, ra) in &right.terms {
                let mut counts = lk.0.clone();
                counts.extend_from_slice(&rk.0);
                let occ = OccupationVector(counts);
                let total = occ.total();
                if total > cutoff {
                    return Err(Error::CutoffExceeded { total, cutoff });
                }
                acc.insert(occ, la * ra);
            }
        }
        let mut modes = self.modes.clone();
        modes.extend(right.modes.iter().cloned());
        Ok(StateVector::from_parts(modes, acc, cutoff, self.norm_tolerance))
    }

    /// Multiplies each term by `exp(i·phase·n_mode)`.
    pub fn apply_mode_phase(&self, mode: &ModeId, phase: f64) -> Result<Self> {
        let idx = self.mode_index(mode)?;
        Ok(self.with_terms(
            self.terms
                .iter()
                .map(|(k, a)| {
                    let n = k.0[idx] as f64;
                    (k.clone(), a * Amplitude::from_polar(1.0, phase * n))
                })
                .collect(),
        ))
    }

    /// Returns the same state with the registry permuted into `order`.
    pub fn reordered(&self, order: &[ModeId]) -> Result<Self> {
        if order.len() != self.modes.len() {
            return Err(Error::RegistryMismatch {
                left: self.modes.clone(),
                right: order.to_vec(),
            });
        }
        let perm = order
            .iter()
            .map(|m| {
                self.modes.iter().position(|x| x == m).ok_or_else(|| Error::RegistryMismatch {
                    left: self.modes.clone(),
                    right: order.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_unique(order)?;
        let terms = self
            .terms
            .iter()
            .map(|(k, a)| (OccupationVector(perm.iter().map(|&p| k.0[p]).collect()), *a))
            .collect();
        Ok(StateVector::from_parts(order.to_vec(), terms, self.cutoff, self.norm_tolerance))
    }

    /// ⟨self|other⟩ with `other` canonicalized into this registry order.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude> {
        let other = other.reordered(&self.modes)?;
        Ok(self
            .terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum())
    }

    /// |⟨target|self⟩|². Both states must be normalized.
    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        self.require_normalized()?;
        target.require_normalized()?;
        Ok(target.inner(self)?.norm_sqr().clamp(0.0, 1.0))
    }

    /// Term-by-term comparison after canonicalizing mode order.
    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        let Ok(other) = other.reordered(&self.modes) else {
            return false;
        };
        let keys = self.terms.keys().chain(other.terms.keys());
        for k in keys {
            let a = self.terms.get(k).copied().unwrap_or_default();
            let b = other.terms.get(k).copied().unwrap_or_default();
            if (a - b).norm() > tol {
                return false;
            }
        }
        true
    }

    fn check_occupation(&self, occ: &OccupationVector) -> Result<()> {
        if occ.len() != self.modes.len() {
            return Err(Error::LengthMismatch {
                expected: self.modes.len(),
                got: occ.len(),
            });
        }
        let total = occ.total();
        if total > self.cutoff {
            return Err(Error::CutoffExceeded {
                total,
                cutoff: self.cutoff,
            });
        }
        Ok(())
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", a.re, a.im, k)?;
        }
        let labels: Vec<&str> = self.modes.iter().map(ModeId::as_str).collect();
        write!(f, "_{{{}}}", labels.join(","))
    }
}

pub(crate) fn check_unique(modes: &[ModeId]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::RegistryConflict(m.clone()));
        }
    }
    Ok(())
}

fn prune(terms: BTreeMap<OccupationVector, Amplitude>) -> BTreeMap<OccupationVector, Amplitude> {
    terms
        .into_iter()
        .filter(|(_, a)| a.norm() >= PRUNE_THRESHOLD)
        .collect()
}
