//! Exhaustive measurement-branch enumeration.
//!
//! Photon-number detection removes the measured modes from the registry.
//! The cross-Kerr QND detector is modelled as a projective measurement of
//! `|n(plus) − n(minus)|`: the probe's `+θ` and `−θ` responses cannot be told
//! apart, so both land in the same class and the photons survive.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Amplitude, ModeId, OccupationVector, StateVector};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// Joint photon counts on the detected modes, in detection order.
    Counts(Vec<(ModeId, u32)>),
    /// QND class `|Δ|`.
    Qnd { delta_abs: u32 },
}

impl Outcome {
    pub fn counts(pairs: &[(&str, u32)]) -> Self {
        Outcome::Counts(pairs.iter().map(|&(m, n)| (ModeId::from(m), n)).collect())
    }

    pub fn count_values(&self) -> Option<Vec<u32>> {
        match self {
            Outcome::Counts(v) => Some(v.iter().map(|(_, n)| *n).collect()),
            Outcome::Qnd { .. } => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Counts(pairs) => {
                for (i, (m, n)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{m}={n}")?;
                }
                Ok(())
            }
            Outcome::Qnd { delta_abs } => write!(f, "qnd:|Δ|={delta_abs}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementBranch {
    pub outcome: Outcome,
    pub probability: f64,
    /// Normalized post-measurement state; `None` when the branch is empty.
    pub post_state: Option<StateVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndSpec {
    /// Each photon here shifts the probe by `+θ`.
    pub mode_plus: ModeId,
    /// Each photon here shifts the probe by `−θ`.
    pub mode_minus: ModeId,
    pub theta: f64,
}

/// Ideal number-resolving detection of `modes`. One branch per joint count
/// pattern that carries amplitude, ordered by count pattern.
pub fn measure_photon_numbers(state: &StateVector, modes: &[ModeId]) -> Result<Vec<MeasurementBranch>> {
    state.require_normalized()?;
    let idx = modes
        .iter()
        .map(|m| state.mode_index(m))
        .collect::<Result<Vec<_>>>()?;
    let survivors: Vec<usize> = (0..state.modes().len()).filter(|i| !idx.contains(i)).collect();
    let kept_modes: Vec<ModeId> = survivors.iter().map(|&i| state.modes()[i].clone()).collect();

    let mut groups: BTreeMap<Vec<u32>, BTreeMap<OccupationVector, Amplitude>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let c = occ.counts();
        let key: Vec<u32> = idx.iter().map(|&i| c[i]).collect();
        let rest = OccupationVector::new(survivors.iter().map(|&i| c[i]).collect());
        *groups.entry(key).or_default().entry(rest).or_default() += amp;
    }

    groups
        .into_iter()
        .map(|(key, terms)| {
            let outcome = Outcome::Counts(modes.iter().cloned().zip(key).collect());
            let projected =
                StateVector::from_parts(kept_modes.clone(), terms, state.cutoff(), state.norm_tolerance());
            branch(outcome, projected)
        })
        .collect()
}

/// Non-demolition measurement of `|n(plus) − n(minus)|`, ascending by class.
pub fn qnd_measure(state: &StateVector, spec: &QndSpec) -> Result<Vec<MeasurementBranch>> {
    state.require_normalized()?;
    let ip = state.mode_index(&spec.mode_plus)?;
    let im = state.mode_index(&spec.mode_minus)?;
    if ip == im {
        return Err(Error::RegistryConflict(spec.mode_plus.clone()));
    }
    let mut groups: BTreeMap<u32, BTreeMap<OccupationVector, Amplitude>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let c = occ.counts();
        groups
            .entry(c[ip].abs_diff(c[im]))
            .or_default()
            .insert(occ.clone(), *amp);
    }
    groups
        .into_iter()
        .map(|(delta_abs, terms)| branch(Outcome::Qnd { delta_abs }, state.with_terms(terms)))
        .collect()
}

/// Picks the branch with `outcome`; missing or empty branches are errors.
pub fn postselect(branches: &[MeasurementBranch], outcome: &Outcome) -> Result<MeasurementBranch> {
    let b = branches
        .iter()
        .find(|b| &b.outcome == outcome)
        .ok_or_else(|| Error::BranchNotFound(outcome.to_string()))?;
    if b.post_state.is_none() || b.probability <= 0.0 {
        return Err(Error::ZeroProbabilityBranch(outcome.to_string()));
    }
    Ok(b.clone())
}

fn branch(outcome: Outcome, projected: StateVector) -> Result<MeasurementBranch> {
    let probability = projected.norm_check();
    let post_state = if probability > 0.0 {
        Some(projected.normalized()?)
    } else {
        None
    };
    Ok(MeasurementBranch {
        outcome,
        probability,
        post_state,
    })
}
