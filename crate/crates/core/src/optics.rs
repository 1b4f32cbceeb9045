//! Passive linear-optical elements acting on [`StateVector`]s.
//!
//! A two-mode element maps input creation operators onto output creation
//! operators, `in_k† → Σ_j U[j][k] out_j†`. A term with `(m, n)` photons on
//! the inputs is expanded as the monomial `(in1†)^m (in2†)^n / √(m! n!)`,
//! multiplied out with binomial coefficients, and each resulting
//! `(out1†)^p (out2†)^q |0⟩` is read back as `√(p! q!) |p, q⟩`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_unique, Amplitude, ModeId, OccupationVector, StateVector, NORM_TOLERANCE};

/// Which input carries the minus sign on its `out2` coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `in1† → √t out1† − √(1−t) out2†`, `in2† → √(1−t) out1† + √t out2†`.
    In1Minus,
    /// `in1† → √t out1† + √(1−t) out2†`, `in2† → √(1−t) out1† − √t out2†`.
    In2Minus,
}

/// 2×2 single-photon transform, `matrix[out][in]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeTransform {
    pub matrix: [[Complex64; 2]; 2],
}

impl ModeTransform {
    pub fn new(matrix: [[Complex64; 2]; 2]) -> Self {
        ModeTransform { matrix }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        ModeTransform::new([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let dot: Complex64 = (0..2).map(|r| m[r][i].conj() * m[r][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Negates every coefficient of input column `k`.
    pub fn with_input_sign_flipped(mut self, k: usize) -> Self {
        for row in &mut self.matrix {
            row[k] = -row[k];
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterSpec {
    pub in1: ModeId,
    pub in2: ModeId,
    pub out1: ModeId,
    pub out2: ModeId,
    /// Intensity transmittance `in1 → out1` and `in2 → out2`.
    pub transmittance: f64,
    pub convention: SignConvention,
}

impl BeamSplitterSpec {
    pub fn balanced(
        in1: impl Into<ModeId>,
        in2: impl Into<ModeId>,
        out1: impl Into<ModeId>,
        out2: impl Into<ModeId>,
        convention: SignConvention,
    ) -> Self {
        BeamSplitterSpec {
            in1: in1.into(),
            in2: in2.into(),
            out1: out1.into(),
            out2: out2.into(),
            transmittance: 0.5,
            convention,
        }
    }

    pub fn transform(&self) -> Result<ModeTransform> {
        let t = self.transmittance;
        if !(0.0..=1.0).contains(&t) || !t.is_finite() {
            return Err(Error::InvalidTransmittance(t));
        }
        let (tr, rf) = (t.sqrt(), (1.0 - t).sqrt());
        Ok(match self.convention {
            SignConvention::In1Minus => ModeTransform::from_real([[tr, rf], [-rf, tr]]),
            SignConvention::In2Minus => ModeTransform::from_real([[tr, rf], [rf, -tr]]),
        })
    }
}

/// Variable beam splitter fed by one photon-carrying mode and vacuum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbsSpec {
    pub in_mode: ModeId,
    pub reflect_mode: ModeId,
    pub transmit_mode: ModeId,
    /// Intensity routed to `transmit_mode`.
    pub transmittance: f64,
}

pub fn apply_beam_splitter(state: &StateVector, spec: &BeamSplitterSpec) -> Result<StateVector> {
    let u = spec.transform()?;
    apply_mode_transform(state, [&spec.in1, &spec.in2], [&spec.out1, &spec.out2], &u)
}

/// Applies an arbitrary unitary two-mode transform. The outputs take the
/// registry positions of the inputs (`out1` where `in1` was, `out2` where
/// `in2` was).
pub fn apply_mode_transform(
    state: &StateVector,
    inputs: [&ModeId; 2],
    outputs: [&ModeId; 2],
    u: &ModeTransform,
) -> Result<StateVector> {
    let defect = u.unitarity_defect();
    if defect > NORM_TOLERANCE {
        return Err(Error::NonUnitary(defect));
    }
    let i1 = state.mode_index(inputs[0])?;
    let i2 = state.mode_index(inputs[1])?;
    if i1 == i2 {
        return Err(Error::RegistryConflict(inputs[0].clone()));
    }
    let mut new_modes = state.modes().to_vec();
    new_modes[i1] = outputs[0].clone();
    new_modes[i2] = outputs[1].clone();
    check_unique(&new_modes)?;

    let m = &u.matrix;
    let mut acc: BTreeMap<OccupationVector, Amplitude> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let counts = occ.counts();
        let (n1, n2) = (counts[i1], counts[i2]);
        let norm_in = (factorial(n1) * factorial(n2)).sqrt();
        // (m00 o1 + m10 o2)^n1 (m01 o1 + m11 o2)^n2
        for j in 0..=n1 {
            let left = binomial(n1, j) * m[0][0].powu(j) * m[1][0].powu(n1 - j);
            for k in 0..=n2 {
                let right = binomial(n2, k) * m[0][1].powu(k) * m[1][1].powu(n2 - k);
                let p = j + k;
                let q = n1 + n2 - p;
                let coef = left * right * (factorial(p) * factorial(q)).sqrt() / norm_in;
                let mut out = counts.to_vec();
                out[i1] = p;
                out[i2] = q;
                *acc.entry(OccupationVector::new(out)).or_default() += amp * coef;
            }
        }
    }
    Ok(StateVector::from_parts(
        new_modes,
        acc,
        state.cutoff(),
        state.norm_tolerance(),
    ))
}

/// Splits the photon in `in_mode` into `√(1−t)|1,0⟩ + √t|0,1⟩` on
/// `(reflect_mode, transmit_mode)`, which replace `in_mode` in the registry.
pub fn apply_vbs(state: &StateVector, spec: &VbsSpec) -> Result<StateVector> {
    let idx = state.mode_index(&spec.in_mode)?;
    let vacuum_port = ModeId::new(format!("{}#vac", spec.in_mode));
    let padded = state.tensor(&StateVector::vacuum(vec![vacuum_port.clone()])?)?;
    let bs = BeamSplitterSpec {
        in1: spec.in_mode.clone(),
        in2: vacuum_port,
        out1: spec.transmit_mode.clone(),
        out2: spec.reflect_mode.clone(),
        transmittance: spec.transmittance,
        convention: SignConvention::In2Minus,
    };
    let mixed = apply_beam_splitter(&padded, &bs)?;

    let mut order: Vec<ModeId> = state.modes().to_vec();
    order[idx] = spec.reflect_mode.clone();
    order.insert(idx + 1, spec.transmit_mode.clone());
    mixed.reordered(&order)
}

/// Applies `a†` to `mode` with the bosonic `√(n+1)` factor. The result is
/// not renormalized.
pub fn inject_photon(state: &StateVector, mode: &ModeId) -> Result<StateVector> {
    let idx = state.mode_index(mode)?;
    let cutoff = state.cutoff();
    let mut acc = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let mut counts = occ.counts().to_vec();
        let n = counts[idx];
        counts[idx] = n + 1;
        let total: u32 = counts.iter().sum();
        if total > cutoff {
            return Err(Error::CutoffExceeded { total, cutoff });
        }
        acc.insert(OccupationVector::new(counts), amp * ((n + 1) as f64).sqrt());
    }
    Ok(StateVector::from_parts(
        state.modes().to_vec(),
        acc,
        cutoff,
        state.norm_tolerance(),
    ))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    // exact for the photon numbers in play
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
