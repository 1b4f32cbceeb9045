//! Single-photon entanglement concentration.
//!
//! Two drivers share the same front end: Bob splits an auxiliary photon on
//! a variable beam splitter into `(c1, c2)` and joins it with the shared
//! pair on `(a1, b1)`.
//!
//! * [`run_ecp1`] mixes `b1` and `c1` on a 50:50 splitter and keeps the
//!   single-click detections on `(d1, d2)`.
//! * [`run_ecp2`] first sorts the pair with a QND measurement of
//!   `|n(b1) − n(c1)|`. The `|Δ| = 1` class is finished on BS₁ exactly as
//!   above. The `|Δ| = 0` class goes through BS₂ on `(c1, c2)` and leaves a
//!   new, less balanced pair on `(a1, b1)` that seeds the next round.
//!
//! Minus-sign detections are always phase corrected with a π shift: on `c2`
//! for success branches, on `b1` for recycled pairs.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{modes, Amplitude, ModeId, StateVector};
use crate::measurement::{measure_photon_numbers, postselect, qnd_measure, MeasurementBranch, Outcome, QndSpec};
use crate::optics::{
    apply_mode_transform, apply_vbs, inject_photon, BeamSplitterSpec, SignConvention, VbsSpec,
};

pub const DEFAULT_ROUNDS: u32 = 10;
/// Largest supported round count; `2^(N-1)` must stay finite in the
/// log-space schedule.
pub const MAX_ROUNDS: u32 = 512;

const SUCCESS_FLIP_MODE: &str = "c2";
const RECYCLE_FLIP_MODE: &str = "b1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// |α|² of the shared pair `α|1,0⟩ + β|0,1⟩`.
    pub alpha_sq: f64,
    /// Fixed VBS transmittance for every round instead of the schedule.
    pub transmittance_override: Option<f64>,
    pub rounds: u32,
    /// Probe phase per photon. Carried for reporting only.
    pub theta: f64,
}

impl ProtocolParams {
    pub fn new(alpha_sq: f64, rounds: u32) -> Result<Self> {
        let p = ProtocolParams {
            alpha_sq,
            transmittance_override: None,
            rounds,
            theta: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_transmittance(mut self, t: f64) -> Result<Self> {
        self.transmittance_override = Some(t);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_sq(self.alpha_sq)?;
        if self.rounds == 0 || self.rounds > MAX_ROUNDS {
            return Err(Error::Domain(format!(
                "rounds must be in 1..={MAX_ROUNDS}, got {}",
                self.rounds
            )));
        }
        if let Some(t) = self.transmittance_override {
            check_transmittance(t)?;
        }
        if !self.theta.is_finite() {
            return Err(Error::Domain("theta must be finite".into()));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_sq.sqrt()
    }

    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha_sq).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Ecp1,
    Ecp2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchCategory {
    /// Single click, maximally entangled output after correction.
    Success,
    /// QND `|Δ| = 0` class continuing into the next round.
    Recycle,
    /// No photon reached the detectors.
    NoClick,
    /// Both photons in one detector.
    TwoPhoton,
    /// One photon in each detector (suppressed by two-photon interference).
    Coincidence,
    Other,
}

/// One terminal detection pattern of a round. Probabilities are conditional
/// on entering the round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub outcome: String,
    pub counts: Vec<u32>,
    pub probability: f64,
    pub category: BranchCategory,
    pub phase_corrected: bool,
    /// Fidelity with `(|1,0⟩ + |0,1⟩)/√2`, success branches only.
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round_index: u32,
    pub t_used: f64,
    pub success_prob_conditional: f64,
    pub success_prob_unconditional: f64,
    pub recycle_prob_unconditional: f64,
    pub failure_prob_unconditional: f64,
    /// Probability-weighted fidelity of the corrected success branches.
    pub output_fidelity: Option<f64>,
    pub recycle_coefficients: Option<(f64, f64)>,
    pub branches: Vec<BranchRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseFlipModes {
    pub success: ModeId,
    pub recycle: Option<ModeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub protocol: ProtocolKind,
    pub params: ProtocolParams,
    pub rounds: Vec<RoundOutcome>,
    pub p_total: f64,
    /// Closed-form success probability per round.
    pub analytic_p: Vec<f64>,
    /// The general `P_N` line evaluated as printed (last factor squared).
    pub analytic_p_literal: Vec<f64>,
    pub discrepancy_max: f64,
    pub phase_flip_modes: PhaseFlipModes,
}

/// Everything a single ECP2 round produces, conditional on entering it.
#[derive(Clone, Debug)]
pub struct RoundResult {
    pub t_used: f64,
    pub success_probability: f64,
    pub recycle_probability: f64,
    pub failure_probability: f64,
    pub output_fidelity: Option<f64>,
    pub recycle_coefficients: Option<(f64, f64)>,
    pub branches: Vec<BranchRecord>,
    /// Corrected `(a1, c2)` states of the success detections.
    pub success_states: Vec<(Outcome, StateVector)>,
    /// Corrected `(a1, b1)` states of the recycle detections.
    pub recycle_states: Vec<(Outcome, StateVector)>,
}

/// Deliberate defects for exercising the certifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Negates the `b1` column of the first splitter and of BS₁.
    FlippedSplitterSign,
}

/// Protocol driver. `Engine::default()` is the faithful setup.
#[derive(Clone, Copy, Debug, Default)]
pub struct Engine {
    fault: Option<Fault>,
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn with_fault(fault: Fault) -> Self {
        Engine { fault: Some(fault) }
    }

    pub fn run_ecp1(&self, params: &ProtocolParams) -> Result<ConcentrationReport> {
        params.validate()?;
        let t = params
            .transmittance_override
            .unwrap_or(optimal_transmittance(params.alpha_sq, 1)?);
        let joint = initial_state(params)?.tensor(&auxiliary_pair(t)?)?;

        // b1† → (d1† − d2†)/√2, c1† → (d1† + d2†)/√2
        let splitter = BeamSplitterSpec::balanced("b1", "c1", "d1", "d2", SignConvention::In1Minus);
        let mixed = self.mix(&joint, &splitter)?;
        let branches = measure_photon_numbers(&mixed, &modes(&["d1", "d2"]))?;
        let (records, _) = finish_success_detections(&branches)?;

        let success_p = sum_category(&records, BranchCategory::Success);
        let failure_p: f64 = records
            .iter()
            .filter(|r| r.category != BranchCategory::Success)
            .map(|r| r.probability)
            .fold(0.0, |acc, p| acc + p);
        let round = RoundOutcome {
            round_index: 1,
            t_used: t,
            success_prob_conditional: success_p,
            success_prob_unconditional: success_p,
            recycle_prob_unconditional: 0.0,
            failure_prob_unconditional: failure_p,
            output_fidelity: weighted_fidelity(&records),
            recycle_coefficients: None,
            branches: records,
        };

        let (a2, b2) = (params.alpha_sq, 1.0 - params.alpha_sq);
        let analytic = a2 * (1.0 - t) + b2 * t;
        Ok(ConcentrationReport {
            protocol: ProtocolKind::Ecp1,
            params: params.clone(),
            p_total: success_p,
            discrepancy_max: (success_p - analytic).abs(),
            analytic_p: vec![analytic],
            analytic_p_literal: Vec::new(),
            rounds: vec![round],
            phase_flip_modes: PhaseFlipModes {
                success: SUCCESS_FLIP_MODE.into(),
                recycle: None,
            },
        })
    }

    /// One QND round on the normalized pair `coeffs.0|1,0⟩ + coeffs.1|0,1⟩`.
    pub fn run_ecp2_round(&self, coeffs: (f64, f64), t: f64, theta: f64) -> Result<RoundResult> {
        check_transmittance(t)?;
        let norm = coeffs.0 * coeffs.0 + coeffs.1 * coeffs.1;
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        let pair = StateVector::from_terms(
            modes(&["a1", "b1"]),
            [
                (vec![1, 0], Amplitude::new(coeffs.0, 0.0)),
                (vec![0, 1], Amplitude::new(coeffs.1, 0.0)),
            ],
        )?;
        let joint = pair.tensor(&auxiliary_pair(t)?)?;
        let qnd = QndSpec {
            mode_plus: "b1".into(),
            mode_minus: "c1".into(),
            theta,
        };
        let classes = qnd_measure(&joint, &qnd)?;

        let mut records = Vec::new();
        let mut success_states = Vec::new();
        let mut recycle_states = Vec::new();
        for class in &classes {
            let Some(state) = class.post_state.as_ref() else {
                continue;
            };
            match class.outcome {
                Outcome::Qnd { delta_abs: 1 } => {
                    // BS₁: c1† → (d1† − d2†)/√2, b1† → (d1† + d2†)/√2
                    let bs1 = BeamSplitterSpec::balanced("c1", "b1", "d1", "d2", SignConvention::In1Minus);
                    let mixed = self.mix(state, &bs1)?;
                    let detections = measure_photon_numbers(&mixed, &modes(&["d1", "d2"]))?;
                    let (mut recs, states) = finish_success_detections(&detections)?;
                    scale_records(&mut recs, class.probability, "qnd:|Δ|=1");
                    records.extend(recs);
                    success_states.extend(states);
                }
                Outcome::Qnd { delta_abs: 0 } => {
                    // BS₂: c1† → (e1† − e2†)/√2, c2† → (e1† + e2†)/√2
                    let bs2 = BeamSplitterSpec::balanced("c1", "c2", "e1", "e2", SignConvention::In1Minus);
                    let mixed = self.mix(state, &bs2)?;
                    let detections = measure_photon_numbers(&mixed, &modes(&["e1", "e2"]))?;
                    let (mut recs, states) = finish_recycle_detections(&detections)?;
                    scale_records(&mut recs, class.probability, "qnd:|Δ|=0");
                    records.extend(recs);
                    recycle_states.extend(states);
                }
                _ => records.push(BranchRecord {
                    outcome: class.outcome.to_string(),
                    counts: Vec::new(),
                    probability: class.probability,
                    category: BranchCategory::Other,
                    phase_corrected: false,
                    fidelity: None,
                }),
            }
        }

        let success_probability = sum_category(&records, BranchCategory::Success);
        let recycle_probability = sum_category(&records, BranchCategory::Recycle);
        let failure_probability = records
            .iter()
            .filter(|r| !matches!(r.category, BranchCategory::Success | BranchCategory::Recycle))
            .map(|r| r.probability)
            .fold(0.0, |acc, p| acc + p);
        let recycle_coefficients = recycle_states.first().map(|(_, s)| real_coefficients(s));
        Ok(RoundResult {
            t_used: t,
            success_probability,
            recycle_probability,
            failure_probability,
            output_fidelity: weighted_fidelity(&records),
            recycle_coefficients,
            branches: records,
            success_states,
            recycle_states,
        })
    }

    pub fn run_ecp2(&self, params: &ProtocolParams) -> Result<ConcentrationReport> {
        params.validate()?;
        let mut coeffs = (params.alpha(), params.beta());
        let mut mass = 1.0;
        let mut rounds = Vec::with_capacity(params.rounds as usize);
        for k in 1..=params.rounds {
            let t = match params.transmittance_override {
                Some(t) => t,
                None => optimal_transmittance(params.alpha_sq, k)?,
            };
            if mass == 0.0 {
                rounds.push(RoundOutcome {
                    round_index: k,
                    t_used: t,
                    success_prob_conditional: 0.0,
                    success_prob_unconditional: 0.0,
                    recycle_prob_unconditional: 0.0,
                    failure_prob_unconditional: 0.0,
                    output_fidelity: None,
                    recycle_coefficients: None,
                    branches: Vec::new(),
                });
                continue;
            }
            let r = self.run_ecp2_round(coeffs, t, params.theta)?;
            rounds.push(RoundOutcome {
                round_index: k,
                t_used: t,
                success_prob_conditional: r.success_probability,
                success_prob_unconditional: mass * r.success_probability,
                recycle_prob_unconditional: mass * r.recycle_probability,
                failure_prob_unconditional: mass * r.failure_probability,
                output_fidelity: r.output_fidelity,
                recycle_coefficients: r.recycle_coefficients,
                branches: r.branches,
            });
            mass *= r.recycle_probability;
            match r.recycle_coefficients {
                Some(c) => coeffs = c,
                None => mass = 0.0,
            }
        }

        let p_total = rounds.iter().map(|r| r.success_prob_unconditional).sum();
        let analytic_p = (1..=params.rounds)
            .map(|n| analytic_round_probability(params.alpha_sq, n))
            .collect::<Result<Vec<_>>>()?;
        let analytic_p_literal = (1..=params.rounds)
            .map(|n| literal_round_probability(params.alpha_sq, n))
            .collect::<Result<Vec<_>>>()?;
        let discrepancy_max = rounds
            .iter()
            .zip(&analytic_p)
            .map(|(r, p)| (r.success_prob_unconditional - p).abs())
            .fold(0.0, f64::max);
        Ok(ConcentrationReport {
            protocol: ProtocolKind::Ecp2,
            params: params.clone(),
            rounds,
            p_total,
            analytic_p,
            analytic_p_literal,
            discrepancy_max,
            phase_flip_modes: PhaseFlipModes {
                success: SUCCESS_FLIP_MODE.into(),
                recycle: Some(RECYCLE_FLIP_MODE.into()),
            },
        })
    }

    fn mix(&self, state: &StateVector, spec: &BeamSplitterSpec) -> Result<StateVector> {
        let mut u = spec.transform()?;
        if self.fault == Some(Fault::FlippedSplitterSign) {
            let col = if spec.in1.as_str() == "b1" { 0 } else { 1 };
            if spec.in1.as_str() == "b1" || spec.in2.as_str() == "b1" {
                u = u.with_input_sign_flipped(col);
            }
        }
        apply_mode_transform(state, [&spec.in1, &spec.in2], [&spec.out1, &spec.out2], &u)
    }
}

pub fn run_ecp1(params: &ProtocolParams) -> Result<ConcentrationReport> {
    Engine::default().run_ecp1(params)
}

pub fn run_ecp2_round(coeffs: (f64, f64), t: f64, theta: f64) -> Result<RoundResult> {
    Engine::default().run_ecp2_round(coeffs, t, theta)
}

pub fn run_ecp2(params: &ProtocolParams) -> Result<ConcentrationReport> {
    Engine::default().run_ecp2(params)
}

/// `√α²|1,0⟩ + √(1−α²)|0,1⟩` on `(a1, b1)`.
pub fn initial_state(params: &ProtocolParams) -> Result<StateVector> {
    check_alpha_sq(params.alpha_sq)?;
    StateVector::from_terms(
        modes(&["a1", "b1"]),
        [
            (vec![1, 0], Amplitude::new(params.alpha(), 0.0)),
            (vec![0, 1], Amplitude::new(params.beta(), 0.0)),
        ],
    )
}

/// `(|1,0⟩ + |0,1⟩)/√2` on `(a1, c2)`.
pub fn maximal_state() -> StateVector {
    StateVector::from_terms(
        modes(&["a1", "c2"]),
        [
            (vec![1, 0], Amplitude::new(FRAC_1_SQRT_2, 0.0)),
            (vec![0, 1], Amplitude::new(FRAC_1_SQRT_2, 0.0)),
        ],
    )
    .expect("static state")
}

/// `t_N = α^{2^N} / (α^{2^N} + β^{2^N})`, evaluated as a logistic function
/// of `2^{N−1}·ln(α²/β²)` so that large `N` saturates instead of
/// underflowing.
pub fn optimal_transmittance(alpha_sq: f64, round_n: u32) -> Result<f64> {
    check_alpha_sq(alpha_sq)?;
    check_round(round_n)?;
    if round_n == 1 {
        return Ok(alpha_sq);
    }
    let x = 2f64.powi(round_n as i32 - 1) * (alpha_sq.ln() - (1.0 - alpha_sq).ln());
    Ok(logistic(x))
}

/// `P_n = 2(αβ)^{2^n} / Π_{k=2..n}(α^{2^k} + β^{2^k})`, evaluated in log space.
pub fn analytic_round_probability(alpha_sq: f64, n: u32) -> Result<f64> {
    check_alpha_sq(alpha_sq)?;
    check_round(n)?;
    let (la, lb) = (alpha_sq.ln(), (1.0 - alpha_sq).ln());
    let numerator = 2f64.ln() + 2f64.powi(n as i32 - 1) * (la + lb);
    let denominator: f64 = (2..=n).map(|k| log_power_sum(la, lb, k)).sum();
    Ok((numerator - denominator).exp())
}

/// The general `P_N` expression exactly as printed, whose final factor is
/// squared. Kept so reports can show how far it is from the simulation.
pub fn literal_round_probability(alpha_sq: f64, n: u32) -> Result<f64> {
    check_alpha_sq(alpha_sq)?;
    check_round(n)?;
    let (la, lb) = (alpha_sq.ln(), (1.0 - alpha_sq).ln());
    let numerator = 2f64.ln() + 2f64.powi(n as i32 - 1) * (la + lb);
    let middle: f64 = (2..n).map(|k| log_power_sum(la, lb, k)).sum();
    let last = 2.0 * log_power_sum(la, lb, n);
    Ok((numerator - middle - last).exp())
}

/// `ln(α^{2^k} + β^{2^k})` given `ln α²`, `ln β²`.
fn log_power_sum(la: f64, lb: f64, k: u32) -> f64 {
    let s = 2f64.powi(k as i32 - 1);
    let (x, y) = (s * la, s * lb);
    let hi = x.max(y);
    hi + (x.min(y) - hi).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_alpha_sq(alpha_sq: f64) -> Result<()> {
    if alpha_sq > 0.0 && alpha_sq < 1.0 {
        Ok(())
    } else {
        Err(Error::DegenerateInput(alpha_sq))
    }
}

fn check_round(n: u32) -> Result<()> {
    if n == 0 || n > MAX_ROUNDS {
        return Err(Error::Domain(format!("round index must be in 1..={MAX_ROUNDS}, got {n}")));
    }
    Ok(())
}

fn check_transmittance(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidTransmittance(t))
    }
}

/// Bob's auxiliary photon after the VBS, on `(c1, c2)`.
fn auxiliary_pair(t: f64) -> Result<StateVector> {
    let b2 = ModeId::from("b2");
    let photon = inject_photon(&StateVector::vacuum(vec![b2.clone()])?, &b2)?;
    apply_vbs(
        &photon,
        &VbsSpec {
            in_mode: b2,
            reflect_mode: "c1".into(),
            transmit_mode: "c2".into(),
            transmittance: t,
        },
    )
}

type Detections = (Vec<BranchRecord>, Vec<(Outcome, StateVector)>);

/// Classifies `(d1, d2)` detections, correcting the `d2` click on `c2`.
fn finish_success_detections(branches: &[MeasurementBranch]) -> Result<Detections> {
    let target = maximal_state();
    let mut records = Vec::with_capacity(branches.len());
    let mut states = Vec::new();
    for b in branches {
        let counts = b.outcome.count_values().unwrap_or_default();
        let category = match counts.as_slice() {
            [1, 0] | [0, 1] => BranchCategory::Success,
            [0, 0] => BranchCategory::NoClick,
            [2, 0] | [0, 2] => BranchCategory::TwoPhoton,
            [1, 1] => BranchCategory::Coincidence,
            _ => BranchCategory::Other,
        };
        let mut record = BranchRecord {
            outcome: b.outcome.to_string(),
            counts: counts.clone(),
            probability: b.probability,
            category,
            phase_corrected: false,
            fidelity: None,
        };
        if category == BranchCategory::Success {
            let selected = postselect(branches, &b.outcome)?;
            let mut state = selected.post_state.expect("non-empty branch");
            if counts == [0, 1] {
                state = state.apply_mode_phase(&SUCCESS_FLIP_MODE.into(), PI)?;
                record.phase_corrected = true;
            }
            record.fidelity = Some(state.fidelity(&target)?);
            states.push((b.outcome.clone(), state));
        }
        records.push(record);
    }
    Ok((records, states))
}

/// Classifies `(e1, e2)` detections, correcting the `e2` click on `b1`.
fn finish_recycle_detections(branches: &[MeasurementBranch]) -> Result<Detections> {
    let mut records = Vec::with_capacity(branches.len());
    let mut states = Vec::new();
    for b in branches {
        let counts = b.outcome.count_values().unwrap_or_default();
        let single = matches!(counts.as_slice(), [1, 0] | [0, 1]);
        let mut record = BranchRecord {
            outcome: b.outcome.to_string(),
            counts: counts.clone(),
            probability: b.probability,
            category: if single {
                BranchCategory::Recycle
            } else {
                BranchCategory::Other
            },
            phase_corrected: false,
            fidelity: None,
        };
        if single {
            let selected = postselect(branches, &b.outcome)?;
            let mut state = selected.post_state.expect("non-empty branch");
            if counts == [0, 1] {
                state = state.apply_mode_phase(&RECYCLE_FLIP_MODE.into(), PI)?;
                record.phase_corrected = true;
            }
            states.push((b.outcome.clone(), state));
        }
        records.push(record);
    }
    Ok((records, states))
}

fn scale_records(records: &mut [BranchRecord], p: f64, prefix: &str) {
    for r in records {
        r.probability *= p;
        r.outcome = format!("{prefix};{}", r.outcome);
    }
}

fn sum_category(records: &[BranchRecord], cat: BranchCategory) -> f64 {
    records
        .iter()
        .filter(|r| r.category == cat)
        .map(|r| r.probability)
        .fold(0.0, |acc, p| acc + p)
}

fn weighted_fidelity(records: &[BranchRecord]) -> Option<f64> {
    let (mut w, mut acc) = (0.0, 0.0);
    for r in records {
        if let Some(f) = r.fidelity {
            w += r.probability;
            acc += r.probability * f;
        }
    }
    (w > 0.0).then(|| acc / w)
}

/// Real, normalized `(a, b)` of `a|1,0⟩ + b|0,1⟩` after removing the global
/// phase.
fn real_coefficients(state: &StateVector) -> (f64, f64) {
    let a = state.amplitude(&[1, 0]);
    let b = state.amplitude(&[0, 1]);
    let reference = if a.norm() > 0.0 { a } else { b };
    let phase = reference / reference.norm();
    let (x, y) = ((a / phase).re, (b / phase).re);
    let n = x.hypot(y);
    (x / n, y / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_examples() {
        let h = FRAC_1_SQRT_2;
        let s = initial_state(&ProtocolParams::new(0.5, 1).unwrap()).unwrap();
        assert!((s.amplitude(&[1, 0]).re - h).abs() < 1e-15);
        assert!((s.amplitude(&[0, 1]).re - h).abs() < 1e-15);
        let s = initial_state(&ProtocolParams::new(0.8, 1).unwrap()).unwrap();
        assert!((s.amplitude(&[1, 0]).re - 0.8f64.sqrt()).abs() < 1e-15);
        assert!((s.amplitude(&[0, 1]).re - 0.2f64.sqrt()).abs() < 1e-15);
        assert!((s.norm_check() - 1.0).abs() < 1e-12);
        assert_eq!(ProtocolParams::new(0.0, 1).unwrap_err(), Error::DegenerateInput(0.0));
        assert_eq!(ProtocolParams::new(1.0, 1).unwrap_err(), Error::DegenerateInput(1.0));
    }

    #[test]
    fn transmittance_schedule() {
        assert_eq!(optimal_transmittance(0.8, 1).unwrap(), 0.8);
        assert!((optimal_transmittance(0.8, 2).unwrap() - 0.9411764705882353).abs() < 1e-15);
        for n in 1..=30 {
            assert_eq!(optimal_transmittance(0.5, n).unwrap(), 0.5);
        }
        // direct evaluation for small N agrees with the log-space route
        for &a2 in &[0.1, 0.3, 0.65, 0.9] {
            for n in 1..=6u32 {
                let e = 2i32.pow(n - 1);
                let (x, y) = (f64::powi(a2, e), f64::powi(1.0 - a2, e));
                assert!((optimal_transmittance(a2, n).unwrap() - x / (x + y)).abs() < 1e-14);
            }
        }
        // saturates without NaN
        let t = optimal_transmittance(0.9, 200).unwrap();
        assert!(t.is_finite() && t <= 1.0 && t > 0.999);
        assert!(optimal_transmittance(0.8, 0).is_err());
        assert!(optimal_transmittance(1.2, 1).is_err());
    }

    #[test]
    fn analytic_probability_examples() {
        assert!((analytic_round_probability(0.8, 1).unwrap() - 0.32).abs() < 1e-15);
        assert!((analytic_round_probability(0.8, 2).unwrap() - 0.0512 / 0.68).abs() < 1e-15);
        let p3 = 2.0 * 0.16f64.powi(4) / (0.68 * 0.4112);
        assert!((analytic_round_probability(0.8, 3).unwrap() - p3).abs() < 1e-15);
        for n in 1..=12 {
            let p = analytic_round_probability(0.5, n).unwrap();
            assert!((p - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn literal_formula_differs_after_first_round() {
        assert!((literal_round_probability(0.8, 1).unwrap() - 0.32).abs() < 1e-15);
        // 2(αβ)^4 / (α^4+β^4)^2
        let lit = 0.0512 / (0.68 * 0.68);
        assert!((literal_round_probability(0.8, 2).unwrap() - lit).abs() < 1e-15);
        assert!((literal_round_probability(0.5, 2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ecp1_at_optimal_transmittance() {
        let r = run_ecp1(&ProtocolParams::new(0.8, 1).unwrap()).unwrap();
        assert!((r.p_total - 0.32).abs() < 1e-12);
        let round = &r.rounds[0];
        assert!((round.output_fidelity.unwrap() - 1.0).abs() < 1e-9);
        assert!((round.success_prob_unconditional + round.failure_prob_unconditional - 1.0).abs() < 1e-12);
        // no-click α²t and the two bunched patterns β²(1−t)/2 each
        let find = |c: &[u32]| r.rounds[0].branches.iter().find(|b| b.counts == c).unwrap().clone();
        assert!((find(&[0, 0]).probability - 0.64).abs() < 1e-12);
        assert_eq!(find(&[0, 0]).category, BranchCategory::NoClick);
        assert!((find(&[2, 0]).probability - 0.02).abs() < 1e-12);
        assert!((find(&[0, 2]).probability - 0.02).abs() < 1e-12);
        assert!(find(&[0, 1]).phase_corrected);
        assert!(!find(&[1, 0]).phase_corrected);
        assert!(round.branches.iter().all(|b| b.counts != [1, 1]));
    }

    #[test]
    fn ecp1_balanced_input() {
        let r = run_ecp1(&ProtocolParams::new(0.5, 1).unwrap()).unwrap();
        assert!((r.p_total - 0.5).abs() < 1e-12);
        assert!((r.rounds[0].output_fidelity.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ecp1_suboptimal_transmittance_loses_fidelity() {
        let p = ProtocolParams::new(0.8, 1).unwrap().with_transmittance(0.5).unwrap();
        let r = run_ecp1(&p).unwrap();
        let (a, b) = (0.8f64.sqrt(), 0.2f64.sqrt());
        let expect = (a + b).powi(2) / 2.0;
        assert!((r.rounds[0].output_fidelity.unwrap() - expect).abs() < 1e-12);
        assert!(expect < 1.0);
        assert!((r.p_total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ecp2_round_at_optimal_transmittance() {
        let (a2, b2) = (0.8f64, 0.2f64);
        let r = run_ecp2_round((a2.sqrt(), b2.sqrt()), a2, 0.1).unwrap();
        assert!((r.success_probability - 2.0 * a2 * b2).abs() < 1e-12);
        assert!((r.recycle_probability - (a2 * a2 + b2 * b2)).abs() < 1e-12);
        assert!(r.failure_probability.abs() < 1e-12);
        let n = (a2 * a2 + b2 * b2).sqrt();
        let (x, y) = r.recycle_coefficients.unwrap();
        assert!((x - a2 / n).abs() < 1e-12 && (y - b2 / n).abs() < 1e-12);
        assert!((r.output_fidelity.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(r.success_states.len(), 2);
        assert_eq!(r.recycle_states.len(), 2);
    }

    #[test]
    fn ecp2_round_symmetric_fixed_point() {
        let h = FRAC_1_SQRT_2;
        let r = run_ecp2_round((h, h), 0.5, 0.0).unwrap();
        assert!((r.success_probability - 0.5).abs() < 1e-12);
        assert!((r.recycle_probability - 0.5).abs() < 1e-12);
        let (x, y) = r.recycle_coefficients.unwrap();
        assert!((x - h).abs() < 1e-12 && (y - h).abs() < 1e-12);
    }

    #[test]
    fn ecp2_round_rejects_bad_input() {
        assert!(matches!(run_ecp2_round((1.0, 1.0), 0.5, 0.0), Err(Error::NotNormalized(_))));
        assert!(matches!(
            run_ecp2_round((1.0, 0.0), 1.5, 0.0),
            Err(Error::InvalidTransmittance(_))
        ));
    }

    #[test]
    fn ecp2_cascade_examples() {
        let r = run_ecp2(&ProtocolParams::new(0.5, 10).unwrap()).unwrap();
        assert!((r.p_total - 0.9990234375).abs() < 1e-12);
        for (k, round) in r.rounds.iter().enumerate() {
            assert!((round.success_prob_unconditional - 0.5f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
        let r = run_ecp2(&ProtocolParams::new(0.8, 1).unwrap()).unwrap();
        assert!((r.p_total - 0.32).abs() < 1e-12);
        let r = run_ecp2(&ProtocolParams::new(0.8, 3).unwrap()).unwrap();
        let p: Vec<f64> = r.rounds.iter().map(|x| x.success_prob_unconditional).collect();
        assert!((p[0] - 0.32).abs() < 1e-12);
        assert!((p[1] - 0.0752941176470588).abs() < 1e-12);
        assert!((p[2] - 2.0 * 0.16f64.powi(4) / (0.68 * 0.4112)).abs() < 1e-12);
        assert!(r.discrepancy_max < 1e-12);
    }
}
