//! Few-photon Fock-state simulation and single-photon entanglement
//! concentration.
//!
//! * [`fock`]: sparse multi-mode photon-number states.
//! * [`optics`]: beam splitters, the variable beam splitter and photon
//!   injection.
//! * [`measurement`]: number-resolving detection and the cross-Kerr QND
//!   measurement, by exhaustive branch enumeration.
//! * [`protocol`]: the linear-optics protocol, the recycling QND protocol,
//!   the transmittance schedule and the closed-form round probabilities.
//! * [`sweep`]: total success probability over a grid of |α|².
//! * [`oracle`]: an independent dense simulator that certifies the above.

pub mod error;
pub mod exec;
pub mod fock;
pub mod measurement;
pub mod optics;
pub mod oracle;
pub mod protocol;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fock::{modes, Amplitude, ModeId, OccupationVector, StateVector};
pub use measurement::{measure_photon_numbers, postselect, qnd_measure, MeasurementBranch, Outcome, QndSpec};
pub use optics::{apply_beam_splitter, apply_vbs, inject_photon, BeamSplitterSpec, SignConvention, VbsSpec};
pub use oracle::{certify, Certification};
pub use protocol::{
    analytic_round_probability, initial_state, optimal_transmittance, run_ecp1, run_ecp2, run_ecp2_round,
    ConcentrationReport, Engine, ProtocolParams, RoundOutcome,
};
pub use sweep::{p_total_curve, p_total_curve_with, CurvePoint, Grid};
