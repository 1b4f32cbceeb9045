use thiserror::Error;

use crate::fock::ModeId;

/// Errors raised by state construction, optical elements, measurements and
/// the protocol drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode `{0}` is already registered")]
    RegistryConflict(ModeId),

    #[error("unknown mode `{0}`")]
    UnknownMode(ModeId),

    #[error("mode registries differ: {left:?} vs {right:?}")]
    RegistryMismatch {
        left: Vec<ModeId>,
        right: Vec<ModeId>,
    },

    #[error("occupation vector has {got} entries, registry has {expected} modes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{total} photons exceed the cutoff of {cutoff}")]
    CutoffExceeded { total: u32, cutoff: u32 },

    #[error("non-finite amplitude")]
    NonFinite,

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("cannot normalize the zero state")]
    ZeroState,

    #[error("transform is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("transmittance {0} outside [0, 1]")]
    InvalidTransmittance(f64),

    #[error("no branch with outcome `{0}`")]
    BranchNotFound(String),

    #[error("branch `{0}` has zero probability")]
    ZeroProbabilityBranch(String),

    #[error("alpha_sq = {0} carries no entanglement; expected 0 < alpha_sq < 1")]
    DegenerateInput(f64),

    #[error("{0}")]
    Domain(String),

    #[error("certification failed at `{quantity}`: engine {engine}, oracle {oracle} (deviation {deviation:e})")]
    CertificationFailed {
        quantity: String,
        engine: f64,
        oracle: f64,
        deviation: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
