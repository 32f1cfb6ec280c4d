use thiserror::Error;

use crate::assemblage::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0} is not a prime")]
    NotPrime(usize),
    #[error("{requested} settings requested, at most {available} available")]
    TooManySettings { requested: usize, available: usize },
    #[error("operator X^{0} Z^{1} listed twice")]
    DuplicateOperator(usize, usize),
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid assemblage: {}", format_diagnostics(.0))]
    InvalidAssemblage(Vec<Diagnostic>),
    #[error("effect normalization matrix is singular after {0} draws")]
    SingularNormalization(usize),
    #[error("enumeration needs {required} strategies but the cap is {cap}; raise the cap to at least {required}")]
    EnumerationOverflow { required: u128, cap: u64 },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("setting weights are not uniform")]
    NonUniformWeights,
    #[error("effect {outcome} of setting {setting} is not a rank-one projector")]
    NotRankOneProjective { setting: usize, outcome: usize },
    #[error("closed form holds only for m in {{2, d, d+1}}; got m={m}, d={d}")]
    InadmissibleM { m: usize, d: usize },
    #[error("{outcomes} outcomes give too many sign patterns (cap 2^20)")]
    SignPatternOverflow { outcomes: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("solver backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("numerical trouble: {0}")]
    NumericalTrouble(String),
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("primal/dual mismatch: primal {primal}, dual {dual}")]
    DualityGap { primal: f64, dual: f64 },
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// True for failures raised by the conic layer.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::BackendUnavailable(_)
                | Error::NumericalTrouble(_)
                | Error::Infeasible(_)
                | Error::DualityGap { .. }
        )
    }
}
