use thiserror::Error;

/// Library error. The split between input problems and mathematical
/// inconsistencies drives the CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symplectic (relative residual {residual:.3e})")]
    NotSymplectic { residual: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("ambiguous eigenvalue clustering: {a} and {b} are {distance:.3e} apart")]
    AmbiguousSpectrum { a: String, b: String, distance: f64 },
    #[error("unsupported degeneracy: {0}")]
    UnsupportedDegeneracy(String),
    #[error("refinement budget exhausted (last step {resolution:.3e})")]
    RefinementExhausted { resolution: f64 },
    #[error("not a loop: endpoint deviates from the identity by {0:.3e}")]
    NotALoop(f64),
    #[error("resonant ceiling: {value} is within {guard:e} of an integer; exact angles required")]
    ResonantCeiling { value: f64, guard: f64 },
    #[error("iteration k = {k} is not admissible")]
    NotAdmissible { k: u64 },
    #[error("rational ratio r_{i}/r_{j} detected; #T(E_n(r)) = infinity")]
    RationalRatio { i: usize, j: usize },
    #[error("root of unity with order beyond the bound {0}; exact input required")]
    RootBeyondBound(u64),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("malformed input: {0}")]
    Input(String),
}

impl Error {
    /// True when the failure is a mathematical "no" rather than bad input.
    pub fn is_verification(&self) -> bool {
        matches!(self, Error::Verification(_) | Error::Consistency(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
