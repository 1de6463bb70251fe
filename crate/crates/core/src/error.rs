use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mean photon number must be non-negative, got {0}")]
    NegativeMean(f64),
    #[error("truncation n_max = {n_max} too small: tail mass {tail:e} exceeds 1e-9")]
    TruncationTooSmall { n_max: usize, tail: f64 },
    #[error("mean photon number is zero, g2 is undefined")]
    ZeroMean,
    #[error("distribution has no mass at n >= 1, zeta is undefined")]
    VacuumOnly,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("transmission {0} outside [0, 1]")]
    TransmissionOutOfRange(f64),
    #[error("dimension mismatch: n_max {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("matrix is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("back-propagated distribution is non-physical (entry {index} = {value:e})")]
    NonPhysical { index: usize, value: f64 },
    #[error("excitation probability p = {0} outside the allowed range")]
    POutOfRange(f64),
    #[error("target {target} outside attainable range [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("root search did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("Fock number {n} outside 0..={n_max}")]
    NOutOfRange { n: usize, n_max: usize },
    #[error("length must be positive, got {0}")]
    NonpositiveLength(f64),
    #[error("medium scale must be >= 1, got {0}")]
    ScaleOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{name} = {value} is not a valid probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("degenerate denominator in ratio ({0})")]
    DivisionDegenerate(&'static str),
    #[error("efficiency table is empty")]
    EmptyTable,
    #[error("invalid efficiency table: {0}")]
    InvalidTable(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("click file is empty")]
    EmptyFile,
    #[error("signal window {signal:?} overlaps noise window {noise:?}")]
    OverlappingWindows { signal: (u64, u64), noise: (u64, u64) },
    #[error("invalid window [{0}, {1}): end must exceed start")]
    InvalidWindow(u64, u64),
    #[error("zero singles on a detector, correlation undefined")]
    ZeroSingles,
    #[error("noise rate {noise:e} is not below signal rate {signal:e}")]
    NoiseExceedsSignal { noise: f64, signal: f64 },
    #[error("bootstrap needs at least 10 trials, got {0}")]
    InsufficientTrials(u64),
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    InsufficientResamples(usize),
    #[error("zeta = {0} is not attainable for this input kind")]
    ZetaUnattainable(f64),
    #[error("need at least {need} data rows, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::SingularMatrix
                | Error::IllConditioned(_)
                | Error::TruncationTooSmall { .. }
                | Error::NonPhysical { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
