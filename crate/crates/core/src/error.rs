use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no member point within capture radius {radius} (distance {distance:.3e})")]
    CaptureRadiusExceeded { radius: f64, distance: f64 },
    #[error("chart re-centering failed: {0}")]
    ChartEscape(String),
    #[error("step count must be at least 1, got {0}")]
    StepCountInvalid(usize),
    #[error("differential has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("submersion is rank deficient at {0}")]
    RankDeficientSubmersion(String),
    #[error("sampling failed: {0}")]
    SamplingFailure(String),
    #[error("submanifold is not saturated: orbit escapes by {distance:.3e}")]
    NotSaturated { distance: f64 },
    #[error("arrows are not composable: |s(g) - t(h)| = {0:.3e}")]
    NotComposable(f64),
    #[error("index {index} out of range for level {level}")]
    IndexOutOfRange { index: usize, level: usize },
    #[error("symmetric-group action unsupported at level {0}")]
    UnsupportedLevel(usize),
    #[error("tuple arrows do not share a common source: spread {0:.3e}")]
    NotCommonSource(f64),
    #[error("not a Riemannian submersion: defect {0:.3e}")]
    NotRiemannianSubmersion(f64),
    #[error("quadrature rule invalid: {0}")]
    QuadratureInvalid(String),
    #[error("group is not compact")]
    NotCompactGroup,
    #[error("pushforward inconsistent: defect {0:.3e}")]
    PushforwardInconsistent(f64),
    #[error("face map {0} is not a Riemannian submersion")]
    FaceNotSubmersive(usize),
    #[error("normal vector lift failed: {0}")]
    LiftFailure(String),
    #[error("radius {radius} exceeds injectivity estimate {estimate}")]
    RadiusTooLarge { radius: f64, estimate: f64 },
    #[error("groupoid is not declared s-proper")]
    NotSProper,
    #[error("path is not leafwise: residual {0:.3e}")]
    NotLeafwise(f64),
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown builder: {0}")]
    UnknownBuilder(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
