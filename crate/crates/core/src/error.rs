use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("coefficient overflow while composing maps (degree {degree}); evaluate the word orbit-wise instead")]
    CompositionOverflow { degree: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("no repelling fixed point found among the generators; supply a seed point explicitly")]
    NoRepellingFixedPoint,
    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("fixed-point iteration did not converge within {iterations} iterations (last residual {last:.3e})")]
    NotConverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },
    #[error("Neumann series diverges: increments stopped decreasing at term {term} (increment {increment:.3e})")]
    SeriesDiverged { term: usize, increment: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("weights leave the probability simplex: {0}")]
    SimplexViolation(String),
    #[error("nonpositive denominator {0:.6e} in exponent formula")]
    NonPositiveDenominator(f64),
    #[error("too few usable scales for the Hölder regression ({usable} < 4)")]
    TooFewScales { usable: usize },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
