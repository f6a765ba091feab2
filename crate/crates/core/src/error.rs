use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty measure")]
    EmptyMeasure,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("vanishing weight at atom {index}")]
    VanishingWeight { index: usize },
    #[error("no return time within n_max (best deviation {best_deviation:e} at n = {best_n})")]
    NoReturnTime { best_deviation: f64, best_n: u64 },
    #[error("pole: evaluation point {0} is a pole")]
    Pole(String),
    #[error("ill-conditioned measure: Cauchy-transform residual {0:e}")]
    IllConditionedMeasure(f64),
    #[error("level-set solve failed: residual {0:e}")]
    LevelSetFailed(f64),
    #[error("spurious off-circle root (modulus deviation {0:e})")]
    OffCircleRoot(f64),
    #[error("quadrature not converged (doubling change {change:e} at {nodes} nodes)")]
    QuadratureNotConverged { change: f64, nodes: usize },
    #[error("coincident spectra: 1-theta vanishes at evaluation point")]
    CoincidentSpectra,
    #[error("precondition failed: {what} (residual {residual:e})")]
    Precondition { what: String, residual: f64 },
    #[error("{0}")]
    Hypothesis(String),
    #[error("operator is not invertible (smallest singular value {0:e})")]
    NotInvertible(f64),
    #[error("Cesaro average not converged (drift {0:e})")]
    CesaroNotConverged(f64),
    #[error("unknown inequality {0:?}")]
    UnknownInequality(String),
    #[error("degenerate seed {0}: resampling exhausted")]
    DegenerateSeed(u64),
    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn precondition(what: impl Into<String>, residual: f64) -> Self {
        Error::Precondition { what: what.into(), residual }
    }

    pub fn at_stage(self, stage: &str) -> Self {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
