//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("attribute `{attribute}`: category probabilities sum to {sum}, expected 1")]
    ProbabilitySum { attribute: String, sum: f64 },

    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),

    #[error("attribute `{attribute}`: bin edges must be strictly increasing")]
    BinEdgeOrder { attribute: String },

    #[error("attribute `{attribute}`: {message}")]
    InvalidAttribute { attribute: String, message: String },

    #[error("schema must declare at least one attribute")]
    EmptySchema,

    #[error("population requires at least one region")]
    ZeroRegions,

    #[error("population size must be at least the region count")]
    PopulationTooSmall,

    #[error("desirability prior parameter out of range: {0}")]
    InvalidPrior(String),

    #[error("region {0} is empty")]
    EmptyRegion(u32),

    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    ParamRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("no voting scores to threshold")]
    EmptyScores,

    #[error("input dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ballot set covers {got} regions, population has {expected}")]
    RegionCountMismatch { expected: usize, got: usize },

    #[error("poll rate {0} yields zero respondents")]
    ZeroRespondents(f64),

    #[error("poll has no respondents")]
    EmptyPoll,

    #[error("requested {requested} fraud regions but only {available} exist")]
    TooManyFraudRegions { requested: usize, available: usize },

    #[error("no fraudulent regions in labels")]
    NoFraudRegions,

    #[error("one-class SVM requires at least one training point")]
    EmptyTrainingSet,

    #[error("one-class SVM did not converge: KKT residual {residual} after {pairs} pair updates")]
    SvmNoConvergence { residual: f64, pairs: usize },

    #[error("linear system is singular or rank deficient")]
    SingularSystem,

    #[error("k = {k} invalid for {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("report and labels cover different region sets")]
    RegionSetMismatch,

    #[error("boundary grid resolution must be positive")]
    ZeroResolution,

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

impl Error {
    /// Wrap an error with the pipeline stage it arose in.
    pub fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
