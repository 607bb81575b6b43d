use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("invalid lemma {lemma:?}: {reason}")]
    InvalidLemma { lemma: String, reason: &'static str },
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum TutorError {
    #[error("time regression: now is {days:.6} days before the last exposure")]
    TimeRegression { days: f64 },
    #[error("half-life must be positive and finite, got {0}")]
    NonPositiveHalfLife(f64),
    #[error("recall probability must lie in [0, 1], got {0}")]
    RecallOutOfRange(f64),
    #[error("invalid tutor parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("smoothing constant must be finite and non-negative, got {0}")]
    BadSmoothing(f64),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("constant guessability must lie in (0, 1], got {0}")]
    BadConstant(f64),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("probability must lie in [0, 1], got {name} = {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("density must lie in [0, 1], got {0}")]
    BadDensity(f64),
    #[error("candidate at token {0} has no scores")]
    Unscored(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslationError {
    #[error("no translation for {lemma:?}")]
    MissingTranslation { lemma: String },
    #[error("translation provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("occurrence at token {token_index} is not inside the given sentence")]
    OutsideSentence { token_index: usize },
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown learner {0:?}")]
    UnknownLearner(String),
    #[error("invalid learner id {0:?}: use 1-64 characters from [A-Za-z0-9_-]")]
    BadLearnerId(String),
    #[error("timestamp regression for learner {learner}: {timestamp} < {last}")]
    TimestampRegression { learner: String, timestamp: f64, last: f64 },
    #[error("malformed event: {0}")]
    Malformed(String),
    #[error("corrupt log {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Tutor(#[from] TutorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {var}: {message}")]
    Env { var: String, message: String },
}

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("clickstream graph: {0}")]
    Graph(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Failure of the end-to-end annotation pipeline.
#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("density must lie in [0, 1], got {0}")]
    BadDensity(f64),
    #[error("text is empty")]
    EmptyText,
    #[error("unknown target profile {0:?}")]
    UnknownProfile(String),
    #[error(transparent)]
    Translation(#[from] TranslationError),
    #[error(transparent)]
    Select(#[from] SelectError),
}
