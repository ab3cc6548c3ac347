use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gas sample `{id}`: {reason}")]
    InvalidSample { id: String, reason: String },

    #[error("sample `{0}` has all five gas concentrations equal to zero")]
    DegenerateSample(String),

    #[error("skewness needs at least 3 samples, got {0}")]
    TooFewSamples(usize),

    #[error("window width {width} is outside 1..={max}")]
    BadWidth { width: usize, max: usize },

    #[error("need at least one maximum and one minimum for envelopes (found {maxima} maxima, {minima} minima)")]
    InsufficientExtrema { maxima: usize, minima: usize },

    #[error("training labels contain a single class")]
    SingleClassData,

    #[error("label {label} is out of range for {n_classes} classes")]
    InvalidLabel { label: usize, n_classes: usize },

    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("{branch} branch needs at least 2 distinct classes, found {found}")]
    MissingBranchData { branch: &'static str, found: usize },

    #[error("stratified split: class {0} has no rows")]
    EmptyClass(String),

    #[error("length mismatch: {0} actual vs {1} predicted labels")]
    LengthMismatch(usize, usize),

    #[error("metric undefined: class {0} has no rows")]
    UndefinedForEmptyClass(String),

    #[error("metric undefined for an empty confusion matrix")]
    EmptyMatrix,

    #[error("dataset row {row} has no fault label")]
    MissingLabel { row: usize },

    #[error("line {line}: {reason}")]
    ParseError { line: u64, reason: String },

    #[error("dataset contains no samples")]
    EmptyFile,

    #[error(
        "artifact schema version {found} is not supported (this build reads up to {supported})"
    )]
    VersionMismatch { found: u64, supported: u64 },

    #[error("corrupt model artifact: {0}")]
    CorruptArtifact(String),

    #[error("rules file: {0}")]
    Rules(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
