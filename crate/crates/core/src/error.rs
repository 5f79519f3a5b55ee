use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("gap in daily series: missing {0}")]
    MissingDate(NaiveDate),

    #[error("duplicate date in daily series: {0}")]
    DuplicateDate(NaiveDate),

    #[error("dates out of order: {later} appears before {earlier}")]
    UnsortedDates { earlier: NaiveDate, later: NaiveDate },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("empty result: {0}")]
    Empty(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("singular system: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model fit failed for ARMA({p},{q}): {reason}")]
    FitFailed { p: usize, q: usize, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::InsufficientData { .. }
            | Error::MissingDate(_)
            | Error::DuplicateDate(_)
            | Error::UnsortedDates { .. }
            | Error::MalformedRow { .. }
            | Error::Empty(_)
            | Error::Csv(_)
            | Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
