//! Crate-wide error type.

use thiserror::Error;

/// Coarse failure class, used by callers that map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input: schema, mass accounting, parameter ranges.
    Validation,
    /// A requested rate does not exist for some group.
    UndefinedMetric,
    /// An enumeration cap or structural limit was exceeded.
    ResourceCap,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("total probability mass is {got}, expected exactly 1")]
    TotalMassNotOne { got: String },

    #[error("group `{0}` has zero total mass")]
    EmptyGroup(String),

    #[error("at least 2 groups required, found {0}")]
    FewerThanTwoGroups(usize),

    #[error("no cell for feature `{feature}` in group `{group}`")]
    UnknownCell { feature: String, group: String },

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    AlphaOutOfRange(String),

    #[error("threshold must lie in [0, 1], got {0}")]
    ThresholdOutOfRange(String),

    #[error("{rate} undefined: group `{group}` has no {mass} mass")]
    UndefinedMetric {
        group: String,
        rate: &'static str,
        mass: &'static str,
    },

    #[error("classifier has no acceptance for feature `{feature}` in group `{group}`")]
    IncompleteClassifier { feature: String, group: String },

    #[error("acceptance {p} for feature `{feature}` in group `{group}` outside [0, 1]")]
    AcceptanceOutOfRange {
        feature: String,
        group: String,
        p: String,
    },

    #[error("mass prefixes do not cover the distribution groups exactly")]
    GroupMismatch,

    #[error("assignment missing representation point `{0}`")]
    IncompleteAssignment(String),

    #[error("representation has {points} points, enumeration cap is {cap}")]
    TooManyPoints { points: usize, cap: usize },

    #[error("distribution has {cells} cells, enumeration cap is {cap}")]
    TooManyCells { cells: usize, cap: usize },

    #[error("vertex enumeration supports exactly 2 groups, found {0}")]
    TwoGroupsRequired(usize),

    #[error("invalid rational literal `{0}`")]
    InvalidRational(String),

    #[error("{0}")]
    Schema(String),
}

impl Error {
    /// Stable machine-readable name, used in diagnostic JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::TotalMassNotOne { .. } => "TotalMassNotOne",
            Error::EmptyGroup(_) => "EmptyGroup",
            Error::FewerThanTwoGroups(_) => "FewerThanTwoGroups",
            Error::UnknownCell { .. } => "UnknownCell",
            Error::UnknownGroup(_) => "UnknownGroup",
            Error::AlphaOutOfRange(_) => "AlphaOutOfRange",
            Error::ThresholdOutOfRange(_) => "ThresholdOutOfRange",
            Error::UndefinedMetric { .. } => "UndefinedMetric",
            Error::IncompleteClassifier { .. } => "IncompleteClassifier",
            Error::AcceptanceOutOfRange { .. } => "AcceptanceOutOfRange",
            Error::GroupMismatch => "GroupMismatch",
            Error::IncompleteAssignment(_) => "IncompleteAssignment",
            Error::TooManyPoints { .. } => "TooManyPoints",
            Error::TooManyCells { .. } => "TooManyCells",
            Error::TwoGroupsRequired(_) => "TwoGroupsRequired",
            Error::InvalidRational(_) => "InvalidRational",
            Error::Schema(_) => "Schema",
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UndefinedMetric { .. } => ErrorKind::UndefinedMetric,
            Error::TooManyPoints { .. }
            | Error::TooManyCells { .. }
            | Error::TwoGroupsRequired(_) => ErrorKind::ResourceCap,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
