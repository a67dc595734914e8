use std::fmt;

use thiserror::Error;

use crate::model::ResourceId;

/// A single problem found while validating a taxonomy or plan.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownResource(String),
    DuplicateResource(String),
    MaxLevelOutOfRange { resource: String, max_level: i64 },
    MaxLevelMismatch { resource: String, max_level: i64, expected: u8 },
    MissingDescription { resource: String, level: u8 },
    EmptyTaxonomy,
    Unassigned(String),
    AssignedMoreThanOnce { resource: String, times: usize },
    InvalidBeta { a: String, b: String, beta: f64 },
    EmptyPlan,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownResource(r) => write!(f, "unknown resource '{r}'"),
            Violation::DuplicateResource(r) => write!(f, "duplicate resource id '{r}'"),
            Violation::MaxLevelOutOfRange { resource, max_level } => {
                write!(f, "{resource}: max_level {max_level} outside 1..=2")
            }
            Violation::MaxLevelMismatch { resource, max_level, expected } => write!(
                f,
                "{resource}: max_level {max_level} does not match the classification rule (expected {expected})"
            ),
            Violation::MissingDescription { resource, level } => {
                write!(f, "{resource}: no description for level {level}")
            }
            Violation::EmptyTaxonomy => f.write_str("taxonomy has no resources"),
            Violation::Unassigned(r) => write!(f, "{r} unassigned"),
            Violation::AssignedMoreThanOnce { resource, times } => {
                write!(f, "{resource} appears in {times} terms")
            }
            Violation::InvalidBeta { a, b, beta } => {
                write!(f, "pair ({a},{b}): beta {beta} must be 0 or 1")
            }
            Violation::EmptyPlan => f.write_str("plan has no terms"),
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown resource '{0}'")]
    UnknownResource(String),
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("level {level} outside 0..={max}")]
    LevelOutOfRange { level: u8, max: u8 },
    #[error("invalid activity record for {course}: {reason}")]
    InvalidRecord { course: String, reason: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("floored mean of an empty collection")]
    Empty,
    #[error("resource {0} required by the plan is missing from the level vector")]
    MissingResource(ResourceId),
    #[error("resource {0} in the level vector is not part of the plan")]
    UnexpectedResource(ResourceId),
    #[error("resource {resource}: level {level} exceeds max {max}")]
    LevelOutOfRange { resource: ResourceId, level: u8, max: u8 },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("normalization undefined: enrollment is 0")]
    ZeroEnrollment,
    #[error("term must span at least one week")]
    ZeroWeeks,
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("need at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("degrees of freedom must be positive")]
    InvalidDf,
    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
}

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("hypothesis {id}: attribute '{attribute}' is not a {kind} attribute")]
    KindMismatch { id: String, attribute: String, kind: &'static str },
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("resource target {0} is not part of the scored population")]
    MissingTarget(ResourceId),
    #[error("unknown target '{0}'; expected 'overall' or a resource code")]
    UnknownTarget(String),
}

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("cannot discretize an empty collection")]
    Empty,
    #[error("invalid cohort expression '{expr}': {reason}")]
    Parse { expr: String, reason: String },
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("course {0} has no request profile; junk-drive detection needs one")]
    MissingProfile(String),
    #[error("quantile {0} outside (0, 1)")]
    InvalidQuantile(f64),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("n_courses must be at least 1")]
    NoCourses,
    #[error("{field}: probability {value} outside [0, 1]")]
    Probability { field: String, value: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown attribute '{0}' in planted effect")]
    UnknownAttribute(String),
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("format {format} is not supported for {payload}")]
    Unsupported { format: &'static str, payload: &'static str },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error("{0}")]
    Invalid(String),
}
