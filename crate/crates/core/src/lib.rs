//! Depth-of-use (DOU) analytics for learning management system courses.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`classifier`] turns raw per-course activity into ordinal levels for
//!    each LMS resource (announcements, syllabus, discussions, ...).
//! 2. [`aggregate`] folds those levels into a Low/Medium/High course score
//!    according to an [`model::AggregationPlan`].
//! 3. [`hypotheses`] and [`cohorts`] test and slice the scored population
//!    against course metadata.
//! 4. [`report`] renders everything as plain tables, CSV or JSON.
//!
//! [`synth`] generates reproducible synthetic populations for validation.

pub mod aggregate;
pub mod attribute;
pub mod classifier;
pub mod cohorts;
pub mod config;
pub mod error;
pub mod hypotheses;
pub mod ingest;
pub mod model;
pub mod population;
pub mod report;
pub mod stats;
pub mod synth;
