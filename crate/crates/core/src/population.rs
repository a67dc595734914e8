//! Joining course metadata with activity and scoring the result.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::aggregate::{course_dou, CourseDou};
use crate::classifier::{Classifier, CourseActivityRecord, ResourceLevels};
use crate::error::{AggregateError, ClassifyError};
use crate::ingest::CourseMeta;
use crate::model::{AggregationPlan, ResourceTaxonomy};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCourse {
    pub meta: CourseMeta,
    pub levels: ResourceLevels,
    pub dou: CourseDou,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("course {0}: {1}")]
    Classify(String, #[source] ClassifyError),
    #[error("course {0}: {1}")]
    Aggregate(String, #[source] AggregateError),
    #[error("course {0} has metadata but no activity record")]
    MissingActivity(String),
    #[error("course {0} has an activity record but no metadata")]
    MissingMeta(String),
}

/// The full measurement model: taxonomy, aggregation plan and classifier
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scorer {
    pub taxonomy: ResourceTaxonomy,
    pub plan: AggregationPlan,
    pub classifier: Classifier,
}

impl Default for Scorer {
    fn default() -> Self {
        let taxonomy = ResourceTaxonomy::default();
        let plan = AggregationPlan::default_for(&taxonomy).expect("built-in plan is valid");
        Scorer { taxonomy, plan, classifier: Classifier::default() }
    }
}

impl Scorer {
    pub fn score_record(&self, record: &CourseActivityRecord) -> Result<(ResourceLevels, CourseDou), ScoreError> {
        let levels = self
            .classifier
            .classify_course(record, &self.taxonomy)
            .map_err(|e| ScoreError::Classify(record.course_id.clone(), e))?;
        let dou = course_dou(&levels, &self.plan, &self.taxonomy)
            .map_err(|e| ScoreError::Aggregate(record.course_id.clone(), e))?;
        Ok((levels, dou))
    }

    /// Scores every course, pairing metadata and activity by `course_id`.
    /// Output follows the order of `metas`.
    pub fn score_population(
        &self,
        metas: &[CourseMeta],
        activity: &[CourseActivityRecord],
    ) -> Result<Vec<ScoredCourse>, ScoreError> {
        let by_id: HashMap<&str, &CourseActivityRecord> = activity.iter().map(|a| (a.course_id.as_str(), a)).collect();
        let known: HashMap<&str, ()> = metas.iter().map(|m| (m.course_id.as_str(), ())).collect();
        if let Some(orphan) = activity.iter().find(|a| !known.contains_key(a.course_id.as_str())) {
            return Err(ScoreError::MissingMeta(orphan.course_id.clone()));
        }
        metas
            .iter()
            .map(|meta| {
                let record = by_id
                    .get(meta.course_id.as_str())
                    .ok_or_else(|| ScoreError::MissingActivity(meta.course_id.clone()))?;
                let (levels, dou) = self.score_record(record)?;
                Ok(ScoredCourse { meta: meta.clone(), levels, dou })
            })
            .collect()
    }
}
