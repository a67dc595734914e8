//! Per-resource ordinal levels from raw course activity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ClassifyError;
use crate::model::{ResourceId, ResourceTaxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyllabusPlacement {
    #[default]
    None,
    FileInFiles,
    EmbeddedInSyllabusTool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    #[default]
    NoneOrPlaceholder,
    ExternalLinkOrArchive,
    FullyHosted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentSubmission {
    #[default]
    OfflineOrExternal,
    FileUpload,
    TextEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuizSubmission {
    #[default]
    OfflineOrExternal,
    WithinLms,
}

impl SyllabusPlacement {
    pub fn level(self) -> u8 {
        self as u8
    }
}

impl Delivery {
    pub fn level(self) -> u8 {
        self as u8
    }
}

impl AssignmentSubmission {
    pub fn level(self) -> u8 {
        self as u8
    }
}

impl QuizSubmission {
    pub fn level(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub delivery: Delivery,
    pub submission: AssignmentSubmission,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Quiz {
    pub delivery: Delivery,
    pub submission: QuizSubmission,
}

/// Normalized activity observations for one course site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseActivityRecord {
    pub course_id: String,
    pub term_weeks: u32,
    pub announcement_count: u32,
    pub announcements_staff_authored: bool,
    pub syllabus_placement: SyllabusPlacement,
    pub discussions_enabled: bool,
    pub discussion_post_count: u32,
    /// Assignments plus quizzes.
    pub instrument_count: u32,
    pub assignments: Vec<Assignment>,
    pub quizzes: Vec<Quiz>,
    pub graded_fraction: f64,
    pub file_count: u32,
}

impl CourseActivityRecord {
    /// A record with no activity at all.
    pub fn empty(course_id: impl Into<String>, term_weeks: u32) -> Self {
        CourseActivityRecord {
            course_id: course_id.into(),
            term_weeks,
            announcement_count: 0,
            announcements_staff_authored: false,
            syllabus_placement: SyllabusPlacement::None,
            discussions_enabled: false,
            discussion_post_count: 0,
            instrument_count: 0,
            assignments: Vec::new(),
            quizzes: Vec::new(),
            graded_fraction: 0.0,
            file_count: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let invalid =
            |reason: &str| ClassifyError::InvalidRecord { course: self.course_id.clone(), reason: reason.to_string() };
        if self.term_weeks < 1 {
            return Err(invalid("term_weeks must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.graded_fraction) {
            return Err(invalid("graded_fraction outside [0, 1]"));
        }
        Ok(())
    }
}

/// Resource id to ordinal level. Iterates in canonical resource order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceLevels(BTreeMap<ResourceId, u8>);

impl ResourceLevels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: ResourceId) -> Option<u8> {
        self.0.get(&id).copied()
    }

    pub fn set(&mut self, id: ResourceId, level: u8) {
        self.0.insert(id, level);
    }

    pub fn iter(&self) -> impl Iterator<Item = (ResourceId, u8)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(ResourceId, u8)> for ResourceLevels {
    fn from_iter<I: IntoIterator<Item = (ResourceId, u8)>>(iter: I) -> Self {
        ResourceLevels(iter.into_iter().collect())
    }
}

/// Highest level `l` such that at least half of the instruments sit at `l`
/// or above. No instruments means level 0.
pub fn majority_level(levels: &[u8], max_level: u8) -> Result<u8, ClassifyError> {
    if let Some(&level) = levels.iter().find(|&&l| l > max_level) {
        return Err(ClassifyError::LevelOutOfRange { level, max: max_level });
    }
    let n = levels.len();
    if n == 0 {
        return Ok(0);
    }
    for level in (1..=max_level).rev() {
        let at_least = levels.iter().filter(|&&l| l >= level).count();
        // share >= 1/2 without floating point
        if 2 * at_least >= n {
            return Ok(level);
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Minimum graded fraction for the gradebook to count as used.
    pub grading_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { grading_threshold: 1.0 }
    }
}

/// Applies the taxonomy rules to activity records.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Classifier {
    config: ClassifierConfig,
}

/// "At least one per week or course instrument". The instrument branch only
/// applies when the course has instruments.
fn meets_weekly_or_instrument(count: u32, term_weeks: u32, instrument_count: u32) -> bool {
    count > 0 && (count >= term_weeks || (instrument_count > 0 && count >= instrument_count))
}

impl Classifier {
    pub fn new(config: ClassifierConfig) -> Self {
        Classifier { config }
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn classify_resource(&self, record: &CourseActivityRecord, resource: ResourceId) -> Result<u8, ClassifyError> {
        record.validate()?;
        let level = match resource {
            ResourceId::Announcements => {
                let n = record.announcement_count;
                if record.announcements_staff_authored
                    && meets_weekly_or_instrument(n, record.term_weeks, record.instrument_count)
                {
                    2
                } else if n > 0 {
                    1
                } else {
                    0
                }
            }
            ResourceId::Syllabus => record.syllabus_placement.level(),
            ResourceId::Discussions => {
                if !record.discussions_enabled {
                    0
                } else if meets_weekly_or_instrument(
                    record.discussion_post_count,
                    record.term_weeks,
                    record.instrument_count,
                ) {
                    2
                } else {
                    1
                }
            }
            ResourceId::AssignmentDelivery => {
                let levels: Vec<u8> = record.assignments.iter().map(|a| a.delivery.level()).collect();
                majority_level(&levels, 2)?
            }
            ResourceId::AssignmentSubmission => {
                let levels: Vec<u8> = record.assignments.iter().map(|a| a.submission.level()).collect();
                majority_level(&levels, 2)?
            }
            ResourceId::QuizDelivery => {
                let levels: Vec<u8> = record.quizzes.iter().map(|q| q.delivery.level()).collect();
                majority_level(&levels, 2)?
            }
            ResourceId::QuizSubmission => {
                let levels: Vec<u8> = record.quizzes.iter().map(|q| q.submission.level()).collect();
                majority_level(&levels, 1)?
            }
            ResourceId::Gradebook => u8::from(record.graded_fraction >= self.config.grading_threshold),
            ResourceId::Files => u8::from(record.file_count > 0),
        };
        Ok(level)
    }

    pub fn classify_course(
        &self,
        record: &CourseActivityRecord,
        tax: &ResourceTaxonomy,
    ) -> Result<ResourceLevels, ClassifyError> {
        tax.ids().map(|id| self.classify_resource(record, id).map(|level| (id, level))).collect()
    }
}
