use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::CourseMeta;

/// A course attribute that hypotheses and cohorts can refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Undergraduate,
    Stem,
    Online,
    AppUse,
    SkillsTraining,
    Enrollment,
    Viewership,
    TaCount,
    Gpa,
    DfwRate,
}

impl Attribute {
    pub const FLAGS: [Attribute; 5] =
        [Attribute::Undergraduate, Attribute::Stem, Attribute::Online, Attribute::AppUse, Attribute::SkillsTraining];

    pub const NUMERIC: [Attribute; 5] =
        [Attribute::Enrollment, Attribute::Viewership, Attribute::TaCount, Attribute::Gpa, Attribute::DfwRate];

    pub fn is_flag(self) -> bool {
        Self::FLAGS.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Undergraduate => "undergraduate",
            Attribute::Stem => "stem",
            Attribute::Online => "online",
            Attribute::AppUse => "app_use",
            Attribute::SkillsTraining => "skills_training",
            Attribute::Enrollment => "enrollment",
            Attribute::Viewership => "viewership",
            Attribute::TaCount => "ta_count",
            Attribute::Gpa => "gpa",
            Attribute::DfwRate => "dfw_rate",
        }
    }

    /// Short column heading used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Attribute::Undergraduate => "Undergrad",
            Attribute::Stem => "STEM",
            Attribute::Online => "Online",
            Attribute::AppUse => "App use",
            Attribute::SkillsTraining => "Skills",
            Attribute::Enrollment => "Enrollment",
            Attribute::Viewership => "Viewership",
            Attribute::TaCount => "#TAs",
            Attribute::Gpa => "GPA",
            Attribute::DfwRate => "DFW",
        }
    }

    pub fn flag(self, meta: &CourseMeta) -> Option<bool> {
        match self {
            Attribute::Undergraduate => Some(meta.undergraduate),
            Attribute::Stem => Some(meta.stem),
            Attribute::Online => Some(meta.online),
            Attribute::AppUse => Some(meta.app_use),
            Attribute::SkillsTraining => Some(meta.skills_training),
            _ => None,
        }
    }

    pub fn numeric(self, meta: &CourseMeta) -> Option<f64> {
        match self {
            Attribute::Enrollment => Some(meta.enrollment as f64),
            Attribute::Viewership => Some(meta.viewership as f64),
            Attribute::TaCount => Some(meta.ta_count as f64),
            Attribute::Gpa => Some(meta.gpa),
            Attribute::DfwRate => Some(meta.dfw_rate),
            _ => None,
        }
    }

    /// Flags read as 0/1, numerics as themselves.
    pub fn value(self, meta: &CourseMeta) -> f64 {
        self.flag(meta).map(|b| b as u8 as f64).or_else(|| self.numeric(meta)).unwrap_or(0.0)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownAttribute(pub String);

impl FromStr for Attribute {
    type Err = UnknownAttribute;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let attr = match s.trim().to_ascii_lowercase().as_str() {
            "undergraduate" | "undergrad" | "ugrad" => Attribute::Undergraduate,
            "stem" => Attribute::Stem,
            "online" => Attribute::Online,
            "app_use" | "app" | "apps" => Attribute::AppUse,
            "skills_training" | "skills" => Attribute::SkillsTraining,
            "enrollment" | "enroll" => Attribute::Enrollment,
            "viewership" | "views" => Attribute::Viewership,
            "ta_count" | "ta" | "tas" => Attribute::TaCount,
            "gpa" => Attribute::Gpa,
            "dfw_rate" | "dfw" => Attribute::DfwRate,
            _ => return Err(UnknownAttribute(s.to_string())),
        };
        Ok(attr)
    }
}
