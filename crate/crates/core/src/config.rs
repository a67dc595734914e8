//! The JSON analysis config. Every section is optional; omitted sections
//! fall back to the built-in model.
//!
//! ```json
//! {
//!   "taxonomy": { "resources": [ ... ] },
//!   "plan": { "pair_terms": [ ... ], "single_terms": ["An"], "normalize_levels": true },
//!   "classifier": { "grading_threshold": 1.0 },
//!   "hypotheses": [ { "id": "H1", "attribute": "undergraduate", "kind": "binary_flag" } ],
//!   "cuts": { "enrollment": { "scheme": "threshold", "x": 40 } },
//!   "archetypes": { "file_share": 0.6 },
//!   "term_start": "2023-01-16"
//! }
//! ```

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ClassifierConfig};
use crate::cohorts::{ArchetypeThresholds, CutConfig};
use crate::error::ConfigError;
use crate::hypotheses::{HypothesisSpec, Registry};
use crate::model::{AggregationPlan, RawPlan, RawTaxonomy, ResourceTaxonomy};
use crate::population::Scorer;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub taxonomy: Option<RawTaxonomy>,
    pub plan: Option<RawPlan>,
    pub classifier: ClassifierConfig,
    pub hypotheses: Option<Vec<HypothesisSpec>>,
    pub cuts: CutConfig,
    pub archetypes: ArchetypeThresholds,
    pub term_start: Option<NaiveDate>,
}

/// A validated config, ready to drive the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub scorer: Scorer,
    pub registry: Registry,
    pub cuts: CutConfig,
    pub archetypes: ArchetypeThresholds,
    pub term_start: Option<NaiveDate>,
    /// The input this was built from, echoed into report provenance.
    pub raw: RawConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig::from_raw(RawConfig::default()).expect("built-in config is valid")
    }
}

impl AnalysisConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let taxonomy = ResourceTaxonomy::validate(raw.taxonomy.as_ref().unwrap_or(&RawTaxonomy::builtin()))?;
        let plan = AggregationPlan::validate(raw.plan.as_ref().unwrap_or(&RawPlan::builtin()), &taxonomy)?;
        let g = raw.classifier.grading_threshold;
        if !(0.0..=1.0).contains(&g) {
            return Err(ConfigError::Invalid(format!("classifier.grading_threshold {g} outside [0, 1]")));
        }
        let f = raw.archetypes.file_share;
        if !(0.0..=1.0).contains(&f) {
            return Err(ConfigError::Invalid(format!("archetypes.file_share {f} outside [0, 1]")));
        }
        let registry = match &raw.hypotheses {
            Some(specs) => Registry::new(specs.clone())?,
            None => Registry::default(),
        };
        Ok(AnalysisConfig {
            scorer: Scorer { taxonomy, plan, classifier: Classifier::new(raw.classifier) },
            registry,
            cuts: raw.cuts.clone(),
            archetypes: raw.archetypes.clone(),
            term_start: raw.term_start,
            raw,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribute::Attribute;
    use crate::cohorts::Scheme;

    #[test]
    fn empty_object_is_the_builtin_model() {
        let c = AnalysisConfig::from_json("{}").unwrap();
        assert_eq!(c.scorer, Scorer::default());
        assert_eq!(c.registry, Registry::default());
        assert_eq!(c, AnalysisConfig::default());
    }

    #[test]
    fn sections_override() {
        let c = AnalysisConfig::from_json(
            r#"{"classifier": {"grading_threshold": 0.8},
                "cuts": {"enrollment": {"scheme": "threshold", "x": 40}},
                "hypotheses": [{"id": "H5", "attribute": "enrollment", "kind": "numeric"}],
                "term_start": "2023-08-21"}"#,
        )
        .unwrap();
        assert_eq!(c.scorer.classifier.config().grading_threshold, 0.8);
        assert_eq!(c.cuts.scheme(Attribute::Enrollment), Scheme::Threshold { x: 40.0 });
        assert_eq!(c.registry.specs().len(), 1);
        assert_eq!(c.term_start, NaiveDate::from_ymd_opt(2023, 8, 21));
    }

    #[test]
    fn bad_sections_rejected() {
        assert!(matches!(
            AnalysisConfig::from_json(r#"{"plan": {"pair_terms": [], "single_terms": ["An"]}}"#),
            Err(ConfigError::Model(_))
        ));
        assert!(matches!(
            AnalysisConfig::from_json(r#"{"hypotheses": [{"id": "X", "attribute": "gpa", "kind": "binary_flag"}]}"#),
            Err(ConfigError::Hypothesis(_))
        ));
        assert!(matches!(
            AnalysisConfig::from_json(r#"{"classifier": {"grading_threshold": 2}}"#),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(AnalysisConfig::from_json(r#"{"bogus": 1}"#), Err(ConfigError::Json(_))));
    }
}
