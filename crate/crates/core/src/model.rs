//! The measurement model: which LMS resources are scored, how many levels
//! each one has, and how resource levels are grouped into pair and single
//! terms before the course-level aggregate is taken.
//!
//! Both halves ship with built-in defaults ([`ResourceTaxonomy::default`],
//! [`AggregationPlan::default_for`]) and can be overridden from a JSON config
//! file (see [`crate::config`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Violation};

/// One of the nine LMS resources the classifier knows how to score.
///
/// The declaration order is the canonical column order used in every report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ResourceId {
    #[serde(rename = "An")]
    Announcements,
    #[serde(rename = "S")]
    Syllabus,
    #[serde(rename = "D")]
    Discussions,
    #[serde(rename = "A_d")]
    AssignmentDelivery,
    #[serde(rename = "Q_d")]
    QuizDelivery,
    #[serde(rename = "A_s")]
    AssignmentSubmission,
    #[serde(rename = "Q_s")]
    QuizSubmission,
    #[serde(rename = "G")]
    Gradebook,
    #[serde(rename = "F")]
    Files,
}

impl ResourceId {
    pub const ALL: [ResourceId; 9] = [
        ResourceId::Announcements,
        ResourceId::Syllabus,
        ResourceId::Discussions,
        ResourceId::AssignmentDelivery,
        ResourceId::QuizDelivery,
        ResourceId::AssignmentSubmission,
        ResourceId::QuizSubmission,
        ResourceId::Gradebook,
        ResourceId::Files,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ResourceId::Announcements => "An",
            ResourceId::Syllabus => "S",
            ResourceId::Discussions => "D",
            ResourceId::AssignmentDelivery => "A_d",
            ResourceId::QuizDelivery => "Q_d",
            ResourceId::AssignmentSubmission => "A_s",
            ResourceId::QuizSubmission => "Q_s",
            ResourceId::Gradebook => "G",
            ResourceId::Files => "F",
        }
    }

    /// Highest level the built-in classification rule can emit.
    pub fn native_max_level(self) -> u8 {
        match self {
            ResourceId::QuizSubmission | ResourceId::Gradebook | ResourceId::Files => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ResourceId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ResourceId::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownResource(s.to_string()))
    }
}

/// Unvalidated taxonomy entry as it appears in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResourceSpec {
    pub id: String,
    pub max_level: i64,
    #[serde(default)]
    pub level_descriptions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTaxonomy {
    pub resources: Vec<RawResourceSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceSpec {
    pub id: ResourceId,
    pub max_level: u8,
    pub level_descriptions: Vec<String>,
}

/// A validated resource taxonomy. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceTaxonomy {
    resources: Vec<ResourceSpec>,
}

const DEFAULT_TAXONOMY: [(ResourceId, &[&str]); 9] = [
    (ResourceId::Announcements, &["None", "Placeholder announcements", "At least one per week or course instrument"]),
    (ResourceId::Syllabus, &["None", "Syllabus under Files", "File previewed/embedded under Syllabus"]),
    (
        ResourceId::Discussions,
        &[
            "Discussions disabled",
            "No discussion activity",
            "One or more live discussion threads (at least one post per week or course instrument)",
        ],
    ),
    (
        ResourceId::AssignmentDelivery,
        &[
            "No assignments on LMS or placeholders",
            "Link to DOC, ZIP or 3rd-party app",
            "Assignments fully hosted on LMS",
        ],
    ),
    (
        ResourceId::QuizDelivery,
        &["No quizzes on LMS or placeholders", "Link to DOC, ZIP or 3rd-party app", "Quizzes fully hosted on LMS"],
    ),
    (
        ResourceId::AssignmentSubmission,
        &["No file upload, likely paper or 3rd-party app", "LMS file upload", "LMS text entry"],
    ),
    (ResourceId::QuizSubmission, &["No online submission, likely paper or 3rd-party app", "Submission within LMS"]),
    (ResourceId::Gradebook, &["No grading activity in LMS", "Comprehensive grading for all assessments"]),
    (ResourceId::Files, &["No files", "Course resources under Files"]),
];

impl Default for ResourceTaxonomy {
    fn default() -> Self {
        let resources = DEFAULT_TAXONOMY
            .iter()
            .map(|(id, descs)| ResourceSpec {
                id: *id,
                max_level: (descs.len() - 1) as u8,
                level_descriptions: descs.iter().map(|d| d.to_string()).collect(),
            })
            .collect();
        ResourceTaxonomy { resources }
    }
}

impl RawTaxonomy {
    pub fn builtin() -> Self {
        let tax = ResourceTaxonomy::default();
        RawTaxonomy {
            resources: tax
                .resources
                .iter()
                .map(|r| RawResourceSpec {
                    id: r.id.code().to_string(),
                    max_level: r.max_level as i64,
                    level_descriptions: r.level_descriptions.clone(),
                })
                .collect(),
        }
    }
}

impl ResourceTaxonomy {
    /// Checks a raw taxonomy and collects every violation found.
    pub fn validate(raw: &RawTaxonomy) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        let mut resources = Vec::new();

        for spec in &raw.resources {
            let id = match spec.id.parse::<ResourceId>() {
                Ok(id) => id,
                Err(_) => {
                    violations.push(Violation::UnknownResource(spec.id.clone()));
                    continue;
                }
            };
            if !seen.insert(id) {
                violations.push(Violation::DuplicateResource(id.code().to_string()));
                continue;
            }
            if !(1..=2).contains(&spec.max_level) {
                violations
                    .push(Violation::MaxLevelOutOfRange { resource: id.code().to_string(), max_level: spec.max_level });
                continue;
            }
            let max_level = spec.max_level as u8;
            // classification rules are hand-coded per resource, so the level
            // range has to agree with what the rule can produce
            if max_level != id.native_max_level() {
                violations.push(Violation::MaxLevelMismatch {
                    resource: id.code().to_string(),
                    max_level: spec.max_level,
                    expected: id.native_max_level(),
                });
            }
            for level in 0..=max_level as usize {
                let present = spec.level_descriptions.get(level).is_some_and(|d| !d.trim().is_empty());
                if !present {
                    violations
                        .push(Violation::MissingDescription { resource: id.code().to_string(), level: level as u8 });
                }
            }
            resources.push(ResourceSpec { id, max_level, level_descriptions: spec.level_descriptions.clone() });
        }

        if resources.is_empty() && violations.is_empty() {
            violations.push(Violation::EmptyTaxonomy);
        }
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        resources.sort_by_key(|r| r.id);
        Ok(ResourceTaxonomy { resources })
    }

    pub fn resources(&self) -> &[ResourceSpec] {
        &self.resources
    }

    pub fn ids(&self) -> impl Iterator<Item = ResourceId> + '_ {
        self.resources.iter().map(|r| r.id)
    }

    pub fn contains(&self, id: ResourceId) -> bool {
        self.resources.iter().any(|r| r.id == id)
    }

    pub fn max_level(&self, id: ResourceId) -> Option<u8> {
        self.resources.iter().find(|r| r.id == id).map(|r| r.max_level)
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }
}

/// How the two members of a pair term are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Beta {
    /// β = 0: the larger of the two levels.
    Max,
    /// β = 1: the floored mean of the two levels.
    FlooredMean,
}

impl Beta {
    pub fn as_u8(self) -> u8 {
        match self {
            Beta::Max => 0,
            Beta::FlooredMean => 1,
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPairTerm {
    pub a: String,
    pub b: String,
    pub beta: f64,
}

fn default_true() -> bool {
    true
}

/// Unvalidated aggregation plan as read from config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPlan {
    #[serde(default)]
    pub pair_terms: Vec<RawPairTerm>,
    #[serde(default)]
    pub single_terms: Vec<String>,
    #[serde(default = "default_true")]
    pub normalize_levels: bool,
}

impl RawPlan {
    /// The built-in configuration: (A_d, A_s) and (Q_d, Q_s) averaged,
    /// (S, F) and (D, G) maxed, announcements on their own.
    pub fn builtin() -> Self {
        let pair = |a: &str, b: &str, beta: f64| RawPairTerm { a: a.to_string(), b: b.to_string(), beta };
        RawPlan {
            pair_terms: vec![
                pair("A_d", "A_s", 1.0),
                pair("Q_d", "Q_s", 1.0),
                pair("S", "F", 0.0),
                pair("D", "G", 0.0),
            ],
            single_terms: vec!["An".to_string()],
            normalize_levels: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairTerm {
    pub a: ResourceId,
    pub b: ResourceId,
    pub beta: Beta,
}

/// One argument of the course-level floored mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Pair(PairTerm),
    Single { resource: ResourceId },
}

impl Term {
    pub fn label(&self) -> String {
        match self {
            Term::Pair(p) => format!("P({},{};b={})", p.a, p.b, p.beta.as_u8()),
            Term::Single { resource } => format!("S({resource})"),
        }
    }
}

/// A plan that has been checked against a taxonomy: every resource sits in
/// exactly one term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregationPlan {
    pair_terms: Vec<PairTerm>,
    single_terms: Vec<ResourceId>,
    normalize_levels: bool,
}

impl AggregationPlan {
    pub fn default_for(tax: &ResourceTaxonomy) -> Result<Self, ModelError> {
        Self::validate(&RawPlan::builtin(), tax)
    }

    pub fn validate(raw: &RawPlan, tax: &ResourceTaxonomy) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        let mut slots: BTreeMap<ResourceId, usize> = BTreeMap::new();

        let mut resolve = |name: &str, violations: &mut Vec<Violation>| -> Option<ResourceId> {
            match name.parse::<ResourceId>() {
                Ok(id) if tax.contains(id) => {
                    *slots.entry(id).or_default() += 1;
                    Some(id)
                }
                _ => {
                    violations.push(Violation::UnknownResource(name.to_string()));
                    None
                }
            }
        };

        let mut pair_terms = Vec::new();
        for term in &raw.pair_terms {
            let a = resolve(&term.a, &mut violations);
            let b = resolve(&term.b, &mut violations);
            let beta = if term.beta == 0.0 {
                Some(Beta::Max)
            } else if term.beta == 1.0 {
                Some(Beta::FlooredMean)
            } else {
                violations.push(Violation::InvalidBeta { a: term.a.clone(), b: term.b.clone(), beta: term.beta });
                None
            };
            if let (Some(a), Some(b), Some(beta)) = (a, b, beta) {
                pair_terms.push(PairTerm { a, b, beta });
            }
        }
        let mut single_terms = Vec::new();
        for name in &raw.single_terms {
            if let Some(id) = resolve(name, &mut violations) {
                single_terms.push(id);
            }
        }

        for id in tax.ids() {
            match slots.get(&id).copied().unwrap_or(0) {
                0 => violations.push(Violation::Unassigned(id.code().to_string())),
                1 => {}
                n => violations.push(Violation::AssignedMoreThanOnce { resource: id.code().to_string(), times: n }),
            }
        }
        if pair_terms.is_empty() && single_terms.is_empty() && violations.is_empty() {
            violations.push(Violation::EmptyPlan);
        }
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        Ok(AggregationPlan { pair_terms, single_terms, normalize_levels: raw.normalize_levels })
    }

    pub fn pair_terms(&self) -> &[PairTerm] {
        &self.pair_terms
    }

    pub fn single_terms(&self) -> &[ResourceId] {
        &self.single_terms
    }

    pub fn normalize_levels(&self) -> bool {
        self.normalize_levels
    }

    /// Same plan with the rescaling switch flipped.
    pub fn with_normalization(mut self, on: bool) -> Self {
        self.normalize_levels = on;
        self
    }

    /// Pair terms first, then singles, in declaration order.
    pub fn terms(&self) -> Vec<Term> {
        self.pair_terms
            .iter()
            .copied()
            .map(Term::Pair)
            .chain(self.single_terms.iter().map(|&resource| Term::Single { resource }))
            .collect()
    }

    /// Every resource referenced by the plan, with multiplicity.
    pub fn resources(&self) -> Vec<ResourceId> {
        self.pair_terms.iter().flat_map(|p| [p.a, p.b]).chain(self.single_terms.iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(err: ModelError) -> Vec<Violation> {
        match err {
            ModelError::Invalid(v) => v,
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn builtin_taxonomy_matches_table() {
        let tax = ResourceTaxonomy::validate(&RawTaxonomy::builtin()).unwrap();
        assert_eq!(tax, ResourceTaxonomy::default());
        assert_eq!(tax.len(), 9);
        for id in [ResourceId::QuizSubmission, ResourceId::Gradebook, ResourceId::Files] {
            assert_eq!(tax.max_level(id), Some(1));
        }
        let qs = &tax.resources()[6];
        assert_eq!(qs.id, ResourceId::QuizSubmission);
        assert_eq!(qs.level_descriptions[1], "Submission within LMS");
    }

    #[test]
    fn duplicate_id_is_named() {
        let mut raw = RawTaxonomy::builtin();
        raw.resources.push(raw.resources[0].clone());
        let v = violations(ResourceTaxonomy::validate(&raw).unwrap_err());
        assert_eq!(v, vec![Violation::DuplicateResource("An".into())]);
        assert!(v[0].to_string().contains("An"));
    }

    #[test]
    fn max_level_three_is_range_error() {
        let mut raw = RawTaxonomy::builtin();
        raw.resources[1].max_level = 3;
        let v = violations(ResourceTaxonomy::validate(&raw).unwrap_err());
        assert!(matches!(v[0], Violation::MaxLevelOutOfRange { max_level: 3, .. }));
    }

    #[test]
    fn missing_description_reported() {
        let mut raw = RawTaxonomy::builtin();
        raw.resources[2].level_descriptions.pop();
        let v = violations(ResourceTaxonomy::validate(&raw).unwrap_err());
        assert_eq!(v, vec![Violation::MissingDescription { resource: "D".into(), level: 2 }]);
    }

    #[test]
    fn default_plan_validates() {
        let tax = ResourceTaxonomy::default();
        let plan = AggregationPlan::default_for(&tax).unwrap();
        assert_eq!(plan.pair_terms().len(), 4);
        assert_eq!(plan.single_terms(), &[ResourceId::Announcements]);
        assert_eq!(plan.pair_terms()[0].beta, Beta::FlooredMean);
        assert_eq!(plan.pair_terms()[2].beta, Beta::Max);
        assert!(plan.normalize_levels());
    }

    #[test]
    fn plan_omitting_gradebook() {
        let tax = ResourceTaxonomy::default();
        let mut raw = RawPlan::builtin();
        raw.pair_terms.pop();
        raw.single_terms.push("D".into());
        let v = violations(AggregationPlan::validate(&raw, &tax).unwrap_err());
        assert_eq!(v, vec![Violation::Unassigned("G".into())]);
        assert_eq!(v[0].to_string(), "G unassigned");
    }

    #[test]
    fn plan_with_resource_twice() {
        let tax = ResourceTaxonomy::default();
        let mut raw = RawPlan::builtin();
        raw.pair_terms[2].a = "An".into();
        raw.single_terms.push("S".into());
        let v = violations(AggregationPlan::validate(&raw, &tax).unwrap_err());
        assert!(v.contains(&Violation::AssignedMoreThanOnce { resource: "An".into(), times: 2 }));
    }

    #[test]
    fn fractional_beta_rejected() {
        let tax = ResourceTaxonomy::default();
        let mut raw = RawPlan::builtin();
        raw.pair_terms[0].beta = 0.5;
        let v = violations(AggregationPlan::validate(&raw, &tax).unwrap_err());
        assert!(matches!(v[0], Violation::InvalidBeta { .. }));
    }

    #[test]
    fn unknown_resource_in_term() {
        let tax = ResourceTaxonomy::default();
        let mut raw = RawPlan::builtin();
        raw.single_terms.push("X".into());
        let v = violations(AggregationPlan::validate(&raw, &tax).unwrap_err());
        assert_eq!(v, vec![Violation::UnknownResource("X".into())]);
    }

    #[test]
    fn resource_codes_round_trip() {
        for id in ResourceId::ALL {
            assert_eq!(id.code().parse::<ResourceId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.code()));
        }
    }
}
