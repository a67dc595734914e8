//! Course-level depth of use from resource levels.
//!
//! Resource levels are (optionally) rescaled onto a common 0..=2 range,
//! combined pairwise by MAX or floored mean, and the resulting terms are
//! reduced with one more floored mean.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::ResourceLevels;
use crate::error::AggregateError;
use crate::model::{AggregationPlan, Beta, ResourceTaxonomy, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Low,
    Medium,
    High,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Low, Tier::Medium, Tier::High];

    pub fn from_value(value: u8) -> Tier {
        match value {
            0 => Tier::Low,
            1 => Tier::Medium,
            _ => Tier::High,
        }
    }

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            Tier::Low => "Low",
            Tier::Medium => "Medium",
            Tier::High => "High",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Floored arithmetic mean, computed as integer division of the sum.
pub fn zeta(values: &[u32]) -> Result<u32, AggregateError> {
    if values.is_empty() {
        return Err(AggregateError::Empty);
    }
    let sum: u64 = values.iter().map(|&v| v as u64).sum();
    Ok((sum / values.len() as u64) as u32)
}

pub fn pair_term(a: u8, b: u8, beta: Beta) -> u8 {
    match beta {
        Beta::Max => a.max(b),
        Beta::FlooredMean => ((a as u16 + b as u16) / 2) as u8,
    }
}

/// round(2 * level / max_level), with halves rounded up.
pub fn rescale(level: u8, max_level: u8) -> u8 {
    let (l, m) = (level as u32, max_level as u32);
    ((4 * l + m) / (2 * m)) as u8
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermValue {
    pub term: String,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CourseDou {
    pub value: u8,
    pub tier: Tier,
    pub term_values: Vec<TermValue>,
    /// Levels after rescaling (equal to the raw levels when normalization is off).
    pub scaled_levels: ResourceLevels,
}

pub fn course_dou(
    levels: &ResourceLevels,
    plan: &AggregationPlan,
    tax: &ResourceTaxonomy,
) -> Result<CourseDou, AggregateError> {
    let planned: BTreeSet<_> = plan.resources().into_iter().collect();
    if let Some((extra, _)) = levels.iter().find(|(id, _)| !planned.contains(id)) {
        return Err(AggregateError::UnexpectedResource(extra));
    }

    let mut scaled_levels = ResourceLevels::new();
    for &id in &planned {
        let level = levels.get(id).ok_or(AggregateError::MissingResource(id))?;
        let max = tax.max_level(id).ok_or(AggregateError::UnexpectedResource(id))?;
        if level > max {
            return Err(AggregateError::LevelOutOfRange { resource: id, level, max });
        }
        let scaled = if plan.normalize_levels() { rescale(level, max) } else { level };
        scaled_levels.set(id, scaled);
    }
    let scaled = |id| scaled_levels.get(id).expect("every planned resource was scaled");

    let term_values: Vec<TermValue> = plan
        .terms()
        .iter()
        .map(|term| {
            let value = match term {
                Term::Pair(p) => pair_term(scaled(p.a), scaled(p.b), p.beta),
                Term::Single { resource } => scaled(*resource),
            };
            TermValue { term: term.label(), value }
        })
        .collect();

    let raw: Vec<u32> = term_values.iter().map(|t| t.value as u32).collect();
    let value = zeta(&raw)?.min(2) as u8;
    Ok(CourseDou { value, tier: Tier::from_value(value), term_values, scaled_levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ResourceId::*;

    fn levels(values: [u8; 9]) -> ResourceLevels {
        // An, S, D, A_d, Q_d, A_s, Q_s, G, F
        crate::model::ResourceId::ALL.into_iter().zip(values).collect()
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(&[1, 2]), Ok(1));
        assert_eq!(zeta(&[2, 2, 2, 2, 2]), Ok(2));
        assert_eq!(zeta(&[1, 0, 2, 2, 1]), Ok(1));
        assert_eq!(zeta(&[]), Err(AggregateError::Empty));
    }

    #[test]
    fn pair_examples() {
        assert_eq!(pair_term(1, 0, Beta::Max), 1);
        assert_eq!(pair_term(1, 0, Beta::FlooredMean), 0);
        assert_eq!(pair_term(2, 2, Beta::Max), 2);
        assert_eq!(pair_term(2, 2, Beta::FlooredMean), 2);
    }

    #[test]
    fn rescale_binary_and_ternary() {
        assert_eq!(rescale(0, 1), 0);
        assert_eq!(rescale(1, 1), 2);
        for l in 0..=2 {
            assert_eq!(rescale(l, 2), l);
        }
    }

    #[test]
    fn all_zero_is_low() {
        let tax = ResourceTaxonomy::default();
        let plan = AggregationPlan::default_for(&tax).unwrap();
        let d = course_dou(&levels([0; 9]), &plan, &tax).unwrap();
        assert_eq!((d.value, d.tier), (0, Tier::Low));
    }

    #[test]
    fn saturated_vector_is_high() {
        let tax = ResourceTaxonomy::default();
        let plan = AggregationPlan::default_for(&tax).unwrap();
        let v: ResourceLevels = [
            (Announcements, 2),
            (Syllabus, 2),
            (Files, 1),
            (Discussions, 2),
            (Gradebook, 1),
            (AssignmentDelivery, 2),
            (AssignmentSubmission, 2),
            (QuizDelivery, 2),
            (QuizSubmission, 1),
        ]
        .into_iter()
        .collect();
        let d = course_dou(&v, &plan, &tax).unwrap();
        let terms: Vec<u8> = d.term_values.iter().map(|t| t.value).collect();
        assert_eq!(terms, vec![2, 2, 2, 2, 2]);
        assert_eq!(d.tier, Tier::High);

        // without rescaling the (Q_d, Q_s) pair caps at 1 and the total drops
        let raw = course_dou(&v, &plan.clone().with_normalization(false), &tax).unwrap();
        let terms: Vec<u8> = raw.term_values.iter().map(|t| t.value).collect();
        assert_eq!(terms, vec![2, 1, 2, 2, 2]);
        assert_eq!(raw.value, 1);
    }

    #[test]
    fn sparse_vector_is_low() {
        let tax = ResourceTaxonomy::default();
        let plan = AggregationPlan::default_for(&tax).unwrap();
        let v: ResourceLevels = [
            (Announcements, 0),
            (Syllabus, 1),
            (Files, 0),
            (Discussions, 0),
            (Gradebook, 0),
            (AssignmentDelivery, 1),
            (AssignmentSubmission, 1),
            (QuizDelivery, 0),
            (QuizSubmission, 0),
        ]
        .into_iter()
        .collect();
        let d = course_dou(&v, &plan, &tax).unwrap();
        // term order: (A_d,A_s), (Q_d,Q_s), (S,F), (D,G), An
        let terms: Vec<u8> = d.term_values.iter().map(|t| t.value).collect();
        assert_eq!(terms, vec![1, 0, 1, 0, 0]);
        assert_eq!((d.value, d.tier), (0, Tier::Low));
    }

    #[test]
    fn mismatched_vectors_rejected() {
        let tax = ResourceTaxonomy::default();
        let plan = AggregationPlan::default_for(&tax).unwrap();
        let mut v = levels([0; 9]);
        let short: ResourceLevels = v.iter().filter(|(id, _)| *id != Files).collect();
        assert_eq!(course_dou(&short, &plan, &tax), Err(AggregateError::MissingResource(Files)));
        v.set(Files, 2);
        assert!(matches!(course_dou(&v, &plan, &tax), Err(AggregateError::LevelOutOfRange { resource: Files, .. })));
    }
}
