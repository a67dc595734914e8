//! Declarative hypothesis registry and its execution over a scored
//! population.
//!
//! Binary-flag hypotheses compare DOU values between flag-true and
//! flag-false courses (t, F and H). Numeric hypotheses compare attribute
//! values across DOU levels (F and H only).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::attribute::Attribute;
use crate::error::HypothesisError;
use crate::model::ResourceId;
use crate::population::ScoredCourse;
use crate::stats::{
    anova_f, critical_value, kruskal_wallis, t_test, Df, Distribution, TTestVariant, TestResult, ALPHA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    BinaryFlag,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub id: String,
    pub attribute: Attribute,
    pub kind: HypothesisKind,
    #[serde(default)]
    pub direction_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Registry(Vec<HypothesisSpec>);

impl Default for Registry {
    fn default() -> Self {
        use Attribute::*;
        use HypothesisKind::*;
        let rows = [
            ("H1", Undergraduate, BinaryFlag, "undergraduate courses score higher"),
            ("H2", Stem, BinaryFlag, "STEM courses score higher"),
            ("H3", Online, BinaryFlag, "online-only courses score higher"),
            ("H4", AppUse, BinaryFlag, "third-party app use affects DOU"),
            ("H5", Enrollment, Numeric, "DOU linked to enrollment"),
            ("H6", Viewership, Numeric, "DOU linked to site pageviews"),
            ("H7", Gpa, Numeric, "DOU linked to average GPA"),
            ("H8", DfwRate, Numeric, "DOU linked to DFW rate"),
            ("H9", TaCount, Numeric, "DOU linked to number of teaching staff"),
            ("H10", SkillsTraining, BinaryFlag, "DOU linked to instructor skills training"),
        ];
        Registry(
            rows.into_iter()
                .map(|(id, attribute, kind, note)| HypothesisSpec {
                    id: id.to_string(),
                    attribute,
                    kind,
                    direction_note: note.to_string(),
                })
                .collect(),
        )
    }
}

impl Registry {
    pub fn new(specs: Vec<HypothesisSpec>) -> Result<Self, HypothesisError> {
        for s in &specs {
            let (ok, kind) = match s.kind {
                HypothesisKind::BinaryFlag => (s.attribute.is_flag(), "flag"),
                HypothesisKind::Numeric => (!s.attribute.is_flag(), "numeric"),
            };
            if !ok {
                return Err(HypothesisError::KindMismatch {
                    id: s.id.clone(),
                    attribute: s.attribute.name().to_string(),
                    kind,
                });
            }
        }
        Ok(Registry(specs))
    }

    pub fn specs(&self) -> &[HypothesisSpec] {
        &self.0
    }
}

/// What the DOU side of each test is: the course score or one resource level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Overall,
    Resource(ResourceId),
}

impl Target {
    fn value(self, course: &ScoredCourse) -> Option<u8> {
        match self {
            Target::Overall => Some(course.dou.value),
            Target::Resource(r) => course.levels.get(r),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Overall => f.write_str("overall"),
            Target::Resource(r) => write!(f, "{r}"),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Target {
    type Err = HypothesisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("overall") {
            return Ok(Target::Overall);
        }
        s.parse::<ResourceId>().map(Target::Resource).map_err(|_| HypothesisError::UnknownTarget(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Value(TestResult),
    /// The statistic does not apply to this hypothesis kind.
    NotApplicable,
    NotComputable {
        reason: String,
    },
}

impl Cell {
    pub fn result(&self) -> Option<&TestResult> {
        match self {
            Cell::Value(r) => Some(r),
            _ => None,
        }
    }

    fn from(r: Result<TestResult, crate::error::StatsError>) -> Cell {
        match r {
            Ok(v) => Cell::Value(v),
            Err(e) => Cell::NotComputable { reason: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRow {
    pub id: String,
    pub attribute: Attribute,
    pub kind: HypothesisKind,
    pub groups: Vec<GroupSummary>,
    pub t: Cell,
    #[serde(rename = "F")]
    pub f: Cell,
    #[serde(rename = "H")]
    pub h: Cell,
    /// F value at the 0.05 level for this row's degrees of freedom.
    pub f_crit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisTable {
    pub term: Option<String>,
    pub target: Target,
    pub rows: Vec<HypothesisRow>,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    // fixed summation order makes every cell independent of input order
    v.sort_by(f64::total_cmp);
    v
}

fn level_label(target: Target, level: u8) -> String {
    match target {
        Target::Overall => crate::aggregate::Tier::from_value(level).label().to_string(),
        Target::Resource(_) => format!("level {level}"),
    }
}

fn run_row(population: &[ScoredCourse], spec: &HypothesisSpec, target: Target) -> HypothesisRow {
    let not_computable = |reason: &str| Cell::NotComputable { reason: reason.to_string() };
    let (groups, summaries): (Vec<Vec<f64>>, Vec<GroupSummary>) = match spec.kind {
        HypothesisKind::BinaryFlag => {
            let (mut yes, mut no) = (Vec::new(), Vec::new());
            for c in population {
                let (Some(v), Some(flag)) = (target.value(c), spec.attribute.flag(&c.meta)) else {
                    continue;
                };
                if flag {
                    yes.push(v as f64)
                } else {
                    no.push(v as f64)
                }
            }
            let summaries = vec![
                GroupSummary { label: "true".into(), n: yes.len() },
                GroupSummary { label: "false".into(), n: no.len() },
            ];
            (vec![sorted(yes), sorted(no)], summaries)
        }
        HypothesisKind::Numeric => {
            let mut by_level: Vec<Vec<f64>> = vec![Vec::new(); 3];
            for c in population {
                let (Some(level), Some(x)) = (target.value(c), spec.attribute.numeric(&c.meta)) else {
                    continue;
                };
                by_level[level as usize].push(x);
            }
            let summaries = by_level
                .iter()
                .enumerate()
                .map(|(l, g)| GroupSummary { label: level_label(target, l as u8), n: g.len() })
                .collect();
            // levels nobody reached drop out; the remaining ones are compared
            let groups = by_level.into_iter().filter(|g| !g.is_empty()).map(sorted).collect();
            (groups, summaries)
        }
    };

    let mut row = HypothesisRow {
        id: spec.id.clone(),
        attribute: spec.attribute,
        kind: spec.kind,
        groups: summaries,
        t: Cell::NotApplicable,
        f: Cell::NotApplicable,
        h: Cell::NotApplicable,
        f_crit: None,
    };
    let enough = match spec.kind {
        HypothesisKind::BinaryFlag => groups.iter().all(|g| !g.is_empty()),
        HypothesisKind::Numeric => groups.len() >= 2,
    };
    if !enough {
        let reason = "empty group";
        if spec.kind == HypothesisKind::BinaryFlag {
            row.t = not_computable(reason);
        }
        row.f = not_computable(reason);
        row.h = not_computable(reason);
        return row;
    }
    if spec.kind == HypothesisKind::BinaryFlag {
        row.t = Cell::from(t_test(&groups[0], &groups[1], TTestVariant::Pooled));
    }
    row.f = Cell::from(anova_f(&groups));
    row.h = Cell::from(kruskal_wallis(&groups));
    if let Some(TestResult { df: df @ Df::Two(..), .. }) = row.f.result() {
        row.f_crit = critical_value(Distribution::FisherF, *df, ALPHA).ok();
    }
    row
}

pub fn run_hypotheses(
    population: &[ScoredCourse],
    registry: &Registry,
    target: Target,
) -> Result<HypothesisTable, HypothesisError> {
    if let Target::Resource(r) = target {
        if population.iter().any(|c| c.levels.get(r).is_none()) {
            return Err(HypothesisError::MissingTarget(r));
        }
    }
    let rows = registry.specs().iter().map(|spec| run_row(population, spec, target)).collect();
    Ok(HypothesisTable { term: None, target, rows })
}

/// One table per term, all built from the same registry.
pub fn run_snapshots(
    snapshots: &[(String, Vec<ScoredCourse>)],
    registry: &Registry,
    target: Target,
) -> Result<Vec<HypothesisTable>, HypothesisError> {
    snapshots
        .iter()
        .map(|(term, population)| {
            let mut table = run_hypotheses(population, registry, target)?;
            table.term = Some(term.clone());
            Ok(table)
        })
        .collect()
}
