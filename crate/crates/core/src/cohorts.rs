//! Cohort slicing over a scored population: Low/High discretization,
//! conjunctive cohort expressions, composition breakdowns, usage archetypes
//! and before/after deltas.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::{rescale, Tier};
use crate::attribute::Attribute;
use crate::error::{CohortError, IngestError};
use crate::ingest::{top_motifs, CompositionProfile, MotifShare};
use crate::model::ResourceId;
use crate::population::ScoredCourse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    Low,
    High,
}

impl Band {
    pub fn label(self) -> &'static str {
        match self {
            Band::Low => "Low",
            Band::High => "High",
        }
    }
}

/// How a numeric attribute is cut into Low/High. Values strictly above the
/// cut point are High.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Median,
    Quantile {
        q: f64,
    },
    Threshold {
        x: f64,
    },
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Linear interpolation between order statistics.
fn quantile_of(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn cut_point(values: &[f64], scheme: Scheme) -> Result<f64, CohortError> {
    if let Scheme::Threshold { x } = scheme {
        return Ok(x);
    }
    if values.is_empty() {
        return Err(CohortError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    match scheme {
        Scheme::Median => Ok(median_of(&sorted)),
        Scheme::Quantile { q } if q > 0.0 && q < 1.0 => Ok(quantile_of(&sorted, q)),
        Scheme::Quantile { q } => Err(CohortError::InvalidQuantile(q)),
        Scheme::Threshold { .. } => unreachable!(),
    }
}

pub fn discretize(values: &[f64], scheme: Scheme) -> Result<Vec<Band>, CohortError> {
    if values.is_empty() {
        return Err(CohortError::Empty);
    }
    let cut = cut_point(values, scheme)?;
    Ok(values.iter().map(|&v| if v > cut { Band::High } else { Band::Low }).collect())
}

/// Per-attribute discretization schemes. Attributes not listed use the median.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutConfig(pub BTreeMap<Attribute, Scheme>);

impl CutConfig {
    pub fn scheme(&self, attribute: Attribute) -> Scheme {
        self.0.get(&attribute).copied().unwrap_or_default()
    }

    /// Fixes a cut point for every numeric attribute over `population`.
    pub fn resolve(&self, population: &[ScoredCourse]) -> Result<Cuts, CohortError> {
        let mut points = BTreeMap::new();
        for attribute in Attribute::NUMERIC {
            let values: Vec<f64> = population.iter().filter_map(|c| attribute.numeric(&c.meta)).collect();
            points.insert(attribute, cut_point(&values, self.scheme(attribute))?);
        }
        Ok(Cuts(points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Cuts(BTreeMap<Attribute, f64>);

impl Cuts {
    pub fn point(&self, attribute: Attribute) -> Option<f64> {
        self.0.get(&attribute).copied()
    }

    pub fn band(&self, attribute: Attribute, course: &ScoredCourse) -> Option<Band> {
        let v = attribute.numeric(&course.meta)?;
        let cut = self.point(attribute)?;
        Some(if v > cut { Band::High } else { Band::Low })
    }

    /// Flags count as High when set, numerics by their cut.
    fn is_high(&self, attribute: Attribute, course: &ScoredCourse) -> bool {
        match attribute.flag(&course.meta) {
            Some(b) => b,
            None => self.band(attribute, course) == Some(Band::High),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    const ALL: [(&'static str, Comparator); 6] = [
        ("<=", Comparator::Le),
        (">=", Comparator::Ge),
        ("!=", Comparator::Ne),
        ("<", Comparator::Lt),
        (">", Comparator::Gt),
        ("=", Comparator::Eq),
    ];

    fn symbol(self) -> &'static str {
        Self::ALL.iter().find(|(_, c)| *c == self).map(|(s, _)| *s).unwrap()
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Comparator::Lt => a < b,
            Comparator::Le => a <= b,
            Comparator::Gt => a > b,
            Comparator::Ge => a >= b,
            Comparator::Eq => a == b,
            Comparator::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Flag(bool),
    Band(Band),
    Compare(Comparator, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub attribute: Attribute,
    pub predicate: Predicate,
}

impl Atom {
    pub fn matches(&self, course: &ScoredCourse, cuts: &Cuts) -> bool {
        match self.predicate {
            Predicate::Flag(want) => self.attribute.flag(&course.meta) == Some(want),
            Predicate::Band(want) => cuts.band(self.attribute, course) == Some(want),
            Predicate::Compare(op, x) => self.attribute.numeric(&course.meta).is_some_and(|v| op.holds(v, x)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.attribute.name();
        match self.predicate {
            Predicate::Flag(true) => f.write_str(name),
            Predicate::Flag(false) => write!(f, "!{name}"),
            Predicate::Band(b) => write!(f, "{name}:{}", b.label().to_ascii_lowercase()),
            Predicate::Compare(op, x) => write!(f, "{name}{}{x}", op.symbol()),
        }
    }
}

/// A non-empty conjunction of atoms.
///
/// Grammar, whitespace-insensitive:
///
/// ```text
/// cohort  := atom ("&" atom)*
/// atom    := "!"? flag | flag ":" ("yes" | "no") | numeric ":" ("low" | "high")
///          | numeric op number
/// op      := "<" | "<=" | ">" | ">=" | "=" | "!="
/// ```
///
/// `grad` / `graduate` mean `!undergraduate`. Attribute aliases such as `ta`,
/// `skills` and `views` are accepted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSpec {
    pub atoms: Vec<Atom>,
}

impl CohortSpec {
    pub fn matches(&self, course: &ScoredCourse, cuts: &Cuts) -> bool {
        self.atoms.iter().all(|a| a.matches(course, cuts))
    }

    pub fn and(mut self, atom: Atom) -> Self {
        self.atoms.push(atom);
        self
    }
}

impl fmt::Display for CohortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn parse_atom(raw: &str, expr: &str) -> Result<Atom, CohortError> {
    let parse_err = |reason: String| CohortError::Parse { expr: expr.to_string(), reason };
    let token = raw.trim();
    if token.is_empty() {
        return Err(parse_err("empty term".into()));
    }
    let attribute = |name: &str| -> Result<Attribute, CohortError> {
        name.trim().parse::<Attribute>().map_err(|e| CohortError::UnknownAttribute(e.0))
    };

    if let Some((name, op, value)) =
        Comparator::ALL.iter().find_map(|(sym, op)| token.split_once(sym).map(|(l, r)| (l, *op, r)))
    {
        // "!x" alone is a negated flag, not a comparison
        if !name.trim().is_empty() {
            let attr = attribute(name)?;
            if attr.is_flag() {
                return Err(parse_err(format!("'{}' is a flag and cannot be compared", attr.name())));
            }
            let x: f64 = value.trim().parse().map_err(|_| parse_err(format!("'{}' is not a number", value.trim())))?;
            return Ok(Atom { attribute: attr, predicate: Predicate::Compare(op, x) });
        }
    }

    let (negated, body) = match token.strip_prefix('!') {
        Some(rest) => (true, rest.trim()),
        None => (false, token),
    };
    let (name, qualifier) = match body.split_once(':') {
        Some((n, q)) => (n.trim(), Some(q.trim().to_ascii_lowercase())),
        None => (body, None),
    };
    let (attr, base) = match name.to_ascii_lowercase().as_str() {
        "grad" | "graduate" => (Attribute::Undergraduate, false),
        other => (attribute(other)?, true),
    };
    let predicate = if attr.is_flag() {
        let value = match qualifier.as_deref() {
            None => base,
            Some("yes" | "true" | "1") => base,
            Some("no" | "false" | "0") => !base,
            Some(q) => return Err(parse_err(format!("flag '{}' takes yes/no, got '{q}'", attr.name()))),
        };
        Predicate::Flag(value != negated)
    } else {
        let band = match qualifier.as_deref() {
            Some("low" | "lo") => Band::Low,
            Some("high" | "hi") => Band::High,
            Some(q) => return Err(parse_err(format!("'{}' takes low/high, got '{q}'", attr.name()))),
            None => {
                return Err(parse_err(format!(
                    "numeric attribute '{}' needs ':low', ':high' or a comparison",
                    attr.name()
                )))
            }
        };
        let band = match (negated, band) {
            (false, b) => b,
            (true, Band::Low) => Band::High,
            (true, Band::High) => Band::Low,
        };
        Predicate::Band(band)
    };
    Ok(Atom { attribute: attr, predicate })
}

impl FromStr for CohortSpec {
    type Err = CohortError;

    fn from_str(expr: &str) -> Result<Self, Self::Err> {
        let atoms = expr.split('&').map(|t| parse_atom(t, expr)).collect::<Result<Vec<_>, _>>()?;
        Ok(CohortSpec { atoms })
    }
}

fn percent(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeShare {
    pub attribute: Attribute,
    /// Percentage of courses with the flag set, or in the High band.
    pub percent: Option<f64>,
}

fn composition_of(members: &[&ScoredCourse], cuts: &Cuts) -> Vec<AttributeShare> {
    Attribute::FLAGS
        .into_iter()
        .chain(Attribute::NUMERIC)
        .map(|attribute| AttributeShare {
            attribute,
            percent: percent(members.iter().filter(|c| cuts.is_high(attribute, c)).count(), members.len()),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortReport {
    pub cohort: String,
    pub member_count: usize,
    pub low_count: usize,
    /// Undefined for an empty cohort.
    pub low_dou_percent: Option<f64>,
    pub composition: Vec<AttributeShare>,
}

pub fn cohort_frequency(population: &[ScoredCourse], spec: &CohortSpec, cuts: &Cuts) -> CohortReport {
    let members: Vec<&ScoredCourse> = population.iter().filter(|c| spec.matches(c, cuts)).collect();
    let low_count = members.iter().filter(|c| c.dou.tier == Tier::Low).count();
    CohortReport {
        cohort: spec.to_string(),
        member_count: members.len(),
        low_count,
        low_dou_percent: percent(low_count, members.len()),
        composition: composition_of(&members, cuts),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeRow {
    /// e.g. `undergraduate=yes` or `enrollment=High`.
    pub group: String,
    pub count: usize,
    /// Low, Medium, High percentages of the group.
    pub tier_percent: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericSummary {
    pub attribute: Attribute,
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1).
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TierRow {
    pub tier: Tier,
    pub count: usize,
    pub composition: Vec<AttributeShare>,
    pub numeric: Vec<NumericSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub population: usize,
    pub by_attribute: Vec<AttributeRow>,
    pub by_tier: Vec<TierRow>,
}

fn attribute_row(group: String, members: &[&ScoredCourse]) -> AttributeRow {
    let mut counts = [0usize; 3];
    for c in members {
        counts[c.dou.tier.value() as usize] += 1;
    }
    AttributeRow { group, count: members.len(), tier_percent: counts.map(|k| percent(k, members.len())) }
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

pub fn breakdown(population: &[ScoredCourse], cuts: &Cuts) -> Breakdown {
    let all: Vec<&ScoredCourse> = population.iter().collect();
    let mut by_attribute = vec![attribute_row("all".into(), &all)];
    for attribute in Attribute::FLAGS {
        for (want, word) in [(true, "yes"), (false, "no")] {
            let members: Vec<_> = all.iter().copied().filter(|c| attribute.flag(&c.meta) == Some(want)).collect();
            by_attribute.push(attribute_row(format!("{}={word}", attribute.name()), &members));
        }
    }
    for attribute in Attribute::NUMERIC {
        for band in [Band::Low, Band::High] {
            let members: Vec<_> = all.iter().copied().filter(|c| cuts.band(attribute, c) == Some(band)).collect();
            by_attribute.push(attribute_row(format!("{}={}", attribute.name(), band.label()), &members));
        }
    }

    let by_tier = Tier::ALL
        .into_iter()
        .map(|tier| {
            let members: Vec<_> = all.iter().copied().filter(|c| c.dou.tier == tier).collect();
            let numeric = Attribute::NUMERIC
                .into_iter()
                .map(|attribute| {
                    let values: Vec<f64> = members.iter().filter_map(|c| attribute.numeric(&c.meta)).collect();
                    let (mean, sd) = mean_sd(&values);
                    NumericSummary { attribute, mean, sd }
                })
                .collect();
            TierRow { tier, count: members.len(), composition: composition_of(&members, cuts), numeric }
        })
        .collect();
    Breakdown { population: population.len(), by_attribute, by_tier }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    JunkDrive,
    GradebookOnly,
    AccessPortal,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::JunkDrive, Archetype::GradebookOnly, Archetype::AccessPortal];

    pub fn label(self) -> &'static str {
        match self {
            Archetype::JunkDrive => "junk-drive",
            Archetype::GradebookOnly => "gradebook-only",
            Archetype::AccessPortal => "access-portal",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Archetype {
    type Err = CohortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()) || a.label().replace('-', "_") == s.trim())
            .ok_or_else(|| CohortError::UnknownAttribute(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchetypeThresholds {
    /// Minimum share of requests to file controllers for a junk drive.
    pub file_share: f64,
    pub file_controllers: BTreeSet<String>,
}

impl Default for ArchetypeThresholds {
    fn default() -> Self {
        ArchetypeThresholds {
            file_share: 0.6,
            file_controllers: ["files", "folders", "file_previews"].map(String::from).into(),
        }
    }
}

/// Archetype labels for one course. `which` limits the checks; junk-drive
/// needs a request profile.
pub fn detect_archetypes(
    course: &ScoredCourse,
    profile: Option<&CompositionProfile>,
    cuts: &Cuts,
    thresholds: &ArchetypeThresholds,
    which: &[Archetype],
) -> Result<BTreeSet<Archetype>, CohortError> {
    let low = course.dou.tier == Tier::Low;
    let views = cuts.band(Attribute::Viewership, course);
    let mut found = BTreeSet::new();
    for &archetype in which {
        let hit = match archetype {
            Archetype::JunkDrive => {
                let profile = profile.ok_or_else(|| CohortError::MissingProfile(course.meta.course_id.clone()))?;
                low && views == Some(Band::High)
                    && profile.controller_share(&thresholds.file_controllers) >= thresholds.file_share
            }
            Archetype::GradebookOnly => {
                course.levels.iter().all(|(r, l)| match r {
                    ResourceId::Gradebook => l == r.native_max_level(),
                    _ => l == 0,
                }) && course.levels.get(ResourceId::Gradebook).is_some()
            }
            Archetype::AccessPortal => low && course.meta.app_use && views == Some(Band::Low),
        };
        if hit {
            found.insert(archetype);
        }
    }
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchetypeRow {
    pub archetype: Archetype,
    pub count: usize,
    pub percent_of_population: Option<f64>,
    pub composition: Vec<AttributeShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CourseArchetypes {
    pub course_id: String,
    pub archetypes: Vec<Archetype>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchetypeReport {
    pub checked: Vec<Archetype>,
    pub rows: Vec<ArchetypeRow>,
    /// Only courses with at least one archetype, in population order.
    pub courses: Vec<CourseArchetypes>,
}

pub fn archetype_report(
    population: &[ScoredCourse],
    profiles: &HashMap<String, CompositionProfile>,
    cuts: &Cuts,
    thresholds: &ArchetypeThresholds,
    which: &[Archetype],
) -> Result<ArchetypeReport, CohortError> {
    let empty = CompositionProfile::default();
    let needs_profiles = which.contains(&Archetype::JunkDrive);
    let mut labelled = Vec::with_capacity(population.len());
    for course in population {
        // a course with no logged requests has an empty profile
        let profile = needs_profiles.then(|| profiles.get(&course.meta.course_id).unwrap_or(&empty));
        labelled.push(detect_archetypes(course, profile, cuts, thresholds, which)?);
    }
    let mut checked: Vec<Archetype> = which.to_vec();
    checked.sort();
    checked.dedup();
    let rows = checked
        .iter()
        .map(|&archetype| {
            let members: Vec<&ScoredCourse> =
                population.iter().zip(&labelled).filter(|(_, l)| l.contains(&archetype)).map(|(c, _)| c).collect();
            ArchetypeRow {
                archetype,
                count: members.len(),
                percent_of_population: percent(members.len(), population.len()),
                composition: composition_of(&members, cuts),
            }
        })
        .collect();
    let courses = population
        .iter()
        .zip(labelled)
        .filter(|(_, l)| !l.is_empty())
        .map(|(c, l)| CourseArchetypes { course_id: c.meta.course_id.clone(), archetypes: l.into_iter().collect() })
        .collect();
    Ok(ArchetypeReport { checked, rows, courses })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub tier: Tier,
    pub before: usize,
    pub after: usize,
    /// `100 (after - before) / before`; undefined when `before` is zero.
    pub percent_change: Option<f64>,
}

impl DeltaRow {
    pub fn new(tier: Tier, before: usize, after: usize) -> Self {
        let percent_change = (before > 0).then(|| 100.0 * (after as f64 - before as f64) / before as f64);
        DeltaRow { tier, before, after, percent_change }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceDelta {
    pub resource: ResourceId,
    pub rows: Vec<DeltaRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub overall: Vec<DeltaRow>,
    pub by_resource: Vec<ResourceDelta>,
}

fn tier_counts(tiers: impl Iterator<Item = Tier>) -> [usize; 3] {
    let mut counts = [0; 3];
    for t in tiers {
        counts[t.value() as usize] += 1;
    }
    counts
}

fn delta_rows(before: [usize; 3], after: [usize; 3]) -> Vec<DeltaRow> {
    Tier::ALL.into_iter().map(|t| DeltaRow::new(t, before[t.value() as usize], after[t.value() as usize])).collect()
}

/// Resource levels are put on the Low/Medium/High scale the same way the
/// aggregator normalizes them, so binary resources only fill Low and High.
fn resource_tier(course: &ScoredCourse, resource: ResourceId) -> Option<Tier> {
    let level = course.levels.get(resource)?;
    Some(Tier::from_value(rescale(level, resource.native_max_level())))
}

pub fn delta_report(before: &[ScoredCourse], after: &[ScoredCourse]) -> DeltaReport {
    let overall =
        delta_rows(tier_counts(before.iter().map(|c| c.dou.tier)), tier_counts(after.iter().map(|c| c.dou.tier)));
    let resources: BTreeSet<ResourceId> =
        before.iter().chain(after).flat_map(|c| c.levels.iter().map(|(r, _)| r)).collect();
    let by_resource = resources
        .into_iter()
        .map(|resource| ResourceDelta {
            resource,
            rows: delta_rows(
                tier_counts(before.iter().filter_map(|c| resource_tier(c, resource))),
                tier_counts(after.iter().filter_map(|c| resource_tier(c, resource))),
            ),
        })
        .collect();
    DeltaReport { overall, by_resource }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotifGroup {
    pub tier: Tier,
    pub courses: usize,
    pub motifs: Vec<MotifShare>,
}

/// The `k` most common request motifs within each DOU tier. Courses without
/// logged requests count towards their tier but show no motif.
pub fn motifs_by_tier(
    population: &[ScoredCourse],
    profiles: &HashMap<String, CompositionProfile>,
    k: usize,
) -> Result<Vec<MotifGroup>, IngestError> {
    Tier::ALL
        .into_iter()
        .map(|tier| {
            let group: Vec<CompositionProfile> = population
                .iter()
                .filter(|c| c.dou.tier == tier)
                .map(|c| profiles.get(&c.meta.course_id).cloned().unwrap_or_default())
                .collect();
            Ok(MotifGroup { tier, courses: group.len(), motifs: top_motifs(&group, k)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::CourseDou;
    use crate::classifier::ResourceLevels;
    use crate::ingest::CourseMeta;

    fn course(id: &str, tier: Tier, undergrad: bool, online: bool, ta: u32, views: u64) -> ScoredCourse {
        ScoredCourse {
            meta: CourseMeta {
                course_id: id.into(),
                term: "T".into(),
                undergraduate: undergrad,
                stem: true,
                online,
                app_use: false,
                skills_training: false,
                enrollment: 30,
                viewership: views,
                ta_count: ta,
                gpa: 3.0,
                dfw_rate: 0.1,
                tags: vec![],
            },
            levels: ResourceId::ALL.into_iter().map(|r| (r, tier.value().min(r.native_max_level()))).collect(),
            dou: CourseDou { value: tier.value(), tier, term_values: vec![], scaled_levels: ResourceLevels::new() },
        }
    }

    #[test]
    fn discretize_examples() {
        use Band::*;
        assert_eq!(discretize(&[1.0, 2.0, 3.0, 4.0], Scheme::Median).unwrap(), [Low, Low, High, High]);
        assert_eq!(discretize(&[5.0; 4], Scheme::Median).unwrap(), [Low; 4]);
        assert_eq!(discretize(&[10.0, 50.0], Scheme::Threshold { x: 40.0 }).unwrap(), [Low, High]);
        assert_eq!(
            discretize(&[1.0, 2.0, 3.0, 4.0, 5.0], Scheme::Quantile { q: 0.75 }).unwrap(),
            [Low, Low, Low, Low, High]
        );
        assert!(matches!(discretize(&[], Scheme::Median), Err(CohortError::Empty)));
        assert!(matches!(discretize(&[1.0], Scheme::Quantile { q: 1.0 }), Err(CohortError::InvalidQuantile(_))));
    }

    #[test]
    fn parse_cohort_expressions() {
        let spec: CohortSpec = "grad & online & ta:low & !skills".parse().unwrap();
        assert_eq!(spec.to_string(), "!undergraduate & online & ta_count:low & !skills_training");
        let spec: CohortSpec = " enrollment >= 40 & stem:no ".parse().unwrap();
        assert_eq!(spec.to_string(), "enrollment>=40 & !stem");
        assert_eq!(spec.to_string().parse::<CohortSpec>().unwrap(), spec);

        assert!(matches!("planet".parse::<CohortSpec>(), Err(CohortError::UnknownAttribute(_))));
        for bad in ["", "online &", "gpa", "online > 1", "gpa > x", "ta:medium"] {
            assert!(matches!(bad.parse::<CohortSpec>(), Err(CohortError::Parse { .. })), "{bad}");
        }
    }

    #[test]
    fn frequency_counts() {
        let pop = vec![
            course("a", Tier::Low, false, true, 0, 10),
            course("b", Tier::Low, false, true, 0, 20),
            course("c", Tier::High, false, true, 0, 30),
            course("d", Tier::Medium, false, true, 0, 40),
            course("e", Tier::High, true, false, 3, 50),
        ];
        let cuts = CutConfig::default().resolve(&pop).unwrap();
        let grad_online: CohortSpec = "grad & online".parse().unwrap();
        let r = cohort_frequency(&pop, &grad_online, &cuts);
        assert_eq!((r.member_count, r.low_count, r.low_dou_percent), (4, 2, Some(50.0)));

        let nobody = cohort_frequency(&pop, &"grad & !online".parse().unwrap(), &cuts);
        assert_eq!((nobody.member_count, nobody.low_dou_percent), (0, None));

        // a tautology reduces to the population share
        let all = cohort_frequency(&pop, &"ta >= 0".parse().unwrap(), &cuts);
        assert_eq!(all.low_dou_percent, Some(40.0));

        // viewership median is 30, so 40 and 50 are High
        let views = r.composition.iter().find(|s| s.attribute == Attribute::Viewership).unwrap();
        assert_eq!(views.percent, Some(25.0));
    }

    #[test]
    fn breakdown_single_course() {
        let pop = vec![course("a", Tier::High, true, false, 1, 5)];
        let cuts = CutConfig::default().resolve(&pop).unwrap();
        let b = breakdown(&pop, &cuts);
        let high = &b.by_tier[2];
        assert_eq!(high.count, 1);
        let stem = high.composition.iter().find(|s| s.attribute == Attribute::Stem).unwrap();
        assert_eq!(stem.percent, Some(100.0));
        assert_eq!(b.by_tier[0].composition[0].percent, None);
        assert_eq!(high.numeric[0].sd, None);
        assert_eq!(b.by_attribute[0].tier_percent, [Some(0.0), Some(0.0), Some(100.0)]);
    }

    #[test]
    fn breakdown_hand_counted() {
        // 10 courses: tiers L L L L M M M H H H, undergrad on courses 0,1,4,7,8
        let tiers = [
            Tier::Low,
            Tier::Low,
            Tier::Low,
            Tier::Low,
            Tier::Medium,
            Tier::Medium,
            Tier::Medium,
            Tier::High,
            Tier::High,
            Tier::High,
        ];
        let undergrad = [true, true, false, false, true, false, false, true, true, false];
        let pop: Vec<_> = (0..10)
            .map(|i| course(&format!("c{i}"), tiers[i], undergrad[i], i % 2 == 0, i as u32 % 3, 10 * i as u64))
            .collect();
        let cuts = CutConfig::default().resolve(&pop).unwrap();
        let b = breakdown(&pop, &cuts);
        let ug = b.by_attribute.iter().find(|r| r.group == "undergraduate=yes").unwrap();
        assert_eq!(ug.count, 5);
        assert_eq!(ug.tier_percent, [Some(40.0), Some(20.0), Some(40.0)]);
        let grad = b.by_attribute.iter().find(|r| r.group == "undergraduate=no").unwrap();
        assert_eq!(grad.tier_percent, [Some(40.0), Some(40.0), Some(20.0)]);
        // online = even index: low has 0,2 -> 50%; high has 8 -> 33.3%
        let online = |row: &TierRow| row.composition.iter().find(|s| s.attribute == Attribute::Online).unwrap().percent;
        assert_eq!(online(&b.by_tier[0]), Some(50.0));
        assert!((online(&b.by_tier[2]).unwrap() - 100.0 / 3.0).abs() < 1e-12);
        // viewership median 45: High = courses 5..9
        let views = b.by_attribute.iter().find(|r| r.group == "viewership=High").unwrap();
        assert_eq!(views.count, 5);
        // low-tier TA counts 0,1,2,0: mean 0.75, sd sqrt(0.9167)
        let ta = b.by_tier[0].numeric.iter().find(|n| n.attribute == Attribute::TaCount).unwrap();
        assert_eq!(ta.mean, Some(0.75));
        assert!((ta.sd.unwrap() - (2.75f64 / 3.0).sqrt()).abs() < 1e-12);
        for row in &b.by_attribute {
            if row.count > 0 {
                let total: f64 = row.tier_percent.iter().map(|p| p.unwrap()).sum();
                assert!((total - 100.0).abs() < 0.1);
            }
        }
    }

    #[test]
    fn archetypes() {
        let mut pop = vec![
            course("junk", Tier::Low, true, false, 0, 900),
            course("high", Tier::High, true, false, 0, 900),
            course("portal", Tier::Low, true, false, 0, 5),
            course("mid", Tier::Medium, true, false, 0, 100),
        ];
        pop[2].meta.app_use = true;
        let cuts = CutConfig::default().resolve(&pop).unwrap();
        let th = ArchetypeThresholds::default();
        let profile = CompositionProfile {
            shares: [("files::show".to_string(), 0.95), ("courses::show".to_string(), 0.05)].into(),
            total_events: 100,
        };
        let got = detect_archetypes(&pop[0], Some(&profile), &cuts, &th, &Archetype::ALL).unwrap();
        assert_eq!(got, [Archetype::JunkDrive].into());
        assert!(detect_archetypes(&pop[1], Some(&profile), &cuts, &th, &Archetype::ALL).unwrap().is_empty());
        assert_eq!(
            detect_archetypes(&pop[2], None, &cuts, &th, &[Archetype::AccessPortal, Archetype::GradebookOnly]).unwrap(),
            [Archetype::AccessPortal].into()
        );
        assert!(matches!(
            detect_archetypes(&pop[0], None, &cuts, &th, &[Archetype::JunkDrive]),
            Err(CohortError::MissingProfile(_))
        ));

        let mut gb = course("gb", Tier::Low, true, false, 0, 100);
        gb.levels = ResourceId::ALL.into_iter().map(|r| (r, (r == ResourceId::Gradebook) as u8)).collect();
        assert_eq!(
            detect_archetypes(&gb, None, &cuts, &th, &[Archetype::GradebookOnly]).unwrap(),
            [Archetype::GradebookOnly].into()
        );

        let profiles: HashMap<_, _> = [("junk".to_string(), profile)].into();
        let report = archetype_report(&pop, &profiles, &cuts, &th, &Archetype::ALL).unwrap();
        assert_eq!(report.rows.iter().map(|r| r.count).collect::<Vec<_>>(), [1, 0, 1]);
        assert_eq!(report.courses.len(), 2);
        let views = report.rows[0].composition.iter().find(|s| s.attribute == Attribute::Viewership).unwrap();
        assert_eq!(views.percent, Some(100.0));
    }

    #[test]
    fn motif_groups() {
        let pop = vec![course("a", Tier::Low, true, false, 0, 1), course("b", Tier::Low, true, false, 0, 2)];
        let profile = CompositionProfile { shares: [("files::show".to_string(), 1.0)].into(), total_events: 3 };
        let profiles: HashMap<_, _> = [("a".to_string(), profile)].into();
        let groups = motifs_by_tier(&pop, &profiles, 5).unwrap();
        assert_eq!(groups[0].courses, 2);
        assert_eq!(groups[0].motifs[0].percent, 50.0);
        assert!(groups[2].motifs.is_empty());
    }

    #[test]
    fn delta_rows_match_reference_counts() {
        let round2 = |x: f64| (x * 100.0).round() / 100.0;
        assert_eq!(round2(DeltaRow::new(Tier::High, 673, 1004).percent_change.unwrap()), 49.18);
        assert_eq!(round2(DeltaRow::new(Tier::Medium, 2365, 2288).percent_change.unwrap()), -3.26);
        assert_eq!(round2(DeltaRow::new(Tier::Low, 3932, 3667).percent_change.unwrap()), -6.74);
        assert_eq!(DeltaRow::new(Tier::Low, 0, 5).percent_change, None);
    }

    #[test]
    fn delta_of_identical_snapshots() {
        let pop = vec![course("a", Tier::Low, true, false, 0, 1), course("b", Tier::High, true, false, 0, 2)];
        let d = delta_report(&pop, &pop);
        for row in d.overall.iter().chain(d.by_resource.iter().flat_map(|r| &r.rows)) {
            assert!(row.percent_change.is_none_or(|p| p == 0.0));
        }
        let gradebook = d.by_resource.iter().find(|r| r.resource == ResourceId::Gradebook).unwrap();
        assert_eq!((gradebook.rows[0].before, gradebook.rows[1].before, gradebook.rows[2].before), (1, 0, 1));
        assert_eq!(gradebook.rows[1].percent_change, None);
    }
}
