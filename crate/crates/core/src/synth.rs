//! Seeded synthetic course populations.
//!
//! Everything is drawn from one ChaCha8 stream seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Uniforms are `(next_u64 >> 11) * 2^-53`
//! and normals come from Box-Muller (cosine branch only, two uniforms per
//! draw), so the output depends only on the ChaCha8 keystream and not on
//! any distribution code in a dependency.
//!
//! Draw order per course, courses in index order:
//!
//! 1. flags: undergraduate, stem, online, app_use, skills_training
//! 2. enrollment, viewership (lognormal), ta_count (Poisson), gpa, dfw_rate
//! 3. the course's engagement shift (one normal draw)
//! 4. one level per resource in canonical order, from the tilted distribution
//! 5. the activity details realizing those levels
//!
//! Request events for all courses are drawn afterwards, so changing
//! `requests_per_course` leaves the courses untouched.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::attribute::Attribute;
use crate::classifier::{
    Assignment, AssignmentSubmission as ASub, CourseActivityRecord, Delivery, Quiz, QuizSubmission as QSub,
    ResourceLevels, SyllabusPlacement,
};
use crate::error::SynthError;
use crate::hypotheses::Target;
use crate::ingest::{ActorRole, CourseMeta, RequestEvent};
use crate::model::ResourceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlagMarginals {
    pub undergraduate: f64,
    pub stem: f64,
    pub online: f64,
    pub app_use: f64,
    pub skills_training: f64,
}

impl Default for FlagMarginals {
    fn default() -> Self {
        FlagMarginals { undergraduate: 0.786, stem: 0.612, online: 0.312, app_use: 0.047, skills_training: 0.571 }
    }
}

/// Parameterized by the arithmetic mean and standard deviation of the
/// variable itself, not of its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampedNormal {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    /// Courses with this flag set get the shift; `None` shifts every course.
    #[serde(default)]
    pub attribute: Option<Attribute>,
    pub target: Target,
    /// Expected level change in the target's own units. For `overall` it is
    /// on the 0-2 DOU scale and spread over every resource.
    pub shift: f64,
}

const ENGAGEMENT_SD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_courses: usize,
    pub seed: u64,
    pub term: String,
    pub term_weeks: u32,
    pub term_start: NaiveDate,
    pub id_prefix: String,
    pub flags: FlagMarginals,
    pub enrollment: LogNormal,
    pub viewership: LogNormal,
    pub ta_mean: f64,
    pub gpa: ClampedNormal,
    pub dfw_rate: ClampedNormal,
    /// Categorical distribution over levels `0..=max` for each resource.
    pub levels: BTreeMap<ResourceId, Vec<f64>>,
    /// Standard deviation of a per-course shift, on the 0-2 DOU scale,
    /// applied to every resource. Makes resource levels co-vary the way a
    /// more or less engaged instructor would.
    pub engagement_sd: f64,
    pub effects: Vec<PlantedEffect>,
    pub requests_per_course: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        use ResourceId::*;
        let levels = [
            (Announcements, vec![0.40, 0.35, 0.25]),
            (Syllabus, vec![0.35, 0.40, 0.25]),
            (Discussions, vec![0.65, 0.25, 0.10]),
            (AssignmentDelivery, vec![0.45, 0.25, 0.30]),
            (QuizDelivery, vec![0.65, 0.15, 0.20]),
            (AssignmentSubmission, vec![0.50, 0.30, 0.20]),
            (QuizSubmission, vec![0.70, 0.30]),
            (Gradebook, vec![0.55, 0.45]),
            (Files, vec![0.30, 0.70]),
        ];
        SynthConfig {
            n_courses: 200,
            seed: 1,
            term: "SYN".into(),
            term_weeks: 15,
            term_start: NaiveDate::from_ymd_opt(2023, 1, 16).expect("valid date"),
            id_prefix: "C".into(),
            flags: FlagMarginals::default(),
            enrollment: LogNormal { mean: 51.0, sd: 102.0 },
            viewership: LogNormal { mean: 773.0, sd: 657.0 },
            ta_mean: 0.9,
            gpa: ClampedNormal { mean: 3.3, sd: 0.35, min: 0.0, max: 4.0 },
            dfw_rate: ClampedNormal { mean: 0.08, sd: 0.07, min: 0.0, max: 1.0 },
            levels: levels.into_iter().collect(),
            engagement_sd: ENGAGEMENT_SD,
            effects: Vec::new(),
            requests_per_course: 40,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::Invalid(msg));
        if self.n_courses == 0 {
            return Err(SynthError::NoCourses);
        }
        if self.term_weeks == 0 {
            return invalid("term_weeks must be at least 1".into());
        }
        let f = &self.flags;
        for (field, value) in [
            ("undergraduate", f.undergraduate),
            ("stem", f.stem),
            ("online", f.online),
            ("app_use", f.app_use),
            ("skills_training", f.skills_training),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Probability { field: field.into(), value });
            }
        }
        for (name, d) in [("enrollment", self.enrollment), ("viewership", self.viewership)] {
            if !(d.mean > 0.0 && d.mean.is_finite() && d.sd >= 0.0 && d.sd.is_finite()) {
                return invalid(format!("{name}: lognormal needs mean > 0 and finite sd >= 0"));
            }
        }
        if !(self.engagement_sd >= 0.0 && self.engagement_sd.is_finite()) {
            return invalid("engagement_sd must be finite and non-negative".into());
        }
        if !(self.ta_mean >= 0.0 && self.ta_mean.is_finite()) {
            return invalid("ta_mean must be finite and non-negative".into());
        }
        for (name, d) in [("gpa", self.gpa), ("dfw_rate", self.dfw_rate)] {
            if !(d.sd >= 0.0 && d.min <= d.max && [d.mean, d.sd, d.min, d.max].iter().all(|v| v.is_finite())) {
                return invalid(format!("{name}: needs finite parameters, sd >= 0, min <= max"));
            }
        }
        for r in ResourceId::ALL {
            let Some(dist) = self.levels.get(&r) else {
                return invalid(format!("no level distribution for {r}"));
            };
            if dist.len() != r.native_max_level() as usize + 1 {
                return invalid(format!(
                    "{r}: expected {} level probabilities, got {}",
                    r.native_max_level() + 1,
                    dist.len()
                ));
            }
            for (l, &p) in dist.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(SynthError::Probability { field: format!("levels.{r}[{l}]"), value: p });
                }
            }
            let total: f64 = dist.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return invalid(format!("{r}: level probabilities sum to {total}, not 1"));
            }
        }
        for e in &self.effects {
            if let Some(a) = e.attribute {
                if !a.is_flag() {
                    return Err(SynthError::UnknownAttribute(format!(
                        "{} (planted effects need a flag attribute)",
                        a.name()
                    )));
                }
            }
            if !e.shift.is_finite() {
                return invalid(format!("effect on {}: shift must be finite", e.target));
            }
        }
        Ok(())
    }
}

/// Moves probability mass one level up (or down for a negative shift) until
/// the expected level has changed by `shift`, or the distribution is pinned
/// at the end of the scale.
pub fn tilt(dist: &[f64], shift: f64) -> Vec<f64> {
    let mut p = dist.to_vec();
    let top = p.len() - 1;
    let up = shift > 0.0;
    let mut remaining = shift.abs();
    while remaining > 1e-12 {
        let edge = if up { p[top] } else { p[0] };
        let movable = 1.0 - edge;
        if movable <= 1e-15 {
            break;
        }
        // one step raises the mean by lambda * movable
        let lambda = (remaining / movable).min(1.0);
        let mut next = vec![0.0; p.len()];
        for (l, &mass) in p.iter().enumerate() {
            let dest = if up { (l + 1).min(top) } else { l.saturating_sub(1) };
            let moving = if dest == l { 0.0 } else { lambda * mass };
            next[l] += mass - moving;
            next[dest] += moving;
        }
        p = next;
        remaining -= lambda * movable;
    }
    p
}

struct Stream(ChaCha8Rng);

impl Stream {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn lognormal(&mut self, d: LogNormal) -> f64 {
        let sigma2 = (1.0 + (d.sd / d.mean).powi(2)).ln();
        let mu = d.mean.ln() - sigma2 / 2.0;
        (mu + sigma2.sqrt() * self.normal()).exp()
    }

    fn clamped(&mut self, d: ClampedNormal) -> f64 {
        (d.mean + d.sd * self.normal()).clamp(d.min, d.max)
    }

    fn poisson(&mut self, mean: f64) -> u32 {
        let limit = (-mean).exp();
        let mut k = 0;
        let mut prod = self.uniform();
        while prod > limit {
            k += 1;
            prod *= self.uniform();
        }
        k
    }

    /// Uniform integer in `lo..=hi`.
    fn range(&mut self, lo: u32, hi: u32) -> u32 {
        lo + ((self.uniform() * (hi - lo + 1) as f64) as u32).min(hi - lo)
    }

    fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let u = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // rounding left u at the very end; take the last non-zero weight
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPopulation {
    pub metas: Vec<CourseMeta>,
    pub activity: Vec<CourseActivityRecord>,
    /// The levels each record was built to classify as.
    pub levels: Vec<ResourceLevels>,
    pub requests: Vec<RequestEvent>,
}

fn level_distribution(config: &SynthConfig, meta: &CourseMeta, resource: ResourceId, engagement: f64) -> Vec<f64> {
    let max = resource.native_max_level() as f64;
    let mut dist = tilt(&config.levels[&resource], engagement * max / 2.0);
    for e in &config.effects {
        let applies = e.attribute.is_none_or(|a| a.flag(meta) == Some(true));
        let shift = match e.target {
            Target::Overall => e.shift * max / 2.0,
            Target::Resource(r) if r == resource => e.shift,
            Target::Resource(_) => continue,
        };
        if applies {
            dist = tilt(&dist, shift);
        }
    }
    dist
}

fn realize(rng: &mut Stream, id: String, weeks: u32, levels: &ResourceLevels) -> CourseActivityRecord {
    use ResourceId::*;
    let level = |r| levels.get(r).unwrap_or(0);
    let mut rec = CourseActivityRecord::empty(id, weeks);

    let n_assign = if level(AssignmentDelivery) == 0 && level(AssignmentSubmission) == 0 && rng.bernoulli(0.5) {
        0
    } else {
        rng.range(2, 10)
    };
    let delivery = [Delivery::NoneOrPlaceholder, Delivery::ExternalLinkOrArchive, Delivery::FullyHosted];
    let a_sub = [ASub::OfflineOrExternal, ASub::FileUpload, ASub::TextEntry];
    rec.assignments = vec![
        Assignment {
            delivery: delivery[level(AssignmentDelivery) as usize],
            submission: a_sub[level(AssignmentSubmission) as usize],
        };
        n_assign as usize
    ];
    let n_quiz =
        if level(QuizDelivery) == 0 && level(QuizSubmission) == 0 && rng.bernoulli(0.5) { 0 } else { rng.range(1, 8) };
    let q_sub = [QSub::OfflineOrExternal, QSub::WithinLms];
    rec.quizzes = vec![
        Quiz {
            delivery: delivery[level(QuizDelivery) as usize],
            submission: q_sub[level(QuizSubmission) as usize]
        };
        n_quiz as usize
    ];
    rec.instrument_count = n_assign + n_quiz;

    // strictly below every threshold of the weekly-or-instrument rule
    let below = if rec.instrument_count > 0 { weeks.min(rec.instrument_count) } else { weeks };
    match level(Announcements) {
        0 => {}
        1 => {
            rec.announcement_count = rng.range(1, weeks.max(2) - 1);
            rec.announcements_staff_authored = false;
        }
        _ => {
            rec.announcement_count = rng.range(weeks, 2 * weeks);
            rec.announcements_staff_authored = true;
        }
    }
    rec.syllabus_placement =
        [SyllabusPlacement::None, SyllabusPlacement::FileInFiles, SyllabusPlacement::EmbeddedInSyllabusTool]
            [level(Syllabus) as usize];
    match level(Discussions) {
        0 => {}
        1 => {
            rec.discussions_enabled = true;
            rec.discussion_post_count = rng.range(0, below - 1);
        }
        _ => {
            rec.discussions_enabled = true;
            rec.discussion_post_count = rng.range(weeks, 6 * weeks);
        }
    }
    rec.graded_fraction = if level(Gradebook) == 1 { 1.0 } else { (rng.uniform() * 90.0).round() / 100.0 };
    rec.file_count = if level(Files) == 1 { rng.range(1, 40) } else { 0 };
    rec
}

const CATEGORIES: [(&str, &str); 11] = [
    ("courses", "show"),
    ("files", "show"),
    ("folders", "show"),
    ("file_previews", "show"),
    ("announcements", "index"),
    ("discussion_topics", "show"),
    ("assignments", "show"),
    ("quizzes", "show"),
    ("grades", "show"),
    ("syllabus", "show"),
    ("external_tools", "show"),
];

fn request_weights(meta: &CourseMeta, levels: &ResourceLevels) -> [f64; 11] {
    use ResourceId::*;
    let l = |r| levels.get(r).unwrap_or(0) as f64;
    let files = l(Files);
    [
        2.0,
        1.0 + 4.0 * files,
        0.5 * files,
        files,
        l(Announcements),
        l(Discussions),
        l(AssignmentDelivery) + l(AssignmentSubmission),
        l(QuizDelivery) + l(QuizSubmission),
        2.0 * l(Gradebook),
        0.5 * l(Syllabus),
        if meta.app_use { 2.0 } else { 0.0 },
    ]
}

pub fn generate_population(config: &SynthConfig) -> Result<SynthPopulation, SynthError> {
    config.validate()?;
    let mut rng = Stream(ChaCha8Rng::seed_from_u64(config.seed));
    let width = config.n_courses.to_string().len().max(4);
    let n = config.n_courses;
    let (mut metas, mut activity, mut levels) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));

    for i in 0..n {
        let f = &config.flags;
        let course_id = format!("{}{:0width$}", config.id_prefix, i + 1);
        let mut meta = CourseMeta {
            course_id: course_id.clone(),
            term: config.term.clone(),
            undergraduate: rng.bernoulli(f.undergraduate),
            stem: rng.bernoulli(f.stem),
            online: rng.bernoulli(f.online),
            app_use: rng.bernoulli(f.app_use),
            skills_training: rng.bernoulli(f.skills_training),
            enrollment: 0,
            viewership: 0,
            ta_count: 0,
            gpa: 0.0,
            dfw_rate: 0.0,
            tags: Vec::new(),
        };
        meta.enrollment = (rng.lognormal(config.enrollment).round() as u32).max(1);
        meta.viewership = rng.lognormal(config.viewership).round() as u64;
        meta.ta_count = rng.poisson(config.ta_mean);
        meta.gpa = (rng.clamped(config.gpa) * 100.0).round() / 100.0;
        meta.dfw_rate = (rng.clamped(config.dfw_rate) * 1000.0).round() / 1000.0;

        let engagement = config.engagement_sd * rng.normal();
        let course_levels: ResourceLevels = ResourceId::ALL
            .into_iter()
            .map(|r| (r, rng.categorical(&level_distribution(config, &meta, r, engagement)) as u8))
            .collect();
        activity.push(realize(&mut rng, course_id, config.term_weeks, &course_levels));
        metas.push(meta);
        levels.push(course_levels);
    }

    let term_start = Utc.from_utc_datetime(&config.term_start.and_hms_opt(0, 0, 0).expect("midnight"));
    let term_seconds = config.term_weeks as f64 * 7.0 * 86_400.0;
    let mut requests = Vec::with_capacity(n * config.requests_per_course as usize);
    for (meta, course_levels) in metas.iter().zip(&levels) {
        let weights = request_weights(meta, course_levels);
        for _ in 0..config.requests_per_course {
            let (controller, action) = CATEGORIES[rng.categorical(&weights)];
            let offset = (rng.uniform() * term_seconds) as i64;
            let actor_role = if rng.bernoulli(0.9) { ActorRole::Student } else { ActorRole::Staff };
            requests.push(RequestEvent {
                timestamp: term_start + Duration::seconds(offset),
                course_id: meta.course_id.clone(),
                controller: controller.into(),
                action: action.into(),
                actor_role,
            });
        }
    }
    requests.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.course_id.cmp(&b.course_id)));

    Ok(SynthPopulation { metas, activity, levels, requests })
}
