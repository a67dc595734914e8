//! CSV ingestion for course tables, instrument tables and page-request logs,
//! plus the request-log aggregates (weekly viewership, request composition,
//! motifs).
//!
//! Schema v1 (header names are matched case-sensitively, order is free):
//!
//! * `courses.csv`: [`COURSE_META_COLUMNS`] and, for scoring,
//!   [`COURSE_ACTIVITY_COLUMNS`]. An optional `tags` column holds
//!   `;`-separated free-form labels.
//! * `instruments.csv`: `course_id,kind,delivery,submission` where `kind` is
//!   `assignment` or `quiz`.
//! * `requests.csv`: `timestamp,course_id,controller,action[,actor_role]`,
//!   header optional.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::classifier::{
    Assignment, AssignmentSubmission, CourseActivityRecord, Delivery, Quiz, QuizSubmission, SyllabusPlacement,
};
use crate::error::IngestError;

pub const SCHEMA_VERSION: u32 = 1;

pub const COURSE_META_COLUMNS: [&str; 12] = [
    "course_id",
    "term",
    "undergraduate",
    "stem",
    "online",
    "app_use",
    "skills_training",
    "enrollment",
    "viewership",
    "ta_count",
    "gpa",
    "dfw_rate",
];

pub const COURSE_ACTIVITY_COLUMNS: [&str; 8] = [
    "term_weeks",
    "announcement_count",
    "announcements_staff_authored",
    "syllabus_placement",
    "discussions_enabled",
    "discussion_post_count",
    "graded_fraction",
    "file_count",
];

pub const INSTRUMENT_COLUMNS: [&str; 4] = ["course_id", "kind", "delivery", "submission"];

/// Course attributes that hypotheses and cohorts are built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseMeta {
    pub course_id: String,
    pub term: String,
    pub undergraduate: bool,
    pub stem: bool,
    pub online: bool,
    pub app_use: bool,
    pub skills_training: bool,
    pub enrollment: u32,
    /// Total page views for the course site.
    pub viewership: u64,
    pub ta_count: u32,
    pub gpa: f64,
    pub dfw_rate: f64,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort at the first malformed row.
    #[default]
    Strict,
    /// Skip malformed rows and report them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub skipped: Vec<RowIssue>,
}

struct Columns(HashMap<String, usize>);

impl Columns {
    fn new(headers: &csv::StringRecord, required: &[&str]) -> Result<Self, IngestError> {
        let map: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        if let Some(missing) = required.iter().find(|c| !map.contains_key(**c)) {
            return Err(IngestError::MissingColumn(missing.to_string()));
        }
        Ok(Columns(map))
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Result<&'r str, String> {
        let idx = self.0.get(name).ok_or_else(|| format!("missing column '{name}'"))?;
        rec.get(*idx).map(str::trim).ok_or_else(|| format!("row has no field '{name}'"))
    }

    fn optional<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.0.get(name).and_then(|&i| rec.get(i)).map(str::trim)
    }
}

fn parse_flag(name: &str, raw: &str) -> Result<bool, String> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        _ => Err(format!("{name}: expected a flag, got '{raw}'")),
    }
}

fn parse_num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, String> {
    raw.parse().map_err(|_| format!("{name}: expected a non-negative whole number, got '{raw}'"))
}

fn parse_real(name: &str, raw: &str, lo: f64, hi: f64) -> Result<f64, String> {
    let v: f64 = raw.parse().map_err(|_| format!("{name}: expected a number, got '{raw}'"))?;
    if !(lo..=hi).contains(&v) {
        return Err(format!("{name}: {v} outside [{lo}, {hi}]"));
    }
    Ok(v)
}

fn parse_enum<T: for<'de> Deserialize<'de>>(name: &str, raw: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|_| format!("{name}: unrecognized value '{raw}'"))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

/// Runs `parse_row` over every record, honouring the parse mode.
fn collect_rows<R: Read, T>(
    reader: &mut csv::Reader<R>,
    mode: ParseMode,
    mut parse_row: impl FnMut(&csv::StringRecord) -> Result<T, String>,
) -> Result<Parsed<T>, IngestError> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = line_of(&rec);
        match parse_row(&rec) {
            Ok(v) => records.push(v),
            Err(message) => match mode {
                ParseMode::Strict => return Err(IngestError::Row { line, message }),
                ParseMode::Lenient => skipped.push(RowIssue { line, message }),
            },
        }
    }
    Ok(Parsed { records, skipped })
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input)
}

fn parse_meta_row(cols: &Columns, rec: &csv::StringRecord) -> Result<CourseMeta, String> {
    let course_id = cols.get(rec, "course_id")?.to_string();
    if course_id.is_empty() {
        return Err("course_id is empty".into());
    }
    let tags = cols
        .optional(rec, "tags")
        .map(|t| t.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
        .unwrap_or_default();
    Ok(CourseMeta {
        course_id,
        term: cols.get(rec, "term")?.to_string(),
        undergraduate: parse_flag("undergraduate", cols.get(rec, "undergraduate")?)?,
        stem: parse_flag("stem", cols.get(rec, "stem")?)?,
        online: parse_flag("online", cols.get(rec, "online")?)?,
        app_use: parse_flag("app_use", cols.get(rec, "app_use")?)?,
        skills_training: parse_flag("skills_training", cols.get(rec, "skills_training")?)?,
        enrollment: parse_num("enrollment", cols.get(rec, "enrollment")?)?,
        viewership: parse_num("viewership", cols.get(rec, "viewership")?)?,
        ta_count: parse_num("ta_count", cols.get(rec, "ta_count")?)?,
        gpa: parse_real("gpa", cols.get(rec, "gpa")?, 0.0, 4.0)?,
        dfw_rate: parse_real("dfw_rate", cols.get(rec, "dfw_rate")?, 0.0, 1.0)?,
        tags,
    })
}

pub fn parse_course_table<R: Read>(input: R, mode: ParseMode) -> Result<Parsed<CourseMeta>, IngestError> {
    let mut reader = csv_reader(input);
    let cols = Columns::new(reader.headers()?, &COURSE_META_COLUMNS)?;
    collect_rows(&mut reader, mode, |rec| parse_meta_row(&cols, rec))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InstrumentKind {
    Assignment,
    Quiz,
}

enum Instrument {
    Assignment(Assignment),
    Quiz(Quiz),
}

fn parse_instrument_row(cols: &Columns, rec: &csv::StringRecord) -> Result<(String, Instrument), String> {
    let course = cols.get(rec, "course_id")?.to_string();
    let kind: InstrumentKind = parse_enum("kind", cols.get(rec, "kind")?)?;
    let delivery: Delivery = parse_enum("delivery", cols.get(rec, "delivery")?)?;
    let raw_sub = cols.get(rec, "submission")?;
    let item = match kind {
        InstrumentKind::Assignment => Instrument::Assignment(Assignment {
            delivery,
            submission: parse_enum::<AssignmentSubmission>("submission", raw_sub)?,
        }),
        InstrumentKind::Quiz => {
            Instrument::Quiz(Quiz { delivery, submission: parse_enum::<QuizSubmission>("submission", raw_sub)? })
        }
    };
    Ok((course, item))
}

/// Builds activity records from the course table plus its instrument table.
/// Instrument rows for courses missing from the course table are malformed.
pub fn parse_activity_table<R1: Read, R2: Read>(
    courses: R1,
    instruments: R2,
    mode: ParseMode,
) -> Result<Parsed<CourseActivityRecord>, IngestError> {
    let mut reader = csv_reader(courses);
    let mut required = vec!["course_id"];
    required.extend(COURSE_ACTIVITY_COLUMNS);
    let cols = Columns::new(reader.headers()?, &required)?;
    let mut parsed = collect_rows(&mut reader, mode, |rec| {
        let course_id = cols.get(rec, "course_id")?.to_string();
        let term_weeks: u32 = parse_num("term_weeks", cols.get(rec, "term_weeks")?)?;
        if term_weeks < 1 {
            return Err("term_weeks must be at least 1".into());
        }
        Ok(CourseActivityRecord {
            course_id,
            term_weeks,
            announcement_count: parse_num("announcement_count", cols.get(rec, "announcement_count")?)?,
            announcements_staff_authored: parse_flag(
                "announcements_staff_authored",
                cols.get(rec, "announcements_staff_authored")?,
            )?,
            syllabus_placement: parse_enum::<SyllabusPlacement>(
                "syllabus_placement",
                cols.get(rec, "syllabus_placement")?,
            )?,
            discussions_enabled: parse_flag("discussions_enabled", cols.get(rec, "discussions_enabled")?)?,
            discussion_post_count: parse_num("discussion_post_count", cols.get(rec, "discussion_post_count")?)?,
            instrument_count: 0,
            assignments: Vec::new(),
            quizzes: Vec::new(),
            graded_fraction: parse_real("graded_fraction", cols.get(rec, "graded_fraction")?, 0.0, 1.0)?,
            file_count: parse_num("file_count", cols.get(rec, "file_count")?)?,
        })
    })?;

    let index: HashMap<String, usize> =
        parsed.records.iter().enumerate().map(|(i, r)| (r.course_id.clone(), i)).collect();
    let mut reader = csv_reader(instruments);
    let icols = Columns::new(reader.headers()?, &INSTRUMENT_COLUMNS)?;
    let items = collect_rows(&mut reader, mode, |rec| {
        let (course, item) = parse_instrument_row(&icols, rec)?;
        match index.get(&course) {
            Some(&i) => Ok((i, item)),
            None => Err(format!("instrument for unknown course '{course}'")),
        }
    })?;
    for (i, item) in items.records {
        let record = &mut parsed.records[i];
        match item {
            Instrument::Assignment(a) => record.assignments.push(a),
            Instrument::Quiz(q) => record.quizzes.push(q),
        }
    }
    for record in &mut parsed.records {
        record.instrument_count = (record.assignments.len() + record.quizzes.len()) as u32;
    }
    parsed.skipped.extend(items.skipped);
    Ok(parsed)
}

fn flag(v: bool) -> &'static str {
    if v {
        "1"
    } else {
        "0"
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enums serialize to strings"),
    }
}

/// Writes a schema-v1 course table. When `activity` is given it must be
/// aligned with `metas` by position.
pub fn write_course_table<W: Write>(
    out: W,
    metas: &[CourseMeta],
    activity: Option<&[CourseActivityRecord]>,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = COURSE_META_COLUMNS.to_vec();
    if activity.is_some() {
        header.extend(COURSE_ACTIVITY_COLUMNS);
    }
    header.push("tags");
    w.write_record(&header)?;
    for (i, m) in metas.iter().enumerate() {
        let mut row = vec![
            m.course_id.clone(),
            m.term.clone(),
            flag(m.undergraduate).into(),
            flag(m.stem).into(),
            flag(m.online).into(),
            flag(m.app_use).into(),
            flag(m.skills_training).into(),
            m.enrollment.to_string(),
            m.viewership.to_string(),
            m.ta_count.to_string(),
            m.gpa.to_string(),
            m.dfw_rate.to_string(),
        ];
        if let Some(acts) = activity {
            let a = &acts[i];
            row.extend([
                a.term_weeks.to_string(),
                a.announcement_count.to_string(),
                flag(a.announcements_staff_authored).into(),
                enum_name(&a.syllabus_placement),
                flag(a.discussions_enabled).into(),
                a.discussion_post_count.to_string(),
                a.graded_fraction.to_string(),
                a.file_count.to_string(),
            ]);
        }
        row.push(m.tags.join(";"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_instrument_table<W: Write>(out: W, activity: &[CourseActivityRecord]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INSTRUMENT_COLUMNS)?;
    for a in activity {
        for item in &a.assignments {
            w.write_record([
                a.course_id.as_str(),
                "assignment",
                &enum_name(&item.delivery),
                &enum_name(&item.submission),
            ])?;
        }
        for item in &a.quizzes {
            w.write_record([a.course_id.as_str(), "quiz", &enum_name(&item.delivery), &enum_name(&item.submission)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorRole {
    Student,
    Staff,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequestEvent {
    pub timestamp: DateTime<Utc>,
    pub course_id: String,
    pub controller: String,
    pub action: String,
    pub actor_role: ActorRole,
}

impl RequestEvent {
    /// `controller::action`
    pub fn category(&self) -> String {
        format!("{}::{}", self.controller, self.action)
    }
}

/// Accepts RFC 3339, RFC 3339 without seconds (`2023-02-01T10:00Z`), naive
/// date-times (taken as UTC) and bare dates.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    let naive = raw.strip_suffix('Z').unwrap_or(raw);
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(naive, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(naive, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)).map(|t| t.and_utc())
}

/// Parses a request log. Events come back sorted by timestamp (stable, so
/// same-instant events keep file order).
pub fn parse_request_log<R: Read>(input: R, mode: ParseMode) -> Result<Parsed<RequestEvent>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut first = true;
    let mut parsed = collect_rows(&mut reader, mode, |rec| {
        let is_header = first && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case("timestamp"));
        first = false;
        if is_header {
            return Ok(None);
        }
        if rec.len() < 4 {
            return Err(format!("expected at least 4 fields, got {}", rec.len()));
        }
        let raw_ts = &rec[0];
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| format!("unparseable timestamp '{raw_ts}'"))?;
        let (controller, action) = (rec[2].to_string(), rec[3].to_string());
        if controller.is_empty() || action.is_empty() {
            return Err("controller and action must be non-empty".into());
        }
        let actor_role = match rec.get(4).map(str::to_ascii_lowercase).as_deref() {
            Some("student") => ActorRole::Student,
            Some("staff") | Some("teacher") | Some("ta") => ActorRole::Staff,
            _ => ActorRole::Unknown,
        };
        Ok(Some(RequestEvent { timestamp, course_id: rec[1].to_string(), controller, action, actor_role }))
    })?;
    let mut events: Vec<RequestEvent> = parsed.records.drain(..).flatten().collect();
    events.sort_by_key(|e| e.timestamp);
    Ok(Parsed { records: events, skipped: parsed.skipped })
}

pub fn partition_by_course(events: &[RequestEvent]) -> BTreeMap<String, Vec<RequestEvent>> {
    let mut out: BTreeMap<String, Vec<RequestEvent>> = BTreeMap::new();
    for e in events {
        out.entry(e.course_id.clone()).or_default().push(e.clone());
    }
    out
}

pub fn write_request_log<W: Write>(out: W, events: &[RequestEvent]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "course_id", "controller", "action", "actor_role"])?;
    for e in events {
        w.write_record([
            e.timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            e.course_id.clone(),
            e.controller.clone(),
            e.action.clone(),
            enum_name(&e.actor_role),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Zero-based week index of `t`, counting 7-day blocks from `term_start`.
pub fn week_index(t: DateTime<Utc>, term_start: NaiveDate) -> i64 {
    (t.date_naive() - term_start).num_days().div_euclid(7)
}

/// Per-week request counts divided by enrollment. Events before the term
/// start or after the last week are not counted.
pub fn weekly_viewership(
    events: &[RequestEvent],
    enrollment: u32,
    term_start: NaiveDate,
    term_weeks: u32,
) -> Result<Vec<f64>, IngestError> {
    if enrollment == 0 {
        return Err(IngestError::ZeroEnrollment);
    }
    if term_weeks == 0 {
        return Err(IngestError::ZeroWeeks);
    }
    let mut counts = vec![0u64; term_weeks as usize];
    for e in events {
        let w = week_index(e.timestamp, term_start);
        if (0..term_weeks as i64).contains(&w) {
            counts[w as usize] += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / enrollment as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CompositionProfile {
    /// `controller::action` to share of events.
    pub shares: BTreeMap<String, f64>,
    pub total_events: u64,
}

impl CompositionProfile {
    /// Summed share of every category whose controller is in `controllers`.
    pub fn controller_share(&self, controllers: &BTreeSet<String>) -> f64 {
        self.shares
            .iter()
            .filter(|(cat, _)| {
                let controller = cat.split("::").next().unwrap_or("");
                controllers.contains(&normalize_controller(controller))
            })
            .map(|(_, s)| s)
            .sum()
    }
}

/// Lower-case, spaces and dashes folded to underscores: `File Previews` ->
/// `file_previews`.
pub fn normalize_controller(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace([' ', '-'], "_")
}

pub fn composition(events: &[RequestEvent]) -> CompositionProfile {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for e in events {
        *counts.entry(e.category()).or_default() += 1;
    }
    let total = events.len() as u64;
    let shares = counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect();
    CompositionProfile { shares, total_events: total }
}

/// The unordered set of a course's top categories (at most three).
pub type Motif = BTreeSet<String>;

pub const MOTIF_SIZE: usize = 3;

/// Top-3 categories by share; ties go to the lexically smaller category.
pub fn motif(profile: &CompositionProfile) -> Option<Motif> {
    if profile.total_events == 0 {
        return None;
    }
    let mut ranked: Vec<(&String, f64)> = profile.shares.iter().map(|(k, v)| (k, *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Some(ranked.into_iter().take(MOTIF_SIZE).map(|(k, _)| k.clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotifShare {
    pub categories: Vec<String>,
    pub courses: usize,
    /// Percentage of the group's courses exhibiting this motif.
    pub percent: f64,
}

/// The `k` most common motifs in a group of course profiles. Courses with no
/// events count towards the group size but exhibit no motif.
pub fn top_motifs(profiles: &[CompositionProfile], k: usize) -> Result<Vec<MotifShare>, IngestError> {
    if k == 0 {
        return Err(IngestError::ZeroK);
    }
    let mut counts: BTreeMap<Motif, usize> = BTreeMap::new();
    for p in profiles {
        if let Some(m) = motif(p) {
            *counts.entry(m).or_default() += 1;
        }
    }
    let mut ranked: Vec<(Motif, usize)> = counts.into_iter().collect();
    // BTreeMap order already breaks ties lexically; stable sort keeps it
    ranked.sort_by_key(|r| std::cmp::Reverse(r.1));
    let n = profiles.len() as f64;
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(m, courses)| MotifShare {
            categories: m.into_iter().collect(),
            courses,
            percent: 100.0 * courses as f64 / n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const META_HEADER: &str =
        "course_id,term,undergraduate,stem,online,app_use,skills_training,enrollment,viewership,ta_count,gpa,dfw_rate\n";

    fn event(ts: &str, course: &str, controller: &str, action: &str) -> RequestEvent {
        RequestEvent {
            timestamp: parse_timestamp(ts).unwrap(),
            course_id: course.into(),
            controller: controller.into(),
            action: action.into(),
            actor_role: ActorRole::Student,
        }
    }

    #[test]
    fn header_only_course_table() {
        let parsed = parse_course_table(META_HEADER.as_bytes(), ParseMode::Strict).unwrap();
        assert!(parsed.records.is_empty());
    }

    #[test]
    fn course_row_values() {
        let csv = format!("{META_HEADER}C1,S23,1,0,yes,false,1,51,773,2,3.1,0.08\n");
        let parsed = parse_course_table(csv.as_bytes(), ParseMode::Strict).unwrap();
        let m = &parsed.records[0];
        assert_eq!(m.enrollment, 51);
        assert!(m.undergraduate && !m.stem && m.online && !m.app_use && m.skills_training);
        assert_eq!(m.viewership, 773);
        assert_eq!(m.dfw_rate, 0.08);
    }

    #[test]
    fn dfw_out_of_range_names_line() {
        let csv = format!("{META_HEADER}C1,S23,1,0,1,0,1,51,773,2,3.1,0.1\nC2,S23,1,0,1,0,1,51,773,2,3.1,1.5\n");
        match parse_course_table(csv.as_bytes(), ParseMode::Strict) {
            Err(IngestError::Row { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("dfw_rate"), "{message}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
        let lenient = parse_course_table(csv.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(lenient.records.len(), 1);
        assert_eq!(lenient.skipped[0].line, 3);
    }

    #[test]
    fn missing_column_and_bad_enrollment() {
        let err = parse_course_table("course_id,term\nC1,S23\n".as_bytes(), ParseMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "undergraduate"));
        let csv = format!("{META_HEADER}C1,S23,1,0,1,0,1,many,773,2,3.1,0.1\n");
        let err = parse_course_table(csv.as_bytes(), ParseMode::Strict).unwrap_err();
        assert!(err.to_string().contains("enrollment"));
    }

    #[test]
    fn request_line_mapping() {
        let log = "2023-02-01T10:00Z,C1,files,show,student\n";
        let parsed = parse_request_log(log.as_bytes(), ParseMode::Strict).unwrap();
        let e = &parsed.records[0];
        assert_eq!(e.category(), "files::show");
        assert_eq!(e.actor_role, ActorRole::Student);
        assert_eq!(e.timestamp.to_rfc3339(), "2023-02-01T10:00:00+00:00");
        assert!(parse_request_log("".as_bytes(), ParseMode::Strict).unwrap().records.is_empty());
    }

    #[test]
    fn request_log_partitions_and_roles() {
        let log = "timestamp,course_id,controller,action,actor_role\n\
                   2023-02-03T10:00:00Z,C1,files,show,student\n\
                   2023-02-01T10:00:00Z,C2,courses,show,staff\n\
                   2023-02-02T10:00:00Z,C1,files,index,robot\n\
                   2023-02-01T09:00:00Z,C1,courses,show\n\
                   2023-02-05T10:00:00Z,C2,gradebook,summary,student\n";
        let parsed = parse_request_log(log.as_bytes(), ParseMode::Strict).unwrap();
        assert_eq!(parsed.records.len(), 5);
        assert!(parsed.records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let parts = partition_by_course(&parsed.records);
        assert_eq!(parts["C1"].len(), 3);
        assert_eq!(parts["C2"].len(), 2);
        assert_eq!(parts["C1"][1].actor_role, ActorRole::Unknown);
    }

    #[test]
    fn bad_timestamp() {
        let err = parse_request_log("yesterday,C1,files,show\n".as_bytes(), ParseMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::Row { line: 1, .. }));
    }

    #[test]
    fn weekly_series() {
        let start = NaiveDate::from_ymd_opt(2023, 1, 16).unwrap();
        let week1: Vec<RequestEvent> =
            (0..100).map(|i| event(&format!("2023-01-{:02}T08:00Z", 16 + i % 7), "C1", "courses", "show")).collect();
        let v = weekly_viewership(&week1, 50, start, 15).unwrap();
        assert_eq!(v.len(), 15);
        assert_eq!(v[0], 2.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));

        assert_eq!(weekly_viewership(&[], 50, start, 15).unwrap(), vec![0.0; 15]);

        let last = vec![event("2023-04-28T12:00Z", "C1", "files", "show")];
        let v = weekly_viewership(&last, 4, start, 15).unwrap();
        assert!(v[..14].iter().all(|&x| x == 0.0));
        assert_eq!(v[14], 0.25);

        assert!(matches!(weekly_viewership(&last, 0, start, 15), Err(IngestError::ZeroEnrollment)));
    }

    #[test]
    fn compositions() {
        let all_files: Vec<_> = (0..5).map(|_| event("2023-02-01", "B", "files", "show")).collect();
        let p = composition(&all_files);
        assert_eq!(p.shares.len(), 1);
        assert_eq!(p.shares["files::show"], 1.0);

        let mut mixed: Vec<_> = (0..6).map(|_| event("2023-02-01", "A", "courses", "show")).collect();
        mixed.extend((0..4).map(|_| event("2023-02-01", "A", "files", "index")));
        let p = composition(&mixed);
        assert_eq!(p.shares["courses::show"], 0.6);
        assert_eq!(p.shares["files::index"], 0.4);

        let empty = composition(&[]);
        assert_eq!(empty.total_events, 0);
        assert!(empty.shares.is_empty());
        assert_eq!(motif(&empty), None);
    }

    #[test]
    fn motif_ranking() {
        let mk = |cats: &[(&str, u32)]| {
            let mut events = Vec::new();
            for (cat, n) in cats {
                let (c, a) = cat.split_once("::").unwrap();
                events.extend((0..*n).map(|_| event("2023-02-01", "X", c, a)));
            }
            composition(&events)
        };
        let shared = [("courses::show", 5), ("files::index", 3), ("gradebook::summary", 2), ("quizzes::show", 1)];
        let other = [("folders::show", 5), ("files::index", 3), ("discussions::view", 2)];
        let mut profiles: Vec<_> = (0..6).map(|_| mk(&shared)).collect();
        profiles.extend((0..3).map(|_| mk(&other)));
        profiles.push(CompositionProfile::default());

        let top = top_motifs(&profiles, 5).unwrap();
        assert_eq!(top[0].categories, vec!["courses::show", "files::index", "gradebook::summary"]);
        assert_eq!(top[0].courses, 6);
        assert_eq!(top[0].percent, 60.0);
        assert_eq!(top[1].percent, 30.0);
        assert_eq!(top.len(), 2);
        assert!(matches!(top_motifs(&profiles, 0), Err(IngestError::ZeroK)));
    }

    #[test]
    fn file_controller_share() {
        let mut events: Vec<_> = (0..7).map(|_| event("2023-02-01", "B", "files", "show")).collect();
        events.push(event("2023-02-01", "B", "file previews", "show"));
        events.extend((0..2).map(|_| event("2023-02-01", "B", "courses", "show")));
        let p = composition(&events);
        let set: BTreeSet<String> = ["files", "folders", "file_previews"].map(String::from).into();
        assert!((p.controller_share(&set) - 0.8).abs() < 1e-12);
    }
}
