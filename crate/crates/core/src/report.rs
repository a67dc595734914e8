//! Rendering reports as aligned plain-text tables, CSV or JSON.
//!
//! Output is a pure function of the payload, format and precision. Numbers
//! are printed with at most `precision` decimals and trailing zeros removed,
//! so `9.80` reads `9.8`. Significance markers follow the statistic
//! (`9.8**`). Undefined or non-computable cells print as a long dash ([`UNDEFINED`]).
//!
//! JSON output is wrapped in an envelope:
//!
//! ```json
//! { "schema": "dou-report/1", "kind": "hypotheses", "provenance": { ... }, "data": ... }
//! ```
//!
//! JSON values are not rounded; p-values appear in full.

use serde::Serialize;

use crate::attribute::Attribute;
use crate::cohorts::{ArchetypeReport, ArchetypeThresholds, Breakdown, CohortReport, Cuts, DeltaReport, MotifGroup};
use crate::error::RenderError;
use crate::hypotheses::{Cell, HypothesisKind, HypothesisTable};
use crate::model::{AggregationPlan, ResourceId};
use crate::population::ScoredCourse;

pub const SCHEMA: &str = "dou-report/1";
pub const UNDEFINED: &str = "\u{2014}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Table => "table",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Payload<'a> {
    Scores { courses: &'a [ScoredCourse], explain: bool },
    Hypotheses(&'a [HypothesisTable]),
    Cohorts(&'a [CohortReport]),
    Breakdown(&'a Breakdown),
    Archetypes(&'a ArchetypeReport),
    Delta(&'a DeltaReport),
    Motifs(&'a [MotifGroup]),
}

impl Payload<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Scores { .. } => "scores",
            Payload::Hypotheses(_) => "hypotheses",
            Payload::Cohorts(_) => "cohorts",
            Payload::Breakdown(_) => "breakdown",
            Payload::Archetypes(_) => "archetypes",
            Payload::Delta(_) => "delta",
            Payload::Motifs(_) => "motifs",
        }
    }
}

/// Everything needed to reproduce a report, echoed into JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub plan: AggregationPlan,
    pub grading_threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Cuts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub archetypes: Option<ArchetypeThresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input file names, without directories.
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderRequest<'a> {
    pub payload: Payload<'a>,
    pub format: Format,
    pub precision: usize,
    pub provenance: &'a Provenance,
}

impl<'a> RenderRequest<'a> {
    pub fn new(payload: Payload<'a>, provenance: &'a Provenance) -> Self {
        RenderRequest { payload, format: Format::Table, precision: 2, provenance }
    }
}

/// `x` with at most `precision` decimals, trailing zeros dropped.
pub fn format_number(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return UNDEFINED.to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let mut s = format!("{x:.precision$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn opt(x: Option<f64>, precision: usize) -> String {
    x.map_or_else(|| UNDEFINED.to_string(), |v| format_number(v, precision))
}

fn signed(x: Option<f64>, precision: usize) -> String {
    match x {
        Some(v) => {
            let s = format_number(v, precision);
            if v > 0.0 && s != "0" {
                format!("+{s}")
            } else {
                s
            }
        }
        None => UNDEFINED.to_string(),
    }
}

pub fn format_cell(cell: &Cell, precision: usize) -> String {
    match cell {
        Cell::Value(r) => format!("{}{}", format_number(r.statistic, precision), r.significance.marker()),
        Cell::NotApplicable => String::new(),
        Cell::NotComputable { .. } => UNDEFINED.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Align {
    Left,
    Right,
}

struct Table {
    title: Option<String>,
    headers: Vec<String>,
    align: Vec<Align>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// The first `left` columns are left-aligned, the rest right-aligned.
    fn new(title: Option<String>, headers: Vec<String>, left: usize) -> Self {
        let align = (0..headers.len()).map(|i| if i < left { Align::Left } else { Align::Right }).collect();
        Table { title, headers, align, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn render_text(&self, out: &mut String) {
        if let Some(t) = &self.title {
            out.push_str(t);
            out.push('\n');
        }
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String], out: &mut String| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let pad = " ".repeat(widths[i] - c.chars().count());
                match self.align[i] {
                    Align::Left => {
                        s.push_str(c);
                        s.push_str(&pad);
                    }
                    Align::Right => {
                        s.push_str(&pad);
                        s.push_str(c);
                    }
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&self.headers, out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&rule, out);
        for row in &self.rows {
            line(row, out);
        }
    }
}

fn headers(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn composition_headers() -> Vec<String> {
    Attribute::FLAGS
        .into_iter()
        .map(|a| format!("{} %", a.label()))
        .chain(Attribute::NUMERIC.into_iter().map(|a| format!("{} hi %", a.label())))
        .collect()
}

fn score_tables(courses: &[ScoredCourse], explain: bool) -> Vec<Table> {
    let resources: Vec<ResourceId> =
        courses.first().map(|c| c.levels.iter().map(|(r, _)| r).collect()).unwrap_or_default();
    let terms: Vec<String> = if explain {
        courses.first().map(|c| c.dou.term_values.iter().map(|t| t.term.clone()).collect()).unwrap_or_default()
    } else {
        Vec::new()
    };
    let mut h = vec!["course_id".to_string()];
    h.extend(resources.iter().map(|r| r.code().to_string()));
    h.extend(terms.iter().cloned());
    h.extend(["DOU".to_string(), "tier".to_string()]);
    let mut t = Table::new(None, h, 1);
    let n = t.headers.len();
    t.align[n - 1] = Align::Left;
    for c in courses {
        let mut row = vec![c.meta.course_id.clone()];
        row.extend(resources.iter().map(|&r| c.levels.get(r).map_or(UNDEFINED.into(), |l| l.to_string())));
        if explain {
            row.extend(c.dou.term_values.iter().map(|t| t.value.to_string()));
        }
        row.extend([c.dou.value.to_string(), c.dou.tier.label().to_string()]);
        t.push(row);
    }
    vec![t]
}

fn hypothesis_tables(tables: &[HypothesisTable], p: usize, csv: bool) -> Vec<Table> {
    let mut h = headers(&["id", "attribute", "kind", "n", "t", "F", "F crit", "H"]);
    if csv {
        h.splice(0..0, headers(&["term", "target"]));
    }
    let left = if csv { 6 } else { 4 };
    let mut out = Vec::new();
    let mut combined = Table::new(None, h.clone(), left);
    for table in tables {
        let title = match &table.term {
            Some(term) => format!("Hypotheses, target {}, term {term}", table.target),
            None => format!("Hypotheses, target {}", table.target),
        };
        let mut t = Table::new(Some(title), h.clone(), left);
        for row in &table.rows {
            let kind = match row.kind {
                HypothesisKind::BinaryFlag => "flag",
                HypothesisKind::Numeric => "numeric",
            };
            let n = row.groups.iter().map(|g| g.n.to_string()).collect::<Vec<_>>().join("/");
            let mut cells = vec![
                row.id.clone(),
                row.attribute.label().to_string(),
                kind.to_string(),
                n,
                format_cell(&row.t, p),
                format_cell(&row.f, p),
                row.f_crit.map_or(String::new(), |v| format_number(v, p)),
                format_cell(&row.h, p),
            ];
            if csv {
                cells.splice(0..0, [table.term.clone().unwrap_or_default(), table.target.to_string()]);
                combined.push(cells);
            } else {
                t.push(cells);
            }
        }
        out.push(t);
    }
    if csv {
        vec![combined]
    } else {
        out
    }
}

fn cohort_tables(reports: &[CohortReport], p: usize) -> Vec<Table> {
    let mut h = headers(&["cohort", "members", "low", "low %"]);
    h.extend(composition_headers());
    let mut t = Table::new(None, h, 1);
    for r in reports {
        let mut row =
            vec![r.cohort.clone(), r.member_count.to_string(), r.low_count.to_string(), opt(r.low_dou_percent, p)];
        row.extend(r.composition.iter().map(|s| opt(s.percent, p)));
        t.push(row);
    }
    vec![t]
}

fn breakdown_tables(b: &Breakdown, p: usize) -> Vec<Table> {
    let mut by_attr = Table::new(
        Some(format!("DOU by attribute ({} courses)", b.population)),
        headers(&["group", "n", "Low %", "Medium %", "High %"]),
        1,
    );
    for r in &b.by_attribute {
        let mut row = vec![r.group.clone(), r.count.to_string()];
        row.extend(r.tier_percent.iter().map(|x| opt(*x, p)));
        by_attr.push(row);
    }
    let mut h = headers(&["tier", "n"]);
    h.extend(composition_headers());
    let mut by_tier = Table::new(Some("Attribute composition by DOU tier".into()), h, 1);
    for r in &b.by_tier {
        let mut row = vec![r.tier.label().to_string(), r.count.to_string()];
        row.extend(r.composition.iter().map(|s| opt(s.percent, p)));
        by_tier.push(row);
    }
    let h = headers(&["tier", "attribute", "mean", "sd"]);
    let mut numeric = Table::new(Some("Numeric attributes by DOU tier".into()), h, 2);
    for r in &b.by_tier {
        for n in &r.numeric {
            numeric.push(vec![
                r.tier.label().to_string(),
                n.attribute.label().to_string(),
                opt(n.mean, p),
                opt(n.sd, p),
            ]);
        }
    }
    vec![by_attr, by_tier, numeric]
}

fn archetype_tables(r: &ArchetypeReport, p: usize) -> Vec<Table> {
    let mut h = headers(&["archetype", "n", "% of courses"]);
    h.extend(composition_headers());
    let mut summary = Table::new(Some("Archetypes".into()), h, 1);
    for row in &r.rows {
        let mut cells =
            vec![row.archetype.label().to_string(), row.count.to_string(), opt(row.percent_of_population, p)];
        cells.extend(row.composition.iter().map(|s| opt(s.percent, p)));
        summary.push(cells);
    }
    let mut courses = Table::new(Some("Courses".into()), headers(&["course_id", "archetypes"]), 2);
    for c in &r.courses {
        courses.push(vec![c.course_id.clone(), c.archetypes.iter().map(|a| a.label()).collect::<Vec<_>>().join(", ")]);
    }
    vec![summary, courses]
}

fn delta_tables(d: &DeltaReport, p: usize) -> Vec<Table> {
    let mut t = Table::new(None, headers(&["scope", "tier", "before", "after", "change %"]), 2);
    let rows =
        d.overall.iter().map(|r| ("overall".to_string(), r)).chain(
            d.by_resource.iter().flat_map(|res| res.rows.iter().map(move |r| (res.resource.code().to_string(), r))),
        );
    for (scope, r) in rows {
        t.push(vec![
            scope,
            r.tier.label().into(),
            r.before.to_string(),
            r.after.to_string(),
            signed(r.percent_change, p),
        ]);
    }
    vec![t]
}

fn motif_tables(groups: &[MotifGroup], p: usize) -> Vec<Table> {
    let mut t = Table::new(None, headers(&["tier", "rank", "motif", "courses", "%"]), 3);
    t.align[1] = Align::Right;
    for g in groups {
        for (i, m) in g.motifs.iter().enumerate() {
            t.push(vec![
                g.tier.label().into(),
                (i + 1).to_string(),
                m.categories.join(" + "),
                m.courses.to_string(),
                format_number(m.percent, p),
            ]);
        }
    }
    vec![t]
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    kind: &'static str,
    provenance: &'a Provenance,
    data: T,
}

fn to_json<T: Serialize>(req: &RenderRequest, data: T) -> Result<String, RenderError> {
    let env = Envelope { schema: SCHEMA, kind: req.payload.kind(), provenance: req.provenance, data };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn render(req: &RenderRequest) -> Result<String, RenderError> {
    let p = req.precision;
    if req.format == Format::Json {
        return match req.payload {
            Payload::Scores { courses, .. } => to_json(req, courses),
            Payload::Hypotheses(t) => to_json(req, t),
            Payload::Cohorts(r) => to_json(req, r),
            Payload::Breakdown(b) => to_json(req, b),
            Payload::Archetypes(a) => to_json(req, a),
            Payload::Delta(d) => to_json(req, d),
            Payload::Motifs(m) => to_json(req, m),
        };
    }
    let csv = req.format == Format::Csv;
    let tables = match req.payload {
        Payload::Scores { courses, explain } => score_tables(courses, explain),
        Payload::Hypotheses(t) => hypothesis_tables(t, p, csv),
        Payload::Cohorts(r) => cohort_tables(r, p),
        Payload::Breakdown(b) => breakdown_tables(b, p),
        Payload::Archetypes(a) => archetype_tables(a, p),
        Payload::Delta(d) => delta_tables(d, p),
        Payload::Motifs(m) => motif_tables(m, p),
    };
    if csv {
        // a CSV file has a single header row
        let [table] = tables.as_slice() else {
            return Err(RenderError::Unsupported { format: "csv", payload: req.payload.kind() });
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.headers)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| RenderError::Csv(e.into_error().into()))?;
        return Ok(String::from_utf8(bytes).expect("csv output is utf-8"));
    }
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        t.render_text(&mut out);
    }
    Ok(out)
}
