use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use dou_core::attribute::Attribute;
use dou_core::cohorts::{
    archetype_report, breakdown, cohort_frequency, delta_report, motifs_by_tier, Archetype, CohortSpec,
};
use dou_core::config::AnalysisConfig;
use dou_core::hypotheses::{run_hypotheses, run_snapshots, Target};
use dou_core::ingest::{
    composition, parse_activity_table, parse_course_table, parse_request_log, partition_by_course, write_course_table,
    write_instrument_table, write_request_log, CompositionProfile, ParseMode, Parsed, RequestEvent,
};
use dou_core::population::ScoredCourse;
use dou_core::report::{render, Format, Payload, Provenance, RenderRequest};
use dou_core::synth::{generate_population, PlantedEffect, SynthConfig};

#[derive(Parser)]
#[command(name = "dou", version, about = "Depth-of-use analytics for LMS course sites")]
struct Cli {
    /// JSON analysis config; built-in model when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,

    /// Decimal places for rendered numbers.
    #[arg(long, global = true, default_value_t = 2)]
    precision: usize,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Skip malformed rows (reported on stderr) instead of failing.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Per-course resource levels and DOU tier.
    Score {
        #[command(flatten)]
        input: Input,
        /// Add the per-term aggregation values.
        #[arg(long)]
        explain: bool,
    },
    /// Run the hypothesis registry against the scored population.
    Hypotheses {
        #[command(flatten)]
        input: Input,
        /// `overall` or a resource code such as `A_s`.
        #[arg(long, default_value = "overall")]
        target: String,
        /// One table per value of the `term` column.
        #[arg(long)]
        by_term: bool,
    },
    /// Low-DOU frequency for cohorts, or the full breakdown when none given.
    Cohorts {
        #[command(flatten)]
        input: Input,
        /// Cohort expression, e.g. "grad & online & ta:low & !skills". Repeatable.
        #[arg(long)]
        cohort: Vec<String>,
    },
    /// Flag junk-drive, gradebook-only and access-portal courses.
    Archetypes {
        #[command(flatten)]
        input: Input,
        /// Limit to these archetypes. Default: all, minus junk-drive without a request log.
        #[arg(long)]
        archetype: Vec<String>,
    },
    /// Tier counts and percent change between two snapshot directories.
    Delta {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
    },
    /// Most common request motifs per DOU tier.
    Motifs {
        #[command(flatten)]
        input: Input,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    /// Write a synthetic snapshot directory.
    Synth {
        /// Directory to create or overwrite.
        #[arg(long)]
        out: PathBuf,
        /// Generator config JSON; defaults for anything omitted.
        #[arg(long)]
        synth_config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config course count.
        #[arg(long)]
        n_courses: Option<usize>,
        /// First day of the synthetic term; overrides the config file.
        #[arg(long)]
        term_start: Option<NaiveDate>,
        /// Planted effect `flag:target:shift`, flag may be `all`. Repeatable.
        #[arg(long)]
        effect: Vec<String>,
    },
}

/// A snapshot on disk. `--data DIR` stands for the three standard files in DIR.
#[derive(Args)]
struct Input {
    /// Snapshot directory with courses.csv, instruments.csv and optionally requests.csv
    #[arg(long)]
    data: Option<PathBuf>,
    /// Course table (instead of --data)
    #[arg(long)]
    courses: Option<PathBuf>,
    /// Instrument table (instead of --data)
    #[arg(long)]
    instruments: Option<PathBuf>,
    /// Page-request log (instead of --data)
    #[arg(long)]
    requests: Option<PathBuf>,
}

struct Paths {
    courses: PathBuf,
    instruments: PathBuf,
    requests: Option<PathBuf>,
}

impl Input {
    fn paths(&self) -> Result<Paths> {
        let from_dir = |name: &str| self.data.as_ref().map(|d| d.join(name));
        let courses =
            self.courses.clone().or_else(|| from_dir("courses.csv")).context("--courses or --data is required")?;
        let instruments = self
            .instruments
            .clone()
            .or_else(|| from_dir("instruments.csv"))
            .context("--instruments or --data is required")?;
        let requests = self.requests.clone().or_else(|| from_dir("requests.csv").filter(|p| p.exists()));
        Ok(Paths { courses, instruments, requests })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn report_skipped<T>(parsed: Parsed<T>, path: &Path) -> Vec<T> {
    for issue in &parsed.skipped {
        eprintln!("warning: {}: skipped line {}: {}", path.display(), issue.line, issue.message);
    }
    parsed.records
}

struct Snapshot {
    courses: Vec<ScoredCourse>,
    requests: Option<Vec<RequestEvent>>,
    inputs: Vec<String>,
    seed: Option<u64>,
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Seed of a synthetic snapshot, read from the generator config beside it.
fn synth_seed(courses: &Path) -> Option<u64> {
    let path = courses.parent()?.join("synth_config.json");
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    value.get("seed")?.as_u64()
}

fn load(paths: &Paths, config: &AnalysisConfig, mode: ParseMode) -> Result<Snapshot> {
    let ctx = |p: &Path| format!("reading {}", p.display());
    let metas = report_skipped(
        parse_course_table(open(&paths.courses)?, mode).with_context(|| ctx(&paths.courses))?,
        &paths.courses,
    );
    let activity = report_skipped(
        parse_activity_table(open(&paths.courses)?, open(&paths.instruments)?, mode)
            .with_context(|| format!("reading {} and {}", paths.courses.display(), paths.instruments.display()))?,
        &paths.instruments,
    );
    let courses = config.scorer.score_population(&metas, &activity)?;
    let requests = match &paths.requests {
        Some(p) => Some(report_skipped(parse_request_log(open(p)?, mode).with_context(|| ctx(p))?, p)),
        None => None,
    };
    let mut inputs = vec![file_name(&paths.courses), file_name(&paths.instruments)];
    inputs.extend(paths.requests.as_deref().map(file_name));
    Ok(Snapshot { courses, requests, inputs, seed: synth_seed(&paths.courses) })
}

fn profiles(events: &[RequestEvent]) -> HashMap<String, CompositionProfile> {
    partition_by_course(events).into_iter().map(|(id, evs)| (id, composition(&evs))).collect()
}

fn parse_effect(raw: &str) -> Result<PlantedEffect> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [flag, target, shift] = parts.as_slice() else {
        bail!("effect '{raw}' should look like flag:target:shift");
    };
    let attribute = match *flag {
        "all" => None,
        f => Some(f.parse::<Attribute>().map_err(|e| anyhow::anyhow!("unknown attribute '{}'", e.0))?),
    };
    Ok(PlantedEffect {
        attribute,
        target: target.parse()?,
        shift: shift.parse().with_context(|| format!("effect '{raw}': shift is not a number"))?,
    })
}

fn write_synth(out: &Path, config: &SynthConfig) -> Result<String> {
    let pop = generate_population(config)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let create = |name: &str| File::create(out.join(name)).with_context(|| format!("cannot write {name}"));
    write_course_table(create("courses.csv")?, &pop.metas, Some(&pop.activity))?;
    write_instrument_table(create("instruments.csv")?, &pop.activity)?;
    write_request_log(create("requests.csv")?, &pop.requests)?;
    let mut json = serde_json::to_string_pretty(config)?;
    json.push('\n');
    fs::write(out.join("synth_config.json"), json)?;
    Ok(format!("wrote {} courses and {} requests to {}\n", pop.metas.len(), pop.requests.len(), out.display()))
}

fn run(cli: Cli) -> Result<String> {
    let config = match &cli.config {
        Some(p) => AnalysisConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => AnalysisConfig::default(),
    };
    let mode = if cli.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let format = match cli.format {
        OutputFormat::Table => Format::Table,
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    };
    let mut provenance = Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        plan: config.scorer.plan.clone(),
        grading_threshold: config.scorer.classifier.config().grading_threshold,
        cuts: None,
        archetypes: None,
        seed: None,
        inputs: Vec::new(),
    };
    let emit = |payload: Payload, provenance: &Provenance| -> Result<String> {
        Ok(render(&RenderRequest { payload, format, precision: cli.precision, provenance })?)
    };

    match &cli.command {
        Command::Synth { out, synth_config, seed, n_courses, term_start, effect } => {
            let mut sc: SynthConfig = match synth_config {
                Some(p) => serde_json::from_str(
                    &fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
                )
                .with_context(|| format!("parsing {}", p.display()))?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                sc.seed = *s;
            }
            if let Some(n) = n_courses {
                sc.n_courses = *n;
            }
            for e in effect {
                sc.effects.push(parse_effect(e)?);
            }
            if let Some(start) = term_start.or(config.term_start) {
                sc.term_start = start;
            }
            write_synth(out, &sc)
        }
        Command::Delta { before, after } => {
            let snap = |dir: &Path| -> Result<Snapshot> {
                let paths = Paths {
                    courses: dir.join("courses.csv"),
                    instruments: dir.join("instruments.csv"),
                    requests: None,
                };
                load(&paths, &config, mode)
            };
            let (b, a) = (snap(before)?, snap(after)?);
            provenance.inputs = [before, after]
                .iter()
                .flat_map(|d| ["courses.csv", "instruments.csv"].map(|f| format!("{}/{f}", file_name(d))))
                .collect();
            let report = delta_report(&b.courses, &a.courses);
            emit(Payload::Delta(&report), &provenance)
        }
        Command::Score { input, explain } => {
            let snap = load(&input.paths()?, &config, mode)?;
            provenance.inputs = snap.inputs;
            provenance.seed = snap.seed;
            emit(Payload::Scores { courses: &snap.courses, explain: *explain }, &provenance)
        }
        Command::Hypotheses { input, target, by_term } => {
            let snap = load(&input.paths()?, &config, mode)?;
            provenance.inputs = snap.inputs;
            provenance.seed = snap.seed;
            let target: Target = target.parse()?;
            let tables = if *by_term {
                let mut terms: Vec<(String, Vec<ScoredCourse>)> = Vec::new();
                for c in snap.courses {
                    match terms.iter_mut().find(|(t, _)| *t == c.meta.term) {
                        Some((_, group)) => group.push(c),
                        None => terms.push((c.meta.term.clone(), vec![c])),
                    }
                }
                run_snapshots(&terms, &config.registry, target)?
            } else {
                vec![run_hypotheses(&snap.courses, &config.registry, target)?]
            };
            emit(Payload::Hypotheses(&tables), &provenance)
        }
        Command::Cohorts { input, cohort } => {
            let snap = load(&input.paths()?, &config, mode)?;
            let cuts = config.cuts.resolve(&snap.courses)?;
            provenance.inputs = snap.inputs;
            provenance.seed = snap.seed;
            provenance.cuts = Some(cuts.clone());
            if cohort.is_empty() {
                let b = breakdown(&snap.courses, &cuts);
                return emit(Payload::Breakdown(&b), &provenance);
            }
            let specs = cohort.iter().map(|c| c.parse::<CohortSpec>()).collect::<Result<Vec<_>, _>>()?;
            let reports: Vec<_> = specs.iter().map(|s| cohort_frequency(&snap.courses, s, &cuts)).collect();
            emit(Payload::Cohorts(&reports), &provenance)
        }
        Command::Archetypes { input, archetype } => {
            let snap = load(&input.paths()?, &config, mode)?;
            let cuts = config.cuts.resolve(&snap.courses)?;
            let which: Vec<Archetype> = if archetype.is_empty() {
                Archetype::ALL.into_iter().filter(|a| *a != Archetype::JunkDrive || snap.requests.is_some()).collect()
            } else {
                archetype.iter().map(|a| a.parse()).collect::<Result<_, _>>()?
            };
            if which.contains(&Archetype::JunkDrive) && snap.requests.is_none() {
                bail!("junk-drive detection needs a request log (--requests or requests.csv in --data)");
            }
            let profiles = snap.requests.as_deref().map(profiles).unwrap_or_default();
            let report = archetype_report(&snap.courses, &profiles, &cuts, &config.archetypes, &which)?;
            provenance.inputs = snap.inputs;
            provenance.seed = snap.seed;
            provenance.cuts = Some(cuts);
            provenance.archetypes = Some(config.archetypes.clone());
            emit(Payload::Archetypes(&report), &provenance)
        }
        Command::Motifs { input, k } => {
            let snap = load(&input.paths()?, &config, mode)?;
            let Some(requests) = &snap.requests else {
                bail!("motifs need a request log (--requests or requests.csv in --data)");
            };
            let groups = motifs_by_tier(&snap.courses, &profiles(requests), *k)?;
            provenance.inputs = snap.inputs;
            provenance.seed = snap.seed;
            emit(Payload::Motifs(&groups), &provenance)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output.clone();
    let text = match run(cli) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let written = match &output {
        Some(path) => fs::write(path, &text).with_context(|| format!("cannot write {}", path.display())),
        None => match io::stdout().write_all(text.as_bytes()) {
            // a closed pipe (`dou score | head`) is not an error
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r.context("cannot write to stdout"),
        },
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
