//! Command-line front end: argument parsing, run specs, and report emission.
//!
//! Every subcommand resolves its flags into a [`RunSpec`] that is embedded in
//! the JSON report alongside the critical values actually used.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use intervalmt::audit::{
    audit_ray, certify, counterexample_change_point, counterexample_tvc, uniform_grid, CertificationSummary,
    Counterexample, DirectionVector, ViolationReport,
};
use intervalmt::io::{read_rows, to_dataset, TableFormat};
use intervalmt::sim::{simulate, table_runner, write_csv, MeanBlock, SimConfig, SimResult, TableReport};
use intervalmt::{
    critical_values_bg, critical_values_bh, CriticalSource, CriticalValues, Dataset, HypothesisFamily, Model, Outcome,
    Pair, Problem, Procedure, ProcedureKind, RsdOptions, SetFamilySpec, Sidedness, StatKind,
};

pub mod render;

/// Version of the JSON report layout.
pub const SCHEMA: u32 = 1;
/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "INTERVALMT_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<intervalmt::Error> for CliError {
    fn from(e: intervalmt::Error) -> Self {
        use intervalmt::Error as E;
        match e {
            E::AlphaOutOfRange(_)
            | E::InvalidCriticals(_)
            | E::TooFewCriticals { .. }
            | E::Unsupported(_)
            | E::InvalidConfig(_)
            | E::UnknownRow { .. }
            | E::BlockTooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status when an audit finds interval-property violations.
pub const EXIT_VIOLATIONS: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "intervalmt",
    version,
    about = "Multiple testing of pairwise-difference hypotheses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a procedure on a data table.
    Analyze(AnalyzeArgs),
    /// Check decisions for the interval property along rays.
    Audit(AuditArgs),
    /// Monte Carlo error rates of RSD and step-up for one configuration.
    Simulate(SimulateArgs),
    /// Re-simulate rows of the reference error-rate tables.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Multinomial,
    Normal,
    Rank,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Multinomial => Model::Multinomial,
            ModelArg::Normal => Model::Normal,
            ModelArg::Rank => Model::Rank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    AllPairwise,
    ChangePoint,
    #[value(alias = "treatments-vs-control")]
    Tvc,
}

impl From<FamilyArg> for Problem {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::AllPairwise => Problem::AllPairwise,
            FamilyArg::ChangePoint => Problem::ChangePoint,
            FamilyArg::Tvc => Problem::TreatmentsVsControl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcedureArg {
    Rsd,
    StepDown,
    StepUp,
}

impl From<ProcedureArg> for ProcedureKind {
    fn from(p: ProcedureArg) -> Self {
        match p {
            ProcedureArg::Rsd => ProcedureKind::Rsd,
            ProcedureArg::StepDown => ProcedureKind::StepDown,
            ProcedureArg::StepUp => ProcedureKind::StepUp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SidedArg {
    One,
    Two,
}

impl From<SidedArg> for Sidedness {
    fn from(s: SidedArg) -> Self {
        match s {
            SidedArg::One => Sidedness::One,
            SidedArg::Two => Sidedness::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Json => TableFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuiltinArg {
    /// One-sided change point, three populations.
    Figure1,
    /// Two-sided treatments versus control, three populations.
    Figure2,
}

/// Procedure selection shared by `analyze` and `audit`.
#[derive(Debug, Clone, Args)]
pub struct ProcedureOpts {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, value_enum, default_value = "rsd")]
    pub procedure: ProcedureArg,
    /// Comma-separated increasing values, or `bh` / `bg` to generate them.
    #[arg(long, conflicts_with = "criticals_file")]
    pub criticals: Option<String>,
    /// File of increasing critical values separated by commas or whitespace.
    #[arg(long)]
    pub criticals_file: Option<PathBuf>,
    /// Level for generated critical values.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Defaults to one-sided for change point and two-sided otherwise.
    #[arg(long, value_enum)]
    pub sided: Option<SidedArg>,
    /// Control population (1-based) for treatments versus control; defaults to the last.
    #[arg(long)]
    pub control: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub procedure: ProcedureOpts,
    /// CSV or JSON table, one row per population.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Record every candidate split scored by RSD.
    #[arg(long)]
    pub candidates: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub procedure: ProcedureOpts,
    /// Audit a built-in counterexample ray.
    #[arg(long, value_enum, conflicts_with_all = ["input", "certify"])]
    pub builtin: Option<BuiltinArg>,
    /// Audit a ray through this data table.
    #[arg(long, requires = "pair", conflicts_with = "certify")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Hypothesis whose evidence the ray increases, as `i,j` (1-based).
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 41)]
    pub grid_points: usize,
    /// Run this many random instances per model and family.
    #[arg(long)]
    pub certify: Option<usize>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; flags below are ignored when given, except
    /// explicit --iterations and --seed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of populations, control last.
    #[arg(long, default_value_t = 101)]
    pub k: usize,
    /// Treatments sharing a mean, as `first-last:mean` (1-based); repeatable.
    #[arg(long = "block")]
    pub blocks: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub control_mean: f64,
    /// Multiplies every block mean.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub mean_scale: f64,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub rsd_alpha: f64,
    #[arg(long, default_value_t = 0.07)]
    pub su_alpha: f64,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(5..=6))]
    pub table: u8,
    /// Rows as a list with ranges, e.g. `1,4,10-17`, or `all`.
    #[arg(long, default_value = "all")]
    pub rows: String,
    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// Write the comparison here: CSV, or JSON for a `.json` path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

/// How critical values were requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum CriticalSpec {
    Inline { values: Vec<f64> },
    File { path: PathBuf },
    Bh { alpha: f64 },
    Bg { alpha: f64 },
}

/// The fully resolved request, embedded in every report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Problem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub procedure: Option<ProcedureKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criticals: Option<CriticalSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sided: Option<Sidedness>,
    /// 1-based, as on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certify: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

/// Critical values as used, echoed for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEcho {
    pub source: CriticalSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub schema: u32,
    pub run: RunSpec,
    pub criticals: CriticalEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<String>,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: u32,
    pub run: RunSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criticals: Option<CriticalEcho>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rays: Vec<ViolationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub certification: Vec<CertificationSummary>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema: u32,
    pub run: RunSpec,
    pub config: SimConfig,
    pub result: SimResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub schema: u32,
    pub run: RunSpec,
    pub report: TableReport,
}

/// Runs a parsed command, writing human-readable or JSON output to `out`.
/// Returns the process exit status for a completed run.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Analyze(a) => analyze(a, out),
        Command::Audit(a) => audit(a, out),
        Command::Simulate(a) => run_simulate(a, out),
        Command::Reproduce(a) => reproduce(a, out),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("writing output: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, to_json(value)).map_err(|e| io_err(path, e))
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or(DEFAULT_SEED)
}

/// Parses `1.645,1.96` or whitespace-separated values; `#` starts a comment line.
pub fn parse_value_list(text: &str) -> CliResult<Vec<f64>> {
    let values = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("critical value `{t}` is not a number")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("no critical values given".into()));
    }
    Ok(values)
}

/// Parses `1,4,10-17` (1-based) or `all` against the number of available rows.
pub fn parse_rows(text: &str, available: usize) -> CliResult<Vec<usize>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok((1..=available).collect());
    }
    let bad = |t: &str| CliError::Usage(format!("bad row selection `{t}`"));
    let mut rows = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad(part))?,
                b.trim().parse().map_err(|_| bad(part))?,
            ),
            None => {
                let r: usize = part.parse().map_err(|_| bad(part))?;
                (r, r)
            }
        };
        if lo == 0 || lo > hi {
            return Err(bad(part));
        }
        rows.extend(lo..=hi);
    }
    if rows.is_empty() {
        return Err(bad(text));
    }
    Ok(rows)
}

/// Parses `i,j` (1-based) into a 0-based pair.
pub fn parse_pair(text: &str) -> CliResult<Pair> {
    let bad = || CliError::Usage(format!("pair must be `i,j` with 1-based indices, got `{text}`"));
    let (i, j) = text.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 || i == j {
        return Err(bad());
    }
    Ok(Pair::new(i - 1, j - 1))
}

/// Parses `first-last:mean` (or `t:mean` for a single treatment).
pub fn parse_block(text: &str) -> CliResult<MeanBlock> {
    let bad = || CliError::Usage(format!("block must be `first-last:mean`, got `{text}`"));
    let (range, mean) = text.split_once(':').ok_or_else(bad)?;
    let mean: f64 = mean.trim().parse().map_err(|_| bad())?;
    let (first, last) = match range.split_once('-') {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let t: usize = range.trim().parse().map_err(|_| bad())?;
            (t, t)
        }
    };
    Ok(MeanBlock { first, last, mean })
}

fn default_sided(problem: Problem) -> Sidedness {
    match problem {
        Problem::ChangePoint => Sidedness::One,
        _ => Sidedness::Two,
    }
}

/// Resolved procedure plus its echo, ready to run on data with `k` populations.
struct Resolved {
    procedure: Procedure,
    echo: CriticalEcho,
    spec: CriticalSpec,
}

fn resolve_procedure(opts: &ProcedureOpts, k: usize) -> CliResult<Resolved> {
    let problem: Problem = opts
        .family
        .ok_or_else(|| CliError::Usage("--family is required".into()))?
        .into();
    let sided = opts.sided.map_or_else(|| default_sided(problem), Sidedness::from);
    let spec = match (problem, opts.control) {
        (Problem::TreatmentsVsControl, Some(c)) => {
            if c == 0 || c > k {
                return Err(CliError::Usage(format!("--control must lie in 1..={k}, got {c}")));
            }
            SetFamilySpec::treatments_vs_control(k, c - 1)?
        }
        (_, Some(_)) => return Err(CliError::Usage("--control applies only to the tvc family".into())),
        (_, None) => SetFamilySpec::new(problem, k)?,
    };
    let family = HypothesisFamily::new(spec, sided);
    let kind: ProcedureKind = opts.procedure.into();
    // RSD uses C_{K+1−m} at stage m of at most k − 1 splits; the classic
    // procedures need one constant per hypothesis
    let count = match kind {
        ProcedureKind::Rsd => spec.max_splits(),
        _ => family.len(),
    };
    let (criticals, spec, alpha) = match (&opts.criticals, &opts.criticals_file) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let values = parse_value_list(&text)?;
            (
                CriticalValues::user(values)?,
                CriticalSpec::File { path: path.clone() },
                None,
            )
        }
        (Some(s), None) if s.eq_ignore_ascii_case("bh") => (
            critical_values_bh(count, opts.alpha)?,
            CriticalSpec::Bh { alpha: opts.alpha },
            Some(opts.alpha),
        ),
        (Some(s), None) if s.eq_ignore_ascii_case("bg") => (
            critical_values_bg(count, opts.alpha)?,
            CriticalSpec::Bg { alpha: opts.alpha },
            Some(opts.alpha),
        ),
        (Some(s), None) => {
            let values = parse_value_list(s)?;
            (
                CriticalValues::user(values.clone())?,
                CriticalSpec::Inline { values },
                None,
            )
        }
        (None, None) => return Err(CliError::Usage("--criticals or --criticals-file is required".into())),
    };
    let echo = CriticalEcho {
        source: criticals.source(),
        alpha,
        values: criticals.values().to_vec(),
    };
    Ok(Resolved {
        procedure: Procedure::new(kind, family, criticals),
        echo,
        spec,
    })
}

/// Step-up for one-sided multinomial change point is outside the settings
/// the method was developed for; it runs, but the report says so.
pub fn extrapolation_note(model: Model, procedure: &Procedure) -> Option<String> {
    let flagged = model == Model::Multinomial
        && procedure.kind == ProcedureKind::StepUp
        && procedure.family.problem() == Problem::ChangePoint
        && procedure.family.sided == Sidedness::One;
    flagged.then(|| "step-up on one-sided multinomial change point is an extrapolation".to_string())
}

fn load_dataset(path: &Path, format: Option<FormatArg>, model: Model) -> CliResult<(Dataset, Option<Vec<String>>)> {
    let format = format.map_or_else(|| TableFormat::from_path(path), TableFormat::from);
    let rows = read_rows(path, format)?;
    let labels = rows.labels.clone();
    Ok((to_dataset(rows, model)?, labels))
}

fn base_spec(subcommand: &str, opts: &ProcedureOpts, resolved: &Resolved) -> RunSpec {
    RunSpec {
        subcommand: subcommand.into(),
        model: opts.model.map(Model::from),
        family: Some(resolved.procedure.family.problem()),
        procedure: Some(resolved.procedure.kind),
        criticals: Some(resolved.spec.clone()),
        sided: Some(resolved.procedure.family.sided),
        control: opts.control,
        ..RunSpec::default()
    }
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<i32> {
    let model: Model = args
        .procedure
        .model
        .ok_or_else(|| CliError::Usage("--model is required".into()))?
        .into();
    let (data, labels) = load_dataset(&args.input, args.format, model)?;
    let mut resolved = resolve_procedure(&args.procedure, data.k())?;
    resolved.procedure = resolved.procedure.with_options(RsdOptions {
        record_candidates: args.candidates,
        ..RsdOptions::default()
    });
    let outcome = resolved.procedure.run(&data)?;
    let mut run = base_spec("analyze", &args.procedure, &resolved);
    run.input = Some(args.input.clone());
    run.output = args.output.clone();
    let report = AnalyzeReport {
        schema: SCHEMA,
        run,
        criticals: resolved.echo,
        extrapolation: extrapolation_note(model, &resolved.procedure),
        k: data.k(),
        labels,
        outcome,
    };
    if let Some(path) = &args.output {
        save_json(path, &report)?;
    }
    let text = if args.json {
        to_json(&report)
    } else {
        render::analyze(&report)
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn builtin_procedure(ce: &Counterexample, kind: ProcedureKind) -> Procedure {
    match kind {
        ProcedureKind::Rsd => ce.rsd(),
        ProcedureKind::StepDown => ce.classic(),
        ProcedureKind::StepUp => Procedure::new(ProcedureKind::StepUp, ce.family.clone(), ce.criticals.clone())
            .with_pair_statistic(StatKind::Difference),
    }
}

fn audit(args: &AuditArgs, out: &mut dyn Write) -> CliResult<i32> {
    let opts = &args.procedure;
    let kind: ProcedureKind = opts.procedure.into();
    let mut run = RunSpec {
        subcommand: "audit".into(),
        procedure: Some(kind),
        output: args.output.clone(),
        ..RunSpec::default()
    };
    let mut report = AuditReport {
        schema: SCHEMA,
        run: RunSpec::default(),
        criticals: None,
        rays: Vec::new(),
        certification: Vec::new(),
        violations: 0,
    };

    if let Some(which) = args.builtin {
        let (ce, name) = match which {
            BuiltinArg::Figure1 => (counterexample_change_point(), "figure1"),
            BuiltinArg::Figure2 => (counterexample_tvc(), "figure2"),
        };
        let procedure = builtin_procedure(&ce, kind);
        let data = ce.dataset(ce.base())?;
        let ray = audit_ray(&ce.name, &procedure, &data, &ce.direction, &ce.scan_grid())?;
        run.builtin = Some(name.into());
        run.model = Some(Model::Normal);
        run.family = Some(ce.family.problem());
        run.sided = Some(ce.family.sided);
        report.criticals = Some(CriticalEcho {
            source: ce.criticals.source(),
            alpha: None,
            values: ce.criticals.values().to_vec(),
        });
        report.rays.push(ray);
    } else if let Some(instances) = args.certify {
        if instances == 0 {
            return Err(CliError::Usage("--certify needs at least one instance".into()));
        }
        let seed = seed_or_default(args.seed);
        let models = opts.model.map_or_else(
            || vec![Model::Multinomial, Model::Normal, Model::Rank],
            |m| vec![m.into()],
        );
        let problems = opts.family.map_or_else(
            || vec![Problem::ChangePoint, Problem::TreatmentsVsControl, Problem::AllPairwise],
            |f| vec![f.into()],
        );
        for &model in &models {
            for &problem in &problems {
                report
                    .certification
                    .push(certify(kind, model, problem, instances, seed)?);
            }
        }
        run.model = opts.model.map(Model::from);
        run.family = opts.family.map(Problem::from);
        run.certify = Some(instances);
        run.seed = Some(seed);
    } else if let Some(input) = &args.input {
        let model: Model = opts
            .model
            .ok_or_else(|| CliError::Usage("--model is required".into()))?
            .into();
        let pair = parse_pair(args.pair.as_deref().unwrap_or_default())?;
        let (data, _) = load_dataset(input, args.format, model)?;
        if pair.i >= data.k() || pair.j >= data.k() {
            return Err(CliError::Usage(format!(
                "pair {pair} is out of range for k = {}",
                data.k()
            )));
        }
        if !(args.grid_step > 0.0 && args.grid_step.is_finite()) || args.grid_points == 0 {
            return Err(CliError::Usage(
                "grid step must be positive and the grid nonempty".into(),
            ));
        }
        let resolved = resolve_procedure(opts, data.k())?;
        let g = DirectionVector::for_dataset(&data, pair)?;
        let grid = uniform_grid(args.grid_step, args.grid_points);
        let label = format!("{} along g{}{}", input.display(), pair.i + 1, pair.j + 1);
        report
            .rays
            .push(audit_ray(&label, &resolved.procedure, &data, &g, &grid)?);
        let resolved_run = base_spec("audit", opts, &resolved);
        run = RunSpec {
            input: Some(input.clone()),
            output: args.output.clone(),
            ..resolved_run
        };
        report.criticals = Some(resolved.echo);
    } else {
        return Err(CliError::Usage(
            "audit needs one of --builtin, --certify, or --input with --pair".into(),
        ));
    }

    report.violations = report.rays.iter().filter(|r| r.violation.is_some()).count()
        + report.certification.iter().map(|c| c.violations.len()).sum::<usize>();
    report.run = run;
    if let Some(path) = &args.output {
        save_json(path, &report)?;
    }
    let text = if args.json {
        to_json(&report)
    } else {
        render::audit(&report)
    };
    write_out(out, &text)?;
    Ok(if report.violations > 0 {
        EXIT_VIOLATIONS
    } else {
        EXIT_OK
    })
}

fn run_simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            serde_json::from_str::<SimConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SimConfig {
            k: args.k,
            blocks: args.blocks.iter().map(|b| parse_block(b)).collect::<CliResult<_>>()?,
            control_mean: args.control_mean,
            mean_scale: args.mean_scale,
            iterations: 1000,
            rsd_alpha: args.rsd_alpha,
            su_alpha: args.su_alpha,
            seed: DEFAULT_SEED,
        },
    };
    if let Some(n) = args.iterations {
        config.iterations = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let result = simulate(&config)?;
    let report = SimulateReport {
        schema: SCHEMA,
        run: RunSpec {
            subcommand: "simulate".into(),
            input: args.config.clone(),
            output: args.output.clone(),
            seed: Some(config.seed),
            iterations: Some(config.iterations),
            ..RunSpec::default()
        },
        config,
        result,
    };
    if let Some(path) = &args.output {
        save_json(path, &report)?;
    }
    let text = if args.json {
        to_json(&report)
    } else {
        render::simulate(&report)
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn reproduce(args: &ReproduceArgs, out: &mut dyn Write) -> CliResult<i32> {
    let available = intervalmt::sim::reference_rows(args.table)?.len();
    let rows = parse_rows(&args.rows, available)?;
    let seed = seed_or_default(args.seed);
    let table = table_runner(args.table, &rows, args.iterations, seed)?;
    let report = ReproduceReport {
        schema: SCHEMA,
        run: RunSpec {
            subcommand: "reproduce".into(),
            output: args.output.clone(),
            seed: Some(seed),
            table: Some(args.table),
            rows: Some(rows),
            iterations: Some(args.iterations),
            ..RunSpec::default()
        },
        report: table,
    };
    if let Some(path) = &args.output {
        if TableFormat::from_path(path) == TableFormat::Json {
            save_json(path, &report)?;
        } else {
            let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
            write_csv(&report.report, std::io::BufWriter::new(file))?;
        }
    }
    let text = if args.json {
        to_json(&report)
    } else {
        render::reproduce(&report)
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}
