//! Command-line front end. Every command writes CSV into `--out` and prints
//! a few `key=value` lines; failures print one JSON line on stderr and exit
//! with 1 (validation), 2 (I/O) or 3 (remote).

pub mod config;
pub mod remote;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    default_woc_grid, exit_distribution_with_tiers, read_sweep_str, reduction_summary, sweep,
    sweep_runs, write_sweep, write_wrong_agreements, SweepConfig, SweepRecord, SweepSpec,
};
use crate::costmodel::{
    aggregate, cascade_tier_costs, comm_latency, cost_ordering, find_profile, load_tier_fixture,
    make_delay_profile, pareto_frontier, tier_cost, write_cost_report, AggregateReport, BestSingle,
    CostReportRow, ParetoPoint, TierCost, DEFAULT_CANONICAL_DELAYS_MS,
};
use crate::dataset::{generate_synthetic, Label, ModelProfile, PredictionTable, SyntheticSpec};
use crate::engine::{
    run_cascade, traces_to_records, write_traces, Attribution, CascadeRun, CascadeSpec,
};
use crate::error::{Error, Result};

use config::{parse_reals, parse_sizes, CommonArgs, RunConfig};
use remote::{fetch_remote_predictions, FetchOptions, RemoteProviderEndpoint};

#[derive(Debug, Parser)]
#[command(
    name = "coe",
    version,
    about = "Cascade-of-ensembles inference and cost simulation"
)]
pub struct Cli {
    /// Worker threads for example evaluation (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one cascade; write traces, cost report and summary
    Run(CommonArgs),
    /// Evaluate a grid of ensemble sizes and thresholds
    Sweep(SweepArgs),
    /// Pareto frontier of a point or sweep file
    Pareto(ParetoArgs),
    /// Per-tier cost report from a run or from tier-metric fixtures
    CostReport(FixtureArgs),
    /// Simulated edge-to-cloud communication latency
    CommSim(FixtureArgs),
    /// Wrong-agreement analysis over a grid of configurations
    Errors(ErrorsArgs),
    /// Generate a synthetic predictions file
    Synth(SynthArgs),
    /// Check input files without running anything
    Validate(CommonArgs),
    /// Pull predictions from a remote provider
    Fetch(FetchArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ensemble sizes, comma-separated (default: 1 up to the largest tier)
    #[arg(long)]
    pub sizes: Option<String>,
    /// Add the single-model confidence cascade baseline
    #[arg(long)]
    pub woc: bool,
    /// Confidence thresholds for the baseline (default 0.50..0.95 step 0.05, 0.99)
    #[arg(long)]
    pub woc_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    /// `tag,cost,accuracy` file or a sweep CSV
    #[arg(long)]
    pub points: PathBuf,
    /// Cost column when reading a sweep CSV: flops | latency | dollars
    #[arg(long, default_value = "flops")]
    pub cost: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Tier-metric fixture file (repeatable); replaces predictions input
    #[arg(long)]
    pub fixture: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ErrorsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub sizes: Option<String>,
    /// Reference model (default: most accurate model of the last tier)
    #[arg(long)]
    pub big_model: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub examples: usize,
    #[arg(long)]
    pub labels: usize,
    /// Per-model accuracies, comma-separated
    #[arg(long)]
    pub accuracies: String,
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,
    /// Model ids, comma-separated
    #[arg(long)]
    pub models: String,
    /// `example_id,true_label` file
    #[arg(long)]
    pub examples: PathBuf,
    #[arg(long)]
    pub labels: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    /// Fetch models one after another
    #[arg(long)]
    pub serial: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": e.kind(), "code": e.exit_code(), "message": e.to_string()})
            );
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns what it prints on success.
pub fn execute(cli: Cli) -> Result<String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::validation("--threads must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    let threads = cli.threads;
    pool.install(|| match cli.command {
        Command::Run(a) => cmd_run(&RunConfig::from_args(&a, threads)?),
        Command::Sweep(a) => cmd_sweep(&a, threads),
        Command::Pareto(a) => cmd_pareto(&a),
        Command::CostReport(a) => cmd_cost_report(&a, threads),
        Command::CommSim(a) => cmd_comm_sim(&a, threads),
        Command::Errors(a) => cmd_errors(&a, threads),
        Command::Synth(a) => cmd_synth(&a),
        Command::Validate(a) => cmd_validate(&RunConfig::from_args(&a, threads)?),
        Command::Fetch(a) => cmd_fetch(&a),
    })
}

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// The predictions file stem, or its directory's name when the file is just
/// `predictions.csv`.
fn dataset_name(cfg: &RunConfig) -> String {
    let Some(path) = cfg.predictions_path.as_deref() else {
        return "run".into();
    };
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match stem.as_deref() {
        Some("predictions") | None => path
            .canonicalize()
            .ok()
            .and_then(|p| {
                p.parent()?
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
            })
            .unwrap_or_else(|| "run".into()),
        Some(s) => s.to_string(),
    }
}

/// Most accurate model among the cascade's members; ties go to the later one,
/// which sits in a more capable tier.
fn best_single(
    table: &PredictionTable,
    spec: &CascadeSpec,
    profiles: &[ModelProfile],
) -> Result<BestSingle> {
    let mut best: Option<(&str, f64)> = None;
    for m in spec.tiers.iter().flat_map(|t| &t.model_ids) {
        let acc = table.accuracy(table.require_model(m)?);
        if best.is_none_or(|(_, a)| acc >= a) {
            best = Some((m, acc));
        }
    }
    let (id, accuracy) = best.ok_or_else(|| Error::validation("empty cascade"))?;
    let cost = tier_cost(&[find_profile(profiles, id)?], spec.execution_mode)?;
    Ok(BestSingle {
        model_id: Some(id.to_string()),
        cost,
        accuracy: Some(accuracy),
    })
}

struct Evaluated {
    run: CascadeRun,
    per_tier: Vec<TierCost>,
    report: AggregateReport,
    cumulative: AggregateReport,
}

fn evaluate(cfg: &RunConfig) -> Result<(PredictionTable, CascadeSpec, Evaluated)> {
    let table = cfg.load_table()?;
    let profiles = cfg.load_profiles()?;
    let spec = cfg.cascade_spec()?;
    let run = run_cascade(&table, &spec)?;
    let per_tier = cascade_tier_costs(&spec, &profiles)?;
    let best = best_single(&table, &spec, &profiles)?;
    let build = |mode: Attribution| -> Result<AggregateReport> {
        Ok(aggregate(&run.exit_fractions, &per_tier, mode)?
            .with_accuracy(run.accuracy())
            .with_best_single(best.clone()))
    };
    let report = build(spec.attribution_mode)?;
    let cumulative = build(Attribution::Cumulative)?;
    Ok((
        table,
        spec,
        Evaluated {
            run,
            per_tier,
            report,
            cumulative,
        },
    ))
}

fn canonical_delays(cfg: &RunConfig) -> Vec<f64> {
    cfg.delays
        .clone()
        .unwrap_or_else(|| DEFAULT_CANONICAL_DELAYS_MS.to_vec())
}

pub fn cmd_run(cfg: &RunConfig) -> Result<String> {
    let (_, spec, ev) = evaluate(cfg)?;
    let name = dataset_name(cfg);
    let out = &cfg.outputs_dir;

    let mut buf = Vec::new();
    write_traces(&mut buf, &traces_to_records(&ev.run))?;
    write_output(out, "traces.csv", &buf)?;

    let mut buf = Vec::new();
    write_cost_report(&mut buf, &CostReportRow::from_report(&name, &ev.report))?;
    write_output(out, "report.csv", &buf)?;

    let reductions = reduction_summary(&ev.report)?;
    let ordering = cost_ordering(&ev.per_tier);
    let best = ev
        .report
        .best_single
        .as_ref()
        .expect("best single attached");
    let exit = aggregate(&ev.run.exit_fractions, &ev.per_tier, Attribution::ExitTier)?;

    let mut rows: Vec<(String, String)> = vec![
        ("dataset".into(), name),
        ("examples".into(), ev.run.traces.len().to_string()),
        ("tiers".into(), spec.num_tiers().to_string()),
        ("accuracy".into(), format!("{}", ev.run.accuracy())),
        (
            "best_single_model".into(),
            best.model_id.clone().unwrap_or_default(),
        ),
        (
            "best_single_accuracy".into(),
            format!("{}", best.accuracy.unwrap_or(f64::NAN)),
        ),
    ];
    for (t, f) in ev.run.exit_fractions.iter().enumerate() {
        rows.push((format!("exit_fraction_tier_{}", t + 1), format!("{f}")));
    }
    for (label, r) in [
        ("exit", &exit.coe_row),
        ("cumulative", &ev.cumulative.coe_row),
    ] {
        rows.push((format!("coe_flops_{label}"), format!("{}", r.flops)));
        rows.push((
            format!("coe_latency_ms_{label}"),
            format!("{}", r.latency_ms),
        ));
        rows.push((
            format!("coe_gpu_dollars_{label}"),
            format!("{}", r.dollars_per_hour),
        ));
    }
    rows.push(("flops_reduction".into(), format!("{}", reductions.flops)));
    rows.push((
        "latency_reduction".into(),
        format!("{}", reductions.latency),
    ));
    rows.push(("dollar_reduction".into(), format!("{}", reductions.dollars)));
    rows.push(("gamma".into(), format!("{}", ordering.gamma)));
    rows.push((
        "tier_costs_nondecreasing".into(),
        ordering.nondecreasing.to_string(),
    ));
    let canonical = canonical_delays(cfg);
    if let Ok(delays) = make_delay_profile(spec.num_tiers(), &canonical) {
        let lat: Vec<f64> = ev.per_tier.iter().map(|c| c.latency_ms).collect();
        let comm = comm_latency(&ev.run.exit_fractions, &lat, &delays)?;
        rows.push(("comm_coe_ms".into(), format!("{}", comm.coe_ms)));
        rows.push((
            "comm_best_single_ms".into(),
            format!("{}", comm.best_single_ms),
        ));
        rows.push(("comm_reduction".into(), format!("{}", comm.reduction_ratio)));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])
        .map_err(crate::dataset::csv_write_err)?;
    for (k, v) in &rows {
        w.write_record([k, v])
            .map_err(crate::dataset::csv_write_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::validation(e.to_string()))?;
    write_output(out, "summary.csv", &bytes)?;

    Ok(format!(
        "accuracy={:.4}\ncoe_gpu_dollars={:.2}\ncoe_latency_ms={:.2}\ncoe_flops={:.2e}\ndollar_reduction={:.2}\n",
        ev.run.accuracy(),
        ev.report.coe_row.dollars_per_hour,
        ev.report.coe_row.latency_ms,
        ev.report.coe_row.flops,
        reductions.dollars
    ))
}

fn sweep_spec(cfg: &RunConfig, sizes: Option<&str>, woc: Option<Vec<f64>>) -> Result<SweepSpec> {
    let pool = cfg.tier_models()?.to_vec();
    let ensemble_sizes = match sizes {
        Some(s) => parse_sizes(s)?,
        None => (1..=pool.iter().map(Vec::len).max().unwrap_or(1)).collect(),
    };
    Ok(SweepSpec {
        ensemble_sizes,
        thresholds: cfg.theta.clone().unwrap_or_else(|| vec![2.0 / 3.0, 1.0]),
        tier_pool: pool,
        woc_thresholds: woc,
    })
}

pub fn cmd_sweep(args: &SweepArgs, threads: Option<usize>) -> Result<String> {
    let cfg = RunConfig::from_args(&args.common, threads)?;
    let table = cfg.load_table()?;
    let profiles = cfg.load_profiles()?;
    let woc = match (&args.woc_grid, args.woc) {
        (Some(g), _) => Some(parse_reals(g)?),
        (None, true) => Some(default_woc_grid()),
        (None, false) => None,
    };
    let spec = sweep_spec(&cfg, args.sizes.as_deref(), woc)?;
    let points = sweep(&table, &profiles, &spec, cfg.execution_mode)?;
    let records: Vec<SweepRecord> = points.iter().map(SweepRecord::from).collect();
    let mut buf = Vec::new();
    write_sweep(&mut buf, &records)?;
    write_output(&cfg.outputs_dir, "sweep.csv", &buf)?;

    let frontier = pareto_frontier(&points.iter().map(|p| p.to_pareto()).collect::<Vec<_>>());
    write_output(&cfg.outputs_dir, "pareto.csv", &pareto_csv(&frontier)?)?;
    Ok(format!(
        "points={}\nfrontier={}\n",
        points.len(),
        frontier.len()
    ))
}

fn pareto_csv(points: &[ParetoPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tag", "cost", "accuracy"])
        .map_err(crate::dataset::csv_write_err)?;
    for p in points {
        w.write_record([
            p.tag.clone(),
            format!("{}", p.cost),
            format!("{}", p.accuracy),
        ])
        .map_err(crate::dataset::csv_write_err)?;
    }
    w.into_inner().map_err(|e| Error::validation(e.to_string()))
}

/// Reads `tag,cost,accuracy` points, or a sweep CSV using the chosen cost column.
pub fn read_points(text: &str, cost_metric: &str) -> Result<Vec<ParetoPoint>> {
    if text.starts_with("config,") {
        let pick: fn(&SweepRecord) -> f64 = match cost_metric {
            "flops" => |r| r.avg_flops,
            "latency" => |r| r.avg_latency_ms,
            "dollars" => |r| r.gpu_dollars,
            other => {
                return Err(Error::validation(format!(
                    "--cost must be flops, latency or dollars, got {other:?}"
                )))
            }
        };
        return Ok(read_sweep_str(text)?
            .iter()
            .map(|r| {
                let tag = match (r.ensemble_size, r.theta_v) {
                    (Some(k), Some(t)) => format!("{}:size={k}:theta={t}", r.config),
                    (None, Some(t)) => format!("{}:theta={t}", r.config),
                    _ => r.config.clone(),
                };
                ParetoPoint::new(pick(r), r.accuracy, tag)
            })
            .collect());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    if headers.iter().ne(["tag", "cost", "accuracy"]) {
        return Err(Error::cell(1, "-", "expected header tag,cost,accuracy"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        let num = |c: usize, name: &str| {
            rec[c]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::cell(row, name, format!("invalid value {:?}", &rec[c])))
        };
        out.push(ParetoPoint::new(
            num(1, "cost")?,
            num(2, "accuracy")?,
            &rec[0],
        ));
    }
    if out.is_empty() {
        return Err(Error::validation("no points"));
    }
    Ok(out)
}

pub fn cmd_pareto(args: &ParetoArgs) -> Result<String> {
    let text = std::fs::read_to_string(&args.points).map_err(|e| Error::io(&args.points, e))?;
    let points = read_points(&text, &args.cost)?;
    let frontier = pareto_frontier(&points);
    write_output(&args.out, "pareto.csv", &pareto_csv(&frontier)?)?;
    Ok(format!(
        "points={}\nfrontier={}\n",
        points.len(),
        frontier.len()
    ))
}

/// One named report per fixture, or the configured run when no fixture is given.
fn fixture_reports(args: &FixtureArgs, cfg: &RunConfig) -> Result<Vec<(String, AggregateReport)>> {
    if args.fixture.is_empty() {
        let (_, _, ev) = evaluate(cfg)?;
        return Ok(vec![(dataset_name(cfg), ev.report)]);
    }
    args.fixture
        .iter()
        .map(|path| {
            let fx = load_tier_fixture(path)?;
            let report = aggregate(&fx.fractions(), &fx.costs(), cfg.attribution_mode)?
                .with_best_single(BestSingle {
                    model_id: None,
                    cost: fx.best_single,
                    accuracy: None,
                });
            Ok((fx.name, report))
        })
        .collect()
}

pub fn cmd_cost_report(args: &FixtureArgs, threads: Option<usize>) -> Result<String> {
    let cfg = RunConfig::from_args(&args.common, threads)?;
    let reports = fixture_reports(args, &cfg)?;
    let rows: Vec<CostReportRow> = reports
        .iter()
        .flat_map(|(name, r)| CostReportRow::from_report(name, r))
        .collect();
    let mut buf = Vec::new();
    write_cost_report(&mut buf, &rows)?;
    write_output(&cfg.outputs_dir, "report.csv", &buf)?;
    let mut s = String::new();
    for (name, r) in &reports {
        let red = reduction_summary(r)?;
        writeln!(
            s,
            "{name}: coe_gpu_dollars={:.2} dollar_reduction={:.2} latency_reduction={:.2} flops_reduction={:.2}",
            r.coe_row.dollars_per_hour, red.dollars, red.latency, red.flops
        )
        .unwrap();
    }
    Ok(s)
}

pub fn cmd_comm_sim(args: &FixtureArgs, threads: Option<usize>) -> Result<String> {
    let cfg = RunConfig::from_args(&args.common, threads)?;
    let canonical = canonical_delays(&cfg);
    let reports = fixture_reports(args, &cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "tiers",
        "delays_ms",
        "coe_ms",
        "best_single_ms",
        "reduction_ratio",
    ])
    .map_err(crate::dataset::csv_write_err)?;
    let mut s = String::new();
    for (name, r) in &reports {
        let lat: Vec<f64> = r.per_tier.iter().map(|t| t.1.latency_ms).collect();
        let delays = make_delay_profile(lat.len(), &canonical)?;
        let comm = comm_latency(&r.exit_fractions(), &lat, &delays)?;
        let joined = delays
            .delays_ms
            .iter()
            .map(|d| format!("{d}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            name.clone(),
            lat.len().to_string(),
            joined,
            format!("{:.2}", comm.coe_ms),
            format!("{:.2}", comm.best_single_ms),
            format!("{:.2}", comm.reduction_ratio),
        ])
        .map_err(crate::dataset::csv_write_err)?;
        writeln!(
            s,
            "{name}: coe_ms={:.2} best_single_ms={:.2} reduction_ratio={:.2}",
            comm.coe_ms, comm.best_single_ms, comm.reduction_ratio
        )
        .unwrap();
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::validation(e.to_string()))?;
    write_output(&cfg.outputs_dir, "comm.csv", &bytes)?;
    Ok(s)
}

pub fn cmd_errors(args: &ErrorsArgs, threads: Option<usize>) -> Result<String> {
    let cfg = RunConfig::from_args(&args.common, threads)?;
    let table = cfg.load_table()?;
    let spec = sweep_spec(&cfg, args.sizes.as_deref(), None)?;
    let big = match &args.big_model {
        Some(m) => m.clone(),
        None => {
            let last = spec.tier_pool.last().expect("nonempty pool");
            let mut best = (&last[0], -1.0);
            for m in last {
                let acc = table.accuracy(table.require_model(m)?);
                if acc > best.1 {
                    best = (m, acc);
                }
            }
            best.0.clone()
        }
    };
    let rows = sweep_runs(&table, &spec)?
        .iter()
        .map(|(config, run)| {
            let label = match config {
                SweepConfig::Coe {
                    ensemble_size,
                    theta_v,
                } => format!(
                    "{ensemble_size} model{}, threshold={theta_v}",
                    if *ensemble_size == 1 { "" } else { "s" }
                ),
                other => other.label(),
            };
            crate::analysis::wrong_agreements(&label, run, &table, &big)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_wrong_agreements(&mut buf, &rows)?;
    write_output(&cfg.outputs_dir, "wrong_agreements.csv", &buf)?;
    Ok(format!("configs={}\nbig_model={big}\n", rows.len()))
}

/// FNV-1a, 64-bit.
fn checksum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let spec = SyntheticSpec {
        num_examples: args.examples,
        label_space_size: args.labels,
        model_accuracies: parse_reals(&args.accuracies)?,
        correlation: args.correlation,
        seed: args.seed,
    };
    let table = generate_synthetic(&spec)?;
    let csv = table.to_csv_string();
    let path = write_output(&args.out, "predictions.csv", csv.as_bytes())?;
    Ok(format!(
        "wrote={}\nchecksum={:016x}\n",
        path.display(),
        checksum(csv.as_bytes())
    ))
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<String> {
    let table = cfg.load_table()?;
    let mut s = format!(
        "ok examples={} models={} labels={}\n",
        table.num_examples(),
        table.model_ids().len(),
        table.label_space_size()
    );
    if cfg.profiles_path.is_some() {
        let profiles = cfg.load_profiles()?;
        for m in table.model_ids() {
            find_profile(&profiles, m)?;
        }
        writeln!(s, "ok profiles={}", profiles.len()).unwrap();
        if cfg.tiers.is_some() {
            let spec = cfg.cascade_spec()?;
            spec.resolve(&table)?;
            let costs = cascade_tier_costs(&spec, &profiles)?;
            let ord = cost_ordering(&costs);
            writeln!(
                s,
                "ok tiers={} gamma={} nondecreasing={}",
                spec.num_tiers(),
                ord.gamma,
                ord.nondecreasing
            )
            .unwrap();
        }
    } else if cfg.tiers.is_some() {
        cfg.cascade_spec()?.resolve(&table)?;
        writeln!(s, "ok tiers={}", cfg.tier_models()?.len()).unwrap();
    }
    Ok(s)
}

fn read_true_labels(path: &Path, labels: usize) -> Result<(Vec<String>, Vec<Label>)> {
    let mut rdr = crate::dataset::open_csv(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::cell(1, "-", e.to_string()))?
        .clone();
    if headers.iter().ne(["example_id", "true_label"]) {
        return Err(Error::cell(1, "-", "expected header example_id,true_label"));
    }
    let mut ids = Vec::new();
    let mut truth = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::cell(row, "-", e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::cell(row, "-", "ragged row"));
        }
        let l: u32 = rec[1]
            .parse()
            .map_err(|_| Error::cell(row, "true_label", format!("invalid label {:?}", &rec[1])))?;
        if l as usize >= labels {
            return Err(Error::cell(
                row,
                "true_label",
                format!("label out of range: {l}"),
            ));
        }
        ids.push(rec[0].to_string());
        truth.push(Label(l));
    }
    Ok((ids, truth))
}

pub fn cmd_fetch(args: &FetchArgs) -> Result<String> {
    let endpoint = RemoteProviderEndpoint::new(&args.endpoint, args.timeout_ms)?;
    let models: Vec<String> = args
        .models
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(String::from)
        .collect();
    if models.is_empty() {
        return Err(Error::validation("--models is empty"));
    }
    let (ids, truth) = read_true_labels(&args.examples, args.labels)?;
    let fetched = fetch_remote_predictions(
        &endpoint,
        &models,
        &ids,
        args.labels,
        FetchOptions {
            batch_size: args.batch_size,
            concurrent: !args.serial,
        },
    )?;
    let table = fetched.into_table(args.labels, truth)?;
    let csv = table.to_csv_string();
    let path = write_output(&args.out, "predictions.csv", csv.as_bytes())?;
    Ok(format!(
        "wrote={}\nexamples={}\nmodels={}\n",
        path.display(),
        ids.len(),
        models.len()
    ))
}

/// Exit histogram of a run, sized to its tier count.
pub fn exit_histogram(run: &CascadeRun) -> Vec<f64> {
    exit_distribution_with_tiers(&run.traces, run.num_tiers).fractions
}
