//! One function per subcommand. Each resolves its configuration, runs the
//! library driver, prints a human-readable digest (interval tables use 15
//! decimals, machine files 17 significant digits), writes its data files,
//! and seals the run manifest. Failures map onto the exit-code contract:
//! usage/config 2, failed check 1, non-convergence 3.

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

use ddtk::analysis::{
    certify_lower_bound, compare_schedules, jitter_study, log_grid, machine_float,
    min_moment_residual_on_grid, resolve_schedule, scaling_sweep, summarize_curves, write_csv,
    AnalysisError, ComparisonSpec, CurveSummary, ErrorCurve, GridSearchOutcome, JitterSpec, Metric,
    NamedSchedule, SweepFailure, SweepPoint, SweepSpec,
};
use ddtk::pauli::{CharacterError, DecouplingGroup, PauliString};
use ddtk::schedule::{verify_order, DocumentError, ScheduleDocument, MOMENT_TOL_PUBLISHED};
use ddtk::seqgen::{
    optimize_schedule, published_intervals, published_schedule, single_qubit_axes, SeqGenError,
    GENERATED_MOMENT_TOL, PUBLISHED_MAX_ORDER,
};
use ddtk::OptimizerConfig;

use crate::manifest::Run;

#[derive(Debug, Error)]
pub enum CmdError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    NonConverged(String),
}

impl CmdError {
    pub fn code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Failed(_) => 1,
            CmdError::NonConverged(_) => 3,
        }
    }
}

impl From<io::Error> for CmdError {
    fn from(err: io::Error) -> Self {
        CmdError::Usage(err.to_string())
    }
}

impl From<DocumentError> for CmdError {
    fn from(err: DocumentError) -> Self {
        CmdError::Usage(err.to_string())
    }
}

impl From<AnalysisError> for CmdError {
    fn from(err: AnalysisError) -> Self {
        CmdError::Usage(err.to_string())
    }
}

impl From<SeqGenError> for CmdError {
    fn from(err: SeqGenError) -> Self {
        CmdError::Usage(err.to_string())
    }
}

impl From<CharacterError> for CmdError {
    fn from(err: CharacterError) -> Self {
        CmdError::Usage(err.to_string())
    }
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

fn csv_bytes(rows: &[SweepPoint]) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_csv(&mut bytes, rows).expect("vec write cannot fail");
    bytes
}

/// `published:3` -> `published-3`: sequence ids double as file-name stems.
fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect()
}

fn interval_table(intervals: &[f64]) -> String {
    let mut table = String::new();
    for (i, dt) in intervals.iter().enumerate() {
        let _ = writeln!(table, "{:>3}  {:.15}", i + 1, dt);
    }
    table
}

fn parse_pattern(text: &str) -> Result<Vec<PauliString>, CmdError> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|err| CmdError::Usage(format!("bad --pattern entry {p:?}: {err}")))
        })
        .collect()
}

fn parse_float_list(text: &str, flag: &str) -> Result<Vec<f64>, CmdError> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CmdError::Usage(format!("bad {flag} entry {x:?}")))
        })
        .collect()
}

/// Accepts either a sequence spec string or a path to a schedule file; an
/// existing file wins. Returns the path so callers can record the input.
fn load_sequence(spec_or_path: &str) -> Result<(NamedSchedule, Option<PathBuf>), CmdError> {
    let path = Path::new(spec_or_path);
    if path.is_file() {
        let doc = ScheduleDocument::from_json(&fs::read_to_string(path)?)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "schedule".into());
        let named = NamedSchedule {
            id,
            k: doc.k,
            schedule: doc.schedule,
        };
        return Ok((named, Some(path.to_path_buf())));
    }
    Ok((resolve_schedule(spec_or_path)?, None))
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricArg {
    OperatorNorm,
    MeanTraceDistance,
}

impl From<MetricArg> for Metric {
    fn from(arg: MetricArg) -> Metric {
        match arg {
            MetricArg::OperatorNorm => Metric::OperatorNorm,
            MetricArg::MeanTraceDistance => Metric::MeanTraceDistance,
        }
    }
}

#[derive(Args, Serialize)]
pub struct GenerateArgs {
    /// Target cancellation order K >= 1.
    pub k: usize,

    /// Pulse ops applied cyclically between segments, comma separated.
    #[arg(long, default_value = "X,Z")]
    pub pattern: String,

    /// Multi-start count; start 0 is the flat schedule.
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Seed for the randomized starts.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Residual-evaluation budget per start.
    #[arg(long)]
    pub evaluations: Option<usize>,
}

#[derive(Serialize)]
struct GenerateReport {
    k: usize,
    phi: f64,
    evaluations: usize,
    starts: usize,
    converged: bool,
    collapsed: bool,
    max_abs_moment: f64,
    intervals: Vec<f64>,
}

pub fn generate(out: &Path, args: &GenerateArgs) -> Result<(), CmdError> {
    let mut config = OptimizerConfig::order(args.k);
    config.pattern = parse_pattern(&args.pattern)?;
    if let Some(restarts) = args.restarts {
        config.restarts = restarts;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(budget) = args.evaluations {
        config.max_evaluations = budget;
    }
    let mut run = Run::start(
        out,
        serde_json::json!({ "generate": args }),
        Some(config.seed),
    )?;
    let group = DecouplingGroup::single_qubit();
    let axes = single_qubit_axes();
    let (result, schedule) = optimize_schedule(&config, &group, &axes)?;
    let check = verify_order(&schedule, &axes, args.k, GENERATED_MOMENT_TOL)?;

    println!(
        "order K = {}, {} segments, {} interior pulses",
        args.k,
        schedule.segment_count(),
        schedule.pulse_count().interior
    );
    print!("{}", interval_table(&result.intervals));
    println!("phi = {}", machine_float(result.phi));
    println!(
        "max |moment| through order {} = {}",
        args.k,
        machine_float(check.max_abs_moment)
    );
    println!(
        "{} residual evaluations across {} starts",
        result.evaluations, result.starts
    );

    let stem = format!("k{}_s{}", args.k, config.seed);
    let doc = ScheduleDocument::new(args.k, schedule);
    run.write_output(
        &format!("schedule_{stem}.json"),
        format!("{}\n", doc.to_json()).as_bytes(),
    )?;
    let report = GenerateReport {
        k: args.k,
        phi: result.phi,
        evaluations: result.evaluations,
        starts: result.starts,
        converged: result.converged,
        collapsed: result.collapsed,
        max_abs_moment: check.max_abs_moment,
        intervals: result.intervals,
    };
    run.write_output(&format!("generate_{stem}.json"), &to_json_bytes(&report))?;
    run.finish()?;
    if !result.converged {
        return Err(CmdError::NonConverged(format!(
            "optimizer did not converge (phi = {}); best schedule saved as schedule_{stem}.json",
            machine_float(result.phi)
        )));
    }
    println!("saved schedule_{stem}.json");
    Ok(())
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    /// Schedule JSON file.
    pub schedule: PathBuf,

    /// Order to check; defaults to the K declared in the file.
    #[arg(long)]
    pub order: Option<usize>,

    /// Largest allowed absolute moment.
    #[arg(long, default_value_t = MOMENT_TOL_PUBLISHED)]
    pub tol: f64,
}

#[derive(Serialize)]
struct MomentRow {
    axis: String,
    moments: Vec<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    file: String,
    declared_k: usize,
    checked_order: usize,
    tol: f64,
    max_abs_moment: f64,
    worst_axis: String,
    worst_moment_index: usize,
    pass: bool,
    moments: Vec<MomentRow>,
}

pub fn verify(out: &Path, args: &VerifyArgs) -> Result<(), CmdError> {
    let mut run = Run::start(out, serde_json::json!({ "verify": args }), None)?;
    run.record_input(&args.schedule)?;
    let doc = ScheduleDocument::from_json(&fs::read_to_string(&args.schedule)?)?;
    if doc.schedule.group().n_qubits() != 1 {
        return Err(CmdError::Usage(
            "verification axes are defined for single-qubit groups only".into(),
        ));
    }
    let k = args.order.unwrap_or(doc.k);
    if k == 0 {
        return Err(CmdError::Usage("--order must be at least 1".into()));
    }
    let check = verify_order(&doc.schedule, &single_qubit_axes(), k, args.tol)?;

    println!(
        "{}: declares K = {}, {} segments, {} interior pulses",
        args.schedule.display(),
        doc.k,
        doc.schedule.segment_count(),
        doc.schedule.pulse_count().interior
    );
    let moments: Vec<MomentRow> = check
        .moments
        .axes()
        .iter()
        .enumerate()
        .map(|(a, axis)| MomentRow {
            axis: axis.to_string(),
            moments: check.moments.row(a).to_vec(),
        })
        .collect();
    for row in &moments {
        let rendered: Vec<String> = row.moments.iter().map(|m| machine_float(*m)).collect();
        println!("  {}: {}", row.axis, rendered.join("  "));
    }
    println!(
        "max |moment| = {} at axis {}, m = {}",
        machine_float(check.max_abs_moment),
        check.worst_axis,
        check.worst_moment_index
    );
    println!(
        "order {} at tol {:e}: {}",
        k,
        args.tol,
        if check.pass { "PASS" } else { "FAIL" }
    );

    let report = VerifyReport {
        file: args.schedule.display().to_string(),
        declared_k: doc.k,
        checked_order: k,
        tol: args.tol,
        max_abs_moment: check.max_abs_moment,
        worst_axis: check.worst_axis.to_string(),
        worst_moment_index: check.worst_moment_index,
        pass: check.pass,
        moments,
    };
    let stem = args
        .schedule
        .file_stem()
        .map(|s| sanitize(&s.to_string_lossy()))
        .unwrap_or_else(|| "schedule".into());
    run.write_output(&format!("verify_{stem}.json"), &to_json_bytes(&report))?;
    run.finish()?;
    if check.pass {
        Ok(())
    } else {
        Err(CmdError::Failed(format!(
            "max |moment| {:e} exceeds tol {:e} at order {k}",
            check.max_abs_moment, args.tol
        )))
    }
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// Sequence spec (xy4 | published:K | udd:N | qdd:N | generated:K[:SEED])
    /// or a path to a schedule JSON file.
    pub sequence: String,

    /// System-bath coupling strength.
    #[arg(long, default_value_t = 1e-4)]
    pub j: f64,

    /// Single evolution time; overrides the grid flags.
    #[arg(long)]
    pub t: Option<f64>,

    #[arg(long, default_value_t = 1e-2)]
    pub t_min: f64,

    #[arg(long, default_value_t = 1e2)]
    pub t_max: f64,

    #[arg(long, default_value_t = 41)]
    pub points: usize,

    /// Independent bath draws averaged per grid point.
    #[arg(long, default_value_t = 4)]
    pub models: usize,

    /// Haar product states; required by the trace-distance metric.
    #[arg(long, default_value_t = 0)]
    pub states: usize,

    #[arg(long, value_enum, default_value_t = MetricArg::OperatorNorm)]
    pub metric: MetricArg,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Serialize)]
struct SweepSummary {
    curves: Vec<CurveSummary>,
    failures: Vec<SweepFailure>,
}

fn print_curve_digest(summary: &CurveSummary) {
    println!(
        "{} K={} J={:e}: {} rows, {} failures",
        summary.sequence_id, summary.k, summary.j, summary.points, summary.failures
    );
    if let Some(fit) = &summary.fit {
        println!(
            "  small-T slope {:.3} +- {:.3} on [{:.3e}, {:.3e}]",
            fit.small.slope, fit.small.slope_stderr, fit.small.t_lo, fit.small.t_hi
        );
        println!(
            "  large-T slope {:.3} +- {:.3} on [{:.3e}, {:.3e}]",
            fit.large.slope, fit.large.slope_stderr, fit.large.t_lo, fit.large.t_hi
        );
        match fit.crossover {
            Some(tc) => println!("  crossover T = {:.6e}", tc),
            None => println!("  crossover undefined (slopes coincide)"),
        }
    }
}

/// Shared tail for every sweep-shaped command: write CSV + JSON summary,
/// seal the manifest, and fail with exit 3 when a whole curve produced no
/// usable points.
fn finish_sweep(mut run: Run, stem: &str, curves: &[ErrorCurve]) -> Result<(), CmdError> {
    let rows: Vec<SweepPoint> = curves.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    let failures: Vec<SweepFailure> = curves
        .iter()
        .flat_map(|c| c.failures.iter().cloned())
        .collect();
    let summary = SweepSummary {
        curves: summarize_curves(curves),
        failures,
    };
    run.write_output(&format!("{stem}.csv"), &csv_bytes(&rows))?;
    run.write_output(&format!("{stem}.json"), &to_json_bytes(&summary))?;
    let dir = run.out_dir().display().to_string();
    run.finish()?;
    println!("wrote {stem}.csv, {stem}.json in {dir}");
    if let Some(empty) = curves.iter().find(|c| c.rows.is_empty()) {
        return Err(CmdError::NonConverged(format!(
            "no grid point of {} at J = {:e} succeeded; see {stem}.json",
            empty.sequence_id, empty.j
        )));
    }
    Ok(())
}

pub fn simulate(out: &Path, args: &SimulateArgs) -> Result<(), CmdError> {
    let (sequence, input) = load_sequence(&args.sequence)?;
    let mut run = Run::start(
        out,
        serde_json::json!({ "simulate": args }),
        Some(args.seed),
    )?;
    if let Some(path) = &input {
        run.record_input(path)?;
    }
    let times = match args.t {
        Some(t) if t > 0.0 && t.is_finite() => vec![t],
        Some(t) => return Err(CmdError::Usage(format!("--t must be positive, got {t}"))),
        None => log_grid(args.t_min, args.t_max, args.points)?,
    };
    let stem = format!("simulate_{}_s{}", sanitize(&sequence.id), args.seed);
    let spec = SweepSpec {
        sequences: vec![sequence],
        couplings: vec![args.j],
        times,
        n_models: args.models,
        n_states: args.states,
        metric: args.metric.into(),
        master_seed: args.seed,
    };
    let curves = scaling_sweep(&spec)?;
    let curve = &curves[0];
    println!(
        "{} at J = {:e}, {} models, metric {}",
        curve.sequence_id,
        curve.j,
        args.models,
        Metric::from(args.metric)
    );
    for (t, value) in curve.times.iter().zip(&curve.values) {
        println!("  T = {:12.6e}   {:.6e}", t, value);
    }
    print_curve_digest(&summarize_curves(&curves)[0]);
    finish_sweep(run, &stem, &curves)
}

pub const SWEEP_CONFIG_VERSION: u32 = 1;

#[derive(Args, Serialize)]
pub struct SweepArgs {
    /// TOML sweep configuration.
    pub config: PathBuf,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    version: u32,
    sequences: Vec<String>,
    couplings: Vec<f64>,
    metric: Metric,
    models: usize,
    #[serde(default)]
    states: usize,
    master_seed: u64,
    grid: GridConfig,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    #[serde(default)]
    min: Option<f64>,
    #[serde(default)]
    max: Option<f64>,
    #[serde(default)]
    points: Option<usize>,
    /// Explicit time grid; wins over min/max/points.
    #[serde(default)]
    times: Option<Vec<f64>>,
}

impl GridConfig {
    fn resolve(&self) -> Result<Vec<f64>, CmdError> {
        if let Some(times) = &self.times {
            return Ok(times.clone());
        }
        match (self.min, self.max, self.points) {
            (Some(min), Some(max), Some(points)) => Ok(log_grid(min, max, points)?),
            _ => Err(CmdError::Usage(
                "grid needs either times or all of min, max, points".into(),
            )),
        }
    }
}

pub fn sweep(out: &Path, args: &SweepArgs) -> Result<(), CmdError> {
    let text = fs::read_to_string(&args.config)?;
    let config: SweepConfig =
        toml::from_str(&text).map_err(|err| CmdError::Usage(format!("bad sweep config: {err}")))?;
    if config.version != SWEEP_CONFIG_VERSION {
        return Err(CmdError::Usage(format!(
            "sweep config version {} is not supported (expected {SWEEP_CONFIG_VERSION})",
            config.version
        )));
    }
    let times = config.grid.resolve()?;
    let sequences: Vec<NamedSchedule> = config
        .sequences
        .iter()
        .map(|s| resolve_schedule(s))
        .collect::<Result<_, _>>()?;
    let snapshot = serde_json::json!({
        "sweep": { "config_file": args.config, "config": config }
    });
    let mut run = Run::start(out, snapshot, Some(config.master_seed))?;
    run.record_input(&args.config)?;
    let spec = SweepSpec {
        sequences,
        couplings: config.couplings,
        times,
        n_models: config.models,
        n_states: config.states,
        metric: config.metric,
        master_seed: config.master_seed,
    };
    let curves = scaling_sweep(&spec)?;
    for summary in summarize_curves(&curves) {
        print_curve_digest(&summary);
    }
    finish_sweep(run, &format!("sweep_s{}", config.master_seed), &curves)
}

#[derive(Args, Serialize)]
pub struct CompareArgs {
    /// Our order K; runs the published:K sequence.
    #[arg(long)]
    pub ours: usize,

    /// Nested-Uhrig order; runs the qdd:N sequence.
    #[arg(long)]
    pub qdd: usize,

    /// Coupling strengths, comma separated.
    #[arg(long, default_value = "1e-5,1e-4")]
    pub j: String,

    /// Haar product states shared by both sequences.
    #[arg(long, default_value_t = 100)]
    pub states: usize,

    #[arg(long, default_value_t = 5)]
    pub models: usize,

    /// Grid defaults cover the decade below the low-coupling crossover.
    #[arg(long, default_value_t = 0.5623413251903491)]
    pub t_min: f64,

    #[arg(long, default_value_t = 5.623413251903491)]
    pub t_max: f64,

    #[arg(long, default_value_t = 9)]
    pub points: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Serialize)]
struct WinFraction {
    j: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct CompareSummary {
    first_id: String,
    first_k: usize,
    first_pulses: usize,
    second_id: String,
    second_k: usize,
    second_pulses: usize,
    states: usize,
    models: usize,
    win_fractions: Vec<WinFraction>,
}

pub fn compare(out: &Path, args: &CompareArgs) -> Result<(), CmdError> {
    let first = resolve_schedule(&format!("published:{}", args.ours))?;
    let second = resolve_schedule(&format!("qdd:{}", args.qdd))?;
    let couplings = parse_float_list(&args.j, "--j")?;
    let times = log_grid(args.t_min, args.t_max, args.points)?;
    let mut run = Run::start(out, serde_json::json!({ "compare": args }), Some(args.seed))?;
    let spec = ComparisonSpec {
        first,
        second,
        couplings: couplings.clone(),
        times,
        n_models: args.models,
        n_states: args.states,
        master_seed: args.seed,
    };
    let comparison = compare_schedules(&spec)?;
    println!(
        "{} ({} pulses) vs {} ({} pulses), {} states, {} models",
        comparison.first_id,
        comparison.first_pulses.total,
        comparison.second_id,
        comparison.second_pulses.total,
        args.states,
        args.models
    );
    let win_fractions: Vec<WinFraction> = couplings
        .iter()
        .map(|&j| {
            let fraction = comparison.win_fraction(j);
            println!("  J = {j:e}: win fraction {fraction:.2}");
            WinFraction { j, fraction }
        })
        .collect();

    let mut rows = Vec::with_capacity(2 * comparison.points.len());
    for point in &comparison.points {
        rows.push(SweepPoint {
            sequence_id: comparison.first_id.clone(),
            k: comparison.first_k,
            j: point.j,
            t: point.t,
            seed: args.seed,
            metric: Metric::MeanTraceDistance,
            value: point.first,
        });
        rows.push(SweepPoint {
            sequence_id: comparison.second_id.clone(),
            k: comparison.second_k,
            j: point.j,
            t: point.t,
            seed: args.seed,
            metric: Metric::MeanTraceDistance,
            value: point.second,
        });
    }
    let summary = CompareSummary {
        first_id: comparison.first_id.clone(),
        first_k: comparison.first_k,
        first_pulses: comparison.first_pulses.total,
        second_id: comparison.second_id.clone(),
        second_k: comparison.second_k,
        second_pulses: comparison.second_pulses.total,
        states: args.states,
        models: args.models,
        win_fractions,
    };
    let stem = format!("compare_{}_vs_{}_s{}", args.ours, args.qdd, args.seed);
    run.write_output(&format!("{stem}.csv"), &csv_bytes(&rows))?;
    run.write_output(&format!("{stem}.json"), &to_json_bytes(&summary))?;
    let dir = run.out_dir().display().to_string();
    run.finish()?;
    println!("wrote {stem}.csv, {stem}.json in {dir}");
    Ok(())
}

#[derive(Args, Serialize)]
pub struct CertifyArgs {
    /// Claimed cancellation order.
    #[arg(long)]
    pub k: usize,

    /// Grid resolution for the exhaustive r = K-1 search; cost grows as
    /// grid^(K-1).
    #[arg(long, default_value_t = 200)]
    pub grid: usize,

    /// Randomized flip configurations with r < K to certify.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Allowed |value - 1| roundoff in the telescoping identity.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Serialize)]
struct CertifyReport {
    k: usize,
    samples: usize,
    seed: u64,
    tol: f64,
    max_deviation: f64,
    grid_search: GridSearchOutcome,
}

/// Sorted distinct flips in (0.02, 0.8): away from the endpoints the
/// witness leading factor stays bounded and the telescoping sum holds the
/// 1e-12 roundoff budget.
fn draw_flips(rng: &mut ChaCha12Rng, count: usize) -> Vec<f64> {
    loop {
        let mut flips: Vec<f64> = (0..count).map(|_| rng.random_range(0.02..0.8)).collect();
        flips.sort_by(f64::total_cmp);
        if flips.windows(2).all(|w| w[0] < w[1]) {
            return flips;
        }
    }
}

pub fn certify(out: &Path, args: &CertifyArgs) -> Result<(), CmdError> {
    if args.k == 0 {
        return Err(CmdError::Usage("--k must be at least 1".into()));
    }
    let mut run = Run::start(out, serde_json::json!({ "certify": args }), Some(args.seed))?;
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let mut max_deviation = 0.0f64;
    for _ in 0..args.samples {
        let r = rng.random_range(0..args.k);
        let flips = draw_flips(&mut rng, r);
        let last_sign = if rng.random::<bool>() { 1 } else { -1 };
        let certificate = certify_lower_bound(&flips, args.k, last_sign)?;
        max_deviation = max_deviation.max((certificate.value - 1.0).abs());
    }
    let grid_search = min_moment_residual_on_grid(args.k, args.grid)?;
    println!(
        "{} random configurations below order {}: max |value - 1| = {}",
        args.samples,
        args.k,
        machine_float(max_deviation)
    );
    println!(
        "grid {} exhaustive search with {} flips: min residual {} over {} configurations",
        args.grid,
        args.k - 1,
        machine_float(grid_search.min_residual),
        grid_search.configurations
    );
    let report = CertifyReport {
        k: args.k,
        samples: args.samples,
        seed: args.seed,
        tol: args.tol,
        max_deviation,
        grid_search,
    };
    run.write_output(
        &format!("certify_k{}.json", args.k),
        &to_json_bytes(&report),
    )?;
    run.finish()?;
    if max_deviation <= args.tol {
        Ok(())
    } else {
        Err(CmdError::Failed(format!(
            "telescoping identity drifted to |value - 1| = {} (tol {})",
            machine_float(max_deviation),
            machine_float(args.tol)
        )))
    }
}

#[derive(Args, Serialize)]
pub struct JitterArgs {
    /// Decimal digits kept in each interval.
    #[arg(long)]
    pub digits: u32,

    /// Base sequence spec or schedule file.
    #[arg(long, default_value = "published:3")]
    pub sequence: String,

    #[arg(long, default_value_t = 1e-3)]
    pub j: f64,

    #[arg(long, default_value_t = 3)]
    pub models: usize,

    #[arg(long, default_value_t = 1e-4)]
    pub t_min: f64,

    #[arg(long, default_value_t = 1e2)]
    pub t_max: f64,

    /// Default 61 over six decades keeps exact decade shifts on-grid.
    #[arg(long, default_value_t = 61)]
    pub points: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Serialize)]
struct JitterReport {
    sequence_id: String,
    k: usize,
    digits: u32,
    j: f64,
    divergence_time: Option<f64>,
    truncated_cut_times: Vec<f64>,
}

pub fn jitter(out: &Path, args: &JitterArgs) -> Result<(), CmdError> {
    let (sequence, input) = load_sequence(&args.sequence)?;
    let mut run = Run::start(out, serde_json::json!({ "jitter": args }), Some(args.seed))?;
    if let Some(path) = &input {
        run.record_input(path)?;
    }
    let spec = JitterSpec {
        digits: args.digits,
        j: args.j,
        times: log_grid(args.t_min, args.t_max, args.points)?,
        n_models: args.models,
        master_seed: args.seed,
    };
    let study = jitter_study(&sequence.schedule, &spec)?;
    println!(
        "{} with intervals kept to {} digits at J = {:e}",
        sequence.id, args.digits, args.j
    );
    match study.divergence_time {
        Some(tc) => println!(
            "divergence time T_c = {:.6e} (largest T with >2x disagreement)",
            tc
        ),
        None => println!("no 2x disagreement anywhere on the grid"),
    }

    let truncated_id = format!("{}~d{}", sequence.id, args.digits);
    let mut rows = Vec::with_capacity(2 * study.times.len());
    for (i, &t) in study.times.iter().enumerate() {
        rows.push(SweepPoint {
            sequence_id: sequence.id.clone(),
            k: sequence.k,
            j: args.j,
            t,
            seed: args.seed,
            metric: Metric::OperatorNorm,
            value: study.baseline[i],
        });
        rows.push(SweepPoint {
            sequence_id: truncated_id.clone(),
            k: sequence.k,
            j: args.j,
            t,
            seed: args.seed,
            metric: Metric::OperatorNorm,
            value: study.truncated[i],
        });
    }
    let report = JitterReport {
        sequence_id: sequence.id.clone(),
        k: sequence.k,
        digits: args.digits,
        j: args.j,
        divergence_time: study.divergence_time,
        truncated_cut_times: study.truncated_schedule.cut_times().to_vec(),
    };
    let stem = format!(
        "jitter_{}_d{}_s{}",
        sanitize(&sequence.id),
        args.digits,
        args.seed
    );
    run.write_output(&format!("{stem}.csv"), &csv_bytes(&rows))?;
    run.write_output(&format!("{stem}.json"), &to_json_bytes(&report))?;
    let dir = run.out_dir().display().to_string();
    run.finish()?;
    println!("wrote {stem}.csv, {stem}.json in {dir}");
    Ok(())
}

#[derive(Serialize)]
struct PublishedEntry {
    k: usize,
    intervals: Vec<f64>,
    max_abs_moment: f64,
}

pub fn table_s1(out: &Path) -> Result<(), CmdError> {
    let mut run = Run::start(out, serde_json::json!({ "table-s1": {} }), None)?;
    let axes = single_qubit_axes();
    let mut dump = Vec::with_capacity(PUBLISHED_MAX_ORDER);
    for k in 1..=PUBLISHED_MAX_ORDER {
        let intervals = published_intervals(k).expect("k in published range");
        let schedule = published_schedule(k).expect("k in published range");
        let check = verify_order(&schedule, &axes, k, MOMENT_TOL_PUBLISHED)?;
        println!(
            "K = {k}: {} intervals, max |moment| = {}",
            intervals.len(),
            machine_float(check.max_abs_moment)
        );
        print!("{}", interval_table(intervals));
        dump.push(PublishedEntry {
            k,
            intervals: intervals.to_vec(),
            max_abs_moment: check.max_abs_moment,
        });
    }
    run.write_output("published_intervals.json", &to_json_bytes(&dump))?;
    run.finish()?;
    Ok(())
}
