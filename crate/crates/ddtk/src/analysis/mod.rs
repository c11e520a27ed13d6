//! Experiment drivers: error-scaling sweeps, slope and crossover fits,
//! nested-Uhrig comparisons, timing-jitter studies, and the flip-count
//! lower-bound certificate.
//!
//! Every random draw is seeded through [`derive_seed`], so sweep output is
//! a pure function of the master seed and the grid, independent of worker
//! count and execution order.

mod certify;
mod fits;

pub use certify::{
    certify_lower_bound, min_moment_residual_on_grid, single_axis_moments, Certificate,
    GridSearchOutcome,
};
pub use fits::{
    fit_slopes, fit_slopes_with, FitOptions, LineFit, SlopeFit, FIT_CEILING, FIT_FLOOR,
    MIN_WINDOW_POINTS, SLOPE_SEPARATION,
};

use std::fmt;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    evolve, haar_product_states, sample_model, trace_distances_of, DynamicsError, ProductState,
    QuantumNoiseModel,
};
use crate::pauli::DecouplingGroup;
use crate::schedule::{PulseCount, PulseSchedule, ScheduleError};
use crate::seqgen::{
    optimize_schedule, published_schedule, qdd_schedule, single_qubit_axes, udd_schedule,
    xy4_schedule, OptimizerConfig, SeqGenError,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0} grid is empty")]
    EmptyGrid(&'static str),
    #[error("{0} grid must be finite, positive, and strictly increasing")]
    BadGrid(&'static str),
    #[error("coupling must be finite and non-negative, got {0}")]
    BadCoupling(f64),
    #[error("model count must be positive")]
    NoModels,
    #[error("state samples must be positive for the trace-distance metric")]
    NoStates,
    #[error(
        "unknown sequence '{0}' (expected xy4 | published:K | udd:N | qdd:N | generated:K[:SEED])"
    )]
    UnknownSequence(String),
    #[error("no points between the noise floor and saturation to fit")]
    NothingToFit,
    #[error("{which} window has {got} usable points, needs {needed}")]
    WindowTooShort {
        which: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("flip points must be strictly increasing inside (0, 1)")]
    BadFlips,
    #[error("last segment sign must be +1 or -1, got {0}")]
    BadSign(i32),
    #[error("certificate needs fewer flips than the order, got {flips} at order {order}")]
    NotApplicable { flips: usize, order: usize },
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("kept digits must be at least 1")]
    ZeroDigits,
    #[error("grid needs at least {needed} points to place {flips} flips")]
    GridTooCoarse { needed: usize, flips: usize },
    #[error("truncation to {digits} digits broke the schedule: {source}")]
    Truncation {
        digits: u32,
        #[source]
        source: ScheduleError,
    },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Generation(#[from] SeqGenError),
}

/// Splitmix-style finalizer: one 64-bit avalanche round.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stable per-task seed derivation: hash the stream tag (FNV-1a), offset by
/// the task index, and avalanche. Identical across platforms and releases;
/// changing any argument changes the result.
pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    let mut tag = 0xcbf29ce484222325u64;
    for b in stream.bytes() {
        tag ^= u64::from(b);
        tag = tag.wrapping_mul(0x100000001b3);
    }
    mix(master
        .wrapping_add(mix(tag))
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15)))
}

/// Sequential or rayon map depending on the `parallel` feature; output
/// order always matches input order.
pub(crate) fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    OperatorNorm,
    MeanTraceDistance,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::OperatorNorm => "operator_norm",
            Metric::MeanTraceDistance => "mean_trace_distance",
        })
    }
}

/// A schedule tagged with its claimed cancellation order and a stable id
/// for CSV rows.
#[derive(Clone, Debug)]
pub struct NamedSchedule {
    pub id: String,
    pub k: usize,
    pub schedule: PulseSchedule,
}

/// Parses a sequence spec: `xy4`, `published:K` (K = 1..8), `udd:N` (z
/// axis), `qdd:N`, or `generated:K[:SEED]` (runs the optimizer).
pub fn resolve_schedule(spec: &str) -> Result<NamedSchedule, AnalysisError> {
    let unknown = || AnalysisError::UnknownSequence(spec.to_string());
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["xy4"] => Ok(NamedSchedule {
            id: "xy4".into(),
            k: 1,
            schedule: xy4_schedule(),
        }),
        ["published", k] => {
            let k: usize = k.parse().map_err(|_| unknown())?;
            let schedule = published_schedule(k).ok_or_else(unknown)?;
            Ok(NamedSchedule {
                id: format!("published:{k}"),
                k,
                schedule,
            })
        }
        ["udd", n] => {
            let n: usize = n.parse().map_err(|_| unknown())?;
            let axis = "Z".parse().expect("valid");
            Ok(NamedSchedule {
                id: format!("udd:{n}"),
                k: n,
                schedule: udd_schedule(n, &axis)?,
            })
        }
        ["qdd", n] => {
            let n: usize = n.parse().map_err(|_| unknown())?;
            Ok(NamedSchedule {
                id: format!("qdd:{n}"),
                k: n,
                schedule: qdd_schedule(n)?,
            })
        }
        ["generated", k] | ["generated", k, _] => {
            let k: usize = k.parse().map_err(|_| unknown())?;
            let mut config = OptimizerConfig::order(k);
            if let ["generated", _, seed] = parts.as_slice() {
                config.seed = seed.parse().map_err(|_| unknown())?;
            }
            let group = DecouplingGroup::single_qubit();
            let (_, schedule) = optimize_schedule(&config, &group, &single_qubit_axes())?;
            Ok(NamedSchedule {
                id: format!("generated:{k}:{}", config.seed),
                k,
                schedule,
            })
        }
        _ => Err(unknown()),
    }
}

/// Log-spaced grid from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>, AnalysisError> {
    if count < 2 {
        return Err(AnalysisError::EmptyGrid("time"));
    }
    if !(min.is_finite() && max.is_finite()) || min <= 0.0 || max <= min {
        return Err(AnalysisError::BadGrid("time"));
    }
    let (a, b) = (min.log10(), max.log10());
    Ok((0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect())
}

fn check_times(times: &[f64]) -> Result<(), AnalysisError> {
    if times.is_empty() {
        return Err(AnalysisError::EmptyGrid("time"));
    }
    let ok =
        times.iter().all(|t| t.is_finite() && *t > 0.0) && times.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        return Err(AnalysisError::BadGrid("time"));
    }
    Ok(())
}

fn check_couplings(couplings: &[f64]) -> Result<(), AnalysisError> {
    if couplings.is_empty() {
        return Err(AnalysisError::EmptyGrid("coupling"));
    }
    match couplings.iter().find(|j| !j.is_finite() || **j < 0.0) {
        Some(&j) => Err(AnalysisError::BadCoupling(j)),
        None => Ok(()),
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub sequences: Vec<NamedSchedule>,
    pub couplings: Vec<f64>,
    pub times: Vec<f64>,
    pub n_models: usize,
    pub n_states: usize,
    pub metric: Metric,
    pub master_seed: u64,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.sequences.is_empty() {
            return Err(AnalysisError::EmptyGrid("sequence"));
        }
        check_couplings(&self.couplings)?;
        check_times(&self.times)?;
        if self.n_models == 0 {
            return Err(AnalysisError::NoModels);
        }
        if self.metric == Metric::MeanTraceDistance && self.n_states == 0 {
            return Err(AnalysisError::NoStates);
        }
        Ok(())
    }
}

/// One CSV row: the metric value for one (sequence, J, T, model seed).
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub sequence_id: String,
    pub k: usize,
    pub j: f64,
    pub t: f64,
    pub seed: u64,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepFailure {
    pub sequence_id: String,
    pub j: f64,
    pub t: f64,
    pub seed: u64,
    pub message: String,
}

/// Error-versus-time data for one (sequence, J); `values` average the
/// per-model rows, `fit` is filled when the automatic windows succeed.
#[derive(Clone, Debug)]
pub struct ErrorCurve {
    pub sequence_id: String,
    pub k: usize,
    pub j: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub rows: Vec<SweepPoint>,
    pub failures: Vec<SweepFailure>,
    pub fit: Option<SlopeFit>,
}

fn point_value(
    schedule: &PulseSchedule,
    model: &QuantumNoiseModel,
    t: f64,
    metric: Metric,
    states: &[ProductState],
) -> Result<f64, DynamicsError> {
    let report = evolve(schedule, model, t)?;
    match metric {
        Metric::OperatorNorm => Ok(report.error),
        Metric::MeanTraceDistance => {
            let d = trace_distances_of(&report, model, states)?;
            Ok(d.iter().sum::<f64>() / d.len() as f64)
        }
    }
}

/// Runs the full grid and returns one curve per (sequence, J). Bath draws
/// are shared across sequences at fixed J so curves are comparable; failed
/// points are recorded on the curve, never fatal.
pub fn scaling_sweep(spec: &SweepSpec) -> Result<Vec<ErrorCurve>, AnalysisError> {
    spec.validate()?;
    let states = haar_product_states(
        2,
        spec.n_states.max(1),
        derive_seed(spec.master_seed, "sweep-states", 0),
    );
    let mut curves = Vec::new();
    for (ji, &j) in spec.couplings.iter().enumerate() {
        let models: Vec<QuantumNoiseModel> = (0..spec.n_models)
            .map(|m| {
                let seed = derive_seed(
                    spec.master_seed,
                    "sweep-model",
                    (ji * spec.n_models + m) as u64,
                );
                sample_model(seed, j).expect("coupling validated")
            })
            .collect();
        for seq in &spec.sequences {
            let tasks: Vec<(usize, usize)> = (0..spec.n_models)
                .flat_map(|m| (0..spec.times.len()).map(move |ti| (m, ti)))
                .collect();
            let outcomes = map_collect(&tasks, |&(m, ti)| {
                point_value(
                    &seq.schedule,
                    &models[m],
                    spec.times[ti],
                    spec.metric,
                    &states,
                )
            });

            let mut rows = Vec::with_capacity(tasks.len());
            let mut failures = Vec::new();
            let mut sums = vec![0.0f64; spec.times.len()];
            let mut counts = vec![0usize; spec.times.len()];
            for (&(m, ti), outcome) in tasks.iter().zip(outcomes) {
                match outcome {
                    Ok(value) => {
                        sums[ti] += value;
                        counts[ti] += 1;
                        rows.push(SweepPoint {
                            sequence_id: seq.id.clone(),
                            k: seq.k,
                            j,
                            t: spec.times[ti],
                            seed: models[m].seed,
                            metric: spec.metric,
                            value,
                        });
                    }
                    Err(e) => failures.push(SweepFailure {
                        sequence_id: seq.id.clone(),
                        j,
                        t: spec.times[ti],
                        seed: models[m].seed,
                        message: e.to_string(),
                    }),
                }
            }
            let values: Vec<f64> = sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
                .collect();
            let fit = fit_slopes(&spec.times, &values).ok();
            curves.push(ErrorCurve {
                sequence_id: seq.id.clone(),
                k: seq.k,
                j,
                times: spec.times.clone(),
                values,
                rows,
                failures,
                fit,
            });
        }
    }
    Ok(curves)
}

#[derive(Clone, Debug)]
pub struct ComparisonSpec {
    pub first: NamedSchedule,
    pub second: NamedSchedule,
    pub couplings: Vec<f64>,
    pub times: Vec<f64>,
    pub n_models: usize,
    pub n_states: usize,
    pub master_seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComparisonPoint {
    pub j: f64,
    pub t: f64,
    pub first: f64,
    pub second: f64,
}

/// Head-to-head mean trace distances over shared models and states.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub first_id: String,
    pub first_k: usize,
    pub first_pulses: PulseCount,
    pub second_id: String,
    pub second_k: usize,
    pub second_pulses: PulseCount,
    pub points: Vec<ComparisonPoint>,
}

impl Comparison {
    /// Fraction of points at coupling `j` where the first schedule is
    /// strictly better.
    pub fn win_fraction(&self, j: f64) -> f64 {
        let at_j: Vec<&ComparisonPoint> = self.points.iter().filter(|p| p.j == j).collect();
        if at_j.is_empty() {
            return 0.0;
        }
        at_j.iter().filter(|p| p.first < p.second).count() as f64 / at_j.len() as f64
    }
}

/// Compares two schedules on identical Haar states and bath draws; the
/// metric is the mean trace distance.
pub fn compare_schedules(spec: &ComparisonSpec) -> Result<Comparison, AnalysisError> {
    check_couplings(&spec.couplings)?;
    check_times(&spec.times)?;
    if spec.n_models == 0 {
        return Err(AnalysisError::NoModels);
    }
    if spec.n_states == 0 {
        return Err(AnalysisError::NoStates);
    }
    let states = haar_product_states(
        2,
        spec.n_states,
        derive_seed(spec.master_seed, "compare-states", 0),
    );
    let mut points = Vec::new();
    for (ji, &j) in spec.couplings.iter().enumerate() {
        let models: Vec<QuantumNoiseModel> = (0..spec.n_models)
            .map(|m| {
                let seed = derive_seed(
                    spec.master_seed,
                    "compare-model",
                    (ji * spec.n_models + m) as u64,
                );
                sample_model(seed, j).expect("coupling validated")
            })
            .collect();
        let tasks: Vec<usize> = (0..spec.times.len()).collect();
        let per_t: Vec<Result<(f64, f64), DynamicsError>> = map_collect(&tasks, |&ti| {
            let t = spec.times[ti];
            let (mut a, mut b) = (0.0, 0.0);
            for model in &models {
                a += point_value(
                    &spec.first.schedule,
                    model,
                    t,
                    Metric::MeanTraceDistance,
                    &states,
                )?;
                b += point_value(
                    &spec.second.schedule,
                    model,
                    t,
                    Metric::MeanTraceDistance,
                    &states,
                )?;
            }
            let n = models.len() as f64;
            Ok((a / n, b / n))
        });
        for (ti, pair) in per_t.into_iter().enumerate() {
            let (first, second) = pair?;
            points.push(ComparisonPoint {
                j,
                t: spec.times[ti],
                first,
                second,
            });
        }
    }
    Ok(Comparison {
        first_id: spec.first.id.clone(),
        first_k: spec.first.k,
        first_pulses: spec.first.schedule.pulse_count(),
        second_id: spec.second.id.clone(),
        second_k: spec.second.k,
        second_pulses: spec.second.schedule.pulse_count(),
        points,
    })
}

/// Keeps the first `digits` decimal digits of every segment length (floor,
/// the decimal analogue of writing down a truncated interval table) and
/// rebuilds the cut times as cumulative sums, so each cut inherits the
/// accumulated one-sided error of the intervals before it. Collisions are
/// errors, not merges: silently dropping a pulse would change the pulse
/// count mid-study.
///
/// Truncating cut times directly would be the wrong model here: the tables
/// are mirror-symmetric (tau_i + tau_{L+1-i} = 1), which anti-correlates
/// per-cut truncation errors and cancels the first-order moment
/// perturbation, leaving an unmeasurably small second-order signal.
pub fn truncate_intervals(
    schedule: &PulseSchedule,
    digits: u32,
) -> Result<PulseSchedule, AnalysisError> {
    if digits == 0 {
        return Err(AnalysisError::ZeroDigits);
    }
    let scale = 10f64.powi(digits as i32);
    let mut acc = 0.0;
    let cuts: Vec<f64> = schedule
        .intervals()
        .iter()
        .take(schedule.cut_times().len())
        .map(|dt| {
            acc += (dt * scale).floor() / scale;
            acc
        })
        .collect();
    PulseSchedule::new(
        schedule.group().clone(),
        cuts,
        schedule.labels().to_vec(),
        schedule.cyclic_closure(),
    )
    .map_err(|source| AnalysisError::Truncation { digits, source })
}

#[derive(Clone, Debug)]
pub struct JitterSpec {
    pub digits: u32,
    pub j: f64,
    pub times: Vec<f64>,
    pub n_models: usize,
    pub master_seed: u64,
}

/// Full-precision versus truncated error curves and the measured
/// divergence time.
#[derive(Clone, Debug)]
pub struct JitterStudy {
    pub digits: u32,
    pub times: Vec<f64>,
    pub baseline: Vec<f64>,
    pub truncated: Vec<f64>,
    /// Largest grid time where the curves disagree by more than 2x; None
    /// when they agree everywhere in range.
    pub divergence_time: Option<f64>,
    pub truncated_schedule: PulseSchedule,
}

fn disagree(base: f64, trunc: f64) -> bool {
    if base <= FIT_FLOOR && trunc <= FIT_FLOOR {
        return false;
    }
    if base <= FIT_FLOOR || trunc <= FIT_FLOOR {
        return true;
    }
    let r = trunc / base;
    !(0.5..=2.0).contains(&r)
}

/// Measures where digit truncation makes the error curve leave the
/// full-precision curve. The curves agree at large T (both dominated by the
/// same physics) and split below the divergence time, so the scan walks the
/// grid downward and stops at the first 2x disagreement.
pub fn jitter_study(
    schedule: &PulseSchedule,
    spec: &JitterSpec,
) -> Result<JitterStudy, AnalysisError> {
    check_times(&spec.times)?;
    check_couplings(&[spec.j])?;
    if spec.n_models == 0 {
        return Err(AnalysisError::NoModels);
    }
    let truncated_schedule = truncate_intervals(schedule, spec.digits)?;
    let models: Vec<QuantumNoiseModel> = (0..spec.n_models)
        .map(|m| {
            let seed = derive_seed(spec.master_seed, "jitter-model", m as u64);
            sample_model(seed, spec.j).expect("coupling validated")
        })
        .collect();
    let tasks: Vec<usize> = (0..spec.times.len()).collect();
    let pairs: Vec<Result<(f64, f64), DynamicsError>> = map_collect(&tasks, |&ti| {
        let t = spec.times[ti];
        let (mut base, mut trunc) = (0.0, 0.0);
        for model in &models {
            base += evolve(schedule, model, t)?.error;
            trunc += evolve(&truncated_schedule, model, t)?.error;
        }
        let n = models.len() as f64;
        Ok((base / n, trunc / n))
    });
    let mut baseline = Vec::with_capacity(pairs.len());
    let mut truncated = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let (b, t) = pair?;
        baseline.push(b);
        truncated.push(t);
    }
    let divergence_time = (0..spec.times.len())
        .rev()
        .find(|&i| disagree(baseline[i], truncated[i]))
        .map(|i| spec.times[i]);
    Ok(JitterStudy {
        digits: spec.digits,
        times: spec.times.clone(),
        baseline,
        truncated,
        divergence_time,
        truncated_schedule,
    })
}

pub const CSV_HEADER: &str = "sequence_id,K,J,T,seed,metric,value";

/// 17 significant digits: round-trips exactly through parsing.
pub fn machine_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut w: W, rows: &[SweepPoint]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.sequence_id,
            r.k,
            machine_float(r.j),
            machine_float(r.t),
            r.seed,
            r.metric,
            machine_float(r.value)
        )?;
    }
    Ok(())
}

/// JSON-facing digest of one curve.
#[derive(Clone, Debug, Serialize)]
pub struct CurveSummary {
    pub sequence_id: String,
    pub k: usize,
    pub j: f64,
    pub points: usize,
    pub failures: usize,
    pub fit: Option<SlopeFit>,
}

pub fn summarize_curves(curves: &[ErrorCurve]) -> Vec<CurveSummary> {
    curves
        .iter()
        .map(|c| CurveSummary {
            sequence_id: c.sequence_id.clone(),
            k: c.k,
            j: c.j,
            points: c.rows.len(),
            failures: c.failures.len(),
            fit: c.fit,
        })
        .collect()
}
