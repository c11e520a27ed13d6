//! Pulse schedules on the unit interval and their switching-function moments.
//!
//! A schedule divides normalized time [0, 1] into segments separated by cut
//! times, assigns each segment a toggling-frame label from a decoupling
//! group, and optionally closes the frame back to identity at tau = 1. For an
//! interaction axis sigma_alpha, the frame sequence induces a piecewise
//! constant switching function y_alpha(tau) in {+1, -1} through the sign
//! characters, and the schedule cancels noise to order K exactly when all
//! generalized moments
//!
//! ```text
//! M_{alpha,m} = integral_0^1 y_alpha(tau) tau^m dtau
//!             = 1/(m+1) * sum_l s_{l,alpha} (t_l^{m+1} - t_{l-1}^{m+1})
//! ```
//!
//! vanish for m = 0..K-1. The unscaled residuals r_{alpha,m} drop the
//! 1/(m+1) prefactor; the optimizer works with r, reports based on moments
//! use M, and [`MomentVector::to_residuals`] converts explicitly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{character_table, CharacterError, DecouplingGroup, PauliString};

/// Current schedule file format version.
pub const SCHEDULE_FORMAT_VERSION: u32 = 1;

/// Moment tolerance for published interval data quoted to 15 decimals.
pub const MOMENT_TOL_PUBLISHED: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("cut time {0} outside the open interval (0, 1)")]
    CutOutOfRange(f64),
    #[error("cut times must be strictly increasing: t[{index}] = {value} after {previous}")]
    CutsNotIncreasing {
        index: usize,
        value: f64,
        previous: f64,
    },
    #[error("{labels} labels for {cuts} cuts, expected cuts + 1")]
    LabelCountMismatch { cuts: usize, labels: usize },
    #[error("label {label} at segment {index} exceeds group order {order}")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        order: usize,
    },
    #[error("first segment must carry the identity frame, got label {0}")]
    FirstLabelNotIdentity(usize),
    #[error("segments {0} and {1} carry the same frame; the pulse between them would be identity")]
    AdjacentEqualLabels(usize, usize),
    #[error("bins do not start at 0 or end at 1 (got {0}..{1})")]
    BinCoverage(f64, f64),
    #[error("bin {index} starts at {start} but the previous bin ends at {end}")]
    BinDiscontinuity { index: usize, end: f64, start: f64 },
    #[error("bin {index} has non-positive width ({start}..{end})")]
    EmptyBin { index: usize, start: f64, end: f64 },
    #[error("schedule file version {0}, this build reads version {SCHEDULE_FORMAT_VERSION}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Group(#[from] crate::pauli::GroupError),
}

/// Frame-labelled segmentation of the unit interval.
///
/// Invariants, checked at construction: cut times strictly increasing inside
/// (0, 1); one label per segment with `labels[0]` the identity; adjacent
/// labels differ (no identity pulses); every label indexes into the group.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    group: DecouplingGroup,
    cut_times: Vec<f64>,
    labels: Vec<usize>,
    cyclic_closure: bool,
}

impl PulseSchedule {
    pub fn new(
        group: DecouplingGroup,
        cut_times: Vec<f64>,
        labels: Vec<usize>,
        cyclic_closure: bool,
    ) -> Result<Self, ScheduleError> {
        let mut previous = 0.0;
        for (index, &t) in cut_times.iter().enumerate() {
            if !t.is_finite() || t <= 0.0 || t >= 1.0 {
                return Err(ScheduleError::CutOutOfRange(t));
            }
            if t <= previous && index > 0 {
                return Err(ScheduleError::CutsNotIncreasing {
                    index,
                    value: t,
                    previous,
                });
            }
            previous = t;
        }
        if labels.len() != cut_times.len() + 1 {
            return Err(ScheduleError::LabelCountMismatch {
                cuts: cut_times.len(),
                labels: labels.len(),
            });
        }
        for (index, &label) in labels.iter().enumerate() {
            if label >= group.order() {
                return Err(ScheduleError::LabelOutOfRange {
                    index,
                    label,
                    order: group.order(),
                });
            }
        }
        if !group.elements()[labels[0]].is_identity() {
            return Err(ScheduleError::FirstLabelNotIdentity(labels[0]));
        }
        if let Some(i) = labels.windows(2).position(|w| w[0] == w[1]) {
            return Err(ScheduleError::AdjacentEqualLabels(i, i + 1));
        }
        Ok(PulseSchedule {
            group,
            cut_times,
            labels,
            cyclic_closure,
        })
    }

    /// Schedule from segment durations instead of cut positions. Durations
    /// are normalized to unit total, so callers may pass unnormalized ones.
    pub fn from_intervals(
        group: DecouplingGroup,
        intervals: &[f64],
        labels: Vec<usize>,
        cyclic_closure: bool,
    ) -> Result<Self, ScheduleError> {
        let total: f64 = intervals.iter().sum();
        let mut cuts = Vec::with_capacity(intervals.len().saturating_sub(1));
        let mut acc = 0.0;
        for &w in intervals.iter().take(intervals.len().saturating_sub(1)) {
            acc += w;
            cuts.push(acc / total);
        }
        PulseSchedule::new(group, cuts, labels, cyclic_closure)
    }

    pub fn group(&self) -> &DecouplingGroup {
        &self.group
    }

    pub fn cut_times(&self) -> &[f64] {
        &self.cut_times
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn cyclic_closure(&self) -> bool {
        self.cyclic_closure
    }

    pub fn segment_count(&self) -> usize {
        self.labels.len()
    }

    /// Segment boundaries including both endpoints: 0, t_1, .., t_L, 1.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.cut_times.len() + 2);
        b.push(0.0);
        b.extend_from_slice(&self.cut_times);
        b.push(1.0);
        b
    }

    /// Segment durations, summing to 1.
    pub fn intervals(&self) -> Vec<f64> {
        self.boundaries().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Toggling frame of each segment.
    pub fn frames(&self) -> Vec<&PauliString> {
        self.labels
            .iter()
            .map(|&l| &self.group.elements()[l])
            .collect()
    }

    /// Instantaneous pulses realizing the frame walk: the pulse at cut l is
    /// g_l g_{l-1}^{-1} (projectively, g_{l-1}^{-1} = g_{l-1}). With cyclic
    /// closure and a non-identity final frame, a closing pulse at tau = 1
    /// returns the frame to identity.
    pub fn compile_pulses(&self) -> Vec<Pulse> {
        let frames = self.frames();
        let mut pulses = Vec::with_capacity(self.cut_times.len() + 1);
        for (l, &t) in self.cut_times.iter().enumerate() {
            let op = frames[l + 1]
                .product(frames[l])
                .expect("frames share qubit count");
            pulses.push(Pulse { time: t, op });
        }
        let last = frames[frames.len() - 1];
        if self.cyclic_closure && !last.is_identity() {
            pulses.push(Pulse {
                time: 1.0,
                op: last.clone(),
            });
        }
        pulses
    }

    /// Interior pulse count and the total including any closing pulse.
    pub fn pulse_count(&self) -> PulseCount {
        let interior = self.cut_times.len();
        let closes = self.cyclic_closure && !self.frames()[self.labels.len() - 1].is_identity();
        PulseCount {
            interior,
            total: interior + usize::from(closes),
        }
    }
}

/// Instantaneous pulse: apply `op` at normalized time `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub time: f64,
    pub op: PauliString,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PulseCount {
    pub interior: usize,
    pub total: usize,
}

/// Labeled time bin for [`assemble_from_bins`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledBin {
    pub start: f64,
    pub end: f64,
    pub label: usize,
}

/// Builds a schedule from contiguous labeled bins covering [0, 1], merging
/// adjacent bins that carry the same label. Gaps and overlaps are errors.
pub fn assemble_from_bins(
    group: DecouplingGroup,
    bins: &[LabeledBin],
    cyclic_closure: bool,
) -> Result<PulseSchedule, ScheduleError> {
    let first = bins.first().ok_or(ScheduleError::BinCoverage(1.0, 0.0))?;
    let last = bins.last().expect("non-empty");
    if first.start != 0.0 || last.end != 1.0 {
        return Err(ScheduleError::BinCoverage(first.start, last.end));
    }
    for (index, bin) in bins.iter().enumerate() {
        // Negated form so NaN endpoints also land in the error branch.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(bin.end > bin.start) {
            return Err(ScheduleError::EmptyBin {
                index,
                start: bin.start,
                end: bin.end,
            });
        }
        if index > 0 && bin.start != bins[index - 1].end {
            return Err(ScheduleError::BinDiscontinuity {
                index,
                end: bins[index - 1].end,
                start: bin.start,
            });
        }
    }
    let mut cuts = Vec::new();
    let mut labels = vec![bins[0].label];
    for bin in &bins[1..] {
        if bin.label == *labels.last().expect("non-empty") {
            continue;
        }
        cuts.push(bin.start);
        labels.push(bin.label);
    }
    PulseSchedule::new(group, cuts, labels, cyclic_closure)
}

/// Piecewise constant switching functions y_alpha(tau) for a set of
/// interaction axes: sign of each segment's frame character per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingProfile {
    boundaries: Vec<f64>,
    axes: Vec<PauliString>,
    signs: Vec<Vec<i32>>,
}

/// Profile of `schedule` for the given axes. Fails if any axis is not
/// decoupled by the group (nonzero character row sum) or acts on a different
/// qubit count.
pub fn switching_profile(
    schedule: &PulseSchedule,
    axes: &[PauliString],
) -> Result<SwitchingProfile, CharacterError> {
    let table = character_table(schedule.group(), axes)?;
    let signs = (0..axes.len())
        .map(|a| {
            schedule
                .labels()
                .iter()
                .map(|&l| table.sign(a, l))
                .collect()
        })
        .collect();
    Ok(SwitchingProfile {
        boundaries: schedule.boundaries(),
        axes: axes.to_vec(),
        signs,
    })
}

impl SwitchingProfile {
    pub fn axes(&self) -> &[PauliString] {
        &self.axes
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Segment signs of axis `alpha`, in segment order.
    pub fn signs(&self, alpha: usize) -> &[i32] {
        &self.signs[alpha]
    }

    /// y_alpha(tau), taking the right-continuous value at cuts.
    pub fn value(&self, alpha: usize, tau: f64) -> f64 {
        let seg = match self
            .boundaries
            .binary_search_by(|b| b.partial_cmp(&tau).expect("finite"))
        {
            Ok(i) => i.min(self.signs[alpha].len() - 1),
            Err(i) => i.saturating_sub(1).min(self.signs[alpha].len() - 1),
        };
        self.signs[alpha][seg] as f64
    }

    /// Generalized moments M_{alpha,m} for m = 0..k-1, from the closed-form
    /// power-difference sum per segment.
    pub fn moments(&self, k: usize) -> MomentVector {
        let values = self
            .signs
            .iter()
            .map(|row| {
                (0..k)
                    .map(|m| {
                        let p = m as i32 + 1;
                        let sum: f64 = row
                            .iter()
                            .zip(self.boundaries.windows(2))
                            .map(|(&s, w)| s as f64 * (w[1].powi(p) - w[0].powi(p)))
                            .sum();
                        sum / p as f64
                    })
                    .collect()
            })
            .collect();
        MomentVector {
            axes: self.axes.clone(),
            values,
        }
    }
}

/// Moment matrix M[alpha][m], m = 0..K-1, for a fixed axis set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentVector {
    axes: Vec<PauliString>,
    values: Vec<Vec<f64>>,
}

impl MomentVector {
    pub fn axes(&self) -> &[PauliString] {
        &self.axes
    }

    pub fn order(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn row(&self, alpha: usize) -> &[f64] {
        &self.values[alpha]
    }

    pub fn get(&self, alpha: usize, m: usize) -> f64 {
        self.values[alpha][m]
    }

    /// Largest |M_{alpha,m}| together with its position.
    pub fn worst(&self) -> (f64, usize, usize) {
        let mut worst = (0.0f64, 0, 0);
        for (a, row) in self.values.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                if v.abs() > worst.0 {
                    worst = (v.abs(), a, m);
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.worst().0
    }

    /// Unscaled residuals r_{alpha,m} = (m+1) M_{alpha,m}, stacked axis-major.
    pub fn to_residuals(&self) -> Vec<f64> {
        self.values
            .iter()
            .flat_map(|row| row.iter().enumerate().map(|(m, &v)| (m as f64 + 1.0) * v))
            .collect()
    }
}

/// Verdict of [`verify_order`].
#[derive(Clone, Debug, Serialize)]
pub struct OrderCheck {
    pub order: usize,
    pub tolerance: f64,
    pub max_abs_moment: f64,
    pub worst_axis: PauliString,
    pub worst_moment_index: usize,
    pub moments: MomentVector,
    pub pass: bool,
}

/// Checks that all moments of `schedule` through order `k` vanish within
/// `tol`, for the given axes.
pub fn verify_order(
    schedule: &PulseSchedule,
    axes: &[PauliString],
    k: usize,
    tol: f64,
) -> Result<OrderCheck, CharacterError> {
    let moments = switching_profile(schedule, axes)?.moments(k);
    let (max_abs_moment, a, m) = moments.worst();
    Ok(OrderCheck {
        order: k,
        tolerance: tol,
        max_abs_moment,
        worst_axis: axes[a].clone(),
        worst_moment_index: m,
        moments,
        pass: max_abs_moment <= tol,
    })
}

/// On-disk schedule document. The flat JSON schema is
/// `{"version": 1, "K": k, "group": [..], "cut_times": [..], "labels": [..],
/// "cyclic_closure": bool}` and round-trips floats losslessly.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleDocument {
    pub k: usize,
    pub schedule: PulseSchedule,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    group: DecouplingGroup,
    cut_times: Vec<f64>,
    labels: Vec<usize>,
    cyclic_closure: bool,
}

impl ScheduleDocument {
    pub fn new(k: usize, schedule: PulseSchedule) -> Self {
        ScheduleDocument { k, schedule }
    }

    pub fn to_json(&self) -> String {
        let raw = RawDocument {
            version: SCHEDULE_FORMAT_VERSION,
            k: self.k,
            group: self.schedule.group().clone(),
            cut_times: self.schedule.cut_times().to_vec(),
            labels: self.schedule.labels().to_vec(),
            cyclic_closure: self.schedule.cyclic_closure(),
        };
        serde_json::to_string_pretty(&raw).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let raw: RawDocument = serde_json::from_str(text)?;
        if raw.version != SCHEDULE_FORMAT_VERSION {
            return Err(ScheduleError::UnsupportedVersion(raw.version).into());
        }
        let schedule =
            PulseSchedule::new(raw.group, raw.cut_times, raw.labels, raw.cyclic_closure)?;
        Ok(ScheduleDocument { k: raw.k, schedule })
    }
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("schedule file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}
