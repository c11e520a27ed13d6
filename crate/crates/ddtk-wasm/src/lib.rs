//! Browser bindings. Three JSON-in/JSON-out calls cover the interactive
//! demo: resolve a sequence and dump everything needed to draw it, run the
//! synthesizer for a requested order, and truncate pulse timings to see the
//! moment residuals climb. All pure algebra, no time evolution, so every
//! call returns in milliseconds even in a debug build.
//!
//! The exported functions are thin wrappers; the `_impl` functions carry
//! the logic and stay callable from native tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ddtk::analysis::{resolve_schedule, truncate_intervals};
use ddtk::schedule::switching_profile;
use ddtk::seqgen::single_qubit_axes;
use ddtk::{OptimizerConfig, PulseSchedule};

/// Orders above this make the demo sluggish without showing anything new.
const MAX_SYNTHESIS_ORDER: usize = 6;

/// Moment rows shown past the cancellation order: the first surviving
/// moment is the interesting part of the table.
const EXTRA_MOMENT_ORDERS: usize = 2;

#[derive(Serialize)]
struct PulseDump {
    time: f64,
    op: String,
}

#[derive(Serialize)]
struct ProfileDump {
    id: String,
    k: usize,
    boundaries: Vec<f64>,
    intervals: Vec<f64>,
    axes: Vec<String>,
    /// Per axis, the sign of the switching function on each segment.
    signs: Vec<Vec<i32>>,
    pulses: Vec<PulseDump>,
    /// Per axis, moments m = 0..k+1 inclusive.
    moments: Vec<Vec<f64>>,
    /// Largest |moment| with m < k: the verified cancellation residual.
    max_abs_moment: f64,
}

fn profile_dump(id: &str, k: usize, schedule: &PulseSchedule) -> Result<ProfileDump, String> {
    let axes = single_qubit_axes();
    let profile = switching_profile(schedule, &axes).map_err(|err| err.to_string())?;
    let shown = k + EXTRA_MOMENT_ORDERS;
    let all_moments = profile.moments(shown);
    let checked = profile.moments(k);
    Ok(ProfileDump {
        id: id.to_string(),
        k,
        boundaries: schedule.boundaries(),
        intervals: schedule.intervals(),
        axes: axes.iter().map(|a| a.to_string()).collect(),
        signs: (0..axes.len()).map(|a| profile.signs(a).to_vec()).collect(),
        pulses: schedule
            .compile_pulses()
            .iter()
            .map(|p| PulseDump {
                time: p.time,
                op: p.op.to_string(),
            })
            .collect(),
        moments: (0..axes.len())
            .map(|a| all_moments.row(a).to_vec())
            .collect(),
        max_abs_moment: checked.max_abs(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

pub fn sequence_profile_impl(spec: &str) -> Result<String, String> {
    let named = resolve_schedule(spec).map_err(|err| err.to_string())?;
    let dump = profile_dump(&named.id, named.k, &named.schedule)?;
    Ok(to_json(&dump))
}

#[derive(Serialize)]
struct SynthesisDump {
    phi: f64,
    evaluations: usize,
    starts: usize,
    converged: bool,
    profile: ProfileDump,
}

pub fn synthesize_impl(k: u32, seed: u32, restarts: u32) -> Result<String, String> {
    let k = k as usize;
    if k == 0 || k > MAX_SYNTHESIS_ORDER {
        return Err(format!("order must be in 1..={MAX_SYNTHESIS_ORDER}"));
    }
    let mut config = OptimizerConfig::order(k);
    config.seed = u64::from(seed);
    config.restarts = (restarts as usize).clamp(1, 20);
    let group = ddtk::DecouplingGroup::single_qubit();
    let (result, schedule) = ddtk::seqgen::optimize_schedule(&config, &group, &single_qubit_axes())
        .map_err(|err| err.to_string())?;
    let dump = SynthesisDump {
        phi: result.phi,
        evaluations: result.evaluations,
        starts: result.starts,
        converged: result.converged,
        profile: profile_dump(&format!("generated:{k}:{seed}"), k, &schedule)?,
    };
    Ok(to_json(&dump))
}

#[derive(Serialize)]
struct TruncationStep {
    digits: u32,
    max_abs_moment: f64,
}

#[derive(Serialize)]
struct TruncationDump {
    id: String,
    k: usize,
    /// Residual after keeping 1..=12 digits per interval; None entries are
    /// digit counts that collapsed two cuts together.
    steps: Vec<Option<TruncationStep>>,
    exact_residual: f64,
}

pub fn truncation_scan_impl(spec: &str) -> Result<String, String> {
    let named = resolve_schedule(spec).map_err(|err| err.to_string())?;
    let axes = single_qubit_axes();
    let exact = switching_profile(&named.schedule, &axes)
        .map_err(|err| err.to_string())?
        .moments(named.k);
    let steps = (1..=12)
        .map(|digits| {
            let truncated = truncate_intervals(&named.schedule, digits).ok()?;
            let moments = switching_profile(&truncated, &axes).ok()?.moments(named.k);
            Some(TruncationStep {
                digits,
                max_abs_moment: moments.max_abs(),
            })
        })
        .collect();
    let dump = TruncationDump {
        id: named.id,
        k: named.k,
        steps,
        exact_residual: exact.max_abs(),
    };
    Ok(to_json(&dump))
}

/// Resolves `xy4`, `published:K`, `udd:N`, `qdd:N`, or `generated:K[:SEED]`
/// and returns the drawable profile as JSON.
#[wasm_bindgen]
pub fn sequence_profile(spec: &str) -> Result<String, JsError> {
    sequence_profile_impl(spec).map_err(|err| JsError::new(&err))
}

/// Runs the moment-cancellation synthesizer and returns the result with
/// its profile as JSON.
#[wasm_bindgen]
pub fn synthesize(k: u32, seed: u32, restarts: u32) -> Result<String, JsError> {
    synthesize_impl(k, seed, restarts).map_err(|err| JsError::new(&err))
}

/// Truncates the sequence's intervals to 1..=12 decimal digits and returns
/// the moment residual at each precision as JSON.
#[wasm_bindgen]
pub fn truncation_scan(spec: &str) -> Result<String, JsError> {
    truncation_scan_impl(spec).map_err(|err| JsError::new(&err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_of_published_sequence_is_complete() {
        let text = sequence_profile_impl("published:3").unwrap();
        let dump: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(dump["k"], 3);
        assert_eq!(dump["intervals"].as_array().unwrap().len(), 10);
        assert_eq!(dump["signs"].as_array().unwrap().len(), 3);
        assert_eq!(dump["signs"][0].as_array().unwrap().len(), 10);
        assert_eq!(dump["moments"][0].as_array().unwrap().len(), 5);
        assert!(dump["max_abs_moment"].as_f64().unwrap() < 1e-9);
    }

    #[test]
    fn synthesis_recovers_the_quarter_schedule() {
        let text = synthesize_impl(1, 7, 1).unwrap();
        let dump: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(dump["converged"], true);
        for dt in dump["profile"]["intervals"].as_array().unwrap() {
            assert!((dt.as_f64().unwrap() - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn synthesis_rejects_out_of_range_orders() {
        assert!(synthesize_impl(0, 7, 1).is_err());
        assert!(synthesize_impl(9, 7, 1).is_err());
    }

    #[test]
    fn truncation_residual_falls_with_kept_digits() {
        let text = truncation_scan_impl("published:2").unwrap();
        let dump: serde_json::Value = serde_json::from_str(&text).unwrap();
        let steps = dump["steps"].as_array().unwrap();
        assert_eq!(steps.len(), 12);
        let coarse = steps[1]["max_abs_moment"].as_f64().unwrap();
        let fine = steps[9]["max_abs_moment"].as_f64().unwrap();
        assert!(coarse > 1e3 * fine, "coarse {coarse:e} vs fine {fine:e}");
    }

    #[test]
    fn unknown_specs_are_reported() {
        assert!(sequence_profile_impl("nonsense:1").is_err());
    }
}
