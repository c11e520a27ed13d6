//! Log-log slope and crossover extraction from error curves.
//!
//! The fit windows are the lowest decade of usable times and the highest
//! decade before saturation; the crossover is the intersection of the two
//! fitted lines, reported only when the slopes are clearly separated.

use serde::Serialize;

use super::AnalysisError;

/// Values at or below this are treated as numerically zero and excluded.
pub const FIT_FLOOR: f64 = 1e-14;
/// Values at or above this are saturated and excluded.
pub const FIT_CEILING: f64 = 1.0;
/// Minimum usable points per fit window.
pub const MIN_WINDOW_POINTS: usize = 6;
/// Slope difference below which the curve counts as a single power law and
/// no crossover is reported.
pub const SLOPE_SEPARATION: f64 = 0.25;

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub floor: f64,
    pub ceiling: f64,
    pub min_window_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            floor: FIT_FLOOR,
            ceiling: FIT_CEILING,
            min_window_points: MIN_WINDOW_POINTS,
        }
    }
}

/// Least-squares line in log10-log10 coordinates over one decade window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LineFit {
    pub slope: f64,
    /// log10(value) at T = 1 under the fitted line.
    pub intercept: f64,
    pub slope_stderr: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub small: LineFit,
    pub large: LineFit,
    /// Intersection time of the two lines; absent when slopes coincide.
    pub crossover: Option<f64>,
}

fn line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let slope_stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    LineFit {
        slope,
        intercept,
        slope_stderr,
        t_lo: 10f64.powf(points[0].0),
        t_hi: 10f64.powf(points[points.len() - 1].0),
        points: points.len(),
    }
}

/// Fits power laws to the small-T and large-T ends of (times, values).
///
/// Times must be sorted ascending. Points outside (floor, ceiling) are
/// dropped; each window needs `min_window_points` survivors.
pub fn fit_slopes_with(
    times: &[f64],
    values: &[f64],
    opts: &FitOptions,
) -> Result<SlopeFit, AnalysisError> {
    assert_eq!(times.len(), values.len());
    let usable: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &e)| t > 0.0 && t.is_finite() && e > opts.floor && e < opts.ceiling)
        .map(|(&t, &e)| (t.log10(), e.log10()))
        .collect();
    if usable.is_empty() {
        return Err(AnalysisError::NothingToFit);
    }

    let lo_edge = usable[0].0 + 1.0;
    let hi_edge = usable[usable.len() - 1].0 - 1.0;
    let small_pts: Vec<(f64, f64)> = usable.iter().copied().filter(|p| p.0 <= lo_edge).collect();
    let large_pts: Vec<(f64, f64)> = usable.iter().copied().filter(|p| p.0 >= hi_edge).collect();
    for (which, pts) in [("small-T", &small_pts), ("large-T", &large_pts)] {
        if pts.len() < opts.min_window_points {
            return Err(AnalysisError::WindowTooShort {
                which,
                needed: opts.min_window_points,
                got: pts.len(),
            });
        }
    }

    let small = line(&small_pts);
    let large = line(&large_pts);
    let crossover = if (small.slope - large.slope).abs() < SLOPE_SEPARATION {
        None
    } else {
        let x = (large.intercept - small.intercept) / (small.slope - large.slope);
        Some(10f64.powf(x))
    };
    Ok(SlopeFit {
        small,
        large,
        crossover,
    })
}

/// [`fit_slopes_with`] at the default floor, ceiling, and window size.
pub fn fit_slopes(times: &[f64], values: &[f64]) -> Result<SlopeFit, AnalysisError> {
    fit_slopes_with(times, values, &FitOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::log_grid;

    // Synthetic data is exact, so the noise floor is irrelevant.
    const EXACT: FitOptions = FitOptions {
        floor: 1e-300,
        ceiling: 1.0,
        min_window_points: MIN_WINDOW_POINTS,
    };

    #[test]
    fn two_term_curve_recovers_both_exponents_and_the_crossover() {
        // e = J T^(K+1) + J^2 T^2 with J = 1e-5, K = 3: the quadratic term
        // dominates below T = J^(1/(K-1)) = 1e-2.5, the quartic above.
        let j = 1e-5;
        let times = log_grid(1e-5, 10.0, 121).unwrap();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| j * t.powi(4) + j * j * t * t)
            .collect();
        let fit = fit_slopes_with(&times, &values, &EXACT).unwrap();
        assert!((fit.small.slope - 2.0).abs() < 0.05, "{}", fit.small.slope);
        assert!((fit.large.slope - 4.0).abs() < 0.05, "{}", fit.large.slope);
        let t_x = fit.crossover.expect("slopes differ");
        let predicted = j.powf(1.0 / (4.0 - 2.0)); // T^(K+1) meets T^2 at J^(1/(K-1))
        assert!(
            (t_x / predicted - 1.0).abs() < 0.10,
            "crossover {t_x} vs {predicted}"
        );
        assert!(fit.small.slope_stderr < 0.05 && fit.large.slope_stderr < 0.05);
    }

    #[test]
    fn single_power_law_reports_no_crossover() {
        let times = log_grid(1e-4, 1e-1, 40).unwrap();
        let values: Vec<f64> = times.iter().map(|&t| 3e-4 * t.powf(2.7)).collect();
        let fit = fit_slopes_with(&times, &values, &EXACT).unwrap();
        assert!((fit.small.slope - 2.7).abs() < 1e-6);
        assert!((fit.large.slope - 2.7).abs() < 1e-6);
        assert!(fit.crossover.is_none());
    }

    #[test]
    fn floor_and_saturation_are_excluded() {
        let times = log_grid(1e-3, 1e5, 81).unwrap();
        let values: Vec<f64> = times.iter().map(|&t| 1e-9 * t * t).collect();
        // e crosses the floor near t = 10^-2.5 and saturates past 3.2e4.
        let fit = fit_slopes(&times, &values).unwrap();
        assert!(fit.small.t_lo > 2e-3, "floor points must be dropped");
        assert!(fit.large.t_hi < 3.2e4, "saturated points must be dropped");
        assert!((fit.small.slope - 2.0).abs() < 0.05);
        assert!((fit.large.slope - 2.0).abs() < 0.05);
        assert!(fit.crossover.is_none());
    }

    #[test]
    fn all_floor_values_refuse_to_fit() {
        let times = log_grid(1e-3, 1.0, 20).unwrap();
        let values = vec![3e-15; 20];
        assert!(matches!(
            fit_slopes(&times, &values),
            Err(AnalysisError::NothingToFit)
        ));
    }

    #[test]
    fn short_windows_are_rejected() {
        let times = log_grid(1e-4, 1.0, 9).unwrap();
        let values: Vec<f64> = times.iter().map(|&t| 1e-3 * t).collect();
        assert!(matches!(
            fit_slopes_with(&times, &values, &EXACT),
            Err(AnalysisError::WindowTooShort { .. })
        ));
    }
}
