//! Lower-bound certificates for pulse counts.
//!
//! A single-axis switching function with r sign flips cannot cancel moments
//! through order K-1 when r < K. The witness polynomial
//!
//! ```text
//! P(tau) = a tau (tau - tau_1) ... (tau - tau_r),
//! a = s_r / prod_j (1 - tau_j)
//! ```
//!
//! vanishes at 0 and at every flip, and P(1) = s_r, so the telescoping sum
//! of s_k [P(tau_{k+1}) - P(tau_k)] over segments equals s_r^2 = 1. The same
//! sum is integral_0^1 y(tau) P'(tau) dtau = sum_m c_m M_m with deg P' <=
//! K-1, so max_m |M_m| >= 1 / sum_m |c_m| > 0.

use serde::Serialize;

use super::AnalysisError;

/// Witness that a flip configuration leaves a nonzero moment.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub flip_points: Vec<f64>,
    pub order: usize,
    pub last_sign: i32,
    /// Leading factor a of the witness polynomial.
    pub leading: f64,
    /// Telescoping evaluation of integral y P' dtau; 1 up to roundoff.
    pub value: f64,
    /// Coefficients c_m of P'(tau) = sum_m c_m tau^m, m = 0..r.
    pub derivative_coefficients: Vec<f64>,
    /// 1 / sum |c_m|: no moment vector of y can be smaller in max norm.
    pub moment_floor: f64,
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Builds the witness polynomial for `flips` (strictly increasing, inside
/// (0, 1), fewer than `order` of them) and evaluates the telescoping
/// identity. `last_sign` is the sign of the final segment of y.
pub fn certify_lower_bound(
    flips: &[f64],
    order: usize,
    last_sign: i32,
) -> Result<Certificate, AnalysisError> {
    if order == 0 {
        return Err(AnalysisError::ZeroOrder);
    }
    if last_sign != 1 && last_sign != -1 {
        return Err(AnalysisError::BadSign(last_sign));
    }
    if flips.len() >= order {
        return Err(AnalysisError::NotApplicable {
            flips: flips.len(),
            order,
        });
    }
    let increasing = flips.windows(2).all(|w| w[0] < w[1]);
    let in_range = flips.iter().all(|&t| t.is_finite() && 0.0 < t && t < 1.0);
    if !increasing || !in_range {
        return Err(AnalysisError::BadFlips);
    }

    let leading = f64::from(last_sign) / flips.iter().map(|&t| 1.0 - t).product::<f64>();

    // P as monomial coefficients: start from a*tau, multiply in each root.
    let mut p = vec![0.0, leading];
    for &root in flips {
        let mut next = vec![0.0; p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= root * c;
        }
        p = next;
    }
    let derivative_coefficients: Vec<f64> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, &c)| m as f64 * c)
        .collect();

    let mut boundaries = Vec::with_capacity(flips.len() + 2);
    boundaries.push(0.0);
    boundaries.extend_from_slice(flips);
    boundaries.push(1.0);
    let mut value = 0.0;
    for (seg, w) in boundaries.windows(2).enumerate() {
        let sign = f64::from(last_sign)
            * if (flips.len() - seg).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
        value += sign * (horner(&p, w[1]) - horner(&p, w[0]));
    }

    let coeff_sum: f64 = derivative_coefficients.iter().map(|c| c.abs()).sum();
    Ok(Certificate {
        flip_points: flips.to_vec(),
        order,
        last_sign,
        leading,
        value,
        derivative_coefficients,
        moment_floor: 1.0 / coeff_sum,
    })
}

/// Moments of the single-axis switching function that starts at +1 and
/// flips at the given points: M_m = integral_0^1 y(tau) tau^m dtau.
pub fn single_axis_moments(flips: &[f64], k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k];
    let mut sign = 1.0;
    let mut lo = 0.0f64;
    for j in 0..=flips.len() {
        let hi = if j < flips.len() { flips[j] } else { 1.0 };
        for (mm, slot) in m.iter_mut().enumerate() {
            let e = mm as i32 + 1;
            *slot += sign * (hi.powi(e) - lo.powi(e)) / f64::from(e);
        }
        lo = hi;
        sign = -sign;
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSearchOutcome {
    pub order: usize,
    pub grid: usize,
    pub configurations: u64,
    /// Smallest max_m |M_m| over all placements of order-1 flips.
    pub min_residual: f64,
    pub argmin_flips: Vec<f64>,
}

fn for_each_combination(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    if r == 0 {
        f(&[]);
        return;
    }
    if n < r {
        return;
    }
    let mut idx: Vec<usize> = (1..=r).collect();
    loop {
        f(&idx);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - (r - 1 - i) {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exhaustive search over all placements of order-1 flips on the grid
/// i/grid, i = 1..grid-1, for the smallest max-norm moment vector through
/// order-1. Single-axis by construction; the starting sign is irrelevant to
/// the residual. Deterministic: ties keep the lexicographically first
/// placement.
pub fn min_moment_residual_on_grid(
    order: usize,
    grid: usize,
) -> Result<GridSearchOutcome, AnalysisError> {
    if order == 0 {
        return Err(AnalysisError::ZeroOrder);
    }
    let r = order - 1;
    if grid < r + 2 {
        return Err(AnalysisError::GridTooCoarse {
            needed: r + 2,
            flips: r,
        });
    }
    let mut best = f64::INFINITY;
    let mut best_flips: Vec<f64> = Vec::new();
    let mut configurations = 0u64;
    let mut flips = vec![0.0f64; r];
    for_each_combination(grid - 1, r, |idx| {
        configurations += 1;
        for (slot, &i) in flips.iter_mut().zip(idx) {
            *slot = i as f64 / grid as f64;
        }
        let residual = single_axis_moments(&flips, order)
            .iter()
            .fold(0.0f64, |acc, m| acc.max(m.abs()));
        if residual < best {
            best = residual;
            best_flips = flips.clone();
        }
    });
    Ok(GridSearchOutcome {
        order,
        grid,
        configurations,
        min_residual: best,
        argmin_flips: best_flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn spin_echo_certificate_is_exact() {
        let cert = certify_lower_bound(&[0.5], 2, 1).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-15);
        // P = 2 tau^2 - tau, P' = 4 tau - 1, floor = 1/5.
        assert_eq!(cert.derivative_coefficients, vec![-1.0, 4.0]);
        assert!((cert.moment_floor - 0.2).abs() < 1e-15);
        let m = single_axis_moments(&[0.5], 2);
        assert!(m[0].abs() < 1e-15);
        assert!((m[1] - (-0.25)).abs() < 1e-15);
        assert!(m.iter().fold(0.0f64, |a, x| a.max(x.abs())) >= cert.moment_floor);
    }

    #[test]
    fn telescoping_value_matches_quadrature() {
        let flips = [1.0 / 3.0, 2.0 / 3.0];
        let cert = certify_lower_bound(&flips, 3, 1).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-12);

        // Composite Simpson of y(tau) P'(tau) per segment.
        let mut total = 0.0;
        let bounds = [0.0, flips[0], flips[1], 1.0];
        for seg in 0..3 {
            let sign = if seg % 2 == 0 { 1.0 } else { -1.0 };
            let (a, b) = (bounds[seg], bounds[seg + 1]);
            let n = 2000;
            let h = (b - a) / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let x0 = a + i as f64 * h;
                let pp = |x: f64| horner(&cert.derivative_coefficients, x);
                acc += h / 6.0 * (pp(x0) + 4.0 * pp(x0 + 0.5 * h) + pp(x0 + h));
            }
            total += sign * acc;
        }
        assert!((total - cert.value).abs() < 1e-10, "{total}");
    }

    #[test]
    fn random_certificates_all_evaluate_to_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..200 {
            let order = rng.random_range(1..=6usize);
            let r = rng.random_range(0..order);
            let mut flips: Vec<f64> = (0..r).map(|_| rng.random_range(0.01..0.99)).collect();
            flips.sort_by(f64::total_cmp);
            flips.dedup();
            let sign = if rng.random::<bool>() { 1 } else { -1 };
            let cert = certify_lower_bound(&flips, order, sign).unwrap();
            assert!(
                (cert.value - 1.0).abs() < 1e-12,
                "order {order}, flips {flips:?}: {}",
                cert.value
            );
            assert!(cert.moment_floor > 0.0);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            certify_lower_bound(&[0.2, 0.4], 2, 1),
            Err(AnalysisError::NotApplicable { flips: 2, order: 2 })
        ));
        assert!(matches!(
            certify_lower_bound(&[0.4, 0.2], 3, 1),
            Err(AnalysisError::BadFlips)
        ));
        assert!(matches!(
            certify_lower_bound(&[0.0], 2, 1),
            Err(AnalysisError::BadFlips)
        ));
        assert!(matches!(
            certify_lower_bound(&[0.5], 2, 2),
            Err(AnalysisError::BadSign(2))
        ));
        assert!(matches!(
            certify_lower_bound(&[], 0, 1),
            Err(AnalysisError::ZeroOrder)
        ));
        assert!(matches!(
            min_moment_residual_on_grid(5, 4),
            Err(AnalysisError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn grid_search_floors_match_the_balance_point() {
        // Order 2, one flip at tau: max(|2 tau - 1|, |tau^2 - 1/2|) is
        // minimized near tau = sqrt(2.5) - 1 with value ~0.162.
        let out = min_moment_residual_on_grid(2, 200).unwrap();
        assert_eq!(out.configurations, 199);
        assert!(
            (out.argmin_flips[0] - 0.58).abs() < 0.02,
            "{:?}",
            out.argmin_flips
        );
        assert!((out.min_residual - 0.162).abs() < 0.01);

        let trivial = min_moment_residual_on_grid(1, 200).unwrap();
        assert_eq!(trivial.configurations, 1);
        assert!((trivial.min_residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_search_is_strictly_positive_through_order_three() {
        let out = min_moment_residual_on_grid(3, 120).unwrap();
        assert_eq!(out.configurations, 119 * 118 / 2);
        assert!(out.min_residual > 1e-3, "{}", out.min_residual);
        assert_eq!(out.argmin_flips.len(), 2);
    }
}
