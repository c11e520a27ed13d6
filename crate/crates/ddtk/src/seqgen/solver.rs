//! Damped least-squares core used by the schedule optimizer.
//!
//! Problems here are tiny (tens of parameters, analytic residuals), so a
//! dense Levenberg-Marquardt iteration with a forward-difference Jacobian is
//! the whole story: Marquardt diagonal scaling, Nielsen's damping update, and
//! stopping on function, step, and gradient tolerances plus an evaluation
//! budget. Every residual evaluation, including Jacobian columns, counts
//! against the budget.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub ftol: f64,
    pub xtol: f64,
    pub gtol: f64,
    pub max_nfev: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Infinity norm of the gradient J^T r fell below gtol.
    Gradient,
    /// Proposed step shorter than xtol relative to the iterate.
    Step,
    /// Accepted step reduced the cost by less than ftol relatively.
    Function,
    /// Evaluation budget exhausted; iterate is best-so-far.
    Budget,
    /// Damping grew past any useful scale without an acceptable step.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub nfev: usize,
    pub reason: StopReason,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        matches!(
            self.reason,
            StopReason::Gradient | StopReason::Step | StopReason::Function
        )
    }
}

const FD_STEP: f64 = 1e-8;
const MU_MAX: f64 = 1e32;

/// Minimizes |f(x)|^2 from `x0`. `f` writes the length-`m` residual into its
/// second argument.
pub fn least_squares<F>(mut f: F, x0: &[f64], m: usize, opts: &SolveOptions) -> SolveOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut r = DVector::zeros(m);
    let mut nfev = 0usize;
    f(x.as_slice(), r.as_mut_slice());
    nfev += 1;
    let mut cost = r.norm_squared();

    let mut jac = DMatrix::zeros(m, n);
    let mut xh = x.clone();
    let mut rh = DVector::zeros(m);
    let mut mu = -1.0; // initialized from the first J^T J diagonal
    let mut nu = 2.0;

    let finish = |x: &DVector<f64>, cost: f64, nfev: usize, reason: StopReason| SolveOutcome {
        x: x.as_slice().to_vec(),
        cost,
        nfev,
        reason,
    };

    loop {
        if nfev + n > opts.max_nfev {
            return finish(&x, cost, nfev, StopReason::Budget);
        }
        for j in 0..n {
            let h = FD_STEP * (1.0 + x[j].abs());
            xh.copy_from(&x);
            xh[j] += h;
            f(xh.as_slice(), rh.as_mut_slice());
            nfev += 1;
            for i in 0..m {
                jac[(i, j)] = (rh[i] - r[i]) / h;
            }
        }
        let a = jac.tr_mul(&jac); // J^T J
        let g = jac.tr_mul(&r);
        if g.amax() <= opts.gtol {
            return finish(&x, cost, nfev, StopReason::Gradient);
        }
        // Scaling floor keeps the damped system nonsingular along flat
        // directions (the softmax shift direction has exactly zero curvature).
        let d: Vec<f64> = (0..n).map(|j| a[(j, j)].max(1e-12)).collect();
        if mu < 0.0 {
            mu = 1e-3 * d.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
        }

        // Inner loop: adjust damping until a step is accepted or we stall.
        loop {
            let mut damped = a.clone();
            for j in 0..n {
                damped[(j, j)] += mu * d[j];
            }
            let step = match damped.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    mu *= nu;
                    nu *= 2.0;
                    if mu > MU_MAX {
                        return finish(&x, cost, nfev, StopReason::Stalled);
                    }
                    continue;
                }
            };
            if step.norm() <= opts.xtol * (opts.xtol + x.norm()) {
                return finish(&x, cost, nfev, StopReason::Step);
            }
            if nfev >= opts.max_nfev {
                return finish(&x, cost, nfev, StopReason::Budget);
            }
            xh.copy_from(&x);
            xh += &step;
            f(xh.as_slice(), rh.as_mut_slice());
            nfev += 1;
            let new_cost = rh.norm_squared();
            let predicted: f64 = (0..n).map(|j| step[j] * (mu * d[j] * step[j] - g[j])).sum();
            let rho = (cost - new_cost) / predicted.max(f64::MIN_POSITIVE);
            if new_cost < cost {
                let drop = cost - new_cost;
                x.copy_from(&xh);
                r.copy_from(&rh);
                cost = new_cost;
                mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                if drop <= opts.ftol * (cost + drop) {
                    return finish(&x, cost, nfev, StopReason::Function);
                }
                break; // refresh Jacobian
            }
            mu *= nu;
            nu *= 2.0;
            if mu > MU_MAX {
                return finish(&x, cost, nfev, StopReason::Stalled);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: SolveOptions = SolveOptions {
        ftol: 1e-15,
        xtol: 1e-15,
        gtol: 1e-15,
        max_nfev: 100_000,
    };

    #[test]
    fn solves_a_linear_system_exactly() {
        // r = A x - b with A = [[2,0],[0,3],[1,1]], b = (2, 3, 2).
        let f = |x: &[f64], r: &mut [f64]| {
            r[0] = 2.0 * x[0] - 2.0;
            r[1] = 3.0 * x[1] - 3.0;
            r[2] = x[0] + x[1] - 2.0;
        };
        let out = least_squares(f, &[0.0, 0.0], 3, &OPTS);
        assert!(out.converged(), "{:?}", out.reason);
        assert!((out.x[0] - 1.0).abs() < 1e-10);
        assert!((out.x[1] - 1.0).abs() < 1e-10);
        assert!(out.cost < 1e-20);
    }

    #[test]
    fn descends_the_rosenbrock_valley() {
        let f = |x: &[f64], r: &mut [f64]| {
            r[0] = 10.0 * (x[1] - x[0] * x[0]);
            r[1] = 1.0 - x[0];
        };
        let out = least_squares(f, &[-1.2, 1.0], 2, &OPTS);
        assert!(out.converged());
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn budget_is_respected_and_reported() {
        let f = |x: &[f64], r: &mut [f64]| {
            r[0] = (x[0] - 3.0).atan();
        };
        let opts = SolveOptions {
            max_nfev: 7,
            ..OPTS
        };
        let out = least_squares(f, &[100.0], 1, &opts);
        assert_eq!(out.reason, StopReason::Budget);
        assert!(out.nfev <= 7);
        assert!(!out.converged());
    }

    #[test]
    fn handles_rank_deficient_directions() {
        // Residual ignores x0 + x1; only the difference matters.
        let f = |x: &[f64], r: &mut [f64]| {
            r[0] = x[0] - x[1] - 1.0;
        };
        let out = least_squares(f, &[0.0, 0.0], 1, &OPTS);
        assert!(out.converged());
        assert!(out.cost < 1e-20);
    }
}
