//! Embedded Dormand-Prince 5(4) integrator for small dense complex systems.
//!
//! State is a complex matrix; the error norm is entrywise, mixed
//! absolute/relative. Used for the time-dependent classical-noise propagator,
//! where the generator changes continuously inside a segment and exact
//! exponentials do not apply.

use thiserror::Error;

use crate::linalg::CMat;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("step size underflowed at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("exceeded {0} integration steps")]
    MaxSteps(usize),
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// Fifth-order weights equal the last A row (FSAL); these are the embedded
// fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y' = f(t, y) from (t0, y0) to t1.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: CMat,
    opts: &OdeOptions,
) -> Result<CMat, OdeError>
where
    F: FnMut(f64, &CMat) -> CMat,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 100.0;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;

    while (t1 - t) / span > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::MaxSteps(opts.max_steps));
        }
        if t + h == t {
            return Err(OdeError::StepUnderflow { t });
        }
        if (h / span) > 0.0 && (t + h - t1) / span > 0.0 {
            h = t1 - t;
        }

        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 0..6 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys += kj * num_complex::Complex64::new(h * A[s][j], 0.0);
                }
            }
            k.push(f(t + C[s] * h, &ys));
        }
        // k[6] = f(t + h, y5) since the last A row equals the b weights.
        let mut y5 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[5][j] != 0.0 {
                y5 += kj * num_complex::Complex64::new(h * A[5][j], 0.0);
            }
        }
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if B4[j] != 0.0 {
                y4 += kj * num_complex::Complex64::new(h * B4[j], 0.0);
            }
        }

        let mut err: f64 = 0.0;
        for i in 0..y.nrows() {
            for j in 0..y.ncols() {
                let scale = opts.atol + opts.rtol * y5[(i, j)].norm().max(y[(i, j)].norm());
                err = err.max((y5[(i, j)] - y4[(i, j)]).norm() / scale);
            }
        }

        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = k.pop().expect("seven stages"); // FSAL reuse
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, identity, max_abs, pauli_matrix, I};
    use crate::pauli::Pauli;
    use num_complex::Complex64;

    #[test]
    fn scalar_exponential_growth() {
        let y0 = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
        let y = integrate(|_, y| y.clone(), 0.0, 1.0, y0, &OdeOptions::default()).unwrap();
        assert!((y[(0, 0)].re - 1.0f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn constant_hamiltonian_matches_spectral_exponential() {
        let h = pauli_matrix(Pauli::X) * Complex64::new(0.7, 0.0)
            + pauli_matrix(Pauli::Z) * Complex64::new(-0.3, 0.0);
        let t = 2.5;
        let u = integrate(
            |_, y| {
                let mut dy = &h * y;
                dy *= -I;
                dy
            },
            0.0,
            t,
            identity(2),
            &OdeOptions::default(),
        )
        .unwrap();
        let exact = linalg::hermitian_eig(&h).exp_minus_i(t);
        assert!(max_abs(&(&u - exact)) < 1e-10);
        assert!(max_abs(&(&u * u.adjoint() - identity(2))) < 1e-10);
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = OdeOptions {
            max_steps: 3,
            ..OdeOptions::default()
        };
        let y0 = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
        let r = integrate(
            |t, y| y * Complex64::new((50.0 * t).cos() * 40.0, 0.0),
            0.0,
            10.0,
            y0,
            &opts,
        );
        assert_eq!(r, Err(OdeError::MaxSteps(3)));
    }
}
