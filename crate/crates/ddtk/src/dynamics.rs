//! Exact evolution of one system qubit coupled to one bath qubit under a
//! pulse schedule, reduced-state error metrics, the first Magnus term, and
//! the classical time-dependent noise variant.
//!
//! Between pulses the lab Hamiltonian H = H_S (x) I + I (x) H_B +
//! sum_alpha sigma_alpha (x) B_alpha is constant, so each segment propagator
//! is an exact spectral exponential; pulses act instantaneously. The
//! decoupling target is U_0(T) = U_c(T) exp(-i H_0 T) with H_0 the
//! interaction-free part and U_c the bare control propagator, and the
//! reported error is the spectral norm of U(T) - U_0(T). Global pulse phases
//! cancel in that difference because both products use the same pulse
//! matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{
    hermitian_eig, identity, max_abs, pauli_matrix, pauli_string_matrix, spectral_norm, CMat, CVec,
    I, ONE,
};
use crate::ode::{self, OdeError, OdeOptions};
use crate::pauli::{sign_character, Pauli, PauliString};
use crate::schedule::PulseSchedule;

/// JT threshold past which the leading-order Magnus picture is advisory
/// only. Evolution is still exact; fits just should not trust the scaling.
pub const MAGNUS_ADVISORY_JT: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("schedule acts on {schedule} system qubit(s) but the model declares {model}")]
    DimensionMismatch { schedule: usize, model: usize },
    #[error("{what} has shape {rows}x{cols}, expected {dim}x{dim}")]
    ShapeMismatch {
        what: &'static str,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("coupling must be finite and non-negative, got {0}")]
    BadCoupling(f64),
    #[error("total time must be finite and non-negative, got {0}")]
    BadTime(f64),
    #[error("initial state is not normalized (|norm - 1| = {0:.3e})")]
    NotNormalized(f64),
    #[error("initial state dimension {got} does not match the model dimension {want}")]
    StateDimension { got: usize, want: usize },
    #[error("quadrature did not converge to tolerance {tol:.3e} within depth {depth}")]
    QuadratureNoConvergence { tol: f64, depth: usize },
    #[error("classical component frequency {frequency} exceeds the cutoff {cutoff}")]
    FrequencyAboveCutoff { frequency: f64, cutoff: f64 },
    #[error("classical noise parameters must be finite")]
    NonFiniteComponent,
    #[error(transparent)]
    Integrator(#[from] OdeError),
}

/// One system register coupled to a single bath qubit.
///
/// Sampled models satisfy |H_B| = beta = 1 and sum_alpha |B_alpha| = J;
/// hand-built models may break those normalizations deliberately (the fields
/// are plain data), e.g. to reproduce classical noise as a quantum model.
#[derive(Clone, Debug)]
pub struct QuantumNoiseModel {
    pub n_system: usize,
    pub system_hamiltonian: CMat,
    pub bath_hamiltonian: CMat,
    /// (system axis, bath coupling operator) pairs.
    pub interactions: Vec<(PauliString, CMat)>,
    /// Coupling scale J = sum_alpha |B_alpha| for sampled models.
    pub coupling: f64,
    /// Bath scale |H_B| for sampled models.
    pub beta: f64,
    pub seed: u64,
}

impl QuantumNoiseModel {
    pub fn system_dim(&self) -> usize {
        1 << self.n_system
    }

    pub fn bath_dim(&self) -> usize {
        self.bath_hamiltonian.nrows().max(1)
    }

    pub fn total_dim(&self) -> usize {
        self.system_dim() * self.bath_dim()
    }

    fn check_shapes(&self) -> Result<(), DynamicsError> {
        let ds = self.system_dim();
        let db = self.bath_dim();
        for (what, m, dim) in [
            ("system Hamiltonian", &self.system_hamiltonian, ds),
            ("bath Hamiltonian", &self.bath_hamiltonian, db),
        ] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(DynamicsError::ShapeMismatch {
                    what,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    dim,
                });
            }
        }
        for (axis, b) in &self.interactions {
            if axis.n_qubits() != self.n_system {
                return Err(DynamicsError::DimensionMismatch {
                    schedule: axis.n_qubits(),
                    model: self.n_system,
                });
            }
            if b.nrows() != db || b.ncols() != db {
                return Err(DynamicsError::ShapeMismatch {
                    what: "bath coupling operator",
                    rows: b.nrows(),
                    cols: b.ncols(),
                    dim: db,
                });
            }
        }
        Ok(())
    }

    /// H_S (x) I + I (x) H_B.
    pub fn free_hamiltonian(&self) -> CMat {
        let ds = self.system_dim();
        let db = self.bath_dim();
        self.system_hamiltonian.kronecker(&identity(db))
            + identity(ds).kronecker(&self.bath_hamiltonian)
    }

    /// Free part plus sum_alpha sigma_alpha (x) B_alpha.
    pub fn total_hamiltonian(&self) -> CMat {
        let mut h = self.free_hamiltonian();
        for (axis, b) in &self.interactions {
            h += pauli_string_matrix(axis).kronecker(b);
        }
        h
    }
}

/// Draws H_B = sum c_alpha sigma_alpha and B_alpha = sum_mu c_{alpha,mu}
/// sigma_mu with all coefficients uniform in [0, 1], then rescales so
/// |H_B| = 1 and sum_alpha |B_alpha| = j. H_S stays zero. All-zero draws
/// (measure zero, but possible) are resampled. j = 0 yields a coupling-free
/// model, which the sweep layer uses as its null case.
pub fn sample_model(seed: u64, j: f64) -> Result<QuantumNoiseModel, DynamicsError> {
    if !j.is_finite() || j < 0.0 {
        return Err(DynamicsError::BadCoupling(j));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let (bath, bath_norm) = loop {
        let mut h = CMat::zeros(2, 2);
        for &p in &paulis {
            h += pauli_matrix(p) * Complex64::new(rng.random::<f64>(), 0.0);
        }
        let norm = spectral_norm(&h);
        if norm > 1e-9 {
            break (h / Complex64::new(norm, 0.0), norm);
        }
    };
    let _ = bath_norm;
    let (raw, raw_sum) = loop {
        let mut raw = Vec::with_capacity(3);
        let mut sum = 0.0;
        for &axis in &paulis {
            let mut b = CMat::zeros(2, 2);
            for &p in &paulis {
                b += pauli_matrix(p) * Complex64::new(rng.random::<f64>(), 0.0);
            }
            sum += spectral_norm(&b);
            raw.push((axis, b));
        }
        if sum > 1e-9 {
            break (raw, sum);
        }
    };
    let scale = Complex64::new(j / raw_sum, 0.0);
    let interactions = raw
        .into_iter()
        .map(|(axis, b)| (PauliString::new(vec![axis]).expect("one letter"), b * scale))
        .collect();
    Ok(QuantumNoiseModel {
        n_system: 1,
        system_hamiltonian: CMat::zeros(2, 2),
        bath_hamiltonian: bath,
        interactions,
        coupling: j,
        beta: 1.0,
        seed,
    })
}

/// Output of [`evolve`]; the optional fields are filled by the callers that
/// compute them ([`reduced_error`], [`first_magnus_norm`]).
#[derive(Clone, Debug)]
pub struct EvolutionReport {
    pub total: CMat,
    pub reference: CMat,
    /// Spectral norm of total - reference, in [0, 2].
    pub error: f64,
    pub trace_distances: Option<Vec<f64>>,
    pub omega1_norm: Option<f64>,
    /// True when JT >= pi: scaling fits past this point are unreliable.
    pub magnus_advisory: bool,
}

fn validate(
    schedule: &PulseSchedule,
    model: &QuantumNoiseModel,
    t_total: f64,
) -> Result<(), DynamicsError> {
    if schedule.group().n_qubits() != model.n_system {
        return Err(DynamicsError::DimensionMismatch {
            schedule: schedule.group().n_qubits(),
            model: model.n_system,
        });
    }
    if !t_total.is_finite() || t_total < 0.0 {
        return Err(DynamicsError::BadTime(t_total));
    }
    model.check_shapes()
}

/// Evolves under `schedule` for total time `t_total` and reports the
/// operator-norm distance to the decoupling target.
pub fn evolve(
    schedule: &PulseSchedule,
    model: &QuantumNoiseModel,
    t_total: f64,
) -> Result<EvolutionReport, DynamicsError> {
    evolve_with_pulse_phase(schedule, model, t_total, ONE)
}

/// `evolve` with every pulse matrix multiplied by `phase`. The reported
/// error is phase-independent; exposed for the invariance check.
pub(crate) fn evolve_with_pulse_phase(
    schedule: &PulseSchedule,
    model: &QuantumNoiseModel,
    t_total: f64,
    phase: Complex64,
) -> Result<EvolutionReport, DynamicsError> {
    validate(schedule, model, t_total)?;
    let dim = model.total_dim();
    let bath_eye = identity(model.bath_dim());
    let eig_total = hermitian_eig(&model.total_hamiltonian());
    let eig_free = hermitian_eig(&model.free_hamiltonian());

    let pulses = schedule.compile_pulses();
    let pulse_mats: Vec<CMat> = pulses
        .iter()
        .map(|p| pauli_string_matrix(&p.op).kronecker(&bath_eye) * phase)
        .collect();
    let boundaries = schedule.boundaries();
    let cuts = schedule.cut_times().len();

    let mut total = identity(dim);
    for l in 0..schedule.segment_count() {
        let dt = (boundaries[l + 1] - boundaries[l]) * t_total;
        total = eig_total.exp_minus_i(dt) * total;
        if l < cuts {
            total = &pulse_mats[l] * total;
        }
    }
    if pulse_mats.len() == cuts + 1 {
        total = &pulse_mats[cuts] * total;
    }

    let control = pulse_mats.iter().fold(identity(dim), |acc, p| p * acc);
    let reference = control * eig_free.exp_minus_i(t_total);
    let error = spectral_norm(&(&total - &reference));
    debug_assert!(max_abs(&(&total * total.adjoint() - identity(dim))) < 1e-11);

    Ok(EvolutionReport {
        total,
        reference,
        error,
        trace_distances: None,
        omega1_norm: None,
        magnus_advisory: model.coupling * t_total >= MAGNUS_ADVISORY_JT,
    })
}

/// Normalized product state |system> (x) |bath>.
#[derive(Clone, Debug)]
pub struct ProductState {
    pub system: CVec,
    pub bath: CVec,
}

impl ProductState {
    pub fn joint(&self) -> CVec {
        let mut v = CVec::zeros(self.system.len() * self.bath.len());
        for (i, si) in self.system.iter().enumerate() {
            for (b, bb) in self.bath.iter().enumerate() {
                v[i * self.bath.len() + b] = si * bb;
            }
        }
        v
    }

    fn check(&self, model: &QuantumNoiseModel) -> Result<(), DynamicsError> {
        if self.system.len() != model.system_dim() || self.bath.len() != model.bath_dim() {
            return Err(DynamicsError::StateDimension {
                got: self.system.len() * self.bath.len(),
                want: model.total_dim(),
            });
        }
        for half in [&self.system, &self.bath] {
            let dev = (half.norm() - 1.0).abs();
            if dev > 1e-9 {
                return Err(DynamicsError::NotNormalized(dev));
            }
        }
        Ok(())
    }
}

/// Haar-random product states: independent normalized complex-Gaussian
/// vectors on system and bath.
pub fn haar_product_states(system_dim: usize, count: usize, seed: u64) -> Vec<ProductState> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut gaussian_vec = |dim: usize| {
        let mut v = CVec::from_iterator(
            dim,
            (0..dim).map(|_| {
                Complex64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            }),
        );
        v /= Complex64::new(v.norm(), 0.0);
        v
    };
    (0..count)
        .map(|_| ProductState {
            system: gaussian_vec(system_dim),
            bath: gaussian_vec(2),
        })
        .collect()
}

fn reduced_density(psi: &CVec, system_dim: usize, bath_dim: usize) -> CMat {
    // rho_S = M M^dagger with M[i][b] the amplitude of |i>|b>.
    let m = CMat::from_fn(system_dim, bath_dim, |i, b| psi[i * bath_dim + b]);
    &m * m.adjoint()
}

fn trace_distance(a: &CMat, b: &CMat) -> f64 {
    let eig = (a - b).symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// Trace distance between the evolved and ideal reduced system states, one
/// value per initial product state.
pub fn reduced_error(
    schedule: &PulseSchedule,
    model: &QuantumNoiseModel,
    t_total: f64,
    states: &[ProductState],
) -> Result<Vec<f64>, DynamicsError> {
    let report = evolve(schedule, model, t_total)?;
    trace_distances_of(&report, model, states)
}

/// Same trace distances computed from an existing report, so sweeps can
/// reuse one propagator pair for many states.
pub fn trace_distances_of(
    report: &EvolutionReport,
    model: &QuantumNoiseModel,
    states: &[ProductState],
) -> Result<Vec<f64>, DynamicsError> {
    let (ds, db) = (model.system_dim(), model.bath_dim());
    states
        .iter()
        .map(|state| {
            state.check(model)?;
            let psi = state.joint();
            let evolved = reduced_density(&(&report.total * &psi), ds, db);
            let ideal = reduced_density(&(&report.reference * &psi), ds, db);
            Ok(trace_distance(&evolved, &ideal))
        })
        .collect()
}

const QUAD_MAX_DEPTH: usize = 40;

// The recursion carries endpoint and midpoint caches to halve evaluations.
#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: &CMat,
    fm: &CMat,
    fb: &CMat,
    whole: &CMat,
    tol: f64,
    depth: usize,
) -> Result<CMat, DynamicsError>
where
    F: FnMut(f64) -> CMat,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let four = Complex64::new(4.0, 0.0);
    let h6 = Complex64::new((b - a) / 12.0, 0.0);
    let left = (fa + &flm * four + fm) * h6;
    let right = (fm + &frm * four + fb) * h6;
    let sum = &left + &right;
    let delta = &sum - whole;
    if max_abs(&delta) <= 15.0 * tol {
        return Ok(sum + delta / Complex64::new(15.0, 0.0));
    }
    if depth == 0 {
        return Err(DynamicsError::QuadratureNoConvergence {
            tol,
            depth: QUAD_MAX_DEPTH,
        });
    }
    let l = adaptive_simpson(f, a, m, fa, &flm, fm, &left, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson(f, m, b, fm, &frm, fb, &right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

fn integrate_matrix<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<CMat, DynamicsError>
where
    F: FnMut(f64) -> CMat,
{
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = (&fa + &fm * Complex64::new(4.0, 0.0) + &fb) * Complex64::new((b - a) / 6.0, 0.0);
    adaptive_simpson(&mut f, a, b, &fa, &fm, &fb, &whole, tol, QUAD_MAX_DEPTH)
}

/// Spectral norm of the first Magnus term
/// Omega_1(T) = -i sum_alpha integral_0^T y_alpha(t) A_alpha(t) dt with
/// A_alpha(t) = exp(iH_0 t) (sigma_alpha (x) B_alpha) exp(-iH_0 t), by
/// adaptive quadrature per segment at absolute tolerance `tol` distributed
/// over segments by length.
pub fn first_magnus_norm(
    schedule: &PulseSchedule,
    model: &QuantumNoiseModel,
    t_total: f64,
    tol: f64,
) -> Result<f64, DynamicsError> {
    validate(schedule, model, t_total)?;
    let eig_free = hermitian_eig(&model.free_hamiltonian());
    let couplings: Vec<CMat> = model
        .interactions
        .iter()
        .map(|(axis, b)| pauli_string_matrix(axis).kronecker(b))
        .collect();
    let frames = schedule.frames();
    let boundaries = schedule.boundaries();
    let dim = model.total_dim();

    let mut omega = CMat::zeros(dim, dim);
    for l in 0..schedule.segment_count() {
        let (a, b) = (boundaries[l] * t_total, boundaries[l + 1] * t_total);
        if a == b {
            continue;
        }
        let mut signs = Vec::with_capacity(couplings.len());
        for (axis, _) in &model.interactions {
            signs.push(f64::from(
                sign_character(axis, frames[l]).expect("validated dims"),
            ));
        }
        let seg = integrate_matrix(
            |t| {
                let rot = eig_free.exp_minus_i(-t);
                let mut m = CMat::zeros(dim, dim);
                for (s, v) in signs.iter().zip(&couplings) {
                    m += &rot * v * rot.adjoint() * Complex64::new(*s, 0.0);
                }
                m
            },
            a,
            b,
            tol * ((b - a) / t_total.max(f64::MIN_POSITIVE)).max(f64::MIN_POSITIVE),
        )?;
        omega += seg;
    }
    omega *= -I;
    Ok(spectral_norm(&omega))
}

/// Per-axis classical coefficient beta(t) = amplitude * cos(frequency * t +
/// phase).
#[derive(Clone, Copy, Debug)]
pub struct ClassicalComponent {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl ClassicalComponent {
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).cos()
    }
}

/// Single-qubit classical dephasing-style noise: one cosine component per
/// axis x, y, z, all frequencies within the stated cutoff.
#[derive(Clone, Debug)]
pub struct ClassicalNoiseModel {
    components: [ClassicalComponent; 3],
    cutoff: f64,
}

impl ClassicalNoiseModel {
    pub fn new(components: [ClassicalComponent; 3], cutoff: f64) -> Result<Self, DynamicsError> {
        for c in &components {
            if !(c.amplitude.is_finite() && c.frequency.is_finite() && c.phase.is_finite()) {
                return Err(DynamicsError::NonFiniteComponent);
            }
            if c.frequency.abs() > cutoff {
                return Err(DynamicsError::FrequencyAboveCutoff {
                    frequency: c.frequency,
                    cutoff,
                });
            }
        }
        Ok(ClassicalNoiseModel { components, cutoff })
    }

    pub fn components(&self) -> &[ClassicalComponent; 3] {
        &self.components
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// sup_t sum_alpha |beta_alpha(t)| at phase alignment: sum of |A_alpha|.
    /// The K-th derivative of each component is bounded by beta_max *
    /// cutoff^K.
    pub fn beta_max(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude.abs()).sum()
    }
}

/// Integrates the toggling-frame propagator for classical noise,
/// H(t) = sum_alpha y_alpha(t) beta_alpha(t) sigma_alpha, and returns
/// |U(T) - I|. The deviation V = U - I is integrated directly so errors far
/// below machine epsilon relative to identity stay resolved; `tol` is the
/// integrator tolerance (1e-12 for production runs).
pub fn evolve_classical(
    schedule: &PulseSchedule,
    model: &ClassicalNoiseModel,
    t_total: f64,
    tol: f64,
) -> Result<f64, DynamicsError> {
    if schedule.group().n_qubits() != 1 {
        return Err(DynamicsError::DimensionMismatch {
            schedule: schedule.group().n_qubits(),
            model: 1,
        });
    }
    if !t_total.is_finite() || t_total < 0.0 {
        return Err(DynamicsError::BadTime(t_total));
    }
    let axes: [PauliString; 3] = [
        "X".parse().expect("valid"),
        "Y".parse().expect("valid"),
        "Z".parse().expect("valid"),
    ];
    let sigmas = [
        pauli_matrix(Pauli::X),
        pauli_matrix(Pauli::Y),
        pauli_matrix(Pauli::Z),
    ];
    let frames = schedule.frames();
    let boundaries = schedule.boundaries();
    let opts = OdeOptions {
        rtol: tol,
        atol: tol * (model.beta_max() * t_total).max(f64::MIN_POSITIVE),
        ..OdeOptions::default()
    };

    let eye = identity(2);
    let mut deviation = CMat::zeros(2, 2);
    for l in 0..schedule.segment_count() {
        let (a, b) = (boundaries[l] * t_total, boundaries[l + 1] * t_total);
        let mut signs = [0.0f64; 3];
        for (s, axis) in signs.iter_mut().zip(&axes) {
            *s = f64::from(sign_character(axis, frames[l]).expect("single qubit"));
        }
        deviation = ode::integrate(
            |t, v| {
                let mut h = CMat::zeros(2, 2);
                for a in 0..3 {
                    let coeff = signs[a] * model.components[a].value(t);
                    if coeff != 0.0 {
                        h += &sigmas[a] * Complex64::new(coeff, 0.0);
                    }
                }
                let mut dv = h * (&eye + v);
                dv *= -I;
                dv
            },
            a,
            b,
            deviation,
            &opts,
        )?;
    }
    Ok(spectral_norm(&deviation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{published_schedule, xy4_schedule};

    fn xy4_and_model(j: f64) -> (PulseSchedule, QuantumNoiseModel) {
        (xy4_schedule(), sample_model(11, j).unwrap())
    }

    #[test]
    fn sampled_models_are_normalized_and_reproducible() {
        let m = sample_model(42, 1e-3).unwrap();
        assert!((spectral_norm(&m.bath_hamiltonian) - 1.0).abs() < 1e-12);
        let total: f64 = m.interactions.iter().map(|(_, b)| spectral_norm(b)).sum();
        assert!((total - 1e-3).abs() < 1e-12 * 1e-3);
        assert!(max_abs(&m.system_hamiltonian) == 0.0);

        let m2 = sample_model(42, 1e-3).unwrap();
        assert_eq!(
            m.bath_hamiltonian[(0, 1)].re.to_bits(),
            m2.bath_hamiltonian[(0, 1)].re.to_bits()
        );
        assert!(sample_model(7, -1.0).is_err());
    }

    #[test]
    fn zero_coupling_evolves_exactly_onto_the_reference() {
        let (s, m) = xy4_and_model(0.0);
        let report = evolve(&s, &m, 0.7).unwrap();
        assert!(report.error < 1e-13);
        assert!(!report.magnus_advisory);
    }

    #[test]
    fn propagators_stay_unitary_and_errors_bounded() {
        let (s, m) = xy4_and_model(0.3);
        let report = evolve(&s, &m, 2.0).unwrap();
        let dim = m.total_dim();
        assert!(max_abs(&(&report.total * report.total.adjoint() - identity(dim))) < 1e-12);
        assert!(max_abs(&(&report.reference * report.reference.adjoint() - identity(dim))) < 1e-12);
        assert!(report.error >= 0.0 && report.error <= 2.0 + 1e-12);
    }

    #[test]
    fn reference_is_free_evolution_up_to_global_phase_under_closure() {
        let (s, m) = xy4_and_model(1e-3);
        assert!(s.cyclic_closure());
        let report = evolve(&s, &m, 1.3).unwrap();
        let free = hermitian_eig(&m.free_hamiltonian()).exp_minus_i(1.3);
        let ratio = &report.reference * free.adjoint();
        // ratio must be a unimodular multiple of the identity
        let phase = ratio[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(max_abs(&(ratio - identity(m.total_dim()) * phase)) < 1e-12);
    }

    #[test]
    fn error_is_invariant_under_pulse_phase_convention() {
        let (s, m) = xy4_and_model(2e-2);
        let plain = evolve_with_pulse_phase(&s, &m, 0.9, ONE).unwrap();
        let rotated = evolve_with_pulse_phase(&s, &m, 0.9, I).unwrap();
        assert!((plain.error - rotated.error).abs() < 1e-13);
    }

    #[test]
    fn xy4_error_scales_quadratically_before_the_crossover() {
        let (s, m) = xy4_and_model(1e-3);
        let e1 = evolve(&s, &m, 0.02).unwrap().error;
        let e2 = evolve(&s, &m, 0.04).unwrap().error;
        let ratio = e2 / e1;
        assert!(
            (ratio - 4.0).abs() < 0.8,
            "expected ~2^(K+1) = 4, got {ratio}"
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (_, m) = xy4_and_model(1e-3);
        let two_qubit = crate::pauli::DecouplingGroup::parse(&["II", "XX", "YY", "ZZ"]).unwrap();
        let s = PulseSchedule::new(two_qubit, vec![0.5], vec![0, 1], true).unwrap();
        assert!(matches!(
            evolve(&s, &m, 1.0),
            Err(DynamicsError::DimensionMismatch {
                schedule: 2,
                model: 1
            })
        ));
        let (s, m) = xy4_and_model(1e-3);
        assert!(matches!(
            evolve(&s, &m, f64::NAN),
            Err(DynamicsError::BadTime(_))
        ));
    }

    #[test]
    fn reduced_errors_vanish_without_coupling_and_stay_in_range() {
        let (s, m) = xy4_and_model(0.0);
        let states = haar_product_states(2, 20, 99);
        let d = reduced_error(&s, &m, 1.0, &states).unwrap();
        assert!(d.iter().all(|&x| x < 1e-13));

        let (s, m) = xy4_and_model(0.4);
        let d = reduced_error(&s, &m, 3.0, &states).unwrap();
        assert!(d.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));

        let bad = ProductState {
            system: CVec::from_element(2, Complex64::new(1.0, 0.0)),
            bath: states[0].bath.clone(),
        };
        assert!(matches!(
            reduced_error(&s, &m, 1.0, &[bad]),
            Err(DynamicsError::NotNormalized(_))
        ));
    }

    #[test]
    fn first_magnus_vanishes_without_coupling_and_scales_with_order() {
        let (s, m) = xy4_and_model(0.0);
        assert!(first_magnus_norm(&s, &m, 1.0, 1e-12).unwrap() < 1e-13);

        // Order 2: |Omega_1| grows like T^3 at small T.
        let s = published_schedule(2).unwrap();
        let m = sample_model(5, 1e-4).unwrap();
        let w1 = first_magnus_norm(&s, &m, 0.05, 1e-16).unwrap();
        let w2 = first_magnus_norm(&s, &m, 0.10, 1e-16).unwrap();
        let ratio = w2 / w1;
        assert!(
            (ratio - 8.0).abs() < 0.8,
            "expected ~2^(K+1) = 8, got {ratio}"
        );
    }

    #[test]
    fn first_magnus_of_constant_integrand_is_jt() {
        // No pulses, H_0 = 0: the integrand is constant and
        // |Omega_1| = |sum sigma_alpha (x) B_alpha| * T.
        let group = crate::pauli::DecouplingGroup::parse(&["I"]).unwrap();
        let s = PulseSchedule::new(group, vec![], vec![0], false).unwrap();
        let mut m = sample_model(3, 0.02).unwrap();
        m.bath_hamiltonian = CMat::zeros(2, 2);
        m.beta = 0.0;
        let coupling_norm = spectral_norm(
            &m.interactions
                .iter()
                .map(|(a, b)| pauli_string_matrix(a).kronecker(b))
                .fold(CMat::zeros(4, 4), |acc, v| acc + v),
        );
        let t = 0.37;
        let w = first_magnus_norm(&s, &m, t, 1e-14).unwrap();
        assert!((w - coupling_norm * t).abs() < 1e-12);
    }

    #[test]
    fn classical_noise_vanishes_with_zero_amplitudes() {
        let model = ClassicalNoiseModel::new(
            [ClassicalComponent {
                amplitude: 0.0,
                frequency: 1.0,
                phase: 0.0,
            }; 3],
            2.0,
        )
        .unwrap();
        let e = evolve_classical(&xy4_schedule(), &model, 1.0, 1e-12).unwrap();
        assert!(e < 1e-15);
    }

    #[test]
    fn static_classical_noise_matches_the_quantum_model() {
        // omega = 0: beta_alpha(t) = A_alpha cos(phase), the same as coupling
        // to a trivial bath through B_alpha = A_alpha cos(phase) * I.
        let comps = [
            ClassicalComponent {
                amplitude: 3e-3,
                frequency: 0.0,
                phase: 0.3,
            },
            ClassicalComponent {
                amplitude: 1e-3,
                frequency: 0.0,
                phase: 1.1,
            },
            ClassicalComponent {
                amplitude: 2e-3,
                frequency: 0.0,
                phase: -0.4,
            },
        ];
        let classical = ClassicalNoiseModel::new(comps, 1.0).unwrap();
        let s = published_schedule(2).unwrap();
        let t = 0.8;
        let e_classical = evolve_classical(&s, &classical, t, 1e-13).unwrap();

        let axes = ["X", "Y", "Z"];
        let quantum = QuantumNoiseModel {
            n_system: 1,
            system_hamiltonian: CMat::zeros(2, 2),
            bath_hamiltonian: CMat::zeros(2, 2),
            interactions: axes
                .iter()
                .zip(&comps)
                .map(|(a, c)| {
                    (
                        a.parse().unwrap(),
                        identity(2) * Complex64::new(c.value(0.0), 0.0),
                    )
                })
                .collect(),
            coupling: comps.iter().map(|c| c.value(0.0).abs()).sum(),
            beta: 0.0,
            seed: 0,
        };
        let e_quantum = evolve(&s, &quantum, t).unwrap().error;
        assert!(
            (e_classical - e_quantum).abs() < 1e-10,
            "{e_classical} vs {e_quantum}"
        );
    }

    #[test]
    fn classical_model_validates_its_components() {
        let bad = ClassicalNoiseModel::new(
            [ClassicalComponent {
                amplitude: 1.0,
                frequency: 3.0,
                phase: 0.0,
            }; 3],
            2.0,
        );
        assert!(matches!(
            bad,
            Err(DynamicsError::FrequencyAboveCutoff { .. })
        ));
        let nan = ClassicalNoiseModel::new(
            [ClassicalComponent {
                amplitude: f64::NAN,
                frequency: 0.0,
                phase: 0.0,
            }; 3],
            2.0,
        );
        assert!(matches!(nan, Err(DynamicsError::NonFiniteComponent)));
    }
}
