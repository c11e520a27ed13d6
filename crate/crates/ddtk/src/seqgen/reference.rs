//! Reference sequences: XY4 and its repetition, single-axis Uhrig schedules,
//! and nested Uhrig (QDD) schedules on the X and Z axes.

use crate::pauli::{DecouplingGroup, Pauli, PauliString};
use crate::schedule::PulseSchedule;
use crate::seqgen::SeqGenError;

/// Equal quarters through frames I, X, Y, Z with cyclic closure: 4 pulses
/// X, Z, X, Z. This is also the order-1 optimum.
pub fn xy4_schedule() -> PulseSchedule {
    xy4_repeated(1)
}

/// XY4 repeated `cycles` times on an equal grid: 4*cycles pulses, still
/// order 1. Used as the fixed-order baseline at matched pulse counts.
pub fn xy4_repeated(cycles: usize) -> PulseSchedule {
    let cycles = cycles.max(1);
    let n = 4 * cycles;
    let cuts = (1..n).map(|j| j as f64 / n as f64).collect();
    let labels = (0..n).map(|j| j % 4).collect();
    PulseSchedule::new(DecouplingGroup::single_qubit(), cuts, labels, true)
        .expect("equal grid is valid")
}

fn uhrig_fraction(j: usize, n: usize) -> f64 {
    let s = (j as f64 * std::f64::consts::PI / (2.0 * n as f64 + 2.0)).sin();
    s * s
}

/// Uhrig schedule of order `n`: n pulses on `axis` at the sin^2 times
/// tau_j = sin^2(j pi / (2n + 2)), no closing pulse. Cancels the first n
/// moments of every axis anticommuting with `axis`.
pub fn udd_schedule(n: usize, axis: &PauliString) -> Result<PulseSchedule, SeqGenError> {
    if n == 0 {
        return Err(SeqGenError::ZeroOrder);
    }
    let group = DecouplingGroup::pair(axis)?;
    let cuts = (1..=n).map(|j| uhrig_fraction(j, n)).collect();
    let labels = (0..=n).map(|l| l % 2).collect();
    Ok(PulseSchedule::new(group, cuts, labels, false)?)
}

/// Nested Uhrig (QDD) schedule of order `n` on the single-qubit group: an
/// outer order-n Uhrig sequence of X pulses, and inside each outer interval
/// an inner order-n Uhrig sequence of Z pulses under the interval's affine
/// time map. For odd n both layers close their final frame, so coincident
/// boundary pulses merge to Y; pulse count is (n+1)^2 for odd n and
/// (n+1)^2 - 1 for even n.
pub fn qdd_schedule(n: usize) -> Result<PulseSchedule, SeqGenError> {
    if n == 0 {
        return Err(SeqGenError::ZeroOrder);
    }
    let mut outer: Vec<f64> = (0..=n + 1).map(|j| uhrig_fraction(j, n)).collect();
    outer[n + 1] = 1.0; // sin^2((n+1)pi/(2n+2)) exactly; keep closures coincident
    let odd = n % 2 == 1;

    // Pulse events before merging; coincident times merge projectively.
    let mut events: Vec<(f64, Pauli)> = Vec::new();
    for j in 1..=n + 1 {
        let (a, b) = (outer[j - 1], outer[j]);
        for k in 1..=n {
            events.push((a + (b - a) * uhrig_fraction(k, n), Pauli::Z));
        }
        if odd {
            events.push((b, Pauli::Z)); // inner frame closure
        }
        if j <= n {
            events.push((outer[j], Pauli::X));
        } else if odd {
            events.push((1.0, Pauli::X)); // outer frame closure
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite times"));
    let mut merged: Vec<(f64, Pauli)> = Vec::new();
    for (t, p) in events {
        match merged.last_mut() {
            Some((tl, pl)) if *tl == t => *pl = pl.product(p),
            _ => merged.push((t, p)),
        }
    }
    debug_assert!(merged.iter().all(|&(_, p)| p != Pauli::I));

    let group = DecouplingGroup::single_qubit();
    let mut frame = PauliString::identity(1);
    let mut labels = vec![0usize];
    let mut cuts = Vec::new();
    for &(t, p) in &merged {
        frame = PauliString::new(vec![p])
            .expect("one letter")
            .product(&frame)
            .expect("single qubit");
        if t < 1.0 {
            cuts.push(t);
            labels.push(group.index_of(&frame).expect("frames stay in the group"));
        } else {
            // The closing pulse is regenerated by cyclic_closure.
            debug_assert!(frame.is_identity());
        }
    }
    Ok(PulseSchedule::new(group, cuts, labels, true)?)
}
