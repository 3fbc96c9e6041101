//! Test-only oracles for checking the RCS pipeline, kept deliberately
//! independent of the engine's stride kernels.
//!
//! [`dense_state`] evolves a state by building each gate's full
//! 2^n x 2^n embedding and doing a dense matrix-vector product — an O(4^n)
//! path that shares no code with `rcs_core::engine`'s kernels. It is only
//! usable at oracle scale (n <= ~10), which is the point.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use rcs_core::circuit::{Circuit, GateMatrix, GateOp};
use rcs_core::engine::StateVector;
use rcs_core::rng::{next_f64, stream_from_seed};

/// Full 2^n x 2^n embedding of a gate, by explicit index arithmetic.
///
/// Entry (i, j) is nonzero only when i and j agree outside the gate's
/// qubits; within them it is the gate matrix entry with the first listed
/// qubit as the low-order sub-index bit.
pub fn embed_gate(op: &GateOp, n_qubits: usize) -> Vec<Vec<Complex64>> {
    let dim = 1usize << n_qubits;
    let zero = Complex64::new(0.0, 0.0);
    let mut full = vec![vec![zero; dim]; dim];
    let qubits = op.qubits();
    let sub_index = |i: usize| -> usize {
        qubits
            .iter()
            .enumerate()
            .map(|(k, &q)| ((i >> q) & 1) << k)
            .sum()
    };
    let outside_mask: usize = {
        let mut m = dim - 1;
        for &q in qubits {
            m &= !(1usize << q);
        }
        m
    };
    let entry = |r: usize, c: usize| -> Complex64 {
        match op.kind().matrix() {
            GateMatrix::One(m) => m[r][c],
            GateMatrix::Two(m) => m[r][c],
        }
    };
    for i in 0..dim {
        for j in 0..dim {
            if (i & outside_mask) == (j & outside_mask) {
                full[i][j] = entry(sub_index(i), sub_index(j));
            }
        }
    }
    full
}

/// Dense matrix-vector product.
pub fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Applies one gate to an amplitude vector through its dense embedding.
pub fn dense_apply(op: &GateOp, n_qubits: usize, amps: &[Complex64]) -> Vec<Complex64> {
    mat_vec(&embed_gate(op, n_qubits), amps)
}

/// Evolves |0...0> through the whole circuit densely.
pub fn dense_state(circuit: &Circuit) -> Vec<Complex64> {
    let dim = 1usize << circuit.n_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(1.0, 0.0);
    for moment in circuit.moments() {
        for op in moment.ops() {
            amps = dense_apply(op, circuit.n_qubits(), &amps);
        }
    }
    amps
}

/// Largest elementwise |a - b| between two amplitude arrays.
pub fn max_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// A Haar-ish random single-qubit unitary from four seeded angles. Always
/// exactly unitary by construction.
pub fn random_unitary_1q(rng: &mut ChaCha8Rng) -> [[Complex64; 2]; 2] {
    use std::f64::consts::TAU;
    let alpha = TAU * next_f64(rng);
    let beta = TAU * next_f64(rng);
    let delta = TAU * next_f64(rng);
    let theta = std::f64::consts::FRAC_PI_2 * next_f64(rng);
    let (c, s) = (theta.cos(), theta.sin());
    let g = Complex64::from_polar(1.0, delta);
    [
        [g * Complex64::from_polar(c, alpha), g * Complex64::from_polar(s, beta)],
        [g * Complex64::from_polar(-s, -beta), g * Complex64::from_polar(c, -alpha)],
    ]
}

/// A seeded random normalized state (Gaussian-ish components from summed
/// uniforms, then normalized).
pub fn random_state(n_qubits: usize, seed: u64) -> StateVector {
    let mut rng = stream_from_seed(seed);
    let dim = 1usize << n_qubits;
    let mut amps = Vec::with_capacity(dim);
    let gauss = |rng: &mut ChaCha8Rng| (0..6).map(|_| next_f64(rng) - 0.5).sum::<f64>();
    for _ in 0..dim {
        amps.push(Complex64::new(gauss(&mut rng), gauss(&mut rng)));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amps(n_qubits, amps).unwrap()
}

/// Seeded uniform draw in [0, n) for shaping random test inputs.
pub fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Pearson chi-square statistic of observed counts against expected
/// probabilities, with cells of expected count below `min_expected` pooled
/// into one (standard practice so the chi-square approximation holds).
///
/// Returns `(statistic, degrees_of_freedom)`.
pub fn chi_square_pooled(
    observed: &dyn Fn(usize) -> u64,
    probabilities: &[f64],
    total: u64,
    min_expected: f64,
) -> (f64, usize) {
    let total_f = total as f64;
    let mut statistic = 0.0f64;
    let mut cells = 0usize;
    let mut pooled_obs = 0.0f64;
    let mut pooled_exp = 0.0f64;
    for (i, &p) in probabilities.iter().enumerate() {
        let expected = p * total_f;
        let obs = observed(i) as f64;
        if expected < min_expected {
            pooled_obs += obs;
            pooled_exp += expected;
        } else {
            statistic += (obs - expected).powi(2) / expected;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    (statistic, cells.saturating_sub(1))
}

/// Upper critical value of the chi-square distribution.
pub fn chi_square_critical(df: usize, confidence: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df as f64)
        .expect("df > 0")
        .inverse_cdf(confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcs_core::circuit::{GateKind, GateOp};

    #[test]
    fn dense_oracle_matches_by_hand_sqrt_x() {
        let mut circuit = Circuit::new(1).unwrap();
        circuit
            .push_moment(vec![GateOp::new(GateKind::SqrtX, vec![0]).unwrap()])
            .unwrap();
        let amps = dense_state(&circuit);
        assert!((amps[0] - Complex64::new(0.5, 0.5)).norm() <= 1e-15);
        assert!((amps[1] - Complex64::new(0.5, -0.5)).norm() <= 1e-15);
    }

    #[test]
    fn embedding_ordering_uses_first_operand_as_low_bit() {
        // fsim on (q0=1, q1=0) of a 2-qubit system: |q1=0,q0=1> means the
        // state with qubit 1 set, i.e. global index 2; the matrix's
        // sub-index 1 row/col must act on it.
        let op = GateOp::new(GateKind::FSim { theta: 0.0, phi: 1.0 }, vec![1, 0]).unwrap();
        let full = embed_gate(&op, 2);
        // theta=0: only |11> (global index 3) picks up e^{-i phi}
        assert!((full[3][3] - Complex64::from_polar(1.0, -1.0)).norm() <= 1e-15);
        assert!((full[1][1] - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!((full[2][2] - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = stream_from_seed(4);
        for _ in 0..20 {
            let m = random_unitary_1q(&mut rng);
            let defect = GateKind::unitary_1q(m).is_ok();
            assert!(defect, "random unitary failed the 1e-12 unitarity gate");
        }
    }

    #[test]
    fn random_state_is_normalized() {
        let state = random_state(5, 8);
        assert!((state.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn chi_square_pooling_behaves() {
        let probs = vec![0.5, 0.5, 0.0];
        let counts = [51u64, 49, 0];
        let (stat, df) = chi_square_pooled(&|i| counts[i], &probs, 100, 5.0);
        assert_eq!(df, 1);
        assert!(stat < 1.0);
    }

    #[test]
    fn chi_square_critical_values() {
        // frozen from an independent computation
        assert!((chi_square_critical(2, 0.99) - 9.21034).abs() < 1e-4);
        assert!((chi_square_critical(63, 0.999) - 103.4424).abs() < 1e-3);
    }
}
