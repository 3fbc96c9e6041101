//! Circuit intermediate representation: gates, moments and summary stats.
//!
//! A [`Circuit`] is an ordered list of moments over `n_qubits` qubits; within
//! one moment no qubit is touched by more than one gate. Circuits come from
//! the QASM frontend ([`qasm::parse_qasm`]) or the random-circuit generator
//! ([`generate::generate_rcs_circuit`]).

pub mod generate;
pub mod qasm;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Errors for circuit construction and generation.
#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("circuit must have at least one qubit")]
    NoQubits,
    #[error("gate expects {expected} qubit operand(s), got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("qubit {qubit} listed more than once in a gate operand list")]
    DuplicateQubit { qubit: usize },
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("qubit {qubit} used by more than one gate in a moment")]
    MomentConflict { qubit: usize },
    #[error("gate angle must be a finite real")]
    NonFiniteAngle,
    #[error("matrix is not unitary (max defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("pattern string is empty")]
    EmptyPattern,
    #[error("pattern letter '{0}' outside A..H")]
    BadPatternLetter(char),
    #[error("grid {rows}x{cols} has fewer than 2 qubits")]
    GridTooSmall { rows: usize, cols: usize },
    #[error("cycle count must be at least 1")]
    NoCycles,
    #[error("gate kind cannot be expressed in the QASM dialect")]
    UnsupportedInDialect,
}

/// A single- or two-qubit gate.
///
/// The fixed single-qubit kinds are the square roots of the Pauli-style
/// operators X, Y and W = (X+Y)/sqrt(2) used by Sycamore-class random
/// circuits; `Rz` and `FSim` carry angles in radians; `Unitary1Q` holds an
/// arbitrary (validated) 2x2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    SqrtX,
    SqrtY,
    SqrtW,
    Rz(f64),
    FSim { theta: f64, phi: f64 },
    Unitary1Q([[Complex64; 2]; 2]),
}

/// A gate matrix in the computational basis.
///
/// Two-qubit matrices index the 4-dimensional subspace as
/// `b = bit(q1) << 1 | bit(q0)`, i.e. the first listed operand `q0` is the
/// low-order bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

const Z0: Complex64 = Complex64::new(0.0, 0.0);
const Z1: Complex64 = Complex64::new(1.0, 0.0);

impl GateKind {
    /// Number of qubit operands the kind takes.
    pub fn arity(&self) -> usize {
        match self {
            GateKind::FSim { .. } => 2,
            _ => 1,
        }
    }

    /// Validated constructor for an arbitrary single-qubit unitary.
    pub fn unitary_1q(m: [[Complex64; 2]; 2]) -> Result<Self, CircuitError> {
        let defect = GateMatrix::One(m).max_unitarity_defect();
        if defect > 1e-12 {
            return Err(CircuitError::NotUnitary { defect });
        }
        Ok(GateKind::Unitary1Q(m))
    }

    /// The gate's unitary matrix in the computational basis.
    pub fn matrix(&self) -> GateMatrix {
        match *self {
            // sqrt(X) = 1/2 [[1+i, 1-i], [1-i, 1+i]]
            GateKind::SqrtX => {
                let p = Complex64::new(0.5, 0.5);
                let m = Complex64::new(0.5, -0.5);
                GateMatrix::One([[p, m], [m, p]])
            }
            // sqrt(Y) = 1/2 [[1+i, -1-i], [1+i, 1+i]]
            GateKind::SqrtY => {
                let p = Complex64::new(0.5, 0.5);
                GateMatrix::One([[p, -p], [p, p]])
            }
            // Principal square root of W = (X+Y)/sqrt(2):
            // 1/2 [[1+i, -i*sqrt(2)], [sqrt(2), 1+i]]
            GateKind::SqrtW => {
                let p = Complex64::new(0.5, 0.5);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                GateMatrix::One([
                    [p, Complex64::new(0.0, -s)],
                    [Complex64::new(s, 0.0), p],
                ])
            }
            // Rz(phi) = diag(e^{-i phi/2}, e^{+i phi/2})
            GateKind::Rz(phi) => {
                let h = phi / 2.0;
                GateMatrix::One([
                    [Complex64::from_polar(1.0, -h), Z0],
                    [Z0, Complex64::from_polar(1.0, h)],
                ])
            }
            // fSim(theta, phi): partial-iSWAP block on {|01>, |10>},
            // conditional phase e^{-i phi} on |11>.
            GateKind::FSim { theta, phi } => {
                let c = Complex64::new(theta.cos(), 0.0);
                let s = Complex64::new(0.0, -theta.sin());
                let p = Complex64::from_polar(1.0, -phi);
                GateMatrix::Two([
                    [Z1, Z0, Z0, Z0],
                    [Z0, c, s, Z0],
                    [Z0, s, c, Z0],
                    [Z0, Z0, Z0, p],
                ])
            }
            GateKind::Unitary1Q(m) => GateMatrix::One(m),
        }
    }

    fn angles_finite(&self) -> bool {
        match *self {
            GateKind::Rz(phi) => phi.is_finite(),
            GateKind::FSim { theta, phi } => theta.is_finite() && phi.is_finite(),
            _ => true,
        }
    }

    fn stat_slot(&self) -> usize {
        match self {
            GateKind::SqrtX => 0,
            GateKind::SqrtY => 1,
            GateKind::SqrtW => 2,
            GateKind::Rz(_) => 3,
            GateKind::FSim { .. } => 4,
            GateKind::Unitary1Q(_) => 5,
        }
    }
}

impl GateMatrix {
    /// Max-norm of `M^dagger M - I`; zero for an exact unitary.
    pub fn max_unitarity_defect(&self) -> f64 {
        fn defect<const N: usize>(m: &[[Complex64; N]; N]) -> f64 {
            let mut worst = 0.0f64;
            for r in 0..N {
                for c in 0..N {
                    // (M^dagger M)[r][c] = sum_k conj(M[k][r]) * M[k][c]
                    let mut acc = Z0;
                    for k in 0..N {
                        acc += m[k][r].conj() * m[k][c];
                    }
                    let expect = if r == c { Z1 } else { Z0 };
                    worst = worst.max((acc - expect).norm());
                }
            }
            worst
        }
        match self {
            GateMatrix::One(m) => defect(m),
            GateMatrix::Two(m) => defect(m),
        }
    }
}

/// A gate applied to an ordered list of qubit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    kind: GateKind,
    qubits: Vec<usize>,
}

impl GateOp {
    /// Builds an op, checking arity, operand distinctness and angle
    /// finiteness. Qubit range is checked against the circuit on insertion.
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self, CircuitError> {
        if !kind.angles_finite() {
            return Err(CircuitError::NonFiniteAngle);
        }
        if qubits.len() != kind.arity() {
            return Err(CircuitError::ArityMismatch {
                expected: kind.arity(),
                got: qubits.len(),
            });
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CircuitError::DuplicateQubit { qubit: qubits[0] });
        }
        Ok(GateOp { kind, qubits })
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }
}

/// One layer of gates touching pairwise-disjoint qubits. May be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moment {
    ops: Vec<GateOp>,
}

impl Moment {
    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Gate-level circuit over `n_qubits` qubits.
///
/// Measurements parsed from QASM are recorded as `(qubit, clbit)` pairs for
/// round-tripping; the engine ignores them (sampling is global).
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    moments: Vec<Moment>,
    measurements: Vec<(usize, usize)>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        Ok(Circuit {
            n_qubits,
            moments: Vec::new(),
            measurements: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn moments(&self) -> &[Moment] {
        &self.moments
    }

    pub fn measurements(&self) -> &[(usize, usize)] {
        &self.measurements
    }

    /// Appends a moment, enforcing qubit range and one-op-per-qubit.
    pub fn push_moment(&mut self, ops: Vec<GateOp>) -> Result<(), CircuitError> {
        let mut used = vec![false; self.n_qubits];
        for op in &ops {
            for &q in op.qubits() {
                if q >= self.n_qubits {
                    return Err(CircuitError::QubitOutOfRange {
                        qubit: q,
                        n_qubits: self.n_qubits,
                    });
                }
                if used[q] {
                    return Err(CircuitError::MomentConflict { qubit: q });
                }
                used[q] = true;
            }
        }
        self.moments.push(Moment { ops });
        Ok(())
    }

    pub(crate) fn record_measurement(&mut self, qubit: usize, clbit: usize) {
        self.measurements.push((qubit, clbit));
    }

    /// Total gate count across all moments.
    pub fn n_ops(&self) -> usize {
        self.moments.iter().map(|m| m.ops.len()).sum()
    }
}

/// Pure summary of a circuit: sizes and per-kind gate counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    pub n_qubits: usize,
    pub n_moments: usize,
    pub sqrt_x: usize,
    pub sqrt_y: usize,
    pub sqrt_w: usize,
    pub rz: usize,
    pub fsim: usize,
    pub unitary_1q: usize,
    pub total_ops: usize,
}

/// Counts gates by kind; counts always sum to the total op count.
pub fn circuit_stats(circuit: &Circuit) -> CircuitStats {
    let mut slots = [0usize; 6];
    for moment in circuit.moments() {
        for op in moment.ops() {
            slots[op.kind().stat_slot()] += 1;
        }
    }
    CircuitStats {
        n_qubits: circuit.n_qubits(),
        n_moments: circuit.moments().len(),
        sqrt_x: slots[0],
        sqrt_y: slots[1],
        sqrt_w: slots[2],
        rz: slots[3],
        fsim: slots[4],
        unitary_1q: slots[5],
        total_ops: slots.iter().sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sqrt_x_squares_to_x() {
        let GateMatrix::One(m) = GateKind::SqrtX.matrix() else {
            panic!("arity");
        };
        // M*M must equal X = [[0,1],[1,0]]
        let x = [[Z0, Z1], [Z1, Z0]];
        for r in 0..2 {
            for col in 0..2 {
                let got = m[r][0] * m[0][col] + m[r][1] * m[1][col];
                assert!((got - x[r][col]).norm() <= 1e-12, "M^2 != X at ({r},{col})");
            }
        }
        assert_eq!(m[0][0], c(0.5, 0.5));
        assert_eq!(m[0][1], c(0.5, -0.5));
    }

    #[test]
    fn sqrt_y_squares_to_y() {
        let GateMatrix::One(m) = GateKind::SqrtY.matrix() else {
            panic!("arity");
        };
        let y = [[Z0, c(0.0, -1.0)], [c(0.0, 1.0), Z0]];
        for r in 0..2 {
            for col in 0..2 {
                let got = m[r][0] * m[0][col] + m[r][1] * m[1][col];
                assert!((got - y[r][col]).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_w_squares_to_w() {
        let GateMatrix::One(m) = GateKind::SqrtW.matrix() else {
            panic!("arity");
        };
        // W = (X+Y)/sqrt(2) = [[0, (1-i)/sqrt(2)], [(1+i)/sqrt(2), 0]]
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = [[Z0, c(s, -s)], [c(s, s), Z0]];
        for r in 0..2 {
            for col in 0..2 {
                let got = m[r][0] * m[0][col] + m[r][1] * m[1][col];
                assert!(
                    (got - w[r][col]).norm() <= 1e-12,
                    "M^2 != W at ({r},{col}): {got}"
                );
            }
        }
    }

    #[test]
    fn fsim_phases_only_the_11_state() {
        let GateMatrix::Two(m) = GateKind::FSim { theta: 0.3, phi: 0.7 }.matrix() else {
            panic!("arity");
        };
        assert_eq!(m[0][0], Z1);
        let expected = Complex64::from_polar(1.0, -0.7);
        assert!((m[3][3] - expected).norm() <= 1e-15);
        assert_eq!(m[3][0], Z0);
        assert_eq!(m[0][3], Z0);
    }

    #[test]
    fn all_fixed_kinds_are_unitary() {
        let kinds = [
            GateKind::SqrtX,
            GateKind::SqrtY,
            GateKind::SqrtW,
            GateKind::Rz(0.123),
            GateKind::Rz(-7.5),
            GateKind::FSim { theta: 1.1, phi: -2.2 },
            GateKind::FSim {
                theta: std::f64::consts::FRAC_PI_2,
                phi: std::f64::consts::FRAC_PI_6,
            },
        ];
        for kind in kinds {
            let defect = kind.matrix().max_unitarity_defect();
            assert!(defect <= 1e-12, "{kind:?} defect {defect:.3e}");
        }
    }

    #[test]
    fn unitary_1q_rejects_non_unitary() {
        let bad = [[Z1, Z1], [Z0, Z1]];
        assert!(matches!(
            GateKind::unitary_1q(bad),
            Err(CircuitError::NotUnitary { .. })
        ));
        let good = [[Z0, Z1], [Z1, Z0]];
        assert!(GateKind::unitary_1q(good).is_ok());
    }

    #[test]
    fn gate_op_validation() {
        assert!(matches!(
            GateOp::new(GateKind::SqrtX, vec![0, 1]),
            Err(CircuitError::ArityMismatch { expected: 1, got: 2 })
        ));
        assert!(matches!(
            GateOp::new(GateKind::FSim { theta: 0.1, phi: 0.2 }, vec![3, 3]),
            Err(CircuitError::DuplicateQubit { qubit: 3 })
        ));
        assert!(matches!(
            GateOp::new(GateKind::Rz(f64::NAN), vec![0]),
            Err(CircuitError::NonFiniteAngle)
        ));
    }

    #[test]
    fn moment_exclusivity_enforced() {
        let mut circuit = Circuit::new(2).unwrap();
        let a = GateOp::new(GateKind::SqrtX, vec![0]).unwrap();
        let b = GateOp::new(GateKind::SqrtY, vec![0]).unwrap();
        assert_eq!(
            circuit.push_moment(vec![a, b]),
            Err(CircuitError::MomentConflict { qubit: 0 })
        );
    }

    #[test]
    fn out_of_range_qubit_rejected() {
        let mut circuit = Circuit::new(2).unwrap();
        let op = GateOp::new(GateKind::SqrtX, vec![5]).unwrap();
        assert_eq!(
            circuit.push_moment(vec![op]),
            Err(CircuitError::QubitOutOfRange { qubit: 5, n_qubits: 2 })
        );
    }

    #[test]
    fn stats_on_empty_circuit_are_zero() {
        let circuit = Circuit::new(3).unwrap();
        let stats = circuit_stats(&circuit);
        assert_eq!(stats.n_moments, 0);
        assert_eq!(stats.total_ops, 0);
    }
}
