//! Random Sycamore-class circuit generation on a rows x cols grid.
//!
//! One cycle is a moment of random single-qubit gates drawn from
//! {sqrt(X), sqrt(Y), sqrt(W)} followed by a moment of fSim gates on the
//! coupler class named by the pattern letter for that cycle
//! (`letters[cycle % letters.len()]`). A qubit never repeats its previous
//! cycle's single-qubit gate.
//!
//! Coupler classes on the grid (qubit index `q = row * cols + col`):
//!
//! * `A` / `B` — horizontal couplers `(r,c)-(r,c+1)` with even / odd `c`
//! * `C` / `D` — vertical couplers `(r,c)-(r+1,c)` with even / odd `r`
//! * `E`..`H` — the same four classes under alternate labels:
//!   `E=C`, `F=D`, `G=A`, `H=B`
//!
//! A class may be empty on small grids; the corresponding two-qubit moment is
//! then empty, which is not an error.
//!
//! Determinism: the generator consumes a single [`stream_from_seed`] stream
//! in a fixed documented order — for each cycle, one draw per qubit in
//! ascending index (an index into the 3 kinds on the first cycle, an index
//! into the 2 allowed kinds afterwards). The fSim moments consume no
//! randomness.

use rand_chacha::ChaCha8Rng;

use super::{Circuit, CircuitError, GateKind, GateOp};
use crate::rng::{stream_from_seed, uniform_below};

/// fSim swap angle used for generated circuits (Sycamore-style).
pub const FSIM_THETA: f64 = std::f64::consts::FRAC_PI_2;
/// fSim conditional-phase angle used for generated circuits.
pub const FSIM_PHI: f64 = std::f64::consts::FRAC_PI_6;

const ONE_QUBIT_KINDS: [GateKind; 3] = [GateKind::SqrtX, GateKind::SqrtY, GateKind::SqrtW];

/// A repeating coupler-activation pattern over a qubit grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    letters: String,
    rows: usize,
    cols: usize,
}

impl PatternSpec {
    /// Validates the letter string (non-empty, A..H) and grid size (>= 2
    /// qubits).
    pub fn new(letters: &str, rows: usize, cols: usize) -> Result<Self, CircuitError> {
        if letters.is_empty() {
            return Err(CircuitError::EmptyPattern);
        }
        for ch in letters.chars() {
            if !ch.is_ascii_uppercase() || ch > 'H' {
                return Err(CircuitError::BadPatternLetter(ch));
            }
        }
        if rows * cols < 2 {
            return Err(CircuitError::GridTooSmall { rows, cols });
        }
        Ok(PatternSpec { letters: letters.to_owned(), rows, cols })
    }

    pub fn letters(&self) -> &str {
        &self.letters
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_qubits(&self) -> usize {
        self.rows * self.cols
    }

    /// Qubit pairs of one coupler class, lower index first, in row-major
    /// order.
    pub fn class_pairs(&self, letter: char) -> Vec<(usize, usize)> {
        let q = |r: usize, c: usize| r * self.cols + c;
        let horizontal = |parity: usize| {
            let mut pairs = Vec::new();
            for r in 0..self.rows {
                for c in (parity..self.cols.saturating_sub(1)).step_by(2) {
                    pairs.push((q(r, c), q(r, c + 1)));
                }
            }
            pairs
        };
        let vertical = |parity: usize| {
            let mut pairs = Vec::new();
            for r in (parity..self.rows.saturating_sub(1)).step_by(2) {
                for c in 0..self.cols {
                    pairs.push((q(r, c), q(r + 1, c)));
                }
            }
            pairs
        };
        match letter {
            'A' | 'G' => horizontal(0),
            'B' | 'H' => horizontal(1),
            'C' | 'E' => vertical(0),
            'D' | 'F' => vertical(1),
            _ => Vec::new(),
        }
    }
}

fn draw_one_qubit_kind(rng: &mut ChaCha8Rng, previous: Option<usize>) -> usize {
    match previous {
        None => uniform_below(rng, 3) as usize,
        Some(prev) => {
            // pick among the two kinds != prev, in ascending kind order
            let r = uniform_below(rng, 2) as usize;
            (0..3).filter(|&k| k != prev).nth(r).unwrap()
        }
    }
}

/// Generates a random circuit of `cycles` cycles on the pattern's grid.
///
/// Deterministic in `(pattern, cycles, seed)`; two calls with identical
/// arguments return structurally identical circuits.
pub fn generate_rcs_circuit(
    pattern: &PatternSpec,
    cycles: usize,
    seed: u64,
) -> Result<Circuit, CircuitError> {
    if cycles == 0 {
        return Err(CircuitError::NoCycles);
    }
    let n = pattern.n_qubits();
    let mut circuit = Circuit::new(n)?;
    let mut rng = stream_from_seed(seed);
    let letters: Vec<char> = pattern.letters().chars().collect();
    let mut previous: Vec<Option<usize>> = vec![None; n];

    for cycle in 0..cycles {
        let mut ops = Vec::with_capacity(n);
        for q in 0..n {
            let k = draw_one_qubit_kind(&mut rng, previous[q]);
            previous[q] = Some(k);
            ops.push(GateOp::new(ONE_QUBIT_KINDS[k], vec![q])?);
        }
        circuit.push_moment(ops)?;

        let letter = letters[cycle % letters.len()];
        let pairs = pattern.class_pairs(letter);
        let mut ops = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            ops.push(GateOp::new(
                GateKind::FSim { theta: FSIM_THETA, phi: FSIM_PHI },
                vec![a, b],
            )?);
        }
        circuit.push_moment(ops)?;
    }
    Ok(circuit)
}
