//! Few-qubit state-vector and density-matrix simulation.
//!
//! Amplitude indices use a fixed convention: the leftmost label is the most
//! significant bit. The protocol code always orders its qubits
//! `A, a, B, anc1, anc2`.

mod bell;
mod density;
mod gate;
mod measure;
mod random;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use bell::{bell_state, bell_state_on, haar_random_on, haar_random_pure, singlet_on};
pub use density::{fidelity, DensityMatrix};
pub use gate::{gates, unitarity_residual, GateOp};
pub use measure::{bits_to_string, measure_computational, outcome_probabilities, Measurement};
pub use random::RandomSource;
pub use state::{apply_unitary, tensor, PureState};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Tolerance for exact algebraic identities.
pub const TOL_ALGEBRAIC: f64 = 1e-12;
/// Tolerance for chained circuit results.
pub const TOL_CIRCUIT: f64 = 1e-10;
/// Maximum number of qubits a state may carry.
pub const MAX_QUBITS: usize = 5;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Kronecker product in the fixed index convention (`a` is the more
/// significant factor).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Bit of qubit `q` (0 = leftmost) in an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Apply `m` (dimension `2^k`) to the qubits at `positions` of an `n`-qubit
/// amplitude vector. The first listed position is the most significant bit
/// of the local index. `m` need not be unitary.
pub(crate) fn apply_local(amps: &[C64], n: usize, positions: &[usize], m: &CMatrix) -> Vec<C64> {
    let k = positions.len();
    let d = 1usize << k;
    debug_assert_eq!(m.nrows(), d);
    let masks: Vec<usize> = positions.iter().map(|&q| qubit_mask(n, q)).collect();
    let all: usize = masks.iter().fold(0, |acc, m| acc | m);
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    let mut idx = vec![0usize; d];
    for base in (0..amps.len()).filter(|b| b & all == 0) {
        for (s, slot) in idx.iter_mut().enumerate() {
            *slot = masks
                .iter()
                .enumerate()
                .filter(|(t, _)| (s >> (k - 1 - t)) & 1 == 1)
                .fold(base, |acc, (_, m)| acc | m);
        }
        for row in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..d {
                acc += m[(row, col)] * amps[idx[col]];
            }
            out[idx[row]] = acc;
        }
    }
    out
}

/// Check a label list: nonempty, at most [`MAX_QUBITS`], no duplicates.
pub(crate) fn check_labels<S: AsRef<str>>(labels: &[S]) -> crate::Result<Vec<String>> {
    if labels.is_empty() || labels.len() > MAX_QUBITS {
        return Err(crate::Error::QubitCount(labels.len()));
    }
    let mut out: Vec<String> = Vec::with_capacity(labels.len());
    for l in labels {
        let l = l.as_ref();
        if out.iter().any(|x| x == l) {
            return Err(crate::Error::DuplicateLabel(l.to_string()));
        }
        out.push(l.to_string());
    }
    Ok(out)
}

pub(crate) fn position_of(labels: &[String], label: &str) -> crate::Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| crate::Error::UnknownLabel(label.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_local_matches_kron_embedding() {
        // X on the middle qubit of three equals I ⊗ X ⊗ I.
        let x = gates::sigma1();
        let id = CMatrix::identity(2, 2);
        let full = kron(&kron(&id, &x), &id);
        let amps: Vec<C64> = (0..8).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        let got = apply_local(&amps, 3, &[1], &x);
        let v = nalgebra::DVector::from_vec(amps);
        let want = &full * v;
        for i in 0..8 {
            assert!((got[i] - want[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_local_respects_target_order() {
        // CNOT with control on qubit 2 and target on qubit 0 of three qubits:
        // |001> -> |101>.
        let amps: Vec<C64> = (0..8).map(|i| r(if i == 1 { 1.0 } else { 0.0 })).collect();
        let got = apply_local(&amps, 3, &[2, 0], &gates::cnot_matrix());
        assert!((got[5] - r(1.0)).norm() < 1e-15);
    }
}
