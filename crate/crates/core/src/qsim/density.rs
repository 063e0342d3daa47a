use serde::{Deserialize, Serialize};

use super::{check_labels, position_of, qubit_mask, CMatrix, PureState, C64, TOL_ALGEBRAIC};
use crate::{Error, Result};

/// Smallest eigenvalue accepted for a density matrix.
const EIGEN_FLOOR: f64 = -1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix on labelled qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct DensityMatrix {
    labels: Vec<String>,
    matrix: CMatrix,
}

/// JSON form: labels plus a row-major matrix of `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct DensityRepr {
    labels: Vec<String>,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<DensityRepr> for DensityMatrix {
    type Error = Error;

    fn try_from(r: DensityRepr) -> Result<Self> {
        let d = r.matrix.len();
        if r.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        let m = CMatrix::from_fn(d, d, |i, j| C64::new(r.matrix[i][j][0], r.matrix[i][j][1]));
        DensityMatrix::new(&r.labels, m)
    }
}

impl From<DensityMatrix> for DensityRepr {
    fn from(d: DensityMatrix) -> Self {
        let n = d.matrix.nrows();
        DensityRepr {
            matrix: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| [d.matrix[(i, j)].re, d.matrix[(i, j)].im])
                        .collect()
                })
                .collect(),
            labels: d.labels,
        }
    }
}

impl DensityMatrix {
    pub fn new<S: AsRef<str>>(labels: &[S], matrix: CMatrix) -> Result<Self> {
        let labels = check_labels(labels)?;
        let dim = 1usize << labels.len();
        if matrix.shape() != (dim, dim) {
            return Err(Error::InvalidDensity(format!(
                "shape {:?} for {} qubit(s)",
                matrix.shape(),
                labels.len()
            )));
        }
        let herm = super::max_abs_diff(&matrix, &matrix.adjoint());
        if herm > TOL_ALGEBRAIC {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL_ALGEBRAIC || tr.im.abs() > TOL_ALGEBRAIC {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        // symmetrize so the eigensolver sees an exactly Hermitian input
        let sym = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < EIGEN_FLOOR {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { labels, matrix })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            labels: state.labels().to_vec(),
            matrix: &v * v.adjoint(),
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels = check_labels(labels)?;
        let d = 1usize << labels.len();
        Ok(Self {
            labels,
            matrix: CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρρ) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩` without label checks (dimensions must agree).
    pub fn expectation(&self, psi: &[C64]) -> Result<C64> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch(psi.len(), self.dim()));
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        Ok((v.adjoint() * &self.matrix * &v)[(0, 0)])
    }

    /// Reduced state on `keep`, listed in this state's qubit order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix> {
        let (kp, ep) = split_positions(&self.labels, keep)?;
        let n = self.n_qubits();
        let dk = 1usize << kp.len();
        let de = 1usize << ep.len();
        let m = CMatrix::from_fn(dk, dk, |i, j| {
            (0..de)
                .map(|e| {
                    let e_bits = compose(n, &ep, e);
                    self.matrix[(compose(n, &kp, i) | e_bits, compose(n, &kp, j) | e_bits)]
                })
                .sum()
        });
        let labels: Vec<String> = kp.iter().map(|&q| self.labels[q].clone()).collect();
        DensityMatrix::new(&labels, m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl PureState {
    /// Reduced density matrix on `keep`, listed in this state's qubit order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix> {
        let (kp, ep) = split_positions(self.labels(), keep)?;
        let n = self.n_qubits();
        let dk = 1usize << kp.len();
        let de = 1usize << ep.len();
        let amps = self.amplitudes();
        let keep_idx: Vec<usize> = (0..dk).map(|i| compose(n, &kp, i)).collect();
        let env_idx: Vec<usize> = (0..de).map(|e| compose(n, &ep, e)).collect();
        let m = CMatrix::from_fn(dk, dk, |i, j| {
            env_idx
                .iter()
                .map(|&e| amps[keep_idx[i] | e] * amps[keep_idx[j] | e].conj())
                .sum()
        });
        let labels: Vec<String> = kp.iter().map(|&q| self.labels()[q].clone()).collect();
        DensityMatrix::new(&labels, m)
    }
}

/// `F = ⟨ψ|ρ|ψ⟩` for a pure reference. Labels are not compared, only sizes.
pub fn fidelity(reference: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if reference.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(reference.dim(), rho.dim()));
    }
    Ok(rho.expectation(reference.amplitudes())?.re)
}

/// Kept positions (in state order) and traced positions.
fn split_positions<S: AsRef<str>>(
    labels: &[String],
    keep: &[S],
) -> Result<(Vec<usize>, Vec<usize>)> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let mut kp = Vec::with_capacity(keep.len());
    for k in keep {
        let p = position_of(labels, k.as_ref())?;
        if kp.contains(&p) {
            return Err(Error::DuplicateLabel(k.as_ref().to_string()));
        }
        kp.push(p);
    }
    kp.sort_unstable();
    let ep = (0..labels.len()).filter(|q| !kp.contains(q)).collect();
    Ok((kp, ep))
}

/// Full-register index with the bits of `local` placed at `positions`.
fn compose(n: usize, positions: &[usize], local: usize) -> usize {
    let k = positions.len();
    positions
        .iter()
        .enumerate()
        .filter(|(t, _)| (local >> (k - 1 - t)) & 1 == 1)
        .fold(0, |acc, (_, &q)| acc | qubit_mask(n, q))
}
