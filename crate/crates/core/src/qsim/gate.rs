use super::{CMatrix, C64, TOL_ALGEBRAIC};
use crate::{Error, Result};

/// A named unitary acting on one or two labelled qubits. The first target is
/// the most significant bit of the gate's local index (for CNOT: control).
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    name: String,
    matrix: CMatrix,
    targets: Vec<String>,
}

impl GateOp {
    pub fn new<S: AsRef<str>>(name: &str, matrix: CMatrix, targets: &[S]) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || !(d == 2 || d == 4) || d != 1 << targets.len() {
            return Err(Error::GateShape {
                dim: d,
                targets: targets.len(),
            });
        }
        let targets = super::check_labels(targets)?;
        let res = unitarity_residual(&matrix);
        if res.is_nan() || res > TOL_ALGEBRAIC {
            return Err(Error::NotUnitary(res));
        }
        Ok(Self {
            name: name.to_string(),
            matrix,
            targets,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }
}

/// Max-norm of `U U† − I`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let id = CMatrix::identity(m.nrows(), m.ncols());
    super::max_abs_diff(&(m * m.adjoint()), &id)
}

/// Standard gate matrices and constructors.
pub mod gates {
    use super::*;
    use crate::qsim::{c, r};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity2() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn hadamard_matrix() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(1.0), r(1.0), r(1.0), r(-1.0)]) * r(FRAC_1_SQRT_2)
    }

    /// Pauli X.
    pub fn sigma1() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)])
    }

    /// Pauli Y.
    pub fn sigma2() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)])
    }

    /// Pauli Z.
    pub fn sigma3() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)])
    }

    pub fn cnot_matrix() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = r(1.0);
        m[(1, 1)] = r(1.0);
        m[(2, 3)] = r(1.0);
        m[(3, 2)] = r(1.0);
        m
    }

    /// Embed a real 2×2 matrix.
    pub fn from_real(m: &nalgebra::Matrix2<f64>) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| C64::new(m[(i, j)], 0.0))
    }

    fn known(name: &str, m: CMatrix, targets: &[&str]) -> GateOp {
        GateOp::new(name, m, targets).expect("standard gate is unitary")
    }

    pub fn identity(q: &str) -> GateOp {
        known("I", identity2(), &[q])
    }

    pub fn hadamard(q: &str) -> GateOp {
        known("H", hadamard_matrix(), &[q])
    }

    pub fn pauli_x(q: &str) -> GateOp {
        known("X", sigma1(), &[q])
    }

    pub fn pauli_y(q: &str) -> GateOp {
        known("Y", sigma2(), &[q])
    }

    pub fn pauli_z(q: &str) -> GateOp {
        known("Z", sigma3(), &[q])
    }

    pub fn cnot(control: &str, target: &str) -> GateOp {
        known("CNOT", cnot_matrix(), &[control, target])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::r;

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(2.0)]);
        match GateOp::new("bad", m, &["q"]) {
            Err(Error::NotUnitary(res)) => assert!((res - 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(matches!(
            GateOp::new("x", gates::sigma1(), &["a", "b"]),
            Err(Error::GateShape { dim: 2, targets: 2 })
        ));
    }

    #[test]
    fn standard_gates_are_unitary_and_self_inverse() {
        for m in [
            gates::hadamard_matrix(),
            gates::sigma1(),
            gates::sigma2(),
            gates::sigma3(),
            gates::cnot_matrix(),
        ] {
            assert!(unitarity_residual(&m) < 1e-15);
            let id = CMatrix::identity(m.nrows(), m.nrows());
            assert!(crate::qsim::max_abs_diff(&(&m * &m), &id) < 1e-15);
        }
    }
}
