use serde::{Deserialize, Serialize};

use super::{apply_local, check_labels, position_of, qubit_mask, DensityMatrix, GateOp, C64};
use super::{TOL_ALGEBRAIC, TOL_CIRCUIT};
use crate::{Error, Result};

/// Normalized state vector of 1 to 5 labelled qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct PureState {
    labels: Vec<String>,
    amps: Vec<C64>,
}

/// JSON form: labels plus `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct StateRepr {
    labels: Vec<String>,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateRepr> for PureState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        let amps = r
            .amplitudes
            .iter()
            .map(|[re, im]| C64::new(*re, *im))
            .collect();
        PureState::new(&r.labels, amps)
    }
}

impl From<PureState> for StateRepr {
    fn from(s: PureState) -> Self {
        StateRepr {
            labels: s.labels,
            amplitudes: s.amps.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl PureState {
    /// Validating constructor; the norm must already be 1 within 1e-12.
    pub fn new<S: AsRef<str>>(labels: &[S], amps: Vec<C64>) -> Result<Self> {
        let labels = check_labels(labels)?;
        let expected = 1usize << labels.len();
        if amps.len() != expected {
            return Err(Error::AmplitudeCount {
                expected,
                got: amps.len(),
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotNormalized(f64::NAN));
        }
        let norm = norm_sqr(&amps);
        if (norm - 1.0).abs() > TOL_ALGEBRAIC {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { labels, amps })
    }

    /// Rescale `amps` to unit norm before validating.
    pub fn normalized<S: AsRef<str>>(labels: &[S], mut amps: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amps).sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        amps.iter_mut().for_each(|z| *z /= norm);
        Self::new(labels, amps)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis<S: AsRef<str>>(labels: &[S], index: usize) -> Result<Self> {
        let labels = check_labels(labels)?;
        let dim = 1usize << labels.len();
        if index >= dim {
            return Err(Error::AmplitudeCount {
                expected: dim,
                got: index + 1,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { labels, amps })
    }

    /// Single qubit `a|0⟩ + b|1⟩`.
    pub fn qubit(label: &str, a: C64, b: C64) -> Result<Self> {
        Self::new(&[label], vec![a, b])
    }

    pub(crate) fn from_parts(labels: Vec<String>, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << labels.len());
        Self { labels, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        position_of(&self.labels, label)
    }

    /// `⟨self|other⟩`. `other` may list the same labels in a different order.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        let other = if other.labels == self.labels {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.reorder(&self.labels)?)
        };
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(u, v)| u.conj() * v)
            .sum())
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Equality modulo global phase: `|⟨u|v⟩| > 1 - 1e-10`.
    pub fn equals_up_to_phase(&self, other: &PureState) -> Result<bool> {
        Ok(self.overlap(other)? > 1.0 - TOL_CIRCUIT)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if let Some(l) = self.labels.iter().find(|l| other.labels.contains(l)) {
            return Err(Error::LabelCollision(l.clone()));
        }
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        let labels = check_labels(&labels)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|u| other.amps.iter().map(move |v| u * v))
            .collect();
        Ok(Self { labels, amps })
    }

    pub fn apply(&self, gate: &GateOp) -> Result<PureState> {
        let positions = gate
            .targets()
            .iter()
            .map(|t| self.position(t))
            .collect::<Result<Vec<_>>>()?;
        let amps = apply_local(&self.amps, self.n_qubits(), &positions, gate.matrix());
        Ok(Self {
            labels: self.labels.clone(),
            amps,
        })
    }

    pub fn apply_all<'a, I>(&self, gates: I) -> Result<PureState>
    where
        I: IntoIterator<Item = &'a GateOp>,
    {
        gates.into_iter().try_fold(self.clone(), |s, g| s.apply(g))
    }

    /// Same amplitudes, new names.
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<PureState> {
        let labels = check_labels(labels)?;
        if labels.len() != self.labels.len() {
            return Err(Error::DimensionMismatch(labels.len(), self.labels.len()));
        }
        Ok(Self {
            labels,
            amps: self.amps.clone(),
        })
    }

    /// Permute qubits so that they appear in `order`.
    pub fn reorder<S: AsRef<str>>(&self, order: &[S]) -> Result<PureState> {
        let order = check_labels(order)?;
        if order.len() != self.labels.len() {
            return Err(Error::DimensionMismatch(order.len(), self.labels.len()));
        }
        let n = self.n_qubits();
        // src[q] = position in self of the qubit placed at q in the new order
        let src = order
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let mut amps = vec![C64::new(0.0, 0.0); self.dim()];
        for (new_idx, slot) in amps.iter_mut().enumerate() {
            let old_idx = (0..n)
                .filter(|&q| new_idx & qubit_mask(n, q) != 0)
                .fold(0, |acc, q| acc | qubit_mask(n, src[q]));
            *slot = self.amps[old_idx];
        }
        Ok(Self {
            labels: order,
            amps,
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn tensor(s1: &PureState, s2: &PureState) -> Result<PureState> {
    s1.tensor(s2)
}

pub fn apply_unitary(state: &PureState, gate: &GateOp) -> Result<PureState> {
    state.apply(gate)
}

pub(crate) fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{c, gates, r, singlet_on};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            PureState::new(&["x"], vec![r(1.0), r(1.0)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            PureState::new(&["x", "x"], vec![r(1.0), r(0.0), r(0.0), r(0.0)]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            PureState::new(&["x"], vec![r(1.0)]),
            Err(Error::AmplitudeCount { .. })
        ));
        let six = ["a", "b", "c", "d", "e", "f"];
        assert!(matches!(
            PureState::basis(&six, 0),
            Err(Error::QubitCount(6))
        ));
    }

    #[test]
    fn identity_gate_leaves_state() {
        let s = PureState::qubit("q", c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let out = s.apply(&gates::identity("q")).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn hadamard_on_zero() {
        let s = PureState::basis(&["q"], 0).unwrap();
        let out = s.apply(&gates::hadamard("q")).unwrap();
        assert!(close(out.amplitude(0), r(FRAC_1_SQRT_2)));
        assert!(close(out.amplitude(1), r(FRAC_1_SQRT_2)));
    }

    #[test]
    fn cnot_truth_table() {
        let s = PureState::basis(&["q1", "q2"], 0b10).unwrap();
        let out = s.apply(&gates::cnot("q1", "q2")).unwrap();
        assert!(close(out.amplitude(0b11), r(1.0)));
        // control on the right-hand qubit
        let s = PureState::basis(&["q1", "q2"], 0b01).unwrap();
        let out = s.apply(&gates::cnot("q2", "q1")).unwrap();
        assert!(close(out.amplitude(0b11), r(1.0)));
    }

    #[test]
    fn unknown_label_is_rejected() {
        let s = PureState::basis(&["q"], 0).unwrap();
        assert_eq!(
            s.apply(&gates::hadamard("z")).unwrap_err(),
            Error::UnknownLabel("z".into())
        );
    }

    #[test]
    fn tensor_products() {
        let z = PureState::basis(&["x"], 0).unwrap();
        let z2 = PureState::basis(&["y"], 0).unwrap();
        let zz = z.tensor(&z2).unwrap();
        assert!(close(zz.amplitude(0), r(1.0)));

        let plus = z.apply(&gates::hadamard("x")).unwrap();
        let one = PureState::basis(&["y"], 1).unwrap();
        let p1 = plus.tensor(&one).unwrap();
        assert!(close(p1.amplitude(0b01), r(FRAC_1_SQRT_2)));
        assert!(close(p1.amplitude(0b11), r(FRAC_1_SQRT_2)));
        assert!(close(p1.amplitude(0b00), r(0.0)));

        assert!(matches!(z.tensor(&z), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn input_times_singlet_layout() {
        // |1>_A ... a=1, b=0 means |0>_A
        let psi = PureState::qubit("A", r(1.0), r(0.0)).unwrap();
        let s = psi.tensor(&singlet_on("a", "B")).unwrap();
        assert_eq!(s.labels(), ["A", "a", "B"]);
        assert!(close(s.amplitude(0b001), r(FRAC_1_SQRT_2)));
        assert!(close(s.amplitude(0b010), r(-FRAC_1_SQRT_2)));
        let others: f64 = [0, 3, 4, 5, 6, 7]
            .iter()
            .map(|&i| s.amplitude(i).norm())
            .sum();
        assert!(others < 1e-15);
    }

    #[test]
    fn reorder_round_trip() {
        let psi = PureState::qubit("A", c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let s = psi.tensor(&singlet_on("a", "B")).unwrap();
        let t = s.reorder(&["B", "A", "a"]).unwrap();
        assert_eq!(t.labels(), ["B", "A", "a"]);
        // |B A a> = |1 0 0> corresponds to |A a B> = |0 0 1>
        assert!(close(t.amplitude(0b100), s.amplitude(0b001)));
        assert!((s.inner(&t).unwrap() - r(1.0)).norm() < 1e-14);
        assert_eq!(t.reorder(&["A", "a", "B"]).unwrap(), s);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = PureState::qubit("q", c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let j = s.to_json().unwrap();
        assert!(j.contains("\"labels\":[\"q\"]"));
        assert_eq!(PureState::from_json(&j).unwrap(), s);
        let bad = r#"{"labels":["q"],"amplitudes":[[1,0],[1,0]]}"#;
        assert!(PureState::from_json(bad).is_err());
    }

    #[test]
    fn phase_equality() {
        let s = PureState::qubit("q", c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let t = PureState::qubit("q", c(0.0, 0.6), c(-0.8, 0.0)).unwrap();
        assert!(s.equals_up_to_phase(&t).unwrap());
        let u = PureState::qubit("q", c(0.8, 0.0), c(0.0, 0.6)).unwrap();
        assert!(!s.equals_up_to_phase(&u).unwrap());
    }
}
