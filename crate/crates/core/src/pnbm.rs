//! Partial non-demolition Bell measurement: Bell-diagonal Kraus operators,
//! the gate network that realizes them with two ancillas, and the outcome
//! corrections used in teleportation.
//!
//! Outcome `ij` is the readout of (`anc1`, `anc2`). Outcomes `00, 01, 10, 11`
//! correspond to Kraus indices `1..=4` and to the Bell states `Φ₁..Φ₄`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ancilla::{sigma_state_on, AncillaParams};
use crate::labels::{ANC1, ANC2, INPUT, PAIR};
use crate::qsim::{
    self, apply_local, bell_state, gates, measure_computational, CMatrix, DensityMatrix, GateOp,
    PureState, RandomSource, C64, TOL_ALGEBRAIC,
};
use crate::{Error, Result};

/// Smallest probability an outcome may have and still be forced.
const FORCE_FLOOR: f64 = 1e-14;

/// Two-bit measurement record `ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeLabel {
    i: u8,
    j: u8,
}

impl OutcomeLabel {
    pub fn new(i: u8, j: u8) -> Result<Self> {
        if i > 1 || j > 1 {
            return Err(Error::InvalidOutcome(format!("{i}{j}")));
        }
        Ok(Self { i, j })
    }

    /// `1 → 00, 2 → 01, 3 → 10, 4 → 11`.
    pub fn from_kraus_index(k: usize) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::InvalidOutcome(format!("Kraus index {k}")));
        }
        let b = (k - 1) as u8;
        Ok(Self {
            i: b >> 1,
            j: b & 1,
        })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        match bits {
            [i, j] => Self::new(*i, *j),
            _ => Err(Error::InvalidOutcome(format!("{bits:?}"))),
        }
    }

    pub fn kraus_index(self) -> usize {
        (self.i as usize) * 2 + self.j as usize + 1
    }

    /// Zero-based slot, `kraus_index() - 1`.
    pub fn slot(self) -> usize {
        self.kraus_index() - 1
    }

    pub fn bits(self) -> [u8; 2] {
        [self.i, self.j]
    }

    pub fn all() -> [OutcomeLabel; 4] {
        [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(i, j)| OutcomeLabel { i, j })
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.i, self.j)
    }
}

impl FromStr for OutcomeLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidOutcome(s.to_string())),
            })
            .collect::<Result<_>>()?;
        Self::from_bits(&bits).map_err(|_| Error::InvalidOutcome(s.to_string()))
    }
}

impl Serialize for OutcomeLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OutcomeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Columns are `Φ₁..Φ₄` in the computational basis.
pub fn bell_basis_matrix() -> CMatrix {
    let mut b = CMatrix::zeros(4, 4);
    for k in 0..4 {
        let s = bell_state(k + 1).expect("valid index");
        for (row, a) in s.amplitudes().iter().enumerate() {
            b[(row, k)] = *a;
        }
    }
    b
}

/// Which basis a serialized Kraus set is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrausBasis {
    Computational,
    Bell,
}

/// Four Bell-diagonal operators `A_k`, kept both as their Bell-basis
/// diagonals and as computational-basis matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    params: Option<AncillaParams>,
    bell_diagonals: [[f64; 4]; 4],
    operators: [CMatrix; 4],
    bell_basis: CMatrix,
}

/// `A_k = diag(β/2, …, α + β/2, …, β/2)` in the Bell basis, with the large
/// entry at slot `k`.
pub fn kraus_set(params: AncillaParams) -> KrausSet {
    let (a, b) = (params.alpha(), params.beta());
    let diagonals = std::array::from_fn(|k| {
        std::array::from_fn(|m| if m == k { a + b / 2.0 } else { b / 2.0 })
    });
    let mut set = KrausSet::from_bell_diagonals(diagonals);
    set.params = Some(params);
    set
}

impl KrausSet {
    /// Build from arbitrary Bell-basis diagonals; completeness is not
    /// checked (see [`completeness_residual`]).
    pub fn from_bell_diagonals(diagonals: [[f64; 4]; 4]) -> Self {
        let bell_basis = bell_basis_matrix();
        let operators = std::array::from_fn(|k| {
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                4,
                diagonals[k].iter().map(|x| C64::new(*x, 0.0)),
            ));
            &bell_basis * d * bell_basis.adjoint()
        });
        Self {
            params: None,
            bell_diagonals: diagonals,
            operators,
            bell_basis,
        }
    }

    pub fn params(&self) -> Option<AncillaParams> {
        self.params
    }

    /// Computational-basis operator for `outcome`.
    pub fn operator(&self, outcome: OutcomeLabel) -> &CMatrix {
        &self.operators[outcome.slot()]
    }

    pub fn operators(&self) -> &[CMatrix; 4] {
        &self.operators
    }

    /// Bell-basis diagonal of `A_k` for `outcome`.
    pub fn bell_diagonal(&self, outcome: OutcomeLabel) -> [f64; 4] {
        self.bell_diagonals[outcome.slot()]
    }

    /// Operator in the Bell basis (diagonal by construction).
    pub fn bell_operator(&self, outcome: OutcomeLabel) -> CMatrix {
        self.bell_basis.adjoint() * self.operator(outcome) * &self.bell_basis
    }

    pub fn bell_basis(&self) -> &CMatrix {
        &self.bell_basis
    }

    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(self)
    }

    pub fn to_json(&self, basis: KrausBasis) -> Result<String> {
        let operators = OutcomeLabel::all()
            .into_iter()
            .map(|o| {
                let m = match basis {
                    KrausBasis::Computational => self.operator(o).clone(),
                    KrausBasis::Bell => self.bell_operator(o),
                };
                KrausEntry {
                    outcome: o,
                    matrix: (0..4)
                        .map(|i| (0..4).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                        .collect(),
                }
            })
            .collect();
        Ok(serde_json::to_string(&KrausRepr {
            basis,
            params: self.params,
            operators,
        })?)
    }

    /// Parse a set written by [`KrausSet::to_json`]. The operators must be
    /// Bell-diagonal with real entries.
    pub fn from_json(s: &str) -> Result<Self> {
        let repr: KrausRepr = serde_json::from_str(s)?;
        let b = bell_basis_matrix();
        let mut diagonals = [[0.0; 4]; 4];
        let mut seen = [false; 4];
        for e in &repr.operators {
            if e.matrix.len() != 4 || e.matrix.iter().any(|r| r.len() != 4) {
                return Err(Error::Serde("Kraus operators must be 4x4".into()));
            }
            let m = CMatrix::from_fn(4, 4, |i, j| C64::new(e.matrix[i][j][0], e.matrix[i][j][1]));
            let bell = match repr.basis {
                KrausBasis::Computational => b.adjoint() * m * &b,
                KrausBasis::Bell => m,
            };
            let off = (0..4)
                .flat_map(|i| (0..4).filter(move |j| *j != i).map(move |j| (i, j)))
                .map(|ij| bell[ij].norm())
                .fold(0.0, f64::max);
            let imag = (0..4).map(|i| bell[(i, i)].im.abs()).fold(0.0, f64::max);
            if off > TOL_ALGEBRAIC || imag > TOL_ALGEBRAIC {
                return Err(Error::Serde(format!(
                    "operator {} is not real Bell-diagonal",
                    e.outcome
                )));
            }
            diagonals[e.outcome.slot()] = std::array::from_fn(|i| bell[(i, i)].re);
            seen[e.outcome.slot()] = true;
        }
        if seen != [true; 4] {
            return Err(Error::Serde("need one operator per outcome".into()));
        }
        let mut set = KrausSet::from_bell_diagonals(diagonals);
        set.params = repr.params;
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
struct KrausRepr {
    basis: KrausBasis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<AncillaParams>,
    operators: Vec<KrausEntry>,
}

#[derive(Serialize, Deserialize)]
struct KrausEntry {
    outcome: OutcomeLabel,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Max-norm of `Σ A_k† A_k − I`.
pub fn completeness_residual(kraus: &KrausSet) -> f64 {
    let sum = kraus
        .operators
        .iter()
        .fold(CMatrix::zeros(4, 4), |acc, a| acc + a.adjoint() * a);
    qsim::max_abs_diff(&sum, &CMatrix::identity(4, 4))
}

/// One application of the measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOutcome<S> {
    pub outcome: OutcomeLabel,
    pub probability: f64,
    pub post_state: S,
}

fn target_positions(labels: &[String], targets: (&str, &str)) -> Result<[usize; 2]> {
    let p0 = qsim_position(labels, targets.0)?;
    let p1 = qsim_position(labels, targets.1)?;
    if p0 == p1 {
        return Err(Error::DuplicateLabel(targets.0.to_string()));
    }
    Ok([p0, p1])
}

fn qsim_position(labels: &[String], l: &str) -> Result<usize> {
    labels
        .iter()
        .position(|x| x == l)
        .ok_or_else(|| Error::UnknownLabel(l.to_string()))
}

fn choose_outcome(
    probs: &[f64; 4],
    forced: Option<OutcomeLabel>,
    rng: &mut RandomSource,
) -> Result<OutcomeLabel> {
    if let Some(o) = forced {
        let p = probs[o.slot()];
        if p <= FORCE_FLOOR {
            return Err(Error::ImpossibleOutcome {
                outcome: o.to_string(),
                probability: p,
            });
        }
        return Ok(o);
    }
    let u = rng.uniform() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = OutcomeLabel::all()[0];
    for o in OutcomeLabel::all() {
        let p = probs[o.slot()];
        if p <= 0.0 {
            continue;
        }
        last = o;
        acc += p;
        if u < acc {
            return Ok(o);
        }
    }
    Ok(last)
}

/// Exact outcome probabilities `p_k = ⟨A_k† A_k⟩` for a pure state.
pub fn pnbm_probabilities(
    state: &PureState,
    targets: (&str, &str),
    kraus: &KrausSet,
) -> Result<[f64; 4]> {
    let pos = target_positions(state.labels(), targets)?;
    let n = state.n_qubits();
    let mut probs = [0.0; 4];
    for (k, a) in kraus.operators.iter().enumerate() {
        let v = apply_local(state.amplitudes(), n, &pos, a);
        probs[k] = v.iter().map(|z| z.norm_sqr()).sum();
    }
    Ok(probs)
}

/// Apply the measurement to qubits `targets` (the pair `A`, `a` in the
/// protocol) of a pure state; other qubits are untouched.
pub fn apply_pnbm_kraus(
    state: &PureState,
    targets: (&str, &str),
    kraus: &KrausSet,
    forced: Option<OutcomeLabel>,
    rng: &mut RandomSource,
) -> Result<KrausOutcome<PureState>> {
    let pos = target_positions(state.labels(), targets)?;
    let probs = pnbm_probabilities(state, targets, kraus)?;
    let outcome = choose_outcome(&probs, forced, rng)?;
    let probability = probs[outcome.slot()];
    let norm = probability.sqrt();
    let amps = apply_local(
        state.amplitudes(),
        state.n_qubits(),
        &pos,
        kraus.operator(outcome),
    )
    .into_iter()
    .map(|z| z / norm)
    .collect();
    Ok(KrausOutcome {
        outcome,
        probability,
        post_state: PureState::new(state.labels(), amps)?,
    })
}

/// Density-matrix version of [`apply_pnbm_kraus`]: `A ρ A† / p`.
pub fn apply_pnbm_kraus_density(
    rho: &DensityMatrix,
    targets: (&str, &str),
    kraus: &KrausSet,
    forced: Option<OutcomeLabel>,
    rng: &mut RandomSource,
) -> Result<KrausOutcome<DensityMatrix>> {
    let pos = target_positions(rho.labels(), targets)?;
    let n = rho.n_qubits();
    let d = rho.dim();
    let sandwich = |a: &CMatrix| {
        // columns of Aρ, then A applied to the columns of (Aρ)†
        let mut left = CMatrix::zeros(d, d);
        for j in 0..d {
            let col: Vec<C64> = rho.matrix().column(j).iter().cloned().collect();
            left.set_column(
                j,
                &nalgebra::DVector::from_vec(apply_local(&col, n, &pos, a)),
            );
        }
        let left_h = left.adjoint();
        let mut out = CMatrix::zeros(d, d);
        for j in 0..d {
            let col: Vec<C64> = left_h.column(j).iter().cloned().collect();
            out.set_column(
                j,
                &nalgebra::DVector::from_vec(apply_local(&col, n, &pos, a)),
            );
        }
        out.adjoint()
    };
    let branches: Vec<CMatrix> = kraus.operators.iter().map(sandwich).collect();
    let probs: [f64; 4] = std::array::from_fn(|k| branches[k].trace().re);
    let outcome = choose_outcome(&probs, forced, rng)?;
    let probability = probs[outcome.slot()];
    let m = &branches[outcome.slot()] / C64::new(probability, 0.0);
    Ok(KrausOutcome {
        outcome,
        probability,
        post_state: DensityMatrix::new(rho.labels(), m)?,
    })
}

/// Map from ancilla readout (`anc1 anc2` as a two-bit number) to the outcome
/// label of the Kraus table. For the network built here the map is the
/// identity; it is kept explicit and checked in tests.
pub const READOUT_TO_OUTCOME: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Gate-level realization on `first`, `second`, `anc1`, `anc2`.
///
/// `anc1` picks up the Z-parity of the pair through two CNOTs, `anc2` the
/// X-parity through two CNOTs sandwiched by Hadamards on the pair. The
/// ancillas start in [`sigma_state_on`].
#[derive(Debug, Clone)]
pub struct PnbmNetwork {
    params: AncillaParams,
    first: String,
    second: String,
    ancilla: PureState,
    gates: Vec<GateOp>,
}

pub fn pnbm_network(params: AncillaParams) -> PnbmNetwork {
    pnbm_network_on(params, INPUT, PAIR)
}

pub fn pnbm_network_on(params: AncillaParams, first: &str, second: &str) -> PnbmNetwork {
    let gates = vec![
        gates::cnot(first, ANC1),
        gates::cnot(second, ANC1),
        gates::hadamard(first),
        gates::hadamard(second),
        gates::cnot(first, ANC2),
        gates::cnot(second, ANC2),
        gates::hadamard(first),
        gates::hadamard(second),
    ];
    PnbmNetwork {
        params,
        first: first.to_string(),
        second: second.to_string(),
        ancilla: sigma_state_on(params, ANC1, ANC2),
        gates,
    }
}

impl PnbmNetwork {
    pub fn params(&self) -> AncillaParams {
        self.params
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn ancilla(&self) -> &PureState {
        &self.ancilla
    }

    pub fn readout(&self) -> [&'static str; 2] {
        [ANC1, ANC2]
    }

    pub fn targets(&self) -> (&str, &str) {
        (&self.first, &self.second)
    }

    /// Append the ancillas to `state`, run the gates and read out the
    /// ancillas, which are removed from the returned state.
    pub fn run(
        &self,
        state: &PureState,
        forced: Option<OutcomeLabel>,
        rng: &mut RandomSource,
    ) -> Result<KrausOutcome<PureState>> {
        let full = state.tensor(&self.ancilla)?.apply_all(&self.gates)?;
        let forced_bits = forced.map(outcome_to_readout);
        let m = measure_computational(
            &full,
            &[ANC1, ANC2],
            forced_bits.as_ref().map(|b| &b[..]),
            rng,
        )?;
        let collapsed = m
            .collapsed
            .ok_or_else(|| Error::Wiring("readout left no qubits".into()))?;
        Ok(KrausOutcome {
            outcome: readout_to_outcome(&m.bits)?,
            probability: m.probability,
            post_state: collapsed,
        })
    }

    /// Operators induced on the pair, indexed by outcome slot, computed by
    /// running the network on each computational basis input.
    pub fn induced_kraus(&self) -> Result<[CMatrix; 4]> {
        let mut ops: [CMatrix; 4] = std::array::from_fn(|_| CMatrix::zeros(4, 4));
        for col in 0..4 {
            let input = PureState::basis(&[self.first.as_str(), self.second.as_str()], col)?;
            let full = input.tensor(&self.ancilla)?.apply_all(&self.gates)?;
            // layout: first, second, anc1, anc2
            for (raw, &(i, j)) in READOUT_TO_OUTCOME.iter().enumerate() {
                let slot = OutcomeLabel::new(i, j)?.slot();
                for row in 0..4 {
                    ops[slot][(row, col)] = full.amplitude(row << 2 | raw);
                }
            }
        }
        Ok(ops)
    }
}

fn readout_to_outcome(bits: &[u8]) -> Result<OutcomeLabel> {
    let raw = OutcomeLabel::from_bits(bits)?.slot();
    let (i, j) = READOUT_TO_OUTCOME[raw];
    OutcomeLabel::new(i, j)
}

fn outcome_to_readout(o: OutcomeLabel) -> [u8; 2] {
    let raw = READOUT_TO_OUTCOME
        .iter()
        .position(|&(i, j)| o.bits() == [i, j])
        .expect("table is a bijection");
    [(raw >> 1) as u8, (raw & 1) as u8]
}

/// Correction pair `(U^(a), U^(B))` applied after outcome `ij`:
/// `00 → (σ₂, σ₂)`, `01 → (σ₁, σ₁)`, `10 → (σ₃, σ₃)`, `11 → (−I, I)`.
pub fn correction_unitaries(outcome: OutcomeLabel) -> (CMatrix, CMatrix) {
    match outcome.bits() {
        [0, 0] => (gates::sigma2(), gates::sigma2()),
        [0, 1] => (gates::sigma1(), gates::sigma1()),
        [1, 0] => (gates::sigma3(), gates::sigma3()),
        _ => (-gates::identity2(), gates::identity2()),
    }
}

/// The full outcome → correction map.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTable {
    entries: [(CMatrix, CMatrix); 4],
}

impl CorrectionTable {
    pub fn standard() -> Self {
        Self {
            entries: OutcomeLabel::all().map(correction_unitaries),
        }
    }

    pub fn get(&self, outcome: OutcomeLabel) -> &(CMatrix, CMatrix) {
        &self.entries[outcome.slot()]
    }

    /// Worst unitarity or self-inverse residual over all entries.
    pub fn residual(&self) -> f64 {
        let id = CMatrix::identity(2, 2);
        self.entries
            .iter()
            .flat_map(|(a, b)| [a, b])
            .map(|u| qsim::unitarity_residual(u).max(qsim::max_abs_diff(&(u * u), &id)))
            .fold(0.0, f64::max)
    }

    /// Gates applying the correction for `outcome` to qubits `pair` and `bob`.
    pub fn gates(&self, outcome: OutcomeLabel, pair: &str, bob: &str) -> Result<[GateOp; 2]> {
        let (ua, ub) = self.get(outcome);
        Ok([
            GateOp::new(&format!("U{outcome}(a)"), ua.clone(), &[pair])?,
            GateOp::new(&format!("U{outcome}(B)"), ub.clone(), &[bob])?,
        ])
    }
}
