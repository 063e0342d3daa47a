//! Partial quantum teleportation: the input qubit `A` is split between
//! Alice's `A` and Bob's `B` through the partial Bell measurement on `A, a`,
//! with the singlet `a, B` as the shared resource.

use serde::{Deserialize, Serialize};

use crate::ancilla::AncillaParams;
use crate::labels::{BOB, INPUT, PAIR};
use crate::pnbm::{pnbm_network, CorrectionTable, OutcomeLabel};
use crate::qsim::{
    fidelity, singlet_on, DensityMatrix, PureState, RandomSource, C64, TOL_ALGEBRAIC,
};
use crate::{Error, Result};

/// Unknown input `a|0⟩ + b|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InputQubit {
    a: C64,
    b: C64,
}

impl InputQubit {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > TOL_ALGEBRAIC {
            return Err(Error::InputQubit(format!("|a|²+|b|² = {norm}")));
        }
        Ok(Self { a, b })
    }

    /// Rescale to unit norm. The flag reports whether rescaling was needed.
    pub fn normalized(a: C64, b: C64) -> Result<(Self, bool)> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InputQubit("zero or non-finite amplitudes".into()));
        }
        let changed = (norm - 1.0).abs() > TOL_ALGEBRAIC;
        Ok((
            Self {
                a: a / norm,
                b: b / norm,
            },
            changed,
        ))
    }

    pub fn from_state(state: &PureState) -> Result<Self> {
        if state.n_qubits() != 1 {
            return Err(Error::InputQubit(format!("{} qubits", state.n_qubits())));
        }
        Self::new(state.amplitude(0), state.amplitude(1))
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn b(&self) -> C64 {
        self.b
    }

    /// `|ψ⟩` on qubit `label`.
    pub fn state(&self, label: &str) -> PureState {
        PureState::qubit(label, self.a, self.b).expect("validated input")
    }

    /// `|ψ⊥⟩ = b*|0⟩ − a*|1⟩`.
    pub fn orthogonal(&self, label: &str) -> PureState {
        PureState::qubit(label, self.b.conj(), -self.a.conj()).expect("validated input")
    }
}

/// Single-qubit output fidelities. `pair_perp` is the fidelity of qubit `a`
/// with the orthogonal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalFidelities {
    #[serde(rename = "F_A")]
    pub input: f64,
    #[serde(rename = "F_B")]
    pub bob: f64,
    #[serde(rename = "F_a")]
    pub pair: f64,
    #[serde(rename = "F_a_perp")]
    pub pair_perp: f64,
}

impl MarginalFidelities {
    pub fn max_abs_diff(&self, other: &MarginalFidelities) -> f64 {
        [
            self.input - other.input,
            self.bob - other.bob,
            self.pair - other.pair,
            self.pair_perp - other.pair_perp,
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max)
    }
}

/// `F_A = 1 − α²/2`, `F_B = 1 − β²/2`, `F_a = (α² + β²)/2`.
pub fn closed_form_fidelities(params: AncillaParams) -> MarginalFidelities {
    let (a2, b2) = (params.alpha().powi(2), params.beta().powi(2));
    let pair = (a2 + b2) / 2.0;
    MarginalFidelities {
        input: 1.0 - a2 / 2.0,
        bob: 1.0 - b2 / 2.0,
        pair,
        pair_perp: 1.0 - pair,
    }
}

/// One protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeleportOutcomeRecord {
    pub params: AncillaParams,
    pub outcome: OutcomeLabel,
    pub probability: f64,
    /// Post-correction state on `A, a, B`.
    pub final_state: PureState,
    pub rho_input: DensityMatrix,
    pub rho_pair: DensityMatrix,
    pub rho_bob: DensityMatrix,
    /// Fidelities from the simulated marginals.
    pub fidelities: MarginalFidelities,
    pub closed_form: MarginalFidelities,
    /// Largest `|simulated − closed form|`.
    pub max_delta: f64,
}

impl TeleportOutcomeRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `α|Ψ₋⟩_Aa|ψ⟩_B − β|ψ⟩_A|Ψ₋⟩_aB`, built directly.
pub fn ideal_output_state(input: &InputQubit, params: AncillaParams) -> Result<PureState> {
    let left = singlet_on(INPUT, PAIR).tensor(&input.state(BOB))?;
    let right = input.state(INPUT).tensor(&singlet_on(PAIR, BOB))?;
    let (a, b) = (params.alpha(), params.beta());
    let amps = left
        .amplitudes()
        .iter()
        .zip(right.amplitudes())
        .map(|(l, r)| l * a - r * b)
        .collect();
    PureState::new(&[INPUT, PAIR, BOB], amps)
}

/// Run the protocol: `|ψ⟩_A|Ψ₋⟩_aB|Σ⟩` through the measurement network,
/// ancilla readout, then the outcome's corrections on `a` and `B`.
pub fn run_pqt(
    input: &InputQubit,
    params: AncillaParams,
    forced: Option<OutcomeLabel>,
    rng: &mut RandomSource,
) -> Result<TeleportOutcomeRecord> {
    let initial = input.state(INPUT).tensor(&singlet_on(PAIR, BOB))?;
    let measured = pnbm_network(params).run(&initial, forced, rng)?;
    let corrections = CorrectionTable::standard().gates(measured.outcome, PAIR, BOB)?;
    let final_state = measured.post_state.apply_all(&corrections)?;

    let rho_input = final_state.partial_trace(&[INPUT])?;
    let rho_pair = final_state.partial_trace(&[PAIR])?;
    let rho_bob = final_state.partial_trace(&[BOB])?;
    let mut record = TeleportOutcomeRecord {
        params,
        outcome: measured.outcome,
        probability: measured.probability,
        final_state,
        rho_input,
        rho_pair,
        rho_bob,
        fidelities: MarginalFidelities {
            input: 0.0,
            bob: 0.0,
            pair: 0.0,
            pair_perp: 0.0,
        },
        closed_form: closed_form_fidelities(params),
        max_delta: 0.0,
    };
    record.fidelities = marginal_fidelities(&record, input)?;
    record.max_delta = record.fidelities.max_abs_diff(&record.closed_form);
    Ok(record)
}

/// Fidelities of the record's marginals with `|ψ⟩` (and `|ψ⊥⟩` for `a`).
pub fn marginal_fidelities(
    record: &TeleportOutcomeRecord,
    input: &InputQubit,
) -> Result<MarginalFidelities> {
    let psi = input.state("q");
    let perp = input.orthogonal("q");
    Ok(MarginalFidelities {
        input: fidelity(&psi, &record.rho_input)?,
        bob: fidelity(&psi, &record.rho_bob)?,
        pair: fidelity(&psi, &record.rho_pair)?,
        pair_perp: fidelity(&perp, &record.rho_pair)?,
    })
}

/// `|⟨ψ|ρ|ψ⊥⟩|`: coherence of a marginal between the input and its
/// orthogonal state. Zero when `ρ` is a mixture of the two.
pub fn coherence(rho: &DensityMatrix, input: &InputQubit) -> Result<f64> {
    let psi = nalgebra::DVector::from_column_slice(input.state("q").amplitudes());
    let perp = nalgebra::DVector::from_column_slice(input.orthogonal("q").amplitudes());
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(rho.dim(), 2));
    }
    Ok((psi.adjoint() * rho.matrix() * perp)[(0, 0)].norm())
}

/// Residual of the asymmetric cloning bound,
/// `(1−F_A)(1−F_B) − [1/2 − (1−F_A) − (1−F_B)]²`. Non-negative when the
/// bound holds, zero on the optimal curve.
pub fn cloning_residual(f_a: f64, f_b: f64) -> f64 {
    let (da, db) = (1.0 - f_a, 1.0 - f_b);
    da * db - (0.5 - da - db).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BoundKind {
    /// Measure-and-prepare splitting (no shared entanglement).
    Pct,
    /// Splitting through shared entanglement.
    Pqt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub f_a: f64,
    pub f_b: f64,
}

/// Optimal `(F_A, F_B)` pairs, ordered by increasing `F_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub points: Vec<BoundPoint>,
}

/// Classical bound `F_A = 1/3 + (√(F_B − 1/3) + √(2/3 − F_B))²` for
/// `F_B ∈ [1/3, 2/3]`.
pub fn pct_f_a(f_b: f64) -> f64 {
    let s = (f_b - 1.0 / 3.0).max(0.0).sqrt() + (2.0 / 3.0 - f_b).max(0.0).sqrt();
    1.0 / 3.0 + s * s
}

/// Largest classical `F_B` compatible with `F_A ∈ [2/3, 1]` (upper branch of
/// the bound).
pub fn pct_max_f_b(f_a: f64) -> Option<f64> {
    if !(2.0 / 3.0 - 1e-15..=1.0 + 1e-15).contains(&f_a) {
        return None;
    }
    // F_B − 1/3 = sin²θ / 3 with sin(θ + π/4) = √(3/2 (F_A − 1/3))
    let s = ((f_a - 1.0 / 3.0) * 1.5).sqrt().min(1.0);
    let theta = 3.0 * std::f64::consts::FRAC_PI_4 - s.asin();
    Some(1.0 / 3.0 + theta.sin().powi(2) / 3.0)
}

/// `F_B` on the entanglement-assisted curve for `F_A ∈ [1/2, 1]`.
pub fn pqt_f_b(f_a: f64) -> Option<f64> {
    if !(0.5 - 1e-15..=1.0 + 1e-15).contains(&f_a) {
        return None;
    }
    let alpha = (2.0 * (1.0 - f_a)).max(0.0).sqrt().min(1.0);
    let p = AncillaParams::from_alpha(alpha).ok()?;
    Some(1.0 - p.beta().powi(2) / 2.0)
}

pub fn pct_bound_curve(n_points: usize) -> Result<BoundCurve> {
    if n_points < 2 {
        return Err(Error::TooFew {
            what: "curve points",
            min: 2,
            got: n_points,
        });
    }
    let points = (0..n_points)
        .map(|i| {
            let f_b = 1.0 / 3.0 + (i as f64 / (n_points - 1) as f64) / 3.0;
            BoundPoint {
                f_a: pct_f_a(f_b),
                f_b,
            }
        })
        .collect();
    Ok(BoundCurve {
        kind: BoundKind::Pct,
        points,
    })
}

/// Parameterized by `α ∈ [0, 1]`; `α = 0` gives `(1, 1/2)`, `α = 1` gives
/// `(1/2, 1)`.
pub fn pqt_bound_curve(n_points: usize) -> Result<BoundCurve> {
    if n_points < 2 {
        return Err(Error::TooFew {
            what: "curve points",
            min: 2,
            got: n_points,
        });
    }
    let points = (0..n_points)
        .map(|i| {
            let p = AncillaParams::from_alpha(i as f64 / (n_points - 1) as f64)?;
            let f = closed_form_fidelities(p);
            Ok(BoundPoint {
                f_a: f.input,
                f_b: f.bob,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundCurve {
        kind: BoundKind::Pqt,
        points,
    })
}

/// Smallest `pqt_f_b(F_A) − pct_max_f_b(F_A)` over `n` points of the shared
/// range `F_A ∈ [2/3, 1]`, with the `F_A` where it occurs.
pub fn pqt_dominance_margin(n: usize) -> (f64, f64) {
    (0..n.max(2))
        .map(|i| {
            let f_a = 2.0 / 3.0 + (i as f64 / (n.max(2) - 1) as f64) / 3.0;
            let gap = pqt_f_b(f_a).unwrap() - pct_max_f_b(f_a).unwrap();
            (gap, f_a)
        })
        .fold(
            (f64::INFINITY, f64::NAN),
            |acc, x| if x.0 < acc.0 { x } else { acc },
        )
}
