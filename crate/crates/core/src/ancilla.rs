//! The two-qubit ancilla resource `α|00⟩ + β|++⟩` that sets how strongly the
//! measurement discriminates the Bell states, and a one-CNOT circuit that
//! prepares it.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::labels::{ANC1, ANC2};
use crate::qsim::{gates, GateOp, PureState, C64, TOL_ALGEBRAIC, TOL_CIRCUIT};
use crate::{Error, Result};

/// Ancilla amplitudes with `α, β ≥ 0` and `α² + αβ + β² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AncillaParams {
    alpha: f64,
    beta: f64,
}

impl AncillaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let ok = alpha.is_finite()
            && beta.is_finite()
            && alpha >= 0.0
            && beta >= 0.0
            && (alpha * alpha + alpha * beta + beta * beta - 1.0).abs() <= TOL_ALGEBRAIC;
        if !ok {
            return Err(Error::AncillaParams { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    /// Solve the normalization for `β`: `β = (√(4 − 3α²) − α)/2`.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::AlphaRange(alpha));
        }
        let beta = ((4.0 - 3.0 * alpha * alpha).sqrt() - alpha) / 2.0;
        Self::new(alpha, beta.max(0.0))
    }

    /// The balanced point `α = β = 1/√3`.
    pub fn symmetric() -> Self {
        Self::from_alpha(1.0 / 3f64.sqrt()).expect("1/sqrt(3) is in range")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Both amplitudes nonzero (the resource is entangled).
    pub fn is_interior(&self) -> bool {
        self.alpha * self.beta > f64::EPSILON
    }
}

impl<'de> Deserialize<'de> for AncillaParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            alpha: f64,
            beta: f64,
        }
        let raw = Raw::deserialize(d)?;
        AncillaParams::new(raw.alpha, raw.beta).map_err(serde::de::Error::custom)
    }
}

pub fn params_from_alpha(alpha: f64) -> Result<AncillaParams> {
    AncillaParams::from_alpha(alpha)
}

/// `α|00⟩ + β|++⟩` on `anc1, anc2`.
pub fn sigma_state(params: AncillaParams) -> PureState {
    sigma_state_on(params, ANC1, ANC2)
}

pub fn sigma_state_on(params: AncillaParams, first: &str, second: &str) -> PureState {
    let (a, b) = (params.alpha, params.beta);
    // |++> has amplitude 1/2 on every basis state
    let amps = vec![
        C64::new(a + b / 2.0, 0.0),
        C64::new(b / 2.0, 0.0),
        C64::new(b / 2.0, 0.0),
        C64::new(b / 2.0, 0.0),
    ];
    PureState::new(&[first, second], amps).expect("normalization holds for valid params")
}

/// Purity of either ancilla's reduced state, `1 − α²β²/2`.
pub fn ancilla_purity(params: AncillaParams) -> f64 {
    1.0 - (params.alpha * params.beta).powi(2) / 2.0
}

/// The single-qubit matrices of the preparation circuit. `u` and `v` are
/// rotations in the computational basis; `w` is given in the `|±⟩` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepMatrices {
    pub u: Matrix2<f64>,
    pub v: Matrix2<f64>,
    pub w: Matrix2<f64>,
}

impl PrepMatrices {
    /// `W` rotated into the computational basis, `H W H`.
    pub fn w_computational(&self) -> Matrix2<f64> {
        let h = Matrix2::new(1.0, 1.0, 1.0, -1.0) * FRAC_1_SQRT_2;
        h * self.w * h
    }
}

/// Closed-form `U`, `V`, `W`. Undefined (0/0 in `W`) when `αβ = 0`.
pub fn prep_matrices(params: AncillaParams) -> Result<PrepMatrices> {
    if !params.is_interior() {
        return Err(Error::DegenerateEndpoint);
    }
    let (a, b) = (params.alpha, params.beta);
    let t = (a * a + b * b).sqrt();
    let u11 = (a + b + t) / 2.0;
    let u21 = (a + b - t) / 2.0;
    let u = Matrix2::new(u11, -u21, u21, u11);

    let k = (2.0 * (a * a + b * b + a * t)).sqrt();
    let v = Matrix2::new((a + t) / k, -b / k, b / k, (a + t) / k);

    let w11 = SQRT_2 * u11 / k;
    let w12 = b * (t - b) / (SQRT_2 * k * u21);
    let w21 = a * (t + a) / (SQRT_2 * k * u11);
    let w22 = -a * b / (SQRT_2 * k * u21);
    let w = Matrix2::new(w11, w12, w21, w22);
    Ok(PrepMatrices { u, v, w })
}

/// One of the two ancilla qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AncillaQubit {
    #[serde(rename = "anc1")]
    First,
    #[serde(rename = "anc2")]
    Second,
}

impl AncillaQubit {
    pub fn label(self) -> &'static str {
        match self {
            AncillaQubit::First => ANC1,
            AncillaQubit::Second => ANC2,
        }
    }

    fn other(self) -> Self {
        match self {
            AncillaQubit::First => AncillaQubit::Second,
            AncillaQubit::Second => AncillaQubit::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate")]
pub enum PrepGate {
    U {
        qubit: AncillaQubit,
    },
    V {
        qubit: AncillaQubit,
    },
    /// `W` applied in the computational basis as `H W H`.
    W {
        qubit: AncillaQubit,
    },
    H {
        qubit: AncillaQubit,
    },
    #[serde(rename = "CNOT")]
    Cnot {
        control: AncillaQubit,
        target: AncillaQubit,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepStep {
    pub position: usize,
    #[serde(flatten)]
    pub gate: PrepGate,
}

/// Gate placement for preparing the ancilla state from `|00⟩`: one CNOT and
/// the four local gates `U`, `V`, `W`, `H`, each used once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "WiringRepr", into = "WiringRepr")]
pub struct PrepCircuit {
    steps: Vec<PrepStep>,
}

#[derive(Serialize, Deserialize)]
struct WiringRepr {
    steps: Vec<PrepStep>,
}

impl TryFrom<WiringRepr> for PrepCircuit {
    type Error = Error;
    fn try_from(r: WiringRepr) -> Result<Self> {
        PrepCircuit::new(r.steps)
    }
}

impl From<PrepCircuit> for WiringRepr {
    fn from(c: PrepCircuit) -> Self {
        WiringRepr { steps: c.steps }
    }
}

impl PrepCircuit {
    pub fn new(mut steps: Vec<PrepStep>) -> Result<Self> {
        steps.sort_by_key(|s| s.position);
        if steps.windows(2).any(|w| w[0].position == w[1].position) {
            return Err(Error::Wiring("duplicate position".into()));
        }
        let mut counts = [0usize; 5];
        for s in &steps {
            let slot = match s.gate {
                PrepGate::U { .. } => 0,
                PrepGate::V { .. } => 1,
                PrepGate::W { .. } => 2,
                PrepGate::H { .. } => 3,
                PrepGate::Cnot { control, target } => {
                    if control == target {
                        return Err(Error::Wiring("CNOT control equals target".into()));
                    }
                    4
                }
            };
            counts[slot] += 1;
        }
        if counts != [1; 5] {
            return Err(Error::Wiring(format!(
                "need exactly one each of U, V, W, H, CNOT; got {counts:?}"
            )));
        }
        Ok(Self { steps })
    }

    /// The wiring frozen from the first hit of [`search_prep_wirings`]: `U`
    /// on `anc1`, then `CNOT(anc1 → anc2)`, then `V` on `anc2` and `H`
    /// followed by `W` on `anc1`. The mirrored placement (`V` on `anc1`,
    /// `H`, `W` on `anc2`) also validates because the target state is
    /// symmetric under exchange of the ancillas.
    pub fn validated() -> Self {
        use AncillaQubit::{First, Second};
        Self::new(vec![
            PrepStep {
                position: 0,
                gate: PrepGate::U { qubit: First },
            },
            PrepStep {
                position: 1,
                gate: PrepGate::Cnot {
                    control: First,
                    target: Second,
                },
            },
            PrepStep {
                position: 2,
                gate: PrepGate::V { qubit: Second },
            },
            PrepStep {
                position: 3,
                gate: PrepGate::H { qubit: First },
            },
            PrepStep {
                position: 4,
                gate: PrepGate::W { qubit: First },
            },
        ])
        .expect("frozen wiring is well formed")
    }

    pub fn steps(&self) -> &[PrepStep] {
        &self.steps
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Concrete gates for interior `params`.
    pub fn gate_ops(&self, params: AncillaParams) -> Result<Vec<GateOp>> {
        let m = prep_matrices(params)?;
        let u = gates::from_real(&m.u);
        let v = gates::from_real(&m.v);
        let w = gates::from_real(&m.w_computational());
        self.steps
            .iter()
            .map(|s| match s.gate {
                PrepGate::U { qubit } => GateOp::new("U", u.clone(), &[qubit.label()]),
                PrepGate::V { qubit } => GateOp::new("V", v.clone(), &[qubit.label()]),
                PrepGate::W { qubit } => GateOp::new("W", w.clone(), &[qubit.label()]),
                PrepGate::H { qubit } => Ok(gates::hadamard(qubit.label())),
                PrepGate::Cnot { control, target } => {
                    Ok(gates::cnot(control.label(), target.label()))
                }
            })
            .collect()
    }

    /// Run the wiring on `|00⟩` without checking the result.
    pub fn execute(&self, params: AncillaParams) -> Result<PureState> {
        let start = PureState::basis(&[ANC1, ANC2], 0)?;
        start.apply_all(&self.gate_ops(params)?)
    }
}

/// Prepare the ancilla state with `circuit` and check it against the direct
/// construction. At `αβ = 0` the circuit is bypassed: the state is `|00⟩`
/// (β = 0) or `H⊗H|00⟩` (α = 0).
pub fn run_prep_circuit(circuit: &PrepCircuit, params: AncillaParams) -> Result<PureState> {
    let out = if params.is_interior() {
        circuit.execute(params)?
    } else {
        let start = PureState::basis(&[ANC1, ANC2], 0)?;
        if params.alpha() < params.beta() {
            start.apply_all(&[gates::hadamard(ANC1), gates::hadamard(ANC2)])?
        } else {
            start
        }
    };
    let overlap = out.overlap(&sigma_state(params))?;
    if overlap <= 1.0 - TOL_CIRCUIT {
        return Err(Error::WiringMismatch { overlap });
    }
    Ok(out)
}

/// Enumerate every linear ordering of `U, V, W, H, CNOT`, every assignment of
/// the local gates to the two ancillas and both CNOT directions, and return
/// the wirings that reproduce the ancilla state at every `alpha` in the grid
/// (interior points only). Enumeration order is deterministic.
pub fn search_prep_wirings(alpha_grid: &[f64]) -> Result<Vec<PrepCircuit>> {
    let params: Vec<AncillaParams> = alpha_grid
        .iter()
        .map(|&a| AncillaParams::from_alpha(a))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(AncillaParams::is_interior)
        .collect();
    if params.is_empty() {
        return Err(Error::TooFew {
            what: "interior alpha values",
            min: 1,
            got: 0,
        });
    }
    let targets: Vec<PureState> = params.iter().map(|p| sigma_state(*p)).collect();

    let mut found = Vec::new();
    for control in [AncillaQubit::First, AncillaQubit::Second] {
        for order in permutations(5) {
            for mask in 0..16u32 {
                let on = |slot: u32| {
                    if mask >> slot & 1 == 1 {
                        AncillaQubit::Second
                    } else {
                        AncillaQubit::First
                    }
                };
                let steps = order
                    .iter()
                    .enumerate()
                    .map(|(position, &g)| PrepStep {
                        position,
                        gate: match g {
                            0 => PrepGate::U { qubit: on(0) },
                            1 => PrepGate::V { qubit: on(1) },
                            2 => PrepGate::W { qubit: on(2) },
                            3 => PrepGate::H { qubit: on(3) },
                            _ => PrepGate::Cnot {
                                control,
                                target: control.other(),
                            },
                        },
                    })
                    .collect();
                let circuit = PrepCircuit::new(steps)?;
                let ok = params.iter().zip(&targets).all(|(p, t)| {
                    circuit
                        .execute(*p)
                        .and_then(|s| s.overlap(t))
                        .map(|o| o > 1.0 - TOL_CIRCUIT)
                        .unwrap_or(false)
                });
                if ok {
                    found.push(circuit);
                }
            }
        }
    }
    Ok(found)
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}
