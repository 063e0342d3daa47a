//! Continuous-variable partial teleportation of coherent states.
//!
//! Quadratures are tracked in the Heisenberg picture as linear combinations
//! of the input quadratures of modes `A, a, B, 1, 2`, with `[x, p] = i` and
//! vacuum variance `1/2`. Mode `A` carries the coherent input, `a, B` share a
//! two-mode squeezed vacuum, and `1, 2` are vacuum ancillas read out by
//! homodyne detection of `x_1` and `p_2`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const VACUUM_VARIANCE: f64 = 0.5;
const N_MODES: usize = 5;
const DIM: usize = 2 * N_MODES;

pub type PhaseMatrix = SMatrix<f64, DIM, DIM>;
pub type PhaseVector = SVector<f64, DIM>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Input mode.
    #[serde(rename = "A")]
    Input,
    /// Alice's half of the entangled pair.
    #[serde(rename = "a")]
    Pair,
    /// Bob's half of the entangled pair.
    #[serde(rename = "B")]
    Bob,
    #[serde(rename = "1")]
    Anc1,
    #[serde(rename = "2")]
    Anc2,
}

impl Mode {
    pub const ALL: [Mode; N_MODES] = [Mode::Input, Mode::Pair, Mode::Bob, Mode::Anc1, Mode::Anc2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Input => "A",
            Mode::Pair => "a",
            Mode::Bob => "B",
            Mode::Anc1 => "1",
            Mode::Anc2 => "2",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

/// Position of `(mode, quadrature)` in the phase-space vector
/// `(x_A, p_A, x_a, p_a, x_B, p_B, x_1, p_1, x_2, p_2)`.
pub fn phase_index(mode: Mode, q: Quadrature) -> usize {
    2 * mode.index() + if q == Quadrature::X { 0 } else { 1 }
}

/// Classical homodyne results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// Result of measuring `x_u` on mode 1.
    #[serde(rename = "x_u")]
    XU,
    /// Result of measuring `p_v` on mode 2.
    #[serde(rename = "p_v")]
    PV,
}

impl Outcome {
    fn index(self) -> usize {
        self as usize
    }
}

/// Linear combination of input quadratures plus classical outcome terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadExpr {
    coefficients: [f64; DIM],
    offsets: [f64; 2],
}

impl QuadExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The bare input quadrature.
    pub fn quadrature(mode: Mode, q: Quadrature) -> Self {
        let mut e = Self::zero();
        e.coefficients[phase_index(mode, q)] = 1.0;
        e
    }

    /// The classical symbol `outcome` with weight 1.
    pub fn outcome(outcome: Outcome) -> Self {
        let mut e = Self::zero();
        e.offsets[outcome.index()] = 1.0;
        e
    }

    pub fn coefficient(&self, mode: Mode, q: Quadrature) -> f64 {
        self.coefficients[phase_index(mode, q)]
    }

    pub fn coefficients(&self) -> &[f64; DIM] {
        &self.coefficients
    }

    pub fn offset(&self, outcome: Outcome) -> f64 {
        self.offsets[outcome.index()]
    }

    pub fn has_offsets(&self) -> bool {
        self.offsets.iter().any(|w| *w != 0.0)
    }

    /// The operator part only.
    pub fn operator_part(&self) -> Self {
        Self {
            coefficients: self.coefficients,
            offsets: [0.0; 2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients
            .iter()
            .chain(&self.offsets)
            .all(|c| c.is_finite())
    }

    pub fn as_vector(&self) -> PhaseVector {
        PhaseVector::from_column_slice(&self.coefficients)
    }

    /// Non-zero terms, e.g. `[("x_A", 1.0), ("x_2", -2.0)]`.
    pub fn terms(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for m in Mode::ALL {
            for (q, name) in [(Quadrature::X, "x"), (Quadrature::P, "p")] {
                let c = self.coefficient(m, q);
                if c != 0.0 {
                    out.push((format!("{name}_{m}"), c));
                }
            }
        }
        for (o, name) in [(Outcome::XU, "x̄_u"), (Outcome::PV, "p̄_v")] {
            if self.offset(o) != 0.0 {
                out.push((name.to_string(), self.offset(o)));
            }
        }
        out
    }
}

impl Add for QuadExpr {
    type Output = QuadExpr;

    fn add(mut self, rhs: QuadExpr) -> QuadExpr {
        self.coefficients
            .iter_mut()
            .zip(rhs.coefficients)
            .for_each(|(a, b)| *a += b);
        self.offsets
            .iter_mut()
            .zip(rhs.offsets)
            .for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for QuadExpr {
    type Output = QuadExpr;

    fn sub(self, rhs: QuadExpr) -> QuadExpr {
        self + rhs * -1.0
    }
}

impl Mul<f64> for QuadExpr {
    type Output = QuadExpr;

    fn mul(mut self, k: f64) -> QuadExpr {
        self.coefficients.iter_mut().for_each(|a| *a *= k);
        self.offsets.iter_mut().for_each(|a| *a *= k);
        self
    }
}

/// `[e1, e2] / i` for the operator parts.
pub fn commutator(e1: &QuadExpr, e2: &QuadExpr) -> f64 {
    (0..N_MODES)
        .map(|m| {
            let (x, p) = (2 * m, 2 * m + 1);
            e1.coefficients[x] * e2.coefficients[p] - e1.coefficients[p] * e2.coefficients[x]
        })
        .sum()
}

/// Current Heisenberg expression of every quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFrame {
    exprs: [QuadExpr; DIM],
}

impl Default for QuadFrame {
    fn default() -> Self {
        Self::identity()
    }
}

impl QuadFrame {
    pub fn identity() -> Self {
        let mut exprs = [QuadExpr::zero(); DIM];
        for (i, e) in exprs.iter_mut().enumerate() {
            e.coefficients[i] = 1.0;
        }
        Self { exprs }
    }

    pub fn get(&self, mode: Mode, q: Quadrature) -> &QuadExpr {
        &self.exprs[phase_index(mode, q)]
    }

    pub fn x(&self, mode: Mode) -> &QuadExpr {
        self.get(mode, Quadrature::X)
    }

    pub fn p(&self, mode: Mode) -> &QuadExpr {
        self.get(mode, Quadrature::P)
    }

    fn set(&mut self, mode: Mode, q: Quadrature, e: QuadExpr) {
        self.exprs[phase_index(mode, q)] = e;
    }

    /// Largest deviation of the frame's canonical commutators from the
    /// input ones.
    pub fn commutator_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                let want = match (i % 2, j % 2) {
                    (0, 1) if i / 2 == j / 2 => 1.0,
                    (1, 0) if i / 2 == j / 2 => -1.0,
                    _ => 0.0,
                };
                worst = worst.max((commutator(&self.exprs[i], &self.exprs[j]) - want).abs());
            }
        }
        worst
    }
}

/// QND coupling: `x_t += κ x_c`, `p_c −= κ p_t`. `kappa` may be negative.
pub fn qnd_gate(frame: &QuadFrame, control: Mode, target: Mode, kappa: f64) -> Result<QuadFrame> {
    if control == target {
        return Err(Error::SameMode(control.label().to_string()));
    }
    let mut out = *frame;
    out.set(
        target,
        Quadrature::X,
        *frame.x(target) + *frame.x(control) * kappa,
    );
    out.set(
        control,
        Quadrature::P,
        *frame.p(control) - *frame.p(target) * kappa,
    );
    Ok(out)
}

/// Symplectic matrix of [`qnd_gate`] acting on the phase-space vector.
pub fn qnd_matrix(control: Mode, target: Mode, kappa: f64) -> Result<PhaseMatrix> {
    if control == target {
        return Err(Error::SameMode(control.label().to_string()));
    }
    let mut s = PhaseMatrix::identity();
    s[(
        phase_index(target, Quadrature::X),
        phase_index(control, Quadrature::X),
    )] = kappa;
    s[(
        phase_index(control, Quadrature::P),
        phase_index(target, Quadrature::P),
    )] = -kappa;
    Ok(s)
}

/// `J` with `[r_i, r_j] = i J_ij`.
pub fn symplectic_form() -> PhaseMatrix {
    let mut j = PhaseMatrix::zeros();
    for m in 0..N_MODES {
        j[(2 * m, 2 * m + 1)] = 1.0;
        j[(2 * m + 1, 2 * m)] = -1.0;
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvConfig {
    kappa: f64,
    r: f64,
}

impl CvConfig {
    pub fn new(kappa: f64, r: f64) -> Result<Self> {
        if kappa <= 0.0 || !kappa.is_finite() {
            return Err(Error::Coupling(kappa));
        }
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Squeezing(r));
        }
        Ok(Self { kappa, r })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Squeezing parameter of the shared two-mode state.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Asymmetry `ln κ`.
    pub fn gamma(&self) -> f64 {
        self.kappa.ln()
    }

    /// `tanh r`.
    pub fn lambda(&self) -> f64 {
        self.r.tanh()
    }
}

impl<'de> Deserialize<'de> for CvConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            kappa: f64,
            r: f64,
        }
        let raw = Raw::deserialize(d)?;
        CvConfig::new(raw.kappa, raw.r).map_err(serde::de::Error::custom)
    }
}

/// One QND step of the measurement network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QndStep {
    pub control: Mode,
    pub target: Mode,
    pub kappa: f64,
}

/// The four couplings that put `x_1 − κ(x_A − x_a)` on mode 1 and
/// `p_2 + κ(p_A + p_a)` on mode 2.
pub fn measurement_network(kappa: f64) -> [QndStep; 4] {
    let step = |control, target, kappa| QndStep {
        control,
        target,
        kappa,
    };
    [
        step(Mode::Input, Mode::Anc1, -kappa),
        step(Mode::Pair, Mode::Anc1, kappa),
        step(Mode::Anc2, Mode::Input, -kappa),
        step(Mode::Anc2, Mode::Pair, -kappa),
    ]
}

/// Classical feed-forward: `x_out = x' + x_gain · x̄_u`,
/// `p_out = p' + p_gain · p̄_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementGains {
    pub x_gain: f64,
    pub p_gain: f64,
}

/// Gains applied to modes `a` and `B`.
pub fn displacement_gains(kappa: f64) -> (DisplacementGains, DisplacementGains) {
    let g = 1.0 / kappa;
    (
        DisplacementGains {
            x_gain: -g,
            p_gain: -g,
        },
        DisplacementGains {
            x_gain: -g,
            p_gain: g,
        },
    )
}

/// Output of [`build_cv_protocol`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvProtocol {
    pub config: CvConfig,
    pub network: [QndStep; 4],
    /// Frame right after the QND network.
    pub after_gates: QuadFrame,
    /// Measured `x_u` (mode 1) and `p_v` (mode 2).
    pub x_u: QuadExpr,
    pub p_v: QuadExpr,
    pub gains_pair: DisplacementGains,
    pub gains_bob: DisplacementGains,
    /// Modes `a` and `B` after readout and before displacement, written with
    /// the classical results: `(x_a', p_a', x_B', p_B')`.
    pub conditioned: [QuadExpr; 4],
    /// Final `(x, p)` for modes `A`, `a`, `B`.
    pub output_input: (QuadExpr, QuadExpr),
    pub output_pair: (QuadExpr, QuadExpr),
    pub output_bob: (QuadExpr, QuadExpr),
}

/// On the branch where `measured` reads `symbol`, rewrite `expr` as
/// `(expr + g·measured) − g·symbol`, so that a later displacement by
/// `g·symbol` leaves a purely operator-valued expression.
fn condition(expr: &QuadExpr, measured: &QuadExpr, symbol: Outcome, gain: f64) -> QuadExpr {
    *expr + measured.operator_part() * gain - QuadExpr::outcome(symbol) * gain
}

fn displace(expr: &QuadExpr, symbol: Outcome, gain: f64) -> QuadExpr {
    *expr + QuadExpr::outcome(symbol) * gain
}

pub fn build_cv_protocol(config: CvConfig) -> Result<CvProtocol> {
    build_cv_protocol_with_gains(config, displacement_gains(config.kappa()))
}

pub fn build_cv_protocol_with_gains(
    config: CvConfig,
    (gains_pair, gains_bob): (DisplacementGains, DisplacementGains),
) -> Result<CvProtocol> {
    let network = measurement_network(config.kappa());
    let mut frame = QuadFrame::identity();
    for s in &network {
        frame = qnd_gate(&frame, s.control, s.target, s.kappa)?;
    }
    let x_u = *frame.x(Mode::Anc1);
    let p_v = *frame.p(Mode::Anc2);

    let conditioned = [
        condition(frame.x(Mode::Pair), &x_u, Outcome::XU, gains_pair.x_gain),
        condition(frame.p(Mode::Pair), &p_v, Outcome::PV, gains_pair.p_gain),
        condition(frame.x(Mode::Bob), &x_u, Outcome::XU, gains_bob.x_gain),
        condition(frame.p(Mode::Bob), &p_v, Outcome::PV, gains_bob.p_gain),
    ];
    let output_pair = (
        displace(&conditioned[0], Outcome::XU, gains_pair.x_gain),
        displace(&conditioned[1], Outcome::PV, gains_pair.p_gain),
    );
    let output_bob = (
        displace(&conditioned[2], Outcome::XU, gains_bob.x_gain),
        displace(&conditioned[3], Outcome::PV, gains_bob.p_gain),
    );
    Ok(CvProtocol {
        config,
        network,
        after_gates: frame,
        x_u,
        p_v,
        gains_pair,
        gains_bob,
        conditioned,
        output_input: (*frame.x(Mode::Input), *frame.p(Mode::Input)),
        output_pair,
        output_bob,
    })
}

impl CvProtocol {
    /// Output `(x, p)` of `mode` (`A`, `a` or `B`).
    pub fn output(&self, mode: Mode) -> Option<(QuadExpr, QuadExpr)> {
        match mode {
            Mode::Input => Some(self.output_input),
            Mode::Pair => Some(self.output_pair),
            Mode::Bob => Some(self.output_bob),
            _ => None,
        }
    }

    /// Rows `(x_A, p_A, x_a, p_a, x_B, p_B)` of the output map.
    pub fn output_matrix(&self) -> SMatrix<f64, 6, DIM> {
        let rows = [
            self.output_input.0,
            self.output_input.1,
            self.output_pair.0,
            self.output_pair.1,
            self.output_bob.0,
            self.output_bob.1,
        ];
        SMatrix::from_fn(|i, j| rows[i].coefficients[j])
    }
}

/// Gaussian input: coherent `A` with mean `input_mean`, vacuum ancillas, and
/// a two-mode squeezed vacuum on `a, B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvInputModel {
    pub r: f64,
    /// `(⟨x_A⟩, ⟨p_A⟩)`.
    pub input_mean: (f64, f64),
}

impl CvInputModel {
    pub fn new(r: f64) -> Self {
        Self {
            r,
            input_mean: (0.0, 0.0),
        }
    }

    pub fn with_input_mean(mut self, x: f64, p: f64) -> Self {
        self.input_mean = (x, p);
        self
    }

    pub fn covariance(&self) -> PhaseMatrix {
        let mut s = PhaseMatrix::identity() * VACUUM_VARIANCE;
        let (c, sh) = ((2.0 * self.r).cosh() / 2.0, (2.0 * self.r).sinh() / 2.0);
        let (xa, pa) = (
            phase_index(Mode::Pair, Quadrature::X),
            phase_index(Mode::Pair, Quadrature::P),
        );
        let (xb, pb) = (
            phase_index(Mode::Bob, Quadrature::X),
            phase_index(Mode::Bob, Quadrature::P),
        );
        for i in [xa, pa, xb, pb] {
            s[(i, i)] = c;
        }
        s[(xa, xb)] = sh;
        s[(xb, xa)] = sh;
        s[(pa, pb)] = -sh;
        s[(pb, pa)] = -sh;
        s
    }

    pub fn mean(&self) -> PhaseVector {
        let mut m = PhaseVector::zeros();
        m[phase_index(Mode::Input, Quadrature::X)] = self.input_mean.0;
        m[phase_index(Mode::Input, Quadrature::P)] = self.input_mean.1;
        m
    }
}

/// Symmetrized variance of the operator part of `expr`.
pub fn variance(expr: &QuadExpr, model: &CvInputModel) -> f64 {
    let c = expr.as_vector();
    (c.transpose() * model.covariance() * c)[(0, 0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvFidelityPair {
    pub f_a: f64,
    pub f_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvFidelities {
    pub config: CvConfig,
    /// From the propagated output variances.
    pub simulated: CvFidelityPair,
    pub closed_form: CvFidelityPair,
    /// Best asymmetric split at the same `γ` with unlimited entanglement.
    pub optimal: CvFidelityPair,
    /// Mean added noise photons in `A` and `B`.
    pub chaotic_photons: (f64, f64),
}

impl CvFidelities {
    pub fn deviation(&self) -> f64 {
        (self.simulated.f_a - self.closed_form.f_a)
            .abs()
            .max((self.simulated.f_b - self.closed_form.f_b).abs())
    }
}

/// `F_A = 2/(2 + e^{2γ})`, `F_B = 2/(2(1 + e^{−2r}) + e^{−2γ})`.
pub fn cv_closed_form(config: CvConfig) -> CvFidelityPair {
    let g2 = (2.0 * config.gamma()).exp();
    CvFidelityPair {
        f_a: 2.0 / (2.0 + g2),
        f_b: 2.0 / (2.0 * (1.0 + (-2.0 * config.r()).exp()) + 1.0 / g2),
    }
}

/// `F_A = 2/(2 + e^{2γ})`, `F_B = 2/(2 + e^{−2γ})`.
pub fn cv_optimal(gamma: f64) -> CvFidelityPair {
    CvFidelityPair {
        f_a: 2.0 / (2.0 + (2.0 * gamma).exp()),
        f_b: 2.0 / (2.0 + (-2.0 * gamma).exp()),
    }
}

const NOISE_TOL: f64 = 1e-10;
const GAIN_TOL: f64 = 1e-12;

fn chaotic_photons(mode: Mode, (x, p): (QuadExpr, QuadExpr), model: &CvInputModel) -> Result<f64> {
    let label = mode.label();
    for gain in [
        x.coefficient(Mode::Input, Quadrature::X),
        p.coefficient(Mode::Input, Quadrature::P),
    ] {
        if (gain - 1.0).abs() > GAIN_TOL {
            return Err(Error::Gain { mode: label, gain });
        }
    }
    let x_excess = variance(&x, model) - VACUUM_VARIANCE;
    let p_excess = variance(&p, model) - VACUUM_VARIANCE;
    if (x_excess - p_excess).abs() > NOISE_TOL {
        return Err(Error::AsymmetricNoise {
            mode: label,
            x_excess,
            p_excess,
        });
    }
    Ok((x_excess + p_excess) / 2.0)
}

/// Fidelities `1/(1 + n_ch)` of the outputs in `A` and `B` with the coherent
/// input, where `n_ch` is the added noise per quadrature.
pub fn cv_fidelities(config: CvConfig) -> Result<CvFidelities> {
    let protocol = build_cv_protocol(config)?;
    let model = CvInputModel::new(config.r());
    let n_a = chaotic_photons(Mode::Input, protocol.output_input, &model)?;
    let n_b = chaotic_photons(Mode::Bob, protocol.output_bob, &model)?;
    Ok(CvFidelities {
        config,
        simulated: CvFidelityPair {
            f_a: 1.0 / (1.0 + n_a),
            f_b: 1.0 / (1.0 + n_b),
        },
        closed_form: cv_closed_form(config),
        optimal: cv_optimal(config.gamma()),
        chaotic_photons: (n_a, n_b),
    })
}

/// Coherent displacement of `A` used by the conditioning oracle.
pub const ORACLE_INPUT_MEAN: (f64, f64) = (1.3, -0.7);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningReport {
    pub mean_deviation: f64,
    pub covariance_deviation: f64,
}

impl ConditioningReport {
    pub fn max_deviation(&self) -> f64 {
        self.mean_deviation.max(self.covariance_deviation)
    }
}

/// Compare the symbolic pipeline with a Gaussian-state calculation:
/// propagate the full covariance through the QND network, condition on the
/// homodyne results of `x_1` and `p_2`, apply the displacements and average
/// over outcomes.
pub fn covariance_conditioning_check(config: CvConfig) -> Result<ConditioningReport> {
    conditioning_check(config, true)
}

/// [`covariance_conditioning_check`] with the displacement step left out of
/// the Gaussian calculation.
pub fn covariance_conditioning_check_undisplaced(config: CvConfig) -> Result<ConditioningReport> {
    conditioning_check(config, false)
}

fn conditioning_check(config: CvConfig, displace: bool) -> Result<ConditioningReport> {
    let model =
        CvInputModel::new(config.r()).with_input_mean(ORACLE_INPUT_MEAN.0, ORACLE_INPUT_MEAN.1);
    let mut s = PhaseMatrix::identity();
    for step in measurement_network(config.kappa()) {
        s = qnd_matrix(step.control, step.target, step.kappa)? * s;
    }
    let mu = s * model.mean();
    let sigma = s * model.covariance() * s.transpose();

    let kept = [
        phase_index(Mode::Input, Quadrature::X),
        phase_index(Mode::Input, Quadrature::P),
        phase_index(Mode::Pair, Quadrature::X),
        phase_index(Mode::Pair, Quadrature::P),
        phase_index(Mode::Bob, Quadrature::X),
        phase_index(Mode::Bob, Quadrature::P),
    ];
    let measured = [
        phase_index(Mode::Anc1, Quadrature::X),
        phase_index(Mode::Anc2, Quadrature::P),
    ];
    let mu_r = SVector::<f64, 6>::from_fn(|i, _| mu[kept[i]]);
    let mu_m = SVector::<f64, 2>::from_fn(|i, _| mu[measured[i]]);
    let s_rr = SMatrix::<f64, 6, 6>::from_fn(|i, j| sigma[(kept[i], kept[j])]);
    let s_rm = SMatrix::<f64, 6, 2>::from_fn(|i, j| sigma[(kept[i], measured[j])]);
    let s_mm = SMatrix::<f64, 2, 2>::from_fn(|i, j| sigma[(measured[i], measured[j])]);
    let s_mm_inv = s_mm
        .try_inverse()
        .ok_or_else(|| Error::InvalidDensity("singular homodyne covariance".into()))?;

    let k = s_rm * s_mm_inv;
    let conditional = s_rr - k * s_rm.transpose();
    let mut g = SMatrix::<f64, 6, 2>::zeros();
    if displace {
        let (pair, bob) = displacement_gains(config.kappa());
        g[(2, 0)] = pair.x_gain;
        g[(3, 1)] = pair.p_gain;
        g[(4, 0)] = bob.x_gain;
        g[(5, 1)] = bob.p_gain;
    }
    let mean = mu_r + g * mu_m;
    let kg = k + g;
    let covariance = conditional + kg * s_mm * kg.transpose();

    let c = build_cv_protocol(config)?.output_matrix();
    let want_mean = c * model.mean();
    let want_cov = c * model.covariance() * c.transpose();
    Ok(ConditioningReport {
        mean_deviation: (mean - want_mean).amax(),
        covariance_deviation: (covariance - want_cov).amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn q(mode: Mode, quad: Quadrature) -> QuadExpr {
        QuadExpr::quadrature(mode, quad)
    }

    use Mode::*;
    use Quadrature::{P, X};

    #[test]
    fn zero_coupling_is_identity() {
        let f = qnd_gate(&QuadFrame::identity(), Input, Anc1, 0.0).unwrap();
        assert_eq!(f, QuadFrame::identity());
        assert!(qnd_gate(&f, Bob, Bob, 1.0).is_err());
    }

    #[test]
    fn single_gate_variance() {
        let f = qnd_gate(&QuadFrame::identity(), Anc1, Anc2, 1.0).unwrap();
        assert_abs_diff_eq!(
            variance(f.x(Anc2), &CvInputModel::new(0.0)),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn commutators_survive_gates() {
        for kappa in [-2.0, 0.3, 1.0, 5.0] {
            let f = qnd_gate(&QuadFrame::identity(), Pair, Anc2, kappa).unwrap();
            assert_eq!(commutator(f.x(Anc2), f.p(Pair)), 0.0);
            let p = build_cv_protocol(CvConfig::new(kappa.abs(), 0.4).unwrap()).unwrap();
            assert!(p.after_gates.commutator_residual() < 1e-12);
        }
    }

    #[test]
    fn qnd_matrix_is_symplectic() {
        let s = qnd_matrix(Input, Anc1, 1.7).unwrap();
        let j = symplectic_form();
        assert!((s * j * s.transpose() - j).amax() < 1e-15);
    }

    #[test]
    fn measured_quadratures() {
        let k = 1.7;
        let p = build_cv_protocol(CvConfig::new(k, 0.0).unwrap()).unwrap();
        let want_u = q(Anc1, X) - (q(Input, X) - q(Pair, X)) * k;
        let want_v = q(Anc2, P) + (q(Input, P) + q(Pair, P)) * k;
        assert!((p.x_u.as_vector() - want_u.as_vector()).amax() < 1e-15);
        assert!((p.p_v.as_vector() - want_v.as_vector()).amax() < 1e-15);
    }

    #[test]
    fn output_quadratures() {
        let k = 2.5;
        let p = build_cv_protocol(CvConfig::new(k, 0.0).unwrap()).unwrap();
        let cases = [
            (p.output_input.0, q(Input, X) - q(Anc2, X) * k),
            (p.output_input.1, q(Input, P) + q(Anc1, P) * k),
            (
                p.output_pair.0,
                q(Input, X) - q(Anc1, X) * (1.0 / k) - q(Anc2, X) * k,
            ),
            (
                p.output_pair.1,
                q(Input, P) * -1.0 - q(Anc1, P) * k - q(Anc2, P) * (1.0 / k),
            ),
            (
                p.output_bob.0,
                q(Input, X) - (q(Pair, X) - q(Bob, X)) - q(Anc1, X) * (1.0 / k),
            ),
            (
                p.output_bob.1,
                q(Input, P) + (q(Pair, P) + q(Bob, P)) + q(Anc2, P) * (1.0 / k),
            ),
        ];
        for (got, want) in cases {
            assert!(
                (got.as_vector() - want.as_vector()).amax() < 1e-14,
                "{:?}",
                got.terms()
            );
            assert!(!got.has_offsets());
        }
    }

    #[test]
    fn unit_coupling_bob_output() {
        let p = build_cv_protocol(CvConfig::new(1.0, 0.0).unwrap()).unwrap();
        let terms = p.output_bob.0.terms();
        let want = [("x_A", 1.0), ("x_a", -1.0), ("x_B", 1.0), ("x_1", -1.0)];
        assert_eq!(terms.len(), 4);
        for (name, c) in want {
            assert!(terms.iter().any(|(n, v)| n == name && *v == c), "{terms:?}");
        }
        assert_abs_diff_eq!(
            variance(&p.output_bob.0, &CvInputModel::new(0.0)),
            2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn conditioned_forms_carry_outcomes() {
        let k = 2.0;
        let p = build_cv_protocol(CvConfig::new(k, 0.0).unwrap()).unwrap();
        let want = [
            (Outcome::XU, 1.0 / k),
            (Outcome::PV, 1.0 / k),
            (Outcome::XU, 1.0 / k),
            (Outcome::PV, -1.0 / k),
        ];
        for (e, (o, w)) in p.conditioned.iter().zip(want) {
            assert_abs_diff_eq!(e.offset(o), w, epsilon = 1e-15);
        }
        // x_a' = x_A − x_1/κ − κx_2 + x̄_u/κ
        let x_a = p.conditioned[0];
        assert_abs_diff_eq!(x_a.coefficient(Input, X), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x_a.coefficient(Pair, X), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x_a.coefficient(Anc1, X), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x_a.coefficient(Anc2, X), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn nopa_block() {
        let m = CvInputModel::new(1.0);
        let diff = q(Pair, X) - q(Bob, X);
        let sum = q(Pair, P) + q(Bob, P);
        assert_abs_diff_eq!(
            variance(&diff, &m),
            0.135_335_283_236_612_7,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(variance(&sum, &m), (-2.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(variance(&q(Anc1, P), &m), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let f = cv_fidelities(CvConfig::new(1.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(f.simulated.f_a, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.simulated.f_b, 0.4, epsilon = 1e-12);
        let f = cv_fidelities(CvConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(f.simulated.f_b, 0.611_495_398_069_578_9, epsilon = 1e-12);
        let f = cv_fidelities(CvConfig::new(1.0, 20.0).unwrap()).unwrap();
        assert_abs_diff_eq!(f.simulated.f_b, 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.optimal.f_b, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn grid_matches_closed_form() {
        for kappa in [0.5, 1.0, 2.0] {
            let mut gap = f64::INFINITY;
            for r in [0.0, 0.5, 1.0, 2.0, 20.0] {
                let c = CvConfig::new(kappa, r).unwrap();
                assert_abs_diff_eq!(c.gamma(), kappa.ln(), epsilon = 1e-14);
                let f = cv_fidelities(c).unwrap();
                assert!(f.deviation() < 1e-10);
                assert_abs_diff_eq!(f.simulated.f_a, f.optimal.f_a, epsilon = 1e-12);
                let g = f.optimal.f_b - f.simulated.f_b;
                assert!(g < gap);
                gap = g;
            }
            assert!(gap < 1e-10);
        }
    }

    #[test]
    fn invalid_config() {
        assert!(CvConfig::new(0.0, 1.0).is_err());
        assert!(CvConfig::new(-1.0, 1.0).is_err());
        assert!(CvConfig::new(1.0, -0.1).is_err());
        assert!(CvConfig::new(f64::NAN, 0.0).is_err());
        assert!(serde_json::from_str::<CvConfig>(r#"{"kappa":-1,"r":0}"#).is_err());
    }

    #[test]
    fn wrong_gain_is_reported() {
        let c = CvConfig::new(1.0, 0.5).unwrap();
        let (pair, mut bob) = displacement_gains(1.0);
        bob.p_gain = -bob.p_gain;
        let p = build_cv_protocol_with_gains(c, (pair, bob)).unwrap();
        let err = chaotic_photons(Bob, p.output_bob, &CvInputModel::new(0.5)).unwrap_err();
        assert!(matches!(
            err,
            Error::Gain { .. } | Error::AsymmetricNoise { .. }
        ));
    }

    #[test]
    fn conditioning_oracle_agrees() {
        for (kappa, r) in [(1.0, 0.0), (2.0, 0.5), (0.5, 2.0)] {
            let rep = covariance_conditioning_check(CvConfig::new(kappa, r).unwrap()).unwrap();
            assert!(rep.max_deviation() < 1e-9, "{rep:?}");
        }
        let bad =
            covariance_conditioning_check_undisplaced(CvConfig::new(1.0, 0.0).unwrap()).unwrap();
        assert!(bad.mean_deviation > 1e-3);
    }
}
