//! Information versus disturbance for the partial Bell measurement viewed as
//! an operation on two qubits: mean operation and estimation fidelities over
//! Haar-random pure inputs.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ancilla::AncillaParams;
use crate::exec::Execution;
use crate::pnbm::{KrausSet, OutcomeLabel};
use crate::qsim::{
    bell_state, haar_random_pure, CMatrix, PureState, RandomSource, C64, TOL_CIRCUIT,
};
use crate::{Error, Result};

/// Haar samples per Monte-Carlo block. Each block draws from its own stream.
pub const MC_BLOCK: usize = 4096;
pub const MC_MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelitySource {
    ClosedForm,
    KrausFormula,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErr {
    pub op: f64,
    pub est: f64,
}

/// Mean operation fidelity (how well the input survives) and mean estimation
/// fidelity (how well the input can be guessed from the outcome).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFidelityPair {
    pub f_op: f64,
    pub f_est: f64,
    pub source: FidelitySource,
    pub stderr: Option<StdErr>,
}

/// Per-outcome guess of the input: a Bell state spanning the largest
/// eigenspace of `A_k†A_k`. Ties go to the outcome's own Bell state when it
/// is among the maxima, otherwise to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessRule {
    guesses: [PureState; 4],
    bell_index: [usize; 4],
    eigenvalues: [f64; 4],
}

const TIE_TOL: f64 = 1e-12;

impl GuessRule {
    pub fn from_kraus(kraus: &KrausSet) -> Self {
        let mut bell_index = [0; 4];
        let mut eigenvalues = [0.0; 4];
        for o in OutcomeLabel::all() {
            let sq = kraus.bell_diagonal(o).map(|d| d * d);
            let max = sq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let own = o.slot();
            let pick = if sq[own] >= max - TIE_TOL {
                own
            } else {
                (0..4).find(|&m| sq[m] >= max - TIE_TOL).unwrap()
            };
            bell_index[own] = pick + 1;
            eigenvalues[own] = max;
        }
        let guesses = bell_index.map(|k| bell_state(k).expect("valid index"));
        Self {
            guesses,
            bell_index,
            eigenvalues,
        }
    }

    pub fn guess(&self, outcome: OutcomeLabel) -> &PureState {
        &self.guesses[outcome.slot()]
    }

    /// Bell index (1..=4) guessed for `outcome`.
    pub fn bell_index(&self, outcome: OutcomeLabel) -> usize {
        self.bell_index[outcome.slot()]
    }

    /// Largest eigenvalue of `A_k†A_k`.
    pub fn max_eigenvalue(&self, outcome: OutcomeLabel) -> f64 {
        self.eigenvalues[outcome.slot()]
    }
}

/// `F_op = (4 + Σ|Tr A_k|²)/20`, `F_est = (4 + Σ λ_k)/20` with `λ_k` the
/// largest eigenvalue of `A_k†A_k`.
pub fn mean_fidelities_from_kraus(kraus: &KrausSet) -> Result<MeanFidelityPair> {
    let residual = kraus.completeness_residual();
    if residual.is_nan() || residual >= TOL_CIRCUIT {
        return Err(Error::IncompleteKraus(residual));
    }
    let traces: f64 = kraus.operators().iter().map(|a| a.trace().norm_sqr()).sum();
    let rule = GuessRule::from_kraus(kraus);
    let lambdas: f64 = OutcomeLabel::all()
        .iter()
        .map(|o| rule.max_eigenvalue(*o))
        .sum();
    Ok(MeanFidelityPair {
        f_op: (4.0 + traces) / 20.0,
        f_est: (4.0 + lambdas) / 20.0,
        source: FidelitySource::KrausFormula,
        stderr: None,
    })
}

/// `F_op = (1 + (α + 2β)²)/5`, `F_est = (1 + (α + β/2)²)/5`.
pub fn mean_fidelities_closed(params: AncillaParams) -> MeanFidelityPair {
    let (a, b) = (params.alpha(), params.beta());
    MeanFidelityPair {
        f_op: (1.0 + (a + 2.0 * b).powi(2)) / 5.0,
        f_est: (1.0 + (a + b / 2.0).powi(2)) / 5.0,
        source: FidelitySource::ClosedForm,
        stderr: None,
    }
}

/// `√(F_est − 1/5) + √(3(2/5 − F_est)) − √(F_op − 1/5)`. Non-negative when
/// the two-qubit trade-off holds, zero when it is saturated.
pub fn tradeoff_residual(pair: &MeanFidelityPair) -> Result<f64> {
    tradeoff_residual_raw(pair.f_op, pair.f_est)
}

pub fn tradeoff_residual_raw(f_op: f64, f_est: f64) -> Result<f64> {
    // tiny rounding past the edges is not a domain violation
    const EDGE: f64 = 1e-14;
    if !(0.2 - EDGE..=0.4 + EDGE).contains(&f_est) {
        return Err(Error::TradeoffDomain(format!(
            "estimation fidelity {f_est} outside [1/5, 2/5]"
        )));
    }
    if f_op.is_nan() || f_op < 0.2 - EDGE {
        return Err(Error::TradeoffDomain(format!(
            "operation fidelity {f_op} below 1/5"
        )));
    }
    let root = |x: f64| x.max(0.0).sqrt();
    Ok(root(f_est - 0.2) + root(3.0 * (0.4 - f_est)) - root(f_op - 0.2))
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

struct Sampler<'a> {
    ops: &'a [CMatrix; 4],
    guesses: [DVector<C64>; 4],
}

impl Sampler<'_> {
    /// `(Σ_k |⟨ψ|A_k|ψ⟩|², Σ_k p_k |⟨ψ|g_k⟩|²)` for one input.
    fn sample(&self, psi: &PureState) -> (f64, f64) {
        let v = DVector::from_column_slice(psi.amplitudes());
        let mut op = 0.0;
        let mut est = 0.0;
        for (a, g) in self.ops.iter().zip(&self.guesses) {
            let av = a * &v;
            op += v.dotc(&av).norm_sqr();
            est += av.norm_squared() * g.dotc(&v).norm_sqr();
        }
        (op, est)
    }
}

/// Haar Monte-Carlo estimate of both mean fidelities with standard errors.
///
/// Samples are drawn in blocks of [`MC_BLOCK`], block `b` using
/// `rng.derive(b)`, so the result is identical under every [`Execution`].
pub fn monte_carlo_mean_fidelities(
    kraus: &KrausSet,
    n_samples: usize,
    rng: &RandomSource,
    exec: Execution,
) -> Result<MeanFidelityPair> {
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::TooFew {
            what: "Monte-Carlo samples",
            min: MC_MIN_SAMPLES,
            got: n_samples,
        });
    }
    let rule = GuessRule::from_kraus(kraus);
    let sampler = Sampler {
        ops: kraus.operators(),
        guesses: OutcomeLabel::all()
            .map(|o| DVector::from_column_slice(rule.guess(o).amplitudes())),
    };
    let n_blocks = n_samples.div_ceil(MC_BLOCK);
    let blocks = exec.try_map_indexed(n_blocks, |b| -> Result<(Moments, Moments)> {
        let mut local = rng.derive(b as u64);
        let len = MC_BLOCK.min(n_samples - b * MC_BLOCK);
        let (mut op, mut est) = (Moments::default(), Moments::default());
        for _ in 0..len {
            let psi = haar_random_pure(2, &mut local)?;
            let (o, e) = sampler.sample(&psi);
            op.push(o);
            est.push(e);
        }
        Ok((op, est))
    })?;
    let (op, est) = blocks.into_iter().fold(
        (Moments::default(), Moments::default()),
        |(a, b), (c, d)| (a.merge(c), b.merge(d)),
    );
    Ok(MeanFidelityPair {
        f_op: op.mean,
        f_est: est.mean,
        source: FidelitySource::MonteCarlo,
        stderr: Some(StdErr {
            op: op.stderr(),
            est: est.stderr(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ancilla::params_from_alpha;
    use crate::pnbm::kraus_set;
    use approx::assert_abs_diff_eq;

    fn alpha_grid() -> Vec<f64> {
        (0..=100).map(|i| i as f64 / 100.0).collect()
    }

    #[test]
    fn endpoint_values() {
        let proj = mean_fidelities_from_kraus(&kraus_set(params_from_alpha(1.0).unwrap())).unwrap();
        assert_abs_diff_eq!(proj.f_op, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(proj.f_est, 0.4, epsilon = 1e-12);
        let id = mean_fidelities_from_kraus(&kraus_set(params_from_alpha(0.0).unwrap())).unwrap();
        assert_abs_diff_eq!(id.f_op, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.f_est, 0.25, epsilon = 1e-12);
        let sym = mean_fidelities_from_kraus(&kraus_set(AncillaParams::symmetric())).unwrap();
        assert_abs_diff_eq!(sym.f_op, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(sym.f_est, 0.35, epsilon = 1e-12);
    }

    #[test]
    fn half_alpha_closed_form() {
        let p = mean_fidelities_closed(params_from_alpha(0.5).unwrap());
        assert_abs_diff_eq!(p.f_op, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(p.f_est, 0.336_354_086_414_949_8, epsilon = 1e-12);
        assert!(tradeoff_residual(&p).unwrap().abs() < 1e-10);
    }

    #[test]
    fn formulas_agree_and_saturate() {
        let mut prev: Option<MeanFidelityPair> = None;
        for alpha in alpha_grid() {
            let params = params_from_alpha(alpha).unwrap();
            let closed = mean_fidelities_closed(params);
            let kraus = mean_fidelities_from_kraus(&kraus_set(params)).unwrap();
            assert_abs_diff_eq!(closed.f_op, kraus.f_op, epsilon = 1e-12);
            assert_abs_diff_eq!(closed.f_est, kraus.f_est, epsilon = 1e-12);
            assert!(
                tradeoff_residual(&closed).unwrap().abs() < 1e-10,
                "alpha {alpha}"
            );
            if let Some(p) = prev {
                assert!(closed.f_op < p.f_op && closed.f_est > p.f_est);
            }
            prev = Some(closed);
        }
    }

    #[test]
    fn tradeoff_examples_and_domain() {
        assert_abs_diff_eq!(
            tradeoff_residual_raw(0.4, 0.4).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            tradeoff_residual_raw(0.8, 0.35).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert!(tradeoff_residual_raw(0.9, 0.41).is_err());
        assert!(tradeoff_residual_raw(0.1, 0.3).is_err());
        // a strictly suboptimal pair sits inside the bound
        assert!(tradeoff_residual_raw(0.5, 0.3).unwrap() > 0.0);
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        for alpha in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let kraus = kraus_set(params_from_alpha(alpha).unwrap());
            let rule = GuessRule::from_kraus(&kraus);
            for o in OutcomeLabel::all() {
                let a = kraus.operator(o);
                let h = a.adjoint() * a;
                let eig = h.clone().symmetric_eigen();
                let dense = eig
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_abs_diff_eq!(dense, rule.max_eigenvalue(o), epsilon = 1e-12);
                // the guess attains the maximum
                let g = DVector::from_column_slice(rule.guess(o).amplitudes());
                let val = g.dotc(&(&h * &g)).re;
                assert_abs_diff_eq!(val, dense, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identity_ties_break_to_own_bell_state() {
        let rule = GuessRule::from_kraus(&kraus_set(params_from_alpha(0.0).unwrap()));
        for o in OutcomeLabel::all() {
            assert_eq!(rule.bell_index(o), o.kraus_index());
        }
    }

    #[test]
    fn incomplete_set_rejected() {
        let k = KrausSet::from_bell_diagonals([[1.0; 4]; 4]);
        assert!(matches!(
            mean_fidelities_from_kraus(&k),
            Err(Error::IncompleteKraus(_))
        ));
    }

    #[test]
    fn monte_carlo_small_run() {
        let kraus = kraus_set(AncillaParams::symmetric());
        let rng = RandomSource::new(11);
        let mc = monte_carlo_mean_fidelities(&kraus, 20_000, &rng, Execution::Sequential).unwrap();
        let se = mc.stderr.unwrap();
        assert!((mc.f_op - 0.8).abs() < 4.0 * se.op);
        assert!((mc.f_est - 0.35).abs() < 4.0 * se.est);
        let again = monte_carlo_mean_fidelities(&kraus, 20_000, &rng, Execution::Parallel).unwrap();
        assert_eq!(mc, again);
        assert!(monte_carlo_mean_fidelities(&kraus, 999, &rng, Execution::Sequential).is_err());
    }

    #[test]
    fn monte_carlo_identity_is_exact() {
        let kraus = kraus_set(params_from_alpha(0.0).unwrap());
        let mc =
            monte_carlo_mean_fidelities(&kraus, 5000, &RandomSource::new(2), Execution::default())
                .unwrap();
        assert_abs_diff_eq!(mc.f_op, 1.0, epsilon = 1e-12);
        assert!(mc.stderr.unwrap().op < 1e-12);
    }

    #[test]
    fn chan_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|x| whole.push(*x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|x| a.push(*x));
        xs[313..].iter().for_each(|x| b.push(*x));
        let m = a.merge(b);
        assert_abs_diff_eq!(m.mean, whole.mean, epsilon = 1e-12);
        assert_abs_diff_eq!(m.m2, whole.m2, epsilon = 1e-9);
    }
}
