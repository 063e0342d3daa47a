//! Parameter sweeps over the qubit, measurement and CV families. Rows are
//! computed independently (row `i` draws from `rng.derive(i)`) and returned
//! in grid order.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    mean_fidelities_closed, mean_fidelities_from_kraus, monte_carlo_mean_fidelities,
    tradeoff_residual,
};
use crate::ancilla::params_from_alpha;
use crate::cv::{cv_fidelities, CvConfig};
use crate::exec::Execution;
use crate::labels::INPUT;
use crate::pnbm::{kraus_set, OutcomeLabel};
use crate::qsim::{haar_random_on, RandomSource};
use crate::teleport::{cloning_residual, run_pqt, InputQubit};
use crate::{Error, Result};

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::TooFew {
            what: "grid points",
            min: 2,
            got: count,
        });
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                stop
            } else {
                start + step * i as f64
            }
        })
        .collect())
}

/// Rows of a sweep, each exposing the residual checked against tolerance.
pub trait SweepRow {
    fn residual(&self) -> f64;
}

pub fn max_residual<R: SweepRow>(rows: &[R]) -> f64 {
    rows.iter().map(|r| r.residual().abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitRow {
    pub alpha: f64,
    pub beta: f64,
    pub outcome: OutcomeLabel,
    pub f_a_sim: f64,
    pub f_b_sim: f64,
    pub f_pair_sim: f64,
    pub f_a_closed: f64,
    pub f_b_closed: f64,
    pub f_pair_closed: f64,
    pub max_delta: f64,
    pub cloning_residual: f64,
}

impl SweepRow for QubitRow {
    fn residual(&self) -> f64 {
        self.cloning_residual.abs().max(self.max_delta)
    }
}

/// Teleport a Haar-random input at every `α`, with the outcome sampled.
pub fn sweep_qubit(alphas: &[f64], rng: &RandomSource, exec: Execution) -> Result<Vec<QubitRow>> {
    exec.try_map_indexed(alphas.len(), |i| {
        let mut local = rng.derive(i as u64);
        let params = params_from_alpha(alphas[i])?;
        let input = InputQubit::from_state(&haar_random_on(&[INPUT], &mut local)?)?;
        let rec = run_pqt(&input, params, None, &mut local)?;
        Ok(QubitRow {
            alpha: params.alpha(),
            beta: params.beta(),
            outcome: rec.outcome,
            f_a_sim: rec.fidelities.input,
            f_b_sim: rec.fidelities.bob,
            f_pair_sim: rec.fidelities.pair,
            f_a_closed: rec.closed_form.input,
            f_b_closed: rec.closed_form.bob,
            f_pair_closed: rec.closed_form.pair,
            max_delta: rec.max_delta,
            cloning_residual: cloning_residual(rec.fidelities.input, rec.fidelities.bob),
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub alpha: f64,
    pub beta: f64,
    pub f_op_closed: f64,
    pub f_est_closed: f64,
    pub f_op_kraus: f64,
    pub f_est_kraus: f64,
    pub f_op_mc: f64,
    pub f_est_mc: f64,
    pub mc_stderr_op: f64,
    pub mc_stderr_est: f64,
    pub tradeoff_residual: f64,
}

impl MeasurementRow {
    /// Whether both Monte-Carlo means lie within `sigmas` standard errors of
    /// the closed forms. The `1e-12` floor covers rows where every sample is
    /// identical and the standard error vanishes.
    pub fn mc_within(&self, sigmas: f64) -> bool {
        let ok = |d: f64, se: f64| d.abs() <= sigmas * se + 1e-12;
        ok(self.f_op_mc - self.f_op_closed, self.mc_stderr_op)
            && ok(self.f_est_mc - self.f_est_closed, self.mc_stderr_est)
    }
}

impl SweepRow for MeasurementRow {
    fn residual(&self) -> f64 {
        let formula = (self.f_op_closed - self.f_op_kraus)
            .abs()
            .max((self.f_est_closed - self.f_est_kraus).abs());
        self.tradeoff_residual.abs().max(formula)
    }
}

pub fn sweep_measurement(
    alphas: &[f64],
    mc_samples: usize,
    rng: &RandomSource,
    exec: Execution,
) -> Result<Vec<MeasurementRow>> {
    exec.try_map_indexed(alphas.len(), |i| {
        let params = params_from_alpha(alphas[i])?;
        let kraus = kraus_set(params);
        let closed = mean_fidelities_closed(params);
        let formula = mean_fidelities_from_kraus(&kraus)?;
        let mc = monte_carlo_mean_fidelities(&kraus, mc_samples, &rng.derive(i as u64), exec)?;
        let se = mc.stderr.expect("Monte Carlo reports errors");
        Ok(MeasurementRow {
            alpha: params.alpha(),
            beta: params.beta(),
            f_op_closed: closed.f_op,
            f_est_closed: closed.f_est,
            f_op_kraus: formula.f_op,
            f_est_kraus: formula.f_est,
            f_op_mc: mc.f_op,
            f_est_mc: mc.f_est,
            mc_stderr_op: se.op,
            mc_stderr_est: se.est,
            tradeoff_residual: tradeoff_residual(&closed)?,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub kappa: f64,
    pub gamma: f64,
    pub r: f64,
    pub f_a_sim: f64,
    pub f_b_sim: f64,
    pub f_a_closed: f64,
    pub f_b_closed: f64,
    #[serde(rename = "f_b_optimal_eq12")]
    pub f_b_optimal: f64,
    /// Largest `|simulated − closed form|`.
    pub deviation: f64,
}

impl SweepRow for CvRow {
    fn residual(&self) -> f64 {
        self.deviation
    }
}

/// Every `(κ, r)` pair, `κ` varying slowest.
pub fn sweep_cv(kappas: &[f64], rs: &[f64], exec: Execution) -> Result<Vec<CvRow>> {
    let n = kappas.len() * rs.len();
    exec.try_map_indexed(n, |i| {
        let config = CvConfig::new(kappas[i / rs.len()], rs[i % rs.len()])?;
        let f = cv_fidelities(config)?;
        Ok(CvRow {
            kappa: config.kappa(),
            gamma: config.gamma(),
            r: config.r(),
            f_a_sim: f.simulated.f_a,
            f_b_sim: f.simulated.f_b,
            f_a_closed: f.closed_form.f_a,
            f_b_closed: f.closed_form.f_b,
            f_b_optimal: f.optimal.f_b,
            deviation: f.deviation(),
        })
    })
}
