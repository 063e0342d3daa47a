use pnbm_core::analysis::{
    mean_fidelities_closed, mean_fidelities_from_kraus, monte_carlo_mean_fidelities,
    tradeoff_residual,
};
use pnbm_core::ancilla::{params_from_alpha, AncillaParams};
use pnbm_core::cv::{covariance_conditioning_check, cv_fidelities, CvConfig};
use pnbm_core::pnbm::kraus_set;
use pnbm_core::qsim::{RandomSource, C64};
use pnbm_core::sweep::{linspace, max_residual, sweep_qubit};
use pnbm_core::teleport::{pqt_dominance_margin, run_pqt, InputQubit};
use pnbm_core::Result;

use crate::output::fmt_g;
use crate::{CmdResult, Failure, GlobalArgs};

struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.limit
    }
}

fn checks(g: &GlobalArgs) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = RandomSource::new(g.seed);
    let ket0 = InputQubit::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))?;

    let sym = run_pqt(&ket0, AncillaParams::symmetric(), None, &mut rng)?;
    out.push(Check {
        name: "symmetric point F_A = F_B = 5/6",
        value: (sym.fidelities.input - 5.0 / 6.0)
            .abs()
            .max((sym.fidelities.bob - 5.0 / 6.0).abs()),
        limit: 1e-10,
    });

    let full = run_pqt(&ket0, params_from_alpha(1.0)?, None, &mut rng)?;
    let none = run_pqt(&ket0, params_from_alpha(0.0)?, None, &mut rng)?;
    out.push(Check {
        name: "endpoints",
        value: [
            full.fidelities.bob - 1.0,
            full.fidelities.input - 0.5,
            none.fidelities.input - 1.0,
            none.fidelities.bob - 0.5,
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max),
        limit: 1e-12,
    });

    let rows = sweep_qubit(&linspace(0.0, 1.0, 101)?, &rng, g.execution())?;
    out.push(Check {
        name: "cloning bound saturated",
        value: max_residual(&rows),
        limit: 1e-10,
    });

    let mut worst: f64 = 0.0;
    for alpha in linspace(0.0, 1.0, 101)? {
        let p = params_from_alpha(alpha)?;
        let closed = mean_fidelities_closed(p);
        let kraus = mean_fidelities_from_kraus(&kraus_set(p))?;
        worst = worst
            .max((closed.f_op - kraus.f_op).abs())
            .max((closed.f_est - kraus.f_est).abs())
            .max(tradeoff_residual(&closed)?.abs());
    }
    out.push(Check {
        name: "measurement fidelities and trade-off",
        value: worst,
        limit: 1e-10,
    });

    let mc = monte_carlo_mean_fidelities(
        &kraus_set(params_from_alpha(1.0)?),
        20_000,
        &rng,
        g.execution(),
    )?;
    let se = mc.stderr.expect("Monte Carlo reports errors");
    out.push(Check {
        name: "Monte Carlo at alpha = 1 (standard errors)",
        value: ((mc.f_op - 0.4).abs() / se.op).max((mc.f_est - 0.4).abs() / se.est),
        limit: 3.0,
    });

    let mut cv_dev: f64 = 0.0;
    for kappa in [0.5, 1.0, 2.0] {
        for r in [0.0, 0.5, 1.0, 2.0, 20.0] {
            cv_dev = cv_dev.max(cv_fidelities(CvConfig::new(kappa, r)?)?.deviation());
        }
    }
    out.push(Check {
        name: "CV fidelities",
        value: cv_dev,
        limit: 1e-10,
    });

    let oracle = [(1.0, 0.0), (2.0, 0.5)]
        .iter()
        .map(|&(k, r)| Ok(covariance_conditioning_check(CvConfig::new(k, r)?)?.max_deviation()))
        .collect::<Result<Vec<f64>>>()?;
    out.push(Check {
        name: "CV covariance oracle",
        value: oracle.iter().cloned().fold(0.0, f64::max),
        limit: 1e-9,
    });

    let (margin, _) = pqt_dominance_margin(1001);
    out.push(Check {
        name: "entanglement-assisted curve dominates",
        value: -margin,
        limit: 1e-12,
    });
    Ok(out)
}

pub fn run(g: &GlobalArgs) -> CmdResult {
    let results = checks(g)?;
    let mut failed = Vec::new();
    for c in &results {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!(
            "{tag} {}: {} (limit {})",
            c.name,
            fmt_g(c.value),
            fmt_g(c.limit)
        );
        if !c.passed() {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(failed.join(", ")))
    }
}
