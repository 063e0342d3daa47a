use std::fs;
use std::path::Path;

use anyhow::Context;
use pnbm_core::ancilla::params_from_alpha;
use pnbm_core::qsim::RandomSource;
use pnbm_core::sweep::{self, max_residual};
use pnbm_core::teleport::{
    self, pct_bound_curve, pqt_bound_curve, pqt_dominance_margin, InputQubit, TeleportOutcomeRecord,
};
use serde::Serialize;

use crate::output::{emit, fmt_g, render, Format, Table, TableMeta};
use crate::{
    BoundsArgs, CmdResult, CvArgs, Failure, GlobalArgs, GridArgs, MeasurementArgs, TeleportArgs,
};

fn check(name: &str, residual: f64, tol: f64) -> CmdResult {
    if residual.is_finite() && residual <= tol {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "{name}: max residual {} exceeds {}",
            fmt_g(residual),
            fmt_g(tol)
        )))
    }
}

#[derive(Serialize)]
struct TeleportReport<'a> {
    input_normalized: bool,
    seed: u64,
    #[serde(flatten)]
    record: &'a TeleportOutcomeRecord,
}

#[derive(Serialize)]
struct TeleportSummary {
    alpha: f64,
    beta: f64,
    outcome: String,
    probability: f64,
    f_a: f64,
    f_b: f64,
    f_pair: f64,
    f_pair_perp: f64,
    f_a_closed: f64,
    f_b_closed: f64,
    max_delta: f64,
}

impl Table for TeleportSummary {
    const HEADER: &'static [&'static str] = &[
        "alpha",
        "beta",
        "outcome",
        "probability",
        "f_a",
        "f_b",
        "f_pair",
        "f_pair_perp",
        "f_a_closed",
        "f_b_closed",
        "max_delta",
    ];

    fn record(&self) -> Vec<String> {
        let mut out = vec![fmt_g(self.alpha), fmt_g(self.beta), self.outcome.clone()];
        out.extend(
            [
                self.probability,
                self.f_a,
                self.f_b,
                self.f_pair,
                self.f_pair_perp,
                self.f_a_closed,
                self.f_b_closed,
                self.max_delta,
            ]
            .map(fmt_g),
        );
        out
    }
}

pub fn teleport(g: &GlobalArgs, a: &TeleportArgs) -> CmdResult {
    let params = params_from_alpha(a.alpha)?;
    let (input, normalized) = InputQubit::normalized(a.state_a, a.state_b)?;
    if normalized {
        eprintln!("pnbm: input amplitudes normalized");
    }
    let mut rng = RandomSource::new(g.seed);
    let rec = teleport::run_pqt(&input, params, a.outcome, &mut rng)?;
    let bytes = match g.format {
        Format::Json => {
            let report = TeleportReport {
                input_normalized: normalized,
                seed: g.seed,
                record: &rec,
            };
            let mut v = serde_json::to_vec_pretty(&report).map_err(anyhow::Error::from)?;
            v.push(b'\n');
            v
        }
        Format::Csv => {
            let row = TeleportSummary {
                alpha: params.alpha(),
                beta: params.beta(),
                outcome: rec.outcome.to_string(),
                probability: rec.probability,
                f_a: rec.fidelities.input,
                f_b: rec.fidelities.bob,
                f_pair: rec.fidelities.pair,
                f_pair_perp: rec.fidelities.pair_perp,
                f_a_closed: rec.closed_form.input,
                f_b_closed: rec.closed_form.bob,
                max_delta: rec.max_delta,
            };
            let meta = TableMeta {
                name: "teleport",
                seed: Some(g.seed),
                max_residual: Some(rec.max_delta),
                tolerance: Some(g.tol),
            };
            render(&[row], &meta, Format::Csv)?
        }
    };
    emit(&bytes, g.out.as_deref())?;
    check("teleport", rec.max_delta, g.tol)
}

fn write_table<R: Table>(
    g: &GlobalArgs,
    name: &str,
    rows: &[R],
    residual: f64,
    seed: Option<u64>,
) -> CmdResult {
    let meta = TableMeta {
        name,
        seed,
        max_residual: Some(residual),
        tolerance: Some(g.tol),
    };
    emit(&render(rows, &meta, g.format)?, g.out.as_deref())?;
    check(name, residual, g.tol)
}

pub fn sweep_qubit(g: &GlobalArgs, a: &GridArgs) -> CmdResult {
    let rows = sweep::sweep_qubit(&a.grid()?, &RandomSource::new(g.seed), g.execution())?;
    write_table(g, "sweep-qubit", &rows, max_residual(&rows), Some(g.seed))
}

pub fn sweep_measurement(g: &GlobalArgs, a: &MeasurementArgs) -> CmdResult {
    let rows = sweep::sweep_measurement(
        &a.grid.grid()?,
        a.mc_samples,
        &RandomSource::new(g.seed),
        g.execution(),
    )?;
    let outside = rows.iter().filter(|r| !r.mc_within(3.0)).count();
    if outside > 0 {
        eprintln!(
            "pnbm: {outside} of {} rows have a Monte-Carlo mean outside 3 standard errors",
            rows.len()
        );
    }
    write_table(
        g,
        "sweep-measurement",
        &rows,
        max_residual(&rows),
        Some(g.seed),
    )
}

pub fn sweep_cv(g: &GlobalArgs, a: &CvArgs) -> CmdResult {
    let rows = sweep::sweep_cv(&a.kappa, &a.r, g.execution())?;
    write_table(g, "sweep-cv", &rows, max_residual(&rows), None)
}

pub fn bounds(g: &GlobalArgs, a: &BoundsArgs) -> CmdResult {
    let pct = pct_bound_curve(a.points)?;
    let pqt = pqt_bound_curve(a.points)?;
    let dir = g.out.as_deref().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let ext = match g.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    for (name, curve) in [("pct_curve", &pct), ("pqt_curve", &pqt)] {
        let meta = TableMeta {
            name,
            seed: None,
            max_residual: None,
            tolerance: None,
        };
        emit(
            &render(&curve.points, &meta, g.format)?,
            Some(&dir.join(format!("{name}.{ext}"))),
        )?;
    }
    let (margin, at) = pqt_dominance_margin(a.points);
    eprintln!(
        "pnbm: smallest entanglement advantage in F_B {} at F_A = {}",
        fmt_g(margin),
        fmt_g(at)
    );
    check("bounds", (-margin).max(0.0), g.tol)
}
