use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use pnbm_core::pnbm::OutcomeLabel;
use pnbm_core::sweep::{CvRow, MeasurementRow, QubitRow};
use pnbm_core::teleport::BoundPoint;
use serde::Serialize;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `%.12g`.
pub fn fmt_g(x: f64) -> String {
    fmt_sig(x, 12)
}

pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A row that can be written as CSV with a fixed header.
pub trait Table: Serialize {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

impl Table for QubitRow {
    const HEADER: &'static [&'static str] = &[
        "alpha",
        "beta",
        "outcome",
        "f_a_sim",
        "f_b_sim",
        "f_pair_sim",
        "f_a_closed",
        "f_b_closed",
        "f_pair_closed",
        "max_delta",
        "cloning_residual",
    ];

    fn record(&self) -> Vec<String> {
        let mut out = vec![fmt_g(self.alpha), fmt_g(self.beta), outcome(self.outcome)];
        out.extend(
            [
                self.f_a_sim,
                self.f_b_sim,
                self.f_pair_sim,
                self.f_a_closed,
                self.f_b_closed,
                self.f_pair_closed,
                self.max_delta,
                self.cloning_residual,
            ]
            .map(fmt_g),
        );
        out
    }
}

fn outcome(o: OutcomeLabel) -> String {
    o.to_string()
}

impl Table for MeasurementRow {
    const HEADER: &'static [&'static str] = &[
        "alpha",
        "beta",
        "f_op_closed",
        "f_est_closed",
        "f_op_kraus",
        "f_est_kraus",
        "f_op_mc",
        "f_est_mc",
        "mc_stderr_op",
        "mc_stderr_est",
        "tradeoff_residual",
    ];

    fn record(&self) -> Vec<String> {
        [
            self.alpha,
            self.beta,
            self.f_op_closed,
            self.f_est_closed,
            self.f_op_kraus,
            self.f_est_kraus,
            self.f_op_mc,
            self.f_est_mc,
            self.mc_stderr_op,
            self.mc_stderr_est,
            self.tradeoff_residual,
        ]
        .map(fmt_g)
        .to_vec()
    }
}

impl Table for CvRow {
    const HEADER: &'static [&'static str] = &[
        "kappa",
        "gamma",
        "r",
        "f_a_sim",
        "f_b_sim",
        "f_a_closed",
        "f_b_closed",
        "f_b_optimal_eq12",
        "deviation",
    ];

    fn record(&self) -> Vec<String> {
        [
            self.kappa,
            self.gamma,
            self.r,
            self.f_a_sim,
            self.f_b_sim,
            self.f_a_closed,
            self.f_b_closed,
            self.f_b_optimal,
            self.deviation,
        ]
        .map(fmt_g)
        .to_vec()
    }
}

impl Table for BoundPoint {
    const HEADER: &'static [&'static str] = &["f_a", "f_b"];

    fn record(&self) -> Vec<String> {
        vec![fmt_g(self.f_a), fmt_g(self.f_b)]
    }
}

/// Everything about a table except its rows.
pub struct TableMeta<'a> {
    pub name: &'a str,
    pub seed: Option<u64>,
    pub max_residual: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Serialize)]
struct JsonTable<'a, R> {
    table: &'a str,
    format_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_residual: Option<f64>,
    rows: &'a [R],
}

pub fn render<R: Table>(rows: &[R], meta: &TableMeta, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let doc = JsonTable {
                table: meta.name,
                format_version: FORMAT_VERSION,
                seed: meta.seed,
                tolerance: meta.tolerance,
                max_residual: meta.max_residual,
                rows,
            };
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            write!(out, "# pnbm {} v{}", meta.name, FORMAT_VERSION)?;
            if let Some(seed) = meta.seed {
                write!(out, " seed={seed}")?;
            }
            writeln!(out)?;
            {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(R::HEADER)?;
                for row in rows {
                    w.write_record(row.record())?;
                }
                w.flush()?;
            }
            if let Some(res) = meta.max_residual {
                write!(out, "# max_residual={}", fmt_g(res))?;
                if let Some(tol) = meta.tolerance {
                    write!(out, " tol={}", fmt_g(tol))?;
                }
                writeln!(out)?;
            }
            Ok(out)
        }
    }
}

/// Write to `path`, or stdout when absent.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
