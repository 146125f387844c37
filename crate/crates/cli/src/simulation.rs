//! The two-arm Monte Carlo experiment and its output files.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use safefirst_core::{draw_replication, oracle_assignment, run_simulation, MonteCarloSummary};
use serde::Serialize;

use crate::config::SimulationConfig;
use crate::error::{CliError, Result};
use crate::report::{to_json, write_bytes};

pub const SUMMARY_JSON: &str = "simulation.json";
pub const SUMMARY_TXT: &str = "simulation.txt";
pub const PLOT_FILE: &str = "simulation.plotdata.csv";

/// One unit of the exported replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationPlotRow {
    pub unit: usize,
    pub y0: f64,
    pub y1: f64,
    pub rn_outcome: f64,
    pub ra_outcome: f64,
    pub oracle_outcome: f64,
    /// `worst` when the treated outcome fell below its mean, else `best`.
    pub scenario: &'static str,
}

pub fn render_summary(s: &MonteCarloSummary<f64>) -> String {
    let p = &s.params;
    let mut out = String::new();
    let _ = writeln!(out, "Two-arm simulation");
    let _ = writeln!(
        out,
        "mu0 = {}, mu1 = {}, sigma0 = {}, sigma1 = {}, n = {}, reps = {}, seed = {}",
        p.mu0, p.mu1, p.sigma0, p.sigma1, p.n, s.reps, p.seed
    );
    let _ = writeln!(
        out,
        "mu0/sigma0 = {:.4}, mu1/sigma1 = {:.4}",
        p.mu0 / p.sigma0,
        p.mu1 / p.sigma1
    );
    let _ = writeln!(
        out,
        "RN rule action = {}, RA rule action = {}",
        s.rn_action, s.ra_action
    );
    let _ = writeln!(
        out,
        "{:<8} {:>12} {:>12} {:>12}",
        "Policy", "Mean", "Std. err.", "Expected"
    );
    for (name, est, exact) in [
        ("RN", s.rn, s.closed_form_rn_welfare),
        ("RA", s.ra, s.closed_form_ra_welfare),
        ("Oracle", s.oracle, s.closed_form_oracle_welfare),
    ] {
        let _ = writeln!(
            out,
            "{name:<8} {:>12.4} {:>12.4} {:>12.4}",
            est.mean, est.std_error, exact
        );
    }
    let worst: usize = s.replications.iter().map(|r| r.worst_case_treated).sum();
    let _ = writeln!(
        out,
        "Treated units with Y1 below mu1 under RN: {:.2}%",
        100.0 * worst as f64 / (s.reps * p.n) as f64
    );
    out
}

pub fn plot_rows(
    config: &SimulationConfig,
    summary: &MonteCarloSummary<f64>,
) -> Result<Vec<SimulationPlotRow>> {
    let params = config.params()?;
    let sample = draw_replication(&params, config.plot_replication)?;
    let oracle = oracle_assignment(&sample);
    let arm = |a: usize, i: usize| if a == 1 { sample.y1[i] } else { sample.y0[i] };
    Ok((0..sample.len())
        .map(|i| SimulationPlotRow {
            unit: i,
            y0: sample.y0[i],
            y1: sample.y1[i],
            rn_outcome: arm(summary.rn_action, i),
            ra_outcome: arm(summary.ra_action, i),
            oracle_outcome: arm(oracle.actions[i], i),
            scenario: if sample.y1[i] < params.mu1 {
                "worst"
            } else {
                "best"
            },
        })
        .collect())
}

/// Runs the experiment and writes the JSON summary, its text rendering and
/// the per-unit draw of one replication.
pub fn run_simulation_command(
    config: &SimulationConfig,
) -> Result<(MonteCarloSummary<f64>, Vec<PathBuf>)> {
    let params = config.params()?;
    let summary = run_simulation(&params, config.reps)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let json = dir.join(SUMMARY_JSON);
    let txt = dir.join(SUMMARY_TXT);
    let plot = dir.join(PLOT_FILE);
    write_bytes(&json, to_json(&summary, &json)?.as_bytes())?;
    write_bytes(&txt, render_summary(&summary).as_bytes())?;
    let mut w = csv::Writer::from_path(&plot)?;
    for r in plot_rows(config, &summary)? {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(&plot, e))?;
    Ok((summary, vec![json, txt, plot]))
}
