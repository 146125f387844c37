//! Plain-text and JSON reports, and plot-data exports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use safefirst_core::{
    EvaluationReport, FrequencyTable, OverlapDiagnostics, RiskCriterion, SeededRng,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub n_training: usize,
    pub n_used_optimal: usize,
    pub n_used_non_optimal: Option<usize>,
    pub n_new: usize,
    pub n_used_new_optimal: usize,
    pub n_used_new_non_optimal: Option<usize>,
}

impl DataInfo {
    pub fn training_only(n: usize) -> Self {
        Self {
            n_training: n,
            n_used_optimal: n,
            n_used_non_optimal: None,
            n_new: 0,
            n_used_new_optimal: 0,
            n_used_new_non_optimal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyInfo {
    pub target: String,
    pub features: Vec<String>,
    pub policy_variable: String,
    pub n_actions: usize,
    pub actions: Vec<usize>,
}

/// Out-of-sample results; always empty since only training data is scored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewDataResults {
    pub value_non_optimal: Option<f64>,
    pub value_optimal: Option<f64>,
}

/// Everything in one criterion's report; the JSON file is this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub data: DataInfo,
    pub policy: PolicyInfo,
    pub evaluation: EvaluationReport<f64>,
    /// Value of a user-supplied non-optimal policy; not produced.
    pub value_non_optimal: Option<f64>,
    pub new_data: NewDataResults,
    pub overlap: OverlapDiagnostics<f64>,
}

impl ReportDocument {
    /// File stem: `neutral`, `linear`, `quadratic` or `safety_first`.
    pub fn stem(&self) -> &'static str {
        self.evaluation.criterion.name()
    }
}

pub fn criterion_label(c: &RiskCriterion<f64>) -> String {
    match c {
        RiskCriterion::Neutral => "neutral (mu)".into(),
        RiskCriterion::LinearRa => "linear (mu/sigma)".into(),
        RiskCriterion::QuadraticRa => "quadratic (mu/sigma^2)".into(),
        RiskCriterion::SafetyFirst { y_star, family } => {
            format!("safety_first (Pr(Y >= {y_star}), {} family)", family.name())
        }
    }
}

/// `31866` -> `31,866`.
pub fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn opt_count(v: Option<usize>) -> String {
    v.map_or_else(|| ".".into(), thousands)
}

fn opt_value(v: Option<f64>) -> String {
    v.map_or_else(|| ".".into(), |x| format!("{x:.4}"))
}

const WIDTH: usize = 58;

fn section(out: &mut String, title: &str) {
    let rule = "-".repeat(WIDTH + 16);
    let _ = write!(out, "{rule}\n{title}\n{rule}\n");
}

fn line(out: &mut String, label: &str, sep: char, value: &str) {
    let _ = writeln!(out, "{label:<WIDTH$} {sep} {value}");
}

fn frequency_lines(out: &mut String, table: &FrequencyTable) {
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:<10} Freq. = {:>10}   Percent = {:>6.2}",
            format!("Action {}", r.action),
            thousands(r.count),
            r.percent
        );
    }
    let _ = writeln!(
        out,
        "{:<10} Freq. = {:>10}   Percent = {:>6.2}",
        "Total",
        thousands(table.total),
        table.total_percent()
    );
}

pub fn render_text(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let e = &doc.evaluation;
    let _ = writeln!(out, "Criterion: {}\n", criterion_label(&e.criterion));

    section(&mut out, "Data Information");
    let d = &doc.data;
    line(
        &mut out,
        "Number of training observations",
        '=',
        &thousands(d.n_training),
    );
    line(
        &mut out,
        "Number of used training observations (optimal policy)",
        '=',
        &thousands(d.n_used_optimal),
    );
    line(
        &mut out,
        "Number of used training observations (non-optimal policy)",
        '=',
        &opt_count(d.n_used_non_optimal),
    );
    line(
        &mut out,
        "Number of new observations",
        '=',
        &thousands(d.n_new),
    );
    line(
        &mut out,
        "Number of used new observations (optimal policy)",
        '=',
        &thousands(d.n_used_new_optimal),
    );
    line(
        &mut out,
        "Number of used new observations (non-optimal policy)",
        '=',
        &opt_count(d.n_used_new_non_optimal),
    );

    section(&mut out, "Policy Information");
    let p = &doc.policy;
    line(&mut out, "Target variable", ':', &p.target);
    line(&mut out, "Features", ':', &p.features.join(", "));
    line(&mut out, "Policy variable", ':', &p.policy_variable);
    line(&mut out, "Number of actions", '=', &p.n_actions.to_string());
    let actions: Vec<String> = p.actions.iter().map(usize::to_string).collect();
    line(
        &mut out,
        "Actions",
        '=',
        &format!("{{{}}}", actions.join(", ")),
    );

    section(&mut out, "Frequencies of the actions (training data)");
    frequency_lines(&mut out, &e.action_frequencies);

    section(&mut out, "Training Data Results");
    line(
        &mut out,
        "Value-function of the policy (training)",
        '=',
        &format!("{:.4}", e.value_actual),
    );
    line(
        &mut out,
        "Value-function of the non-optimal policy",
        '=',
        &opt_value(doc.value_non_optimal),
    );
    line(
        &mut out,
        "Value-function of the optimal policy (training)",
        '=',
        &format!("{:.4}", e.value_optimal),
    );
    line(
        &mut out,
        "Rate of optimal policy matches",
        '=',
        &format!("{:.4}", e.match_rate),
    );
    line(
        &mut out,
        "Regret vs. risk-neutral first-best (neutral metric)",
        '=',
        &format!("{:.4}", e.regret_vs_first_best),
    );

    section(&mut out, "New Data Results");
    line(
        &mut out,
        "Value-function of the non-optimal policy (new)",
        '=',
        &opt_value(doc.new_data.value_non_optimal),
    );
    line(
        &mut out,
        "Value-function of the optimal policy (new)",
        '=',
        &opt_value(doc.new_data.value_optimal),
    );

    section(
        &mut out,
        "Frequencies of the optimal actions (training data)",
    );
    frequency_lines(&mut out, &e.optimal_action_frequencies);
    line(
        &mut out,
        "Units with tied best actions (smallest label chosen)",
        '=',
        &thousands(e.tie_count),
    );

    section(
        &mut out,
        "Overlap diagnostics (multinomial logit propensity)",
    );
    let o = &doc.overlap;
    line(
        &mut out,
        "Propensity model converged",
        ':',
        if o.converged { "yes" } else { "no" },
    );
    line(
        &mut out,
        "Overlap threshold",
        '=',
        &format!("{}", o.overlap_threshold),
    );
    line(
        &mut out,
        "Units with a propensity below the threshold",
        '=',
        &thousands(o.violation_count),
    );
    let _ = write!(out, "{:<8} {:>8} ", "Action", "min");
    if let Some(first) = o.per_action.first() {
        for q in &first.quantiles {
            let _ = write!(out, "{:>8} ", format!("p{}", (q.level * 100.0).round()));
        }
    }
    let _ = writeln!(out, "{:>8} {:>8}", "max", "mean");
    for a in &o.per_action {
        let _ = write!(out, "{:<8} {:>8.4} ", a.action, a.min);
        for q in &a.quantiles {
            let _ = write!(out, "{:>8.4} ", q.value);
        }
        let _ = writeln!(out, "{:>8.4} {:>8.4}", a.max, a.mean);
    }
    out
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T, path: &Path) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Json {
            path: path.to_path_buf(),
            source: e,
        })
}

/// Writes `<criterion>.report.txt` and `<criterion>.report.json`.
pub fn write_report(dir: &Path, doc: &ReportDocument) -> Result<[PathBuf; 2]> {
    let txt = dir.join(format!("{}.report.txt", doc.stem()));
    let json = dir.join(format!("{}.report.json", doc.stem()));
    write_bytes(&txt, render_text(doc).as_bytes())?;
    write_bytes(&json, to_json(doc, &json)?.as_bytes())?;
    Ok([txt, json])
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// One unit of the actual-versus-optimal comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub unit_id: String,
    pub actual_action: usize,
    pub optimal_action: usize,
    pub actual_expected_score: f64,
    pub optimal_expected_score: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        kind => CliError::Data(format!("{}: {kind:?}", path.display())),
    })?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `<stem>.plotdata.csv` and, when `fraction < 1`, a random subset
/// of `round(fraction * n)` rows (at least one) in
/// `<stem>.plotdata.sample.csv`, drawn from substream `stream` of `seed`.
pub fn export_plot_data(
    dir: &Path,
    stem: &str,
    rows: &[PlotRow],
    fraction: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<PathBuf>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::Config(format!(
            "plot fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let full = dir.join(format!("{stem}.plotdata.csv"));
    write_rows(&full, rows)?;
    let mut written = vec![full];
    if fraction < 1.0 && !rows.is_empty() {
        let k = ((fraction * rows.len() as f64).round() as usize).clamp(1, rows.len());
        let picked: Vec<&PlotRow> = SeededRng::substream(seed, stream)
            .sample_indices(rows.len(), k)
            .into_iter()
            .map(|i| &rows[i])
            .collect();
        let sample = dir.join(format!("{stem}.plotdata.sample.csv"));
        write_rows(&sample, &picked)?;
        written.push(sample);
    }
    Ok(written)
}
