//! Fit, assign and evaluate every requested criterion on one dataset.

use std::fs;
use std::path::{Path, PathBuf};

use safefirst_core::{
    assign_policy, criterion_score, evaluate_policy, fit_moments, fit_propensity, overlap_report,
    Dataset, MomentSource, PolicyAssignment, PrecomputedMoments, RiskCriterion,
};

use crate::config::AnalysisConfig;
use crate::error::{CliError, Result};
use crate::ingest::load_csv;
use crate::report::{
    export_plot_data, write_report, DataInfo, NewDataResults, PlotRow, PolicyInfo, ReportDocument,
};

/// In-memory results of one criterion, before anything is written.
#[derive(Debug, Clone)]
pub struct CriterionRun {
    pub document: ReportDocument,
    pub optimal: PolicyAssignment<f64>,
    pub plot_rows: Vec<PlotRow>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub runs: Vec<CriterionRun>,
    pub files: Vec<PathBuf>,
}

fn plot_rows<M: MomentSource<f64>>(
    model: &M,
    data: &Dataset<f64>,
    actual: &PolicyAssignment<f64>,
    optimal: &PolicyAssignment<f64>,
    criterion: &RiskCriterion<f64>,
) -> Result<Vec<PlotRow>> {
    let score = |x: &[f64], t: usize| -> Result<f64> {
        Ok(criterion_score(&model.predict_moments(x, t)?, criterion).score)
    };
    data.features()
        .rows()
        .enumerate()
        .map(|(i, x)| {
            Ok(PlotRow {
                unit_id: data.unit_ids()[i].clone(),
                actual_action: actual.actions[i],
                optimal_action: optimal.actions[i],
                actual_expected_score: score(x, actual.actions[i])?,
                optimal_expected_score: score(x, optimal.actions[i])?,
            })
        })
        .collect()
}

/// Runs the pipeline on an already loaded dataset without touching disk.
pub fn analyse(config: &AnalysisConfig, data: &Dataset<f64>) -> Result<Vec<CriterionRun>> {
    let criteria = config.risk_criteria()?;
    log::info!("fitting moment models on {} units", data.len());
    let fitted = fit_moments(data, &config.regressor())?;
    let model = PrecomputedMoments::new(&fitted, data.features())?;
    let floored: usize = (0..data.len())
        .flat_map(|i| data.action_set().iter().map(move |t| (i, t)))
        .filter(|&(i, t)| {
            model
                .predict_moments(data.features().row(i), t)
                .map(|m| m.floored)
                .unwrap_or(false)
        })
        .count();
    if floored > 0 {
        log::warn!("{floored} unit-action variances were clamped at the floor");
    }
    let first_best = assign_policy(&model, data.features(), &RiskCriterion::Neutral)?;

    log::info!("fitting propensity model");
    let propensity = fit_propensity(data)?;
    let overlap = overlap_report(&propensity, data, config.overlap_threshold)?;

    let policy = PolicyInfo {
        target: config.outcome_column.clone(),
        features: data.feature_names().to_vec(),
        policy_variable: config.treatment_column.clone(),
        n_actions: data.action_set().len(),
        actions: data.action_set().labels(),
    };
    criteria
        .iter()
        .map(|c| {
            log::info!("assigning under the {} criterion", c.name());
            let optimal = assign_policy(&model, data.features(), c)?;
            let actual = PolicyAssignment::actual(data, c.clone());
            let evaluation =
                evaluate_policy(&model, data.features(), &actual, &optimal, &first_best)?;
            let plot_rows = plot_rows(&model, data, &actual, &optimal, c)?;
            Ok(CriterionRun {
                document: ReportDocument {
                    data: DataInfo::training_only(data.len()),
                    policy: policy.clone(),
                    evaluation,
                    value_non_optimal: None,
                    new_data: NewDataResults::default(),
                    overlap: overlap.clone(),
                },
                optimal,
                plot_rows,
            })
        })
        .collect()
}

fn write_outputs(
    config: &AnalysisConfig,
    runs: &[CriterionRun],
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let dir = &config.output_dir;
    for (i, run) in runs.iter().enumerate() {
        written.extend(write_report(dir, &run.document)?);
        written.extend(export_plot_data(
            dir,
            run.document.stem(),
            &run.plot_rows,
            config.plot_fraction,
            config.seed,
            i as u64,
        )?);
    }
    Ok(())
}

fn remove_all(files: &[PathBuf]) {
    for f in files {
        if let Err(e) = fs::remove_file(f) {
            log::warn!("could not remove partial output {}: {e}", f.display());
        }
    }
}

/// Loads the input, analyses every requested criterion and writes the
/// reports and plot data to `config.output_dir`. On failure no output of
/// this run is left behind.
pub fn run_analysis(config: &AnalysisConfig) -> Result<AnalysisOutput> {
    config.validate()?;
    let loaded = load_csv(&config.input_path, config)?;
    let runs = analyse(config, &loaded.dataset)?;
    let dir: &Path = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    if let Err(e) = write_outputs(config, &runs, &mut files) {
        remove_all(&files);
        return Err(e);
    }
    Ok(AnalysisOutput { runs, files })
}
