//! CSV ingestion and quantile binning of a continuous treatment.

use std::fs::File;
use std::path::Path;

use safefirst_core::{validate_dataset, ActionSet, Dataset, Error as CoreError, RawDataset};

use crate::config::AnalysisConfig;
use crate::error::{CliError, Result};

/// Parsed input with the treatment column before any binning.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset<f64>,
    pub treatment_values: Vec<f64>,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::MissingColumn(name.to_owned()))
}

fn parse_cell(record: &csv::StringRecord, idx: usize, column: &str, row: usize) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    let value: f64 = raw.parse().map_err(|_| CliError::Parse {
        row,
        column: column.to_owned(),
        value: raw.to_owned(),
    })?;
    if !value.is_finite() {
        return Err(CoreError::NonFiniteValue {
            field: column.to_owned(),
            row,
        }
        .into());
    }
    Ok(value)
}

/// Reads the configured columns, bins or labels the treatment, and
/// validates the result. Rows keep their file order; row numbers in errors
/// count data rows from 0.
pub fn load_csv(path: &Path, config: &AnalysisConfig) -> Result<LoadedData> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let y_idx = column_index(&headers, &config.outcome_column)?;
    let t_idx = column_index(&headers, &config.treatment_column)?;
    let x_idx = config
        .feature_columns
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    let id_idx = config
        .id_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut outcomes = Vec::new();
    let mut treatment_values = Vec::new();
    let mut features = Vec::new();
    let mut ids = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        outcomes.push(parse_cell(&record, y_idx, &config.outcome_column, row)?);
        treatment_values.push(parse_cell(&record, t_idx, &config.treatment_column, row)?);
        features.push(
            x_idx
                .iter()
                .zip(&config.feature_columns)
                .map(|(&i, c)| parse_cell(&record, i, c, row))
                .collect::<Result<Vec<_>>>()?,
        );
        if let Some(i) = id_idx {
            ids.push(record.get(i).unwrap_or("").to_owned());
        }
    }
    if outcomes.is_empty() {
        return Err(CliError::Data(format!(
            "{} has no data rows",
            path.display()
        )));
    }

    let (actions, m): (Vec<i64>, usize) = if config.treatment_discrete {
        let labels = treatment_values
            .iter()
            .enumerate()
            .map(|(row, &v)| {
                if v.fract() == 0.0 && v >= 0.0 {
                    Ok(v as i64)
                } else {
                    Err(CliError::Parse {
                        row,
                        column: config.treatment_column.clone(),
                        value: v.to_string(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let m = labels.iter().copied().max().unwrap_or(0) as usize + 1;
        (labels, m.max(2))
    } else {
        let bins = discretize_treatment(&treatment_values, config.n_bins)?;
        (bins.into_iter().map(|b| b as i64).collect(), config.n_bins)
    };

    let raw = RawDataset {
        outcomes,
        actions,
        features,
        feature_names: Some(config.feature_columns.clone()),
        unit_ids: id_idx.map(|_| ids),
    };
    let dataset = validate_dataset(raw, ActionSet::new(m)?)?;
    Ok(LoadedData {
        dataset,
        treatment_values,
    })
}

/// Boundaries `q_{b/B}`, `b = 1..B-1`, by the type-1 empirical inverse CDF:
/// the `ceil(n b / B)`-th smallest value.
pub fn quantile_boundaries(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    (1..n_bins)
        .map(|b| {
            let k = (n * b).div_ceil(n_bins).clamp(1, n);
            sorted[k - 1]
        })
        .collect()
}

/// Bin labels `0..n_bins`: bin `b` holds values in `(q_b, q_{b+1}]`, so a
/// value equal to a boundary falls into the lower bin.
pub fn discretize_treatment(values: &[f64], n_bins: usize) -> Result<Vec<usize>> {
    if n_bins < 2 {
        return Err(CliError::Config(format!(
            "n_bins must be at least 2, got {n_bins}"
        )));
    }
    if let Some(row) = values.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteValue {
            field: "treatment".into(),
            row,
        }
        .into());
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < n_bins {
        return Err(CoreError::DegenerateDistribution {
            distinct: distinct.len(),
            bins: n_bins,
        }
        .into());
    }
    let bounds = quantile_boundaries(values, n_bins);
    Ok(values
        .iter()
        .map(|&v| bounds.iter().filter(|&&q| v > q).count())
        .collect())
}
