//! Flat JSON configuration files and their command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use safefirst_core::{
    Basis, CriterionKind, LocationScaleFamily, RegressionMethod, RegressorConfig, RiskCriterion,
    TwoArmParams,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input_path: PathBuf,
    pub outcome_column: String,
    pub treatment_column: String,
    pub feature_columns: Vec<String>,
    /// Column holding unit identifiers; row numbers are used when absent.
    pub id_column: Option<String>,
    /// Treat the treatment column as integer action labels instead of
    /// binning a continuous amount into quantile groups.
    pub treatment_discrete: bool,
    pub n_bins: usize,
    pub criteria: Vec<CriterionKind>,
    pub y_star: f64,
    pub family: String,
    pub method: RegressionMethod,
    pub knn_k: usize,
    pub ridge_lambda: f64,
    pub basis: Basis,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Share of units kept in the down-sampled plot file.
    pub plot_fraction: f64,
    pub overlap_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let reg = RegressorConfig::default();
        Self {
            input_path: PathBuf::new(),
            outcome_column: String::new(),
            treatment_column: String::new(),
            feature_columns: Vec::new(),
            id_column: None,
            treatment_discrete: false,
            n_bins: 3,
            criteria: CriterionKind::ALL.to_vec(),
            y_star: 0.0,
            family: "normal".into(),
            method: reg.method,
            knn_k: reg.knn_k,
            ridge_lambda: reg.ridge_lambda,
            basis: reg.basis,
            output_dir: PathBuf::from("out"),
            seed: 0,
            plot_fraction: 0.005,
            overlap_threshold: 0.01,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.input_path.as_os_str().is_empty() {
            return bad("input_path is required".into());
        }
        if self.outcome_column.is_empty() || self.treatment_column.is_empty() {
            return bad("outcome_column and treatment_column are required".into());
        }
        let mut columns: Vec<&str> = vec![&self.outcome_column, &self.treatment_column];
        columns.extend(self.feature_columns.iter().map(String::as_str));
        columns.extend(self.id_column.as_deref());
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return bad(format!("column {c:?} is used twice"));
            }
        }
        if self.n_bins < 2 {
            return bad(format!("n_bins must be at least 2, got {}", self.n_bins));
        }
        if self.criteria.is_empty() {
            return bad("criteria must not be empty".into());
        }
        if !self.y_star.is_finite() {
            return bad("y_star must be finite".into());
        }
        self.family()?;
        if !(self.plot_fraction > 0.0 && self.plot_fraction <= 1.0) {
            return bad(format!(
                "plot_fraction must lie in (0, 1], got {}",
                self.plot_fraction
            ));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return bad(format!(
                "ridge_lambda must be non-negative, got {}",
                self.ridge_lambda
            ));
        }
        if self.method == RegressionMethod::KNearest && self.knn_k == 0 {
            return bad("knn_k must be at least 1".into());
        }
        Ok(())
    }

    pub fn family(&self) -> Result<LocationScaleFamily> {
        match self.family.as_str() {
            "normal" => Ok(LocationScaleFamily::Normal),
            "logistic" => Ok(LocationScaleFamily::Logistic),
            other => Err(CliError::Config(format!(
                "unknown family {other:?}; expected normal or logistic"
            ))),
        }
    }

    pub fn regressor(&self) -> RegressorConfig {
        RegressorConfig {
            method: self.method,
            knn_k: self.knn_k,
            ridge_lambda: self.ridge_lambda,
            basis: self.basis,
        }
    }

    /// Requested criteria in canonical order without duplicates.
    pub fn risk_criteria(&self) -> Result<Vec<RiskCriterion<f64>>> {
        CriterionKind::ALL
            .into_iter()
            .filter(|k| self.criteria.contains(k))
            .map(|k| {
                Ok(match k {
                    CriterionKind::Neutral => RiskCriterion::Neutral,
                    CriterionKind::LinearRa => RiskCriterion::LinearRa,
                    CriterionKind::QuadraticRa => RiskCriterion::QuadraticRa,
                    CriterionKind::SafetyFirst => {
                        RiskCriterion::safety_first(self.y_star, self.family()?)?
                    }
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Replication whose draw is exported as plot data.
    pub plot_replication: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let p = TwoArmParams::<f64>::reference(0);
        Self {
            mu0: p.mu0,
            mu1: p.mu1,
            sigma0: p.sigma0,
            sigma1: p.sigma1,
            n: p.n,
            reps: 2000,
            seed: 0,
            output_dir: PathBuf::from("out"),
            plot_replication: 0,
        }
    }
}

impl SimulationConfig {
    pub fn params(&self) -> Result<TwoArmParams<f64>> {
        if self.reps == 0 {
            return Err(CliError::Config("reps must be at least 1".into()));
        }
        if self.plot_replication >= self.reps {
            return Err(CliError::Config(format!(
                "plot_replication {} is not below reps {}",
                self.plot_replication, self.reps
            )));
        }
        TwoArmParams::new(
            self.mu0,
            self.mu1,
            self.sigma0,
            self.sigma1,
            self.n,
            self.seed,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 5000,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Reads a JSON config file, or the defaults when `path` is `None`.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_name<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input_path: Option<PathBuf>,
    #[arg(long)]
    pub outcome_column: Option<String>,
    #[arg(long)]
    pub treatment_column: Option<String>,
    /// Comma-separated feature columns
    #[arg(long, value_delimiter = ',')]
    pub feature_columns: Option<Vec<String>>,
    #[arg(long)]
    pub id_column: Option<String>,
    #[arg(long)]
    pub treatment_discrete: Option<bool>,
    #[arg(long)]
    pub n_bins: Option<usize>,
    /// Comma-separated subset of neutral,linear,quadratic,safety_first
    #[arg(long, value_delimiter = ',', value_parser = parse_name::<CriterionKind>)]
    pub criteria: Option<Vec<CriterionKind>>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_star: Option<f64>,
    /// normal or logistic
    #[arg(long)]
    pub family: Option<String>,
    /// least_squares or k_nearest
    #[arg(long, value_parser = parse_name::<RegressionMethod>)]
    pub method: Option<RegressionMethod>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub ridge_lambda: Option<f64>,
    /// linear or linear_plus_squares
    #[arg(long, value_parser = parse_name::<Basis>)]
    pub basis: Option<Basis>,
    #[arg(long)]
    pub plot_fraction: Option<f64>,
    #[arg(long)]
    pub overlap_threshold: Option<f64>,
}

macro_rules! override_fields {
    ($args:expr, $cfg:expr, $($field:ident),*) => {
        $(if let Some(v) = &$args.$field {
            $cfg.$field = v.clone().into();
        })*
    };
}

impl AnalysisArgs {
    pub fn resolve(&self) -> Result<AnalysisConfig> {
        let mut cfg: AnalysisConfig = load_config(self.common.config.as_deref())?;
        override_fields!(
            self,
            cfg,
            input_path,
            outcome_column,
            treatment_column,
            feature_columns,
            id_column,
            treatment_discrete,
            n_bins,
            criteria,
            y_star,
            family,
            method,
            knn_k,
            ridge_lambda,
            basis,
            plot_fraction,
            overlap_threshold
        );
        override_fields!(self.common, cfg, seed);
        if let Some(out) = &self.common.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulationArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    /// Units per replication
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub plot_replication: Option<usize>,
}

impl SimulationArgs {
    pub fn resolve(&self) -> Result<SimulationConfig> {
        let mut cfg: SimulationConfig = load_config(self.common.config.as_deref())?;
        override_fields!(
            self,
            cfg,
            mu0,
            mu1,
            sigma0,
            sigma1,
            n,
            reps,
            plot_replication
        );
        override_fields!(self.common, cfg, seed);
        if let Some(out) = &self.common.out {
            cfg.output_dir = out.clone();
        }
        cfg.params()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of farms
    #[arg(long)]
    pub n: Option<usize>,
}

impl SynthArgs {
    pub fn resolve(&self) -> Result<SynthConfig> {
        let mut cfg: SynthConfig = load_config(self.common.config.as_deref())?;
        override_fields!(self, cfg, n);
        override_fields!(self.common, cfg, seed);
        if let Some(out) = &self.common.out {
            cfg.output_dir = out.clone();
        }
        if cfg.n < 30 {
            return Err(CliError::Config(format!(
                "n must be at least 30, got {}",
                cfg.n
            )));
        }
        Ok(cfg)
    }
}
