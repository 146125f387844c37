//! Synthetic farm-level data resembling an arable-farm accountancy panel.
//!
//! All monetary variables are per hectare (outcome and costs in 1,000 euro,
//! subsidy in euro). Inputs are correlated log-normals through a shared farm
//! intensity factor; the first-pillar subsidy depends on machine power and
//! the second-pillar dummy and is rounded to 10 euro, which produces ties.
//! The observed action is the subsidy tercile. Given the features, the
//! outcome under action `t` is `N(mu_t(x), sigma_t(x)^2)` with
//!
//! ```text
//! base(x)    = 0.2 + 0.45 var + 0.35 fixed + 0.01 machine + 2 labour
//! mu_t(x)    = base(x) + t g(x),     g(x) = 0.3 (labour / (labour + 0.095) - 0.35)
//! sigma_t(x) = (0.2 + 0.4 base(x)) (1 + t v(x)),   v(x) = 0.25 + 0.5 pillar2 + 0.25 national
//! ```
//!
//! so higher support raises the mean for labour-intensive farms but always
//! widens the spread, and the risk criteria disagree with the neutral one.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use safefirst_core::{CriterionKind, RegressionMethod, SeededRng};

use crate::config::{AnalysisConfig, SynthConfig};
use crate::error::{CliError, Result};
use crate::ingest::discretize_treatment;

pub const N_ACTIONS: usize = 3;
pub const DATA_FILE: &str = "synthetic.csv";
pub const TRUTH_FILE: &str = "synthetic_truth.csv";
pub const CONFIG_FILE: &str = "analysis.json";
pub const FEATURE_COLUMNS: [&str; 6] = [
    "machine_power",
    "labour",
    "fixed_costs",
    "variable_costs",
    "pillar2",
    "national",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Farm {
    pub machine_power: f64,
    pub labour: f64,
    pub fixed_costs: f64,
    pub variable_costs: f64,
    pub pillar2: f64,
    pub national: f64,
}

impl Farm {
    pub fn features(&self) -> [f64; 6] {
        [
            self.machine_power,
            self.labour,
            self.fixed_costs,
            self.variable_costs,
            self.pillar2,
            self.national,
        ]
    }
}

/// True `(mu, sigma)` of the outcome under `action`.
pub fn true_moments(farm: &Farm, action: usize) -> (f64, f64) {
    let t = action as f64;
    let base = 0.2
        + 0.45 * farm.variable_costs
        + 0.35 * farm.fixed_costs
        + 0.01 * farm.machine_power
        + 2.0 * farm.labour;
    let g = 0.3 * (farm.labour / (farm.labour + 0.095) - 0.35);
    let v = 0.25 + 0.5 * farm.pillar2 + 0.25 * farm.national;
    (base + t * g, (0.2 + 0.4 * base) * (1.0 + t * v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub farms: Vec<Farm>,
    pub subsidy: Vec<f64>,
    pub actions: Vec<usize>,
    pub outcomes: Vec<f64>,
}

impl SyntheticData {
    pub fn len(&self) -> usize {
        self.farms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.farms.is_empty()
    }

    /// `truth[i][t] = (mu, sigma)`.
    pub fn truth(&self) -> Vec<[(f64, f64); N_ACTIONS]> {
        self.farms
            .iter()
            .map(|f| std::array::from_fn(|t| true_moments(f, t)))
            .collect()
    }
}

fn log_normal(rng: &mut SeededRng, common: f64, mean: f64, sd: f64) -> f64 {
    let s2 = (1.0 + (sd / mean).powi(2)).ln();
    let m = mean.ln() - 0.5 * s2;
    let z = 0.6 * common + 0.8 * rng.standard_normal();
    (m + s2.sqrt() * z).exp()
}

/// Rounds to the precision written to the CSV so that the stored truth is
/// exactly that of the written features.
fn r6(x: f64) -> f64 {
    format!("{x:.6}").parse().unwrap_or(x)
}

pub fn generate(n: usize, seed: u64) -> Result<SyntheticData> {
    let mut rng = SeededRng::new(seed);
    let mut farms = Vec::with_capacity(n);
    let mut subsidy = Vec::with_capacity(n);
    for _ in 0..n {
        let intensity = rng.standard_normal();
        let farm = Farm {
            machine_power: r6(log_normal(&mut rng, intensity, 11.68, 18.30)),
            labour: r6(log_normal(&mut rng, intensity, 0.095, 0.165)),
            fixed_costs: r6(log_normal(&mut rng, intensity, 0.54, 1.12)),
            variable_costs: r6(log_normal(&mut rng, intensity, 1.55, 2.69)),
            pillar2: f64::from(u8::from(rng.uniform() < 0.355)),
            national: f64::from(u8::from(rng.uniform() < 0.027)),
        };
        let s = 300.0
            * (0.45 * rng.standard_normal() + 0.15 * (farm.machine_power / 11.68).ln()
                - 0.1 * farm.pillar2)
                .exp();
        subsidy.push((s / 10.0).round() * 10.0);
        farms.push(farm);
    }
    let actions = discretize_treatment(&subsidy, N_ACTIONS)?;
    let outcomes = farms
        .iter()
        .zip(&actions)
        .map(|(f, &t)| {
            let (mu, sigma) = true_moments(f, t);
            r6(mu + sigma * rng.standard_normal())
        })
        .collect();
    Ok(SyntheticData {
        farms,
        subsidy,
        actions,
        outcomes,
    })
}

pub fn render_data_csv(data: &SyntheticData) -> String {
    let mut out = String::from("unit_id,net_output,subsidy_per_ha,");
    out.push_str(&FEATURE_COLUMNS.join(","));
    out.push('\n');
    for (i, f) in data.farms.iter().enumerate() {
        out.push_str(&format!(
            "farm{i:05},{:.6},{:.0}",
            data.outcomes[i], data.subsidy[i]
        ));
        for v in f.features() {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    out
}

pub fn render_truth_csv(data: &SyntheticData) -> String {
    let mut out = String::from("unit_id,action");
    for t in 0..N_ACTIONS {
        out.push_str(&format!(",mu_{t},sigma_{t}"));
    }
    out.push('\n');
    for (i, row) in data.truth().iter().enumerate() {
        out.push_str(&format!("farm{i:05},{}", data.actions[i]));
        for (mu, sigma) in row {
            out.push_str(&format!(",{mu},{sigma}"));
        }
        out.push('\n');
    }
    out
}

/// Analysis config that reads the generated file. Nearest neighbours are
/// used because the heavy-tailed inputs make the least-squares second-moment
/// fit fall below the squared mean for many farms.
pub fn analysis_config(data_path: &Path, output_dir: &Path, seed: u64) -> AnalysisConfig {
    AnalysisConfig {
        input_path: data_path.to_path_buf(),
        outcome_column: "net_output".into(),
        treatment_column: "subsidy_per_ha".into(),
        feature_columns: FEATURE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        id_column: Some("unit_id".into()),
        criteria: CriterionKind::ALL.to_vec(),
        method: RegressionMethod::KNearest,
        knn_k: 50,
        output_dir: output_dir.to_path_buf(),
        seed,
        ..AnalysisConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub data_path: PathBuf,
    pub truth_path: PathBuf,
    pub config_path: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

/// Writes the data, its ground truth and a ready-to-run analysis config.
pub fn write_synthetic(config: &SynthConfig) -> Result<SynthOutput> {
    let data = generate(config.n, config.seed)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let out = SynthOutput {
        data_path: dir.join(DATA_FILE),
        truth_path: dir.join(TRUTH_FILE),
        config_path: dir.join(CONFIG_FILE),
    };
    write_file(&out.data_path, &render_data_csv(&data))?;
    write_file(&out.truth_path, &render_truth_csv(&data))?;
    let analysis = analysis_config(&out.data_path, &dir.join("analysis"), config.seed);
    let json = serde_json::to_string_pretty(&analysis).map_err(|e| CliError::Json {
        path: out.config_path.clone(),
        source: e,
    })?;
    write_file(&out.config_path, &(json + "\n"))?;
    Ok(out)
}
