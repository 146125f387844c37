//! Command-line front end: CSV ingestion, quantile-binned treatments, the
//! fit/assign/evaluate pipeline per risk criterion, text and JSON reports,
//! plot-data exports, the two-arm simulator and a synthetic data generator.

pub mod analysis;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod simulation;
pub mod synth;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use safefirst_core::CriterionKind;

pub use analysis::{analyse, run_analysis, AnalysisOutput, CriterionRun};
pub use config::{AnalysisConfig, SimulationConfig, SynthConfig};
pub use error::{CliError, Result};
pub use ingest::{discretize_treatment, load_csv, quantile_boundaries, LoadedData};
pub use report::{
    export_plot_data, read_report, render_text, write_report, PlotRow, ReportDocument,
};
pub use simulation::run_simulation_command;
pub use synth::{generate, write_synthetic};

#[derive(Debug, Parser)]
#[command(
    name = "safefirst",
    version,
    about = "Risk-adjusted optimal policy learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit moment models on a CSV file and write one report per criterion
    Fit(config::AnalysisArgs),
    /// Run the two-arm Monte Carlo experiment
    Simulate(config::SimulationArgs),
    /// Re-render text reports from their JSON twins and print them
    Report(ReportArgs),
    /// Write a synthetic farm dataset, its ground truth and a matching config
    Synth(config::SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: config::CommonArgs,
    /// Comma-separated criteria to show; all found reports by default
    #[arg(long, value_delimiter = ',', value_parser = |s: &str| s.parse::<CriterionKind>().map_err(|e| e.to_string()))]
    pub criteria: Option<Vec<CriterionKind>>,
}

/// Renders the reports found in the output directory and returns the text.
pub fn report_command(args: &ReportArgs) -> Result<String> {
    let dir: PathBuf = match &args.common.out {
        Some(d) => d.clone(),
        None => config::load_config::<AnalysisConfig>(args.common.config.as_deref())?.output_dir,
    };
    let wanted = args
        .criteria
        .clone()
        .unwrap_or_else(|| CriterionKind::ALL.to_vec());
    let mut out = String::new();
    let mut found = 0;
    for kind in CriterionKind::ALL
        .into_iter()
        .filter(|k| wanted.contains(k))
    {
        let path = dir.join(format!("{}.report.json", kind.as_str()));
        if !path.exists() {
            continue;
        }
        let doc = read_report(&path)?;
        let text = render_text(&doc);
        let txt = dir.join(format!("{}.report.txt", kind.as_str()));
        fs::write(&txt, &text).map_err(|e| CliError::io(&txt, e))?;
        out.push_str(&text);
        out.push('\n');
        found += 1;
    }
    if found == 0 {
        return Err(CliError::Data(format!(
            "no report JSON files in {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// Executes one parsed command, printing a short summary to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(args) => {
            let cfg = args.resolve()?;
            let out = run_analysis(&cfg)?;
            for run in &out.runs {
                let e = &run.document.evaluation;
                println!(
                    "{:<13} value actual {:>10.4}  optimal {:>10.4}  match {:.4}  regret {:.4}",
                    e.criterion.name(),
                    e.value_actual,
                    e.value_optimal,
                    e.match_rate,
                    e.regret_vs_first_best
                );
            }
            println!(
                "wrote {} files to {}",
                out.files.len(),
                cfg.output_dir.display()
            );
        }
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let (summary, files) = run_simulation_command(&cfg)?;
            print!("{}", simulation::render_summary(&summary));
            println!(
                "wrote {} files to {}",
                files.len(),
                cfg.output_dir.display()
            );
        }
        Command::Report(args) => print!("{}", report_command(args)?),
        Command::Synth(args) => {
            let cfg = args.resolve()?;
            let out = write_synthetic(&cfg)?;
            println!("wrote {}", out.data_path.display());
            println!("wrote {}", out.truth_path.display());
            println!("wrote {}", out.config_path.display());
        }
    }
    Ok(())
}
