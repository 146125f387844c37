use std::fs;
use std::path::{Path, PathBuf};

use safefirst_cli::synth::{analysis_config, generate, render_data_csv, true_moments, DATA_FILE};
use safefirst_cli::{
    load_csv, read_report, run_analysis, write_synthetic, AnalysisConfig, SynthConfig,
};
use safefirst_core::{
    assign_policy, fit_moments, CriterionKind, Features, MomentSource, RegressionMethod,
    RiskCriterion,
};

fn synth(dir: &Path, n: usize, seed: u64) -> AnalysisConfig {
    let out = write_synthetic(&SynthConfig {
        n,
        seed,
        output_dir: dir.to_path_buf(),
    })
    .unwrap();
    let mut cfg = analysis_config(&out.data_path, &dir.join("reports"), seed);
    cfg.method = RegressionMethod::LeastSquares;
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

#[test]
fn optimal_dominates_actual_for_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), 2000, 3);
    let out = run_analysis(&cfg).unwrap();
    assert_eq!(out.runs.len(), 4);
    for run in &out.runs {
        let e = &run.document.evaluation;
        assert!(
            e.value_optimal >= e.value_actual - 1e-9,
            "{}",
            e.criterion.name()
        );
        assert!(e.regret_vs_first_best >= -1e-9);
        assert!((e.action_frequencies.total_percent() - 100.0).abs() < 0.01);
        assert_eq!(e.n_used, 2000);
    }
    assert_eq!(out.runs[0].document.evaluation.regret_vs_first_best, 0.0);
}

#[test]
fn neutral_only_writes_one_report_pair() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth(dir.path(), 600, 1);
    cfg.criteria = vec![CriterionKind::Neutral];
    let out = run_analysis(&cfg).unwrap();
    let reports: Vec<PathBuf> = read_dir_sorted(&cfg.output_dir)
        .into_iter()
        .filter(|p| p.to_string_lossy().contains(".report."))
        .collect();
    assert_eq!(
        reports
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap())
            .collect::<Vec<_>>(),
        vec!["neutral.report.json", "neutral.report.txt"]
    );
    assert_eq!(out.files.len(), 4);
}

#[test]
fn safety_first_at_median_is_a_probability() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth(dir.path(), 900, 2);
    let data = load_csv(&cfg.input_path, &cfg).unwrap().dataset;
    let mut y = data.outcomes().to_vec();
    y.sort_by(f64::total_cmp);
    cfg.y_star = y[y.len() / 2];
    cfg.criteria = vec![CriterionKind::SafetyFirst];
    let out = run_analysis(&cfg).unwrap();
    let e = &out.runs[0].document.evaluation;
    assert!(matches!(e.criterion, RiskCriterion::SafetyFirst { .. }));
    for v in [e.value_actual, e.value_optimal] {
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn repeated_runs_are_byte_identical_and_input_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth(dir.path(), 800, 9);
    cfg.method = RegressionMethod::KNearest;
    cfg.knn_k = 20;
    let input_before = fs::read(&cfg.input_path).unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    cfg.output_dir = first.clone();
    run_analysis(&cfg).unwrap();
    cfg.output_dir = second.clone();
    run_analysis(&cfg).unwrap();
    let a = read_dir_sorted(&first);
    let b = read_dir_sorted(&second);
    assert_eq!(a.len(), 16);
    for (pa, pb) in a.iter().zip(&b) {
        assert_eq!(pa.file_name(), pb.file_name());
        assert_eq!(
            fs::read(pa).unwrap(),
            fs::read(pb).unwrap(),
            "{}",
            pa.display()
        );
    }
    assert_eq!(fs::read(&cfg.input_path).unwrap(), input_before);
}

#[test]
fn json_twin_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), 700, 5);
    let out = run_analysis(&cfg).unwrap();
    for run in &out.runs {
        let path = cfg
            .output_dir
            .join(format!("{}.report.json", run.document.stem()));
        let back = read_report(&path).unwrap();
        assert_eq!(back, run.document);
        assert_eq!(back.evaluation, run.document.evaluation);
        let text = fs::read_to_string(
            cfg.output_dir
                .join(format!("{}.report.txt", run.document.stem())),
        )
        .unwrap();
        for header in [
            "Data Information",
            "Policy Information",
            "Frequencies of the actions (training data)",
            "Training Data Results",
            "New Data Results",
            "Value-function of the optimal policy (training)",
            "Rate of optimal policy matches",
        ] {
            assert!(text.contains(header), "{header}");
        }
    }
}

#[test]
fn plot_data_matches_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = synth(dir.path(), 400, 6);
    cfg.plot_fraction = 0.05;
    let out = run_analysis(&cfg).unwrap();
    let run = &out.runs[1];
    let text = fs::read_to_string(cfg.output_dir.join("linear.plotdata.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "unit_id,actual_action,optimal_action,actual_expected_score,optimal_expected_score"
    );
    for (i, l) in lines.enumerate() {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols[0], format!("farm{i:05}"));
        assert_eq!(cols[2].parse::<usize>().unwrap(), run.optimal.actions[i]);
        let actual: f64 = cols[3].parse().unwrap();
        let optimal: f64 = cols[4].parse().unwrap();
        assert!(optimal >= actual - 1e-12);
    }
    let sample = fs::read_to_string(cfg.output_dir.join("linear.plotdata.sample.csv")).unwrap();
    assert_eq!(sample.lines().count(), 21);
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), 300, 4);
    fs::create_dir_all(cfg.output_dir.join("quadratic.report.txt")).unwrap();
    assert!(run_analysis(&cfg).is_err());
    let left: Vec<PathBuf> = read_dir_sorted(&cfg.output_dir);
    assert_eq!(left, vec![cfg.output_dir.join("quadratic.report.txt")]);
}

#[test]
fn synthetic_file_loads_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), 5000, 11);
    let loaded = load_csv(&cfg.input_path, &cfg).unwrap();
    assert_eq!(loaded.dataset.len(), 5000);
    assert_eq!(loaded.dataset.n_features(), 6);
    let again = tempfile::tempdir().unwrap();
    synth(again.path(), 5000, 11);
    for name in [DATA_FILE, "synthetic_truth.csv", "analysis.json"] {
        let a = fs::read_to_string(dir.path().join(name)).unwrap();
        let b = fs::read_to_string(again.path().join(name)).unwrap();
        if name == "analysis.json" {
            assert_eq!(
                a.replace(&dir.path().display().to_string(), ""),
                b.replace(&again.path().display().to_string(), "")
            );
        } else {
            assert_eq!(a, b, "{name}");
        }
    }
    assert_eq!(
        render_data_csv(&generate(5000, 11).unwrap()),
        fs::read_to_string(&cfg.input_path).unwrap()
    );
}

#[test]
fn ground_truth_makes_linear_and_neutral_disagree() {
    let data = generate(5000, 0).unwrap();
    let truth = data.truth();
    let neutral = |row: &[(f64, f64); 3]| {
        (0..3)
            .max_by(|&a, &b| row[a].0.total_cmp(&row[b].0))
            .unwrap()
    };
    let linear = |row: &[(f64, f64); 3]| {
        (0..3)
            .max_by(|&a, &b| (row[a].0 / row[a].1).total_cmp(&(row[b].0 / row[b].1)))
            .unwrap()
    };
    let differ = truth.iter().filter(|r| neutral(r) != linear(r)).count();
    let share = differ as f64 / truth.len() as f64;
    assert!(share >= 0.2, "share {share}");
    assert!(share < 0.95, "share {share}");
}

#[test]
fn estimated_moments_track_ground_truth() {
    let data = generate(5000, 8).unwrap();
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(DATA_FILE), render_data_csv(&data)).unwrap();
    let mut cfg = analysis_config(&dir.path().join(DATA_FILE), dir.path(), 8);
    cfg.knn_k = 50;
    let d = load_csv(&cfg.input_path, &cfg).unwrap().dataset;
    let model = fit_moments(&d, &cfg.regressor()).unwrap();
    let mut err_mu = 0.0;
    let mut spread = 0.0;
    let grand: f64 = data.farms.iter().map(|f| true_moments(f, 1).0).sum::<f64>() / 5000.0;
    for (i, f) in data.farms.iter().enumerate() {
        let m = model.predict_moments(d.features().row(i), 1).unwrap();
        let (mu, _) = true_moments(f, 1);
        err_mu += (m.mu - mu).powi(2);
        spread += (mu - grand).powi(2);
    }
    // Estimated means explain most of the variation in the true means.
    assert!(err_mu / spread < 0.5, "{}", err_mu / spread);
    let rows: Vec<Vec<f64>> = data.farms.iter().map(|f| f.features().to_vec()).collect();
    let x = Features::from_rows(&rows).unwrap();
    assert!(assign_policy(&model, &x, &RiskCriterion::LinearRa).is_ok());
}
