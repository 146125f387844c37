//! Library special functions and closed forms checked against brute-force
//! numerical integration.

mod common;

use common::simpson_normal_cdf;
use safefirst_core::numeric::{norm_cdf, norm_pdf};
use safefirst_core::{
    closed_form_oracle_welfare, draw_two_arm, exceedance_probability, oracle_assignment,
    ConditionalMoments, LocationScaleFamily, SeededRng, TwoArmParams,
};

#[test]
fn simpson_oracle_is_itself_accurate() {
    assert!((simpson_normal_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-12);
    assert!((simpson_normal_cdf(-2.0) - 0.022_750_131_948_179).abs() < 1e-12);
}

#[test]
fn exceedance_matches_integration_oracle() {
    let mut rng = SeededRng::new(2024);
    let normal = LocationScaleFamily::Normal;
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let mu = 20.0 * (rng.uniform() - 0.5);
        let sigma = 0.05 + 10.0 * rng.uniform();
        let y_star = 20.0 * (rng.uniform() - 0.5);
        let h = exceedance_probability(&ConditionalMoments::new(0, mu, sigma), y_star, &normal);
        let oracle = simpson_normal_cdf((mu - y_star) / sigma);
        worst = worst.max((h - oracle).abs());
    }
    assert!(worst < 1e-9, "max deviation {worst}");
}

#[test]
fn exceedance_reference_values() {
    let normal = LocationScaleFamily::Normal;
    let h =
        |mu, sigma| exceedance_probability(&ConditionalMoments::new(0, mu, sigma), 0.0, &normal);
    assert!((h(1.0, 1.0) - simpson_normal_cdf(1.0)).abs() < 1e-6);
    assert!((h(30.0, 10.0) - simpson_normal_cdf(3.0)).abs() < 1e-6);
    assert!((h(75.0, 65.0) - simpson_normal_cdf(75.0 / 65.0)).abs() < 1e-6);
    assert!((h(30.0, 10.0) - 0.998_650).abs() < 1e-6);
}

/// E[max(Y0, Y1)] by 2-D Simpson over standardized draws on [-9, 9]^2.
fn brute_force_expected_max(mu0: f64, mu1: f64, s0: f64, s1: f64) -> f64 {
    let n = 1200;
    let a = 9.0;
    let h = 2.0 * a / n as f64;
    let w = |k: usize| {
        if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut total = 0.0;
    for i in 0..=n {
        let u = -a + i as f64 * h;
        let pu = norm_pdf(u) * w(i);
        let y0 = mu0 + s0 * u;
        let mut inner = 0.0;
        for j in 0..=n {
            let v = -a + j as f64 * h;
            inner += w(j) * norm_pdf(v) * y0.max(mu1 + s1 * v);
        }
        total += pu * inner;
    }
    total * (h / 3.0) * (h / 3.0)
}

#[test]
fn oracle_welfare_matches_numerical_integration() {
    let params = TwoArmParams::<f64>::reference(0);
    let closed = closed_form_oracle_welfare(&params);
    let brute = brute_force_expected_max(30.0, 75.0, 10.0, 65.0);
    assert!(
        (closed - brute).abs() < 1e-3,
        "closed {closed} brute {brute}"
    );
    assert!((closed - 84.65).abs() < 0.01);

    let other = TwoArmParams::new(-2.0, 1.0, 3.0, 0.5, 1, 0).unwrap();
    let brute = brute_force_expected_max(-2.0, 1.0, 3.0, 0.5);
    assert!((closed_form_oracle_welfare(&other) - brute).abs() < 1e-3);
}

#[test]
fn large_sample_mean_within_clt_bound() {
    let params = TwoArmParams::new(30.0, 75.0, 10.0, 65.0, 100_000, 99).unwrap();
    let s = draw_two_arm(&params).unwrap();
    let mean = s.y1.iter().sum::<f64>() / s.y1.len() as f64;
    assert!(
        (mean - 75.0).abs() < 3.0 * 65.0 / (100_000f64).sqrt(),
        "mean {mean}"
    );
}

#[test]
fn oracle_treats_expected_share() {
    let params = TwoArmParams::new(30.0, 75.0, 10.0, 65.0, 100_000, 5).unwrap();
    let a = oracle_assignment(&draw_two_arm(&params).unwrap());
    let share = a.actions.iter().sum::<usize>() as f64 / a.len() as f64;
    let expected = norm_cdf(45.0 / 4325f64.sqrt());
    assert!((expected - 0.7532).abs() < 1e-3);
    assert!((share - expected).abs() < 0.01, "share {share}");
}
