#![allow(dead_code)]

use safefirst_core::{
    validate_dataset, ActionSet, ConditionalMoments, Dataset, MomentSource, RawDataset, Result,
    SeededRng,
};

/// Standard normal CDF by composite Simpson integration of the density,
/// independent of the erfc path used by the library.
pub fn simpson_normal_cdf(z: f64) -> f64 {
    let a = z.abs().min(12.0);
    let panels = 4000;
    let h = a / panels as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(a);
    for k in 1..panels {
        let t = k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * pdf(t);
    }
    let half = s * h / 3.0;
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Per-unit moments looked up by the unit index stored in `x[0]`.
pub struct LookupMoments {
    /// `table[unit][action] = (mu, sigma)`
    pub table: Vec<Vec<(f64, f64)>>,
}

impl MomentSource<f64> for LookupMoments {
    fn action_set(&self) -> ActionSet {
        ActionSet::new(self.table[0].len()).unwrap()
    }

    fn n_features(&self) -> usize {
        1
    }

    fn predict_moments(&self, x: &[f64], action: usize) -> Result<ConditionalMoments<f64>> {
        let (mu, sigma) = self.table[x[0] as usize][action];
        Ok(ConditionalMoments::new(action, mu, sigma))
    }
}

/// Heteroskedastic synthetic data with `m` actions and `p` features.
pub fn synthetic_dataset(n: usize, m: usize, p: usize, seed: u64) -> Dataset<f64> {
    let mut rng = SeededRng::new(seed);
    let mut outcomes = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n);
    for i in 0..n {
        let x: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let t = if i < m {
            i
        } else {
            rng.below(m as u64) as usize
        };
        let tf = t as f64;
        let mu = 1.0 + 0.5 * x[0] + tf * (0.4 + 0.3 * x[p - 1]);
        let sigma = 0.5 * (1.0 + tf * (0.5 + 0.4 * x[0].tanh()));
        outcomes.push(mu + sigma * rng.standard_normal());
        actions.push(t as i64);
        features.push(x);
    }
    validate_dataset(
        RawDataset {
            outcomes,
            actions,
            features,
            feature_names: None,
            unit_ids: None,
        },
        ActionSet::new(m).unwrap(),
    )
    .unwrap()
}
