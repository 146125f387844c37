//! Per-cell regressors for the first and second conditional moments.

use serde::{Deserialize, Serialize};

use crate::linalg::cholesky_solve;
use crate::numeric::pairwise_sum;
use crate::scalar::Scalar;
use crate::types::Features;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionMethod {
    LeastSquares,
    KNearest,
}

/// Regressors used by the least-squares method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Intercept and features.
    Linear,
    /// Intercept, features and their squares.
    LinearPlusSquares,
}

/// Column-wise centering and scaling fitted on training rows.
/// Constant columns keep unit scale.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Standardizer<F> {
    means: Vec<F>,
    scales: Vec<F>,
}

impl<F: Scalar> Standardizer<F> {
    pub(crate) fn fit(x: &Features<F>) -> Self {
        let n = F::of_usize(x.n_rows());
        let p = x.n_cols();
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        let mut col = Vec::with_capacity(x.n_rows());
        for j in 0..p {
            col.clear();
            col.extend(x.rows().map(|r| r[j]));
            let mean = pairwise_sum(&col) / n;
            for v in col.iter_mut() {
                *v = (*v - mean) * (*v - mean);
            }
            let sd = (pairwise_sum(&col) / n).sqrt();
            means.push(mean);
            scales.push(if sd > F::zero() && sd.is_finite() {
                sd
            } else {
                F::one()
            });
        }
        Self { means, scales }
    }

    pub(crate) fn transform_into(&self, x: &[F], out: &mut Vec<F>) {
        out.clear();
        out.extend(
            x.iter()
                .zip(self.means.iter().zip(&self.scales))
                .map(|(&v, (&m, &s))| (v - m) / s),
        );
    }
}

/// Ridge least squares on a fixed basis of standardized features, fitted
/// jointly for the targets `Y` and `Y^2` (the Gram matrix is shared).
/// The intercept is not penalized, so in-sample residuals sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LeastSquaresPair<F> {
    scaler: Standardizer<F>,
    basis: Basis,
    coef_mean: Vec<F>,
    coef_second: Vec<F>,
}

fn expand<F: Scalar>(basis: Basis, z: &[F], out: &mut Vec<F>) {
    out.clear();
    out.push(F::one());
    out.extend_from_slice(z);
    if basis == Basis::LinearPlusSquares {
        out.extend(z.iter().map(|&v| v * v));
    }
}

impl<F: Scalar> LeastSquaresPair<F> {
    /// `None` when the penalized normal equations cannot be factorized.
    pub(crate) fn fit(x: &Features<F>, y: &[F], basis: Basis, ridge_lambda: F) -> Option<Self> {
        let scaler = Standardizer::fit(x);
        let d = match basis {
            Basis::Linear => 1 + x.n_cols(),
            Basis::LinearPlusSquares => 1 + 2 * x.n_cols(),
        };
        let mut gram = vec![F::zero(); d * d];
        let mut rhs_mean = vec![F::zero(); d];
        let mut rhs_second = vec![F::zero(); d];
        let mut z = Vec::new();
        let mut row = Vec::with_capacity(d);
        for (xi, &yi) in x.rows().zip(y) {
            scaler.transform_into(xi, &mut z);
            expand(basis, &z, &mut row);
            for a in 0..d {
                rhs_mean[a] = rhs_mean[a] + row[a] * yi;
                rhs_second[a] = rhs_second[a] + row[a] * yi * yi;
                for b in 0..=a {
                    gram[a * d + b] = gram[a * d + b] + row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                gram[b * d + a] = gram[a * d + b];
            }
        }
        for a in 1..d {
            gram[a * d + a] = gram[a * d + a] + ridge_lambda;
        }
        let coef_mean = cholesky_solve(&gram, &rhs_mean, d)?;
        let coef_second = cholesky_solve(&gram, &rhs_second, d)?;
        Some(Self {
            scaler,
            basis,
            coef_mean,
            coef_second,
        })
    }

    pub(crate) fn predict(&self, x: &[F]) -> (F, F) {
        let mut z = Vec::with_capacity(x.len());
        let mut row = Vec::with_capacity(self.coef_mean.len());
        self.scaler.transform_into(x, &mut z);
        expand(self.basis, &z, &mut row);
        let dot = |c: &[F]| {
            row.iter()
                .zip(c)
                .fold(F::zero(), |acc, (&r, &b)| acc + r * b)
        };
        (dot(&self.coef_mean), dot(&self.coef_second))
    }
}

/// k-nearest-neighbour averages of `Y` and `Y^2` under Euclidean distance
/// on standardized features. Equidistant neighbours are taken in row order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NearestNeighbors<F> {
    scaler: Standardizer<F>,
    points: Features<F>,
    y: Vec<F>,
    y2: Vec<F>,
    k: usize,
}

impl<F: Scalar> NearestNeighbors<F> {
    pub(crate) fn fit(x: &Features<F>, y: &[F], k: usize) -> Self {
        let scaler = Standardizer::fit(x);
        let mut values = Vec::with_capacity(x.as_slice().len());
        let mut z = Vec::new();
        for xi in x.rows() {
            scaler.transform_into(xi, &mut z);
            values.extend_from_slice(&z);
        }
        let points = Features::new(x.n_rows(), x.n_cols(), values)
            .expect("standardized matrix keeps its shape");
        Self {
            scaler,
            points,
            y: y.to_vec(),
            y2: y.iter().map(|&v| v * v).collect(),
            k,
        }
    }

    pub(crate) fn predict(&self, x: &[F]) -> (F, F) {
        let mut z = Vec::with_capacity(x.len());
        self.scaler.transform_into(x, &mut z);
        let mut order: Vec<(F, usize)> = self
            .points
            .rows()
            .enumerate()
            .map(|(i, p)| {
                let d2 = p
                    .iter()
                    .zip(&z)
                    .fold(F::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
                (d2, i)
            })
            .collect();
        let by_distance = |a: &(F, usize), b: &(F, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        if self.k < order.len() {
            order.select_nth_unstable_by(self.k - 1, by_distance);
            order.truncate(self.k);
        }
        order.sort_unstable_by_key(|&(_, i)| i);
        let ys: Vec<F> = order.iter().map(|&(_, i)| self.y[i]).collect();
        let y2s: Vec<F> = order.iter().map(|&(_, i)| self.y2[i]).collect();
        let k = F::of_usize(ys.len());
        (pairwise_sum(&ys) / k, pairwise_sum(&y2s) / k)
    }
}
