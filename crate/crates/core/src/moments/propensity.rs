//! Multinomial logistic propensity model `Pr(T = t | X = x)` and overlap
//! summaries. Diagnostic only: nothing downstream reweights by it.

use serde::{Deserialize, Serialize};

use super::regression::Standardizer;
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::numeric::{empirical_quantile, pairwise_sum};
use crate::scalar::Scalar;
use crate::types::{ActionSet, Dataset};

pub const PROPENSITY_GRAD_TOL: f64 = 1e-6;
pub const PROPENSITY_MAX_ITER: usize = 500;

/// Coefficients beyond this size (standardized scale) mean the likelihood
/// has no finite maximizer, i.e. the actions are separable.
const DIVERGENCE_BOUND: f64 = 50.0;
const PROB_FLOOR: f64 = 1e-12;
const HESSIAN_JITTER: f64 = 1e-10;

/// Fitted multinomial logit with action 0 as the reference category.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel<F> {
    scaler: Standardizer<F>,
    /// `(M-1) x (p+1)` row-major, intercept first.
    coef: Vec<F>,
    action_set: ActionSet,
    n_features: usize,
    converged: bool,
    grad_norm: F,
    iterations: usize,
}

impl<F: Scalar> PropensityModel<F> {
    /// Predicted probabilities for every action; strictly inside (0, 1) and
    /// summing to one.
    pub fn predict_proba(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut z = Vec::with_capacity(x.len());
        self.scaler.transform_into(x, &mut z);
        Ok(self.proba_standardized(&z))
    }

    fn proba_standardized(&self, z: &[F]) -> Vec<F> {
        softmax(&linear_predictors(&self.coef, z, self.action_set.len()))
    }

    pub fn action_set(&self) -> ActionSet {
        self.action_set
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn grad_norm(&self) -> F {
        self.grad_norm
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `Err(NonConvergence)` when the fit stopped without meeting the
    /// gradient tolerance. The model remains usable either way.
    pub fn convergence(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence {
                grad_norm: self.grad_norm.as_f64(),
                iterations: self.iterations,
            })
        }
    }
}

fn linear_predictors<F: Scalar>(coef: &[F], z: &[F], m: usize) -> Vec<F> {
    let d = z.len() + 1;
    let mut eta = Vec::with_capacity(m);
    eta.push(F::zero());
    for j in 0..m - 1 {
        let c = &coef[j * d..(j + 1) * d];
        eta.push(
            z.iter()
                .zip(&c[1..])
                .fold(c[0], |acc, (&v, &b)| acc + v * b),
        );
    }
    eta
}

fn softmax<F: Scalar>(eta: &[F]) -> Vec<F> {
    let max = eta.iter().copied().fold(F::neg_infinity(), F::max);
    let mut p: Vec<F> = eta.iter().map(|&e| (e - max).exp()).collect();
    let total: F = p.iter().copied().sum();
    let floor = F::of(PROB_FLOOR);
    for v in p.iter_mut() {
        *v = (*v / total).max(floor);
    }
    let total: F = p.iter().copied().sum();
    for v in p.iter_mut() {
        *v = *v / total;
    }
    p
}

struct Objective<F> {
    loglik: F,
    grad: Vec<F>,
    hessian: Vec<F>,
}

/// Mean log-likelihood with its gradient and negated Hessian.
fn objective<F: Scalar>(
    coef: &[F],
    z: &[Vec<F>],
    actions: &[usize],
    m: usize,
    with_hessian: bool,
) -> Objective<F> {
    let n = F::of_usize(z.len());
    let d = z.first().map_or(1, |r| r.len() + 1);
    let k = m - 1;
    let dim = k * d;
    let mut ll_terms = Vec::with_capacity(z.len());
    let mut grad = vec![F::zero(); dim];
    let mut hessian = vec![F::zero(); if with_hessian { dim * dim } else { 0 }];
    let mut row = Vec::with_capacity(d);
    for (zi, &t) in z.iter().zip(actions) {
        let p = softmax(&linear_predictors(coef, zi, m));
        ll_terms.push(p[t].ln());
        row.clear();
        row.push(F::one());
        row.extend_from_slice(zi);
        for j in 0..k {
            let resid = if t == j + 1 { F::one() } else { F::zero() } - p[j + 1];
            for a in 0..d {
                grad[j * d + a] = grad[j * d + a] + row[a] * resid;
            }
            if !with_hessian {
                continue;
            }
            for l in 0..k {
                let w = if j == l {
                    p[j + 1] * (F::one() - p[j + 1])
                } else {
                    -p[j + 1] * p[l + 1]
                };
                for a in 0..d {
                    let wa = w * row[a];
                    let start = (j * d + a) * dim + l * d;
                    for (h, &rb) in hessian[start..start + d].iter_mut().zip(&row) {
                        *h = *h + wa * rb;
                    }
                }
            }
        }
    }
    for g in grad.iter_mut() {
        *g = *g / n;
    }
    for h in hessian.iter_mut() {
        *h = *h / n;
    }
    Objective {
        loglik: pairwise_sum(&ll_terms) / n,
        grad,
        hessian,
    }
}

fn norm<F: Scalar>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Maximum-likelihood multinomial logit on standardized covariates by damped
/// Newton iterations. Stops when the gradient norm of the mean log-likelihood
/// drops below 1e-6, after 500 iterations, or when the coefficients diverge
/// (separable actions). Non-convergence is logged and flagged on the model.
pub fn fit_propensity<F: Scalar>(data: &Dataset<F>) -> Result<PropensityModel<F>> {
    let m = data.action_set().len();
    let scaler = Standardizer::fit(data.features());
    let z: Vec<Vec<F>> = data
        .features()
        .rows()
        .map(|x| {
            let mut out = Vec::with_capacity(x.len());
            scaler.transform_into(x, &mut out);
            out
        })
        .collect();
    let actions = data.actions();
    let d = data.n_features() + 1;
    let dim = (m - 1) * d;
    let tol = F::of(PROPENSITY_GRAD_TOL);

    let mut coef = vec![F::zero(); dim];
    let mut converged = false;
    let mut iterations = 0;
    let mut obj = objective(&coef, &z, actions, m, true);
    while iterations < PROPENSITY_MAX_ITER {
        if norm(&obj.grad) < tol {
            converged = true;
            break;
        }
        if coef.iter().any(|c| c.abs() > F::of(DIVERGENCE_BOUND)) {
            break;
        }
        let mut h = obj.hessian.clone();
        for a in 0..dim {
            h[a * dim + a] = h[a * dim + a] + F::of(HESSIAN_JITTER);
        }
        let Some(step) = cholesky_solve(&h, &obj.grad, dim) else {
            break;
        };
        iterations += 1;

        let mut t = F::one();
        let mut accepted = None;
        while t > F::of(1e-10) {
            let trial: Vec<F> = coef.iter().zip(&step).map(|(&c, &s)| c + t * s).collect();
            let trial_obj = objective(&trial, &z, actions, m, true);
            if trial_obj.loglik >= obj.loglik {
                accepted = Some((trial, trial_obj));
                break;
            }
            t = t * F::of(0.5);
        }
        match accepted {
            Some((c, o)) => {
                coef = c;
                obj = o;
            }
            None => break,
        }
    }

    let grad_norm = norm(&obj.grad);
    let model = PropensityModel {
        scaler,
        coef,
        action_set: data.action_set(),
        n_features: data.n_features(),
        converged,
        grad_norm,
        iterations,
    };
    if !converged {
        log::warn!(
            "propensity fit did not converge: gradient norm {:.3e} after {} iterations",
            grad_norm.as_f64(),
            iterations
        );
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint<F> {
    pub level: f64,
    pub value: F,
}

/// Distribution of the predicted propensity of one action over units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOverlap<F> {
    pub action: usize,
    pub min: F,
    pub max: F,
    pub mean: F,
    pub quantiles: Vec<QuantilePoint<F>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapDiagnostics<F> {
    pub per_action: Vec<ActionOverlap<F>>,
    /// Units with at least one propensity below the threshold.
    pub violation_count: usize,
    pub overlap_threshold: F,
    pub n: usize,
    pub converged: bool,
}

const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

impl<F: Scalar> OverlapDiagnostics<F> {
    /// Summarizes a `n x M` table of propensities.
    pub fn from_probabilities(
        probs: &[Vec<F>],
        action_set: ActionSet,
        threshold: F,
    ) -> Result<Self> {
        check_threshold(threshold, action_set)?;
        if probs.is_empty() {
            return Err(Error::InvalidParameter(
                "no propensities to summarize".into(),
            ));
        }
        let m = action_set.len();
        if let Some(row) = probs.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch {
                what: "propensity row",
                expected: m,
                found: row.len(),
            });
        }
        let violation_count = probs
            .iter()
            .filter(|row| row.iter().any(|&p| p < threshold))
            .count();
        let per_action = action_set
            .iter()
            .map(|action| {
                let mut col: Vec<F> = probs.iter().map(|r| r[action]).collect();
                let mean = pairwise_sum(&col) / F::of_usize(col.len());
                col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                ActionOverlap {
                    action,
                    min: col[0],
                    max: col[col.len() - 1],
                    mean,
                    quantiles: QUANTILE_LEVELS
                        .iter()
                        .map(|&level| QuantilePoint {
                            level,
                            value: empirical_quantile(&col, level),
                        })
                        .collect(),
                }
            })
            .collect();
        Ok(Self {
            per_action,
            violation_count,
            overlap_threshold: threshold,
            n: probs.len(),
            converged: true,
        })
    }
}

fn check_threshold<F: Scalar>(threshold: F, action_set: ActionSet) -> Result<()> {
    let upper = F::one() / F::of_usize(action_set.len());
    if threshold > F::zero() && threshold < upper {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "overlap threshold must lie in (0, 1/{}), got {threshold}",
            action_set.len()
        )))
    }
}

/// Propensity summaries over the units of `data`; `threshold` must lie in
/// `(0, 1/M)`.
pub fn overlap_report<F: Scalar>(
    model: &PropensityModel<F>,
    data: &Dataset<F>,
    threshold: F,
) -> Result<OverlapDiagnostics<F>> {
    check_threshold(threshold, model.action_set())?;
    let probs = data
        .features()
        .rows()
        .map(|x| model.predict_proba(x))
        .collect::<Result<Vec<_>>>()?;
    let mut diag = OverlapDiagnostics::from_probabilities(&probs, model.action_set(), threshold)?;
    diag.converged = model.converged();
    Ok(diag)
}
