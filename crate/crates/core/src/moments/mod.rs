//! Conditional outcome moments per action, `mu_t(x)` and `sigma_t(x)`, and
//! propensity/overlap diagnostics.
//!
//! The variance is the plug-in `E[Y^2 | T=t, X=x] - E[Y | T=t, X=x]^2`,
//! with each conditional expectation fitted by its own regression on the
//! units that received action `t`. Negative plug-ins are clamped to the
//! variance floor and flagged.

mod propensity;
mod regression;

use std::collections::hash_map::{Entry, HashMap};

use serde::{Deserialize, Serialize};

pub use propensity::{
    fit_propensity, overlap_report, ActionOverlap, OverlapDiagnostics, PropensityModel,
    QuantilePoint, PROPENSITY_GRAD_TOL, PROPENSITY_MAX_ITER,
};
pub use regression::{Basis, RegressionMethod};

use regression::{LeastSquaresPair, NearestNeighbors};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{ActionSet, ConditionalMoments, Dataset, Features, VARIANCE_FLOOR};

/// Choice of regressor for the moment models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressorConfig {
    pub method: RegressionMethod,
    /// Neighbours per prediction (k-nearest only).
    pub knn_k: usize,
    /// Ridge penalty on non-intercept coefficients (least squares only).
    pub ridge_lambda: f64,
    pub basis: Basis,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            method: RegressionMethod::LeastSquares,
            knn_k: 25,
            ridge_lambda: 1e-8,
            basis: Basis::LinearPlusSquares,
        }
    }
}

impl RegressorConfig {
    pub fn least_squares(basis: Basis) -> Self {
        Self {
            method: RegressionMethod::LeastSquares,
            basis,
            ..Self::default()
        }
    }

    pub fn k_nearest(k: usize) -> Self {
        Self {
            method: RegressionMethod::KNearest,
            knn_k: k,
            ..Self::default()
        }
    }

    /// Smallest admissible action cell for `p` features.
    pub fn min_cell_size(&self, p: usize) -> usize {
        match self.method {
            RegressionMethod::LeastSquares => p + 1,
            RegressionMethod::KNearest => self.knn_k.max(p + 1),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ridge_lambda must be a non-negative finite number, got {}",
                self.ridge_lambda
            )));
        }
        if self.method == RegressionMethod::KNearest && self.knn_k == 0 {
            return Err(Error::InvalidParameter("knn_k must be positive".into()));
        }
        Ok(())
    }
}

/// Anything that yields conditional moments of each action at a covariate
/// value: a fitted [`MomentModel`], known parameters, or a test double.
pub trait MomentSource<F: Scalar> {
    fn action_set(&self) -> ActionSet;

    fn n_features(&self) -> usize;

    fn predict_moments(&self, x: &[F], action: usize) -> Result<ConditionalMoments<F>>;
}

#[derive(Debug, Clone, PartialEq)]
enum CellModel<F> {
    LeastSquares(LeastSquaresPair<F>),
    KNearest(NearestNeighbors<F>),
}

impl<F: Scalar> CellModel<F> {
    fn predict(&self, x: &[F]) -> (F, F) {
        match self {
            Self::LeastSquares(m) => m.predict(x),
            Self::KNearest(m) => m.predict(x),
        }
    }
}

/// Fitted mean and second-moment regressors, one pair per action.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentModel<F> {
    cells: Vec<CellModel<F>>,
    config: RegressorConfig,
    action_set: ActionSet,
    variance_floor: F,
    training_n: usize,
    n_features: usize,
}

/// Fits `E[Y | T=t, X]` and `E[Y^2 | T=t, X]` separately on each action cell.
pub fn fit_moments<F: Scalar>(
    data: &Dataset<F>,
    config: &RegressorConfig,
) -> Result<MomentModel<F>> {
    config.validate()?;
    let p = data.n_features();
    let required = config.min_cell_size(p);
    let action_set = data.action_set();

    let mut cells = Vec::with_capacity(action_set.len());
    for action in action_set.iter() {
        let idx = data.cell_indices(action);
        if idx.len() < required {
            return Err(Error::InsufficientCellSize {
                action,
                size: idx.len(),
                required,
            });
        }
        let x = data.features().select_rows(&idx);
        let y: Vec<F> = idx.iter().map(|&i| data.outcomes()[i]).collect();
        let cell = match config.method {
            RegressionMethod::LeastSquares => CellModel::LeastSquares(
                LeastSquaresPair::fit(&x, &y, config.basis, F::of(config.ridge_lambda))
                    .ok_or(Error::SingularDesign { action })?,
            ),
            RegressionMethod::KNearest => {
                CellModel::KNearest(NearestNeighbors::fit(&x, &y, config.knn_k))
            }
        };
        log::debug!(
            "fitted moment models for action {action} on {} units",
            idx.len()
        );
        cells.push(cell);
    }

    Ok(MomentModel {
        cells,
        config: *config,
        action_set,
        variance_floor: F::of(VARIANCE_FLOOR),
        training_n: data.len(),
        n_features: p,
    })
}

impl<F: Scalar> MomentModel<F> {
    pub fn config(&self) -> &RegressorConfig {
        &self.config
    }

    pub fn variance_floor(&self) -> F {
        self.variance_floor
    }

    pub fn training_n(&self) -> usize {
        self.training_n
    }
}

impl<F: Scalar> MomentSource<F> for MomentModel<F> {
    fn action_set(&self) -> ActionSet {
        self.action_set
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_moments(&self, x: &[F], action: usize) -> Result<ConditionalMoments<F>> {
        self.action_set.check(action)?;
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let (mean, second) = self.cells[action].predict(x);
        Ok(ConditionalMoments::from_plug_in(
            action,
            mean,
            second,
            self.variance_floor,
        ))
    }
}

/// Convenience wrapper around [`MomentSource::predict_moments`].
pub fn predict_moments<F: Scalar, M: MomentSource<F>>(
    model: &M,
    x: &[F],
    action: usize,
) -> Result<ConditionalMoments<F>> {
    model.predict_moments(x, action)
}

/// Known, covariate-independent moments `(mu_t, sigma_t)` per action.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedMoments<F> {
    moments: Vec<(F, F)>,
    n_features: usize,
}

impl<F: Scalar> FixedMoments<F> {
    /// `moments[t] = (mu_t, sigma_t)`; every sigma must be positive.
    pub fn new(moments: Vec<(F, F)>, n_features: usize) -> Result<Self> {
        ActionSet::new(moments.len())?;
        if let Some((mu, sigma)) = moments
            .iter()
            .find(|(mu, sigma)| !mu.is_finite() || !(*sigma > F::zero()) || !sigma.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "moments must be finite with positive sigma, got ({mu}, {sigma})"
            )));
        }
        Ok(Self {
            moments,
            n_features,
        })
    }
}

impl<F: Scalar> MomentSource<F> for FixedMoments<F> {
    fn action_set(&self) -> ActionSet {
        ActionSet::new(self.moments.len()).expect("checked at construction")
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_moments(&self, x: &[F], action: usize) -> Result<ConditionalMoments<F>> {
        self.action_set().check(action)?;
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let (mu, sigma) = self.moments[action];
        Ok(ConditionalMoments::new(action, mu, sigma))
    }
}

/// Moments of every action at a fixed set of covariate rows, computed once.
///
/// Queries at a stored row are answered from the table; any other `x` falls
/// through to the wrapped source. Rows are matched on their exact bit
/// patterns, so answers are identical to the wrapped source's.
#[derive(Debug, Clone)]
pub struct PrecomputedMoments<'a, F, M> {
    inner: &'a M,
    index: HashMap<Vec<u64>, usize>,
    table: Vec<Vec<ConditionalMoments<F>>>,
}

fn row_key<F: Scalar>(x: &[F]) -> Vec<u64> {
    x.iter().map(|v| v.as_f64().to_bits()).collect()
}

impl<'a, F: Scalar, M: MomentSource<F>> PrecomputedMoments<'a, F, M> {
    pub fn new(inner: &'a M, rows: &Features<F>) -> Result<Self> {
        if rows.n_cols() != inner.n_features() {
            return Err(Error::DimensionMismatch {
                expected: inner.n_features(),
                found: rows.n_cols(),
            });
        }
        let mut index = HashMap::new();
        let mut table = Vec::new();
        for x in rows.rows() {
            if let Entry::Vacant(slot) = index.entry(row_key(x)) {
                slot.insert(table.len());
                table.push(
                    inner
                        .action_set()
                        .iter()
                        .map(|t| inner.predict_moments(x, t))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
        }
        Ok(Self {
            inner,
            index,
            table,
        })
    }

    /// Distinct rows held in the table.
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl<F: Scalar, M: MomentSource<F>> MomentSource<F> for PrecomputedMoments<'_, F, M> {
    fn action_set(&self) -> ActionSet {
        self.inner.action_set()
    }

    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn predict_moments(&self, x: &[F], action: usize) -> Result<ConditionalMoments<F>> {
        match self.index.get(&row_key(x)) {
            Some(&row) if action < self.table[row].len() => Ok(self.table[row][action]),
            _ => self.inner.predict_moments(x, action),
        }
    }
}
