//! Domain types shared across the toolkit: action sets, validated datasets,
//! conditional moments, risk criteria and policy assignments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{norm_cdf, norm_sf};
use crate::scalar::Scalar;

/// Score gap below which two actions are considered tied.
pub const TIE_EPSILON: f64 = 1e-12;

/// Lower bound applied to plug-in conditional variances (squared outcome units).
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// The finite treatment set `{0, 1, ..., M-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ActionSet {
    m: usize,
}

impl ActionSet {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidActionSet(m));
        }
        Ok(Self { m })
    }

    /// Number of actions `M`.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, action: usize) -> bool {
        action < self.m
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        0..self.m
    }

    pub fn labels(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub(crate) fn check(&self, action: usize) -> Result<()> {
        if self.contains(action) {
            Ok(())
        } else {
            Err(Error::UnknownAction {
                action: action as i64,
                m: self.m,
            })
        }
    }
}

impl TryFrom<usize> for ActionSet {
    type Error = Error;

    fn try_from(m: usize) -> Result<Self> {
        Self::new(m)
    }
}

impl From<ActionSet> for usize {
    fn from(a: ActionSet) -> usize {
        a.m
    }
}

/// Dense row-major covariate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features<F> {
    n_rows: usize,
    n_cols: usize,
    values: Vec<F>,
}

impl<F: Scalar> Features<F> {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<F>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::LengthMismatch {
                what: "feature values",
                expected: n_rows * n_cols,
                found: values.len(),
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Builds a matrix from rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[F]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::LengthMismatch {
                    what: "feature row",
                    expected: n_cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// Copies the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            values,
        }
    }

    pub fn as_slice(&self) -> &[F] {
        &self.values
    }
}

/// Unvalidated observational data, as read from a file or built by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset<F> {
    pub outcomes: Vec<F>,
    pub actions: Vec<i64>,
    pub features: Vec<Vec<F>>,
    pub feature_names: Option<Vec<String>>,
    pub unit_ids: Option<Vec<String>>,
}

/// Validated observational data: outcome `Y`, realized treatment `T` and
/// covariates `X` for `n` units. Rows keep their input order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    outcomes: Vec<F>,
    actions: Vec<usize>,
    features: Features<F>,
    feature_names: Vec<String>,
    unit_ids: Vec<String>,
    action_set: ActionSet,
}

/// Checks every dataset invariant and returns the validated [`Dataset`].
pub fn validate_dataset<F: Scalar>(
    raw: RawDataset<F>,
    action_set: ActionSet,
) -> Result<Dataset<F>> {
    let n = raw.outcomes.len();
    if n == 0 {
        return Err(Error::LengthMismatch {
            what: "outcomes",
            expected: 1,
            found: 0,
        });
    }
    if raw.actions.len() != n {
        return Err(Error::LengthMismatch {
            what: "actions",
            expected: n,
            found: raw.actions.len(),
        });
    }
    if raw.features.len() != n {
        return Err(Error::LengthMismatch {
            what: "feature rows",
            expected: n,
            found: raw.features.len(),
        });
    }
    let p = raw
        .feature_names
        .as_ref()
        .map_or_else(|| raw.features[0].len(), Vec::len);
    let features = Features::from_rows(&raw.features)?;
    if features.n_cols() != p {
        return Err(Error::LengthMismatch {
            what: "feature names",
            expected: features.n_cols(),
            found: p,
        });
    }
    if let Some(ids) = &raw.unit_ids {
        if ids.len() != n {
            return Err(Error::LengthMismatch {
                what: "unit ids",
                expected: n,
                found: ids.len(),
            });
        }
    }

    if let Some(row) = raw.outcomes.iter().position(|y| !y.is_finite()) {
        return Err(Error::NonFiniteValue {
            field: "outcome".into(),
            row,
        });
    }
    for (row, x) in features.rows().enumerate() {
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            let field = raw
                .feature_names
                .as_ref()
                .map_or_else(|| format!("feature {col}"), |names| names[col].clone());
            return Err(Error::NonFiniteValue { field, row });
        }
    }

    let m = action_set.len();
    let mut actions = Vec::with_capacity(n);
    let mut counts = vec![0usize; m];
    for &a in &raw.actions {
        if a < 0 || a as usize >= m {
            return Err(Error::UnknownAction { action: a, m });
        }
        counts[a as usize] += 1;
        actions.push(a as usize);
    }
    if let Some(action) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyActionCell { action });
    }

    let feature_names = raw
        .feature_names
        .unwrap_or_else(|| (0..p).map(|j| format!("x{j}")).collect());
    let unit_ids = raw
        .unit_ids
        .unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());

    Ok(Dataset {
        outcomes: raw.outcomes,
        actions,
        features,
        feature_names,
        unit_ids,
        action_set,
    })
}

impl<F: Scalar> Dataset<F> {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn outcomes(&self) -> &[F] {
        &self.outcomes
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn features(&self) -> &Features<F> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn action_set(&self) -> ActionSet {
        self.action_set
    }

    /// Row indices of the units that received `action`, in input order.
    pub fn cell_indices(&self, action: usize) -> Vec<usize> {
        self.actions
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == action).then_some(i))
            .collect()
    }

    pub fn cell_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.action_set.len()];
        for &a in &self.actions {
            counts[a] += 1;
        }
        counts
    }

    /// Converts back into the unvalidated representation.
    pub fn to_raw(&self) -> RawDataset<F> {
        RawDataset {
            outcomes: self.outcomes.clone(),
            actions: self.actions.iter().map(|&a| a as i64).collect(),
            features: self.features.rows().map(<[F]>::to_vec).collect(),
            feature_names: Some(self.feature_names.clone()),
            unit_ids: Some(self.unit_ids.clone()),
        }
    }
}

/// Conditional mean and standard deviation of the outcome under one action
/// at one covariate value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments<F> {
    pub mu: F,
    pub sigma: F,
    pub action: usize,
    /// Set when the plug-in variance fell below the floor and was clamped.
    pub floored: bool,
}

impl<F: Scalar> ConditionalMoments<F> {
    /// Moments with a known standard deviation (no flooring applied).
    pub fn new(action: usize, mu: F, sigma: F) -> Self {
        Self {
            mu,
            sigma,
            action,
            floored: false,
        }
    }

    /// Plug-in construction from a mean and a second-moment prediction:
    /// `sigma^2 = E[Y^2] - mu^2`, clamped to `variance_floor`.
    pub fn from_plug_in(action: usize, mu: F, second_moment: F, variance_floor: F) -> Self {
        let raw_var = second_moment - mu * mu;
        // NaN compares false, so a NaN plug-in is floored too.
        let floored = !(raw_var >= variance_floor);
        let var = if floored { variance_floor } else { raw_var };
        Self {
            mu,
            sigma: var.sqrt(),
            action,
            floored,
        }
    }
}

/// Standardized noise distribution `F` of a location-scale family
/// `Y = mu + sigma * eps`, `eps ~ F`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LocationScaleFamily {
    #[default]
    Normal,
    Logistic,
    /// Monotone CDF given at knots, linearly interpolated, constant beyond
    /// the first and last knot.
    Tabulated(TabulatedCdf),
}

impl LocationScaleFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Logistic => "logistic",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            Self::Normal => norm_cdf(z),
            Self::Logistic => logistic_cdf(z),
            Self::Tabulated(t) => t.cdf(z),
        }
    }

    /// Survival function `1 - F(z)`, evaluated without cancellation for the
    /// closed-form families.
    pub fn sf(&self, z: f64) -> f64 {
        match self {
            Self::Normal => norm_sf(z),
            Self::Logistic => logistic_cdf(-z),
            Self::Tabulated(t) => 1.0 - t.cdf(z),
        }
    }

    /// Whether `F` is strictly increasing on the whole real line, so that
    /// exceedance rankings reduce exactly to standardized-margin rankings.
    pub fn is_strictly_increasing(&self) -> bool {
        !matches!(self, Self::Tabulated(_))
    }
}

fn logistic_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Knots `(z_k, F(z_k))` of a tabulated CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct TabulatedCdf {
    knots: Vec<(f64, f64)>,
}

impl TabulatedCdf {
    /// Knots must have strictly increasing `z`, non-decreasing probabilities
    /// in `[0, 1]`, and reach 0 and 1 at the ends within 1e-9.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated CDF needs at least two knots".into(),
            ));
        }
        for w in knots.windows(2) {
            let ((z0, p0), (z1, p1)) = (w[0], w[1]);
            if !(z1 > z0) || !(p1 >= p0) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated CDF not monotone between z={z0} and z={z1}"
                )));
            }
        }
        let first = knots[0].1;
        let last = knots[knots.len() - 1].1;
        if !(0.0..=1e-9).contains(&first) || !(1.0 - 1e-9..=1.0).contains(&last) {
            return Err(Error::InvalidParameter(
                "tabulated CDF must run from 0 to 1".into(),
            ));
        }
        Ok(Self { knots })
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let k = &self.knots;
        if z <= k[0].0 {
            return k[0].1;
        }
        if z >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let hi = k.partition_point(|&(zk, _)| zk <= z);
        let (z0, p0) = k[hi - 1];
        let (z1, p1) = k[hi];
        p0 + (p1 - p0) * (z - z0) / (z1 - z0)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

impl TryFrom<Vec<(f64, f64)>> for TabulatedCdf {
    type Error = Error;

    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(knots)
    }
}

impl From<TabulatedCdf> for Vec<(f64, f64)> {
    fn from(t: TabulatedCdf) -> Self {
        t.knots
    }
}

/// Discriminant of [`RiskCriterion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Neutral,
    #[serde(rename = "linear")]
    LinearRa,
    #[serde(rename = "quadratic")]
    QuadraticRa,
    SafetyFirst,
}

impl CriterionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Neutral => "neutral",
            Self::LinearRa => "linear",
            Self::QuadraticRa => "quadratic",
            Self::SafetyFirst => "safety_first",
        }
    }

    pub const ALL: [CriterionKind; 4] = [
        Self::Neutral,
        Self::LinearRa,
        Self::QuadraticRa,
        Self::SafetyFirst,
    ];
}

impl std::str::FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown criterion {s:?}")))
    }
}

/// The planner's decision objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskCriterion<F> {
    /// Expected outcome `mu`.
    Neutral,
    /// `mu / sigma`.
    LinearRa,
    /// `mu / sigma^2`.
    QuadraticRa,
    /// Probability that the outcome reaches `y_star`.
    SafetyFirst {
        y_star: F,
        family: LocationScaleFamily,
    },
}

impl<F: Scalar> RiskCriterion<F> {
    pub fn safety_first(y_star: F, family: LocationScaleFamily) -> Result<Self> {
        if !y_star.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "safety-first threshold must be finite, got {y_star}"
            )));
        }
        Ok(Self::SafetyFirst { y_star, family })
    }

    pub fn kind(&self) -> CriterionKind {
        match self {
            Self::Neutral => CriterionKind::Neutral,
            Self::LinearRa => CriterionKind::LinearRa,
            Self::QuadraticRa => CriterionKind::QuadraticRa,
            Self::SafetyFirst { .. } => CriterionKind::SafetyFirst,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().as_str()
    }
}

/// A unit at which two or more actions scored within [`TIE_EPSILON`] of the best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieEvent {
    pub unit: usize,
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentSource {
    Actual,
    Optimal,
    Oracle,
}

/// Recommended (or realized) action per unit with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAssignment<F> {
    pub actions: Vec<usize>,
    pub criterion: RiskCriterion<F>,
    pub ties: Vec<TieEvent>,
    pub source: AssignmentSource,
}

impl<F: Scalar> PolicyAssignment<F> {
    /// The realized treatments of `data`, labelled with `criterion`.
    pub fn actual(data: &Dataset<F>, criterion: RiskCriterion<F>) -> Self {
        Self {
            actions: data.actions().to_vec(),
            criterion,
            ties: Vec::new(),
            source: AssignmentSource::Actual,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Fails with `UnknownAction` if any entry falls outside `action_set`.
    pub fn check_membership(&self, action_set: ActionSet) -> Result<()> {
        self.actions.iter().try_for_each(|&a| action_set.check(a))
    }
}
