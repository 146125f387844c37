//! Direct-method value functions, regret, match rate and action frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentSource;
use crate::numeric::pairwise_sum;
use crate::policy::criterion_score;
use crate::scalar::Scalar;
use crate::types::{ActionSet, Features, PolicyAssignment, RiskCriterion};

/// Average over units of the criterion's own score at the assigned action:
/// `mu` (neutral), `mu / sigma`, `mu / sigma^2`, or the exceedance
/// probability (safety first).
pub fn value_direct<F: Scalar, M: MomentSource<F>>(
    model: &M,
    features: &Features<F>,
    assignment: &PolicyAssignment<F>,
    criterion: &RiskCriterion<F>,
) -> Result<F> {
    if features.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: features.n_cols(),
        });
    }
    if assignment.len() != features.n_rows() {
        return Err(Error::LengthMismatch {
            what: "assignment",
            expected: features.n_rows(),
            found: assignment.len(),
        });
    }
    if assignment.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot evaluate an empty assignment".into(),
        ));
    }
    let per_unit = features
        .rows()
        .zip(&assignment.actions)
        .map(|(x, &t)| Ok(criterion_score(&model.predict_moments(x, t)?, criterion).score))
        .collect::<Result<Vec<F>>>()?;
    Ok(pairwise_sum(&per_unit) / F::of_usize(per_unit.len()))
}

/// Share of outcomes at or above `y_star`.
pub fn safety_first_welfare_empirical<F: Scalar>(outcomes: &[F], y_star: F) -> F {
    if outcomes.is_empty() {
        return F::nan();
    }
    let hits = outcomes.iter().filter(|&&y| y >= y_star).count();
    F::of_usize(hits) / F::of_usize(outcomes.len())
}

/// Risk-neutral welfare loss of an alternative policy relative to the
/// first-best. Both values must come from the neutral metric on the same
/// model and data; a clearly negative result is logged as inconsistent input.
pub fn regret<F: Scalar>(value_first_best: F, value_alternative: F) -> F {
    let r = value_first_best - value_alternative;
    if r < F::of(-1e-9) {
        log::warn!("negative regret {r}: first-best value below the alternative's");
    }
    r
}

/// Fraction of units on which the two assignments agree.
pub fn match_rate<F: Scalar>(
    actual: &PolicyAssignment<F>,
    optimal: &PolicyAssignment<F>,
) -> Result<F> {
    if actual.len() != optimal.len() {
        return Err(Error::LengthMismatch {
            what: "assignments",
            expected: actual.len(),
            found: optimal.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot compare empty assignments".into(),
        ));
    }
    let same = actual
        .actions
        .iter()
        .zip(&optimal.actions)
        .filter(|(a, b)| a == b)
        .count();
    Ok(F::of_usize(same) / F::of_usize(actual.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub action: usize,
    pub count: usize,
    pub percent: f64,
}

/// Per-action counts and percentages with the total row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
    pub total: usize,
}

impl FrequencyTable {
    pub fn total_percent(&self) -> f64 {
        self.rows.iter().map(|r| r.percent).sum()
    }
}

pub fn action_frequencies<F>(
    assignment: &PolicyAssignment<F>,
    action_set: ActionSet,
) -> FrequencyTable {
    frequencies_of(&assignment.actions, action_set)
}

pub(crate) fn frequencies_of(actions: &[usize], action_set: ActionSet) -> FrequencyTable {
    let mut counts = vec![0usize; action_set.len()];
    for &a in actions {
        if a < counts.len() {
            counts[a] += 1;
        }
    }
    let total = actions.len();
    let rows = counts
        .into_iter()
        .enumerate()
        .map(|(action, count)| FrequencyRow {
            action,
            count,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
        })
        .collect();
    FrequencyTable { rows, total }
}

/// Training-data results for one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport<F> {
    pub criterion: RiskCriterion<F>,
    /// Value of the realized assignment under the criterion's own metric.
    pub value_actual: F,
    /// Value of the criterion-optimal assignment under the same metric.
    pub value_optimal: F,
    /// Neutral-metric value of the first-best minus that of this
    /// criterion's optimal assignment.
    pub regret_vs_first_best: F,
    pub match_rate: F,
    /// Frequencies of the realized actions.
    pub action_frequencies: FrequencyTable,
    /// Frequencies of the optimal actions.
    pub optimal_action_frequencies: FrequencyTable,
    pub n_used: usize,
    pub tie_count: usize,
}

/// Builds the report for one criterion from the realized assignment, the
/// criterion-optimal assignment and the risk-neutral first-best assignment.
pub fn evaluate_policy<F: Scalar, M: MomentSource<F>>(
    model: &M,
    features: &Features<F>,
    actual: &PolicyAssignment<F>,
    optimal: &PolicyAssignment<F>,
    first_best: &PolicyAssignment<F>,
) -> Result<EvaluationReport<F>> {
    let criterion = &optimal.criterion;
    let action_set = model.action_set();
    for a in [actual, optimal, first_best] {
        a.check_membership(action_set)?;
    }
    let value_actual = value_direct(model, features, actual, criterion)?;
    let value_optimal = value_direct(model, features, optimal, criterion)?;
    let neutral = RiskCriterion::Neutral;
    let regret_vs_first_best = regret(
        value_direct(model, features, first_best, &neutral)?,
        value_direct(model, features, optimal, &neutral)?,
    );
    Ok(EvaluationReport {
        criterion: criterion.clone(),
        value_actual,
        value_optimal,
        regret_vs_first_best,
        match_rate: match_rate(actual, optimal)?,
        action_frequencies: action_frequencies(actual, action_set),
        optimal_action_frequencies: action_frequencies(optimal, action_set),
        n_used: features.n_rows(),
        tie_count: optimal.ties.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::FixedMoments;
    use crate::types::AssignmentSource;

    fn assignment(actions: Vec<usize>) -> PolicyAssignment<f64> {
        PolicyAssignment {
            actions,
            criterion: RiskCriterion::Neutral,
            ties: vec![],
            source: AssignmentSource::Optimal,
        }
    }

    fn setup(n: usize) -> (FixedMoments<f64>, Features<f64>) {
        (
            FixedMoments::new(vec![(30.0, 10.0), (75.0, 65.0)], 1).unwrap(),
            Features::from_rows(&vec![vec![0.0]; n]).unwrap(),
        )
    }

    #[test]
    fn value_of_homogeneous_policies() {
        let (m, x) = setup(4);
        let v = value_direct(&m, &x, &assignment(vec![1; 4]), &RiskCriterion::Neutral).unwrap();
        assert_eq!(v, 75.0);
        let v = value_direct(&m, &x, &assignment(vec![0; 4]), &RiskCriterion::LinearRa).unwrap();
        assert_eq!(v, 3.0);
        let (m, x) = setup(2);
        let v = value_direct(&m, &x, &assignment(vec![0, 1]), &RiskCriterion::Neutral).unwrap();
        assert_eq!(v, 52.5);
    }

    #[test]
    fn value_errors() {
        let (m, x) = setup(3);
        assert!(matches!(
            value_direct(&m, &x, &assignment(vec![0, 1]), &RiskCriterion::Neutral),
            Err(Error::LengthMismatch { .. })
        ));
        let wide = Features::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            value_direct(&m, &wide, &assignment(vec![0]), &RiskCriterion::Neutral),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(value_direct(&m, &x, &assignment(vec![0, 1, 2]), &RiskCriterion::Neutral).is_err());
    }

    #[test]
    fn empirical_safety_first() {
        let y = [1.0f64, 2.0, 3.0];
        assert!((safety_first_welfare_empirical(&y, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(safety_first_welfare_empirical(&y, 0.5), 1.0);
        assert_eq!(safety_first_welfare_empirical(&y, 3.5), 0.0);
    }

    #[test]
    fn regret_examples() {
        assert!((regret(13.63f64, 11.16) - 2.47).abs() < 1e-12);
        assert_eq!(regret(7.5f64, 7.5), 0.0);
        let (m, x) = setup(3);
        let fb = value_direct(&m, &x, &assignment(vec![1; 3]), &RiskCriterion::Neutral).unwrap();
        let ra = value_direct(&m, &x, &assignment(vec![0; 3]), &RiskCriterion::Neutral).unwrap();
        assert_eq!(regret(fb, ra), 45.0);
    }

    #[test]
    fn match_rate_examples() {
        let r = match_rate(&assignment(vec![0, 1, 2]), &assignment(vec![0, 2, 2])).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            match_rate(&assignment(vec![0, 1]), &assignment(vec![0, 1])).unwrap(),
            1.0
        );
        assert_eq!(
            match_rate(&assignment(vec![0, 1]), &assignment(vec![1, 0])).unwrap(),
            0.0
        );
        assert!(matches!(
            match_rate(&assignment(vec![0]), &assignment(vec![0, 1])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn frequency_examples() {
        let set = ActionSet::new(3).unwrap();
        let t = action_frequencies(&assignment(vec![0, 0, 0, 1, 1, 1, 2, 2, 2]), set);
        assert_eq!(
            t.rows.iter().map(|r| r.count).collect::<Vec<_>>(),
            vec![3, 3, 3]
        );
        for r in &t.rows {
            assert!((r.percent - 33.33).abs() < 0.01);
        }
        assert!((t.total_percent() - 100.0).abs() < 0.01);
        let t = action_frequencies(&assignment(vec![0; 7]), set);
        assert_eq!(
            t.rows.iter().map(|r| r.count).collect::<Vec<_>>(),
            vec![7, 0, 0]
        );
        assert_eq!(t.total, 7);
    }

    #[test]
    fn report_for_two_arm_example() {
        let (m, x) = setup(4);
        let actual = assignment(vec![0, 1, 0, 1]);
        let mut optimal = assignment(vec![0; 4]);
        optimal.criterion = RiskCriterion::LinearRa;
        let fb = assignment(vec![1; 4]);
        let r = evaluate_policy(&m, &x, &actual, &optimal, &fb).unwrap();
        assert_eq!(r.value_optimal, 3.0);
        assert!((r.value_actual - (3.0 + 75.0 / 65.0) / 2.0).abs() < 1e-12);
        assert!(r.value_optimal >= r.value_actual);
        assert_eq!(r.regret_vs_first_best, 45.0);
        assert_eq!(r.match_rate, 0.5);
        assert_eq!(r.n_used, 4);
    }
}
