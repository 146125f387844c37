//! Pointwise treatment assignment under each risk criterion.
//!
//! Every criterion ranks actions by a per-unit score built from the
//! conditional moments: `mu` (risk neutral), `mu / sigma` (linear risk
//! aversion), `mu / sigma^2` (quadratic risk aversion), or the exceedance
//! probability `h = 1 - F((y* - mu) / sigma)` (safety first). The chosen
//! action is the argmax, with near-ties going to the smallest label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentSource;
use crate::scalar::Scalar;
use crate::types::{
    AssignmentSource, ConditionalMoments, Features, LocationScaleFamily, PolicyAssignment,
    RiskCriterion, TieEvent, TIE_EPSILON,
};

/// Criterion score of one action at one unit.
///
/// `rank_key` is what [`choose_action`] maximizes. It equals `score` except
/// under safety first with a strictly increasing family, where it is the
/// standardized margin `(mu - y*) / sigma`: a strictly increasing transform
/// of `h` that keeps its resolution where `h` rounds to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionScore<F> {
    pub action: usize,
    pub score: F,
    pub rank_key: F,
}

/// `Pr(Y >= y*) = 1 - F((y* - mu) / sigma)` for `Y = mu + sigma * eps`.
pub fn exceedance_probability<F: Scalar>(
    m: &ConditionalMoments<F>,
    y_star: F,
    family: &LocationScaleFamily,
) -> F {
    let z = ((y_star - m.mu) / m.sigma).as_f64();
    F::of(family.sf(z).clamp(0.0, 1.0))
}

/// Score of a single action's moments under `criterion`.
pub fn criterion_score<F: Scalar>(
    m: &ConditionalMoments<F>,
    criterion: &RiskCriterion<F>,
) -> CriterionScore<F> {
    let (score, rank_key) = match criterion {
        RiskCriterion::Neutral => (m.mu, m.mu),
        RiskCriterion::LinearRa => {
            let s = m.mu / m.sigma;
            (s, s)
        }
        RiskCriterion::QuadraticRa => {
            let s = m.mu / (m.sigma * m.sigma);
            (s, s)
        }
        RiskCriterion::SafetyFirst { y_star, family } => {
            let h = exceedance_probability(m, *y_star, family);
            if family.is_strictly_increasing() {
                (h, (m.mu - *y_star) / m.sigma)
            } else {
                (h, h)
            }
        }
    };
    CriterionScore {
        action: m.action,
        score,
        rank_key,
    }
}

/// One score per action at covariate value `x`, in action-label order.
pub fn score_actions<F: Scalar, M: MomentSource<F>>(
    model: &M,
    x: &[F],
    criterion: &RiskCriterion<F>,
) -> Result<Vec<CriterionScore<F>>> {
    model
        .action_set()
        .iter()
        .map(|t| Ok(criterion_score(&model.predict_moments(x, t)?, criterion)))
        .collect()
}

/// Argmax of the rank keys. Actions within [`TIE_EPSILON`] of the best are
/// tied; the smallest tied label is chosen and the tied labels are returned.
///
/// # Panics
///
/// If `scores` is empty.
pub fn choose_action<F: Scalar>(scores: &[CriterionScore<F>]) -> (usize, Option<Vec<usize>>) {
    assert!(!scores.is_empty(), "choose_action needs at least one score");
    let best = scores
        .iter()
        .map(|s| s.rank_key)
        .fold(F::neg_infinity(), F::max);
    let eps = F::of(TIE_EPSILON);
    let mut tied: Vec<usize> = scores
        .iter()
        .filter(|s| best - s.rank_key < eps)
        .map(|s| s.action)
        .collect();
    tied.sort_unstable();
    let chosen = tied[0];
    if tied.len() > 1 {
        (chosen, Some(tied))
    } else {
        (chosen, None)
    }
}

/// Criterion-optimal action for every row of `features`.
pub fn assign_policy<F: Scalar, M: MomentSource<F>>(
    model: &M,
    features: &Features<F>,
    criterion: &RiskCriterion<F>,
) -> Result<PolicyAssignment<F>> {
    if features.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: features.n_cols(),
        });
    }
    let mut actions = Vec::with_capacity(features.n_rows());
    let mut ties = Vec::new();
    for (unit, x) in features.rows().enumerate() {
        let scores = score_actions(model, x, criterion)?;
        let (action, tie) = choose_action(&scores);
        if let Some(actions) = tie {
            ties.push(TieEvent { unit, actions });
        }
        actions.push(action);
    }
    if !ties.is_empty() {
        log::debug!(
            "{} tied units under {} criterion",
            ties.len(),
            criterion.name()
        );
    }
    Ok(PolicyAssignment {
        actions,
        criterion: criterion.clone(),
        ties,
        source: AssignmentSource::Optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::FixedMoments;

    fn reference_moments() -> FixedMoments<f64> {
        FixedMoments::new(vec![(30.0, 10.0), (75.0, 65.0)], 1).unwrap()
    }

    fn sf0() -> RiskCriterion<f64> {
        RiskCriterion::safety_first(0.0, LocationScaleFamily::Normal).unwrap()
    }

    fn scores_of(criterion: &RiskCriterion<f64>) -> Vec<f64> {
        score_actions(&reference_moments(), &[0.0], criterion)
            .unwrap()
            .iter()
            .map(|s| s.score)
            .collect()
    }

    #[test]
    fn exceedance_at_threshold_is_one_half() {
        for sigma in [1e-6f64, 0.3, 1.0, 42.0] {
            let m = ConditionalMoments::new(0, 3.5, sigma);
            for fam in [LocationScaleFamily::Normal, LocationScaleFamily::Logistic] {
                assert!((exceedance_probability(&m, 3.5, &fam) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exceedance_reference_values() {
        let normal = LocationScaleFamily::Normal;
        let h = exceedance_probability(&ConditionalMoments::new(0, 1.0f64, 1.0), 0.0, &normal);
        assert!((h - 0.841_345).abs() < 1e-6);
        let h0 = exceedance_probability(&ConditionalMoments::new(0, 30.0f64, 10.0), 0.0, &normal);
        let h1 = exceedance_probability(&ConditionalMoments::new(1, 75.0f64, 65.0), 0.0, &normal);
        assert!((h0 - 0.998_650).abs() < 1e-6);
        assert!((h1 - 0.8757).abs() < 1e-4);
        assert!(h0 > h1);
    }

    #[test]
    fn reference_two_arm_scores() {
        assert_eq!(scores_of(&RiskCriterion::Neutral), vec![30.0, 75.0]);
        let lin = scores_of(&RiskCriterion::LinearRa);
        assert_eq!(lin[0], 3.0);
        assert!((lin[1] - 1.1538).abs() < 1e-4);
        let quad = scores_of(&RiskCriterion::QuadraticRa);
        assert!((quad[0] - 0.3).abs() < 1e-15);
        assert!((quad[1] - 0.017_751).abs() < 1e-6);
    }

    fn s(action: usize, v: f64) -> CriterionScore<f64> {
        CriterionScore {
            action,
            score: v,
            rank_key: v,
        }
    }

    #[test]
    fn choose_action_examples() {
        assert_eq!(choose_action(&[s(0, 30.0), s(1, 75.0)]), (1, None));
        assert_eq!(choose_action(&[s(0, 3.0), s(1, 1.1538)]), (0, None));
        assert_eq!(
            choose_action(&[s(0, 5.0), s(1, 5.0)]),
            (0, Some(vec![0, 1]))
        );
        assert_eq!(
            choose_action(&[s(2, 1.0), s(0, 1.0 - 1e-13), s(1, 0.5)]),
            (0, Some(vec![0, 2]))
        );
        assert_eq!(choose_action(&[s(0, 1.0), s(1, 1.0 + 2e-12)]), (1, None));
    }

    #[test]
    fn homogeneous_assignments() {
        let x = Features::from_rows(&vec![vec![0.0]; 5]).unwrap();
        let model = reference_moments();
        let neutral = assign_policy(&model, &x, &RiskCriterion::Neutral).unwrap();
        assert_eq!(neutral.actions, vec![1; 5]);
        assert_eq!(neutral.source, AssignmentSource::Optimal);
        let lin = assign_policy(&model, &x, &RiskCriterion::LinearRa).unwrap();
        assert_eq!(lin.actions, vec![0; 5]);
        let sf = assign_policy(&model, &x, &sf0()).unwrap();
        assert_eq!(sf.actions, lin.actions);
        assert!(sf.ties.is_empty());
    }

    #[test]
    fn ties_are_recorded() {
        let model = FixedMoments::new(vec![(1.0, 1.0), (1.0, 2.0)], 0).unwrap();
        let x = Features::new(3, 0, vec![]).unwrap();
        let a = assign_policy(&model, &x, &RiskCriterion::Neutral).unwrap();
        assert_eq!(a.actions, vec![0, 0, 0]);
        assert_eq!(a.ties.len(), 3);
        assert_eq!(
            a.ties[2],
            TieEvent {
                unit: 2,
                actions: vec![0, 1]
            }
        );
    }

    #[test]
    fn dimension_mismatch() {
        let x = Features::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            assign_policy(&reference_moments(), &x, &RiskCriterion::Neutral),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn saturated_exceedance_still_ranks_by_margin() {
        // h rounds to 1 for both actions; the margin still separates them.
        let model = FixedMoments::new(vec![(50.0, 1.0), (80.0, 1.0)], 0).unwrap();
        let x = Features::new(1, 0, vec![]).unwrap();
        let scores = score_actions(&model, &[], &sf0()).unwrap();
        assert_eq!(scores[0].score, scores[1].score);
        let a = assign_policy(&model, &x, &sf0()).unwrap();
        assert_eq!(a.actions, vec![1]);
    }

    #[test]
    fn tabulated_family_ranks_by_probability() {
        let tab =
            crate::types::TabulatedCdf::new(vec![(-3.0, 0.0), (0.0, 0.5), (3.0, 1.0)]).unwrap();
        let crit = RiskCriterion::safety_first(0.0, LocationScaleFamily::Tabulated(tab)).unwrap();
        let model = FixedMoments::new(vec![(1.0f64, 1.0), (5.0, 1.0), (10.0, 1.0)], 0).unwrap();
        let scores = score_actions(&model, &[], &crit).unwrap();
        assert!((scores[0].score - (0.5 + 0.5 / 3.0)).abs() < 1e-12);
        // Actions 1 and 2 both sit beyond the table: a genuine tie in h.
        let x = Features::new(1, 0, vec![]).unwrap();
        let a = assign_policy(&model, &x, &crit).unwrap();
        assert_eq!(a.actions, vec![1]);
        assert_eq!(a.ties[0].actions, vec![1, 2]);
    }
}
