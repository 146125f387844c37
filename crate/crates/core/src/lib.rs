//! Risk-adjusted optimal policy learning on observational data.
//!
//! The crate estimates per-action conditional outcome moments, assigns
//! treatments under risk-neutral, linear and quadratic risk-averse, and
//! safety-first criteria, and evaluates the resulting policies with the
//! direct method. A two-arm Monte Carlo simulator checks the decision rules
//! against closed-form welfare.
//!
//! All numeric types are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.
//!
//! ```
//! use safefirst_core::{assign_policy, FixedMoments64, Features, RiskCriterion};
//!
//! let model = FixedMoments64::new(vec![(30.0, 10.0), (75.0, 65.0)], 1).unwrap();
//! let x = Features::from_rows(&[[0.0], [1.0]]).unwrap();
//! let neutral = assign_policy(&model, &x, &RiskCriterion::Neutral).unwrap();
//! let averse = assign_policy(&model, &x, &RiskCriterion::LinearRa).unwrap();
//! assert_eq!(neutral.actions, vec![1, 1]);
//! assert_eq!(averse.actions, vec![0, 0]);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluate;
mod linalg;
pub mod moments;
pub mod numeric;
pub mod policy;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod types;

pub use error::{Error, Result};
pub use evaluate::{
    action_frequencies, evaluate_policy, match_rate, regret, safety_first_welfare_empirical,
    value_direct, EvaluationReport, FrequencyRow, FrequencyTable,
};
pub use moments::{
    fit_moments, fit_propensity, overlap_report, predict_moments, ActionOverlap, Basis,
    FixedMoments, MomentModel, MomentSource, OverlapDiagnostics, PrecomputedMoments,
    PropensityModel, QuantilePoint, RegressionMethod, RegressorConfig, PROPENSITY_GRAD_TOL,
    PROPENSITY_MAX_ITER,
};
pub use policy::{
    assign_policy, choose_action, criterion_score, exceedance_probability, score_actions,
    CriterionScore,
};
pub use rng::SeededRng;
pub use scalar::Scalar;
pub use simulate::{
    closed_form_oracle_welfare, draw_replication, draw_two_arm, oracle_assignment,
    realized_outcomes, run_simulation, MonteCarloSummary, ReplicationWelfare, TwoArmParams,
    TwoArmSample, WelfareEstimate,
};
pub use types::{
    validate_dataset, ActionSet, AssignmentSource, ConditionalMoments, CriterionKind, Dataset,
    Features, LocationScaleFamily, PolicyAssignment, RawDataset, RiskCriterion, TabulatedCdf,
    TieEvent, TIE_EPSILON, VARIANCE_FLOOR,
};

pub type Dataset64 = Dataset<f64>;
pub type RawDataset64 = RawDataset<f64>;
pub type Features64 = Features<f64>;
pub type ConditionalMoments64 = ConditionalMoments<f64>;
pub type RiskCriterion64 = RiskCriterion<f64>;
pub type PolicyAssignment64 = PolicyAssignment<f64>;
pub type MomentModel64 = MomentModel<f64>;
pub type FixedMoments64 = FixedMoments<f64>;
pub type PropensityModel64 = PropensityModel<f64>;
pub type OverlapDiagnostics64 = OverlapDiagnostics<f64>;
pub type EvaluationReport64 = EvaluationReport<f64>;
pub type TwoArmParams64 = TwoArmParams<f64>;
pub type TwoArmSample64 = TwoArmSample<f64>;
pub type MonteCarloSummary64 = MonteCarloSummary<f64>;

pub type Dataset32 = Dataset<f32>;
pub type RawDataset32 = RawDataset<f32>;
pub type Features32 = Features<f32>;
pub type ConditionalMoments32 = ConditionalMoments<f32>;
pub type RiskCriterion32 = RiskCriterion<f32>;
pub type PolicyAssignment32 = PolicyAssignment<f32>;
pub type MomentModel32 = MomentModel<f32>;
pub type FixedMoments32 = FixedMoments<f32>;
pub type PropensityModel32 = PropensityModel<f32>;
pub type OverlapDiagnostics32 = OverlapDiagnostics<f32>;
pub type EvaluationReport32 = EvaluationReport<f32>;
pub type TwoArmParams32 = TwoArmParams<f32>;
pub type TwoArmSample32 = TwoArmSample<f32>;
pub type MonteCarloSummary32 = MonteCarloSummary<f32>;
