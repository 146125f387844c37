//! Two-arm Monte Carlo experiment with jointly drawn potential outcomes.
//!
//! Each replication draws `n` independent pairs `Y0 ~ N(mu0, sigma0^2)`,
//! `Y1 ~ N(mu1, sigma1^2)` and compares three rules: risk neutral (treat
//! everyone iff `mu1 > mu0`), linear risk averse (treat everyone iff
//! `mu1/sigma1 > mu0/sigma0`) and the oracle that treats unit `i` iff
//! `Y1_i > Y0_i`. Welfare of a rule is the sample mean of realized outcomes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::FixedMoments;
use crate::numeric::{norm_cdf, norm_pdf, pairwise_sum};
use crate::policy::{choose_action, score_actions};
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::types::{AssignmentSource, PolicyAssignment, RiskCriterion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoArmParams<F> {
    pub mu0: F,
    pub mu1: F,
    pub sigma0: F,
    pub sigma1: F,
    pub n: usize,
    pub seed: u64,
}

impl<F: Scalar> TwoArmParams<F> {
    pub fn new(mu0: F, mu1: F, sigma0: F, sigma1: F, n: usize, seed: u64) -> Result<Self> {
        let p = Self {
            mu0,
            mu1,
            sigma0,
            sigma1,
            n,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    /// `mu0 = 30, mu1 = 75, sigma0 = 10, sigma1 = 65`, 100 units per draw.
    pub fn reference(seed: u64) -> Self {
        Self {
            mu0: F::of(30.0),
            mu1: F::of(75.0),
            sigma0: F::of(10.0),
            sigma1: F::of(65.0),
            n: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_sigma = |s: F| s > F::zero() && s.is_finite();
        if !self.mu0.is_finite() || !self.mu1.is_finite() {
            return Err(Error::InvalidParameter(
                "two-arm means must be finite".into(),
            ));
        }
        if !ok_sigma(self.sigma0) || !ok_sigma(self.sigma1) {
            return Err(Error::InvalidParameter(
                "two-arm standard deviations must be positive".into(),
            ));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "two-arm sample size must be positive".into(),
            ));
        }
        Ok(())
    }

    fn moments(&self) -> Result<FixedMoments<F>> {
        FixedMoments::new(vec![(self.mu0, self.sigma0), (self.mu1, self.sigma1)], 0)
    }
}

/// One joint draw of both potential outcomes for `n` units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoArmSample<F> {
    pub y0: Vec<F>,
    pub y1: Vec<F>,
}

impl<F: Scalar> TwoArmSample<F> {
    pub fn len(&self) -> usize {
        self.y0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y0.is_empty()
    }
}

fn draw_with<F: Scalar>(params: &TwoArmParams<F>, rng: &mut SeededRng) -> TwoArmSample<F> {
    let mut normal_arm = |mu: F, sigma: F| -> Vec<F> {
        (0..params.n)
            .map(|_| mu + sigma * F::of(rng.standard_normal()))
            .collect()
    };
    let y0 = normal_arm(params.mu0, params.sigma0);
    let y1 = normal_arm(params.mu1, params.sigma1);
    TwoArmSample { y0, y1 }
}

/// Draws a sample from the stream seeded by `params.seed`.
pub fn draw_two_arm<F: Scalar>(params: &TwoArmParams<F>) -> Result<TwoArmSample<F>> {
    params.validate()?;
    Ok(draw_with(params, &mut SeededRng::new(params.seed)))
}

/// The sample of replication `index` in [`run_simulation`].
pub fn draw_replication<F: Scalar>(
    params: &TwoArmParams<F>,
    index: usize,
) -> Result<TwoArmSample<F>> {
    params.validate()?;
    Ok(draw_with(
        params,
        &mut SeededRng::substream(params.seed, index as u64),
    ))
}

/// Treats unit `i` iff `y1_i > y0_i` strictly.
pub fn oracle_assignment<F: Scalar>(sample: &TwoArmSample<F>) -> PolicyAssignment<F> {
    PolicyAssignment {
        actions: sample
            .y0
            .iter()
            .zip(&sample.y1)
            .map(|(a, b)| usize::from(b > a))
            .collect(),
        criterion: RiskCriterion::Neutral,
        ties: Vec::new(),
        source: AssignmentSource::Oracle,
    }
}

/// `Y = pi * Y1 + (1 - pi) * Y0` per unit.
pub fn realized_outcomes<F: Scalar>(
    sample: &TwoArmSample<F>,
    assignment: &PolicyAssignment<F>,
) -> Result<Vec<F>> {
    if assignment.len() != sample.len() || sample.y1.len() != sample.y0.len() {
        return Err(Error::LengthMismatch {
            what: "assignment",
            expected: sample.len(),
            found: assignment.len(),
        });
    }
    assignment
        .actions
        .iter()
        .enumerate()
        .map(|(unit, &a)| match a {
            0 => Ok(sample.y0[unit]),
            1 => Ok(sample.y1[unit]),
            action => Err(Error::NonBinaryAction { unit, action }),
        })
        .collect()
}

/// Expected value of `max(Y0, Y1)` for independent normals:
/// `mu1 Phi(d) + mu0 Phi(-d) + theta phi(d)`, `theta = sqrt(sigma0^2 + sigma1^2)`,
/// `d = (mu1 - mu0) / theta`.
pub fn closed_form_oracle_welfare<F: Scalar>(params: &TwoArmParams<F>) -> F {
    let (mu0, mu1) = (params.mu0.as_f64(), params.mu1.as_f64());
    let theta = params.sigma0.as_f64().hypot(params.sigma1.as_f64());
    if theta == 0.0 {
        return F::of(mu0.max(mu1));
    }
    let d = (mu1 - mu0) / theta;
    F::of(mu1 * norm_cdf(d) + mu0 * norm_cdf(-d) + theta * norm_pdf(d))
}

/// Mean and standard error of a welfare statistic over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareEstimate<F> {
    pub mean: F,
    pub std_error: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationWelfare<F> {
    pub rn: F,
    pub ra: F,
    pub oracle: F,
    /// Units treated by the risk-neutral rule whose `Y1` fell below `mu1`.
    pub worst_case_treated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary<F> {
    pub params: TwoArmParams<F>,
    pub reps: usize,
    /// Action of the risk-neutral rule (1 = treat everyone).
    pub rn_action: usize,
    /// Action of the linear risk-averse rule.
    pub ra_action: usize,
    pub rn: WelfareEstimate<F>,
    pub ra: WelfareEstimate<F>,
    pub oracle: WelfareEstimate<F>,
    pub closed_form_rn_welfare: F,
    pub closed_form_ra_welfare: F,
    pub closed_form_oracle_welfare: F,
    pub replications: Vec<ReplicationWelfare<F>>,
}

fn estimate<F: Scalar>(values: &[F]) -> WelfareEstimate<F> {
    let k = F::of_usize(values.len());
    let mean = pairwise_sum(values) / k;
    let std_error = if values.len() > 1 {
        let sq: Vec<F> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (k - F::one()) / k).sqrt()
    } else {
        F::zero()
    };
    WelfareEstimate { mean, std_error }
}

fn uniform_assignment<F: Scalar>(
    action: usize,
    n: usize,
    criterion: RiskCriterion<F>,
) -> PolicyAssignment<F> {
    PolicyAssignment {
        actions: vec![action; n],
        criterion,
        ties: Vec::new(),
        source: AssignmentSource::Optimal,
    }
}

/// Runs `reps` replications; replication `r` draws from substream `r` of
/// `params.seed`, so the summary is a pure function of its inputs.
pub fn run_simulation<F: Scalar>(
    params: &TwoArmParams<F>,
    reps: usize,
) -> Result<MonteCarloSummary<F>> {
    params.validate()?;
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let known = params.moments()?;
    let rule = |criterion: &RiskCriterion<F>| -> Result<usize> {
        Ok(choose_action(&score_actions(&known, &[], criterion)?).0)
    };
    let rn_action = rule(&RiskCriterion::Neutral)?;
    let ra_action = rule(&RiskCriterion::LinearRa)?;
    let rn_policy = uniform_assignment(rn_action, params.n, RiskCriterion::Neutral);
    let ra_policy = uniform_assignment(ra_action, params.n, RiskCriterion::LinearRa);

    let mut replications = Vec::with_capacity(reps);
    for r in 0..reps {
        let sample = draw_with(params, &mut SeededRng::substream(params.seed, r as u64));
        let welfare = |a: &PolicyAssignment<F>| -> Result<F> {
            let y = realized_outcomes(&sample, a)?;
            Ok(pairwise_sum(&y) / F::of_usize(y.len()))
        };
        let worst_case_treated = rn_policy
            .actions
            .iter()
            .zip(&sample.y1)
            .filter(|(&a, &y1)| a == 1 && y1 < params.mu1)
            .count();
        replications.push(ReplicationWelfare {
            rn: welfare(&rn_policy)?,
            ra: welfare(&ra_policy)?,
            oracle: welfare(&oracle_assignment(&sample))?,
            worst_case_treated,
        });
    }

    let column =
        |f: fn(&ReplicationWelfare<F>) -> F| -> Vec<F> { replications.iter().map(f).collect() };
    let mu = [params.mu0, params.mu1];
    Ok(MonteCarloSummary {
        params: *params,
        reps,
        rn_action,
        ra_action,
        rn: estimate(&column(|w| w.rn)),
        ra: estimate(&column(|w| w.ra)),
        oracle: estimate(&column(|w| w.oracle)),
        closed_form_rn_welfare: mu[rn_action],
        closed_form_ra_welfare: mu[ra_action],
        closed_form_oracle_welfare: closed_form_oracle_welfare(params),
        replications,
    })
}
