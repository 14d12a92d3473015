//! Jointly optimum detection and estimation over finite parameter grids.
//!
//! A [`JointModel`] describes a binary hypothesis problem where, under the
//! alternative, an unknown parameter lives on a finite grid with a prior.
//! From one observation the module computes the averaged likelihood ratio,
//! the Bayes parameter estimate and its posterior cost, and applies either
//!
//! * the **two-step** rule: a likelihood-ratio detector followed by a
//!   reliability check on the posterior cost, or
//! * the **single-step** rule: a single test that couples the likelihood
//!   ratio with the posterior cost so that detection and estimation quality
//!   are optimized together.
//!
//! Threshold calibration for both rules lives in the `calibrate` submodule,
//! re-exported here.

mod calibrate;

pub use calibrate::{
    calibrate_gamma_np, calibrate_reliability_lambda, calibrate_single_step, empirical_quantile,
    solve_lambda_o, QuantileEstimate, Stat,
};

use rand::RngCore;

use crate::logdomain::{normalized_weights, SignedLog};
use crate::num::Real;
use crate::serialize::{json_get, parse_real, real_value};
use crate::{Error, Result};

/// Cost structure attached to the parameter estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    /// Squared Euclidean distance; the Bayes estimate is the posterior mean.
    Mse,
    /// Uniform cost (wrong grid point = 1); the Bayes estimate is the
    /// posterior mode.
    ZeroOne,
}

/// A binary hypothesis problem with a finite parameter grid under the
/// alternative.
///
/// Implementations provide the prior, the conditional log likelihood ratio of
/// an observation for each grid point, and samplers for both hypotheses.
/// Everything else (posterior summaries, tests, calibration) is generic.
pub trait JointModel<T: Real>: Sync {
    /// One observation; opaque to the generic machinery.
    type Obs;

    fn cost_kind(&self) -> CostKind;

    /// Dimension of a parameter point.
    fn param_dim(&self) -> usize;

    /// Number of grid points.
    fn param_count(&self) -> usize;

    /// Coordinates of grid point `l`.
    fn param(&self, l: usize) -> &[T];

    /// Prior probability of grid point `l`; must sum to one over the grid.
    fn prior_weight(&self, l: usize) -> T;

    /// `ln f1(x | theta_l) - ln f0(x)` for grid point `l`.
    fn cond_llr(&self, x: &Self::Obs, l: usize) -> T;

    /// Draws one observation under the null.
    fn sample_h0(&self, rng: &mut dyn RngCore) -> Self::Obs;

    /// Draws a parameter from the prior and an observation under the
    /// alternative; returns the true parameter with the observation.
    fn sample_h1(&self, rng: &mut dyn RngCore) -> (Vec<T>, Self::Obs);
}

/// Everything the tests need from one observation.
#[derive(Clone, Debug)]
pub struct PosteriorSummary<T> {
    /// `ln` of the prior-averaged likelihood ratio.
    pub log_lr: T,
    /// Bayes estimate under the model's cost (posterior mean or mode).
    pub theta_hat: Vec<T>,
    /// Index of the posterior mode; present only under `CostKind::ZeroOne`.
    pub map_index: Option<usize>,
    /// Posterior cost of `theta_hat`; nonnegative.
    pub c_o: T,
    /// Posterior weights over the grid, when retained.
    pub posterior_weights: Option<Vec<T>>,
}

/// Outcome of a detection rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    H0,
    H1Reliable,
    H1Unreliable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::H0 => "h0",
            Verdict::H1Reliable => "h1-reliable",
            Verdict::H1Unreliable => "h1-unreliable",
        }
    }

    pub fn is_detection(self) -> bool {
        !matches!(self, Verdict::H0)
    }
}

/// A verdict with the estimate attached when the verdict is a detection.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision<T> {
    pub verdict: Verdict,
    /// Parameter estimate; present iff the verdict is a detection.
    pub estimate: Option<Vec<T>>,
    /// Posterior cost of the estimate; present iff the verdict is a detection.
    pub c_o: Option<T>,
}

impl<T: Real> Decision<T> {
    fn h0() -> Self {
        Decision { verdict: Verdict::H0, estimate: None, c_o: None }
    }

    fn detection(verdict: Verdict, summary: &PosteriorSummary<T>) -> Self {
        Decision { verdict, estimate: Some(summary.theta_hat.clone()), c_o: Some(summary.c_o) }
    }
}

/// Which branch of the single-step test a calibration produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// The cost statistic alone meets the false-alarm budget: detect iff
    /// `c_o <= lambda_o`.
    CostThresholdOnly,
    /// Detect iff `LR * (lambda - c_o)` exceeds `exp(gamma)`.
    Coupled,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::CostThresholdOnly => "cost-threshold-only",
            Regime::Coupled => "coupled",
        }
    }

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cost-threshold-only" => Ok(Regime::CostThresholdOnly),
            "coupled" => Ok(Regime::Coupled),
            other => Err(Error::parse(format!("unknown regime {other:?}"))),
        }
    }
}

/// How a [`ThresholdSet`] was obtained, for reproducibility and diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance<T> {
    /// Calibration sample sizes.
    pub n_h0: usize,
    pub n_h1: usize,
    /// Empirical miss probability of the plain likelihood-ratio test at the
    /// same false-alarm level, for reference: the miss target is only
    /// attainable when it is at least this large.
    pub beta_alpha: T,
    /// Bisection steps spent solving for `lambda` (0 in the cost-threshold
    /// regime).
    pub bisection_steps: usize,
    /// Empirical false-alarm probability of the calibrated test on the
    /// calibration set.
    pub achieved_false_alarm: T,
    /// Empirical `P(c_o <= lambda_o)` under the null; the cost-threshold
    /// regime applies iff this is at most `alpha`.
    pub h0_cost_mass_at_lambda_o: T,
    pub warnings: Vec<String>,
}

/// Calibrated thresholds for the single-step test.
///
/// `gamma_np` and `gamma` are stored in the log domain; `gamma` is
/// `-inf` when the coupled threshold degenerates to "detect iff
/// `c_o < lambda`" (or in the cost-threshold regime, where it is unused).
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSet<T> {
    pub alpha: T,
    pub beta: T,
    /// Log-domain threshold of the plain likelihood-ratio test at level
    /// `alpha`, kept for reference and for two-step comparisons.
    pub gamma_np: T,
    /// Cost threshold from the miss constraint: the `1-beta` quantile of the
    /// posterior cost under the alternative.
    pub lambda_o: T,
    pub regime: Regime,
    /// Cost offset of the coupled statistic; equals `lambda_o` in the
    /// cost-threshold regime.
    pub lambda: T,
    /// Log-domain threshold of the coupled statistic.
    pub gamma: T,
    pub provenance: Provenance<T>,
}

/// Computes the averaged likelihood ratio, Bayes estimate and posterior cost
/// for one observation.
///
/// Fails when the posterior has zero mass (every grid point assigns zero
/// likelihood to the observation).
pub fn posterior_summary<T, M>(model: &M, x: &M::Obs) -> Result<PosteriorSummary<T>>
where
    T: Real,
    M: JointModel<T> + ?Sized,
{
    let count = model.param_count();
    if count == 0 {
        return Err(Error::invalid("posterior_summary: empty parameter grid"));
    }
    let mut terms = Vec::with_capacity(count);
    for l in 0..count {
        terms.push(model.prior_weight(l).ln() + model.cond_llr(x, l));
    }
    let (weights, log_lr) = normalized_weights(&terms)?;

    let dim = model.param_dim();
    let (theta_hat, map_index, c_o) = match model.cost_kind() {
        CostKind::Mse => {
            let mut mean = vec![T::zero(); dim];
            for l in 0..count {
                let w = weights[l];
                for (m, &p) in mean.iter_mut().zip(model.param(l)) {
                    *m += w * p;
                }
            }
            // Centered form: each term is nonnegative, so no cancellation.
            let mut cost = T::zero();
            for l in 0..count {
                let mut d2 = T::zero();
                for (&m, &p) in mean.iter().zip(model.param(l)) {
                    let d = p - m;
                    d2 += d * d;
                }
                cost += weights[l] * d2;
            }
            (mean, None, cost)
        }
        CostKind::ZeroOne => {
            let mut best = 0usize;
            for (l, &w) in weights.iter().enumerate() {
                if w > weights[best] {
                    best = l;
                }
            }
            (model.param(best).to_vec(), Some(best), T::one() - weights[best])
        }
    };

    let c_o = check_cost(c_o)?;
    Ok(PosteriorSummary { log_lr, theta_hat, map_index, c_o, posterior_weights: Some(weights) })
}

/// Clamps round-off-negative posterior costs to zero; anything more negative
/// is a genuine arithmetic failure.
fn check_cost<T: Real>(c_o: T) -> Result<T> {
    if c_o >= T::zero() {
        return Ok(c_o);
    }
    let tolerance = T::from_f64_lossy(-1e-9);
    if c_o >= tolerance {
        log::warn!("posterior cost {c_o} slightly negative; clamped to zero");
        Ok(T::zero())
    } else {
        Err(Error::numerical(format!("posterior cost {c_o} is negative beyond round-off")))
    }
}

/// Plain likelihood-ratio detector: `true` (detect) iff the averaged log
/// likelihood ratio strictly exceeds the log-domain threshold — ties go to
/// the null, so the empirical false alarm never overshoots its quantile
/// target.
pub fn np_decide<T: Real>(summary: &PosteriorSummary<T>, gamma_np: T) -> bool {
    summary.log_lr > gamma_np
}

/// Two-step rule: likelihood-ratio detection, then the estimate is declared
/// reliable iff its posterior cost is at most `lambda`.
///
/// `lambda = +inf` accepts every detection as reliable, which reduces the
/// rule to detection and estimation treated separately.
pub fn two_step_decide<T: Real>(
    summary: &PosteriorSummary<T>,
    gamma_np: T,
    lambda: T,
) -> Decision<T> {
    if !np_decide(summary, gamma_np) {
        return Decision::h0();
    }
    let verdict =
        if summary.c_o <= lambda { Verdict::H1Reliable } else { Verdict::H1Unreliable };
    Decision::detection(verdict, summary)
}

/// The coupled statistic `LR(x) * (lambda - c_o(x))` in signed log form.
pub fn coupled_statistic<T: Real>(log_lr: T, c_o: T, lambda: T) -> SignedLog<T> {
    SignedLog::from_positive_log(log_lr).scale_by(lambda - c_o)
}

/// Single-step rule under a calibrated [`ThresholdSet`].
///
/// In the cost-threshold regime detection means `c_o <= lambda_o`; in the
/// coupled regime it means `LR * (lambda - c_o) >= exp(gamma)` with
/// `exp(gamma) > 0`, evaluated sign-aware in the log domain so huge
/// likelihood ratios cannot overflow.  Either way a detection carries
/// `c_o < lambda` (or `<= lambda_o`), so detections are always reliable: the
/// rule never hands out an estimate that misses its own quality target.
///
/// Calibration degenerates a zero coupled threshold into the cost-threshold
/// regime, so a `Coupled` set with `gamma = -inf` (or NaN) is inconsistent
/// and rejected here.
pub fn single_step_decide<T: Real>(
    summary: &PosteriorSummary<T>,
    thresholds: &ThresholdSet<T>,
) -> Result<Decision<T>> {
    let detect = match thresholds.regime {
        Regime::CostThresholdOnly => summary.c_o <= thresholds.lambda_o,
        Regime::Coupled => {
            if !(thresholds.gamma.is_finite() || thresholds.gamma == T::infinity()) {
                return Err(Error::invalid(format!(
                    "single_step_decide: coupled regime requires a positive threshold, \
                     got log-domain gamma = {}",
                    thresholds.gamma
                )));
            }
            let stat = coupled_statistic(summary.log_lr, summary.c_o, thresholds.lambda);
            stat >= SignedLog::from_positive_log(thresholds.gamma)
        }
    };
    Ok(if detect {
        Decision::detection(Verdict::H1Reliable, summary)
    } else {
        Decision::h0()
    })
}

/// Exhaustive Bayes estimate over an explicit candidate list.
///
/// Evaluates the posterior expected cost of every candidate and returns the
/// minimizer (smallest index on ties) with its cost.  Slow by design; this is
/// the reference that the closed forms inside [`posterior_summary`] are
/// checked against.
pub fn brute_force_bayes<T, M>(
    model: &M,
    x: &M::Obs,
    candidates: &[Vec<T>],
) -> Result<(Vec<T>, T)>
where
    T: Real,
    M: JointModel<T> + ?Sized,
{
    if candidates.is_empty() {
        return Err(Error::invalid("brute_force_bayes: no candidates"));
    }
    let dim = model.param_dim();
    for c in candidates {
        if c.len() != dim {
            return Err(Error::invalid(format!(
                "brute_force_bayes: candidate dimension {} does not match model dimension {dim}",
                c.len()
            )));
        }
    }
    let summary = posterior_summary(model, x)?;
    let weights = summary.posterior_weights.as_ref().expect("weights retained");

    let mut best = 0usize;
    let mut best_cost = T::infinity();
    for (i, cand) in candidates.iter().enumerate() {
        let mut cost = T::zero();
        for l in 0..model.param_count() {
            cost += weights[l] * pointwise_cost(model.cost_kind(), cand, model.param(l));
        }
        if cost < best_cost {
            best = i;
            best_cost = cost;
        }
    }
    Ok((candidates[best].clone(), best_cost))
}

/// Cost of estimating `truth` by `estimate` under the given cost structure.
pub fn pointwise_cost<T: Real>(kind: CostKind, estimate: &[T], truth: &[T]) -> T {
    match kind {
        CostKind::Mse => {
            let mut d2 = T::zero();
            for (&e, &t) in estimate.iter().zip(truth) {
                let d = e - t;
                d2 += d * d;
            }
            d2
        }
        CostKind::ZeroOne => {
            if estimate == truth {
                T::zero()
            } else {
                T::one()
            }
        }
    }
}

/// Generalized likelihood-ratio statistic: the maximum conditional log
/// likelihood ratio over the grid, with its argmax (smallest index on ties).
pub fn glrt_statistic<T, M>(model: &M, x: &M::Obs) -> (T, usize)
where
    T: Real,
    M: JointModel<T> + ?Sized,
{
    let mut best = 0usize;
    let mut best_val = T::neg_infinity();
    for l in 0..model.param_count() {
        let v = model.cond_llr(x, l);
        if v > best_val {
            best_val = v;
            best = l;
        }
    }
    (best_val, best)
}

/// Mean cost over the trials whose verdict matches `selector`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalCost<T> {
    /// `None` when no trial matched.
    pub mean: Option<T>,
    /// Number of matching trials.
    pub count: usize,
}

pub fn conditional_cost<T, I>(trials: I, selector: Verdict) -> ConditionalCost<T>
where
    T: Real,
    I: IntoIterator<Item = (Verdict, T)>,
{
    let mut sum = T::zero();
    let mut count = 0usize;
    for (verdict, cost) in trials {
        if verdict == selector {
            sum += cost;
            count += 1;
        }
    }
    let mean = if count == 0 { None } else { Some(sum / T::from_f64_lossy(count as f64)) };
    ConditionalCost { mean, count }
}

impl<T: Real> ThresholdSet<T> {
    /// Serializes to JSON with every real carried as a decimal string of 17
    /// significant digits, so that values round-trip bit for bit.
    pub fn to_json_string(&self) -> String {
        let p = &self.provenance;
        let value = serde_json::json!({
            "alpha": real_value(self.alpha),
            "beta": real_value(self.beta),
            "gamma_np": real_value(self.gamma_np),
            "lambda_o": real_value(self.lambda_o),
            "regime": self.regime.as_str(),
            "lambda": real_value(self.lambda),
            "gamma": real_value(self.gamma),
            "provenance": {
                "n_h0": p.n_h0,
                "n_h1": p.n_h1,
                "beta_alpha": real_value(p.beta_alpha),
                "bisection_steps": p.bisection_steps,
                "achieved_false_alarm": real_value(p.achieved_false_alarm),
                "h0_cost_mass_at_lambda_o": real_value(p.h0_cost_mass_at_lambda_o),
                "warnings": p.warnings,
            },
        });
        serde_json::to_string_pretty(&value).expect("threshold set serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("threshold set: {e}")))?;
        let prov = json_get(&value, "provenance")?;
        let warnings = prov
            .get("warnings")
            .and_then(|w| w.as_array())
            .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
            .unwrap_or_default();
        let usize_field = |v: &serde_json::Value, key: &str| -> Result<usize> {
            json_get(v, key)?
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| Error::parse(format!("field {key} is not an integer")))
        };
        Ok(ThresholdSet {
            alpha: parse_real(json_get(&value, "alpha")?)?,
            beta: parse_real(json_get(&value, "beta")?)?,
            gamma_np: parse_real(json_get(&value, "gamma_np")?)?,
            lambda_o: parse_real(json_get(&value, "lambda_o")?)?,
            regime: Regime::from_str(
                json_get(&value, "regime")?
                    .as_str()
                    .ok_or_else(|| Error::parse("field regime is not a string"))?,
            )?,
            lambda: parse_real(json_get(&value, "lambda")?)?,
            gamma: parse_real(json_get(&value, "gamma")?)?,
            provenance: Provenance {
                n_h0: usize_field(&value["provenance"], "n_h0")?,
                n_h1: usize_field(&value["provenance"], "n_h1")?,
                beta_alpha: parse_real(json_get(prov, "beta_alpha")?)?,
                bisection_steps: usize_field(&value["provenance"], "bisection_steps")?,
                achieved_false_alarm: parse_real(json_get(prov, "achieved_false_alarm")?)?,
                h0_cost_mass_at_lambda_o: parse_real(json_get(
                    prov,
                    "h0_cost_mass_at_lambda_o",
                )?)?,
                warnings,
            },
        })
    }
}

impl<T: Real> PosteriorSummary<T> {
    /// JSON form with string-encoded reals; see [`ThresholdSet::to_json_string`].
    pub fn to_json_string(&self) -> String {
        let theta: Vec<_> = self.theta_hat.iter().map(|&v| real_value(v)).collect();
        let mut map = serde_json::Map::new();
        map.insert("log_lr".into(), real_value(self.log_lr));
        map.insert("theta_hat".into(), theta.into());
        if let Some(idx) = self.map_index {
            map.insert("map_index".into(), idx.into());
        }
        map.insert("c_o".into(), real_value(self.c_o));
        if let Some(w) = &self.posterior_weights {
            let w: Vec<_> = w.iter().map(|&v| real_value(v)).collect();
            map.insert("posterior_weights".into(), w.into());
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("posterior summary serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("posterior summary: {e}")))?;
        let parse_vec = |v: &serde_json::Value| -> Result<Vec<T>> {
            v.as_array()
                .ok_or_else(|| Error::parse("expected an array of reals"))?
                .iter()
                .map(parse_real)
                .collect()
        };
        Ok(PosteriorSummary {
            log_lr: parse_real(json_get(&value, "log_lr")?)?,
            theta_hat: parse_vec(json_get(&value, "theta_hat")?)?,
            map_index: value.get("map_index").and_then(|v| v.as_u64()).map(|n| n as usize),
            c_o: parse_real(json_get(&value, "c_o")?)?,
            posterior_weights: match value.get("posterior_weights") {
                Some(v) => Some(parse_vec(v)?),
                None => None,
            },
        })
    }
}

// fmt_real is re-exported here because threshold files and trial dumps share
// the same real-number encoding.
pub use crate::serialize::fmt_real as format_real;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::TabularModel;
    use approx::assert_relative_eq;

    /// Three-point grid, prior (1/4, 1/4, 1/2), every point with conditional
    /// likelihood ratio 2.  Worked by hand: weights equal the prior,
    /// `LR = 2`, posterior mean `1.25`, posterior cost
    /// `2.25 - 1.25^2 = 0.6875`.
    fn three_point_model(kind: CostKind) -> TabularModel<f64> {
        TabularModel::from_log_ratios(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0.25, 0.25, 0.5],
            vec![vec![2f64.ln(); 3]],
            kind,
        )
        .unwrap()
    }

    #[test]
    fn posterior_summary_mse_hand_worked() {
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        assert_relative_eq!(s.log_lr, 2f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(s.theta_hat[0], 1.25, max_relative = 1e-14);
        assert_relative_eq!(s.c_o, 0.6875, max_relative = 1e-13);
        assert_eq!(s.map_index, None);
        let w = s.posterior_weights.unwrap();
        assert_relative_eq!(w[0], 0.25, max_relative = 1e-14);
        assert_relative_eq!(w[2], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn posterior_summary_zero_one_hand_worked() {
        let model = three_point_model(CostKind::ZeroOne);
        let s = posterior_summary(&model, &0usize).unwrap();
        assert_eq!(s.map_index, Some(2));
        assert_eq!(s.theta_hat, vec![2.0]);
        assert_relative_eq!(s.c_o, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn posterior_summary_uncentered_identity() {
        // The centered cost must agree with sum w |theta|^2 - |theta_hat|^2.
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        let w = s.posterior_weights.as_ref().unwrap();
        let second_moment: f64 =
            (0..3).map(|l| w[l] * model.param(l)[0] * model.param(l)[0]).sum();
        let uncentered = second_moment - s.theta_hat[0] * s.theta_hat[0];
        assert_relative_eq!(s.c_o, uncentered, max_relative = 1e-12);
    }

    #[test]
    fn posterior_summary_rejects_zero_mass() {
        // Observation 0 is possible under H0 but impossible under every
        // alternative parameter, so its posterior is undefined.
        let model = TabularModel::from_log_ratios(
            vec![vec![0.0]],
            vec![1.0],
            vec![vec![f64::NEG_INFINITY], vec![0.0]],
            CostKind::Mse,
        )
        .unwrap();
        assert!(posterior_summary(&model, &0usize).is_err());
        assert!(posterior_summary(&model, &1usize).is_ok());
    }

    #[test]
    fn posterior_summary_single_point_grid() {
        // One grid point: the posterior is degenerate, the estimate exact.
        let model = TabularModel::from_log_ratios(
            vec![vec![3.0, -1.0]],
            vec![1.0],
            vec![vec![0.7]],
            CostKind::Mse,
        )
        .unwrap();
        let s = posterior_summary(&model, &0usize).unwrap();
        assert_relative_eq!(s.log_lr, 0.7, max_relative = 1e-14);
        assert_eq!(s.theta_hat, vec![3.0, -1.0]);
        assert_eq!(s.c_o, 0.0);
    }

    #[test]
    fn map_tie_breaks_to_smallest_index() {
        let model = TabularModel::from_log_ratios(
            vec![vec![0.0], vec![1.0]],
            vec![0.5, 0.5],
            vec![vec![0.3, 0.3]],
            CostKind::ZeroOne,
        )
        .unwrap();
        let s = posterior_summary(&model, &0usize).unwrap();
        assert_eq!(s.map_index, Some(0));
    }

    fn summary_with(log_lr: f64, c_o: f64) -> PosteriorSummary<f64> {
        PosteriorSummary {
            log_lr,
            theta_hat: vec![0.0],
            map_index: None,
            c_o,
            posterior_weights: None,
        }
    }

    #[test]
    fn np_decide_is_strict() {
        assert!(np_decide(&summary_with(5.0, 0.0), 3.0));
        assert!(!np_decide(&summary_with(3.0, 0.0), 3.0)); // tie goes to H0
        assert!(np_decide(&summary_with(1.0 + 1e-12, 0.0), 1.0));
        assert!(!np_decide(&summary_with(f64::NEG_INFINITY, 0.0), -700.0));
    }

    #[test]
    fn two_step_verdicts() {
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        // log_lr = ln 2, c_o = 0.6875.
        let d = two_step_decide(&s, 0.0, 0.7);
        assert_eq!(d.verdict, Verdict::H1Reliable);
        assert_eq!(d.estimate.as_deref(), Some(&[1.25][..]));
        assert_eq!(d.c_o, Some(0.6875));
        let d = two_step_decide(&s, 0.0, 0.5);
        assert_eq!(d.verdict, Verdict::H1Unreliable);
        let d = two_step_decide(&s, 1.0, 0.7);
        assert_eq!(d.verdict, Verdict::H0);
        assert!(d.estimate.is_none() && d.c_o.is_none());
        // Reliability boundary is inclusive.
        let d = two_step_decide(&s, 0.0, s.c_o);
        assert_eq!(d.verdict, Verdict::H1Reliable);
        // Infinite lambda accepts every detection as reliable.
        let d = two_step_decide(&s, 0.0, f64::INFINITY);
        assert_eq!(d.verdict, Verdict::H1Reliable);
    }

    fn coupled_thresholds(lambda: f64, gamma: f64) -> ThresholdSet<f64> {
        ThresholdSet {
            alpha: 0.1,
            beta: 0.1,
            gamma_np: 0.0,
            lambda_o: 0.1,
            regime: Regime::Coupled,
            lambda,
            gamma,
            provenance: Provenance {
                n_h0: 0,
                n_h1: 0,
                beta_alpha: 0.0,
                bisection_steps: 0,
                achieved_false_alarm: 0.0,
                h0_cost_mass_at_lambda_o: 0.0,
                warnings: Vec::new(),
            },
        }
    }

    #[test]
    fn single_step_coupled_hand_worked() {
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        // Statistic = 2 * (lambda - 0.6875). lambda = 1.6875 gives exactly 2;
        // the coupled comparison is inclusive.
        let ts = coupled_thresholds(1.6875, 2f64.ln());
        assert_eq!(single_step_decide(&s, &ts).unwrap().verdict, Verdict::H1Reliable);
        let ts = coupled_thresholds(1.6875, 2f64.ln() + 1e-9);
        assert_eq!(single_step_decide(&s, &ts).unwrap().verdict, Verdict::H0);
        // Cost above lambda: statistic negative, never detects regardless of
        // how large the likelihood ratio is.
        let ts = coupled_thresholds(0.5, -700.0);
        assert_eq!(single_step_decide(&s, &ts).unwrap().verdict, Verdict::H0);
        // A coupled set whose threshold degenerated to zero is inconsistent.
        let ts = coupled_thresholds(1.0, f64::NEG_INFINITY);
        assert!(single_step_decide(&s, &ts).is_err());
        let ts = coupled_thresholds(1.0, f64::NAN);
        assert!(single_step_decide(&s, &ts).is_err());
    }

    #[test]
    fn single_step_cost_threshold_regime() {
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        let mut ts = coupled_thresholds(0.0, 0.0);
        ts.regime = Regime::CostThresholdOnly;
        ts.lambda_o = 0.6875; // boundary is inclusive
        let d = single_step_decide(&s, &ts).unwrap();
        assert_eq!(d.verdict, Verdict::H1Reliable);
        assert_eq!(d.estimate.as_deref(), Some(&[1.25][..]));
        ts.lambda_o = 0.5;
        assert_eq!(single_step_decide(&s, &ts).unwrap().verdict, Verdict::H0);
    }

    #[test]
    fn single_step_limits_to_np_for_large_lambda() {
        // With lambda huge and gamma = gamma_bar * lambda, the coupled rule
        // LR(lambda - c_o) >= gamma_bar*lambda behaves like LR >= gamma_bar.
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let gamma_bar_log = 0.7f64;
        let lambda_o = 0.9;
        let lambda = 1e6 * lambda_o + 1.0;
        let ts = coupled_thresholds(lambda, gamma_bar_log + lambda.ln());
        let mut agree = 0usize;
        let n = 100_000;
        for _ in 0..n {
            let log_lr = 4.0 * rng.gen::<f64>() - 1.0;
            let c_o = rng.gen::<f64>();
            let s = summary_with(log_lr, c_o);
            let single = single_step_decide(&s, &ts).unwrap().verdict.is_detection();
            let np = np_decide(&s, gamma_bar_log);
            if single == np {
                agree += 1;
            }
        }
        assert!(agree as f64 >= 0.999 * n as f64, "agreement {agree}/{n}");
    }

    #[test]
    fn coupled_statistic_matches_linear_form() {
        let stat = coupled_statistic(2f64.ln(), 0.6875, 1.0);
        assert_relative_eq!(stat.to_real_lossy(), 2.0 * (1.0 - 0.6875), max_relative = 1e-12);
        let negative = coupled_statistic(2f64.ln(), 1.5, 1.0);
        assert_eq!(negative.sign, -1);
        assert_relative_eq!(negative.to_real_lossy(), -1.0, max_relative = 1e-12);
    }

    #[test]
    fn brute_force_matches_closed_forms() {
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        // Candidate grid that contains the posterior mean exactly.
        let candidates: Vec<Vec<f64>> = (0..=8).map(|i| vec![i as f64 * 0.25]).collect();
        let (best, cost) = brute_force_bayes(&model, &0usize, &candidates).unwrap();
        assert_eq!(best, vec![1.25]);
        assert_relative_eq!(cost, s.c_o, max_relative = 1e-12);

        let model = three_point_model(CostKind::ZeroOne);
        let s = posterior_summary(&model, &0usize).unwrap();
        let candidates: Vec<Vec<f64>> = (0..3).map(|l| model.param(l).to_vec()).collect();
        let (best, cost) = brute_force_bayes(&model, &0usize, &candidates).unwrap();
        assert_eq!(best, s.theta_hat);
        assert_relative_eq!(cost, s.c_o, max_relative = 1e-12);
    }

    #[test]
    fn brute_force_rejects_bad_candidates() {
        let model = three_point_model(CostKind::Mse);
        assert!(brute_force_bayes(&model, &0usize, &[]).is_err());
        assert!(brute_force_bayes(&model, &0usize, &[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn glrt_maximizes_conditional_ratio() {
        let model = TabularModel::from_log_ratios(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![1.0 / 3.0; 3],
            vec![vec![0.1, 0.9, 0.4]],
            CostKind::ZeroOne,
        )
        .unwrap();
        let (stat, idx) = glrt_statistic(&model, &0usize);
        assert_eq!(idx, 1);
        assert_relative_eq!(stat, 0.9, max_relative = 1e-14);
    }

    #[test]
    fn conditional_cost_filters_by_verdict() {
        let trials = vec![
            (Verdict::H1Reliable, 1.0),
            (Verdict::H1Unreliable, 100.0),
            (Verdict::H1Reliable, 3.0),
            (Verdict::H0, 7.0),
        ];
        let c = conditional_cost(trials.iter().cloned(), Verdict::H1Reliable);
        assert_eq!(c.count, 2);
        assert_relative_eq!(c.mean.unwrap(), 2.0, max_relative = 1e-14);
        let none = conditional_cost(std::iter::empty::<(Verdict, f64)>(), Verdict::H1Reliable);
        assert_eq!(none.count, 0);
        assert!(none.mean.is_none());
    }

    #[test]
    fn threshold_set_json_roundtrip() {
        let ts = ThresholdSet {
            alpha: 0.01,
            beta: 0.25,
            gamma_np: 5.432109876543210,
            lambda_o: 1234.5678,
            regime: Regime::Coupled,
            lambda: 2345.999999999999,
            gamma: f64::NEG_INFINITY,
            provenance: Provenance {
                n_h0: 20_000,
                n_h1: 20_000,
                beta_alpha: 0.125,
                bisection_steps: 17,
                achieved_false_alarm: 0.0099,
                h0_cost_mass_at_lambda_o: 0.4,
                warnings: vec!["example warning".to_string()],
            },
        };
        let text = ts.to_json_string();
        let back = ThresholdSet::from_json_str(&text).unwrap();
        assert_eq!(ts, back);
        // Reals are carried as strings.
        assert!(text.contains("\"2.5000000000000000e-1\""));
        assert!(text.contains("\"-inf\""));
    }

    #[test]
    fn posterior_summary_json_roundtrip() {
        let model = three_point_model(CostKind::Mse);
        let s = posterior_summary(&model, &0usize).unwrap();
        let text = s.to_json_string();
        let back: PosteriorSummary<f64> = PosteriorSummary::from_json_str(&text).unwrap();
        assert_eq!(s.log_lr, back.log_lr);
        assert_eq!(s.theta_hat, back.theta_hat);
        assert_eq!(s.c_o, back.c_o);
        assert_eq!(s.posterior_weights, back.posterior_weights);

        let lean = PosteriorSummary { posterior_weights: None, ..s.clone() };
        let back = PosteriorSummary::<f64>::from_json_str(&lean.to_json_string()).unwrap();
        assert!(back.posterior_weights.is_none());
    }

    #[test]
    fn threshold_set_rejects_malformed_json() {
        assert!(ThresholdSet::<f64>::from_json_str("not json").is_err());
        assert!(ThresholdSet::<f64>::from_json_str("{\"alpha\": \"1.0e0\"}").is_err());
    }
}
