//! Empirical threshold calibration for both detection rules.
//!
//! All thresholds are order statistics of Monte-Carlo calibration batches.
//! The quantile convention is fixed once here: the level-`q` quantile of `n`
//! samples is the `ceil(q * n)`-th order statistic (1-based, clamped to
//! `[1, n]`).  Detection comparisons are strict (`statistic > threshold`),
//! reliability comparisons are inclusive (`cost <= threshold`), so realized
//! error rates land within `1/n` of their targets on the calibration set
//! itself.

use crate::logdomain::SignedLog;
use crate::num::Real;
use crate::{Error, Result};

use super::{coupled_statistic, Provenance, Regime, ThresholdSet};

/// Level-`q` empirical quantile under the crate-wide `ceil(q n)` convention.
///
/// Fails on an empty slice, a level outside `[0, 1]`, or NaN samples.
pub fn empirical_quantile<T: Real>(samples: &[T], level: T) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::invalid("empirical_quantile: no samples"));
    }
    let q = level.to_f64_lossy();
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("empirical_quantile: level {q} outside [0, 1]")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::numerical("empirical_quantile: NaN sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered above"));
    Ok(sorted[quantile_index(q, sorted.len())])
}

/// 0-based index of the level-`q` order statistic among `n` samples.
///
/// The product `q * n` is taken in `f64` and nudged down by 1e-9 before the
/// ceiling so that levels like 0.8 with n = 100 hit index 80, not 81, despite
/// binary round-off.
fn quantile_index(q: f64, n: usize) -> usize {
    let raw = (q * n as f64 - 1e-9).ceil();
    (raw.max(1.0).min(n as f64) as usize) - 1
}

/// An order-statistic threshold with a crude reliability indicator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantileEstimate<T> {
    pub value: T,
    /// Expected number of calibration samples beyond the threshold.
    pub expected_tail_count: f64,
    /// False when fewer than 10 samples are expected in the tail, i.e. the
    /// threshold rests on a handful of extreme order statistics.
    pub reliable: bool,
}

fn tail_estimate<T: Real>(value: T, tail_prob: f64, n: usize, what: &str) -> QuantileEstimate<T> {
    let expected_tail_count = tail_prob * n as f64;
    let reliable = expected_tail_count >= 10.0;
    if !reliable {
        log::warn!(
            "{what}: only {expected_tail_count:.1} calibration samples expected in the tail; \
             the threshold is noisy"
        );
    }
    QuantileEstimate { value, expected_tail_count, reliable }
}

/// Likelihood-ratio detection threshold at false-alarm level `alpha`: the
/// `(1 - alpha)` quantile of the null log likelihood ratios.
pub fn calibrate_gamma_np<T: Real>(
    h0_log_lrs: &[T],
    alpha: T,
) -> Result<QuantileEstimate<T>> {
    let a = alpha.to_f64_lossy();
    if !(0.0 < a && a < 1.0) {
        return Err(Error::invalid(format!("calibrate_gamma_np: alpha {a} outside (0, 1)")));
    }
    let value = empirical_quantile(h0_log_lrs, T::one() - alpha)?;
    Ok(tail_estimate(value, a, h0_log_lrs.len(), "calibrate_gamma_np"))
}

/// Cost threshold from the miss constraint: the `(1 - beta)` quantile of the
/// posterior cost under the alternative, so that
/// `P1(c_o > lambda_o) <= beta` on the calibration set.
pub fn solve_lambda_o<T: Real>(h1_costs: &[T], beta: T) -> Result<QuantileEstimate<T>> {
    let b = beta.to_f64_lossy();
    if !(0.0 < b && b < 1.0) {
        return Err(Error::invalid(format!("solve_lambda_o: beta {b} outside (0, 1)")));
    }
    let value = empirical_quantile(h1_costs, T::one() - beta)?;
    Ok(tail_estimate(value, b, h1_costs.len(), "solve_lambda_o"))
}

/// Reliability threshold for the two-step rule: the level-`fraction` quantile
/// of the posterior costs of detected alternative trials, so that about that
/// fraction of detections pass the `c_o <= lambda` check.
///
/// `fraction = 1` returns `+inf` (every detection reliable), not the maximum
/// observed cost, so the choice also holds on unseen data.
pub fn calibrate_reliability_lambda<T: Real>(
    detected_costs: &[T],
    fraction: T,
) -> Result<T> {
    let f = fraction.to_f64_lossy();
    if !(0.0 < f && f <= 1.0) {
        return Err(Error::invalid(format!(
            "calibrate_reliability_lambda: fraction {f} outside (0, 1]"
        )));
    }
    if f == 1.0 {
        return Ok(T::infinity());
    }
    empirical_quantile(detected_costs, fraction)
}

/// One summarized calibration trial: `(log_lr, c_o)`.
pub type Stat<T> = (T, T);

/// Coupled-threshold pair for a fixed `lambda`: the miss constraint pins
/// `gamma(lambda)` as the level-`beta` quantile of the signed statistics
/// under the alternative (the single-step comparison is inclusive, so about
/// `1 - beta` of alternative trials detect), and the resulting false alarm is
/// counted under the null.
fn coupled_at_lambda<T: Real>(
    h0: &[Stat<T>],
    h1: &[Stat<T>],
    beta: T,
    lambda: T,
) -> (SignedLog<T>, f64) {
    let mut h1_stats: Vec<SignedLog<T>> =
        h1.iter().map(|&(l, c)| coupled_statistic(l, c, lambda)).collect();
    h1_stats.sort();
    let gamma = h1_stats[quantile_index(beta.to_f64_lossy(), h1_stats.len())];
    let false_alarms = h0
        .iter()
        .filter(|&&(l, c)| coupled_statistic(l, c, lambda) >= gamma)
        .count();
    (gamma, false_alarms as f64 / h0.len() as f64)
}

/// Calibrates the single-step test from summarized calibration batches.
///
/// `h0` and `h1` are `(log_lr, c_o)` pairs drawn under the null and the
/// alternative.  The returned thresholds hold the empirical miss probability
/// at `beta` and drive the empirical false alarm to `alpha`:
///
/// 1. `lambda_o` is fixed by the miss constraint alone.  If thresholding the
///    cost at `lambda_o` already keeps the null acceptance mass within
///    `alpha`, that single comparison is the test (cost-threshold regime).
/// 2. Otherwise the coupled statistic `LR * (lambda - c_o)` is used.  For
///    each candidate `lambda`, `gamma(lambda)` is pinned by the miss
///    constraint; `lambda` is then driven by bracketing plus bisection until
///    the false alarm meets `alpha` within Monte-Carlo resolution
///    (`1/sqrt(n_h0)`).
///
/// Fails when the miss target undercuts the likelihood-ratio test's own miss
/// rate at the same false-alarm level (no test can do better), or when no
/// `lambda` bracket is found.
pub fn calibrate_single_step<T: Real>(
    h0: &[Stat<T>],
    h1: &[Stat<T>],
    alpha: T,
    beta: T,
) -> Result<ThresholdSet<T>> {
    let a = alpha.to_f64_lossy();
    let b = beta.to_f64_lossy();
    if !(0.0 < a && a < 1.0) || !(0.0 < b && b < 1.0) {
        return Err(Error::invalid("calibrate_single_step: alpha and beta must lie in (0, 1)"));
    }
    if h0.len() < 2 || h1.len() < 2 {
        return Err(Error::invalid("calibrate_single_step: need at least 2 trials per batch"));
    }
    for &(l, c) in h0.iter().chain(h1) {
        if l.is_nan() || c.is_nan() || c < T::zero() {
            return Err(Error::numerical(
                "calibrate_single_step: NaN or negative cost in calibration batch",
            ));
        }
    }
    let mut warnings = Vec::new();

    let h0_log_lrs: Vec<T> = h0.iter().map(|&(l, _)| l).collect();
    let h1_costs: Vec<T> = h1.iter().map(|&(_, c)| c).collect();

    let gamma_np = calibrate_gamma_np(&h0_log_lrs, alpha)?;
    if !gamma_np.reliable {
        warnings.push(format!(
            "gamma_np rests on {:.1} expected tail samples; increase the null batch",
            gamma_np.expected_tail_count
        ));
    }
    let beta_alpha = h1.iter().filter(|&&(l, _)| l <= gamma_np.value).count() as f64
        / h1.len() as f64;
    if b < beta_alpha {
        return Err(Error::invalid(format!(
            "calibrate_single_step: miss target beta = {b} is below the \
             likelihood-ratio miss rate {beta_alpha:.4} at false-alarm level {a}; \
             no test can satisfy both constraints"
        )));
    }

    let lambda_o = solve_lambda_o(&h1_costs, beta)?;
    if !lambda_o.reliable {
        warnings.push(format!(
            "lambda_o rests on {:.1} expected tail samples; increase the alternative batch",
            lambda_o.expected_tail_count
        ));
    }
    let h0_cost_mass = h0.iter().filter(|&&(_, c)| c <= lambda_o.value).count() as f64
        / h0.len() as f64;

    if h0_cost_mass <= a {
        // Thresholding the cost alone is already within the false-alarm
        // budget; no coupled statistic needed.
        return Ok(ThresholdSet {
            alpha,
            beta,
            gamma_np: gamma_np.value,
            lambda_o: lambda_o.value,
            regime: Regime::CostThresholdOnly,
            lambda: lambda_o.value,
            gamma: T::neg_infinity(),
            provenance: Provenance {
                n_h0: h0.len(),
                n_h1: h1.len(),
                beta_alpha: T::from_f64_lossy(beta_alpha),
                bisection_steps: 0,
                achieved_false_alarm: T::from_f64_lossy(h0_cost_mass),
                h0_cost_mass_at_lambda_o: T::from_f64_lossy(h0_cost_mass),
                warnings,
            },
        });
    }

    // Coupled regime. phi(lambda) = false_alarm(lambda) - alpha; accept once
    // |phi| drops below the Monte-Carlo quantization floor.
    let resolution = 1.0 / (h0.len() as f64).sqrt();
    let phi = |lambda: T| -> f64 { coupled_at_lambda(h0, h1, beta, lambda).1 - a };

    let mut best_lambda = lambda_o.value;
    let mut best_abs = f64::INFINITY;
    let consider = |lambda: T, value: f64, best_lambda: &mut T, best_abs: &mut f64| {
        if value.abs() < *best_abs {
            *best_abs = value.abs();
            *best_lambda = lambda;
        }
    };

    let mut steps = 0usize;
    let phi_at_lo = phi(lambda_o.value);
    consider(lambda_o.value, phi_at_lo, &mut best_lambda, &mut best_abs);

    let mut lo = lambda_o.value;
    let mut hi = lo;
    if phi_at_lo > resolution {
        // Bracket: grow lambda geometrically until the false alarm falls to
        // (or below) the target; the limit of the coupled test for large
        // lambda is the likelihood-ratio test, whose false alarm is alpha or
        // better once beta >= beta_alpha.
        let mut step = T::one();
        let mut bracketed = false;
        for _ in 0..40 {
            hi = lo + step;
            let value = phi(hi);
            consider(hi, value, &mut best_lambda, &mut best_abs);
            if value <= 0.0 || value.abs() <= resolution {
                bracketed = true;
                break;
            }
            step = step + step;
        }
        if !bracketed {
            return Err(Error::calibration(format!(
                "no sign change in the false-alarm residual after 40 doublings of lambda \
                 (closest {best_abs:.2e} from alpha = {a}); miss target beta = {b}, \
                 likelihood-ratio miss {beta_alpha:.4}, n_h0 = {}",
                h0.len()
            )));
        }
        // Bisect between the last phi >= 0 point and the phi <= 0 point.
        let mut lo_v = phi(lo);
        for _ in 0..60 {
            if best_abs <= resolution {
                break;
            }
            let mid = (lo + hi) / T::from_f64_lossy(2.0);
            if mid <= lo || mid >= hi {
                break; // interval exhausted at floating-point resolution
            }
            steps += 1;
            let mid_v = phi(mid);
            consider(mid, mid_v, &mut best_lambda, &mut best_abs);
            if (mid_v >= 0.0) == (lo_v >= 0.0) {
                lo = mid;
                lo_v = mid_v;
            } else {
                hi = mid;
            }
        }
    } else if phi_at_lo < -resolution {
        // Already below the budget at the smallest admissible lambda (the
        // domain is lambda >= lambda_o); larger lambda only relaxes the
        // estimation constraint, so stay at the boundary.
        warnings.push(format!(
            "false alarm at lambda_o is already {:.2e} below alpha; keeping lambda = lambda_o",
            -phi_at_lo
        ));
    }

    let lambda = best_lambda;
    let (gamma_signed, achieved) = coupled_at_lambda(h0, h1, beta, lambda);
    if gamma_signed.sign <= 0 {
        // gamma(lambda) = 0 makes the coupled comparison "c_o <= lambda";
        // that is the cost-threshold rule, so report it as such rather than
        // hand out an inconsistent coupled set.
        let mass = h0.iter().filter(|&&(_, c)| c <= lambda).count() as f64 / h0.len() as f64;
        warnings.push(format!(
            "coupled threshold degenerated to zero at lambda = {lambda}; \
             falling back to the cost-threshold comparison at that lambda"
        ));
        return Ok(ThresholdSet {
            alpha,
            beta,
            gamma_np: gamma_np.value,
            lambda_o: lambda,
            regime: Regime::CostThresholdOnly,
            lambda,
            gamma: T::neg_infinity(),
            provenance: Provenance {
                n_h0: h0.len(),
                n_h1: h1.len(),
                beta_alpha: T::from_f64_lossy(beta_alpha),
                bisection_steps: steps,
                achieved_false_alarm: T::from_f64_lossy(mass),
                h0_cost_mass_at_lambda_o: T::from_f64_lossy(mass),
                warnings,
            },
        });
    }

    Ok(ThresholdSet {
        alpha,
        beta,
        gamma_np: gamma_np.value,
        lambda_o: lambda_o.value,
        regime: Regime::Coupled,
        lambda,
        gamma: gamma_signed.log_abs,
        provenance: Provenance {
            n_h0: h0.len(),
            n_h1: h1.len(),
            beta_alpha: T::from_f64_lossy(beta_alpha),
            bisection_steps: steps,
            achieved_false_alarm: T::from_f64_lossy(achieved),
            h0_cost_mass_at_lambda_o: T::from_f64_lossy(h0_cost_mass),
            warnings,
        },
    })
}
