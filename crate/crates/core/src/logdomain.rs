//! Log-domain arithmetic helpers.
//!
//! Likelihood ratios in the radar application reach magnitudes of several
//! hundred in the exponent, so every statistic that multiplies or sums
//! likelihoods is carried in the log domain.  Signed quantities (a likelihood
//! ratio times a factor that may be negative) are represented by
//! [`SignedLog`], a sign plus log-magnitude pair with a total order.

use std::cmp::Ordering;

use crate::num::Real;

/// `ln(sum_i exp(terms[i]))` computed with the usual max-shift so that no
/// intermediate overflows.
///
/// An empty slice and a slice of all `-inf` both return `-inf` (an empty sum).
/// A `+inf` term dominates and returns `+inf`.
pub fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let mut max = T::neg_infinity();
    for &t in terms {
        if t > max {
            max = t;
        }
    }
    if max.is_infinite() {
        // Either everything is -inf (empty sum) or something is +inf.
        return max;
    }
    let mut sum = T::zero();
    for &t in terms {
        sum += (t - max).exp();
    }
    max + sum.ln()
}

/// Normalizes log-domain terms into linear-domain weights.
///
/// Returns the weight vector `w_i = exp(terms[i] - L)` together with
/// `L = log_sum_exp(terms)`.  The weights sum to one up to round-off.
/// Fails when the total mass is zero (all terms `-inf`) because no
/// normalization exists.
pub fn normalized_weights<T: Real>(terms: &[T]) -> crate::Result<(Vec<T>, T)> {
    let total = log_sum_exp(terms);
    if total == T::neg_infinity() {
        return Err(crate::Error::numerical(
            "cannot normalize weights: total probability mass is zero",
        ));
    }
    if !total.is_finite() {
        return Err(crate::Error::numerical(
            "cannot normalize weights: total probability mass overflows",
        ));
    }
    let weights = terms.iter().map(|&t| (t - total).exp()).collect();
    Ok((weights, total))
}

/// A real number stored as `sign * exp(log_abs)`.
///
/// `sign` is -1, 0 or +1; zero is canonically `(0, -inf)`.  The order is the
/// numerical order of the represented values and is total, which lets order
/// statistics be taken over statistics that would overflow `f64` in linear
/// form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog<T> {
    pub sign: i8,
    pub log_abs: T,
}

impl<T: Real> SignedLog<T> {
    pub fn zero() -> Self {
        SignedLog { sign: 0, log_abs: T::neg_infinity() }
    }

    /// Exact representation of an ordinary real. Panics on NaN: a NaN here is
    /// always an upstream arithmetic bug and would silently break the total
    /// order.
    pub fn from_real(x: T) -> Self {
        assert!(!x.is_nan(), "SignedLog::from_real: NaN input");
        if x == T::zero() {
            Self::zero()
        } else if x > T::zero() {
            SignedLog { sign: 1, log_abs: x.ln() }
        } else {
            SignedLog { sign: -1, log_abs: (-x).ln() }
        }
    }

    /// The positive number `exp(log)`. Panics on NaN.
    pub fn from_positive_log(log: T) -> Self {
        assert!(!log.is_nan(), "SignedLog::from_positive_log: NaN input");
        if log == T::neg_infinity() {
            Self::zero()
        } else {
            SignedLog { sign: 1, log_abs: log }
        }
    }

    /// Multiplies by an ordinary real without leaving the log domain.
    pub fn scale_by(self, factor: T) -> Self {
        assert!(!factor.is_nan(), "SignedLog::scale_by: NaN factor");
        if self.sign == 0 || factor == T::zero() {
            return Self::zero();
        }
        let sign = if factor > T::zero() { self.sign } else { -self.sign };
        SignedLog { sign, log_abs: self.log_abs + factor.abs().ln() }
    }

    /// Converts back to linear form; large magnitudes saturate to `±inf`.
    pub fn to_real_lossy(self) -> T {
        match self.sign {
            0 => T::zero(),
            1 => self.log_abs.exp(),
            _ => -self.log_abs.exp(),
        }
    }
}

impl<T: Real> Eq for SignedLog<T> {}

impl<T: Real> PartialOrd for SignedLog<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for SignedLog<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            unequal => return unequal,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.log_abs.partial_cmp(&other.log_abs).expect("NaN log_abs"),
            _ => other.log_abs.partial_cmp(&self.log_abs).expect("NaN log_abs"),
        }
    }
}
