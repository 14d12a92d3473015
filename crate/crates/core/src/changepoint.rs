//! Retrospective changepoint detection as a joint detection/estimation
//! problem.
//!
//! A series of `N` samples either stays in the nominal regime throughout
//! (null) or switches to an alternative regime after some unknown index
//! `tau` (alternative).  `tau` counts the samples still in the nominal
//! regime, so it ranges over `{0, ..., N-1}`: `tau = 0` means every sample is
//! post-change, `tau = N-1` means only the last one is.  Estimating the
//! changetime is a 0-1-cost problem on that index grid, which makes the Bayes
//! estimate the MAP changetime; everything downstream (averaged likelihood
//! ratio, posterior cost, both detection rules, calibration) comes from the
//! generic machinery in [`crate::detest`] via the [`JointModel`]
//! implementation below.
//!
//! The concrete default is i.i.d. `N(0,1)` before the change and `N(mu,1)`
//! after it.  Other per-sample distributions plug in through
//! [`SampleDensity`]; models with dependence across samples can implement
//! [`JointModel`] directly.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::detest::{CostKind, JointModel};
use crate::num::Real;
use crate::{Error, Result};

/// Which regime generated a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeriesOrigin {
    /// Nominal throughout.
    Null,
    /// First `tau` samples nominal, the remaining `N - tau` post-change.
    ChangeAt(usize),
}

/// One observed series, with the generating regime attached when known
/// (synthetic data keeps it for scoring; measured data leaves it `None`).
#[derive(Clone, Debug, PartialEq)]
pub struct DataSeries<T> {
    pub values: Vec<T>,
    pub truth: Option<SeriesOrigin>,
}

/// A per-sample distribution: log density plus sampler.
///
/// Both closures see scalars only, which hard-codes the i.i.d. structure;
/// the two regimes may use different [`SampleDensity`] values but samples
/// within a regime are independent and identically distributed.
#[derive(Clone)]
pub struct SampleDensity<T> {
    log_density: Arc<dyn Fn(T) -> T + Send + Sync>,
    sampler: Arc<dyn Fn(&mut dyn RngCore) -> T + Send + Sync>,
}

impl<T: Real> SampleDensity<T> {
    pub fn new(
        log_density: impl Fn(T) -> T + Send + Sync + 'static,
        sampler: impl Fn(&mut dyn RngCore) -> T + Send + Sync + 'static,
    ) -> Self {
        SampleDensity { log_density: Arc::new(log_density), sampler: Arc::new(sampler) }
    }

    /// Normal with the given mean and unit variance.
    pub fn gaussian(mean: T) -> Self {
        let half_log_2pi = T::from_f64_lossy(0.5 * (2.0 * std::f64::consts::PI).ln());
        SampleDensity {
            log_density: Arc::new(move |x: T| {
                let d = x - mean;
                -(d * d) / T::from_f64_lossy(2.0) - half_log_2pi
            }),
            sampler: Arc::new(move |rng: &mut dyn RngCore| {
                let z: f64 = StandardNormal.sample(&mut *rng);
                mean + T::from_f64_lossy(z)
            }),
        }
    }

    pub fn log_density(&self, x: T) -> T {
        (self.log_density)(x)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> T {
        (self.sampler)(rng)
    }
}

enum Regimes<T> {
    /// `N(0,1)` nominal, `N(mu,1)` post-change; the per-sample log ratio has
    /// the closed form `mu x - mu^2 / 2`.
    GaussianShift { mu: T },
    /// Arbitrary per-sample densities; the log ratio is evaluated as a
    /// difference of log densities.
    Custom { nominal: SampleDensity<T>, alternative: SampleDensity<T> },
}

/// The changepoint problem: series length, regime pair, changetime prior.
pub struct ChangepointModel<T> {
    n: usize,
    prior: Vec<T>,
    /// Grid coordinates handed out by `param`: `tau` as a 1-vector.
    params: Vec<T>,
    regimes: Regimes<T>,
}

impl<T: Real> ChangepointModel<T> {
    /// Gaussian mean-shift model: `N(0,1)` switching to `N(mu,1)`, uniform
    /// changetime prior.  `mu = 0` is allowed and makes the likelihood ratio
    /// degenerate at one — useful as a null-consistency check.
    pub fn gaussian(n_samples: usize, mu: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid(format!("ChangepointModel: mu = {mu} is not finite")));
        }
        Self::build(n_samples, Regimes::GaussianShift { mu })
    }

    /// Model with explicit per-sample densities and a uniform prior.
    pub fn custom(
        n_samples: usize,
        nominal: SampleDensity<T>,
        alternative: SampleDensity<T>,
    ) -> Result<Self> {
        Self::build(n_samples, Regimes::Custom { nominal, alternative })
    }

    fn build(n: usize, regimes: Regimes<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("ChangepointModel: need at least one sample"));
        }
        let uniform = T::one() / T::from_f64_lossy(n as f64);
        Ok(ChangepointModel {
            n,
            prior: vec![uniform; n],
            params: (0..n).map(|tau| T::from_f64_lossy(tau as f64)).collect(),
            regimes,
        })
    }

    /// Replaces the changetime prior.  Must have length `N`, nonnegative
    /// entries, and sum to one within round-off.
    pub fn with_prior(mut self, prior: Vec<T>) -> Result<Self> {
        if prior.len() != self.n {
            return Err(Error::invalid(format!(
                "prior length {} does not match series length {}",
                prior.len(),
                self.n
            )));
        }
        let mut sum = T::zero();
        for &p in &prior {
            if !(p >= T::zero()) || !p.is_finite() {
                return Err(Error::invalid(format!("prior weight {p} is not a finite nonnegative")));
            }
            sum += p;
        }
        let tol = T::from_f64_lossy(1e-12)
            .max(T::epsilon() * T::from_f64_lossy(16.0 * self.n as f64));
        if (sum - T::one()).abs() > tol {
            return Err(Error::invalid(format!("prior sums to {sum}, not 1")));
        }
        self.prior = prior;
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    /// Per-sample log ratio `ln h(x) - ln f(x)` of the post-change density
    /// over the nominal one.
    pub fn log_ratio_at(&self, x: T) -> T {
        match &self.regimes {
            Regimes::GaussianShift { mu } => *mu * x - *mu * *mu / T::from_f64_lossy(2.0),
            Regimes::Custom { nominal, alternative } => {
                alternative.log_density(x) - nominal.log_density(x)
            }
        }
    }

    /// Draws one series of length `N` from the given regime.
    pub fn sample_series(
        &self,
        origin: SeriesOrigin,
        rng: &mut dyn RngCore,
    ) -> Result<DataSeries<T>> {
        let pre = match origin {
            SeriesOrigin::Null => self.n,
            SeriesOrigin::ChangeAt(tau) => {
                if tau >= self.n {
                    return Err(Error::invalid(format!(
                        "changetime {tau} outside 0..{}",
                        self.n
                    )));
                }
                tau
            }
        };
        let mut values = Vec::with_capacity(self.n);
        match &self.regimes {
            Regimes::GaussianShift { mu } => {
                for k in 0..self.n {
                    let z: f64 = StandardNormal.sample(&mut *rng);
                    let mut v = T::from_f64_lossy(z);
                    if k >= pre {
                        v += *mu;
                    }
                    values.push(v);
                }
            }
            Regimes::Custom { nominal, alternative } => {
                for k in 0..self.n {
                    let d = if k < pre { nominal } else { alternative };
                    values.push(d.sample(rng));
                }
            }
        }
        Ok(DataSeries { values, truth: Some(origin) })
    }

    /// Log likelihood ratio of the series conditioned on the changetime:
    /// only the `N - tau` post-change samples contribute,
    /// `sum_{k > tau} ln h(x_k)/f(x_k)`.
    pub fn cond_llr(&self, x: &DataSeries<T>, tau: usize) -> Result<T> {
        if x.values.len() != self.n {
            return Err(Error::invalid(format!(
                "series length {} does not match model length {}",
                x.values.len(),
                self.n
            )));
        }
        if tau >= self.n {
            return Err(Error::invalid(format!("changetime {tau} outside 0..{}", self.n)));
        }
        let mut acc = T::zero();
        for &v in &x.values[tau..] {
            acc += self.log_ratio_at(v);
        }
        Ok(acc)
    }

    /// Generalized likelihood-ratio statistic: `max_tau` of the conditional
    /// log ratios with its argmax (smallest index on ties).
    pub fn glrt_stat(&self, x: &DataSeries<T>) -> (T, usize) {
        crate::detest::glrt_statistic(self, x)
    }
}

impl<T: Real> fmt::Debug for ChangepointModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.regimes {
            Regimes::GaussianShift { mu } => format!("gaussian-shift(mu={mu})"),
            Regimes::Custom { .. } => "custom".to_string(),
        };
        f.debug_struct("ChangepointModel")
            .field("n", &self.n)
            .field("regimes", &kind)
            .finish()
    }
}

/// The changepoint problem as a generic joint model: 0-1 cost on the
/// changetime grid `{0, ..., N-1}`, so `posterior_summary` yields the MAP
/// changetime and `c_o = 1 - max_tau w_tau`.
impl<T: Real> JointModel<T> for ChangepointModel<T> {
    type Obs = DataSeries<T>;

    fn cost_kind(&self) -> CostKind {
        CostKind::ZeroOne
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn param_count(&self) -> usize {
        self.n
    }

    fn param(&self, l: usize) -> &[T] {
        std::slice::from_ref(&self.params[l])
    }

    fn prior_weight(&self, l: usize) -> T {
        self.prior[l]
    }

    fn cond_llr(&self, x: &DataSeries<T>, l: usize) -> T {
        ChangepointModel::cond_llr(self, x, l).expect("series length matches the model")
    }

    fn sample_h0(&self, rng: &mut dyn RngCore) -> DataSeries<T> {
        self.sample_series(SeriesOrigin::Null, rng).expect("null sampling cannot fail")
    }

    fn sample_h1(&self, rng: &mut dyn RngCore) -> (Vec<T>, DataSeries<T>) {
        // Invert the prior CDF on one uniform draw; entropy is always f64.
        let u: f64 = rand::distributions::Standard.sample(&mut *rng);
        let mut tau = self.n - 1;
        let mut cum = 0.0;
        for (l, &p) in self.prior.iter().enumerate() {
            cum += p.to_f64_lossy();
            if u < cum {
                tau = l;
                break;
            }
        }
        let series = self.sample_series(SeriesOrigin::ChangeAt(tau), rng)
            .expect("prior draw is in range");
        (vec![self.params[tau]], series)
    }
}
