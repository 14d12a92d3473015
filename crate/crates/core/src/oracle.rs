//! Slow, independent re-derivations of the core identities, runnable as
//! randomized self-check suites.
//!
//! [`TabularModel`] is a fully enumerable joint model over a handful of
//! discrete observations — transparent enough to check the generic machinery
//! against plain arithmetic.  The suite functions each hammer one structural
//! identity over randomized inputs and report the worst discrepancy found:
//!
//! * [`bayes_optimality_suite`] — the closed-form estimates (posterior mean,
//!   MAP) really minimize posterior expected cost, by exhaustive candidate
//!   search;
//! * [`det_identity_suite`] — complex Cholesky determinants and quadratic
//!   forms against the doubled real embedding;
//! * [`fading_average_suite`] — the radar fading-averaged likelihood ratio
//!   against brute-force Monte-Carlo averaging of the conditional ratio;
//! * [`changepoint_identity_suite`] — changepoint posterior quantities
//!   against direct linear-domain sums.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::changepoint::{ChangepointModel, SeriesOrigin};
use crate::detest::{
    brute_force_bayes, glrt_statistic, posterior_summary, CostKind, JointModel,
};
use crate::linalg::{real_embedding, CMatrix};
use crate::logdomain::log_sum_exp;
use crate::num::Real;
use crate::radar::{
    build_region_grid, compute_q, conditional_log_lr_given_g, det_identity_check, sample_target,
    GridMatchedFilter, RadarScene, RadarTruth, RegionMode,
};
use crate::{Error, Result};

/// A joint model over finitely many observation values, given by explicit
/// tables.  `Obs = usize` indexes the observation alphabet.
#[derive(Clone, Debug)]
pub struct TabularModel<T> {
    params: Vec<Vec<T>>,
    prior: Vec<T>,
    /// `tables[x][l]` = conditional log likelihood ratio of observation `x`
    /// under parameter `l`; `-inf` marks an observation impossible there.
    tables: Vec<Vec<T>>,
    /// Null pmf over the observation alphabet.
    p0: Vec<T>,
    /// `p1[x][l]` = conditional pmf under parameter `l`.
    p1: Vec<Vec<T>>,
    kind: CostKind,
}

fn validate_params_prior<T: Real>(params: &[Vec<T>], prior: &[T]) -> Result<()> {
    if params.is_empty() {
        return Err(Error::invalid("TabularModel: empty parameter list"));
    }
    let dim = params[0].len();
    if dim == 0 || params.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("TabularModel: inconsistent parameter dimensions"));
    }
    if params.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("TabularModel: non-finite parameter value"));
    }
    if prior.len() != params.len() {
        return Err(Error::invalid("TabularModel: prior length does not match parameters"));
    }
    if prior.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
        return Err(Error::invalid("TabularModel: prior weights must be positive and finite"));
    }
    let sum = prior.iter().fold(T::zero(), |a, &b| a + b).to_f64_lossy();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("TabularModel: prior sums to {sum}, not 1")));
    }
    Ok(())
}

impl<T: Real> TabularModel<T> {
    /// Builds the model from conditional log likelihood ratio tables,
    /// `tables[x][l]`.  `-inf` entries are allowed; `NaN` and `+inf` are not.
    ///
    /// Ratio tables do not pin down the sampling distributions, so this
    /// constructor takes the null law to be uniform over the alphabet and
    /// renormalizes the tilted law per parameter for `sample_h1`.  Inference
    /// (`cond_llr`) uses the given ratios verbatim; when exact consistency
    /// between sampling and inference matters, use
    /// [`TabularModel::from_densities`].
    pub fn from_log_ratios(
        params: Vec<Vec<T>>,
        prior: Vec<T>,
        tables: Vec<Vec<T>>,
        kind: CostKind,
    ) -> Result<Self> {
        validate_params_prior(&params, &prior)?;
        let n_params = params.len();
        if tables.is_empty() {
            return Err(Error::invalid("TabularModel: empty observation alphabet"));
        }
        if tables.iter().any(|row| row.len() != n_params) {
            return Err(Error::invalid("TabularModel: table row length does not match parameters"));
        }
        for &v in tables.iter().flatten() {
            if v.is_nan() || v == T::infinity() {
                return Err(Error::invalid(
                    "TabularModel: log ratios must be finite or -inf",
                ));
            }
        }
        let n_obs = tables.len();
        let log_uniform = -T::from_f64_lossy(n_obs as f64).ln();
        let p0 = vec![T::one() / T::from_f64_lossy(n_obs as f64); n_obs];
        let mut p1 = vec![vec![T::zero(); n_params]; n_obs];
        for l in 0..n_params {
            let terms: Vec<T> = (0..n_obs).map(|x| log_uniform + tables[x][l]).collect();
            let mass = log_sum_exp(&terms);
            if mass == T::neg_infinity() {
                return Err(Error::invalid(format!(
                    "TabularModel: parameter {l} assigns zero mass to every observation"
                )));
            }
            for x in 0..n_obs {
                p1[x][l] = (terms[x] - mass).exp();
            }
        }
        Ok(TabularModel { params, prior, tables, p0, p1, kind })
    }

    /// Builds the model from explicit pmfs: `p0[x]` under the null (strictly
    /// positive so ratios stay well defined) and `p1[x][l]` under parameter
    /// `l`.  Each pmf must sum to 1 within `1e-9`.
    pub fn from_densities(
        params: Vec<Vec<T>>,
        prior: Vec<T>,
        p0: Vec<T>,
        p1: Vec<Vec<T>>,
        kind: CostKind,
    ) -> Result<Self> {
        validate_params_prior(&params, &prior)?;
        let n_params = params.len();
        let n_obs = p0.len();
        if n_obs == 0 {
            return Err(Error::invalid("TabularModel: empty observation alphabet"));
        }
        if p0.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::invalid("TabularModel: null pmf must be strictly positive"));
        }
        let s0 = p0.iter().fold(T::zero(), |a, &b| a + b).to_f64_lossy();
        if (s0 - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("TabularModel: null pmf sums to {s0}, not 1")));
        }
        if p1.len() != n_obs || p1.iter().any(|row| row.len() != n_params) {
            return Err(Error::invalid("TabularModel: alternative pmf has wrong shape"));
        }
        for l in 0..n_params {
            let mut sum = T::zero();
            for row in &p1 {
                let v = row[l];
                if !(v >= T::zero()) || !v.is_finite() {
                    return Err(Error::invalid(
                        "TabularModel: alternative pmf entries must be finite and nonnegative",
                    ));
                }
                sum += v;
            }
            let s = sum.to_f64_lossy();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "TabularModel: pmf of parameter {l} sums to {s}, not 1"
                )));
            }
        }
        let tables = (0..n_obs)
            .map(|x| (0..n_params).map(|l| (p1[x][l] / p0[x]).ln()).collect())
            .collect();
        Ok(TabularModel { params, prior, tables, p0, p1, kind })
    }

    pub fn n_obs(&self) -> usize {
        self.p0.len()
    }

    /// Null probability of observation `x`.
    pub fn null_prob(&self, x: usize) -> T {
        self.p0[x]
    }

    /// Probability of observation `x` under parameter `l`.
    pub fn alt_prob(&self, x: usize, l: usize) -> T {
        self.p1[x][l]
    }
}

fn draw_categorical<T: Real>(pmf: &[T], rng: &mut dyn RngCore) -> usize {
    let u: f64 = (&mut *rng).gen();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in pmf.iter().enumerate() {
        let w = w.to_f64_lossy();
        if w > 0.0 {
            last_positive = i;
        }
        cum += w;
        if u < cum {
            return i;
        }
    }
    last_positive
}

impl<T: Real> JointModel<T> for TabularModel<T> {
    type Obs = usize;

    fn cost_kind(&self) -> CostKind {
        self.kind
    }

    fn param_dim(&self) -> usize {
        self.params[0].len()
    }

    fn param_count(&self) -> usize {
        self.params.len()
    }

    fn param(&self, l: usize) -> &[T] {
        &self.params[l]
    }

    fn prior_weight(&self, l: usize) -> T {
        self.prior[l]
    }

    fn cond_llr(&self, x: &usize, l: usize) -> T {
        self.tables[*x][l]
    }

    fn sample_h0(&self, rng: &mut dyn RngCore) -> usize {
        draw_categorical(&self.p0, rng)
    }

    fn sample_h1(&self, rng: &mut dyn RngCore) -> (Vec<T>, usize) {
        let l = draw_categorical(&self.prior, rng);
        let column: Vec<T> = self.p1.iter().map(|row| row[l]).collect();
        let x = draw_categorical(&column, rng);
        (self.params[l].clone(), x)
    }
}

/// Outcome of one verification suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    /// Individual checks performed.
    pub cases: usize,
    /// Checks whose discrepancy exceeded the tolerance.
    pub failures: usize,
    /// Largest discrepancy seen, in the suite's own error measure.
    pub worst: f64,
    pub tolerance: f64,
    /// Context lines for the first few failures.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        SuiteReport { name, cases: 0, failures: 0, worst: 0.0, tolerance, notes: Vec::new() }
    }

    fn record(&mut self, err: f64, context: impl Fn() -> String) {
        self.cases += 1;
        if err.is_nan() || err > self.worst {
            self.worst = err;
        }
        if !(err <= self.tolerance) {
            self.failures += 1;
            if self.notes.len() < 8 {
                self.notes.push(format!("err {err:.3e}: {}", context()));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} checks, worst {:.3e} (tolerance {:.1e}) — {}",
            self.name,
            self.cases,
            self.worst,
            self.tolerance,
            if self.passed() { "ok" } else { "FAILED" }
        )?;
        for note in &self.notes {
            write!(f, "\n  {note}")?;
        }
        Ok(())
    }
}

fn uniform_in<T: Real>(lo: f64, hi: f64, rng: &mut dyn RngCore) -> T {
    let u: f64 = (&mut *rng).gen();
    T::from_f64_lossy(lo + (hi - lo) * u)
}

/// Random simplex point with strictly positive entries.
fn random_pmf(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>().max(1e-12)).ln() + 1e-6).collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Checks, by exhaustive candidate search, that the closed-form estimates of
/// [`posterior_summary`] minimize the posterior expected cost.
///
/// Each random model has at most 5 parameters and 6 observation values, so
/// the posterior is enumerable exactly.  For squared error the candidate set
/// is the parameter grid, the posterior mean itself, and random
/// perturbations of it; for 0-1 cost it is the grid.  The recorded error is
/// how far the closed form falls short of the best candidate (clamped at
/// zero), plus the discrepancy between the summary's stated cost and a
/// brute-force evaluation of its own estimate.
pub fn bayes_optimality_suite(n_models: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("bayes-optimality", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_models {
        let n_params = 2 + i % 4; // 2..=5
        let n_obs = 2 + i % 5; // 2..=6
        let dim = 1 + i % 2;
        let kind = if i % 2 == 0 { CostKind::Mse } else { CostKind::ZeroOne };

        let params: Vec<Vec<f64>> = (0..n_params)
            .map(|_| (0..dim).map(|_| uniform_in::<f64>(-2.0, 2.0, &mut rng)).collect())
            .collect();
        let prior = random_pmf(n_params, &mut rng);
        let p0 = random_pmf(n_obs, &mut rng);
        // Column pmfs with occasional hard zeros, keeping every observation
        // reachable under at least one parameter.
        let mut p1 = vec![vec![0.0f64; n_params]; n_obs];
        for l in 0..n_params {
            let mut col = random_pmf(n_obs, &mut rng);
            for v in col.iter_mut() {
                if rng.gen::<f64>() < 0.15 {
                    *v = 0.0;
                }
            }
            if col.iter().all(|&v| v == 0.0) {
                col[l % n_obs] = 1.0;
            }
            let sum: f64 = col.iter().sum();
            for (x, v) in col.iter().enumerate() {
                p1[x][l] = v / sum;
            }
        }
        for x in 0..n_obs {
            if p1[x].iter().all(|&v| v == 0.0) {
                // Give the first parameter some mass here and renormalize.
                p1[x][0] = 0.5;
                let sum: f64 = (0..n_obs).map(|y| p1[y][0]).sum();
                for y in 0..n_obs {
                    p1[y][0] /= sum;
                }
            }
        }

        let model =
            TabularModel::from_densities(params.clone(), prior, p0, p1, kind).expect("valid model");
        let summaries: Vec<_> = (0..n_obs)
            .map(|x| posterior_summary(&model, &x).expect("reachable observation"))
            .collect();
        for (x, summary) in summaries.iter().enumerate() {
            let mut candidates = params.clone();
            if kind == CostKind::Mse {
                candidates.push(summary.theta_hat.clone());
                for _ in 0..40 {
                    let jitter: Vec<f64> = summary
                        .theta_hat
                        .iter()
                        .map(|&v| v + uniform_in::<f64>(-0.5, 0.5, &mut rng))
                        .collect();
                    candidates.push(jitter);
                }
            }
            let (_, best_cost) = brute_force_bayes(&model, &x, &candidates).expect("candidates");
            let (_, hat_cost) =
                brute_force_bayes(&model, &x, &[summary.theta_hat.clone()]).expect("estimate");
            let scale = summary.c_o.abs().max(1.0);
            let shortfall = ((summary.c_o - best_cost) / scale).max(0.0);
            let mismatch = ((hat_cost - summary.c_o) / scale).abs();
            let weight_gap = summary
                .posterior_weights
                .as_ref()
                .map(|w| (w.iter().sum::<f64>() - 1.0).abs())
                .unwrap_or(0.0);
            let err = shortfall.max(mismatch).max(weight_gap);
            report.record(err, || format!("model {i}, obs {x}, kind {kind:?}"));
        }

        // Exhaustive search over estimator *functions*: an estimator assigns
        // every observation a value from the value set; under any
        // nonnegative per-observation weighting of posterior expected
        // costs, no such function may beat the pointwise Bayes estimates.
        // The value set is the parameter grid plus (for squared error) each
        // observation's posterior mean, so the claimed optimum is in the
        // search space.
        let mut value_set = params.clone();
        if kind == CostKind::Mse {
            value_set.extend(summaries.iter().map(|s| s.theta_hat.clone()));
        }
        let obs_weight: Vec<f64> = (0..n_obs)
            .map(|_| if rng.gen::<f64>() < 0.2 { 0.0 } else { 2.0 * rng.gen::<f64>() })
            .collect();
        let posterior_cost = |x: usize, value: &[f64]| -> f64 {
            let weights = summaries[x].posterior_weights.as_ref().expect("weights retained");
            (0..n_params)
                .map(|l| {
                    weights[l] * crate::detest::pointwise_cost(kind, value, model.param(l))
                })
                .sum()
        };
        let table: Vec<Vec<f64>> = (0..n_obs)
            .map(|x| value_set.iter().map(|v| posterior_cost(x, v)).collect())
            .collect();
        let bayes_risk: f64 = (0..n_obs)
            .map(|x| obs_weight[x] * posterior_cost(x, &summaries[x].theta_hat))
            .sum();
        let mut best_risk = f64::INFINITY;
        let mut assignment = vec![0usize; n_obs];
        loop {
            let risk: f64 =
                (0..n_obs).map(|x| obs_weight[x] * table[x][assignment[x]]).sum();
            if risk < best_risk {
                best_risk = risk;
            }
            let mut digit = 0;
            loop {
                assignment[digit] += 1;
                if assignment[digit] < value_set.len() {
                    break;
                }
                assignment[digit] = 0;
                digit += 1;
                if digit == n_obs {
                    break;
                }
            }
            if digit == n_obs {
                break;
            }
        }
        let err = ((bayes_risk - best_risk) / best_risk.abs().max(1.0)).max(0.0);
        report.record(err, || {
            format!("model {i}: estimator enumeration, bayes {bayes_risk} vs best {best_risk}")
        });
    }
    report
}

fn random_complex(rng: &mut dyn RngCore) -> Complex<f64> {
    let re: f64 = StandardNormal.sample(&mut *rng);
    let im: f64 = StandardNormal.sample(&mut *rng);
    Complex::new(re, im)
}

/// Random Hermitian positive semidefinite matrix `scale * B B^H`.
fn random_psd(dim: usize, scale: f64, rng: &mut dyn RngCore) -> CMatrix<f64> {
    let b: Vec<Vec<Complex<f64>>> =
        (0..dim).map(|_| (0..dim).map(|_| random_complex(rng)).collect()).collect();
    let mut q = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..=i {
            let mut acc = Complex::new(0.0, 0.0);
            for k in 0..dim {
                acc += b[i][k] * b[j][k].conj();
            }
            acc *= scale;
            if i == j {
                q[(i, i)] = Complex::new(acc.re, 0.0);
            } else {
                q[(i, j)] = acc;
                q[(j, i)] = acc.conj();
            }
        }
    }
    q
}

/// Checks `log det` and quadratic forms of `Q + I` through three routes:
/// complex Cholesky, Cholesky of the doubled real embedding, and the
/// embedding's eigenvalues (which must pair up exactly).
pub fn det_identity_suite(n_matrices: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("determinant-identities", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_matrices {
        let dim = 1 + i % 6;
        let scale = 10f64.powf(uniform_in::<f64>(-1.0, 1.0, &mut rng));
        let q = random_psd(dim, scale, &mut rng);
        let probe: Vec<Complex<f64>> = (0..dim).map(|_| random_complex(&mut rng)).collect();

        let (det_err, quad_err) = match det_identity_check(&q, &probe) {
            Ok(pair) => pair,
            Err(e) => {
                report.record(f64::INFINITY, || format!("matrix {i} dim {dim}: {e}"));
                continue;
            }
        };

        // Third route: eigenvalues of the real embedding of Q + I come in
        // equal pairs, and half their log-sum is the complex log det.
        let a = q.plus_identity();
        let mut eigs = real_embedding(&a).jacobi_eigenvalues();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let top = eigs.last().copied().unwrap_or(1.0).max(1.0);
        let mut pair_err: f64 = 0.0;
        for p in 0..dim {
            pair_err = pair_err.max((eigs[2 * p] - eigs[2 * p + 1]).abs() / top);
        }
        let ld_eig: f64 = eigs.iter().map(|&e| e.ln()).sum::<f64>() / 2.0;
        let ld_complex = {
            let f = crate::linalg::CholeskyComplex::factor(&a).expect("PSD plus identity");
            f.log_det()
        };
        let eig_err = (ld_eig - ld_complex).abs() / ld_complex.abs().max(1.0);

        let err = det_err.max(quad_err).max(pair_err).max(eig_err);
        report.record(err, || {
            format!(
                "matrix {i} dim {dim}: det {det_err:.2e} quad {quad_err:.2e} \
                 pairs {pair_err:.2e} eig {eig_err:.2e}"
            )
        });
    }
    report
}

/// Monte-Carlo check that the closed-form fading-averaged likelihood ratio
/// equals the average of the conditional ratio over fading draws.
///
/// For each random single-receiver scene, one synthetic trial fixes the
/// matched statistics `R`; then `mean_g exp(llr(g) - llr_avg)` over `draws`
/// fading draws must be 1 within 3 standard errors.  The recorded error is
/// the deviation in units of that band, so the tolerance is 1.
pub fn fading_average_suite(n_scenes: usize, draws: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("fading-average", 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_scenes {
        let m = 1 + i % 2;
        let mut scene = RadarScene::<f64>::wide_array(m, 1);
        scene.tx_positions =
            (0..m).map(|_| [uniform_in(-80.0, 80.0, &mut rng), uniform_in(-80.0, 80.0, &mut rng)]).collect();
        scene.rx_positions =
            vec![[uniform_in(-80.0, 80.0, &mut rng), uniform_in(-80.0, 80.0, &mut rng)]];
        scene.energy = uniform_in(0.5, 4.0, &mut rng);
        let region = build_region_grid(&scene, RegionMode::Disc, 30.0, None).expect("region");
        let filter = GridMatchedFilter::new(scene.clone(), region).expect("filter");

        // One trial with a target present; any increments would do.
        let draw = sample_target(filter.region(), &mut rng);
        let fading = filter.sample_fading(&mut rng);
        let truth = RadarTruth::Target { position: draw.position, fading };
        let increments = filter.synthesize_increments(&truth, &mut rng);
        let stats = filter.matched_stats(&increments);
        let cell = (&mut rng).gen_range(0..filter.region().grid.len());
        let llr_avg = filter.log_ratios(&stats)[cell];
        let q = compute_q(filter.scene(), filter.region().grid[cell], 0);
        let r = &stats.r[cell][0];

        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let g: Vec<Complex<f64>> =
                (0..m).map(|_| random_complex(&mut rng) * f64::sqrt(0.5)).collect();
            let ratio = (conditional_log_lr_given_g(&q, r, &g) - llr_avg).exp();
            sum += ratio;
            sum_sq += ratio * ratio;
        }
        let mean = sum / draws as f64;
        let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
        let se = (var / draws as f64).sqrt().max(1e-12);
        let err = (mean - 1.0).abs() / (3.0 * se);
        report.record(err, || {
            format!("scene {i} (M={m}, E={:.3}): mean {mean:.6} se {se:.2e}", filter.scene().energy)
        });
    }
    report
}

/// Checks the changepoint posterior quantities against direct linear-domain
/// sums on random series: the averaged log ratio, every posterior weight,
/// the MAP changetime cost, and the max statistic.
pub fn changepoint_identity_suite(n_series: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("changepoint-identities", 1e-9);
    let model = ChangepointModel::<f64>::gaussian(16, 1.0).expect("model");
    let n = model.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_series {
        let series = if i % 2 == 0 {
            model.sample_series(SeriesOrigin::Null, &mut rng).expect("series")
        } else {
            let tau = (&mut rng).gen_range(0..n);
            model.sample_series(SeriesOrigin::ChangeAt(tau), &mut rng).expect("series")
        };

        // Direct arithmetic: suffix sums of x_k - 1/2, then plain exp sums.
        // Exponents stay below ~60 for N = 16, so nothing overflows.
        let mut ratios = vec![0.0f64; n];
        for tau in 0..n {
            ratios[tau] = series.values[tau..].iter().map(|&x| x - 0.5).sum();
        }
        let weighted: Vec<f64> =
            ratios.iter().zip(model.prior()).map(|(&s, &p)| p * s.exp()).collect();
        let total: f64 = weighted.iter().sum();
        let log_lr_direct = total.ln();
        let weights: Vec<f64> = weighted.iter().map(|&w| w / total).collect();
        let (_map_direct, &w_max) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("nonempty");
        let c_o_direct = 1.0 - w_max;
        let glrt_direct = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let summary = posterior_summary(&model, &series).expect("summary");
        let (glrt_val, _) = glrt_statistic(&model, &series);

        let scale = log_lr_direct.abs().max(1.0);
        let mut err = (summary.log_lr - log_lr_direct).abs() / scale;
        err = err.max((summary.c_o - c_o_direct).abs());
        err = err.max((glrt_val - glrt_direct).abs() / glrt_direct.abs().max(1.0));
        let w = summary.posterior_weights.as_ref().expect("weights");
        for tau in 0..n {
            err = err.max((w[tau] - weights[tau]).abs());
        }
        // MAP ties are legitimate; require matching weight rather than index.
        err = err.max((w[summary.map_index.expect("zero-one cost")] - w_max).abs());
        report.record(err, || format!("series {i}"));
    }
    report
}
