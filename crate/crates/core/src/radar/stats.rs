//! Matched-filter statistics over the candidate lattice and the radar
//! [`JointModel`].
//!
//! One synthetic trial produces, per receiver, a series of complex
//! observation increments `dr_k` on the sample lattice.  Under the null they
//! are pure noise with variance `T / l_t` per step; under the alternative a
//! drift `S_n(t_k, theta)^H g_n * dt` is added, with the fading `g` drawn
//! once per trial.  Every candidate position is scored against the *same*
//! increments, so the per-cell log likelihood ratios of a trial are
//! statistically coupled exactly as a real receiver's would be.
//!
//! The fading-averaged ratio for cell `l` has the closed form
//! `sum_n [ R_n^H (Q_n + I)^{-1} R_n - log det(Q_n + I) ]` with
//! `R_n = sum_k S_n(t_k) conj(dr_k)`; the Cholesky factors of `Q_n + I` are
//! cached per cell at construction.

use num_complex::Complex;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{q_from_taps, tap_rows, RadarScene, SurveillanceRegion};
use crate::detest::{CostKind, JointModel};
use crate::linalg::{real_embedding, real_embedding_vec, CholeskyComplex, CMatrix};
use crate::num::Real;
use crate::{Error, Result};

type TapList<T> = Vec<(usize, Vec<Complex<T>>)>;

/// Ground truth behind one synthetic trial.
#[derive(Clone, Debug)]
pub enum RadarTruth<T> {
    /// No target; increments are pure noise.
    Null,
    /// Target present at `position` with per-pair fading `g`, stored
    /// receiver-major (`g[n * M + m]`).
    Target { position: [T; 2], fading: Vec<Complex<T>> },
}

/// Per-trial matched statistics: `r[l][n][m]` is entry `m` of `R_n(theta_l)`.
#[derive(Clone, Debug)]
pub struct MatchedStats<T> {
    pub r: Vec<Vec<Vec<Complex<T>>>>,
}

/// Precomputed per-cell filter state: steering taps, Cholesky factors of
/// `Q_n + I`, and the summed log determinants.
pub struct GridMatchedFilter<T> {
    scene: RadarScene<T>,
    region: SurveillanceRegion<T>,
    taps: Vec<Vec<TapList<T>>>,
    chol: Vec<Vec<CholeskyComplex<T>>>,
    log_det_sum: Vec<T>,
}

impl<T: Real> GridMatchedFilter<T> {
    pub fn new(scene: RadarScene<T>, region: SurveillanceRegion<T>) -> Result<Self> {
        scene.validate()?;
        if region.grid.is_empty() {
            return Err(Error::invalid("GridMatchedFilter: empty candidate lattice"));
        }
        let n_rx = scene.n_rx();
        let step = scene.time_step();
        let mut taps = Vec::with_capacity(region.grid.len());
        let mut chol = Vec::with_capacity(region.grid.len());
        let mut log_det_sum = Vec::with_capacity(region.grid.len());
        for &theta in &region.grid {
            let mut cell_taps = Vec::with_capacity(n_rx);
            let mut cell_chol = Vec::with_capacity(n_rx);
            let mut ld = T::zero();
            for n in 0..n_rx {
                let rows = tap_rows(&scene, theta, n);
                let a = q_from_taps(&rows, scene.n_tx(), step).plus_identity();
                let factor = CholeskyComplex::factor(&a)?;
                ld += factor.log_det();
                cell_taps.push(rows);
                cell_chol.push(factor);
            }
            taps.push(cell_taps);
            chol.push(cell_chol);
            log_det_sum.push(ld);
        }
        Ok(GridMatchedFilter { scene, region, taps, chol, log_det_sum })
    }

    pub fn scene(&self) -> &RadarScene<T> {
        &self.scene
    }

    pub fn region(&self) -> &SurveillanceRegion<T> {
        &self.region
    }

    /// Draws the per-pair fading `g ~ CN(0, I)`, receiver-major, real part
    /// before imaginary.  The order is part of the reproducibility contract.
    pub fn sample_fading(&self, rng: &mut dyn RngCore) -> Vec<Complex<T>> {
        let half = T::from_f64_lossy(0.5).sqrt();
        let count = self.scene.n_rx() * self.scene.n_tx();
        (0..count)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut *rng);
                let im: f64 = StandardNormal.sample(&mut *rng);
                Complex::new(T::from_f64_lossy(re) * half, T::from_f64_lossy(im) * half)
            })
            .collect()
    }

    /// Deterministic drift part of the increments for a target at
    /// `position` with fading `g`: `dr_k = S_n(t_k)^H g_n * dt` per
    /// receiver, zero elsewhere.
    pub fn noise_free_increments(
        &self,
        position: [T; 2],
        fading: &[Complex<T>],
    ) -> Vec<Vec<Complex<T>>> {
        let n_tx = self.scene.n_tx();
        let step = self.scene.time_step();
        let mut out = vec![vec![Complex::new(T::zero(), T::zero()); self.scene.l_t]; self.scene.n_rx()];
        for (n, series) in out.iter_mut().enumerate() {
            let g = &fading[n * n_tx..(n + 1) * n_tx];
            for (k, row) in tap_rows(&self.scene, position, n) {
                let mut drift = Complex::new(T::zero(), T::zero());
                for (m, tap) in row.iter().enumerate() {
                    drift += g[m].conj() * *tap;
                }
                series[k] = drift * step;
            }
        }
        out
    }

    /// Synthesizes one trial's increments: the drift of `truth` plus white
    /// noise `CN(0, T / l_t)` per step.  Noise draws are receiver-major,
    /// sample-minor, real part before imaginary.
    pub fn synthesize_increments(
        &self,
        truth: &RadarTruth<T>,
        rng: &mut dyn RngCore,
    ) -> Vec<Vec<Complex<T>>> {
        let mut out = match truth {
            RadarTruth::Null => {
                vec![vec![Complex::new(T::zero(), T::zero()); self.scene.l_t]; self.scene.n_rx()]
            }
            RadarTruth::Target { position, fading } => {
                self.noise_free_increments(*position, fading)
            }
        };
        let scale = (self.scene.time_step() / T::from_f64_lossy(2.0)).sqrt();
        for series in out.iter_mut() {
            for dr in series.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut *rng);
                let im: f64 = StandardNormal.sample(&mut *rng);
                *dr += Complex::new(T::from_f64_lossy(re) * scale, T::from_f64_lossy(im) * scale);
            }
        }
        out
    }

    /// Correlates the increments against every cached cell:
    /// `R_n(theta_l) = sum_k S_n(t_k, theta_l) conj(dr_k)`.
    pub fn matched_stats(&self, increments: &[Vec<Complex<T>>]) -> MatchedStats<T> {
        let n_tx = self.scene.n_tx();
        let r = self
            .taps
            .iter()
            .map(|cell| {
                cell.iter()
                    .enumerate()
                    .map(|(n, rows)| {
                        let mut acc = vec![Complex::new(T::zero(), T::zero()); n_tx];
                        for (k, row) in rows {
                            let w = increments[n][*k].conj();
                            for (m, tap) in row.iter().enumerate() {
                                acc[m] += *tap * w;
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        MatchedStats { r }
    }

    /// Fading-averaged log likelihood ratio per cell, via the cached
    /// Cholesky factors.
    pub fn log_ratios(&self, stats: &MatchedStats<T>) -> Vec<T> {
        (0..self.region.grid.len())
            .map(|l| {
                let mut quad = T::zero();
                for (n, factor) in self.chol[l].iter().enumerate() {
                    quad += factor.quadratic_form(&stats.r[l][n]);
                }
                quad - self.log_det_sum[l]
            })
            .collect()
    }

    pub(crate) fn cell_cholesky(&self, l: usize, n: usize) -> &CholeskyComplex<T> {
        &self.chol[l][n]
    }
}

/// Recomputes the cell-`l` log likelihood ratio through the generic solve
/// path (triangular solve plus explicit inner product) instead of the fused
/// quadratic form, and checks that the form is real.  Cross-validates the
/// fast path in [`GridMatchedFilter::log_ratios`].
pub fn log_clr_radar<T: Real>(
    filter: &GridMatchedFilter<T>,
    l: usize,
    increments: &[Vec<Complex<T>>],
) -> Result<T> {
    let stats = filter.matched_stats(increments);
    let mut total = T::zero();
    for n in 0..filter.scene().n_rx() {
        let r = &stats.r[l][n];
        let factor = filter.cell_cholesky(l, n);
        let x = factor.solve(r);
        let mut dot = Complex::new(T::zero(), T::zero());
        for (ri, xi) in r.iter().zip(&x) {
            dot += ri.conj() * *xi;
        }
        let scale = dot.norm().max(T::one());
        if dot.im.abs() / scale > T::from_f64_lossy(1e-9) {
            return Err(Error::numerical("log_clr_radar: quadratic form is not real"));
        }
        total += dot.re - factor.log_det();
    }
    Ok(total)
}

/// Log likelihood ratio of one receiver's statistics *conditioned* on the
/// fading draw: `2 Re(R^H g) - g^H Q g`.  Averaging its exponential over
/// `g ~ CN(0, I)` reproduces the fading-averaged ratio, which is what the
/// oracle suite verifies by Monte Carlo.
pub fn conditional_log_lr_given_g<T: Real>(
    q: &CMatrix<T>,
    r: &[Complex<T>],
    g: &[Complex<T>],
) -> T {
    let mut rh_g = Complex::new(T::zero(), T::zero());
    for (ri, gi) in r.iter().zip(g) {
        rh_g += ri.conj() * *gi;
    }
    let qg = q.mat_vec(g);
    let mut quad = T::zero();
    for (gi, qgi) in g.iter().zip(&qg) {
        quad += (gi.conj() * *qgi).re;
    }
    T::from_f64_lossy(2.0) * rh_g.re - quad
}

/// Checks `log det(Q + I)` and the quadratic form `b^H (Q + I)^{-1} b`
/// through independent routes: complex Cholesky versus the real symmetric
/// embedding (whose determinant is the square of the complex one).  Returns
/// the two relative discrepancies.
pub fn det_identity_check<T: Real>(q: &CMatrix<T>, probe: &[Complex<T>]) -> Result<(T, T)> {
    let a = q.plus_identity();
    let factor = CholeskyComplex::factor(&a)?;
    let ld_complex = factor.log_det();
    let embedded = real_embedding(&a);
    let ld_real = embedded.cholesky_log_det()?;
    let two = T::from_f64_lossy(2.0);
    let det_err = (ld_real - two * ld_complex).abs() / ld_real.abs().max(T::one());

    let quad_complex = factor.quadratic_form(probe);
    let b = real_embedding_vec(probe);
    let y = embedded.solve(&b)?;
    let mut quad_real = T::zero();
    for (bi, yi) in b.iter().zip(&y) {
        quad_real += *bi * *yi;
    }
    let quad_err = (quad_real - quad_complex).abs() / quad_complex.abs().max(T::one());
    Ok((det_err, quad_err))
}

/// The radar scene as a joint detection/estimation model.
///
/// An observation is the vector of per-cell log likelihood ratios of one
/// trial; the parameter attached to cell `l` is its position, so the
/// posterior cost is mean squared position error in Km^2.  Trial synthesis
/// draws, in this order: target cell and in-cell offsets, fading, noise.
pub struct RadarModel<T: Real> {
    filter: GridMatchedFilter<T>,
    prior: T,
}

impl<T: Real> RadarModel<T> {
    pub fn new(filter: GridMatchedFilter<T>) -> Self {
        let prior = T::one() / T::from_f64_lossy(filter.region().grid.len() as f64);
        RadarModel { filter, prior }
    }

    pub fn filter(&self) -> &GridMatchedFilter<T> {
        &self.filter
    }
}

impl<T: Real> JointModel<T> for RadarModel<T> {
    type Obs = Vec<T>;

    fn cost_kind(&self) -> CostKind {
        CostKind::Mse
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        self.filter.region().grid.len()
    }

    fn param(&self, l: usize) -> &[T] {
        &self.filter.region().grid[l]
    }

    fn prior_weight(&self, _l: usize) -> T {
        self.prior
    }

    fn cond_llr(&self, x: &Self::Obs, l: usize) -> T {
        x[l]
    }

    fn sample_h0(&self, rng: &mut dyn RngCore) -> Self::Obs {
        let increments = self.filter.synthesize_increments(&RadarTruth::Null, rng);
        self.filter.log_ratios(&self.filter.matched_stats(&increments))
    }

    fn sample_h1(&self, rng: &mut dyn RngCore) -> (Vec<T>, Self::Obs) {
        let draw = super::sample_target(self.filter.region(), rng);
        let fading = self.filter.sample_fading(rng);
        let truth = RadarTruth::Target { position: draw.position, fading };
        let increments = self.filter.synthesize_increments(&truth, rng);
        let obs = self.filter.log_ratios(&self.filter.matched_stats(&increments));
        (draw.position.to_vec(), obs)
    }
}
