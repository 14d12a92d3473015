//! Monte-Carlo experiment orchestration: seeded trial batches, threshold
//! calibration, paired evaluation sweeps over reliability fractions, CSV
//! persistence.
//!
//! Everything here is `f64`-concrete and deterministic by construction:
//! every trial derives its own random stream from `(seed, index, purpose)`
//! via [`derive_stream`], trial results are merged in index order, and all
//! per-row reductions run sequentially — so the output bytes depend only on
//! the config, never on the worker count.  Calibration always completes
//! before evaluation starts.
//!
//! A sweep evaluates every reliability fraction on the *same* evaluation
//! trials (paired comparison).  This kills most of the Monte-Carlo variance
//! in the fraction-to-fraction comparison and makes the subset structure
//! exact: the reliable trials at a smaller fraction are by construction a
//! subset of those at a larger one.

mod config;
mod csv;
mod stream;

pub use config::{ExperimentConfig, ModelSelector, ScenePreset};
pub use csv::{csv_string, parse_csv, write_csv, CSV_HEADER};
pub use stream::derive_stream;

use rayon::prelude::*;

use crate::changepoint::ChangepointModel;
use crate::detest::{
    calibrate_gamma_np, calibrate_reliability_lambda, calibrate_single_step, empirical_quantile,
    glrt_statistic, pointwise_cost, posterior_summary, JointModel, ThresholdSet, Verdict,
};
use crate::radar::{build_region_grid, calibrate_energy, GridMatchedFilter, RadarModel, RadarScene};
use crate::serialize::real_value;
use crate::{Error, Result};

/// Which hypothesis a trial batch samples from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// Summary statistics of one synthetic trial; the raw observation is
/// dropped, everything any decision scheme needs is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    /// True parameter for alternative trials, `None` under the null.
    pub truth: Option<Vec<f64>>,
    /// Averaged log likelihood ratio.
    pub log_lr: f64,
    /// Bayes estimate (posterior mean or MAP point).
    pub theta_hat: Vec<f64>,
    /// Posterior cost of the estimate.
    pub c_o: f64,
    /// Max conditional log likelihood ratio and its grid argmax.
    pub glrt_stat: f64,
    pub glrt_index: usize,
    /// Cost of the Bayes estimate against the truth (squared error under
    /// MSE cost, mismatch indicator under 0-1 cost); alternative trials only.
    pub estimate_cost: Option<f64>,
    /// Same for the GLRT estimate (the argmax grid point).
    pub glrt_cost: Option<f64>,
}

impl TrialRecord {
    /// First-stage likelihood-ratio detection (strict, ties to the null).
    pub fn np_detect(&self, gamma_np: f64) -> bool {
        self.log_lr > gamma_np
    }

    /// Two-step verdict at reliability threshold `lambda`.
    pub fn two_step_verdict(&self, gamma_np: f64, lambda: f64) -> Verdict {
        if !self.np_detect(gamma_np) {
            Verdict::H0
        } else if self.c_o <= lambda {
            Verdict::H1Reliable
        } else {
            Verdict::H1Unreliable
        }
    }
}

/// Runs `count` independent trials in parallel, one derived stream each.
///
/// The stream purposes used by the pipeline are `"cal-h0"`, `"cal-h1"` and
/// `"eval-h1"`; any other tag yields a fresh independent batch.
pub fn generate_trials<M>(
    model: &M,
    hypothesis: Hypothesis,
    count: usize,
    seed: u64,
    purpose: &str,
) -> Result<Vec<TrialRecord>>
where
    M: JointModel<f64>,
{
    (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = derive_stream(seed, index, purpose);
            let (truth, obs) = match hypothesis {
                Hypothesis::Null => (None, model.sample_h0(&mut rng)),
                Hypothesis::Alternative => {
                    let (t, o) = model.sample_h1(&mut rng);
                    (Some(t), o)
                }
            };
            let summary = posterior_summary(model, &obs)?;
            let (glrt_stat, glrt_index) = glrt_statistic(model, &obs);
            let kind = model.cost_kind();
            let estimate_cost =
                truth.as_ref().map(|t| pointwise_cost(kind, &summary.theta_hat, t));
            let glrt_cost =
                truth.as_ref().map(|t| pointwise_cost(kind, model.param(glrt_index), t));
            Ok(TrialRecord {
                index,
                truth,
                log_lr: summary.log_lr,
                theta_hat: summary.theta_hat,
                c_o: summary.c_o,
                glrt_stat,
                glrt_index,
                estimate_cost,
                glrt_cost,
            })
        })
        .collect()
}

/// Calibrated thresholds plus calibration diagnostics.
#[derive(Clone, Debug)]
pub struct CalibrationBundle {
    pub alpha: f64,
    /// Detection threshold of the averaged-likelihood-ratio test.
    pub gamma_np: f64,
    /// Detection threshold of the GLRT baseline at the same level.
    pub gamma_glrt: f64,
    /// `(fraction, lambda)` pairs, ascending in fraction; fraction 1 maps to
    /// `+inf`.
    pub lambdas: Vec<(f64, f64)>,
    /// Single-step thresholds, when a miss target `beta` was configured.
    pub single_step: Option<ThresholdSet<f64>>,
    /// Detection probability on the calibration batch, for reference.
    pub p_detect_calibration: f64,
    pub n_h0: usize,
    pub n_h1: usize,
    pub warnings: Vec<String>,
}

impl CalibrationBundle {
    /// JSON with every real as a 17-significant-digit decimal string.
    pub fn to_json_string(&self) -> String {
        let lambdas: Vec<serde_json::Value> = self
            .lambdas
            .iter()
            .map(|&(f, l)| {
                serde_json::json!({ "fraction": real_value(f), "lambda": real_value(l) })
            })
            .collect();
        let mut value = serde_json::json!({
            "alpha": real_value(self.alpha),
            "gamma_np": real_value(self.gamma_np),
            "gamma_glrt": real_value(self.gamma_glrt),
            "lambdas": lambdas,
            "p_detect_calibration": real_value(self.p_detect_calibration),
            "n_h0": self.n_h0,
            "n_h1": self.n_h1,
            "warnings": self.warnings,
        });
        if let Some(single) = &self.single_step {
            let embedded: serde_json::Value =
                serde_json::from_str(&single.to_json_string()).expect("threshold JSON is valid");
            value["single_step"] = embedded;
        }
        let mut text = serde_json::to_string_pretty(&value).expect("JSON serialization");
        text.push('\n');
        text
    }
}

/// Calibrates all thresholds from fresh H0 and H1 batches.
///
/// Purposes `"cal-h0"` / `"cal-h1"` under `config.seed` name the batches.
/// Fails when no calibration trial is detected (no reliability quantile to
/// take) or when a configured miss target `beta` is unattainable.
pub fn run_calibration<M>(model: &M, config: &ExperimentConfig) -> Result<CalibrationBundle>
where
    M: JointModel<f64>,
{
    config.validate()?;
    let mut warnings = Vec::new();

    let h0 = generate_trials(model, Hypothesis::Null, config.trials_calibration, config.seed, "cal-h0")?;
    let h0_log_lrs: Vec<f64> = h0.iter().map(|r| r.log_lr).collect();
    let gamma_np = calibrate_gamma_np(&h0_log_lrs, config.alpha)?;
    if !gamma_np.reliable {
        warnings.push(format!(
            "detection threshold rests on {:.1} expected tail samples; raise trials_calibration",
            gamma_np.expected_tail_count
        ));
    }
    let h0_glrt: Vec<f64> = h0.iter().map(|r| r.glrt_stat).collect();
    let gamma_glrt = empirical_quantile(&h0_glrt, 1.0 - config.alpha)?;

    let h1 = generate_trials(
        model,
        Hypothesis::Alternative,
        config.trials_calibration,
        config.seed,
        "cal-h1",
    )?;
    let detected_costs: Vec<f64> =
        h1.iter().filter(|r| r.np_detect(gamma_np.value)).map(|r| r.c_o).collect();
    if detected_costs.is_empty() {
        return Err(Error::calibration(format!(
            "no calibration trial detected at alpha = {}; cannot place reliability thresholds",
            config.alpha
        )));
    }
    let p_detect_calibration = detected_costs.len() as f64 / h1.len() as f64;

    let mut fractions = config.fractions.clone();
    fractions.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
    fractions.dedup();
    let lambdas = fractions
        .into_iter()
        .map(|f| calibrate_reliability_lambda(&detected_costs, f).map(|l| (f, l)))
        .collect::<Result<Vec<_>>>()?;

    let single_step = match config.beta {
        None => None,
        Some(beta) => {
            let pair = |r: &TrialRecord| (r.log_lr, r.c_o);
            let h0_stats: Vec<(f64, f64)> = h0.iter().map(pair).collect();
            let h1_stats: Vec<(f64, f64)> = h1.iter().map(pair).collect();
            let set = calibrate_single_step(&h0_stats, &h1_stats, config.alpha, beta)?;
            warnings.extend(set.provenance.warnings.iter().cloned());
            Some(set)
        }
    };

    Ok(CalibrationBundle {
        alpha: config.alpha,
        gamma_np: gamma_np.value,
        gamma_glrt: gamma_glrt,
        lambdas,
        single_step,
        p_detect_calibration,
        n_h0: h0.len(),
        n_h1: h1.len(),
        warnings,
    })
}

/// One row of a sweep: a scheme evaluated on the shared trial batch.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub fraction_target: f64,
    pub lambda: f64,
    /// Reliable trials over detected trials; NaN when nothing was detected.
    pub realized_fraction: f64,
    /// Number of trials the conditional mean cost is taken over.
    pub k: usize,
    /// Mean cost over those trials; NaN when `k = 0`.
    pub mse: f64,
    pub mse_normalized: f64,
    pub p_detect: f64,
    pub scheme: String,
}

/// All rows of one sweep plus the normalization constant they used.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Divisor for `mse_normalized`: squared region radius for the radar
    /// scene, 1 otherwise.
    pub normalization: f64,
    pub warnings: Vec<String>,
}

/// Evaluates every calibrated scheme on one shared batch of alternative
/// trials.
///
/// Rows: one `two-step` row per fraction (ascending), then `separate`
/// (detection and estimation treated separately — algebraically the
/// fraction-1 two-step row, and computed through the identical code path so
/// the bytes agree), then `glrt` (max-ratio detection, argmax estimate).
/// `k = 0` rows are kept with NaN means and flagged in the warnings.
pub fn evaluate_sweep(
    bundle: &CalibrationBundle,
    records: &[TrialRecord],
    normalization: f64,
) -> Result<SweepResult> {
    if records.is_empty() {
        return Err(Error::invalid("evaluate_sweep: empty evaluation batch"));
    }
    if !(normalization > 0.0) || !normalization.is_finite() {
        return Err(Error::invalid(format!("evaluate_sweep: bad normalization {normalization}")));
    }
    if records.iter().any(|r| r.truth.is_none()) {
        return Err(Error::invalid("evaluate_sweep: evaluation records must be alternative trials"));
    }
    let n = records.len() as f64;
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(bundle.lambdas.len() + 2);

    // Sequential reduction in trial-index order: determinism requires a
    // fixed summation order, parallelism stays at the trial level.
    let detected: Vec<&TrialRecord> =
        records.iter().filter(|r| r.np_detect(bundle.gamma_np)).collect();
    let p_detect = detected.len() as f64 / n;

    let push_conditional = |fraction_target: f64, lambda: f64, scheme: &str, rows: &mut Vec<SweepRow>, warnings: &mut Vec<String>| {
        let mut k = 0usize;
        let mut sum = 0.0f64;
        for r in &detected {
            if r.c_o <= lambda {
                k += 1;
                sum += r.estimate_cost.expect("alternative trials checked above");
            }
        }
        let mse = if k > 0 { sum / k as f64 } else { f64::NAN };
        if k == 0 {
            warnings.push(format!("{scheme} row at fraction {fraction_target}: no reliable trial (K = 0)"));
        }
        let realized_fraction =
            if detected.is_empty() { f64::NAN } else { k as f64 / detected.len() as f64 };
        rows.push(SweepRow {
            fraction_target,
            lambda,
            realized_fraction,
            k,
            mse,
            mse_normalized: mse / normalization,
            p_detect,
            scheme: scheme.to_string(),
        });
    };

    for &(fraction, lambda) in &bundle.lambdas {
        push_conditional(fraction, lambda, "two-step", &mut rows, &mut warnings);
    }
    push_conditional(1.0, f64::INFINITY, "separate", &mut rows, &mut warnings);

    // GLRT baseline: its own detector at the same level, argmax estimate.
    {
        let mut k = 0usize;
        let mut sum = 0.0f64;
        for r in records {
            if r.glrt_stat > bundle.gamma_glrt {
                k += 1;
                sum += r.glrt_cost.expect("alternative trials checked above");
            }
        }
        let mse = if k > 0 { sum / k as f64 } else { f64::NAN };
        if k == 0 {
            warnings.push("glrt row: no detected trial (K = 0)".to_string());
        }
        rows.push(SweepRow {
            fraction_target: 1.0,
            lambda: f64::INFINITY,
            realized_fraction: if k > 0 { 1.0 } else { f64::NAN },
            k,
            mse,
            mse_normalized: mse / normalization,
            p_detect: k as f64 / n,
            scheme: "glrt".to_string(),
        });
    }

    Ok(SweepResult { rows, normalization, warnings })
}

/// A model instantiated from an [`ExperimentConfig`].
pub enum BuiltModel {
    Radar(Box<RadarModel<f64>>),
    Changepoint(ChangepointModel<f64>),
}

impl BuiltModel {
    /// Cost normalization for sweep rows: squared region radius for radar
    /// positions (Km^2), 1 for the changepoint mismatch indicator.
    pub fn normalization(&self) -> f64 {
        match self {
            BuiltModel::Radar(model) => {
                let r = model.filter().region().disc_radius;
                r * r
            }
            BuiltModel::Changepoint(_) => 1.0,
        }
    }
}

/// Instantiates the configured model.  `snr_db` sets the radar energy and is
/// ignored by the changepoint model.
pub fn build_model(config: &ExperimentConfig, snr_db: f64) -> Result<BuiltModel> {
    config.validate()?;
    match &config.model {
        ModelSelector::Radar { scene, m, n } => {
            let mut scene = match scene {
                ScenePreset::Wide => RadarScene::<f64>::wide_array(*m, *n),
                ScenePreset::Crossed => RadarScene::<f64>::crossed_array(*m, *n),
            };
            let region =
                build_region_grid(&scene, config.region, config.cell_km, config.disc_radius_km)?;
            scene.energy = calibrate_energy(&scene, snr_db, Some(&region))?;
            let filter = GridMatchedFilter::new(scene, region)?;
            Ok(BuiltModel::Radar(Box::new(RadarModel::new(filter))))
        }
        ModelSelector::Changepoint { series_length, mu } => {
            Ok(BuiltModel::Changepoint(ChangepointModel::gaussian(*series_length, *mu)?))
        }
    }
}

/// Calibrates and sweeps one model on shared evaluation trials.
pub fn run_sweep_with<M>(
    model: &M,
    config: &ExperimentConfig,
    normalization: f64,
) -> Result<(CalibrationBundle, SweepResult)>
where
    M: JointModel<f64>,
{
    let bundle = run_calibration(model, config)?;
    let records = generate_trials(
        model,
        Hypothesis::Alternative,
        config.trials_evaluation,
        config.seed,
        "eval-h1",
    )?;
    let result = evaluate_sweep(&bundle, &records, normalization)?;
    Ok((bundle, result))
}

/// End-to-end sweep from a config: build, calibrate, evaluate.
pub fn run_sweep(config: &ExperimentConfig, snr_db: f64) -> Result<(CalibrationBundle, SweepResult)> {
    let model = build_model(config, snr_db)?;
    let normalization = model.normalization();
    match &model {
        BuiltModel::Radar(m) => run_sweep_with(m.as_ref(), config, normalization),
        BuiltModel::Changepoint(m) => run_sweep_with(m, config, normalization),
    }
}
