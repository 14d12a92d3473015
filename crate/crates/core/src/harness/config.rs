//! Experiment configuration: flat `key = value` text, overridable per key.
//!
//! The grammar is one `key = value` pair per line; `#` starts a comment and
//! blank lines are ignored.  Lists are comma separated.  Later assignments
//! win, so `profile = full` first and specific keys afterwards behaves as
//! expected.  Unknown keys and ill-typed values are rejected, not ignored —
//! a typo must not silently run the default experiment.

use std::path::PathBuf;

use crate::radar::RegionMode;
use crate::serialize::parse_real_str;
use crate::{Error, Result};

/// Which stock radar geometry to instantiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenePreset {
    /// Antennas 60 Km apart, times in sampling intervals; the geometry the
    /// sweep experiments use.
    Wide,
    /// Antennas 1-2 Km from the origin, times in seconds; keeps the textbook
    /// unit conventions.
    Crossed,
}

/// Which model family an experiment runs against.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSelector {
    Radar { scene: ScenePreset, m: usize, n: usize },
    Changepoint { series_length: usize, mu: f64 },
}

/// Full description of one experiment, CSV output path included.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSelector,
    /// SNR points in dB (radar only; the sweep runs once per entry).
    pub snr_db: Vec<f64>,
    pub alpha: f64,
    /// Miss target for single-step calibration; `None` skips it.
    pub beta: Option<f64>,
    /// Reliability-fraction targets for the two-step sweep.
    pub fractions: Vec<f64>,
    pub trials_calibration: usize,
    pub trials_evaluation: usize,
    pub seed: u64,
    pub region: RegionMode,
    pub cell_km: f64,
    /// Disc radius override; `None` derives `c * T / 2` from the scene.
    pub disc_radius_km: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    /// Desk profile: `alpha = 1e-2` with 2x10^4 calibration and evaluation
    /// trials — sized so the full pipeline runs in minutes.
    fn default() -> Self {
        ExperimentConfig {
            model: ModelSelector::Radar { scene: ScenePreset::Wide, m: 2, n: 2 },
            snr_db: vec![0.0],
            alpha: 1e-2,
            beta: None,
            fractions: vec![0.25, 0.5, 0.75, 1.0],
            trials_calibration: 20_000,
            trials_evaluation: 20_000,
            seed: 42,
            region: RegionMode::Disc,
            cell_km: 10.0,
            disc_radius_km: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn desk() -> Self {
        Self::default()
    }

    /// Full profile: `alpha = 1e-3` with 10^6 calibration trials (a 1e-3
    /// quantile needs that many null samples to be stable) and 2x10^5
    /// evaluation trials.  Hours, not minutes.
    pub fn full() -> Self {
        ExperimentConfig {
            alpha: 1e-3,
            trials_calibration: 1_000_000,
            trials_evaluation: 200_000,
            ..Self::default()
        }
    }

    /// Parses a config file body on top of the desk defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
            })?;
            config
                .apply(key.trim(), value.trim())
                .map_err(|e| Error::parse(format!("line {}: {e}", lineno + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies one `key = value` assignment; shared by the file parser and
    /// command-line overrides so both are type-checked identically.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "profile" => {
                *self = match value {
                    "desk" => Self::desk(),
                    "full" => Self::full(),
                    other => {
                        return Err(Error::parse(format!(
                            "profile must be `desk` or `full`, got {other:?}"
                        )))
                    }
                };
            }
            "model" => match value {
                "radar" => {
                    if !matches!(self.model, ModelSelector::Radar { .. }) {
                        self.model =
                            ModelSelector::Radar { scene: ScenePreset::Wide, m: 2, n: 2 };
                    }
                }
                "changepoint" => {
                    if !matches!(self.model, ModelSelector::Changepoint { .. }) {
                        self.model = ModelSelector::Changepoint { series_length: 16, mu: 1.0 };
                    }
                }
                other => {
                    return Err(Error::parse(format!(
                        "model must be `radar` or `changepoint`, got {other:?}"
                    )))
                }
            },
            "scene" => {
                let preset = match value {
                    "wide" => ScenePreset::Wide,
                    "crossed" => ScenePreset::Crossed,
                    other => {
                        return Err(Error::parse(format!(
                            "scene must be `wide` or `crossed`, got {other:?}"
                        )))
                    }
                };
                match &mut self.model {
                    ModelSelector::Radar { scene, .. } => *scene = preset,
                    other => {
                        return Err(Error::parse(format!(
                            "`scene` applies to the radar model, not {other:?}"
                        )))
                    }
                }
            }
            "m" | "n" => {
                let count = parse_usize(key, value)?;
                match (&mut self.model, key) {
                    (ModelSelector::Radar { m, .. }, "m") => *m = count,
                    (ModelSelector::Radar { n, .. }, "n") => *n = count,
                    (other, _) => {
                        return Err(Error::parse(format!(
                            "`{key}` applies to the radar model, not {other:?}"
                        )))
                    }
                }
            }
            "series_length" => {
                let len = parse_usize(key, value)?;
                match &mut self.model {
                    ModelSelector::Changepoint { series_length, .. } => *series_length = len,
                    other => {
                        return Err(Error::parse(format!(
                            "`series_length` applies to the changepoint model, not {other:?}"
                        )))
                    }
                }
            }
            "mu" => {
                let v = parse_real(key, value)?;
                match &mut self.model {
                    ModelSelector::Changepoint { mu, .. } => *mu = v,
                    other => {
                        return Err(Error::parse(format!(
                            "`mu` applies to the changepoint model, not {other:?}"
                        )))
                    }
                }
            }
            "snr_db" => self.snr_db = parse_list(key, value)?,
            "alpha" => self.alpha = parse_real(key, value)?,
            "beta" => {
                self.beta =
                    if value == "none" { None } else { Some(parse_real(key, value)?) };
            }
            "fractions" => self.fractions = parse_list(key, value)?,
            "trials_calibration" => self.trials_calibration = parse_usize(key, value)?,
            "trials_evaluation" => self.trials_evaluation = parse_usize(key, value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::parse(format!("`seed` must be a 64-bit integer, got {value:?}")))?;
            }
            "region" => {
                self.region = match value {
                    "disc" => RegionMode::Disc,
                    "ellipse" => RegionMode::EllipseUnion,
                    other => {
                        return Err(Error::parse(format!(
                            "region must be `disc` or `ellipse`, got {other:?}"
                        )))
                    }
                };
            }
            "cell_km" => self.cell_km = parse_real(key, value)?,
            "disc_radius_km" => {
                self.disc_radius_km =
                    if value == "default" { None } else { Some(parse_real(key, value)?) };
            }
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::invalid(format!("beta {beta} outside (0, 1)")));
            }
        }
        if self.fractions.is_empty() {
            return Err(Error::invalid("need at least one reliability fraction"));
        }
        for &f in &self.fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("fraction {f} outside (0, 1]")));
            }
        }
        if self.trials_calibration < 1 || self.trials_evaluation < 1 {
            return Err(Error::invalid("trial counts must be at least 1"));
        }
        if !(self.cell_km > 0.0) || !self.cell_km.is_finite() {
            return Err(Error::invalid(format!("cell_km {} must be positive", self.cell_km)));
        }
        if let Some(r) = self.disc_radius_km {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!("disc_radius_km {r} must be positive")));
            }
        }
        match &self.model {
            ModelSelector::Radar { m, n, .. } => {
                if *m == 0 || *n == 0 {
                    return Err(Error::invalid("radar needs at least one tx and one rx"));
                }
                if self.snr_db.is_empty() {
                    return Err(Error::invalid("radar needs at least one SNR point"));
                }
                if self.snr_db.iter().any(|s| !s.is_finite()) {
                    return Err(Error::invalid("SNR points must be finite"));
                }
            }
            ModelSelector::Changepoint { series_length, mu } => {
                if *series_length < 2 {
                    return Err(Error::invalid("changepoint series needs at least 2 samples"));
                }
                if !mu.is_finite() {
                    return Err(Error::invalid(format!("mu {mu} must be finite")));
                }
            }
        }
        let expected_tail = self.alpha * self.trials_calibration as f64;
        if expected_tail < 10.0 {
            log::warn!(
                "only {expected_tail:.1} null trials expected beyond the detection threshold; \
                 raise trials_calibration or alpha"
            );
        }
        Ok(())
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::parse(format!("`{key}` must be a nonnegative integer, got {value:?}")))
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    parse_real_str::<f64>(value)
        .map_err(|_| Error::parse(format!("`{key}` must be a real number, got {value:?}")))
        .and_then(|v: f64| {
            if v.is_nan() {
                Err(Error::parse(format!("`{key}` must not be NaN")))
            } else {
                Ok(v)
            }
        })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|item| parse_real(key, item.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::full().validate().unwrap();
    }

    #[test]
    fn parses_a_full_file() {
        let text = "
            # radar sweep at two SNR points
            profile = desk
            model = radar
            scene = wide
            m = 2
            n = 3            # receivers
            snr_db = -10, 0
            alpha = 5e-3
            beta = 0.2
            fractions = 0.5, 1.0
            trials_calibration = 1000
            trials_evaluation = 2000
            seed = 7
            region = ellipse
            cell_km = 15
            out = rows.csv
        ";
        let config = ExperimentConfig::parse(text).unwrap();
        assert_eq!(
            config.model,
            ModelSelector::Radar { scene: ScenePreset::Wide, m: 2, n: 3 }
        );
        assert_eq!(config.snr_db, vec![-10.0, 0.0]);
        assert_eq!(config.alpha, 5e-3);
        assert_eq!(config.beta, Some(0.2));
        assert_eq!(config.fractions, vec![0.5, 1.0]);
        assert_eq!(config.trials_calibration, 1000);
        assert_eq!(config.seed, 7);
        assert_eq!(config.region, RegionMode::EllipseUnion);
        assert_eq!(config.cell_km, 15.0);
        assert_eq!(config.out, Some(PathBuf::from("rows.csv")));
    }

    #[test]
    fn changepoint_keys_require_the_changepoint_model() {
        let mut config = ExperimentConfig::desk();
        assert!(config.apply("mu", "0.5").is_err());
        config.apply("model", "changepoint").unwrap();
        config.apply("mu", "0.5").unwrap();
        config.apply("series_length", "8").unwrap();
        assert_eq!(
            config.model,
            ModelSelector::Changepoint { series_length: 8, mu: 0.5 }
        );
        // And radar keys now bounce.
        assert!(config.apply("m", "3").is_err());
        assert!(config.apply("scene", "wide").is_err());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ExperimentConfig::parse("mystery = 1").is_err());
        assert!(ExperimentConfig::parse("alpha").is_err());
        assert!(ExperimentConfig::parse("alpha = banana").is_err());
        assert!(ExperimentConfig::parse("alpha = 1.5").is_err());
        assert!(ExperimentConfig::parse("fractions = 0.0").is_err());
        assert!(ExperimentConfig::parse("seed = -1").is_err());
        assert!(ExperimentConfig::parse("region = circle").is_err());
        assert!(ExperimentConfig::parse("alpha = nan").is_err());
    }

    #[test]
    fn profile_then_overrides() {
        let config = ExperimentConfig::parse("profile = full\ntrials_evaluation = 500").unwrap();
        assert_eq!(config.alpha, 1e-3);
        assert_eq!(config.trials_calibration, 1_000_000);
        assert_eq!(config.trials_evaluation, 500);
    }

    #[test]
    fn model_switch_preserves_when_already_selected() {
        let mut config = ExperimentConfig::desk();
        config.apply("m", "4").unwrap();
        config.apply("model", "radar").unwrap(); // no-op, keeps m = 4
        assert_eq!(
            config.model,
            ModelSelector::Radar { scene: ScenePreset::Wide, m: 4, n: 2 }
        );
    }
}
