//! Campaign configuration: a flat TOML file with units spelled out in the key
//! names. Every key is optional; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use aurora_core::emulator::Confusion;
use aurora_core::{Grid, MitigationCondition, Profile, RelaxationTimes};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key '{key}' at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("invalid value for '{field}': {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: Option<u64>,
    phi_set_rad: Option<Vec<f64>>,
    conditions: Option<Vec<String>>,
    trials: Option<usize>,
    shots: Option<u64>,
    preliminary_trial: Option<bool>,
    t1_us: Option<f64>,
    t2_us: Option<f64>,
    dt_ns: Option<f64>,
    eps_sys_rad: Option<f64>,
    sigma_qs_rad_per_us: Option<f64>,
    readout_p10: Option<f64>,
    readout_p01: Option<f64>,
    noise_scale: Option<f64>,
    idle_ns: Option<f64>,
    dd_reps: Option<usize>,
    eta_rad: Option<f64>,
    max_iters: Option<usize>,
    grid_lo_rad: Option<f64>,
    grid_hi_rad: Option<f64>,
    grid_step_rad: Option<f64>,
    calibration_shots: Option<u64>,
    calibration_idle_ns: Option<f64>,
    delta_phi_star_rad: Option<f64>,
    zne_lambdas: Option<Vec<f64>>,
    bootstrap_resamples: Option<usize>,
    ci_level: Option<f64>,
    output_dir: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub eta: f64,
    pub max_iters: usize,
    pub grid: Grid<f64>,
}

/// Probe used by the offline calibration sweep and the closed-loop audit runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// `0` runs the sweep in expectation mode.
    pub shots: u64,
    pub idle_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub master_seed: u64,
    pub phi_set: Vec<f64>,
    pub conditions: Vec<MitigationCondition>,
    pub trials: usize,
    /// `0` selects expectation mode.
    pub shots: u64,
    /// Trial 0 is kept in the records but left out of every summary.
    pub preliminary_trial: bool,
    pub profile: Profile,
    pub idle_ns: f64,
    pub dd_reps: usize,
    pub controller: ControllerConfig,
    pub calibration: CalibrationConfig,
    /// Skips the sweep when set.
    pub pinned_delta_phi: Option<f64>,
    pub zne_lambdas: Vec<f64>,
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
    /// Invocation-only; not echoed into results.
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// Worker threads; `0` uses every core. Invocation-only.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            phi_set: vec![0.05, 0.10, 0.15, 0.20],
            conditions: MitigationCondition::ALL.to_vec(),
            trials: 30,
            shots: 2048,
            preliminary_trial: false,
            profile: Profile::calibrated(),
            idle_ns: 60_000.0,
            dd_reps: 12,
            controller: ControllerConfig {
                eta: 0.01,
                max_iters: 50,
                grid: Grid::default(),
            },
            calibration: CalibrationConfig {
                shots: 0,
                idle_ns: 0.0,
            },
            pinned_delta_phi: None,
            zne_lambdas: vec![1.0, 1.05],
            bootstrap_resamples: 10_000,
            ci_level: 0.95,
            output_dir: PathBuf::from("results"),
            threads: 0,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(bad("trials", "must be >= 1"));
        }
        if self.preliminary_trial && self.trials < 2 {
            return Err(bad("preliminary_trial", "needs trials >= 2"));
        }
        if self.phi_set.is_empty() {
            return Err(bad("phi_set_rad", "must be nonempty"));
        }
        if self.phi_set.iter().any(|p| !p.is_finite()) {
            return Err(bad("phi_set_rad", "entries must be finite"));
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if self.conditions[..i].contains(c) {
                return Err(bad("conditions", format!("'{c}' listed twice")));
            }
        }
        self.profile
            .validate()
            .map_err(|e| bad("profile", e.to_string()))?;
        if !(self.idle_ns >= 0.0) || !self.idle_ns.is_finite() {
            return Err(bad("idle_ns", "must be finite and >= 0"));
        }
        if self.dd_reps == 0 {
            return Err(bad("dd_reps", "must be >= 1"));
        }
        if !(self.controller.eta.abs() <= aurora_core::control::MAX_GAIN) {
            return Err(bad("eta_rad", "|eta| must be <= 0.02"));
        }
        if self.controller.max_iters == 0 {
            return Err(bad("max_iters", "must be >= 1"));
        }
        self.controller
            .grid
            .points()
            .map_err(|e| bad("grid", e.to_string()))?;
        if !(self.calibration.idle_ns >= 0.0) || !self.calibration.idle_ns.is_finite() {
            return Err(bad("calibration_idle_ns", "must be finite and >= 0"));
        }
        if let Some(d) = self.pinned_delta_phi {
            if !d.is_finite() {
                return Err(bad("delta_phi_star_rad", "must be finite"));
            }
        }
        if self
            .zne_lambdas
            .iter()
            .any(|l| !(*l > 0.0) || !l.is_finite())
        {
            return Err(bad("zne_lambdas", "scales must be finite and > 0"));
        }
        let mut distinct = self.zne_lambdas.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if self.conditions.iter().any(|c| c.uses_zne()) && distinct.len() < 2 {
            return Err(bad("zne_lambdas", "needs at least two distinct scales"));
        }
        if self.bootstrap_resamples < 100 {
            return Err(bad("bootstrap_resamples", "must be >= 100"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(bad("ci_level", "must be in (0, 1)"));
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn map_toml_error(text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    let message = err.message().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or_default().to_string();
        return ConfigError::UnknownKey { key, line };
    }
    ConfigError::Syntax { line, message }
}

/// Parses config text, applying defaults for absent keys and validating the result.
pub fn parse_config_str(text: &str) -> Result<CampaignConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| map_toml_error(text, e))?;
    let mut cfg = CampaignConfig::default();
    let d = cfg.profile;

    if let Some(v) = raw.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = raw.phi_set_rad {
        cfg.phi_set = v;
    }
    if let Some(v) = raw.conditions {
        cfg.conditions = v
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|e: aurora_core::Error| bad("conditions", e.to_string()))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = raw.trials {
        cfg.trials = v;
    }
    if let Some(v) = raw.shots {
        cfg.shots = v;
    }
    if let Some(v) = raw.preliminary_trial {
        cfg.preliminary_trial = v;
    }
    let rt = RelaxationTimes::new(raw.t1_us.unwrap_or(d.rt.t1), raw.t2_us.unwrap_or(d.rt.t2))
        .map_err(|e| bad("t1_us/t2_us", e.to_string()))?;
    let readout = Confusion::new(
        raw.readout_p10.unwrap_or(d.readout.matrix[0][1]),
        raw.readout_p01.unwrap_or(d.readout.matrix[1][0]),
    )
    .map_err(|e| bad("readout_p10/readout_p01", e.to_string()))?;
    cfg.profile = Profile {
        rt,
        dt_ns: raw.dt_ns.unwrap_or(d.dt_ns),
        eps_sys: raw.eps_sys_rad.unwrap_or(d.eps_sys),
        sigma_qs: raw.sigma_qs_rad_per_us.unwrap_or(d.sigma_qs),
        readout,
        lambda: raw.noise_scale.unwrap_or(d.lambda),
    };
    if let Some(v) = raw.idle_ns {
        cfg.idle_ns = v;
    }
    if let Some(v) = raw.dd_reps {
        cfg.dd_reps = v;
    }
    if let Some(v) = raw.eta_rad {
        cfg.controller.eta = v;
    }
    if let Some(v) = raw.max_iters {
        cfg.controller.max_iters = v;
    }
    let g = cfg.controller.grid;
    cfg.controller.grid = Grid {
        lo: raw.grid_lo_rad.unwrap_or(g.lo),
        hi: raw.grid_hi_rad.unwrap_or(g.hi),
        step: raw.grid_step_rad.unwrap_or(g.step),
    };
    if let Some(v) = raw.calibration_shots {
        cfg.calibration.shots = v;
    }
    if let Some(v) = raw.calibration_idle_ns {
        cfg.calibration.idle_ns = v;
    }
    cfg.pinned_delta_phi = raw.delta_phi_star_rad;
    if let Some(v) = raw.zne_lambdas {
        cfg.zne_lambdas = v;
    }
    if let Some(v) = raw.bootstrap_resamples {
        cfg.bootstrap_resamples = v;
    }
    if let Some(v) = raw.ci_level {
        cfg.ci_level = v;
    }
    if let Some(v) = raw.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = raw.threads {
        cfg.threads = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<CampaignConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config_str("master_seed = 7\n").unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.phi_set, vec![0.05, 0.10, 0.15, 0.20]);
        assert_eq!(cfg.trials, 30);
        assert_eq!(cfg.shots, 2048);
        assert_eq!(cfg.conditions.len(), 5);
        assert_eq!(cfg.profile.rt.t1, 155.3);
        assert_eq!(cfg.profile.rt.t2, 110.3);
        assert_eq!(cfg.zne_lambdas, vec![1.0, 1.05]);
        assert_eq!(cfg.dd_reps, 12);
    }

    #[test]
    fn zero_trials_rejected() {
        let err = parse_config_str("trials = 0").unwrap_err();
        assert!(
            matches!(
                err,
                ConfigError::Invalid {
                    field: "trials",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn typo_is_named() {
        let err = parse_config_str("master_seed = 1\nsots = 10\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { key, line } => {
                assert_eq!(key, "sots");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_syntax_reports_line() {
        let err = parse_config_str("trials = 3\nshots = = 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            parse_config(Path::new("/nonexistent/aurora.toml")),
            Err(ConfigError::Io { .. })
        ));
    }

    #[test]
    fn invariant_violations() {
        for (text, field) in [
            ("phi_set_rad = []", "phi_set_rad"),
            ("conditions = [\"baseline\", \"baseline\"]", "conditions"),
            ("conditions = [\"nope\"]", "conditions"),
            ("eta_rad = 0.03", "eta_rad"),
            ("zne_lambdas = [1.0]", "zne_lambdas"),
            ("t2_us = 400.0", "t1_us/t2_us"),
            ("readout_p10 = 1.5", "readout_p10/readout_p01"),
            ("grid_step_rad = 0.0", "grid"),
            ("preliminary_trial = true\ntrials = 1", "preliminary_trial"),
            ("ci_level = 1.0", "ci_level"),
        ] {
            match parse_config_str(text) {
                Err(ConfigError::Invalid { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn single_lambda_allowed_without_zne() {
        let cfg = parse_config_str("conditions = [\"baseline\"]\nzne_lambdas = [1.0]").unwrap();
        assert_eq!(cfg.conditions, vec![MitigationCondition::Baseline]);
    }
}
