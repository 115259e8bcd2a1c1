//! Campaign execution: calibration, the trial grid, ZNE sub-runs and summaries.

use aurora_core::{
    absolute_error, bootstrap_ci, build_circuit, calibrate_offset, derive_seed, ideal_z,
    improvement, mse, readout_mitigate_probabilities, run_closed_loop, sign_test, summarize,
    trial_seed, zne_extrapolate, Backend, Calibration, ClosedLoopRun, Interval, LocalEmulator,
    LoopSettings, MitigationCondition, Probe, Summary, ZnePoint,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::CampaignConfig;
use crate::output::quantize;

pub const SCHEMA_VERSION: u32 = 1;

const CALIBRATION_DOMAIN: u64 = 0xCA1;
const CLOSED_LOOP_DOMAIN: u64 = 0xC105ED;
const BOOTSTRAP_DOMAIN: u64 = 0xB007;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid configuration: {0}")]
    Config(#[from] crate::config::ConfigError),

    #[error("calibration failed: {0}")]
    Calibration(#[source] aurora_core::Error),

    #[error("phi = {phi}, {condition}, trial {trial}: {source}")]
    Cell {
        phi: f64,
        condition: MitigationCondition,
        trial: usize,
        #[source]
        source: aurora_core::Error,
    },

    #[error("summary of phi = {phi}, {condition}: {source}")]
    Summary {
        phi: f64,
        condition: MitigationCondition,
        #[source]
        source: aurora_core::Error,
    },

    #[error("cannot build worker pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub phi: f64,
    pub condition: MitigationCondition,
    pub trial: usize,
    pub seed: u64,
    pub z_meas: f64,
    pub ae: f64,
    pub mse: f64,
    /// Only set for ZNE trials: whether the extrapolated value left `[-1, 1]`.
    pub zne_flag: Option<bool>,
    pub duration_ns: f64,
}

/// One noise-scaled execution behind a ZNE trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneSubRun {
    pub phi: f64,
    pub trial: usize,
    pub lambda: f64,
    pub seed: u64,
    pub z_raw: f64,
    pub z_mitigated: f64,
    pub readout_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub phi: f64,
    pub condition: MitigationCondition,
    pub ae: Summary,
    pub mean_mse: f64,
    /// AE reduction against the baseline group at the same `phi`, in percent.
    pub reduction_pct: Option<f64>,
    pub mse_reduction_pct: Option<f64>,
    /// Bootstrap interval for the mean AE.
    pub ci: Option<Interval>,
    /// One-sided sign test that the method beats the baseline, paired by trial.
    pub sign_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// Taken from `SOURCE_DATE_EPOCH` when set, so reruns stay byte-identical.
    pub timestamp: Option<String>,
    pub decisions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub schema_version: u32,
    pub config: CampaignConfig,
    /// Absent when the offset was pinned in the config.
    pub calibration: Option<Calibration>,
    pub delta_phi_star: f64,
    pub closed_loop: Vec<ClosedLoopRun<f64>>,
    pub records: Vec<TrialRecord>,
    pub zne_points: Vec<ZneSubRun>,
    pub summaries: Vec<GroupSummary>,
    pub provenance: Provenance,
}

/// Settings that shape summaries; shared by `run` and the `stats` subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryOptions {
    pub preliminary_trial: bool,
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
}

impl From<&CampaignConfig> for SummaryOptions {
    fn from(cfg: &CampaignConfig) -> Self {
        Self {
            preliminary_trial: cfg.preliminary_trial,
            bootstrap_resamples: cfg.bootstrap_resamples,
            ci_level: cfg.ci_level,
        }
    }
}

fn decisions() -> Vec<String> {
    [
        "circuit: Ry(pi/2), Rz(phi), idle, Rz(-delta_phi), Ry(-pi/2), measure Z",
        "std: sample standard deviation (n - 1)",
        "reduction_pct: 100 * (1 - mean_ae(method) / mean_ae(baseline)) over group means",
        "sign_p: one-sided exact sign test, wins are trials with ae(method) < ae(baseline)",
        "zne: readout inverted at each noise scale before the linear fit; z0 left unclipped",
        "calibration: shallow readout-mitigated probe without an idle window",
        "ci: percentile bootstrap of the mean AE, seeded from the group's trial seeds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn cell_probe(cfg: &CampaignConfig) -> Probe<f64> {
    Probe {
        idle_ns: cfg.calibration.idle_ns,
        dd_reps: cfg.dd_reps,
        ..Probe::shallow(cfg.calibration.shots)
    }
}

/// Runs the offset sweep alone.
pub fn run_calibration<B: Backend<f64> + ?Sized>(
    cfg: &CampaignConfig,
    backend: &B,
) -> Result<Calibration, CampaignError> {
    calibrate_offset(
        &cfg.phi_set,
        backend,
        &cfg.profile,
        &cell_probe(cfg),
        &cfg.controller.grid,
        derive_seed(cfg.master_seed, &[CALIBRATION_DOMAIN]),
    )
    .map_err(CampaignError::Calibration)
}

/// Closed-loop runs, one per `phi`, started from zero offset.
pub fn run_closed_loops<B: Backend<f64> + ?Sized>(
    cfg: &CampaignConfig,
    backend: &B,
) -> Result<Vec<ClosedLoopRun<f64>>, CampaignError> {
    let settings = LoopSettings {
        eta: cfg.controller.eta,
        max_iters: cfg.controller.max_iters,
        initial_delta_phi: 0.0,
    };
    let probe = cell_probe(cfg);
    cfg.phi_set
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            run_closed_loop(
                phi,
                backend,
                &cfg.profile,
                &probe,
                &settings,
                derive_seed(cfg.master_seed, &[CLOSED_LOOP_DOMAIN, i as u64]),
            )
            .map_err(CampaignError::Calibration)
        })
        .collect()
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<ResultSet, CampaignError> {
    run_campaign_with(cfg, &LocalEmulator)
}

/// Runs the whole campaign on `backend`. The output depends only on the
/// config (thread count and output directory excluded).
pub fn run_campaign_with<B: Backend<f64> + ?Sized>(
    cfg: &CampaignConfig,
    backend: &B,
) -> Result<ResultSet, CampaignError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()?;
    pool.install(|| run_in_pool(cfg, backend))
}

fn run_in_pool<B: Backend<f64> + ?Sized>(
    cfg: &CampaignConfig,
    backend: &B,
) -> Result<ResultSet, CampaignError> {
    let (calibration, delta_phi_star) = match cfg.pinned_delta_phi {
        Some(d) => (None, d),
        None => {
            let cal = run_calibration(cfg, backend)?;
            let d = cal.delta_phi_star;
            (Some(cal), d)
        }
    };
    let closed_loop = run_closed_loops(cfg, backend)?;

    let cells: Vec<(usize, MitigationCondition, usize)> = cfg
        .phi_set
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            cfg.conditions
                .iter()
                .flat_map(move |&c| (0..cfg.trials).map(move |t| (i, c, t)))
        })
        .collect();

    let outcomes: Vec<(TrialRecord, Vec<ZneSubRun>)> = cells
        .par_iter()
        .map(|&(i, condition, trial)| {
            run_cell(cfg, backend, delta_phi_star, i, condition, trial).map_err(|source| {
                CampaignError::Cell {
                    phi: cfg.phi_set[i],
                    condition,
                    trial,
                    source,
                }
            })
        })
        .collect::<Result<_, _>>()?;

    let mut records = Vec::with_capacity(outcomes.len());
    let mut zne_points = Vec::new();
    for (record, subs) in outcomes {
        records.push(record);
        zne_points.extend(subs);
    }
    let summaries = summarize_records(&records, &SummaryOptions::from(cfg))?;

    let config = CampaignConfig {
        output_dir: Default::default(),
        threads: 0,
        ..cfg.clone()
    };
    Ok(ResultSet {
        schema_version: SCHEMA_VERSION,
        config,
        calibration,
        delta_phi_star,
        closed_loop,
        records,
        zne_points,
        summaries,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            decisions: decisions(),
        },
    })
}

fn run_cell<B: Backend<f64> + ?Sized>(
    cfg: &CampaignConfig,
    backend: &B,
    delta_phi_star: f64,
    phi_index: usize,
    condition: MitigationCondition,
    trial: usize,
) -> aurora_core::Result<(TrialRecord, Vec<ZneSubRun>)> {
    let phi = cfg.phi_set[phi_index];
    let delta_phi = if condition.compensates() {
        delta_phi_star
    } else {
        0.0
    };
    let template = build_circuit(
        phi,
        delta_phi,
        condition,
        cfg.idle_ns,
        cfg.dd_reps,
        cfg.profile.dt_ns,
    )?;
    let seed = trial_seed(cfg.master_seed, phi_index, condition, trial, 0);
    let ideal = ideal_z(phi);

    let (z_meas, zne_flag, subs) = if condition.uses_zne() {
        let mut subs = Vec::with_capacity(cfg.zne_lambdas.len());
        let mut points = Vec::with_capacity(cfg.zne_lambdas.len());
        for (k, &lambda) in cfg.zne_lambdas.iter().enumerate() {
            let s = trial_seed(cfg.master_seed, phi_index, condition, trial, k);
            let profile = cfg.profile.with_lambda(cfg.profile.lambda * lambda);
            let obs = backend.execute(&template, cfg.shots, &profile, s)?;
            let m = readout_mitigate_probabilities(obs.p0(), &profile.readout)?;
            points.push(ZnePoint { lambda, z: m.z() });
            subs.push(ZneSubRun {
                phi,
                trial,
                lambda,
                seed: s,
                z_raw: obs.z(),
                z_mitigated: m.z(),
                readout_clamped: m.clamped,
            });
        }
        let fit = zne_extrapolate(&points)?;
        (fit.z0, Some(fit.out_of_range), subs)
    } else {
        let obs = backend.execute(&template, cfg.shots, &cfg.profile, seed)?;
        (obs.z(), None, Vec::new())
    };

    Ok((
        TrialRecord {
            phi,
            condition,
            trial,
            seed,
            z_meas,
            ae: absolute_error(z_meas, ideal),
            mse: mse(z_meas, ideal),
            zne_flag,
            duration_ns: template.total_duration_ns(),
        },
        subs,
    ))
}

/// Groups records by `(phi, condition)` in order of first appearance and
/// summarizes each group. Metrics are first rounded to their CSV
/// representation, so summaries recomputed from `records.csv` by the `stats`
/// subcommand match the run's exactly.
pub fn summarize_records(
    records: &[TrialRecord],
    opts: &SummaryOptions,
) -> Result<Vec<GroupSummary>, CampaignError> {
    let mut keys: Vec<(f64, MitigationCondition)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.phi, r.condition)) {
            keys.push((r.phi, r.condition));
        }
    }
    let group = |phi: f64, c: MitigationCondition| -> Vec<&TrialRecord> {
        let mut g: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.phi == phi && r.condition == c)
            .filter(|r| !(opts.preliminary_trial && r.trial == 0))
            .collect();
        g.sort_by_key(|r| r.trial);
        g
    };

    keys.iter()
        .filter_map(|&(phi, condition)| {
            let g = group(phi, condition);
            if g.is_empty() {
                return None;
            }
            Some(summarize_group(
                phi,
                condition,
                &g,
                &group(phi, MitigationCondition::Baseline),
                opts,
            ))
        })
        .collect()
}

fn summarize_group(
    phi: f64,
    condition: MitigationCondition,
    g: &[&TrialRecord],
    baseline: &[&TrialRecord],
    opts: &SummaryOptions,
) -> Result<GroupSummary, CampaignError> {
    let wrap = |source| CampaignError::Summary {
        phi,
        condition,
        source,
    };
    let ae: Vec<f64> = g.iter().map(|r| quantize(r.ae)).collect();
    let ae_summary = summarize(&ae).map_err(wrap)?;
    let mean_mse = g.iter().map(|r| quantize(r.mse)).sum::<f64>() / g.len() as f64;

    let ci = if ae.len() >= 2 {
        let seeds: Vec<u64> = g.iter().map(|r| r.seed).collect();
        let seed = derive_seed(BOOTSTRAP_DOMAIN, &seeds);
        Some(bootstrap_ci(&ae, opts.bootstrap_resamples, opts.ci_level, seed).map_err(wrap)?)
    } else {
        None
    };

    let compare = condition != MitigationCondition::Baseline && !baseline.is_empty();
    let (reduction_pct, mse_reduction_pct, sign_p) = if compare {
        let base_ae = baseline.iter().map(|r| quantize(r.ae)).sum::<f64>() / baseline.len() as f64;
        let base_mse =
            baseline.iter().map(|r| quantize(r.mse)).sum::<f64>() / baseline.len() as f64;
        let reduction = improvement(base_ae, ae_summary.mean).ok();
        let mse_reduction = improvement(base_mse, mean_mse).ok();
        let pairs: Vec<(f64, f64)> = g
            .iter()
            .filter_map(|r| {
                baseline
                    .iter()
                    .find(|b| b.trial == r.trial)
                    .map(|b| (quantize(r.ae), quantize(b.ae)))
            })
            .collect();
        let wins = pairs.iter().filter(|(m, b)| m < b).count() as u64;
        let p = if pairs.is_empty() {
            None
        } else {
            Some(sign_test::<f64>(wins, pairs.len() as u64).map_err(wrap)?)
        };
        (reduction, mse_reduction, p)
    } else {
        (None, None, None)
    };

    Ok(GroupSummary {
        phi,
        condition,
        ae: ae_summary,
        mean_mse,
        reduction_pct,
        mse_reduction_pct,
        ci,
        sign_p,
    })
}

impl ResultSet {
    pub fn summary(&self, phi: f64, condition: MitigationCondition) -> Option<&GroupSummary> {
        self.summaries
            .iter()
            .find(|s| s.phi == phi && s.condition == condition)
    }

    pub fn records_for(
        &self,
        phi: f64,
        condition: MitigationCondition,
    ) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.phi == phi && r.condition == condition)
    }
}
