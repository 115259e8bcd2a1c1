//! Acceptance criteria, one check per criterion. Runs without the libtest
//! harness so the PASS/FAIL lines are always shown; exits nonzero on failure.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use aurora_campaign::config::parse_config;
use aurora_campaign::output::{write_summary, SUMMARY_HEADER};
use aurora_campaign::{run_campaign, CampaignConfig};
use aurora_core::emulator::Confusion;
use aurora_core::*;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(
        elapsed < limit,
        format!("took {elapsed:.2?}, limit {limit:?}"),
    )
}

fn channel_oracle() -> Outcome {
    let start = Instant::now();
    let (x0, y0, z0) = (0.6, 0.0, 0.8);
    let mut worst = 0.0_f64;
    let mut n = 0;
    for i in 0..10 {
        let t = 2.0_f64.powi(i) * 0.37;
        for j in 0..10 {
            let t1 = 5.0 + 40.0 * j as f64;
            for k in 0..10 {
                let t2 = 2.0 * t1 * (k + 1) as f64 / 10.0;
                let rt = RelaxationTimes::new(t1, t2).map_err(|e| e.to_string())?;
                let s = free_evolution(
                    BlochVector {
                        x: x0,
                        y: y0,
                        z: z0,
                    },
                    t,
                    rt,
                    0.0,
                )
                .map_err(|e| e.to_string())?;
                let x = (-t / t2).exp() * x0;
                let z = 1.0 + (z0 - 1.0) * (-t / t1).exp();
                worst = worst
                    .max((s.x - x).abs())
                    .max((s.z - z).abs())
                    .max(s.y.abs());
                n += 1;
            }
        }
    }
    ensure(n == 1000, "grid size")?;
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{n} cases, max deviation {worst:e}"))
}

fn echo_property() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let profile = Profile {
        sigma_qs: 0.0,
        ..Profile::noise_free()
    };
    let mut worst_dd = 0.0_f64;
    let mut worst_base = 0.0_f64;
    let mut min_shift = f64::INFINITY;
    for _ in 0..100 {
        let phi: f64 = rng.random_range(-1.5..1.5);
        let qs: f64 = rng.random_range(-0.5..0.5);
        let idle_ns: f64 = rng.random_range(5_000.0..120_000.0);
        let reps = rng.random_range(1..25);
        let dd = build_circuit(phi, 0.0, MitigationCondition::DdOnly, idle_ns, reps, 0.5)
            .map_err(|e| e.to_string())?;
        let base = build_circuit(phi, 0.0, MitigationCondition::Baseline, idle_ns, reps, 0.5)
            .map_err(|e| e.to_string())?;
        let z_dd = simulate_state(&dd, &profile, qs)
            .map_err(|e| e.to_string())?
            .z;
        let z_base = simulate_state(&base, &profile, qs)
            .map_err(|e| e.to_string())?
            .z;
        let tau_us = total_idle(&base) / 1000.0;
        worst_dd = worst_dd.max((z_dd - phi.cos()).abs());
        worst_base = worst_base.max((z_base - (phi + qs * tau_us).cos()).abs());
        min_shift = min_shift.min((qs * tau_us).abs());
    }
    ensure(
        worst_dd <= 1e-9,
        format!("DD deviates from cos phi by {worst_dd:e}"),
    )?;
    ensure(
        worst_base <= 1e-9,
        format!("Baseline deviates from cos(phi + qs tau) by {worst_base:e}"),
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "100 cases, DD max |z - cos phi| = {worst_dd:e}, Baseline tracks the accumulated phase to {worst_base:e}"
    ))
}

fn controller_convergence() -> Outcome {
    let analytic = Profile {
        eps_sys: 0.15,
        ..Profile::noise_free()
    };
    let settings = LoopSettings {
        eta: 0.01,
        max_iters: 20,
        initial_delta_phi: 0.0,
    };
    let probe = Probe::shallow(0);
    let mut iters = Vec::new();
    for phi in [0.05, 0.10, 0.15, 0.20] {
        let run = run_closed_loop(phi, &LocalEmulator, &analytic, &probe, &settings, 1)
            .map_err(|e| e.to_string())?;
        ensure(
            (run.final_delta_phi - 0.15).abs() <= 0.01,
            format!("phi={phi}: ended at {}", run.final_delta_phi),
        )?;
        let hist = run.state.history();
        let mut prev_j = f64::INFINITY;
        for step in hist {
            if (step.delta_phi - 0.15).abs() <= 0.01 + 1e-12 {
                break;
            }
            ensure(
                step.objective <= prev_j,
                format!(
                    "phi={phi}: objective rose to {} before the band",
                    step.objective
                ),
            )?;
            prev_j = step.objective;
        }
        iters.push(run.state.iteration());
    }
    let cal = calibrate_offset(
        &[0.05, 0.10, 0.15, 0.20],
        &LocalEmulator,
        &Profile::calibrated(),
        &Probe::shallow(0),
        &Grid::default(),
        42,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (cal.delta_phi_star - 0.15).abs() <= 0.005,
        format!("calibration gave {}", cal.delta_phi_star),
    )?;
    Ok(format!(
        "iterations {iters:?} (<= 20), calibration delta_phi* = {:.4}",
        cal.delta_phi_star
    ))
}

fn campaign_reproduction() -> Outcome {
    let start = Instant::now();
    let rs = run_campaign(&CampaignConfig::default()).map_err(|e| e.to_string())?;
    let mut reductions = Vec::new();
    for &phi in &rs.config.phi_set {
        let r = rs
            .summary(phi, MitigationCondition::AuroraDd)
            .and_then(|s| s.mse_reduction_pct)
            .ok_or("missing Aurora-DD summary")?;
        reductions.push(r);
    }
    ensure(
        reductions.iter().all(|r| *r >= 60.0),
        format!("MSE reduction below 60%: {reductions:.1?}"),
    )?;
    let in_band = reductions.iter().all(|r| (68.0..=97.0).contains(r));

    let mut ordered = 0;
    for seed in 1..=20u64 {
        let cfg = CampaignConfig {
            master_seed: seed,
            conditions: vec![MitigationCondition::Baseline, MitigationCondition::AuroraDd],
            ..CampaignConfig::default()
        };
        let rs = run_campaign(&cfg).map_err(|e| e.to_string())?;
        let ok = cfg.phi_set.iter().all(|&phi| {
            let a = rs
                .summary(phi, MitigationCondition::AuroraDd)
                .unwrap()
                .ae
                .mean;
            let b = rs
                .summary(phi, MitigationCondition::Baseline)
                .unwrap()
                .ae
                .mean;
            a < b
        });
        ordered += ok as usize;
    }
    ensure(
        ordered == 20,
        format!("AE ordering held for {ordered}/20 seeds"),
    )?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "MSE reduction per phi {reductions:.1?} ({} the 68-97% band), ordering 20/20 seeds",
        if in_band { "inside" } else { "outside" }
    ))
}

fn schema_and_fixtures() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = CampaignConfig {
        trials: 3,
        ..CampaignConfig::default()
    };
    let rs = run_campaign(&cfg).map_err(|e| e.to_string())?;
    let path = dir.path().join("summary.csv");
    write_summary(&rs.summaries, &path).map_err(|e| e.to_string())?;
    let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let header = text.lines().next().unwrap_or_default();
    ensure(
        header == SUMMARY_HEADER.join(","),
        format!("header {header}"),
    )?;
    for col in [
        "phi",
        "condition",
        "n",
        "mean_ae",
        "std_ae",
        "reduction_pct",
    ] {
        ensure(
            header.split(',').any(|c| c == col),
            format!("missing {col}"),
        )?;
    }
    let base_row = text
        .lines()
        .find(|l| l.starts_with("0.05000000000,baseline,3,"))
        .ok_or("no (0.05, baseline) row")?;
    ensure(
        base_row.split(',').nth(6) == Some(""),
        "baseline carries a reduction",
    )?;

    let p = sign_test_exact(3, 3).map_err(|e| e.to_string())?;
    ensure(
        p == BigRational::new(1.into(), 8.into()),
        format!("sign_test(3,3) = {p}"),
    )?;
    let imp = improvement(1.0088, 0.0079).map_err(|e| e.to_string())?;
    ensure(
        format!("{imp:.1}") == "99.2",
        format!("improvement = {imp}"),
    )?;
    Ok(format!(
        "summary.csv header ok, sign_test(3,3) = {p}, improvement = {imp:.1}%"
    ))
}

fn zne() -> Outcome {
    let mut worst = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-0.5..0.5);
        let pts: Vec<ZnePoint<f64>> = [1.0, 1.5, 2.0, 3.0]
            .iter()
            .map(|&l| ZnePoint {
                lambda: l,
                z: a + b * l,
            })
            .collect();
        let fit = zne_extrapolate(&pts).map_err(|e| e.to_string())?;
        worst = worst.max((fit.z0 - a).abs());
    }
    ensure(worst < 1e-12, format!("linear recovery residual {worst:e}"))?;

    let fit: ZneFit<f64> = zne_extrapolate(&[
        ZnePoint {
            lambda: 1.0,
            z: 0.90,
        },
        ZnePoint {
            lambda: 1.05,
            z: 0.88,
        },
    ])
    .map_err(|e| e.to_string())?;
    ensure(
        (fit.z0 - 1.30).abs() < 1e-9 && fit.out_of_range,
        format!(
            "two-point case gave z0 = {} (flag {})",
            fit.z0, fit.out_of_range
        ),
    )?;

    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/zne_instability.toml");
    let cfg = parse_config(&shipped).map_err(|e| e.to_string())?;
    ensure(
        cfg.shots == 2048,
        "shipped config must sample at 2048 shots",
    )?;
    let rs = run_campaign(&cfg).map_err(|e| e.to_string())?;
    let flagged = rs
        .records
        .iter()
        .filter(|r| r.zne_flag == Some(true))
        .count();
    let total = rs.records.iter().filter(|r| r.zne_flag.is_some()).count();
    ensure(flagged >= 1, "no out-of-range ZNE trial")?;
    Ok(format!(
        "residual {worst:e}, two-point z0 = {:.2} flagged, shipped config flags {flagged}/{total} trials",
        fit.z0
    ))
}

fn statistics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mu, sigma) = (0.5, 0.2);
    let reps = 1000;
    let mut covered = 0;
    for r in 0..reps {
        let sample: Vec<f64> = (0..30)
            .map(|_| mu + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let ci = bootstrap_ci(&sample, 1000, 0.95, r).map_err(|e| e.to_string())?;
        covered += (ci.lo <= mu && mu <= ci.hi) as usize;
    }
    let coverage = covered as f64 / reps as f64;
    let elapsed = start.elapsed();
    ensure(
        (0.90..=0.98).contains(&coverage),
        format!("coverage {coverage:.3}"),
    )?;
    within(elapsed, Duration::from_secs(30))?;

    let mut worst = 0.0_f64;
    for p10 in [0.0, 0.01, 0.05, 0.2, 0.45] {
        for p01 in [0.0, 0.02, 0.1, 0.3] {
            let c = Confusion::new(p10, p01).map_err(|e| e.to_string())?;
            for i in 0..=100 {
                let p0 = i as f64 / 100.0;
                let m =
                    readout_mitigate_probabilities(c.apply(p0), &c).map_err(|e| e.to_string())?;
                worst = worst.max((m.p0 - p0).abs()).max((m.p1 - (1.0 - p0)).abs());
            }
        }
    }
    ensure(worst <= 1e-10, format!("readout round trip {worst:e}"))?;
    Ok(format!(
        "bootstrap coverage {coverage:.3} in {elapsed:.1?}, readout round trip {worst:e}"
    ))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_aurora");
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |threads: &str, name: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = root.path().join(name);
        let status = Command::new(bin)
            .args(["run", "--seed", "42", "--threads", threads, "--out"])
            .arg(&out)
            .env_remove("SOURCE_DATE_EPOCH")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            status.status.success(),
            format!("run exited with {}", status.status),
        )?;
        let read = |f: &str| fs::read(out.join(f)).map_err(|e| e.to_string());
        Ok((read("records.csv")?, read("result.json")?))
    };
    let serial = run("1", "serial")?;
    let max = run("0", "max")?;
    let wide = run("8", "wide")?;
    ensure(
        serial.0 == max.0 && serial.0 == wide.0,
        "records.csv differs",
    )?;
    ensure(
        serial.1 == max.1 && serial.1 == wide.1,
        "result.json differs",
    )?;
    Ok(format!(
        "records.csv ({} bytes) and result.json ({} bytes) identical at 1, all and 8 threads",
        serial.0.len(),
        serial.1.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 channel oracle", channel_oracle),
        ("2 echo property", echo_property),
        ("3 controller convergence", controller_convergence),
        ("4 emulator campaign reproduction", campaign_reproduction),
        (
            "5 table schema and statistics fixtures",
            schema_and_fixtures,
        ),
        ("6 zero-noise extrapolation", zne),
        ("7 statistics properties", statistics),
        ("8 determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
