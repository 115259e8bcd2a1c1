//! Sweeps idle window and quasi-static spread and reports the Aurora-DD MSE
//! reduction against Baseline per phi, averaged over a handful of seeds.
//!
//! cargo run --release -p aurora-campaign --example tune_profile

use aurora_campaign::{run_campaign, CampaignConfig};
use aurora_core::MitigationCondition as C;

const SEEDS: [u64; 5] = [1, 2, 3, 42, 99];

fn main() {
    println!("idle_us sigma   readout  min_red  mean_red  max_red");
    for idle_us in [40.0, 60.0, 80.0, 100.0] {
        for sigma in [0.02, 0.05, 0.08] {
            for p in [0.0, 0.01, 0.02] {
                let mut reductions = Vec::new();
                for seed in SEEDS {
                    let mut cfg = CampaignConfig {
                        master_seed: seed,
                        conditions: vec![C::Baseline, C::AuroraDd],
                        idle_ns: idle_us * 1000.0,
                        pinned_delta_phi: Some(0.15),
                        ..CampaignConfig::default()
                    };
                    cfg.profile.sigma_qs = sigma;
                    cfg.profile.readout = aurora_core::Confusion::symmetric(p).unwrap();
                    let rs = run_campaign(&cfg).expect("campaign");
                    reductions.extend(
                        cfg.phi_set
                            .iter()
                            .filter_map(|&phi| rs.summary(phi, C::AuroraDd)?.mse_reduction_pct),
                    );
                }
                let min = reductions.iter().copied().fold(f64::INFINITY, f64::min);
                let max = reductions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = reductions.iter().sum::<f64>() / reductions.len() as f64;
                println!("{idle_us:7.0} {sigma:5.2} {p:8.2} {min:8.1} {mean:9.1} {max:8.1}");
            }
        }
    }
}
