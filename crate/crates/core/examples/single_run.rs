//! Run one experiment from a TOML config (or a built-in one) and print the
//! headline metrics.

use pswl::config::WorkloadConfig;
use pswl::{ExperimentConfig, PolicyKind, ScalingScheme};

fn main() {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref()).unwrap(),
        None => {
            let mut c = ExperimentConfig::new(PolicyKind::PsWl, ScalingScheme::FastScale, 3, 1);
            c.initial_wear.target_probability = Some(1e-4);
            if let WorkloadConfig::Synthetic(s) = &mut c.workload {
                s.op_count = 300_000;
                s.inter_arrival_us = 5000.0;
            }
            c
        }
    };
    for w in cfg.validate().unwrap() {
        eprintln!("warning: {w}");
    }

    let r = pswl::sim::run(&cfg).unwrap();
    println!("{} {} {}+{}: {:?} after {} events", cfg.policy, cfg.scaling_scheme, cfg.k_o, cfg.k_s, r.status, r.events);
    println!("lifetime stddev {:.2}", r.lifetime_stddev);
    println!("ART {:.1} us", r.avg_response_time_us);
    println!("wear-leveling triggers {}", r.wl_trigger_count);
    println!("total I/O {} (wl {}, scaling {})", r.total_io, r.io.wl_migration, r.io.scaling_migration);
    println!("array failure probability {:.3e}", r.array_failure_prob);
    for t in &r.transitions {
        println!("  event {:>8}: {}", t.event_index, t.phase.as_str());
    }
}
