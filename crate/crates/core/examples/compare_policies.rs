//! Every policy on the same scaled array and workload.

use pswl::config::WorkloadConfig;
use pswl::{ExperimentConfig, PolicyKind, ScalingScheme};

fn main() {
    let mut base = ExperimentConfig::new(PolicyKind::PsWl, ScalingScheme::RoundRobin, 3, 1);
    base.initial_wear.target_probability = Some(1e-4);
    if let WorkloadConfig::Synthetic(s) = &mut base.workload {
        s.op_count = 500_000;
        s.inter_arrival_us = 5000.0;
    }

    println!("{:<14} {:>10} {:>9} {:>9} {:>10}", "policy", "stddev", "ART us", "triggers", "wl I/O");
    for policy in [PolicyKind::PsWl, PolicyKind::PsWlAblation, PolicyKind::Swans, PolicyKind::LazyWl, PolicyKind::Edm] {
        let cfg = ExperimentConfig { policy, ..base.clone() };
        let r = pswl::sim::run(&cfg).unwrap();
        println!(
            "{:<14} {:>10.2} {:>9.1} {:>9} {:>10}",
            policy.to_string(),
            r.lifetime_stddev,
            r.avg_response_time_us,
            r.wl_trigger_count,
            r.io.wl_migration
        );
    }
}
