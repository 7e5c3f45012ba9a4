//! PS-WL against its raw-P/E ablation: I/O spent and array failure
//! probability when each first reaches convergence.

use pswl::config::WorkloadConfig;
use pswl::{ExperimentConfig, PolicyKind, RunUntil, ScalingScheme};

fn main() {
    let mut base = ExperimentConfig::new(PolicyKind::PsWl, ScalingScheme::FastScale, 3, 1);
    base.run_until = RunUntil::Converged;
    base.initial_wear.target_probability = Some(1e-4);
    base.reliability.k_p = 1e7;
    base.controller.kp = 0.2;
    base.controller.ki = 0.001;
    if let WorkloadConfig::Synthetic(s) = &mut base.workload {
        s.op_count = 3_000_000;
        s.inter_arrival_us = 5000.0;
    }

    let mut io = Vec::new();
    for policy in [PolicyKind::PsWl, PolicyKind::PsWlAblation] {
        let r = pswl::sim::run(&ExperimentConfig { policy, ..base.clone() }).unwrap();
        match r.convergence {
            Some(c) => {
                println!("{policy}: converged at event {} with {} I/Os, AFP {:.3e}", c.event_index, c.total_io, c.array_failure_prob);
                io.push(c.total_io as f64);
            }
            None => println!("{policy}: did not converge ({:?})", r.status),
        }
    }
    if let [ps, abl] = io[..] {
        println!("ablation / PS-WL I/O ratio {:.2}", abl / ps);
    }
}
