use pswl::config::WorkloadConfig;
use pswl::sim::{Simulation, SERIES_HEADER};
use pswl::workload::Access;
use pswl::*;

fn write(page: u32, at: f64) -> Access {
    Access { page, write: true, arrival_us: at }
}

fn base(policy: PolicyKind, scheme: ScalingScheme, ops: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(policy, scheme, 3, 1);
    c.initial_wear.target_probability = Some(1e-4);
    if let WorkloadConfig::Synthetic(s) = &mut c.workload {
        s.op_count = ops;
        s.inter_arrival_us = 5000.0;
    }
    c
}

#[test]
fn empty_workload_reports_initial_state() {
    let cfg = base(PolicyKind::PsWl, ScalingScheme::RoundRobin, 0);
    let sim = Simulation::new(&cfg).unwrap();
    let pe: Vec<f64> = sim.disks().iter().map(|d| d.pe_count()).collect();
    let r = sim.run(Vec::new()).unwrap();
    assert_eq!(r.events, 0);
    assert_eq!(r.wl_trigger_count, 0);
    assert_eq!(r.io.host(), 0);
    assert_eq!(r.io.wl_migration, 0);
    assert_eq!(r.status, RunStatus::Completed);
    let mean = pe.iter().sum::<f64>() / pe.len() as f64;
    let sd = (pe.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / pe.len() as f64).sqrt();
    assert!((r.lifetime_stddev - sd).abs() < 1e-9);
}

#[test]
fn single_raid5_write_costs_one_program() {
    let mut cfg = ExperimentConfig::new(PolicyKind::Swans, ScalingScheme::Gsr, 3, 0);
    cfg.latency.read_us = 50.0;
    cfg.latency.program_us = 500.0;
    cfg.latency.erase_us = 3000.0;
    let sim = Simulation::new(&cfg).unwrap();
    let r = sim.run(vec![write(0, 0.0)]).unwrap();
    assert_eq!(r.avg_response_time_us, 500.0);
    assert_eq!(r.io.host_writes, 1);
    assert_eq!(r.io.parity_writes, 1);
}

#[test]
fn back_to_back_writes_on_one_disk() {
    let cfg = ExperimentConfig::new(PolicyKind::Swans, ScalingScheme::FastScale, 3, 0);
    let sim = Simulation::new(&cfg).unwrap();
    // on RAID-0 page 0 and page 3 share disk 0
    let r = sim.run(vec![write(0, 0.0), write(3, 0.0)]).unwrap();
    assert_eq!(r.avg_response_time_us, 750.0);
}

#[test]
fn io_counters_add_up() {
    for scheme in ScalingScheme::ALL {
        let r = sim::run(&base(PolicyKind::PsWl, scheme, 50_000)).unwrap();
        let io = r.io;
        assert_eq!(
            r.total_io,
            io.host_reads + io.host_writes + io.parity_writes + io.scaling_migration + io.wl_migration + io.gc_relocations,
            "{scheme}"
        );
        assert_eq!(io.total(), r.total_io);
        assert!(r.lifetime_stddev >= 0.0);
        assert!(r.avg_response_time_us >= r.config.latency.read_us);
        let afp: Vec<f64> = r.series.iter().map(|s| s.afp).collect();
        assert!(afp.windows(2).all(|w| w[1] >= w[0]), "{scheme}: AFP fell");
        let last = r.series.last().unwrap();
        assert_eq!(last.total_io, r.total_io);
        assert_eq!(last.triggers, r.wl_trigger_count);
    }
}

#[test]
fn reruns_are_identical() {
    let cfg = base(PolicyKind::PsWl, ScalingScheme::Sdm, 40_000);
    let a = sim::run(&cfg).unwrap();
    let b = sim::run(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.series_csv(), b.series_csv());
    assert!(a.series_csv().starts_with(SERIES_HEADER));
    let mut other = cfg.clone();
    other.seed = 2;
    assert_ne!(sim::run(&other).unwrap().to_json(), a.to_json());
}

#[test]
fn balanced_start_converges_on_plan_io_only() {
    let mut cfg = base(PolicyKind::PsWl, ScalingScheme::FastScale, 10_000);
    cfg.initial_wear.target_probability = None;
    cfg.run_until = RunUntil::Converged;
    let r = sim::run(&cfg).unwrap();
    let c = r.convergence.expect("fresh array is balanced");
    assert_eq!(c.total_io, r.redistribution.page_ios);
    assert_eq!(r.status, RunStatus::Converged);
}

#[test]
fn zero_penalty_ablation_matches() {
    let mut cfg = base(PolicyKind::PsWl, ScalingScheme::RoundRobin, 60_000);
    cfg.reliability.k_p = 0.0;
    let a = sim::run(&cfg).unwrap();
    cfg.policy = PolicyKind::PsWlAblation;
    let b = sim::run(&cfg).unwrap();
    assert_eq!(a.total_io, b.total_io);
    assert_eq!(a.wl_trigger_count, b.wl_trigger_count);
    assert_eq!(a.series_csv(), b.series_csv());
}

#[test]
fn exhausted_stream_reports_non_convergence() {
    let mut cfg = base(PolicyKind::PsWl, ScalingScheme::RoundRobin, 0);
    cfg.run_until = RunUntil::Converged;
    let r = sim::run(&cfg).unwrap();
    assert_eq!(r.status, RunStatus::NonConvergence);
    assert!(r.convergence.is_none());
}
