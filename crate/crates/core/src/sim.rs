//! Discrete-event simulation kernel.
//!
//! A run builds the original array, pre-ages it, fills it with data,
//! applies the scaling plan and then replays the workload. Every disk has a
//! FCFS queue; a host request completes when the last disk it touches
//! (data plus parity) completes. Metrics are sampled every `T_0` host events.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, RunUntil, WorkloadConfig};
use crate::controller::{relative_gap, ControlSample, ControllerPhase};
use crate::flash::{erase_count_stddev, DeviceState, FlashError, WriteOutcome};
use crate::hotness::{AccessWindow, HotnessSnapshot, Thresholds};
use crate::policy::{build_policy, ArrayView, IoCounters, PolicyContext, PolicyDecision, WearPolicy};
use crate::reliability::{array_failure_probability, effective_lifetime, failure_probability_or_zero};
use crate::scaling::{released_slots, ArrayLayout, MigrationPlan, ScalingError, Slot};
use crate::workload::{generate_synthetic, parse_trace, Access, WorkloadError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Flash(#[from] FlashError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

/// Per-operation service times in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencyModel {
    pub read_us: f64,
    pub program_us: f64,
    pub erase_us: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            read_us: 50.0,
            program_us: 500.0,
            erase_us: 3000.0,
        }
    }
}

impl LatencyModel {
    /// Warnings for unusual (but accepted) timings.
    pub fn lint(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.read_us < 0.0 || self.program_us < 0.0 || self.erase_us < 0.0 {
            w.push("latency: negative service times are clamped to 0".to_string());
        }
        if !(self.erase_us >= self.program_us && self.program_us >= self.read_us) {
            w.push("latency: expected erase >= program >= read".to_string());
        }
        w
    }

    /// Service time of a program that may have triggered garbage collection.
    pub fn write_service(&self, out: &WriteOutcome) -> f64 {
        self.program_us.max(0.0) * out.pages_programmed as f64
            + self.read_us.max(0.0) * out.relocations as f64
            + self.erase_us.max(0.0) * out.gc_erases as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiskQueue {
    pub busy_until: f64,
    pub served_ops: u64,
    pub summed_response: f64,
}

/// FCFS service: wait for the disk, then run for `service`.
pub fn response_time(arrival: f64, q: &mut DiskQueue, service: f64) -> f64 {
    let start = arrival.max(q.busy_until);
    q.busy_until = start + service;
    let response = q.busy_until - arrival;
    q.served_ops += 1;
    q.summed_response += response;
    response
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Converged,
    NonConvergence,
    DeviceWornOut,
}

impl RunStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, RunStatus::NonConvergence | RunStatus::DeviceWornOut)
    }
}

/// One row of the sampled time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub event_index: u64,
    pub stddev: f64,
    pub art: f64,
    pub triggers: u64,
    pub total_io: u64,
    pub afp: f64,
    pub e: f64,
    pub u: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub phase: String,
}

pub const SERIES_HEADER: &str = "event_index,stddev,art,triggers,total_io,afp,e,u,kp,ki,kd,phase";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub event_index: u64,
    pub total_io: u64,
    pub array_failure_prob: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Redistribution {
    pub moves: u64,
    pub recomputed_stripes: u64,
    pub parity_updates: u64,
    pub page_ios: u64,
    pub duration_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskFinal {
    pub pe_count: f64,
    pub effective_lifetime: f64,
    pub failure_prob: f64,
    pub data_units: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseChange {
    pub event_index: u64,
    pub phase: ControllerPhase,
    /// Relative lifetime gap at the sample that caused the change.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub status: RunStatus,
    pub events: u64,
    pub lifetime_stddev: f64,
    pub avg_response_time_us: f64,
    pub wl_trigger_count: u64,
    pub total_io: u64,
    pub io: IoCounters,
    pub array_failure_prob: f64,
    pub convergence: Option<Convergence>,
    pub redistribution: Redistribution,
    pub disks: Vec<DiskFinal>,
    pub transitions: Vec<PhaseChange>,
    pub warnings: Vec<String>,
    pub series: Vec<SampleRow>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes to JSON")
    }

    pub fn series_csv(&self) -> String {
        let mut out = String::from(SERIES_HEADER);
        out.push('\n');
        for r in &self.series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.event_index,
                r.stddev,
                r.art,
                r.triggers,
                r.total_io,
                r.afp,
                r.e,
                r.u,
                r.kp,
                r.ki,
                r.kd,
                r.phase
            );
        }
        out
    }
}

/// Borrow the policy-visible parts of a `Simulation` field by field, so the
/// policy itself can still be borrowed mutably.
macro_rules! view {
    ($s:expr) => {
        ArrayView {
            disks: &$s.disks,
            k_o: $s.config.k_o as usize,
            unit_disk: &$s.unit_disk,
            free_slots: &$s.free_counts,
            snapshot: &$s.snapshot,
            io: $s.io,
            event: $s.events,
            redistributed: true,
        }
    };
}

/// A prepared array, ready to replay a workload.
pub struct Simulation {
    config: ExperimentConfig,
    thresholds: Thresholds,
    disks: Vec<DeviceState>,
    queues: Vec<DiskQueue>,
    layout: ArrayLayout,
    unit_loc: Vec<Slot>,
    unit_disk: Vec<u32>,
    free: Vec<BTreeSet<u32>>,
    free_counts: Vec<usize>,
    window: AccessWindow,
    snapshot: HotnessSnapshot,
    policy: Box<dyn WearPolicy>,
    io: IoCounters,
    triggers: u64,
    events: u64,
    host_requests: u64,
    summed_response: f64,
    clock_offset: f64,
    redistribution: Redistribution,
    series: Vec<SampleRow>,
    convergence: Option<Convergence>,
    warnings: Vec<String>,
}

impl Simulation {
    /// Build, pre-age and fill the original array, then apply the scaling plan.
    pub fn new(config: &ExperimentConfig) -> Result<Self, SimError> {
        let warnings = config.validate()?;
        for w in &warnings {
            log::warn!("{w}");
        }
        let n = config.disk_count();
        let raid = config.raid();
        let wear = config
            .initial_wear
            .resolve(config.k_o, config.k_s, &config.reliability.failure())?;
        let mut disks = Vec::with_capacity(n as usize);
        for pe in &wear {
            let mut d = DeviceState::new(config.geometry, config.ftl)?;
            d.set_initial_wear(*pe)?;
            disks.push(d);
        }
        let cap = disks[0].logical_capacity();
        let rows = ((cap as f64 * config.data_fill).floor() as u32).max(1);
        let width = config.k_o - raid.parity_count() as u32;
        let old = ArrayLayout::striped(raid, config.k_o, rows * width)?;
        for s in old.occupied() {
            disks[s.disk as usize].host_write(s.offset)?;
        }
        let (layout, plan) = config.scaling_scheme.plan(&old, config.k_s)?;
        layout.validate()?;
        if let Some(s) = layout.occupied().iter().find(|s| s.offset >= cap) {
            return Err(ConfigError::Invalid(format!(
                "scaled layout needs offset {} on disk {}, capacity is {cap}",
                s.offset, s.disk
            ))
            .into());
        }

        let units = layout.unit_count();
        let unit_loc: Vec<Slot> = (0..units).map(|u| layout.slot(u)).collect();
        let unit_disk = unit_loc.iter().map(|s| s.disk).collect();
        let mut free: Vec<BTreeSet<u32>> = vec![(0..cap).collect(); n as usize];
        for s in layout.occupied() {
            free[s.disk as usize].remove(&s.offset);
        }
        let free_counts = free.iter().map(BTreeSet::len).collect();
        let ctx = PolicyContext {
            controller: config.controller,
            hotness: config.hotness,
            lifetime: config.reliability.lifetime(),
            failure: config.reliability.failure(),
            baselines: config.baselines,
            n_base: units as usize,
        };
        let mut sim = Simulation {
            config: config.clone(),
            thresholds: config.hotness.thresholds(),
            disks,
            queues: vec![DiskQueue::default(); n as usize],
            layout,
            unit_loc,
            unit_disk,
            free,
            free_counts,
            window: AccessWindow::new(config.hotness.window),
            snapshot: HotnessSnapshot::default(),
            policy: build_policy(config.policy, &ctx),
            io: IoCounters::default(),
            triggers: 0,
            events: 0,
            host_requests: 0,
            summed_response: 0.0,
            clock_offset: 0.0,
            redistribution: Redistribution::default(),
            series: Vec::new(),
            convergence: None,
            warnings,
        };
        sim.redistribute(&old, &plan)?;
        Ok(sim)
    }

    /// Data units (logical pages) of the array volume.
    pub fn volume_pages(&self) -> u32 {
        self.layout.unit_count()
    }

    pub fn layout(&self) -> &ArrayLayout {
        &self.layout
    }

    pub fn disks(&self) -> &[DeviceState] {
        &self.disks
    }

    pub fn io(&self) -> IoCounters {
        self.io
    }

    fn redistribute(&mut self, old: &ArrayLayout, plan: &MigrationPlan) -> Result<(), SimError> {
        let lat = self.config.latency;
        for m in &plan.moves {
            self.disks[m.src.disk as usize].read(m.src.offset)?;
            let t = response_time(0.0, &mut self.queues[m.src.disk as usize], lat.read_us.max(0.0));
            let out = self.disks[m.dst.disk as usize].host_write(m.dst.offset)?;
            self.io.gc_relocations += out.relocations as u64;
            response_time(t, &mut self.queues[m.dst.disk as usize], lat.write_service(&out));
        }
        for &sid in &plan.recomputed_stripes {
            for p in &self.layout.stripes()[sid as usize].parity {
                let out = self.disks[p.disk as usize].host_write(p.offset)?;
                self.io.gc_relocations += out.relocations as u64;
                response_time(0.0, &mut self.queues[p.disk as usize], lat.write_service(&out));
            }
        }
        for s in released_slots(old, &self.layout) {
            self.disks[s.disk as usize].trim(s.offset)?;
        }
        let page_ios = 2 * plan.moves.len() as u64 + plan.parity_updates as u64;
        self.io.scaling_migration = page_ios;
        self.clock_offset = self.queues.iter().map(|q| q.busy_until).fold(0.0, f64::max);
        self.redistribution = Redistribution {
            moves: plan.moves.len() as u64,
            recomputed_stripes: plan.recomputed_stripes.len() as u64,
            parity_updates: plan.parity_updates as u64,
            page_ios,
            duration_us: self.clock_offset,
        };
        Ok(())
    }

    fn failure_probs(&self) -> Vec<f64> {
        let fp = self.config.reliability.failure();
        self.disks
            .iter()
            .map(|d| failure_probability_or_zero(d.pe_count(), &fp))
            .collect()
    }

    fn afp(&self) -> f64 {
        array_failure_probability(&self.failure_probs())
    }

    fn art(&self) -> f64 {
        if self.host_requests == 0 {
            0.0
        } else {
            self.summed_response / self.host_requests as f64
        }
    }

    fn sample(&mut self) {
        self.snapshot = HotnessSnapshot::take(&self.window, &self.thresholds, self.volume_pages() as usize);
        let view = view!(self);
        let cs: Option<ControlSample> = self.policy.on_sample(&view);
        let pe = view.pe_counts();
        let (mean_o, mean_s) = view.group_means(&pe);
        let row = SampleRow {
            event_index: self.events,
            stddev: erase_count_stddev(&self.disks),
            art: self.art(),
            triggers: self.triggers,
            total_io: self.io.total(),
            afp: self.afp(),
            e: cs.map_or(mean_o - mean_s, |c| c.error),
            u: cs.map_or(0.0, |c| c.u),
            kp: cs.map_or(0.0, |c| c.gains[0]),
            ki: cs.map_or(0.0, |c| c.gains[1]),
            kd: cs.map_or(0.0, |c| c.gains[2]),
            phase: cs.map_or("none", |c| c.phase.as_str()).to_string(),
        };
        if let (None, Some(c)) = (&self.convergence, cs) {
            if c.phase == ControllerPhase::Converged {
                self.convergence = Some(Convergence {
                    event_index: self.events,
                    total_io: row.total_io,
                    array_failure_prob: row.afp,
                    relative_gap: c.relative_gap,
                });
            }
        }
        if log::log_enabled!(log::Level::Debug) {
            let writes: Vec<u64> = self.disks.iter().map(|d| d.counters().host_writes).collect();
            let view = view!(self);
            let dh = crate::policy::DiskHotness::compute(&view);
            let r: Vec<String> = (0..self.disks.len()).map(|d| format!("{:.2}", dh.scalar(d as u32))).collect();
            log::debug!(
                "event {} R {:?} pe {:?} writes {:?} u {:.3} phase {}",
                self.events,
                r,
                pe.iter().map(|&x| x.round() as u64).collect::<Vec<_>>(),
                writes,
                row.u,
                row.phase
            );
        }
        self.series.push(row);
    }

    fn host_access(&mut self, a: Access) -> Result<(), FlashError> {
        let unit = a.page % self.volume_pages();
        let arrival = a.arrival_us + self.clock_offset;
        self.window.record_access(unit);
        let slot = self.unit_loc[unit as usize];
        let lat = self.config.latency;
        let response = if a.write {
            let out = self.disks[slot.disk as usize].host_write(slot.offset)?;
            self.io.host_writes += 1;
            self.io.gc_relocations += out.relocations as u64;
            let mut r = response_time(arrival, &mut self.queues[slot.disk as usize], lat.write_service(&out));
            for p in self.layout.parity_slots(unit) {
                let out = self.disks[p.disk as usize].host_write(p.offset)?;
                self.io.parity_writes += 1;
                self.io.gc_relocations += out.relocations as u64;
                r = r.max(response_time(arrival, &mut self.queues[p.disk as usize], lat.write_service(&out)));
            }
            r
        } else {
            self.disks[slot.disk as usize].read(slot.offset)?;
            self.io.host_reads += 1;
            response_time(arrival, &mut self.queues[slot.disk as usize], lat.read_us.max(0.0))
        };
        self.host_requests += 1;
        self.summed_response += response;
        if a.write {
            let view = view!(self);
            if let PolicyDecision::Migrate { page, src, dst } = self.policy.on_host_write(&view, unit) {
                for (p, from, to) in self.migrate(page, src, dst, arrival)? {
                    let view = view!(self);
                    self.policy.on_migrated(&view, p, from, to);
                }
            }
        }
        Ok(())
    }

    /// Move `page` from `src` to `dst`. With exchange enabled, and unless
    /// `dst` holds fewer units than `src`, the coldest unit of `dst` then
    /// moves back to `src`, so per-disk utilization never drifts apart.
    /// Returns the moves performed.
    fn migrate(&mut self, page: u32, src: u32, dst: u32, at: f64) -> Result<Vec<(u32, u32, u32)>, FlashError> {
        if self.unit_disk[page as usize] != src || src == dst {
            return Ok(Vec::new());
        }
        let held = |d: u32| self.unit_disk.iter().filter(|&&x| x == d).count();
        // a disk holding fewer units than the source is filled one-way
        let partner = if self.config.migration_exchange && held(dst) >= held(src) {
            (0..self.volume_pages())
                .filter(|&u| self.unit_disk[u as usize] == dst)
                .min_by(|&a, &b| {
                    let (sa, sb) = (self.snapshot.score(a), self.snapshot.score(b));
                    sa.cmp_heat(&sb).then(a.cmp(&b))
                })
        } else {
            None
        };
        if let Some(p) = partner {
            // an exchange that does not heat up the destination is churn
            if self.snapshot.score(p).cmp_heat(&self.snapshot.score(page)).is_ge() {
                return Ok(Vec::new());
            }
        }
        log::trace!(
            "migrate {page} {src}->{dst} h {:.3} partner {:?}",
            self.snapshot.score(page).h,
            partner.map(|p| (p, self.snapshot.score(p).h))
        );
        if !self.move_unit(page, dst, at)? {
            return Ok(Vec::new());
        }
        let mut moves = vec![(page, src, dst)];
        if let Some(p) = partner {
            if self.move_unit(p, src, at)? {
                moves.push((p, dst, src));
            }
        }
        self.triggers += 1;
        Ok(moves)
    }

    /// Read from the current disk, program on `dst`, trim the old copy.
    fn move_unit(&mut self, unit: u32, dst: u32, at: f64) -> Result<bool, FlashError> {
        let from = self.unit_loc[unit as usize];
        let src = from.disk;
        let Some(lpn) = self.free[dst as usize].pop_first() else {
            return Ok(false);
        };
        let lat = self.config.latency;
        self.disks[src as usize].read(from.offset)?;
        let t = at + response_time(at, &mut self.queues[src as usize], lat.read_us.max(0.0));
        let out = self.disks[dst as usize].host_write(lpn)?;
        response_time(t, &mut self.queues[dst as usize], lat.write_service(&out));
        self.disks[src as usize].trim(from.offset)?;
        self.free[src as usize].insert(from.offset);
        self.free_counts[src as usize] += 1;
        self.free_counts[dst as usize] -= 1;
        self.unit_loc[unit as usize] = Slot::new(dst, lpn);
        self.unit_disk[unit as usize] = dst;
        self.io.wl_migration += 2;
        self.io.gc_relocations += out.relocations as u64;
        Ok(true)
    }

    /// Replay `workload` and produce the report.
    pub fn run(mut self, workload: impl IntoIterator<Item = Access>) -> Result<ExperimentReport, SimError> {
        let t0 = self.config.controller.t0;
        let stop_on_converge = self.config.run_until == RunUntil::Converged;
        let mut status = RunStatus::Completed;
        let mut last_sample = None;
        let mut stopped = false;
        for a in workload {
            if self.events % t0 == 0 {
                self.sample();
                last_sample = Some(self.events);
                if stop_on_converge && self.convergence.is_some() {
                    stopped = true;
                    break;
                }
            }
            match self.host_access(a) {
                Ok(()) => {}
                Err(FlashError::DeviceWornOut { max_pe }) => {
                    log::warn!("device worn out (max {max_pe} P/E) at event {}", self.events);
                    status = RunStatus::DeviceWornOut;
                    self.events += 1;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
            self.events += 1;
        }
        if !stopped && last_sample != Some(self.events) {
            self.sample();
        }
        if status != RunStatus::DeviceWornOut && stop_on_converge {
            status = if self.convergence.is_some() {
                RunStatus::Converged
            } else {
                RunStatus::NonConvergence
            };
        }
        Ok(self.finish(status))
    }

    fn finish(self, status: RunStatus) -> ExperimentReport {
        let lp = self.config.reliability.lifetime();
        let fp = self.config.reliability.failure();
        let probs = self.failure_probs();
        let mut units = vec![0u32; self.disks.len()];
        for &d in &self.unit_disk {
            units[d as usize] += 1;
        }
        let disks = self
            .disks
            .iter()
            .zip(&probs)
            .zip(&units)
            .map(|((d, &p), &u)| DiskFinal {
                pe_count: d.pe_count(),
                effective_lifetime: effective_lifetime(d.pe_count(), &lp, &fp),
                failure_prob: p,
                data_units: u,
            })
            .collect();
        let transitions = self
            .policy
            .controller()
            .map(|c| {
                c.transitions()
                    .iter()
                    .map(|&(event_index, phase, relative_gap)| PhaseChange {
                        event_index,
                        phase,
                        relative_gap,
                    })
                    .collect()
            })
            .unwrap_or_default();
        let last = self.series.last().expect("at least one sample");
        ExperimentReport {
            seed: self.config.seed,
            status,
            events: self.events,
            lifetime_stddev: last.stddev,
            avg_response_time_us: last.art,
            wl_trigger_count: last.triggers,
            total_io: last.total_io,
            io: self.io,
            array_failure_prob: last.afp,
            convergence: self.convergence,
            redistribution: self.redistribution,
            disks,
            transitions,
            warnings: self.warnings,
            config: self.config,
            series: self.series,
        }
    }
}

/// Build the workload described by the configuration.
pub fn workload_for(
    config: &ExperimentConfig,
    volume_pages: u32,
) -> Result<Box<dyn Iterator<Item = Access>>, SimError> {
    Ok(match &config.workload {
        WorkloadConfig::Synthetic(s) => Box::new(generate_synthetic(&s.spec(config.seed, volume_pages))?),
        WorkloadConfig::Trace(t) => {
            let replay = parse_trace(&t.path, config.geometry.page_size, volume_pages)?;
            if replay.malformed > 0 {
                log::warn!("{}: {} malformed lines skipped", t.path.display(), replay.malformed);
            }
            Box::new(replay.accesses.into_iter())
        }
    })
}

/// Run an experiment end to end from its configuration.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, SimError> {
    let sim = Simulation::new(config)?;
    let workload = workload_for(config, sim.volume_pages())?;
    sim.run(workload)
}

/// Run until the controller first reports convergence. `None` when the
/// stream runs out first.
pub fn total_io_until_converged(config: &ExperimentConfig) -> Result<Option<Convergence>, SimError> {
    let mut cfg = config.clone();
    cfg.run_until = RunUntil::Converged;
    Ok(run(&cfg)?.convergence)
}

/// Relative gap between group means of raw P/E counts.
pub fn pe_gap(disks: &[DeviceState], k_o: usize) -> f64 {
    let pe: Vec<f64> = disks.iter().map(DeviceState::pe_count).collect();
    let (o, s) = pe.split_at(k_o);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    relative_gap(mean(o), mean(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_examples() {
        let mut q = DiskQueue::default();
        assert_eq!(response_time(0.0, &mut q, 500.0), 500.0);
        let mut q = DiskQueue {
            busy_until: 1100.0,
            ..Default::default()
        };
        assert_eq!(response_time(1000.0, &mut q, 500.0), 600.0);
        let mut q = DiskQueue::default();
        assert_eq!(response_time(10.0, &mut q, 0.0), 0.0);
    }

    #[test]
    fn back_to_back_writes_queue_up() {
        let mut q = DiskQueue::default();
        let a = response_time(0.0, &mut q, 500.0);
        let b = response_time(0.0, &mut q, 500.0);
        assert_eq!((a, b), (500.0, 1000.0));
        assert_eq!(q.summed_response / q.served_ops as f64, 750.0);
    }

    #[test]
    fn latency_lint() {
        assert!(LatencyModel::default().lint().is_empty());
        let odd = LatencyModel {
            read_us: 600.0,
            ..Default::default()
        };
        assert_eq!(odd.lint().len(), 1);
    }
}
