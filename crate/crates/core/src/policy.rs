//! Inter-disk wear-leveling policies.
//!
//! Every policy sees the array once per sampling period (`on_sample`) and
//! after every host write (`on_host_write`), and may ask the kernel to move
//! one logical page to another disk. The kernel performs the move and reports
//! back through `on_migrated`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{
    approve_migration, ControlSample, ControllerParams, ControllerPhase,
    WearController,
};
use crate::flash::{population_stddev, DeviceState};
use crate::hotness::{
    migration_allowed, ConservativeZone, HotnessClass, HotnessParams, HotnessSnapshot, PageScore,
    ZoneParams,
};
use crate::reliability::{effective_lifetime, FailureModelParams, LifetimeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "ps-wl")]
    PsWl,
    #[serde(rename = "ps-wl-ablation")]
    PsWlAblation,
    #[serde(rename = "swans")]
    Swans,
    #[serde(rename = "lazy-wl")]
    LazyWl,
    #[serde(rename = "edm")]
    Edm,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::PsWl,
        PolicyKind::PsWlAblation,
        PolicyKind::Swans,
        PolicyKind::LazyWl,
        PolicyKind::Edm,
    ];
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::PsWl => "ps-wl",
            PolicyKind::PsWlAblation => "ps-wl-ablation",
            PolicyKind::Swans => "swans",
            PolicyKind::LazyWl => "lazy-wl",
            PolicyKind::Edm => "edm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyDecision {
    NoAction,
    Migrate { page: u32, src: u32, dst: u32 },
}

/// Parameters of the three baseline policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineParams {
    /// SWANS scans when stddev/mean of P/E counts exceeds this.
    pub swans_cv_threshold: f64,
    /// EDM triggers when (max - min) / max of P/E counts exceeds this.
    pub edm_gap_threshold: f64,
    /// Lazy-WL's fixed conservative-zone factor.
    pub lazy_k_ban: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            swans_cv_threshold: 0.02,
            edm_gap_threshold: 0.04,
            lazy_k_ban: 0.2,
        }
    }
}

/// Cumulative page-I/O counters of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoCounters {
    pub host_reads: u64,
    pub host_writes: u64,
    pub parity_writes: u64,
    /// Reads + programs of scaling redistribution (moves and parity).
    pub scaling_migration: u64,
    /// Reads + programs of wear-leveling migrations.
    pub wl_migration: u64,
    pub gc_relocations: u64,
}

impl IoCounters {
    pub fn host(&self) -> u64 {
        self.host_reads + self.host_writes
    }

    pub fn migration(&self) -> u64 {
        self.scaling_migration + self.wl_migration
    }

    pub fn total(&self) -> u64 {
        self.host() + self.parity_writes + self.migration() + self.gc_relocations
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("no I/O recorded yet")]
    DivisionByZero,
}

/// Wear-leveling share of all page I/O.
pub fn wl_io_ratio(io: &IoCounters) -> Result<f64, PolicyError> {
    let total = io.total();
    if total == 0 {
        return Err(PolicyError::DivisionByZero);
    }
    Ok(io.wl_migration as f64 / total as f64)
}

/// Read-only view of the array handed to policies.
#[derive(Clone, Copy)]
pub struct ArrayView<'a> {
    pub disks: &'a [DeviceState],
    pub k_o: usize,
    /// unit -> disk currently holding it
    pub unit_disk: &'a [u32],
    pub free_slots: &'a [usize],
    pub snapshot: &'a HotnessSnapshot,
    pub io: IoCounters,
    pub event: u64,
    pub redistributed: bool,
}

impl ArrayView<'_> {
    pub fn disk_count(&self) -> usize {
        self.disks.len()
    }

    pub fn pe_counts(&self) -> Vec<f64> {
        self.disks.iter().map(DeviceState::pe_count).collect()
    }

    pub fn is_extended(&self, disk: u32) -> bool {
        disk as usize >= self.k_o
    }

    /// Group means of a per-disk quantity: (originals, extended).
    pub fn group_means(&self, per_disk: &[f64]) -> (f64, f64) {
        let (o, s) = per_disk.split_at(self.k_o.min(per_disk.len()));
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let s_mean = if s.is_empty() { mean(o) } else { mean(s) };
        (mean(o), s_mean)
    }

    /// Non-cold pages on `disk`: ExtremelyHot before Warm, then by heat.
    pub fn ranked_candidates(&self, disk: u32) -> VecDeque<u32> {
        let mut v: Vec<(u32, PageScore)> = self
            .unit_disk
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == disk)
            .map(|(p, _)| (p as u32, self.snapshot.score(p as u32)))
            .filter(|(_, s)| s.class != HotnessClass::Cold)
            .collect();
        v.sort_by(|a, b| a.1.class.cmp(&b.1.class).then(b.1.cmp_heat(&a.1)).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(p, _)| p).collect()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Per-disk share of the array's hotness mass, one share per component.
///
/// The scalar hotness of a disk is the mean over the three components of
/// `disks * share - 1`: zero for an evenly loaded disk, positive when the
/// disk holds more than its share of hot data.
#[derive(Debug, Clone, Default)]
pub struct DiskHotness {
    mass: Vec<[f64; 3]>,
    total: [f64; 3],
}

impl DiskHotness {
    pub fn compute(view: &ArrayView) -> Self {
        let mut mass = vec![[0.0; 3]; view.disk_count()];
        let mut total = [0.0; 3];
        for (p, &d) in view.unit_disk.iter().enumerate() {
            let v = view.snapshot.score(p as u32).vector;
            let c = [v.h_freq, v.h_rec, v.h_comp];
            for j in 0..3 {
                mass[d as usize][j] += c[j];
                total[j] += c[j];
            }
        }
        DiskHotness { mass, total }
    }

    pub fn scalar(&self, disk: u32) -> f64 {
        let n = self.mass.len() as f64;
        let m = &self.mass[disk as usize];
        let mut sum = 0.0;
        for j in 0..3 {
            let share = if self.total[j] > 0.0 {
                m[j] / self.total[j]
            } else {
                1.0 / n
            };
            sum += n * share - 1.0;
        }
        sum / 3.0
    }

    pub fn shift(&mut self, snapshot: &HotnessSnapshot, page: u32, src: u32, dst: u32) {
        let v = snapshot.score(page).vector;
        let c = [v.h_freq, v.h_rec, v.h_comp];
        for j in 0..3 {
            self.mass[src as usize][j] -= c[j];
            self.mass[dst as usize][j] += c[j];
        }
    }
}

pub trait WearPolicy: Send {
    fn kind(&self) -> PolicyKind;

    /// Once per sampling period. Returns controller telemetry when the
    /// policy runs a controller.
    fn on_sample(&mut self, view: &ArrayView) -> Option<ControlSample>;

    fn on_host_write(&mut self, view: &ArrayView, page: u32) -> PolicyDecision;

    /// A decision returned by `on_host_write` was executed.
    fn on_migrated(&mut self, view: &ArrayView, page: u32, src: u32, dst: u32);

    fn phase(&self) -> Option<ControllerPhase> {
        None
    }

    fn controller(&self) -> Option<&WearController> {
        None
    }
}

/// Everything a policy needs at construction.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext {
    pub controller: ControllerParams,
    pub hotness: HotnessParams,
    pub lifetime: LifetimeParams,
    pub failure: FailureModelParams,
    pub baselines: BaselineParams,
    /// Data pages in the whole array (zone sizing base).
    pub n_base: usize,
}

pub fn build_policy(kind: PolicyKind, ctx: &PolicyContext) -> Box<dyn WearPolicy> {
    match kind {
        PolicyKind::PsWl => Box::new(ProbabilitySensitive::new(ctx, false)),
        PolicyKind::PsWlAblation => Box::new(ProbabilitySensitive::new(ctx, true)),
        PolicyKind::Swans => Box::new(Swans::new(ctx)),
        PolicyKind::LazyWl => Box::new(LazyWl::new(ctx)),
        PolicyKind::Edm => Box::new(Edm::new(ctx)),
    }
}

/// Chase state shared by the controller-driven policies.
#[derive(Debug, Clone, Default)]
struct Chase {
    u: f64,
    gap: f64,
    dst: u32,
    hotness: DiskHotness,
    candidates: VecDeque<u32>,
    per_period: u32,
    /// Migration credit; `u` per period accrues, capped at one period's worth.
    budget: f64,
}

impl Chase {
    fn refresh(&mut self, view: &ArrayView, lifetimes: &[f64], sample: &ControlSample) {
        self.u = sample.u;
        self.gap = sample.relative_gap;
        // catch-up runs between the groups: into the lagging one, out of
        // the leading one
        let lagging_extended = sample.error >= 0.0;
        let (lagging, leading): (Vec<usize>, Vec<usize>) =
            (0..lifetimes.len()).partition(|&d| view.is_extended(d as u32) == lagging_extended);
        let cap = self.per_period as f64;
        self.budget = if sample.phase == ControllerPhase::Chasing {
            (self.budget + cap * sample.u.clamp(0.0, 1.0)).min(cap)
        } else {
            0.0
        };
        self.candidates.clear();
        let Some(&dst) = lagging.iter().min_by(|&&a, &&b| lifetimes[a].total_cmp(&lifetimes[b]).then(a.cmp(&b))) else {
            return;
        };
        self.dst = dst as u32;
        if sample.phase == ControllerPhase::Chasing {
            self.hotness = DiskHotness::compute(view);
            // most-worn source first; the next one only once it runs dry
            let mut sources = leading;
            sources.sort_by(|&a, &b| lifetimes[b].total_cmp(&lifetimes[a]).then(a.cmp(&b)));
            for d in sources {
                self.candidates.extend(view.ranked_candidates(d as u32));
            }
        }
    }

    /// Next candidate passing `allowed`, if the destination is below the
    /// hotness baseline.
    fn next(&mut self, view: &ArrayView, mut allowed: impl FnMut(u32) -> bool) -> PolicyDecision {
        if self.budget < 1.0 || self.candidates.is_empty() || view.free_slots[self.dst as usize] == 0 {
            return PolicyDecision::NoAction;
        }
        if !approve_migration(self.hotness.scalar(self.dst), self.u) {
            return PolicyDecision::NoAction;
        }
        while let Some(page) = self.candidates.pop_front() {
            let src = view.unit_disk[page as usize];
            if src == self.dst || !allowed(page) {
                continue;
            }
            return PolicyDecision::Migrate {
                page,
                src,
                dst: self.dst,
            };
        }
        PolicyDecision::NoAction
    }

    fn migrated(&mut self, view: &ArrayView, page: u32, src: u32, dst: u32) {
        self.budget = (self.budget - 1.0).max(0.0);
        self.hotness.shift(view.snapshot, page, src, dst);
    }
}

/// PS-WL and its ablation (raw P/E instead of effective lifetime).
pub struct ProbabilitySensitive {
    ablation: bool,
    lifetime: LifetimeParams,
    failure: FailureModelParams,
    controller: WearController,
    zone: ConservativeZone,
    zone_params: ZoneParams,
    chase: Chase,
}

impl ProbabilitySensitive {
    pub fn new(ctx: &PolicyContext, ablation: bool) -> Self {
        ProbabilitySensitive {
            ablation,
            lifetime: ctx.lifetime,
            failure: ctx.failure,
            controller: WearController::new(ctx.controller),
            zone: ConservativeZone::new(ctx.n_base),
            zone_params: ZoneParams {
                k_ban_base: ctx.hotness.k_ban_base,
                k_ban_max: ctx.hotness.k_ban_max,
                gap_ref: 2.0 * ctx.controller.lambda,
            },
            chase: Chase {
                per_period: ctx.controller.migrations_per_period,
                ..Chase::default()
            },
        }
    }

    /// Per-disk lifetime as seen by this policy.
    pub fn lifetimes(&self, view: &ArrayView) -> Vec<f64> {
        let pe = view.pe_counts();
        if self.ablation {
            pe
        } else {
            pe.iter()
                .map(|&t| effective_lifetime(t, &self.lifetime, &self.failure))
                .collect()
        }
    }

    pub fn zone(&self) -> &ConservativeZone {
        &self.zone
    }

    pub fn baseline(&self) -> f64 {
        self.chase.u
    }
}

impl WearPolicy for ProbabilitySensitive {
    fn kind(&self) -> PolicyKind {
        if self.ablation {
            PolicyKind::PsWlAblation
        } else {
            PolicyKind::PsWl
        }
    }

    fn on_sample(&mut self, view: &ArrayView) -> Option<ControlSample> {
        let lifetimes = self.lifetimes(view);
        let (l_o, l_s) = view.group_means(&lifetimes);
        let sample = self.controller.sample(
            l_o,
            l_s,
            view.redistributed,
            view.event,
            (view.io.wl_migration, view.io.total()),
        );
        self.zone
            .update(&view.snapshot.warm_ranked(), sample.relative_gap, &self.zone_params);
        self.chase.refresh(view, &lifetimes, &sample);
        Some(sample)
    }

    fn on_host_write(&mut self, view: &ArrayView, _page: u32) -> PolicyDecision {
        if self.controller.phase() != ControllerPhase::Chasing {
            return PolicyDecision::NoAction;
        }
        let dest_ext = view.is_extended(self.chase.dst);
        let (zone, gap, gap_ref) = (&self.zone, self.chase.gap, self.zone_params.gap_ref);
        self.chase
            .next(view, |p| migration_allowed(p, dest_ext, zone, gap, gap_ref))
    }

    fn on_migrated(&mut self, view: &ArrayView, page: u32, src: u32, dst: u32) {
        self.chase.migrated(view, page, src, dst);
    }

    fn phase(&self) -> Option<ControllerPhase> {
        Some(self.controller.phase())
    }

    fn controller(&self) -> Option<&WearController> {
        Some(&self.controller)
    }
}

/// Periodic scan; when P/E counts are spread out, moves the hottest page of
/// the disk that received the most writes in the last period to the disk
/// that received the fewest.
pub struct Swans {
    cv_threshold: f64,
    last_writes: Vec<u64>,
    pending: Option<PolicyDecision>,
}

impl Swans {
    pub fn new(ctx: &PolicyContext) -> Self {
        Swans {
            cv_threshold: ctx.baselines.swans_cv_threshold,
            last_writes: Vec::new(),
            pending: None,
        }
    }
}

impl WearPolicy for Swans {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Swans
    }

    fn on_sample(&mut self, view: &ArrayView) -> Option<ControlSample> {
        self.pending = None;
        let activity = period_writes(view, &mut self.last_writes);
        let pe = view.pe_counts();
        let mean = pe.iter().sum::<f64>() / pe.len() as f64;
        if mean <= 0.0 || population_stddev(&pe) / mean <= self.cv_threshold {
            return None;
        }
        let (src, dst) = (argmax(&activity) as u32, argmin(&activity) as u32);
        if src == dst {
            return None;
        }
        let hottest = view
            .unit_disk
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == src)
            .map(|(p, _)| (p as u32, view.snapshot.score(p as u32).h))
            .filter(|(_, h)| *h > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        if let Some((page, _)) = hottest {
            self.pending = Some(PolicyDecision::Migrate { page, src, dst });
        }
        None
    }

    fn on_host_write(&mut self, view: &ArrayView, _page: u32) -> PolicyDecision {
        match self.pending.take() {
            Some(d @ PolicyDecision::Migrate { dst, .. }) if view.free_slots[dst as usize] > 0 => d,
            _ => PolicyDecision::NoAction,
        }
    }

    fn on_migrated(&mut self, _view: &ArrayView, _page: u32, _src: u32, _dst: u32) {}
}

/// PID on the P/E standard deviation, with a fixed conservative zone that
/// keeps the hottest pages off the extended disks.
pub struct LazyWl {
    controller: WearController,
    zone: ConservativeZone,
    chase: Chase,
}

impl LazyWl {
    pub fn new(ctx: &PolicyContext) -> Self {
        LazyWl {
            controller: WearController::new(ctx.controller),
            zone: ConservativeZone::with_static_k_ban(ctx.n_base, ctx.baselines.lazy_k_ban),
            chase: Chase {
                per_period: ctx.controller.migrations_per_period,
                ..Chase::default()
            },
        }
    }
}

impl WearPolicy for LazyWl {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LazyWl
    }

    fn on_sample(&mut self, view: &ArrayView) -> Option<ControlSample> {
        let pe = view.pe_counts();
        let (l_o, l_s) = view.group_means(&pe);
        let input = population_stddev(&pe) / self.controller.params().error_scale;
        let sample = self.controller.sample_with_input(
            l_o,
            l_s,
            input,
            view.redistributed,
            view.event,
            (view.io.wl_migration, view.io.total()),
        );
        // hottest active pages, regardless of class
        let mut ranked: Vec<(u32, f64)> = view
            .snapshot
            .iter()
            .filter(|(_, s)| s.class != HotnessClass::Cold)
            .map(|(p, s)| (p, s.h))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        self.zone.refill(&ranked);
        self.chase.refresh(view, &pe, &sample);
        Some(sample)
    }

    fn on_host_write(&mut self, view: &ArrayView, _page: u32) -> PolicyDecision {
        if self.controller.phase() != ControllerPhase::Chasing {
            return PolicyDecision::NoAction;
        }
        let dest_ext = view.is_extended(self.chase.dst);
        let zone = &self.zone;
        self.chase.next(view, |p| !(dest_ext && zone.contains(p)))
    }

    fn on_migrated(&mut self, view: &ArrayView, page: u32, src: u32, dst: u32) {
        self.chase.migrated(view, page, src, dst);
    }

    fn phase(&self) -> Option<ControllerPhase> {
        Some(self.controller.phase())
    }

    fn controller(&self) -> Option<&WearController> {
        Some(&self.controller)
    }
}

/// Load balancing gated on wear: when the P/E gap exceeds a threshold, the
/// page with the highest write frequency on the disk that received the most
/// writes in the last period moves to the disk that received the fewest.
/// Without a hot candidate, cold data moves from the least-worn disk onto the
/// most-worn one.
pub struct Edm {
    gap_threshold: f64,
    last_writes: Vec<u64>,
    pending: Option<PolicyDecision>,
}

impl Edm {
    pub fn new(ctx: &PolicyContext) -> Self {
        Edm {
            gap_threshold: ctx.baselines.edm_gap_threshold,
            last_writes: Vec::new(),
            pending: None,
        }
    }
}

/// Writes each disk received since the previous call.
fn period_writes(view: &ArrayView, last: &mut Vec<u64>) -> Vec<f64> {
    let writes: Vec<u64> = view.disks.iter().map(|d| d.counters().host_writes).collect();
    let activity = if last.len() == writes.len() {
        writes.iter().zip(last.iter()).map(|(a, b)| (a - b) as f64).collect()
    } else {
        vec![0.0; writes.len()]
    };
    *last = writes;
    activity
}

impl WearPolicy for Edm {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Edm
    }

    fn on_sample(&mut self, view: &ArrayView) -> Option<ControlSample> {
        self.pending = None;
        let activity = period_writes(view, &mut self.last_writes);
        let pe = view.pe_counts();
        let (worn, fresh) = (argmax(&pe), argmin(&pe));
        if pe[worn] <= 0.0 || (pe[worn] - pe[fresh]) / pe[worn] <= self.gap_threshold {
            return None;
        }
        let (busy, idle) = (argmax(&activity) as u32, argmin(&activity) as u32);
        let on = |disk: u32| {
            view.unit_disk
                .iter()
                .enumerate()
                .filter(move |(_, &d)| d == disk)
                .map(|(p, _)| (p as u32, view.snapshot.score(p as u32)))
        };
        // hot-data-first: highest write frequency among active pages
        let hot = if busy == idle {
            None
        } else {
            on(busy)
                .filter(|(_, s)| s.class != HotnessClass::Cold)
                .max_by(|a, b| {
                    a.1.vector
                        .h_freq
                        .total_cmp(&b.1.vector.h_freq)
                        .then(b.0.cmp(&a.0))
                })
        };
        let (worn, fresh) = (worn as u32, fresh as u32);
        self.pending = match hot {
            Some((page, _)) => Some(PolicyDecision::Migrate {
                page,
                src: busy,
                dst: idle,
            }),
            None => on(fresh)
                .filter(|(_, s)| s.class == HotnessClass::Cold)
                .min_by(|a, b| a.1.h.total_cmp(&b.1.h).then(a.0.cmp(&b.0)))
                .map(|(page, _)| PolicyDecision::Migrate {
                    page,
                    src: fresh,
                    dst: worn,
                }),
        };
        None
    }

    fn on_host_write(&mut self, view: &ArrayView, _page: u32) -> PolicyDecision {
        match self.pending.take() {
            Some(d @ PolicyDecision::Migrate { dst, .. }) if view.free_slots[dst as usize] > 0 => d,
            _ => PolicyDecision::NoAction,
        }
    }

    fn on_migrated(&mut self, _view: &ArrayView, _page: u32, _src: u32, _dst: u32) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn io_ratio() {
        let mut io = IoCounters::default();
        assert_eq!(wl_io_ratio(&io), Err(PolicyError::DivisionByZero));
        io.host_writes = 100;
        assert_eq!(wl_io_ratio(&io).unwrap(), 0.0);
        io.host_writes = 90;
        io.wl_migration = 10;
        assert!((wl_io_ratio(&io).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn arg_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
    }
}
