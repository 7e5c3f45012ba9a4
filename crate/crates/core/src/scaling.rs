//! Stripe layouts and redistribution planners for array scaling.
//!
//! A layout places every logical data unit and every parity unit at a
//! `(disk, offset)` slot. A planner takes the pre-scaling layout and the
//! number of added disks and returns the target layout plus the list of unit
//! moves that turns one into the other.
//!
//! * RR re-stripes everything round-robin over the enlarged array.
//! * FastScale (RAID-0) moves only enough units from old disks to new disks
//!   to balance the array; old disks never exchange data.
//! * GSR-style (RAID-5) keeps a leading segment of stripes untouched and
//!   re-stripes the trailing segment over all disks.
//! * SDM-style (RAID-6) builds a balanced dual-parity target and keeps every
//!   unit that already sits on a target data slot.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalingError {
    #[error("{scheme} does not support {level}")]
    UnsupportedRaidLevel { scheme: ScalingScheme, level: RaidLevel },
    #[error("{0} disks are too few for {1}")]
    TooFewDisks(u32, RaidLevel),
    #[error("layout invariant violated: {0}")]
    InvalidLayout(String),
    #[error("malformed plan line {line}: {reason}")]
    PlanFormat { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RaidLevel {
    Raid0,
    Raid5,
    Raid6,
}

impl RaidLevel {
    pub fn parity_count(&self) -> usize {
        match self {
            RaidLevel::Raid0 => 0,
            RaidLevel::Raid5 => 1,
            RaidLevel::Raid6 => 2,
        }
    }

    pub fn min_disks(&self) -> u32 {
        self.parity_count() as u32 + 1
    }
}

impl fmt::Display for RaidLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RaidLevel::Raid0 => "RAID0",
            RaidLevel::Raid5 => "RAID5",
            RaidLevel::Raid6 => "RAID6",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalingScheme {
    #[serde(rename = "RR")]
    RoundRobin,
    FastScale,
    #[serde(rename = "GSR")]
    Gsr,
    #[serde(rename = "SDM")]
    Sdm,
}

impl ScalingScheme {
    pub const ALL: [ScalingScheme; 4] = [
        ScalingScheme::RoundRobin,
        ScalingScheme::FastScale,
        ScalingScheme::Gsr,
        ScalingScheme::Sdm,
    ];

    pub fn supports(&self, level: RaidLevel) -> bool {
        match self {
            ScalingScheme::RoundRobin => true,
            ScalingScheme::FastScale => level == RaidLevel::Raid0,
            ScalingScheme::Gsr => level == RaidLevel::Raid5,
            ScalingScheme::Sdm => level == RaidLevel::Raid6,
        }
    }

    /// The RAID level each scheme is designed for.
    pub fn native_level(&self) -> RaidLevel {
        match self {
            ScalingScheme::RoundRobin => RaidLevel::Raid5,
            ScalingScheme::FastScale => RaidLevel::Raid0,
            ScalingScheme::Gsr => RaidLevel::Raid5,
            ScalingScheme::Sdm => RaidLevel::Raid6,
        }
    }

    pub fn plan(&self, old: &ArrayLayout, k_s: u32) -> Result<(ArrayLayout, MigrationPlan), ScalingError> {
        match self {
            ScalingScheme::RoundRobin => plan_rr(old, k_s),
            ScalingScheme::FastScale => plan_fastscale(old, k_s),
            ScalingScheme::Gsr => plan_gsr(old, k_s),
            ScalingScheme::Sdm => plan_sdm(old, k_s),
        }
    }
}

impl fmt::Display for ScalingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingScheme::RoundRobin => "RR",
            ScalingScheme::FastScale => "FastScale",
            ScalingScheme::Gsr => "GSR",
            ScalingScheme::Sdm => "SDM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub disk: u32,
    pub offset: u32,
}

impl Slot {
    pub fn new(disk: u32, offset: u32) -> Self {
        Slot { disk, offset }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripe {
    pub units: Vec<u32>,
    pub parity: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayLayout {
    raid_level: RaidLevel,
    disk_count: u32,
    stripes: Vec<Stripe>,
    unit_slots: Vec<Slot>,
    unit_stripe: Vec<u32>,
}

/// Row-by-row builder that keeps parity and data counts per disk within one
/// of each other at every prefix.
struct BalancedRows {
    n: u32,
    parity: usize,
    parity_count: Vec<u32>,
    data_count: Vec<u32>,
}

impl BalancedRows {
    fn new(n: u32, parity: usize) -> Self {
        BalancedRows {
            n,
            parity,
            parity_count: vec![0; n as usize],
            data_count: vec![0; n as usize],
        }
    }

    /// Parity disks and `width` data disks for `row`.
    fn row(&mut self, row: u32, width: usize) -> (Vec<u32>, Vec<u32>) {
        let n = self.n;
        let rot = |d: u32| (d + row) % n;
        let mut order: Vec<u32> = (0..n).collect();
        order.sort_by_key(|&d| (self.parity_count[d as usize], std::cmp::Reverse(rot(d))));
        let parity: Vec<u32> = order[..self.parity].to_vec();
        for &d in &parity {
            self.parity_count[d as usize] += 1;
        }
        let mut rest: Vec<u32> = (0..n).filter(|d| !parity.contains(d)).collect();
        if width < rest.len() {
            rest.sort_by_key(|&d| (self.data_count[d as usize], d));
            rest.truncate(width);
        }
        rest.sort_unstable();
        for &d in &rest {
            self.data_count[d as usize] += 1;
        }
        (parity, rest)
    }
}

impl ArrayLayout {
    /// Standard striping of `units` data units over `disks` disks, stripe
    /// `r` at offset `r` of every disk it touches.
    pub fn striped(raid_level: RaidLevel, disks: u32, units: u32) -> Result<Self, ScalingError> {
        Self::striped_from(raid_level, disks, &(0..units).collect::<Vec<_>>(), &vec![0; disks as usize])
    }

    /// Stripe the given units in order; row `r` on disk `d` lands at
    /// `base[d] + r`.
    fn striped_from(
        raid_level: RaidLevel,
        disks: u32,
        units: &[u32],
        base: &[u32],
    ) -> Result<Self, ScalingError> {
        if disks < raid_level.min_disks() {
            return Err(ScalingError::TooFewDisks(disks, raid_level));
        }
        let mut layout = ArrayLayout {
            raid_level,
            disk_count: disks,
            stripes: Vec::new(),
            unit_slots: Vec::new(),
            unit_stripe: Vec::new(),
        };
        layout.append_rows(units, base);
        Ok(layout)
    }

    fn append_rows(&mut self, units: &[u32], base: &[u32]) {
        let width = self.disk_count as usize - self.raid_level.parity_count();
        let mut rows = BalancedRows::new(self.disk_count, self.raid_level.parity_count());
        for (r, chunk) in units.chunks(width).enumerate() {
            let r = r as u32;
            let (parity, data) = rows.row(r, chunk.len());
            let stripe_id = self.stripes.len() as u32;
            for (&u, &d) in chunk.iter().zip(&data) {
                self.set_unit(u, Slot::new(d, base[d as usize] + r), stripe_id);
            }
            self.stripes.push(Stripe {
                units: chunk.to_vec(),
                parity: parity
                    .iter()
                    .map(|&d| Slot::new(d, base[d as usize] + r))
                    .collect(),
            });
        }
    }

    fn set_unit(&mut self, unit: u32, slot: Slot, stripe: u32) {
        let u = unit as usize;
        if self.unit_slots.len() <= u {
            self.unit_slots.resize(u + 1, Slot::new(u32::MAX, u32::MAX));
            self.unit_stripe.resize(u + 1, u32::MAX);
        }
        self.unit_slots[u] = slot;
        self.unit_stripe[u] = stripe;
    }

    pub fn raid_level(&self) -> RaidLevel {
        self.raid_level
    }

    pub fn disk_count(&self) -> u32 {
        self.disk_count
    }

    pub fn unit_count(&self) -> u32 {
        self.unit_slots.len() as u32
    }

    pub fn stripes(&self) -> &[Stripe] {
        &self.stripes
    }

    pub fn slot(&self, unit: u32) -> Slot {
        self.unit_slots[unit as usize]
    }

    pub fn stripe_of(&self, unit: u32) -> u32 {
        self.unit_stripe[unit as usize]
    }

    pub fn parity_slots(&self, unit: u32) -> &[Slot] {
        &self.stripes[self.stripe_of(unit) as usize].parity
    }

    /// Data units per disk.
    pub fn data_per_disk(&self) -> Vec<u32> {
        let mut counts = vec![0; self.disk_count as usize];
        for s in &self.unit_slots {
            counts[s.disk as usize] += 1;
        }
        counts
    }

    /// Every occupied slot, data and parity.
    pub fn occupied(&self) -> Vec<Slot> {
        let mut v: Vec<Slot> = self.unit_slots.clone();
        v.extend(self.stripes.iter().flat_map(|s| s.parity.iter().copied()));
        v
    }

    /// Highest used offset + 1 on each disk.
    pub fn rows_per_disk(&self) -> Vec<u32> {
        let mut rows = vec![0; self.disk_count as usize];
        for s in self.occupied() {
            rows[s.disk as usize] = rows[s.disk as usize].max(s.offset + 1);
        }
        rows
    }

    pub fn validate(&self) -> Result<(), ScalingError> {
        let bad = |m: String| Err(ScalingError::InvalidLayout(m));
        let mut seen_units = vec![false; self.unit_slots.len()];
        let mut seen_slots = HashSet::new();
        for (sid, stripe) in self.stripes.iter().enumerate() {
            if stripe.parity.len() != self.raid_level.parity_count() {
                return bad(format!(
                    "stripe {sid} has {} parity units, {} expects {}",
                    stripe.parity.len(),
                    self.raid_level,
                    self.raid_level.parity_count()
                ));
            }
            let mut disks = HashSet::new();
            for &u in &stripe.units {
                let Some(slot) = self.unit_slots.get(u as usize) else {
                    return bad(format!("unit {u} has no slot"));
                };
                if std::mem::replace(&mut seen_units[u as usize], true) {
                    return bad(format!("unit {u} appears twice"));
                }
                if self.unit_stripe[u as usize] != sid as u32 {
                    return bad(format!("unit {u} stripe index mismatch"));
                }
                if !disks.insert(slot.disk) {
                    return bad(format!("stripe {sid} uses disk {} twice", slot.disk));
                }
            }
            for p in &stripe.parity {
                if !disks.insert(p.disk) {
                    return bad(format!("stripe {sid} parity shares disk {}", p.disk));
                }
            }
        }
        if let Some(u) = seen_units.iter().position(|s| !s) {
            return bad(format!("unit {u} is not in any stripe"));
        }
        for s in self.occupied() {
            if s.disk >= self.disk_count {
                return bad(format!("slot on missing disk {}", s.disk));
            }
            if !seen_slots.insert(s) {
                return bad(format!("slot ({}, {}) used twice", s.disk, s.offset));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub unit: u32,
    pub src: Slot,
    pub dst: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MigrationPlan {
    pub moves: Vec<Move>,
    /// Target stripes whose parity has to be recomputed.
    pub recomputed_stripes: Vec<u32>,
    /// Parity units written by those recomputations.
    pub parity_updates: u32,
}

impl MigrationPlan {
    fn between(old: &ArrayLayout, target: &ArrayLayout) -> Self {
        let moves: Vec<Move> = (0..old.unit_count())
            .filter_map(|u| {
                let (src, dst) = (old.slot(u), target.slot(u));
                (src != dst).then_some(Move { unit: u, src, dst })
            })
            .collect();
        let mut plan = MigrationPlan {
            moves,
            ..Default::default()
        };
        if target.raid_level.parity_count() > 0 {
            let unchanged: HashSet<(Vec<u32>, Vec<Slot>)> = old
                .stripes
                .iter()
                .map(|s| stripe_key(s, old))
                .collect();
            for (sid, s) in target.stripes.iter().enumerate() {
                if !unchanged.contains(&stripe_key(s, target)) {
                    plan.recomputed_stripes.push(sid as u32);
                    plan.parity_updates += s.parity.len() as u32;
                }
            }
        }
        plan
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty() && self.parity_updates == 0
    }

    /// Unit moves plus parity writes.
    pub fn page_writes(&self) -> u64 {
        self.moves.len() as u64 + self.parity_updates as u64
    }

    /// Unit → slot mapping after applying the moves to `old`.
    pub fn apply(&self, old: &ArrayLayout) -> Vec<Slot> {
        let mut slots = old.unit_slots.clone();
        for m in &self.moves {
            slots[m.unit as usize] = m.dst;
        }
        slots
    }

    /// One move per line: `unit,src_disk,src_off,dst_disk,dst_off`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.moves {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                m.unit, m.src.disk, m.src.offset, m.dst.disk, m.dst.offset
            );
        }
        out
    }

    /// Parse the move list written by [`MigrationPlan::to_text`].
    pub fn moves_from_text(text: &str) -> Result<Vec<Move>, ScalingError> {
        let mut moves = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(ScalingError::PlanFormat {
                    line: i + 1,
                    reason: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let mut v = [0u32; 5];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = u32::from_str(f).map_err(|e| ScalingError::PlanFormat {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            }
            moves.push(Move {
                unit: v[0],
                src: Slot::new(v[1], v[2]),
                dst: Slot::new(v[3], v[4]),
            });
        }
        Ok(moves)
    }
}

fn stripe_key(s: &Stripe, src: &ArrayLayout) -> (Vec<u32>, Vec<Slot>) {
    let mut units = s.units.clone();
    units.sort_unstable();
    let mut slots: Vec<Slot> = s.units.iter().map(|&u| src.slot(u)).collect();
    slots.extend(s.parity.iter().copied());
    slots.sort_unstable();
    (units, slots)
}

fn require(scheme: ScalingScheme, old: &ArrayLayout) -> Result<(), ScalingError> {
    if scheme.supports(old.raid_level) {
        Ok(())
    } else {
        Err(ScalingError::UnsupportedRaidLevel {
            scheme,
            level: old.raid_level,
        })
    }
}

fn no_op(old: &ArrayLayout) -> (ArrayLayout, MigrationPlan) {
    (old.clone(), MigrationPlan::default())
}

/// Round-robin re-striping over the enlarged array.
pub fn plan_rr(old: &ArrayLayout, k_s: u32) -> Result<(ArrayLayout, MigrationPlan), ScalingError> {
    require(ScalingScheme::RoundRobin, old)?;
    if k_s == 0 {
        return Ok(no_op(old));
    }
    let target = ArrayLayout::striped(old.raid_level, old.disk_count + k_s, old.unit_count())?;
    let plan = MigrationPlan::between(old, &target);
    Ok((target, plan))
}

/// Old-to-new moves only, taking each new disk to its balanced share.
pub fn plan_fastscale(
    old: &ArrayLayout,
    k_s: u32,
) -> Result<(ArrayLayout, MigrationPlan), ScalingError> {
    require(ScalingScheme::FastScale, old)?;
    if k_s == 0 {
        return Ok(no_op(old));
    }
    let k_o = old.disk_count;
    let n = k_o + k_s;
    // units on each old disk, highest offset last
    let mut per_disk: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
    for u in 0..old.unit_count() {
        per_disk[old.slot(u).disk as usize].push(u);
    }
    for list in per_disk.iter_mut() {
        list.sort_by_key(|&u| old.slot(u).offset);
    }
    let mut target = ArrayLayout {
        raid_level: old.raid_level,
        disk_count: n,
        stripes: Vec::new(),
        unit_slots: old.unit_slots.clone(),
        unit_stripe: old.unit_stripe.clone(),
    };
    // new disks get the balanced share, with the remainder split so the
    // move count is the proportional one rounded, ties toward fewer moves
    let (q, r) = (old.unit_count() / n, old.unit_count() % n);
    let extra = ((k_s * r) as f64 / n as f64 - 0.5).ceil() as u32;
    let mut next_offset = vec![0u32; n as usize];
    for (i, dst) in (k_o..n).enumerate() {
        let quota = q + u32::from((i as u32) < extra);
        while (per_disk[dst as usize].len() as u32) < quota {
            let src = (0..k_o)
                .max_by_key(|&d| (per_disk[d as usize].len(), std::cmp::Reverse(d)))
                .expect("at least one old disk");
            let unit = per_disk[src as usize].pop().expect("source has units");
            let slot = Slot::new(dst, next_offset[dst as usize]);
            next_offset[dst as usize] += 1;
            per_disk[dst as usize].push(unit);
            target.unit_slots[unit as usize] = slot;
        }
    }
    // RAID-0: one stripe per unit group is only bookkeeping; keep each unit
    // in its own parity-free stripe so stripe invariants hold trivially.
    target.stripes = (0..target.unit_count())
        .map(|u| Stripe {
            units: vec![u],
            parity: Vec::new(),
        })
        .collect();
    target.unit_stripe = (0..target.unit_count()).collect();
    let plan = MigrationPlan::between(old, &target);
    Ok((target, plan))
}

/// Keep the leading `k_o / (k_o + k_s)` of the stripes, re-stripe the rest.
pub fn plan_gsr(old: &ArrayLayout, k_s: u32) -> Result<(ArrayLayout, MigrationPlan), ScalingError> {
    require(ScalingScheme::Gsr, old)?;
    if k_s == 0 {
        return Ok(no_op(old));
    }
    let k_o = old.disk_count;
    let n = k_o + k_s;
    let total = old.stripes.len() as u64;
    let preserved = (total * k_o as u64 / n as u64) as usize;
    let mut target = ArrayLayout {
        raid_level: old.raid_level,
        disk_count: n,
        stripes: Vec::new(),
        unit_slots: vec![Slot::new(u32::MAX, u32::MAX); old.unit_count() as usize],
        unit_stripe: vec![u32::MAX; old.unit_count() as usize],
    };
    for (sid, stripe) in old.stripes[..preserved].iter().enumerate() {
        for &u in &stripe.units {
            target.set_unit(u, old.slot(u), sid as u32);
        }
        target.stripes.push(stripe.clone());
    }
    // reorganized rows start right after the preserved rows on old disks and
    // at offset 0 on new disks
    let mut base = vec![0u32; n as usize];
    for s in old.stripes[..preserved].iter() {
        for slot in s.units.iter().map(|&u| old.slot(u)).chain(s.parity.iter().copied()) {
            base[slot.disk as usize] = base[slot.disk as usize].max(slot.offset + 1);
        }
    }
    let tail: Vec<u32> = old.stripes[preserved..]
        .iter()
        .flat_map(|s| s.units.iter().copied())
        .collect();
    target.append_rows(&tail, &base);
    let plan = MigrationPlan::between(old, &target);
    Ok((target, plan))
}

/// Balanced dual-parity target; units already on a target data slot stay.
pub fn plan_sdm(old: &ArrayLayout, k_s: u32) -> Result<(ArrayLayout, MigrationPlan), ScalingError> {
    require(ScalingScheme::Sdm, old)?;
    if k_s == 0 {
        return Ok(no_op(old));
    }
    let n = old.disk_count + k_s;
    let shape = ArrayLayout::striped(old.raid_level, n, old.unit_count())?;
    // target data slots in row-major order, each tied to its stripe
    let mut slots: Vec<(Slot, u32)> = Vec::with_capacity(old.unit_count() as usize);
    for (sid, s) in shape.stripes.iter().enumerate() {
        for &u in &s.units {
            slots.push((shape.slot(u), sid as u32));
        }
    }
    let slot_index: HashMap<Slot, usize> = slots.iter().enumerate().map(|(i, (s, _))| (*s, i)).collect();
    let mut taken = vec![false; slots.len()];
    let mut assigned: Vec<Option<usize>> = vec![None; old.unit_count() as usize];
    for u in 0..old.unit_count() {
        if let Some(&i) = slot_index.get(&old.slot(u)) {
            taken[i] = true;
            assigned[u as usize] = Some(i);
        }
    }
    let mut free = (0..slots.len()).filter(|&i| !taken[i]);
    for a in assigned.iter_mut() {
        if a.is_none() {
            *a = Some(free.next().expect("as many target slots as units"));
        }
    }
    let mut target = ArrayLayout {
        raid_level: old.raid_level,
        disk_count: n,
        stripes: shape
            .stripes
            .iter()
            .map(|s| Stripe {
                units: Vec::with_capacity(s.units.len()),
                parity: s.parity.clone(),
            })
            .collect(),
        unit_slots: Vec::new(),
        unit_stripe: Vec::new(),
    };
    for (u, a) in assigned.iter().enumerate() {
        let (slot, sid) = slots[a.expect("assigned")];
        target.set_unit(u as u32, slot, sid);
        target.stripes[sid as usize].units.push(u as u32);
    }
    for s in target.stripes.iter_mut() {
        s.units.sort_by_key(|&u| target.unit_slots[u as usize].disk);
    }
    let plan = MigrationPlan::between(old, &target);
    Ok((target, plan))
}

/// Slots that hold data or parity in `before` but nothing in `after`.
pub fn released_slots(before: &ArrayLayout, after: &ArrayLayout) -> Vec<Slot> {
    let keep: BTreeSet<Slot> = after.occupied().into_iter().collect();
    let mut out: Vec<Slot> = before
        .occupied()
        .into_iter()
        .filter(|s| !keep.contains(s))
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rr_six_units_over_three_disks() {
        let old = ArrayLayout::striped(RaidLevel::Raid0, 2, 6).unwrap();
        let (target, plan) = plan_rr(&old, 1).unwrap();
        target.validate().unwrap();
        // old: disk = u % 2, offset = u / 2; new: disk = u % 3, offset = u / 3
        let expected: Vec<u32> = (0..6)
            .filter(|u| (u % 2, u / 2) != (u % 3, u / 3))
            .collect();
        let moved: Vec<u32> = plan.moves.iter().map(|m| m.unit).collect();
        assert_eq!(moved, expected);
        assert_eq!(target.data_per_disk(), vec![2, 2, 2]);
    }

    #[test]
    fn zero_added_disks_is_a_no_op() {
        let r0 = ArrayLayout::striped(RaidLevel::Raid0, 3, 12).unwrap();
        let r5 = ArrayLayout::striped(RaidLevel::Raid5, 4, 30).unwrap();
        let r6 = ArrayLayout::striped(RaidLevel::Raid6, 5, 30).unwrap();
        assert!(plan_rr(&r5, 0).unwrap().1.is_empty());
        assert!(plan_fastscale(&r0, 0).unwrap().1.is_empty());
        assert!(plan_gsr(&r5, 0).unwrap().1.is_empty());
        assert!(plan_sdm(&r6, 0).unwrap().1.is_empty());
    }

    #[test]
    fn fastscale_twelve_units() {
        let old = ArrayLayout::striped(RaidLevel::Raid0, 3, 12).unwrap();
        let (target, plan) = plan_fastscale(&old, 1).unwrap();
        target.validate().unwrap();
        assert_eq!(plan.moves.len(), 3);
        let sources: BTreeSet<u32> = plan.moves.iter().map(|m| m.src.disk).collect();
        assert_eq!(sources, [0, 1, 2].into_iter().collect());
        assert!(plan.moves.iter().all(|m| m.dst.disk >= 3));
    }

    #[test]
    fn scheme_level_checks() {
        let r5 = ArrayLayout::striped(RaidLevel::Raid5, 4, 30).unwrap();
        let r0 = ArrayLayout::striped(RaidLevel::Raid0, 4, 30).unwrap();
        assert!(matches!(
            plan_fastscale(&r5, 1),
            Err(ScalingError::UnsupportedRaidLevel { .. })
        ));
        assert!(plan_gsr(&r0, 1).is_err());
        assert!(plan_sdm(&r5, 1).is_err());
        assert!(plan_rr(&r5, 1).is_ok());
    }

    #[test]
    fn gsr_preserves_leading_segment() {
        // 20 stripes of 3 data units on 4 disks
        let old = ArrayLayout::striped(RaidLevel::Raid5, 4, 60).unwrap();
        assert_eq!(old.stripes().len(), 20);
        let (target, plan) = plan_gsr(&old, 1).unwrap();
        target.validate().unwrap();
        let preserved: HashSet<u32> = old.stripes()[..16]
            .iter()
            .flat_map(|s| s.units.iter().copied())
            .collect();
        assert!(plan.moves.iter().all(|m| !preserved.contains(&m.unit)));
        assert!(plan.recomputed_stripes.iter().all(|&s| s >= 16));
        assert_eq!(&target.stripes()[..16], &old.stripes()[..16]);
    }

    #[test]
    fn sdm_is_balanced() {
        let old = ArrayLayout::striped(RaidLevel::Raid6, 4, 60).unwrap();
        assert_eq!(old.stripes().len(), 30);
        let (target, _) = plan_sdm(&old, 2).unwrap();
        target.validate().unwrap();
        let counts = target.data_per_disk();
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
        assert!(target.stripes().iter().all(|s| s.parity.len() == 2));
    }

    #[test]
    fn plan_text_round_trip() {
        let old = ArrayLayout::striped(RaidLevel::Raid0, 3, 12).unwrap();
        let (_, plan) = plan_fastscale(&old, 1).unwrap();
        let text = plan.to_text();
        assert_eq!(MigrationPlan::moves_from_text(&text).unwrap(), plan.moves);
        assert!(MigrationPlan::moves_from_text("1,2,3").is_err());
    }
}
