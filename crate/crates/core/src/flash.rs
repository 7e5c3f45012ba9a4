//! Page-mapped model of a single SSD.
//!
//! Writes are out-of-place: every host write programs the next free page of
//! the active block and invalidates the previous copy of the logical page.
//! When the number of free blocks drops below the GC threshold, greedy
//! garbage collection picks the block with the fewest valid pages, relocates
//! those pages, and erases it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const UNMAPPED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlashError {
    #[error("device worn out: no erasable block left (max {max_pe} P/E)")]
    DeviceWornOut { max_pe: u32 },
    #[error("logical page {lpn} beyond logical capacity {capacity}")]
    CapacityExceeded { lpn: u32, capacity: u32 },
    #[error("garbage collection cannot reclaim space: every victim block is fully valid")]
    GcStalled,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

/// Physical shape and endurance of one device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceGeometry {
    pub blocks_per_disk: u32,
    pub pages_per_block: u32,
    pub max_pe_cycles: u32,
    pub page_size: u32,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        DeviceGeometry {
            blocks_per_disk: 64,
            pages_per_block: 8,
            max_pe_cycles: 10_000,
            page_size: 4096,
        }
    }
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<(), FlashError> {
        let fields = [
            ("blocks_per_disk", self.blocks_per_disk),
            ("pages_per_block", self.pages_per_block),
            ("max_pe_cycles", self.max_pe_cycles),
            ("page_size", self.page_size),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(FlashError::InvalidGeometry(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn total_pages(&self) -> u32 {
        self.blocks_per_disk * self.pages_per_block
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PageState {
    Free,
    Valid,
    Invalid,
}

/// Result of one host write.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteOutcome {
    /// Host page plus every GC relocation.
    pub pages_programmed: u32,
    pub relocations: u32,
    pub gc_erases: u32,
}

/// Lifetime counters for one device.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceCounters {
    pub host_writes: u64,
    pub host_reads: u64,
    pub programs: u64,
    pub relocations: u64,
    pub erases: u64,
    pub trims: u64,
}

/// Knobs of the FTL that are not part of the device geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FtlParams {
    /// Fraction of physical pages hidden from the logical address space.
    pub overprovision: f64,
    /// GC runs while free blocks < ceil(gc_threshold * blocks).
    pub gc_threshold: f64,
}

impl Default for FtlParams {
    fn default() -> Self {
        FtlParams {
            overprovision: 0.10,
            gc_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    geometry: DeviceGeometry,
    block_erase_counts: Vec<u32>,
    page_states: Vec<PageState>,
    /// logical page -> physical page
    map: Vec<u32>,
    /// physical page -> logical page
    reverse: Vec<u32>,
    valid_per_block: Vec<u32>,
    write_ptr: Vec<u32>,
    active: Option<u32>,
    cursor: u32,
    free_blocks: u32,
    gc_min_free: u32,
    logical_capacity: u32,
    mapped: u32,
    counters: DeviceCounters,
}

impl DeviceState {
    pub fn new(geometry: DeviceGeometry, ftl: FtlParams) -> Result<Self, FlashError> {
        geometry.validate()?;
        if !(0.0..1.0).contains(&ftl.overprovision) {
            return Err(FlashError::InvalidGeometry(
                "overprovision must be in [0, 1)".into(),
            ));
        }
        if !(0.0..1.0).contains(&ftl.gc_threshold) {
            return Err(FlashError::InvalidGeometry(
                "gc_threshold must be in [0, 1)".into(),
            ));
        }
        let blocks = geometry.blocks_per_disk;
        let total = geometry.total_pages();
        let logical_capacity = ((total as f64) * (1.0 - ftl.overprovision)).floor() as u32;
        let gc_min_free = ((blocks as f64 * ftl.gc_threshold).ceil() as u32).max(1);
        if blocks <= gc_min_free + 1 {
            return Err(FlashError::InvalidGeometry(format!(
                "{blocks} blocks cannot sustain a GC reserve of {gc_min_free}"
            )));
        }
        Ok(DeviceState {
            geometry,
            block_erase_counts: vec![0; blocks as usize],
            page_states: vec![PageState::Free; total as usize],
            map: vec![UNMAPPED; logical_capacity as usize],
            reverse: vec![UNMAPPED; total as usize],
            valid_per_block: vec![0; blocks as usize],
            write_ptr: vec![0; blocks as usize],
            active: None,
            cursor: blocks - 1,
            free_blocks: blocks,
            gc_min_free,
            logical_capacity,
            mapped: 0,
            counters: DeviceCounters::default(),
        })
    }

    /// Pre-age the device so its mean block erase count equals `avg_pe`.
    ///
    /// Counts are spread as evenly as integers allow: some blocks get the
    /// floor, the rest the ceiling.
    pub fn set_initial_wear(&mut self, avg_pe: f64) -> Result<(), FlashError> {
        let blocks = self.geometry.blocks_per_disk as usize;
        let total = (avg_pe.max(0.0) * blocks as f64).round() as u64;
        let base = (total / blocks as u64) as u32;
        let extra = (total % blocks as u64) as usize;
        if base + u32::from(extra > 0) >= self.geometry.max_pe_cycles {
            return Err(FlashError::DeviceWornOut {
                max_pe: self.geometry.max_pe_cycles,
            });
        }
        for (b, count) in self.block_erase_counts.iter_mut().enumerate() {
            *count = base + u32::from(b < extra);
        }
        Ok(())
    }

    pub fn geometry(&self) -> &DeviceGeometry {
        &self.geometry
    }

    pub fn logical_capacity(&self) -> u32 {
        self.logical_capacity
    }

    pub fn counters(&self) -> &DeviceCounters {
        &self.counters
    }

    pub fn block_erase_counts(&self) -> &[u32] {
        &self.block_erase_counts
    }

    pub fn page_state(&self, ppn: u32) -> PageState {
        self.page_states[ppn as usize]
    }

    pub fn page_states(&self) -> &[PageState] {
        &self.page_states
    }

    pub fn lookup(&self, lpn: u32) -> Option<u32> {
        match self.map.get(lpn as usize) {
            Some(&p) if p != UNMAPPED => Some(p),
            _ => None,
        }
    }

    pub fn mapped_pages(&self) -> u32 {
        self.mapped
    }

    pub fn free_blocks(&self) -> u32 {
        self.free_blocks
    }

    pub fn gc_min_free(&self) -> u32 {
        self.gc_min_free
    }

    /// Average block erase count (the device's P/E count).
    pub fn pe_count(&self) -> f64 {
        let sum: u64 = self.block_erase_counts.iter().map(|&c| c as u64).sum();
        sum as f64 / self.geometry.blocks_per_disk as f64
    }

    pub fn count_pages(&self, state: PageState) -> usize {
        self.page_states.iter().filter(|&&s| s == state).count()
    }

    fn is_retired(&self, block: u32) -> bool {
        self.block_erase_counts[block as usize] >= self.geometry.max_pe_cycles
    }

    fn is_free_block(&self, block: u32) -> bool {
        self.write_ptr[block as usize] == 0 && Some(block) != self.active && !self.is_retired(block)
    }

    /// Next free block after the cursor, round-robin.
    fn take_free_block(&mut self) -> Option<u32> {
        let n = self.geometry.blocks_per_disk;
        for step in 1..=n {
            let b = (self.cursor + step) % n;
            if self.is_free_block(b) {
                self.cursor = b;
                self.free_blocks -= 1;
                return Some(b);
            }
        }
        None
    }

    fn active_has_room(&self) -> bool {
        match self.active {
            Some(b) => self.write_ptr[b as usize] < self.geometry.pages_per_block,
            None => false,
        }
    }

    /// Program `lpn` into the next free page, without triggering GC.
    fn program(&mut self, lpn: u32) -> Result<(), FlashError> {
        if !self.active_has_room() {
            self.active = Some(self.take_free_block().ok_or(FlashError::DeviceWornOut {
                max_pe: self.geometry.max_pe_cycles,
            })?);
        }
        let block = self.active.expect("active block");
        let np = self.geometry.pages_per_block;
        let ppn = block * np + self.write_ptr[block as usize];
        self.write_ptr[block as usize] += 1;
        self.page_states[ppn as usize] = PageState::Valid;
        self.reverse[ppn as usize] = lpn;
        self.valid_per_block[block as usize] += 1;
        self.map[lpn as usize] = ppn;
        self.counters.programs += 1;
        Ok(())
    }

    fn invalidate(&mut self, ppn: u32) {
        let np = self.geometry.pages_per_block;
        self.page_states[ppn as usize] = PageState::Invalid;
        self.reverse[ppn as usize] = UNMAPPED;
        self.valid_per_block[(ppn / np) as usize] -= 1;
    }

    fn check_lpn(&self, lpn: u32) -> Result<(), FlashError> {
        if lpn >= self.logical_capacity {
            return Err(FlashError::CapacityExceeded {
                lpn,
                capacity: self.logical_capacity,
            });
        }
        Ok(())
    }

    /// Out-of-place write of one logical page, followed by GC if needed.
    pub fn host_write(&mut self, lpn: u32) -> Result<WriteOutcome, FlashError> {
        self.check_lpn(lpn)?;
        let old = self.map[lpn as usize];
        if old != UNMAPPED {
            self.invalidate(old);
        } else {
            self.mapped += 1;
        }
        self.program(lpn)?;
        self.counters.host_writes += 1;
        let mut outcome = WriteOutcome {
            pages_programmed: 1,
            ..WriteOutcome::default()
        };
        while self.free_blocks < self.gc_min_free {
            let relocated = self.collect_one()?;
            outcome.gc_erases += 1;
            outcome.relocations += relocated;
            outcome.pages_programmed += relocated;
        }
        Ok(outcome)
    }

    /// Drop the mapping of `lpn`; its physical page becomes Invalid.
    pub fn trim(&mut self, lpn: u32) -> Result<bool, FlashError> {
        self.check_lpn(lpn)?;
        let old = self.map[lpn as usize];
        if old == UNMAPPED {
            return Ok(false);
        }
        self.invalidate(old);
        self.map[lpn as usize] = UNMAPPED;
        self.mapped -= 1;
        self.counters.trims += 1;
        Ok(true)
    }

    /// Read one logical page; returns whether it was mapped.
    pub fn read(&mut self, lpn: u32) -> Result<bool, FlashError> {
        self.check_lpn(lpn)?;
        self.counters.host_reads += 1;
        Ok(self.map[lpn as usize] != UNMAPPED)
    }

    /// Greedy victim: fewest valid pages, lowest index on ties.
    fn pick_victim(&self) -> Option<u32> {
        let np = self.geometry.pages_per_block;
        (0..self.geometry.blocks_per_disk)
            .filter(|&b| {
                Some(b) != self.active
                    && self.write_ptr[b as usize] == np
                    && !self.is_retired(b)
            })
            .min_by_key(|&b| (self.valid_per_block[b as usize], b))
    }

    /// One GC round. Returns the number of relocated pages.
    fn collect_one(&mut self) -> Result<u32, FlashError> {
        let max_pe = self.geometry.max_pe_cycles;
        let victim = self
            .pick_victim()
            .ok_or(FlashError::DeviceWornOut { max_pe })?;
        let np = self.geometry.pages_per_block;
        if self.valid_per_block[victim as usize] == np {
            return Err(FlashError::GcStalled);
        }
        let first = victim * np;
        let mut relocated = 0;
        for ppn in first..first + np {
            if self.page_states[ppn as usize] == PageState::Valid {
                let lpn = self.reverse[ppn as usize];
                self.invalidate(ppn);
                self.program(lpn)?;
                relocated += 1;
            }
        }
        for ppn in first..first + np {
            self.page_states[ppn as usize] = PageState::Free;
        }
        self.write_ptr[victim as usize] = 0;
        self.block_erase_counts[victim as usize] += 1;
        self.counters.erases += 1;
        self.counters.relocations += relocated as u64;
        if !self.is_retired(victim) {
            self.free_blocks += 1;
        }
        Ok(relocated)
    }
}

/// Population standard deviation of per-device P/E counts.
pub fn erase_count_stddev(devs: &[DeviceState]) -> f64 {
    let counts: Vec<f64> = devs.iter().map(DeviceState::pe_count).collect();
    population_stddev(&counts)
}

pub fn population_stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}
