//! Sliding-window access statistics and three-way page classification.
//!
//! For each logical page the window keeps three raw metrics:
//!
//! * frequency: references inside the window,
//! * recency: events since the most recent reference,
//! * compactness: accesses between the two most recent references.
//!
//! Each metric is min-max normalized over the tracked pages; frequency maps to
//! higher hotness, recency and compactness map inversely. The scalar hotness
//! of a page is the unweighted mean of the three normalized components.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HotnessError {
    #[error("invalid hotness configuration: {0}")]
    ConfigError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HotnessParams {
    pub window: usize,
    pub theta_hot: f64,
    pub theta_cold: f64,
    pub k_ban_base: f64,
    pub k_ban_max: f64,
}

impl Default for HotnessParams {
    fn default() -> Self {
        HotnessParams {
            window: 65_536,
            theta_hot: 0.8,
            theta_cold: 0.1,
            k_ban_base: 0.2,
            k_ban_max: 0.5,
        }
    }
}

impl HotnessParams {
    pub fn validate(&self) -> Result<(), HotnessError> {
        if self.window == 0 {
            return Err(HotnessError::ConfigError("window must be >= 1".into()));
        }
        Thresholds::new(self.theta_hot, self.theta_cold)?;
        for (name, v) in [("k_ban_base", self.k_ban_base), ("k_ban_max", self.k_ban_max)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(HotnessError::ConfigError(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            hot: self.theta_hot,
            cold: self.theta_cold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct PageStats {
    freq: u32,
    last: u64,
    prev: u64,
}

/// Raw metrics of one page at the current window position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawMetrics {
    pub freq: u32,
    pub recency: u64,
    /// `None` with fewer than two references in the window.
    pub compactness: Option<u64>,
}

/// Normalized hotness vector of a page.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HotnessVector {
    pub h_freq: f64,
    pub h_rec: f64,
    pub h_comp: f64,
}

impl HotnessVector {
    pub fn scalar(&self) -> f64 {
        (self.h_freq + self.h_rec + self.h_comp) / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HotnessClass {
    ExtremelyHot,
    Warm,
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub hot: f64,
    pub cold: f64,
}

impl Thresholds {
    pub fn new(hot: f64, cold: f64) -> Result<Self, HotnessError> {
        if cold >= hot {
            return Err(HotnessError::ConfigError(format!(
                "theta_cold ({cold}) must be below theta_hot ({hot})"
            )));
        }
        Ok(Thresholds { hot, cold })
    }
}

/// Bounded window of recent accesses with per-page running metrics.
#[derive(Debug, Clone)]
pub struct AccessWindow {
    capacity: usize,
    events: VecDeque<(u64, u32)>,
    next_index: u64,
    stats: Vec<PageStats>,
    tracked: usize,
}

impl AccessWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be >= 1");
        AccessWindow {
            capacity,
            events: VecDeque::with_capacity(capacity.min(1 << 20)),
            next_index: 0,
            stats: Vec::new(),
            tracked: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of distinct pages referenced inside the window.
    pub fn tracked_pages(&self) -> usize {
        self.tracked
    }

    pub fn events(&self) -> impl Iterator<Item = &(u64, u32)> {
        self.events.iter()
    }

    /// Append one access and return the touched page's updated metrics.
    pub fn record_access(&mut self, page: u32) -> RawMetrics {
        let idx = self.next_index;
        self.next_index += 1;
        if self.stats.len() <= page as usize {
            self.stats.resize(page as usize + 1, PageStats::default());
        }
        let s = &mut self.stats[page as usize];
        if s.freq == 0 {
            self.tracked += 1;
        }
        s.prev = s.last;
        s.last = idx;
        s.freq += 1;
        self.events.push_back((idx, page));
        while self.events.len() > self.capacity {
            let (_, old) = self.events.pop_front().expect("non-empty window");
            let s = &mut self.stats[old as usize];
            s.freq -= 1;
            if s.freq == 0 {
                self.tracked -= 1;
            }
        }
        self.metrics(page).expect("page just recorded")
    }

    /// Raw metrics of `page`, or `None` when it is not in the window.
    pub fn metrics(&self, page: u32) -> Option<RawMetrics> {
        let s = self.stats.get(page as usize)?;
        if s.freq == 0 {
            return None;
        }
        let now = self.next_index - 1;
        Some(RawMetrics {
            freq: s.freq,
            recency: now - s.last,
            compactness: (s.freq >= 2).then(|| s.last - s.prev - 1),
        })
    }

    /// All tracked pages with their raw metrics, in page order.
    pub fn tracked(&self) -> Vec<(u32, RawMetrics)> {
        let mut out = Vec::with_capacity(self.tracked);
        for (page, s) in self.stats.iter().enumerate() {
            if s.freq > 0 {
                out.push((page as u32, self.metrics(page as u32).expect("tracked")));
            }
        }
        out
    }
}

fn minmax<I: Iterator<Item = f64>>(it: I) -> Option<(f64, f64)> {
    it.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn scale(v: f64, range: Option<(f64, f64)>) -> f64 {
    match range {
        Some((lo, hi)) if hi > lo => (v - lo) / (hi - lo),
        _ => 0.5,
    }
}

/// Min-max normalize raw metrics into hotness vectors (same order as input).
pub fn normalize(raw: &[RawMetrics]) -> Vec<HotnessVector> {
    let freq = minmax(raw.iter().map(|m| m.freq as f64));
    let rec = minmax(raw.iter().map(|m| m.recency as f64));
    let comp = minmax(raw.iter().filter_map(|m| m.compactness.map(|c| c as f64)));
    raw.iter()
        .map(|m| HotnessVector {
            h_freq: scale(m.freq as f64, freq),
            h_rec: 1.0 - scale(m.recency as f64, rec),
            h_comp: match m.compactness {
                Some(c) => 1.0 - scale(c as f64, comp),
                None => 0.0,
            },
        })
        .collect()
}

pub fn classify(h: f64, thresholds: &Thresholds) -> HotnessClass {
    if h >= thresholds.hot {
        HotnessClass::ExtremelyHot
    } else if h <= thresholds.cold {
        HotnessClass::Cold
    } else {
        HotnessClass::Warm
    }
}

/// Hotness of one page after a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageScore {
    pub vector: HotnessVector,
    pub h: f64,
    pub class: HotnessClass,
}

impl PageScore {
    /// Order by write frequency first, scalar hotness second. Under skewed
    /// workloads most recently touched pages share a similar scalar, so
    /// frequency is what separates the truly hot ones.
    pub fn cmp_heat(&self, other: &PageScore) -> std::cmp::Ordering {
        self.vector
            .h_freq
            .total_cmp(&other.vector.h_freq)
            .then(self.h.total_cmp(&other.h))
    }
}

impl Default for PageScore {
    fn default() -> Self {
        PageScore {
            vector: HotnessVector::default(),
            h: 0.0,
            class: HotnessClass::Cold,
        }
    }
}

/// Dense per-page scores; pages outside the window are Cold with zero hotness.
#[derive(Debug, Clone, Default)]
pub struct HotnessSnapshot {
    scores: Vec<PageScore>,
}

impl HotnessSnapshot {
    pub fn take(window: &AccessWindow, thresholds: &Thresholds, pages: usize) -> Self {
        let tracked = window.tracked();
        let raw: Vec<RawMetrics> = tracked.iter().map(|(_, m)| *m).collect();
        let vectors = normalize(&raw);
        let mut scores = vec![PageScore::default(); pages];
        for ((page, _), vector) in tracked.iter().zip(vectors) {
            let h = vector.scalar();
            if let Some(slot) = scores.get_mut(*page as usize) {
                *slot = PageScore {
                    vector,
                    h,
                    class: classify(h, thresholds),
                };
            }
        }
        HotnessSnapshot { scores }
    }

    pub fn score(&self, page: u32) -> PageScore {
        self.scores.get(page as usize).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &PageScore)> {
        self.scores.iter().enumerate().map(|(p, s)| (p as u32, s))
    }

    /// Warm pages sorted by descending hotness, ties by page number.
    pub fn warm_ranked(&self) -> Vec<(u32, f64)> {
        let mut warm: Vec<(u32, f64)> = self
            .iter()
            .filter(|(_, s)| s.class == HotnessClass::Warm)
            .map(|(p, s)| (p, s.h))
            .collect();
        warm.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        warm
    }
}

/// Warm pages shielded from migration onto extended disks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservativeZone {
    pub capacity: usize,
    pub members: BTreeSet<u32>,
    pub n_base: usize,
    pub k_ban: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneParams {
    pub k_ban_base: f64,
    pub k_ban_max: f64,
    /// Lifetime gap at which protection is fully lifted.
    pub gap_ref: f64,
}

impl ConservativeZone {
    pub fn new(n_base: usize) -> Self {
        ConservativeZone {
            capacity: 0,
            members: BTreeSet::new(),
            n_base,
            k_ban: 0.0,
        }
    }

    /// Zone with a fixed protection factor.
    pub fn with_static_k_ban(n_base: usize, k_ban: f64) -> Self {
        ConservativeZone {
            capacity: (n_base as f64 * k_ban).round() as usize,
            members: BTreeSet::new(),
            n_base,
            k_ban,
        }
    }

    pub fn contains(&self, page: u32) -> bool {
        self.members.contains(&page)
    }

    /// Resize from the current lifetime gap and refill with the hottest warm pages.
    pub fn update(&mut self, warm_ranked: &[(u32, f64)], gap: f64, params: &ZoneParams) {
        let gap = gap.max(0.0);
        let shrink = if params.gap_ref > 0.0 {
            1.0 - gap / params.gap_ref
        } else {
            0.0
        };
        self.k_ban = (params.k_ban_base * shrink).clamp(0.0, params.k_ban_max);
        self.capacity = (self.n_base as f64 * self.k_ban).round() as usize;
        self.refill(warm_ranked);
    }

    /// Keep the capacity, refill members from a fresh ranking.
    pub fn refill(&mut self, ranked: &[(u32, f64)]) {
        self.members = ranked.iter().take(self.capacity).map(|&(p, _)| p).collect();
    }
}

/// Protection rule: zone members may not move to an extended disk while the
/// lifetime gap is below `gap_ref`.
pub fn migration_allowed(
    page: u32,
    dest_is_extended: bool,
    zone: &ConservativeZone,
    gap: f64,
    gap_ref: f64,
) -> bool {
    !(zone.contains(page) && dest_is_extended && gap < gap_ref)
}
