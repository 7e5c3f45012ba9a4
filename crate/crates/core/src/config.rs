//! TOML experiment and sweep configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::ControllerParams;
use crate::flash::{DeviceGeometry, FtlParams};
use crate::hotness::HotnessParams;
use crate::policy::{BaselineParams, PolicyKind};
use crate::reliability::{initial_wear_for_probability, FailureModelParams, LifetimeParams};
use crate::scaling::{RaidLevel, ScalingScheme};
use crate::sim::LatencyModel;
use crate::workload::SyntheticSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunUntil {
    #[default]
    StreamEnd,
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReliabilityConfig {
    pub mu: f64,
    pub sigma: f64,
    pub k: f64,
    /// Penalty weight. The default makes a 1e-4 change in failure
    /// probability worth 100 P/E cycles.
    pub k_p: f64,
}

const DEFAULT_K_P: f64 = 1e6;

impl Default for ReliabilityConfig {
    fn default() -> Self {
        let f = FailureModelParams::default();
        ReliabilityConfig {
            mu: f.mu,
            sigma: f.sigma,
            k: LifetimeParams::default().k,
            k_p: DEFAULT_K_P,
        }
    }
}

impl ReliabilityConfig {
    pub fn failure(&self) -> FailureModelParams {
        FailureModelParams {
            mu: self.mu,
            sigma: self.sigma,
        }
    }

    pub fn lifetime(&self) -> LifetimeParams {
        LifetimeParams {
            k: self.k,
            k_p: self.k_p,
        }
    }
}

/// Starting wear. At most one of the fields may be set; with none set every
/// disk starts fresh.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialWear {
    /// Age the original disks to this failure probability.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_probability: Option<f64>,
    /// Age the original disks to this mean P/E count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub originals_pe: Option<f64>,
    /// Explicit mean P/E count for every disk, originals first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_disk: Option<Vec<f64>>,
}

impl InitialWear {
    /// Mean P/E count per disk.
    pub fn resolve(
        &self,
        k_o: u32,
        k_s: u32,
        failure: &FailureModelParams,
    ) -> Result<Vec<f64>, ConfigError> {
        let n = (k_o + k_s) as usize;
        let set = [
            self.target_probability.is_some(),
            self.originals_pe.is_some(),
            self.per_disk.is_some(),
        ];
        if set.iter().filter(|s| **s).count() > 1 {
            return invalid("initial_wear: set at most one of target_probability, originals_pe, per_disk");
        }
        let originals = |pe: f64| {
            let mut v = vec![0.0; n];
            v[..k_o as usize].fill(pe);
            v
        };
        if let Some(p) = self.target_probability {
            let pe = initial_wear_for_probability(p, failure)
                .map_err(|e| ConfigError::Invalid(format!("initial_wear: {e}")))?;
            return Ok(originals(pe));
        }
        if let Some(pe) = self.originals_pe {
            if !(pe >= 0.0 && pe.is_finite()) {
                return invalid("initial_wear.originals_pe must be >= 0");
            }
            return Ok(originals(pe));
        }
        if let Some(v) = &self.per_disk {
            if v.len() != n {
                return invalid(format!("initial_wear.per_disk needs {n} entries, got {}", v.len()));
            }
            if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return invalid("initial_wear.per_disk entries must be >= 0");
            }
            return Ok(v.clone());
        }
        Ok(vec![0.0; n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub op_count: u64,
    pub write_fraction: f64,
    pub skew: f64,
    /// 0 means the whole array.
    pub address_space: u32,
    pub inter_arrival_us: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        SyntheticConfig {
            op_count: s.op_count,
            write_fraction: s.write_fraction,
            skew: s.skew,
            address_space: s.address_space,
            inter_arrival_us: s.inter_arrival_us,
        }
    }
}

impl SyntheticConfig {
    pub fn spec(&self, seed: u64, volume_pages: u32) -> SyntheticSpec {
        let address_space = match self.address_space {
            0 => volume_pages,
            a => a.min(volume_pages),
        };
        SyntheticSpec {
            op_count: self.op_count,
            write_fraction: self.write_fraction,
            skew: self.skew,
            address_space,
            seed,
            inter_arrival_us: self.inter_arrival_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum WorkloadConfig {
    Synthetic(SyntheticConfig),
    Trace(TraceConfig),
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig::Synthetic(SyntheticConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
}

fn default_seed() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

fn default_fill() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub policy: PolicyKind,
    pub scaling_scheme: ScalingScheme,
    /// Defaults to the scheme's native level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raid_level: Option<RaidLevel>,
    pub k_o: u32,
    pub k_s: u32,
    /// Fraction of each original disk's logical capacity holding array rows.
    #[serde(default = "default_fill")]
    pub data_fill: f64,
    #[serde(default)]
    pub run_until: RunUntil,
    /// Pair every migration with a cold page moving the other way.
    #[serde(default = "default_true")]
    pub migration_exchange: bool,
    #[serde(default)]
    pub geometry: DeviceGeometry,
    #[serde(default)]
    pub ftl: FtlParams,
    #[serde(default)]
    pub reliability: ReliabilityConfig,
    #[serde(default)]
    pub controller: ControllerParams,
    #[serde(default)]
    pub hotness: HotnessParams,
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default)]
    pub baselines: BaselineParams,
    #[serde(default)]
    pub initial_wear: InitialWear,
    #[serde(default)]
    pub workload: WorkloadConfig,
}

impl ExperimentConfig {
    /// Minimal configuration with defaults everywhere else.
    pub fn new(policy: PolicyKind, scheme: ScalingScheme, k_o: u32, k_s: u32) -> Self {
        ExperimentConfig {
            seed: default_seed(),
            policy,
            scaling_scheme: scheme,
            raid_level: None,
            k_o,
            k_s,
            data_fill: default_fill(),
            run_until: RunUntil::default(),
            migration_exchange: true,
            geometry: DeviceGeometry::default(),
            ftl: FtlParams::default(),
            reliability: ReliabilityConfig::default(),
            controller: ControllerParams::default(),
            hotness: HotnessParams::default(),
            latency: LatencyModel::default(),
            baselines: BaselineParams::default(),
            initial_wear: InitialWear::default(),
            workload: WorkloadConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Parse a file; a relative trace path is made relative to the file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if let WorkloadConfig::Trace(t) = &mut cfg.workload {
            if t.path.is_relative() {
                if let Some(dir) = path.parent() {
                    t.path = dir.join(&t.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn raid(&self) -> RaidLevel {
        self.raid_level.unwrap_or(self.scaling_scheme.native_level())
    }

    pub fn disk_count(&self) -> u32 {
        self.k_o + self.k_s
    }

    /// Semantic checks. Returns lint warnings on success.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let raid = self.raid();
        if !self.scaling_scheme.supports(raid) {
            return invalid(format!("{} does not support {raid}", self.scaling_scheme));
        }
        if self.k_o < raid.min_disks() {
            return invalid(format!("{raid} needs at least {} original disks", raid.min_disks()));
        }
        if !(self.data_fill > 0.0 && self.data_fill <= 1.0) {
            return invalid("data_fill must be in (0, 1]");
        }
        let wrap = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.geometry.validate().map_err(|e| wrap(&e))?;
        crate::flash::DeviceState::new(self.geometry, self.ftl).map_err(|e| wrap(&e))?;
        self.reliability.failure().validate().map_err(|e| wrap(&e))?;
        self.reliability.lifetime().validate().map_err(|e| wrap(&e))?;
        self.controller.validate().map_err(|e| wrap(&e))?;
        self.hotness.validate().map_err(|e| wrap(&e))?;
        let b = &self.baselines;
        if !(b.swans_cv_threshold >= 0.0 && b.edm_gap_threshold >= 0.0) {
            return invalid("baseline thresholds must be >= 0");
        }
        if !(0.0..=1.0).contains(&b.lazy_k_ban) {
            return invalid("baselines.lazy_k_ban must be in [0, 1]");
        }
        let wear = self
            .initial_wear
            .resolve(self.k_o, self.k_s, &self.reliability.failure())?;
        if let Some(pe) = wear.iter().find(|&&pe| pe >= self.geometry.max_pe_cycles as f64) {
            return invalid(format!(
                "initial wear {pe:.1} reaches max_pe_cycles {}",
                self.geometry.max_pe_cycles
            ));
        }
        match &self.workload {
            WorkloadConfig::Synthetic(s) => {
                s.spec(self.seed, 1).validate().map_err(|e| wrap(&e))?;
            }
            WorkloadConfig::Trace(t) => {
                if !t.path.is_file() {
                    return invalid(format!("trace {} does not exist", t.path.display()));
                }
            }
        }
        Ok(self.latency.lint())
    }
}

/// Cartesian sweep over a base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepMatrix {
    /// Path of the base config, relative to the matrix file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<PathBuf>,
    /// Inline base config, used when `base` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_config: Option<ExperimentConfig>,
    #[serde(default)]
    pub axes: SweepAxes,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub scaling_scheme: Vec<ScalingScheme>,
    /// `[k_o, k_s]` pairs.
    pub disks: Vec<[u32; 2]>,
    pub policy: Vec<PolicyKind>,
    pub seed: Vec<u64>,
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub name: String,
    pub config: ExperimentConfig,
}

impl SweepMatrix {
    pub fn load(path: &Path) -> Result<(Self, ExperimentConfig), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let matrix: SweepMatrix = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = match (&matrix.base, &matrix.base_config) {
            (Some(rel), None) => {
                let p = path.parent().map_or(rel.clone(), |d| d.join(rel));
                ExperimentConfig::load(&p)?
            }
            (None, Some(cfg)) => {
                let mut cfg = cfg.clone();
                if let WorkloadConfig::Trace(t) = &mut cfg.workload {
                    if let (true, Some(dir)) = (t.path.is_relative(), path.parent()) {
                        t.path = dir.join(&t.path);
                    }
                }
                cfg
            }
            _ => return invalid("sweep matrix needs exactly one of base, base_config"),
        };
        Ok((matrix, base))
    }

    /// Cells in scheme, disks, policy, seed order. A scheme axis value
    /// switches the RAID level to that scheme's native level unless the base
    /// level is also supported.
    pub fn cells(&self, base: &ExperimentConfig) -> Vec<SweepCell> {
        let axes = &self.axes;
        let schemes = if axes.scaling_scheme.is_empty() {
            vec![base.scaling_scheme]
        } else {
            axes.scaling_scheme.clone()
        };
        let disks = if axes.disks.is_empty() {
            vec![[base.k_o, base.k_s]]
        } else {
            axes.disks.clone()
        };
        let policies = if axes.policy.is_empty() {
            vec![base.policy]
        } else {
            axes.policy.clone()
        };
        let seeds = if axes.seed.is_empty() {
            vec![base.seed]
        } else {
            axes.seed.clone()
        };
        let mut cells = Vec::new();
        for &scheme in &schemes {
            for &[k_o, k_s] in &disks {
                for &policy in &policies {
                    for &seed in &seeds {
                        let mut c = base.clone();
                        c.scaling_scheme = scheme;
                        if !scheme.supports(c.raid()) {
                            c.raid_level = Some(scheme.native_level());
                        }
                        c.k_o = k_o;
                        c.k_s = k_s;
                        c.policy = policy;
                        c.seed = seed;
                        let name = format!("{scheme}_{k_o}+{k_s}_{policy}_s{seed}");
                        cells.push(SweepCell { name, config: c });
                    }
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
policy = "ps-wl"
scaling_scheme = "RR"
k_o = 3
k_s = 1
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.raid(), RaidLevel::Raid5);
        assert_eq!(c.controller, ControllerParams::default());
        assert!(matches!(c.workload, WorkloadConfig::Synthetic(_)));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nfrobnicate = 1\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}\n[controller]\nkpp = 1.0\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = format!("{MINIMAL}\n[workload]\nsource = \"synthetic\"\nop_cnt = 5\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn workload_sections() {
        let text = format!(
            "{MINIMAL}\n[workload]\nsource = \"synthetic\"\nop_count = 7\nskew = 0.5\n"
        );
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        let WorkloadConfig::Synthetic(s) = c.workload else {
            panic!("expected synthetic")
        };
        assert_eq!(s.op_count, 7);
        assert_eq!(s.skew, 0.5);
        let text = format!("{MINIMAL}\n[workload]\nsource = \"trace\"\npath = \"t.csv\"\n");
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(matches!(c.workload, WorkloadConfig::Trace(_)));
    }

    #[test]
    fn round_trip_through_toml() {
        let mut c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        c.initial_wear.target_probability = Some(1e-4);
        c.controller.lambda_restart = Some(0.05);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn incompatible_scheme_and_level() {
        let mut c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        c.scaling_scheme = ScalingScheme::FastScale;
        c.raid_level = Some(RaidLevel::Raid5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn initial_wear_variants() {
        let fp = FailureModelParams::default();
        let w = InitialWear {
            originals_pe: Some(100.0),
            ..Default::default()
        };
        assert_eq!(w.resolve(3, 1, &fp).unwrap(), vec![100.0, 100.0, 100.0, 0.0]);
        let w = InitialWear {
            originals_pe: Some(100.0),
            per_disk: Some(vec![1.0; 4]),
            ..Default::default()
        };
        assert!(w.resolve(3, 1, &fp).is_err());
        let w = InitialWear {
            target_probability: Some(1e-4),
            ..Default::default()
        };
        let v = w.resolve(2, 2, &fp).unwrap();
        assert!((v[0] - 1194.3).abs() < 0.1);
        assert_eq!(v[3], 0.0);
    }

    #[test]
    fn sweep_cells_cartesian() {
        let base = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let m = SweepMatrix {
            base: None,
            base_config: Some(base.clone()),
            axes: SweepAxes {
                scaling_scheme: vec![ScalingScheme::RoundRobin, ScalingScheme::FastScale],
                policy: vec![PolicyKind::PsWl, PolicyKind::Swans],
                ..Default::default()
            },
        };
        let cells = m.cells(&base);
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[2].config.raid(), RaidLevel::Raid0);
        assert_eq!(cells[0].name, "RR_3+1_ps-wl_s1");
    }
}
