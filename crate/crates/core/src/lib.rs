//! Simulator for inter-disk wear leveling in SSD arrays that grow by adding
//! fresh disks.
//!
//! The crate models NAND devices with a page-mapped FTL, stripes data over a
//! RAID array, redistributes it with one of several scaling schemes and then
//! replays a workload while a wear-leveling policy migrates pages between
//! disks. The policies are PS-WL (probability-sensitive wear leveling), its
//! raw-P/E ablation and the SWANS, Lazy-WL and EDM baselines.
//!
//! ```no_run
//! use pswl::{ExperimentConfig, PolicyKind, ScalingScheme};
//!
//! let cfg = ExperimentConfig::new(PolicyKind::PsWl, ScalingScheme::RoundRobin, 3, 1);
//! let report = pswl::sim::run(&cfg).unwrap();
//! println!("stddev {:.2}, ART {:.0} us", report.lifetime_stddev, report.avg_response_time_us);
//! ```

pub mod cli;
pub mod config;
pub mod controller;
pub mod flash;
pub mod hotness;
pub mod policy;
pub mod reliability;
pub mod scaling;
pub mod sim;
pub mod workload;

pub use config::{ExperimentConfig, RunUntil, SweepMatrix};
pub use policy::PolicyKind;
pub use scaling::{RaidLevel, ScalingScheme};
pub use sim::{ExperimentReport, RunStatus};
