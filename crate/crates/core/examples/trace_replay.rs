//! Replay a block trace (`device,R|W,offset,length,timestamp_us` per line)
//! through a RAID5 array grown from 3 to 4 disks.
//!
//! Pass a trace path, or run without arguments to replay a generated one.

use std::fs;
use std::path::PathBuf;

use pswl::config::{TraceConfig, WorkloadConfig};
use pswl::{ExperimentConfig, PolicyKind, ScalingScheme};

fn generated_trace() -> PathBuf {
    let path = std::env::temp_dir().join("pswl_example_trace.csv");
    let mut text = String::new();
    let mut x: u64 = 12345;
    for i in 0..40_000u64 {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        // a 64 KiB hot region takes most of the writes
        let offset = if x >> 62 != 0 { (x >> 20) % 65536 } else { (x >> 20) % (1 << 30) };
        let op = if (x >> 8) % 10 == 0 { "R" } else { "W" };
        text.push_str(&format!("vol0,{op},{},{},{}\n", offset & !4095, 4096, i * 2000));
    }
    fs::write(&path, text).unwrap();
    path
}

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(generated_trace);
    let mut cfg = ExperimentConfig::new(PolicyKind::PsWl, ScalingScheme::RoundRobin, 3, 1);
    cfg.workload = WorkloadConfig::Trace(TraceConfig { path: path.clone() });
    cfg.initial_wear.originals_pe = Some(1000.0);

    let report = pswl::sim::run(&cfg).unwrap();
    println!("{}: {} events, status {:?}", path.display(), report.events, report.status);
    println!("host reads {} writes {}, wl migrations {}", report.io.host_reads, report.io.host_writes, report.io.wl_migration);
    for (d, disk) in report.disks.iter().enumerate() {
        println!("disk {d}: pe {:.1}, {} units", disk.pe_count, disk.data_units);
    }
    println!("ART {:.1} us", report.avg_response_time_us);
}
