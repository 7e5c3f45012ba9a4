//! Block-trace ingestion and synthetic skewed workloads.
//!
//! Traces are CSV lines `device_id,opcode,offset,length,timestamp` (the
//! Alibaba block-trace layout), optionally gzip-compressed. Each record
//! expands into one access per touched page; page numbers wrap modulo the
//! simulated logical capacity.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("cannot read trace {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trace {path}: {malformed} of {lines} lines malformed (limit 1%)")]
    Format {
        path: PathBuf,
        malformed: usize,
        lines: usize,
    },
    #[error("invalid synthetic workload: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Opcode {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub device_id: String,
    pub opcode: Opcode,
    pub offset: u64,
    pub length: u64,
    pub timestamp: u64,
}

impl TraceRecord {
    pub fn parse(line: &str) -> Option<TraceRecord> {
        let mut it = line.split(',').map(str::trim);
        let device_id = it.next()?.to_string();
        let opcode = match it.next()? {
            "W" | "w" => Opcode::Write,
            "R" | "r" => Opcode::Read,
            _ => return None,
        };
        let offset = it.next()?.parse().ok()?;
        let length: u64 = it.next()?.parse().ok()?;
        let timestamp = it.next()?.parse().ok()?;
        if it.next().is_some() || length == 0 || device_id.is_empty() {
            return None;
        }
        Some(TraceRecord {
            device_id,
            opcode,
            offset,
            length,
            timestamp,
        })
    }

    pub fn page_count(&self, page_size: u64) -> u64 {
        self.length.div_ceil(page_size)
    }
}

/// One page-sized host request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Access {
    pub page: u32,
    pub write: bool,
    pub arrival_us: f64,
}

/// Parsed trace plus parse statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceReplay {
    pub accesses: Vec<Access>,
    pub records: usize,
    pub malformed: usize,
    pub lines: usize,
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>, WorkloadError> {
    let io = |source| WorkloadError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::open(path).map_err(io)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic).map_err(io)?;
    let file = File::open(path).map_err(io)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Parse a trace into page accesses over `capacity_pages` logical pages.
///
/// Records are ordered by timestamp (stable); arrival times are relative to
/// the first record.
pub fn parse_trace(
    path: &Path,
    page_size: u32,
    capacity_pages: u32,
) -> Result<TraceReplay, WorkloadError> {
    let reader = open_maybe_gz(path)?;
    let mut records = Vec::new();
    let mut malformed = 0;
    let mut lines = 0;
    for line in reader.lines() {
        let line = line.map_err(|source| WorkloadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        match TraceRecord::parse(&line) {
            Some(r) => records.push(r),
            None => malformed += 1,
        }
    }
    if malformed * 100 > lines {
        return Err(WorkloadError::Format {
            path: path.to_path_buf(),
            malformed,
            lines,
        });
    }
    if malformed > 0 {
        log::warn!("{}: skipped {malformed} malformed lines", path.display());
    }
    records.sort_by_key(|r| r.timestamp);
    let t_first = records.first().map_or(0, |r| r.timestamp);
    let page = page_size as u64;
    let cap = capacity_pages.max(1) as u64;
    let mut accesses = Vec::new();
    for r in &records {
        let first = r.offset / page;
        for i in 0..r.page_count(page) {
            accesses.push(Access {
                page: ((first + i) % cap) as u32,
                write: r.opcode == Opcode::Write,
                arrival_us: (r.timestamp - t_first) as f64,
            });
        }
    }
    Ok(TraceReplay {
        accesses,
        records: records.len(),
        malformed,
        lines,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub op_count: u64,
    pub write_fraction: f64,
    /// Zipf exponent; 0 is uniform.
    pub skew: f64,
    /// Pages to draw from; 0 means "whole logical volume".
    pub address_space: u32,
    pub seed: u64,
    pub inter_arrival_us: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            op_count: 100_000,
            write_fraction: 0.9,
            skew: 1.0,
            address_space: 0,
            seed: 1,
            inter_arrival_us: 10.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(WorkloadError::InvalidSpec("write_fraction must be in [0, 1]".into()));
        }
        if !(self.skew >= 0.0 && self.skew.is_finite()) {
            return Err(WorkloadError::InvalidSpec("skew must be >= 0".into()));
        }
        if !(self.inter_arrival_us >= 0.0) {
            return Err(WorkloadError::InvalidSpec("inter_arrival_us must be >= 0".into()));
        }
        Ok(())
    }
}

/// Deterministic Zipf stream; popularity ranks are scattered over the
/// address space by a seeded permutation.
#[derive(Debug, Clone)]
pub struct SyntheticStream {
    rng: ChaCha8Rng,
    zipf: Zipf<f64>,
    rank_to_page: Vec<u32>,
    write_fraction: f64,
    inter_arrival_us: f64,
    remaining: u64,
    index: u64,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticStream, WorkloadError> {
    spec.validate()?;
    if spec.address_space == 0 {
        return Err(WorkloadError::InvalidSpec("address_space must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rank_to_page: Vec<u32> = (0..spec.address_space).collect();
    rank_to_page.shuffle(&mut rng);
    let zipf = Zipf::new(spec.address_space as f64, spec.skew)
        .map_err(|e| WorkloadError::InvalidSpec(e.to_string()))?;
    Ok(SyntheticStream {
        rng,
        zipf,
        rank_to_page,
        write_fraction: spec.write_fraction,
        inter_arrival_us: spec.inter_arrival_us,
        remaining: spec.op_count,
        index: 0,
    })
}

impl Iterator for SyntheticStream {
    type Item = Access;

    fn next(&mut self) -> Option<Access> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let rank = self.zipf.sample(&mut self.rng) as usize;
        let page = self.rank_to_page[(rank - 1).min(self.rank_to_page.len() - 1)];
        let write = self.write_fraction >= 1.0 || self.rng.random::<f64>() < self.write_fraction;
        let arrival_us = self.index as f64 * self.inter_arrival_us;
        self.index += 1;
        Some(Access {
            page,
            write,
            arrival_us,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn write_record_expands_to_pages() {
        let f = write_tmp("0,W,0,8192,1000\n");
        let r = parse_trace(f.path(), 4096, 1000).unwrap();
        let pages: Vec<(u32, bool)> = r.accesses.iter().map(|a| (a.page, a.write)).collect();
        assert_eq!(pages, vec![(0, true), (1, true)]);
    }

    #[test]
    fn read_record_offset() {
        let f = write_tmp("0,R,4096,4096,2000\n");
        let r = parse_trace(f.path(), 4096, 1000).unwrap();
        assert_eq!(r.accesses.len(), 1);
        assert_eq!(r.accesses[0].page, 1);
        assert!(!r.accesses[0].write);
    }

    #[test]
    fn empty_trace() {
        let f = write_tmp("");
        let r = parse_trace(f.path(), 4096, 1000).unwrap();
        assert!(r.accesses.is_empty());
        assert_eq!(r.records, 0);
    }

    #[test]
    fn offsets_wrap_modulo_capacity() {
        let f = write_tmp("3,W,40960,4096,5\n");
        let r = parse_trace(f.path(), 4096, 8).unwrap();
        assert_eq!(r.accesses[0].page, 2);
    }

    #[test]
    fn too_many_malformed_lines() {
        let f = write_tmp("0,W,0,4096,1\ngarbage\n");
        assert!(matches!(
            parse_trace(f.path(), 4096, 8),
            Err(WorkloadError::Format { malformed: 1, .. })
        ));
    }

    #[test]
    fn gzip_input() {
        use flate2::write::GzEncoder;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"0,W,0,8192,1000\n0,R,4096,4096,2000\n").unwrap();
        f.write_all(&enc.finish().unwrap()).unwrap();
        let r = parse_trace(f.path(), 4096, 1000).unwrap();
        assert_eq!(r.accesses.len(), 3);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            parse_trace(Path::new("/nonexistent/trace.csv"), 4096, 8),
            Err(WorkloadError::Io { .. })
        ));
    }

    #[test]
    fn synthetic_write_only_and_deterministic() {
        let spec = SyntheticSpec {
            op_count: 5000,
            write_fraction: 1.0,
            address_space: 100,
            ..Default::default()
        };
        let a: Vec<Access> = generate_synthetic(&spec).unwrap().collect();
        let b: Vec<Access> = generate_synthetic(&spec).unwrap().collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.write));
        assert!(a.iter().all(|x| x.page < 100));
    }
}
