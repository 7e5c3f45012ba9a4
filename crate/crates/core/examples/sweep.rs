//! A small policy x scheme sweep through the same path as `pswl sweep`,
//! writing per-cell reports and summary.csv under a temporary directory.

use std::fs;

fn main() {
    let dir = std::env::temp_dir().join("pswl_example_sweep");
    fs::create_dir_all(&dir).unwrap();
    let matrix = dir.join("matrix.toml");
    fs::write(
        &matrix,
        r#"
[base_config]
policy = "ps-wl"
scaling_scheme = "RR"
k_o = 3
k_s = 1

[base_config.initial_wear]
target_probability = 1e-4

[base_config.workload]
source = "synthetic"
op_count = 200000
inter_arrival_us = 5000.0

[axes]
scaling_scheme = ["RR", "SDM"]
policy = ["ps-wl", "swans"]
"#,
    )
    .unwrap();

    let out = dir.join("out");
    let summary = pswl::cli::cmd_sweep(&matrix, &out, 2).unwrap();
    print!("{}", summary.to_csv());
    println!("reports under {}", out.display());
}
