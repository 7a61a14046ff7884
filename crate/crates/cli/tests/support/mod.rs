//! Synthetic vibration records shaped like the bearing test-rig data:
//! shaft harmonics plus noise, with periodic decaying impacts for faults.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use faultgraph::rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

pub const RATE_HZ: f64 = 12_000.0;

const CONDITIONS: [(&str, &str, f64); 3] = [("ir", "inner_race", 162.0), ("b", "ball", 141.0), ("or", "outer_race", 107.0)];
const DIAMETERS: [f64; 3] = [0.1778, 0.3556, 0.5334];

fn record(len: usize, impact_hz: Option<f64>, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    let mut x: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / RATE_HZ;
            let noise: f64 = rng.sample(StandardNormal);
            0.05 * (std::f64::consts::TAU * 30.0 * t).sin() + 0.02 * (std::f64::consts::TAU * 60.0 * t).sin() + 0.02 * noise
        })
        .collect();
    if let Some(hz) = impact_hz {
        let period = RATE_HZ / hz;
        let mut at = rng.random_range(0.0..period);
        while (at as usize) < len {
            let start = at as usize;
            for j in 0..120.min(len - start) {
                let decay = (-(j as f64) / 15.0).exp();
                x[start + j] += amplitude * decay * (std::f64::consts::TAU * 3_000.0 * j as f64 / RATE_HZ).sin();
            }
            at += period;
        }
    }
    x
}

fn write_f64le(path: &Path, samples: &[f64]) {
    let bytes: Vec<u8> = samples.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).unwrap();
}

/// Writes one normal record and nine fault records (three conditions, three
/// diameters) and returns the manifest path.
pub fn write_records(dir: &Path, normal_len: usize, fault_len: usize) -> PathBuf {
    let mut entries = Vec::new();
    let normal = "normal.f64";
    write_f64le(&dir.join(normal), &record(normal_len, None, 0.0, 1));
    entries.push(json!({
        "path": normal, "format": "f64le", "condition": "normal",
        "fault_diameter_mm": 0.0, "rate_hz": RATE_HZ, "rpm": 1797.0, "load_hp": 0.0
    }));
    for (c, (tag, condition, hz)) in CONDITIONS.iter().enumerate() {
        for (d, diameter) in DIAMETERS.iter().enumerate() {
            let name = format!("{tag}{d}.f64");
            let samples = record(fault_len, Some(*hz), 0.1 + 0.3 * d as f64, 10 + (3 * c + d) as u64);
            write_f64le(&dir.join(&name), &samples);
            entries.push(json!({
                "path": name, "format": "f64le", "condition": condition,
                "fault_diameter_mm": diameter, "rate_hz": RATE_HZ
            }));
        }
    }
    let manifest = dir.join("manifest.json");
    fs::write(&manifest, serde_json::to_vec_pretty(&entries).unwrap()).unwrap();
    manifest
}

/// A small, fast pipeline config over the records in `dir`.
pub fn small_config(manifest: &Path, out_dir: &Path, normal_count: usize, fault_count: usize) -> Value {
    json!({
        "manifest": manifest,
        "out_dir": out_dir,
        "seed": 7,
        "group": { "id": 1, "normal_count": normal_count, "fault_count": fault_count },
        "features": { "eemd_ensemble": 2 },
        "graph": { "k": 5 },
        "model": { "iters": 30 }
    })
}

pub fn write_json(path: &Path, value: &Value) -> PathBuf {
    fs::write(path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path.to_path_buf()
}

pub fn faultgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faultgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
