#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use kuramoto_sync::runner::config::OutputSpec;
use kuramoto_sync::runner::rng::{derive_seed, SeededStream, Stream};
use kuramoto_sync::runner::ExperimentConfig;
use kuramoto_sync::OscillatorSystem;
use nalgebra::DMatrix;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Fixture config with its output paths removed, so tests write nothing.
pub fn fixture_config(name: &str) -> ExperimentConfig {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    ExperimentConfig {
        outputs: OutputSpec::default(),
        ..ExperimentConfig::from_json(&text).unwrap()
    }
}

/// Writes one line past the test harness capture so it lands in the log
/// whether or not the test passes, then fails the test if `ok` is false.
pub fn report(id: u32, title: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} [{status}] {title}: {detail}");
    let _ = out.flush();
    assert!(ok, "criterion {id} failed: {detail}");
}

pub struct Draw(SeededStream);

impl Draw {
    pub fn new(master: u64, index: u64) -> Self {
        Draw(SeededStream::new(derive_seed(master, index), Stream::Omega))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.0.standard_normal()
    }

    pub fn int(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + ((hi_inclusive - lo + 1) as f64 * self.0.uniform()) as usize
    }

    pub fn phases(&mut self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| self.uniform(0.0, std::f64::consts::TAU))
            .collect()
    }

    /// Positive weights, normal frequencies and a symmetric coupling matrix
    /// with entries in `[lo, hi]`.
    pub fn system(&mut self, n: usize, lo: f64, hi: f64) -> OscillatorSystem {
        let d: Vec<f64> = (0..n).map(|_| self.uniform(0.5, 2.0)).collect();
        let omega: Vec<f64> = (0..n).map(|_| self.normal()).collect();
        let mut m = DMatrix::zeros(n, n);
        for j in 1..n {
            for k in 0..j {
                let l = self.uniform(lo, hi);
                m[(j, k)] = l;
                m[(k, j)] = l;
            }
        }
        OscillatorSystem::new(d, omega, m).unwrap()
    }
}
