//! Writes the reference fixtures into `<dir>` (default `fixtures`).
//!
//! The n = 100 frequency vector is a centered Box–Muller N(1, 0.25) draw,
//! picked from the first 20 000 seeds as the one closest to the target
//! statistics (max |ω| = 1.2162, range 2.3697), then pinned: the extremes are
//! set to 1.2162 and −1.1535 and the other 98 values shifted by one common
//! constant so the vector sums to zero again.
//!
//! Run with `cargo run --example gen_fixtures -- fixtures`.

use std::path::Path;

use kuramoto_sync::runner::config::{CouplingSpec, OmegaSpec, OutputSpec, PhaseSpec, WeightSpec};
use kuramoto_sync::runner::io::write_json;
use kuramoto_sync::runner::rng::{SeededStream, Stream};
use kuramoto_sync::runner::ExperimentConfig;
use kuramoto_sync::OscillatorSystem;

const N: usize = 100;
const OMEGA_MAX: f64 = 1.2162;
const OMEGA_RANGE: f64 = 2.3697;
const SEARCH: u64 = 20_000;
/// Seed for the initial phases and the Gaussian couplings.
const RUN_SEED: u64 = 2024;

fn centered_draw(seed: u64) -> Vec<f64> {
    let mut s = SeededStream::new(seed, Stream::Omega);
    let mut w: Vec<f64> = (0..N).map(|_| s.normal(1.0, 0.25)).collect();
    let m = w.iter().sum::<f64>() / N as f64;
    w.iter_mut().for_each(|x| *x -= m);
    w
}

fn extremes(w: &[f64]) -> (usize, usize) {
    let hi = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    let lo = (0..w.len()).min_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    (hi, lo)
}

fn pinned_omega() -> (u64, Vec<f64>) {
    let score = |w: &[f64]| {
        let (hi, lo) = extremes(w);
        (w[hi] - OMEGA_MAX).abs() + (w[hi] - w[lo] - OMEGA_RANGE).abs()
    };
    let seed = (0..SEARCH)
        .min_by(|&a, &b| score(&centered_draw(a)).total_cmp(&score(&centered_draw(b))))
        .unwrap();
    let mut w = centered_draw(seed);
    let (hi, lo) = extremes(&w);
    w[hi] = OMEGA_MAX;
    w[lo] = OMEGA_MAX - OMEGA_RANGE;
    let shift = -w.iter().sum::<f64>() / (N - 2) as f64;
    for (j, x) in w.iter_mut().enumerate() {
        if j != hi && j != lo {
            *x += shift;
        }
    }
    assert!(w
        .iter()
        .all(|x| (OMEGA_MAX - OMEGA_RANGE..=OMEGA_MAX).contains(x)));
    (seed, w)
}

fn config(omega: &[f64], coupling: CouplingSpec, name: &str) -> ExperimentConfig {
    ExperimentConfig {
        seed: RUN_SEED,
        n: N,
        omega_spec: OmegaSpec::Explicit {
            values: omega.to_vec(),
        },
        coupling_spec: coupling,
        d_spec: WeightSpec::Ones,
        theta0_spec: PhaseSpec::UniformCircle,
        integrator: Default::default(),
        classifier: Default::default(),
        outputs: OutputSpec {
            trajectory_csv: Some(format!("{name}_trajectory.csv").into()),
            summary_json: Some(format!("{name}_summary.json").into()),
            system_json: Some(format!("{name}_system.json").into()),
        },
    }
}

fn main() -> kuramoto_sync::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let dir = Path::new(&dir);
    let (seed, omega) = pinned_omega();
    let sum: f64 = omega.iter().sum();
    eprintln!("omega drawn from seed {seed}; sum after pinning {sum:e}");

    let system = OscillatorSystem::uniform(vec![1.0; N], omega.clone(), 1.44)?;
    write_json(&dir.join("sec6.json"), &system)?;
    for (name, lambda) in [("sec6_l144", 1.44), ("sec6_l122", 1.22)] {
        write_json(
            &dir.join(format!("{name}.json")),
            &config(&omega, CouplingSpec::Uniform { lambda }, name),
        )?;
    }
    for (name, mean) in [("sec6_2_mean2", 2.0), ("sec6_2_mean0", 0.0)] {
        let spec = CouplingSpec::GaussianSymmetric {
            mean,
            variance: 0.5,
        };
        write_json(
            &dir.join(format!("{name}.json")),
            &config(&omega, spec, name),
        )?;
    }
    let pair = ExperimentConfig {
        n: 2,
        omega_spec: OmegaSpec::Explicit {
            values: vec![0.5, -0.5],
        },
        theta0_spec: PhaseSpec::Explicit {
            values: vec![0.0, 0.0],
        },
        ..config(&[], CouplingSpec::Uniform { lambda: 2.0 }, "two_osc")
    };
    write_json(&dir.join("two_osc.json"), &pair)?;
    let pair_system = OscillatorSystem::uniform(vec![1.0; 2], vec![0.5, -0.5], 2.0)?;
    write_json(&dir.join("two_osc_system.json"), &pair_system)?;
    Ok(())
}
