//! Experiment orchestration: sampling, the integrate → classify → thresholds
//! pipeline, coupling sweeps and ensembles.

pub mod cli;
pub mod config;
pub mod io;
pub mod rng;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify, equivalence_report, EquivalenceReport, SyncVerdict};
use crate::error::{Error, Result, ThresholdError};
use crate::integrator::{integrate, Trajectory};
use crate::model::OscillatorSystem;
use crate::par::{self, Execution};
use crate::thresholds::{critical_coupling, r_upper_bound, ThresholdReport};

pub use config::{CouplingSpec, ExperimentConfig, OmegaSpec, OutputSpec, PhaseSpec, WeightSpec};
use rng::{SeededStream, Stream};

/// Draws the system and initial phases described by `config`.
pub fn sample_system(config: &ExperimentConfig) -> Result<(OscillatorSystem, Vec<f64>)> {
    config.validate()?;
    let n = config.n;
    let omega = match &config.omega_spec {
        OmegaSpec::Explicit { values } => values.clone(),
        OmegaSpec::Normal {
            mean,
            variance,
            centered,
        } => {
            let mut stream = SeededStream::new(config.seed, Stream::Omega);
            let mut w: Vec<f64> = (0..n).map(|_| stream.normal(*mean, *variance)).collect();
            if *centered {
                let m = w.iter().sum::<f64>() / n as f64;
                w.iter_mut().for_each(|x| *x -= m);
            }
            w
        }
    };
    let coupling = match &config.coupling_spec {
        CouplingSpec::Uniform { lambda } => {
            DMatrix::from_fn(n, n, |j, k| if j == k { 0.0 } else { *lambda })
        }
        CouplingSpec::Explicit { matrix } => DMatrix::from_fn(n, n, |j, k| matrix[j][k]),
        CouplingSpec::GaussianSymmetric { mean, variance } => {
            let mut stream = SeededStream::new(config.seed, Stream::Coupling);
            let mut m = DMatrix::zeros(n, n);
            for j in 1..n {
                for k in 0..j {
                    let l = stream.normal(*mean, *variance);
                    m[(j, k)] = l;
                    m[(k, j)] = l;
                }
            }
            m
        }
    };
    let d = match &config.d_spec {
        WeightSpec::Ones => vec![1.0; n],
        WeightSpec::Explicit { values } => values.clone(),
    };
    let theta0 = match &config.theta0_spec {
        PhaseSpec::Explicit { values } => values.clone(),
        PhaseSpec::UniformCircle => {
            let mut stream = SeededStream::new(config.seed, Stream::Theta0);
            (0..n)
                .map(|_| std::f64::consts::TAU * stream.uniform())
                .collect()
        }
    };
    Ok((OscillatorSystem::new(d, omega, coupling)?, theta0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
    pub negative_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemStats {
    pub omega_max_abs: f64,
    pub omega_range: f64,
    pub lambda_stats: CouplingStats,
}

impl SystemStats {
    pub fn of(system: &OscillatorSystem) -> Self {
        let omega = system.omega();
        let hi = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = omega.iter().cloned().fold(f64::INFINITY, f64::min);
        let n = system.n();
        let pairs: Vec<f64> = (0..n)
            .flat_map(|j| ((j + 1)..n).map(move |k| (j, k)))
            .map(|(j, k)| system.lambda(j, k))
            .collect();
        SystemStats {
            omega_max_abs: hi.abs().max(lo.abs()),
            omega_range: hi - lo,
            lambda_stats: CouplingStats {
                min: pairs.iter().cloned().fold(f64::INFINITY, f64::min),
                max: pairs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean: pairs.iter().sum::<f64>() / pairs.len() as f64,
                uniform: system.uniform_coupling(),
                negative_pairs: pairs.iter().filter(|&&l| l < 0.0).count(),
            },
        }
    }
}

/// Threshold report for a system: the formula applied to the normalized
/// frequencies (top level) and to the raw ones (`raw`), plus the comparison
/// with the actual coupling when it is uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<ThresholdReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<ThresholdReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synchronization_impossible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_over_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_upper_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn threshold_summary(system: &OscillatorSystem) -> ThresholdSummary {
    let n = system.n();
    let mut notes = Vec::new();
    let normalized_system = system.normalize_frequencies();
    let mut report = |omega: &[f64], label: &str| match critical_coupling(omega, n) {
        Ok(r) => Some(r),
        Err(ThresholdError::ZeroFrequencies) => {
            notes.push(format!(
                "{label} frequencies are all zero: identical-frequency regime, the threshold degenerates to 0"
            ));
            None
        }
        Err(e) => {
            notes.push(format!("{label}: {e}"));
            None
        }
    };
    let normalized = report(normalized_system.omega(), "normalized");
    let raw = report(system.omega(), "raw");
    if system.d().iter().any(|&d| d != system.d()[0]) {
        notes.push("the threshold does not involve the weights d_j; applied verbatim".into());
    }
    let lambda = system.uniform_coupling();
    if lambda.is_none() {
        notes.push("coupling is not uniform; the threshold is stated for uniform coupling".into());
    }
    let (mut impossible, mut ratio, mut bound) = (None, None, None);
    if let (Some(l), Some(r)) = (lambda, &normalized) {
        impossible = Some(r.rules_out(l));
        if l != 0.0 {
            ratio = Some(r.omega_max_abs / l.abs());
        }
        bound = r_upper_bound(r.omega_max_abs, l, n).ok();
        if r.rules_out(l) {
            notes.push(format!(
                "lambda = {l} < lambda_c = {}: synchronization impossible",
                r.lambda_c
            ));
        }
    }
    ThresholdSummary {
        normalized,
        raw,
        lambda,
        synchronization_impossible: impossible,
        omega_over_lambda: ratio,
        r_upper_bound: bound,
        notes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub system_stats: SystemStats,
    pub thresholds: ThresholdSummary,
    pub verdict: SyncVerdict,
    pub equivalence: EquivalenceReport,
    pub r_final: f64,
    pub runtime_seconds: f64,
}

/// Runs the pipeline and also returns the trajectory (of the normalized
/// system). No files are written.
pub fn simulate(config: &ExperimentConfig) -> Result<(RunSummary, Trajectory)> {
    let start = Instant::now();
    let (raw, theta0) = sample_system(config)?;
    let system = raw.normalize_frequencies();
    let traj = integrate(&system, &theta0, &config.integrator)?;
    let verdict = classify(&traj, &config.classifier)?;
    let equivalence = equivalence_report(&verdict, &system);
    let summary = RunSummary {
        config: config.clone(),
        system_stats: SystemStats::of(&system),
        thresholds: threshold_summary(&system),
        equivalence,
        r_final: traj.final_order().r,
        verdict,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((summary, traj))
}

/// Runs the pipeline and writes whichever output files the config names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    let (summary, traj) = simulate(config)?;
    let out = &config.outputs;
    if let Some(path) = &out.trajectory_csv {
        io::write_trajectory_file(path, &traj)?;
    }
    if let Some(path) = &out.system_json {
        io::write_json(path, traj.system())?;
    }
    if let Some(path) = &out.summary_json {
        io::write_json(path, &summary)?;
    }
    Ok(summary)
}

/// Runs independent experiments; results follow input order.
pub fn run_ensemble(configs: &[ExperimentConfig], exec: Execution) -> Vec<Result<RunSummary>> {
    par::map(configs, exec, |c| simulate(c).map(|(s, _)| s))
}

/// Reruns `config` at each uniform coupling in `lambdas` (same seed, no
/// output files).
pub fn sweep_coupling(
    config: &ExperimentConfig,
    lambdas: &[f64],
    exec: Execution,
) -> Result<Vec<RunSummary>> {
    if !matches!(config.coupling_spec, CouplingSpec::Uniform { .. }) {
        return Err(Error::Config(
            "sweep requires a uniform coupling spec".into(),
        ));
    }
    let configs: Vec<ExperimentConfig> = lambdas
        .iter()
        .map(|&l| ExperimentConfig {
            outputs: OutputSpec::default(),
            ..config.with_lambda(l)
        })
        .collect();
    run_ensemble(&configs, exec).into_iter().collect()
}

/// `lambda,fss,r_final` table for a sweep.
pub fn sweep_table(lambdas: &[f64], summaries: &[RunSummary]) -> String {
    let mut out = String::from("lambda,fss,r_final\n");
    for (l, s) in lambdas.iter().zip(summaries) {
        out.push_str(&format!(
            "{},{},{}\n",
            io::format_float(*l),
            s.verdict.fss,
            io::format_float(s.r_final)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    fn normal_config(seed: u64) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"seed": {seed}, "n": 30,
                "omega_spec": {{"kind": "normal", "mean": 1.0, "variance": 0.25, "centered": true}},
                "coupling_spec": {{"kind": "gaussian_symmetric", "mean": 2.0, "variance": 0.5}},
                "integrator": {{"t_end": 20.0}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn sampling_contract() {
        let cfg = normal_config(11);
        let (s, theta0) = sample_system(&cfg).unwrap();
        assert!(s.omega().iter().sum::<f64>().abs() < 1e-12 * 30.0);
        assert!(validate(&s).is_ok());
        assert!(theta0
            .iter()
            .all(|t| (0.0..std::f64::consts::TAU).contains(t)));
        let (s2, theta2) = sample_system(&cfg).unwrap();
        assert_eq!(s, s2);
        assert_eq!(theta0, theta2);
        let (s3, _) = sample_system(&normal_config(12)).unwrap();
        assert_ne!(s, s3);
    }

    #[test]
    fn summary_shape_and_reproducibility() {
        let cfg = normal_config(5);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let strip = |s: &RunSummary| {
            let mut v = serde_json::to_value(s).unwrap();
            v.as_object_mut().unwrap().remove("runtime_seconds");
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(&a), strip(&b));
        let v = serde_json::to_value(&a).unwrap();
        for key in [
            "config",
            "system_stats",
            "thresholds",
            "verdict",
            "r_final",
            "runtime_seconds",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn sweep_requires_uniform() {
        let err = sweep_coupling(&normal_config(1), &[1.0], Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
