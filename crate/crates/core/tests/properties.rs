use std::f64::consts::{PI, TAU};

use kuramoto_sync::analysis::{energy_record, Flag};
use kuramoto_sync::equilibria::{canonicalize, torus_distance};
use kuramoto_sync::integrator::{integrate, IntegratorConfig};
use kuramoto_sync::model::{angle_difference, order_parameter, wrap_angle};
use kuramoto_sync::runner::io::format_float;
use kuramoto_sync::runner::rng::derive_seed;
use kuramoto_sync::runner::{run_ensemble, ExperimentConfig};
use kuramoto_sync::thresholds::{critical_coupling, r_upper_bound, theta_opt};
use kuramoto_sync::{Execution, OscillatorSystem};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Random system of size 2..=8 plus a phase vector.
fn system_and_phases() -> impl Strategy<Value = (OscillatorSystem, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(0.3f64..3.0, n),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..3.0, n * (n - 1) / 2),
            prop::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(move |(d, omega, upper, theta)| {
                let mut m = DMatrix::zeros(n, n);
                let mut it = upper.into_iter();
                for j in 0..n {
                    for k in (j + 1)..n {
                        let l = it.next().unwrap();
                        m[(j, k)] = l;
                        m[(k, j)] = l;
                    }
                }
                (OscillatorSystem::new(d, omega, m).unwrap(), theta)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_is_invariant_under_common_rotation((s, theta) in system_and_phases(), c in -20.0f64..20.0) {
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        for (a, b) in s.vector_field(&theta).iter().zip(s.vector_field(&shifted)) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + s.parameter_scale()));
        }
    }

    #[test]
    fn weighted_speed_sums_to_total_frequency((s, theta) in system_and_phases()) {
        let f = s.vector_field(&theta);
        let weighted: f64 = f.iter().zip(s.d()).map(|(v, d)| v * d).sum();
        let total: f64 = s.omega().iter().sum();
        prop_assert!((weighted - total).abs() <= 1e-12 * (1.0 + s.parameter_scale()));
    }

    #[test]
    fn speeds_respect_the_bound((s, theta) in system_and_phases()) {
        for (v, b) in s.vector_field(&theta).iter().zip(s.velocity_bound()) {
            prop_assert!(v.abs() <= b + 1e-12);
        }
    }

    #[test]
    fn normalization_shifts_speeds_by_the_frame_rate((s, theta) in system_and_phases()) {
        let norm = s.normalize_frequencies();
        prop_assert!(norm.omega().iter().sum::<f64>().abs() <= 1e-12 * (1.0 + s.parameter_scale()));
        let c = s.frame_rate();
        for (a, b) in s.vector_field(&theta).iter().zip(norm.vector_field(&theta)) {
            prop_assert!((a - c - b).abs() <= 1e-12 * (1.0 + s.parameter_scale()));
        }
    }

    #[test]
    fn order_parameter_bounds_and_rotation((_, theta) in system_and_phases(), c in -5.0f64..5.0) {
        let z = order_parameter(&theta);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&z.r));
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        let zs = order_parameter(&shifted);
        prop_assert!((zs.r - z.r).abs() < 1e-12);
        if z.r > 1e-6 {
            prop_assert!(angle_difference(zs.phi, z.phi + c).abs() < 1e-9);
        }
    }

    #[test]
    fn reduced_field_is_periodic((s, _) in system_and_phases(), k in -3i32..3) {
        let n = s.n();
        let psi: Vec<f64> = (0..n - 1).map(|j| 0.37 * j as f64 - 1.0).collect();
        let moved: Vec<f64> = psi.iter().enumerate().map(|(j, p)| p + TAU * ((j as i32 + k) as f64)).collect();
        for (a, b) in s.reduced_vector_field(&psi).iter().zip(s.reduced_vector_field(&moved)) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + s.parameter_scale()));
        }
    }

    #[test]
    fn angle_helpers(x in -1e4f64..1e4) {
        let w = wrap_angle(x);
        prop_assert!((0.0..TAU).contains(&w));
        let d = angle_difference(x, 0.0);
        prop_assert!(d > -PI && d <= PI);
        let c = canonicalize(&[x, -x]);
        prop_assert_eq!(canonicalize(&c), c.clone());
        prop_assert!(torus_distance(&c, &[x, -x]) < 1e-9);
    }

    #[test]
    fn thresholds_scale_with_frequencies(
        omega in prop::collection::vec(-3.0f64..3.0, 2..40),
        k in 0.01f64..100.0,
    ) {
        prop_assume!(omega.iter().any(|w| w.abs() > 1e-6));
        let n = omega.len();
        let a = critical_coupling(&omega, n).unwrap();
        let scaled: Vec<f64> = omega.iter().map(|w| k * w).collect();
        let b = critical_coupling(&scaled, n).unwrap();
        prop_assert!((b.lambda_c - k * a.lambda_c).abs() <= 1e-12 * b.lambda_c);
        prop_assert!(a.lambda_c >= a.order_parameter_term && a.lambda_c >= a.frequency_range_term);
    }

    #[test]
    fn theta_opt_maximizes_the_denominator(n in 2usize..5000) {
        let t = theta_opt(n).unwrap();
        let nf = n as f64;
        let g = |x: f64| 2.0 * x.sin() + 2.0 * (nf - 2.0) * (x / 2.0).sin();
        prop_assert!((PI / 2.0 - 1e-12..PI).contains(&t));
        for dx in [1e-3, 1e-2, 0.1] {
            prop_assert!(g(t) >= g((t - dx).max(0.0)) - 1e-12);
            prop_assert!(g(t) >= g((t + dx).min(PI)) - 1e-12);
        }
    }

    #[test]
    fn order_bound_lies_in_its_range(w in 0.01f64..5.0, excess in 1.0001f64..10.0, n in 2usize..1000) {
        let b = r_upper_bound(w, w * excess, n).unwrap();
        let lo = 1.0 - 1.0 / n as f64;
        prop_assert!(b >= lo && b <= 1.0);
    }

    #[test]
    fn csv_floats_roundtrip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn short_runs_conserve_and_satisfy_the_energy_identity((s, theta) in system_and_phases()) {
        let s = s.normalize_frequencies();
        let traj = integrate(&s, &theta, &IntegratorConfig::rk4(0.01, 10.0, 5)).unwrap();
        let weighted = |x: &[f64]| x.iter().zip(s.d()).map(|(a, d)| a * d).sum::<f64>();
        let start = weighted(traj.theta(0));
        for i in 0..traj.len() {
            prop_assert!((weighted(traj.theta(i)) - start).abs() < 1e-9);
        }
        let energy = energy_record(&traj);
        prop_assert!(energy.identity_residual() < 1e-3);
        prop_assert!(energy.cumulative_kinetic.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(energy_record(&traj).late_kinetic_increase(0.5) >= 0.0);
    }

    #[test]
    fn adaptive_and_fixed_step_agree((s, theta) in system_and_phases()) {
        let a = integrate(&s, &theta, &IntegratorConfig::rk4(0.001, 2.0, 100)).unwrap();
        let b = integrate(&s, &theta, &IntegratorConfig::rk45(0.1, 2.0, 1e-10, 1e-12)).unwrap();
        for (x, y) in a.final_theta().iter().zip(b.final_theta()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }
}

/// Ensemble checks of the classifier relations that hold for every
/// trajectory: the two speed tests agree when both decide, and a frequency
/// synchronized run under uniform coupling has |Z| at least ω/|λ|.
#[test]
fn classifier_relations_on_random_uniform_networks() {
    let configs: Vec<ExperimentConfig> = (0..30u64)
        .map(|i| {
            let n = 3 + (i % 6) as usize;
            let lambda = 0.5 + 0.1 * i as f64;
            ExperimentConfig::from_json(&format!(
                r#"{{"seed": {}, "n": {n},
                    "omega_spec": {{"kind": "normal", "mean": 0.0, "variance": 0.5, "centered": true}},
                    "coupling_spec": {{"kind": "uniform", "lambda": {lambda}}},
                    "integrator": {{"t_end": 100.0}}}}"#,
                derive_seed(77, i)
            ))
            .unwrap()
        })
        .collect();
    for summary in run_ensemble(&configs, Execution::default()) {
        let s = summary.unwrap();
        let v = &s.verdict;
        if v.fss.is_determinate() && v.pairwise_fss.is_determinate() {
            assert_eq!(v.fss, v.pairwise_fss);
        }
        if v.fss == Flag::True {
            let ratio = s.system_stats.omega_max_abs / s.thresholds.lambda.unwrap().abs();
            assert!(s.r_final >= ratio - 10.0 * s.config.classifier.eps_margin);
        }
    }
}
