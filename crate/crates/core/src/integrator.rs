//! Time integration of the oscillator flow.
//!
//! Fixed-step classical RK4 is the default. The adaptive method is the
//! Dormand–Prince 5(4) pair with FSAL and a mixed absolute/relative error
//! norm. Phases are never wrapped.

use serde::{Deserialize, Serialize};

use crate::error::IntegrationError;
use crate::model::{order_parameter, OrderParameter, OscillatorSystem};

const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for rk4, initial step for rk45.
    pub dt: f64,
    pub t_end: f64,
    /// Keep every k-th accepted step (the final step is always kept).
    pub sample_every: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 0.01,
            t_end: 200.0,
            sample_every: 10,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_end: f64, sample_every: usize) -> Self {
        Self {
            dt,
            t_end,
            sample_every,
            ..Self::default()
        }
    }

    pub fn rk45(dt: f64, t_end: f64, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            method: Method::Rk45,
            dt,
            t_end,
            sample_every: 1,
            rel_tol,
            abs_tol,
        }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |m: &str| Err(IntegrationError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if self.method == Method::Rk45 && !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol and abs_tol must be positive for rk45");
        }
        Ok(())
    }
}

/// Sampled solution: phases, velocities and order parameter at each kept time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    system: OscillatorSystem,
    times: Vec<f64>,
    thetas: Vec<f64>,
    theta_dots: Vec<f64>,
    order: Vec<OrderParameter>,
    accepted_steps: usize,
    rejected_steps: usize,
}

impl Trajectory {
    /// Assembles a trajectory from sampled phases and velocities (row-major,
    /// one row of n entries per time) and recomputes the order parameter.
    pub fn from_samples(
        system: OscillatorSystem,
        times: Vec<f64>,
        thetas: Vec<f64>,
        theta_dots: Vec<f64>,
    ) -> Result<Self, IntegrationError> {
        let n = system.n();
        if thetas.len() != times.len() * n || theta_dots.len() != times.len() * n {
            return Err(IntegrationError::Config(format!(
                "{} times but {} phase and {} velocity entries for n = {n}",
                times.len(),
                thetas.len(),
                theta_dots.len()
            )));
        }
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IntegrationError::Config(
                "sample times must be nonempty and strictly increasing".into(),
            ));
        }
        let order = thetas.chunks(n).map(order_parameter).collect();
        Ok(Self {
            system,
            times,
            thetas,
            theta_dots,
            order,
            accepted_steps: 0,
            rejected_steps: 0,
        })
    }

    pub fn system(&self) -> &OscillatorSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn theta(&self, sample: usize) -> &[f64] {
        let n = self.n();
        &self.thetas[sample * n..(sample + 1) * n]
    }

    pub fn theta_dot(&self, sample: usize) -> &[f64] {
        let n = self.n();
        &self.theta_dots[sample * n..(sample + 1) * n]
    }

    pub fn order(&self, sample: usize) -> OrderParameter {
        self.order[sample]
    }

    pub fn final_theta(&self) -> &[f64] {
        self.theta(self.len() - 1)
    }

    pub fn final_order(&self) -> OrderParameter {
        self.order[self.len() - 1]
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.order.iter().map(|z| z.r).collect()
    }

    pub fn phi_values(&self) -> Vec<f64> {
        self.order.iter().map(|z| z.phi).collect()
    }

    /// Φ(t) made continuous by removing 2π jumps between consecutive samples,
    /// starting from the principal value at t = 0.
    pub fn phi_unwrapped(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut prev: Option<f64> = None;
        for z in &self.order {
            let next = match prev {
                None => z.phi,
                Some(p) => p + crate::model::angle_difference(z.phi, p),
            };
            out.push(next);
            prev = Some(next);
        }
        out
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted_steps
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected_steps
    }

    /// The same motion seen in the co-rotating frame of the normalized system:
    /// `θ_j − c t`, `θ̇_j − c` with `c = Σω/Σd`.
    pub fn to_corotating(&self) -> Trajectory {
        let rate = self.system.frame_rate();
        if rate == 0.0 {
            return self.clone();
        }
        let n = self.n();
        let mut thetas = self.thetas.clone();
        let mut theta_dots = self.theta_dots.clone();
        for (s, &t) in self.times.iter().enumerate() {
            for j in 0..n {
                thetas[s * n + j] -= rate * t;
                theta_dots[s * n + j] -= rate;
            }
        }
        let order = thetas.chunks(n).map(order_parameter).collect();
        Trajectory {
            system: self.system.normalize_frequencies(),
            times: self.times.clone(),
            thetas,
            theta_dots,
            order,
            accepted_steps: self.accepted_steps,
            rejected_steps: self.rejected_steps,
        }
    }
}

struct Recorder {
    n: usize,
    times: Vec<f64>,
    thetas: Vec<f64>,
    theta_dots: Vec<f64>,
}

impl Recorder {
    fn new(n: usize, capacity: usize) -> Self {
        Self {
            n,
            times: Vec::with_capacity(capacity),
            thetas: Vec::with_capacity(capacity * n),
            theta_dots: Vec::with_capacity(capacity * n),
        }
    }

    fn push(&mut self, system: &OscillatorSystem, t: f64, theta: &[f64]) {
        self.times.push(t);
        self.thetas.extend_from_slice(theta);
        let start = self.theta_dots.len();
        self.theta_dots.resize(start + self.n, 0.0);
        system.vector_field_into(theta, &mut self.theta_dots[start..]);
    }

    fn finish(self, system: &OscillatorSystem, accepted: usize, rejected: usize) -> Trajectory {
        let order = self.thetas.chunks(self.n).map(order_parameter).collect();
        Trajectory {
            system: system.clone(),
            times: self.times,
            thetas: self.thetas,
            theta_dots: self.theta_dots,
            order,
            accepted_steps: accepted,
            rejected_steps: rejected,
        }
    }
}

/// Integrates from `theta0` at t = 0 to `config.t_end`.
pub fn integrate(
    system: &OscillatorSystem,
    theta0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    if theta0.len() != system.n() {
        return Err(IntegrationError::InitialState {
            got: theta0.len(),
            expected: system.n(),
        });
    }
    if theta0.iter().any(|x| !x.is_finite()) {
        return Err(IntegrationError::NonFinite(0.0));
    }
    match config.method {
        Method::Rk4 => integrate_rk4(system, theta0, config),
        Method::Rk45 => integrate_dopri5(system, theta0, config),
    }
}

fn integrate_rk4(
    system: &OscillatorSystem,
    theta0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    let n = system.n();
    let steps = ((config.t_end / config.dt).round() as usize).max(1);
    let h = config.t_end / steps as f64;
    let mut rec = Recorder::new(n, steps / config.sample_every + 2);
    let mut y = theta0.to_vec();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp = vec![0.0; n];
    rec.push(system, 0.0, &y);
    for step in 1..=steps {
        rk4_step(system, &mut y, h, &mut k, &mut tmp);
        let t = if step == steps {
            config.t_end
        } else {
            step as f64 * h
        };
        if y.iter().any(|x| !x.is_finite()) {
            return Err(IntegrationError::NonFinite(t));
        }
        if step % config.sample_every == 0 || step == steps {
            rec.push(system, t, &y);
        }
    }
    Ok(rec.finish(system, steps, 0))
}

fn rk4_step(
    system: &OscillatorSystem,
    y: &mut [f64],
    h: f64,
    k: &mut [Vec<f64>; 4],
    tmp: &mut [f64],
) {
    let [k1, k2, k3, k4] = k;
    system.vector_field_into(y, k1);
    for ((t, y), k) in tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
        *t = y + 0.5 * h * k;
    }
    system.vector_field_into(tmp, k2);
    for ((t, y), k) in tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
        *t = y + 0.5 * h * k;
    }
    system.vector_field_into(tmp, k3);
    for ((t, y), k) in tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
        *t = y + h * k;
    }
    system.vector_field_into(tmp, k4);
    for j in 0..y.len() {
        y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
}

// Dormand–Prince 5(4) tableau; the flow is autonomous so the nodes c_i are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn integrate_dopri5(
    system: &OscillatorSystem,
    theta0: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    let n = system.n();
    let t_end = config.t_end;
    let mut rec = Recorder::new(n, 256);
    let mut y = theta0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    system.vector_field_into(&y, &mut k[0]);
    rec.push(system, 0.0, &y);

    let (mut t, mut h) = (0.0_f64, config.dt.min(t_end));
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_rejected = false;
    loop {
        let remaining = t_end - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        for s in 1..7 {
            for j in 0..n {
                let mut acc = 0.0;
                for (i, a) in A[s][..s].iter().enumerate() {
                    acc += a * k[i][j];
                }
                stage[j] = y[j] + h * acc;
            }
            system.vector_field_into(&stage, &mut k[s]);
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err = 0.0_f64;
        for j in 0..n {
            let mut e = 0.0;
            for (i, c) in E.iter().enumerate() {
                e += c * k[i][j];
            }
            let scale = config.abs_tol + config.rel_tol * y[j].abs().max(y_new[j].abs());
            err = err.max((h * e).abs() / scale);
        }
        if !err.is_finite() || y_new.iter().any(|x| !x.is_finite()) {
            return Err(IntegrationError::NonFinite(t + h));
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            accepted += 1;
            if accepted % config.sample_every == 0 || last {
                rec.push(system, t, &y);
            }
            if last {
                break;
            }
            let mut factor = if err == 0.0 {
                5.0
            } else {
                0.9 * err.powf(-0.2)
            };
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            rejected += 1;
            last_rejected = true;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < MIN_STEP {
            return Err(IntegrationError::StepUnderflow { t, h });
        }
    }
    Ok(rec.finish(system, accepted, rejected))
}

/// Endpoint of an RK4 run with step `dt` (no intermediate samples kept).
fn rk4_endpoint(
    system: &OscillatorSystem,
    theta0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>, IntegrationError> {
    let cfg = IntegratorConfig::rk4(dt, t_end, usize::MAX);
    Ok(integrate(system, theta0, &cfg)?.final_theta().to_vec())
}

/// Empirical convergence order of RK4 from endpoint errors at each step in
/// `dt_list` against a reference run at `min(dt_list)/64`. Errors at roundoff
/// level are dropped; returns `None` when fewer than two usable points remain.
pub fn convergence_order(
    system: &OscillatorSystem,
    theta0: &[f64],
    t_end: f64,
    dt_list: &[f64],
) -> Result<Option<f64>, IntegrationError> {
    let dt_min = dt_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference = rk4_endpoint(system, theta0, t_end, dt_min / 64.0)?;
    let scale = reference.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let mut points = Vec::new();
    for &dt in dt_list {
        let end = rk4_endpoint(system, theta0, t_end, dt)?;
        let err = end
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if err > 1e-10 * scale {
            points.push((dt.ln(), err.ln()));
        }
    }
    if points.len() < 2 {
        return Ok(None);
    }
    // least-squares slope of log(err) against log(dt)
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(Some(sxy / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_6;

    fn pair(lambda: f64) -> OscillatorSystem {
        OscillatorSystem::uniform(vec![1.0, 1.0], vec![0.5, -0.5], lambda).unwrap()
    }

    #[test]
    fn linear_drift_is_exact() {
        let s = OscillatorSystem::uniform(vec![1.0, 1.0], vec![1.0, -1.0], 0.0).unwrap();
        for cfg in [
            IntegratorConfig::rk4(0.01, 1.0, 10),
            IntegratorConfig::rk45(0.1, 1.0, 1e-10, 1e-12),
        ] {
            let tr = integrate(&s, &[0.0, 0.0], &cfg).unwrap();
            assert_eq!(*tr.times().last().unwrap(), 1.0);
            assert_abs_diff_eq!(tr.final_theta()[0], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(tr.final_theta()[1], -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn pair_locks_at_stable_root() {
        for cfg in [
            IntegratorConfig::rk4(0.01, 50.0, 10),
            IntegratorConfig::rk45(0.05, 50.0, 1e-10, 1e-12),
        ] {
            let tr = integrate(&pair(2.0), &[0.0, 0.0], &cfg).unwrap();
            let th = tr.final_theta();
            assert_abs_diff_eq!(th[0] - th[1], FRAC_PI_6, epsilon = 1e-6);
        }
    }

    #[test]
    fn samples_and_derivatives() {
        let s = pair(0.5);
        let tr = integrate(&s, &[0.3, -1.0], &IntegratorConfig::rk4(0.01, 10.0, 7)).unwrap();
        assert_eq!(tr.times()[0], 0.0);
        assert_eq!(*tr.times().last().unwrap(), 10.0);
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
        for i in 0..tr.len() {
            assert_eq!(tr.theta_dot(i), s.vector_field(tr.theta(i)).as_slice());
            assert_eq!(tr.order(i), order_parameter(tr.theta(i)));
        }
    }

    #[test]
    fn rk4_order_near_four() {
        let p = convergence_order(&pair(0.5), &[0.0, 0.0], 5.0, &[0.2, 0.1, 0.05, 0.025])
            .unwrap()
            .unwrap();
        assert!((3.8..=4.2).contains(&p), "order {p}");
        let flat = OscillatorSystem::uniform(vec![1.0, 1.0], vec![1.0, -1.0], 0.0).unwrap();
        let p = convergence_order(&flat, &[0.0, 0.0], 5.0, &[0.2, 0.1, 0.05]).unwrap();
        assert!(p.is_none());
    }

    #[test]
    fn rk45_meets_tolerance_against_tight_reference() {
        let s = pair(0.5);
        let reference = integrate(
            &s,
            &[0.0, 0.0],
            &IntegratorConfig::rk4(1e-4, 5.0, usize::MAX),
        )
        .unwrap();
        let tr = integrate(
            &s,
            &[0.0, 0.0],
            &IntegratorConfig::rk45(0.1, 5.0, 1e-8, 1e-10),
        )
        .unwrap();
        for (a, b) in tr.final_theta().iter().zip(reference.final_theta()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!(tr.accepted_steps() > 5);
    }

    #[test]
    fn step_halving_shrinks_error() {
        let s = pair(0.5);
        let reference = rk4_endpoint(&s, &[0.0, 0.0], 5.0, 0.1 / 64.0).unwrap();
        let e = |dt| {
            let end = rk4_endpoint(&s, &[0.0, 0.0], 5.0, dt).unwrap();
            (end[0] - reference[0])
                .abs()
                .max((end[1] - reference[1]).abs())
        };
        assert!(e(0.2) / e(0.1) >= 12.0);
    }

    #[test]
    fn deterministic() {
        let s = pair(1.3);
        let cfg = IntegratorConfig::rk45(0.01, 20.0, 1e-9, 1e-11);
        assert_eq!(
            integrate(&s, &[0.1, 2.0], &cfg).unwrap(),
            integrate(&s, &[0.1, 2.0], &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        let s = pair(1.0);
        assert!(matches!(
            integrate(&s, &[0.0], &IntegratorConfig::default()),
            Err(IntegrationError::InitialState { .. })
        ));
        let bad = IntegratorConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&s, &[0.0, 0.0], &bad),
            Err(IntegrationError::Config(_))
        ));
        assert!(matches!(
            integrate(&s, &[f64::NAN, 0.0], &IntegratorConfig::default()),
            Err(IntegrationError::NonFinite(_))
        ));
        let tiny = IntegratorConfig::rk45(1e-3, 1.0, 1e-300, 1e-300);
        assert!(matches!(
            integrate(&s, &[0.0, 1.0], &tiny),
            Err(IntegrationError::StepUnderflow { .. })
        ));
    }

    #[test]
    fn corotating_frame_removes_drift() {
        let s = OscillatorSystem::uniform(vec![1.0, 1.0], vec![1.0, 1.0], 0.0).unwrap();
        let tr = integrate(&s, &[0.0, 0.5], &IntegratorConfig::rk4(0.01, 3.0, 10)).unwrap();
        let co = tr.to_corotating();
        assert_eq!(co.system().omega(), &[0.0, 0.0]);
        assert_abs_diff_eq!(co.final_theta()[1], 0.5, epsilon = 1e-12);
        assert!(co.theta_dot(5).iter().all(|v| v.abs() < 1e-12));
    }
}
