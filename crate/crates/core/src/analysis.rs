//! Finite-horizon synchronization classifiers.
//!
//! Each asymptotic state is judged on trailing-window statistics of a sampled
//! trajectory and reported as a three-valued [`Flag`]. The trailing window is
//! the last `window_fraction` of the time span; the preceding window is the
//! span of equal length just before it and supplies the decay evidence.
//!
//! All classifiers work in the co-rotating frame of the normalized system
//! (`Σ ω_j = 0`), so a trajectory integrated with raw frequencies is first
//! shifted by `θ_j − c t` with `c = Σω / Σd`.

use std::borrow::Cow;
use std::f64::consts::TAU;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::integrator::Trajectory;
use crate::model::OscillatorSystem;

/// Minimum number of samples in the trailing window.
pub const MIN_WINDOW_SAMPLES: usize = 10;

/// A speed this far below `eps_freq` counts as at rest even without decay.
const REST_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub window_fraction: f64,
    pub eps_freq: f64,
    pub eps_drift: f64,
    pub lock_bound: f64,
    pub eps_op: f64,
    pub eps_margin: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            window_fraction: 0.25,
            eps_freq: 1e-4,
            eps_drift: 1e-3,
            lock_bound: 100.0 * TAU,
            eps_op: 1e-3,
            eps_margin: 1e-6,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let all_positive = [
            self.window_fraction,
            self.eps_freq,
            self.eps_drift,
            self.lock_bound,
            self.eps_op,
            self.eps_margin,
        ]
        .iter()
        .all(|x| *x > 0.0 && x.is_finite());
        if !all_positive || self.window_fraction > 1.0 {
            return Err(AnalysisError::Config(
                "all tolerances must be positive and window_fraction in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    True,
    False,
    Indeterminate,
}

impl Flag {
    pub fn is_determinate(self) -> bool {
        self != Flag::Indeterminate
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flag::True => "true",
            Flag::False => "false",
            Flag::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sample index ranges used by every classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Windows {
    pub trailing: Range<usize>,
    pub preceding: Range<usize>,
    pub last_half_start: usize,
}

impl Windows {
    pub fn new(traj: &Trajectory, cfg: &ClassifierConfig) -> Result<Self, AnalysisError> {
        cfg.validate()?;
        let times = traj.times();
        let (t0, t1) = (times[0], times[times.len() - 1]);
        let span = t1 - t0;
        let first_at = |cut: f64| times.partition_point(|&t| t < cut);
        let trailing_start = first_at(t1 - cfg.window_fraction * span);
        let preceding_start = first_at(t1 - 2.0 * cfg.window_fraction * span);
        let trailing = trailing_start..times.len();
        if trailing.len() < MIN_WINDOW_SAMPLES {
            return Err(AnalysisError::WindowTooShort {
                got: trailing.len(),
                need: MIN_WINDOW_SAMPLES,
            });
        }
        Ok(Self {
            trailing,
            preceding: preceding_start..trailing_start,
            last_half_start: first_at(t1 - 0.5 * span),
        })
    }
}

fn max_over(range: Range<usize>, f: impl Fn(usize) -> f64) -> Option<f64> {
    range
        .map(f)
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}

fn corotating(traj: &Trajectory) -> Cow<'_, Trajectory> {
    if traj.system().frame_rate() == 0.0 {
        Cow::Borrowed(traj)
    } else {
        Cow::Owned(traj.to_corotating())
    }
}

/// Outcome of a speed-decay test (absolute or pairwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedTest {
    pub flag: Flag,
    /// Largest speed statistic over the trailing window.
    pub trailing_max: f64,
    /// Same statistic over the preceding window, when it exists.
    pub preceding_max: Option<f64>,
}

fn speed_flag(trailing: f64, preceding: Option<f64>, eps: f64) -> Flag {
    let at_rest = trailing <= REST_FACTOR * eps;
    let decaying = at_rest || preceding.is_some_and(|p| trailing < 0.5 * p);
    let flat = preceding.is_some_and(|p| trailing >= 0.5 * p);
    if trailing < eps && decaying {
        Flag::True
    } else if trailing > 10.0 * eps && flat {
        Flag::False
    } else {
        Flag::Indeterminate
    }
}

fn speed_test(traj: &Trajectory, w: &Windows, eps: f64, stat: impl Fn(&[f64]) -> f64) -> SpeedTest {
    let per_sample = |s| stat(traj.theta_dot(s));
    let trailing_max = max_over(w.trailing.clone(), per_sample).unwrap_or(0.0);
    let preceding_max = max_over(w.preceding.clone(), per_sample);
    SpeedTest {
        flag: speed_flag(trailing_max, preceding_max, eps),
        trailing_max,
        preceding_max,
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max_{j,k} |x_j − x_k|`.
fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// Every `θ̇_j → 0`.
pub fn classify_frequency_sync(
    traj: &Trajectory,
    cfg: &ClassifierConfig,
) -> Result<SpeedTest, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    Ok(speed_test(&traj, &w, cfg.eps_freq, max_abs))
}

/// Every `θ̇_j − θ̇_k → 0`.
pub fn classify_pairwise_freq(
    traj: &Trajectory,
    cfg: &ClassifierConfig,
) -> Result<SpeedTest, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    Ok(speed_test(&traj, &w, 2.0 * cfg.eps_freq, spread))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockTest {
    pub flag: Flag,
    /// Largest pairwise phase difference over the whole run.
    pub max_spread: f64,
    pub trailing_spread: f64,
    pub preceding_spread: Option<f64>,
    /// Largest net change of a pairwise difference over the last half.
    pub last_half_growth: f64,
}

fn lock_test(traj: &Trajectory, w: &Windows, cfg: &ClassifierConfig) -> LockTest {
    let per_sample = |s| spread(traj.theta(s));
    let max_spread = max_over(0..traj.len(), per_sample).unwrap_or(0.0);
    let trailing_spread = max_over(w.trailing.clone(), per_sample).unwrap_or(0.0);
    let preceding_spread = max_over(w.preceding.clone(), per_sample);
    let (mid, end) = (traj.theta(w.last_half_start), traj.final_theta());
    let moved: Vec<f64> = end.iter().zip(mid).map(|(a, b)| a - b).collect();
    let last_half_growth = spread(&moved);

    let flag = if max_spread > cfg.lock_bound || last_half_growth > TAU {
        Flag::False
    } else if preceding_spread.is_some_and(|p| (trailing_spread - p).abs() <= cfg.eps_drift) {
        Flag::True
    } else {
        Flag::Indeterminate
    };
    LockTest {
        flag,
        max_spread,
        trailing_spread,
        preceding_spread,
        last_half_growth,
    }
}

/// All pairwise differences stay bounded.
pub fn classify_phase_locked(
    traj: &Trajectory,
    cfg: &ClassifierConfig,
) -> Result<LockTest, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    Ok(lock_test(&traj, &w, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullLockTest {
    pub flag: Flag,
    /// Largest variation of any pairwise difference over the trailing window.
    pub max_diff_drift: f64,
    /// `max_j |ω_j + (1/N) Σ_k λ_jk sin(θ_k − θ_j)|` at the final sample.
    pub stationary_residual: f64,
    pub lock: LockTest,
}

fn pairwise_drift(traj: &Trajectory, window: Range<usize>) -> f64 {
    let n = traj.n();
    let mut lo = vec![f64::INFINITY; n * n];
    let mut hi = vec![f64::NEG_INFINITY; n * n];
    for s in window {
        let th = traj.theta(s);
        for j in 0..n {
            for k in (j + 1)..n {
                let d = th[j] - th[k];
                let i = j * n + k;
                lo[i] = lo[i].min(d);
                hi[i] = hi[i].max(d);
            }
        }
    }
    lo.iter()
        .zip(&hi)
        .filter(|(l, _)| l.is_finite())
        .fold(0.0, |m, (l, h)| m.max(h - l))
}

fn full_lock_test(
    traj: &Trajectory,
    w: &Windows,
    cfg: &ClassifierConfig,
    lock: LockTest,
) -> FullLockTest {
    let max_diff_drift = pairwise_drift(traj, w.trailing.clone());
    let stationary_residual = traj.system().stationary_residual(traj.final_theta());
    let flag = match lock.flag {
        Flag::False => Flag::False,
        Flag::True
            if max_diff_drift < cfg.eps_drift && stationary_residual < 10.0 * cfg.eps_freq =>
        {
            Flag::True
        }
        _ => Flag::Indeterminate,
    };
    FullLockTest {
        flag,
        max_diff_drift,
        stationary_residual,
        lock,
    }
}

/// Pairwise differences converge to constants and the final configuration
/// solves the stationary equations.
pub fn classify_full_phase_locked(
    traj: &Trajectory,
    cfg: &ClassifierConfig,
) -> Result<FullLockTest, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    let lock = lock_test(&traj, &w, cfg);
    Ok(full_lock_test(&traj, &w, cfg, lock))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpTest {
    pub flag: Flag,
    pub z_final: [f64; 2],
    /// `max |Z(t) − Z(t_end)|` over the trailing window.
    pub z_oscillation: f64,
    /// Same, over the preceding window measured against its own last sample.
    pub preceding_oscillation: Option<f64>,
    /// `(|Z(t_end)|, max over coupled pairs of |ω_j| / |λ_jk|)`.
    pub inequality: [f64; 2],
    /// Coupling is not uniform, so the order-parameter equivalence is not
    /// covered by theory; the flag is reported but not compared.
    pub outside_theorem_scope: bool,
}

fn coupled_ratio(system: &OscillatorSystem) -> f64 {
    let n = system.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let w = system.omega()[j].abs();
        for k in 0..n {
            let l = system.lambda(j, k).abs();
            if j != k && l != 0.0 {
                worst = worst.max(w / l);
            }
        }
    }
    worst
}

fn op_test(traj: &Trajectory, w: &Windows, cfg: &ClassifierConfig) -> OpTest {
    let z = |s: usize| {
        let o = traj.order(s);
        [o.z_re, o.z_im]
    };
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let z_final = z(traj.len() - 1);
    let z_oscillation = max_over(w.trailing.clone(), |s| dist(z(s), z_final)).unwrap_or(0.0);
    let preceding_oscillation = (!w.preceding.is_empty()).then(|| {
        let anchor = z(w.preceding.end - 1);
        max_over(w.preceding.clone(), |s| dist(z(s), anchor)).unwrap_or(0.0)
    });
    let lhs = z_final[0].hypot(z_final[1]);
    let rhs = coupled_ratio(traj.system());
    let fails = lhs < rhs - cfg.eps_margin;
    let persistent = z_oscillation > 10.0 * cfg.eps_op
        && preceding_oscillation.is_some_and(|p| p > 10.0 * cfg.eps_op);
    let flag = if z_oscillation < cfg.eps_op && !fails {
        Flag::True
    } else if persistent || fails {
        Flag::False
    } else {
        Flag::Indeterminate
    };
    OpTest {
        flag,
        z_final,
        z_oscillation,
        preceding_oscillation,
        inequality: [lhs, rhs],
        outside_theorem_scope: traj.system().uniform_coupling().is_none(),
    }
}

/// `Z(t)` converges to `Z*` with `|Z*| ≥ |ω_j| / |λ_jk|` on every coupled pair.
pub fn classify_op_sync(
    traj: &Trajectory,
    cfg: &ClassifierConfig,
) -> Result<OpTest, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    Ok(op_test(&traj, &w, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSyncTest {
    pub flag: Flag,
    pub trailing_spread: f64,
    pub note: Option<String>,
}

const HETEROGENEOUS_NOTE: &str =
    "natural frequencies are not identical; phase synchronization requires identical frequencies";

fn identical_frequencies(system: &OscillatorSystem) -> bool {
    // identical up to the weights: the normalized frequencies all vanish
    system
        .normalize_frequencies()
        .omega()
        .iter()
        .all(|w| w.abs() <= 1e-12)
}

fn phase_sync_test(traj: &Trajectory, w: &Windows, cfg: &ClassifierConfig) -> PhaseSyncTest {
    let per_sample = |s| spread(traj.theta(s));
    let trailing_spread = max_over(w.trailing.clone(), per_sample).unwrap_or(0.0);
    let preceding = max_over(w.preceding.clone(), per_sample);
    let identical = identical_frequencies(traj.system());
    let flag = if trailing_spread < cfg.eps_drift {
        Flag::True
    } else if identical && preceding.is_some_and(|p| trailing_spread < 0.5 * p) {
        Flag::Indeterminate
    } else {
        Flag::False
    };
    PhaseSyncTest {
        flag,
        trailing_spread,
        note: (!identical).then(|| HETEROGENEOUS_NOTE.to_string()),
    }
}

/// All pairwise differences tend to zero.
pub fn classify_phase_sync(
    traj: &Trajectory,
    cfg: &ClassifierConfig,
) -> Result<PhaseSyncTest, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    Ok(phase_sync_test(&traj, &w, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    pub max_final_speed: f64,
    pub max_final_pairwise_speed: f64,
    pub max_diff_spread: f64,
    pub max_diff_drift: f64,
    pub last_half_growth: f64,
    pub z_final: [f64; 2],
    pub z_oscillation: f64,
    pub stationary_residual: f64,
    pub op_inequality_lhs_rhs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncVerdict {
    pub fpls: Flag,
    pub pls: Flag,
    pub fss: Flag,
    pub pairwise_fss: Flag,
    pub opss: Flag,
    pub phase_sync: Flag,
    pub witnesses: Witnesses,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Runs every classifier on one trajectory.
pub fn classify(traj: &Trajectory, cfg: &ClassifierConfig) -> Result<SyncVerdict, AnalysisError> {
    let traj = corotating(traj);
    let w = Windows::new(&traj, cfg)?;
    let fss = speed_test(&traj, &w, cfg.eps_freq, max_abs);
    let pairwise = speed_test(&traj, &w, 2.0 * cfg.eps_freq, spread);
    let lock = lock_test(&traj, &w, cfg);
    let full = full_lock_test(&traj, &w, cfg, lock);
    let op = op_test(&traj, &w, cfg);
    let phase = phase_sync_test(&traj, &w, cfg);
    let mut notes = Vec::new();
    if let Some(note) = &phase.note {
        notes.push(note.clone());
    }
    if op.outside_theorem_scope {
        notes.push("opss: outside-theorem-scope (coupling is not uniform)".to_string());
    }
    Ok(SyncVerdict {
        fpls: full.flag,
        pls: lock.flag,
        fss: fss.flag,
        pairwise_fss: pairwise.flag,
        opss: op.flag,
        phase_sync: phase.flag,
        witnesses: Witnesses {
            max_final_speed: fss.trailing_max,
            max_final_pairwise_speed: pairwise.trailing_max,
            max_diff_spread: lock.max_spread,
            max_diff_drift: full.max_diff_drift,
            last_half_growth: lock.last_half_growth,
            z_final: op.z_final,
            z_oscillation: op.z_oscillation,
            stationary_residual: full.stationary_residual,
            op_inequality_lhs_rhs: op.inequality,
        },
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub compared: Vec<String>,
    /// Pairs of states whose determinate flags differ.
    pub disagreements: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opss_excluded: Option<String>,
}

impl EquivalenceReport {
    pub fn is_consistent(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Reason the order-parameter state cannot be compared, if any: the
/// equivalence covers uniform nonzero coupling with a unique largest `|ω_j|`.
pub fn opss_exclusion(system: &OscillatorSystem) -> Option<String> {
    match system.uniform_coupling() {
        None => return Some("coupling is not uniform".into()),
        Some(0.0) => return Some("coupling is zero".into()),
        _ => {}
    }
    let omega = system.normalize_frequencies();
    let mut mags: Vec<f64> = omega.omega().iter().map(|w| w.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    if mags[0] <= mags[1] {
        return Some("largest |omega| is not unique".into());
    }
    None
}

pub fn equivalence_report(verdict: &SyncVerdict, system: &OscillatorSystem) -> EquivalenceReport {
    let mut states = vec![
        ("fpls", verdict.fpls),
        ("pls", verdict.pls),
        ("fss", verdict.fss),
        ("pairwise_fss", verdict.pairwise_fss),
    ];
    let opss_excluded = opss_exclusion(system);
    if opss_excluded.is_none() {
        states.push(("opss", verdict.opss));
    }
    let mut disagreements = Vec::new();
    for (i, (a, fa)) in states.iter().enumerate() {
        for (b, fb) in &states[i + 1..] {
            if fa.is_determinate() && fb.is_determinate() && fa != fb {
                disagreements.push([a.to_string(), b.to_string()]);
            }
        }
    }
    EquivalenceReport {
        compared: states.iter().map(|(name, _)| name.to_string()).collect(),
        disagreements,
        opss_excluded,
    }
}

/// Terms of the energy identity
/// `∫₀ᵗ Σ d_j θ̇_j² ds = Σ ω_j (θ_j(t) − θ_j(0)) + (1/N) [P(t) − P(0)]`,
/// with `P = Σ_{j<k} λ_jk cos(θ_k − θ_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub times: Vec<f64>,
    /// Integral of the kinetic density (corrected trapezoid rule).
    pub cumulative_kinetic: Vec<f64>,
    pub potential_series: Vec<f64>,
    pub linear_term_series: Vec<f64>,
    pub n: usize,
}

impl EnergyRecord {
    /// Largest relative mismatch of the identity over all samples, scaled by
    /// `1 + |K| + |L| + |ΔP/N|`.
    pub fn identity_residual(&self) -> f64 {
        let p0 = self.potential_series[0];
        let inv_n = 1.0 / self.n as f64;
        self.cumulative_kinetic
            .iter()
            .zip(&self.linear_term_series)
            .zip(&self.potential_series)
            .map(|((k, l), p)| {
                let dp = (p - p0) * inv_n;
                (k - l - dp).abs() / (1.0 + k.abs() + l.abs() + dp.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Increase of the kinetic integral over the last `fraction` of the run.
    pub fn late_kinetic_increase(&self, fraction: f64) -> f64 {
        let t1 = *self.times.last().unwrap();
        let span = t1 - self.times[0];
        let i = self.times.partition_point(|&t| t < t1 - fraction * span);
        self.cumulative_kinetic.last().unwrap() - self.cumulative_kinetic[i]
    }
}

pub fn energy_record(traj: &Trajectory) -> EnergyRecord {
    let system = traj.system();
    let theta0 = traj.theta(0);
    let mut cumulative_kinetic = Vec::with_capacity(traj.len());
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for s in 0..traj.len() {
        let t = traj.times()[s];
        let density = system.kinetic_density(traj.theta_dot(s));
        let rate = system.kinetic_density_rate(traj.theta(s), traj.theta_dot(s));
        if let Some((tp, dp, rp)) = prev {
            // trapezoid with the endpoint-derivative correction; the true
            // increment is never negative
            let h = t - tp;
            acc += (0.5 * h * (density + dp) + h * h / 12.0 * (rp - rate)).max(0.0);
        }
        cumulative_kinetic.push(acc);
        prev = Some((t, density, rate));
    }
    let potential_series = (0..traj.len())
        .map(|s| system.potential_energy(traj.theta(s)))
        .collect();
    let linear_term_series = (0..traj.len())
        .map(|s| {
            traj.theta(s)
                .iter()
                .zip(theta0)
                .zip(system.omega())
                .map(|((th, th0), w)| w * (th - th0))
                .sum()
        })
        .collect();
    EnergyRecord {
        times: traj.times().to_vec(),
        cumulative_kinetic,
        potential_series,
        linear_term_series,
        n: system.n(),
    }
}
