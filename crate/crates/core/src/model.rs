//! Oscillator system definition and the pure quantities derived from it:
//! vector field, order parameter, frequency normalization, the reduced
//! phase-difference system and the energy terms.
//!
//! The governing equation is
//!
//! ```text
//! d_j θ̇_j = ω_j + (1/N) Σ_k λ_jk sin(θ_k − θ_j),   j = 1..N
//! ```
//!
//! with `d_j > 0` and `Λ = (λ_jk)` symmetric with zero diagonal.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Magnitude below which the order-parameter angle is reported as 0.
pub const R_INDETERMINATE: f64 = 1e-12;

/// Parameters `(d, ω, Λ)` of a generalized first-order Kuramoto network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemFile", into = "SystemFile")]
pub struct OscillatorSystem {
    d: Vec<f64>,
    omega: Vec<f64>,
    coupling: DMatrix<f64>,
    uniform: Option<f64>,
}

impl OscillatorSystem {
    pub fn new(d: Vec<f64>, omega: Vec<f64>, coupling: DMatrix<f64>) -> Result<Self, ModelError> {
        validate_parts(&d, &omega, &coupling)?;
        let uniform = detect_uniform(&coupling);
        Ok(Self {
            d,
            omega,
            coupling,
            uniform,
        })
    }

    /// Builds a system from a row-major nested coupling matrix.
    pub fn from_rows(d: Vec<f64>, omega: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = omega.len();
        if rows.len() != n {
            return Err(ModelError::SizeMismatch {
                what: "coupling",
                got: rows.len(),
                expected: n,
            });
        }
        for row in rows {
            if row.len() != n {
                return Err(ModelError::SizeMismatch {
                    what: "coupling row",
                    got: row.len(),
                    expected: n,
                });
            }
        }
        let coupling = DMatrix::from_fn(n, n, |j, k| rows[j][k]);
        Self::new(d, omega, coupling)
    }

    /// All-to-all coupling `λ_jk = lambda` for `j != k`.
    pub fn uniform(d: Vec<f64>, omega: Vec<f64>, lambda: f64) -> Result<Self, ModelError> {
        let n = omega.len();
        let coupling = DMatrix::from_fn(n, n, |j, k| if j == k { 0.0 } else { lambda });
        Self::new(d, omega, coupling)
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn lambda(&self, j: usize, k: usize) -> f64 {
        self.coupling[(j, k)]
    }

    /// `Some(λ)` when every off-diagonal entry equals `λ`.
    pub fn uniform_coupling(&self) -> Option<f64> {
        self.uniform
    }

    /// Co-rotating frame rate `Σω / Σd`.
    pub fn frame_rate(&self) -> f64 {
        let sum_d: f64 = self.d.iter().sum();
        self.omega.iter().sum::<f64>() / sum_d
    }

    /// Returns a copy with `ω_j` replaced by `ω_j − (Σω/Σd)·d_j`. When every
    /// `ω_j / d_j` is the same the result is exactly zero.
    pub fn normalize_frequencies(&self) -> Self {
        let rate = self.frame_rate();
        let first = self.omega[0] / self.d[0];
        let identical = self.omega.iter().zip(&self.d).all(|(w, d)| w / d == first);
        let omega = self
            .omega
            .iter()
            .zip(&self.d)
            .map(|(w, d)| if identical { 0.0 } else { w - rate * d })
            .collect();
        Self {
            omega,
            ..self.clone()
        }
    }

    /// Same network with a different natural-frequency vector.
    pub fn with_omega(&self, omega: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(self.d.clone(), omega, self.coupling.clone())
    }

    /// Same network with uniform coupling `lambda`.
    pub fn with_uniform_coupling(&self, lambda: f64) -> Result<Self, ModelError> {
        Self::uniform(self.d.clone(), self.omega.clone(), lambda)
    }

    /// `Σ|ω| + Σ|λ|`, the scale used for roundoff tolerances.
    pub fn parameter_scale(&self) -> f64 {
        self.omega.iter().map(|w| w.abs()).sum::<f64>()
            + self.coupling.iter().map(|l| l.abs()).sum::<f64>()
    }

    /// Coupling sums `Σ_k λ_jk sin(θ_k − θ_j)` for every j, via
    /// `cos θ_j (Λ sin θ)_j − sin θ_j (Λ cos θ)_j`.
    fn coupling_sums(&self, theta: &[f64], out: &mut [f64]) {
        let n = self.n();
        let sc: Vec<(f64, f64)> = theta.iter().map(|t| t.sin_cos()).collect();
        match self.uniform {
            Some(lambda) => {
                let (s_tot, c_tot) = sc.iter().fold((0.0, 0.0), |(a, b), (s, c)| (a + s, b + c));
                for (o, &(s, c)) in out.iter_mut().zip(&sc) {
                    *o = lambda * (c * (s_tot - s) - s * (c_tot - c));
                }
            }
            None => {
                for j in 0..n {
                    // symmetric: column j is row j
                    let col = self.coupling.column(j);
                    let (mut ls, mut lc) = (0.0, 0.0);
                    for (l, (s, c)) in col.iter().zip(&sc) {
                        ls += l * s;
                        lc += l * c;
                    }
                    let (s, c) = sc[j];
                    out[j] = c * ls - s * lc;
                }
            }
        }
    }

    /// Writes `θ̇` into `out`.
    pub fn vector_field_into(&self, theta: &[f64], out: &mut [f64]) {
        debug_assert_eq!(theta.len(), self.n());
        self.coupling_sums(theta, out);
        let inv_n = 1.0 / self.n() as f64;
        for ((o, w), d) in out.iter_mut().zip(&self.omega).zip(&self.d) {
            *o = (w + inv_n * *o) / d;
        }
    }

    /// `θ̇_j = (1/d_j)[ω_j + (1/N) Σ_k λ_jk sin(θ_k − θ_j)]`.
    pub fn vector_field(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.vector_field_into(theta, &mut out);
        out
    }

    /// `max_j |ω_j + (1/N) Σ_k λ_jk sin(θ_k − θ_j)|`, zero at equilibria.
    pub fn stationary_residual(&self, theta: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n()];
        self.coupling_sums(theta, &mut out);
        let inv_n = 1.0 / self.n() as f64;
        out.iter()
            .zip(&self.omega)
            .map(|(c, w)| (w + inv_n * c).abs())
            .fold(0.0, f64::max)
    }

    /// Per-oscillator speed bound `|ω_j/d_j| + (1/(N d_j)) Σ_k |λ_jk|`.
    pub fn velocity_bound(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.n())
            .map(|j| {
                let row: f64 = self.coupling.column(j).iter().map(|l| l.abs()).sum();
                (self.omega[j] / self.d[j]).abs() + row / (n * self.d[j])
            })
            .collect()
    }

    /// `Σ_{j<k} λ_jk cos(θ_k − θ_j)`.
    pub fn potential_energy(&self, theta: &[f64]) -> f64 {
        let sc: Vec<(f64, f64)> = theta.iter().map(|t| t.sin_cos()).collect();
        let mut acc = 0.0;
        for j in 0..self.n() {
            let col = self.coupling.column(j);
            let (sj, cj) = sc[j];
            for k in (j + 1)..self.n() {
                let (sk, ck) = sc[k];
                acc += col[k] * (cj * ck + sj * sk);
            }
        }
        acc
    }

    /// `Σ_j d_j θ̇_j²`.
    pub fn kinetic_density(&self, theta_dot: &[f64]) -> f64 {
        self.d.iter().zip(theta_dot).map(|(d, v)| d * v * v).sum()
    }

    /// Time derivative of the kinetic density along the flow,
    /// `−(2/N) Σ_{j<k} λ_jk cos(θ_k − θ_j) (θ̇_k − θ̇_j)²`.
    pub fn kinetic_density_rate(&self, theta: &[f64], theta_dot: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n() {
            let col = self.coupling.column(j);
            for k in (j + 1)..self.n() {
                let dv = theta_dot[k] - theta_dot[j];
                acc += col[k] * (theta[k] - theta[j]).cos() * dv * dv;
            }
        }
        -2.0 * acc / self.n() as f64
    }

    /// Reduced system `f_j(ψ)`, `j = 1..N−1`, with oscillator N as reference
    /// (`ψ_N ≡ 0`).
    pub fn reduced_vector_field(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(psi.len(), n - 1);
        let inv_n = 1.0 / n as f64;
        let last = n - 1;
        let phase = |l: usize| if l == last { 0.0 } else { psi[l] };
        let reference: f64 = (0..last)
            .map(|l| self.coupling[(last, l)] * psi[l].sin())
            .sum::<f64>()
            * inv_n;
        (0..last)
            .map(|j| {
                let pull: f64 = (0..n)
                    .map(|l| self.coupling[(j, l)] * (phase(l) - psi[j]).sin())
                    .sum();
                self.omega[j] - self.omega[last] + inv_n * pull - reference
            })
            .collect()
    }
}

fn detect_uniform(coupling: &DMatrix<f64>) -> Option<f64> {
    let n = coupling.nrows();
    let first = coupling[(0, 1)];
    for j in 0..n {
        for k in 0..n {
            if j != k && coupling[(j, k)] != first {
                return None;
            }
        }
    }
    Some(first)
}

/// Checks every invariant of an oscillator system and reports the first
/// violation.
pub fn validate_parts(d: &[f64], omega: &[f64], coupling: &DMatrix<f64>) -> Result<(), ModelError> {
    let n = omega.len();
    if n < 2 {
        return Err(ModelError::TooFewOscillators(n));
    }
    if d.len() != n {
        return Err(ModelError::SizeMismatch {
            what: "d",
            got: d.len(),
            expected: n,
        });
    }
    if coupling.nrows() != n || coupling.ncols() != n {
        return Err(ModelError::SizeMismatch {
            what: "coupling",
            got: coupling.nrows().max(coupling.ncols()),
            expected: n,
        });
    }
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::NonFinite("omega"));
    }
    if d.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::NonFinite("d"));
    }
    if coupling.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::NonFinite("coupling"));
    }
    if let Some(j) = d.iter().position(|&x| x <= 0.0) {
        return Err(ModelError::NonPositiveWeight(j + 1));
    }
    for j in 0..n {
        if coupling[(j, j)] != 0.0 {
            return Err(ModelError::NonzeroDiagonal(j + 1));
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let (a, b) = (coupling[(j, k)], coupling[(k, j)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(ModelError::Asymmetric(j + 1, k + 1));
            }
        }
    }
    Ok(())
}

pub fn validate(system: &OscillatorSystem) -> Result<(), ModelError> {
    validate_parts(&system.d, &system.omega, &system.coupling)
}

/// Complex order parameter `Z = R e^{iΦ} = (1/N) Σ e^{iθ_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    pub r: f64,
    /// Principal argument in `[0, 2π)`; 0 when `r` is below [`R_INDETERMINATE`].
    pub phi: f64,
    pub z_re: f64,
    pub z_im: f64,
}

impl OrderParameter {
    pub fn angle_indeterminate(&self) -> bool {
        self.r < R_INDETERMINATE
    }
}

pub fn order_parameter(theta: &[f64]) -> OrderParameter {
    assert!(
        !theta.is_empty(),
        "order parameter of an empty phase vector"
    );
    let inv_n = 1.0 / theta.len() as f64;
    let (re, im) = theta.iter().fold((0.0, 0.0), |(re, im), t| {
        let (s, c) = t.sin_cos();
        (re + c, im + s)
    });
    let (z_re, z_im) = (re * inv_n, im * inv_n);
    let r = z_re.hypot(z_im);
    let phi = if r < R_INDETERMINATE {
        0.0
    } else {
        wrap_angle(z_im.atan2(z_re))
    };
    OrderParameter { r, phi, z_re, z_im }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed circular distance between two angles, in `(−π, π]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Phase differences `ψ_j = θ_j − θ_N`, unwrapped.
pub fn reduce_phases(theta: &[f64]) -> Vec<f64> {
    let last = *theta.last().expect("empty phase vector");
    theta[..theta.len() - 1].iter().map(|t| t - last).collect()
}

/// On-disk form of a system: `{"n", "d", "omega", "coupling"}` with a dense
/// row-major coupling matrix (nested rows or one flat array of n² entries).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub d: Vec<f64>,
    pub omega: Vec<f64>,
    pub coupling: CouplingRows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingRows {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl TryFrom<SystemFile> for OscillatorSystem {
    type Error = ModelError;

    fn try_from(file: SystemFile) -> Result<Self, ModelError> {
        if file.omega.len() != file.n {
            return Err(ModelError::SizeMismatch {
                what: "omega",
                got: file.omega.len(),
                expected: file.n,
            });
        }
        let rows = match file.coupling {
            CouplingRows::Nested(rows) => rows,
            CouplingRows::Flat(flat) => {
                if flat.len() != file.n * file.n {
                    return Err(ModelError::SizeMismatch {
                        what: "coupling",
                        got: flat.len(),
                        expected: file.n * file.n,
                    });
                }
                flat.chunks(file.n.max(1)).map(<[f64]>::to_vec).collect()
            }
        };
        OscillatorSystem::from_rows(file.d, file.omega, &rows)
    }
}

impl From<OscillatorSystem> for SystemFile {
    fn from(system: OscillatorSystem) -> Self {
        let n = system.n();
        let rows = (0..n)
            .map(|j| (0..n).map(|k| system.coupling[(j, k)]).collect())
            .collect();
        SystemFile {
            n,
            d: system.d,
            omega: system.omega,
            coupling: CouplingRows::Nested(rows),
        }
    }
}
