//! Equilibria of the reduced phase-difference system `f(ψ) = 0`.
//!
//! Roots are found by Newton's method started from every node of a uniform
//! grid on the fundamental cell `[0, 2π)^{n−1}`, then canonicalized modulo 2π
//! and deduplicated in the torus metric. Stability comes from the
//! linearization of the full weighted flow with the rotation mode projected
//! out.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::EquilibriumError;
use crate::model::{angle_difference, wrap_angle, OscillatorSystem};
use crate::par::{self, Execution};

pub const MAX_REDUCED_DIM: usize = 6;
pub const MIN_GRID: usize = 8;
/// Newton stops once the residual drops below this.
pub const NEWTON_TOL: f64 = 1e-12;
pub const DEDUPE_RADIUS: f64 = 1e-6;
/// Eigenvalue real parts within this band are tagged marginal.
pub const MARGINAL_BAND: f64 = 1e-8;
const MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub psi: Vec<f64>,
    pub residual: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub roots: Vec<Equilibrium>,
    pub count: usize,
    /// `C(2n−2, n−1)`, the generic upper bound on isolated real equilibria.
    pub binomial_bound: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReport {
    pub count: usize,
    pub bound: u128,
    pub within_bound: bool,
}

pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn count_vs_bound(set: &EquilibriumSet) -> CountReport {
    CountReport {
        count: set.count,
        bound: set.binomial_bound,
        within_bound: set.count as u128 <= set.binomial_bound,
    }
}

/// Analytic `∂f_j/∂ψ_k` of the reduced system.
pub fn reduced_jacobian(system: &OscillatorSystem, psi: &[f64]) -> DMatrix<f64> {
    let n = system.n();
    let m = n - 1;
    let inv_n = 1.0 / n as f64;
    let phase = |l: usize| if l == m { 0.0 } else { psi[l] };
    DMatrix::from_fn(m, m, |j, k| {
        if j == k {
            let own: f64 = (0..n)
                .filter(|&l| l != j)
                .map(|l| system.lambda(j, l) * (phase(l) - psi[j]).cos())
                .sum();
            -inv_n * own - inv_n * system.lambda(m, j) * psi[j].cos()
        } else {
            inv_n
                * (system.lambda(j, k) * (psi[k] - psi[j]).cos()
                    - system.lambda(m, k) * psi[k].cos())
        }
    })
}

fn residual_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton iteration from `seed`; returns the point and its final residual.
pub fn newton(system: &OscillatorSystem, seed: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mut psi = seed.to_vec();
    let mut f = system.reduced_vector_field(&psi);
    let mut res = residual_norm(&f);
    for _ in 0..MAX_ITER {
        if res <= NEWTON_TOL {
            break;
        }
        let jac = reduced_jacobian(system, &psi);
        let step = jac.lu().solve(&DVector::from_column_slice(&f))?;
        let size = step.amax();
        if !size.is_finite() {
            return None;
        }
        // cap the jump so a near-singular step cannot leave the basin wildly
        let scale = if size > 1.0 { 1.0 / size } else { 1.0 };
        for (p, s) in psi.iter_mut().zip(step.iter()) {
            *p -= scale * s;
        }
        f = system.reduced_vector_field(&psi);
        res = residual_norm(&f);
        if size < 1e-15 {
            break;
        }
    }
    Some((psi, res))
}

/// Maps every coordinate into `[0, 2π)`, snapping values within `1e−9` of 2π
/// to 0.
pub fn canonicalize(psi: &[f64]) -> Vec<f64> {
    psi.iter()
        .map(|&x| {
            let w = wrap_angle(x);
            if TAU - w < 1e-9 {
                0.0
            } else {
                w
            }
        })
        .collect()
}

/// Max-coordinate circular distance between two points of the torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| angle_difference(*x, *y).abs())
        .fold(0.0, f64::max)
}

/// Jacobian of the reduced flow `ψ̇_j = θ̇_j − θ̇_N` at `θ = (ψ, 0)`, i.e. the
/// full flow linearization `J` projected as `A_jk = J_jk − J_Nk`.
pub fn reduced_flow_jacobian(system: &OscillatorSystem, psi: &[f64]) -> DMatrix<f64> {
    let n = system.n();
    let m = n - 1;
    let inv_n = 1.0 / n as f64;
    let phase = |l: usize| if l == m { 0.0 } else { psi[l] };
    let full = DMatrix::from_fn(n, n, |j, k| {
        let d = system.d()[j];
        if j == k {
            let s: f64 = (0..n)
                .filter(|&l| l != j)
                .map(|l| system.lambda(j, l) * (phase(l) - phase(j)).cos())
                .sum();
            -inv_n * s / d
        } else {
            inv_n * system.lambda(j, k) * (phase(k) - phase(j)).cos() / d
        }
    });
    DMatrix::from_fn(m, m, |j, k| full[(j, k)] - full[(m, k)])
}

pub fn stability_tag(system: &OscillatorSystem, root: &[f64]) -> Stability {
    let a = reduced_flow_jacobian(system, root);
    let eig = a.complex_eigenvalues();
    if eig.iter().any(|z| z.re > MARGINAL_BAND) {
        Stability::Unstable
    } else if eig.iter().all(|z| z.re < -MARGINAL_BAND) {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

fn grid_seeds(dim: usize, grid: usize) -> Vec<Vec<f64>> {
    let total = grid.pow(dim as u32);
    let step = TAU / grid as f64;
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; dim];
            for c in p.iter_mut().rev() {
                *c = (idx % grid) as f64 * step;
                idx /= grid;
            }
            p
        })
        .collect()
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Seeds per dimension that keeps the multistart grid near 10⁵ points.
pub fn default_grid(n: usize) -> usize {
    match n {
        0..=4 => 24,
        5 => 12,
        _ => MIN_GRID,
    }
}

/// Multistart Newton over a `grid_per_dim^{n−1}` grid of seeds.
/// Seeds that do not converge to a residual `≤ tol` are dropped.
pub fn find_equilibria(
    system: &OscillatorSystem,
    grid_per_dim: usize,
    tol: f64,
    exec: Execution,
) -> Result<EquilibriumSet, EquilibriumError> {
    let dim = system.n() - 1;
    if dim > MAX_REDUCED_DIM {
        return Err(EquilibriumError::DimensionTooLarge(dim));
    }
    if grid_per_dim < MIN_GRID {
        return Err(EquilibriumError::GridTooCoarse(grid_per_dim));
    }
    let system = system.normalize_frequencies();
    let seeds = grid_seeds(dim, grid_per_dim);
    let mut candidates: Vec<(Vec<f64>, f64)> = par::map(&seeds, exec, |seed| {
        let (psi, _) = newton(&system, seed)?;
        let psi = canonicalize(&psi);
        let res = residual_norm(&system.reduced_vector_field(&psi));
        (res <= tol).then_some((psi, res))
    })
    .into_iter()
    .flatten()
    .collect();
    candidates.sort_by(|a, b| lexicographic(&a.0, &b.0));

    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (psi, res) in candidates {
        match kept
            .iter_mut()
            .find(|(k, _)| torus_distance(k, &psi) < DEDUPE_RADIUS)
        {
            Some(existing) if res < existing.1 => *existing = (psi, res),
            Some(_) => {}
            None => kept.push((psi, res)),
        }
    }
    kept.sort_by(|a, b| lexicographic(&a.0, &b.0));
    let roots: Vec<Equilibrium> = kept
        .into_iter()
        .map(|(psi, residual)| Equilibrium {
            stability: stability_tag(&system, &psi),
            psi,
            residual,
        })
        .collect();
    let n = system.n() as u64;
    Ok(EquilibriumSet {
        count: roots.len(),
        roots,
        binomial_bound: binomial(2 * n - 2, n - 1),
    })
}
