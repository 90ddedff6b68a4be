//! Gaussian process regression (posterior mean only).
//!
//! Inputs arrive already standardized. Labels are centred on their training
//! mean, which acts as the prior mean; the dual coefficients solve
//! `(K + noise_var I) alpha = y - mean`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kernel::{sq_dist, GpHyper, Kernel};
use super::linalg::cholesky_with_jitter;
use crate::rng::rng_from;
use crate::{Error, Execution, Result};

/// Length-scale multipliers applied to the median pairwise distance.
pub const LENGTH_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
/// Signal-variance multipliers applied to the label variance.
pub const SIGNAL_GRID: [f64; 3] = [0.1, 1.0, 10.0];
/// Noise-variance multipliers applied to the label variance.
pub const NOISE_GRID: [f64; 3] = [1e-4, 1e-3, 1e-2];
/// Fraction of the data held out when scoring a grid point.
pub const HOLDOUT_FRACTION: f64 = 0.1;
const HOLDOUT_SEED: u64 = 0x6770_5f67_7269_64;
const MEDIAN_SUBSAMPLE: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpState {
    pub inputs: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub label_mean: f64,
}

pub fn kernel_matrix(kernel: Kernel, z: &[Vec<f64>], h: &GpHyper) -> DMatrix<f64> {
    let n = z.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.eval_sq(0.0, h);
        for j in 0..i {
            let v = kernel.eval(&z[i], &z[j], h);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

impl GpState {
    /// Fits with the prior mean set to the label mean.
    pub fn fit(z: &[Vec<f64>], y: &[f64], kernel: Kernel, h: &GpHyper) -> Result<Self> {
        Ok(fit_factored(z, y, kernel, h, None)?.0)
    }

    /// Fits around a fixed constant prior mean; `0.0` gives the textbook
    /// posterior mean `k*' (K + noise I)^-1 y`.
    pub fn fit_with_prior_mean(z: &[Vec<f64>], y: &[f64], kernel: Kernel, h: &GpHyper, mean: f64) -> Result<Self> {
        Ok(fit_factored(z, y, kernel, h, Some(mean))?.0)
    }

    pub fn predict(&self, z: &[f64], kernel: Kernel, h: &GpHyper) -> f64 {
        self.label_mean
            + self
                .inputs
                .iter()
                .zip(&self.alpha)
                .map(|(x, a)| a * kernel.eval(z, x, h))
                .sum::<f64>()
    }
}

fn fit_factored(
    z: &[Vec<f64>],
    y: &[f64],
    kernel: Kernel,
    h: &GpHyper,
    prior_mean: Option<f64>,
) -> Result<(GpState, nalgebra::Cholesky<f64, nalgebra::Dyn>)> {
    if z.is_empty() {
        return Err(Error::Dataset("GP needs at least one training point".into()));
    }
    if !h.is_valid() {
        return Err(Error::Config(format!("invalid GP hyperparameters {h:?}")));
    }
    let label_mean = prior_mean.unwrap_or_else(|| y.iter().sum::<f64>() / y.len() as f64);
    let centred = DVector::from_iterator(y.len(), y.iter().map(|v| v - label_mean));
    let mut k = kernel_matrix(kernel, z, h);
    for i in 0..z.len() {
        k[(i, i)] += h.noise_var;
    }
    let chol = cholesky_with_jitter(k)?;
    let alpha = chol.solve(&centred);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite GP dual coefficients".into()));
    }
    Ok((
        GpState {
            inputs: z.to_vec(),
            alpha: alpha.iter().copied().collect(),
            label_mean,
        },
        chol,
    ))
}

/// Median pairwise Euclidean distance over (a deterministic subsample of) `z`.
pub fn median_pairwise_distance(z: &[Vec<f64>]) -> f64 {
    let stride = z.len().div_ceil(MEDIAN_SUBSAMPLE).max(1);
    let pts: Vec<&Vec<f64>> = z.iter().step_by(stride).collect();
    let mut d: Vec<f64> = Vec::with_capacity(pts.len() * pts.len() / 2);
    for i in 0..pts.len() {
        for j in 0..i {
            d.push(sq_dist(pts[i], pts[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d[d.len() / 2];
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn label_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let v = y.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

/// The full hyperparameter grid for a dataset, in search order.
pub fn hyper_grid(z: &[Vec<f64>], y: &[f64]) -> Vec<GpHyper> {
    let med = median_pairwise_distance(z);
    let var = label_variance(y);
    let mut grid = Vec::with_capacity(LENGTH_GRID.len() * SIGNAL_GRID.len() * NOISE_GRID.len());
    for l in LENGTH_GRID {
        for s in SIGNAL_GRID {
            for n in NOISE_GRID {
                grid.push(GpHyper::new(s * var, l * med, n * var));
            }
        }
    }
    grid
}

/// Held-out predictive means and unit-scale posterior variance reductions
/// for a unit-signal GP with noise ratio `ratio`.
///
/// For `K = s (R + r I)` the posterior mean does not depend on `s`, and the
/// predictive variance is `s (1 - |L^-1 k*|^2 + r)` with `L L^T = R + r I`,
/// so one factorization scores every grid point sharing `(length, r)`.
fn holdout_moments(
    z: &[Vec<f64>],
    y: &[f64],
    fit_idx: &[usize],
    held_idx: &[usize],
    kernel: Kernel,
    unit: &GpHyper,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let zf: Vec<Vec<f64>> = fit_idx.iter().map(|&i| z[i].clone()).collect();
    let yf: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
    let (state, chol) = fit_factored(&zf, &yf, kernel, unit, None)?;
    let mut kstar = DMatrix::<f64>::zeros(zf.len(), held_idx.len());
    for (c, &j) in held_idx.iter().enumerate() {
        for (r, x) in zf.iter().enumerate() {
            kstar[(r, c)] = kernel.eval(&z[j], x, unit);
        }
    }
    let v = chol
        .l()
        .solve_lower_triangular(&kstar)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let alpha = DVector::from_column_slice(&state.alpha);
    let means = (0..held_idx.len())
        .map(|c| state.label_mean + kstar.column(c).dot(&alpha))
        .collect();
    let reductions = (0..held_idx.len()).map(|c| v.column(c).norm_squared()).collect();
    Ok((means, reductions))
}

fn gaussian_log_density(residual: f64, var: f64) -> f64 {
    let var = var.max(1e-12);
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + residual * residual / var)
}

/// Picks the grid point with the highest held-out log predictive density.
/// Ties keep the earliest grid point. Datasets too small to hold out a fold
/// get the grid centre (unit multipliers, middle noise).
pub fn grid_search(z: &[Vec<f64>], y: &[f64], kernel: Kernel, exec: Execution) -> Result<GpHyper> {
    let grid = hyper_grid(z, y);
    let n = z.len();
    let n_held = (HOLDOUT_FRACTION * n as f64).round() as usize;
    if n < 10 || n_held == 0 {
        let med = median_pairwise_distance(z);
        let var = label_variance(y);
        return Ok(GpHyper::new(var, med, NOISE_GRID[1] * var));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(HOLDOUT_SEED ^ n as u64));
    let (held, fit) = idx.split_at(n_held);

    // Grid points sharing a length scale and noise/signal ratio share a fit.
    let mut groups: Vec<(GpHyper, Vec<usize>)> = Vec::new();
    for (i, h) in grid.iter().enumerate() {
        let unit = GpHyper::new(1.0, h.length_scale, h.noise_var / h.signal_var);
        match groups.iter_mut().find(|(u, _)| {
            u.length_scale == unit.length_scale && (u.noise_var / unit.noise_var - 1.0).abs() < 1e-9
        }) {
            Some((_, members)) => members.push(i),
            None => groups.push((unit, vec![i])),
        }
    }
    let moments = exec.map(&groups, |(unit, _)| holdout_moments(z, y, fit, held, kernel, unit));

    let mut scores = vec![None; grid.len()];
    let mut last_err = None;
    for ((unit, members), m) in groups.iter().zip(moments) {
        match m {
            Ok((means, reductions)) => {
                for &i in members {
                    let s = grid[i].signal_var;
                    let ll: f64 = held
                        .iter()
                        .zip(means.iter().zip(&reductions))
                        .map(|(&j, (mu, red))| {
                            let var = s * ((1.0 - red).max(0.0) + unit.noise_var);
                            gaussian_log_density(y[j] - mu, var)
                        })
                        .sum();
                    scores[i] = ll.is_finite().then_some(ll);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if let Some(ll) = s {
            if best.is_none_or(|(_, b)| ll > b) {
                best = Some((i, ll));
            }
        }
    }
    match best {
        Some((i, _)) => Ok(grid[i]),
        None => Err(last_err.unwrap_or_else(|| Error::Numerical("no finite grid score".into()))),
    }
}
