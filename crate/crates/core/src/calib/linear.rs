use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::solve_spd;
use crate::Result;

/// Ordinary least squares on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearState {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearState {
    /// Normal equations `[Z 1]^T [Z 1] beta = [Z 1]^T y`.
    pub fn fit(z: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let d = z[0].len();
        let p = d + 1;
        let mut ata = DMatrix::<f64>::zeros(p, p);
        let mut aty = vec![0.0; p];
        let mut row = vec![0.0; p];
        for (x, &t) in z.iter().zip(y) {
            row[..d].copy_from_slice(x);
            row[d] = 1.0;
            for i in 0..p {
                aty[i] += row[i] * t;
                for j in 0..=i {
                    ata[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                ata[(j, i)] = ata[(i, j)];
            }
        }
        let beta = solve_spd(ata, &aty)?;
        Ok(LinearState {
            weights: beta[..d].to_vec(),
            intercept: beta[d],
        })
    }

    pub fn predict(&self, z: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()
    }
}
