//! Stationary covariance functions on standardized feature vectors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Exponential,
    SquaredExponential,
    #[serde(rename = "matern-5/2")]
    Matern52,
    RationalQuadratic,
}

/// Kernel hyperparameters. `rq_alpha` is only read by the rational quadratic
/// kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub signal_var: f64,
    pub length_scale: f64,
    pub noise_var: f64,
    #[serde(default = "default_rq_alpha")]
    pub rq_alpha: f64,
}

pub const DEFAULT_RQ_ALPHA: f64 = 1.0;

fn default_rq_alpha() -> f64 {
    DEFAULT_RQ_ALPHA
}

impl GpHyper {
    pub fn new(signal_var: f64, length_scale: f64, noise_var: f64) -> Self {
        GpHyper {
            signal_var,
            length_scale,
            noise_var,
            rq_alpha: DEFAULT_RQ_ALPHA,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.signal_var > 0.0
            && self.length_scale > 0.0
            && self.noise_var >= 0.0
            && self.rq_alpha > 0.0
            && self.signal_var.is_finite()
            && self.length_scale.is_finite()
            && self.noise_var.is_finite()
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Kernel {
    /// Covariance as a function of squared distance.
    pub fn eval_sq(self, r2: f64, h: &GpHyper) -> f64 {
        let l = h.length_scale;
        match self {
            Kernel::Exponential => h.signal_var * (-r2.sqrt() / l).exp(),
            Kernel::SquaredExponential => h.signal_var * (-r2 / (2.0 * l * l)).exp(),
            Kernel::Matern52 => {
                let s = 5f64.sqrt() * r2.sqrt() / l;
                h.signal_var * (1.0 + s + 5.0 * r2 / (3.0 * l * l)) * (-s).exp()
            }
            Kernel::RationalQuadratic => {
                let a = h.rq_alpha;
                h.signal_var * (1.0 + r2 / (2.0 * a * l * l)).powf(-a)
            }
        }
    }

    pub fn eval(self, a: &[f64], b: &[f64], h: &GpHyper) -> f64 {
        self.eval_sq(sq_dist(a, b), h)
    }
}
