use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::CalibrationDataset;
use super::gp::{grid_search, GpState};
use super::kernel::{GpHyper, Kernel};
use super::linear::LinearState;
use super::tree::{TreeParams, TreeState};
use crate::signal::SpectrumFeatures;
use crate::{Error, Execution, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "linear-least-squares")]
    Linear,
    #[serde(rename = "regression-tree")]
    Tree,
    #[serde(rename = "gp-rational-quadratic")]
    GpRationalQuadratic,
    #[serde(rename = "gp-squared-exponential")]
    GpSquaredExponential,
    #[serde(rename = "gp-matern-5/2")]
    GpMatern52,
    #[serde(rename = "gp-exponential")]
    GpExponential,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Linear,
        ModelKind::Tree,
        ModelKind::GpRationalQuadratic,
        ModelKind::GpSquaredExponential,
        ModelKind::GpMatern52,
        ModelKind::GpExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear-least-squares",
            ModelKind::Tree => "regression-tree",
            ModelKind::GpRationalQuadratic => "gp-rational-quadratic",
            ModelKind::GpSquaredExponential => "gp-squared-exponential",
            ModelKind::GpMatern52 => "gp-matern-5/2",
            ModelKind::GpExponential => "gp-exponential",
        }
    }

    pub fn kernel(self) -> Option<Kernel> {
        match self {
            ModelKind::GpRationalQuadratic => Some(Kernel::RationalQuadratic),
            ModelKind::GpSquaredExponential => Some(Kernel::SquaredExponential),
            ModelKind::GpMatern52 => Some(Kernel::Matern52),
            ModelKind::GpExponential => Some(Kernel::Exponential),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    /// Accepts the canonical names plus the short aliases `linear`, `tree`,
    /// `rq`, `se`, `matern` and `exponential`.
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim() {
            "linear" | "linear-least-squares" => ModelKind::Linear,
            "tree" | "regression-tree" => ModelKind::Tree,
            "rq" | "gp-rational-quadratic" => ModelKind::GpRationalQuadratic,
            "se" | "gp-squared-exponential" => ModelKind::GpSquaredExponential,
            "matern" | "gp-matern-5/2" | "gp-matern52" => ModelKind::GpMatern52,
            "exponential" | "gp-exponential" => ModelKind::GpExponential,
            other => return Err(Error::Config(format!("unknown model kind `{other}`"))),
        };
        Ok(kind)
    }
}

/// A model family plus its hyperparameters. A GP spec without `gp` gets its
/// hyperparameters from [`grid_search`] at training time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp: Option<GpHyper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeParams>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            gp: None,
            tree: kind.eq(&ModelKind::Tree).then(TreeParams::default),
        }
    }

    pub fn linear() -> Self {
        ModelSpec::new(ModelKind::Linear)
    }

    pub fn tree(params: TreeParams) -> Self {
        ModelSpec {
            kind: ModelKind::Tree,
            gp: None,
            tree: Some(params),
        }
    }

    pub fn gp_fixed(kind: ModelKind, hyper: GpHyper) -> Self {
        ModelSpec {
            kind,
            gp: Some(hyper),
            tree: None,
        }
    }

    /// The six families in ranking order.
    pub fn zoo() -> Vec<ModelSpec> {
        ModelKind::ALL.iter().map(|&k| ModelSpec::new(k)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Linear => Ok(()),
            ModelKind::Tree => match self.tree {
                Some(t) if t.max_depth >= 1 && t.min_leaf >= 1 => Ok(()),
                Some(_) => Err(Error::Config("tree needs max_depth >= 1, min_leaf >= 1".into())),
                None => Ok(()),
            },
            _ => match self.gp {
                Some(h) if !h.is_valid() => Err(Error::Config(format!("invalid GP hyperparameters {h:?}"))),
                _ => Ok(()),
            },
        }
    }

    /// Whether training will run a hyperparameter search.
    pub fn needs_search(&self) -> bool {
        self.kind.kernel().is_some() && self.gp.is_none()
    }
}

/// Per-band affine map to zero mean / unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &[&[f64]]) -> Self {
        let n = x.len() as f64;
        let d = x[0].len();
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * (1.0 + sd) && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelState {
    Linear(LinearState),
    Tree(TreeState),
    Gp(GpState),
}

/// A trained, immutable predictor. The stored spec always carries resolved
/// hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub spec: ModelSpec,
    pub standardization: Standardization,
    pub state: ModelState,
}

pub fn train_model(train: &CalibrationDataset, spec: &ModelSpec) -> Result<RegressionModel> {
    train_model_with(train, spec, Execution::default())
}

pub fn train_model_with(train: &CalibrationDataset, spec: &ModelSpec, exec: Execution) -> Result<RegressionModel> {
    if train.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    spec.validate()?;
    let x = train.inputs();
    let y = train.labels();
    let standardization = Standardization::fit(&x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardization.apply(r)).collect();
    let mut resolved = *spec;
    let state = match spec.kind {
        ModelKind::Linear => ModelState::Linear(LinearState::fit(&z, &y)?),
        ModelKind::Tree => {
            let params = spec.tree.unwrap_or_default();
            resolved.tree = Some(params);
            ModelState::Tree(TreeState::fit(&z, &y, params))
        }
        kind => {
            let kernel = kind.kernel().expect("GP kinds carry a kernel");
            let hyper = match spec.gp {
                Some(h) => h,
                None => grid_search(&z, &y, kernel, exec)?,
            };
            resolved.gp = Some(hyper);
            ModelState::Gp(GpState::fit(&z, &y, kernel, &hyper)?)
        }
    };
    Ok(RegressionModel {
        spec: resolved,
        standardization,
        state,
    })
}

impl RegressionModel {
    pub fn dim(&self) -> usize {
        self.standardization.dim()
    }

    /// Prediction before clamping; exposed for oracle comparisons.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let z = self.standardization.apply(x);
        Ok(match &self.state {
            ModelState::Linear(s) => s.predict(&z),
            ModelState::Tree(s) => s.predict(&z),
            ModelState::Gp(s) => {
                let kernel = self.spec.kind.kernel().expect("GP state implies GP kind");
                let hyper = self.spec.gp.expect("trained GP has resolved hyperparameters");
                s.predict(&z, kernel, &hyper)
            }
        })
    }

    /// Linear weights and intercept mapped back to raw feature units.
    pub fn linear_coefficients(&self) -> Option<(Vec<f64>, f64)> {
        let ModelState::Linear(s) = &self.state else {
            return None;
        };
        let st = &self.standardization;
        let w: Vec<f64> = s.weights.iter().zip(&st.scale).map(|(b, sd)| b / sd).collect();
        let b = s.intercept - w.iter().zip(&st.mean).map(|(w, m)| w * m).sum::<f64>();
        Some((w, b))
    }
}

/// Force estimate in newtons, clamped at zero.
pub fn predict(model: &RegressionModel, features: &SpectrumFeatures) -> Result<f64> {
    Ok(model.predict_raw(features.as_slice())?.max(0.0))
}
