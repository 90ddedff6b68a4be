//! Workbench configuration: one flat `key = value` file covering every
//! simulator, protocol, model-selection, controller and trial parameter.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Missing keys keep their defaults.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::calib::{ModelKind, SweepProtocol};
use crate::grip::ControllerConfig;
use crate::signal::SignalConfig;
use crate::skin::{AttenuationModel, ContactModel, SkinGeometry, SkinSim};
use crate::trial::{SlipParams, TrialConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WorkbenchConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub geometry: SkinGeometry,
    pub contact: ContactModel,
    pub attenuation: AttenuationModel,
    pub signal: SignalConfig,
    pub protocol: SweepProtocol,
    pub train_fraction: f64,
    pub cv_folds: usize,
    pub models: Vec<ModelKind>,
    pub controller: ControllerConfig,
    pub trial: TrialConfig,
    pub trials_per_sample: usize,
    pub slip: SlipParams,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            geometry: SkinGeometry::default(),
            contact: ContactModel::default(),
            attenuation: AttenuationModel::default(),
            signal: SignalConfig::default(),
            protocol: SweepProtocol::default(),
            train_fraction: 0.9,
            cv_folds: 10,
            models: ModelKind::ALL.to_vec(),
            controller: ControllerConfig::default(),
            trial: TrialConfig::default(),
            trials_per_sample: 5,
            slip: SlipParams::default(),
        }
    }
}

/// Every key the file format accepts.
pub const KEYS: &[&str] = &[
    "seed",
    "out_dir",
    "channel_diameter",
    "cover_thickness",
    "calibrated_length",
    "n_subsections",
    "subsection_gap",
    "c1",
    "c2",
    "max_force",
    "alpha0",
    "alpha1",
    "noise_sigma",
    "sample_rate",
    "frame_len",
    "tone_freqs",
    "tone_amp",
    "depth_step",
    "force_stop",
    "repeats",
    "depth_jitter",
    "train_fraction",
    "cv_folds",
    "models",
    "f_d",
    "epsilon",
    "sigma_h",
    "g_min",
    "g_max",
    "f_abort",
    "tick",
    "initial_width",
    "compliance",
    "transport_duration",
    "swing_amp",
    "swing_freq",
    "trials_per_sample",
    "mu",
    "safety_factor",
    "a_max",
];

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse value {raw:?}")))
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    let items = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(key, s))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("key `{key}`: empty list")));
    }
    Ok(items)
}

/// Parses a comma-separated model list such as `linear,gp-exponential`.
pub fn parse_models(raw: &str) -> Result<Vec<ModelKind>> {
    list("models", raw)
}

impl WorkbenchConfig {
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let raw = raw.trim();
        match key {
            "seed" => self.seed = value(key, raw)?,
            "out_dir" => self.out_dir = PathBuf::from(raw),
            "channel_diameter" => self.geometry.channel_diameter = value(key, raw)?,
            "cover_thickness" => self.geometry.cover_thickness = value(key, raw)?,
            "calibrated_length" => self.geometry.calibrated_length = value(key, raw)?,
            "n_subsections" => self.geometry.n_subsections = value(key, raw)?,
            "subsection_gap" => self.geometry.subsection_gap = value(key, raw)?,
            "c1" => self.contact.c1 = value(key, raw)?,
            "c2" => self.contact.c2 = value(key, raw)?,
            "max_force" => self.contact.max_force = value(key, raw)?,
            "alpha0" => self.attenuation.alpha0 = value(key, raw)?,
            "alpha1" => self.attenuation.alpha1 = value(key, raw)?,
            "noise_sigma" => self.attenuation.noise_sigma = value(key, raw)?,
            "sample_rate" => self.signal.sample_rate = value(key, raw)?,
            "frame_len" => self.signal.frame_len = value(key, raw)?,
            "tone_freqs" => self.signal.tone_freqs = list(key, raw)?,
            "tone_amp" => self.signal.tone_amp = value(key, raw)?,
            "depth_step" => self.protocol.depth_step = value(key, raw)?,
            "force_stop" => self.protocol.force_stop = value(key, raw)?,
            "repeats" => self.protocol.repeats = value(key, raw)?,
            "depth_jitter" => self.protocol.depth_jitter = value(key, raw)?,
            "train_fraction" => self.train_fraction = value(key, raw)?,
            "cv_folds" => self.cv_folds = value(key, raw)?,
            "models" => self.models = list(key, raw)?,
            "f_d" => self.controller.f_d = value(key, raw)?,
            "epsilon" => self.controller.epsilon = value(key, raw)?,
            "sigma_h" => self.controller.sigma_h = value(key, raw)?,
            "g_min" => self.controller.g_min = value(key, raw)?,
            "g_max" => self.controller.g_max = value(key, raw)?,
            "f_abort" => self.controller.f_abort = value(key, raw)?,
            "tick" => self.trial.tick = value(key, raw)?,
            "initial_width" => self.trial.initial_width = value(key, raw)?,
            "compliance" => self.trial.compliance = value(key, raw)?,
            "transport_duration" => self.trial.transport_duration = value(key, raw)?,
            "swing_amp" => self.trial.swing_amp = value(key, raw)?,
            "swing_freq" => self.trial.swing_freq = value(key, raw)?,
            "trials_per_sample" => self.trials_per_sample = value(key, raw)?,
            "mu" => self.slip.mu = value(key, raw)?,
            "safety_factor" => self.slip.safety = value(key, raw)?,
            "a_max" => self.slip.a_max = value(key, raw)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies the file on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = WorkbenchConfig::default();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
            };
            let key = key.trim();
            if !seen.insert(key.to_string()) && KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: key `{key}` set twice", i + 1)));
            }
            cfg.set(key, raw)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WorkbenchConfig::parse(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.contact.validate()?;
        self.attenuation.validate()?;
        self.signal.validate()?;
        self.protocol.validate()?;
        self.controller.validate()?;
        self.trial.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("models must name at least one model".into()));
        }
        if self.trials_per_sample == 0 {
            return Err(Error::Config("trials_per_sample must be >= 1".into()));
        }
        if !(self.slip.mu > 0.0) || !(self.slip.safety >= 1.0) || !(self.slip.a_max >= 0.0) {
            return Err(Error::Config("slip check needs mu > 0, safety_factor >= 1, a_max >= 0".into()));
        }
        Ok(())
    }

    pub fn simulator(&self) -> Result<SkinSim> {
        SkinSim::new(
            self.geometry.clone(),
            self.contact.clone(),
            self.attenuation.clone(),
            self.signal.clone(),
        )
        .map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(WorkbenchConfig::parse("# nothing\n\n").unwrap(), WorkbenchConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = WorkbenchConfig::parse(
            "seed = 7\nrepeats=3  # fewer presses\nmodels = linear, gp-exponential\nf_d = 1.5\ncompliance = 0.1\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.protocol.repeats, 3);
        assert_eq!(cfg.models, vec![ModelKind::Linear, ModelKind::GpExponential]);
        assert_eq!(cfg.controller.f_d, 1.5);
        assert_eq!(cfg.trial.compliance, 0.1);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = WorkbenchConfig::parse("seed = 1\nsigma_x = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("sigma_x") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn bad_values_rejected() {
        for text in ["epsilon = -1", "repeats = many", "seed 3", "compliance = 0.9", "seed = 1\nseed = 2", "models = svm"] {
            assert!(matches!(WorkbenchConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn every_key_is_settable() {
        let mut cfg = WorkbenchConfig::default();
        for key in KEYS {
            let raw = match *key {
                "out_dir" => "x",
                "models" => "linear",
                "tone_freqs" => "1000, 2000",
                "seed" | "n_subsections" | "frame_len" | "repeats" | "cv_folds" | "trials_per_sample" => "4",
                _ => "0.5",
            };
            cfg.set(key, raw).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
