use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from};
use crate::signal::SpectrumFeatures;
use crate::skin::{contact_force, SkinSim};
use crate::{Error, Execution, Result};

/// Upper bound on depth levels visited per subsection.
pub const MAX_SWEEP_STEPS: usize = 100;
pub const DEFAULT_DEPTH_JITTER: f64 = 0.01;
const JITTER_STREAM: u64 = 0x6a69_7474;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub subsection: usize,
    pub depth: f64,
    pub force: f64,
    pub features: SpectrumFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepProtocol {
    pub depth_step: f64,
    pub force_stop: f64,
    pub repeats: usize,
    /// Standard deviation of the peg's actual depth around each commanded
    /// level, mm. The recorded depth and force label use the actual depth.
    #[serde(default)]
    pub depth_jitter: f64,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        SweepProtocol {
            depth_step: 0.5,
            force_stop: 10.0,
            repeats: 20,
            depth_jitter: DEFAULT_DEPTH_JITTER,
        }
    }
}

impl SweepProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth_step > 0.0) || !(self.force_stop > 0.0) || self.repeats == 0 || !(self.depth_jitter >= 0.0) {
            return Err(Error::Config(
                "sweep protocol needs depth_step > 0, force_stop > 0, repeats >= 1, depth_jitter >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Where a dataset came from: the sweep that produced it, or an external file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Sweep { protocol: SweepProtocol, seed: u64 },
    External { source: String },
    Derived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDataset {
    pub samples: Vec<CalibrationSample>,
    pub provenance: Provenance,
}

impl CalibrationDataset {
    pub fn new(samples: Vec<CalibrationSample>, provenance: Provenance) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::Dataset("dataset is empty".into()));
        };
        let dim = first.features.len();
        if let Some(bad) = samples.iter().find(|s| s.features.len() != dim) {
            return Err(Error::Shape {
                expected: dim,
                actual: bad.features.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|s| !(s.force >= 0.0)) {
            return Err(Error::Dataset(format!("negative force label {}", bad.force)));
        }
        Ok(CalibrationDataset {
            samples,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].features.len()
    }

    pub fn inputs(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.features.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.force).collect()
    }

    /// Sub-dataset by index list, in the order given.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        CalibrationDataset::new(
            idx.iter().map(|&i| self.samples[i].clone()).collect(),
            Provenance::Derived,
        )
    }
}

/// Depth levels visited per subsection: 0, step, 2*step, ... up to and
/// including the first level whose force reaches `force_stop`.
pub fn sweep_depths(protocol: &SweepProtocol, sim: &SkinSim) -> Result<Vec<f64>> {
    protocol.validate()?;
    let mut depths = Vec::new();
    for k in 0..MAX_SWEEP_STEPS {
        let depth = k as f64 * protocol.depth_step;
        depths.push(depth);
        if contact_force(depth, &sim.contact)? >= protocol.force_stop {
            return Ok(depths);
        }
    }
    Err(Error::Protocol(format!(
        "force never reached {} N within {MAX_SWEEP_STEPS} steps",
        protocol.force_stop
    )))
}

/// Where the peg really ends up for a commanded level. Level 0 rests on the
/// surface and is never jittered.
fn actual_depth(nominal: f64, jitter: f64, press_seed: u64) -> f64 {
    if nominal == 0.0 || jitter == 0.0 {
        return nominal;
    }
    let mut rng = rng_from(derive_seed(press_seed, &[JITTER_STREAM]));
    let n: f64 = rng.sample(StandardNormal);
    (nominal + jitter * n).max(0.0)
}

/// Runs the press sweep over every subsection.
pub fn generate_dataset(protocol: &SweepProtocol, sim: &SkinSim, seed: u64) -> Result<CalibrationDataset> {
    generate_dataset_with(protocol, sim, seed, Execution::default())
}

pub fn generate_dataset_with(
    protocol: &SweepProtocol,
    sim: &SkinSim,
    seed: u64,
    exec: Execution,
) -> Result<CalibrationDataset> {
    let depths = sweep_depths(protocol, sim)?;
    let mut points = Vec::new();
    for subsection in 0..sim.geometry.n_subsections {
        for (level, &depth) in depths.iter().enumerate() {
            for repeat in 0..protocol.repeats {
                points.push((subsection, level, depth, repeat));
            }
        }
    }
    let samples = exec
        .map(&points, |&(subsection, level, nominal, repeat)| {
            let press_seed = derive_seed(seed, &[subsection as u64, level as u64, repeat as u64]);
            let depth = actual_depth(nominal, protocol.depth_jitter, press_seed);
            sim.sense(subsection, depth, press_seed)
                .map(|(features, force)| CalibrationSample {
                    subsection,
                    depth,
                    force,
                    features,
                })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    CalibrationDataset::new(
        samples,
        Provenance::Sweep {
            protocol: *protocol,
            seed,
        },
    )
}

/// Seeded shuffle split; `|train| = round(train_fraction * N)`.
pub fn split_dataset(
    ds: &CalibrationDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(CalibrationDataset, CalibrationDataset)> {
    let n = ds.len();
    if n < 10 {
        return Err(Error::Dataset(format!("need at least 10 samples to split, have {n}")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Dataset(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Dataset("split leaves an empty side".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    Ok((ds.subset(&idx[..n_train])?, ds.subset(&idx[n_train..])?))
}
