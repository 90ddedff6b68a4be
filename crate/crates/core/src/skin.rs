//! Surrogate of the sensorised finger.
//!
//! Indentation depth drives three things: the contact force a load cell would
//! read, the constriction of the embedded acoustic channel, and the resulting
//! attenuation of each reference tone.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from};
use crate::signal::{frame_features, synth_reference, SignalConfig, SpectrumFeatures};
use crate::{Error, Result};

/// Smallest channel cross-section ratio; the channel never fully closes.
pub const MIN_AREA_RATIO: f64 = 0.05;
/// Peak relative offset of the per-subsection gain vector.
pub const SUBSECTION_GAIN_SPREAD: f64 = 0.03;
const GAIN_SALT: u64 = 0x5ec7_10a5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkinGeometry {
    pub channel_diameter: f64,
    pub cover_thickness: f64,
    pub calibrated_length: f64,
    pub n_subsections: usize,
    pub subsection_gap: f64,
}

impl Default for SkinGeometry {
    fn default() -> Self {
        SkinGeometry {
            channel_diameter: 3.0,
            cover_thickness: 1.0,
            calibrated_length: 14.0,
            n_subsections: 7,
            subsection_gap: 2.0,
        }
    }
}

impl SkinGeometry {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("channel_diameter", self.channel_diameter),
            ("cover_thickness", self.cover_thickness),
            ("calibrated_length", self.calibrated_length),
            ("subsection_gap", self.subsection_gap),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!("{name} must be > 0")));
        }
        if self.n_subsections == 0 {
            return Err(Error::Config("n_subsections must be > 0".into()));
        }
        let span = self.n_subsections as f64 * self.subsection_gap;
        if (span - self.calibrated_length).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "n_subsections x subsection_gap = {span} mm, calibrated_length = {} mm",
                self.calibrated_length
            )));
        }
        Ok(())
    }
}

/// Quadratic force law `c1 * d + c2 * d^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    pub c1: f64,
    pub c2: f64,
    pub max_force: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        ContactModel {
            c1: 1.2,
            c2: 0.7,
            max_force: 10.0,
        }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0) || !(self.c2 >= 0.0) || !(self.max_force > 0.0) {
            return Err(Error::Config(
                "contact model needs c1 > 0, c2 >= 0, max_force > 0".into(),
            ));
        }
        Ok(())
    }

    /// Depth producing `force`; inverse of [`contact_force`].
    pub fn depth_for_force(&self, force: f64) -> Result<f64> {
        if !(force >= 0.0) {
            return Err(Error::Domain(format!("negative force {force}")));
        }
        if self.c2 == 0.0 {
            return Ok(force / self.c1);
        }
        // Stable root of c2 d^2 + c1 d - F = 0.
        Ok(2.0 * force / (self.c1 + (self.c1 * self.c1 + 4.0 * self.c2 * force).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationModel {
    pub alpha0: f64,
    pub alpha1: f64,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for AttenuationModel {
    fn default() -> Self {
        AttenuationModel {
            alpha0: 0.8,
            alpha1: 1.6,
            noise_sigma: 0.005,
            rng_seed: 0,
        }
    }
}

impl AttenuationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 >= 0.0) || !(self.alpha1 >= 0.0) {
            return Err(Error::Config("alpha0 and alpha1 must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.noise_sigma) {
            return Err(Error::Config("noise_sigma must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        AttenuationModel {
            rng_seed,
            ..self.clone()
        }
    }

    pub fn noiseless(&self) -> Self {
        AttenuationModel {
            noise_sigma: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    pub subsection: usize,
    pub depth: f64,
    pub force: f64,
    pub area_ratio: f64,
}

fn check_depth(depth: f64) -> Result<()> {
    if depth >= 0.0 && depth.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("indentation depth {depth} mm must be >= 0")))
    }
}

pub fn contact_force(depth: f64, cm: &ContactModel) -> Result<f64> {
    check_depth(depth)?;
    Ok(cm.c1 * depth + cm.c2 * depth * depth)
}

pub fn channel_constriction(depth: f64, geo: &SkinGeometry) -> Result<f64> {
    check_depth(depth)?;
    Ok((1.0 - depth / (geo.cover_thickness + geo.channel_diameter)).max(MIN_AREA_RATIO))
}

/// Attenuates each band according to the channel constriction, then adds
/// seeded Gaussian noise scaled by the band's reference magnitude.
pub fn transmit(
    reference: &SpectrumFeatures,
    area_ratio: f64,
    am: &AttenuationModel,
) -> Result<SpectrumFeatures> {
    if !(area_ratio > 0.0 && area_ratio <= 1.0) {
        return Err(Error::Domain(format!(
            "area_ratio {area_ratio} outside (0, 1]"
        )));
    }
    let b = reference.len();
    let span = if b > 1 { (b - 1) as f64 } else { 1.0 };
    let closure = 1.0 - area_ratio;
    let noise = (am.noise_sigma > 0.0).then(|| Normal::new(0.0, 1.0).expect("unit normal"));
    let mut rng = rng_from(am.rng_seed);
    let bands = reference
        .bands
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let alpha = am.alpha0 + am.alpha1 * i as f64 / span;
            let clean = r * (-alpha * closure).exp();
            match &noise {
                Some(n) => (clean + am.noise_sigma * r * n.sample(&mut rng)).max(0.0),
                None => clean,
            }
        })
        .collect();
    Ok(SpectrumFeatures::new(bands))
}

/// Fixed multiplicative gain per (subsection, band) within ±3%.
pub fn subsection_gains(subsection: usize, bands: usize) -> Vec<f64> {
    let mut rng = rng_from(derive_seed(GAIN_SALT, &[subsection as u64]));
    (0..bands)
        .map(|_| 1.0 + SUBSECTION_GAIN_SPREAD * rng.random_range(-1.0..=1.0))
        .collect()
}

/// All simulator parameters plus the cached noise-free reference features.
#[derive(Debug, Clone)]
pub struct SkinSim {
    pub geometry: SkinGeometry,
    pub contact: ContactModel,
    pub attenuation: AttenuationModel,
    pub signal: SignalConfig,
    reference: SpectrumFeatures,
    gains: Vec<Vec<f64>>,
}

impl SkinSim {
    pub fn new(
        geometry: SkinGeometry,
        contact: ContactModel,
        attenuation: AttenuationModel,
        signal: SignalConfig,
    ) -> Result<Self> {
        geometry.validate()?;
        contact.validate()?;
        attenuation.validate()?;
        signal.validate()?;
        let reference = frame_features(&synth_reference(&signal)?, &signal)?;
        let gains = (0..geometry.n_subsections)
            .map(|s| subsection_gains(s, signal.bands()))
            .collect();
        Ok(SkinSim {
            geometry,
            contact,
            attenuation,
            signal,
            reference,
            gains,
        })
    }

    pub fn reference(&self) -> &SpectrumFeatures {
        &self.reference
    }

    /// Reference features as seen through a given subsection at rest.
    pub fn gained_reference(&self, subsection: usize) -> Result<SpectrumFeatures> {
        let gains = self.gains.get(subsection).ok_or(Error::Index {
            index: subsection,
            len: self.geometry.n_subsections,
        })?;
        Ok(SpectrumFeatures::new(
            self.reference
                .bands
                .iter()
                .zip(gains)
                .map(|(r, g)| r * g)
                .collect(),
        ))
    }

    pub fn contact_state(&self, subsection: usize, depth: f64) -> Result<ContactState> {
        if subsection >= self.geometry.n_subsections {
            return Err(Error::Index {
                index: subsection,
                len: self.geometry.n_subsections,
            });
        }
        Ok(ContactState {
            subsection,
            depth,
            force: contact_force(depth, &self.contact)?,
            area_ratio: channel_constriction(depth, &self.geometry)?,
        })
    }

    /// Senses one press; the noise stream is keyed by `seed`.
    pub fn sense(&self, subsection: usize, depth: f64, seed: u64) -> Result<(SpectrumFeatures, f64)> {
        let state = self.contact_state(subsection, depth)?;
        let gained = self.gained_reference(subsection)?;
        let feats = transmit(&gained, state.area_ratio, &self.attenuation.with_seed(seed))?;
        Ok((feats, state.force))
    }
}

impl Default for SkinSim {
    fn default() -> Self {
        SkinSim::new(
            SkinGeometry::default(),
            ContactModel::default(),
            AttenuationModel::default(),
            SignalConfig::default(),
        )
        .expect("default simulator parameters are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SkinSim {
        let mut sim = SkinSim::default();
        sim.attenuation.noise_sigma = 0.0;
        sim
    }

    #[test]
    fn force_law_examples() {
        let cm = ContactModel::default();
        assert_eq!(contact_force(0.0, &cm).unwrap(), 0.0);
        assert!((contact_force(3.0, &cm).unwrap() - 9.9).abs() < 1e-12);
        assert!((contact_force(1.0, &cm).unwrap() - 1.9).abs() < 1e-12);
        assert!((contact_force(3.5, &cm).unwrap() - 12.775).abs() < 1e-12);
        assert!(matches!(contact_force(-0.1, &cm), Err(Error::Domain(_))));
    }

    #[test]
    fn depth_for_force_inverts_law() {
        let cm = ContactModel::default();
        for d in [0.0, 0.3, 1.0, 2.7, 5.0] {
            let f = contact_force(d, &cm).unwrap();
            assert!((cm.depth_for_force(f).unwrap() - d).abs() < 1e-12);
        }
    }

    #[test]
    fn constriction_examples() {
        let geo = SkinGeometry::default();
        assert_eq!(channel_constriction(0.0, &geo).unwrap(), 1.0);
        assert!((channel_constriction(2.0, &geo).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(channel_constriction(10.0, &geo).unwrap(), MIN_AREA_RATIO);
        assert!(channel_constriction(-1.0, &geo).is_err());
    }

    #[test]
    fn geometry_invariant_checked() {
        let geo = SkinGeometry {
            n_subsections: 6,
            ..SkinGeometry::default()
        };
        assert!(geo.validate().is_err());
    }

    #[test]
    fn transmit_identity_at_rest() {
        let reference = SpectrumFeatures::new(vec![1.0, 2.0, 3.0]);
        let am = AttenuationModel {
            noise_sigma: 0.0,
            ..AttenuationModel::default()
        };
        assert_eq!(transmit(&reference, 1.0, &am).unwrap(), reference);
    }

    #[test]
    fn transmit_closed_form_exp_minus_one() {
        let reference = SpectrumFeatures::new(vec![2048.0; 16]);
        let am = AttenuationModel {
            alpha0: 2.0,
            alpha1: 0.0,
            noise_sigma: 0.0,
            rng_seed: 0,
        };
        let out = transmit(&reference, 0.5, &am).unwrap();
        for b in out.bands {
            assert!((b / 2048.0 - 0.367_879_441_171_442_3).abs() < 1e-12);
        }
    }

    #[test]
    fn transmit_rejects_bad_area() {
        let reference = SpectrumFeatures::new(vec![1.0]);
        let am = AttenuationModel::default();
        assert!(transmit(&reference, 0.0, &am).is_err());
        assert!(transmit(&reference, 1.5, &am).is_err());
    }

    #[test]
    fn transmit_noise_is_seeded() {
        let reference = SpectrumFeatures::new(vec![100.0; 16]);
        let am = AttenuationModel::default().with_seed(9);
        let a = transmit(&reference, 0.7, &am).unwrap();
        let b = transmit(&reference, 0.7, &am).unwrap();
        let c = transmit(&reference, 0.7, &am.with_seed(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gains_within_spread() {
        for s in 0..7 {
            let g = subsection_gains(s, 16);
            assert!(g.iter().all(|x| (x - 1.0).abs() <= SUBSECTION_GAIN_SPREAD));
        }
        assert_ne!(subsection_gains(0, 16), subsection_gains(1, 16));
    }

    #[test]
    fn sense_at_rest_reproduces_gained_reference() {
        let sim = quiet();
        for s in 0..7 {
            let (f, force) = sim.sense(s, 0.0, 1).unwrap();
            assert_eq!(force, 0.0);
            assert_eq!(f, sim.gained_reference(s).unwrap());
        }
    }

    #[test]
    fn sense_is_deterministic_and_validates_subsection() {
        let sim = SkinSim::default();
        assert_eq!(sim.sense(3, 1.5, 11).unwrap(), sim.sense(3, 1.5, 11).unwrap());
        assert!(matches!(sim.sense(7, 1.0, 0), Err(Error::Index { index: 7, len: 7 })));
    }

    #[test]
    fn deeper_press_attenuates_every_band() {
        let sim = quiet();
        for s in 0..7 {
            let (a, fa) = sim.sense(s, 1.0, 0).unwrap();
            let (b, fb) = sim.sense(s, 2.0, 0).unwrap();
            assert!(fb > fa);
            assert!(a.bands.iter().zip(&b.bands).all(|(x, y)| y < x));
        }
    }

    #[test]
    fn sweep_levels_are_separable() {
        let sim = quiet();
        let sigma = SkinSim::default().attenuation.noise_sigma;
        let ref_norm = sim.reference().bands.iter().map(|x| x * x).sum::<f64>().sqrt();
        for s in 0..7 {
            let feats: Vec<_> = (0..8)
                .map(|k| sim.sense(s, 0.5 * k as f64, 0).unwrap().0)
                .collect();
            for i in 0..8 {
                for j in (i + 1)..8 {
                    let d: f64 = feats[i]
                        .bands
                        .iter()
                        .zip(&feats[j].bands)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    assert!(d > 10.0 * sigma * ref_norm, "s{s} levels {i},{j}: {d}");
                }
            }
        }
    }
}
