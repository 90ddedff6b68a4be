//! Reference excitation synthesis and FFT band features.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: f64 = 44_100.0;
pub const DEFAULT_FRAME_LEN: usize = 4096;
pub const DEFAULT_TONES: usize = 16;
const TONE_LOW_HZ: f64 = 200.0;
const TONE_HIGH_HZ: f64 = 15_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub sample_rate: f64,
    pub frame_len: usize,
    pub tone_freqs: Vec<f64>,
    pub tone_amp: f64,
}

impl Default for SignalConfig {
    /// 16 log-spaced tones between 200 Hz and 15 kHz, each snapped to the
    /// nearest FFT bin so that no leakage occurs without a window.
    fn default() -> Self {
        let sample_rate = DEFAULT_SAMPLE_RATE;
        let frame_len = DEFAULT_FRAME_LEN;
        let bin_hz = sample_rate / frame_len as f64;
        let ratio = (TONE_HIGH_HZ / TONE_LOW_HZ).ln() / (DEFAULT_TONES - 1) as f64;
        let tone_freqs = (0..DEFAULT_TONES)
            .map(|i| {
                let f = TONE_LOW_HZ * (ratio * i as f64).exp();
                (f / bin_hz).round() * bin_hz
            })
            .collect();
        SignalConfig {
            sample_rate,
            frame_len,
            tone_freqs,
            tone_amp: 1.0,
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.frame_len.is_power_of_two() || self.frame_len < 2 {
            return Err(Error::Config(format!(
                "frame_len {} is not a power of two",
                self.frame_len
            )));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.tone_freqs.is_empty() {
            return Err(Error::Config("tone_freqs is empty".into()));
        }
        let nyquist = self.sample_rate / 2.0;
        if let Some(f) = self.tone_freqs.iter().find(|&&f| !(f > 0.0 && f < nyquist)) {
            return Err(Error::Config(format!(
                "tone {f} Hz outside (0, {nyquist}) Hz"
            )));
        }
        if self.tone_freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("tone_freqs must be strictly increasing".into()));
        }
        if !self.tone_amp.is_finite() || self.tone_amp < 0.0 {
            return Err(Error::Config("tone_amp must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Number of feature bands (one per tone).
    pub fn bands(&self) -> usize {
        self.tone_freqs.len()
    }

    pub fn bin_of(&self, freq: f64) -> usize {
        let bin = (freq * self.frame_len as f64 / self.sample_rate).round() as usize;
        bin.min(self.frame_len / 2)
    }
}

/// One time-domain acoustic frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, cfg: &SignalConfig) -> Result<Self> {
        if samples.len() != cfg.frame_len {
            return Err(Error::Shape {
                expected: cfg.frame_len,
                actual: samples.len(),
            });
        }
        Ok(TimeSignal { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn scaled(&self, c: f64) -> TimeSignal {
        TimeSignal {
            samples: self.samples.iter().map(|x| x * c).collect(),
        }
    }
}

/// Per-tone magnitude feature vector fed to the calibration regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectrumFeatures {
    pub bands: Vec<f64>,
}

impl SpectrumFeatures {
    pub fn new(bands: Vec<f64>) -> Self {
        SpectrumFeatures { bands }
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.bands
    }
}

/// Sum of `tone_amp`-scaled sinusoids at the configured tones.
pub fn synth_reference(cfg: &SignalConfig) -> Result<TimeSignal> {
    cfg.validate()?;
    synth_tones(cfg, &vec![cfg.tone_amp; cfg.bands()])
}

/// Like [`synth_reference`] but with an individual amplitude per tone.
pub fn synth_tones(cfg: &SignalConfig, amps: &[f64]) -> Result<TimeSignal> {
    cfg.validate()?;
    if amps.len() != cfg.bands() {
        return Err(Error::Shape {
            expected: cfg.bands(),
            actual: amps.len(),
        });
    }
    let omegas: Vec<f64> = cfg
        .tone_freqs
        .iter()
        .map(|f| 2.0 * PI * f / cfg.sample_rate)
        .collect();
    let samples = (0..cfg.frame_len)
        .map(|n| {
            let n = n as f64;
            omegas
                .iter()
                .zip(amps)
                .map(|(w, a)| a * (w * n).sin())
                .sum()
        })
        .collect();
    Ok(TimeSignal { samples })
}

/// One-sided magnitude spectrum, `frame_len / 2 + 1` bins, no window.
pub fn fft_magnitude(sig: &TimeSignal, cfg: &SignalConfig) -> Result<Vec<f64>> {
    let n = sig.samples.len();
    if n != cfg.frame_len {
        return Err(Error::Shape {
            expected: cfg.frame_len,
            actual: n,
        });
    }
    let mut buf: Vec<Complex<f64>> = sig.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf[..=n / 2].iter().map(|c| c.norm()).collect())
}

/// Time-domain energy implied by a one-sided magnitude spectrum (Parseval).
pub fn spectrum_energy(spectrum: &[f64], frame_len: usize) -> f64 {
    let half = frame_len / 2;
    let body: f64 = spectrum
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let w = if k == 0 || k == half { 1.0 } else { 2.0 };
            w * m * m
        })
        .sum();
    body / frame_len as f64
}

/// Picks the magnitude at the bin nearest each configured tone.
pub fn band_features(spectrum: &[f64], cfg: &SignalConfig) -> Result<SpectrumFeatures> {
    let expected = cfg.frame_len / 2 + 1;
    if spectrum.len() != expected {
        return Err(Error::Shape {
            expected,
            actual: spectrum.len(),
        });
    }
    Ok(SpectrumFeatures::new(
        cfg.tone_freqs
            .iter()
            .map(|&f| spectrum[cfg.bin_of(f)])
            .collect(),
    ))
}

/// `band_features(fft_magnitude(sig))`.
pub fn frame_features(sig: &TimeSignal, cfg: &SignalConfig) -> Result<SpectrumFeatures> {
    band_features(&fft_magnitude(sig, cfg)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn one_tone(freq: f64) -> SignalConfig {
        SignalConfig {
            tone_freqs: vec![freq],
            ..SignalConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid_and_bin_aligned() {
        let cfg = SignalConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.bands(), 16);
        let bin_hz = cfg.sample_rate / cfg.frame_len as f64;
        for f in &cfg.tone_freqs {
            let k = f / bin_hz;
            assert!((k - k.round()).abs() < 1e-9);
        }
        assert!(cfg.tone_freqs[0] >= 190.0 && cfg.tone_freqs[15] <= 15_010.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = SignalConfig::default();
        cfg.frame_len = 1000;
        assert!(matches!(synth_reference(&cfg), Err(Error::Config(_))));
        let mut cfg = SignalConfig::default();
        cfg.tone_freqs[3] = 30_000.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SignalConfig::default();
        cfg.tone_freqs.swap(1, 2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_amplitude_gives_zero_signal() {
        let cfg = SignalConfig {
            tone_amp: 0.0,
            ..SignalConfig::default()
        };
        let sig = synth_reference(&cfg).unwrap();
        assert!(sig.samples().iter().all(|&x| x == 0.0));
        let spec = fft_magnitude(&sig, &cfg).unwrap();
        assert!(spec.iter().all(|&m| m == 0.0));
        let feats = band_features(&spec, &cfg).unwrap();
        assert!(feats.bands.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn single_tone_matches_sine() {
        let cfg = one_tone(1000.0);
        let sig = synth_reference(&cfg).unwrap();
        assert_eq!(sig.samples()[0], 0.0);
        for n in [1usize, 17, 4095] {
            let want = (2.0 * PI * 1000.0 * n as f64 / 44_100.0).sin();
            assert!((sig.samples()[n] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn default_peak_bounded_by_tone_count() {
        let cfg = SignalConfig::default();
        let sig = synth_reference(&cfg).unwrap();
        let peak = sig.samples().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(peak <= 16.0, "peak {peak}");
        assert!(peak > 1.0);
    }

    #[test]
    fn bin_aligned_tone_has_single_peak() {
        let cfg = SignalConfig::default();
        let k = 200usize;
        let freq = k as f64 * cfg.sample_rate / cfg.frame_len as f64;
        let sig = synth_reference(&SignalConfig {
            tone_freqs: vec![freq],
            ..cfg.clone()
        })
        .unwrap();
        let spec = fft_magnitude(&sig, &cfg).unwrap();
        let peak = spec[k];
        assert!((peak - cfg.frame_len as f64 / 2.0).abs() < 1e-6);
        for (i, m) in spec.iter().enumerate() {
            if i != k {
                assert!(*m < 1e-6 * peak, "bin {i}: {m}");
            }
        }
    }

    #[test]
    fn parseval_on_random_frame() {
        let cfg = SignalConfig::default();
        let mut rng = crate::rng::rng_from(42);
        let samples: Vec<f64> = (0..cfg.frame_len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sig = TimeSignal::new(samples, &cfg).unwrap();
        let spec = fft_magnitude(&sig, &cfg).unwrap();
        let rel = (spectrum_energy(&spec, cfg.frame_len) - sig.energy()).abs() / sig.energy();
        assert!(rel < 1e-9, "relative Parseval error {rel}");
    }

    #[test]
    fn wrong_length_is_shape_error() {
        let cfg = SignalConfig::default();
        assert!(matches!(
            TimeSignal::new(vec![0.0; 100], &cfg),
            Err(Error::Shape { expected: 4096, actual: 100 })
        ));
        assert!(band_features(&[0.0; 10], &cfg).is_err());
    }

    #[test]
    fn reference_bands_all_positive() {
        let cfg = SignalConfig::default();
        let feats = frame_features(&synth_reference(&cfg).unwrap(), &cfg).unwrap();
        assert_eq!(feats.len(), 16);
        for b in &feats.bands {
            assert!((b - 2048.0).abs() < 1e-6, "band {b}");
        }
    }

    #[test]
    fn attenuated_tone_halves_its_band_only() {
        let cfg = SignalConfig::default();
        let full = frame_features(&synth_reference(&cfg).unwrap(), &cfg).unwrap();
        let mut amps = vec![1.0; 16];
        amps[5] = 0.5;
        let part = frame_features(&synth_tones(&cfg, &amps).unwrap(), &cfg).unwrap();
        for i in 0..16 {
            let ratio = part.bands[i] / full.bands[i];
            if i == 5 {
                assert!((ratio - 0.5).abs() < 0.01);
            } else {
                assert!((ratio - 1.0).abs() < 0.02);
            }
        }
    }

    #[test]
    fn features_are_linear_in_amplitude() {
        let cfg = SignalConfig::default();
        let sig = synth_reference(&cfg).unwrap();
        let base = frame_features(&sig, &cfg).unwrap();
        for c in [0.25, 3.0, 17.5] {
            let scaled = frame_features(&sig.scaled(c), &cfg).unwrap();
            for (a, b) in base.bands.iter().zip(&scaled.bands) {
                assert!(((b - c * a) / (c * a)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = SignalConfig::default();
        let a = frame_features(&synth_reference(&cfg).unwrap(), &cfg).unwrap();
        let b = frame_features(&synth_reference(&cfg).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
