//! Grip-force sizing and the deadband grip-width controller.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;
/// Peduncle force above which handling is aborted.
pub const SAFE_PEDUNCLE_FORCE: f64 = 10.0;

/// Inputs to the friction grip sizing rule `F = m (g + a) S / mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripSizing {
    /// Mass in kg.
    pub m: f64,
    pub g: f64,
    pub a: f64,
    pub mu: f64,
    /// Safety factor.
    pub s: f64,
}

impl GripSizing {
    pub fn new(m: f64, a: f64, mu: f64, s: f64) -> Self {
        GripSizing {
            m,
            g: STANDARD_GRAVITY,
            a,
            mu,
            s,
        }
    }
}

/// Net gripping force in newtons.
pub fn required_grip_force(sizing: &GripSizing) -> Result<f64> {
    let GripSizing { m, g, a, mu, s } = *sizing;
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("friction coefficient {mu} must be > 0")));
    }
    if !(m >= 0.0) || !(s >= 1.0) || !(g + a > 0.0) {
        return Err(Error::Domain(format!(
            "grip sizing needs m >= 0, S >= 1, g + a > 0 (m={m}, S={s}, g+a={})",
            g + a
        )));
    }
    Ok(m * (g + a) * s / mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Target force, N.
    pub f_d: f64,
    /// Deadband half-width, N.
    pub epsilon: f64,
    /// Width step, mm.
    pub sigma_h: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub f_abort: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            f_d: 2.0,
            epsilon: 0.1,
            sigma_h: 1.0,
            g_min: -20.0,
            g_max: 20.0,
            f_abort: SAFE_PEDUNCLE_FORCE,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if !(self.sigma_h > 0.0) {
            return Err(Error::Config("sigma_h must be > 0".into()));
        }
        if !(self.g_min < self.g_max) {
            return Err(Error::Config("g_min must be < g_max".into()));
        }
        if !(self.f_abort > self.f_d + self.epsilon) {
            return Err(Error::Config("f_abort must exceed f_d + epsilon".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeadbandStatus {
    Below,
    Within,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Close,
    Hold,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Commanded grip width, mm.
    pub g_t: f64,
    pub last_decision: Decision,
}

impl ControllerState {
    pub fn new(g_t: f64) -> Self {
        ControllerState {
            g_t,
            last_decision: Decision::Hold,
        }
    }
}

/// The boundaries `f_d ± epsilon` count as within the band.
pub fn deadband_status(f_m: f64, cfg: &ControllerConfig) -> DeadbandStatus {
    if f_m < cfg.f_d - cfg.epsilon {
        DeadbandStatus::Below
    } else if f_m > cfg.f_d + cfg.epsilon {
        DeadbandStatus::Above
    } else {
        DeadbandStatus::Within
    }
}

/// One width update: close by `sigma_h` below the band, open above it, hold
/// inside. The new width is clamped to `[g_min, g_max]`.
pub fn controller_step(state: &ControllerState, f_m: f64, cfg: &ControllerConfig) -> Result<ControllerState> {
    if !(f_m >= 0.0) {
        return Err(Error::Domain(format!("measured force {f_m} must be >= 0")));
    }
    if f_m > cfg.f_abort {
        return Err(Error::Abort {
            force: f_m,
            limit: cfg.f_abort,
        });
    }
    let (decision, g) = match deadband_status(f_m, cfg) {
        DeadbandStatus::Below => (Decision::Close, state.g_t - cfg.sigma_h),
        DeadbandStatus::Within => (Decision::Hold, state.g_t),
        DeadbandStatus::Above => (Decision::Open, state.g_t + cfg.sigma_h),
    };
    Ok(ControllerState {
        g_t: g.clamp(cfg.g_min, cfg.g_max),
        last_decision: decision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizing_examples() {
        let f = required_grip_force(&GripSizing::new(0.091, 1.0, 0.5, 2.0)).unwrap();
        assert!((f - 3.934_84).abs() < 1e-9);
        assert_eq!((f * 1000.0).round() / 1000.0, 3.935);
        assert_eq!(required_grip_force(&GripSizing::new(0.0, 1.0, 0.5, 2.0)).unwrap(), 0.0);
        let f = required_grip_force(&GripSizing::new(0.102, 0.0, 1.0, 1.0)).unwrap();
        assert!((f - 1.000_62).abs() < 1e-9);
    }

    #[test]
    fn sizing_rejects_bad_friction() {
        assert!(matches!(
            required_grip_force(&GripSizing::new(0.1, 0.0, 0.0, 2.0)),
            Err(Error::Domain(_))
        ));
        assert!(required_grip_force(&GripSizing::new(0.1, 0.0, 0.5, 0.5)).is_err());
    }

    #[test]
    fn deadband_examples() {
        let cfg = ControllerConfig::default();
        assert_eq!(deadband_status(1.5, &cfg), DeadbandStatus::Below);
        assert_eq!(deadband_status(1.9, &cfg), DeadbandStatus::Within);
        assert_eq!(deadband_status(2.1, &cfg), DeadbandStatus::Within);
        assert_eq!(deadband_status(2.25, &cfg), DeadbandStatus::Above);
    }

    #[test]
    fn step_examples() {
        let cfg = ControllerConfig::default();
        let s = controller_step(&ControllerState::new(30.0), 1.5, &ControllerConfig { g_max: 40.0, ..cfg }).unwrap();
        assert_eq!((s.g_t, s.last_decision), (29.0, Decision::Close));
        let wide = ControllerConfig { g_max: 40.0, ..cfg };
        let s = controller_step(&ControllerState::new(29.0), 2.05, &wide).unwrap();
        assert_eq!((s.g_t, s.last_decision), (29.0, Decision::Hold));
        let s = controller_step(&ControllerState::new(29.0), 2.5, &wide).unwrap();
        assert_eq!((s.g_t, s.last_decision), (30.0, Decision::Open));
    }

    #[test]
    fn clamps_and_guards() {
        let cfg = ControllerConfig::default();
        let s = controller_step(&ControllerState::new(cfg.g_min), 0.0, &cfg).unwrap();
        assert_eq!(s.g_t, cfg.g_min);
        assert!(matches!(
            controller_step(&ControllerState::new(0.0), 10.5, &cfg),
            Err(Error::Abort { .. })
        ));
        assert!(matches!(
            controller_step(&ControllerState::new(0.0), -0.1, &cfg),
            Err(Error::Domain(_))
        ));
        assert!(ControllerConfig { f_abort: 2.05, ..cfg }.validate().is_err());
    }

    proptest! {
        #[test]
        fn branches_partition_forces(f in 0.0f64..10.0, g in -19i32..=19) {
            let g = f64::from(g);
            let cfg = ControllerConfig::default();
            let s = controller_step(&ControllerState::new(g), f, &cfg).unwrap();
            let d = s.g_t - g;
            let expect = match deadband_status(f, &cfg) {
                DeadbandStatus::Below => -1.0,
                DeadbandStatus::Within => 0.0,
                DeadbandStatus::Above => 1.0,
            };
            prop_assert_eq!(d, expect);
        }

        #[test]
        fn decision_monotone_in_force(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let cfg = ControllerConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rank = |f: f64| controller_step(&ControllerState::new(0.0), f, &cfg).unwrap().g_t;
            prop_assert!(rank(lo) <= rank(hi));
        }
    }
}
