//! Desk-scale workbench for acoustic soft tactile (AST) skin.
//!
//! The crate bundles four pieces that together reproduce a tactile
//! pick-and-drop pipeline without hardware:
//!
//! * [`signal`] synthesizes the reference acoustic comb and reduces frames to
//!   per-tone magnitude features.
//! * [`skin`] is a deterministic surrogate of the sensorised finger that maps
//!   indentation to force, channel constriction and a modulated spectrum.
//! * [`calib`] generates sweep datasets, trains regression models (OLS, CART,
//!   Gaussian processes), cross-validates and reports tolerances.
//! * [`grip`] and [`trial`] size the grip force, run the deadband width
//!   controller and evaluate simulated strawberry handling campaigns.
//!
//! [`io`] and [`config`] cover the on-disk formats used by the CLI.

pub mod calib;
pub mod config;
pub mod error;
pub mod exec;
pub mod grip;
pub mod io;
pub mod rng;
pub mod signal;
pub mod skin;
pub mod trial;

pub use error::{Error, Result};
pub use exec::Execution;
