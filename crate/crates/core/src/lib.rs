//! Inhomogeneous fragmentation processes whose fragments of mass `m` split at
//! rate proportional to `1/|log m|`, and the time-changed subordinator
//! `ξ_{ρ(t)}` describing their tagged fragment.
//!
//! The crate evaluates the exact Laplace transform of `ξ_{ρ(t)}`, its
//! large-time asymptotics and scaling limits, and provides Monte Carlo
//! simulators for subordinator paths, the fragmentation itself and the
//! reflected Brownian motion in the unit disk that motivates it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disk;
pub mod error;
pub mod fragmentation;
pub mod inversion;
pub mod levy;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use fragmentation::{DislocationMeasure, FragmentationConfig, FragmentationSim};
pub use inversion::{InversionMode, Inverted, MeasureV};
pub use levy::{JumpLaw, JumpMeasure, LevyTriplet, Moments, TabulatedDensity};
pub use simulate::{RhoSample, RngStream, SubordinatorPath};
pub use transform::{LaplaceQuery, LaplaceValue};
