//! Identification of the interaction potential `φ` in the aggregation equation
//! `u_t = ∇·(u ∇(φ*u))` from one noisy space-time sample of the density.
//!
//! The pipeline: [`noise`] corrupts or [`denoise`] smooths data, [`assembly`]
//! turns every frame into a linear operator acting on `φ`, and [`bregman`]
//! minimizes the regularized fidelity. [`timevary`] and [`agents`] extend the
//! same engine to time-dependent potentials and to agent trajectories.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod assembly;
pub mod bregman;
pub mod config;
pub mod denoise;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod potential;
pub mod sweep;
pub mod timevary;

pub use error::{Error, Result};
pub use grid::{SpaceTimeField, SpatialGrid, TimeGrid};
pub use potential::{Potential, PotentialSpec};
