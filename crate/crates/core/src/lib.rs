//! Steady one-dimensional shock profiles for heat-conductive and viscous
//! gas models, together with their vanishing-dissipation limits.
//!
//! The pipeline is: build a [`gas::ShockPair`], wrap it in a
//! [`model::ReducedModel`], solve for the integration constant with
//! [`alpha::solve_alpha`], then rebuild the spatial profile with
//! [`profile::reconstruct`]. [`asymptotics::run_sweep`] drives the whole chain
//! over a decreasing parameter sequence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod asymptotics;
mod chart;
pub mod error;
pub mod gas;
pub mod model;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod report;
pub mod roots;

pub use error::{Error, Result};
