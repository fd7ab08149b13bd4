//! SI contagion on weighted networks and the prophylactic-investment games
//! built on top of it.
//!
//! The crate is layered bottom-up: [`net_model`] holds networks and
//! investment profiles, [`dynamics`] computes infection probabilities,
//! [`game_core`] turns them into utilities and marginal utilities,
//! [`solvers`] computes equilibria and optima, [`closed_forms`] provides the
//! analytical symmetric solutions and [`metrics_policy`] evaluates efficiency
//! ratios and distancing policies.

pub mod closed_forms;
pub mod dynamics;
pub mod error;
pub mod game_core;
pub mod metrics_policy;
pub mod net_model;
pub mod solvers;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
