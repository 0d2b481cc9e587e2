//! Finite-horizon zero-sum games between a stopper and a singular
//! controller on a one-dimensional diffusion.
//!
//! The crate computes the value surface by two independent finite
//! difference schemes, extracts the stopping and action boundaries,
//! solves the auxiliary absorbed stopping problem for the spatial
//! derivative of the value, and verifies the saddle point by Monte Carlo
//! with Skorokhod reflection along the action boundary.

pub mod aux_stop;
pub mod boundaries;
pub mod config;
pub mod error;
pub mod expr;
pub mod game_sim;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod sde;
pub mod stencil;
pub mod vi;

pub use error::{Error, Result};
