//! Exponential Runge–Kutta integrators of stiff order six for semilinear
//! problems `u' = Au + g(t, u)`, with a rooted-tree engine that checks the
//! stiff order conditions numerically.

pub mod btrees;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod phi;
pub mod problems;
pub mod tableaus;

pub use error::{Error, Result};
