//! Finite-volume solver for a flux-limited Keller–Segel system on boxes with
//! no-flux boundaries:
//!
//! ```text
//! u_t = Δu - ∇·(u χ (|∇v|² + ε)^((p-2)/2) ∇v)
//! v_t = Δv - v + u^θ
//! ```
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! cover the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod error;
pub mod grid;
pub mod model;
pub mod oracle;
mod scalar;
pub mod solver;
mod tridiag;

pub use error::{KsError, Result};
pub use grid::{Grid, ScalarField, VectorField};
pub use model::{ModelParams, Regime, RegimeTag};
pub use scalar::Real;
pub use solver::{RunStatus, Scheme, SnapshotPolicy, SolverConfig, State, Trajectory};

pub type Grid64 = Grid<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type VectorField64 = VectorField<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type State64 = State<f64>;
pub type Trajectory64 = Trajectory<f64>;

pub type Grid32 = Grid<f32>;
pub type ScalarField32 = ScalarField<f32>;
pub type ModelParams32 = ModelParams<f32>;
pub type State32 = State<f32>;
