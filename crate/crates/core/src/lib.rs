//! Solver library for the regularized compressible nematic liquid crystal
//! system. The density follows a continuity equation with artificial
//! viscosity and the director a Ginzburg–Landau flow with Dirichlet data;
//! the velocity lives in a Faedo–Galerkin sine basis. Diagnostics track
//! energy, mass and large-time relaxation.
//!
//! Everything is generic over the floating point type through [`Real`];
//! the `*64` aliases fix it to `f64`.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod config;
pub mod continuity;
pub mod diagnostics;
pub mod director;
pub mod driver;
pub mod error;
pub mod field;
pub mod galerkin;
pub mod grid;
pub mod initial;
pub mod linalg;
pub mod momentum;
pub mod ops;
pub mod output;
pub mod penalty;
pub mod scalar;
pub mod snapshot;
pub mod state;

pub use error::{Error, Result};
pub use field::{
    BoundarySpec, ComponentBc, DirectorField, DirichletTrace, ScalarField, VectorField,
};
pub use grid::Grid;
pub use penalty::{GinzburgLandau, NoPenalty, Penalty};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type VectorField64 = VectorField<f64>;
pub type DirectorField64 = DirectorField<f64>;
pub type DirichletTrace64 = DirichletTrace<f64>;
pub type GinzburgLandau64 = GinzburgLandau<f64>;
pub type GalerkinBasis64 = galerkin::GalerkinBasis<f64>;
pub type DirectorState64 = director::DirectorState<f64>;
pub type FlowState64 = state::FlowState<f64>;
pub type SimConfig64 = config::SimConfig<f64>;
pub type RunOutput64 = driver::RunOutput<f64>;
