//! Numerical laboratory for radial solutions of the gradient-diffusion
//! equation `u_t = |Du|^{q-2}(Δu + (p-2)Δ∞ᴺu)`, reduced to a weighted
//! one-dimensional q-parabolic equation in a fictitious dimension.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod closed_forms;
pub mod error;
pub mod giant;
pub mod io;
pub mod lap_number;
pub mod numerics;
pub mod operators;
pub mod params;
pub mod solver1d;

pub use analysis::{FitResult, HarnackReport, OscillationReport};
pub use closed_forms::{BarenblattSpec, TravelingWaveSpec};
pub use error::{Error, Result};
pub use giant::{GiantProfile, GiantReport};
pub use lap_number::{Intersection, SignChangeConfig};
pub use numerics::Quadrature;
pub use params::{DerivedExponents, EquationParams, Regime};
pub use solver1d::{Grid, OuterBoundary, RadialState, Sampler, Solver, SolverConfig, Trajectory};
