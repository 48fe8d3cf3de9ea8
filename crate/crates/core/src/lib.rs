//! Spectral-Galerkin simulation of parabolic SPDEs on `[0, 1]` driven either
//! by a scalar Brownian motion or by compensated small-jump Poisson noise
//! scaled by `1/alpha(eps)`, with the stochastic Burgers equation as the
//! main model, plus the tooling to compare the two laws.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line runner uses.

// `!(x > 0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod generator;
pub mod integrator;
pub mod invariants;
pub mod levy;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod stream;
pub mod transform;

pub use error::{Error, Result};
pub use levy::{Atom, CutoffPlan, Family, JumpEvent, LevyMeasure, RatioTrend, RatioVerdict, Sidedness};
pub use model::{ModelSpec, NemytskiiFn};
pub use scalar::Real;
pub use spectral::{SpectralBasis, SpectralState};
pub use stream::PathStream;

pub type Measure = LevyMeasure<f64>;
pub type Basis = SpectralBasis<f64>;
pub type State = SpectralState<f64>;
pub type Model = ModelSpec<f64>;
pub type Pointwise = NemytskiiFn<f64>;

pub type Measure32 = LevyMeasure<f32>;
pub type Basis32 = SpectralBasis<f32>;
pub type State32 = SpectralState<f32>;
pub type Model32 = ModelSpec<f32>;
