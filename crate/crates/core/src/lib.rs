//! Maximal operators, Littlewood-Paley decompositions and dyadic
//! Triebel-Lizorkin type norms on periodic sampled grids, with randomised
//! checks of the inequalities that connect them.
//!
//! Numerical types are generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the common double precision instances.

pub mod bump_factory;
pub mod counterexample_suite;
pub mod dyadic_norms;
pub mod error;
mod fft;
pub mod inequality_lab;
pub mod lp_decomposition;
pub mod maximal_operators;
pub mod quadrature;
pub mod real;
pub mod sample_grid;
pub mod stats;

pub use error::{Error, Result};
pub use real::Real;

pub type SampledField64 = sample_grid::SampledField<f64>;
pub type SampledField32 = sample_grid::SampledField<f32>;
pub type Spectrum64 = sample_grid::Spectrum<f64>;
pub type Spectrum32 = sample_grid::Spectrum<f32>;
pub type ScaleSequence64 = lp_decomposition::ScaleSequence<f64>;
pub type ScaleSequence32 = lp_decomposition::ScaleSequence<f32>;
pub type MaximalField64 = maximal_operators::MaximalField<f64>;
pub type MaximalField32 = maximal_operators::MaximalField<f32>;
