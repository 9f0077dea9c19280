//! The two counterexample constructions, evaluated scale by scale.

pub mod bounded_sum;
pub mod growth;
pub mod modulated;
pub mod sharpness;

pub use bounded_sum::{bounded_sum_probe, BoundedSumConfig, BoundedSumReport};
pub use growth::{GrowthFit, GrowthReport, GrowthRow};
pub use modulated::{build_modulated_family, cauchy_increment, measure_modulated_divergence, ModulatedFamilySpec, ModulatedScale};
pub use sharpness::{build_sharpness_cell, measure_sharpness_rates, self_similarity_defect, SharpnessCell, SharpnessFamilySpec};
