//! Numerical checks of maximal inequalities and norm embeddings.
//!
//! Every check draws seeded random families, evaluates both sides of an
//! inequality and reports the ratios with per-sweep maxima and trend fits.

pub mod checks;
pub mod family;
pub mod multiplier;
pub mod report;

pub use checks::*;
pub use family::{random_band_field, random_raw_field, random_sequence, stream_rng, Envelope, RandomFamilySpec};
pub use multiplier::*;
pub use report::{RatioReport, SeriesSummary, SweepPoint, TrialRow, DEGENERATE_REL};
