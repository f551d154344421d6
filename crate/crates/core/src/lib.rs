//! Estimation of technology parks' potential for small and medium
//! enterprises, built as a chain of local models over official
//! statistics.
//!
//! The pipeline runs: ingest macro and SME series ([`dataio`]), convert
//! nominal GDP to base-year prices ([`deflate`]), fit the four local
//! models and the per-year average SME revenue ([`localmodels`] on top of
//! [`regress`]), then compose the flip model with scenario parameters
//! into the what-if indicator `g(beta, t)` and its increment
//! `delta_g = epsilon * beta` ([`potential`]). The [`oracle`] module
//! generates synthetic economies with known ground truth and recomputes
//! the indicator by literal substitution, serving as an independent
//! cross-check of the whole chain.

pub mod dataio;
pub mod deflate;
pub mod error;
pub mod localmodels;
pub mod oracle;
pub mod potential;
pub mod regress;

pub use error::{Error, FitError, Result};
