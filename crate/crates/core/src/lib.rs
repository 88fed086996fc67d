//! Mixup data augmentation for labeled simplicial complexes.
//!
//! Complexes are embedded as step complexons ([`estimation`]), mixed either
//! pairwise or along a convex-clustering path ([`mixup`]), and new complexes
//! are drawn from the mixtures ([`sampling`]). [`complexon`] carries the
//! homomorphism-density machinery and the interpolation bound check;
//! [`pipeline`] chains the steps and [`eval`] measures what augmentation does
//! to a downstream classifier.

pub mod complexon;
pub mod config;
pub mod error;
pub mod estimation;
pub mod eval;
pub mod io;
pub mod mixup;
pub mod pipeline;
pub mod sampling;
pub mod simplicial;

pub use error::{Error, Result};
