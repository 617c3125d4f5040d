//! Construction and verification toolkit for two-source and affine
//! non-malleable extractors at desk scale.
//!
//! The crate is organized around an exhaustive measurement substrate
//! ([`dist`], [`oracle`]) and a zoo of certified primitives
//! ([`primitives`], [`corrbreak`], [`advice`], [`resilient`]) that the
//! top-level compositions in [`pipeline`] consume. Every randomized
//! search takes an explicit seed, and every certification records what
//! was measured and how.

pub mod advice;
pub mod corrbreak;
pub mod dist;
pub mod error;
pub mod gf2;
pub mod oracle;
pub mod pipeline;
pub mod planner;
pub mod primitives;
pub mod report;
pub mod resilient;
pub mod suites;

pub use error::{Error, Result};
