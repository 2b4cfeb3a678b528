//! Wright–Fisher diffusions and the stick-breaking (GEM) diffusion built from them.
//!
//! The crate is organised bottom-up:
//!
//! - [`constants`]: closed-form curvature constants, the intrinsic distance, Harnack
//!   exponents and the series that control the infinite product.
//! - [`spectral`]: the Jacobi eigenbasis of the one-dimensional generator, used as an
//!   exact-in-the-limit oracle for the heat kernel and the semigroup.
//! - [`sim`]: seeded path simulation, the coupling by change of measure and a
//!   Monte-Carlo engine whose reductions do not depend on the worker count.
//! - [`gem`]: the stick-breaking maps, GEM samplers and product-form kernel bounds.
//! - [`verify`]: finite-surrogate checks that emit serialisable [`verify::CheckReport`]s.

pub mod constants;
pub mod error;
pub mod gem;
pub mod sim;
pub mod spectral;
pub mod stats;
pub mod verify;

pub use constants::{ParamSequence, SequenceRule, WFParams};
pub use error::{Error, Result};
