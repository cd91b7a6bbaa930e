//! Kikuchi spectral method for planted kXOR and sparse spiked tensor PCA.
//!
//! Instances are sampled in [`model`], the Kikuchi operator lives in [`kikuchi`],
//! detection in [`spectral`], recovery in [`recovery`]. The quantum side is split
//! between [`guiding`] (classical analysis of the guiding state), [`circuits`]
//! (gate-level constructions and a small simulator) and [`resources`]
//! (non-asymptotic resource estimates).
//!
//! Linear algebra is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the double-precision variants used by most callers.

pub mod circuits;
pub mod combinatorics;
pub mod error;
pub mod guiding;
pub mod kikuchi;
pub mod linalg;
pub mod model;
pub mod recovery;
pub mod resources;
pub mod rng;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default floating type.
pub type Real = f64;
pub type EigResult = spectral::EigResult<f64>;
pub type GuidingState = guiding::GuidingState<f64>;
pub type VotingMatrix = recovery::VotingMatrix<f64>;
pub type DenseSym = linalg::DenseSym<f64>;
