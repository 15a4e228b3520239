//! Differential invariants of discrete planar curves.
//!
//! Two families of estimators produce per-point `(κ, κ_s)` signatures:
//! axiomatic joint-invariant constructions ([`axiomatic`]) and a Siamese
//! multilayer network trained self-supervised ([`nn`], [`training`]).
//! Signatures are compared with an average Hausdorff distance for
//! shape matching ([`matching`]).

pub mod axiomatic;
pub mod datasets;
pub mod error;
pub mod geometry;
pub mod matching;
pub mod nn;
pub mod rng;
pub mod signature;
pub mod smooth;
pub mod training;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{AffineMap, NeighborhoodSample, PlanarCurve, Point, SamplingPmf};
pub use signature::{Group, InvariantEstimate, SignatureCurve};
