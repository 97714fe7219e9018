//! Convex analysis on Hadamard spaces at desk scale.
//!
//! The crate provides proximal mappings and Moreau envelopes for a closed
//! catalog of convex functions on Euclidean spaces, the hyperbolic plane,
//! metric trees and their products, together with executable checks of
//! Mosco convergence, its characterization through envelope convergence,
//! and a complete metric on the cone of proper convex lsc functions.
//!
//! Module map:
//! - [`space`]: points, distances, geodesics, curvature residuals.
//! - [`catalog`]: convex sets and functions, exact proxes, projections.
//! - [`prox`]: numerical proxes, envelopes and the prox/envelope identities.
//! - [`convergence`]: asymptotic centers, weak limits, Mosco and Frolik-Wijsman checks.
//! - [`metric`]: the pseudometric families, the metric rho and Cauchy limits.
//! - [`lab`]: scenario files, property suites and reports used by the CLI.

pub mod catalog;
pub mod convergence;
pub mod error;
pub mod lab;
pub mod metric;
pub mod prox;
pub mod space;
pub mod tolerance;

pub use catalog::{ConvexFunction, ConvexSet, FunctionSequence};
pub use error::{LabError, Result};
pub use space::{distance, geodesic_point, Point, Space, SpaceRef};
