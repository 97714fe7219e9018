//! Tolerances shared by the geometry, prox and convergence layers.
//!
//! Every threshold the library asserts against lives here so that tests and
//! the CLI agree on what "equal" means.

/// Absolute tolerance for exact geometric identities (metric axioms,
/// constant-speed geodesics, quadruple inequality).
pub const GEOM: f64 = 1e-9;

/// The hyperboloid constraint is restored to this accuracy on construction.
pub const HYPERBOLOID_CONSTRAINT: f64 = 1e-12;

/// Points supplied in hyperboloid coordinates may violate the constraint by
/// this much (relative) before construction refuses them.
pub const HYPERBOLOID_ACCEPT: f64 = 1e-6;

/// Default prox tolerance on flat spaces and trees.
pub const PROX_FLAT: f64 = 1e-8;

/// Default prox tolerance when a hyperbolic factor is involved.
pub const PROX_HYPERBOLIC: f64 = 1e-6;

/// Set membership slack, scaled by `max(1, radius)` where it applies.
pub const MEMBERSHIP: f64 = 1e-9;

/// Tree offsets this close to an edge end are snapped onto the vertex.
pub const TREE_SNAP: f64 = 1e-13;

/// Default tolerance for asymptotic centers and weak-limit verdicts.
pub const CENTER: f64 = 1e-6;

/// Maximum nesting depth of `EnvelopeOf`.
pub const MAX_ENVELOPE_DEPTH: usize = 3;
