//! Tree approximation of the cascade on random multiplex networks.
//!
//! Degree laws ([`DegreeModel`]) per layer feed two things: the recursion for
//! the probability that a node ends at each default level, iterated to a
//! [`FixedPoint`], and its linearization at the origin ([`JacobianMatrix`]),
//! whose largest eigenvalue exceeding one is the first-order cascade
//! condition.

mod degree;
mod ensemble;
mod jacobian;
mod recursion;

pub use degree::{DegreeLaw, DegreeModel, DEFAULT_TAIL_TOLERANCE};
pub use ensemble::{
    max_fragile_total, truncated_expectation, truncated_expectation_with_borrowings, ModelEnsemble, Truncated,
};
pub use jacobian::{
    build_jacobian, build_jacobian_exogenous, build_jacobian_undirected, cascade_conditions,
    jacobian_m_er_closed_form, CascadeConditions, JacobianKind, JacobianMatrix,
};
pub use recursion::{iterate_recursion, recursion_map, FixedPoint, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
