//! Multilevel default cascades on multiplex networks whose layers are debts of
//! increasing seniority.
//!
//! The crate has four parts:
//!
//! * [`netgen`] builds multiplex lender→borrower networks (Erdős–Rényi,
//!   configuration model, static scale-free model, seniority splitting).
//! * [`dynamics`] runs the threshold cascade on a concrete network and
//!   averages replicas.
//! * [`theory`] evaluates the tree approximation: degree laws, the recursion
//!   fixed point and the Jacobian-based cascade conditions.
//! * [`regions`] rasterizes cascade regions, measures cascade windows and
//!   searches for the optimal ratio of senior to junior loans.
//!
//! Layers are indexed from 0 (most junior) to `M - 1` (most senior). Default
//! levels are indexed from 1: a node at level `i` has defaulted on every
//! layer `< i`, and level 0 means solvent.

pub mod dynamics;
pub mod error;
pub mod netgen;
pub mod network;
pub mod regions;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use network::{Edge, MultiplexNetwork};
