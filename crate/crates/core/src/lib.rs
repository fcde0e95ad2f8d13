//! Lattice-dynamics tools for rational points near nondegenerate manifolds.
//!
//! * [`manifold`]: Monge charts `x ↦ (x, f̃(x))` with derivative data.
//! * [`lattice`]: successive minima, polar lattices, dual group elements.
//! * [`flow`]: the unipotent and diagonal matrices acting on the chart lattice.
//! * [`arcs`]: major/minor arc classification and its inclusion audit.
//! * [`counting`]: certified counts of rational points in shrinking tubes.
//! * [`theory`]: series classifiers, dimension formulas and exponent calculators.

pub mod arcs;
pub mod counting;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod manifold;
pub mod theory;

pub use error::{Error, Result};
pub use lattice::LatticeBasis;
pub use manifold::{AxisBox, ManifoldChart};
