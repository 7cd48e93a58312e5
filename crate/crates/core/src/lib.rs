//! Energy functionals, capacities, best Hardy constants, criticality
//! machinery, Cheeger bounds and fractional weights for quasilinear
//! Schrödinger operators on finite weighted graphs.
//!
//! A weighted graph carries a positive vertex measure `m`, a sign-changing
//! potential `c`, symmetric nonnegative edge weights `b`, and a homogeneity
//! exponent `p` in (1, inf). Infinite model graphs enter only through
//! finite truncations: deleting the exterior folds the cut edges into the
//! potential, which is exact for functions vanishing outside the kept set.
//! Every variational quantity here (capacities, best constants, null
//! sequences) is computed on such truncations, with the solver bias
//! direction documented where it matters.
//!
//! Dual routes everywhere: iterative solvers are checked against linear or
//! spectral oracles at p = 2, quadratures against functional calculus, and
//! closed-form families (paths, trees, boxes) against hand formulas.

#![forbid(unsafe_code)]

pub mod capacity;
pub mod checks;
pub mod cheeger;
pub mod corpus;
pub mod energy;
pub mod error;
pub mod fractional;
pub mod generate;
pub mod graph;
pub mod hardy;
pub mod io;
pub mod numeric;
pub mod report;
pub mod simplified;
pub mod solver;
pub mod subsets;

pub use error::{Error, Result};
pub use graph::{
    combinatorial_distance, restrict, restrict_ids, validate, EdgeTable, ExhaustionPlan,
    GraphData, ValidationReport, VertexFunction, WeightedGraph,
};
