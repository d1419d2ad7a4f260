//! Lennard-Jones cluster search on lattice regions.
//!
//! Clusters are seeded from cubic, icosahedral and face-centred lattice
//! regions, encoded as lists of region ids, evolved with genotype and
//! phenotype operators, locally minimized, and classified by the nucleus
//! found from their neighbor graph.

// `!(x > 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoding;
pub mod error;
pub mod evolve;
pub mod geometry;
pub mod io;
pub mod lattices;
pub mod matching;
pub mod minimize;
pub mod oracle;
pub mod parallel;
pub mod potential;
pub mod structure;

pub use error::{Error, Result};
pub use geometry::{Cluster, Configuration, Point3};
