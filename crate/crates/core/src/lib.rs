//! Spectral toolkit for generalized hypergraphs with edge-dependent vertex
//! weights: a unified two-step random walk, its equivalence to walks on
//! weighted clique graphs, the associated normalized Laplacian, and a family
//! of spectral convolution models that run on that Laplacian.

pub mod cli;
pub mod edvw;
pub mod equiv;
pub mod error;
pub mod fixtures;
pub mod hypergraph;
pub mod io;
pub mod models;
pub mod partition;
pub mod sparse;
pub mod spectral;
pub mod walk;

pub use error::{HgxError, Result};
pub use hypergraph::{DegreeProfile, Hypergraph, HypergraphBuilder, RhoSpec, StructureReport};
pub use sparse::CsrMatrix;
pub use walk::{TransitionMatrix, WalkKind};
