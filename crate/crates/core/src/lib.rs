//! Discovery of sparse graph structure over objects and latent cluster nodes.
//!
//! Given a feature matrix (or a similarity matrix converted to features), the
//! library learns an undirected weighted graph in which each object attaches
//! to exactly one latent cluster node and cluster nodes connect to each other
//! freely. The graph parameterizes a zero-mean Gaussian over node values via
//! its Laplacian, and learning maximizes the data log-likelihood minus a
//! per-edge penalty `β`. Sparse connectivity is found by Structural EM with
//! an ℓ1-relaxed convex inner step; the object partition is found by a greedy
//! split/merge/swap search seeded by k-means.
//!
//! The learned graph doubles as a prior over binary properties for Bayesian
//! property induction, and its cluster topology can be matched against
//! simple logical definitions of named forms (clusters, chain, ring, tree).

pub mod cluster;
pub mod connection;
pub mod data;
pub mod error;
pub mod exec;
pub mod forms;
pub mod induction;
pub mod model;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    build_laplacian, build_precision, marginal_loglik, posterior_score, DataMatrix, EdgeCount,
    PrecisionMatrix, Structure, StructureScore,
};
