//! Synthesis planning and synthesizable molecular design as a learned
//! Markov decision process over synthetic trees.
//!
//! The crate is layered bottom-up:
//!
//! - [`molgraph`]: SMILES subset, canonical forms, Morgan fingerprints.
//! - [`reactions`]: reaction templates, substructure matching, rewrites and
//!   building-block compatibility masks.
//! - [`synthtree`]: synthetic trees and the tree-building environment.
//! - [`datagen`]: random-policy corpus generation and supervised examples.
//! - [`neural`]: dense networks with batch normalization, Adam, checkpoints,
//!   and the exact cosine k-NN index.
//! - [`planner`]: conditional decoding, planning and recovery evaluation.
//! - [`optimizer`]: genetic algorithm over fingerprints.
//! - [`metrics`]: SALI, property correlation and corpus summaries.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the aliases below
//! fix the working precision used by the command-line tools.

pub mod bits;
pub mod datagen;
pub mod hash;
pub mod metrics;
pub mod molgraph;
pub mod neural;
pub mod optimizer;
pub mod planner;
pub mod reactions;
mod scalar;
pub mod synthtree;
pub mod toy;

pub use scalar::Scalar;

/// Working precision for trained models.
pub type Real = f32;
pub type PolicyModel = neural::Policy<Real>;
pub type KnnIndex = neural::KnnIndex<Real>;
pub type Mlp = neural::Mlp<Real>;
