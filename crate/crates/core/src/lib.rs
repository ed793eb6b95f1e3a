//! Spectral-edge simulation for sparse Erdős–Rényi graphs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiment;
pub mod graph;
pub mod local;
pub mod pointproc;
pub mod probdist;
pub mod prune;
pub mod rng;
pub mod sparse_eigen;
pub mod tree_eig;
mod scalar;

pub use scalar::Scalar;

pub type BallEigenPair64 = tree_eig::BallEigenPair<f64>;
pub type BallEigenPair32 = tree_eig::BallEigenPair<f32>;
pub type SpectralResult64 = sparse_eigen::SpectralResult<f64>;
pub type SpectralResult32 = sparse_eigen::SpectralResult<f32>;
pub type SparseVector64 = sparse_eigen::SparseVector<f64>;
pub type SparseVector32 = sparse_eigen::SparseVector<f32>;
