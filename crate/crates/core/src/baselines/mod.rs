//! Reference estimators for the comparison suite.
//!
//! Three baselines bracket the proposed estimator: greedy joint OMP over
//! the full (AoA, AoD, delay) dictionary, a Kronecker-structured LMMSE
//! estimator driven by sample or oracle covariances, and a per-subcarrier
//! angle-only OMP with no cross-subcarrier coherence.

pub mod kron_omp;
pub mod lmmse;
pub mod omp3d;

pub use kron_omp::kron_omp;
pub use lmmse::{lmmse_kron, CovarianceSource, KroneckerCovariance, LmmseConfig};
pub use omp3d::{joint_omp_3d, Omp3dConfig};
