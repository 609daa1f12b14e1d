//! Radio-map-aided channel estimation for pilot-starved MIMO-OFDM.
//!
//! The library has two halves. The physical half (`channel`, `adps`,
//! `estimator`, `baselines`) implements the geometric channel simulator,
//! the angular-delay power spectrum offline phase, the radio-map-aided
//! online estimator with its trust-region variant, and three reference
//! estimators (joint 3-D OMP, Kronecker LMMSE, per-subcarrier OMP). The
//! benchmark half (`harness`, `presets`) generates synthetic path-level
//! scenarios, injects controlled radio-map bias, runs paired Monte-Carlo
//! sweeps over pilot length, SNR and map bias, and persists the trial
//! records. The `charm` binary drives everything from the command line.

pub mod adps;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimator;
pub mod files;
pub mod harness;
pub mod linalg;
pub mod presets;

pub use num_complex::Complex64;

pub use adps::{
    build_adps, dirichlet_k, extract_peaks, extract_support, parabolic_refine, trust_clip,
    AdpsGrid, PathSupport, PeakRecord, SupportOptions,
};
pub use channel::{
    dft_pilots, nmse, simulate_rx, steering_vector, synthesize_channel, ChannelTensor,
    MultipathSet, Nmse, Path, PilotMatrix, PilotMode, RxObservations, SystemConfig,
};
pub use baselines::{
    joint_omp_3d, kron_omp, lmmse_kron, CovarianceSource, KroneckerCovariance, LmmseConfig,
    Omp3dConfig,
};
pub use error::{CharmError, Result};
pub use estimator::{
    aod_search, build_projection, charm_estimate, charm_estimate_with_support,
    project_and_compensate, reconstruct, Diagnostics, EstimateResult, EstimatorConfig,
    PathEstimate, ProjectionMatrix,
};
pub use harness::{
    aggregate, derive_seed, generate_location, inject_bias, run_sweep, run_sweep_on,
    sample_covariance, ConditionSummary, Method, MismatchConfig, OperatingPoint, Scenario,
    ScenarioConfig, SweepAxis, SweepContext, SweepSpec, TrialRecord,
};
