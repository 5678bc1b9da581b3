//! Monte Carlo oracle for the closed forms in `ibrelay-core`.
//!
//! Every check draws i.i.d. `CN(0, 1)` channels from seeded ChaCha streams,
//! so a report is a pure function of its arguments and the seed.

pub mod covariance;
pub mod linalg;
pub mod matrix;
pub mod qci_chain;
pub mod report;
pub mod sampler;
pub mod spectral;
pub mod stats;
pub mod suite;

pub use covariance::{check_covariance_identities, CovarianceCheck};
pub use matrix::{check_matrix_inequalities, MatrixCheck};
pub use qci_chain::{simulate_qci_chain, QciChainCheck};
pub use report::Report;
pub use sampler::{sample_channel, ChannelSample};
pub use spectral::{
    empirical_capacity, empirical_eig_check, empirical_noise_levels, empirical_upper_bound, CapacityCheck, EigCheck,
    NoiseLevelCheck, UpperBoundCheck,
};
pub use stats::EmpiricalHistogram;
pub use suite::{run_suite, SuiteLevel, SuiteReport};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;
