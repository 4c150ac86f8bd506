//! Statistical-query laboratory: hard Legendre families, simulated oracles,
//! a baseline learner, statistical dimension, and smoothing diagnostics.

mod family;
mod learner;
mod oracle;
mod sda;
mod soft;

pub use family::{coherence_target, correlation_bound, generate_hard_family, HardFamily};
pub use learner::{correlation_scan_learner, scan_learner, LearnerConfig, LearnerOutcome};
pub use oracle::{
    answer_query, vstat_tolerance, AdversaryPolicy, Concept, OracleKind, Query, Reference, SqOracle,
    TranscriptRecord,
};
pub use sda::{sda_bounds, sda_bruteforce, sda_from_correlations, SdaBounds, SdaConvention, SDA_CAP};
pub use soft::{covariance_check, noise_smoothing_check, CovarianceReport, LipschitzReport, SoftIndicator, WidthFlag};
