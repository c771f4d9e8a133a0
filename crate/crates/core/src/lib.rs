//! Products of random positive kernel operators at desk scale.
//!
//! The library realizes the ergodic theory of random products of
//! nonnegative kernels on a finite (or truncated) state space: Doeblin-type
//! minorations by admissible triplets, projective total-variation
//! contraction, Lyapunov-exponent and stationary-law estimation,
//! critical-case oscillation diagnostics, a Leslie-matrix application
//! suite, and a Hilbert-metric comparison layer.

pub mod asymptotics;
pub mod contraction;
pub mod criticality;
pub mod doeblin;
pub mod environment;
pub mod error;
pub mod hilbert;
pub mod kernel;
pub mod leslie;
pub mod measure;
pub mod window;

pub use asymptotics::{
    check_uniform_approx, estimate_h, invariance_check, lyapunov_integral, lyapunov_kingman,
    lyapunov_sequential, lyapunov_sequential_replicated, sample_stationary, HEstimate,
    InvarianceReport, LyapunovEstimate, LyapunovMethod, ProjectiveSample, UniformApproxReport,
};
pub use contraction::{
    aux_p, check_doeblin_minoration, doeblin_nu, growth_ratio_check,
    projective_contraction_check, sandwich_gamma_check, AuxiliaryOperator, CheckRecord,
    SandwichRecord,
};
pub use criticality::{
    center_environment, nh_diagnostic, oscillation_stats, s_trajectory, zero_one_check,
    NhReport, NhVerdict, OscReport, OscVerdict, ZeroOneReport,
};
pub use doeblin::{
    best_triplet, big_gamma, d_horizon, default_eps, delta, gamma_bar, max_c, nu_candidates,
    tau_eps, AdmissibleTriplet, GammaSeries, Provenance, TripletCertificate,
};
pub use environment::{
    check_basic_assumptions, derive_seed, AssumptionReport, EnvVariant, EnvironmentSpec,
    EnvironmentStream,
};
pub use error::{Error, Result};
pub use hilbert::{
    birkhoff_coefficient, compare_contractions, discretize_kernel_example, hennion_d_bound,
    hilbert_distance, is_uniformly_positive, leslie_zero_pattern_persists, ComparisonRow,
    DiscretizedExample, UniformPositivityCertificate,
};
pub use kernel::{projective_step, PositiveKernel, Storage, DENSE_LIMIT};
pub use leslie::{
    audit_conditions, build_counterexample, build_leslie, d_double_prime, d_prime, leslie_c,
    leslie_parts, leslie_triplet, longest_one_run, BlockRule, CounterexampleReport,
    DDoublePrimeReport, DPrimeReport, GrowthRow, LeslieAuditReport,
};
pub use measure::{tv_distance, BoundedFunction, SignedMeasure};
pub use window::{LogVec, NormalizedKernel, ProductWindow};
