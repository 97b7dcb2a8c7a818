//! Distributional inverses of Brownian motion with a time-dependent
//! drift: closed-form laws, monotone space/time transforms, small-scale
//! limit classification, geometric-Brownian pricing connections, and a
//! seeded Monte Carlo oracle for validating all of it.
//!
//! Modules:
//! - [`numerics`]: normal CDF/quantile, monotone inversion, quadrature.
//! - [`drift`]: drift families, admissibility, the normalized curve.
//! - [`dinverse`]: the crossing-time laws, closed forms, transforms.
//! - [`scaling`]: limit classification of normalized drift families.
//! - [`finance`]: Black-Scholes pricing and the geometric-Brownian
//!   crossing law, with the time-change reduction to standard form.
//! - [`montecarlo`]: counter-based seeded streams, empirical laws,
//!   Kolmogorov-Smirnov checks.
//! - [`cli`]: the command-line front end over all of the above.

pub mod cli;
pub mod dinverse;
pub mod drift;
pub mod error;
pub mod finance;
pub mod montecarlo;
pub mod numerics;
pub mod scaling;

pub use dinverse::{
    check_d_increasing, duality_check, transform, ClosedForm, DIncreasingCheck,
    DInverseDistribution, TransformedDInverse,
};
pub use drift::{eta, verify_condition_a, ConditionA, DriftFunction, EtaCurve, Interpolation};
pub use error::{Error, Result};
pub use finance::{
    black_scholes_call, call_price_monotonicity, gbm_dinverse, gbm_terminal_survival,
    increasing_expectation, price_curve_with_verdict, reduce_functional_gbm, Coefficient,
    GbmSpec, OptionQuote, PriceMonotonicity, PricePoint, TimeChangeReduction,
};
pub use montecarlo::{EmpiricalLaw, SeededStream, DEFAULT_SEED};
pub use scaling::{
    classify, default_lambda_grid, default_t_grid, estimate_p, limit_law, limit_profile,
    verify_scale_invariance_explosion, verify_scale_invariance_power,
    verify_scaling_convergence, LimitLaw, PEstimate, ProfileClass, ProfilePoint, ScaleFn,
    ScalingCase, ScalingFamily, ScalingLimitReport,
};
pub use numerics::{
    integrate, left_inverse, log_grid, normal_cdf, normal_pdf, normal_quantile,
    MonotoneFn, Tolerances, DEFAULT_TOLERANCES,
};
