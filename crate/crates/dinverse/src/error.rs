//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. Variants carry the witness
//! data a caller can act on (probe points, violating pairs, unresolved
//! profiles) rather than prose alone.

use std::fmt;

use crate::scaling::ProfilePoint;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone)]
pub enum Error {
    /// An argument lies outside an operation's domain.
    Domain { what: String },
    /// A supplied function produced a non-finite value where a finite one
    /// is required.
    Evaluation { what: String, at: f64 },
    /// A function expected to be non-decreasing decreased between two
    /// probe points.
    NotMonotone {
        x_lo: f64,
        x_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    /// Drift admissibility failed: t -> rho(t)/sqrt(t) decreased between
    /// two probe points, so the drifted motion is not d-increasing.
    ConditionA {
        t_lo: f64,
        t_hi: f64,
        ratio_lo: f64,
        ratio_hi: f64,
    },
    /// A survival map is not non-decreasing in t, so no d-inverse exists.
    NotDIncreasing { what: String },
    /// The quadratic-variation clock is flat on an interval, so its
    /// inverse (and with it the reduced drift) is ill-defined there.
    DegenerateTimeChange { t_lo: f64, t_hi: f64 },
    /// An iteration failed to reach its tolerance.
    NonConvergence { what: String },
    /// The scaling-limit classifier could not resolve a case; the
    /// per-point limit profile it did compute is attached.
    Classification {
        what: String,
        profile: Vec<ProfilePoint>,
    },
    /// Input files or configuration could not be read or parsed.
    Input { what: String },
}

impl Error {
    pub fn domain(what: impl Into<String>) -> Self {
        Error::Domain { what: what.into() }
    }

    pub fn evaluation(what: impl Into<String>, at: f64) -> Self {
        Error::Evaluation {
            what: what.into(),
            at,
        }
    }

    pub fn non_convergence(what: impl Into<String>) -> Self {
        Error::NonConvergence { what: what.into() }
    }

    pub fn input(what: impl Into<String>) -> Self {
        Error::Input { what: what.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what } => write!(f, "domain error: {what}"),
            Error::Evaluation { what, at } => {
                write!(f, "evaluation error: {what} at {at}")
            }
            Error::NotMonotone { x_lo, x_hi, f_lo, f_hi } => write!(
                f,
                "not monotone: f({x_lo}) = {f_lo} but f({x_hi}) = {f_hi}"
            ),
            Error::ConditionA { t_lo, t_hi, ratio_lo, ratio_hi } => write!(
                f,
                "admissibility violated: rho(t)/sqrt(t) is {ratio_lo} at \
                 t = {t_lo} but {ratio_hi} at t = {t_hi}"
            ),
            Error::NotDIncreasing { what } => {
                write!(f, "not d-increasing: {what}")
            }
            Error::DegenerateTimeChange { t_lo, t_hi } => write!(
                f,
                "degenerate time change: clock is flat on [{t_lo}, {t_hi}]"
            ),
            Error::NonConvergence { what } => {
                write!(f, "did not converge: {what}")
            }
            Error::Classification { what, profile } => write!(
                f,
                "classification failed: {what} ({} profile points attached)",
                profile.len()
            ),
            Error::Input { what } => write!(f, "input error: {what}"),
        }
    }
}

impl std::error::Error for Error {}
