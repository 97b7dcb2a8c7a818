//! The validation oracle: seeded counter-based random streams, empirical
//! laws with an explicit infinite-mass fraction, Kolmogorov-Smirnov
//! statistics, and a terminal-value crossing check.
//!
//! Reproducibility contract: a draw is a pure function of
//! `(seed, stream_id, position)`, so identical seeds give bit-identical
//! samples regardless of run, platform, or how substreams are
//! distributed across threads.

use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::numerics::{normal_cdf, normal_quantile};

/// Default seed used by the CLI and test harnesses when none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Weyl-sequence increment (the golden-ratio constant); coprime to 2^64,
/// so counter positions never collide within a stream.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit finalizer with full avalanche; adjacent inputs map to
/// statistically independent outputs.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A counter-based random stream. Output `k` of stream `s` under seed
/// `g` is `mix64(base(g, s) + k * GAMMA)`: a keyed bijection of the
/// counter, not a recurrence, so streams can be split, skipped, and
/// evaluated in any order with identical results.
#[derive(Debug, Clone)]
pub struct SeededStream {
    base: u64,
    counter: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        // Two mixing rounds separate the seed and stream contributions;
        // streams of one seed and equal stream ids of different seeds
        // both land in unrelated counter ranges.
        let base = mix64(mix64(seed).wrapping_add(stream_id.wrapping_mul(GOLDEN_GAMMA)));
        SeededStream { base, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.base.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform on the open interval (0, 1): a 53-bit lattice offset by
    /// half a step, so 0 and 1 are unreachable and every value has an
    /// exact f64 representation.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via the quantile transform: one `u64` consumed
    /// per draw, monotone in the underlying uniform.
    pub fn standard_normal(&mut self) -> f64 {
        normal_quantile(self.uniform()).expect("uniform is strictly inside (0, 1)")
    }
}

/// An empirical distribution on `(-inf, +inf]`: sorted finite samples
/// plus a count of `+inf` draws (mass escaping to infinity). NaN and
/// `-inf` are rejected at construction.
#[derive(Debug, Clone)]
pub struct EmpiricalLaw {
    finite: Vec<f64>,
    infinite: usize,
}

impl EmpiricalLaw {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut finite = Vec::new();
        let mut infinite = 0usize;
        for s in samples {
            if s.is_nan() || s == f64::NEG_INFINITY {
                return Err(Error::input(format!(
                    "empirical samples must be finite or +inf, got {s}"
                )));
            }
            if s == f64::INFINITY {
                infinite += 1;
            } else {
                finite.push(s);
            }
        }
        if finite.is_empty() && infinite == 0 {
            return Err(Error::input("empirical law needs at least one sample"));
        }
        finite.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN after filtering"));
        Ok(EmpiricalLaw { finite, infinite })
    }

    pub fn n(&self) -> usize {
        self.finite.len() + self.infinite
    }

    pub fn finite_samples(&self) -> &[f64] {
        &self.finite
    }

    pub fn infinite_count(&self) -> usize {
        self.infinite
    }

    /// Fraction of draws equal to `+inf`.
    pub fn defect_fraction(&self) -> f64 {
        self.infinite as f64 / self.n() as f64
    }

    /// Empirical CDF over all `n` samples (infinite draws never qualify).
    pub fn cdf(&self, t: f64) -> f64 {
        self.finite.partition_point(|&s| s <= t) as f64 / self.n() as f64
    }
}

/// One draw of the drifted terminal value `sqrt(t) * z + rho(t)` with
/// `z` standard normal from `rng`. Requires `t > 0`.
pub fn sample_drifted_terminal(
    drift: &DriftFunction,
    t: f64,
    rng: &mut SeededStream,
) -> Result<f64> {
    let z = rng.standard_normal();
    drifted_terminal_with_z(drift, t, z)
}

/// The terminal value at a caller-supplied normal draw, for
/// common-random-number comparisons.
pub fn drifted_terminal_with_z(drift: &DriftFunction, t: f64, z: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "terminal sampling requires t > 0, got {t}"
        )));
    }
    Ok(t.sqrt() * z + drift.eval(t))
}

/// One-sample Kolmogorov-Smirnov statistic of the finite part of `emp`
/// against `cdf`, which must be the analytic CDF conditional on
/// finiteness (rescaled by one minus the defect mass); the defect
/// fraction is tested separately by a binomial check.
///
/// Errors when every sample is infinite: the conditional empirical CDF
/// is then undefined.
pub fn ks_one_sample(emp: &EmpiricalLaw, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = emp.finite_samples();
    let m = xs.len();
    if m == 0 {
        return Err(Error::input(
            "one-sample KS undefined: all samples are infinite",
        ));
    }
    let mf = m as f64;
    let mut stat: f64 = 0.0;
    let mut i = 0usize;
    // Walk groups of tied samples so laws with atoms are measured
    // correctly: against each group the empirical CDF jumps from lo/m
    // to hi/m, and the reference is evaluated on both sides of the
    // group's value (the left limit via the next representable f64
    // down, exact when the law's jump sits at a representable point).
    while i < m {
        let v = xs[i];
        let lo = i;
        let mut hi = i;
        while hi < m && xs[hi] == v {
            hi += 1;
        }
        let f_right = cdf(v);
        let f_left = cdf(v.next_down());
        for f in [f_right, f_left] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::evaluation("CDF value outside [0, 1]", v));
            }
        }
        stat = stat
            .max((f_left - lo as f64 / mf).abs())
            .max((hi as f64 / mf - f_right).abs());
        i = hi;
    }
    Ok(stat)
}

/// 99% critical value for the one-sample KS statistic on `n` samples:
/// `sqrt(-ln(0.005) / 2) / sqrt(n)` (the Dvoretzky-Kiefer-Wolfowitz
/// bound at level 1%, two-sided).
pub fn ks_one_sample_crit99(n: usize) -> f64 {
    ((-(0.005f64.ln())) / 2.0).sqrt() / (n as f64).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic over the merged finite
/// support of `a` and `b`. Infinite-mass fractions are compared
/// separately by the callers that need them.
pub fn ks_two_sample(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<f64> {
    let (xa, xb) = (a.finite_samples(), b.finite_samples());
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::input(
            "two-sample KS needs finite samples on both sides",
        ));
    }
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat: f64 = 0.0;
    // Walk the merged order statistics; the conditional empirical CDFs
    // only move at sample points, and ties must advance both sides
    // before the gap is measured.
    while i < xa.len() || j < xb.len() {
        let next_a = xa.get(i).copied().unwrap_or(f64::INFINITY);
        let next_b = xb.get(j).copied().unwrap_or(f64::INFINITY);
        let x = next_a.min(next_b);
        while i < xa.len() && xa[i] == x {
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            j += 1;
        }
        stat = stat.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(stat)
}

/// 99% critical value for the two-sample KS statistic:
/// `sqrt(-ln(0.005)/2 * (n+m)/(n*m))`.
pub fn ks_two_sample_crit99(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ((-(0.005f64.ln())) / 2.0 * (n + m) / (n * m)).sqrt()
}

/// Result of [`crossing_check`]: the simulated frequency of
/// `B_t + rho(t) >= x`, the analytic value `normal_cdf((rho(t)-x)/sqrt(t))`,
/// and the binomial standard error of the frequency.
#[derive(Debug, Clone, Copy)]
pub struct CrossingCheck {
    pub empirical: f64,
    pub analytic: f64,
    pub standard_error: f64,
}

impl CrossingCheck {
    /// Whether the simulated frequency sits within `k` standard errors
    /// of the analytic probability.
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.analytic).abs() <= k * self.standard_error.max(1e-300)
    }
}

/// Monte Carlo check of the crossing identity: the probability that the
/// drifted terminal value at `t` reaches level `x` equals the normal
/// CDF of the normalized drift gap. Requires `t > 0` and `n >= 10^4`.
pub fn crossing_check(
    drift: &DriftFunction,
    x: f64,
    t: f64,
    n: usize,
    rng: &mut SeededStream,
) -> Result<CrossingCheck> {
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "crossing check requires t > 0, got {t}"
        )));
    }
    if n < 10_000 {
        return Err(Error::domain(format!(
            "crossing check requires n >= 10000, got {n}"
        )));
    }
    let mut hits = 0usize;
    for _ in 0..n {
        if sample_drifted_terminal(drift, t, rng)? >= x {
            hits += 1;
        }
    }
    let empirical = hits as f64 / n as f64;
    let analytic = normal_cdf((drift.eval(t) - x) / t.sqrt());
    let standard_error = (analytic * (1.0 - analytic) / n as f64).sqrt();
    Ok(CrossingCheck {
        empirical,
        analytic,
        standard_error,
    })
}
