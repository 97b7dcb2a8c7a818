//! Scalar numerics underpinning every other module: the standard normal
//! CDF and quantile, monotone-function inversion with explicit boundary
//! conventions, and adaptive quadrature.
//!
//! Accuracy contracts:
//!
//! | primitive         | contract                                                  |
//! |-------------------|-----------------------------------------------------------|
//! | [`normal_cdf`]    | absolute error <= 1e-14; non-decreasing everywhere        |
//! | [`normal_quantile`] | `normal_cdf(normal_quantile(u)) = u` to 1e-12 on [1e-12, 1-1e-12] |
//! | [`left_inverse`]  | x-tolerance 1e-12, absolute below 1 and relative above    |
//! | [`integrate`]     | absolute 1e-10 or relative 1e-8, whichever is looser      |
//!
//! Extended reals: `f64::INFINITY` / `f64::NEG_INFINITY` are legitimate
//! values throughout and propagate through comparisons; large finite
//! sentinels are never used in their place.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance knobs shared by the numeric primitives. Library defaults are
/// [`DEFAULT_TOLERANCES`]; the CLI exposes overrides through its config
/// file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bisection x-tolerance for [`left_inverse`]: absolute below magnitude
    /// one, relative above.
    pub root_xtol: f64,
    /// Absolute error budget for [`integrate`].
    pub quad_abs: f64,
    /// Relative error budget for [`integrate`].
    pub quad_rel: f64,
    /// Slack allowed before a monotonicity check reports a violation.
    pub monotone_tol: f64,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    root_xtol: 1e-12,
    quad_abs: 1e-10,
    quad_rel: 1e-8,
    monotone_tol: 1e-12,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}

/// 1 / sqrt(2 pi).
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_68;

/// Geometric probe expansion in [`left_inverse`] stops at these bounds;
/// beyond them the corresponding domain endpoint is returned.
const EXPANSION_FLOOR: f64 = 1e-18;
const EXPANSION_CEIL: f64 = 1e18;

/// Standard normal CDF. Total on [-inf, +inf]; NaN propagates.
///
/// Computed as `erfc(-z/sqrt(2))/2`, which keeps relative accuracy in the
/// lower tail (the upper tail saturates at 1 in double precision).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile. Requires `u` in [0, 1]; `u = 0` maps to
/// `-inf` and `u = 1` to `+inf`.
///
/// A rational initial estimate (Acklam's regions: two tails split at
/// 0.02425 plus a central region) is polished by Halley iterations against
/// [`normal_cdf`], so the round trip `normal_cdf(normal_quantile(u))`
/// reproduces `u` to well under 1e-12 across [1e-12, 1 - 1e-12].
pub fn normal_quantile(u: f64) -> Result<f64> {
    if u.is_nan() || !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(format!(
            "normal_quantile requires u in [0, 1], got {u}"
        )));
    }
    if u == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if u == 1.0 {
        return Ok(f64::INFINITY);
    }
    let mut x = acklam_estimate(u);
    // Halley refinement against the erfc-based CDF. Converges to the
    // computed CDF's fixed point in two steps; the third is a guard.
    for _ in 0..3 {
        let e = normal_cdf(x) - u;
        if e == 0.0 {
            break;
        }
        let pdf = normal_pdf(x);
        let d = e / pdf;
        if !d.is_finite() {
            break; // density underflowed: keep the rational estimate
        }
        let step = d / (1.0 + 0.5 * d * x);
        let next = x - step;
        if !next.is_finite() || next == x {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Acklam's rational approximation to the normal quantile (relative error
/// below 1.15e-9 before refinement).
fn acklam_estimate(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |p: f64| -> f64 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    if u < P_LOW {
        tail(u)
    } else if u <= 1.0 - P_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - u)
    }
}

/// A non-decreasing real function on an interval `[lo, hi]` contained in
/// `[0, +inf]`. Monotonicity is the caller's contract; [`left_inverse`]
/// and [`MonotoneFn::verify_monotone`] detect violations on the points
/// they actually probe.
#[derive(Clone)]
pub struct MonotoneFn {
    lo: f64,
    hi: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for MonotoneFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MonotoneFn {{ domain: [{}, {}] }}", self.lo, self.hi)
    }
}

impl MonotoneFn {
    /// Builds a monotone function on `[lo, hi]`. Requires
    /// `0 <= lo < hi <= +inf`.
    pub fn new(
        lo: f64,
        hi: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo < 0.0 || !(lo < hi) {
            return Err(Error::domain(format!(
                "monotone domain must satisfy 0 <= lo < hi <= inf, got [{lo}, {hi}]"
            )));
        }
        Ok(MonotoneFn {
            lo,
            hi,
            f: Arc::new(f),
        })
    }

    /// The identity map on `[0, +inf]`.
    pub fn identity() -> Self {
        MonotoneFn {
            lo: 0.0,
            hi: f64::INFINITY,
            f: Arc::new(|x| x),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// `self` after `inner`: `x -> self(inner(x))` on `inner`'s domain.
    /// The caller is responsible for `inner`'s range landing in `self`'s
    /// domain.
    pub fn compose_after(&self, inner: &MonotoneFn) -> MonotoneFn {
        let outer = Arc::clone(&self.f);
        let inner_f = Arc::clone(&inner.f);
        MonotoneFn {
            lo: inner.lo,
            hi: inner.hi,
            f: Arc::new(move |x| outer(inner_f(x))),
        }
    }

    /// Checks non-decrease across `grid` (running-max against each later
    /// point, so violations between non-adjacent probes are caught too).
    pub fn verify_monotone(&self, grid: &[f64]) -> Result<()> {
        verify_nondecreasing(grid, |x| self.eval(x), DEFAULT_TOLERANCES.monotone_tol)
    }
}

/// Shared running-max monotonicity scan. `tol` is scaled by the magnitude
/// of the compared values.
pub(crate) fn verify_nondecreasing(
    grid: &[f64],
    f: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<()> {
    let mut max_so_far = f64::NEG_INFINITY;
    let mut argmax = f64::NAN;
    for &x in grid {
        let v = f(x);
        if v.is_nan() {
            return Err(Error::evaluation("monotone probe returned NaN", x));
        }
        let slack = tol * max_so_far.abs().max(v.abs()).max(1.0);
        if max_so_far > v + slack {
            return Err(Error::NotMonotone {
                x_lo: argmax,
                x_hi: x,
                f_lo: max_so_far,
                f_hi: v,
            });
        }
        if v > max_so_far {
            max_so_far = v;
            argmax = x;
        }
    }
    Ok(())
}

/// Left-continuous generalized inverse: `inf { x in [lo, hi] : f(x) >= y }`,
/// with `inf` of the empty set taken as `hi` (the domain's supremum) and
/// `lo` returned when every probe qualifies.
///
/// Bracketing expands geometrically from 1 by factors of 4 until it leaves
/// [1e-18, 1e18] (clipped to the domain); beyond that range the
/// corresponding domain endpoint is returned. Bisection then refines to the
/// default x-tolerance: 1e-12, absolute below magnitude one and relative
/// above.
pub fn left_inverse(f: &MonotoneFn, y: f64) -> Result<f64> {
    left_inverse_tol(f, y, &DEFAULT_TOLERANCES)
}

/// [`left_inverse`] with explicit tolerances.
pub fn left_inverse_tol(f: &MonotoneFn, y: f64, tol: &Tolerances) -> Result<f64> {
    if y.is_nan() {
        return Err(Error::domain("left_inverse target must not be NaN"));
    }
    if y == f64::NEG_INFINITY {
        return Ok(f.lo());
    }
    let cap_lo = f.lo().max(EXPANSION_FLOOR);
    let cap_hi = f.hi().min(EXPANSION_CEIL.max(cap_lo * 16.0));

    let probe = |x: f64| -> Result<f64> {
        let v = f.eval(x);
        if v.is_nan() {
            return Err(Error::evaluation("left_inverse probe returned NaN", x));
        }
        Ok(v)
    };
    let slack = |a: f64, b: f64| tol.monotone_tol * a.abs().max(b.abs()).max(1.0);

    let start = 1.0f64.clamp(cap_lo, cap_hi);
    let f_start = probe(start)?;

    // Bracket the boundary of { f >= y } between a (below) and q (at or
    // above), expanding geometrically and watching for monotonicity
    // violations among the probes.
    let (mut a, mut fa, mut q, mut fq);
    if f_start >= y {
        // Scan downward for a non-qualifying point.
        q = start;
        fq = f_start;
        loop {
            let lower = (q * 0.25).max(cap_lo);
            if lower >= q {
                return Ok(f.lo()); // every probe qualifies
            }
            let f_lower = probe(lower)?;
            if f_lower > fq + slack(f_lower, fq) {
                return Err(Error::NotMonotone {
                    x_lo: lower,
                    x_hi: q,
                    f_lo: f_lower,
                    f_hi: fq,
                });
            }
            if f_lower < y {
                a = lower;
                fa = f_lower;
                break;
            }
            if lower <= cap_lo {
                return Ok(f.lo());
            }
            q = lower;
            fq = f_lower;
        }
    } else {
        // Scan upward for a qualifying point.
        a = start;
        fa = f_start;
        loop {
            let upper = (a * 4.0).min(cap_hi);
            if upper <= a {
                return Ok(f.hi()); // no probe qualifies
            }
            let f_upper = probe(upper)?;
            if f_upper < fa - slack(fa, f_upper) {
                return Err(Error::NotMonotone {
                    x_lo: a,
                    x_hi: upper,
                    f_lo: fa,
                    f_hi: f_upper,
                });
            }
            if f_upper >= y {
                q = upper;
                fq = f_upper;
                break;
            }
            if upper >= cap_hi {
                return Ok(f.hi());
            }
            a = upper;
            fa = f_upper;
        }
    }

    // Bisect (a, q]; the boundary's infimum lies in this interval. The
    // tolerance is relative to the bracket's scale (a > 0 here), which is
    // at least as tight as the documented absolute-below-one contract.
    let mut iterations = 0;
    while q - a > tol.root_xtol * a.abs() {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::non_convergence(format!(
                "left_inverse bisection stalled on [{a}, {q}]"
            )));
        }
        let mid = 0.5 * (a + q);
        if mid <= a || mid >= q {
            break; // interval no longer splits in f64
        }
        let fm = probe(mid)?;
        if fm > fq + slack(fm, fq) {
            return Err(Error::NotMonotone {
                x_lo: mid,
                x_hi: q,
                f_lo: fm,
                f_hi: fq,
            });
        }
        if fm < fa - slack(fa, fm) {
            return Err(Error::NotMonotone {
                x_lo: a,
                x_hi: mid,
                f_lo: fa,
                f_hi: fm,
            });
        }
        if fm >= y {
            q = mid;
            fq = fm;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(q)
}

/// Adaptive Simpson quadrature of `f` over the finite interval `[lo, hi]`.
///
/// The budget is the looser of 1e-10 absolute and 1e-8 relative to the
/// first whole-interval estimate. Subintervals narrower than
/// `(hi - lo) * 2^-52` are accepted unconditionally, which bounds the work
/// on jump discontinuities (their residual contribution is at the rounding
/// level for bounded integrands). A non-finite integrand sample is an
/// evaluation error naming the location.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    integrate_tol(f, lo, hi, &DEFAULT_TOLERANCES)
}

/// [`integrate`] with explicit tolerances.
pub fn integrate_tol(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::domain(format!(
            "integrate requires finite lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::evaluation("integrand is not finite", x));
        }
        Ok(v)
    };
    let m = 0.5 * (lo + hi);
    let fa = eval(lo)?;
    let fm = eval(m)?;
    let fb = eval(hi)?;
    let whole = simpson(lo, hi, fa, fm, fb);
    let budget = tol.quad_abs.max(tol.quad_rel * whole.abs());
    let width_floor = (hi - lo) * 2f64.powi(-52);
    adapt(&eval, lo, fa, m, fm, hi, fb, whole, budget, width_floor)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    eval: &impl Fn(f64) -> Result<f64>,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    budget: f64,
    width_floor: f64,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = (left + right - whole) / 15.0;
    if err.abs() <= budget || (b - a) <= width_floor {
        return Ok(left + right + err);
    }
    let half = 0.5 * budget;
    Ok(adapt(eval, a, fa, lm, flm, m, fm, left, half, width_floor)?
        + adapt(eval, m, fm, rm, frm, b, fb, right, half, width_floor)?)
}

/// `n` logarithmically spaced points on `[lo, hi]`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::domain(format!(
            "log_grid requires 0 < lo < hi < inf, got [{lo}, {hi}]"
        )));
    }
    if n < 2 {
        return Err(Error::domain("log_grid requires n >= 2"));
    }
    let (ll, lh) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_matches_reference_points() {
        // Reference values computed from the complementary error function
        // at 30+ digits.
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841344746068542948585232545632),
            (-1.0, 0.158655253931457051414767454368),
            (0.5, 0.691462461274013103637704610608),
            (2.0, 0.977249868051820792828946161087),
            (-7.0, 1.279812543885835004383623690780e-12),
            (8.0, 0.999999999999999377903942572822),
        ];
        for (z, want) in cases {
            assert!(
                (normal_cdf(z) - want).abs() <= 1e-14,
                "cdf({z}) = {} want {want}",
                normal_cdf(z)
            );
        }
    }

    #[test]
    fn cdf_handles_extended_reals() {
        assert_eq!(normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(normal_cdf(f64::INFINITY), 1.0);
        assert!(normal_cdf(f64::NAN).is_nan());
    }

    #[test]
    fn cdf_is_symmetric() {
        for i in 1..400 {
            let z = i as f64 * 0.02;
            assert!(
                (normal_cdf(z) + normal_cdf(-z) - 1.0).abs() <= 1e-15,
                "symmetry defect at z = {z}"
            );
        }
    }

    #[test]
    fn cdf_is_strictly_increasing_where_representable() {
        // Strict increase holds while the per-step increment stays above
        // one ulp of the value; near 1 the upper tail saturates and only
        // non-decrease is representable.
        let mut prev = normal_cdf(-8.0);
        for i in 1..=7000 {
            let z = -8.0 + i as f64 * 0.002;
            let v = normal_cdf(z);
            assert!(v > prev, "not strictly increasing at z = {z}");
            prev = v;
        }
        let mut prev = normal_cdf(-40.0);
        for i in 1..=800 {
            let z = -40.0 + i as f64 * 0.1;
            let v = normal_cdf(z);
            assert!(v >= prev, "decreased at z = {z}");
            prev = v;
        }
    }

    #[test]
    fn cdf_derivative_matches_density() {
        let h = 1e-6;
        for i in 0..=120 {
            let z = -6.0 + i as f64 * 0.1;
            let fd = (normal_cdf(z + h) - normal_cdf(z - h)) / (2.0 * h);
            assert!(
                (fd - normal_pdf(z)).abs() <= 1e-6,
                "derivative mismatch at z = {z}: {fd} vs {}",
                normal_pdf(z)
            );
        }
    }

    #[test]
    fn quantile_round_trip() {
        let mut us = vec![0.5];
        for k in 1..=12 {
            let tail = 10f64.powi(-k);
            us.push(tail);
            us.push(1.0 - tail);
        }
        for k in 1..10 {
            us.push(k as f64 / 10.0);
        }
        for u in us {
            let x = normal_quantile(u).unwrap();
            let back = normal_cdf(x);
            assert!(
                (back - u).abs() <= 1e-12,
                "round trip failed at u = {u}: got {back}"
            );
        }
    }

    #[test]
    fn quantile_boundaries_and_domain() {
        assert_eq!(normal_quantile(0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(normal_quantile(1.0).unwrap(), f64::INFINITY);
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!(normal_quantile(-0.1).is_err());
        assert!(normal_quantile(1.1).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_is_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let x = normal_quantile(u).unwrap();
            assert!(x > prev, "quantile not increasing at u = {u}");
            prev = x;
        }
    }

    #[test]
    fn left_inverse_identity() {
        let id = MonotoneFn::identity();
        let x = left_inverse(&id, 3.0).unwrap();
        assert!((x - 3.0).abs() <= 3.0 * 1e-12);
    }

    #[test]
    fn left_inverse_step_function_picks_jump_point() {
        let step = MonotoneFn::new(0.0, 2.0, |x| if x < 1.0 { 0.0 } else { 1.0 }).unwrap();
        let x = left_inverse(&step, 0.5).unwrap();
        assert!((x - 1.0).abs() <= 1e-11, "got {x}");
    }

    #[test]
    fn left_inverse_boundary_conventions() {
        let f = MonotoneFn::new(0.0, 2.0, |x| x).unwrap();
        // No qualifying point: sup of the domain.
        assert_eq!(left_inverse(&f, 3.0).unwrap(), 2.0);
        // Every point qualifies: inf of the domain.
        assert_eq!(left_inverse(&f, -1.0).unwrap(), 0.0);
        assert_eq!(left_inverse(&f, f64::NEG_INFINITY).unwrap(), 0.0);
        // Unbounded domain, unreachable target: +inf.
        let g = MonotoneFn::new(0.0, f64::INFINITY, |x| x / (1.0 + x)).unwrap();
        assert_eq!(left_inverse(&g, 2.0).unwrap(), f64::INFINITY);
        assert_eq!(left_inverse(&g, f64::INFINITY).unwrap(), f64::INFINITY);
    }

    #[test]
    fn left_inverse_detects_non_monotone_probes() {
        let bump = MonotoneFn::new(0.0, f64::INFINITY, |x| (x - 2.0) * (x - 2.0)).unwrap();
        let err = left_inverse(&bump, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotMonotone { .. }), "got {err:?}");
    }

    #[test]
    fn left_inverse_respects_tight_relative_tolerance() {
        // Root far below 1: the bracket-relative tolerance keeps the
        // relative error near 1e-12 even though the documented contract
        // only promises absolute 1e-12 there.
        let f = MonotoneFn::new(0.0, f64::INFINITY, |x| x.sqrt()).unwrap();
        let x = left_inverse(&f, 1e-3).unwrap();
        assert!(((x - 1e-6) / 1e-6).abs() <= 1e-10, "got {x}");
    }

    #[test]
    fn monotone_fn_rejects_bad_domains() {
        assert!(MonotoneFn::new(-1.0, 2.0, |x| x).is_err());
        assert!(MonotoneFn::new(2.0, 2.0, |x| x).is_err());
        assert!(MonotoneFn::new(f64::NAN, 2.0, |x| x).is_err());
    }

    #[test]
    fn verify_monotone_reports_witness_pair() {
        let f = MonotoneFn::new(0.0, 10.0, |x| if x < 5.0 { x } else { 1.0 }).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        match f.verify_monotone(&grid) {
            Err(Error::NotMonotone { x_lo, x_hi, f_lo, f_hi }) => {
                assert!(x_lo < x_hi);
                assert!(f_lo > f_hi);
            }
            other => panic!("expected NotMonotone, got {other:?}"),
        }
    }

    #[test]
    fn integrate_polynomials() {
        assert!((integrate(|_| 1.0, 0.0, 3.0).unwrap() - 3.0).abs() <= 1e-12);
        assert!((integrate(|t| 2.0 * t, 0.0, 1.0).unwrap() - 1.0).abs() <= 1e-12);
        assert!((integrate(|t| t * t, 0.0, 2.0).unwrap() - 8.0 / 3.0).abs() <= 1e-10);
    }

    #[test]
    fn integrate_jump_integrand() {
        let v = integrate(|t| if t >= 1.0 { 1.0 } else { 0.0 }, 0.0, 2.0).unwrap();
        assert!((v - 1.0).abs() <= 1e-9, "got {v}");
    }

    #[test]
    fn integrate_rejects_non_finite_samples() {
        let err = integrate(|t| 1.0 / (t - 0.5), 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
        assert!(integrate(|_| 1.0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(1e-8, 1e8, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1e-8);
        assert_eq!(g[199], 1e8);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        // For continuous strictly increasing f, membership in { f >= y }
        // is equivalent to sitting at or above the left inverse, up to the
        // bisection tolerance.
        #[test]
        fn left_inverse_threshold_property(
            slope in 0.1f64..10.0,
            intercept in -5.0f64..5.0,
            y in -4.0f64..14.0,
            probe in 0.0f64..10.0,
        ) {
            let s = slope;
            let f = MonotoneFn::new(0.0, 10.0, move |x| intercept + s * x).unwrap();
            let x_star = left_inverse(&f, y).unwrap();
            let band = 1e-9 * (1.0 + x_star.abs());
            prop_assume!((probe - x_star).abs() > band);
            let qualifies = f.eval(probe) >= y;
            prop_assert_eq!(qualifies, probe > x_star);
        }

        #[test]
        fn left_inverse_lands_on_target(
            slope in 0.1f64..10.0,
            y in 0.01f64..9.9,
        ) {
            let s = slope;
            let f = MonotoneFn::new(0.0, f64::INFINITY, move |x| s * x).unwrap();
            let x_star = left_inverse(&f, y).unwrap();
            let residual = (f.eval(x_star) - y).abs();
            prop_assert!(residual <= 1e-9 * (1.0 + y.abs()));
        }

        #[test]
        fn quantile_round_trip_prop(u in 1e-10f64..1.0) {
            prop_assume!(u < 1.0 - 1e-12);
            let x = normal_quantile(u).unwrap();
            prop_assert!((normal_cdf(x) - u).abs() <= 1e-12);
        }
    }
}
