//! The law of the first-crossing time family: for an admissible drift
//! and a level `x`, the random time `Y_x` whose CDF at `t` is the
//! probability that the drifted Brownian terminal value at `t` reaches
//! `x`. Provides exact closed forms for four named drift shapes, a
//! generic curve-inversion sampler, monotone space/time transforms of
//! the law, a reciprocal-law duality check, and a stochastic-order
//! scanner.
//!
//! Throughout, `+inf` is a legitimate sample value: the mass that never
//! reaches the level ([`DInverseDistribution::defect_mass`]).

use crate::drift::{eta, verify_condition_a, ConditionA, DriftFunction, EtaCurve};
use crate::error::{Error, Result};
use crate::montecarlo::{ks_two_sample, EmpiricalLaw, SeededStream};
use crate::numerics::{
    left_inverse_tol, normal_cdf, normal_quantile, MonotoneFn, Tolerances, DEFAULT_TOLERANCES,
};

/// Tighter inversion tolerance used for the space/time-change
/// inversions inside [`transform`], so that transform plumbing stays an
/// order of magnitude below the 1e-12 agreement contracts on CDFs.
const TRANSFORM_TOLERANCES: Tolerances = Tolerances {
    root_xtol: 1e-14,
    quad_abs: 1e-10,
    quad_rel: 1e-8,
    monotone_tol: 1e-12,
};

/// Explosion-time parameter for the process that runs as driftless
/// Brownian motion and jumps to `+inf` at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplosiveProcessSpec {
    pub t0: f64,
}

impl ExplosiveProcessSpec {
    pub fn new(t0: f64) -> Result<Self> {
        if !t0.is_finite() || t0 <= 0.0 {
            return Err(Error::domain(format!(
                "explosion time must be finite and > 0, got {t0}"
            )));
        }
        Ok(ExplosiveProcessSpec { t0 })
    }
}

/// Exact-law tags. When present, CDF, quantile, and sampling use closed
/// algebra instead of curve inversion; the two routes agree pathwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// No drift: finite crossing only on the half of paths that head up.
    ZeroDrift,
    /// Drift `c * t` with `c > 0`: crossing is almost sure.
    ConstantDrift { c: f64 },
    /// Drift `c * t^alpha` with `c > 0`, `alpha >= 1/2`.
    PowerDrift { c: f64, alpha: f64 },
    /// Driftless motion killed at `t0`: the crossing time truncated at
    /// the explosion time.
    Explosion { t0: f64 },
}

/// The distribution of the crossing time `Y_x` for one admissible drift
/// and one level `x >= 0`. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct DInverseDistribution {
    eta: EtaCurve,
    eta_mono: MonotoneFn,
    closed_form: Option<ClosedForm>,
}

impl DInverseDistribution {
    /// Driftless law at level `x`: half the mass never crosses.
    pub fn zero_drift(x: f64) -> Result<Self> {
        Self::with_form(DriftFunction::Zero, x, Some(ClosedForm::ZeroDrift))
    }

    /// Linear-drift law at level `x`. `c = 0` degrades to the driftless
    /// form; `c > 0` crosses almost surely.
    pub fn constant_drift(c: f64, x: f64) -> Result<Self> {
        let drift = DriftFunction::constant(c)?;
        let form = if c == 0.0 {
            ClosedForm::ZeroDrift
        } else {
            ClosedForm::ConstantDrift { c }
        };
        Self::with_form(drift, x, Some(form))
    }

    /// Power-drift law at level `x`. Requires `alpha >= 1/2`, the exact
    /// admissibility boundary; at `alpha = 1/2` the law is defective
    /// with mass `1 - normal_cdf(c)` at infinity.
    pub fn power_drift(c: f64, alpha: f64, x: f64) -> Result<Self> {
        let drift = DriftFunction::power(c, alpha)?;
        if let ConditionA::Violated { t_lo, t_hi, ratio_lo, ratio_hi } =
            verify_condition_a(&drift, &[1.0])?
        {
            return Err(Error::ConditionA { t_lo, t_hi, ratio_lo, ratio_hi });
        }
        // Exponent 1 is the constant-slope form; tagging it as such
        // keeps the two construction routes bit-identical.
        let form = if alpha == 1.0 {
            ClosedForm::ConstantDrift { c }
        } else {
            ClosedForm::PowerDrift { c, alpha }
        };
        Self::with_form(drift, x, Some(form))
    }

    /// Law of the crossing time truncated at the explosion time `t0`.
    pub fn explosion(t0: f64, x: f64) -> Result<Self> {
        let spec = ExplosiveProcessSpec::new(t0)?;
        let t0 = spec.t0;
        let drift = DriftFunction::custom_with_log(
            move |t| if t < t0 { 0.0 } else { f64::INFINITY },
            move |t| if t < t0 { f64::NEG_INFINITY } else { f64::INFINITY },
        );
        Self::with_form(drift, x, Some(ClosedForm::Explosion { t0 }))
    }

    /// Generic construction from any drift: admissibility is verified on
    /// `grid` (a violation is a construction error), the matching closed
    /// form is detected from parametric drifts, and everything else goes
    /// through curve inversion.
    pub fn from_drift(drift: DriftFunction, x: f64, grid: &[f64]) -> Result<Self> {
        if let ConditionA::Violated { t_lo, t_hi, ratio_lo, ratio_hi } =
            verify_condition_a(&drift, grid)?
        {
            return Err(Error::ConditionA { t_lo, t_hi, ratio_lo, ratio_hi });
        }
        let form = match &drift {
            DriftFunction::Zero => Some(ClosedForm::ZeroDrift),
            DriftFunction::Constant { slope } => Some(if *slope == 0.0 {
                ClosedForm::ZeroDrift
            } else {
                ClosedForm::ConstantDrift { c: *slope }
            }),
            DriftFunction::Power { c, alpha } => {
                Some(ClosedForm::PowerDrift { c: *c, alpha: *alpha })
            }
            _ => None,
        };
        Self::with_form(drift, x, form)
    }

    fn with_form(drift: DriftFunction, x: f64, closed_form: Option<ClosedForm>) -> Result<Self> {
        let eta = eta(drift, x)?;
        let eta_mono = eta.as_monotone();
        Ok(DInverseDistribution { eta, eta_mono, closed_form })
    }

    pub fn level(&self) -> f64 {
        self.eta.level()
    }

    pub fn drift(&self) -> &DriftFunction {
        self.eta.drift()
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    /// `P(Y_x <= t)` for `t > 0`: the normal CDF of the normalized
    /// drift gap, with the explosion form saturating to 1 at `t0`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("cdf requires t > 0, got {t}")));
        }
        Ok(match self.closed_form {
            Some(ClosedForm::ZeroDrift) => normal_cdf(-self.level() / t.sqrt()),
            Some(ClosedForm::ConstantDrift { c }) => {
                normal_cdf((c * t - self.level()) / t.sqrt())
            }
            Some(ClosedForm::PowerDrift { c, alpha }) => {
                normal_cdf((c * t.powf(alpha) - self.level()) / t.sqrt())
            }
            Some(ClosedForm::Explosion { t0 }) => {
                if t < t0 {
                    normal_cdf(-self.level() / t.sqrt())
                } else {
                    1.0
                }
            }
            None => normal_cdf(self.eta.eval(t)),
        })
    }

    /// The CDF extended to the whole real line: 0 below the support,
    /// the instant-crossing mass at `t = 0`, and [`Self::cdf`] beyond.
    /// Useful for goodness-of-fit sweeps that probe both sides of
    /// every sample point.
    pub fn cdf_extended(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t == 0.0 {
            self.cdf_at_zero_plus()
        } else {
            self.cdf(t).unwrap_or(f64::NAN)
        }
    }

    /// The atom at time zero: `lim_{t -> 0+} cdf(t)`. Zero for positive
    /// levels; at `x = 0` it is the mass crossing instantly.
    pub fn cdf_at_zero_plus(&self) -> f64 {
        let x = self.level();
        match self.closed_form {
            Some(ClosedForm::ZeroDrift)
            | Some(ClosedForm::ConstantDrift { .. })
            | Some(ClosedForm::Explosion { .. }) => {
                if x > 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
            Some(ClosedForm::PowerDrift { c, alpha }) => {
                if x > 0.0 {
                    0.0
                } else if alpha > 0.5 {
                    0.5
                } else {
                    normal_cdf(c)
                }
            }
            None => normal_cdf(self.eta.eval(1e-30)),
        }
    }

    /// `P(Y_x = +inf)`: one minus the CDF's limit at infinity. Exact
    /// for closed forms; estimated by tail extrapolation otherwise.
    pub fn defect_mass(&self) -> f64 {
        match self.closed_form {
            Some(ClosedForm::ZeroDrift) => 0.5,
            Some(ClosedForm::ConstantDrift { .. }) => 0.0,
            Some(ClosedForm::PowerDrift { c, alpha }) => {
                if alpha > 0.5 {
                    0.0
                } else {
                    1.0 - normal_cdf(c)
                }
            }
            Some(ClosedForm::Explosion { .. }) => 0.0,
            None => tail_defect(|t| self.cdf(t).unwrap_or(f64::NAN)),
        }
    }

    /// Left-continuous quantile over `(0, inf]` for `u` in `[0, 1]`:
    /// the smallest time with at least `u` mass at or below it, `+inf`
    /// once `u` exceeds the total finite mass.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if u.is_nan() || !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!(
                "quantile requires u in [0, 1], got {u}"
            )));
        }
        self.sample_with_z(normal_quantile(u)?)
    }

    /// One draw using a standard normal from `rng`.
    pub fn sample(&self, rng: &mut SeededStream) -> Result<f64> {
        self.sample_with_z(rng.standard_normal())
    }

    /// The crossing time at a given normal draw `z`: the left inverse of
    /// the normalized curve at `z`, via exact algebra when a closed form
    /// is tagged. The finite branch of the driftless form activates for
    /// `z < 0`; the law is unchanged under `z <-> -z`.
    pub fn sample_with_z(&self, z: f64) -> Result<f64> {
        if z.is_nan() {
            return Err(Error::domain("sample draw must not be NaN"));
        }
        let x = self.level();
        match self.closed_form {
            Some(ClosedForm::ZeroDrift) => Ok(zero_drift_time(x, z)),
            Some(ClosedForm::ConstantDrift { c }) => Ok(constant_drift_time(c, x, z)),
            Some(ClosedForm::PowerDrift { c, alpha }) => power_drift_time(c, alpha, x, z),
            Some(ClosedForm::Explosion { t0 }) => Ok(zero_drift_time(x, z).min(t0)),
            None => self.sample_with_z_generic(z),
        }
    }

    /// The same draw map computed by bisecting the normalized curve,
    /// regardless of any closed-form tag. Used to validate that closed
    /// algebra and curve inversion agree pathwise.
    pub fn sample_with_z_generic(&self, z: f64) -> Result<f64> {
        left_inverse_tol(&self.eta_mono, z, &DEFAULT_TOLERANCES)
    }

    /// `n` independent draws, one per substream: draw `i` comes from
    /// `SeededStream::new(seed, first_stream + i)`, so the result is
    /// identical no matter how the loop is scheduled or parallelized.
    pub fn sample_many(&self, seed: u64, first_stream: u64, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut rng = SeededStream::new(seed, first_stream + i as u64);
                self.sample(&mut rng)
            })
            .collect()
    }
}

/// Driftless crossing time at draw `z`: `(x/z)^2` on the downward
/// branch, `+inf` otherwise (and an atom at 0 when the level is 0).
fn zero_drift_time(x: f64, z: f64) -> f64 {
    if x == 0.0 {
        return if z <= 0.0 { 0.0 } else { f64::INFINITY };
    }
    if z < 0.0 {
        (x / z) * (x / z)
    } else {
        f64::INFINITY
    }
}

/// Linear-drift crossing time: the positive root of
/// `c*s^2 - z*s - x = 0` in `s = sqrt(t)`, rationalized on the branch
/// where the naive formula cancels.
fn constant_drift_time(c: f64, x: f64, z: f64) -> f64 {
    let disc = (z * z + 4.0 * c * x).sqrt();
    let s = if z >= 0.0 {
        (z + disc) / (2.0 * c)
    } else {
        // z + disc cancels for z < 0; multiply through by (disc - z).
        2.0 * x / (disc - z)
    };
    s * s
}

/// Power-drift crossing time: smallest `t > 0` with
/// `c*t^alpha - x = z*sqrt(t)`, i.e. the positive root of
/// `q(s) = c*s^(2*alpha) - z*s - x` past the curve's minimum.
fn power_drift_time(c: f64, alpha: f64, x: f64, z: f64) -> Result<f64> {
    if z == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if z == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if alpha == 0.5 {
        // The normalized curve is c - x/sqrt(t): bounded above by c.
        return Ok(if x == 0.0 {
            if z <= c {
                0.0
            } else {
                f64::INFINITY
            }
        } else if z < c {
            let s = x / (c - z);
            s * s
        } else {
            f64::INFINITY
        });
    }
    if x == 0.0 {
        // Curve is c*t^(alpha - 1/2), increasing from 0.
        return Ok(if z <= 0.0 {
            0.0
        } else {
            (z / c).powf(1.0 / (alpha - 0.5))
        });
    }
    // q(0) = -x < 0 and q eventually grows like c*s^(2*alpha): bracket
    // the unique sign change, then safeguarded Newton.
    let q = |s: f64| c * s.powf(2.0 * alpha) - z * s - x;
    let dq = |s: f64| 2.0 * alpha * c * s.powf(2.0 * alpha - 1.0) - z;
    let mut lo = 0.0f64;
    let mut hi = {
        // Past both the curve minimum and the scale where the power
        // term dominates.
        let s_min = if z > 0.0 {
            (z / (2.0 * alpha * c)).powf(1.0 / (2.0 * alpha - 1.0))
        } else {
            0.0
        };
        let mut h = (1.0f64).max(2.0 * s_min);
        let mut guard = 0;
        while q(h) < 0.0 {
            h *= 4.0;
            guard += 1;
            if guard > 600 {
                return Err(Error::non_convergence(
                    "power-drift time bracket expansion stalled".to_string(),
                ));
            }
        }
        h
    };
    let mut s = 0.5 * (lo + hi);
    for _ in 0..120 {
        let qs = q(s);
        if qs == 0.0 {
            break;
        }
        if qs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = dq(s);
        let newton = s - qs / d;
        s = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    Ok(s * s)
}

/// Shared tail-limit estimator: one minus the CDF's limit at infinity,
/// extrapolated from `t = 1e10, 1e11, 1e12` by one Aitken step when the
/// step ratio is stable, else taken at the largest probe.
fn tail_defect(cdf: impl Fn(f64) -> f64) -> f64 {
    let d: Vec<f64> = [1e10, 1e11, 1e12].iter().map(|&t| 1.0 - cdf(t)).collect();
    let denom = d[2] - 2.0 * d[1] + d[0];
    if denom != 0.0 && denom.is_finite() {
        let aitken = d[2] - (d[2] - d[1]) * (d[2] - d[1]) / denom;
        if aitken.is_finite() {
            return aitken.clamp(0.0, 1.0);
        }
    }
    d[2].clamp(0.0, 1.0)
}

/// The law of a monotone space/time change of a crossing-time family:
/// observing `f` of the process on the clock `g`. Its CDF at `t` is the
/// base CDF at level `f^{-1}(y)` evaluated at time `g(t)`; its samples
/// are `g^{-1}` of base samples.
#[derive(Debug, Clone)]
pub struct TransformedDInverse {
    inner: DInverseDistribution,
    f: MonotoneFn,
    g: MonotoneFn,
    y: f64,
}

/// Builds the transformed law at observed level `y`.
///
/// `f` is the space map, continuous and increasing on `[f.lo(), inf)`;
/// `g` is the time change, continuous and increasing on `[0, inf)`
/// (both domains must be unbounded above, and `g` must start at 0).
/// Requires `y >= f(f.lo())`; the base level becomes `f^{-1}(y)`.
pub fn transform(
    dist: &DInverseDistribution,
    f: &MonotoneFn,
    g: &MonotoneFn,
    y: f64,
) -> Result<TransformedDInverse> {
    if g.lo() != 0.0 || g.hi() != f64::INFINITY {
        return Err(Error::domain(
            "time change must be defined on [0, inf)".to_string(),
        ));
    }
    if f.hi() != f64::INFINITY {
        return Err(Error::domain(
            "space map must be defined on [x0, inf)".to_string(),
        ));
    }
    let floor = f.eval(f.lo());
    if y.is_nan() || y < floor {
        return Err(Error::domain(format!(
            "transformed level {y} is below the space map's floor {floor}"
        )));
    }
    let x_inner = left_inverse_tol(f, y, &TRANSFORM_TOLERANCES)?;
    let inner = DInverseDistribution::with_form(
        dist.drift().clone(),
        x_inner,
        dist.closed_form,
    )?;
    Ok(TransformedDInverse {
        inner,
        f: f.clone(),
        g: g.clone(),
        y,
    })
}

impl TransformedDInverse {
    pub fn observed_level(&self) -> f64 {
        self.y
    }

    /// The resolved base level `f^{-1}(y)`.
    pub fn base_level(&self) -> f64 {
        self.inner.level()
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("cdf requires t > 0, got {t}")));
        }
        let s = self.g.eval(t);
        if s > 0.0 {
            self.inner.cdf(s)
        } else {
            Ok(self.inner.cdf_at_zero_plus())
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        let s = self.inner.quantile(u)?;
        left_inverse_tol(&self.g, s, &TRANSFORM_TOLERANCES)
    }

    pub fn sample(&self, rng: &mut SeededStream) -> Result<f64> {
        self.sample_with_z(rng.standard_normal())
    }

    pub fn sample_with_z(&self, z: f64) -> Result<f64> {
        let s = self.inner.sample_with_z(z)?;
        left_inverse_tol(&self.g, s, &TRANSFORM_TOLERANCES)
    }

    /// Mass never observed crossing: accounts for both the base defect
    /// and any time-change range cap (a bounded clock leaves the base
    /// tail unreached).
    pub fn defect_mass(&self) -> f64 {
        tail_defect(|t| {
            let s = self.g.eval(t);
            if s > 0.0 {
                self.inner.cdf(s).unwrap_or(f64::NAN)
            } else {
                self.inner.cdf_at_zero_plus()
            }
        })
    }

    /// A further space/time change applied on top of this law,
    /// observing `f2` of the already-transformed process on clock `g2`.
    /// Equivalent to one transform by (`f2` after `f`, `g` after `g2`).
    pub fn then(&self, f2: &MonotoneFn, g2: &MonotoneFn, y2: f64) -> Result<TransformedDInverse> {
        if g2.lo() != 0.0 || g2.hi() != f64::INFINITY {
            return Err(Error::domain(
                "time change must be defined on [0, inf)".to_string(),
            ));
        }
        let floor2 = f2.eval(f2.lo());
        if y2.is_nan() || y2 < floor2 {
            return Err(Error::domain(format!(
                "transformed level {y2} is below the space map's floor {floor2}"
            )));
        }
        let w = left_inverse_tol(f2, y2, &TRANSFORM_TOLERANCES)?;
        let composed_f = f2.compose_after(&self.f);
        let composed_g = self.g.compose_after(g2);
        let x_inner = left_inverse_tol(&self.f, w, &TRANSFORM_TOLERANCES)?;
        let inner = DInverseDistribution::with_form(
            self.inner.drift().clone(),
            x_inner,
            self.inner.closed_form,
        )?;
        Ok(TransformedDInverse {
            inner,
            f: composed_f,
            g: composed_g,
            y: y2,
        })
    }
}

/// Two-sample KS distance between the linear-drift crossing law at
/// `(slope c, level x)` and the reciprocal of the one at `(slope x,
/// level c)`; the two are equal in distribution. Consumes `2n` draws
/// from `rng`. Requires `c, x > 0` and `n >= 1000`.
pub fn duality_check(c: f64, x: f64, n: usize, rng: &mut SeededStream) -> Result<f64> {
    if !(c > 0.0) || !(x > 0.0) {
        return Err(Error::domain(format!(
            "duality check requires c > 0 and x > 0, got c = {c}, x = {x}"
        )));
    }
    if n < 1000 {
        return Err(Error::domain(format!(
            "duality check requires n >= 1000, got {n}"
        )));
    }
    let direct = DInverseDistribution::constant_drift(c, x)?;
    let swapped = DInverseDistribution::constant_drift(x, c)?;
    let a: Result<Vec<f64>> = (0..n).map(|_| direct.sample(rng)).collect();
    let b: Result<Vec<f64>> = (0..n).map(|_| Ok(1.0 / swapped.sample(rng)?)).collect();
    let a = EmpiricalLaw::from_samples(a?)?;
    let b = EmpiricalLaw::from_samples(b?)?;
    ks_two_sample(&a, &b)
}

/// Outcome of the stochastic-order scan over a survival surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DIncreasingCheck {
    /// Survival is non-decreasing in `t` at every scanned level.
    DIncreasing,
    /// Witness of decrease: `survival(t_lo, x) > survival(t_hi, x) + tol`
    /// with `t_lo < t_hi`.
    CounterExample {
        t_lo: f64,
        t_hi: f64,
        x: f64,
        survival_lo: f64,
        survival_hi: f64,
    },
}

/// Scans `survival(t, x)` for monotone non-decrease in `t` at each `x`,
/// with absolute slack `1e-9`. Survival values outside `[0, 1]` are a
/// domain error.
pub fn check_d_increasing(
    survival: impl Fn(f64, f64) -> f64,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<DIncreasingCheck> {
    const TOL: f64 = 1e-9;
    if t_grid.is_empty() || x_grid.is_empty() {
        return Err(Error::input("stochastic-order scan requires nonempty grids"));
    }
    for &x in x_grid {
        let mut max_s = f64::NEG_INFINITY;
        let mut arg_t = f64::NAN;
        for &t in t_grid {
            let s = survival(t, x);
            if s.is_nan() || !(-1e-12..=1.0 + 1e-12).contains(&s) {
                return Err(Error::domain(format!(
                    "survival value {s} at (t = {t}, x = {x}) is outside [0, 1]"
                )));
            }
            if max_s > s + TOL {
                return Ok(DIncreasingCheck::CounterExample {
                    t_lo: arg_t,
                    t_hi: t,
                    x,
                    survival_lo: max_s,
                    survival_hi: s,
                });
            }
            if s > max_s {
                max_s = s;
                arg_t = t;
            }
        }
    }
    Ok(DIncreasingCheck::DIncreasing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::Interpolation;
    use crate::montecarlo::{
        ks_one_sample, ks_one_sample_crit99, ks_two_sample_crit99, DEFAULT_SEED,
    };
    use crate::numerics::log_grid;

    fn grid_100() -> Vec<f64> {
        log_grid(1e-3, 1e3, 100).unwrap()
    }

    #[test]
    fn cdf_named_values() {
        let zero = DInverseDistribution::zero_drift(0.0).unwrap();
        for t in [0.1, 1.0, 7.0] {
            assert_eq!(zero.cdf(t).unwrap(), 0.5);
        }
        let constant = DInverseDistribution::constant_drift(1.0, 0.0).unwrap();
        assert!((constant.cdf(1.0).unwrap() - 0.8413447460685429).abs() <= 1e-14);
        let explosion = DInverseDistribution::explosion(2.0, 1.0).unwrap();
        assert_eq!(explosion.cdf(3.0).unwrap(), 1.0);
        assert_eq!(explosion.cdf(2.0).unwrap(), 1.0);
        assert!(explosion.cdf(1.999).unwrap() < 1.0);
    }

    #[test]
    fn cdf_rejects_nonpositive_times() {
        let d = DInverseDistribution::zero_drift(1.0).unwrap();
        assert!(d.cdf(0.0).is_err());
        assert!(d.cdf(-1.0).is_err());
    }

    #[test]
    fn closed_forms_match_curve_formula() {
        let dists = [
            DInverseDistribution::zero_drift(1.0).unwrap(),
            DInverseDistribution::zero_drift(0.0).unwrap(),
            DInverseDistribution::constant_drift(1.0, 1.0).unwrap(),
            DInverseDistribution::constant_drift(2.5, 0.5).unwrap(),
            DInverseDistribution::power_drift(1.0, 1.0, 0.0).unwrap(),
            DInverseDistribution::power_drift(3.0, 2.0, 1.0).unwrap(),
            DInverseDistribution::power_drift(1.0, 0.5, 1.0).unwrap(),
            DInverseDistribution::explosion(2.0, 1.0).unwrap(),
        ];
        for d in &dists {
            for &t in &grid_100() {
                let closed = d.cdf(t).unwrap();
                let generic = normal_cdf(d.eta.eval(t));
                assert!(
                    (closed - generic).abs() <= 1e-12,
                    "{:?} at t = {t}: {closed} vs {generic}",
                    d.closed_form
                );
            }
        }
    }

    #[test]
    fn quantile_named_values() {
        let constant = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        assert!((constant.quantile(0.5).unwrap() - 1.0).abs() <= 1e-12);
        let zero = DInverseDistribution::zero_drift(1.0).unwrap();
        assert_eq!(zero.quantile(0.6).unwrap(), f64::INFINITY);
        let explosion = DInverseDistribution::explosion(2.0, 0.0).unwrap();
        assert_eq!(explosion.quantile(0.9).unwrap(), 2.0);
    }

    #[test]
    fn quantile_domain_and_boundaries() {
        let d = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        assert!(d.quantile(-0.1).is_err());
        assert!(d.quantile(1.5).is_err());
        assert_eq!(d.quantile(0.0).unwrap(), 0.0);
        assert_eq!(d.quantile(1.0).unwrap(), f64::INFINITY);
        let explosion = DInverseDistribution::explosion(2.0, 0.0).unwrap();
        assert_eq!(explosion.quantile(1.0).unwrap(), 2.0);
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let d = DInverseDistribution::constant_drift(0.7, 1.3).unwrap();
        for k in 1..20 {
            let u = k as f64 / 20.0;
            let t = d.quantile(u).unwrap();
            assert!(
                (d.cdf(t).unwrap() - u).abs() <= 1e-9,
                "round trip at u = {u}"
            );
        }
    }

    #[test]
    fn sample_with_z_named_values() {
        // Driftless: finite branch on downward draws, the mirror of the
        // equivalent-in-law display with the finite branch on upward
        // draws.
        let zero = DInverseDistribution::zero_drift(1.0).unwrap();
        assert!((zero.sample_with_z(-0.3).unwrap() - (1.0 / 0.3) * (1.0 / 0.3)).abs() < 1e-12);
        assert_eq!(zero.sample_with_z(0.3).unwrap(), f64::INFINITY);
        assert_eq!(zero.sample_with_z(0.0).unwrap(), f64::INFINITY);

        let constant = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        assert!((constant.sample_with_z(0.0).unwrap() - 1.0).abs() <= 1e-15);

        let power = DInverseDistribution::power_drift(1.0, 1.0, 0.0).unwrap();
        assert!((power.sample_with_z(1.0).unwrap() - 1.0).abs() <= 1e-12);

        let explosion = DInverseDistribution::explosion(2.0, 1.0).unwrap();
        assert!((explosion.sample_with_z(-1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(explosion.sample_with_z(0.5).unwrap(), 2.0);
    }

    #[test]
    fn closed_and_generic_paths_agree_on_shared_draws() {
        let dists = [
            DInverseDistribution::zero_drift(1.0).unwrap(),
            DInverseDistribution::constant_drift(1.0, 1.0).unwrap(),
            DInverseDistribution::constant_drift(0.3, 2.0).unwrap(),
            DInverseDistribution::power_drift(1.5, 1.25, 0.7).unwrap(),
            DInverseDistribution::power_drift(1.0, 0.5, 1.0).unwrap(),
            DInverseDistribution::explosion(2.0, 1.0).unwrap(),
        ];
        let mut rng = SeededStream::new(DEFAULT_SEED, 0);
        let zs: Vec<f64> = (0..500).map(|_| rng.standard_normal()).collect();
        for d in &dists {
            for &z in &zs {
                let closed = d.sample_with_z(z).unwrap();
                let generic = d.sample_with_z_generic(z).unwrap();
                match (closed.is_finite(), generic.is_finite()) {
                    (true, true) => {
                        let denom = closed.abs().max(1e-12);
                        assert!(
                            ((closed - generic) / denom).abs() <= 1e-9,
                            "{:?} z = {z}: closed {closed} generic {generic}",
                            d.closed_form
                        );
                    }
                    (false, false) => {}
                    _ => panic!(
                        "{:?} z = {z}: finiteness mismatch, closed {closed} generic {generic}",
                        d.closed_form
                    ),
                }
            }
        }
    }

    #[test]
    fn sampled_law_passes_ks_against_cdf() {
        let d = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        let n = 20_000;
        let samples = d.sample_many(DEFAULT_SEED, 0, n).unwrap();
        let law = EmpiricalLaw::from_samples(samples).unwrap();
        assert_eq!(law.infinite_count(), 0);
        let stat = ks_one_sample(&law, |t| d.cdf(t).unwrap()).unwrap();
        assert!(stat < ks_one_sample_crit99(n), "stat {stat}");
    }

    #[test]
    fn zero_drift_defect_and_conditional_law() {
        let x = 1.0;
        let d = DInverseDistribution::zero_drift(x).unwrap();
        let n = 20_000;
        let samples = d.sample_many(DEFAULT_SEED, 1000, n).unwrap();
        let law = EmpiricalLaw::from_samples(samples).unwrap();
        let p = d.defect_mass();
        assert_eq!(p, 0.5);
        let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (law.defect_fraction() - p).abs() <= band,
            "defect {} vs {p}",
            law.defect_fraction()
        );
        // Finite part against the conditional CDF.
        let m = law.finite_samples().len();
        let stat = ks_one_sample(&law, |t| d.cdf(t).unwrap() / (1.0 - p)).unwrap();
        assert!(stat < ks_one_sample_crit99(m), "stat {stat}");
    }

    #[test]
    fn boundary_power_defect_matches_samples() {
        // alpha = 1/2 sits exactly on the admissibility boundary: the
        // curve saturates at c and mass 1 - normal_cdf(c) escapes.
        let (c, x) = (1.0, 1.0);
        let d = DInverseDistribution::power_drift(c, 0.5, x).unwrap();
        let p = d.defect_mass();
        assert!((p - (1.0 - normal_cdf(c))).abs() <= 1e-15);
        let n = 20_000;
        let samples = d.sample_many(DEFAULT_SEED, 2000, n).unwrap();
        let law = EmpiricalLaw::from_samples(samples).unwrap();
        let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((law.defect_fraction() - p).abs() <= band);
    }

    #[test]
    fn defect_mass_named_values() {
        assert_eq!(
            DInverseDistribution::zero_drift(5.0).unwrap().defect_mass(),
            0.5
        );
        assert_eq!(
            DInverseDistribution::constant_drift(1.0, 5.0)
                .unwrap()
                .defect_mass(),
            0.0
        );
        assert_eq!(
            DInverseDistribution::zero_drift(0.0).unwrap().defect_mass(),
            0.5
        );
        assert_eq!(
            DInverseDistribution::explosion(2.0, 1.0)
                .unwrap()
                .defect_mass(),
            0.0
        );
    }

    #[test]
    fn defect_mass_numeric_tail_for_tabulated_drift() {
        // A bounded tabulated drift: the normalized curve tends to 0, so
        // half the mass escapes; the tail extrapolation must find 1/2.
        let drift = DriftFunction::tabulated(
            vec![(0.0, 0.0), (1e8, 1e4)],
            Interpolation::Linear,
        )
        .unwrap();
        let d = DInverseDistribution::from_drift(drift, 1.0, &grid_100()).unwrap();
        assert!(d.closed_form().is_none());
        assert!((d.defect_mass() - 0.5).abs() <= 1e-4, "{}", d.defect_mass());
    }

    #[test]
    fn construction_rejects_inadmissible_drifts() {
        let err = DInverseDistribution::power_drift(1.0, 0.25, 1.0).unwrap_err();
        assert!(matches!(err, Error::ConditionA { .. }), "{err:?}");
        let flat = DriftFunction::tabulated(
            vec![(0.0, 1.0), (1.0, 1.0)],
            Interpolation::Step,
        )
        .unwrap();
        let err =
            DInverseDistribution::from_drift(flat, 1.0, &crate::drift::default_probe_grid())
                .unwrap_err();
        assert!(matches!(err, Error::ConditionA { .. }), "{err:?}");
    }

    #[test]
    fn transform_identity_is_a_no_op() {
        let base = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        let id = MonotoneFn::identity();
        let t = transform(&base, &id, &id, 1.0).unwrap();
        for &tt in &grid_100() {
            let a = t.cdf(tt).unwrap();
            let b = base.cdf(tt).unwrap();
            assert!((a - b).abs() <= 1e-12, "at t = {tt}: {a} vs {b}");
        }
    }

    #[test]
    fn transform_time_dilation() {
        let base = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        let id = MonotoneFn::identity();
        let g = MonotoneFn::new(0.0, f64::INFINITY, |t| 2.0 * t).unwrap();
        let tr = transform(&base, &id, &g, 1.0).unwrap();
        for &tt in &grid_100() {
            let a = tr.cdf(tt).unwrap();
            let b = base.cdf(2.0 * tt).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
        // Sampling composes the inverse clock: half the base draw.
        let z = -0.7;
        let direct = base.sample_with_z(z).unwrap();
        let via = tr.sample_with_z(z).unwrap();
        assert!((via - direct / 2.0).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn transform_exponential_level_map() {
        // Observing exp of the process at level y is the base law at
        // level ln(y).
        let base = DInverseDistribution::constant_drift(1.0, 0.0).unwrap();
        let f = MonotoneFn::new(0.0, f64::INFINITY, |x: f64| x.exp()).unwrap();
        let id = MonotoneFn::identity();
        let y = (2.0f64).exp();
        let tr = transform(&base, &f, &id, y).unwrap();
        assert!((tr.base_level() - 2.0).abs() <= 1e-12);
        let reference = DInverseDistribution::constant_drift(1.0, 2.0).unwrap();
        for &tt in &grid_100() {
            let a = tr.cdf(tt).unwrap();
            let b = reference.cdf(tt).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn transform_rejects_low_levels() {
        let base = DInverseDistribution::constant_drift(1.0, 0.0).unwrap();
        let f = MonotoneFn::new(0.0, f64::INFINITY, |x: f64| x.exp()).unwrap();
        let id = MonotoneFn::identity();
        // exp floor on [0, inf) is 1.
        assert!(transform(&base, &f, &id, 0.5).is_err());
        assert!(transform(&base, &f, &id, 1.0).is_ok());
    }

    #[test]
    fn transform_composition_collapses() {
        let base = DInverseDistribution::constant_drift(1.0, 0.0).unwrap();
        let f1 = MonotoneFn::new(0.0, f64::INFINITY, |x: f64| x.exp()).unwrap();
        let g1 = MonotoneFn::new(0.0, f64::INFINITY, |t| 2.0 * t).unwrap();
        let f2 = MonotoneFn::new(1.0, f64::INFINITY, |x: f64| x * x).unwrap();
        let g2 = MonotoneFn::new(0.0, f64::INFINITY, |t: f64| t + 0.5 * t * t).unwrap();
        let y2 = 9.0f64; // f2(f1(x)) = exp(2x): x'' = ln(3)

        let first = transform(&base, &f1, &g1, 1.0).unwrap();
        let chained = first.then(&f2, &g2, y2).unwrap();

        let f21 = f2.compose_after(&f1);
        let g12 = g1.compose_after(&g2);
        let single = transform(&base, &f21, &g12, y2).unwrap();

        assert!((chained.base_level() - (3.0f64).ln()).abs() <= 1e-10);
        for &tt in &grid_100() {
            let a = chained.cdf(tt).unwrap();
            let b = single.cdf(tt).unwrap();
            assert!((a - b).abs() <= 1e-12, "at t = {tt}: {a} vs {b}");
        }
    }

    #[test]
    fn duality_statistic_below_critical_value() {
        let n = 10_000;
        let mut rng = SeededStream::new(DEFAULT_SEED, 50);
        let stat = duality_check(1.0, 1.0, n, &mut rng).unwrap();
        assert!(stat < ks_two_sample_crit99(n, n), "stat {stat}");
        let mut rng = SeededStream::new(DEFAULT_SEED, 60);
        let stat = duality_check(2.0, 0.5, n, &mut rng).unwrap();
        assert!(stat < ks_two_sample_crit99(n, n), "stat {stat}");
    }

    #[test]
    fn identical_sample_sets_have_zero_ks() {
        let d = DInverseDistribution::constant_drift(1.0, 1.0).unwrap();
        let a = d.sample_many(7, 0, 2000).unwrap();
        let b = d.sample_many(7, 0, 2000).unwrap();
        assert_eq!(a, b);
        let la = EmpiricalLaw::from_samples(a).unwrap();
        let lb = EmpiricalLaw::from_samples(b).unwrap();
        assert_eq!(ks_two_sample(&la, &lb).unwrap(), 0.0);
    }

    #[test]
    fn duality_input_validation() {
        let mut rng = SeededStream::new(0, 0);
        assert!(duality_check(0.0, 1.0, 1000, &mut rng).is_err());
        assert!(duality_check(1.0, -1.0, 1000, &mut rng).is_err());
        assert!(duality_check(1.0, 1.0, 10, &mut rng).is_err());
    }

    #[test]
    fn d_increasing_scan_cases() {
        let t_grid = log_grid(0.01, 100.0, 60).unwrap();
        let x_grid: Vec<f64> = vec![0.0, 0.25, 0.5, 0.75];
        // Linear drift: survival rises in t at every level.
        let up = check_d_increasing(
            |t, x| normal_cdf((t - x) / t.sqrt()),
            &t_grid,
            &x_grid,
        )
        .unwrap();
        assert_eq!(up, DIncreasingCheck::DIncreasing);
        // Flat drift 1 at levels below 1: survival decays in t.
        let down = check_d_increasing(
            |t, x| normal_cdf((1.0 - x) / t.sqrt()),
            &t_grid,
            &x_grid,
        )
        .unwrap();
        assert!(matches!(down, DIncreasingCheck::CounterExample { .. }));
        // Time-independent survival is (weakly) monotone.
        let flat = check_d_increasing(|_, x| 1.0 - x, &t_grid, &x_grid).unwrap();
        assert_eq!(flat, DIncreasingCheck::DIncreasing);
        // Out-of-range survival values are rejected.
        assert!(check_d_increasing(|_, _| 1.5, &t_grid, &x_grid).is_err());
    }

    #[test]
    fn constant_drift_cdf_is_continuous_at_zero_slope() {
        let zero = DInverseDistribution::zero_drift(1.0).unwrap();
        let t_grid = grid_100();
        let mut last_gap = f64::INFINITY;
        for k in 1..=6 {
            let c = 10f64.powi(-k);
            let d = DInverseDistribution::constant_drift(c, 1.0).unwrap();
            let gap = t_grid
                .iter()
                .map(|&t| (d.cdf(t).unwrap() - zero.cdf(t).unwrap()).abs())
                .fold(0.0f64, f64::max);
            assert!(gap < last_gap, "gap did not shrink at c = {c}");
            last_gap = gap;
        }
        assert!(last_gap < 1e-3, "gap at c = 1e-6 is {last_gap}");
    }

    #[test]
    fn sample_many_is_reproducible_and_order_free() {
        let d = DInverseDistribution::power_drift(1.0, 1.0, 0.5).unwrap();
        let all = d.sample_many(DEFAULT_SEED, 0, 100).unwrap();
        // Each draw depends only on its own substream index.
        for (i, &v) in all.iter().enumerate() {
            let one = d.sample_many(DEFAULT_SEED, i as u64, 1).unwrap();
            assert_eq!(one[0].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn extreme_draws_map_to_support_endpoints() {
        let d = DInverseDistribution::power_drift(2.0, 1.5, 1.0).unwrap();
        assert_eq!(d.sample_with_z(f64::NEG_INFINITY).unwrap(), 0.0);
        assert_eq!(d.sample_with_z(f64::INFINITY).unwrap(), f64::INFINITY);
        assert!(d.sample_with_z(f64::NAN).is_err());
    }
}
