//! Small-scale limit analysis of drift families: given a drift `rho`
//! and normalizing maps `phi1`, `phi2` on a shrinking scale parameter,
//! classify the limiting law of the rescaled crossing time into one of
//! four cases (driftless, explosion at a finite time, power drift, or
//! collapse to a point mass at zero), estimate its parameters, and
//! verify the exact scale-invariance identities and the convergence of
//! finite-scale CDFs to the limit.
//!
//! Everything runs in log space: the interesting families grow or decay
//! beyond f64 range along the scale ladder, so the normalized drift
//! `h(lambda, t) = phi1(lambda) * rho(lambda*t) / sqrt(lambda*t)` is
//! manipulated as `log h` throughout and only exponentiated where the
//! value is known to be moderate.

use serde::Serialize;

use crate::dinverse::DInverseDistribution;
use crate::drift::{default_probe_grid, verify_condition_a, ConditionA, DriftFunction};
use crate::error::{Error, Result};
use crate::numerics::{log_grid, normal_cdf};

/// Thresholds from the numeric limit-detection procedure: a profile
/// point counts as vanishing below `SMALL`, diverging above `LARGE`,
/// and as a finite limit when its tail is Cauchy to `CAUCHY_REL`.
const SMALL_LOG: f64 = -18.420680743952367; // ln(1e-8)
const LARGE_LOG: f64 = 18.420680743952367; // ln(1e8)
const CAUCHY_REL: f64 = 1e-4;
/// Trailing window length for trend decisions.
const TAIL: usize = 5;
/// Minimum consistent per-step log growth that counts as geometric
/// divergence: a tail growing by at least ln(2)/8 per step (about 9%)
/// extrapolates past any threshold, while a converging tail's
/// increments vanish. Lets slow power-law divergence (e.g. lambda^-1/2)
/// be recognized before it crosses the absolute threshold.
const GEOMETRIC_LOG_STEP: f64 = std::f64::consts::LN_2 / 8.0;

/// One probed time point in a limit-profile diagnostic: the estimated
/// limit of the normalized drift at time `t` across the lambda ladder,
/// and how that estimate was classified.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ProfilePoint {
    pub t: f64,
    pub estimate: f64,
    pub class: ProfileClass,
}

/// Classification of a single profile point's limit estimate.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProfileClass {
    /// Limit indistinguishable from zero.
    Zero,
    /// Converged to a finite non-zero value.
    Finite,
    /// Diverging to +infinity along the ladder.
    Infinite,
    /// No stable trend across the ladder.
    Unresolved,
}

/// A positive function of the scale parameter, evaluable in log space.
#[derive(Clone)]
pub enum ScaleFn {
    /// `c * u^alpha` with `c > 0`.
    Power { c: f64, alpha: f64 },
    /// `c * u^alpha * exp(gamma / u)` with `c > 0`.
    PowerExp { c: f64, alpha: f64, gamma: f64 },
    /// Log-log linear interpolation between positive knots, constant
    /// beyond the ends.
    Tabulated { knots: Vec<(f64, f64)> },
    /// Arbitrary evaluator with an optional log-scale companion.
    Custom {
        f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        log_f: Option<std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    },
}

impl std::fmt::Debug for ScaleFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScaleFn::Power { c, alpha } => write!(f, "Power {{ c: {c}, alpha: {alpha} }}"),
            ScaleFn::PowerExp { c, alpha, gamma } => {
                write!(f, "PowerExp {{ c: {c}, alpha: {alpha}, gamma: {gamma} }}")
            }
            ScaleFn::Tabulated { knots } => write!(f, "Tabulated({} knots)", knots.len()),
            ScaleFn::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl ScaleFn {
    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 || !alpha.is_finite() {
            return Err(Error::domain(format!(
                "scale function requires finite c > 0 and finite alpha, got c = {c}, alpha = {alpha}"
            )));
        }
        Ok(ScaleFn::Power { c, alpha })
    }

    pub fn power_exp(c: f64, alpha: f64, gamma: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 || !alpha.is_finite() || !gamma.is_finite() {
            return Err(Error::domain(
                "scale function requires finite c > 0 and finite exponents".to_string(),
            ));
        }
        Ok(ScaleFn::PowerExp { c, alpha, gamma })
    }

    /// `sqrt(u)`, the reference normalization.
    pub fn sqrt() -> Self {
        ScaleFn::Power { c: 1.0, alpha: 0.5 }
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::input("tabulated scale function needs knots"));
        }
        for (i, &(u, v)) in knots.iter().enumerate() {
            if !(u > 0.0) || !u.is_finite() || !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!(
                    "tabulated scale knot {i} must be positive and finite, got ({u}, {v})"
                )));
            }
            if i > 0 && u <= knots[i - 1].0 {
                return Err(Error::input(
                    "tabulated scale knots must have strictly increasing arguments".to_string(),
                ));
            }
        }
        Ok(ScaleFn::Tabulated { knots })
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScaleFn::Custom {
            f: std::sync::Arc::new(f),
            log_f: None,
        }
    }

    pub fn custom_with_log(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        log_f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScaleFn::Custom {
            f: std::sync::Arc::new(f),
            log_f: Some(std::sync::Arc::new(log_f)),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            ScaleFn::Power { c, alpha } => c * u.powf(*alpha),
            ScaleFn::PowerExp { c, alpha, gamma } => c * u.powf(*alpha) * (gamma / u).exp(),
            ScaleFn::Tabulated { .. } => self.log_eval(u).exp(),
            ScaleFn::Custom { f, .. } => f(u),
        }
    }

    /// `ln` of the value, exact in log space for the parametric forms.
    pub fn log_eval(&self, u: f64) -> f64 {
        match self {
            ScaleFn::Power { c, alpha } => c.ln() + alpha * u.ln(),
            ScaleFn::PowerExp { c, alpha, gamma } => c.ln() + alpha * u.ln() + gamma / u,
            ScaleFn::Tabulated { knots } => {
                let lu = u.ln();
                let first = knots.first().expect("validated nonempty");
                let last = knots.last().expect("validated nonempty");
                if u <= first.0 {
                    return first.1.ln();
                }
                if u >= last.0 {
                    return last.1.ln();
                }
                let idx = knots.partition_point(|&(ku, _)| ku <= u) - 1;
                let (u0, v0) = knots[idx];
                let (u1, v1) = knots[idx + 1];
                let (lu0, lu1) = (u0.ln(), u1.ln());
                v0.ln() + (v1.ln() - v0.ln()) * (lu - lu0) / (lu1 - lu0)
            }
            ScaleFn::Custom { f, log_f } => match log_f {
                Some(lf) => lf(u),
                None => f(u).ln(),
            },
        }
    }
}

/// A drift together with its normalizing maps and the probe grids for
/// the limit analysis. The drift must be admissible and strictly
/// positive on `(0, inf)`; the normalizers must be positive (finite in
/// log space) on the scale grid.
#[derive(Debug, Clone)]
pub struct ScalingFamily {
    rho: DriftFunction,
    phi1: ScaleFn,
    phi2: ScaleFn,
    lambda_grid: Vec<f64>,
    t_grid: Vec<f64>,
}

/// Default scale ladder: `2^-k` for `k = 4..=40`, decreasing.
pub fn default_lambda_grid() -> Vec<f64> {
    (4..=40).map(|k| 2f64.powi(-k)).collect()
}

/// Default probe times: 24 log-spaced points spanning `[1/16, 16]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1.0 / 16.0, 16.0, 24).expect("constant bounds are valid")
}

impl ScalingFamily {
    pub fn new(rho: DriftFunction, phi1: ScaleFn, phi2: ScaleFn) -> Result<Self> {
        Self::with_grids(rho, phi1, phi2, default_lambda_grid(), default_t_grid())
    }

    pub fn with_grids(
        rho: DriftFunction,
        phi1: ScaleFn,
        phi2: ScaleFn,
        lambda_grid: Vec<f64>,
        t_grid: Vec<f64>,
    ) -> Result<Self> {
        if lambda_grid.len() < 2
            || !lambda_grid.windows(2).all(|w| w[0] > w[1])
            || !lambda_grid.iter().all(|&l| l > 0.0 && l.is_finite())
        {
            return Err(Error::input(
                "scale grid must be a decreasing sequence of positive values".to_string(),
            ));
        }
        if t_grid.is_empty() || !t_grid.windows(2).all(|w| w[0] < w[1]) || !(t_grid[0] > 0.0) {
            return Err(Error::input(
                "time grid must be increasing and positive".to_string(),
            ));
        }
        if let ConditionA::Violated { t_lo, t_hi, ratio_lo, ratio_hi } =
            verify_condition_a(&rho, &default_probe_grid())?
        {
            return Err(Error::ConditionA { t_lo, t_hi, ratio_lo, ratio_hi });
        }
        for &t in &[t_grid[0], 1.0, *t_grid.last().expect("nonempty")] {
            if rho.log_eval(t) == f64::NEG_INFINITY {
                return Err(Error::domain(format!(
                    "scaling analysis requires a strictly positive drift, but it vanishes at t = {t}"
                )));
            }
        }
        for &l in &lambda_grid {
            for (name, sf) in [("phi1", &phi1), ("phi2", &phi2)] {
                let lv = sf.log_eval(l);
                if lv.is_nan() || lv.is_infinite() {
                    return Err(Error::evaluation(
                        format!("{name} must be positive and finite in log space"),
                        l,
                    ));
                }
            }
        }
        Ok(ScalingFamily {
            rho,
            phi1,
            phi2,
            lambda_grid,
            t_grid,
        })
    }

    pub fn rho(&self) -> &DriftFunction {
        &self.rho
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    /// `ln h(lambda, t)` for the normalized drift
    /// `h = phi1(lambda) * rho(lambda t) / sqrt(lambda t)`.
    fn h_log(&self, lambda: f64, t: f64) -> f64 {
        let lt = lambda * t;
        self.phi1.log_eval(lambda) + self.rho.log_eval(lt) - 0.5 * lt.ln()
    }
}

/// Result of the level-normalization limit `phi2(lambda)/sqrt(lambda)`.
#[derive(Debug, Clone, Serialize)]
pub struct PEstimate {
    /// Extrapolated limit; meaningful only when `converged`.
    pub p: f64,
    /// Whether the trailing values are relatively Cauchy to 1e-3.
    pub converged: bool,
    /// The ratio at each grid scale, for diagnostics.
    pub trace: Vec<f64>,
}

/// One Aitken extrapolation step on the last three values, falling back
/// to the final value when the step is degenerate.
fn extrapolate_tail(values: &[f64]) -> f64 {
    let n = values.len();
    let last = values[n - 1];
    if n < 3 {
        return last;
    }
    let (a0, a1, a2) = (values[n - 3], values[n - 2], last);
    let denom = a2 - 2.0 * a1 + a0;
    if denom != 0.0 && denom.is_finite() {
        let aitken = a2 - (a2 - a1) * (a2 - a1) / denom;
        if aitken.is_finite() {
            return aitken;
        }
    }
    last
}

fn tail_is_cauchy(values: &[f64], rel: f64) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let scale = values[n - 1].abs().max(1e-300);
    values[n - 3..]
        .windows(2)
        .all(|w| w[0].is_finite() && w[1].is_finite() && (w[1] - w[0]).abs() <= rel * scale)
}

/// Estimates `p = lim phi2(lambda)/sqrt(lambda)` along the family's
/// scale grid. Divergence is reported through `converged = false`, not
/// as an error. Requires at least 8 grid points.
pub fn estimate_p(family: &ScalingFamily) -> Result<PEstimate> {
    if family.lambda_grid.len() < 8 {
        return Err(Error::input(
            "level-limit estimation needs at least 8 scale points".to_string(),
        ));
    }
    let mut trace = Vec::with_capacity(family.lambda_grid.len());
    for &l in &family.lambda_grid {
        let v = (family.phi2.log_eval(l) - 0.5 * l.ln()).exp();
        if v.is_nan() {
            return Err(Error::evaluation("level ratio is NaN", l));
        }
        trace.push(v);
    }
    let converged = tail_is_cauchy(&trace, 1e-3);
    let p = if converged {
        extrapolate_tail(&trace).max(0.0)
    } else {
        *trace.last().expect("nonempty")
    };
    Ok(PEstimate { p, converged, trace })
}

/// Classifies the limit of the normalized drift at each probe time:
/// vanishing (below 1e-8 and trending down over the trailing window),
/// diverging (above 1e8 and trending up), a finite positive limit
/// (trailing window relatively Cauchy to 1e-4), or unresolved.
///
/// Fails with the profile attached when more than 20% of the probe
/// times are unresolved.
pub fn limit_profile(family: &ScalingFamily) -> Result<Vec<ProfilePoint>> {
    if family.lambda_grid.len() < TAIL {
        return Err(Error::input(
            "limit profile needs at least 5 scale points".to_string(),
        ));
    }
    let profile: Vec<ProfilePoint> = family
        .t_grid
        .iter()
        .map(|&t| classify_point(family, t))
        .collect();
    let unresolved = profile
        .iter()
        .filter(|pt| pt.class == ProfileClass::Unresolved)
        .count();
    if unresolved * 5 > profile.len() {
        return Err(Error::Classification {
            what: format!(
                "{unresolved} of {} probe times have no stable limit trend",
                profile.len()
            ),
            profile,
        });
    }
    Ok(profile)
}

fn classify_point(family: &ScalingFamily, t: f64) -> ProfilePoint {
    let logs: Vec<f64> = family
        .lambda_grid
        .iter()
        .map(|&l| family.h_log(l, t))
        .collect();
    let tail = &logs[logs.len() - TAIL..];
    if tail.iter().any(|v| v.is_nan()) {
        return ProfilePoint {
            t,
            estimate: f64::NAN,
            class: ProfileClass::Unresolved,
        };
    }
    let trending_down = tail.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let trending_up = tail.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let geometric_decay = tail.windows(2).all(|w| w[1] - w[0] <= -GEOMETRIC_LOG_STEP);
    let geometric_growth = tail.windows(2).all(|w| w[1] - w[0] >= GEOMETRIC_LOG_STEP);
    if trending_down && (tail.iter().all(|&v| v < SMALL_LOG) || geometric_decay) {
        return ProfilePoint {
            t,
            estimate: 0.0,
            class: ProfileClass::Zero,
        };
    }
    if trending_up && (tail.iter().all(|&v| v > LARGE_LOG) || geometric_growth) {
        return ProfilePoint {
            t,
            estimate: f64::INFINITY,
            class: ProfileClass::Infinite,
        };
    }
    if tail.iter().all(|&v| v.abs() < 700.0) {
        let values: Vec<f64> = tail.iter().map(|&v| v.exp()).collect();
        if tail_window_is_cauchy(&values, CAUCHY_REL) {
            return ProfilePoint {
                t,
                estimate: values[values.len() - 1],
                class: ProfileClass::Finite,
            };
        }
    }
    ProfilePoint {
        t,
        estimate: tail[tail.len() - 1].exp(),
        class: ProfileClass::Unresolved,
    }
}

/// Relative spread of a whole window against its last value.
fn tail_window_is_cauchy(values: &[f64], rel: f64) -> bool {
    let last = values[values.len() - 1];
    let scale = last.abs().max(1e-300);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    (max - min) <= rel * scale
}

/// The four limit cases for the rescaled crossing-time family.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(tag = "case")]
pub enum ScalingCase {
    /// The limit is the driftless crossing law.
    ZeroDrift,
    /// The limit is the driftless law truncated at `t0`.
    Explosion { t0: f64 },
    /// The limit is the power-drift crossing law.
    PowerDrift { c: f64, alpha: f64 },
    /// The limit collapses to the point mass at time 0.
    Degenerate,
}

/// Numeric traces behind a classification, serialized with the report.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifierDiagnostics {
    pub p_trace: Vec<f64>,
    pub p_converged: bool,
    pub unresolved_points: usize,
    /// Regular-variation slope at the smallest scales (power case).
    pub alpha_slope_trace: Vec<f64>,
    /// Fit quality of the final slope regression (power case).
    pub alpha_r_squared: Option<f64>,
    /// Coefficient trace (power case).
    pub c_trace: Vec<f64>,
    /// Bracket around the split time before refinement (explosion case).
    pub t0_bracket: Option<(f64, f64)>,
}

/// Outcome of [`classify`]: the case, the level normalization `p`, the
/// per-time limit profile, and the numeric traces that justify it.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingLimitReport {
    #[serde(flatten)]
    pub case: ScalingCase,
    pub p: f64,
    pub g_profile: Vec<ProfilePoint>,
    pub diagnostics: ClassifierDiagnostics,
}

/// Classifies the family into one of the four limit cases.
///
/// Decision procedure: the limit profile's classes decide the case
/// (all-vanishing, all-diverging, all-finite, or a vanishing prefix
/// followed by a diverging suffix); the power case fits its exponent by
/// least squares on `ln(rho(lambda t)/rho(lambda))` against `ln t` at
/// the smallest scales (requiring a stabilized slope with R^2 >= 0.999
/// and exponent >= 1/2 - 1e-6) and its coefficient from the limit of
/// `rho(lambda) phi1(lambda)/sqrt(lambda)`; the explosion case refines
/// the split time by geometric bisection with progressively smaller
/// scales until the bracket is relatively narrower than 1e-3. Mixed or
/// unstable profiles are a classification error carrying the profile.
pub fn classify(family: &ScalingFamily) -> Result<ScalingLimitReport> {
    let p_est = estimate_p(family)?;
    if !p_est.converged {
        return Err(Error::non_convergence(format!(
            "level normalization does not converge (trail {:?})",
            &p_est.trace[p_est.trace.len().saturating_sub(3)..]
        )));
    }
    let profile = limit_profile(family)?;
    let unresolved_points = profile
        .iter()
        .filter(|pt| pt.class == ProfileClass::Unresolved)
        .count();

    let mut diagnostics = ClassifierDiagnostics {
        p_trace: p_est.trace.clone(),
        p_converged: true,
        unresolved_points,
        alpha_slope_trace: Vec::new(),
        alpha_r_squared: None,
        c_trace: Vec::new(),
        t0_bracket: None,
    };

    let n_zero = count_class(&profile, ProfileClass::Zero);
    let n_inf = count_class(&profile, ProfileClass::Infinite);
    let n_fin = count_class(&profile, ProfileClass::Finite);
    let resolved = profile.len() - unresolved_points;

    let case = if n_zero == resolved && n_inf == 0 && n_fin == 0 {
        ScalingCase::ZeroDrift
    } else if n_inf == resolved && n_zero == 0 && n_fin == 0 {
        ScalingCase::Degenerate
    } else if n_fin == resolved && n_zero == 0 && n_inf == 0 {
        let (c, alpha) = fit_power_case(family, &mut diagnostics, &profile)?;
        ScalingCase::PowerDrift { c, alpha }
    } else if n_zero > 0 && n_inf > 0 {
        let t0 = refine_split(family, &mut diagnostics, &profile)?;
        ScalingCase::Explosion { t0 }
    } else {
        return Err(Error::Classification {
            what: format!(
                "profile mixes {n_zero} vanishing, {n_fin} finite, {n_inf} diverging, {unresolved_points} unresolved points in no recognizable pattern"
            ),
            profile,
        });
    };

    verify_profile_monotone(&profile)?;
    Ok(ScalingLimitReport {
        case,
        p: p_est.p,
        g_profile: profile,
        diagnostics,
    })
}

fn count_class(profile: &[ProfilePoint], class: ProfileClass) -> usize {
    profile.iter().filter(|pt| pt.class == class).count()
}

/// The limit function must be non-decreasing in `t`; unresolved points
/// are skipped.
fn verify_profile_monotone(profile: &[ProfilePoint]) -> Result<()> {
    let mut max_v = f64::NEG_INFINITY;
    for pt in profile {
        if pt.class == ProfileClass::Unresolved {
            continue;
        }
        let slack = 1e-9 * pt.estimate.abs().max(1.0);
        if pt.estimate < max_v - slack {
            return Err(Error::Classification {
                what: format!(
                    "limit profile decreases at t = {} ({} after {max_v})",
                    pt.t, pt.estimate
                ),
                profile: profile.to_vec(),
            });
        }
        max_v = max_v.max(pt.estimate);
    }
    Ok(())
}

fn fit_power_case(
    family: &ScalingFamily,
    diagnostics: &mut ClassifierDiagnostics,
    profile: &[ProfilePoint],
) -> Result<(f64, f64)> {
    // Exponent: least-squares slope of ln(rho(lambda t)/rho(lambda))
    // against ln t over the probe times, at the three smallest scales.
    let n = family.lambda_grid.len();
    let mut slopes = Vec::new();
    let mut final_r2 = 0.0;
    for &l in &family.lambda_grid[n - 3..] {
        let base = family.rho.log_eval(l);
        let xs: Vec<f64> = family.t_grid.iter().map(|&t| t.ln()).collect();
        let ys: Vec<f64> = family
            .t_grid
            .iter()
            .map(|&t| family.rho.log_eval(l * t) - base)
            .collect();
        let (slope, r2) = ols_slope(&xs, &ys)?;
        slopes.push(slope);
        final_r2 = r2;
    }
    diagnostics.alpha_slope_trace = slopes.clone();
    diagnostics.alpha_r_squared = Some(final_r2);
    let alpha = slopes[2];
    if (alpha - slopes[1]).abs() > 1e-3 * alpha.abs().max(1.0) {
        return Err(Error::Classification {
            what: format!(
                "regular-variation exponent did not stabilize: {} then {alpha}",
                slopes[1]
            ),
            profile: profile.to_vec(),
        });
    }
    if final_r2 < 0.999 {
        return Err(Error::Classification {
            what: format!("exponent regression fit is poor (R^2 = {final_r2})"),
            profile: profile.to_vec(),
        });
    }
    if alpha < 0.5 - 1e-6 {
        return Err(Error::Classification {
            what: format!("fitted exponent {alpha} is below the admissible boundary 1/2"),
            profile: profile.to_vec(),
        });
    }

    // Coefficient: limit of rho(lambda) * phi1(lambda) / sqrt(lambda).
    let c_trace: Vec<f64> = family
        .lambda_grid
        .iter()
        .map(|&l| (family.rho.log_eval(l) + family.phi1.log_eval(l) - 0.5 * l.ln()).exp())
        .collect();
    diagnostics.c_trace = c_trace.clone();
    if !tail_is_cauchy(&c_trace, 1e-3) {
        return Err(Error::Classification {
            what: "power-case coefficient does not converge".to_string(),
            profile: profile.to_vec(),
        });
    }
    let c = extrapolate_tail(&c_trace);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Classification {
            what: format!("power-case coefficient must be positive and finite, got {c}"),
            profile: profile.to_vec(),
        });
    }
    Ok((c, alpha.max(0.5)))
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::input("regression needs at least two points"));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::input("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok((slope, r2))
}

/// Geometric bisection of the vanishing/diverging split time, deciding
/// each midpoint by the trend of `ln h` over scales down to `2^-50`.
fn refine_split(
    family: &ScalingFamily,
    diagnostics: &mut ClassifierDiagnostics,
    profile: &[ProfilePoint],
) -> Result<f64> {
    let last_zero = profile
        .iter()
        .filter(|pt| pt.class == ProfileClass::Zero)
        .map(|pt| pt.t)
        .fold(f64::NEG_INFINITY, f64::max);
    let first_inf = profile
        .iter()
        .filter(|pt| pt.class == ProfileClass::Infinite)
        .map(|pt| pt.t)
        .fold(f64::INFINITY, f64::min);
    if !(last_zero < first_inf) {
        return Err(Error::Classification {
            what: format!(
                "diverging times start at {first_inf} before vanishing times end at {last_zero}"
            ),
            profile: profile.to_vec(),
        });
    }
    for pt in profile {
        let inside = pt.t > last_zero && pt.t < first_inf;
        let conforms = match pt.class {
            ProfileClass::Zero => pt.t <= last_zero,
            ProfileClass::Infinite => pt.t >= first_inf,
            ProfileClass::Finite | ProfileClass::Unresolved => inside,
        };
        if !conforms {
            return Err(Error::Classification {
                what: format!(
                    "profile point at t = {} ({:?}) breaks the vanishing/diverging split",
                    pt.t, pt.class
                ),
                profile: profile.to_vec(),
            });
        }
    }
    diagnostics.t0_bracket = Some((last_zero, first_inf));

    // Trend of ln h across a deep ladder: negative drift means the
    // midpoint is on the vanishing side.
    let ladder: Vec<f64> = (42..=50).step_by(2).map(|k| 2f64.powi(-k)).collect();
    let trend = |t: f64| -> f64 {
        family.h_log(*ladder.last().expect("nonempty"), t) - family.h_log(ladder[0], t)
    };
    let (mut lo, mut hi) = (last_zero, first_inf);
    for _ in 0..80 {
        if (hi - lo) <= 1e-3 * 0.5 * (hi + lo) {
            break;
        }
        let mid = (lo * hi).sqrt();
        let d = trend(mid);
        if d.is_nan() {
            return Err(Error::evaluation("split-refinement trend is NaN", mid));
        }
        if d < -1e-6 {
            lo = mid;
        } else if d > 1e-6 {
            hi = mid;
        } else {
            return Ok(mid); // flat trend: the split itself
        }
    }
    Ok((lo * hi).sqrt())
}

/// The limiting law at level `x`: a genuine crossing-time law in the
/// first three cases, the point mass at time zero in the degenerate
/// case. The law's level is `p * x`.
#[derive(Debug, Clone)]
pub enum LimitLaw {
    Law(DInverseDistribution),
    PointMassAtZero,
}

impl LimitLaw {
    pub fn cdf(&self, t: f64) -> Result<f64> {
        match self {
            LimitLaw::Law(d) => d.cdf(t),
            LimitLaw::PointMassAtZero => {
                if t > 0.0 {
                    Ok(1.0)
                } else {
                    Err(Error::domain(format!("cdf requires t > 0, got {t}")))
                }
            }
        }
    }

    pub fn defect_mass(&self) -> f64 {
        match self {
            LimitLaw::Law(d) => d.defect_mass(),
            LimitLaw::PointMassAtZero => 0.0,
        }
    }
}

/// Maps a classification to the concrete limit law at level `x >= 0`.
pub fn limit_law(report: &ScalingLimitReport, x: f64) -> Result<LimitLaw> {
    let level = report.p * x;
    Ok(match report.case {
        ScalingCase::ZeroDrift => LimitLaw::Law(DInverseDistribution::zero_drift(level)?),
        ScalingCase::Explosion { t0 } => {
            LimitLaw::Law(DInverseDistribution::explosion(t0, level)?)
        }
        ScalingCase::PowerDrift { c, alpha } => {
            LimitLaw::Law(DInverseDistribution::power_drift(c, alpha, level)?)
        }
        ScalingCase::Degenerate => LimitLaw::PointMassAtZero,
    })
}

/// Maximum CDF discrepancy of the power-drift scale-invariance
/// identity: rescaling time by `1/lambda`, the coefficient by
/// `lambda^(1/2 - alpha)`, and the level by `sqrt(lambda)` reproduces
/// the original law exactly. The identity is exact algebra, so the
/// returned discrepancy is rounding noise (contract: <= 1e-12).
pub fn verify_scale_invariance_power(
    c: f64,
    alpha: f64,
    lambda: f64,
    x: f64,
    t_grid: &[f64],
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "scale parameter must be positive and finite, got {lambda}"
        )));
    }
    let base = DInverseDistribution::power_drift(c, alpha, x)?;
    let scaled = DInverseDistribution::power_drift(
        c * lambda.powf(0.5 - alpha),
        alpha,
        lambda.sqrt() * x,
    )?;
    let mut worst = 0.0f64;
    for &t in t_grid {
        let lhs = scaled.cdf(lambda * t)?;
        let rhs = base.cdf(t)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Maximum CDF discrepancy of the explosion-case scale-invariance
/// identity: rescaling time by `1/lambda`, the level by `sqrt(lambda)`,
/// and the truncation time by `lambda` reproduces the law truncated at
/// `t0` exactly.
///
/// The truncation must scale along with time: truncating the rescaled
/// family at the unscaled `t0` instead leaves the laws unequal (their
/// jumps sit at different times), so that variant is not an identity
/// and is not what this checks.
pub fn verify_scale_invariance_explosion(
    t0: f64,
    lambda: f64,
    x: f64,
    t_grid: &[f64],
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "scale parameter must be positive and finite, got {lambda}"
        )));
    }
    let base = DInverseDistribution::explosion(t0, x)?;
    let scaled = DInverseDistribution::explosion(lambda * t0, lambda.sqrt() * x)?;
    let mut worst = 0.0f64;
    for &t in t_grid {
        let lhs = scaled.cdf(lambda * t)?;
        let rhs = base.cdf(t)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Absolute gap between the finite-scale CDF of the rescaled crossing
/// time and the limit law's CDF, at each scale on the family's grid.
///
/// The finite-scale CDF at time `t` is the normal CDF of
/// `h(lambda, t) - phi2(lambda) * x / sqrt(lambda t)`, evaluated in log
/// space so extreme scales saturate to 0/1 instead of overflowing. The
/// family must classify to a non-degenerate case.
pub fn verify_scaling_convergence(
    family: &ScalingFamily,
    x: f64,
    t: f64,
) -> Result<Vec<f64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "level must be finite and >= 0, got {x}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "time must be finite and > 0, got {t}"
        )));
    }
    let report = classify(family)?;
    if report.case == ScalingCase::Degenerate {
        return Err(Error::domain(
            "degenerate limit has no comparison CDF".to_string(),
        ));
    }
    let law = limit_law(&report, x)?;
    let limit_at_t = law.cdf(t)?;
    let gaps = family
        .lambda_grid
        .iter()
        .map(|&l| {
            let h = family.h_log(l, t).exp();
            let arg = if x == 0.0 {
                h
            } else {
                h - x * (family.phi2.log_eval(l) - 0.5 * (l * t).ln()).exp()
            };
            (normal_cdf(arg) - limit_at_t).abs()
        })
        .collect();
    Ok(gaps)
}
