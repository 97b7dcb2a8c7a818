//! Geometric Brownian motion layer: terminal laws, undiscounted call
//! prices, the deterministic time change that reduces functional
//! coefficients to a drifted Brownian motion, the first-hitting law of
//! a price level, and the Stieltjes decomposition showing expectations
//! of increasing payoffs are increasing in maturity.

use std::sync::Arc;

use serde::Serialize;

use crate::dinverse::{transform, DInverseDistribution, TransformedDInverse};
use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::montecarlo::SeededStream;
use crate::numerics::{integrate, left_inverse, log_grid, normal_cdf, MonotoneFn};

/// A time-dependent model coefficient: a constant, a linearly
/// interpolated table (constant beyond its ends), or a closure.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Tabulated { knots: Vec<(f64, f64)> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "Constant({v})"),
            Coefficient::Tabulated { knots } => write!(f, "Tabulated({} knots)", knots.len()),
            Coefficient::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Coefficient {
    pub fn constant(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::domain(format!(
                "constant coefficient must be finite, got {v}"
            )));
        }
        Ok(Coefficient::Constant(v))
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::input("tabulated coefficient needs knots"));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || t < 0.0 || !v.is_finite() {
                return Err(Error::input(format!(
                    "coefficient knot {i} must have finite t >= 0 and finite value, got ({t}, {v})"
                )));
            }
            if i > 0 && t <= knots[i - 1].0 {
                return Err(Error::input(
                    "coefficient knots must have strictly increasing times".to_string(),
                ));
            }
        }
        Ok(Coefficient::Tabulated { knots })
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Tabulated { knots } => {
                let first = knots.first().expect("validated nonempty");
                let last = knots.last().expect("validated nonempty");
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let idx = knots.partition_point(|&(kt, _)| kt <= t) - 1;
                let (t0, v0) = knots[idx];
                let (t1, v1) = knots[idx + 1];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
            Coefficient::Custom(f) => f(t),
        }
    }

    /// The constant value when the coefficient is a constant.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(v) => Some(*v),
            _ => None,
        }
    }
}

/// Geometric Brownian motion `dS = sigma(t) S dB + mu(t) S dt` started
/// at `s0 > 0`, with the volatility required to be positive on the
/// probe horizon. The effective log-drift is
/// `mu_tilde(t) = mu(t) - sigma(t)^2 / 2`.
#[derive(Debug, Clone)]
pub struct GbmSpec {
    s0: f64,
    sigma: Coefficient,
    mu: Coefficient,
}

fn coefficient_probe_grid() -> Vec<f64> {
    log_grid(1e-3, 100.0, 30).expect("constant bounds are valid")
}

impl GbmSpec {
    pub fn new(s0: f64, sigma: Coefficient, mu: Coefficient) -> Result<Self> {
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(Error::domain(format!(
                "initial price must be positive and finite, got {s0}"
            )));
        }
        for &t in &coefficient_probe_grid() {
            let s = sigma.eval(t);
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::domain(format!(
                    "volatility must be positive and finite on the probe horizon, got {s} at t = {t}"
                )));
            }
            let m = mu.eval(t);
            if !m.is_finite() {
                return Err(Error::evaluation("drift coefficient is not finite", t));
            }
        }
        Ok(GbmSpec { s0, sigma, mu })
    }

    pub fn constant(s0: f64, sigma: f64, mu: f64) -> Result<Self> {
        GbmSpec::new(s0, Coefficient::constant(sigma)?, Coefficient::constant(mu)?)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn sigma(&self) -> &Coefficient {
        &self.sigma
    }

    pub fn mu(&self) -> &Coefficient {
        &self.mu
    }

    pub fn mu_tilde(&self, t: f64) -> f64 {
        let s = self.sigma.eval(t);
        self.mu.eval(t) - 0.5 * s * s
    }

    /// `(sigma, mu)` when both coefficients are constants.
    pub fn constant_coefficients(&self) -> Option<(f64, f64)> {
        Some((self.sigma.constant_value()?, self.mu.constant_value()?))
    }

    fn require_constant(&self) -> Result<(f64, f64)> {
        self.constant_coefficients().ok_or_else(|| {
            Error::input("this operation requires constant coefficients".to_string())
        })
    }

    /// Whether the price is a martingale (`mu` identically zero, so
    /// `mu_tilde = -sigma^2/2`), which is the closed-form pricing case.
    pub fn is_martingale(&self) -> bool {
        match &self.mu {
            Coefficient::Constant(v) => *v == 0.0,
            _ => coefficient_probe_grid()
                .iter()
                .all(|&t| self.mu.eval(t).abs() <= 1e-12),
        }
    }
}

/// A strike/maturity pair with its (undiscounted) call price.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptionQuote {
    pub strike: f64,
    pub maturity: f64,
    pub price: f64,
}

impl OptionQuote {
    pub fn new(strike: f64, maturity: f64, price: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::domain(format!(
                "strike must be positive and finite, got {strike}"
            )));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::domain(format!(
                "maturity must be positive and finite, got {maturity}"
            )));
        }
        if !(price >= 0.0) || !price.is_finite() {
            return Err(Error::domain(format!(
                "price must be finite and >= 0, got {price}"
            )));
        }
        Ok(OptionQuote {
            strike,
            maturity,
            price,
        })
    }
}

/// One priced maturity: the quote plus its Monte Carlo standard error
/// (zero when the price came from the closed form).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PricePoint {
    pub quote: OptionQuote,
    pub std_error: f64,
}

/// Undiscounted call price with total volatility `v = sqrt(Var log S)`
/// for the martingale case: `s0 N(d + v/2) - k N(d - v/2)` with
/// `d = -ln(k/s0)/v`.
fn call_with_total_vol(s0: f64, k: f64, v: f64) -> f64 {
    let d = -(k / s0).ln() / v;
    s0 * normal_cdf(d + 0.5 * v) - k * normal_cdf(d - 0.5 * v)
}

/// Undiscounted Black-Scholes call price for the constant-volatility
/// martingale: `C(t) = s0 N(-ln(K/s0)/(sigma sqrt t) + sigma sqrt t/2)
/// - K N(-ln(K/s0)/(sigma sqrt t) - sigma sqrt t/2)`.
pub fn black_scholes_call(s0: f64, sigma: f64, k: f64, t: f64) -> Result<f64> {
    for (name, v) in [("s0", s0), ("sigma", sigma), ("strike", k), ("t", t)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(call_with_total_vol(s0, k, sigma * t.sqrt()))
}

/// `P(S_t >= x)` for constant coefficients:
/// `normal_cdf((mu_tilde t - ln(x/s0)) / (sigma sqrt t))`.
pub fn gbm_terminal_survival(spec: &GbmSpec, x: f64, t: f64) -> Result<f64> {
    let (sigma, mu) = spec.require_constant()?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "price level must be positive and finite, got {x}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!(
            "time must be positive and finite, got {t}"
        )));
    }
    let mu_tilde = mu - 0.5 * sigma * sigma;
    Ok(normal_cdf(
        (mu_tilde * t - (x / spec.s0).ln()) / (sigma * t.sqrt()),
    ))
}

/// The first time the price reaches level `s >= s0`, as a transported
/// crossing-time law: the exponential map `x -> s0 exp(sigma x)` sends
/// the crossing law of the constant-slope drift `(mu_tilde/sigma) t` at
/// level `ln(s/s0)/sigma` to the price hitting law. Exists iff
/// `mu_tilde >= 0`; a negative `mu_tilde` makes the survival
/// probability non-monotone in `t` and the request is refused.
pub fn gbm_dinverse(spec: &GbmSpec, s: f64) -> Result<TransformedDInverse> {
    let (sigma, mu) = spec.require_constant()?;
    let mu_tilde = mu - 0.5 * sigma * sigma;
    if mu_tilde < 0.0 {
        return Err(Error::NotDIncreasing {
            what: format!(
                "the price survival is monotone in t exactly when mu - sigma^2/2 >= 0; \
                 here mu_tilde = {mu_tilde}"
            ),
        });
    }
    if !(s >= spec.s0) || !s.is_finite() {
        return Err(Error::domain(format!(
            "level must satisfy s0 <= s < infinity, got {s} with s0 = {}",
            spec.s0
        )));
    }
    let base = DInverseDistribution::constant_drift(mu_tilde / sigma, 0.0)?;
    let s0 = spec.s0;
    let f = MonotoneFn::new(0.0, f64::INFINITY, move |x| s0 * (sigma * x).exp())?;
    let g = MonotoneFn::identity();
    transform(&base, &f, &g, s)
}

struct ReductionInner {
    spec: GbmSpec,
}

impl ReductionInner {
    fn a(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!(
                "time-change argument must be finite and >= 0, got {t}"
            )));
        }
        let sigma = self.spec.sigma.clone();
        integrate(
            move |u| {
                let s = sigma.eval(u);
                s * s
            },
            0.0,
            t,
        )
    }

    fn b(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!(
                "time-change argument must be finite and >= 0, got {t}"
            )));
        }
        let spec = self.spec.clone();
        integrate(move |u| spec.mu_tilde(u), 0.0, t)
    }
}

/// Deterministic time change reducing a functional-coefficient GBM to
/// a drifted Brownian motion in log scale: running the clock at speed
/// `sigma^2` makes the log price a standard Brownian motion plus the
/// drift `rho(t) = b(a_inv(t))`, where `a = integral of sigma^2` and
/// `b = integral of mu_tilde`.
#[derive(Clone)]
pub struct TimeChangeReduction {
    inner: Arc<ReductionInner>,
    condition_a_ready: bool,
}

impl std::fmt::Debug for TimeChangeReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "TimeChangeReduction {{ condition_a_ready: {} }}",
            self.condition_a_ready
        )
    }
}

/// Builds the time change for a price model, probing that the clock `a` is
/// strictly increasing. The quadratures run on demand, extending to
/// whatever horizon `a_inv` needs rather than extrapolating. The
/// `condition_a_ready` flag records whether `mu_tilde >= 0` held on the
/// probe horizon; when it did not, the reduced drift is returned anyway
/// with the flag cleared, since the reduction itself needs no sign
/// condition.
pub fn reduce_functional_gbm(spec: &GbmSpec) -> Result<TimeChangeReduction> {
    let inner = Arc::new(ReductionInner { spec: spec.clone() });
    let probes = log_grid(1e-2, 100.0, 20).expect("constant bounds are valid");
    let mut prev_t = 0.0f64;
    let mut prev_a = 0.0f64;
    for &t in &probes {
        let a = inner.a(t)?;
        if !(a > prev_a + 1e-14 * a.abs().max(1.0) * (t - prev_t).min(1.0)) {
            return Err(Error::DegenerateTimeChange {
                t_lo: prev_t,
                t_hi: t,
            });
        }
        prev_t = t;
        prev_a = a;
    }
    let condition_a_ready = probes.iter().all(|&t| spec.mu_tilde(t) >= -1e-12);
    Ok(TimeChangeReduction {
        inner,
        condition_a_ready,
    })
}

impl TimeChangeReduction {
    /// `a(t)`, the accumulated squared volatility.
    pub fn a(&self, t: f64) -> Result<f64> {
        self.inner.a(t)
    }

    /// `b(t)`, the accumulated effective log-drift.
    pub fn b(&self, t: f64) -> Result<f64> {
        self.inner.b(t)
    }

    /// Inverse clock: the real time at which `a` reaches `tau`.
    pub fn a_inv(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!(
                "inverse clock argument must be finite and >= 0, got {tau}"
            )));
        }
        let inner = self.inner.clone();
        let a_fn = MonotoneFn::new(0.0, f64::INFINITY, move |t| {
            inner.a(t).unwrap_or(f64::NAN)
        })?;
        left_inverse(&a_fn, tau)
    }

    /// Whether `mu_tilde >= 0` held on the probe horizon, i.e. whether
    /// the reduced drift can satisfy the admissibility condition.
    pub fn condition_a_ready(&self) -> bool {
        self.condition_a_ready
    }

    /// The reduced drift `rho = b compose a_inv` as a drift function.
    pub fn drift(&self) -> DriftFunction {
        let red = self.clone();
        DriftFunction::custom(move |tau| match red.a_inv(tau).and_then(|t| red.b(t)) {
            Ok(v) => v,
            Err(_) => f64::NAN,
        })
    }
}

/// Expectation of an increasing payoff against a terminal survival
/// function, via the Stieltjes decomposition
/// `E[phi(S)] = phi(x0) P(S >= x0) + integral of P(S >= x) dphi(x)`.
///
/// The payoff is given by knots `(x_i, phi_i)` with `x_i` and `phi_i`
/// non-decreasing: the payoff is linear between distinct consecutive
/// abscissae, jumps where an abscissa repeats, starts at the first knot
/// (zero to its left), and is constant beyond the last. For the
/// indicator of `[x, inf)` (knots `(x,0),(x,1)`) the result is exactly
/// `survival(x)`.
pub fn increasing_expectation(
    survival: impl Fn(f64) -> f64,
    phi_knots: &[(f64, f64)],
) -> Result<f64> {
    if phi_knots.is_empty() {
        return Err(Error::input("payoff needs at least one knot"));
    }
    for (i, &(x, v)) in phi_knots.iter().enumerate() {
        if !x.is_finite() || !v.is_finite() {
            return Err(Error::domain(format!(
                "payoff knot {i} must be finite, got ({x}, {v})"
            )));
        }
        if i > 0 {
            let (px, pv) = phi_knots[i - 1];
            if x < px {
                return Err(Error::domain(format!(
                    "payoff knot abscissae must be non-decreasing, got {px} then {x}"
                )));
            }
            if v < pv {
                return Err(Error::domain(format!(
                    "payoff must be non-decreasing, got {pv} then {v} at x = {x}"
                )));
            }
        }
    }
    let check_survival = |x: f64| -> Result<f64> {
        let s = survival(x);
        if !( -1e-9..=1.0 + 1e-9).contains(&s) {
            return Err(Error::domain(format!(
                "survival value {s} at x = {x} is outside [0, 1]"
            )));
        }
        Ok(s)
    };

    let (x0, phi0) = phi_knots[0];
    let mut total = phi0 * check_survival(x0)?;
    for w in phi_knots.windows(2) {
        let (xa, va) = w[0];
        let (xb, vb) = w[1];
        if vb == va {
            continue;
        }
        if xb == xa {
            // Jump: the survival value weights the jump mass.
            total += check_survival(xa)? * (vb - va);
        } else {
            check_survival(xb)?;
            let slope = (vb - va) / (xb - xa);
            total += slope * integrate_segment(&survival, xa, xb)?;
        }
    }
    Ok(total)
}

/// Integrates `f` over `[a, b]`, splitting intervals that span many
/// scales into one chunk per decade. Payoff tails are often cut at a
/// point orders of magnitude beyond the bulk of the law, and a single
/// adaptive pass over such an interval can exhaust its subdivision
/// budget before it resolves the thin layer where the mass lives.
fn integrate_segment(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || b <= 10.0 * a {
        return integrate(f, a, b);
    }
    let decades = (b / a).log10().ceil() as usize;
    let cuts = log_grid(a, b, decades.max(2) + 1)?;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(f, w[0], w[1])?;
    }
    Ok(total)
}

/// Verdict of the maturity-monotonicity check on a call-price curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum PriceMonotonicity {
    Increasing,
    CounterExample {
        t_lo: f64,
        t_hi: f64,
        price_lo: f64,
        price_hi: f64,
    },
}

/// Prices the call at each maturity and checks the curve is
/// non-decreasing. Martingale specs (`mu` identically 0) price in
/// closed form and compare with tolerance 1e-9; anything else prices by
/// Monte Carlo on draws shared across maturities, flagging a decrease
/// only beyond 3 standard errors of the pairwise difference.
pub fn price_curve_with_verdict(
    spec: &GbmSpec,
    strike: f64,
    t_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<(Vec<PricePoint>, PriceMonotonicity)> {
    if t_grid.is_empty() || !t_grid.windows(2).all(|w| w[0] < w[1]) || !(t_grid[0] > 0.0) {
        return Err(Error::input(
            "maturity grid must be increasing and positive".to_string(),
        ));
    }
    if !(strike > 0.0) || !strike.is_finite() {
        return Err(Error::domain(format!(
            "strike must be positive and finite, got {strike}"
        )));
    }
    if spec.is_martingale() {
        let mut points = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let price = match spec.constant_coefficients() {
                Some((sigma, _)) => black_scholes_call(spec.s0, sigma, strike, t)?,
                None => {
                    let reduction = reduce_functional_gbm(spec)?;
                    call_with_total_vol(spec.s0, strike, reduction.a(t)?.sqrt())
                }
            };
            points.push(PricePoint {
                quote: OptionQuote::new(strike, t, price)?,
                std_error: 0.0,
            });
        }
        let verdict = closed_form_verdict(&points, 1e-9);
        return Ok((points, verdict));
    }

    if n < 1000 {
        return Err(Error::input(
            "Monte Carlo pricing needs at least 1000 draws".to_string(),
        ));
    }
    // Common normal draws across maturities: pairwise differences are
    // then low-variance and the comparison is deterministic.
    let mut stream = SeededStream::new(seed, 0);
    let zs: Vec<f64> = (0..n).map(|_| stream.standard_normal()).collect();
    let reduction = reduce_functional_gbm(spec)?;
    let scale = 1.0 / n as f64;

    let mut points = Vec::with_capacity(t_grid.len());
    let mut verdict = PriceMonotonicity::Increasing;
    let mut prev: Option<(f64, Vec<f64>, f64)> = None; // (t, payoffs, price)
    for &t in t_grid {
        let (sd, mean_log) = match spec.constant_coefficients() {
            Some((sigma, mu)) => (sigma * t.sqrt(), (mu - 0.5 * sigma * sigma) * t),
            None => (reduction.a(t)?.sqrt(), reduction.b(t)?),
        };
        let payoffs: Vec<f64> = zs
            .iter()
            .map(|&z| (spec.s0 * (sd * z + mean_log).exp() - strike).max(0.0))
            .collect();
        let price = payoffs.iter().sum::<f64>() * scale;
        let var = payoffs.iter().map(|p| (p - price) * (p - price)).sum::<f64>()
            * scale
            / (n - 1) as f64;
        points.push(PricePoint {
            quote: OptionQuote::new(strike, t, price)?,
            std_error: var.sqrt(),
        });
        if let Some((pt, ppay, pprice)) = &prev {
            if verdict == PriceMonotonicity::Increasing {
                let dmean = price - pprice;
                let dvar = payoffs
                    .iter()
                    .zip(ppay)
                    .map(|(a, b)| {
                        let d = (a - b) - dmean;
                        d * d
                    })
                    .sum::<f64>()
                    * scale
                    / (n - 1) as f64;
                if dmean < -3.0 * dvar.sqrt() - 1e-15 {
                    verdict = PriceMonotonicity::CounterExample {
                        t_lo: *pt,
                        t_hi: t,
                        price_lo: *pprice,
                        price_hi: price,
                    };
                }
            }
        }
        prev = Some((t, payoffs, price));
    }
    Ok((points, verdict))
}

fn closed_form_verdict(points: &[PricePoint], tol: f64) -> PriceMonotonicity {
    for w in points.windows(2) {
        if w[1].quote.price < w[0].quote.price - tol {
            return PriceMonotonicity::CounterExample {
                t_lo: w[0].quote.maturity,
                t_hi: w[1].quote.maturity,
                price_lo: w[0].quote.price,
                price_hi: w[1].quote.price,
            };
        }
    }
    PriceMonotonicity::Increasing
}

/// Monotonicity verdict alone; see [`price_curve_with_verdict`].
pub fn call_price_monotonicity(
    spec: &GbmSpec,
    strike: f64,
    t_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<PriceMonotonicity> {
    Ok(price_curve_with_verdict(spec, strike, t_grid, n, seed)?.1)
}
