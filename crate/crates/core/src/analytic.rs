//! Closed-form and quadrature evaluation of the average delivery rates.
//!
//! The macro-user rate is `tau_mc * B1 * B2` and the small-cell-user rate is
//! `tau_sc * (C1 C2 + C1 C3 - C1 C2 C3)`. `B1`/`C1` integrate the downlink
//! success probability against a Weibull serving-distance density, using the
//! Laplace transforms of the interference below; `B2`/`C2` are the backhaul
//! terms and `C3` the cache hit probability.
//!
//! Receivers sit at the origin. All transforms take the Laplace variable `s`
//! in units of 1/W.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::params::{NetworkParams, Tier, Topology, Variant};
use crate::specfun::{hyp2f1_neg, integrate_1d, integrate_tail, QuadratureSpec, SpecFunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Quadrature(#[from] SpecFunError),
    #[error("distance {r} exceeds the exclusion radius {r_c}")]
    OutsideBall { r: f64, r_c: f64 },
    #[error("invalid Laplace variable {0}")]
    InvalidArgument(f64),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// Upper limit of the serving-distance integrals in `B1` and `C1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServingLimit {
    /// Integrate up to `R_c`.
    ClusterRadius,
    /// Integrate over the whole Weibull support.
    Unbounded,
}

/// Evaluation switches. The defaults evaluate every expression as printed.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryOptions {
    pub quad: QuadratureSpec,
    /// Keep the leading `exp(-(e^tau - 1) r^alpha / P)` factor of `B1`/`C1`.
    pub keep_noise_term: bool,
    pub serving_limit: ServingLimit,
    /// Use `1 - gamma` instead of `gamma` in `C2`.
    pub one_minus_gamma_for_su: bool,
    /// Use `tau_sc` instead of `tau_mc` in the capacity-aided `C2`.
    pub tau_sc_in_cap_c2: bool,
    /// Radial nodes of the `nu(s, .)` table.
    pub nu_grid_nodes: usize,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        TheoryOptions {
            quad: QuadratureSpec::default(),
            keep_noise_term: true,
            serving_limit: ServingLimit::ClusterRadius,
            one_minus_gamma_for_su: false,
            tau_sc_in_cap_c2: false,
            nu_grid_nodes: 64,
        }
    }
}

pub mod flags {
    pub const LAMBDA_MR_AS_LAMBDA_MC: &str = "lambda_mr_as_lambda_mc";
    pub const TAU_MC_IN_CAP_C2: &str = "tau_mc_in_cap_c2";
    pub const TAU_SC_IN_CAP_C2: &str = "tau_sc_in_cap_c2";
    pub const GAMMA_ZERO_LIMIT: &str = "gamma_zero_limit";
    pub const SU_SPLIT_ZERO_LIMIT: &str = "su_split_zero_limit";
    pub const ONE_MINUS_GAMMA_FOR_SU: &str = "one_minus_gamma_for_su";
    pub const NOISE_TERM_DROPPED: &str = "noise_term_dropped";
    pub const UNBOUNDED_SERVING_DISTANCE: &str = "unbounded_serving_distance";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    B1,
    B2,
    C1,
    C2,
    C3,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Factor::B1 => "B1",
            Factor::B2 => "B2",
            Factor::C1 => "C1",
            Factor::C2 => "C2",
            Factor::C3 => "C3",
        };
        f.write_str(s)
    }
}

/// Factors of one average-rate expression, kept for diagnosis.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremBreakdown {
    pub topology: Topology,
    pub tier: Tier,
    pub variant: Option<Variant>,
    pub factors: BTreeMap<Factor, f64>,
    pub avg_rate: f64,
    pub flags: Vec<&'static str>,
}

impl TheoremBreakdown {
    pub fn factor(&self, f: Factor) -> Option<f64> {
        self.factors.get(&f).copied()
    }

    /// `tau_mc * B1 * B2`.
    pub fn macro_user(topology: Topology, tau_mc: f64, b1: f64, b2: f64, flags: Vec<&'static str>) -> Self {
        TheoremBreakdown {
            topology,
            tier: Tier::Mu,
            variant: None,
            factors: BTreeMap::from([(Factor::B1, b1), (Factor::B2, b2)]),
            avg_rate: compose_mu(tau_mc, b1, b2),
            flags,
        }
    }

    /// Three-term small-cell composition; `NoCache` forces `C3 = 0`.
    pub fn small_cell_user(
        topology: Topology,
        variant: Variant,
        tau_sc: f64,
        c1: f64,
        c2: f64,
        c3: f64,
        flags: Vec<&'static str>,
    ) -> Self {
        let c3 = match variant {
            Variant::WithCache => c3,
            Variant::NoCache => 0.0,
        };
        TheoremBreakdown {
            topology,
            tier: Tier::Su,
            variant: Some(variant),
            factors: BTreeMap::from([(Factor::C1, c1), (Factor::C2, c2), (Factor::C3, c3)]),
            avg_rate: compose_su(tau_sc, c1, c2, c3),
            flags,
        }
    }
}

pub fn compose_mu(tau_mc: f64, b1: f64, b2: f64) -> f64 {
    tau_mc * b1 * b2
}

pub fn compose_su(tau_sc: f64, c1: f64, c2: f64, c3: f64) -> f64 {
    tau_sc * c1 * c2 + tau_sc * c1 * c3 - tau_sc * c1 * c2 * c3
}

fn check_s(s: f64) -> Result<()> {
    if s >= 0.0 && !s.is_nan() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidArgument(s))
    }
}

/// `int_{R^2} sP / (sP + |x|^alpha) dx = (sP)^(2/alpha) pi^2 (2/alpha) / sin(2 pi / alpha)`.
pub fn full_plane_mass(sp: f64, alpha: f64) -> f64 {
    let delta = 2.0 / alpha;
    sp.powf(delta) * PI * PI * delta / (PI * delta).sin()
}

/// Laplace transform of PPP interference from beyond distance `r`:
/// `exp(-2 pi lambda sP r^(2-alpha) / (alpha - 2) * 2F1(1, 1-2/alpha; 2-2/alpha; -sP r^-alpha))`.
pub fn laplace_ppp_beyond(s: f64, r: f64, lambda: f64, power: f64, alpha: f64) -> Result<f64> {
    check_s(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let delta = 2.0 / alpha;
    let b = 1.0 - delta;
    let x = -s * power * r.powf(-alpha);
    let f = hyp2f1_neg(b, b + 1.0, x)?;
    let exponent = s * PI * lambda * power * delta / (1.0 - delta) * r.powf(2.0 - alpha) * f;
    Ok((-exponent).exp())
}

/// `L_Imm(s)` at serving-MBS distance `r`.
pub fn laplace_mm(s: f64, r: f64, p: &NetworkParams) -> Result<f64> {
    laplace_ppp_beyond(s, r, p.lambda_mc, p.p_mc, p.alpha)
}

/// `L_Iss(s)` of the coverage-aided layout at serving-SBS distance `r_sc`.
pub fn laplace_ss_cov(s: f64, r_sc: f64, p: &NetworkParams) -> Result<f64> {
    laplace_ppp_beyond(s, r_sc, p.lambda_sc_prime, p.p_sc, p.alpha)
}

/// `int_0^rho t / (1 + t^alpha / sp) dt`.
fn radial_mass(rho: f64, sp: f64, alpha: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Ok(0.0);
    }
    let b = 2.0 / alpha;
    let x = -rho.powf(alpha) / sp;
    Ok(0.5 * rho * rho * hyp2f1_neg(b, b + 1.0, x)?)
}

/// `int_B sp / (sp + |x|^alpha) dx` over the disc of radius `r_c` whose
/// centre is at distance `d` from the origin.
pub fn ball_mass(sp: f64, d: f64, r_c: f64, alpha: f64, q: &QuadratureSpec) -> Result<f64> {
    check_s(sp)?;
    if sp == 0.0 {
        return Ok(0.0);
    }
    if sp.is_infinite() {
        return Ok(PI * r_c * r_c);
    }
    let d = d.abs();
    if d <= r_c {
        // Boundary at rho(phi) = d cos(phi) + sqrt(r_c^2 - d^2 sin^2(phi)).
        let inner = |phi: f64| {
            let s = phi.sin();
            let rho = d * phi.cos() + (r_c * r_c - d * d * s * s).max(0.0).sqrt();
            radial_mass(rho, sp, alpha).unwrap_or(f64::NAN)
        };
        Ok(2.0 * integrate_1d(inner, 0.0, PI, q)?)
    } else if d > 1e4 * r_c {
        Ok(PI * r_c * r_c * sp / (sp + d.powf(alpha)))
    } else {
        // Substituting sin(phi) = (r_c / d) sin(u) removes the square-root
        // singularity at the tangent directions.
        let ratio = r_c / d;
        let inner = |u: f64| {
            let phi = (ratio * u.sin()).asin();
            let half_chord = r_c * u.cos();
            let mid = d * phi.cos();
            let jac = half_chord / (d * phi.cos());
            match (
                radial_mass(mid + half_chord, sp, alpha),
                radial_mass(mid - half_chord, sp, alpha),
            ) {
                (Ok(hi), Ok(lo)) => (hi - lo) * jac,
                _ => f64::NAN,
            }
        };
        Ok(2.0 * integrate_1d(inner, 0.0, 0.5 * PI, q)?)
    }
}

/// `A(s, R_c)`: the normalized interference mass of the exclusion ball around
/// the serving station at distance `r <= R_c`, for transmit power `power`.
pub fn a_factor(s: f64, r: f64, r_c: f64, power: f64, alpha: f64, q: &QuadratureSpec) -> Result<f64> {
    if r > r_c {
        return Err(AnalyticError::OutsideBall { r, r_c });
    }
    Ok(ball_mass(s * power, r, r_c, alpha, q)? / (PI * r_c * r_c))
}

/// `nu(s, y)` with `|y| = d`: the mean of `sP/(sP + |x - y|^alpha)` over a
/// uniform point `x` of the radius-`R_c` ball.
pub fn nu_integral(s: f64, d: f64, r_c: f64, p_sc: f64, alpha: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(ball_mass(s * p_sc, d, r_c, alpha, q)? / (PI * r_c * r_c))
}

/// PPP of intensity `lambda` with the ball of radius `R_c` around a point at
/// distance `r` removed. Valid for any `r` (the ball need not contain the
/// receiver).
fn laplace_ppp_with_hole(
    s: f64,
    r: f64,
    lambda: f64,
    power: f64,
    r_c: f64,
    alpha: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    check_s(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let sp = s * power;
    let mass = full_plane_mass(sp, alpha) - ball_mass(sp, r, r_c, alpha, q)?;
    Ok((-lambda * mass.max(0.0)).exp())
}

/// `L_Ism(s)` of the coverage-aided layout at serving-MBS distance `r_mc`.
pub fn laplace_sm_cov(s: f64, r_mc: f64, p: &NetworkParams, q: &QuadratureSpec) -> Result<f64> {
    laplace_ppp_with_hole(s, r_mc, p.lambda_sc_prime, p.p_sc, p.r_c, p.alpha, q)
}

/// `L_Ims(s)` of the coverage-aided layout at serving-SBS distance `r_sc`.
pub fn laplace_ms_cov(s: f64, r_sc: f64, p: &NetworkParams, q: &QuadratureSpec) -> Result<f64> {
    laplace_ppp_with_hole(s, r_sc, p.lambda_mc, p.p_mc, p.r_c, p.alpha, q)
}

/// `L_Ims(s)` of the capacity-aided layout: all MBSs interfere.
pub fn laplace_ms_cap(s: f64, p: &NetworkParams) -> Result<f64> {
    check_s(s)?;
    Ok((-p.lambda_mc * full_plane_mass(s * p.p_mc, p.alpha)).exp())
}

/// `nu(s, .)` tabulated on a radial grid and interpolated with a monotone
/// cubic in `ln nu`. Nodes are uniform in `t = asinh((d - R_c) / w)` with
/// `w = (sP_sc)^(1/alpha)` the width of the transition at the ball rim, so
/// they cluster at the rim and grow geometrically away from it. Queries off
/// the grid are computed exactly.
pub struct NuTable<'a> {
    s: f64,
    p: &'a NetworkParams,
    q: QuadratureSpec,
    width: f64,
    t: Vec<f64>,
    log_nu: Vec<f64>,
    slopes: Vec<f64>,
}

impl<'a> NuTable<'a> {
    pub fn new(s: f64, p: &'a NetworkParams, nodes: usize, q: &QuadratureSpec) -> Result<Self> {
        let nodes = nodes.max(4);
        let width = (s * p.p_sc).powf(1.0 / p.alpha).clamp(1e-6 * p.r_c, 1e3 * p.r_c);
        let lo = (-p.r_c / width).asinh();
        let hi = (1e2 * p.r_c / width).asinh();
        let mut t = Vec::with_capacity(nodes);
        let mut log_nu = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let ti = lo + (hi - lo) * i as f64 / (nodes - 1) as f64;
            let d = (p.r_c + width * ti.sinh()).max(0.0);
            let nu = nu_integral(s, d, p.r_c, p.p_sc, p.alpha, q)?;
            t.push(ti);
            log_nu.push(nu.max(f64::MIN_POSITIVE).ln());
        }
        let slopes = pchip_slopes(&t, &log_nu);
        Ok(NuTable {
            s,
            p,
            q: *q,
            width,
            t,
            log_nu,
            slopes,
        })
    }

    pub fn eval(&self, d: f64) -> f64 {
        let n = self.t.len();
        let x = ((d - self.p.r_c) / self.width).asinh();
        if !(x >= self.t[0] && x <= self.t[n - 1]) {
            return nu_integral(self.s, d, self.p.r_c, self.p.p_sc, self.p.alpha, &self.q)
                .unwrap_or(f64::NAN);
        }
        let step = self.t[1] - self.t[0];
        let k = (((x - self.t[0]) / step) as usize).min(n - 2);
        let (x0, x1) = (self.t[k], self.t[k + 1]);
        let h = x1 - x0;
        let u = (x - x0) / h;
        let (y0, y1) = (self.log_nu[k], self.log_nu[k + 1]);
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        let y = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * h * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * h * m1;
        y.exp()
    }
}

/// Fritsch–Carlson slopes for a monotone piecewise-cubic Hermite interpolant.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = secant[0];
    m[n - 1] = secant[n - 2];
    for i in 1..n - 1 {
        if secant[i - 1] * secant[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            m[i] = (w1 + w2) / (w1 / secant[i - 1] + w2 / secant[i]);
        }
    }
    m
}

/// `int_{R^2} (1 - exp(-c_bar nu(s, y))) dy`.
fn cluster_void_mass(table: &NuTable<'_>, p: &NetworkParams, q: &QuadratureSpec) -> Result<f64> {
    let q = q.with_initial_radius(p.r_c);
    let radial = integrate_tail(
        |lo, hi, q| integrate_1d(|d| -(-p.c_bar * table.eval(d)).exp_m1() * d, lo, hi, q),
        0.0,
        &q,
    )?;
    Ok(2.0 * PI * radial)
}

/// `L_Ism(s)` of the capacity-aided layout: a Matérn cluster process seen
/// from an arbitrary location.
pub fn laplace_sm_cap(s: f64, p: &NetworkParams, opts: &TheoryOptions) -> Result<f64> {
    check_s(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let table = NuTable::new(s, p, opts.nu_grid_nodes, &opts.quad)?;
    Ok((-p.lambda_sc_prime * cluster_void_mass(&table, p, &opts.quad)?).exp())
}

/// `L_Iss(s)` of the capacity-aided layout: other clusters times the
/// representative cluster of the typical SU.
pub fn laplace_ss_cap(s: f64, p: &NetworkParams, opts: &TheoryOptions) -> Result<f64> {
    check_s(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let table = NuTable::new(s, p, opts.nu_grid_nodes, &opts.quad)?;
    let others = (-p.lambda_sc_prime * cluster_void_mass(&table, p, &opts.quad)?).exp();
    let own = integrate_1d(
        |d| (-p.c_bar * table.eval(d)).exp() * d,
        0.0,
        p.r_c,
        &opts.quad,
    )? * 2.0
        / (p.r_c * p.r_c);
    Ok(others * own)
}

/// Shared integral of `B1` and `C1`.
struct DownlinkTerm<'a> {
    tau: f64,
    power: f64,
    serving_density: f64,
    laplace: Box<dyn Fn(f64, f64) -> Result<f64> + 'a>,
}

fn downlink_success(term: &DownlinkTerm<'_>, p: &NetworkParams, opts: &TheoryOptions) -> Result<f64> {
    let threshold = term.tau.exp_m1();
    let weibull = p.serving_distance(term.serving_density);
    let integrand = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = threshold * r.powf(p.alpha) / term.power;
        let noise = if opts.keep_noise_term { (-s).exp() } else { 1.0 };
        let density = weibull.pdf(r);
        if noise == 0.0 || density == 0.0 {
            return 0.0;
        }
        match (term.laplace)(s, r) {
            Ok(l) => noise * l * density,
            Err(_) => f64::NAN,
        }
    };
    let value = match opts.serving_limit {
        ServingLimit::ClusterRadius => integrate_1d(integrand, 0.0, p.r_c, &opts.quad)?,
        ServingLimit::Unbounded => {
            let q = opts.quad.with_initial_radius(p.r_c);
            integrate_tail(|lo, hi, q| integrate_1d(integrand, lo, hi, q), 0.0, &q)?
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

fn downlink_flags(opts: &TheoryOptions) -> Vec<&'static str> {
    let mut flags = Vec::new();
    if !opts.keep_noise_term {
        flags.push(flags::NOISE_TERM_DROPPED);
    }
    if opts.serving_limit == ServingLimit::Unbounded {
        flags.push(flags::UNBOUNDED_SERVING_DISTANCE);
    }
    flags
}

/// `B1`: downlink success of the typical MU.
pub fn factor_b1(t: Topology, p: &NetworkParams, opts: &TheoryOptions) -> Result<f64> {
    let q = opts.quad;
    let laplace: Box<dyn Fn(f64, f64) -> Result<f64>> = match t {
        Topology::CoverageAided => Box::new(move |s, r| {
            Ok(laplace_mm(s, r, p)? * laplace_sm_cov(s, r, p, &q)?)
        }),
        Topology::CapacityAided => Box::new(move |s, r| {
            Ok(laplace_mm(s, r, p)? * laplace_sm_cap(s, p, opts)?)
        }),
    };
    let term = DownlinkTerm {
        tau: p.tau_mc,
        power: p.p_mc,
        serving_density: p.lambda_mc,
        laplace,
    };
    downlink_success(&term, p, opts)
}

/// `C1`: downlink success of the typical SU.
pub fn factor_c1(t: Topology, p: &NetworkParams, opts: &TheoryOptions) -> Result<f64> {
    let q = opts.quad;
    let laplace: Box<dyn Fn(f64, f64) -> Result<f64>> = match t {
        Topology::CoverageAided => Box::new(move |s, r| {
            Ok(laplace_ss_cov(s, r, p)? * laplace_ms_cov(s, r, p, &q)?)
        }),
        Topology::CapacityAided => Box::new(move |s, _r| {
            Ok(laplace_ss_cap(s, p, opts)? * laplace_ms_cap(s, p)?)
        }),
    };
    let term = DownlinkTerm {
        tau: p.tau_sc,
        power: p.p_sc,
        serving_density: p.derived(t).lambda_sc,
        laplace,
    };
    downlink_success(&term, p, opts)
}

/// `1 - exp(-x)` clamped to `[0, 1]`; an infinite exponent gives 1.
fn one_minus_exp(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        (-(-x).exp_m1()).clamp(0.0, 1.0)
    }
}

/// `B2`: backhaul term of the typical MU, evaluated as printed. At
/// `gamma = 0` the exponent diverges and the factor is 1.
pub fn factor_b2(t: Topology, p: &NetworkParams) -> (f64, Vec<&'static str>) {
    let mut fl = Vec::new();
    if p.gamma == 0.0 {
        fl.push(flags::GAMMA_ZERO_LIMIT);
        return (1.0, fl);
    }
    let x = match t {
        Topology::CoverageAided => {
            let thinned = p.lambda_sc_prime * (-p.lambda_mc * PI * p.r_c * p.r_c).exp();
            p.tau_mc * p.lambda_cr * (p.lambda_mc + thinned)
                / (p.mu * p.gamma * p.lambda_mc * p.lambda_mc * p.lambda_ut)
        }
        Topology::CapacityAided => {
            p.tau_mc * p.lambda_cr / (p.mu * p.gamma * p.macro_user_density())
        }
    };
    (one_minus_exp(x), fl)
}

/// `C2`: backhaul term of the typical SU, as printed (with `lambda_mr` read
/// as `lambda_mc`), unless overridden by `opts`.
pub fn factor_c2(t: Topology, p: &NetworkParams, opts: &TheoryOptions) -> (f64, Vec<&'static str>) {
    let mut fl = Vec::new();
    let split = if opts.one_minus_gamma_for_su {
        fl.push(flags::ONE_MINUS_GAMMA_FOR_SU);
        1.0 - p.gamma
    } else {
        p.gamma
    };
    let d = p.derived(t);
    let numerator = match t {
        Topology::CoverageAided => {
            fl.push(flags::LAMBDA_MR_AS_LAMBDA_MC);
            p.tau_sc * p.lambda_cr * (p.lambda_mc + d.lambda_sc)
        }
        Topology::CapacityAided => {
            let tau = if opts.tau_sc_in_cap_c2 {
                fl.push(flags::TAU_SC_IN_CAP_C2);
                p.tau_sc
            } else {
                fl.push(flags::TAU_MC_IN_CAP_C2);
                p.tau_mc
            };
            tau * p.lambda_cr
        }
    };
    if split == 0.0 {
        fl.push(if opts.one_minus_gamma_for_su {
            flags::SU_SPLIT_ZERO_LIMIT
        } else {
            flags::GAMMA_ZERO_LIMIT
        });
        return (1.0, fl);
    }
    let denominator = match t {
        Topology::CoverageAided => p.mu * split * d.lambda_sc * d.lambda_sc * p.lambda_ut,
        Topology::CapacityAided => p.mu * split * d.lambda_ut_s,
    };
    (one_minus_exp(numerator / denominator), fl)
}

/// `C3 = 1 - (1 + F_sc)^(1 - eta)`: probability that a request falls in the
/// `F_sc` most popular chunks.
pub fn factor_c3(p: &NetworkParams) -> f64 {
    -((1.0 - p.eta) * p.f_sc.ln_1p()).exp_m1()
}

/// Average delivery rate of the typical MU.
pub fn avg_rate_mu(t: Topology, p: &NetworkParams, opts: &TheoryOptions) -> Result<TheoremBreakdown> {
    let b1 = factor_b1(t, p, opts)?;
    let (b2, mut fl) = factor_b2(t, p);
    fl.extend(downlink_flags(opts));
    Ok(TheoremBreakdown::macro_user(t, p.tau_mc, b1, b2, fl))
}

/// Average delivery rate of the typical SU, with or without caching.
pub fn avg_rate_su(
    t: Topology,
    p: &NetworkParams,
    opts: &TheoryOptions,
    variant: Variant,
) -> Result<TheoremBreakdown> {
    let c1 = factor_c1(t, p, opts)?;
    Ok(su_from_c1(t, p, opts, variant, c1))
}

/// Composes the SU breakdown from a precomputed `C1`.
pub fn su_from_c1(
    t: Topology,
    p: &NetworkParams,
    opts: &TheoryOptions,
    variant: Variant,
    c1: f64,
) -> TheoremBreakdown {
    let (c2, mut fl) = factor_c2(t, p, opts);
    fl.extend(downlink_flags(opts));
    TheoremBreakdown::small_cell_user(t, variant, p.tau_sc, c1, c2, factor_c3(p), fl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov() -> NetworkParams {
        NetworkParams::coverage_reference()
    }

    fn cap() -> NetworkParams {
        NetworkParams::capacity_reference()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    /// Composite Simpson rule with `n` (even) panels.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut sum = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(a + i as f64 * h);
        }
        sum * h / 3.0
    }

    /// Brute-force planar mass of the disc by midpoint cells in Cartesian
    /// coordinates.
    fn brute_ball_mass(sp: f64, d: f64, r_c: f64, alpha: f64, n: usize) -> f64 {
        let h = 2.0 * r_c / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -r_c + (i as f64 + 0.5) * h;
                let y = -r_c + (j as f64 + 0.5) * h;
                if x * x + y * y < r_c * r_c {
                    let dist = (x + d).hypot(y);
                    sum += sp / (sp + dist.powf(alpha));
                }
            }
        }
        sum * h * h
    }

    #[test]
    fn transforms_are_one_at_zero() {
        let (c, k, qq) = (cov(), cap(), q());
        let o = TheoryOptions::default();
        assert_eq!(laplace_mm(0.0, 50.0, &c).unwrap(), 1.0);
        assert_eq!(laplace_ss_cov(0.0, 50.0, &c).unwrap(), 1.0);
        assert_eq!(laplace_sm_cov(0.0, 50.0, &c, &qq).unwrap(), 1.0);
        assert_eq!(laplace_ms_cov(0.0, 50.0, &c, &qq).unwrap(), 1.0);
        assert_eq!(laplace_ms_cap(0.0, &k).unwrap(), 1.0);
        assert_eq!(laplace_sm_cap(0.0, &k, &o).unwrap(), 1.0);
        assert_eq!(laplace_ss_cap(0.0, &k, &o).unwrap(), 1.0);
    }

    #[test]
    fn transforms_decrease_in_s() {
        let (c, k, qq) = (cov(), cap(), q());
        let o = TheoryOptions::default();
        let ss: Vec<f64> = (0..10).map(|i| 1e4 * 4f64.powi(i)).collect();
        let check = |name: &str, f: &dyn Fn(f64) -> f64| {
            let mut prev = 1.0;
            for &s in &ss {
                let v = f(s);
                assert!(v > 0.0 && v < prev, "{name} at s={s}: {v} !< {prev}");
                prev = v;
            }
        };
        check("mm", &|s| laplace_mm(s, 40.0, &c).unwrap());
        check("ss_cov", &|s| laplace_ss_cov(s, 40.0, &c).unwrap());
        check("sm_cov", &|s| laplace_sm_cov(s, 40.0, &c, &qq).unwrap());
        check("ms_cov", &|s| laplace_ms_cov(s, 40.0, &c, &qq).unwrap());
        check("ms_cap", &|s| laplace_ms_cap(s, &k).unwrap());
        check("sm_cap", &|s| laplace_sm_cap(s, &k, &o).unwrap());
        check("ss_cap", &|s| laplace_ss_cap(s, &k, &o).unwrap());
    }

    #[test]
    fn ppp_beyond_matches_direct_radial_integral() {
        // exp(-2 pi lambda int_r^inf sP v^(1-alpha) / (1 + sP v^-alpha) dv)
        let p = cov();
        let quad = QuadratureSpec::default().with_initial_radius(40.0);
        for s in [1e5, 8.6e6, 1e9] {
            let sp = s * p.p_mc;
            let tail = integrate_tail(
                |lo, hi, quad| {
                    integrate_1d(
                        |v: f64| sp * v.powf(1.0 - p.alpha) / (1.0 + sp * v.powf(-p.alpha)),
                        lo,
                        hi,
                        quad,
                    )
                },
                40.0,
                &quad,
            )
            .unwrap();
            let want = (-2.0 * PI * p.lambda_mc * tail).exp();
            let got = laplace_mm(s, 40.0, &p).unwrap();
            assert!((got / want - 1.0).abs() < 1e-7, "s={s} {got} {want}");
        }
    }

    #[test]
    fn sm_cov_without_exclusion_is_plain_ppp() {
        let mut p = cov();
        p.r_c = 1e-9;
        for s in [1e4, 1e6, 1e8] {
            let want = (-p.lambda_sc_prime
                * (s * p.p_sc).powf(0.5)
                * PI
                * PI
                * 0.5
                / (PI * 0.5).sin())
            .exp();
            let got = laplace_sm_cov(s, 0.0, &p, &q()).unwrap();
            assert!((got / want - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn full_plane_mass_alpha4_closed_form() {
        // pi^2/2 sqrt(sP) at alpha = 4
        let v = full_plane_mass(9.0, 4.0);
        assert!((v - PI * PI / 2.0 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn a_factor_limits() {
        let qq = q();
        assert_eq!(a_factor(0.0, 30.0, 80.0, 3.0, 4.0, &qq).unwrap(), 0.0);
        let big = a_factor(1e30, 30.0, 80.0, 3.0, 4.0, &qq).unwrap();
        assert!((big - 1.0).abs() < 1e-6, "{big}");
        assert!(matches!(
            a_factor(1.0, 81.0, 80.0, 3.0, 4.0, &qq),
            Err(AnalyticError::OutsideBall { .. })
        ));
    }

    #[test]
    fn a_factor_centre_reduces_to_radial_integral() {
        let qq = q();
        let (r_c, power, alpha) = (80.0, 3.0, 4.0);
        for s in [1e3, 1e6, 1e9] {
            let sp = s * power;
            let radial = integrate_1d(|r: f64| r / (1.0 + r.powf(alpha) / sp), 0.0, r_c, &qq).unwrap();
            let want = 2.0 * PI * radial / (PI * r_c * r_c);
            let got = a_factor(s, 0.0, r_c, power, alpha, &qq).unwrap();
            assert!((got / want - 1.0).abs() < 1e-9, "{got} {want}");
        }
    }

    #[test]
    fn ball_mass_matches_cartesian_brute_force() {
        let qq = q();
        for (sp, d) in [(1e6, 0.0), (1e6, 50.0), (1e8, 79.0), (1e7, 120.0), (1e9, 400.0), (3e5, 2000.0)] {
            let got = ball_mass(sp, d, 80.0, 4.0, &qq).unwrap();
            let want = brute_ball_mass(sp, d, 80.0, 4.0, 1500);
            assert!((got / want - 1.0).abs() < 2e-3, "sp={sp} d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn ball_mass_is_continuous_across_the_rim() {
        let qq = q();
        let inside = ball_mass(1e7, 80.0 - 1e-9, 80.0, 4.0, &qq).unwrap();
        let outside = ball_mass(1e7, 80.0 + 1e-9, 80.0, 4.0, &qq).unwrap();
        assert!((inside / outside - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nu_limits_and_centre() {
        let qq = q();
        let p = cap();
        assert_eq!(nu_integral(0.0, 10.0, p.r_c, p.p_sc, p.alpha, &qq).unwrap(), 0.0);
        let big = nu_integral(1e40, 10.0, p.r_c, p.p_sc, p.alpha, &qq).unwrap();
        assert!((big - 1.0).abs() < 1e-6);
        let s = 1e6;
        let radial = integrate_1d(
            |r: f64| r / (1.0 + r.powi(4) / (s * p.p_sc)),
            0.0,
            p.r_c,
            &qq,
        )
        .unwrap();
        let want = 2.0 * PI * radial / (PI * p.r_c * p.r_c);
        let got = nu_integral(s, 0.0, p.r_c, p.p_sc, p.alpha, &qq).unwrap();
        assert!((got / want - 1.0).abs() < 1e-9);
        for d in [0.0, 40.0, 80.0, 200.0, 5e3] {
            let v = nu_integral(s, d, p.r_c, p.p_sc, p.alpha, &qq).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn nu_table_interpolates_accurately() {
        let p = cap();
        let qq = q();
        for s in [1e4, 1e7, 1e9] {
            let table = NuTable::new(s, &p, 64, &qq).unwrap();
            for d in [0.5, 3.0, 17.0, 60.0, 79.0, 81.0, 150.0, 900.0, 7000.0, 20_000.0] {
                let exact = nu_integral(s, d, p.r_c, p.p_sc, p.alpha, &qq).unwrap();
                let approx = table.eval(d);
                assert!((approx / exact - 1.0).abs() < 2e-3, "s={s} d={d}: {approx} {exact}");
            }
        }
    }

    #[test]
    fn sm_cap_vanishing_clusters() {
        let mut p = cap();
        p.c_bar = 1e-12;
        let v = laplace_sm_cap(1e7, &p, &TheoryOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn b2_reference_values() {
        let (b2, _) = factor_b2(Topology::CapacityAided, &cap());
        assert!((b2 - 0.071_40).abs() < 5e-6, "{b2}");
        // synthetic exponent ln 2
        let mut p = cap();
        p.tau_mc = std::f64::consts::LN_2 * p.mu * p.gamma * p.macro_user_density() / p.lambda_cr;
        let (b2, _) = factor_b2(Topology::CapacityAided, &p);
        assert!((b2 - 0.5).abs() < 1e-12);
        p.mu = 1e300;
        assert!(factor_b2(Topology::CapacityAided, &p).0 < 1e-200);
    }

    #[test]
    fn gamma_zero_is_flagged_limit() {
        let mut p = cov();
        p.gamma = 0.0;
        let (b2, fl) = factor_b2(Topology::CoverageAided, &p);
        assert_eq!(b2, 1.0);
        assert!(fl.contains(&flags::GAMMA_ZERO_LIMIT));
        let (c2, fl) = factor_c2(Topology::CapacityAided, &p, &TheoryOptions::default());
        assert_eq!(c2, 1.0);
        assert!(fl.contains(&flags::GAMMA_ZERO_LIMIT));
    }

    #[test]
    fn c2_reference_values() {
        let o = TheoryOptions::default();
        let (c2, fl) = factor_c2(Topology::CapacityAided, &cap(), &o);
        assert!((c2 - 0.014_783).abs() < 5e-7, "{c2}");
        assert!(fl.contains(&flags::TAU_MC_IN_CAP_C2));
        let (_, fl) = factor_c2(Topology::CoverageAided, &cov(), &o);
        assert!(fl.contains(&flags::LAMBDA_MR_AS_LAMBDA_MC));
        let mut p = cap();
        p.mu = 1e300;
        assert!(factor_c2(Topology::CapacityAided, &p, &o).0 < 1e-200);
        // synthetic exponent ln 2
        let mut p = cap();
        let d = p.derived(Topology::CapacityAided);
        p.tau_mc = std::f64::consts::LN_2 * p.mu * p.gamma * d.lambda_ut_s / p.lambda_cr;
        assert!((factor_c2(Topology::CapacityAided, &p, &o).0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn c2_switches() {
        let mut o = TheoryOptions::default();
        o.one_minus_gamma_for_su = true;
        o.tau_sc_in_cap_c2 = true;
        let mut p = cap();
        p.gamma = 1.0;
        let (c2, fl) = factor_c2(Topology::CapacityAided, &p, &o);
        assert_eq!(c2, 1.0);
        assert!(fl.contains(&flags::SU_SPLIT_ZERO_LIMIT));
        assert!(fl.contains(&flags::TAU_SC_IN_CAP_C2));
    }

    #[test]
    fn c3_values() {
        let mut p = cov();
        // 1 - 5^-0.45
        assert!((factor_c3(&p) - 0.515_310_6).abs() < 1e-7);
        p.f_sc = 0.0;
        assert_eq!(factor_c3(&p), 0.0);
        p.f_sc = 1e300;
        assert!((factor_c3(&p) - 1.0).abs() < 1e-12);
        let mut prev = -1.0;
        for f in [0.0, 1.0, 2.0, 4.0, 16.0, 64.0, 256.0] {
            p.f_sc = f;
            let c3 = factor_c3(&p);
            assert!(c3 >= prev && c3 < 1.0);
            prev = c3;
        }
    }

    #[test]
    fn b1_limits() {
        let mut p = cov();
        let mut o = TheoryOptions::default();
        o.keep_noise_term = true;
        p.tau_mc = 1e-12;
        let b1 = factor_b1(Topology::CoverageAided, &p, &o).unwrap();
        let cdf = p.serving_distance(p.lambda_mc).cdf(p.r_c);
        assert!((b1 - cdf).abs() < 1e-6, "{b1} {cdf}");
        p.tau_mc = 40.0;
        assert!(factor_b1(Topology::CoverageAided, &p, &o).unwrap() < 1e-12);
    }

    #[test]
    fn c1_limits_capacity() {
        let mut p = cap();
        let o = TheoryOptions::default();
        p.tau_sc = 1e-24;
        let c1 = factor_c1(Topology::CapacityAided, &p, &o).unwrap();
        let cdf = p.serving_distance(p.derived(Topology::CapacityAided).lambda_sc).cdf(p.r_c);
        assert!((c1 - cdf).abs() < 1e-6, "{c1} {cdf}");
        p.tau_sc = 40.0;
        assert!(factor_c1(Topology::CapacityAided, &p, &o).unwrap() < 1e-12);
    }

    #[test]
    fn b1_c1_decrease_in_tau() {
        let mut o = TheoryOptions::default();
        o.keep_noise_term = false;
        for t in [Topology::CoverageAided, Topology::CapacityAided] {
            let mut p = NetworkParams::reference(t);
            let (mut pb, mut pc) = (2.0, 2.0);
            for tau in [0.25, 0.5, 1.0, 2.0, 4.0, 6.0] {
                p.tau_mc = tau;
                p.tau_sc = tau;
                let b1 = factor_b1(t, &p, &o).unwrap();
                let c1 = factor_c1(t, &p, &o).unwrap();
                assert!(b1 < pb && c1 < pc, "{t} tau={tau}");
                pb = b1;
                pc = c1;
            }
        }
    }

    #[test]
    fn quadrature_agrees_with_simpson_on_downlink_integrands() {
        let mut o = TheoryOptions::default();
        for keep in [true, false] {
            o.keep_noise_term = keep;
            let p = cov();
            let threshold = p.tau_mc.exp_m1();
            let w = p.serving_distance(p.lambda_mc);
            let f = |r: f64| {
                if r == 0.0 {
                    return 0.0;
                }
                let s = threshold * r.powi(4) / p.p_mc;
                let noise = if keep { (-s).exp() } else { 1.0 };
                noise
                    * laplace_mm(s, r, &p).unwrap()
                    * laplace_sm_cov(s, r, &p, &o.quad).unwrap()
                    * w.pdf(r)
            };
            // The noise-term integrand lives on [0, ~2] m; 1e6 panels over R_c resolve it.
            let want = simpson(f, 0.0, p.r_c, 1_000_000);
            let got = factor_b1(Topology::CoverageAided, &p, &o).unwrap();
            assert!((got / want - 1.0).abs() < 1e-6, "keep={keep}: {got} {want}");
        }
    }

    #[test]
    fn quadrature_agrees_with_simpson_on_nu_and_a_integrands() {
        let qq = q();
        let (sp, r_c) = (3.0e7, 80.0);
        for d in [0.0, 35.0, 79.0] {
            let f = |phi: f64| {
                let s = phi.sin();
                let rho = d * phi.cos() + (r_c * r_c - d * d * s * s).max(0.0).sqrt();
                // radial piece by Simpson as well, independent of hyp2f1
                simpson(|t: f64| t / (1.0 + t.powi(4) / sp), 0.0, rho, 2000)
            };
            let want = 2.0 * simpson(f, 0.0, PI, 500);
            let got = ball_mass(sp, d, r_c, 4.0, &qq).unwrap();
            assert!((got / want - 1.0).abs() < 1e-6, "d={d}: {got} {want}");
        }
    }

    #[test]
    fn composition_identities() {
        let t = Topology::CoverageAided;
        let mu = TheoremBreakdown::macro_user(t, 4.0, 1.0, 1.0, vec![]);
        assert_eq!(mu.avg_rate, 4.0);
        let su = TheoremBreakdown::small_cell_user(t, Variant::WithCache, 4.0, 1.0, 1.0, 1.0, vec![]);
        assert_eq!(su.avg_rate, 4.0);
        let su = TheoremBreakdown::small_cell_user(t, Variant::WithCache, 4.0, 0.3, 0.0, 0.6, vec![]);
        assert_eq!(su.avg_rate, 4.0 * 0.3 * 0.6);
        let nc = TheoremBreakdown::small_cell_user(t, Variant::NoCache, 4.0, 0.3, 0.2, 0.6, vec![]);
        assert_eq!(nc.factor(Factor::C3), Some(0.0));
        assert_eq!(nc.avg_rate, 4.0 * 0.3 * 0.2);
    }

    #[test]
    fn su_rate_bounded_by_downlink_term() {
        for c1 in [0.0, 0.2, 0.9] {
            for c2 in [0.0, 0.5, 1.0] {
                for c3 in [0.0, 0.3, 1.0] {
                    let r = compose_su(4.0, c1, c2, c3);
                    assert!(r <= 4.0 * c1 + 1e-15);
                    assert!(r >= compose_su(4.0, c1, c2, 0.0) - 1e-15);
                }
            }
        }
    }
}
