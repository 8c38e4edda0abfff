//! Scenario parameterization for the two-tier network and the closed-form
//! intensities derived from it.
//!
//! All densities are in points per square meter, powers in watts, distances in
//! meters and rates in nats/s/Hz (the delivery conditions use `ln(1 + SIR)`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Small-cell deployment strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topology {
    /// SBSs fill macro coverage holes: a Poisson hole process around the MBSs.
    CoverageAided,
    /// SBSs sit in hot-spots: a Matérn cluster process with Cox-distributed users.
    CapacityAided,
}

impl Topology {
    pub fn short_name(self) -> &'static str {
        match self {
            Topology::CoverageAided => "cov",
            Topology::CapacityAided => "cap",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Topology {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cov" | "coverage" | "coverage-aided" => Ok(Topology::CoverageAided),
            "cap" | "capacity" | "capacity-aided" => Ok(Topology::CapacityAided),
            other => Err(ParamError::UnknownTopology(other.to_string())),
        }
    }
}

/// User tier: served by the macro or the small-cell layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Mu,
    Su,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Mu => "MU",
            Tier::Su => "SU",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether SBS caches are taken into account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    WithCache,
    NoCache,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WithCache => "cache",
            Variant::NoCache => "nocache",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single violated constraint, or a lookup failure on a field name.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be positive and finite (got {value})")]
    NotPositive { name: &'static str, value: f64 },
    #[error("lambda_sc_prime must exceed lambda_mc (got {sc_prime} <= {mc})")]
    ParentDensityTooLow { sc_prime: f64, mc: f64 },
    #[error("alpha must exceed 2 (got {0})")]
    PathLossExponent(f64),
    #[error("eta must exceed 1 (got {0})")]
    Steepness(f64),
    #[error("gamma out of [0,1] (got {0})")]
    SplitOutOfRange(f64),
    #[error("F_sc must be non-negative (got {0})")]
    NegativeCache(f64),
    #[error("F must exceed F_sc (got F = {catalogue}, F_sc = {cache})")]
    CatalogueTooSmall { catalogue: f64, cache: f64 },
    #[error("unknown parameter '{0}'")]
    UnknownField(String),
    #[error("unknown topology '{0}' (expected cov or cap)")]
    UnknownTopology(String),
}

/// Complete scenario parameterization.
///
/// `lambda_ut` is only read by the coverage-aided topology and `c_bar` /
/// `lambda_ut_m` only by the capacity-aided one. `lambda_ut_m = None` means
/// one macro user per MBS on average, i.e. `lambda_mc`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub lambda_cr: f64,
    pub lambda_mc: f64,
    pub lambda_sc_prime: f64,
    pub lambda_ut: f64,
    pub lambda_ut_m: Option<f64>,
    pub c_bar: f64,
    pub r_c: f64,
    pub p_mc: f64,
    pub p_sc: f64,
    pub alpha: f64,
    pub tau_mc: f64,
    pub tau_sc: f64,
    pub mu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub f_sc: f64,
    pub f_catalogue: f64,
    /// Weibull shape of the serving-distance law; `None` means 2.
    pub dist_k: Option<f64>,
    /// Weibull scale of the serving-distance law; `None` means `(pi * lambda)^-1/2`.
    pub dist_nu: Option<f64>,
}

/// Names accepted by [`NetworkParams::get`] / [`NetworkParams::set`].
pub const FIELD_NAMES: &[&str] = &[
    "lambda_cr",
    "lambda_mc",
    "lambda_sc_prime",
    "lambda_ut",
    "lambda_ut_m",
    "c_bar",
    "R_c",
    "P_mc",
    "P_sc",
    "alpha",
    "tau_mc",
    "tau_sc",
    "mu",
    "gamma",
    "eta",
    "F_sc",
    "F",
    "dist_k",
    "dist_nu",
];

impl NetworkParams {
    /// Parameter set of the coverage-aided evaluation (rate-split and storage
    /// sweeps): `f_0 = 500 GByte` and `F_sc = 4 GByte` at one chunk per GByte.
    pub fn coverage_reference() -> Self {
        NetworkParams {
            lambda_cr: 1.0e-5,
            lambda_mc: 1.5e-5,
            lambda_sc_prime: 5.5e-5,
            lambda_ut: 12.8e-5,
            lambda_ut_m: None,
            c_bar: 3.0,
            r_c: 80.0,
            p_mc: 16.0,
            p_sc: 3.0,
            alpha: 4.0,
            tau_mc: 4.0,
            tau_sc: 4.0,
            mu: 30.0,
            gamma: 0.6,
            eta: 1.45,
            f_sc: 4.0,
            f_catalogue: 500.0,
            dist_k: None,
            dist_nu: None,
        }
    }

    /// Parameter set of the capacity-aided evaluation.
    pub fn capacity_reference() -> Self {
        NetworkParams {
            lambda_sc_prime: 1.5e-5,
            lambda_ut_m: Some(3.0e-5),
            c_bar: 3.0,
            ..Self::coverage_reference()
        }
    }

    pub fn reference(topology: Topology) -> Self {
        match topology {
            Topology::CoverageAided => Self::coverage_reference(),
            Topology::CapacityAided => Self::capacity_reference(),
        }
    }

    /// Checks every constraint and returns the parameters unchanged on success.
    ///
    /// `lambda_sc_prime > lambda_mc` only binds for the coverage-aided layout;
    /// the capacity-aided reference set has them equal.
    pub fn validate(self, topology: Topology) -> Result<Self, ParamError> {
        self.check(topology)?;
        Ok(self)
    }

    pub fn check(&self, topology: Topology) -> Result<(), ParamError> {
        let positive = [
            ("lambda_cr", self.lambda_cr),
            ("lambda_mc", self.lambda_mc),
            ("lambda_sc_prime", self.lambda_sc_prime),
            ("lambda_ut", self.lambda_ut),
            ("c_bar", self.c_bar),
            ("R_c", self.r_c),
            ("P_mc", self.p_mc),
            ("P_sc", self.p_sc),
            ("tau_mc", self.tau_mc),
            ("tau_sc", self.tau_sc),
            ("mu", self.mu),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        for (name, value) in [
            ("lambda_ut_m", self.lambda_ut_m),
            ("dist_k", self.dist_k),
            ("dist_nu", self.dist_nu),
        ] {
            if let Some(value) = value {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(ParamError::NotPositive { name, value });
                }
            }
        }
        if topology == Topology::CoverageAided && self.lambda_sc_prime <= self.lambda_mc {
            return Err(ParamError::ParentDensityTooLow {
                sc_prime: self.lambda_sc_prime,
                mc: self.lambda_mc,
            });
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(ParamError::PathLossExponent(self.alpha));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(ParamError::Steepness(self.eta));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ParamError::SplitOutOfRange(self.gamma));
        }
        if !(self.f_sc >= 0.0 && self.f_sc.is_finite()) {
            return Err(ParamError::NegativeCache(self.f_sc));
        }
        if !(self.f_catalogue > self.f_sc) {
            return Err(ParamError::CatalogueTooSmall {
                catalogue: self.f_catalogue,
                cache: self.f_sc,
            });
        }
        Ok(())
    }

    /// Macro-user density of the capacity-aided layout.
    pub fn macro_user_density(&self) -> f64 {
        self.lambda_ut_m.unwrap_or(self.lambda_mc)
    }

    pub fn get(&self, name: &str) -> Result<f64, ParamError> {
        let v = match name {
            "lambda_cr" => self.lambda_cr,
            "lambda_mc" => self.lambda_mc,
            "lambda_sc_prime" => self.lambda_sc_prime,
            "lambda_ut" => self.lambda_ut,
            "lambda_ut_m" => self.macro_user_density(),
            "c_bar" => self.c_bar,
            "R_c" => self.r_c,
            "P_mc" => self.p_mc,
            "P_sc" => self.p_sc,
            "alpha" => self.alpha,
            "tau_mc" => self.tau_mc,
            "tau_sc" => self.tau_sc,
            "mu" => self.mu,
            "gamma" => self.gamma,
            "eta" => self.eta,
            "F_sc" => self.f_sc,
            "F" => self.f_catalogue,
            "dist_k" => self.dist_k.unwrap_or(2.0),
            "dist_nu" => self.dist_nu.unwrap_or(f64::NAN),
            other => return Err(ParamError::UnknownField(other.to_string())),
        };
        Ok(v)
    }

    /// Sets a field by its configuration name. No validation is performed.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        match name {
            "lambda_cr" => self.lambda_cr = value,
            "lambda_mc" => self.lambda_mc = value,
            "lambda_sc_prime" => self.lambda_sc_prime = value,
            "lambda_ut" => self.lambda_ut = value,
            "lambda_ut_m" => self.lambda_ut_m = Some(value),
            "c_bar" => self.c_bar = value,
            "R_c" => self.r_c = value,
            "P_mc" => self.p_mc = value,
            "P_sc" => self.p_sc = value,
            "alpha" => self.alpha = value,
            "tau_mc" => self.tau_mc = value,
            "tau_sc" => self.tau_sc = value,
            "mu" => self.mu = value,
            "gamma" => self.gamma = value,
            "eta" => self.eta = value,
            "F_sc" => self.f_sc = value,
            "F" => self.f_catalogue = value,
            "dist_k" => self.dist_k = Some(value),
            "dist_nu" => self.dist_nu = Some(value),
            other => return Err(ParamError::UnknownField(other.to_string())),
        }
        Ok(())
    }

    /// Sets `tau_mc` and `tau_sc` together when `name` is `tau`.
    pub fn set_sweep_var(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        if name == "tau" {
            self.tau_mc = value;
            self.tau_sc = value;
            Ok(())
        } else {
            self.set(name, value)
        }
    }

    pub fn derived(&self, topology: Topology) -> DerivedIntensities {
        DerivedIntensities::new(self, topology)
    }

    /// Weibull serving-distance law of the given tier.
    pub fn serving_distance(&self, serving_density: f64) -> Weibull {
        Weibull {
            shape: self.dist_k.unwrap_or(2.0),
            scale: self
                .dist_nu
                .unwrap_or_else(|| (PI * serving_density).powf(-0.5)),
        }
    }
}

/// Intensities that follow in closed form from [`NetworkParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedIntensities {
    /// Density of deployed SBSs.
    pub lambda_sc: f64,
    /// SU density inside a hot-spot, `c_bar / (pi R_c^2)`.
    pub lambda_ut_s: f64,
    /// Total user density.
    pub lambda_ut_total: f64,
}

impl DerivedIntensities {
    pub fn new(p: &NetworkParams, topology: Topology) -> Self {
        let ball = PI * p.r_c * p.r_c;
        let lambda_ut_s = p.c_bar / ball;
        match topology {
            Topology::CoverageAided => DerivedIntensities {
                lambda_sc: p.lambda_sc_prime * (-p.lambda_mc * ball).exp(),
                lambda_ut_s,
                lambda_ut_total: p.lambda_ut,
            },
            Topology::CapacityAided => {
                let lambda_sc = p.lambda_sc_prime * p.c_bar;
                DerivedIntensities {
                    lambda_sc,
                    lambda_ut_s,
                    lambda_ut_total: p.lambda_mc + lambda_sc,
                }
            }
        }
    }
}

/// Weibull density `(k/nu)(r/nu)^(k-1) exp(-(r/nu)^k)` on `r >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weibull {
    pub shape: f64,
    pub scale: f64,
}

impl Weibull {
    pub fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        let z = r / self.scale;
        self.shape / self.scale * z.powf(self.shape - 1.0) * (-z.powf(self.shape)).exp()
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            -(-(r / self.scale).powf(self.shape)).exp_m1()
        }
    }
}
