//! Closed-form background of the marginally bound dust cloud.
//!
//! The model is specified through `k(r) = 1 - a r^n + gamma(r)` with a finite
//! polynomial tail `gamma`. The mass function, area radius, density, the
//! singularity curve `t_s = 1/k` and the apparent horizon
//! `t_h = t_s - (8/27) k^2 r^3` are all derived from it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{ipow, Real};

/// Number of interior samples used to validate `k > 0` on `[0, r_max]`.
pub const POSITIVITY_SAMPLES: usize = 10_000;

/// One term `coeff * r^power` of the higher-order tail of `k(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(u32, f64)", into = "(u32, f64)")]
pub struct GammaTerm {
    pub power: u32,
    pub coeff: f64,
}

impl From<(u32, f64)> for GammaTerm {
    fn from((power, coeff): (u32, f64)) -> Self {
        GammaTerm { power, coeff }
    }
}

impl From<GammaTerm> for (u32, f64) {
    fn from(term: GammaTerm) -> Self {
        (term.power, term.coeff)
    }
}

/// On-disk model configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: u32,
    pub a: f64,
    #[serde(default)]
    pub gamma: Vec<GammaTerm>,
    pub r_max: f64,
}

/// A validated collapse model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct ModelParams {
    n: u32,
    a: f64,
    gamma: Vec<GammaTerm>,
    r_max: f64,
}

impl TryFrom<ModelConfig> for ModelParams {
    type Error = Error;

    fn try_from(cfg: ModelConfig) -> Result<Self> {
        ModelParams::new(cfg.n, cfg.a, cfg.gamma, cfg.r_max)
    }
}

impl From<ModelParams> for ModelConfig {
    fn from(p: ModelParams) -> Self {
        ModelConfig {
            n: p.n,
            a: p.a,
            gamma: p.gamma,
            r_max: p.r_max,
        }
    }
}

fn invalid(rule: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidModel {
        rule,
        detail: detail.into(),
    }
}

impl ModelParams {
    pub fn new(n: u32, a: f64, gamma: Vec<GammaTerm>, r_max: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("n >= 1", format!("n = {n}")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a > 0", format!("a = {a}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(invalid("r_max > 0", format!("r_max = {r_max}")));
        }
        for term in &gamma {
            if term.power < n + 1 {
                return Err(invalid(
                    "gamma power >= n + 1",
                    format!("power {} < {}", term.power, n + 1),
                ));
            }
            if !term.coeff.is_finite() {
                return Err(invalid("gamma coefficient finite", format!("{}", term.coeff)));
            }
        }
        let params = ModelParams { n, a, gamma, r_max };
        params.validate_positivity()?;
        Ok(params)
    }

    /// Pure power-law model `k = 1 - a r^n`.
    pub fn power_law(n: u32, a: f64, r_max: f64) -> Result<Self> {
        Self::new(n, a, Vec::new(), r_max)
    }

    fn validate_positivity(&self) -> Result<()> {
        let samples = (0..=POSITIVITY_SAMPLES + 1)
            .map(|i| self.r_max * i as f64 / (POSITIVITY_SAMPLES + 1) as f64)
            .chain(std::iter::once(self.r_max));
        for r in samples {
            let k = self.k_at(r);
            if !(k > 0.0) {
                return Err(invalid(
                    "k(r) > 0 on [0, r_max]",
                    format!("k({r}) = {k}"),
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> &[GammaTerm] {
        &self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Same model on a different domain cutoff.
    pub fn with_r_max(&self, r_max: f64) -> Result<Self> {
        Self::new(self.n, self.a, self.gamma.clone(), r_max)
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if r.is_nan() || r < 0.0 || r > self.r_max {
            return Err(Error::OutOfDomain {
                r,
                r_max: self.r_max,
            });
        }
        Ok(())
    }

    // ---- unchecked evaluators, generic over precision ----

    /// `1 - k(r) = a r^n - gamma(r)`, evaluated without cancellation.
    pub(crate) fn one_minus_k_at<T: Real>(&self, r: T) -> T {
        let mut acc = T::from_f64_exact(self.a) * ipow(r, self.n);
        for term in &self.gamma {
            acc = acc - T::from_f64_exact(term.coeff) * ipow(r, term.power);
        }
        acc
    }

    pub(crate) fn k_at<T: Real>(&self, r: T) -> T {
        T::one() - self.one_minus_k_at(r)
    }

    pub(crate) fn k_prime_at<T: Real>(&self, r: T) -> T {
        let n = T::from_u32(self.n).unwrap();
        let mut acc = -n * T::from_f64_exact(self.a) * ipow(r, self.n - 1);
        for term in &self.gamma {
            let p = T::from_u32(term.power).unwrap();
            acc = acc + p * T::from_f64_exact(term.coeff) * ipow(r, term.power - 1);
        }
        acc
    }

    /// `t_h(r) - 1`.
    pub(crate) fn horizon_offset_at<T: Real>(&self, r: T) -> T {
        let k = self.k_at(r);
        self.one_minus_k_at(r).quo(k) - T::ratio(8, 27) * k * k * r * r * r
    }

    /// `1 - k(r) t` for `t = 1 + offset`.
    pub(crate) fn one_minus_kt_offset<T: Real>(&self, r: T, offset: T) -> T {
        self.one_minus_k_at(r) - self.k_at(r) * offset
    }

    // ---- checked public API ----

    pub fn k(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.k_at(r))
    }

    pub fn k_prime(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.k_prime_at(r))
    }

    fn positive_k(&self, r: f64) -> Result<f64> {
        let k = self.k(r)?;
        if k <= 0.0 {
            return Err(Error::NonPositiveK { r, k });
        }
        Ok(k)
    }

    /// `t_s(r) = 1 / k(r)`.
    pub fn singularity_time(&self, r: f64) -> Result<f64> {
        Ok(1.0 / self.positive_k(r)?)
    }

    /// `t_h(r) = t_s(r) - (8/27) k^2 r^3`.
    pub fn horizon_time(&self, r: f64) -> Result<f64> {
        let k = self.positive_k(r)?;
        Ok(1.0 / k - 8.0 / 27.0 * k * k * r * r * r)
    }

    /// `F(r) = (2/9) k^2 r^3`.
    pub fn mass_function(&self, r: f64) -> Result<f64> {
        let k = self.k(r)?;
        Ok(2.0 / 9.0 * k * k * r * r * r)
    }

    pub fn mass_function_prime(&self, r: f64) -> Result<f64> {
        let k = self.k(r)?;
        let kp = self.k_prime_at(r);
        Ok(2.0 / 9.0 * (2.0 * k * kp * r * r * r + 3.0 * k * k * r * r))
    }

    /// `1 - k t`, snapped to zero when it is within rounding of the
    /// singularity curve.
    fn one_minus_kt(&self, p: SpacetimePoint) -> Result<f64> {
        self.check_radius(p.r)?;
        let w = p.t - 1.0;
        let omk = self.one_minus_k_at(p.r);
        let k = self.k_at(p.r);
        let kw = k * w;
        let s = omk - kw;
        // t itself carries half an ulp of error
        if s.abs() <= 4.0 * f64::EPSILON * (omk.abs() + kw.abs() + (k * p.t).abs()) {
            return Ok(0.0);
        }
        Ok(s)
    }

    /// `R = r (1 - k t)^{2/3}`.
    pub fn area_radius(&self, p: SpacetimePoint) -> Result<f64> {
        let s = self.one_minus_kt(p)?;
        if s < 0.0 {
            return Err(Error::PostSingular { r: p.r, t: p.t });
        }
        Ok(p.r * s.cbrt().powi(2))
    }

    /// `R' = (1 - k t)^{2/3} - (2/3) r k' t (1 - k t)^{-1/3}`.
    pub fn area_radius_rderiv(&self, p: SpacetimePoint) -> Result<f64> {
        let s = self.one_minus_kt(p)?;
        if s < 0.0 {
            return Err(Error::PostSingular { r: p.r, t: p.t });
        }
        if s == 0.0 {
            return Err(Error::SingularDerivative { r: p.r, t: p.t });
        }
        let kp = self.k_prime_at(p.r);
        let c = s.cbrt();
        Ok(c * c - 2.0 / 3.0 * p.r * kp * p.t / c)
    }

    /// `epsilon = F' / (4 pi R^2 R')`. At the regular center the limit
    /// `1 / (6 pi (1 - t)^2)` is returned.
    pub fn energy_density(&self, p: SpacetimePoint) -> Result<f64> {
        let s = self.one_minus_kt(p)?;
        if s < 0.0 {
            return Err(Error::PostSingular { r: p.r, t: p.t });
        }
        if s == 0.0 {
            return Err(Error::ShellFocusing { r: p.r, t: p.t });
        }
        if p.r == 0.0 {
            return Ok(1.0 / (6.0 * PI * s * s));
        }
        let radius = self.area_radius(p)?;
        let rderiv = self.area_radius_rderiv(p)?;
        if rderiv == 0.0 {
            return Err(Error::ShellCrossing { r: p.r, t: p.t });
        }
        Ok(self.mass_function_prime(p.r)? / (4.0 * PI * radius * radius * rderiv))
    }
}

/// A point `(r, t)` in comoving coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub r: f64,
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(r: f64, t: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("bad point (r = {r}, t = {t})")));
        }
        Ok(SpacetimePoint { r, t })
    }

    pub fn is_pre_singular(&self, params: &ModelParams) -> bool {
        1.0 - params.k_at(self.r) * self.t > 0.0
    }
}
