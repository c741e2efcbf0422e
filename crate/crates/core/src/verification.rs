//! Numerical checks of the closed-form identities and comparison bounds.
//!
//! Quantities evaluated on the apparent horizon involve `1 - k t_h`, which is
//! `O(r^3)` and formed by cancellation; those routes run in double-double
//! precision and are compared against `f64` closed forms.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::geodesics::{
    dphi_dt_offset, integrate_from_singularity, phi, phi_offset, singular_start, GeodesicPath,
    SingularStart,
};
use crate::geometry::{ModelParams, SpacetimePoint};
use crate::ode::StepControl;
use crate::real::Real;

/// Tolerance for exact identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Allowed leading-order deviation of `d phi/dt` on the horizon, per unit `r`
/// (5% at r = 1e-3, 0.5% at r = 1e-4).
pub const LEADING_ORDER_SLOPE: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheckResult {
    pub name: String,
    pub grid: Vec<f64>,
    /// Per-point relative error (or deviation, for asymptotic checks).
    pub errors: Vec<f64>,
    /// The checked quantity on the grid.
    pub values: Vec<f64>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityCheckResult {
    fn from_errors(
        name: impl Into<String>,
        grid: Vec<f64>,
        errors: Vec<f64>,
        values: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        let max_rel_err = errors.iter().copied().fold(0.0, f64::max);
        let finite = errors.iter().all(|e| e.is_finite());
        IdentityCheckResult {
            name: name.into(),
            pass: finite && !grid.is_empty() && max_rel_err < tolerance,
            grid,
            errors,
            values,
            max_rel_err,
            tolerance,
        }
    }
}

/// `count` log-spaced points on `[lo, hi]`, both ends included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo * (hi / lo).powf(i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}

fn rel_err(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        x.abs()
    } else {
        ((x - reference) / reference).abs()
    }
}

fn check_grid(params: &ModelParams, grid: &[f64]) -> Result<()> {
    for &r in grid {
        params.check_radius(r)?;
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("grid point {r} must be positive")));
        }
    }
    Ok(())
}

fn tf(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// `phi(r, t_h(r))` in double-double.
fn phi_on_horizon_precise(params: &ModelParams, r: f64) -> TwoFloat {
    let r = tf(r);
    let w = params.horizon_offset_at(r);
    phi_offset(params, r, w).expect("horizon lies below the singularity curve")
}

/// `dt_h/dr = -k'/k^2 - (8/27)(2 k k' r^3 + 3 k^2 r^2)` in double-double.
fn horizon_slope_precise(params: &ModelParams, r: f64) -> TwoFloat {
    let r = tf(r);
    let k = params.k_at(r);
    let kp = params.k_prime_at(r);
    let c = TwoFloat::ratio(8, 27);
    -kp.quo(k * k) - c * (tf(2.0) * k * kp * r * r * r + tf(3.0) * k * k * r * r)
}

/// `dt_h/dr - phi(r, t_h(r))`: exact differentiation route against the
/// closed form `-(4/3) k r^2 ((2/3) k' r + k)`. The margin must be negative.
pub fn check_subsolution_margin(params: &ModelParams, grid: &[f64]) -> Result<IdentityCheckResult> {
    check_grid(params, grid)?;
    let mut errors = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    let mut all_negative = true;
    for &r in grid {
        let route_i = (horizon_slope_precise(params, r) - phi_on_horizon_precise(params, r)).to_f64_lossy();
        let k = params.k_at(r);
        let kp = params.k_prime_at(r);
        let route_ii = -4.0 / 3.0 * k * r * r * (2.0 / 3.0 * kp * r + k);
        all_negative &= route_i < 0.0;
        errors.push(rel_err(route_i, route_ii));
        values.push(route_i);
    }
    let mut res = IdentityCheckResult::from_errors(
        "subsolution_margin",
        grid.to_vec(),
        errors,
        values,
        IDENTITY_TOLERANCE,
    );
    res.pass &= all_negative;
    Ok(res)
}

/// `phi(r, t_h(r))` against `-k'/k^2 + (4/9) k^2 r^2 + (8/27) k k' r^3`.
pub fn check_phi_on_horizon(params: &ModelParams, grid: &[f64]) -> Result<IdentityCheckResult> {
    check_grid(params, grid)?;
    let mut errors = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    for &r in grid {
        let direct = phi_on_horizon_precise(params, r).to_f64_lossy();
        let k = params.k_at(r);
        let kp = params.k_prime_at(r);
        let closed = -kp / (k * k) + 4.0 / 9.0 * k * k * r * r + 8.0 / 27.0 * k * kp * r.powi(3);
        errors.push(rel_err(direct, closed));
        values.push(direct);
    }
    Ok(IdentityCheckResult::from_errors(
        "phi_on_horizon",
        grid.to_vec(),
        errors,
        values,
        IDENTITY_TOLERANCE,
    ))
}

/// `phi == R'` on the grid at `t` in {0, t_h / 2, t_h, (t_h + t_s) / 2}.
pub fn check_phi_equals_rprime(params: &ModelParams, grid: &[f64]) -> Result<IdentityCheckResult> {
    check_grid(params, grid)?;
    let mut points = Vec::new();
    let mut errors = Vec::new();
    let mut values = Vec::new();
    for &r in grid {
        let th = params.horizon_time(r)?;
        let ts = params.singularity_time(r)?;
        for t in [0.0, 0.5 * th, th, th + 0.5 * (ts - th)] {
            let p = SpacetimePoint::new(r, t)?;
            let lhs = phi(params, p)?;
            let rhs = params.area_radius_rderiv(p)?;
            points.push(r);
            errors.push(rel_err(lhs, rhs));
            values.push(lhs);
        }
    }
    Ok(IdentityCheckResult::from_errors(
        "phi_equals_rprime",
        points,
        errors,
        values,
        IDENTITY_TOLERANCE,
    ))
}

/// `d phi/dt` on the horizon, evaluated exactly (double-double).
pub fn dphi_dt_on_horizon(params: &ModelParams, r: f64) -> Result<f64> {
    params.check_radius(r)?;
    let rr = tf(r);
    let w = params.horizon_offset_at(rr);
    dphi_dt_offset(params, rr, w)
        .map(|v| v.to_f64_lossy())
        .ok_or(Error::PostSingular { r, t: f64::NAN })
}

/// Leading-order form `-(27/8) [(8/27) r^{-1} - (n a / 3) r^{n-4}]`.
pub fn dphi_dt_on_horizon_leading(params: &ModelParams, r: f64) -> f64 {
    let n = params.n() as i32;
    let a = params.a();
    -27.0 / 8.0 * (8.0 / 27.0 / r - n as f64 * a / 3.0 * r.powi(n - 4))
}

/// Exact `d phi/dt` on the horizon against its leading-order form. The
/// deviation must fall below `LEADING_ORDER_SLOPE * r` at every grid point
/// with `r <= 1e-3`; larger radii only contribute values.
pub fn check_dphidt_on_horizon(params: &ModelParams, grid: &[f64]) -> Result<IdentityCheckResult> {
    check_grid(params, grid)?;
    let mut errors = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    let mut pass = true;
    for &r in grid {
        let exact = dphi_dt_on_horizon(params, r)?;
        let dev = rel_err(exact, dphi_dt_on_horizon_leading(params, r));
        if r <= 1e-3 {
            pass &= dev < LEADING_ORDER_SLOPE * r;
        }
        errors.push(dev);
        values.push(exact);
    }
    let max_rel_err = errors
        .iter()
        .zip(grid)
        .filter(|(_, &r)| r <= 1e-3)
        .map(|(e, _)| *e)
        .fold(0.0, f64::max);
    Ok(IdentityCheckResult {
        name: "dphidt_on_horizon_leading_order".into(),
        pass: pass && grid.iter().any(|&r| r <= 1e-3),
        grid: grid.to_vec(),
        errors,
        values,
        max_rel_err,
        tolerance: LEADING_ORDER_SLOPE * 1e-3,
    })
}

// ---- comparison envelopes ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBounds {
    pub beta: f64,
    pub x0: f64,
    pub alpha: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "B1")]
    pub b1: f64,
    /// `A` and `B` at the smallest sampled radius and `y = 0`.
    pub a_origin: f64,
    pub b_origin: f64,
    pub r_star: f64,
    pub band: f64,
}

impl EnvelopeBounds {
    /// Lower barrier `B0 / (beta - A) r^beta`, pairing `B0` with whichever
    /// `A` bound makes the barrier lowest.
    pub fn z0(&self, r: f64) -> f64 {
        let a = if self.b0 > 0.0 { self.a0 } else { self.a1 };
        self.b0 / (self.beta - a) * r.powf(self.beta)
    }

    pub fn z1(&self, r: f64) -> f64 {
        let a = if self.b1 > 0.0 { self.a1 } else { self.a0 };
        self.b1 / (self.beta - a) * r.powf(self.beta)
    }

    /// Looser bounds: `A0` doubled and each `B` bound pushed away from the
    /// other by its own magnitude.
    pub fn widened(&self) -> Self {
        EnvelopeBounds {
            a0: 2.0 * self.a0,
            b0: self.b0 - self.b0.abs(),
            b1: self.b1 + self.b1.abs(),
            ..*self
        }
    }
}

/// `r x'` at `x = x0 + y` for the n = 1, 2 ansatz.
fn r_xprime(params: &ModelParams, alpha: f64, r: f64, x: f64) -> Option<f64> {
    let rp = r.powf(alpha);
    phi_offset(params, r, x * rp).map(|ph| r * ph / rp - alpha * x)
}

/// Reconstructs `A`, `B` in `r y' = A(r, y) y + B(r, y) r^beta` by sampling
/// `r x'` on a log grid over `[1e-9, r_star]` and `y` in `[-band, band]`.
pub fn estimate_envelope(params: &ModelParams, r_star: f64, band: f64) -> Result<EnvelopeBounds> {
    let n = params.n();
    if !(n == 1 || n == 2) {
        return Err(Error::InvalidArgument(format!("envelopes need n = 1 or 2, got {n}")));
    }
    if !(band > 0.0) {
        return Err(Error::InvalidArgument(format!("band must be positive, got {band}")));
    }
    params.check_radius(r_star)?;
    let start = singular_start(params)?;
    let (alpha, x0) = (start.alpha, start.x0);
    let beta = 1.0 - n as f64 / 3.0;
    let r_lo = 1e-9_f64.min(r_star / 10.0);

    let (mut a_min, mut a_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut b_min, mut b_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut a_origin, mut b_origin) = (f64::NAN, f64::NAN);
    let h = 1e-6 * x0.max(1.0);
    for (i, r) in log_grid(r_lo, r_star, 48).into_iter().enumerate() {
        for j in 0..=8 {
            let y = band * (j as f64 / 4.0 - 1.0);
            let x = x0 + y;
            let sample = || -> Option<(f64, f64)> {
                let f = r_xprime(params, alpha, r, x)?;
                let fp = r_xprime(params, alpha, r, x + h)?;
                let fm = r_xprime(params, alpha, r, x - h)?;
                let a = (fp - fm) / (2.0 * h);
                Some((a, (f - a * y) / r.powf(beta)))
            };
            let (a, b) = sample().ok_or_else(|| {
                Error::Envelope(format!(
                    "window leaves the pre-singular region at r = {r}, y = {y}; shrink r_star or band"
                ))
            })?;
            a_min = a_min.min(a);
            a_max = a_max.max(a);
            b_min = b_min.min(b);
            b_max = b_max.max(b);
            if i == 0 && j == 4 {
                a_origin = a;
                b_origin = b;
            }
        }
    }
    if !(a_max < 0.0) {
        return Err(Error::Envelope(format!(
            "A is not uniformly negative (max {a_max}); shrink r_star or band"
        )));
    }
    if !(b_min > 0.0 || b_max < 0.0) {
        return Err(Error::Envelope(format!(
            "B changes sign on the window ([{b_min}, {b_max}]); shrink r_star or band"
        )));
    }
    Ok(EnvelopeBounds {
        beta,
        x0,
        alpha,
        a0: a_min,
        a1: a_max,
        b0: b_min,
        b1: b_max,
        a_origin,
        b_origin,
        r_star,
        band,
    })
}

/// Default half-width of the sampled `y` window.
pub fn default_band(params: &ModelParams) -> f64 {
    0.1 * params.a().powf(2.0 / 3.0)
}

/// The start used for containment: `y(epsilon)` in the middle of the
/// envelope, so the comparison argument applies from the first step.
pub fn envelope_start(params: &ModelParams, bounds: &EnvelopeBounds) -> Result<SingularStart> {
    let start = singular_start(params)?;
    let eps = start.epsilon;
    Ok(start.with_offset(0.5 * (bounds.z0(eps) + bounds.z1(eps))))
}

/// `z0(r) <= x(r) - x0 <= z1(r)` for every path sample with `r <= r_star`.
/// Errors are violations relative to the envelope width.
pub fn check_envelope_containment(
    path: &GeodesicPath,
    bounds: &EnvelopeBounds,
) -> IdentityCheckResult {
    let mut grid = Vec::new();
    let mut errors = Vec::new();
    let mut values = Vec::new();
    for s in path.samples.iter().filter(|s| s.r <= bounds.r_star) {
        let y = s.offset / s.r.powf(bounds.alpha) - bounds.x0;
        let (z0, z1) = (bounds.z0(s.r), bounds.z1(s.r));
        let violation = (z0 - y).max(y - z1).max(0.0);
        grid.push(s.r);
        errors.push(violation / (z1 - z0).abs().max(f64::MIN_POSITIVE));
        values.push(y);
    }
    IdentityCheckResult {
        name: "envelope_containment".into(),
        pass: !grid.is_empty() && errors.iter().all(|&e| e == 0.0),
        max_rel_err: errors.iter().copied().fold(0.0, f64::max),
        grid,
        errors,
        values,
        tolerance: 0.0,
    }
}

/// Least-squares slope of `ln(t - 1)` against `ln r` over `[r_lo, r_hi]`.
pub fn fit_exponent(path: &GeodesicPath, r_lo: f64, r_hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = path
        .samples
        .iter()
        .filter(|s| s.r >= r_lo && s.r <= r_hi && s.offset > 0.0)
        .map(|s| (s.r.ln(), s.offset.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::DegenerateWindow {
            lo: r_lo,
            hi: r_hi,
            count: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    Ok(sxy / sxx)
}

/// Shoots from the singular start of a naked model and fits the exponent
/// on `[r_lo, r_hi]`.
pub fn shoot_and_fit(params: &ModelParams, r_lo: f64, r_hi: f64) -> Result<(GeodesicPath, f64)> {
    let start = singular_start(params)?;
    let path = integrate_from_singularity(params, start, params.r_max(), &StepControl::default())?;
    let slope = fit_exponent(&path, r_lo, r_hi)?;
    Ok((path, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::{PathSample, PathStart, Termination};
    use proptest::prelude::*;

    fn pl(n: u32, a: f64) -> ModelParams {
        ModelParams::power_law(n, a, 0.1).unwrap()
    }

    fn grid() -> Vec<f64> {
        log_grid(1e-4, 0.1, 40)
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 0.1, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[4], 0.1);
        assert!((g[2] - 10f64.powf(-2.5)).abs() < 1e-15);
    }

    #[test]
    fn subsolution_margin_identity() {
        for (n, a) in [(1, 1.0), (2, 0.5), (3, 4.0), (4, 1.0)] {
            let res = check_subsolution_margin(&pl(n, a), &grid()).unwrap();
            assert!(res.pass, "n = {n}: {}", res.max_rel_err);
        }
    }

    #[test]
    fn subsolution_margin_leading_behavior() {
        let res = check_subsolution_margin(&pl(1, 1.0), &[1e-4]).unwrap();
        let v = res.values[0];
        assert!((v / (-4.0 / 3.0 * 1e-8) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn phi_on_horizon_identity() {
        for (n, a) in [(1, 1.0), (2, 0.5), (3, 4.0), (4, 1.0)] {
            let res = check_phi_on_horizon(&pl(n, a), &grid()).unwrap();
            assert!(res.pass, "n = {n}: {}", res.max_rel_err);
        }
        let res = check_phi_on_horizon(&pl(2, 0.5), &[0.01]).unwrap();
        assert!(res.max_rel_err < 1e-12);
    }

    #[test]
    fn phi_on_horizon_small_amplitude_limit() {
        // k ~ 1: phi(t_h) ~ (4/9) r^2
        let p = pl(4, 1e-9);
        let r = 0.01;
        let res = check_phi_on_horizon(&p, &[r]).unwrap();
        assert!((res.values[0] / (4.0 / 9.0 * r * r) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn phi_rprime_identity() {
        for (n, a) in [(1, 1.0), (2, 0.5), (3, 4.0), (4, 1.0)] {
            let res = check_phi_equals_rprime(&pl(n, a), &grid()).unwrap();
            assert!(res.pass, "n = {n}: {}", res.max_rel_err);
        }
    }

    #[test]
    fn dphidt_on_horizon_signs() {
        let p4 = pl(4, 1.0);
        for r in log_grid(1e-5, 0.05, 30) {
            assert!(dphi_dt_on_horizon(&p4, r).unwrap() < 0.0, "r = {r}");
        }
        assert!(dphi_dt_on_horizon(&pl(3, 0.2), 1e-5).unwrap() < 0.0);
        assert!(dphi_dt_on_horizon(&pl(3, 0.4), 1e-5).unwrap() > 0.0);
    }

    #[test]
    fn dphidt_leading_order_converges() {
        for (n, a) in [(1, 1.0), (2, 0.5), (3, 0.2), (3, 0.4), (4, 1.0), (5, 2.0)] {
            let p = pl(n, a);
            let res = check_dphidt_on_horizon(&p, &[1e-3, 1e-4]).unwrap();
            assert!(res.pass, "n = {n}, a = {a}: {:?}", res.errors);
            assert!(res.errors[1] < res.errors[0] || res.errors[1] < 1e-12);
        }
    }

    #[test]
    fn envelope_reproduces_linear_coefficient() {
        for (n, a) in [(1, 1.0), (2, 8.0)] {
            let p = ModelParams::power_law(n, a, 0.05).unwrap();
            let b = estimate_envelope(&p, 1e-2, default_band(&p)).unwrap();
            let alpha = 1.0 + 2.0 * n as f64 / 3.0;
            assert!((b.a_origin / -alpha - 1.0).abs() < 0.01, "{}", b.a_origin);
            assert!(b.a0 <= b.a1 && b.a1 < 0.0);
            assert_eq!(b.beta, 1.0 - n as f64 / 3.0);
            for r in log_grid(1e-8, 1e-2, 20) {
                assert!(b.z0(r) < b.z1(r));
            }
        }
    }

    #[test]
    fn envelope_b_is_negative_at_origin() {
        // B(0, 0) = a^{1/3} (alpha/3 - 1)
        let p = pl(1, 1.0);
        let b = estimate_envelope(&p, 1e-2, default_band(&p)).unwrap();
        assert!((b.b_origin - (5.0 / 9.0 - 1.0)).abs() < 1e-3, "{}", b.b_origin);
    }

    #[test]
    fn envelope_stable_under_band_halving() {
        let p = pl(1, 1.0);
        let band = default_band(&p);
        let full = estimate_envelope(&p, 1e-2, band).unwrap();
        let half = estimate_envelope(&p, 1e-2, band / 2.0).unwrap();
        for (u, v) in [(full.a0, half.a0), (full.a1, half.a1), (full.b0, half.b0), (full.b1, half.b1)] {
            assert!(((u - v) / u).abs() < 0.1, "{u} vs {v}");
        }
    }

    #[test]
    fn envelope_rejects_n3() {
        assert!(estimate_envelope(&pl(3, 4.0), 1e-2, 0.1).is_err());
    }

    #[test]
    fn containment_and_widening() {
        for (n, a) in [(1, 1.0), (2, 8.0)] {
            let p = ModelParams::power_law(n, a, 0.05).unwrap();
            let b = estimate_envelope(&p, 1e-2, default_band(&p)).unwrap();
            let start = envelope_start(&p, &b).unwrap();
            let path = integrate_from_singularity(&p, start, 0.05, &StepControl::default()).unwrap();
            let res = check_envelope_containment(&path, &b);
            assert!(res.pass, "n = {n}: {}", res.max_rel_err);
            assert!(check_envelope_containment(&path, &b.widened()).pass);
        }
    }

    #[test]
    fn exponent_fits() {
        for (n, a, expected) in [(1, 1.0, 5.0 / 3.0), (2, 1.0, 7.0 / 3.0), (3, 4.0, 3.0)] {
            let (path, slope) = shoot_and_fit(&pl(n, a), 1e-6, 1e-4).unwrap();
            assert!((slope / expected - 1.0).abs() < 0.02, "n = {n}: {slope}");
            // subsampling by two
            let sub = GeodesicPath {
                samples: path.samples.iter().step_by(2).copied().collect(),
                ..path.clone()
            };
            let s2 = fit_exponent(&sub, 1e-6, 1e-4).unwrap();
            assert!((s2 / slope - 1.0).abs() < 0.005);
        }
    }

    #[test]
    fn degenerate_window() {
        let path = GeodesicPath {
            samples: (1..5)
                .map(|i| {
                    let r = i as f64 * 1e-3;
                    PathSample { r, t: 1.0 + r * r, offset: r * r }
                })
                .collect(),
            start: PathStart::Regular { r1: 1e-3, t1: 1.0 },
            termination: Termination::ReachedRMax,
        };
        assert!(matches!(fit_exponent(&path, 1e-4, 1.0), Err(Error::DegenerateWindow { count: 4, .. })));
    }

    proptest! {
        #[test]
        fn exact_power_law_fit(p in 0.5f64..4.0, c in 0.1f64..10.0) {
            let samples = log_grid(1e-6, 1e-2, 30)
                .into_iter()
                .map(|r| PathSample { r, t: 1.0 + c * r.powf(p), offset: c * r.powf(p) })
                .collect();
            let path = GeodesicPath {
                samples,
                start: PathStart::Regular { r1: 1e-6, t1: 1.0 },
                termination: Termination::ReachedRMax,
            };
            let slope = fit_exponent(&path, 1e-6, 1e-2).unwrap();
            prop_assert!((slope - p).abs() < 1e-9);
        }
    }
}
