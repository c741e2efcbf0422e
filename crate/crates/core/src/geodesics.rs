//! Outgoing radial null geodesics `dt/dr = phi(r, t)` leaving the central
//! singularity at `(0, 1)`, and backward probes from sub-horizon points.
//!
//! Near the center all interesting curves live within `O(r^3)` of `t = 1`, so
//! the integrators never carry `t` itself. Forward shots and probes carry the
//! scaled offset `x = (t - 1) / r^p` against `u = ln r`:
//!
//! `dx/du = r^{1-p} phi(r, 1 + x r^p) - p x`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelParams, SpacetimePoint};
use crate::ode::{integrate, Event, Flow, RunEnd, StepControl};
use crate::real::Real;
use crate::roots::solve_roots;

/// Relative floor on `1 - k t`: a point with `1 - k t <= floor * |1 - k|` is
/// treated as having reached the singularity curve.
pub const SINGULARITY_FLOOR: f64 = 1e-14;

/// Coarser floor used by backward probes. A ray that far into the gap
/// below the singularity curve only keeps approaching it backward in `r`,
/// and the explicit integrator would crawl along it.
pub const PROBE_SINGULARITY_FLOOR: f64 = 1e-6;

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Event location accuracy in `r`.
pub const EVENT_RESOLUTION: f64 = 1e-12;

/// Exponent `p` of the scaled offset `(t - 1) / r^p`: `1 + 2n/3` for
/// `n = 1, 2` and `3` otherwise.
pub fn scaling_exponent(n: u32) -> f64 {
    match n {
        1 | 2 => (3 + 2 * n) as f64 / 3.0,
        _ => 3.0,
    }
}

// ---- pointwise right-hand side ----

/// `phi` at `t = 1 + w`; `None` when the point is not pre-singular.
pub(crate) fn phi_offset<T: Real>(params: &ModelParams, r: T, w: T) -> Option<T> {
    let s = params.one_minus_kt_offset(r, w);
    if !(s > T::zero()) {
        return None;
    }
    let kp = params.k_prime_at(r);
    let num = s - T::ratio(2, 3) * r * kp * (T::one() + w);
    Some(num.quo(s.cbrt()))
}

pub(crate) fn dphi_dt_offset<T: Real>(params: &ModelParams, r: T, w: T) -> Option<T> {
    let s = params.one_minus_kt_offset(r, w);
    if !(s > T::zero()) {
        return None;
    }
    let k = params.k_at(r);
    let kp = params.k_prime_at(r);
    let bracket = k * s + r * kp * (T::ratio(1, 3) + T::ratio(2, 3) * s);
    let c = s.cbrt();
    Some(-T::ratio(2, 3) * bracket.quo(s * c))
}

fn checked_offset(params: &ModelParams, p: SpacetimePoint) -> Result<f64> {
    params.check_radius(p.r)?;
    let w = p.t - 1.0;
    if params.one_minus_kt_offset(p.r, w) <= 0.0 {
        return Err(Error::PostSingular { r: p.r, t: p.t });
    }
    Ok(w)
}

/// `phi(r, t) = (1 - k t - (2/3) r k' t) / (1 - k t)^{1/3}`.
pub fn phi(params: &ModelParams, p: SpacetimePoint) -> Result<f64> {
    let w = checked_offset(params, p)?;
    Ok(phi_offset(params, p.r, w).expect("checked pre-singular"))
}

/// `d phi / dt = -(2/3) [k (1 - k t) + r k' (1 - (2/3) k t)] / (1 - k t)^{4/3}`.
pub fn dphi_dt(params: &ModelParams, p: SpacetimePoint) -> Result<f64> {
    let w = checked_offset(params, p)?;
    Ok(dphi_dt_offset(params, p.r, w).expect("checked pre-singular"))
}

/// `x'(r)` for the ansatz `t = 1 + x r^alpha`, with `alpha` the scaling
/// exponent of the model.
pub fn transformed_rhs(params: &ModelParams, r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("transformed_rhs needs r > 0, got {r}")));
    }
    params.check_radius(r)?;
    let p = scaling_exponent(params.n());
    let rp = r.powf(p);
    let Some(ph) = phi_offset(params, r, x * rp) else {
        return Err(Error::PostSingular { r, t: 1.0 + x * rp });
    };
    Ok((ph - p * x * rp / r) / rp)
}

fn scaled_rhs(params: &ModelParams, p: f64, u: f64, x: f64) -> Option<f64> {
    let r = u.exp();
    let rp = r.powf(p);
    let ph = phi_offset(params, r, x * rp)?;
    Some(r * ph / rp - p * x)
}

// ---- singular start ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootChoice {
    #[default]
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularStart {
    pub alpha: f64,
    pub x0: f64,
    pub epsilon: f64,
    /// `x(epsilon) - x0`; zero unless a start inside a comparison envelope is
    /// wanted.
    #[serde(default)]
    pub offset: f64,
}

impl SingularStart {
    pub fn with_epsilon(self, epsilon: f64) -> Self {
        SingularStart { epsilon, ..self }
    }

    pub fn with_offset(self, offset: f64) -> Self {
        SingularStart { offset, ..self }
    }
}

pub fn singular_start(params: &ModelParams) -> Result<SingularStart> {
    singular_start_with(params, RootChoice::Smallest)
}

pub fn singular_start_with(params: &ModelParams, choice: RootChoice) -> Result<SingularStart> {
    let (n, a) = (params.n(), params.a());
    let alpha = scaling_exponent(n);
    let x0 = match n {
        1 | 2 => a.powf(2.0 / 3.0),
        3 => {
            let report = solve_roots(a);
            let pick = match choice {
                RootChoice::Smallest => report.physical.first(),
                RootChoice::Largest => report.physical.last(),
            };
            *pick.ok_or_else(|| Error::NoNakedStart {
                n,
                a,
                reason: if report.admissible.is_empty() {
                    "no admissible root of the critical quartic".into()
                } else {
                    "admissible roots lie beyond the singularity curve".into()
                },
            })?
        }
        _ => {
            return Err(Error::NoNakedStart {
                n,
                a,
                reason: "n >= 4".into(),
            })
        }
    };
    Ok(SingularStart {
        alpha,
        x0,
        epsilon: DEFAULT_EPSILON,
        offset: 0.0,
    })
}

// ---- paths ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub r: f64,
    pub t: f64,
    /// `t - 1`, kept separately since it is far below the resolution of `t`
    /// near the center.
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    ReachedRMax,
    CrossedHorizon { r: f64 },
    HitSingularity { r: f64 },
    StepFailure { r: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedRMax => "reached-r-max",
            Termination::CrossedHorizon { .. } => "crossed-horizon",
            Termination::HitSingularity { .. } => "hit-singularity",
            Termination::StepFailure { .. } => "step-failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathStart {
    Singular(SingularStart),
    Regular { r1: f64, t1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub samples: Vec<PathSample>,
    pub start: PathStart,
    pub termination: Termination,
}

impl GeodesicPath {
    /// Largest radius reached while still below the horizon.
    pub fn escape_radius(&self) -> f64 {
        match self.termination {
            Termination::CrossedHorizon { r }
            | Termination::HitSingularity { r }
            | Termination::StepFailure { r } => r,
            Termination::ReachedRMax => self.samples.last().map_or(0.0, |s| s.r),
        }
    }

    /// `x(r) = (t - 1) / r^alpha` along the path.
    pub fn scaled(&self, alpha: f64) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .map(|s| (s.r, s.offset / s.r.powf(alpha)))
            .collect()
    }

    pub fn to_csv(&self, params: &ModelParams) -> String {
        let mut out = String::from("r,t,t_h,t_s,one_minus_kt\n");
        for s in &self.samples {
            let k = params.k_at(s.r);
            let t_h = 1.0 / k - 8.0 / 27.0 * k * k * s.r.powi(3);
            let t_s = 1.0 / k;
            let omkt = params.one_minus_kt_offset(s.r, s.offset);
            let _ = writeln!(out, "{:e},{:e},{:e},{:e},{:e}", s.r, s.t, t_h, t_s, omkt);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `t - t_h` in scaled units: fires when the path reaches the horizon.
struct HorizonEvent<'a> {
    params: &'a ModelParams,
    p: f64,
}

impl Event for HorizonEvent<'_> {
    fn value(&self, u: f64, x: f64) -> f64 {
        let r = u.exp();
        x - self.params.horizon_offset_at(r) / r.powf(self.p)
    }
    fn resolution(&self, u: f64) -> f64 {
        EVENT_RESOLUTION / u.exp()
    }
}

struct SingularityEvent<'a> {
    params: &'a ModelParams,
    p: f64,
    floor: f64,
}

impl Event for SingularityEvent<'_> {
    fn value(&self, u: f64, x: f64) -> f64 {
        let r = u.exp();
        let omk = self.params.one_minus_k_at(r);
        let s = self.params.one_minus_kt_offset(r, x * r.powf(self.p));
        self.floor * omk.abs() - s
    }
    fn resolution(&self, u: f64) -> f64 {
        EVENT_RESOLUTION / u.exp()
    }
}

/// Shoots `t = 1 + x(r) r^alpha` from `r = epsilon` with
/// `x(epsilon) = x0 + offset` out to `r_max`.
pub fn integrate_from_singularity(
    params: &ModelParams,
    start: SingularStart,
    r_max: f64,
    ctl: &StepControl,
) -> Result<GeodesicPath> {
    if !(start.epsilon > 0.0 && start.epsilon < r_max) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < epsilon < r_max, got epsilon = {}, r_max = {r_max}",
            start.epsilon
        )));
    }
    params.check_radius(r_max)?;
    let p = start.alpha;
    let horizon = HorizonEvent { params, p };
    let singular = SingularityEvent {
        params,
        p,
        floor: SINGULARITY_FLOOR,
    };
    let (u0, u1) = (start.epsilon.ln(), r_max.ln());

    let mut samples = Vec::new();
    let run = integrate(
        ctl,
        |u, x| scaled_rhs(params, p, u, x),
        u0,
        start.x0 + start.offset,
        u1,
        &[&horizon, &singular],
        |u, x| {
            let r = if u == u1 { r_max } else { u.exp() };
            let w = x * r.powf(p);
            samples.push(PathSample { r, t: 1.0 + w, offset: w });
            Flow::Continue
        },
    );
    let r_end = if run.s == u1 { r_max } else { run.s.exp() };
    let termination = match (run.end, run.event) {
        (_, Some(hit)) if hit.index == 0 => Termination::CrossedHorizon { r: r_end },
        (_, Some(_)) => Termination::HitSingularity { r: r_end },
        (RunEnd::Completed, None) => Termination::ReachedRMax,
        _ => Termination::StepFailure { r: r_end },
    };
    Ok(GeodesicPath {
        samples,
        start: PathStart::Singular(start),
        termination,
    })
}

// ---- backward probes ----

/// Result of following `dt/dr = phi` backward from a sub-horizon point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub r1: f64,
    pub t1: f64,
    pub r_floor: f64,
    /// `t(r_floor) - 1`.
    pub limit_offset: f64,
    /// Radius at which the ray was certified below `t = 1`, i.e. where
    /// `t - 1 < -r^p` first held.
    pub below_center_at: Option<f64>,
}

impl ProbeOutcome {
    pub fn limit(&self) -> f64 {
        1.0 + self.limit_offset
    }
}

/// `x < -1` for the scaled offset: the ray is certifiably below `t = 1`.
struct BelowCenter;

impl Event for BelowCenter {
    fn value(&self, _u: f64, x: f64) -> f64 {
        -1.0 - x
    }
    fn resolution(&self, _u: f64) -> f64 {
        1e-6
    }
}

/// Integrates `dt/dr = phi` backward from `(r1, t1)` to `r_floor`.
pub fn backward_probe_detailed(
    params: &ModelParams,
    r1: f64,
    t1: f64,
    r_floor: f64,
    ctl: &StepControl,
) -> Result<ProbeOutcome> {
    if !(r_floor > 0.0 && r_floor < r1) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < r_floor < r1, got r_floor = {r_floor}, r1 = {r1}"
        )));
    }
    params.check_radius(r1)?;
    let w1 = t1 - 1.0;
    if !(w1 < params.horizon_offset_at(r1)) {
        return Err(Error::InvalidArgument(format!(
            "anchor t1 = {t1} is not below the horizon at r1 = {r1}"
        )));
    }
    let p = scaling_exponent(params.n());
    let (u1, uf) = (r1.ln(), r_floor.ln());
    let singular = SingularityEvent {
        params,
        p,
        floor: PROBE_SINGULARITY_FLOOR,
    };

    let mut u = u1;
    let mut w = w1;
    let mut below_center_at = None;
    if w1 / r1.powf(p) >= -1.0 {
        let run = integrate(
            ctl,
            |u, x| scaled_rhs(params, p, u, x),
            u1,
            w1 / r1.powf(p),
            uf,
            &[&BelowCenter, &singular],
            |_, _| Flow::Continue,
        );
        let r = run.s.exp();
        match (run.end, run.event) {
            (_, Some(hit)) if hit.index == 0 => {
                below_center_at = Some(r);
                u = run.s;
                w = run.y * r.powf(p);
            }
            (_, Some(_)) => return Err(Error::ProbeHitSingularity { r }),
            (RunEnd::Completed, None) => {
                return Ok(ProbeOutcome {
                    r1,
                    t1,
                    r_floor,
                    limit_offset: run.y * r_floor.powf(p),
                    below_center_at,
                })
            }
            _ => return Err(Error::ProbeHitSingularity { r }),
        }
    } else {
        below_center_at = Some(r1);
    }

    // Below t = 1 the ray is far from the singularity curve and w settles
    // quickly; carry w itself.
    let wide = StepControl {
        h_max: 4.0,
        ..*ctl
    };
    let run = integrate(
        &wide,
        |u, w| {
            let r = u.exp();
            phi_offset(params, r, w).map(|ph| r * ph)
        },
        u,
        w,
        uf,
        &[],
        |_, _| Flow::Continue,
    );
    if run.end != RunEnd::Completed {
        return Err(Error::StepFailure { r: run.s.exp() });
    }
    Ok(ProbeOutcome {
        r1,
        t1,
        r_floor,
        limit_offset: run.y,
        below_center_at,
    })
}

/// `t(r_floor)` along the ray through `(r1, t1)`.
pub fn backward_probe(params: &ModelParams, r1: f64, t1: f64, r_floor: f64) -> Result<f64> {
    backward_probe_detailed(params, r1, t1, r_floor, &StepControl::default()).map(|o| o.limit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use proptest::prelude::*;

    fn pl(n: u32, a: f64) -> ModelParams {
        ModelParams::power_law(n, a, 0.1).unwrap()
    }

    fn pt(r: f64, t: f64) -> SpacetimePoint {
        SpacetimePoint::new(r, t).unwrap()
    }

    #[test]
    fn phi_at_t_zero_is_one() {
        for (n, a) in [(1, 1.0), (2, 0.5), (3, 4.0), (4, 1.0)] {
            let v = phi(&pl(n, a), pt(0.07, 0.0)).unwrap();
            assert!((v - 1.0).abs() < 1e-15, "n = {n}: {v}");
        }
    }

    #[test]
    fn phi_example_value() {
        let v = phi(&pl(1, 1.0), pt(0.1, 1.0)).unwrap();
        let expected = (0.1 + 2.0 / 3.0 * 0.1) / 0.1f64.cbrt();
        assert!((v / expected - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phi_rejects_post_singular() {
        let p = pl(1, 1.0);
        let ts = p.singularity_time(0.05).unwrap();
        assert!(matches!(phi(&p, pt(0.05, ts + 1e-12)), Err(Error::PostSingular { .. })));
        assert!(matches!(dphi_dt(&p, pt(0.05, ts + 0.1)), Err(Error::PostSingular { .. })));
    }

    #[test]
    fn dphi_dt_negative_at_t_zero() {
        let p = pl(2, 0.5);
        for r in [1e-3, 1e-2, 0.05] {
            let v = dphi_dt(&p, pt(r, 0.0)).unwrap();
            let k = p.k(r).unwrap();
            let kp = p.k_prime(r).unwrap();
            assert!((v + 2.0 / 3.0 * (k + r * kp)).abs() < 1e-14);
            assert!(v < 0.0);
        }
    }

    #[test]
    fn dphi_dt_on_horizon_n4() {
        let p = pl(4, 1.0);
        let th = p.horizon_time(0.01).unwrap();
        assert!(dphi_dt(&p, pt(0.01, th)).unwrap() < 0.0);
    }

    #[test]
    fn singular_start_examples() {
        let s = singular_start(&pl(2, 8.0).with_r_max(0.05).unwrap()).unwrap();
        assert_eq!(s.alpha, 7.0 / 3.0);
        assert!((s.x0 - 4.0).abs() < 1e-14);
        let s = singular_start(&pl(1, 1.0)).unwrap();
        assert_eq!((s.alpha, s.x0, s.epsilon), (5.0 / 3.0, 1.0, 1e-6));
        let s = singular_start(&pl(3, 4.0)).unwrap();
        assert_eq!(s.alpha, 3.0);
        assert!((s.x0 - 3.0).abs() < 1e-12);
        let s = singular_start_with(&pl(3, 4.0), RootChoice::Largest).unwrap();
        assert!((s.x0 - 3.402_393_521_532_312_6).abs() < 1e-10);
    }

    #[test]
    fn singular_start_errors() {
        assert!(matches!(singular_start(&pl(4, 1.0)), Err(Error::NoNakedStart { .. })));
        assert!(matches!(singular_start(&pl(3, 1.0)), Err(Error::NoNakedStart { .. })));
        // low-branch roots exist but lie beyond the singularity curve
        let err = singular_start(&pl(3, 0.001)).unwrap_err();
        assert!(err.to_string().contains("beyond"));
    }

    #[test]
    fn transformed_rhs_vanishes_at_start() {
        // r x' -> 0 as r -> 0 along x = x0
        let r = 1e-8;
        let v = transformed_rhs(&pl(3, 4.0), r, 3.0).unwrap();
        assert!((r * v).abs() < 1e-6, "{}", r * v);
        let v = transformed_rhs(&pl(1, 1.0), r, 1.0).unwrap();
        assert!((r * v).abs() < 1e-4, "{}", r * v);
        // away from the root it does not vanish
        let v = transformed_rhs(&pl(3, 4.0), r, 2.0).unwrap();
        assert!((r * v).abs() > 0.1);
    }

    #[test]
    fn transformed_rhs_matches_phi_change_of_variables() {
        // integrate x with transformed_rhs and t with phi from matched data
        let p = pl(1, 1.0);
        let alpha = 5.0 / 3.0;
        let ctl = StepControl::default();
        let (r0, x0) = (1e-3, 1.05);
        let r1 = 2.0 * r0;
        let xr = integrate(&ctl, |r, x| transformed_rhs(&p, r, x).ok(), r0, x0, r1, &[], |_, _| Flow::Continue);
        let tr = integrate(
            &ctl,
            |r, t| phi(&p, SpacetimePoint { r, t }).ok(),
            r0,
            1.0 + x0 * r0.powf(alpha),
            r1,
            &[],
            |_, _| Flow::Continue,
        );
        assert!((tr.y - (1.0 + xr.y * r1.powf(alpha))).abs() < 1e-10);
    }

    #[test]
    fn forward_shot_n1_reaches_r_max_below_horizon() {
        let p = pl(1, 1.0);
        let path = integrate_from_singularity(&p, singular_start(&p).unwrap(), 0.1, &StepControl::default()).unwrap();
        assert_eq!(path.termination, Termination::ReachedRMax);
        assert_eq!(path.samples.last().unwrap().r, 0.1);
        for s in &path.samples {
            assert!(s.offset < p.horizon_offset_at(s.r));
        }
        for w in path.samples.windows(2) {
            assert!(w[1].r > w[0].r);
            assert!(w[1].offset >= w[0].offset);
        }
    }

    #[test]
    fn forward_shot_n3_a4() {
        let p = pl(3, 4.0);
        let path = integrate_from_singularity(&p, singular_start(&p).unwrap(), 0.1, &StepControl::default()).unwrap();
        assert_eq!(path.termination, Termination::ReachedRMax);
        assert!(path.samples.iter().all(|s| s.offset < p.horizon_offset_at(s.r)));
    }

    #[test]
    fn small_amplitude_n2_crosses_horizon() {
        let p = pl(2, 0.05);
        let path = integrate_from_singularity(&p, singular_start(&p).unwrap(), 0.1, &StepControl::default()).unwrap();
        let Termination::CrossedHorizon { r } = path.termination else {
            panic!("{:?}", path.termination);
        };
        assert!(r > 0.02 && r < 0.03, "{r}");
        let last = path.samples.last().unwrap();
        assert!((last.offset - p.horizon_offset_at(last.r)).abs() < 1e-12);
    }

    #[test]
    fn tolerance_halving_is_stable() {
        let p = pl(2, 1.0);
        let s = singular_start(&p).unwrap();
        let base = StepControl::default();
        let fine = StepControl { rtol: base.rtol / 2.0, atol: base.atol / 2.0, ..base };
        let a = integrate_from_singularity(&p, s, 0.1, &base).unwrap();
        let b = integrate_from_singularity(&p, s, 0.1, &fine).unwrap();
        let (ta, tb) = (a.samples.last().unwrap().t, b.samples.last().unwrap().t);
        assert!((ta - tb).abs() < 10.0 * base.rtol, "{ta} vs {tb}");
    }

    #[test]
    fn start_radius_insensitivity() {
        let p = pl(1, 1.0);
        let s = singular_start(&p).unwrap();
        let end = |eps: f64| {
            let path = integrate_from_singularity(&p, s.with_epsilon(eps), 0.1, &StepControl::default()).unwrap();
            path.samples.last().unwrap().offset
        };
        let reference = end(1e-8);
        for eps in [1e-7, 1e-6, 1e-5, 1e-4] {
            assert!(((end(eps) - reference) / reference).abs() < 1e-4);
        }
    }

    #[test]
    fn csv_export_header_and_rows() {
        let p = pl(1, 1.0);
        let path = integrate_from_singularity(&p, singular_start(&p).unwrap(), 0.1, &StepControl::default()).unwrap();
        let csv = path.to_csv(&p);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("r,t,t_h,t_s,one_minus_kt"));
        assert_eq!(lines.count(), path.samples.len());
        let back: GeodesicPath = serde_json::from_str(&path.to_json().unwrap()).unwrap();
        assert_eq!(back, path);
    }

    #[test]
    fn probe_from_t_zero_goes_negative() {
        let p = pl(4, 1.0);
        let v = backward_probe(&p, 0.03, 0.0, 1e-7).unwrap();
        assert!(v < 0.0);
    }

    #[test]
    fn probe_below_center_for_covered_model() {
        let p = pl(4, 1.0);
        let r1 = 0.05;
        let t1 = p.horizon_time(r1).unwrap() * (1.0 - 1e-4);
        let limits: Vec<f64> = [1e-5, 1e-6, 1e-7]
            .iter()
            .map(|&rf| backward_probe(&p, r1, t1, rf).unwrap())
            .collect();
        assert!(limits.iter().all(|&l| l < 1.0));
        // backward in r, t decreases: limits are monotone in r_floor
        assert!(limits[0] >= limits[1] && limits[1] >= limits[2]);
        // near the regular center t - t(0) ~ r
        assert!((limits[1] - limits[2]).abs() < 2e-6);
    }

    #[test]
    fn probe_on_naked_path_returns_to_center() {
        let p = pl(1, 1.0);
        let path = integrate_from_singularity(&p, singular_start(&p).unwrap(), 0.1, &StepControl::default()).unwrap();
        let anchor = path.samples.iter().find(|s| s.r > 0.01).unwrap();
        let limit = backward_probe(&p, anchor.r, anchor.t, 1e-7);
        match limit {
            Ok(v) => assert!((v - 1.0).abs() < 1e-3, "{v}"),
            Err(Error::ProbeHitSingularity { r }) => assert!(r < 1e-4),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn probe_rejects_bad_anchor() {
        let p = pl(4, 1.0);
        let th = p.horizon_time(0.02).unwrap();
        assert!(backward_probe(&p, 0.02, th + 1e-9, 1e-7).is_err());
        assert!(backward_probe(&p, 0.02, 0.5, 0.03).is_err());
    }

    proptest! {
        #[test]
        fn phi_equals_area_radius_rderiv(n in 1u32..6, a in 0.05f64..5.0, r in 1e-4f64..0.1, f in 0.0f64..0.999) {
            let p = pl(n, a);
            let t = f * p.singularity_time(r).unwrap();
            let q = pt(r, t);
            let lhs = phi(&p, q).unwrap();
            let rhs = p.area_radius_rderiv(q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300) + 1e-15);
        }

        #[test]
        fn dphi_dt_matches_finite_difference(n in 1u32..6, a in 0.05f64..5.0, r in 1e-2f64..0.1, f in 0.0f64..0.9) {
            let p = pl(n, a);
            let t = f * p.singularity_time(r).unwrap();
            let h = 1e-6;
            let fd = (phi(&p, pt(r, t + h)).unwrap() - phi(&p, pt(r, t - h)).unwrap()) / (2.0 * h);
            let ex = dphi_dt(&p, pt(r, t)).unwrap();
            prop_assert!((fd - ex).abs() <= 1e-6 * ex.abs().max(1.0));
        }
    }
}
