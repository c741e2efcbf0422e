//! The critical algebraic layer for `n = 3`.
//!
//! A ray `t = 1 + x r^3` leaving the central singularity needs
//! `Q(a, x) = (3a - x) / (a - x)^{1/3} - 3x = 0` at `r = 0`. Cubing gives the
//! quartic `27 x^3 (a - x) - (3a - x)^3 = 0`, whose real positive roots exist
//! only for `a <= a_0` or `a >= a_c`.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|Q(a, x)|` below which a polished root is accepted.
pub const Q_TOLERANCE: f64 = 1e-10;

/// Roots closer than this (relative to `max(1, |x|)`) are one double root.
pub const DOUBLE_ROOT_GAP: f64 = 1e-6;

/// Companion eigenvalues with a relative imaginary part below this are
/// treated as candidates for (near-)real roots.
const REAL_CANDIDATE_IM: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub a_c: f64,
    pub a_0: f64,
    /// `8/27`: at or below this amplitude the horizon forms first.
    pub horizon_threshold: f64,
}

pub fn critical_constants() -> CriticalConstants {
    let s = 26.0 + 15.0 * 3f64.sqrt();
    CriticalConstants {
        a_c: 2.0 * s / 27.0,
        // (26 + 15 sqrt 3)(26 - 15 sqrt 3) = 1; the reciprocal form avoids
        // the cancellation in 26 - 15 sqrt 3.
        a_0: 2.0 / (27.0 * s),
        horizon_threshold: 8.0 / 27.0,
    }
}

/// Coefficients of `27 x^3 (a - x) - (3a - x)^3`, highest degree first.
pub fn quartic_coefficients(a: f64) -> [f64; 5] {
    [
        -27.0,
        27.0 * a + 1.0,
        -9.0 * a,
        27.0 * a * a,
        -27.0 * a * a * a,
    ]
}

pub fn quartic_value(a: f64, x: f64) -> f64 {
    horner(&quartic_coefficients(a), x)
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ci| acc * x + ci)
}

fn horner_deriv(c: &[f64; 5], x: f64) -> f64 {
    let deg = c.len() - 1;
    c[..deg]
        .iter()
        .enumerate()
        .fold(0.0, |acc, (i, &ci)| acc * x + ci * (deg - i) as f64)
}

fn horner_second(c: &[f64; 5], x: f64) -> f64 {
    let deg = c.len() - 1;
    c[..deg - 1].iter().enumerate().fold(0.0, |acc, (i, &ci)| {
        let p = (deg - i) as f64;
        acc * x + ci * p * (p - 1.0)
    })
}

fn horner_complex(c: &[f64; 5], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ci in c {
        dp = dp * z + p;
        p = p * z + ci;
    }
    (p, dp)
}

/// `Q(a, x) = (3a - x) / (a - x)^{1/3} - 3x`, defined for `x < a`.
#[allow(non_snake_case)]
pub fn Q(a: f64, x: f64) -> Result<f64> {
    if x.is_nan() || x >= a {
        return Err(Error::QDomain { a, x });
    }
    Ok((3.0 * a - x) / (a - x).cbrt() - 3.0 * x)
}

/// `Q` continued to `x > a` with the real cube root. Roots of the quartic
/// with `x > a` (the `a <= a_0` branch) satisfy this form.
pub fn q_real_branch(a: f64, x: f64) -> Result<f64> {
    if x.is_nan() || x == a {
        return Err(Error::QDomain { a, x });
    }
    Ok((3.0 * a - x) / (a - x).cbrt() - 3.0 * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Positive roots exist but lie beyond the singularity curve (`x > a`).
    Low,
    /// No positive roots.
    Gap,
    /// Positive roots with `0 < x < a`.
    SuperCritical,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Low => "low",
            Regime::Gap => "gap",
            Regime::SuperCritical => "super-critical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub a: f64,
    pub quartic_coeffs: [f64; 5],
    /// All four roots with multiplicity, sorted by real then imaginary part.
    pub all_roots: Vec<Complex64>,
    /// Real positive roots (`x != a`) verified against the unreduced relation.
    pub admissible: Vec<f64>,
    /// Admissible roots with `x < a`: tangents of rays that start before the
    /// singularity curve.
    pub physical: Vec<f64>,
    /// Two admissible roots merged into one (the `a ~ a_c` or `a ~ a_0` band).
    pub double_root: bool,
}

impl RootReport {
    pub fn regime(&self) -> Regime {
        if !self.physical.is_empty() {
            Regime::SuperCritical
        } else if !self.admissible.is_empty() {
            Regime::Low
        } else {
            Regime::Gap
        }
    }
}

fn companion_roots(c: &[f64; 5]) -> Vec<Complex64> {
    let lead = c[0];
    let m = Matrix4::new(
        0.0, 0.0, 0.0, -c[4] / lead,
        1.0, 0.0, 0.0, -c[3] / lead,
        0.0, 1.0, 0.0, -c[2] / lead,
        0.0, 0.0, 1.0, -c[1] / lead,
    );
    let eig = m.complex_eigenvalues();
    let mut roots: Vec<Complex64> = eig
        .iter()
        .map(|&z| {
            // a few Newton steps on the quartic, kept only if they help
            let mut z = Complex64::new(z.re, z.im);
            for _ in 0..4 {
                let (p, dp) = horner_complex(c, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let next = z - p / dp;
                if horner_complex(c, next).0.norm() < p.norm() {
                    z = next;
                } else {
                    break;
                }
            }
            z
        })
        .collect();
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    roots
}

/// Newton iteration on `g` with derivative `dg`, returning the iterate with
/// the smallest `|g|`.
fn newton_real(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, x0: f64) -> f64 {
    let mut x = x0;
    let mut best = (g(x).abs(), x);
    for _ in 0..100 {
        let d = dg(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = g(x) / d;
        x -= step;
        let gx = g(x).abs();
        if gx < best.0 {
            best = (gx, x);
        }
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    best.1
}

fn accept(a: f64, x: f64) -> bool {
    x > 0.0
        && (x - a).abs() > 1e-12 * a
        && q_real_branch(a, x).is_ok_and(|q| q.abs() <= Q_TOLERANCE)
}

/// All roots of the quartic for amplitude `a`, with the admissible subset
/// verified against `Q`.
pub fn solve_roots(a: f64) -> RootReport {
    let c = quartic_coefficients(a);
    let all_roots = companion_roots(&c);

    let mut found: Vec<f64> = Vec::new();
    for z in &all_roots {
        if z.im.abs() > REAL_CANDIDATE_IM * z.norm().max(1.0) || z.re <= 0.0 {
            continue;
        }
        let p = |x: f64| horner(&c, x);
        let dp = |x: f64| horner_deriv(&c, x);
        let mut x = newton_real(p, dp, z.re);
        if !accept(a, x) && z.im != 0.0 {
            // complex pair near the real axis: the double-root candidate is
            // the nearby extremum of the quartic
            x = newton_real(dp, |x| horner_second(&c, x), z.re);
        }
        if accept(a, x) {
            found.push(x);
        }
    }
    found.sort_by(f64::total_cmp);

    let mut admissible: Vec<f64> = Vec::new();
    let mut double_root = false;
    for x in found {
        match admissible.last_mut() {
            Some(prev) if (x - *prev).abs() < DOUBLE_ROOT_GAP * prev.abs().max(1.0) => {
                if x != *prev {
                    double_root = true;
                }
                *prev = 0.5 * (x + *prev);
            }
            _ => admissible.push(x),
        }
    }
    // a lone root fed by a near-real complex pair is a double root too
    let near_real_pairs = all_roots
        .iter()
        .filter(|z| z.re > 0.0 && z.im != 0.0 && z.im.abs() <= REAL_CANDIDATE_IM * z.norm().max(1.0))
        .count();
    if near_real_pairs >= 2 && admissible.len() == 1 {
        double_root = true;
    }
    if double_root {
        // the double root is the nearby extremum of the quartic
        for x in admissible.iter_mut() {
            let xm = newton_real(
                |x| horner_deriv(&c, x),
                |x| horner_second(&c, x),
                *x,
            );
            if (xm - *x).abs() < DOUBLE_ROOT_GAP * x.abs().max(1.0) && accept(a, xm) {
                *x = xm;
            }
        }
    }
    let physical = admissible.iter().copied().filter(|&x| x < a).collect();

    RootReport {
        a,
        quartic_coeffs: c,
        all_roots,
        admissible,
        physical,
        double_root,
    }
}

/// Bisects `[lo, hi]` for the point where `pred` changes value, to a bracket
/// width of `tol`. The predicate is first sampled on `probe_points` points
/// (log-spaced when `log_spaced`) and must change exactly once.
pub fn bisect_boundary(
    pred: impl Fn(f64) -> bool,
    lo: f64,
    hi: f64,
    tol: f64,
    probe_points: usize,
    log_spaced: bool,
) -> Result<f64> {
    let at_lo = pred(lo);
    if at_lo == pred(hi) {
        return Err(Error::BadBracket { lo, hi });
    }
    let mut changes = 0;
    let mut prev = at_lo;
    for i in 1..=probe_points {
        let f = i as f64 / probe_points as f64;
        let x = if log_spaced {
            lo * (hi / lo).powf(f)
        } else {
            lo + (hi - lo) * f
        };
        let v = pred(x);
        if v != prev {
            changes += 1;
        }
        prev = v;
    }
    if changes != 1 {
        return Err(Error::NonMonotonePredicate { lo, hi });
    }
    let (mut l, mut h) = (lo, hi);
    while h - l > tol {
        let mid = 0.5 * (l + h);
        if pred(mid) == at_lo {
            l = mid;
        } else {
            h = mid;
        }
    }
    Ok(0.5 * (l + h))
}

/// Infimum of the upper admissible region, recovered by bisection over
/// `[1, 10]`.
pub fn find_critical_a_numeric() -> Result<f64> {
    bisect_boundary(|a| !solve_roots(a).admissible.is_empty(), 1.0, 10.0, 1e-10, 64, false)
}

/// Supremum of the lower admissible region, recovered by bisection over
/// `[1e-5, 0.1]`.
pub fn find_lower_critical_a_numeric() -> Result<f64> {
    bisect_boundary(|a| !solve_roots(a).admissible.is_empty(), 1e-5, 0.1, 1e-12, 64, true)
}
