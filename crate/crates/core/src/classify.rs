//! Analytic and numeric endstate verdicts.
//!
//! The analytic verdict comes from a closed-form rule table. The numeric
//! verdict is independent evidence: a ray shot out of the singular center
//! that stays below the apparent horizon (naked), or backward probes from
//! just below the horizon that all land on the regular center before `t = 1`
//! (covered).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geodesics::{
    backward_probe_detailed, integrate_from_singularity, singular_start_with, RootChoice,
    SingularStart, Termination, DEFAULT_EPSILON,
};
use crate::geometry::{ModelConfig, ModelParams};
use crate::ode::StepControl;
use crate::roots::critical_constants;

/// Half-width of the band around `a_c` in which `n = 3` results are flagged.
pub const MARGINAL_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Naked,
    BlackHole,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Naked => "naked",
            Verdict::BlackHole => "black-hole",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericVerdict {
    Naked,
    BlackHole,
    Inconclusive,
}

impl NumericVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            NumericVerdict::Naked => "naked",
            NumericVerdict::BlackHole => "black-hole",
            NumericVerdict::Inconclusive => "inconclusive",
        }
    }

    pub fn matches(&self, v: Verdict) -> bool {
        matches!(
            (self, v),
            (NumericVerdict::Naked, Verdict::Naked) | (NumericVerdict::BlackHole, Verdict::BlackHole)
        )
    }
}

/// Which result of the classification fixes the analytic verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// `n = 1, 2`: a ray leaves the singularity.
    #[serde(rename = "T4.1")]
    T41,
    /// `n >= 4`: covered.
    #[serde(rename = "T3.1")]
    T31,
    /// `n = 3`, `a <= 8/27`: covered.
    #[serde(rename = "P5.1")]
    P51,
    /// `n = 3`, `a >= a_c`: naked.
    #[serde(rename = "P5.2")]
    P52,
    /// `n = 3`, `8/27 < a < a_c`: naked would require `a >= a_c`.
    #[serde(rename = "P5.3")]
    P53,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::T41 => "T4.1",
            Rule::T31 => "T3.1",
            Rule::P51 => "P5.1",
            Rule::P52 => "P5.2",
            Rule::P53 => "P5.3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endstate {
    pub verdict: Verdict,
    /// `n = 3` and `|a - a_c| <= 1e-6`.
    pub marginal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticVerdict {
    pub endstate: Endstate,
    pub rule: Rule,
}

pub fn is_marginal(n: u32, a: f64) -> bool {
    n == 3 && (a - critical_constants().a_c).abs() <= MARGINAL_BAND
}

/// The rule table. Total over `n >= 1`, `a > 0`; other inputs are rejected.
pub fn classify_analytic(n: u32, a: f64) -> Result<AnalyticVerdict> {
    if n < 1 || !(a > 0.0 && a.is_finite()) {
        return Err(crate::Error::InvalidArgument(format!(
            "classification needs n >= 1 and a > 0, got n = {n}, a = {a}"
        )));
    }
    let cc = critical_constants();
    let (verdict, rule) = match n {
        1 | 2 => (Verdict::Naked, Rule::T41),
        3 if a <= cc.horizon_threshold => (Verdict::BlackHole, Rule::P51),
        3 if a >= cc.a_c => (Verdict::Naked, Rule::P52),
        3 => (Verdict::BlackHole, Rule::P53),
        _ => (Verdict::BlackHole, Rule::T31),
    };
    Ok(AnalyticVerdict {
        endstate: Endstate {
            verdict,
            marginal: is_marginal(n, a),
        },
        rule,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericSettings {
    pub step: StepControl,
    pub epsilon: f64,
    /// A forward shot counts as escaping once it stays below the horizon out
    /// to `escape_factor * epsilon`.
    pub escape_factor: f64,
    pub root_choice: RootChoice,
    pub probe_radii: Vec<f64>,
    /// Anchors sit `anchor_depth * (t_s - t_h)` below the horizon.
    pub anchor_depth: f64,
    pub r_floor: f64,
    /// A probe supports a covered center when `t(r_floor) < 1 - probe_margin`
    /// and the ray was certified below `t = 1` on the way.
    pub probe_margin: f64,
    /// Run backward probes even when a forward shot already escaped.
    pub always_probe: bool,
}

impl Default for NumericSettings {
    fn default() -> Self {
        NumericSettings {
            step: StepControl::default(),
            epsilon: DEFAULT_EPSILON,
            escape_factor: 1e3,
            root_choice: RootChoice::Smallest,
            probe_radii: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            anchor_depth: 1e-6,
            r_floor: 1e-100,
            probe_margin: 0.0,
            always_probe: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEvidence {
    pub r1: f64,
    pub t1: f64,
    pub limit_offset: Option<f64>,
    pub below_center_at: Option<f64>,
    pub error: Option<String>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub start: Option<SingularStart>,
    pub start_error: Option<String>,
    pub termination: Option<Termination>,
    pub r_escape: Option<f64>,
    pub probes: Vec<ProbeEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericReport {
    pub verdict: NumericVerdict,
    pub marginal: bool,
    pub evidence: Evidence,
    pub reason: Option<String>,
}

fn probe_radii(params: &ModelParams, settings: &NumericSettings) -> Vec<f64> {
    let inside: Vec<f64> = settings
        .probe_radii
        .iter()
        .copied()
        .filter(|&r| r > 0.0 && r <= params.r_max())
        .collect();
    if inside.is_empty() {
        (1..=5).map(|i| params.r_max() * i as f64 / 10.0).collect()
    } else {
        inside
    }
}

/// Anchor time `t_h(r1) - depth * (t_s - t_h)` for a probe at `r1`.
pub fn anchor_time(params: &ModelParams, r1: f64, depth: f64) -> f64 {
    let k = params.k_at(r1);
    1.0 + params.horizon_offset_at(r1) - depth * 8.0 / 27.0 * k * k * r1.powi(3)
}

pub fn run_probes(params: &ModelParams, settings: &NumericSettings) -> Vec<ProbeEvidence> {
    probe_radii(params, settings)
        .into_iter()
        .map(|r1| {
            let t1 = anchor_time(params, r1, settings.anchor_depth);
            match backward_probe_detailed(params, r1, t1, settings.r_floor, &settings.step) {
                Ok(o) => ProbeEvidence {
                    r1,
                    t1,
                    limit_offset: Some(o.limit_offset),
                    below_center_at: o.below_center_at,
                    error: None,
                    certified: o.below_center_at.is_some() && o.limit_offset < -settings.probe_margin,
                },
                Err(e) => ProbeEvidence {
                    r1,
                    t1,
                    limit_offset: None,
                    below_center_at: None,
                    error: Some(e.to_string()),
                    certified: false,
                },
            }
        })
        .collect()
}

pub fn classify_numeric(params: &ModelParams, settings: &NumericSettings) -> NumericReport {
    let mut evidence = Evidence {
        start: None,
        start_error: None,
        termination: None,
        r_escape: None,
        probes: Vec::new(),
    };
    let escape_at = settings.escape_factor * settings.epsilon;
    let mut escaped = false;
    match singular_start_with(params, settings.root_choice) {
        Ok(start) => {
            let start = start.with_epsilon(settings.epsilon);
            evidence.start = Some(start);
            if settings.epsilon < params.r_max() {
                match integrate_from_singularity(params, start, params.r_max(), &settings.step) {
                    Ok(path) => {
                        let r_escape = path.escape_radius();
                        escaped = r_escape >= escape_at.min(params.r_max());
                        evidence.termination = Some(path.termination);
                        evidence.r_escape = Some(r_escape);
                    }
                    Err(e) => evidence.start_error = Some(e.to_string()),
                }
            } else {
                evidence.start_error = Some("epsilon is not below r_max".into());
            }
        }
        Err(e) => evidence.start_error = Some(e.to_string()),
    }
    if !escaped || settings.always_probe {
        evidence.probes = run_probes(params, settings);
    }
    let all_certified = !evidence.probes.is_empty() && evidence.probes.iter().all(|p| p.certified);

    let (verdict, reason) = if escaped && all_certified {
        (
            NumericVerdict::Inconclusive,
            Some("a ray escapes the center, yet every probe lands below it".into()),
        )
    } else if escaped {
        (NumericVerdict::Naked, None)
    } else if evidence.start.is_some() {
        let detail = match (evidence.termination, evidence.r_escape) {
            (Some(t), Some(r)) => format!("singular start exists but the ray ended ({}) at r = {r:e}", t.label()),
            _ => "singular start exists but the shot failed".into(),
        };
        (NumericVerdict::Inconclusive, Some(detail))
    } else if all_certified {
        (NumericVerdict::BlackHole, None)
    } else {
        let failed = evidence.probes.iter().filter(|p| !p.certified).count();
        (
            NumericVerdict::Inconclusive,
            Some(format!(
                "no singular start, but {failed} of {} probes were not certified below t = 1",
                evidence.probes.len()
            )),
        )
    };
    NumericReport {
        verdict,
        marginal: is_marginal(params.n(), params.a()),
        evidence,
        reason,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub params: ModelConfig,
    pub analytic: AnalyticVerdict,
    pub numeric: NumericReport,
    pub agree: bool,
    pub reason: Option<String>,
}

pub fn classify(params: &ModelParams, settings: &NumericSettings) -> ClassificationReport {
    let analytic = classify_analytic(params.n(), params.a()).expect("validated params");
    let numeric = classify_numeric(params, settings);
    let agree = numeric.verdict.matches(analytic.endstate.verdict);
    let reason = if agree {
        None
    } else if numeric.verdict == NumericVerdict::Inconclusive {
        Some(format!("numeric inconclusive: {}", numeric.reason.clone().unwrap_or_default()))
    } else {
        Some(format!(
            "analytic {} ({}) vs numeric {}",
            analytic.endstate.verdict.as_str(),
            analytic.rule.as_str(),
            numeric.verdict.as_str()
        ))
    };
    ClassificationReport {
        params: params.clone().into(),
        analytic,
        numeric,
        agree,
        reason,
    }
}
