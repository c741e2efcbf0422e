//! Endstate analysis of marginally bound Tolman-Bondi dust collapse.
//!
//! The crate decides whether the central singularity of a collapsing dust
//! ball with `k(r) = 1 - a r^n + ...` is naked or covered, both from the known
//! analytic classification and from direct integration of radial null
//! geodesics.

pub mod classify;
pub mod error;
pub mod geodesics;
pub mod geometry;
pub mod ode;
pub mod real;
pub mod roots;
pub mod sweep;
pub mod verification;

pub use classify::{
    classify, classify_analytic, classify_numeric, AnalyticVerdict, ClassificationReport, Endstate,
    NumericReport, NumericSettings, NumericVerdict, Rule, Verdict,
};
pub use error::{Error, Result};
pub use geodesics::{
    backward_probe, dphi_dt, integrate_from_singularity, phi, singular_start, transformed_rhs,
    GeodesicPath, SingularStart, Termination,
};
pub use geometry::{GammaTerm, ModelConfig, ModelParams, SpacetimePoint};
pub use ode::StepControl;
pub use roots::{critical_constants, find_critical_a_numeric, solve_roots, CriticalConstants, RootReport, Q};
pub use sweep::{emit, load_model_config, run_sweep, Format, SweepGrid, SweepResult, SweepSettings, Spacing};
pub use verification::{
    check_dphidt_on_horizon, check_envelope_containment, check_phi_on_horizon,
    check_subsolution_margin, estimate_envelope, fit_exponent, EnvelopeBounds, IdentityCheckResult,
};
