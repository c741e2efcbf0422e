//! Scalar adaptive Dormand-Prince 5(4) integrator with event location.
//!
//! The right-hand side returns `None` outside its domain; such trial steps are
//! rejected and retried with a smaller step. Events are located by bisection
//! on the step length from the last accepted state.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step before the controller gives up.
    pub h_min: f64,
    pub h_max: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-14,
            h_max: 0.25,
            h_init: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunEnd {
    /// Reached the requested end point.
    Completed,
    /// The observer or an event asked to stop.
    Stopped,
    /// Step size fell below `h_min` (or `max_steps` was exhausted).
    StepUnderflow,
}

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// One Dormand-Prince step. Returns the 5th-order solution and the embedded
/// error estimate, or `None` if any stage left the domain.
pub fn dopri_step<F>(f: &mut F, s: f64, y: f64, h: f64) -> Option<(f64, f64)>
where
    F: FnMut(f64, f64) -> Option<f64>,
{
    let k1 = f(s, y)?;
    let k2 = f(s + h / 5.0, y + h * (k1 / 5.0))?;
    let k3 = f(
        s + 3.0 * h / 10.0,
        y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2),
    )?;
    let k4 = f(
        s + 4.0 * h / 5.0,
        y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3),
    )?;
    let k5 = f(
        s + 8.0 * h / 9.0,
        y + h
            * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
                - 212.0 / 729.0 * k4),
    )?;
    let k6 = f(
        s + h,
        y + h
            * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2
                + 46732.0 / 5247.0 * k3
                + 49.0 / 176.0 * k4
                - 5103.0 / 18656.0 * k5),
    )?;
    let y5 = y + h
        * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5
            + 11.0 / 84.0 * k6);
    let k7 = f(s + h, y5)?;
    let y4 = y + h
        * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 + 393.0 / 640.0 * k4
            - 92097.0 / 339200.0 * k5
            + 187.0 / 2100.0 * k6
            + 1.0 / 40.0 * k7);
    let (y5, err) = (y5, (y5 - y4).abs());
    if !(y5.is_finite() && err.is_finite()) {
        return None;
    }
    Some((y5, err))
}

/// A scalar event `g(s, y)`; it fires when `g` goes from negative to
/// non-negative across an accepted step.
pub trait Event {
    fn value(&self, s: f64, y: f64) -> f64;
    /// Bisection stops once the bracket in `s` is narrower than this.
    fn resolution(&self, s: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub index: usize,
    pub s: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub end: RunEnd,
    pub s: f64,
    pub y: f64,
    pub accepted: usize,
    pub event: Option<EventHit>,
}

/// Integrates `dy/ds = f(s, y)` from `s0` towards `s1` (either direction).
///
/// `observer` sees every accepted state (including the initial one) and may
/// stop the run. Events in `events` are checked after every accepted step;
/// the first one to fire is located by bisection and ends the run.
pub fn integrate<F, O>(
    ctl: &StepControl,
    mut f: F,
    s0: f64,
    y0: f64,
    s1: f64,
    events: &[&dyn Event],
    mut observer: O,
) -> Run
where
    F: FnMut(f64, f64) -> Option<f64>,
    O: FnMut(f64, f64) -> Flow,
{
    let dir = if s1 >= s0 { 1.0 } else { -1.0 };
    let mut s = s0;
    let mut y = y0;
    let mut h = ctl.h_init.min(ctl.h_max).min((s1 - s0).abs());
    let mut accepted = 0usize;
    let mut g_prev: Vec<f64> = events.iter().map(|e| e.value(s, y)).collect();

    let finish = |end, s, y, accepted, event| Run {
        end,
        s,
        y,
        accepted,
        event,
    };

    // An event already active at the start fires immediately.
    if let Some(index) = g_prev.iter().position(|g| *g >= 0.0) {
        observer(s, y);
        return finish(RunEnd::Stopped, s, y, 0, Some(EventHit { index, s, y }));
    }
    if observer(s, y) == Flow::Stop {
        return finish(RunEnd::Stopped, s, y, 0, None);
    }

    let mut steps = 0usize;
    while dir * (s1 - s) > 0.0 {
        steps += 1;
        if steps > ctl.max_steps {
            return finish(RunEnd::StepUnderflow, s, y, accepted, None);
        }
        let remaining = (s1 - s).abs();
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        if h_try < ctl.h_min && !last {
            return finish(RunEnd::StepUnderflow, s, y, accepted, None);
        }
        let Some((y_new, err)) = dopri_step(&mut f, s, y, dir * h_try) else {
            h = h_try * MIN_SCALE;
            if h < ctl.h_min {
                return finish(RunEnd::StepUnderflow, s, y, accepted, None);
            }
            continue;
        };
        let scale = ctl.atol + ctl.rtol * y.abs().max(y_new.abs());
        let err_norm = err / scale;
        if err_norm > 1.0 {
            let factor = (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, 1.0);
            h = h_try * factor;
            if h < ctl.h_min {
                return finish(RunEnd::StepUnderflow, s, y, accepted, None);
            }
            continue;
        }

        let s_new = if last { s1 } else { s + dir * h_try };

        // event check on the accepted step
        for (index, event) in events.iter().enumerate() {
            let g_new = event.value(s_new, y_new);
            if g_prev[index] < 0.0 && g_new >= 0.0 {
                let (se, ye) = locate(&mut f, *event, s, y, s_new, y_new, dir);
                observer(se, ye);
                return finish(
                    RunEnd::Stopped,
                    se,
                    ye,
                    accepted + 1,
                    Some(EventHit { index, s: se, y: ye }),
                );
            }
            g_prev[index] = g_new;
        }

        s = s_new;
        y = y_new;
        accepted += 1;
        if observer(s, y) == Flow::Stop {
            return finish(RunEnd::Stopped, s, y, accepted, None);
        }

        let factor = if err_norm == 0.0 {
            MAX_SCALE
        } else {
            (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };
        h = (h_try * factor).min(ctl.h_max);
    }
    finish(RunEnd::Completed, s, y, accepted, None)
}

/// Bisects on the step length from `(s, y)` so that the returned state is the
/// first point where the event is non-negative, to the event's resolution.
fn locate<F>(
    f: &mut F,
    event: &dyn Event,
    s: f64,
    y: f64,
    s_hit: f64,
    y_hit: f64,
    dir: f64,
) -> (f64, f64)
where
    F: FnMut(f64, f64) -> Option<f64>,
{
    let mut lo = 0.0;
    let mut hi = (s_hit - s).abs();
    let mut best = (s_hit, y_hit);
    for _ in 0..200 {
        if hi - lo <= event.resolution(best.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match dopri_step(f, s, y, dir * mid) {
            Some((ym, _)) => {
                let sm = s + dir * mid;
                if event.value(sm, ym) >= 0.0 {
                    hi = mid;
                    best = (sm, ym);
                } else {
                    lo = mid;
                }
            }
            // stages left the domain: the crossing is closer
            None => hi = mid,
        }
    }
    best
}
