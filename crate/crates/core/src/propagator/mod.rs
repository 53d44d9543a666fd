//! Adaptive RKF7(8) integration of the force model with event location.
//!
//! The integrated vector is `[r, v, mass, ΔV]`. Time is integrated relative to the start of each
//! call so step arithmetic keeps full resolution at epochs of order 1e9 s. When both the Earth
//! and the Moon are in the force model the state is re-expressed about the Moon once it comes
//! within the switch radius, and about the Earth again once it leaves a slightly larger one.

mod events;
pub mod rkf78;
mod trajectory;

use nalgebra::SVector;

use crate::astro::{Body, Epoch, StateVector, Vec3};
use crate::dynamics::{acceleration, DynamicsError, ForceConfig, ThrustCommand};
use crate::ephemeris::Ephemeris;

pub use events::{Direction, EventKind, EventSpec, TRUE_ANOMALY_SEPARATION};
pub use trajectory::{EventRecord, Sample, SegmentInfo, Termination, Trajectory};

type Y = SVector<f64, 8>;

/// Relative width of the band between the Moon-entry and Moon-exit switch radii.
const SWITCH_HYSTERESIS: f64 = 0.05;

/// Hard cap on accepted steps in one call.
const MAX_STEPS: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagationError {
    #[error("step size underflow ({step:e} s) at {}", state.epoch)]
    StepUnderflow { state: StateVector, step: f64 },
    #[error("force model failed at {}: {source}", state.epoch)]
    Dynamics { source: DynamicsError, state: StateVector },
    #[error("step budget exhausted at {}", state.epoch)]
    TooManySteps { state: StateVector },
    #[error("invalid propagation request: {0}")]
    InvalidRequest(String),
}

impl PropagationError {
    /// Last successfully integrated state, when one exists.
    pub fn last_state(&self) -> Option<&StateVector> {
        match self {
            PropagationError::StepUnderflow { state, .. }
            | PropagationError::Dynamics { state, .. }
            | PropagationError::TooManySteps { state } => Some(state),
            PropagationError::InvalidRequest(_) => None,
        }
    }
}

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    /// Absolute position tolerance, km.
    pub abs_pos: f64,
    /// Absolute velocity tolerance, km/s.
    pub abs_vel: f64,
    /// Absolute mass tolerance, kg.
    pub abs_mass: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Tolerances {
    /// Verification profile: relative 1e-10, absolute 1e-12 km.
    pub fn verification() -> Self {
        Self::with_rel(1e-10)
    }

    /// Optimization inner-loop profile.
    pub fn fast() -> Self {
        Self::with_rel(1e-8)
    }

    pub fn with_rel(rel: f64) -> Self {
        Self {
            rel,
            abs_pos: 1e-12,
            abs_vel: 1e-15,
            abs_mass: 1e-12,
            h_min: 1e-6,
            h_max: 21_600.0,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::verification()
    }
}

/// Result of an event-terminated run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventOutcome {
    pub trajectory: Trajectory,
    /// First terminal event, or `None` if `t_max` (or an impact) came first.
    pub hit: Option<EventRecord>,
}

fn pack(s: &StateVector, dv: f64) -> Y {
    let mut y = Y::zeros();
    y.fixed_rows_mut::<3>(0).copy_from(&s.r);
    y.fixed_rows_mut::<3>(3).copy_from(&s.v);
    y[6] = s.mass;
    y[7] = dv;
    y
}

fn unpack(y: &Y, epoch: Epoch, center: Body) -> StateVector {
    StateVector::new(
        epoch,
        Vec3::new(y[0], y[1], y[2]),
        Vec3::new(y[3], y[4], y[5]),
        y[6],
        center,
    )
}

struct Rhs<'a> {
    cfg: &'a ForceConfig,
    cmd: &'a ThrustCommand,
    epoch0: Epoch,
    center: Body,
}

impl Rhs<'_> {
    fn eval(&self, tau: f64, y: &Y) -> Result<Y, DynamicsError> {
        let r = Vec3::new(y[0], y[1], y[2]);
        let v = Vec3::new(y[3], y[4], y[5]);
        let d = acceleration(self.epoch0 + tau, self.center, &r, &v, y[6], self.cmd, self.cfg)?;
        let mut out = Y::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&d.v);
        out.fixed_rows_mut::<3>(3).copy_from(&d.a);
        out[6] = d.mdot;
        out[7] = d.dv_rate;
        Ok(out)
    }

    fn step(&self, tau: f64, y: &Y, k0: &Y, h: f64) -> Result<(Y, Y), DynamicsError> {
        rkf78::step(&mut |t, yy: &Y| self.eval(t, yy), tau, y, k0, h)
    }
}

fn error_ratio(y0: &Y, y1: &Y, err: &Y, tol: &Tolerances) -> f64 {
    let group = |from: usize, len: usize, abs: f64| {
        let mut e2 = 0.0;
        let mut s2 = 0.0;
        for i in from..from + len {
            e2 += err[i] * err[i];
            let s = y0[i].abs().max(y1[i].abs());
            s2 += s * s;
        }
        e2.sqrt() / (abs + tol.rel * s2.sqrt())
    };
    group(0, 3, tol.abs_pos)
        .max(group(3, 3, tol.abs_vel))
        .max(group(6, 1, tol.abs_mass))
}

fn relative_to(
    body: Body,
    center: Body,
    epoch: Epoch,
    y: &Y,
    cfg: &ForceConfig,
) -> Result<(Vec3, Vec3), DynamicsError> {
    let r = Vec3::new(y[0], y[1], y[2]);
    let v = Vec3::new(y[3], y[4], y[5]);
    if body == center {
        return Ok((r, v));
    }
    let eph = cfg.ephemeris.as_ref();
    let (rc, vc) = eph.body_state(center, epoch)?;
    let (rb, vb) = eph.body_state(body, epoch)?;
    Ok((r + rc - rb, v + vc - vb))
}

fn event_value(spec: &EventSpec, center: Body, epoch: Epoch, y: &Y, cfg: &ForceConfig) -> Result<f64, DynamicsError> {
    if let EventKind::TimeReached(t) = spec.kind {
        return Ok(epoch - t);
    }
    let (r, v) = relative_to(spec.body, center, epoch, y, cfg)?;
    Ok(spec.value(epoch, &r, &v))
}

/// Surface-crossing events added to every run for the bodies in the model.
fn impact_events(center: Body, cfg: &ForceConfig) -> Vec<EventSpec> {
    let mut out = Vec::new();
    for body in [Body::Earth, Body::Moon] {
        if body == center || cfg.bodies.contains(body) {
            out.push(EventSpec::altitude_cross(body, 0.0, Direction::Falling));
        }
    }
    out
}

fn central_body_after_step(center: Body, epoch: Epoch, y: &Y, cfg: &ForceConfig) -> Option<Body> {
    if !(cfg.bodies.moon || center == Body::Moon) || !(cfg.bodies.earth || center == Body::Earth) {
        return None;
    }
    let (r_moon, _) = relative_to(Body::Moon, center, epoch, y, cfg).ok()?;
    let d = r_moon.norm();
    match center {
        Body::Earth if d < cfg.center_switch_radius => Some(Body::Moon),
        Body::Moon if d > cfg.center_switch_radius * (1.0 + SWITCH_HYSTERESIS) => Some(Body::Earth),
        _ => None,
    }
}

/// Locates a root of `g` inside a step with an Illinois-safeguarded secant iteration.
///
/// Returns the offset within the step and the state on the far side of the crossing.
#[allow(clippy::too_many_arguments)]
fn locate(
    rhs: &Rhs<'_>,
    spec: &EventSpec,
    tau0: f64,
    y0: &Y,
    k0: &Y,
    h: f64,
    g0: f64,
    g1: f64,
    y1: &Y,
    cfg: &ForceConfig,
) -> Result<(f64, Y, f64), DynamicsError> {
    // The far side is where g lands after the crossing.
    let far = |g: f64| if g0 < 0.0 { g >= 0.0 } else { g <= 0.0 };
    let (mut a, mut ga) = (0.0, g0);
    let (mut b, mut gb, mut yb) = (h, g1, *y1);
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if (gb.abs() <= 1e-9 && width <= 1e-3) || width <= 4.0 * f64::EPSILON * (tau0 + b).abs().max(1.0) {
            break;
        }
        let mut t = if gb != ga {
            b - gb * (b - a) / (gb - ga)
        } else {
            0.5 * (a + b)
        };
        if !(t > a && t < b) {
            t = 0.5 * (a + b);
        }
        let (yt, _) = rhs.step(tau0, y0, k0, t)?;
        let gt = event_value(spec, rhs.center, rhs.epoch0 + tau0 + t, &yt, cfg)?;
        if far(gt) {
            b = t;
            gb = gt;
            yb = yt;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = t;
            ga = gt;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
        if b - a > 0.5 * width {
            // Secant made little progress; bisect once.
            let mid = 0.5 * (a + b);
            let (ym, _) = rhs.step(tau0, y0, k0, mid)?;
            let gm = event_value(spec, rhs.center, rhs.epoch0 + tau0 + mid, &ym, cfg)?;
            if far(gm) {
                b = mid;
                gb = gm;
                yb = ym;
            } else {
                a = mid;
                ga = gm;
            }
            side = 0;
        }
    }
    let gb_true = event_value(spec, rhs.center, rhs.epoch0 + tau0 + b, &yb, cfg)?;
    Ok((b, yb, gb_true))
}

/// Core integration loop shared by every public entry point.
fn integrate(
    state: &StateVector,
    cmd: &ThrustCommand,
    cfg: &ForceConfig,
    t_end: Epoch,
    tol: &Tolerances,
    events: &[EventSpec],
    label: &str,
) -> Result<EventOutcome, PropagationError> {
    if !(t_end >= state.epoch) {
        return Err(PropagationError::InvalidRequest(format!(
            "final epoch {t_end} precedes initial epoch {}",
            state.epoch
        )));
    }
    if !(tol.rel > 0.0) {
        return Err(PropagationError::InvalidRequest(format!(
            "tolerance must be positive, got {}",
            tol.rel
        )));
    }
    let mut traj = Trajectory::new(*state, label, *cmd);
    let epoch0 = state.epoch;
    let span = t_end - epoch0;
    if span == 0.0 {
        return Ok(EventOutcome {
            trajectory: traj,
            hit: None,
        });
    }

    let mut center = state.center;
    let mut tau = 0.0;
    let mut y = pack(state, 0.0);
    let dyn_err = |source: DynamicsError, y: &Y, tau: f64, center: Body| PropagationError::Dynamics {
        source,
        state: unpack(y, epoch0 + tau, center),
    };

    let mut all_events: Vec<EventSpec> = events.to_vec();
    let n_user = all_events.len();
    all_events.extend(impact_events(center, cfg));

    let mut g_prev = all_events
        .iter()
        .map(|e| event_value(e, center, epoch0, &y, cfg))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| dyn_err(e, &y, 0.0, center))?;
    let mut last_hit: Vec<Option<f64>> = vec![None; all_events.len()];

    let mut h = {
        let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        let v = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt().max(1e-6);
        (1e-3 * r / v).clamp(1.0, tol.h_max).min(span)
    };

    for _ in 0..MAX_STEPS {
        let rhs = Rhs {
            cfg,
            cmd,
            epoch0,
            center,
        };
        let k0 = rhs.eval(tau, &y).map_err(|e| dyn_err(e, &y, tau, center))?;

        // Find an acceptable step.
        let (h_used, y1, h_next) = loop {
            let remaining = span - tau;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let (y1, err) = rhs.step(tau, &y, &k0, h_try).map_err(|e| dyn_err(e, &y, tau, center))?;
            let ratio = error_ratio(&y, &y1, &err, tol);
            if ratio <= 1.0 {
                let grow = if ratio == 0.0 {
                    4.0
                } else {
                    (0.9 * ratio.powf(-1.0 / 8.0)).clamp(0.2, 4.0)
                };
                break (h_try, y1, (h_try * grow).min(tol.h_max));
            }
            let shrink = (0.9 * ratio.powf(-1.0 / 8.0)).clamp(0.1, 0.9);
            h = h_try * shrink;
            if h < tol.h_min {
                return Err(PropagationError::StepUnderflow {
                    state: unpack(&y, epoch0 + tau, center),
                    step: h,
                });
            }
        };
        let tau1 = if (span - tau - h_used).abs() <= 0.0 || tau + h_used >= span {
            span
        } else {
            tau + h_used
        };
        let epoch1 = if tau1 == span { t_end } else { epoch0 + tau1 };

        // Events within the step.
        let mut g_new = Vec::with_capacity(all_events.len());
        for e in &all_events {
            g_new.push(event_value(e, center, epoch1, &y1, cfg).map_err(|err| dyn_err(err, &y1, tau1, center))?);
        }
        let mut hits: Vec<(f64, usize, Y, f64)> = Vec::new();
        for (i, spec) in all_events.iter().enumerate() {
            if !spec.crosses(g_prev[i], g_new[i]) {
                continue;
            }
            let (dt, yb, gb) = locate(&rhs, spec, tau, &y, &k0, tau1 - tau, g_prev[i], g_new[i], &y1, cfg)
                .map_err(|err| dyn_err(err, &y, tau, center))?;
            if let (EventKind::TrueAnomaly(_), Some(prev)) = (spec.kind, last_hit[i]) {
                if tau + dt - prev < TRUE_ANOMALY_SEPARATION {
                    continue;
                }
            }
            hits.push((dt, i, yb, gb));
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut stop: Option<(f64, Y, Option<usize>)> = None;
        for (dt, i, yb, gb) in hits {
            if let Some((t_stop, _, _)) = stop {
                if dt > t_stop {
                    break;
                }
            }
            let t_hit = tau + dt;
            let epoch_hit = if t_hit >= span { t_end } else { epoch0 + t_hit };
            last_hit[i] = Some(t_hit);
            let spec = all_events[i];
            let hit_state = unpack(&yb, epoch_hit, center);
            if i < n_user {
                traj.events.push(EventRecord {
                    spec,
                    index: i,
                    state: hit_state,
                    dv: yb[7],
                    g: gb,
                });
            }
            if spec.terminal && stop.is_none() {
                stop = Some((dt, yb, if i < n_user { Some(i) } else { None }));
                if i >= n_user {
                    traj.termination = Termination::Impact(spec.body);
                } else {
                    traj.termination = Termination::Event;
                }
            }
        }

        if let Some((dt, yb, user_idx)) = stop {
            let t_hit = tau + dt;
            let epoch_hit = if t_hit >= span { t_end } else { epoch0 + t_hit };
            if epoch_hit > traj.end_epoch() {
                traj.samples.push(Sample {
                    state: unpack(&yb, epoch_hit, center),
                    dv: yb[7],
                    segment: 0,
                });
            }
            let hit = user_idx.and_then(|i| traj.events.iter().rev().find(|e| e.index == i).cloned());
            return Ok(EventOutcome { trajectory: traj, hit });
        }

        tau = tau1;
        y = y1;
        g_prev = g_new;
        h = h_next;

        if let Some(new_center) = central_body_after_step(center, epoch1, &y, cfg) {
            let s = unpack(&y, epoch1, center);
            let moved = crate::astro::recenter(&s, new_center, cfg.ephemeris.as_ref())
                .map_err(|e| dyn_err(e.into(), &y, tau, center))?;
            y = pack(&moved, y[7]);
            center = new_center;
            for (i, e) in all_events.iter().enumerate() {
                g_prev[i] = event_value(e, center, epoch1, &y, cfg).map_err(|err| dyn_err(err, &y, tau, center))?;
            }
        }

        traj.samples.push(Sample {
            state: unpack(&y, epoch1, center),
            dv: y[7],
            segment: 0,
        });
        if tau >= span {
            return Ok(EventOutcome {
                trajectory: traj,
                hit: None,
            });
        }
    }
    Err(PropagationError::TooManySteps {
        state: unpack(&y, epoch0 + tau, center),
    })
}

/// Integrates to `t_end`, stopping early only on surface impact.
pub fn propagate(
    state: &StateVector,
    cmd: &ThrustCommand,
    cfg: &ForceConfig,
    t_end: Epoch,
    tol: &Tolerances,
) -> Result<Trajectory, PropagationError> {
    let label = if cmd.on { "thrust" } else { "coast" };
    integrate(state, cmd, cfg, t_end, tol, &[], label).map(|o| o.trajectory)
}

/// Integrates until the first terminal event in `events` or `t_max`.
///
/// Non-terminal events are logged in the trajectory. Not finding a terminal event is reported
/// through `hit == None`, not as an error.
pub fn propagate_to_event(
    state: &StateVector,
    cmd: &ThrustCommand,
    cfg: &ForceConfig,
    events: &[EventSpec],
    t_max: Epoch,
    tol: &Tolerances,
) -> Result<EventOutcome, PropagationError> {
    let label = if cmd.on { "thrust" } else { "coast" };
    integrate(state, cmd, cfg, t_max, tol, events, label)
}

/// Re-evaluates a trajectory on a uniform time grid.
///
/// Each grid point is reached by one RKF7(8) step from the preceding stored node under that
/// interval's thrust command, so accuracy matches the original integration.
pub fn resample(traj: &Trajectory, step: f64, cfg: &ForceConfig) -> Result<Trajectory, PropagationError> {
    if !(step > 0.0) {
        return Err(PropagationError::InvalidRequest(format!(
            "resample step {step} must be positive"
        )));
    }
    let t0 = traj.start_epoch();
    let span = traj.end_epoch() - t0;
    let count = (span / step).floor() as usize + 1;
    let mut samples = Vec::with_capacity(count);
    let mut i = 0usize;
    for k in 0..count {
        let t = t0 + step * k as f64;
        while i + 1 < traj.samples.len() && traj.samples[i + 1].state.epoch <= t {
            i += 1;
        }
        let node = &traj.samples[i];
        let dt = t - node.state.epoch;
        if dt == 0.0 || i + 1 == traj.samples.len() {
            samples.push(*node);
            continue;
        }
        let next = &traj.samples[i + 1];
        let cmd = &traj.segments[next.segment].cmd;
        let rhs = Rhs {
            cfg,
            cmd,
            epoch0: node.state.epoch,
            center: node.state.center,
        };
        let y0 = pack(&node.state, node.dv);
        let fail = |source| PropagationError::Dynamics {
            source,
            state: node.state,
        };
        let k0 = rhs.eval(0.0, &y0).map_err(fail)?;
        let (y1, _) = rhs.step(0.0, &y0, &k0, dt).map_err(fail)?;
        samples.push(Sample {
            state: unpack(&y1, t, node.state.center),
            dv: y1[7],
            segment: next.segment,
        });
    }
    Ok(Trajectory {
        samples,
        events: traj.events.clone(),
        segments: traj.segments.clone(),
        termination: traj.termination,
    })
}
