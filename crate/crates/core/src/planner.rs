//! Two-body impulsive lunar orbit insertion.

use crate::astro::{c3, vnb_basis, AstroError, Body, StateVector, Vec3};
use crate::constants::{MOON_RADIUS, MU_MOON};
use crate::ephemeris::{Ephemeris, EphemerisError};
use crate::maneuver::{apply_impulse, ManeuverError, Spacecraft};
use crate::propagator::{EventKind, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("approach trajectory has no lunar periapsis event")]
    NoPerilune,
    #[error("approach is already bound to the Moon (C3 = {c3:.6} km²/s²)")]
    AlreadyBound { c3: f64 },
    #[error("invalid plan input: {0}")]
    Domain(String),
    #[error(transparent)]
    Astro(#[from] AstroError),
    #[error(transparent)]
    Ephemeris(#[from] EphemerisError),
    #[error(transparent)]
    Maneuver(#[from] ManeuverError),
}

/// Single retrograde perilune impulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapturePlan {
    /// Perilune radius, km.
    pub rp: f64,
    /// Hyperbolic excess speed, km/s.
    pub v_inf: f64,
    pub e_target: f64,
    /// Impulse magnitude, m/s.
    pub dv: f64,
    /// Equivalent finite-burn duration at the perilune mass, s.
    pub burn_duration: f64,
    /// Moon-centered state at perilune, when planned from a trajectory.
    pub perilune: Option<StateVector>,
}

/// Retrograde perilune ΔV (m/s) that turns a hyperbola with excess speed `v_inf` into an
/// ellipse of eccentricity `e_target` with the same periapsis.
pub fn loi_dv(rp: f64, v_inf: f64, e_target: f64) -> f64 {
    let v_hyp = (v_inf * v_inf + 2.0 * MU_MOON / rp).sqrt();
    let v_ell = ((1.0 + e_target) * MU_MOON / rp).sqrt();
    (v_hyp - v_ell) * 1e3
}

fn check_inputs(rp: f64, v_inf: f64, e_target: f64) -> Result<(), PlanError> {
    if !(rp > MOON_RADIUS) {
        return Err(PlanError::Domain(format!(
            "perilune radius {rp} km below the lunar surface"
        )));
    }
    if !(v_inf >= 0.0) {
        return Err(PlanError::Domain(format!("negative excess speed {v_inf}")));
    }
    if !(0.0..1.0).contains(&e_target) {
        return Err(PlanError::Domain(format!(
            "target eccentricity {e_target} outside [0, 1)"
        )));
    }
    Ok(())
}

/// Plan from explicit perilune geometry.
pub fn plan_capture(rp: f64, v_inf: f64, e_target: f64, mass: f64, sc: &Spacecraft) -> Result<CapturePlan, PlanError> {
    check_inputs(rp, v_inf, e_target)?;
    let dv = loi_dv(rp, v_inf, e_target);
    Ok(CapturePlan {
        rp,
        v_inf,
        e_target,
        dv,
        burn_duration: dv * 1e-3 / sc.acceleration(mass),
        perilune: None,
    })
}

/// Plan from the first lunar periapsis event logged in `approach`.
pub fn plan_capture_from_trajectory(
    approach: &Trajectory,
    e_target: f64,
    sc: &Spacecraft,
    eph: &dyn Ephemeris,
) -> Result<CapturePlan, PlanError> {
    let ev = approach
        .events_matching(|s| s.kind == EventKind::Periapsis && s.body == Body::Moon)
        .next()
        .ok_or(PlanError::NoPerilune)?;
    let (r, v) = ev.state.relative_to(Body::Moon, eph)?;
    let energy = c3(&r, &v, MU_MOON);
    if energy <= 0.0 {
        return Err(PlanError::AlreadyBound { c3: energy });
    }
    let mut plan = plan_capture(r.norm(), energy.sqrt(), e_target, ev.state.mass, sc)?;
    plan.perilune = Some(StateVector::new(ev.state.epoch, r, v, ev.state.mass, Body::Moon));
    Ok(plan)
}

impl CapturePlan {
    /// Moon-centered post-insertion state; requires a plan built from a trajectory.
    pub fn execute(&self, sc: &Spacecraft) -> Result<StateVector, PlanError> {
        let s = self
            .perilune
            .ok_or_else(|| PlanError::Domain("plan has no perilune state".into()))?;
        let dir = vnb_basis(&s.r, &s.v)?.to_inertial(&Vec3::new(-1.0, 0.0, 0.0));
        Ok(apply_impulse(&s, &(dir * self.dv * 1e-3), sc)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::{cart_to_kepler, Epoch};
    use crate::dynamics::ThrustCommand;
    use crate::ephemeris::AnalyticEphemeris;
    use crate::propagator::{EventRecord, EventSpec};

    #[test]
    fn vis_viva_example() {
        let v_hyp = (0.81f64 + 2.0 * 4902.8001 / 6000.0).sqrt();
        let v_ell = (1.7f64 * 4902.8001 / 6000.0).sqrt();
        let dv = loi_dv(6000.0, 0.9, 0.7);
        assert!((dv - (v_hyp - v_ell) * 1e3).abs() < 1e-9);
        assert!((dv - 384.8).abs() < 0.05);
    }

    #[test]
    fn parabolic_limit_and_difference() {
        let rp = 4000.0;
        let vc = (MU_MOON / rp).sqrt();
        for e in [0.0f64, 0.3, 0.9] {
            let want = (2f64.sqrt() - (1.0 + e).sqrt()) * vc * 1e3;
            assert!((loi_dv(rp, 0.0, e) - want).abs() < 1e-9);
        }
        assert!(loi_dv(rp, 0.0, 1.0).abs() < 1e-12);
        let diff = loi_dv(rp, 0.7, 0.0) - loi_dv(rp, 0.7, 0.8);
        assert!((diff - vc * (1.8f64.sqrt() - 1.0) * 1e3).abs() < 1e-9);
        assert!(diff > 0.0);
    }

    #[test]
    fn monotone_on_grids() {
        for rp in [2000.0, 3000.0, 6000.0, 20_000.0] {
            for i in 0..20 {
                let vi = 0.1 * i as f64;
                for j in 0..19 {
                    let e0 = 0.05 * j as f64;
                    assert!(loi_dv(rp, vi, e0 + 0.05) < loi_dv(rp, vi, e0));
                    assert!(loi_dv(rp, vi + 0.1, e0) > loi_dv(rp, vi, e0));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let sc = Spacecraft::default();
        assert!(plan_capture(1000.0, 0.5, 0.5, 12.0, &sc).is_err());
        assert!(plan_capture(3000.0, -0.5, 0.5, 12.0, &sc).is_err());
        assert!(plan_capture(3000.0, 0.5, 1.0, 12.0, &sc).is_err());
        let p = plan_capture(3000.0, 0.5, 0.5, 12.0, &sc).unwrap();
        assert!((p.burn_duration - p.dv * 1e-3 / 9.0e-8).abs() < 1e-6);
    }

    fn approach(rp: f64, v_inf: f64) -> Trajectory {
        let vp = (v_inf * v_inf + 2.0 * MU_MOON / rp).sqrt();
        let s = StateVector::new(
            Epoch::J2000,
            Vec3::new(rp, 0.0, 0.0),
            Vec3::new(0.0, 0.0, vp),
            12.0,
            Body::Moon,
        );
        let mut t = Trajectory::new(s, "coast", ThrustCommand::off());
        t.events.push(EventRecord {
            spec: EventSpec::periapsis(Body::Moon),
            index: 0,
            state: s,
            dv: 0.0,
            g: 0.0,
        });
        t
    }

    #[test]
    fn impulse_hits_target_eccentricity() {
        let sc = Spacecraft::default();
        let eph = AnalyticEphemeris::default();
        for e in [0.0, 0.2, 0.4, 0.6, 0.8] {
            let plan = plan_capture_from_trajectory(&approach(3050.0, 0.8), e, &sc, &eph).unwrap();
            assert!((plan.rp - 3050.0).abs() < 1e-9);
            assert!((plan.v_inf - 0.8).abs() < 1e-12);
            let after = plan.execute(&sc).unwrap();
            let el = cart_to_kepler(&after.r, &after.v, MU_MOON).unwrap();
            assert!((el.ecc - e).abs() < 1e-9, "{} vs {e}", el.ecc);
        }
    }

    #[test]
    fn bound_or_missing_approach_rejected() {
        let sc = Spacecraft::default();
        let eph = AnalyticEphemeris::default();
        let mut bound = approach(3050.0, 0.0);
        let s = &mut bound.events[0].state;
        s.v *= 0.9;
        assert!(matches!(
            plan_capture_from_trajectory(&bound, 0.5, &sc, &eph),
            Err(PlanError::AlreadyBound { .. })
        ));
        let mut none = approach(3050.0, 0.5);
        none.events.clear();
        assert_eq!(
            plan_capture_from_trajectory(&none, 0.5, &sc, &eph),
            Err(PlanError::NoPerilune)
        );
    }
}
