//! Spacecraft propulsion parameters, impulsive burns and finite burn arcs.

use crate::astro::{Epoch, StateVector, Vec3};
use crate::constants::G0;
use crate::dynamics::{DynamicsError, ForceConfig, ThrustCommand, ThrustFrame};
use crate::propagator::{propagate, propagate_to_event, EventSpec, PropagationError, Tolerances, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManeuverError {
    #[error("propellant depleted: need {needed:.6} kg, {available:.6} kg available")]
    PropellantDepleted { needed: f64, available: f64 },
    #[error("{0} not reached before the safety horizon")]
    NotFound(String),
    #[error("invalid burn arc: {0}")]
    InvalidArc(String),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Aggregated electric propulsion system and mass budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacecraft {
    pub dry_mass: f64,
    pub prop_mass: f64,
    /// Combined nominal thrust of all heads, mN.
    pub thrust_mn: f64,
    pub isp_s: f64,
    /// Thrust scale factor.
    pub efficiency: f64,
}

impl Default for Spacecraft {
    fn default() -> Self {
        Self {
            dry_mass: 9.0,
            prop_mass: 3.0,
            thrust_mn: 1.2,
            isp_s: 1000.0,
            efficiency: 0.9,
        }
    }
}

impl Spacecraft {
    pub fn wet_mass(&self) -> f64 {
        self.dry_mass + self.prop_mass
    }

    pub fn effective_thrust_mn(&self) -> f64 {
        self.thrust_mn * self.efficiency
    }

    /// Exhaust velocity g0·Isp, m/s.
    pub fn exhaust_velocity(&self) -> f64 {
        G0 * self.isp_s
    }

    /// Rocket-equation ΔV from wet to dry mass, m/s.
    pub fn dv_capability(&self) -> f64 {
        self.exhaust_velocity() * (self.wet_mass() / self.dry_mass).ln()
    }

    /// Thrust acceleration at mass `m`, km/s².
    pub fn acceleration(&self, mass: f64) -> f64 {
        self.effective_thrust_mn() * 1e-6 / mass
    }

    pub fn command(&self, frame: ThrustFrame, direction: Vec3) -> Result<ThrustCommand, DynamicsError> {
        ThrustCommand::new(
            frame,
            direction,
            self.thrust_mn,
            self.isp_s,
            self.efficiency,
            self.dry_mass,
        )
    }

    pub fn retrograde(&self, frame: ThrustFrame) -> ThrustCommand {
        self.command(frame, Vec3::new(-1.0, 0.0, 0.0))
            .expect("retrograde unit vector is valid")
    }
}

/// Instantaneous velocity change with rocket-equation mass loss.
pub fn apply_impulse(state: &StateVector, dv: &Vec3, sc: &Spacecraft) -> Result<StateVector, ManeuverError> {
    if !dv.iter().all(|c| c.is_finite()) {
        return Err(ManeuverError::InvalidArc("non-finite impulse".into()));
    }
    let dv_ms = dv.norm() * 1e3;
    let mass = state.mass * (-dv_ms / sc.exhaust_velocity()).exp();
    if mass < sc.dry_mass {
        return Err(ManeuverError::PropellantDepleted {
            needed: state.mass - mass,
            available: state.mass - sc.dry_mass,
        });
    }
    Ok(StateVector {
        v: state.v + dv,
        mass,
        ..*state
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartTrigger {
    Immediately,
    At(Epoch),
    Event(EventSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopTrigger {
    At(Epoch),
    /// Seconds after the arc starts.
    Duration(f64),
    Event(EventSpec),
}

/// A finite burn with a direction fixed in a VNB frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurnArc {
    pub frame: ThrustFrame,
    /// Unit vector in VNB components.
    pub direction: Vec3,
    pub start: StartTrigger,
    pub stop: StopTrigger,
}

impl BurnArc {
    /// Normalizes `direction`; a zero vector is rejected.
    pub fn new(
        frame: ThrustFrame,
        direction: Vec3,
        start: StartTrigger,
        stop: StopTrigger,
    ) -> Result<Self, ManeuverError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(ManeuverError::InvalidArc("zero or non-finite direction".into()));
        }
        if let StopTrigger::Duration(d) = stop {
            if !(d >= 0.0) {
                return Err(ManeuverError::InvalidArc(format!("negative duration {d}")));
            }
        }
        if let (StartTrigger::At(a), StopTrigger::At(b)) = (start, stop) {
            if b < a {
                return Err(ManeuverError::InvalidArc("stop precedes start".into()));
            }
        }
        Ok(Self {
            frame,
            direction: direction / n,
            start,
            stop,
        })
    }
}

/// Flies `arc` from `state`: coasts to the start trigger, then thrusts to the stop trigger.
///
/// `horizon` bounds the search for event triggers, s.
pub fn execute_burn_arc(
    state: &StateVector,
    arc: &BurnArc,
    sc: &Spacecraft,
    cfg: &ForceConfig,
    tol: &Tolerances,
    horizon: f64,
) -> Result<Trajectory, ManeuverError> {
    let coast = ThrustCommand::off();
    let mut traj = Trajectory::new(*state, "coast", coast);
    let limit = state.epoch + horizon;

    match arc.start {
        StartTrigger::Immediately => {}
        StartTrigger::At(t) => {
            if t > state.epoch {
                traj = propagate(state, &coast, cfg, t, tol)?;
            }
        }
        StartTrigger::Event(spec) => {
            let out = propagate_to_event(state, &coast, cfg, &[spec.terminal(true)], limit, tol)?;
            if out.hit.is_none() {
                return Err(ManeuverError::NotFound(format!("start trigger {spec}")));
            }
            traj = out.trajectory;
        }
    }

    let start = traj.final_state();
    let cmd = sc.command(arc.frame, arc.direction)?;
    let burn = match arc.stop {
        StopTrigger::At(t) => propagate(&start, &cmd, cfg, t.max(start.epoch), tol)?,
        StopTrigger::Duration(d) => propagate(&start, &cmd, cfg, start.epoch + d, tol)?,
        StopTrigger::Event(spec) => {
            let out = propagate_to_event(&start, &cmd, cfg, &[spec.terminal(true)], limit, tol)?;
            if out.hit.is_none() {
                return Err(ManeuverError::NotFound(format!("stop trigger {spec}")));
            }
            out.trajectory
        }
    };
    traj.append(burn.with_label("burn"));
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::{cart_to_kepler, Body};
    use crate::constants::MU_EARTH;

    fn circular() -> StateVector {
        let a = 42_000.0;
        StateVector::new(
            Epoch::J2000,
            Vec3::new(a, 0.0, 0.0),
            Vec3::new(0.0, (MU_EARTH / a).sqrt(), 0.0),
            12.0,
            Body::Earth,
        )
    }

    #[test]
    fn spacecraft_budget() {
        let sc = Spacecraft::default();
        assert_eq!(sc.wet_mass(), 12.0);
        assert!((sc.effective_thrust_mn() - 1.08).abs() < 1e-15);
        assert!((sc.dv_capability() - 2821.2).abs() < 0.1);
        assert!((sc.acceleration(12.0) - 9.0e-8).abs() < 1e-22);
    }

    #[test]
    fn impulse_mass_and_velocity() {
        let sc = Spacecraft::default();
        let s = circular();
        assert_eq!(apply_impulse(&s, &Vec3::zeros(), &sc).unwrap(), s);
        let dv = Vec3::new(0.0, -0.710, 0.0);
        let after = apply_impulse(&s, &dv, &sc).unwrap();
        let drop = s.mass - after.mass;
        assert!((drop - 12.0 * (1.0 - (-710.0 / 9_806.65f64).exp())).abs() < 1e-12);
        assert!((drop - 0.8378).abs() < 5e-4);
        assert_eq!(after.r, s.r);

        let d1 = Vec3::new(0.1, 0.0, 0.0);
        let d2 = Vec3::new(0.0, 0.2, 0.0);
        let two = apply_impulse(&apply_impulse(&s, &d1, &sc).unwrap(), &d2, &sc).unwrap();
        let one = apply_impulse(&s, &(d1 + d2), &sc).unwrap();
        assert!((two.v - one.v).norm() < 1e-15);
        assert!(two.mass < one.mass);

        assert!(matches!(
            apply_impulse(&s, &Vec3::new(3.0, 0.0, 0.0), &sc),
            Err(ManeuverError::PropellantDepleted { .. })
        ));
    }

    #[test]
    fn zero_direction_rejected() {
        assert!(BurnArc::new(
            ThrustFrame::EarthVnb,
            Vec3::zeros(),
            StartTrigger::Immediately,
            StopTrigger::Duration(1.0)
        )
        .is_err());
        let arc = BurnArc::new(
            ThrustFrame::EarthVnb,
            Vec3::new(-2.0, 0.0, 0.0),
            StartTrigger::Immediately,
            StopTrigger::Duration(1.0),
        )
        .unwrap();
        assert_eq!(arc.direction, Vec3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn retrograde_arc_lowers_sma() {
        let sc = Spacecraft::default();
        let cfg = ForceConfig::two_body();
        let s = circular();
        let arc = BurnArc::new(
            ThrustFrame::EarthVnb,
            Vec3::new(-1.0, 0.0, 0.0),
            StartTrigger::Immediately,
            StopTrigger::Duration(86_400.0),
        )
        .unwrap();
        let traj = execute_burn_arc(&s, &arc, &sc, &cfg, &Tolerances::default(), 1e7).unwrap();
        let mut prev = f64::INFINITY;
        for smp in &traj.samples[1..] {
            let a = cart_to_kepler(&smp.state.r, &smp.state.v, MU_EARTH).unwrap().sma;
            assert!(a < prev);
            prev = a;
        }
        // Ledger consistency.
        let used = traj.propellant_used();
        let m1 = traj.final_state().mass;
        assert!((traj.dv_total() - sc.exhaust_velocity() * (12.0 / m1).ln()).abs() < 1e-8);
        assert!((used - 1.08e-3 / sc.exhaust_velocity() * 86_400.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_arc_is_identity() {
        let sc = Spacecraft::default();
        let s = circular();
        let arc = BurnArc::new(
            ThrustFrame::EarthVnb,
            Vec3::new(-1.0, 0.0, 0.0),
            StartTrigger::Immediately,
            StopTrigger::Duration(0.0),
        )
        .unwrap();
        let traj = execute_burn_arc(&s, &arc, &sc, &ForceConfig::two_body(), &Tolerances::default(), 1e6).unwrap();
        assert_eq!(traj.final_state(), s);
        assert_eq!(traj.dv_total(), 0.0);
    }

    #[test]
    fn event_start_trigger() {
        let sc = Spacecraft::default();
        let s = StateVector {
            v: circular().v * 1.1,
            ..circular()
        };
        let arc = BurnArc::new(
            ThrustFrame::EarthVnb,
            Vec3::new(-1.0, 0.0, 0.0),
            StartTrigger::Event(EventSpec::apoapsis(Body::Earth)),
            StopTrigger::Duration(3_600.0),
        )
        .unwrap();
        let traj = execute_burn_arc(&s, &arc, &sc, &ForceConfig::two_body(), &Tolerances::default(), 1e7).unwrap();
        assert_eq!(traj.segments.len(), 2);
        assert!(traj.dv_total() > 0.0);
        let unreachable = BurnArc {
            start: StartTrigger::Event(EventSpec::radius_cross(
                Body::Earth,
                1e7,
                crate::propagator::Direction::Rising,
            )),
            ..arc
        };
        assert!(matches!(
            execute_burn_arc(
                &s,
                &unreachable,
                &sc,
                &ForceConfig::two_body(),
                &Tolerances::default(),
                1e5
            ),
            Err(ManeuverError::NotFound(_))
        ));
    }
}
