//! Force model: central body, third bodies, lunar harmonics, thrust and mass flow.

mod gravity;

use std::sync::Arc;

use crate::astro::{vnb_basis, AstroError, Body, Epoch, StateVector, Vec3};
use crate::constants::{G0, MAX_TOTAL_THRUST_MN};
use crate::ephemeris::{Ephemeris, EphemerisError, EphemerisSource};

pub use gravity::{accel_harmonics, harmonics_perturbation, lunar_orientation, GravityField, BUNDLED_LUNAR_FIELD};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("singular geometry: {0}")]
    Singularity(&'static str),
    #[error("radius {radius:.3} km is inside the reference sphere ({ref_radius} km)")]
    BelowSurface { radius: f64, ref_radius: f64 },
    #[error("effective thrust {effective_mn} mN exceeds the {limit_mn} mN bound")]
    ThrustBound { effective_mn: f64, limit_mn: f64 },
    #[error("propellant depleted: mass {mass} kg at or below dry mass {dry_mass} kg")]
    PropellantDepleted { mass: f64, dry_mass: f64 },
    #[error("invalid thrust command: {0}")]
    InvalidCommand(String),
    #[error("gravity field: {0}")]
    Field(String),
    #[error(transparent)]
    Ephemeris(#[from] EphemerisError),
    #[error(transparent)]
    Astro(#[from] AstroError),
}

/// Two-body acceleration −μ r / |r|³.
pub fn accel_point_mass(r_rel: &Vec3, mu: f64) -> Result<Vec3, DynamicsError> {
    let r2 = r_rel.norm_squared();
    if !(r2 > 0.0) {
        return Err(DynamicsError::Singularity("point-mass acceleration at zero radius"));
    }
    Ok(-mu * r_rel / (r2 * r2.sqrt()))
}

/// Direct plus indirect perturbation of body `b` on a spacecraft at `r`, both relative to the
/// central body: −μ_b ((r − r_b)/|r − r_b|³ + r_b/|r_b|³).
pub fn accel_third_body(r: &Vec3, r_b: &Vec3, mu_b: f64) -> Result<Vec3, DynamicsError> {
    let d = r - r_b;
    let d2 = d.norm_squared();
    let b2 = r_b.norm_squared();
    if !(d2 > 0.0) {
        return Err(DynamicsError::Singularity("spacecraft at perturbing body centre"));
    }
    if !(b2 > 0.0) {
        return Err(DynamicsError::Singularity("perturbing body at the central body"));
    }
    Ok(-mu_b * (d / (d2 * d2.sqrt()) + r_b / (b2 * b2.sqrt())))
}

/// Reference frame in which a thrust direction is held constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThrustFrame {
    EarthVnb,
    MoonVnb,
}

impl ThrustFrame {
    pub fn body(self) -> Body {
        match self {
            ThrustFrame::EarthVnb => Body::Earth,
            ThrustFrame::MoonVnb => Body::Moon,
        }
    }
}

impl std::fmt::Display for ThrustFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThrustFrame::EarthVnb => "EarthVNB",
            ThrustFrame::MoonVnb => "MoonVNB",
        })
    }
}

/// Aggregate thruster state for one arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustCommand {
    pub on: bool,
    pub frame: ThrustFrame,
    /// Unit vector in VNB components.
    pub direction: Vec3,
    /// Nominal combined thrust, mN.
    pub magnitude_mn: f64,
    pub isp_s: f64,
    /// Scale applied to the nominal thrust, (0, 1].
    pub efficiency: f64,
    /// Mass below which the thruster cannot fire, kg.
    pub dry_mass: f64,
}

impl ThrustCommand {
    pub fn off() -> Self {
        Self {
            on: false,
            frame: ThrustFrame::EarthVnb,
            direction: Vec3::new(-1.0, 0.0, 0.0),
            magnitude_mn: 0.0,
            isp_s: 1.0,
            efficiency: 1.0,
            dry_mass: 0.0,
        }
    }

    /// Active command; `direction` is normalized here and must be non-zero.
    pub fn new(
        frame: ThrustFrame,
        direction: Vec3,
        magnitude_mn: f64,
        isp_s: f64,
        efficiency: f64,
        dry_mass: f64,
    ) -> Result<Self, DynamicsError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(DynamicsError::InvalidCommand(
                "thrust direction must be a finite non-zero vector".into(),
            ));
        }
        if !(magnitude_mn >= 0.0) || !(isp_s > 0.0) || !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(DynamicsError::InvalidCommand(format!(
                "thrust {magnitude_mn} mN, Isp {isp_s} s, efficiency {efficiency}"
            )));
        }
        Ok(Self {
            on: true,
            frame,
            direction: direction / n,
            magnitude_mn,
            isp_s,
            efficiency,
            dry_mass,
        })
    }

    /// Effective thrust, N.
    pub fn effective_thrust_n(&self) -> f64 {
        if self.on {
            self.magnitude_mn * self.efficiency * 1e-3
        } else {
            0.0
        }
    }
}

/// Propellant flow, kg/s (non-positive).
pub fn mass_rate(cmd: &ThrustCommand) -> f64 {
    if !cmd.on {
        return 0.0;
    }
    -cmd.effective_thrust_n() / (G0 * cmd.isp_s)
}

/// Which gravitating bodies act on the spacecraft. The central body always does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BodySet {
    pub earth: bool,
    pub moon: bool,
    pub sun: bool,
    pub jupiter: bool,
}

impl BodySet {
    pub const ALL: BodySet = BodySet {
        earth: true,
        moon: true,
        sun: true,
        jupiter: true,
    };
    pub const NONE: BodySet = BodySet {
        earth: false,
        moon: false,
        sun: false,
        jupiter: false,
    };

    pub fn contains(&self, body: Body) -> bool {
        match body {
            Body::Earth => self.earth,
            Body::Moon => self.moon,
            Body::Sun => self.sun,
            Body::Jupiter => self.jupiter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceConfig {
    pub ephemeris: Arc<EphemerisSource>,
    pub bodies: BodySet,
    /// Lunar harmonics; `None` keeps the Moon a point mass.
    pub field: Option<Arc<GravityField>>,
    /// Moon distance inside which the harmonics act, km.
    pub harmonics_radius: f64,
    /// Fraction of `harmonics_radius` where the harmonic taper begins.
    pub harmonics_taper_start: f64,
    /// Moon distance at which propagation switches to Moon-centred variables, km.
    pub center_switch_radius: f64,
    /// Bound on the commanded effective thrust, mN.
    pub thrust_limit_mn: f64,
}

impl Default for ForceConfig {
    fn default() -> Self {
        Self {
            ephemeris: Arc::new(EphemerisSource::analytic()),
            bodies: BodySet::ALL,
            field: Some(Arc::new(GravityField::lunar_default())),
            harmonics_radius: 50_000.0,
            harmonics_taper_start: 0.8,
            center_switch_radius: 60_000.0,
            thrust_limit_mn: MAX_TOTAL_THRUST_MN,
        }
    }
}

impl ForceConfig {
    /// Central point mass only.
    pub fn two_body() -> Self {
        Self {
            bodies: BodySet::NONE,
            field: None,
            ..Self::default()
        }
    }

    /// Copy whose ephemeris is the current source sampled into a table over `[start, end]`.
    ///
    /// Interpolation is far cheaper than the analytic series and stays within a few metres of it
    /// at hourly steps.
    pub fn with_cached_ephemeris(&self, start: Epoch, end: Epoch, step: f64) -> Result<Self, EphemerisError> {
        let bodies: Vec<Body> = [Body::Moon, Body::Sun, Body::Jupiter]
            .into_iter()
            .filter(|&b| b == Body::Moon || self.bodies.contains(b))
            .collect();
        let table = crate::ephemeris::EphemerisTable::sample(self.ephemeris.as_ref(), &bodies, start, end, step)?;
        Ok(Self {
            ephemeris: Arc::new(EphemerisSource::Table(table)),
            ..self.clone()
        })
    }

    /// Weight applied to the non-spherical lunar terms at Moon distance `d`.
    pub fn harmonics_weight(&self, d: f64) -> f64 {
        let outer = self.harmonics_radius;
        let inner = self.harmonics_taper_start * outer;
        if d <= inner {
            1.0
        } else if d >= outer {
            0.0
        } else {
            let x = (d - inner) / (outer - inner);
            1.0 - x * x * (3.0 - 2.0 * x)
        }
    }
}

/// Time derivative of the propagated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub v: Vec3,
    /// km/s².
    pub a: Vec3,
    /// kg/s.
    pub mdot: f64,
    /// Thrust acceleration magnitude, m/s² (rate of the ΔV ledger).
    pub dv_rate: f64,
}

/// Equations of motion for a state expressed about `center` at `epoch`.
pub fn acceleration(
    epoch: Epoch,
    center: Body,
    r: &Vec3,
    v: &Vec3,
    mass: f64,
    cmd: &ThrustCommand,
    cfg: &ForceConfig,
) -> Result<Derivative, DynamicsError> {
    let eph = cfg.ephemeris.as_ref();
    let r_center = eph.body_position(center, epoch)?;
    let mut a = accel_point_mass(r, center.mu())?;

    for body in [Body::Earth, Body::Moon, Body::Sun, Body::Jupiter] {
        if body == center || !cfg.bodies.contains(body) {
            continue;
        }
        let r_b = eph.body_position(body, epoch)? - r_center;
        a += accel_third_body(r, &r_b, body.mu())?;
    }

    let moon_active = center == Body::Moon || cfg.bodies.moon;
    if let (Some(field), true) = (cfg.field.as_deref(), moon_active) {
        let r_moon = if center == Body::Moon {
            *r
        } else {
            r - (eph.body_position(Body::Moon, epoch)? - r_center)
        };
        let d = r_moon.norm();
        let w = cfg.harmonics_weight(d);
        if w > 0.0 && d > field.ref_radius {
            a += w * harmonics_perturbation(&r_moon, field, epoch);
        }
    }

    let mut mdot = 0.0;
    let mut dv_rate = 0.0;
    if cmd.on {
        let effective_mn = cmd.magnitude_mn * cmd.efficiency;
        if effective_mn > cfg.thrust_limit_mn * (1.0 + 1e-12) || effective_mn < 0.0 {
            return Err(DynamicsError::ThrustBound {
                effective_mn,
                limit_mn: cfg.thrust_limit_mn,
            });
        }
        if mass <= cmd.dry_mass {
            return Err(DynamicsError::PropellantDepleted {
                mass,
                dry_mass: cmd.dry_mass,
            });
        }
        let frame_body = cmd.frame.body();
        let (r_f, v_f) = if frame_body == center {
            (*r, *v)
        } else {
            let (rb, vb) = eph.body_state(frame_body, epoch)?;
            let (rc, vc) = eph.body_state(center, epoch)?;
            (r + rc - rb, v + vc - vb)
        };
        let basis = vnb_basis(&r_f, &v_f)?;
        let acc_ms2 = cmd.effective_thrust_n() / mass;
        a += basis.to_inertial(&cmd.direction) * (acc_ms2 * 1e-3);
        mdot = mass_rate(cmd);
        dv_rate = acc_ms2;
    }

    Ok(Derivative {
        v: *v,
        a,
        mdot,
        dv_rate,
    })
}

/// Equations of motion evaluated at a full state.
pub fn eom(state: &StateVector, cmd: &ThrustCommand, cfg: &ForceConfig) -> Result<Derivative, DynamicsError> {
    acceleration(state.epoch, state.center, &state.r, &state.v, state.mass, cmd, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::astro::recenter;
    use crate::constants::{MU_EARTH, MU_MOON};

    fn separation_state() -> StateVector {
        StateVector::new(
            Epoch::from_calendar("2017-12-15T15:00:00").unwrap(),
            Vec3::new(-15015.4, -23569.0, 2241.505),
            Vec3::new(-0.48554, -5.04876, -0.87999),
            12.0,
            Body::Earth,
        )
    }

    fn nominal(frame: ThrustFrame) -> ThrustCommand {
        ThrustCommand::new(frame, Vec3::new(-1.0, 0.0, 0.0), 1.2, 1000.0, 0.9, 9.0).unwrap()
    }

    #[test]
    fn point_mass_values() {
        let a = accel_point_mass(&Vec3::new(7000.0, 0.0, 0.0), MU_EARTH).unwrap();
        assert!((a.x + 8.1347e-3).abs() < 1e-7);
        assert_eq!(a.y, 0.0);
        let r = Vec3::new(3000.0, -4000.0, 1200.0);
        let a1 = accel_point_mass(&r, MU_EARTH).unwrap();
        let a2 = accel_point_mass(&(2.0 * r), MU_EARTH).unwrap();
        assert!((a1.norm() / a2.norm() - 4.0).abs() < 1e-14);
        assert_eq!(accel_point_mass(&-r, MU_EARTH).unwrap(), -a1);
        assert!(accel_point_mass(&Vec3::zeros(), MU_EARTH).is_err());
    }

    #[test]
    fn third_body_tidal_limit() {
        let rb = Vec3::new(384_400.0, 1000.0, -200.0);
        assert_eq!(accel_third_body(&Vec3::zeros(), &rb, MU_MOON).unwrap(), Vec3::zeros());
        // Linear in |r| near the centre.
        let dir = Vec3::new(0.3, 0.5, -0.2).normalize();
        let a1 = accel_third_body(&(dir * 10.0), &rb, MU_MOON).unwrap().norm();
        let a2 = accel_third_body(&(dir * 20.0), &rb, MU_MOON).unwrap().norm();
        assert!((a2 / a1 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn third_body_on_earth_moon_line() {
        let r = Vec3::new(1e5, 0.0, 0.0);
        let rb = Vec3::new(3.844e5, 0.0, 0.0);
        let a = accel_third_body(&r, &rb, MU_MOON).unwrap();
        let d = 1e5 - 3.844e5;
        let direct = -MU_MOON * d / d.abs().powi(3);
        let indirect = -MU_MOON / 3.844e5f64.powi(2);
        assert!((a.x - (direct + indirect)).abs() < 1e-18);
        assert!(a.x > 0.0);
    }

    #[test]
    fn third_body_mirror_symmetry() {
        let rb = Vec3::new(3.844e5, 0.0, 0.0);
        let r = Vec3::new(2e4, 3e4, -1e4);
        let m = Vec3::new(2e4, -3e4, 1e4);
        let a = accel_third_body(&r, &rb, MU_MOON).unwrap();
        let b = accel_third_body(&m, &rb, MU_MOON).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, -b.y);
        assert_eq!(a.z, -b.z);
    }

    #[test]
    fn mass_rate_formula() {
        let cmd = nominal(ThrustFrame::EarthVnb);
        assert!((mass_rate(&cmd) + 1.1013e-7).abs() < 1e-11);
        assert_eq!(mass_rate(&ThrustCommand::off()), 0.0);
        let half = ThrustCommand { isp_s: 500.0, ..cmd };
        assert!((mass_rate(&half) / mass_rate(&cmd) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn effective_thrust_acceleration_at_wet_mass() {
        let cfg = ForceConfig::two_body();
        let s = separation_state();
        let off = eom(&s, &ThrustCommand::off(), &cfg).unwrap();
        let on = eom(&s, &nominal(ThrustFrame::EarthVnb), &cfg).unwrap();
        assert!(((on.a - off.a).norm() - 9.0e-8).abs() < 1e-20);
        assert!((on.dv_rate - 9.0e-5).abs() < 1e-18);
    }

    #[test]
    fn reduction_to_two_body() {
        let cfg = ForceConfig::two_body();
        let s = separation_state();
        let d = eom(&s, &ThrustCommand::off(), &cfg).unwrap();
        assert_eq!(d.a, accel_point_mass(&s.r, MU_EARTH).unwrap());
        assert_eq!(d.v, s.v);
        assert_eq!(d.mdot, 0.0);
    }

    #[test]
    fn full_model_near_earth_is_perturbative() {
        let cfg = ForceConfig::default();
        let s = separation_state();
        let d = eom(&s, &ThrustCommand::off(), &cfg).unwrap();
        let kepler = MU_EARTH / s.r.norm_squared();
        assert!((d.a.norm() / kepler - 1.0).abs() < 0.05);
    }

    #[test]
    fn retrograde_moon_vnb_decelerates_at_perilune() {
        let cfg = ForceConfig::default();
        let epoch = separation_state().epoch;
        let rp = 3_000.0;
        let vp = (2.0 * MU_MOON / rp).sqrt() * 1.05;
        let sm = StateVector::new(
            epoch,
            Vec3::new(rp, 0.0, 0.0),
            Vec3::new(0.0, vp, 0.0),
            11.0,
            Body::Moon,
        );
        let cmd = nominal(ThrustFrame::MoonVnb);
        let off = eom(&sm, &ThrustCommand::off(), &cfg).unwrap();
        let on = eom(&sm, &cmd, &cfg).unwrap();
        assert!((on.a - off.a).dot(&sm.v) < 0.0);

        // Same physical state expressed about the Earth gives the same thrust direction.
        let se = recenter(&sm, Body::Earth, cfg.ephemeris.as_ref()).unwrap();
        let off_e = eom(&se, &ThrustCommand::off(), &cfg).unwrap();
        let on_e = eom(&se, &cmd, &cfg).unwrap();
        let t_m = on.a - off.a;
        let t_e = on_e.a - off_e.a;
        assert!((t_m - t_e).norm() < 1e-9 * t_m.norm());
    }

    #[test]
    fn thrust_bound_and_depletion() {
        let cfg = ForceConfig::two_body();
        let s = separation_state();
        let big = ThrustCommand::new(ThrustFrame::EarthVnb, Vec3::x(), 2.4, 1000.0, 0.9, 9.0).unwrap();
        assert!(matches!(eom(&s, &big, &cfg), Err(DynamicsError::ThrustBound { .. })));
        let dry = StateVector { mass: 9.0, ..s };
        assert!(matches!(
            eom(&dry, &nominal(ThrustFrame::EarthVnb), &cfg),
            Err(DynamicsError::PropellantDepleted { .. })
        ));
        assert!(ThrustCommand::new(ThrustFrame::EarthVnb, Vec3::zeros(), 1.2, 1000.0, 0.9, 9.0).is_err());
    }

    #[test]
    fn in_plane_thrust_stays_in_plane() {
        let cfg = ForceConfig::two_body();
        let s = StateVector::new(
            Epoch::J2000,
            Vec3::new(7000.0, 0.0, 0.0),
            Vec3::new(0.0, 7.0, 0.5).normalize() * 7.5,
            12.0,
            Body::Earth,
        );
        let h = s.r.cross(&s.v).normalize();
        for dir in [
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.3, 0.0, 0.8),
            Vec3::new(0.0, 0.0, 1.0),
        ] {
            let cmd = ThrustCommand::new(ThrustFrame::EarthVnb, dir, 1.2, 1000.0, 0.9, 9.0).unwrap();
            let t = eom(&s, &cmd, &cfg).unwrap().a - eom(&s, &ThrustCommand::off(), &cfg).unwrap().a;
            assert!(t.dot(&h).abs() < 1e-12 * t.norm());
        }
    }

    #[test]
    fn harmonics_taper_continuity() {
        let cfg = ForceConfig::default();
        let field = cfg.field.clone().unwrap();
        let epoch = separation_state().epoch;
        let dir = Vec3::new(0.2, 0.9, 0.4).normalize();
        let contribution = |d: f64| cfg.harmonics_weight(d) * harmonics_perturbation(&(dir * d), &field, epoch);
        let r = cfg.harmonics_radius;
        let inside = contribution(r * (1.0 - 1e-9));
        let outside = contribution(r * (1.0 + 1e-9));
        assert_eq!(outside, Vec3::zeros());
        assert!(inside.norm() < 1e-13);
        // Raw field at the boundary exceeds the step threshold, which is why the taper exists.
        assert!(harmonics_perturbation(&(dir * r), &field, epoch).norm() > 1e-13);
        assert_eq!(cfg.harmonics_weight(0.5 * r), 1.0);
    }

    #[test]
    fn deterministic() {
        let cfg = ForceConfig::default();
        let s = separation_state();
        let cmd = nominal(ThrustFrame::MoonVnb);
        assert_eq!(eom(&s, &cmd, &cfg).unwrap(), eom(&s, &cmd, &cfg).unwrap());
    }
}
