//! Reference frames, time, states, osculating elements and the scalar geometry used
//! throughout the crate.
//!
//! Every state is expressed in an inertial frame whose axes are those of the Earth-centred
//! J2000 equator and equinox. A Moon-centred state uses the same axes translated to the Moon.

mod kepler;
mod time;
mod vnb;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::constants::{EARTH_RADIUS, MOON_RADIUS, MU_EARTH, MU_JUPITER, MU_MOON, MU_SUN};
use crate::ephemeris::{Ephemeris, EphemerisError};

pub use kepler::{cart_to_kepler, kepler_to_cart, KeplerianElements};
pub use time::Epoch;
pub use vnb::{vnb_basis, VnbBasis};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AstroError {
    #[error("singular geometry: {0}")]
    SingularGeometry(&'static str),
    #[error("invalid orbital elements: {0}")]
    InvalidElements(String),
    #[error("true anomaly {ta_deg} deg is beyond the hyperbolic asymptote ({limit_deg} deg)")]
    BeyondAsymptote { ta_deg: f64, limit_deg: f64 },
    #[error("cannot parse calendar date {0:?}")]
    BadCalendar(String),
    #[error("unknown body {0:?}")]
    UnknownBody(String),
}

/// Gravitating bodies known to the force model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Body {
    Earth,
    Moon,
    Sun,
    Jupiter,
}

impl Body {
    pub const ALL: [Body; 4] = [Body::Earth, Body::Moon, Body::Sun, Body::Jupiter];

    pub fn mu(self) -> f64 {
        match self {
            Body::Earth => MU_EARTH,
            Body::Moon => MU_MOON,
            Body::Sun => MU_SUN,
            Body::Jupiter => MU_JUPITER,
        }
    }

    /// Reference radius for altitude and impact checks, km.
    pub fn radius(self) -> f64 {
        match self {
            Body::Earth => EARTH_RADIUS,
            Body::Moon => MOON_RADIUS,
            Body::Sun => 695_700.0,
            Body::Jupiter => 71_492.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Body::Earth => "Earth",
            Body::Moon => "Moon",
            Body::Sun => "Sun",
            Body::Jupiter => "Jupiter",
        }
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Body {
    type Err = AstroError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "earth" => Ok(Body::Earth),
            "moon" => Ok(Body::Moon),
            "sun" => Ok(Body::Sun),
            "jupiter" => Ok(Body::Jupiter),
            _ => Err(AstroError::UnknownBody(s.to_string())),
        }
    }
}

/// Cartesian spacecraft state in the J2000-aligned inertial frame centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub epoch: Epoch,
    /// Position, km.
    pub r: Vec3,
    /// Velocity, km/s.
    pub v: Vec3,
    /// Mass, kg.
    pub mass: f64,
    pub center: Body,
}

impl StateVector {
    pub fn new(epoch: Epoch, r: Vec3, v: Vec3, mass: f64, center: Body) -> Self {
        Self {
            epoch,
            r,
            v,
            mass,
            center,
        }
    }

    /// Characteristic energy with respect to the state's own centre.
    pub fn c3(&self) -> f64 {
        c3(&self.r, &self.v, self.center.mu())
    }

    pub fn elements(&self) -> Result<KeplerianElements, AstroError> {
        cart_to_kepler(&self.r, &self.v, self.center.mu())
    }

    /// Position and velocity of the spacecraft relative to `body`.
    pub fn relative_to(&self, body: Body, eph: &dyn Ephemeris) -> Result<(Vec3, Vec3), EphemerisError> {
        if body == self.center {
            return Ok((self.r, self.v));
        }
        let s = recenter(self, body, eph)?;
        Ok((s.r, s.v))
    }
}

/// Characteristic energy v² − 2μ/|r|, km²/s².
pub fn c3(r: &Vec3, v: &Vec3, mu: f64) -> f64 {
    v.norm_squared() - 2.0 * mu / r.norm()
}

/// Shifts a state to a new centre body, keeping the J2000 axes.
pub fn recenter(state: &StateVector, new_center: Body, eph: &dyn Ephemeris) -> Result<StateVector, EphemerisError> {
    if state.center == new_center {
        return Ok(*state);
    }
    let (r_old, v_old) = eph.body_state(state.center, state.epoch)?;
    let (r_new, v_new) = eph.body_state(new_center, state.epoch)?;
    Ok(StateVector {
        r: state.r + r_old - r_new,
        v: state.v + v_old - v_new,
        center: new_center,
        ..*state
    })
}

/// Wraps an angle in degrees into [0, 360).
pub fn wrap_deg(angle: f64) -> f64 {
    let w = angle.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::EphemerisSource;

    #[test]
    fn c3_circular_and_parabolic() {
        let r = Vec3::new(7000.0, 0.0, 0.0);
        let vc = (MU_EARTH / 7000.0).sqrt();
        let c = c3(&r, &Vec3::new(0.0, vc, 0.0), MU_EARTH);
        assert!((c + MU_EARTH / 7000.0).abs() < 1e-12);
        let vp = (2.0 * MU_EARTH / 7000.0).sqrt();
        assert!(c3(&r, &Vec3::new(0.0, vp, 0.0), MU_EARTH).abs() < 1e-12);
    }

    #[test]
    fn c3_of_separation_state() {
        let r = Vec3::new(-15015.4, -23569.0, 2241.505);
        let v = Vec3::new(-0.48554, -5.04876, -0.87999);
        // −μ/SMA with the tabulated SMA of 205954.8 km
        let expected = -MU_EARTH / 205_954.8;
        assert!((c3(&r, &v, MU_EARTH) - expected).abs() < 1e-4);
        assert!((expected + 1.9354).abs() < 1e-4);
    }

    #[test]
    fn recenter_round_trip_and_zero_offset() {
        let eph = EphemerisSource::analytic();
        let epoch = Epoch::from_calendar("2017-12-15T15:00:00").unwrap();
        let s = StateVector::new(
            epoch,
            Vec3::new(-15015.4, -23569.0, 2241.505),
            Vec3::new(-0.48554, -5.04876, -0.87999),
            12.0,
            Body::Earth,
        );
        let m = recenter(&s, Body::Moon, &eph).unwrap();
        let back = recenter(&m, Body::Earth, &eph).unwrap();
        assert!((back.r - s.r).norm() < 1e-9);
        assert!((back.v - s.v).norm() < 1e-12);

        let at_moon = StateVector::new(epoch, Vec3::zeros(), Vec3::zeros(), 1.0, Body::Moon);
        let e = recenter(&at_moon, Body::Earth, &eph).unwrap();
        let rm = eph.body_position(Body::Moon, epoch).unwrap();
        assert_eq!(e.r, rm);
    }

    #[test]
    fn body_names_parse() {
        assert_eq!("moon".parse::<Body>().unwrap(), Body::Moon);
        assert_eq!(" Jupiter ".parse::<Body>().unwrap(), Body::Jupiter);
        assert!("pluto".parse::<Body>().is_err());
    }
}
