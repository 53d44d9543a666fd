use std::fmt;

use crate::astro::{Body, Epoch, Vec3};

/// Scalar root function watched during propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// g = r̂·v; rising through zero at periapsis.
    Periapsis,
    /// g = −r̂·v; rising through zero at apoapsis.
    Apoapsis,
    /// g = sin(ν − target); only rising crossings count.
    TrueAnomaly(f64),
    /// g = C3 − threshold, km²/s².
    C3Cross(f64),
    /// g = |r| − radius, km.
    RadiusCross(f64),
    /// g = |r| − (body radius + altitude), km.
    AltitudeCross(f64),
    /// g = t − epoch, s.
    TimeReached(Epoch),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    /// Body the event geometry is measured from.
    pub body: Body,
    pub direction: Direction,
    pub terminal: bool,
}

/// Minimum spacing between two hits of the same true-anomaly event, s.
pub const TRUE_ANOMALY_SEPARATION: f64 = 60.0;

impl EventSpec {
    pub fn new(kind: EventKind, body: Body, direction: Direction, terminal: bool) -> Self {
        if let EventKind::TrueAnomaly(t) = kind {
            assert!((0.0..360.0).contains(&t), "true anomaly target {t} outside [0, 360)");
        }
        Self {
            kind,
            body,
            direction,
            terminal,
        }
    }

    pub fn periapsis(body: Body) -> Self {
        Self::new(EventKind::Periapsis, body, Direction::Rising, true)
    }

    pub fn apoapsis(body: Body) -> Self {
        Self::new(EventKind::Apoapsis, body, Direction::Rising, true)
    }

    pub fn true_anomaly(body: Body, target_deg: f64) -> Self {
        Self::new(
            EventKind::TrueAnomaly(crate::astro::wrap_deg(target_deg)),
            body,
            Direction::Rising,
            true,
        )
    }

    pub fn c3_cross(body: Body, threshold: f64, direction: Direction) -> Self {
        Self::new(EventKind::C3Cross(threshold), body, direction, true)
    }

    pub fn radius_cross(body: Body, radius: f64, direction: Direction) -> Self {
        Self::new(EventKind::RadiusCross(radius), body, direction, true)
    }

    pub fn altitude_cross(body: Body, altitude: f64, direction: Direction) -> Self {
        Self::new(EventKind::AltitudeCross(altitude), body, direction, true)
    }

    pub fn time_reached(epoch: Epoch) -> Self {
        Self::new(EventKind::TimeReached(epoch), Body::Earth, Direction::Rising, true)
    }

    pub fn terminal(mut self, terminal: bool) -> Self {
        self.terminal = terminal;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Event function at a state relative to `self.body`.
    pub fn value(&self, epoch: Epoch, r: &Vec3, v: &Vec3) -> f64 {
        let mu = self.body.mu();
        match self.kind {
            EventKind::Periapsis => r.dot(v) / r.norm(),
            EventKind::Apoapsis => -r.dot(v) / r.norm(),
            EventKind::TrueAnomaly(target) => {
                let h = r.cross(v);
                let rn = r.norm();
                let e_vec = v.cross(&h) / mu - r / rn;
                let en = e_vec.norm();
                let hn = h.norm();
                if en == 0.0 || hn == 0.0 {
                    return 0.0;
                }
                let cos_nu = e_vec.dot(r) / (en * rn);
                let sin_nu = h.dot(&e_vec.cross(r)) / (hn * en * rn);
                let (st, ct) = target.to_radians().sin_cos();
                sin_nu * ct - cos_nu * st
            }
            EventKind::C3Cross(threshold) => v.norm_squared() - 2.0 * mu / r.norm() - threshold,
            EventKind::RadiusCross(radius) => r.norm() - radius,
            EventKind::AltitudeCross(alt) => r.norm() - self.body.radius() - alt,
            EventKind::TimeReached(t) => epoch - t,
        }
    }

    /// Whether a sign change from `g0` to `g1` counts as a crossing.
    pub fn crosses(&self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match (self.kind, self.direction) {
            (EventKind::TrueAnomaly(_), _) => rising,
            (_, Direction::Rising) => rising,
            (_, Direction::Falling) => falling,
            (_, Direction::Any) => rising || falling,
        }
    }

    /// Stable identifier used in event logs.
    pub fn name(&self) -> String {
        match self.kind {
            EventKind::Periapsis => format!("periapsis_{}", self.body),
            EventKind::Apoapsis => format!("apoapsis_{}", self.body),
            EventKind::TrueAnomaly(t) => format!("true_anomaly_{t}_{}", self.body),
            EventKind::C3Cross(c) => format!("c3_cross_{c}_{}", self.body),
            EventKind::RadiusCross(r) => format!("radius_cross_{r}_{}", self.body),
            EventKind::AltitudeCross(a) => format!("altitude_cross_{a}_{}", self.body),
            EventKind::TimeReached(t) => format!("time_{}", t.seconds()),
        }
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
