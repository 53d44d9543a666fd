use nalgebra::{Rotation3, Vector3};

use super::{wrap_deg, AstroError, Vec3};

/// Eccentricity and inclination (sine) below which the orbit is treated as circular or
/// equatorial; the undefined angles are then reported as zero and flagged.
const CIRCULAR_TOL: f64 = 1e-11;
const EQUATORIAL_TOL: f64 = 1e-11;

/// Osculating two-body elements. Angles in degrees, lengths in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerianElements {
    /// Semi-major axis, negative for hyperbolic orbits.
    pub sma: f64,
    pub ecc: f64,
    pub inc: f64,
    pub raan: f64,
    pub aop: f64,
    pub ta: f64,
    pub mu: f64,
    /// `ecc` below tolerance: `aop` is 0 and `ta` is measured from the node (or x-axis).
    pub circular: bool,
    /// Inclination 0 or 180 deg: `raan` is 0 and `aop`/`ta` are measured from the x-axis.
    pub equatorial: bool,
}

impl KeplerianElements {
    /// Element set with the singularity flags derived from `ecc` and `inc`.
    pub fn new(sma: f64, ecc: f64, inc: f64, raan: f64, aop: f64, ta: f64, mu: f64) -> Self {
        let sin_i = inc.to_radians().sin().abs();
        Self {
            sma,
            ecc,
            inc,
            raan,
            aop,
            ta,
            mu,
            circular: ecc < CIRCULAR_TOL,
            equatorial: sin_i < EQUATORIAL_TOL,
        }
    }

    pub fn periapsis_radius(&self) -> f64 {
        self.sma * (1.0 - self.ecc)
    }

    /// Apoapsis radius; infinite for open orbits.
    pub fn apoapsis_radius(&self) -> f64 {
        if self.ecc < 1.0 {
            self.sma * (1.0 + self.ecc)
        } else {
            f64::INFINITY
        }
    }

    pub fn semi_latus_rectum(&self) -> f64 {
        self.sma * (1.0 - self.ecc * self.ecc)
    }

    /// Orbital period, s; infinite for open orbits.
    pub fn period(&self) -> f64 {
        if self.ecc < 1.0 && self.sma > 0.0 {
            std::f64::consts::TAU * (self.sma.powi(3) / self.mu).sqrt()
        } else {
            f64::INFINITY
        }
    }
}

fn signed_angle(from: &Vec3, to: &Vec3, axis: &Vec3) -> f64 {
    from.cross(to).dot(axis).atan2(from.dot(to))
}

/// Osculating elements of a Cartesian state about a body with parameter `mu`.
pub fn cart_to_kepler(r: &Vec3, v: &Vec3, mu: f64) -> Result<KeplerianElements, AstroError> {
    let rmag = r.norm();
    let vmag = v.norm();
    if !(rmag > 0.0) || !(vmag > 0.0) || !mu.is_finite() || mu <= 0.0 {
        return Err(AstroError::SingularGeometry("zero radius or velocity"));
    }
    let h = r.cross(v);
    let hmag = h.norm();
    if hmag <= 1e-12 * rmag * vmag {
        return Err(AstroError::SingularGeometry("rectilinear motion"));
    }
    let h_hat = h / hmag;

    let energy = 0.5 * vmag * vmag - mu / rmag;
    let e_vec = ((vmag * vmag - mu / rmag) * r - r.dot(v) * v) / mu;
    let ecc = e_vec.norm();
    if (ecc - 1.0).abs() < 1e-14 || energy == 0.0 {
        return Err(AstroError::SingularGeometry("parabolic orbit"));
    }
    let sma = -mu / (2.0 * energy);
    let inc = (h_hat.z.clamp(-1.0, 1.0)).acos().to_degrees();

    let node = Vector3::z().cross(&h);
    let nmag = node.norm();
    let equatorial = nmag <= EQUATORIAL_TOL * hmag;
    let circular = ecc < CIRCULAR_TOL;
    let x_axis = Vector3::x();

    let (raan, aop, ta) = match (circular, equatorial) {
        (false, false) => (
            node.y.atan2(node.x),
            signed_angle(&node, &e_vec, &h_hat),
            signed_angle(&e_vec, r, &h_hat),
        ),
        (true, false) => (node.y.atan2(node.x), 0.0, signed_angle(&node, r, &h_hat)),
        (false, true) => (
            0.0,
            signed_angle(&x_axis, &e_vec, &h_hat),
            signed_angle(&e_vec, r, &h_hat),
        ),
        (true, true) => (0.0, 0.0, signed_angle(&x_axis, r, &h_hat)),
    };

    Ok(KeplerianElements {
        sma,
        ecc,
        inc,
        raan: wrap_deg(raan.to_degrees()),
        aop: wrap_deg(aop.to_degrees()),
        ta: wrap_deg(ta.to_degrees()),
        mu,
        circular,
        equatorial,
    })
}

/// Cartesian position and velocity from an element set.
pub fn kepler_to_cart(el: &KeplerianElements) -> Result<(Vec3, Vec3), AstroError> {
    let KeplerianElements {
        sma,
        ecc,
        inc,
        raan,
        aop,
        ta,
        mu,
        ..
    } = *el;
    let finite = [sma, ecc, inc, raan, aop, ta, mu].iter().all(|x| x.is_finite());
    if !finite || mu <= 0.0 || ecc < 0.0 {
        return Err(AstroError::InvalidElements(format!("{el:?}")));
    }
    if (ecc < 1.0 && sma <= 0.0) || (ecc > 1.0 && sma >= 0.0) || ecc == 1.0 {
        return Err(AstroError::InvalidElements(format!(
            "sma {sma} inconsistent with ecc {ecc}"
        )));
    }
    let nu = ta.to_radians();
    if ecc > 1.0 {
        let limit = (-1.0 / ecc).acos();
        let nu_wrapped = (nu + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        // Keep a margin so the radius stays finite.
        if nu_wrapped.abs() >= limit * (1.0 - 1e-9) {
            return Err(AstroError::BeyondAsymptote {
                ta_deg: ta,
                limit_deg: limit.to_degrees(),
            });
        }
    }
    let p = sma * (1.0 - ecc * ecc);
    let (sn, cn) = nu.sin_cos();
    let radius = p / (1.0 + ecc * cn);
    let r_pf = Vec3::new(radius * cn, radius * sn, 0.0);
    let vs = (mu / p).sqrt();
    let v_pf = Vec3::new(-vs * sn, vs * (ecc + cn), 0.0);

    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), raan.to_radians())
        * Rotation3::from_axis_angle(&Vector3::x_axis(), inc.to_radians())
        * Rotation3::from_axis_angle(&Vector3::z_axis(), aop.to_radians());
    Ok((rot * r_pf, rot * v_pf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::MU_EARTH;
    use proptest::prelude::*;

    fn table2() -> (Vec3, Vec3) {
        (
            Vec3::new(-15015.4, -23569.0, 2241.505),
            Vec3::new(-0.48554, -5.04876, -0.87999),
        )
    }

    #[test]
    fn separation_state_elements() {
        let (r, v) = table2();
        let el = cart_to_kepler(&r, &v, MU_EARTH).unwrap();
        // The tabulated Cartesian row is itself rounded, which moves SMA by ~1 km.
        assert!((el.sma - 205_954.8).abs() < 2.0, "sma {}", el.sma);
        assert!((el.ecc - 0.9667).abs() < 5e-5);
        assert!((el.inc - 28.6065).abs() < 1e-3);
        assert!((el.raan - 65.9569).abs() < 1e-3);
        assert!((el.aop - 47.9162).abs() < 1e-3);
        assert!((el.ta - 122.4711).abs() < 1e-3);
    }

    #[test]
    fn separation_elements_to_cartesian() {
        let el = KeplerianElements::new(205_954.8, 0.9667, 28.6065, 65.9569, 47.9162, 122.4711, MU_EARTH);
        let (r, v) = kepler_to_cart(&el).unwrap();
        let (r0, v0) = table2();
        // Four-digit eccentricity alone moves the semi-latus rectum by ~3 km.
        assert!((r - r0).norm() < 8.0, "dr {}", (r - r0).norm());
        assert!((v - v0).norm() < 1e-3, "dv {}", (v - v0).norm());

        // With full-precision elements the row is reproduced tightly.
        let exact = cart_to_kepler(&r0, &v0, MU_EARTH).unwrap();
        let (r, v) = kepler_to_cart(&exact).unwrap();
        assert!((r - r0).norm() < 0.5);
        assert!((v - v0).norm() < 1e-5);
    }

    #[test]
    fn circular_equatorial() {
        let vc = (MU_EARTH / 7000.0).sqrt();
        let el = cart_to_kepler(&Vec3::new(7000.0, 0.0, 0.0), &Vec3::new(0.0, vc, 0.0), MU_EARTH).unwrap();
        assert!(el.ecc < 1e-12);
        assert!((el.sma - 7000.0).abs() < 1e-6);
        assert_eq!(el.inc, 0.0);
        assert!(el.circular && el.equatorial);
        assert_eq!((el.raan, el.aop, el.ta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn circular_elements_to_cartesian() {
        let el = KeplerianElements::new(7000.0, 0.0, 0.0, 0.0, 0.0, 0.0, MU_EARTH);
        let (r, v) = kepler_to_cart(&el).unwrap();
        assert!((r - Vec3::new(7000.0, 0.0, 0.0)).norm() < 1e-9);
        let vc = (398_600.441_8_f64 / 7000.0).sqrt();
        assert!((v - Vec3::new(0.0, vc, 0.0)).norm() < 1e-12);
        assert!((v.y - 7.5460).abs() < 1e-3);
    }

    #[test]
    fn periapsis_identity() {
        let el = KeplerianElements::new(205_954.8, 0.9667, 28.6, 10.0, 20.0, 0.0, MU_EARTH);
        let (r, _) = kepler_to_cart(&el).unwrap();
        assert!((r.norm() - 205_954.8 * (1.0 - 0.9667)).abs() < 1e-8);
    }

    #[test]
    fn rectilinear_is_singular() {
        let r = Vec3::new(7000.0, 0.0, 0.0);
        let v = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            cart_to_kepler(&r, &v, MU_EARTH),
            Err(AstroError::SingularGeometry(_))
        ));
    }

    #[test]
    fn hyperbolic_asymptote_rejected() {
        let el = KeplerianElements::new(-10_000.0, 1.5, 10.0, 0.0, 0.0, 140.0, MU_EARTH);
        // acos(-1/1.5) = 131.8 deg
        assert!(matches!(kepler_to_cart(&el), Err(AstroError::BeyondAsymptote { .. })));
        let ok = KeplerianElements { ta: 120.0, ..el };
        let (r, v) = kepler_to_cart(&ok).unwrap();
        let back = cart_to_kepler(&r, &v, MU_EARTH).unwrap();
        assert!((back.sma + 10_000.0).abs() < 1e-6);
    }

    #[test]
    fn vis_viva_and_momentum() {
        let el = KeplerianElements::new(26_000.0, 0.3, 50.0, 30.0, 70.0, 200.0, MU_EARTH);
        let (r, v) = kepler_to_cart(&el).unwrap();
        let vv = MU_EARTH * (2.0 / r.norm() - 1.0 / el.sma);
        assert!((v.norm_squared() - vv).abs() / vv < 1e-10);
        let h = (MU_EARTH * el.sma * (1.0 - el.ecc * el.ecc)).sqrt();
        assert!((r.cross(&v).norm() - h).abs() / h < 1e-10);
    }

    fn bound_state() -> impl Strategy<Value = (Vec3, Vec3)> {
        (
            7_000.0f64..400_000.0,
            0.001f64..0.97,
            0.01f64..179.99,
            0.0f64..360.0,
            0.0f64..360.0,
            0.0f64..360.0,
        )
            .prop_filter_map("valid", |(sma, ecc, inc, raan, aop, ta)| {
                let el = KeplerianElements::new(sma, ecc, inc, raan, aop, ta, MU_EARTH);
                kepler_to_cart(&el).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn round_trip_recovers_state((r, v) in bound_state()) {
            let el = cart_to_kepler(&r, &v, MU_EARTH).unwrap();
            let (r2, v2) = kepler_to_cart(&el).unwrap();
            prop_assert!((r2 - r).norm() / r.norm() < 1e-9);
            prop_assert!((v2 - v).norm() / v.norm() < 1e-9);
            prop_assert!(el.raan >= 0.0 && el.raan < 360.0);
            prop_assert!(el.aop >= 0.0 && el.aop < 360.0);
            prop_assert!(el.ta >= 0.0 && el.ta < 360.0);
            // c3 = −μ/a
            let c3 = super::super::c3(&r, &v, MU_EARTH);
            prop_assert!((c3 + MU_EARTH / el.sma).abs() <= 1e-10 * c3.abs().max(1e-3));
        }
    }
}
