//! Spherical-harmonic gravity of the Moon.

use std::path::Path;

use nalgebra::{Matrix3, Rotation3};

use crate::astro::{Epoch, Vec3};

use super::DynamicsError;

/// Bundled degree-8 lunar field.
pub const BUNDLED_LUNAR_FIELD: &str = include_str!("../../data/lunar_gravity_8.txt");

/// Spherical-harmonic field with fully normalized coefficients `C̄nm`, `S̄nm`.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityField {
    pub mu: f64,
    pub ref_radius: f64,
    pub degree: usize,
    /// Normalized coefficients indexed `[n][m]`; rows 0 and 1 are zero.
    pub c_bar: Vec<Vec<f64>>,
    pub s_bar: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
}

fn normalization(n: usize, m: usize) -> f64 {
    // sqrt((2 - δ0m)(2n+1)(n-m)!/(n+m)!)
    let mut ratio = 1.0;
    for k in (n - m + 1)..=(n + m) {
        ratio /= k as f64;
    }
    let delta = if m == 0 { 1.0 } else { 2.0 };
    (delta * (2 * n + 1) as f64 * ratio).sqrt()
}

impl GravityField {
    pub fn new(mu: f64, ref_radius: f64, c_bar: Vec<Vec<f64>>, s_bar: Vec<Vec<f64>>) -> Result<Self, DynamicsError> {
        let degree = c_bar.len().saturating_sub(1);
        if s_bar.len() != c_bar.len()
            || c_bar.iter().enumerate().any(|(n, row)| row.len() != n + 1)
            || s_bar.iter().enumerate().any(|(n, row)| row.len() != n + 1)
        {
            return Err(DynamicsError::Field(
                "coefficient arrays must be triangular [n][0..=n]".into(),
            ));
        }
        if !(mu > 0.0) || !(ref_radius > 0.0) {
            return Err(DynamicsError::Field(format!("invalid mu {mu} or radius {ref_radius}")));
        }
        if c_bar.iter().chain(&s_bar).flatten().any(|v| !v.is_finite()) {
            return Err(DynamicsError::Field("non-finite coefficient".into()));
        }
        let scale = |bar: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            bar.iter()
                .enumerate()
                .map(|(n, row)| row.iter().enumerate().map(|(m, v)| v * normalization(n, m)).collect())
                .collect()
        };
        let c = scale(&c_bar);
        let s = scale(&s_bar);
        Ok(Self {
            mu,
            ref_radius,
            degree,
            c_bar,
            s_bar,
            c,
            s,
        })
    }

    /// Monopole-only field.
    pub fn point_mass(mu: f64, ref_radius: f64) -> Self {
        Self::new(mu, ref_radius, vec![vec![0.0]], vec![vec![0.0]]).expect("valid monopole")
    }

    /// The bundled degree-8 lunar field.
    pub fn lunar_default() -> Self {
        Self::parse(BUNDLED_LUNAR_FIELD).expect("bundled lunar field parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DynamicsError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| DynamicsError::Field(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `#GRAV mu=.. radius=.. degree=..` followed by `n m Cnm Snm` rows.
    pub fn parse(text: &str) -> Result<Self, DynamicsError> {
        let fail = |line: usize, msg: String| DynamicsError::Field(format!("line {line}: {msg}"));
        let mut header: Option<(f64, f64, usize)> = None;
        let mut c_bar: Vec<Vec<f64>> = Vec::new();
        let mut s_bar: Vec<Vec<f64>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#GRAV") {
                let (mut mu, mut radius, mut degree) = (None, None, None);
                for tok in rest.split_whitespace() {
                    let (k, v) = tok
                        .split_once('=')
                        .ok_or_else(|| fail(line_no, format!("malformed field {tok:?}")))?;
                    match k {
                        "mu" => mu = v.parse::<f64>().ok(),
                        "radius" => radius = v.parse::<f64>().ok(),
                        "degree" => degree = v.parse::<usize>().ok(),
                        _ => return Err(fail(line_no, format!("unknown header key {k:?}"))),
                    }
                }
                let (Some(mu), Some(radius), Some(degree)) = (mu, radius, degree) else {
                    return Err(fail(line_no, "header needs mu, radius and degree".into()));
                };
                c_bar = (0..=degree).map(|n| vec![0.0; n + 1]).collect();
                s_bar = c_bar.clone();
                c_bar[0][0] = 1.0;
                header = Some((mu, radius, degree));
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let Some((_, _, degree)) = header else {
                return Err(fail(line_no, "coefficients before #GRAV header".into()));
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(fail(line_no, format!("expected 4 columns, found {}", f.len())));
            }
            let n: usize = f[0]
                .parse()
                .map_err(|_| fail(line_no, format!("bad degree {:?}", f[0])))?;
            let m: usize = f[1]
                .parse()
                .map_err(|_| fail(line_no, format!("bad order {:?}", f[1])))?;
            let cv: f64 = f[2]
                .parse()
                .map_err(|_| fail(line_no, format!("bad C coefficient {:?}", f[2])))?;
            let sv: f64 = f[3]
                .parse()
                .map_err(|_| fail(line_no, format!("bad S coefficient {:?}", f[3])))?;
            if m > n || n > degree {
                return Err(fail(line_no, format!("index ({n},{m}) outside degree {degree}")));
            }
            if n < 2 {
                continue;
            }
            c_bar[n][m] = cv;
            s_bar[n][m] = sv;
        }
        let (mu, radius, _) = header.ok_or_else(|| fail(0, "missing #GRAV header".into()))?;
        Self::new(mu, radius, c_bar, s_bar)
    }

    /// Copy limited to degree `n` (no-op if already lower).
    pub fn truncated(&self, n: usize) -> Self {
        let keep = n.min(self.degree) + 1;
        Self::new(
            self.mu,
            self.ref_radius,
            self.c_bar[..keep].to_vec(),
            self.s_bar[..keep].to_vec(),
        )
        .expect("truncation of a valid field")
    }

    /// Fills the V/W solid-harmonic tables up to degree `nmax`.
    fn vw(&self, r: &Vec3, nmax: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let r2 = r.norm_squared();
        let rr = self.ref_radius;
        let (x0, y0, z0) = (r.x * rr / r2, r.y * rr / r2, r.z * rr / r2);
        let rho = rr * rr / r2;
        let mut v = vec![vec![0.0; nmax + 2]; nmax + 2];
        let mut w = vec![vec![0.0; nmax + 2]; nmax + 2];
        v[0][0] = rr / r2.sqrt();
        for m in 0..=nmax {
            if m > 0 {
                let k = (2 * m - 1) as f64;
                v[m][m] = k * (x0 * v[m - 1][m - 1] - y0 * w[m - 1][m - 1]);
                w[m][m] = k * (x0 * w[m - 1][m - 1] + y0 * v[m - 1][m - 1]);
            }
            if m < nmax {
                let k = (2 * m + 1) as f64;
                v[m + 1][m] = k * z0 * v[m][m];
                w[m + 1][m] = k * z0 * w[m][m];
            }
            for n in (m + 2)..=nmax {
                let a = (2 * n - 1) as f64 / (n - m) as f64;
                let b = (n + m - 1) as f64 / (n - m) as f64;
                v[n][m] = a * z0 * v[n - 1][m] - b * rho * v[n - 2][m];
                w[n][m] = a * z0 * w[n - 1][m] - b * rho * w[n - 2][m];
            }
        }
        (v, w)
    }

    /// Gravitational potential in the body-fixed frame, km²/s² (positive convention).
    pub fn potential(&self, r_bf: &Vec3) -> f64 {
        let (v, w) = self.vw(r_bf, self.degree);
        let mut u = 0.0;
        for n in 0..=self.degree {
            for m in 0..=n {
                let cnm = if n == 0 { 1.0 } else { self.c[n][m] };
                u += cnm * v[n][m] + self.s[n][m] * w[n][m];
            }
        }
        self.mu / self.ref_radius * u
    }

    /// Acceleration in the body-fixed frame including the monopole, km/s².
    pub fn acceleration_body_fixed(&self, r_bf: &Vec3) -> Vec3 {
        self.acceleration_terms(r_bf, 0)
    }

    /// Acceleration from degrees `n >= from_degree` only.
    fn acceleration_terms(&self, r_bf: &Vec3, from_degree: usize) -> Vec3 {
        let (v, w) = self.vw(r_bf, self.degree + 1);
        let (mut ax, mut ay, mut az) = (0.0, 0.0, 0.0);
        for n in from_degree..=self.degree {
            for m in 0..=n {
                let cnm = if n == 0 { 1.0 } else { self.c[n][m] };
                let snm = self.s[n][m];
                if m == 0 {
                    ax -= cnm * v[n + 1][1];
                    ay -= cnm * w[n + 1][1];
                } else {
                    let f = ((n - m + 2) * (n - m + 1)) as f64;
                    ax += 0.5
                        * ((-cnm * v[n + 1][m + 1] - snm * w[n + 1][m + 1])
                            + f * (cnm * v[n + 1][m - 1] + snm * w[n + 1][m - 1]));
                    ay += 0.5
                        * ((-cnm * w[n + 1][m + 1] + snm * v[n + 1][m + 1])
                            + f * (-cnm * w[n + 1][m - 1] + snm * v[n + 1][m - 1]));
                }
                az += (n - m + 1) as f64 * (-cnm * v[n + 1][m] - snm * w[n + 1][m]);
            }
        }
        let k = self.mu / (self.ref_radius * self.ref_radius);
        Vec3::new(ax, ay, az) * k
    }

    /// Non-spherical part of the acceleration (degrees 2..N) in the body-fixed frame.
    pub fn perturbation_body_fixed(&self, r_bf: &Vec3) -> Vec3 {
        if self.degree < 2 {
            return Vec3::zeros();
        }
        self.acceleration_terms(r_bf, 2)
    }
}

/// Rotation from the inertial J2000 frame to the lunar body-fixed frame.
///
/// Fixed IAU pole and a uniform spin about it at the sidereal rate.
pub fn lunar_orientation(epoch: Epoch) -> Matrix3<f64> {
    const POLE_RA_DEG: f64 = 269.9949;
    const POLE_DEC_DEG: f64 = 66.5392;
    const W0_DEG: f64 = 38.3213;
    const W_RATE_DEG_PER_DAY: f64 = 13.176_358_15;
    let w = (W0_DEG + W_RATE_DEG_PER_DAY * epoch.days()).rem_euclid(360.0);
    let r_node = Rotation3::from_axis_angle(&Vec3::z_axis(), -(90.0 + POLE_RA_DEG).to_radians());
    let r_tilt = Rotation3::from_axis_angle(&Vec3::x_axis(), -(90.0 - POLE_DEC_DEG).to_radians());
    let r_spin = Rotation3::from_axis_angle(&Vec3::z_axis(), -w.to_radians());
    (r_spin * r_tilt * r_node).into_inner()
}

/// Full lunar acceleration (monopole plus harmonics) at a Moon-centred inertial position.
pub fn accel_harmonics(r_mci: &Vec3, field: &GravityField, epoch: Epoch) -> Result<Vec3, DynamicsError> {
    let r = r_mci.norm();
    if !(r > field.ref_radius) {
        return Err(DynamicsError::BelowSurface {
            radius: r,
            ref_radius: field.ref_radius,
        });
    }
    let rot = lunar_orientation(epoch);
    let r_bf = rot * r_mci;
    Ok(rot.transpose() * field.acceleration_body_fixed(&r_bf))
}

/// Non-spherical lunar acceleration in the inertial frame.
pub fn harmonics_perturbation(r_mci: &Vec3, field: &GravityField, epoch: Epoch) -> Vec3 {
    if field.degree < 2 {
        return Vec3::zeros();
    }
    let rot = lunar_orientation(epoch);
    rot.transpose() * field.perturbation_body_fixed(&(rot * r_mci))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{MOON_RADIUS, MU_MOON};
    use crate::dynamics::accel_point_mass;

    fn sample_points() -> Vec<Vec3> {
        (0..10)
            .map(|k| {
                let t = f64::from(k);
                let dir = Vec3::new((1.3 * t).cos(), (0.7 * t + 0.4).sin(), (2.1 * t - 1.0).sin());
                dir.normalize() * (1_800.0 + 900.0 * t)
            })
            .collect()
    }

    #[test]
    fn normalization_known_values() {
        assert!((normalization(2, 0) - 5f64.sqrt()).abs() < 1e-15);
        // sqrt(2*5*0!/4!) for (2,2)
        assert!((normalization(2, 2) - (10.0f64 / 24.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degree_zero_is_point_mass() {
        let field = GravityField::point_mass(MU_MOON, MOON_RADIUS);
        for r in sample_points() {
            let a = field.acceleration_body_fixed(&r);
            let b = accel_point_mass(&r, MU_MOON).unwrap();
            assert!((a - b).norm() <= 1e-14 * b.norm(), "{}", (a - b).norm() / b.norm());
        }
    }

    #[test]
    fn pure_c20_matches_closed_form_j2() {
        let c20 = -9.0881e-5;
        let mut c_bar = vec![vec![0.0], vec![0.0; 2], vec![0.0; 3]];
        c_bar[2][0] = c20;
        let s_bar = vec![vec![0.0], vec![0.0; 2], vec![0.0; 3]];
        let field = GravityField::new(MU_MOON, MOON_RADIUS, c_bar, s_bar).unwrap();
        let j2 = -5f64.sqrt() * c20;
        for r in sample_points() {
            let rn = r.norm();
            let k = -1.5 * j2 * MU_MOON * MOON_RADIUS.powi(2) / rn.powi(5);
            let zz = 5.0 * r.z * r.z / (rn * rn);
            let expected = Vec3::new(k * r.x * (1.0 - zz), k * r.y * (1.0 - zz), k * r.z * (3.0 - zz));
            let got = field.perturbation_body_fixed(&r);
            assert!(
                (got - expected).norm() <= 1e-12 * expected.norm(),
                "{}",
                (got - expected).norm() / expected.norm()
            );
        }
    }

    #[test]
    fn acceleration_is_potential_gradient() {
        let field = GravityField::lunar_default();
        for r in sample_points() {
            let h = 1e-3;
            let mut grad = Vec3::zeros();
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = h;
                grad[i] = (field.potential(&(r + e)) - field.potential(&(r - e))) / (2.0 * h);
            }
            let a = field.acceleration_body_fixed(&r);
            assert!((grad - a).norm() < 1e-8 * a.norm(), "{}", (grad - a).norm() / a.norm());
        }
    }

    #[test]
    fn nonsingular_over_the_poles() {
        let field = GravityField::lunar_default();
        let a = field.acceleration_body_fixed(&Vec3::new(0.0, 0.0, 1_900.0));
        assert!(a.iter().all(|v| v.is_finite()));
        assert!(a.z < 0.0);
    }

    #[test]
    fn bundled_field_parses() {
        let f = GravityField::lunar_default();
        assert_eq!(f.degree, 8);
        assert!(f.c_bar[2][0] < 0.0);
        assert_eq!(f.truncated(3).degree, 3);
        assert_eq!(f.truncated(20).degree, 8);
    }

    #[test]
    fn malformed_field_rejected() {
        assert!(GravityField::parse("2 0 1 0\n").is_err());
        assert!(GravityField::parse("#GRAV mu=1 radius=1 degree=2\n3 0 1 0\n").is_err());
        assert!(GravityField::parse("#GRAV mu=1 radius=1 degree=2\n2 0 x 0\n").is_err());
    }

    #[test]
    fn sub_surface_is_domain_error() {
        let f = GravityField::lunar_default();
        let r = Vec3::new(1_000.0, 0.0, 0.0);
        assert!(matches!(
            accel_harmonics(&r, &f, Epoch::J2000),
            Err(DynamicsError::BelowSurface { .. })
        ));
    }

    #[test]
    fn orientation_is_rotation_with_pole_on_z() {
        let m = lunar_orientation(Epoch::from_days(1234.5));
        assert!((m * m.transpose() - Matrix3::identity()).abs().max() < 1e-14);
        let ra = 269.9949f64.to_radians();
        let dec = 66.5392f64.to_radians();
        let pole = Vec3::new(dec.cos() * ra.cos(), dec.cos() * ra.sin(), dec.sin());
        assert!((m * pole - Vec3::z()).norm() < 1e-14);
    }
}
