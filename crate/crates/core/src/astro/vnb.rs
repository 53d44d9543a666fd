use nalgebra::Matrix3;

use super::{AstroError, Vec3};

/// Velocity–normal–binormal triad: V along the velocity, N along r×v, B = V×N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VnbBasis {
    /// Columns V, N, B expressed in the inertial frame.
    pub matrix: Matrix3<f64>,
}

impl VnbBasis {
    pub fn v_axis(&self) -> Vec3 {
        self.matrix.column(0).into()
    }

    pub fn n_axis(&self) -> Vec3 {
        self.matrix.column(1).into()
    }

    pub fn b_axis(&self) -> Vec3 {
        self.matrix.column(2).into()
    }

    /// Maps VNB components to inertial components.
    pub fn to_inertial(&self, vnb: &Vec3) -> Vec3 {
        self.matrix * vnb
    }

    pub fn to_vnb(&self, inertial: &Vec3) -> Vec3 {
        self.matrix.transpose() * inertial
    }
}

pub fn vnb_basis(r: &Vec3, v: &Vec3) -> Result<VnbBasis, AstroError> {
    let vmag = v.norm();
    let h = r.cross(v);
    let hmag = h.norm();
    if !(vmag > 0.0) || hmag <= 1e-12 * r.norm() * vmag {
        return Err(AstroError::SingularGeometry(
            "VNB frame undefined for zero or rectilinear velocity",
        ));
    }
    let v_hat = v / vmag;
    let n_hat = h / hmag;
    let b_hat = v_hat.cross(&n_hat);
    Ok(VnbBasis {
        matrix: Matrix3::from_columns(&[v_hat, n_hat, b_hat]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn planar_construction() {
        let b = vnb_basis(&Vec3::new(7000.0, 0.0, 0.0), &Vec3::new(0.0, 7.5, 0.0)).unwrap();
        assert_eq!(b.v_axis(), Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(b.n_axis(), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(b.b_axis(), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn retrograde_maps_to_minus_velocity() {
        let v = Vec3::new(0.3, -1.2, 0.4);
        let b = vnb_basis(&Vec3::new(1000.0, 200.0, -50.0), &v).unwrap();
        let d = b.to_inertial(&Vec3::new(-1.0, 0.0, 0.0));
        assert!((d + v / v.norm()).norm() < 1e-15);
        assert!((b.v_axis().dot(&v) - v.norm()).abs() < 1e-14);
    }

    #[test]
    fn singular_inputs() {
        assert!(vnb_basis(&Vec3::new(1.0, 0.0, 0.0), &Vec3::zeros()).is_err());
        assert!(vnb_basis(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(2.0, 0.0, 0.0)).is_err());
    }

    fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
        (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn orthonormal_right_handed(r in vec3(-5e5, 5e5), v in vec3(-10.0, 10.0)) {
            prop_assume!(r.cross(&v).norm() > 1e-6 * r.norm() * v.norm());
            let b = vnb_basis(&r, &v).unwrap();
            let m = b.matrix;
            let gram = m.transpose() * m;
            prop_assert!((gram - Matrix3::identity()).abs().max() < 1e-12);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }
    }
}
