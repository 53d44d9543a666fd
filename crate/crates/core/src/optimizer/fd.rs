use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Jacobian of `f` at `x` by central differences with per-coordinate steps `h`.
///
/// A coordinate whose stencil point fails to evaluate (or leaves `[lower, upper]`) falls back to
/// a one-sided difference. Returns `None` if `f(x)` fails or both sides of a stencil fail.
pub fn fd_jacobian_bounded<F>(
    f: &F,
    x: &DVector<f64>,
    h: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>> + Sync,
{
    let f0 = f(x)?;
    let columns: Vec<Option<DVector<f64>>> = (0..x.len())
        .into_par_iter()
        .map(|j| {
            let hj = h[j];
            let shifted = |d: f64| {
                let mut xs = x.clone();
                xs[j] += d;
                if xs[j] < lower[j] || xs[j] > upper[j] {
                    return None;
                }
                f(&xs)
            };
            match (shifted(hj), shifted(-hj)) {
                (Some(fp), Some(fm)) => Some((fp - fm) / (2.0 * hj)),
                (Some(fp), None) => Some((fp - &f0) / hj),
                (None, Some(fm)) => Some((&f0 - fm) / hj),
                (None, None) => None,
            }
        })
        .collect();
    let mut jac = DMatrix::zeros(f0.len(), x.len());
    for (j, col) in columns.into_iter().enumerate() {
        jac.set_column(j, &col?);
    }
    Some(jac)
}

/// Unbounded central-difference Jacobian.
pub fn fd_jacobian<F>(f: &F, x: &DVector<f64>, h: &DVector<f64>) -> Option<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Option<DVector<f64>> + Sync,
{
    let n = x.len();
    let lo = DVector::from_element(n, f64::NEG_INFINITY);
    let hi = DVector::from_element(n, f64::INFINITY);
    fd_jacobian_bounded(f, x, h, &lo, &hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_is_exact() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let f = |x: &DVector<f64>| Some(&a * x);
        let x = DVector::from_vec(vec![0.3, -0.7, 2.0]);
        let j = fd_jacobian(&f, &x, &DVector::from_element(3, 0.1)).unwrap();
        assert!((j - &a).amax() < 1e-13);
    }

    #[test]
    fn quadratic_gradient_exact_at_center() {
        let f = |x: &DVector<f64>| Some(DVector::from_vec(vec![x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1]]));
        let x = DVector::from_vec(vec![1.5, -0.5]);
        let j = fd_jacobian(&f, &x, &DVector::from_element(2, 0.25)).unwrap();
        assert!((j[(0, 0)] - (2.0 * 1.5 + 3.0 * -0.5)).abs() < 1e-12);
        assert!((j[(0, 1)] - (3.0 * 1.5 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn richardson_consistency() {
        let f = |x: &DVector<f64>| Some(DVector::from_vec(vec![(x[0] * x[1]).sin(), x[0].exp() * x[1]]));
        let x = DVector::from_vec(vec![0.4, 1.3]);
        let exact = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.3 * (0.52f64).cos(),
                0.4 * (0.52f64).cos(),
                0.4f64.exp() * 1.3,
                0.4f64.exp(),
            ],
        );
        let e1 = (fd_jacobian(&f, &x, &DVector::from_element(2, 1e-2)).unwrap() - &exact).amax();
        let e4 = (fd_jacobian(&f, &x, &DVector::from_element(2, 2.5e-3)).unwrap() - &exact).amax();
        // Second-order truncation: error shrinks ~16x for a quarter step.
        assert!(e1 / e4 > 12.0 && e1 / e4 < 20.0, "{}", e1 / e4);
    }

    #[test]
    fn one_sided_fallback() {
        // Undefined for x < 0.
        let f = |x: &DVector<f64>| {
            if x[0] < 0.0 {
                None
            } else {
                Some(DVector::from_vec(vec![x[0].sqrt()]))
            }
        };
        let x = DVector::from_vec(vec![0.5e-3]);
        let j = fd_jacobian(&f, &x, &DVector::from_element(1, 1e-3)).unwrap();
        assert!((j[(0, 0)] - (1.5e-3f64.sqrt() - 0.5e-3f64.sqrt()) / 1e-3).abs() < 1e-12);
        let lo = DVector::from_element(1, 0.0);
        let hi = DVector::from_element(1, 1.0);
        let x = DVector::from_vec(vec![1.0]);
        let j = fd_jacobian_bounded(&f, &x, &DVector::from_element(1, 1e-6), &lo, &hi).unwrap();
        assert!((j[(0, 0)] - 0.5).abs() < 1e-6);
        let never = |_: &DVector<f64>| -> Option<DVector<f64>> { None };
        assert!(fd_jacobian(&never, &x, &DVector::from_element(1, 1e-3)).is_none());
    }
}
