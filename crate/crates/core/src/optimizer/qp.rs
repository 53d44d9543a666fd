//! Primal active-set solver for strictly convex inequality-constrained QPs.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("starting point violates constraint {row} by {excess:e}")]
    InfeasibleStart { row: usize, excess: f64 },
    #[error("singular KKT system")]
    Singular,
    #[error("active-set iteration limit reached")]
    IterationLimit,
}

/// Minimizer and multipliers of `½zᵀGz + aᵀz` subject to `Az ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    /// One non-negative multiplier per row of `A`.
    pub lambda: DVector<f64>,
    pub iterations: usize,
}

/// Solves the QP from a feasible `z0`. `G` must be positive definite.
pub fn solve_qp(
    g: &DMatrix<f64>,
    a: &DVector<f64>,
    cons: &DMatrix<f64>,
    b: &DVector<f64>,
    z0: &DVector<f64>,
) -> Result<QpSolution, QpError> {
    let n = z0.len();
    let m = cons.nrows();
    let scale = |i: usize| 1.0 + b[i].abs() + cons.row(i).amax();
    let feas_tol = 1e-10;
    for i in 0..m {
        let excess = cons.row(i).dot(&z0.transpose()) - b[i];
        if excess > feas_tol * scale(i) {
            return Err(QpError::InfeasibleStart { row: i, excess });
        }
    }

    let mut z = z0.clone();
    let mut working: Vec<usize> = Vec::new();
    let max_iter = 50 * (n + m).max(1);
    // Set after an unblocked full step: z is then the working-set minimizer up to roundoff.
    let mut stationary = false;
    for iter in 0..max_iter {
        // Equality-constrained subproblem on the working set.
        let k = working.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(g);
        for (r, &i) in working.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = cons[(i, j)];
                kkt[(j, n + r)] = cons[(i, j)];
            }
        }
        let mut rhs = DVector::zeros(n + k);
        let grad = g * &z + a;
        rhs.rows_mut(0, n).copy_from(&(-&grad));
        let sol = kkt.lu().solve(&rhs).ok_or(QpError::Singular)?;
        let d = sol.rows(0, n).into_owned();
        let mu = sol.rows(n, k).into_owned();

        let d_small = stationary || d.amax() <= 1e-13 * (1.0 + z.amax());
        if d_small {
            // Multipliers λ for Az ≤ b satisfy Gz + a + Aᵀλ = 0, so λ = mu.
            let (most_neg, value) = mu
                .iter()
                .enumerate()
                .fold((None, 0.0), |acc, (r, &v)| if v < acc.1 { (Some(r), v) } else { acc });
            if most_neg.is_none() || value > -1e-12 {
                let mut lambda = DVector::zeros(m);
                for (r, &i) in working.iter().enumerate() {
                    lambda[i] = mu[r].max(0.0);
                }
                return Ok(QpSolution {
                    z,
                    lambda,
                    iterations: iter,
                });
            }
            working.remove(most_neg.unwrap());
            stationary = false;
            continue;
        }

        // Longest feasible step along d.
        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let ad = cons.row(i).dot(&d.transpose());
            if ad > 1e-14 * scale(i) {
                let slack = b[i] - cons.row(i).dot(&z.transpose());
                let step = (slack.max(0.0)) / ad;
                if step < alpha {
                    alpha = step;
                    blocking = Some(i);
                }
            }
        }
        z += &d * alpha;
        stationary = blocking.is_none();
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    Err(QpError::IterationLimit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_minimum() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let a = DVector::from_vec(vec![-1.0, 2.0]);
        let cons = DMatrix::zeros(0, 2);
        let s = solve_qp(&g, &a, &cons, &DVector::zeros(0), &DVector::zeros(2)).unwrap();
        let want = -g.clone().lu().solve(&a).unwrap();
        assert!((s.z - want).amax() < 1e-12);
    }

    #[test]
    fn active_bound_and_multiplier() {
        // min ½(z−3)² s.t. z ≤ 1 → z = 1, λ = 2.
        let g = DMatrix::from_element(1, 1, 1.0);
        let a = DVector::from_element(1, -3.0);
        let cons = DMatrix::from_element(1, 1, 1.0);
        let b = DVector::from_element(1, 1.0);
        let s = solve_qp(&g, &a, &cons, &b, &DVector::zeros(1)).unwrap();
        assert!((s.z[0] - 1.0).abs() < 1e-14);
        assert!((s.lambda[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn drops_constraint_with_negative_multiplier() {
        // Box [0,1]², target (0.2, 2); start at a corner where one bound must be released.
        let g = DMatrix::identity(2, 2);
        let a = DVector::from_vec(vec![-0.2, -2.0]);
        let cons = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let s = solve_qp(&g, &a, &cons, &b, &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((s.z[0] - 0.2).abs() < 1e-12 && (s.z[1] - 1.0).abs() < 1e-12);
        assert!((s.lambda[2] - 1.0).abs() < 1e-12);
        assert_eq!(s.lambda[0], 0.0);
    }

    #[test]
    fn rejects_infeasible_start() {
        let g = DMatrix::identity(1, 1);
        let cons = DMatrix::from_element(1, 1, 1.0);
        let r = solve_qp(
            &g,
            &DVector::zeros(1),
            &cons,
            &DVector::from_element(1, -1.0),
            &DVector::zeros(1),
        );
        assert!(matches!(r, Err(QpError::InfeasibleStart { .. })));
    }
}
