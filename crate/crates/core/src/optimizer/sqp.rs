use nalgebra::{DMatrix, DVector};

use super::fd::fd_jacobian_bounded;
use super::qp::solve_qp;

/// Objective and constraint values at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub f: f64,
    /// Inequality constraints, feasible when ≤ 0.
    pub c: DVector<f64>,
}

type EvalFn<'a> = dyn Fn(&DVector<f64>) -> Option<Evaluation> + Sync + 'a;

/// `min f(x)` subject to `c(x) ≤ 0` and `lower ≤ x ≤ upper`.
pub struct NlpProblem<'a> {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// Finite-difference step per variable.
    pub fd_step: DVector<f64>,
    pub constraint_count: usize,
    /// Typical magnitude of a worthwhile step per variable. The solver works in `x / scale`.
    pub scale: DVector<f64>,
    /// Returns `None` when the model cannot be evaluated at `x`.
    pub eval: Box<EvalFn<'a>>,
}

impl<'a> NlpProblem<'a> {
    pub fn new(
        lower: DVector<f64>,
        upper: DVector<f64>,
        fd_step: DVector<f64>,
        constraint_count: usize,
        eval: impl Fn(&DVector<f64>) -> Option<Evaluation> + Sync + 'a,
    ) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert_eq!(lower.len(), fd_step.len());
        assert!(
            lower.iter().zip(upper.iter()).all(|(l, u)| l <= u),
            "lower bound above upper bound"
        );
        let scale = DVector::from_element(lower.len(), 1.0);
        Self {
            lower,
            upper,
            fd_step,
            constraint_count,
            scale,
            eval: Box::new(eval),
        }
    }

    pub fn with_scale(mut self, scale: DVector<f64>) -> Self {
        assert_eq!(scale.len(), self.lower.len());
        assert!(scale.iter().all(|&v| v > 0.0), "scales must be positive");
        self.scale = scale;
        self
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x.zip_zip_map(&self.lower, &self.upper, |v, l, u| v.clamp(l, u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqpOptions {
    pub max_iter: usize,
    pub tol_kkt: f64,
    pub tol_con: f64,
    /// Largest per-variable step the QP may take, if any. The working limit shrinks after short
    /// line-search steps and grows back after full ones.
    pub max_step: Option<f64>,
    /// Consecutive elastic iterations tolerated before declaring infeasibility.
    pub elastic_limit: usize,
    /// Feasible iterations without a relative objective decrease of 1e-8 before stopping as
    /// stalled.
    pub stall_limit: usize,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_kkt: 1e-6,
            tol_con: 1e-6,
            max_step: None,
            elastic_limit: 25,
            stall_limit: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqpStatus {
    Converged,
    MaxIter,
    LineSearchFailure,
    Infeasible,
    /// Feasible, but the objective stopped decreasing before the KKT test passed.
    Stalled,
}

impl std::fmt::Display for SqpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SqpStatus::Converged => "Converged",
            SqpStatus::MaxIter => "MaxIter",
            SqpStatus::LineSearchFailure => "LineSearchFailure",
            SqpStatus::Infeasible => "Infeasible",
            SqpStatus::Stalled => "Stalled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub f: f64,
    pub viol: f64,
    /// Accepted line-search fraction.
    pub step: f64,
    pub kkt: f64,
    pub merit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpSolution {
    pub x: DVector<f64>,
    pub f: f64,
    pub c: DVector<f64>,
    pub max_violation: f64,
    pub iterations: usize,
    pub status: SqpStatus,
    /// Constraint multipliers from the last QP.
    pub lambda: DVector<f64>,
    /// Multipliers of the active variable bounds (upper positive, lower negative).
    pub bound_multipliers: DVector<f64>,
    pub kkt: f64,
    pub history: Vec<IterationRecord>,
}

fn violation(c: &DVector<f64>) -> f64 {
    c.iter().fold(0.0f64, |acc, &v| acc.max(v))
}

fn l1_violation(c: &DVector<f64>) -> f64 {
    c.iter().map(|v| v.max(0.0)).sum()
}

struct Linearization {
    eval: Evaluation,
    grad: DVector<f64>,
    jac: DMatrix<f64>,
}

fn linearize(p: &NlpProblem<'_>, x: &DVector<f64>) -> Option<Linearization> {
    let eval = (p.eval)(x)?;
    let m = p.constraint_count;
    let stacked = |xs: &DVector<f64>| {
        (p.eval)(xs).map(|e| {
            let mut v = DVector::zeros(m + 1);
            v[0] = e.f;
            v.rows_mut(1, m).copy_from(&e.c);
            v
        })
    };
    let j = fd_jacobian_bounded(&stacked, x, &p.fd_step, &p.lower, &p.upper)?;
    Some(Linearization {
        eval,
        grad: j.row(0).transpose(),
        jac: j.rows(1, m).into_owned(),
    })
}

struct Subproblem {
    p: DVector<f64>,
    lambda: DVector<f64>,
    bound_mult: DVector<f64>,
    slack: f64,
}

/// Elastic QP: min ½pᵀBp + gᵀp + ρΣt s.t. Jp + c ≤ t, t ≥ 0, box limits on p.
fn solve_subproblem(
    b: &DMatrix<f64>,
    lin: &Linearization,
    x: &DVector<f64>,
    prob: &NlpProblem<'_>,
    radius: f64,
    rho: f64,
) -> Option<Subproblem> {
    let n = x.len();
    let m = prob.constraint_count;
    let nz = n + m;
    let mut g = DMatrix::zeros(nz, nz);
    g.view_mut((0, 0), (n, n)).copy_from(b);
    for i in 0..m {
        g[(n + i, n + i)] = 1e-8;
    }
    let mut a = DVector::zeros(nz);
    a.rows_mut(0, n).copy_from(&lin.grad);
    for i in 0..m {
        a[n + i] = rho;
    }

    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..m {
        let mut r = DVector::zeros(nz);
        r.rows_mut(0, n).copy_from(&lin.jac.row(i).transpose());
        r[n + i] = -1.0;
        rows.push((r, -lin.eval.c[i]));
    }
    for i in 0..m {
        let mut r = DVector::zeros(nz);
        r[n + i] = -1.0;
        rows.push((r, 0.0));
    }
    // Box rows: (variable, sign, bound-from-problem?).
    let mut box_rows = Vec::new();
    for j in 0..n {
        let lim = radius;
        let up = prob.upper[j] - x[j];
        let lo = x[j] - prob.lower[j];
        if up.min(lim).is_finite() {
            let mut r = DVector::zeros(nz);
            r[j] = 1.0;
            box_rows.push((j, 1.0, up <= lim));
            rows.push((r, up.min(lim)));
        }
        if lo.min(lim).is_finite() {
            let mut r = DVector::zeros(nz);
            r[j] = -1.0;
            box_rows.push((j, -1.0, lo <= lim));
            rows.push((r, lo.min(lim)));
        }
    }
    let cons = DMatrix::from_fn(rows.len(), nz, |i, j| rows[i].0[j]);
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let mut z0 = DVector::zeros(nz);
    for i in 0..m {
        z0[n + i] = lin.eval.c[i].max(0.0);
    }
    let sol = solve_qp(&g, &a, &cons, &rhs, &z0).ok()?;
    let mut bound_mult = DVector::zeros(n);
    for (k, &(j, sign, is_bound)) in box_rows.iter().enumerate() {
        if is_bound {
            bound_mult[j] += sign * sol.lambda[2 * m + k];
        }
    }
    let slack = (0..m).map(|i| sol.z[n + i].max(0.0)).sum();
    Some(Subproblem {
        p: sol.z.rows(0, n).into_owned(),
        lambda: sol.lambda.rows(0, m).into_owned(),
        bound_mult,
        slack,
    })
}

fn lagrangian_gradient(lin: &Linearization, lambda: &DVector<f64>) -> DVector<f64> {
    &lin.grad + lin.jac.transpose() * lambda
}

/// Stationarity and complementarity residual at the current linearization.
fn kkt_residual(lin: &Linearization, sub: &Subproblem) -> f64 {
    let stat = (lagrangian_gradient(lin, &sub.lambda) + &sub.bound_mult).amax();
    let comp = lin
        .eval
        .c
        .iter()
        .zip(sub.lambda.iter())
        .fold(0.0f64, |acc, (c, l)| acc.max((c * l).abs()));
    stat.max(comp)
}

/// Damped BFGS update keeping `b` positive definite.
fn bfgs_update(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return;
    }
    let candidate = &*b + &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
    if candidate.clone().cholesky().is_some() {
        *b = candidate;
    } else {
        *b = DMatrix::identity(b.nrows(), b.ncols());
    }
}

/// Dense SQP with finite-difference derivatives, damped BFGS, an elastic active-set QP and an
/// ℓ1 merit backtracking line search.
pub fn solve_sqp(prob: &NlpProblem<'_>, x0: &DVector<f64>, opts: &SqpOptions) -> NlpSolution {
    solve_sqp_with_callback(prob, x0, opts, |_| {})
}

/// As [`solve_sqp`], reporting each accepted iterate to `on_iter`. KKT residuals and step limits
/// refer to the scaled variables.
pub fn solve_sqp_with_callback(
    prob: &NlpProblem<'_>,
    x0: &DVector<f64>,
    opts: &SqpOptions,
    on_iter: impl FnMut(&IterationRecord),
) -> NlpSolution {
    if prob.scale.iter().all(|&v| v == 1.0) {
        return solve_unscaled(prob, x0, opts, on_iter);
    }
    let s = &prob.scale;
    let scaled = NlpProblem {
        lower: prob.lower.component_div(s),
        upper: prob.upper.component_div(s),
        fd_step: prob.fd_step.component_div(s),
        constraint_count: prob.constraint_count,
        scale: DVector::from_element(s.len(), 1.0),
        eval: Box::new(|xh: &DVector<f64>| (prob.eval)(&xh.component_mul(s))),
    };
    let mut sol = solve_unscaled(&scaled, &x0.component_div(s), opts, on_iter);
    sol.x.component_mul_assign(s);
    sol.bound_multipliers.component_div_assign(s);
    sol
}

fn solve_unscaled(
    prob: &NlpProblem<'_>,
    x0: &DVector<f64>,
    opts: &SqpOptions,
    mut on_iter: impl FnMut(&IterationRecord),
) -> NlpSolution {
    let n = prob.dimension();
    let m = prob.constraint_count;
    let mut x = prob.project(x0);
    let mut history = Vec::new();
    let fail = |x: DVector<f64>, status, history| NlpSolution {
        x,
        f: f64::NAN,
        c: DVector::from_element(m, f64::NAN),
        max_violation: f64::INFINITY,
        iterations: 0,
        status,
        lambda: DVector::zeros(m),
        bound_multipliers: DVector::zeros(n),
        kkt: f64::INFINITY,
        history,
    };
    let Some(mut lin) = linearize(prob, &x) else {
        return fail(x, SqpStatus::Infeasible, history);
    };
    let mut b = DMatrix::identity(n, n);
    let mut rho_merit = 1.0;
    let rho_elastic = 1e4;
    let mut elastic_run = 0;
    let mut last_lambda = DVector::zeros(m);
    let mut last_bounds = DVector::zeros(n);
    let mut kkt = f64::INFINITY;
    let mut status = SqpStatus::MaxIter;
    let mut iterations = 0;

    let max_radius = opts.max_step.unwrap_or(f64::INFINITY);
    let mut radius = max_radius;
    let mut stall_ref = f64::INFINITY;
    let mut stall_run = 0;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let sub = match solve_subproblem(&b, &lin, &x, prob, radius, rho_elastic) {
            Some(sub) => sub,
            None => {
                b = DMatrix::identity(n, n);
                match solve_subproblem(&b, &lin, &x, prob, radius, rho_elastic) {
                    Some(sub) => sub,
                    None => {
                        status = SqpStatus::Infeasible;
                        break;
                    }
                }
            }
        };
        kkt = kkt_residual(&lin, &sub);
        last_lambda = sub.lambda.clone();
        last_bounds = sub.bound_mult.clone();
        let viol = violation(&lin.eval.c);
        let small_step = sub.p.amax() <= 1e-12 * (1.0 + x.amax());
        if viol <= opts.tol_con && (kkt <= opts.tol_kkt || small_step && kkt <= 10.0 * opts.tol_kkt) {
            status = SqpStatus::Converged;
            let rec = IterationRecord {
                iter,
                f: lin.eval.f,
                viol,
                step: 0.0,
                kkt,
                merit: lin.eval.f + rho_merit * l1_violation(&lin.eval.c),
            };
            on_iter(&rec);
            history.push(rec);
            break;
        }
        let step_len = sub.p.amax();
        // Elastic steps cut short by the step limit are not evidence of infeasibility.
        if sub.slack > 1e-9 && step_len < 0.99 * radius {
            elastic_run += 1;
            if elastic_run >= opts.elastic_limit {
                status = SqpStatus::Infeasible;
                break;
            }
        } else {
            elastic_run = 0;
        }

        rho_merit = f64::max(rho_merit, 1.1 * sub.lambda.amax() + 1e-3);
        let merit = |e: &Evaluation| e.f + rho_merit * l1_violation(&e.c);
        let phi0 = merit(&lin.eval);
        let lin_viol: f64 = (&lin.jac * &sub.p + &lin.eval.c).iter().map(|v| v.max(0.0)).sum();
        let dphi = lin.grad.dot(&sub.p) + rho_merit * (lin_viol - l1_violation(&lin.eval.c));
        let descent = dphi.min(-1e-16);

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= 1e-6 {
            let xt = prob.project(&(&x + &sub.p * alpha));
            if let Some(e) = (prob.eval)(&xt) {
                if merit(&e) <= phi0 + 1e-4 * alpha * descent {
                    accepted = Some(xt);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(x_new) = accepted else {
            radius = 0.1 * step_len;
            if radius <= 1e-10 * (1.0 + x.amax()) {
                status = SqpStatus::LineSearchFailure;
                break;
            }
            continue;
        };
        if alpha < 1.0 {
            radius = alpha * step_len;
        } else if step_len >= 0.99 * radius {
            radius = (2.0 * radius).min(max_radius);
        }
        let Some(lin_new) = linearize(prob, &x_new) else {
            status = SqpStatus::LineSearchFailure;
            break;
        };
        let s = &x_new - &x;
        let y = lagrangian_gradient(&lin_new, &sub.lambda) - lagrangian_gradient(&lin, &sub.lambda);
        bfgs_update(&mut b, &s, &y);
        debug_assert!(b.clone().cholesky().is_some());
        x = x_new;
        lin = lin_new;
        let rec = IterationRecord {
            iter,
            f: lin.eval.f,
            viol: violation(&lin.eval.c),
            step: alpha,
            kkt,
            merit: merit(&lin.eval),
        };
        on_iter(&rec);
        history.push(rec);
        iterations = iter + 1;
        if rec.viol <= opts.tol_con {
            if !stall_ref.is_finite() || rec.f < stall_ref - 1e-8 * (1.0 + stall_ref.abs()) {
                stall_ref = rec.f;
                stall_run = 0;
            } else {
                stall_run += 1;
                if stall_run >= opts.stall_limit {
                    status = SqpStatus::Stalled;
                    break;
                }
            }
        }
    }

    NlpSolution {
        max_violation: violation(&lin.eval.c),
        f: lin.eval.f,
        c: lin.eval.c.clone(),
        x,
        iterations,
        status,
        lambda: last_lambda,
        bound_multipliers: last_bounds,
        kkt,
        history,
    }
}
