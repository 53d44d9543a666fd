//! Acceptance suite: one PASS/FAIL line per mission-level criterion.
//!
//! Runs without the libtest harness so the verdict table is always printed. Criteria that
//! depend on mission-scale numbers report honestly and do not fail the process; the
//! library invariants (property suites, determinism, table monotonicity) do.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cislunar_core::astro::{cart_to_kepler, kepler_to_cart, Body, Epoch, KeplerianElements, StateVector, Vec3};
use cislunar_core::constants::{G0, MOON_RADIUS, MU_EARTH, MU_MOON};
use cislunar_core::dynamics::{accel_point_mass, ForceConfig, GravityField, ThrustCommand, ThrustFrame};
use cislunar_core::io::{report::solution_text, trajectory_csv};
use cislunar_core::maneuver::Spacecraft;
use cislunar_core::mission::{
    impulsive_table, run_capture, run_circularization, run_pre_transition, run_trade_study, run_uncontrolled,
    CircularizationStop, MissionConfig, OutcomeClass,
};
use cislunar_core::optimizer::{fd_jacobian, solve_sqp, Evaluation, NlpProblem, SqpOptions, SqpStatus};
use cislunar_core::propagator::{propagate, propagate_to_event, EventSpec, Tolerances};

struct Verdicts {
    lines: Vec<(bool, String)>,
}

impl Verdicts {
    fn record(&mut self, pass: bool, name: &str, detail: String) {
        let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }
}

fn within(x: f64, target: f64, frac: f64) -> bool {
    (x - target).abs() <= frac * target.abs()
}

fn main() {
    let mut v = Verdicts { lines: Vec::new() };
    let props = property_suites();
    let monotone = baseline_and_impulsive(&mut v);
    let deterministic = capture_and_circularization(&mut v);
    trade(&mut v);
    v.record(
        props.iter().all(|(ok, _)| *ok),
        "property suites",
        props
            .iter()
            .map(|(ok, s)| format!("{s} [{}]", if *ok { "ok" } else { "bad" }))
            .collect::<Vec<_>>()
            .join("; "),
    );
    v.record(
        deterministic,
        "determinism",
        "two optimize runs, solution text and trajectory CSV compared byte for byte".into(),
    );

    let passed = v.lines.iter().filter(|(p, _)| *p).count();
    println!("\nacceptance: {passed} of {} criteria pass", v.lines.len());
    assert!(props.iter().all(|(ok, _)| *ok), "property suites failed");
    assert!(deterministic, "optimize runs are not reproducible");
    assert!(monotone, "impulsive table is not strictly decreasing");
}

// ---------------------------------------------------------------------------------------------

fn baseline_and_impulsive(v: &mut Verdicts) -> bool {
    let cfg = MissionConfig::default();
    let clock = Instant::now();
    let u = run_uncontrolled(&cfg).expect("uncontrolled run");
    let secs = clock.elapsed().as_secs_f64();
    let esc = u.escape_day.unwrap_or(f64::NAN);
    v.record(
        (u.flyby_altitude_km - 1300.0).abs() <= 300.0 && (esc - 4.2).abs() <= 0.5 && secs < 5.0,
        "uncontrolled baseline",
        format!(
            "flyby altitude {:.1} km (1300 +/- 300), escape day {esc:.3} (4.2 +/- 0.5), runtime {secs:.2} s (< 5)",
            u.flyby_altitude_km
        ),
    );

    let forces = cfg.base_forces().expect("forces");
    let expected = [977.8, 793.7, 639.3, 497.5, 364.5];
    let table = impulsive_table(&cfg, &u, &forces, &[0.0, 0.2, 0.4, 0.6, 0.8], 6000.0).expect("impulsive table");
    let dv: Vec<f64> = table.rows.iter().map(|r| r.dv_flyby).collect();
    let monotone = dv.windows(2).all(|w| w[1] < w[0]);
    let close = dv.iter().zip(expected).all(|(d, e)| within(*d, e, 0.15));
    let cells: Vec<String> = dv.iter().zip(expected).map(|(d, e)| format!("{d:.1}/{e}")).collect();
    v.record(
        close && monotone,
        "impulsive table",
        format!(
            "rp {:.1} km, v_inf {:.4} km/s; dv/expected m/s {} (+/- 15%); strictly decreasing {monotone}",
            table.rp,
            table.v_inf,
            cells.join(", ")
        ),
    );
    monotone
}

fn capture_and_circularization(v: &mut Verdicts) -> bool {
    let cfg = MissionConfig::default();
    let forces = cfg.mission_forces().expect("forces");
    let t0 = cfg.initial_state.epoch;

    let optimize = || {
        let mut traj = run_pre_transition(&cfg, &forces).expect("pre-transition");
        let phase1_dv = traj.dv_total();
        let cap =
            run_capture(&cfg, traj.final_state(), &forces, cfg.optimizer.constraints, |_, _| {}).expect("capture");
        traj.append(cap.trajectory.clone());
        let csv = trajectory_csv(&traj, &forces, t0, cfg.output.step_s).expect("csv");
        (traj, cap, phase1_dv, csv)
    };
    let (traj, cap, phase1_dv, csv_a) = optimize();
    let r = &cap.outcome.result;
    let early_dv = phase1_dv + cap.trajectory.dv_total();
    let feasible = cap.outcome.feasible(1e-3);
    v.record(
        feasible && r.c3 <= -0.11 + 1e-3 && r.rp_min >= 6000.0 * (1.0 - 1e-3) && within(early_dv, 180.0, 0.25),
        "optimized capture",
        format!(
            "status {}, Moon C3 {:.5} km2/s2 (<= -0.11), perilune {:.0} km (>= 6000), feasible at 1e-3 {feasible}; \
             phases 1-2 dv {early_dv:.1} m/s (180 +/- 25%)",
            cap.outcome.solution.status, r.c3, r.rp_min
        ),
    );

    let clock = Instant::now();
    let circ = run_circularization(&traj.final_state(), &cfg, &forces).expect("circularization");
    let secs = clock.elapsed().as_secs_f64();
    let dv3 = circ.trajectory.dv_total();
    let total = traj.dv_total() + dv3;
    let rise = circ.max_apoapsis_rise();
    let reached = circ.stop == CircularizationStop::EccentricityReached && circ.final_ecc() < 0.05;
    v.record(
        reached && within(dv3, 530.0, 0.2) && rise <= 0.0 && within(total, 710.0, 0.2) && total <= 930.0 && secs < 900.0,
        "circularization",
        format!(
            "{} after {} passes, ecc {:.4} (< 0.05); phase 3 dv {dv3:.1} m/s (530 +/- 20%); largest relative apoapsis rise {rise:.3} (<= 0); \
             total dv {total:.1} m/s (710 +/- 20%, <= 930); runtime {secs:.2} s (< 900)",
            circ.stop,
            circ.passes,
            circ.final_ecc()
        ),
    );

    let (_, cap_b, _, csv_b) = optimize();
    solution_text(&cap, &cfg) == solution_text(&cap_b, &cfg) && csv_a == csv_b
}

fn trade(v: &mut Verdicts) {
    let mut cfg = MissionConfig::default();
    cfg.forces.rel_tol = cfg.forces.inner_rel_tol;
    let clock = Instant::now();
    let cells = run_trade_study(&cfg).expect("trade study");
    let secs = clock.elapsed().as_secs_f64();
    let expected = [
        OutcomeClass::Escaped,
        OutcomeClass::Escaped,
        OutcomeClass::Impacted,
        OutcomeClass::Impacted,
        OutcomeClass::Impacted,
        OutcomeClass::Impacted,
        OutcomeClass::Captured,
    ];
    let mut all = cells.len() == expected.len();
    let mut detail = Vec::new();
    for (c, want) in cells.iter().zip(expected) {
        let got = c.outcome.map(|o| o.class);
        let ok = c.satisfied && got == Some(want);
        all &= ok;
        let got = got.map_or_else(|| "no feasible solution".to_string(), |g| g.to_string());
        detail.push(format!("{} {} {got}/{want}", c.family, c.value));
    }
    v.record(
        all && secs < 1800.0,
        "trade study",
        format!("got/expected {}; runtime {secs:.0} s (< 1800)", detail.join(", ")),
    );
}

// ---------------------------------------------------------------------------------------------

fn property_suites() -> Vec<(bool, String)> {
    vec![
        element_round_trip(),
        two_body_invariants(),
        harmonics_limits(),
        rocket_equation(),
        sqp_oracles(),
        richardson(),
        event_bracket(),
    ]
}

fn element_round_trip() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let el = KeplerianElements::new(
            rng.random_range(2_000.0..80_000.0),
            rng.random_range(0.001..0.95),
            rng.random_range(0.5..179.5),
            rng.random_range(0.0..360.0),
            rng.random_range(0.0..360.0),
            rng.random_range(0.0..360.0),
            MU_MOON,
        );
        let (r, v) = kepler_to_cart(&el).expect("elements to state");
        let back = cart_to_kepler(&r, &v, MU_MOON).expect("state to elements");
        let (r2, v2) = kepler_to_cart(&back).expect("elements to state");
        worst = worst.max((r2 - r).norm() / r.norm()).max((v2 - v).norm() / v.norm());
    }
    (
        worst < 1e-9,
        format!("element round trip worst {worst:.1e} over 10000 states"),
    )
}

fn two_body_invariants() -> (bool, String) {
    let el = KeplerianElements::new(20_000.0, 0.6, 28.0, 40.0, 70.0, 0.0, MU_EARTH);
    let (r, v) = kepler_to_cart(&el).expect("state");
    let s = StateVector::new(Epoch::J2000, r, v, 12.0, Body::Earth);
    let orbits = 10.0;
    let traj = propagate(
        &s,
        &ThrustCommand::off(),
        &ForceConfig::two_body(),
        s.epoch + orbits * el.period(),
        &Tolerances::with_rel(1e-12),
    )
    .expect("propagation");
    let f = traj.final_state();
    let energy = |r: &Vec3, v: &Vec3| 0.5 * v.norm_squared() - MU_EARTH / r.norm();
    let de = ((energy(&f.r, &f.v) - energy(&r, &v)) / energy(&r, &v)).abs() / orbits;
    let h0 = r.cross(&v);
    let dh = (f.r.cross(&f.v) - h0).norm() / h0.norm() / orbits;
    (
        de < 1e-10 && dh < 1e-10,
        format!("two-body drift per orbit energy {de:.1e}, momentum {dh:.1e}"),
    )
}

fn sample_points() -> Vec<Vec3> {
    (0..10)
        .map(|k| {
            let t = f64::from(k);
            let dir = Vec3::new((1.3 * t).cos(), (0.7 * t + 0.4).sin(), (2.1 * t - 1.0).sin());
            dir.normalize() * (1_800.0 + 900.0 * t)
        })
        .collect()
}

fn harmonics_limits() -> (bool, String) {
    let point = GravityField::point_mass(MU_MOON, MOON_RADIUS);
    let c20 = -9.0881e-5;
    let zeros = vec![vec![0.0], vec![0.0; 2], vec![0.0; 3]];
    let mut c_bar = zeros.clone();
    c_bar[2][0] = c20;
    let j2_field = GravityField::new(MU_MOON, MOON_RADIUS, c_bar, zeros).expect("field");
    let j2 = -5f64.sqrt() * c20;
    let (mut e0, mut e2): (f64, f64) = (0.0, 0.0);
    for r in sample_points() {
        let b = accel_point_mass(&r, MU_MOON).expect("point mass");
        e0 = e0.max((point.acceleration_body_fixed(&r) - b).norm() / b.norm());
        let rn = r.norm();
        let k = -1.5 * j2 * MU_MOON * MOON_RADIUS.powi(2) / rn.powi(5);
        let zz = 5.0 * r.z * r.z / (rn * rn);
        let want = Vec3::new(k * r.x * (1.0 - zz), k * r.y * (1.0 - zz), k * r.z * (3.0 - zz));
        e2 = e2.max((j2_field.perturbation_body_fixed(&r) - want).norm() / want.norm());
    }
    (
        e0 <= 1e-14 && e2 <= 1e-12,
        format!("harmonics N=0 {e0:.1e}, N=2 vs J2 {e2:.1e}"),
    )
}

fn rocket_equation() -> (bool, String) {
    let sc = Spacecraft::default();
    let a = 30_000.0;
    let s = StateVector::new(
        Epoch::from_seconds(566_622_000.0),
        Vec3::new(a, 0.0, 0.0),
        Vec3::new(0.0, (MU_EARTH / a).sqrt(), 0.0),
        sc.wet_mass(),
        Body::Earth,
    );
    let traj = propagate(
        &s,
        &sc.retrograde(ThrustFrame::EarthVnb),
        &ForceConfig::two_body(),
        s.epoch + 5.0 * 86_400.0,
        &Tolerances::default(),
    )
    .expect("propagation");
    let m1 = traj.final_state().mass;
    let ideal = G0 * sc.isp_s * (sc.wet_mass() / m1).ln();
    let err = (traj.dv_total() / ideal - 1.0).abs();
    (err < 1e-10, format!("rocket equation vs integrated {err:.1e}"))
}

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn sqp_oracles() -> (bool, String) {
    let inf = f64::INFINITY;
    let rosen = NlpProblem::new(dv(&[-inf, -inf]), dv(&[inf, inf]), dv(&[1e-6, 1e-6]), 0, |x| {
        Some(Evaluation {
            f: 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            c: DVector::zeros(0),
        })
    });
    let s1 = solve_sqp(
        &rosen,
        &dv(&[-1.2, 1.0]),
        &SqpOptions {
            tol_kkt: 1e-8,
            ..SqpOptions::default()
        },
    );
    let ok1 = s1.status == SqpStatus::Converged && (s1.x[0] - 1.0).abs() < 1e-6 && (s1.x[1] - 1.0).abs() < 1e-6;

    let circle = NlpProblem::new(dv(&[-inf, -inf]), dv(&[inf, inf]), dv(&[1e-6, 1e-6]), 1, |x| {
        Some(Evaluation {
            f: -x[0] - x[1],
            c: dv(&[x[0] * x[0] + x[1] * x[1] - 1.0]),
        })
    });
    let opts = SqpOptions {
        tol_kkt: 1e-9,
        tol_con: 1e-10,
        ..SqpOptions::default()
    };
    let s2 = solve_sqp(&circle, &dv(&[0.1, -0.3]), &opts);
    let h = 0.5f64.sqrt();
    let ok2 = s2.status == SqpStatus::Converged && (s2.x[0] - h).abs() < 1e-6 && (s2.x[1] - h).abs() < 1e-6;

    let line = NlpProblem::new(dv(&[-10.0]), dv(&[10.0]), dv(&[1e-6]), 1, |x| {
        Some(Evaluation {
            f: (x[0] - 3.0).powi(2),
            c: dv(&[x[0] - 1.0]),
        })
    });
    let s3 = solve_sqp(&line, &dv(&[-2.0]), &SqpOptions::default());
    let ok3 = s3.status == SqpStatus::Converged && (s3.x[0] - 1.0).abs() < 1e-8 && (s3.lambda[0] - 4.0).abs() < 1e-5;
    (
        ok1 && ok2 && ok3,
        format!("SQP oracles rosenbrock {ok1}, circle {ok2}, active bound {ok3}"),
    )
}

fn richardson() -> (bool, String) {
    let f = |x: &DVector<f64>| Some(dv(&[(x[0] * x[1]).sin(), x[0].exp() * x[1]]));
    let x = dv(&[0.4, 1.3]);
    let c = (0.52f64).cos();
    let exact = DMatrix::from_row_slice(2, 2, &[1.3 * c, 0.4 * c, 0.4f64.exp() * 1.3, 0.4f64.exp()]);
    let err = |h: f64| (fd_jacobian(&f, &x, &DVector::from_element(2, h)).expect("jacobian") - &exact).amax();
    let ratio = err(1e-2) / err(2.5e-3);
    (
        (12.0..20.0).contains(&ratio),
        format!("fd Jacobian error ratio at quarter step {ratio:.2} (16)"),
    )
}

fn event_bracket() -> (bool, String) {
    let el = KeplerianElements::new(20_000.0, 0.5, 10.0, 20.0, 30.0, 180.0, MU_EARTH);
    let (r, v) = kepler_to_cart(&el).expect("state");
    let s = StateVector::new(Epoch::J2000, r, v, 12.0, Body::Earth);
    let out = propagate_to_event(
        &s,
        &ThrustCommand::off(),
        &ForceConfig::two_body(),
        &[EventSpec::periapsis(Body::Earth)],
        Epoch::J2000 + el.period(),
        &Tolerances::with_rel(1e-12),
    )
    .expect("propagation");
    let err = out
        .hit
        .map_or(f64::INFINITY, |h| (h.epoch() - Epoch::J2000 - 0.5 * el.period()).abs());
    (err < 1e-3, format!("periapsis event time error {err:.1e} s"))
}
