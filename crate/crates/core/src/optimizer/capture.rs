//! Shooting transcription of the lunar-capture problem.
//!
//! From the pre-transition state the spacecraft flies an Earth-VNB transition burn, a coast, and
//! a Moon-VNB capture burn that ends at the next lunar periapsis. The eight design variables are
//! the two (unnormalized) burn directions and the transition-burn and coast durations in days.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::astro::{c3, cart_to_kepler, Body, StateVector, Vec3};
use crate::constants::{MOON_RADIUS, MU_MOON, SECONDS_PER_DAY};
use crate::dynamics::{ForceConfig, ThrustCommand, ThrustFrame};
use crate::maneuver::Spacecraft;
use crate::planner::{plan_capture, CapturePlan};
use crate::propagator::{
    propagate, propagate_to_event, EventKind, EventSpec, PropagationError, Termination, Tolerances, Trajectory,
};

use super::sqp::{solve_sqp_with_callback, Evaluation, IterationRecord, NlpProblem, NlpSolution, SqpOptions};

/// Constraint scales: 0.11 km²/s² for energy, 6000 km for radius, 0.1 for eccentricity.
pub const C3_SCALE: f64 = 0.11;
pub const RADIUS_SCALE: f64 = 6000.0;
pub const ECC_SCALE: f64 = 0.1;
/// Objective unit, kg of propellant.
pub const PROPELLANT_SCALE: f64 = 0.01;

/// Finite-difference steps: dimensionless for directions, 100 s for durations.
pub const DIRECTION_FD_STEP: f64 = 1e-4;
pub const DURATION_FD_STEP_DAYS: f64 = 100.0 / SECONDS_PER_DAY;

const DIRECTION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaptureError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("no lunar periapsis within {0} days of the capture-burn start")]
    NoPerilune(f64),
    #[error("spacecraft impacted the {0}")]
    Impact(Body),
    #[error("warm start: {0}")]
    WarmStart(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureDesign {
    /// Transition-burn direction in Earth VNB, unnormalized.
    pub d_earth: Vec3,
    /// Capture-burn direction in Moon VNB, unnormalized.
    pub d_moon: Vec3,
    /// Transition-burn duration, days.
    pub t_burn: f64,
    /// Coast between the burns, days.
    pub t_coast: f64,
}

impl CaptureDesign {
    pub const SIZE: usize = 8;

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.d_earth.x,
            self.d_earth.y,
            self.d_earth.z,
            self.d_moon.x,
            self.d_moon.y,
            self.d_moon.z,
            self.t_burn,
            self.t_coast,
        ])
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        assert_eq!(x.len(), Self::SIZE);
        Self {
            d_earth: Vec3::new(x[0], x[1], x[2]),
            d_moon: Vec3::new(x[3], x[4], x[5]),
            t_burn: x[6],
            t_coast: x[7],
        }
    }

    /// Both burns off: the ballistic continuation.
    pub fn null() -> Self {
        Self {
            d_earth: Vec3::zeros(),
            d_moon: Vec3::zeros(),
            t_burn: 0.0,
            t_coast: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaptureConstraints {
    /// Moon C3 at most `c3_max` km²/s² and perilune at least `rp_min` km.
    C3Perilune { c3_max: f64, rp_min: f64 },
    /// Osculating lunar eccentricity at most `ecc_max`.
    Eccentricity { ecc_max: f64 },
    /// Eccentricity bound plus semi-major axis at most `sma_max` km (imposed as C3 ≤ −μ/sma_max).
    EccentricitySma { ecc_max: f64, sma_max: f64 },
}

impl Default for CaptureConstraints {
    fn default() -> Self {
        CaptureConstraints::C3Perilune {
            c3_max: -0.11,
            rp_min: 6000.0,
        }
    }
}

impl CaptureConstraints {
    pub fn count(&self) -> usize {
        match self {
            CaptureConstraints::Eccentricity { .. } => 1,
            _ => 2,
        }
    }

    /// Scaled constraint values, feasible when ≤ 0.
    pub fn scaled(&self, r: &ShootingResult) -> DVector<f64> {
        match *self {
            CaptureConstraints::C3Perilune { c3_max, rp_min } => {
                DVector::from_vec(vec![(r.c3 - c3_max) / C3_SCALE, (rp_min - r.rp_min) / RADIUS_SCALE])
            }
            CaptureConstraints::Eccentricity { ecc_max } => DVector::from_vec(vec![(r.ecc - ecc_max) / ECC_SCALE]),
            CaptureConstraints::EccentricitySma { ecc_max, sma_max } => DVector::from_vec(vec![
                (r.ecc - ecc_max) / ECC_SCALE,
                (r.c3 + MU_MOON / sma_max) / C3_SCALE,
            ]),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            CaptureConstraints::C3Perilune { c3_max, rp_min } => format!("C3+RMAG (C3<={c3_max}, rp>={rp_min})"),
            CaptureConstraints::Eccentricity { ecc_max } => format!("ecc<={ecc_max}"),
            CaptureConstraints::EccentricitySma { ecc_max, sma_max } => format!("ecc<={ecc_max}, sma<={sma_max}"),
        }
    }

    /// Eccentricity an impulsive perilune burn should target at radius `rp`.
    pub fn target_eccentricity(&self, rp: f64) -> Option<f64> {
        let e = match *self {
            CaptureConstraints::C3Perilune { c3_max, rp_min } => {
                if rp < rp_min {
                    return None;
                }
                1.0 + c3_max * rp / MU_MOON
            }
            CaptureConstraints::Eccentricity { ecc_max } => ecc_max,
            CaptureConstraints::EccentricitySma { ecc_max, sma_max } => ecc_max.min(1.0 - rp / sma_max),
        };
        (0.0..1.0).contains(&e).then_some(e)
    }
}

/// Everything the shooting function needs besides the design vector.
#[derive(Debug, Clone)]
pub struct CaptureScenario {
    /// State at the start of the transition burn.
    pub start: StateVector,
    pub spacecraft: Spacecraft,
    pub forces: ForceConfig,
    pub tol: Tolerances,
    pub constraints: CaptureConstraints,
    /// Upper bound on the transition-burn duration, days.
    pub t_burn_max: f64,
    /// Upper bound on the coast duration, days.
    pub t_coast_max: f64,
    /// Longest capture burn searched for a periapsis, days.
    pub capture_horizon: f64,
    /// Moon distance inside which a periapsis counts as a perilune, km.
    pub perilune_radius: f64,
}

impl CaptureScenario {
    pub fn new(start: StateVector, spacecraft: Spacecraft, forces: ForceConfig, tol: Tolerances) -> Self {
        Self {
            start,
            spacecraft,
            forces,
            tol,
            constraints: CaptureConstraints::default(),
            t_burn_max: 30.0,
            t_coast_max: 250.0,
            capture_horizon: 120.0,
            perilune_radius: 60_000.0,
        }
    }

    pub fn with_constraints(mut self, constraints: CaptureConstraints) -> Self {
        self.constraints = constraints;
        self
    }

    fn command(&self, frame: ThrustFrame, d: &Vec3) -> ThrustCommand {
        if d.norm() < DIRECTION_EPS {
            ThrustCommand::off()
        } else {
            self.spacecraft.command(frame, *d).expect("non-zero direction")
        }
    }
}

/// Terminal conditions of one shooting run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    /// Moon C3 at the terminal periapsis, km²/s².
    pub c3: f64,
    /// Smallest lunar periapsis radius after the transition burn starts, km.
    pub rp_min: f64,
    /// Propellant used by the transition and capture burns, kg.
    pub propellant: f64,
    /// ΔV of both burns, m/s.
    pub dv: f64,
    pub ecc: f64,
    pub sma: f64,
    /// Moon-centred state at the terminal periapsis.
    pub arrival: Option<StateVector>,
    pub failure: Option<String>,
}

impl ShootingResult {
    fn penalized(reason: String) -> Self {
        Self {
            c3: 10.0,
            rp_min: 0.0,
            propellant: 3.0,
            dv: f64::NAN,
            ecc: 10.0,
            sma: -1.0,
            arrival: None,
            failure: Some(reason),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

fn moon_periapsis() -> EventSpec {
    EventSpec::periapsis(Body::Moon)
}

fn arc(
    state: &StateVector,
    cmd: &ThrustCommand,
    forces: &ForceConfig,
    days: f64,
    tol: &Tolerances,
    label: &str,
) -> Result<Trajectory, CaptureError> {
    let t_end = state.epoch + days.max(0.0) * SECONDS_PER_DAY;
    let out = propagate_to_event(state, cmd, forces, &[moon_periapsis().terminal(false)], t_end, tol)?;
    if let Termination::Impact(b) = out.trajectory.termination {
        return Err(CaptureError::Impact(b));
    }
    Ok(out.trajectory.with_label(label))
}

/// Flies the transition burn, coast and capture burn for design `x`.
pub fn fly_capture(x: &CaptureDesign, sc: &CaptureScenario) -> Result<Trajectory, CaptureError> {
    let transition = sc.command(ThrustFrame::EarthVnb, &x.d_earth);
    let capture = sc.command(ThrustFrame::MoonVnb, &x.d_moon);
    let mut traj = arc(&sc.start, &transition, &sc.forces, x.t_burn, &sc.tol, "transition")?;
    let coast = arc(
        &traj.final_state(),
        &ThrustCommand::off(),
        &sc.forces,
        x.t_coast,
        &sc.tol,
        "coast",
    )?;
    traj.append(coast);
    let t_max = traj.end_epoch() + sc.capture_horizon * SECONDS_PER_DAY;
    let eph = sc.forces.ephemeris.as_ref();
    loop {
        let s = traj.final_state();
        let out = propagate_to_event(&s, &capture, &sc.forces, &[moon_periapsis()], t_max, &sc.tol)?;
        if let Termination::Impact(b) = out.trajectory.termination {
            return Err(CaptureError::Impact(b));
        }
        let Some(hit) = out.hit else {
            return Err(CaptureError::NoPerilune(sc.capture_horizon));
        };
        traj.append(out.trajectory.with_label("capture"));
        let (r, _) = hit
            .state
            .relative_to(Body::Moon, eph)
            .map_err(|err| PropagationError::InvalidRequest(err.to_string()))?;
        // Distant minima of the Moon distance are not perilunes.
        if r.norm() <= sc.perilune_radius {
            return Ok(traj);
        }
        // Step off the root before searching again.
        let s = traj.final_state();
        let t_next = (s.epoch + 3600.0).min(t_max);
        if t_next <= s.epoch {
            return Err(CaptureError::NoPerilune(sc.capture_horizon));
        }
        let out = propagate(&s, &capture, &sc.forces, t_next, &sc.tol)?;
        if let Termination::Impact(b) = out.termination {
            return Err(CaptureError::Impact(b));
        }
        traj.append(out.with_label("capture"));
    }
}

/// Terminal residuals of a flown capture trajectory.
pub fn evaluate_capture(traj: &Trajectory, sc: &CaptureScenario) -> Result<ShootingResult, CaptureError> {
    let eph = sc.forces.ephemeris.as_ref();
    let mut rp_min = f64::INFINITY;
    for e in traj.events_matching(|s| s.kind == EventKind::Periapsis && s.body == Body::Moon) {
        let (r, _) = e
            .state
            .relative_to(Body::Moon, eph)
            .map_err(|err| PropagationError::InvalidRequest(err.to_string()))?;
        if r.norm() <= sc.perilune_radius {
            rp_min = rp_min.min(r.norm());
        }
    }
    let last = traj.final_state();
    let (r, v) = last
        .relative_to(Body::Moon, eph)
        .map_err(|err| PropagationError::InvalidRequest(err.to_string()))?;
    rp_min = rp_min.min(r.norm());
    let (ecc, sma) = match cart_to_kepler(&r, &v, MU_MOON) {
        Ok(el) => (el.ecc, el.sma),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(ShootingResult {
        c3: c3(&r, &v, MU_MOON),
        rp_min,
        propellant: traj.propellant_used(),
        dv: traj.dv_total(),
        ecc,
        sma,
        arrival: Some(StateVector::new(last.epoch, r, v, last.mass, Body::Moon)),
        failure: None,
    })
}

/// Terminal Moon C3, minimum perilune and propellant for design `x`; failures are penalized
/// and flagged rather than propagated.
pub fn shooting_residuals(x: &CaptureDesign, sc: &CaptureScenario) -> ShootingResult {
    match fly_capture(x, sc).and_then(|t| evaluate_capture(&t, sc)) {
        Ok(r) => r,
        Err(e) => ShootingResult::penalized(e.to_string()),
    }
}

pub fn design_bounds(sc: &CaptureScenario) -> (DVector<f64>, DVector<f64>) {
    let lower = DVector::from_vec(vec![-1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 0.0, 0.0]);
    let upper = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, sc.t_burn_max, sc.t_coast_max]);
    (lower, upper)
}

/// The capture NLP: minimum propellant subject to the scenario's capture constraints.
pub fn capture_problem(sc: &CaptureScenario) -> NlpProblem<'_> {
    let (lower, upper) = design_bounds(sc);
    let fd = DVector::from_vec(vec![
        DIRECTION_FD_STEP,
        DIRECTION_FD_STEP,
        DIRECTION_FD_STEP,
        DIRECTION_FD_STEP,
        DIRECTION_FD_STEP,
        DIRECTION_FD_STEP,
        DURATION_FD_STEP_DAYS,
        DURATION_FD_STEP_DAYS,
    ]);
    NlpProblem::new(lower, upper, fd, sc.constraints.count(), move |x| {
        let r = shooting_residuals(&CaptureDesign::from_vector(x), sc);
        r.is_ok().then(|| Evaluation {
            f: r.propellant / PROPELLANT_SCALE,
            c: sc.constraints.scaled(&r),
        })
    })
    .with_scale(DVector::from_vec(design_scale().to_vec()))
}

/// Step scales matched to the sensitivity of the perilune to each variable: the transition burn
/// acts over a months-long coast, the capture burn only over the final approach.
fn design_scale() -> [f64; CaptureDesign::SIZE] {
    [1e-3, 1e-3, 1e-3, 0.1, 0.1, 0.1, 1e-2, 1.0]
}

/// Search grid for the impulsive warm start.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartGrid {
    /// In-plane angles from +V towards +B, deg.
    pub in_plane_deg: Vec<f64>,
    /// Out-of-plane angles towards +N, deg.
    pub out_of_plane_deg: Vec<f64>,
    pub burn_days: Vec<f64>,
    /// Coast searched for lunar encounters after the burn, days.
    pub search_days: f64,
    /// Cheapest impulsive candidates re-ranked by finite-burn shooting.
    pub shortlist: usize,
    /// Capture-burn lead times tried, as fractions of the impulsive-equivalent burn duration.
    pub lead_fractions: Vec<f64>,
}

impl Default for WarmStartGrid {
    fn default() -> Self {
        Self {
            in_plane_deg: (0..24).map(|i| 15.0 * i as f64).collect(),
            out_of_plane_deg: vec![-45.0, 0.0, 45.0],
            burn_days: vec![3.0, 6.0, 10.0, 15.0],
            search_days: 250.0,
            shortlist: 12,
            lead_fractions: vec![1.0, 0.5, 0.25, 0.1],
        }
    }
}

/// Impulsive-capture estimate used to seed the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub design: CaptureDesign,
    pub plan: CapturePlan,
    /// Transition ΔV plus impulsive capture ΔV, m/s.
    pub dv_estimate: f64,
    /// Days from the transition start to the targeted perilune.
    pub perilune_day: f64,
    /// Earliest capture-burn start that still ends at the targeted perilune, days from the
    /// transition start.
    pub earliest_start_day: f64,
}

impl WarmStart {
    /// Same encounter with the capture burn starting `lead_days` before the perilune.
    pub fn with_lead(&self, lead_days: f64) -> Self {
        let start = (self.perilune_day - lead_days).max(self.earliest_start_day);
        let mut w = self.clone();
        w.design.t_coast = start - self.design.t_burn;
        w
    }
}

fn direction(in_plane_deg: f64, out_of_plane_deg: f64) -> Vec3 {
    let (sa, ca) = in_plane_deg.to_radians().sin_cos();
    let (sb, cb) = out_of_plane_deg.to_radians().sin_cos();
    Vec3::new(ca * cb, sb, sa * cb)
}

/// Scans transition burns, plans an impulsive capture at each lunar encounter, and converts the
/// cheapest into a finite-burn design whose capture burn ends at that perilune.
pub fn impulsive_warm_start(sc: &CaptureScenario, grid: &WarmStartGrid) -> Result<WarmStart, CaptureError> {
    let mut cases = Vec::new();
    for &a in &grid.in_plane_deg {
        for &b in &grid.out_of_plane_deg {
            for &d in &grid.burn_days {
                cases.push((a, b, d));
            }
        }
    }
    let scored: Vec<Option<WarmStart>> = cases
        .par_iter()
        .map(|&(a, b, days)| warm_candidate(sc, direction(a, b), days, grid.search_days))
        .collect();
    let mut ranked: Vec<WarmStart> = scored.into_iter().flatten().collect();
    if ranked.is_empty() {
        return Err(CaptureError::WarmStart("no lunar encounter on the search grid".into()));
    }
    ranked.sort_by(|x, y| x.dv_estimate.total_cmp(&y.dv_estimate));
    ranked.truncate(grid.shortlist.max(1));
    // Long finite burns reshape the approach, so the shortlist is re-ranked by actual shooting
    // over a few capture-burn lead times.
    let mut ranked: Vec<WarmStart> = ranked
        .iter()
        .flat_map(|w| {
            let full = w.plan.burn_duration / SECONDS_PER_DAY;
            grid.lead_fractions.iter().map(move |&k| w.with_lead(k * full))
        })
        .collect();
    let shot: Vec<(f64, f64)> = ranked
        .par_iter()
        .map(|w| {
            let r = shooting_residuals(&w.design, sc);
            let viol = sc.constraints.scaled(&r).iter().fold(0.0f64, |m, &c| m.max(c));
            (viol, r.propellant)
        })
        .collect();
    let best = (0..ranked.len())
        .min_by(|&i, &j| shot[i].0.total_cmp(&shot[j].0).then(shot[i].1.total_cmp(&shot[j].1)))
        .expect("non-empty");
    Ok(ranked.swap_remove(best))
}

fn warm_candidate(sc: &CaptureScenario, d_earth: Vec3, burn_days: f64, search_days: f64) -> Option<WarmStart> {
    let cmd = sc.command(ThrustFrame::EarthVnb, &d_earth);
    let burn = arc(&sc.start, &cmd, &sc.forces, burn_days, &sc.tol, "transition").ok()?;
    // Encounters before an eventual impact still count.
    let b = burn.final_state();
    let coast = propagate_to_event(
        &b,
        &ThrustCommand::off(),
        &sc.forces,
        &[moon_periapsis().terminal(false)],
        b.epoch + search_days * SECONDS_PER_DAY,
        &sc.tol,
    )
    .ok()?
    .trajectory;
    let eph = sc.forces.ephemeris.as_ref();
    let t0 = sc.start.epoch;
    let burn_end = burn.end_epoch();
    let mut best: Option<WarmStart> = None;
    let mut previous = burn_end;
    for e in coast.events_matching(|s| s.kind == EventKind::Periapsis && s.body == Body::Moon) {
        let (r, v) = e.state.relative_to(Body::Moon, eph).ok()?;
        let rp = r.norm();
        let energy = c3(&r, &v, MU_MOON);
        let this_epoch = e.epoch();
        let prior = previous;
        previous = this_epoch;
        if rp < MOON_RADIUS + 100.0 || rp > sc.perilune_radius {
            continue;
        }
        let Some(e_target) = sc.constraints.target_eccentricity(rp) else {
            continue;
        };
        // Temporarily bound encounters are the cheap ones; plan them from the perilune speed.
        let plan = if energy > 0.0 {
            let Ok(plan) = plan_capture(rp, energy.sqrt(), e_target, e.state.mass, &sc.spacecraft) else {
                continue;
            };
            plan
        } else {
            let v_p = (energy + 2.0 * MU_MOON / rp).sqrt();
            let dv = ((v_p - ((1.0 + e_target) * MU_MOON / rp).sqrt()) * 1e3).max(0.0);
            CapturePlan {
                rp,
                v_inf: 0.0,
                e_target,
                dv,
                burn_duration: dv * 1e-3 / sc.spacecraft.acceleration(e.state.mass),
                perilune: None,
            }
        };
        let dv = burn.dv_total() + plan.dv;
        // The capture burn must start after the previous periapsis so it ends at this one.
        let start = (this_epoch - plan.burn_duration).max(prior + 3600.0).max(burn_end);
        let design = CaptureDesign {
            d_earth,
            d_moon: Vec3::new(-1.0, 0.0, 0.0),
            t_burn: burn_days,
            t_coast: (start - burn_end) / SECONDS_PER_DAY,
        };
        if best.as_ref().is_none_or(|b| dv < b.dv_estimate) {
            best = Some(WarmStart {
                design,
                plan,
                dv_estimate: dv,
                perilune_day: (this_epoch - t0) / SECONDS_PER_DAY,
                earliest_start_day: ((prior + 3600.0).max(burn_end) - t0) / SECONDS_PER_DAY,
            });
        }
    }
    best
}

/// Multi-start settings for [`optimize_capture`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureOptions {
    pub sqp: SqpOptions,
    /// Number of starts; the first is the unperturbed warm start.
    pub starts: usize,
    pub seed: u64,
    /// Perturbation half-widths: direction components and durations in days.
    pub direction_spread: f64,
    pub duration_spread: f64,
}

impl Default for CaptureOptions {
    fn default() -> Self {
        Self {
            sqp: SqpOptions {
                max_iter: 150,
                tol_kkt: 1e-3,
                tol_con: 1e-3,
                max_step: Some(1.0),
                elastic_limit: 25,
                stall_limit: 20,
            },
            starts: 8,
            seed: 0,
            direction_spread: 0.05,
            duration_spread: 0.5,
        }
    }
}

/// One SQP run of a multi-start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartRun {
    pub x0: DVector<f64>,
    pub solution: NlpSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureOutcome {
    pub design: CaptureDesign,
    pub solution: NlpSolution,
    pub result: ShootingResult,
    /// Index into `runs` of the reported solution.
    pub best: usize,
    pub runs: Vec<StartRun>,
}

impl CaptureOutcome {
    pub fn feasible(&self, tol_con: f64) -> bool {
        self.result.is_ok() && self.solution.max_violation <= tol_con
    }
}

/// Perturbed copies of `x0`; the first is `x0` itself.
pub fn multi_start_points(x0: &DVector<f64>, sc: &CaptureScenario, opts: &CaptureOptions) -> Vec<DVector<f64>> {
    let (lower, upper) = design_bounds(sc);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.starts.max(1))
        .map(|k| {
            let mut x = x0.clone();
            if k > 0 {
                for i in 0..CaptureDesign::SIZE {
                    let w = if i < 6 {
                        opts.direction_spread
                    } else {
                        opts.duration_spread
                    };
                    x[i] += rng.random_range(-w..=w);
                }
            }
            x.zip_zip_map(&lower, &upper, |v, l, u| v.clamp(l, u))
        })
        .collect()
}

/// Minimum-propellant capture from `x0`, keeping the best feasible of the multi-start runs
/// (or the least-violating one when none is feasible).
pub fn optimize_capture(
    sc: &CaptureScenario,
    x0: &CaptureDesign,
    opts: &CaptureOptions,
    log: impl Fn(usize, &IterationRecord) + Sync,
) -> CaptureOutcome {
    optimize_capture_seeded(sc, x0, &[], opts, log)
}

/// As [`optimize_capture`], with `seeds` added unperturbed after the multi-start points.
pub fn optimize_capture_seeded(
    sc: &CaptureScenario,
    x0: &CaptureDesign,
    seeds: &[CaptureDesign],
    opts: &CaptureOptions,
    log: impl Fn(usize, &IterationRecord) + Sync,
) -> CaptureOutcome {
    let problem = capture_problem(sc);
    let (lower, upper) = design_bounds(sc);
    let mut starts = multi_start_points(&x0.to_vector(), sc, opts);
    starts.extend(
        seeds
            .iter()
            .map(|d| d.to_vector().zip_zip_map(&lower, &upper, |v, l, u| v.clamp(l, u))),
    );
    let runs: Vec<StartRun> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, x)| {
            let solution = solve_sqp_with_callback(&problem, &x, &opts.sqp, |rec| log(k, rec));
            StartRun { x0: x, solution }
        })
        .collect();
    let tol = opts.sqp.tol_con;
    let key = |r: &StartRun| {
        let s = &r.solution;
        let feasible = s.f.is_finite() && s.max_violation <= tol;
        (!feasible, if feasible { s.f } else { s.max_violation })
    };
    let best = (0..runs.len())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(&runs[a]), key(&runs[b]));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .expect("at least one start");
    let solution = runs[best].solution.clone();
    let design = CaptureDesign::from_vector(&solution.x);
    let result = shooting_residuals(&design, sc);
    CaptureOutcome {
        design,
        solution,
        result,
        best,
        runs,
    }
}
