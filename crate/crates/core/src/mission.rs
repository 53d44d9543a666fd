//! Mission phase sequencing: uncontrolled baseline, pre-flyby burn, optimized capture,
//! circularization, outcome classification and the capture-constraint trade study.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

use crate::astro::{c3, cart_to_kepler, wrap_deg, Body, Epoch, StateVector, Vec3};
use crate::constants::{G0, MOON_RADIUS, MU_EARTH, MU_MOON, SECONDS_PER_DAY};
use crate::dynamics::{BodySet, DynamicsError, ForceConfig, GravityField, ThrustCommand, ThrustFrame};
use crate::ephemeris::{EphemerisError, EphemerisSource};
use crate::maneuver::Spacecraft;
use crate::optimizer::capture::{
    fly_capture, impulsive_warm_start, optimize_capture_seeded, shooting_residuals, CaptureConstraints, CaptureDesign,
    CaptureError, CaptureOptions, CaptureOutcome, CaptureScenario, ShootingResult, WarmStart, WarmStartGrid,
};
use crate::optimizer::{IterationRecord, SqpOptions, SqpStatus};
use crate::planner::{plan_capture, plan_capture_from_trajectory, PlanError};
use crate::propagator::{
    propagate, propagate_to_event, Direction, EventKind, EventSpec, PropagationError, Termination, Tolerances,
    Trajectory,
};

/// Separation epoch of the reference scenario (read as TDB).
pub const SEPARATION_EPOCH: &str = "2017-12-15T15:00:00";

/// Segment labels, in mission order.
pub const PHASE_LABELS: [&str; 6] = [
    "detumble",
    "phase1",
    "coast",
    "transition",
    "capture",
    "circularization",
];

/// Days of ephemeris cached for a mission run.
const CACHE_SPAN_DAYS: f64 = 900.0;

#[derive(Debug, thiserror::Error)]
pub enum MissionError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Ephemeris(#[from] EphemerisError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error("invalid mission configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("not captured: Moon C3 {c3:.4} km²/s² at the end of the capture burn")]
    NotCaptured { c3: f64 },
}

/// Force-model switches and integration tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSettings {
    pub moon: bool,
    pub sun: bool,
    pub jupiter: bool,
    /// Lunar harmonics degree; 0 keeps the Moon a point mass.
    pub harmonics_degree: usize,
    /// Precision ephemeris table replacing the analytic theory.
    pub ephemeris_table: Option<PathBuf>,
    /// Step of the ephemeris table cached for mission runs, s; 0 disables caching.
    pub ephemeris_cache_step_s: f64,
    /// Relative tolerance for baseline and circularization propagation.
    pub rel_tol: f64,
    /// Relative tolerance inside the optimizer and for the arcs it designs.
    pub inner_rel_tol: f64,
}

impl Default for ForceSettings {
    fn default() -> Self {
        Self {
            moon: true,
            sun: true,
            jupiter: true,
            harmonics_degree: 8,
            ephemeris_table: None,
            ephemeris_cache_step_s: 3600.0,
            rel_tol: 1e-10,
            inner_rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSettings {
    pub detumble_h: f64,
    pub phase1_days: f64,
    /// Coast after Phase 1 before the transition burn may start.
    pub coast_days: f64,
    /// Span of the uncontrolled baseline run.
    pub uncontrolled_days: f64,
    /// Earth distance beyond which an Earth-unbound state counts as escaped, km.
    pub escape_radius_km: f64,
    pub passes: usize,
    pub nu_on_deg: f64,
    pub nu_off_deg: f64,
    /// Circularization stops once the osculating lunar eccentricity drops below this.
    pub ecc_target: f64,
    pub science_ecc: f64,
    /// Revolutions the science-orbit eccentricity must hold.
    pub science_revs: f64,
    /// Post-maneuver coast used by the outcome classification.
    pub classify_days: f64,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        Self {
            detumble_h: 2.0,
            phase1_days: 2.0,
            coast_days: 77.5,
            uncontrolled_days: 30.0,
            escape_radius_km: 1.5e6,
            passes: 400,
            nu_on_deg: 240.0,
            nu_off_deg: 130.0,
            ecc_target: 0.05,
            science_ecc: 0.3,
            science_revs: 5.0,
            classify_days: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub constraints: CaptureConstraints,
    /// C3 bound of the trade study's C3+RMAG cell.
    pub trade_c3_max: f64,
    pub trade_rp_min_km: f64,
    pub trade_sma_max_km: f64,
    pub t_burn_max_days: f64,
    pub t_coast_max_days: f64,
    pub capture_horizon_days: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol_kkt: f64,
    pub tol_con: f64,
    pub max_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let opts = CaptureOptions::default();
        Self {
            constraints: CaptureConstraints::default(),
            trade_c3_max: -0.15,
            trade_rp_min_km: 6000.0,
            trade_sma_max_km: 32_000.0,
            t_burn_max_days: 30.0,
            t_coast_max_days: 250.0,
            capture_horizon_days: 120.0,
            starts: opts.starts,
            seed: opts.seed,
            max_iter: opts.sqp.max_iter,
            tol_kkt: opts.sqp.tol_kkt,
            tol_con: opts.sqp.tol_con,
            max_step: opts.sqp.max_step.unwrap_or(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    /// Resample step of trajectory.csv, s.
    pub step_s: f64,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { step_s: 3600.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub spacecraft: Spacecraft,
    /// Separation state; its mass must equal the spacecraft wet mass.
    pub initial_state: StateVector,
    pub forces: ForceSettings,
    pub phases: PhaseSettings,
    pub optimizer: OptimizerSettings,
    pub output: OutputSettings,
}

impl Default for MissionConfig {
    fn default() -> Self {
        let spacecraft = Spacecraft::default();
        let epoch = Epoch::from_calendar(SEPARATION_EPOCH).expect("valid separation epoch");
        Self {
            initial_state: StateVector::new(
                epoch,
                Vec3::new(-15015.4, -23569.0, 2241.505),
                Vec3::new(-0.48554, -5.04876, -0.87999),
                spacecraft.wet_mass(),
                Body::Earth,
            ),
            spacecraft,
            forces: ForceSettings::default(),
            phases: PhaseSettings::default(),
            optimizer: OptimizerSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), MissionError> {
        let bad = |msg: String| Err(MissionError::Config(msg));
        let sc = &self.spacecraft;
        if !(sc.dry_mass > 0.0 && sc.prop_mass >= 0.0 && sc.thrust_mn >= 0.0 && sc.isp_s > 0.0) {
            return bad("spacecraft masses, thrust and Isp must be positive".into());
        }
        if !(sc.efficiency > 0.0 && sc.efficiency <= 1.0) {
            return bad(format!("efficiency {} outside (0, 1]", sc.efficiency));
        }
        if (self.initial_state.mass - sc.wet_mass()).abs() > 1e-9 {
            return bad(format!(
                "initial mass {} kg differs from wet mass {} kg",
                self.initial_state.mass,
                sc.wet_mass()
            ));
        }
        let p = &self.phases;
        if p.passes < 1 {
            return bad("pass count must be at least 1".into());
        }
        if wrap_deg(p.nu_on_deg) == wrap_deg(p.nu_off_deg) {
            return bad("burn-on and burn-off true anomalies coincide".into());
        }
        for (name, v) in [
            ("detumble_h", p.detumble_h),
            ("phase1_days", p.phase1_days),
            ("coast_days", p.coast_days),
            ("classify_days", p.classify_days),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative"));
            }
        }
        if !(self.forces.rel_tol > 0.0 && self.forces.inner_rel_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.output.step_s > 0.0) {
            return bad("output step must be positive".into());
        }
        let o = &self.optimizer;
        if o.starts < 1 || !(o.max_step > 0.0) || !(o.t_burn_max_days > 0.0) || !(o.t_coast_max_days >= 0.0) {
            return bad("optimizer starts, step limit and duration bounds must be positive".into());
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances::with_rel(self.forces.rel_tol)
    }

    pub fn inner_tolerances(&self) -> Tolerances {
        Tolerances::with_rel(self.forces.inner_rel_tol)
    }

    /// Force model with the configured ephemeris source and no caching.
    pub fn base_forces(&self) -> Result<ForceConfig, MissionError> {
        let f = &self.forces;
        let mut cfg = ForceConfig::default();
        if let Some(path) = &f.ephemeris_table {
            cfg.ephemeris = Arc::new(EphemerisSource::load_table(path)?);
        }
        cfg.bodies = BodySet {
            earth: true,
            moon: f.moon,
            sun: f.sun,
            jupiter: f.jupiter,
        };
        cfg.field = (f.moon && f.harmonics_degree > 0)
            .then(|| Arc::new(GravityField::lunar_default().truncated(f.harmonics_degree)));
        cfg.thrust_limit_mn = cfg.thrust_limit_mn.max(self.spacecraft.effective_thrust_mn());
        Ok(cfg)
    }

    /// Force model for the powered mission, with the analytic ephemeris cached as a table.
    pub fn mission_forces(&self) -> Result<ForceConfig, MissionError> {
        let cfg = self.base_forces()?;
        let step = self.forces.ephemeris_cache_step_s;
        if step <= 0.0 || cfg.ephemeris.is_table() {
            return Ok(cfg);
        }
        let t0 = self.initial_state.epoch;
        Ok(cfg.with_cached_ephemeris(t0 - SECONDS_PER_DAY, t0 + CACHE_SPAN_DAYS * SECONDS_PER_DAY, step)?)
    }

    pub fn capture_options(&self) -> CaptureOptions {
        let o = &self.optimizer;
        CaptureOptions {
            sqp: SqpOptions {
                max_iter: o.max_iter,
                tol_kkt: o.tol_kkt,
                tol_con: o.tol_con,
                max_step: Some(o.max_step),
                ..CaptureOptions::default().sqp
            },
            starts: o.starts,
            seed: o.seed,
            ..CaptureOptions::default()
        }
    }

    /// Days since separation.
    pub fn mission_day(&self, epoch: Epoch) -> f64 {
        (epoch - self.initial_state.epoch) / SECONDS_PER_DAY
    }
}

fn moon_state(s: &StateVector, forces: &ForceConfig) -> Result<(Vec3, Vec3), MissionError> {
    Ok(s.relative_to(Body::Moon, forces.ephemeris.as_ref())?)
}

fn earth_state(s: &StateVector, forces: &ForceConfig) -> Result<(Vec3, Vec3), MissionError> {
    Ok(s.relative_to(Body::Earth, forces.ephemeris.as_ref())?)
}

// ---------------------------------------------------------------------------------------------
// Uncontrolled baseline

#[derive(Debug, Clone, PartialEq)]
pub struct UncontrolledRun {
    pub trajectory: Trajectory,
    /// Minimum lunar altitude, km.
    pub flyby_altitude_km: f64,
    pub flyby_day: f64,
    /// Last Earth-C3 upcrossing of zero before the escape radius is reached.
    pub escape_day: Option<f64>,
}

/// Ballistic propagation of the separation state with the full (uncached) force model.
pub fn run_uncontrolled(cfg: &MissionConfig) -> Result<UncontrolledRun, MissionError> {
    cfg.validate()?;
    let forces = cfg.base_forces()?;
    run_uncontrolled_with(cfg, &forces)
}

pub fn run_uncontrolled_with(cfg: &MissionConfig, forces: &ForceConfig) -> Result<UncontrolledRun, MissionError> {
    let s0 = cfg.initial_state;
    let events = [
        EventSpec::periapsis(Body::Moon).terminal(false),
        EventSpec::c3_cross(Body::Earth, 0.0, Direction::Rising).terminal(false),
        EventSpec::radius_cross(Body::Earth, cfg.phases.escape_radius_km, Direction::Rising),
    ];
    let t_end = s0.epoch + cfg.phases.uncontrolled_days * SECONDS_PER_DAY;
    let out = propagate_to_event(&s0, &ThrustCommand::off(), forces, &events, t_end, &cfg.tolerances())?;
    let traj = out.trajectory.with_label("coast");

    let mut flyby = (f64::INFINITY, s0.epoch);
    for e in traj.events_matching(|s| s.kind == EventKind::Periapsis && s.body == Body::Moon) {
        let r = moon_state(&e.state, forces)?.0.norm();
        if r < flyby.0 {
            flyby = (r, e.epoch());
        }
    }
    for s in &traj.samples {
        let r = moon_state(&s.state, forces)?.0.norm();
        if r < flyby.0 {
            flyby = (r, s.state.epoch);
        }
    }

    // Escaped: Earth-unbound and receding at the escape radius, or at the horizon.
    let end = match &out.hit {
        Some(hit) => hit.state,
        None => traj.final_state(),
    };
    let (r, v) = earth_state(&end, forces)?;
    let escape_day = if c3(&r, &v, MU_EARTH) > 0.0 && r.dot(&v) > 0.0 {
        traj.events_matching(|s| matches!(s.kind, EventKind::C3Cross(_)))
            .filter(|e| e.epoch() <= end.epoch)
            .last()
            .map(|e| cfg.mission_day(e.epoch()))
    } else {
        None
    };

    Ok(UncontrolledRun {
        flyby_altitude_km: flyby.0 - MOON_RADIUS,
        flyby_day: cfg.mission_day(flyby.1),
        escape_day,
        trajectory: traj,
    })
}

/// Impulsive insertion at the baseline flyby for one target eccentricity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulsiveRow {
    pub e_target: f64,
    /// Retrograde impulse at the natural flyby perilune, m/s.
    pub dv_flyby: f64,
    /// Same hyperbolic excess speed with the perilune raised to `raised_rp`, m/s.
    pub dv_raised: f64,
    /// Finite-burn equivalent of `dv_flyby`, days.
    pub burn_days: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveTable {
    pub rp: f64,
    pub v_inf: f64,
    pub raised_rp: f64,
    pub rows: Vec<ImpulsiveRow>,
}

/// Perilune ΔV to reach each eccentricity from the uncontrolled flyby conditions.
pub fn impulsive_table(
    cfg: &MissionConfig,
    baseline: &UncontrolledRun,
    forces: &ForceConfig,
    e_targets: &[f64],
    raised_rp: f64,
) -> Result<ImpulsiveTable, MissionError> {
    let sc = &cfg.spacecraft;
    let mut rows = Vec::with_capacity(e_targets.len());
    let (mut rp, mut v_inf) = (f64::NAN, f64::NAN);
    for &e in e_targets {
        let plan = plan_capture_from_trajectory(&baseline.trajectory, e, sc, forces.ephemeris.as_ref())?;
        let raised = plan_capture(raised_rp, plan.v_inf, e, sc.wet_mass(), sc)?;
        (rp, v_inf) = (plan.rp, plan.v_inf);
        rows.push(ImpulsiveRow {
            e_target: e,
            dv_flyby: plan.dv,
            dv_raised: raised.dv,
            burn_days: plan.burn_duration / SECONDS_PER_DAY,
        });
    }
    Ok(ImpulsiveTable {
        rp,
        v_inf,
        raised_rp,
        rows,
    })
}

// ---------------------------------------------------------------------------------------------
// Phase 1 and the pre-transition coast

fn coast_arc(
    s: &StateVector,
    days: f64,
    forces: &ForceConfig,
    tol: &Tolerances,
    label: &str,
) -> Result<Trajectory, MissionError> {
    let events = [EventSpec::periapsis(Body::Moon).terminal(false)];
    let out = propagate_to_event(
        s,
        &ThrustCommand::off(),
        forces,
        &events,
        s.epoch + days * SECONDS_PER_DAY,
        tol,
    )?;
    Ok(out.trajectory.with_label(label))
}

/// Detumble coast followed by the retrograde Earth-VNB Phase 1 arc.
pub fn run_phase1(cfg: &MissionConfig, forces: &ForceConfig, tol: &Tolerances) -> Result<Trajectory, MissionError> {
    let p = &cfg.phases;
    let mut traj = coast_arc(&cfg.initial_state, p.detumble_h / 24.0, forces, tol, "detumble")?;
    let s = traj.final_state();
    let burn = propagate(
        &s,
        &cfg.spacecraft.retrograde(ThrustFrame::EarthVnb),
        forces,
        s.epoch + p.phase1_days * SECONDS_PER_DAY,
        tol,
    )?;
    traj.append(burn.with_label("phase1"));
    Ok(traj)
}

/// Phase 1 plus the coast up to the transition burn, flown at the optimizer's tolerance.
pub fn run_pre_transition(cfg: &MissionConfig, forces: &ForceConfig) -> Result<Trajectory, MissionError> {
    let tol = cfg.inner_tolerances();
    let mut traj = run_phase1(cfg, forces, &tol)?;
    let coast = coast_arc(&traj.final_state(), cfg.phases.coast_days, forces, &tol, "coast")?;
    traj.append(coast);
    Ok(traj)
}

// ---------------------------------------------------------------------------------------------
// Phase 2

pub fn capture_scenario(
    cfg: &MissionConfig,
    start: StateVector,
    forces: &ForceConfig,
    constraints: CaptureConstraints,
) -> CaptureScenario {
    let o = &cfg.optimizer;
    let mut sc = CaptureScenario::new(start, cfg.spacecraft, forces.clone(), cfg.inner_tolerances())
        .with_constraints(constraints);
    sc.t_burn_max = o.t_burn_max_days;
    sc.t_coast_max = o.t_coast_max_days;
    sc.capture_horizon = o.capture_horizon_days;
    sc
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureRun {
    pub warm_start: WarmStart,
    /// Terminal conditions of the unoptimized warm start.
    pub warm_result: ShootingResult,
    pub outcome: CaptureOutcome,
    /// Transition, coast and capture arcs of the selected design.
    pub trajectory: Trajectory,
    pub tol_con: f64,
}

impl CaptureRun {
    pub fn feasible(&self) -> bool {
        self.outcome.feasible(self.tol_con)
    }
}

/// Warm start, multi-start SQP, and a re-flight of the selected design.
pub fn run_capture(
    cfg: &MissionConfig,
    start: StateVector,
    forces: &ForceConfig,
    constraints: CaptureConstraints,
    log: impl Fn(usize, &IterationRecord) + Sync,
) -> Result<CaptureRun, MissionError> {
    run_capture_seeded(cfg, start, forces, constraints, &[], log)
}

/// As [`run_capture`], with extra unperturbed starting designs.
pub fn run_capture_seeded(
    cfg: &MissionConfig,
    start: StateVector,
    forces: &ForceConfig,
    constraints: CaptureConstraints,
    seeds: &[CaptureDesign],
    log: impl Fn(usize, &IterationRecord) + Sync,
) -> Result<CaptureRun, MissionError> {
    let sc = capture_scenario(cfg, start, forces, constraints);
    let warm_start = impulsive_warm_start(&sc, &WarmStartGrid::default())?;
    let warm_result = shooting_residuals(&warm_start.design, &sc);
    let outcome = optimize_capture_seeded(&sc, &warm_start.design, seeds, &cfg.capture_options(), log);
    let trajectory = fly_capture(&outcome.design, &sc)?;
    Ok(CaptureRun {
        warm_start,
        warm_result,
        outcome,
        trajectory,
        tol_con: cfg.optimizer.tol_con,
    })
}

// ---------------------------------------------------------------------------------------------
// Phase 3

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircularizationStop {
    /// Osculating eccentricity fell below the target.
    EccentricityReached,
    PassLimit,
    PropellantDepleted,
    Impacted,
    /// Orbit became unbound or a true-anomaly crossing was not found.
    LostOrbit,
}

impl fmt::Display for CircularizationStop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CircularizationStop::EccentricityReached => "eccentricity target reached",
            CircularizationStop::PassLimit => "pass limit",
            CircularizationStop::PropellantDepleted => "propellant depleted",
            CircularizationStop::Impacted => "impacted the Moon",
            CircularizationStop::LostOrbit => "lost the lunar orbit",
        })
    }
}

/// Osculating lunar orbit sampled at the start of each pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassSample {
    pub epoch: Epoch,
    pub sma: f64,
    pub ecc: f64,
    pub apoapsis: f64,
    pub periapsis: f64,
    /// True anomaly, deg.
    pub ta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircularizationRun {
    pub trajectory: Trajectory,
    pub passes: usize,
    pub stop: CircularizationStop,
    /// One entry per pass, taken at the burn-on crossing, plus the final state.
    pub revolutions: Vec<PassSample>,
}

impl CircularizationRun {
    pub fn final_ecc(&self) -> f64 {
        self.revolutions.last().map_or(f64::NAN, |p| p.ecc)
    }

    /// Largest relative apoapsis increase between consecutive revolutions.
    pub fn max_apoapsis_rise(&self) -> f64 {
        self.revolutions
            .windows(2)
            .map(|w| (w[1].apoapsis - w[0].apoapsis) / w[0].apoapsis)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn pass_sample(s: &StateVector, forces: &ForceConfig) -> Result<Option<PassSample>, MissionError> {
    let (r, v) = moon_state(s, forces)?;
    let Ok(el) = cart_to_kepler(&r, &v, MU_MOON) else {
        return Ok(None);
    };
    if !(el.ecc < 1.0) {
        return Ok(None);
    }
    Ok(Some(PassSample {
        epoch: s.epoch,
        sma: el.sma,
        ecc: el.ecc,
        apoapsis: el.apoapsis_radius(),
        periapsis: el.periapsis_radius(),
        ta: el.ta,
    }))
}

/// Repeated retrograde Moon-VNB arcs from the burn-on to the burn-off true anomaly.
pub fn run_circularization(
    captured: &StateVector,
    cfg: &MissionConfig,
    forces: &ForceConfig,
) -> Result<CircularizationRun, MissionError> {
    let tol = cfg.tolerances();
    let p = &cfg.phases;
    let sc = &cfg.spacecraft;
    let (r, v) = moon_state(captured, forces)?;
    let energy = c3(&r, &v, MU_MOON);
    if energy >= 0.0 {
        return Err(MissionError::NotCaptured { c3: energy });
    }
    let burn_cmd = sc.retrograde(ThrustFrame::MoonVnb);
    let mdot = sc.effective_thrust_mn() * 1e-3 / (G0 * sc.isp_s);
    let on = EventSpec::true_anomaly(Body::Moon, p.nu_on_deg);
    let off = EventSpec::true_anomaly(Body::Moon, p.nu_off_deg);

    let mut traj = Trajectory::new(*captured, "circularization", ThrustCommand::off());
    let mut revolutions = Vec::new();
    let mut passes = 0;
    let stop = loop {
        let s = traj.final_state();
        let Some(now) = pass_sample(&s, forces)? else {
            break CircularizationStop::LostOrbit;
        };
        if now.ecc < p.ecc_target {
            revolutions.push(now);
            break CircularizationStop::EccentricityReached;
        }
        if passes == p.passes {
            revolutions.push(now);
            break CircularizationStop::PassLimit;
        }
        let period = 2.0 * std::f64::consts::PI * (now.sma.powi(3) / MU_MOON).sqrt();
        let window = 2.0 * period + SECONDS_PER_DAY;

        // A captured state already inside the burn window starts with a partial arc.
        let in_window = passes == 0 && wrap_deg(now.ta - p.nu_on_deg) < wrap_deg(p.nu_off_deg - p.nu_on_deg);
        if in_window {
            revolutions.push(now);
        } else {
            let coast = propagate_to_event(&s, &ThrustCommand::off(), forces, &[on], s.epoch + window, &tol)?;
            let hit = coast.hit.is_some();
            let impacted = matches!(coast.trajectory.termination, Termination::Impact(_));
            traj.append(coast.trajectory.with_label("circularization"));
            if impacted {
                break CircularizationStop::Impacted;
            }
            if !hit {
                break CircularizationStop::LostOrbit;
            }
            match pass_sample(&traj.final_state(), forces)? {
                Some(at_on) => revolutions.push(at_on),
                None => break CircularizationStop::LostOrbit,
            }
        }
        let s = traj.final_state();

        // Stop the arc just short of depletion.
        let burn_left = (s.mass - sc.dry_mass) / mdot * (1.0 - 1e-9);
        if burn_left < 1.0 {
            break CircularizationStop::PropellantDepleted;
        }
        let limited = burn_left < window;
        let burn = propagate_to_event(&s, &burn_cmd, forces, &[off], s.epoch + burn_left.min(window), &tol)?;
        let hit = burn.hit.is_some();
        let impacted = matches!(burn.trajectory.termination, Termination::Impact(_));
        traj.append(burn.trajectory.with_label("circularization"));
        passes += 1;
        if impacted {
            break CircularizationStop::Impacted;
        }
        if !hit {
            break if limited {
                CircularizationStop::PropellantDepleted
            } else {
                CircularizationStop::LostOrbit
            };
        }
    };
    Ok(CircularizationRun {
        trajectory: traj,
        passes,
        stop,
        revolutions,
    })
}

// ---------------------------------------------------------------------------------------------
// Outcome classification

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeClass {
    Captured,
    Escaped,
    Impacted,
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeClass::Captured => "Captured",
            OutcomeClass::Escaped => "Escaped",
            OutcomeClass::Impacted => "Impacted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub class: OutcomeClass,
    /// Moon C3 at the end of the extension, km²/s².
    pub terminal_c3: f64,
    /// Smallest Moon distance after the final burn, km.
    pub min_radius: f64,
    /// End of the extension, or the impact epoch.
    pub epoch: Epoch,
}

/// Classifies the state at the end of `traj` by coasting it for `extension_days`.
///
/// Impacted when the Moon distance reaches the mean radius. Escaped when the Moon C3 is positive at
/// the horizon and the distance is increasing there, or has been since its minimum. Captured otherwise.
pub fn classify_outcome(
    traj: &Trajectory,
    forces: &ForceConfig,
    tol: &Tolerances,
    extension_days: f64,
) -> Result<Outcome, MissionError> {
    let s = traj.final_state();
    let (r_end, _) = moon_state(&s, forces)?;
    if traj.termination == Termination::Impact(Body::Moon) || r_end.norm() <= MOON_RADIUS {
        return Ok(Outcome {
            class: OutcomeClass::Impacted,
            terminal_c3: f64::NAN,
            min_radius: r_end.norm(),
            epoch: s.epoch,
        });
    }
    let events = [EventSpec::periapsis(Body::Moon).terminal(false)];
    let out = propagate_to_event(
        &s,
        &ThrustCommand::off(),
        forces,
        &events,
        s.epoch + extension_days * SECONDS_PER_DAY,
        tol,
    )?;
    let ext = out.trajectory;
    let mut min_radius = r_end.norm();
    for e in &ext.events {
        min_radius = min_radius.min(moon_state(&e.state, forces)?.0.norm());
    }
    for smp in &ext.samples {
        min_radius = min_radius.min(moon_state(&smp.state, forces)?.0.norm());
    }
    let last = ext.final_state();
    let (r, v) = moon_state(&last, forces)?;
    let terminal_c3 = c3(&r, &v, MU_MOON);
    let class = if matches!(ext.termination, Termination::Impact(Body::Moon)) || min_radius <= MOON_RADIUS {
        OutcomeClass::Impacted
    } else if terminal_c3 > 0.0 && (r.dot(&v) > 0.0 || r.norm() > min_radius) {
        OutcomeClass::Escaped
    } else {
        OutcomeClass::Captured
    };
    Ok(Outcome {
        class,
        terminal_c3,
        min_radius,
        epoch: last.epoch,
    })
}

// ---------------------------------------------------------------------------------------------
// Full mission

#[derive(Debug, Clone, PartialEq)]
pub struct MissionRun {
    pub trajectory: Trajectory,
    pub capture: CaptureRun,
    pub circularization: Option<CircularizationRun>,
    /// Index of the first sample after the pre-transition coast.
    pub transition_start: Epoch,
}

/// Phase 1, optimized capture and (if captured) circularization.
pub fn run_mission(
    cfg: &MissionConfig,
    circularize: bool,
    log: impl Fn(usize, &IterationRecord) + Sync,
) -> Result<MissionRun, MissionError> {
    cfg.validate()?;
    let forces = cfg.mission_forces()?;
    let mut traj = run_pre_transition(cfg, &forces)?;
    let start = traj.final_state();
    let capture = run_capture(cfg, start, &forces, cfg.optimizer.constraints, log)?;
    traj.append(capture.trajectory.clone());
    let circularization = if circularize {
        let c = run_circularization(&traj.final_state(), cfg, &forces)?;
        traj.append(c.trajectory.clone());
        Some(c)
    } else {
        None
    };
    Ok(MissionRun {
        trajectory: traj,
        capture,
        circularization,
        transition_start: start.epoch,
    })
}

/// Whether segment labels appear in mission order (repeats allowed, no going back).
pub fn phase_order_ok(traj: &Trajectory) -> bool {
    let mut rank = 0;
    for seg in &traj.segments {
        let Some(r) = PHASE_LABELS.iter().position(|l| *l == seg.label) else {
            return false;
        };
        // The pre-transition coast and the inter-burn coast share a label.
        if r < rank && !(seg.label == "coast" && rank <= 3) {
            return false;
        }
        rank = rank.max(r);
    }
    traj.samples.windows(2).all(|w| w[0].state.epoch < w[1].state.epoch)
}

// ---------------------------------------------------------------------------------------------
// Trade study

#[derive(Debug, Clone, PartialEq)]
pub struct TradeCell {
    pub family: &'static str,
    pub value: String,
    pub constraints: CaptureConstraints,
    pub satisfied: bool,
    pub status: Option<SqpStatus>,
    pub result: Option<ShootingResult>,
    pub design: Option<CaptureDesign>,
    /// `None` when no feasible design was found.
    pub outcome: Option<Outcome>,
    /// How Phase 3 ended, when the capture left a bound orbit.
    pub circularization: Option<CircularizationStop>,
    pub error: Option<String>,
}

impl TradeCell {
    pub fn avoids_escape(&self) -> Option<bool> {
        self.outcome.map(|o| o.class != OutcomeClass::Escaped)
    }

    /// Undefined for escaping trajectories, which never return to the Moon.
    pub fn avoids_crash(&self) -> Option<bool> {
        self.outcome
            .filter(|o| o.class != OutcomeClass::Escaped)
            .map(|o| o.class != OutcomeClass::Impacted)
    }
}

/// The seven constraint formulations compared by the trade study.
pub fn trade_cells(cfg: &MissionConfig) -> Vec<(&'static str, String, CaptureConstraints)> {
    let o = &cfg.optimizer;
    let mut cells = Vec::new();
    for e in [0.5, 0.6, 0.7] {
        cells.push(("ecc", format!("{e}"), CaptureConstraints::Eccentricity { ecc_max: e }));
    }
    for e in [0.5, 0.6, 0.7] {
        cells.push((
            "ecc+sma",
            format!("{e}"),
            CaptureConstraints::EccentricitySma {
                ecc_max: e,
                sma_max: o.trade_sma_max_km,
            },
        ));
    }
    cells.push((
        "c3+rmag",
        format!("{} km2/s2, {} km", o.trade_c3_max, o.trade_rp_min_km),
        CaptureConstraints::C3Perilune {
            c3_max: o.trade_c3_max,
            rp_min: o.trade_rp_min_km,
        },
    ));
    cells
}

/// Circularizes a captured trajectory, then classifies the result.
fn classify_after_circularization(
    cfg: &MissionConfig,
    mut traj: Trajectory,
    forces: &ForceConfig,
    tol: &Tolerances,
) -> Result<(Outcome, Option<CircularizationStop>), MissionError> {
    let stop = match run_circularization(&traj.final_state(), cfg, forces) {
        Ok(c) => {
            traj.append(c.trajectory);
            Some(c.stop)
        }
        Err(MissionError::NotCaptured { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((classify_outcome(&traj, forces, tol, cfg.phases.classify_days)?, stop))
}

/// Optimizes, circularizes and classifies every trade cell from the common pre-transition state.
pub fn run_trade_study(cfg: &MissionConfig) -> Result<Vec<TradeCell>, MissionError> {
    cfg.validate()?;
    let forces = cfg.mission_forces()?;
    let pre = run_pre_transition(cfg, &forces)?;
    let start = pre.final_state();
    let tol = cfg.inner_tolerances();
    // The baseline optimum seeds every cell as a continuation start.
    let baseline = run_capture(cfg, start, &forces, cfg.optimizer.constraints, |_, _| {})?;
    let seeds = [baseline.outcome.design];
    let cells = trade_cells(cfg);
    Ok(cells
        .into_par_iter()
        .map(|(family, value, constraints)| {
            let mut cell = TradeCell {
                family,
                value,
                constraints,
                satisfied: false,
                status: None,
                result: None,
                design: None,
                outcome: None,
                circularization: None,
                error: None,
            };
            match run_capture_seeded(cfg, start, &forces, constraints, &seeds, |_, _| {}) {
                Ok(run) => {
                    cell.satisfied = run.feasible();
                    cell.status = Some(run.outcome.solution.status);
                    cell.result = Some(run.outcome.result.clone());
                    cell.design = Some(run.outcome.design);
                    if cell.satisfied {
                        match classify_after_circularization(cfg, run.trajectory, &forces, &tol) {
                            Ok((o, stop)) => {
                                cell.outcome = Some(o);
                                cell.circularization = stop;
                            }
                            Err(e) => cell.error = Some(e.to_string()),
                        }
                    }
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect())
}

// ---------------------------------------------------------------------------------------------
// Milestones

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub label: &'static str,
    pub start_day: f64,
    pub end_day: f64,
    pub dv: f64,
    /// Thrust-on time, days.
    pub thrust_days: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilestoneReport {
    /// Start of the final uninterrupted stretch with Moon C3 < 0.
    pub capture_day: Option<f64>,
    pub science_day: Option<f64>,
    pub science_ecc: f64,
    pub science_revs: f64,
    pub near_circular_day: Option<f64>,
    pub near_circular_ecc: f64,
    /// Osculating lunar orbit at the end of the capture burn.
    pub post_capture_ecc: Option<f64>,
    pub post_capture_sma: Option<f64>,
    pub phases: Vec<PhaseSummary>,
    pub total_dv: f64,
    pub propellant: f64,
    pub thrust_days: f64,
    pub end_day: f64,
}

/// Phase groups: Phase 1, Phase 2 (transition and capture), Phase 3.
const PHASE_GROUPS: [(&str, &[&str]); 3] = [
    ("phase1", &["phase1"]),
    ("phase2", &["transition", "capture"]),
    ("phase3", &["circularization"]),
];

pub fn milestone_report(
    traj: &Trajectory,
    cfg: &MissionConfig,
    forces: &ForceConfig,
) -> Result<MilestoneReport, MissionError> {
    let p = &cfg.phases;
    let t0 = cfg.initial_state.epoch;
    let day = |e: Epoch| (e - t0) / SECONDS_PER_DAY;
    let n = traj.samples.len();
    let mut c3s = Vec::with_capacity(n);
    let mut elements = Vec::with_capacity(n);
    for smp in &traj.samples {
        let (r, v) = moon_state(&smp.state, forces)?;
        c3s.push(c3(&r, &v, MU_MOON));
        elements.push(cart_to_kepler(&r, &v, MU_MOON).ok());
    }
    let ecc = |i: usize| elements[i].map_or(f64::INFINITY, |e| e.ecc);

    let capture_day = {
        let mut i = n;
        while i > 0 && c3s[i - 1] < 0.0 {
            i -= 1;
        }
        (i < n && i + 1 < n).then(|| day(traj.samples[i].state.epoch))
    };

    // next_bad[i]: first index ≥ i whose eccentricity is not below the science threshold.
    let mut next_bad = vec![n; n + 1];
    for i in (0..n).rev() {
        next_bad[i] = if ecc(i) < p.science_ecc { next_bad[i + 1] } else { i };
    }
    let end = traj.end_epoch();
    let science_day = (0..n).find_map(|i| {
        let el = elements[i]?;
        if el.ecc >= p.science_ecc {
            return None;
        }
        let hold = p.science_revs * el.period();
        let until = traj.samples[i].state.epoch + hold;
        let ok = if next_bad[i] < n {
            traj.samples[next_bad[i]].state.epoch > until
        } else {
            end >= until
        };
        ok.then(|| day(traj.samples[i].state.epoch))
    });
    let near_circular_day = (0..n)
        .find(|&i| ecc(i) < p.ecc_target)
        .map(|i| day(traj.samples[i].state.epoch));

    let capture_end = traj
        .samples
        .iter()
        .rposition(|s| traj.segments[s.segment].label == "capture");
    let (post_capture_ecc, post_capture_sma) = match capture_end.and_then(|i| elements[i]) {
        Some(el) => (Some(el.ecc), Some(el.sma)),
        None => (None, None),
    };

    let mut phases = Vec::new();
    for (name, labels) in PHASE_GROUPS {
        let mut dv = 0.0;
        let mut thrust = 0.0;
        let mut span: Option<(Epoch, Epoch)> = None;
        for w in traj.samples.windows(2) {
            let seg = &traj.segments[w[1].segment];
            if !labels.contains(&seg.label.as_str()) {
                continue;
            }
            dv += w[1].dv - w[0].dv;
            if seg.cmd.on {
                thrust += w[1].state.epoch - w[0].state.epoch;
            }
            span = Some(match span {
                None => (w[0].state.epoch, w[1].state.epoch),
                Some((a, _)) => (a, w[1].state.epoch),
            });
        }
        if let Some((a, b)) = span {
            phases.push(PhaseSummary {
                label: name,
                start_day: day(a),
                end_day: day(b),
                dv,
                thrust_days: thrust / SECONDS_PER_DAY,
            });
        }
    }

    Ok(MilestoneReport {
        capture_day,
        science_day,
        science_ecc: p.science_ecc,
        science_revs: p.science_revs,
        near_circular_day,
        near_circular_ecc: p.ecc_target,
        post_capture_ecc,
        post_capture_sma,
        phases,
        total_dv: traj.dv_total(),
        propellant: traj.propellant_used(),
        thrust_days: traj.thrust_time() / SECONDS_PER_DAY,
        end_day: day(end),
    })
}

impl MilestoneReport {
    pub fn phase_dv(&self, label: &str) -> f64 {
        self.phases.iter().filter(|p| p.label == label).map(|p| p.dv).sum()
    }
}
