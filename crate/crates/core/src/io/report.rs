//! Text reports: optimizer solution, mission milestones, trade verdicts, iteration log.

use std::fmt::Write as _;

use crate::mission::{
    CaptureRun, CircularizationRun, ImpulsiveTable, MilestoneReport, MissionConfig, Outcome, TradeCell, UncontrolledRun,
};
use crate::optimizer::capture::CaptureDesign;
use crate::optimizer::IterationRecord;

use super::output::fmt_sig;

fn opt_day(d: Option<f64>) -> String {
    d.map_or_else(|| "not reached".to_string(), |d| format!("day {d:.2}"))
}

fn design_lines(out: &mut String, d: &CaptureDesign) {
    let v = |x: &crate::astro::Vec3| format!("{} {} {}", fmt_sig(x.x), fmt_sig(x.y), fmt_sig(x.z));
    let _ = writeln!(out, "d_earth_vnb = {}", v(&d.d_earth));
    let _ = writeln!(out, "d_moon_vnb = {}", v(&d.d_moon));
    let _ = writeln!(out, "t_burn_days = {}", fmt_sig(d.t_burn));
    let _ = writeln!(out, "t_coast_days = {}", fmt_sig(d.t_coast));
}

/// Optimizer result. Contains no timings, so reruns are byte-identical.
pub fn solution_text(run: &CaptureRun, cfg: &MissionConfig) -> String {
    let o = &run.outcome;
    let s = &o.solution;
    let r = &o.result;
    let mut out = String::new();
    let _ = writeln!(out, "# capture optimization");
    let _ = writeln!(out, "constraints = {}", cfg.optimizer.constraints.label());
    let _ = writeln!(out, "status = {}", s.status);
    let _ = writeln!(out, "feasible = {}", run.feasible());
    let _ = writeln!(out, "iterations = {}", s.iterations);
    let _ = writeln!(out, "objective_scaled = {}", fmt_sig(s.f));
    let _ = writeln!(out, "max_violation = {}", fmt_sig(s.max_violation));
    let _ = writeln!(out, "kkt = {}", fmt_sig(s.kkt));
    let _ = writeln!(out, "best_start = {} of {}", o.best, o.runs.len());
    let _ = writeln!(out, "\n# design");
    design_lines(&mut out, &o.design);
    let _ = writeln!(out, "\n# terminal conditions");
    let _ = writeln!(out, "c3_moon_km2s2 = {}", fmt_sig(r.c3));
    let _ = writeln!(out, "rp_min_km = {}", fmt_sig(r.rp_min));
    let _ = writeln!(out, "ecc_moon = {}", fmt_sig(r.ecc));
    let _ = writeln!(out, "sma_moon_km = {}", fmt_sig(r.sma));
    let _ = writeln!(out, "dv_ms = {}", fmt_sig(r.dv));
    let _ = writeln!(out, "propellant_kg = {}", fmt_sig(r.propellant));
    if let Some(f) = &r.failure {
        let _ = writeln!(out, "failure = {f}");
    }
    let _ = writeln!(out, "\n# warm start");
    design_lines(&mut out, &run.warm_start.design);
    let _ = writeln!(out, "warm_c3_moon_km2s2 = {}", fmt_sig(run.warm_result.c3));
    let _ = writeln!(out, "warm_rp_min_km = {}", fmt_sig(run.warm_result.rp_min));
    let _ = writeln!(out, "\n# starts");
    for (k, st) in o.runs.iter().enumerate() {
        let _ = writeln!(
            out,
            "start {k}: status {} iterations {} objective {} violation {}",
            st.solution.status,
            st.solution.iterations,
            fmt_sig(st.solution.f),
            fmt_sig(st.solution.max_violation)
        );
    }
    out
}

/// `iter f viol step kkt`, one block per start.
pub fn iterations_log(run: &CaptureRun) -> String {
    let mut out = String::new();
    for (k, st) in run.outcome.runs.iter().enumerate() {
        let _ = writeln!(out, "# start {k}");
        let _ = writeln!(out, "iter f viol step kkt");
        for rec in &st.solution.history {
            out.push_str(&iteration_line(rec));
        }
    }
    out
}

pub fn iteration_line(rec: &IterationRecord) -> String {
    format!(
        "{} {} {} {} {}\n",
        rec.iter,
        fmt_sig(rec.f),
        fmt_sig(rec.viol),
        fmt_sig(rec.step),
        fmt_sig(rec.kkt)
    )
}

pub fn uncontrolled_text(u: &UncontrolledRun) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# uncontrolled baseline");
    let _ = writeln!(out, "flyby_altitude_km = {:.1}", u.flyby_altitude_km);
    let _ = writeln!(out, "flyby_day = {:.3}", u.flyby_day);
    match u.escape_day {
        Some(d) => {
            let _ = writeln!(out, "escape_day = {d:.3}");
        }
        None => {
            let _ = writeln!(out, "escape_day = none");
        }
    }
    out
}

pub fn circularization_text(c: &CircularizationRun) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# circularization");
    let _ = writeln!(out, "passes = {}", c.passes);
    let _ = writeln!(out, "stop = {}", c.stop);
    let _ = writeln!(out, "final_ecc = {:.5}", c.final_ecc());
    if let Some(last) = c.revolutions.last() {
        let _ = writeln!(out, "final_sma_km = {:.1}", last.sma);
        let _ = writeln!(out, "final_periapsis_km = {:.1}", last.periapsis);
        let _ = writeln!(out, "final_apoapsis_km = {:.1}", last.apoapsis);
    }
    let _ = writeln!(out, "max_apoapsis_rise = {:.3e}", c.max_apoapsis_rise());
    let _ = writeln!(out, "dv_ms = {:.1}", c.trajectory.dv_total());
    out
}

pub fn outcome_text(o: &Outcome) -> String {
    format!(
        "# outcome\nclass = {}\nterminal_c3_moon_km2s2 = {:.5}\nmin_moon_radius_km = {:.1}\n",
        o.class, o.terminal_c3, o.min_radius
    )
}

/// Mission milestones and the ΔV budget.
pub fn milestone_text(m: &MilestoneReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# milestones");
    let _ = writeln!(out, "capture (Moon C3 < 0, sustained): {}", opt_day(m.capture_day));
    let _ = writeln!(
        out,
        "science orbit (ecc < {} over {} revolutions): {}",
        m.science_ecc,
        m.science_revs,
        opt_day(m.science_day)
    );
    let _ = writeln!(
        out,
        "near-circular (ecc < {}): {}",
        m.near_circular_ecc,
        opt_day(m.near_circular_day)
    );
    if let (Some(e), Some(a)) = (m.post_capture_ecc, m.post_capture_sma) {
        let _ = writeln!(out, "post-capture orbit: ecc {e:.4}, sma {a:.1} km");
    }
    let _ = writeln!(out, "\n# phases");
    let _ = writeln!(out, "phase    start_day  end_day  window_days  thrust_days  dv_ms");
    for p in &m.phases {
        let _ = writeln!(
            out,
            "{:<8} {:>9.2} {:>8.2} {:>12.2} {:>12.2} {:>6.1}",
            p.label,
            p.start_day,
            p.end_day,
            p.end_day - p.start_day,
            p.thrust_days,
            p.dv
        );
    }
    let window: f64 = m.phases.iter().map(|p| p.end_day - p.start_day).sum();
    let _ = writeln!(out, "total dv_ms = {:.1}", m.total_dv);
    let _ = writeln!(out, "phase window days = {window:.2}");
    let _ = writeln!(out, "thrust-on days = {:.2}", m.thrust_days);
    let _ = writeln!(out, "propellant_kg = {:.4}", m.propellant);
    let _ = writeln!(out, "end day = {:.2}", m.end_day);
    out
}

/// Verdict table: one column per constraint formulation.
pub fn trade_csv(cells: &[TradeCell]) -> String {
    let yes_no = |b: Option<bool>| match b {
        Some(true) => "Yes",
        Some(false) => "No",
        None => "--",
    };
    let mut out = String::from("verdict");
    for c in cells {
        let _ = write!(out, ",{} {}", c.family, c.value);
    }
    out.push('\n');
    out.push_str("constraint satisfaction");
    for c in cells {
        out.push(',');
        out.push_str(if c.satisfied { "Yes" } else { "no feasible solution" });
    }
    out.push('\n');
    out.push_str("avoid escape");
    for c in cells {
        let _ = write!(out, ",{}", yes_no(c.avoids_escape()));
    }
    out.push('\n');
    out.push_str("avoid lunar crash");
    for c in cells {
        let _ = write!(out, ",{}", yes_no(c.avoids_crash()));
    }
    out.push('\n');
    out
}

/// Per-cell detail accompanying the verdict table.
pub fn trade_text(cells: &[TradeCell]) -> String {
    let mut out = String::from("# trade study\n");
    for c in cells {
        let _ = write!(out, "{} {}: ", c.family, c.value);
        match (&c.status, &c.result) {
            (Some(st), Some(r)) => {
                let _ = write!(
                    out,
                    "status {st}, satisfied {}, c3 {:.4}, rp_min {:.0} km, ecc {:.4}",
                    c.satisfied, r.c3, r.rp_min, r.ecc
                );
            }
            _ => out.push_str("no solution"),
        }
        if let Some(o) = &c.outcome {
            let _ = write!(out, ", outcome {} (min radius {:.0} km)", o.class, o.min_radius);
        }
        if let Some(e) = &c.error {
            let _ = write!(out, ", error: {e}");
        }
        out.push('\n');
    }
    out
}

pub fn impulsive_text(t: &ImpulsiveTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# impulsive insertion");
    let _ = writeln!(
        out,
        "flyby perilune radius = {:.1} km, v_inf = {:.4} km/s",
        t.rp, t.v_inf
    );
    let _ = writeln!(out, "e_target  dv_flyby_ms  dv_rp{:.0}_ms  burn_days", t.raised_rp);
    for r in &t.rows {
        let _ = writeln!(
            out,
            "{:>8.2} {:>12.1} {:>12.1} {:>10.2}",
            r.e_target, r.dv_flyby, r.dv_raised, r.burn_days
        );
    }
    out
}
