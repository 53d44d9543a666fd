//! Trajectory and event tables.

use std::fmt::Write as _;

use crate::astro::{c3, cart_to_kepler, Body, Epoch};
use crate::constants::{MOON_RADIUS, MU_EARTH, MU_MOON, SECONDS_PER_DAY};
use crate::dynamics::ForceConfig;
use crate::propagator::{resample, Trajectory};

use super::IoError;

pub const TRAJECTORY_HEADER: &str = "t_days,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms,mass_kg,center,thrust_on,\
sma_moon_km,ecc_moon,inc_moon_deg,c3_moon_km2s2,r_earth_km,r_moon_km,dv_cum_ms";

pub const EVENTS_HEADER: &str = "t_days,event,center,x_km,y_km,z_km,vx_kms,vy_kms,vz_kms,mass_kg,\
r_earth_km,r_moon_km,alt_moon_km,c3_earth_km2s2,c3_moon_km2s2,dv_cum_ms";

/// Twelve significant digits, plain decimal where that stays readable.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..12).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn center_name(b: Body) -> &'static str {
    match b {
        Body::Earth => "earth",
        Body::Moon => "moon",
        Body::Sun => "sun",
        Body::Jupiter => "jupiter",
    }
}

/// Resamples `traj` every `step` seconds and renders one row per sample. Times are days since `t0`.
pub fn trajectory_csv(traj: &Trajectory, forces: &ForceConfig, t0: Epoch, step: f64) -> Result<String, IoError> {
    let grid = resample(traj, step, forces)?;
    let eph = forces.ephemeris.as_ref();
    let mut out = String::with_capacity(grid.samples.len() * 220);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for smp in &grid.samples {
        let s = &smp.state;
        let (rm, vm) = s.relative_to(Body::Moon, eph)?;
        let (re, _) = s.relative_to(Body::Earth, eph)?;
        let (sma, ecc, inc) = match cart_to_kepler(&rm, &vm, MU_MOON) {
            Ok(el) => (el.sma, el.ecc, el.inc),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        let thrust = grid.segments[smp.segment].cmd.on;
        let cols = [
            fmt_sig((s.epoch - t0) / SECONDS_PER_DAY),
            fmt_sig(s.r.x),
            fmt_sig(s.r.y),
            fmt_sig(s.r.z),
            fmt_sig(s.v.x),
            fmt_sig(s.v.y),
            fmt_sig(s.v.z),
            fmt_sig(s.mass),
            center_name(s.center).to_string(),
            u8::from(thrust).to_string(),
            fmt_sig(sma),
            fmt_sig(ecc),
            fmt_sig(inc),
            fmt_sig(c3(&rm, &vm, MU_MOON)),
            fmt_sig(re.norm()),
            fmt_sig(rm.norm()),
            fmt_sig(smp.dv),
        ];
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// One row per logged event, in time order.
pub fn events_csv(traj: &Trajectory, forces: &ForceConfig, t0: Epoch) -> Result<String, IoError> {
    let eph = forces.ephemeris.as_ref();
    let mut out = String::new();
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for e in &traj.events {
        let s = &e.state;
        let (rm, vm) = s.relative_to(Body::Moon, eph)?;
        let (re, ve) = s.relative_to(Body::Earth, eph)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig((s.epoch - t0) / SECONDS_PER_DAY),
            e.spec.name(),
            center_name(s.center),
            fmt_sig(s.r.x),
            fmt_sig(s.r.y),
            fmt_sig(s.r.z),
            fmt_sig(s.v.x),
            fmt_sig(s.v.y),
            fmt_sig(s.v.z),
            fmt_sig(s.mass),
            fmt_sig(re.norm()),
            fmt_sig(rm.norm()),
            fmt_sig(rm.norm() - MOON_RADIUS),
            fmt_sig(c3(&re, &ve, MU_EARTH)),
            fmt_sig(c3(&rm, &vm, MU_MOON)),
            fmt_sig(e.dv),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-15015.4), "-15015.4");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456.7890123456), "123456.789012");
        assert_eq!(fmt_sig(2.5e-7), "2.50000000000e-7");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(f64::NAN), "nan");
        for x in [1.234567890123e5, -3.3e-3, 0.999999999999951, 7.0e13] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x} {}", fmt_sig(x));
        }
    }
}
