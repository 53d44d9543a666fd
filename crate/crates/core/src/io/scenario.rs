//! Flat `section.key = value` scenario files.
//!
//! Every physical quantity carries its unit in the key name (`thrust_mN`, `coast_days`).
//! Missing keys keep their defaults, so an empty file yields the reference mission.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::astro::{Body, Epoch};
use crate::mission::{MissionConfig, MissionError};
use crate::optimizer::capture::CaptureConstraints;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `section.key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` has the wrong unit; expected `{expected}`")]
    UnitMismatch { line: usize, key: String, expected: String },
    #[error("line {line}: invalid value {value:?} for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error(transparent)]
    Invalid(#[from] MissionError),
}

/// Unit suffixes recognised when diagnosing a mismatched key.
const UNITS: &[&str] = &[
    "kg", "g", "mN", "N", "s", "h", "days", "km", "m", "kms", "ms", "deg", "rad", "km2s2", "j2000_s",
];

/// Key with its unit suffix removed; the longest known suffix wins.
fn stem(key: &str) -> &str {
    UNITS
        .iter()
        .filter_map(|u| key.strip_suffix(u).and_then(|k| k.strip_suffix('_')))
        .min_by_key(|k| k.len())
        .unwrap_or(key)
}

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "spacecraft.dry_mass_kg",
    "spacecraft.prop_mass_kg",
    "spacecraft.thrust_mN",
    "spacecraft.isp_s",
    "spacecraft.efficiency",
    "initial_state.epoch",
    "initial_state.epoch_j2000_s",
    "initial_state.center",
    "initial_state.x_km",
    "initial_state.y_km",
    "initial_state.z_km",
    "initial_state.vx_kms",
    "initial_state.vy_kms",
    "initial_state.vz_kms",
    "forces.moon",
    "forces.sun",
    "forces.jupiter",
    "forces.harmonics_degree",
    "forces.ephemeris_table",
    "forces.ephemeris_cache_step_s",
    "forces.rel_tol",
    "forces.inner_rel_tol",
    "phases.detumble_h",
    "phases.phase1_days",
    "phases.coast_days",
    "phases.uncontrolled_days",
    "phases.escape_radius_km",
    "phases.passes",
    "phases.nu_on_deg",
    "phases.nu_off_deg",
    "phases.ecc_target",
    "phases.science_ecc",
    "phases.science_revs",
    "phases.classify_days",
    "optimizer.constraint",
    "optimizer.c3_max_km2s2",
    "optimizer.rp_min_km",
    "optimizer.ecc_max",
    "optimizer.sma_max_km",
    "optimizer.trade_c3_max_km2s2",
    "optimizer.trade_rp_min_km",
    "optimizer.trade_sma_max_km",
    "optimizer.t_burn_max_days",
    "optimizer.t_coast_max_days",
    "optimizer.capture_horizon_days",
    "optimizer.starts",
    "optimizer.seed",
    "optimizer.max_iter",
    "optimizer.tol_kkt",
    "optimizer.tol_con",
    "optimizer.max_step",
    "output.step_s",
];

/// Constraint parameters gathered before the variant is known.
struct ConstraintKeys {
    kind: String,
    c3_max: f64,
    rp_min: f64,
    ecc_max: f64,
    sma_max: f64,
}

impl ConstraintKeys {
    fn from(c: &CaptureConstraints) -> Self {
        let mut k = ConstraintKeys {
            kind: String::new(),
            c3_max: -0.11,
            rp_min: 6000.0,
            ecc_max: 0.7,
            sma_max: 32_000.0,
        };
        match *c {
            CaptureConstraints::C3Perilune { c3_max, rp_min } => {
                k.kind = "c3_rmag".into();
                k.c3_max = c3_max;
                k.rp_min = rp_min;
            }
            CaptureConstraints::Eccentricity { ecc_max } => {
                k.kind = "ecc".into();
                k.ecc_max = ecc_max;
            }
            CaptureConstraints::EccentricitySma { ecc_max, sma_max } => {
                k.kind = "ecc_sma".into();
                k.ecc_max = ecc_max;
                k.sma_max = sma_max;
            }
        }
        k
    }

    fn build(&self) -> Option<CaptureConstraints> {
        Some(match self.kind.as_str() {
            "c3_rmag" => CaptureConstraints::C3Perilune {
                c3_max: self.c3_max,
                rp_min: self.rp_min,
            },
            "ecc" => CaptureConstraints::Eccentricity { ecc_max: self.ecc_max },
            "ecc_sma" => CaptureConstraints::EccentricitySma {
                ecc_max: self.ecc_max,
                sma_max: self.sma_max,
            },
            _ => return None,
        })
    }
}

pub fn parse_scenario_file(path: &Path) -> Result<MissionConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Parses scenario text over the defaults and validates the result.
pub fn parse_scenario(text: &str) -> Result<MissionConfig, ScenarioError> {
    let mut cfg = MissionConfig::default();
    let mut seen = BTreeSet::new();
    let mut cons = ConstraintKeys::from(&cfg.optimizer.constraints);
    let mut constraint_line = 0;
    let mut r = cfg.initial_state.r;
    let mut v = cfg.initial_state.v;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, _)| k.contains('.'))
            .ok_or_else(|| ScenarioError::Syntax {
                line,
                text: raw.to_string(),
            })?;
        if !KEYS.contains(&key) {
            let (section, name) = key.split_once('.').unwrap_or(("", key));
            let want = stem(name);
            let expected = KEYS
                .iter()
                .find(|k| k.split_once('.').is_some_and(|(s, n)| s == section && stem(n) == want));
            return Err(match expected {
                Some(e) => ScenarioError::UnitMismatch {
                    line,
                    key: key.to_string(),
                    expected: e.to_string(),
                },
                None => ScenarioError::UnknownKey {
                    line,
                    key: key.to_string(),
                },
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ScenarioError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        let bad = || ScenarioError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let num =
            || -> Result<f64, ScenarioError> { value.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad) };
        let int = || -> Result<u64, ScenarioError> { value.parse::<u64>().map_err(|_| bad()) };
        let flag = || -> Result<bool, ScenarioError> {
            match value {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => Err(bad()),
            }
        };

        let sc = &mut cfg.spacecraft;
        let f = &mut cfg.forces;
        let p = &mut cfg.phases;
        let o = &mut cfg.optimizer;
        match key {
            "spacecraft.dry_mass_kg" => sc.dry_mass = num()?,
            "spacecraft.prop_mass_kg" => sc.prop_mass = num()?,
            "spacecraft.thrust_mN" => sc.thrust_mn = num()?,
            "spacecraft.isp_s" => sc.isp_s = num()?,
            "spacecraft.efficiency" => sc.efficiency = num()?,
            "initial_state.epoch" => cfg.initial_state.epoch = Epoch::from_calendar(value).map_err(|_| bad())?,
            "initial_state.epoch_j2000_s" => cfg.initial_state.epoch = Epoch::from_seconds(num()?),
            "initial_state.center" => {
                cfg.initial_state.center = value
                    .parse::<Body>()
                    .ok()
                    .filter(|b| matches!(b, Body::Earth | Body::Moon))
                    .ok_or_else(bad)?
            }
            "initial_state.x_km" => r.x = num()?,
            "initial_state.y_km" => r.y = num()?,
            "initial_state.z_km" => r.z = num()?,
            "initial_state.vx_kms" => v.x = num()?,
            "initial_state.vy_kms" => v.y = num()?,
            "initial_state.vz_kms" => v.z = num()?,
            "forces.moon" => f.moon = flag()?,
            "forces.sun" => f.sun = flag()?,
            "forces.jupiter" => f.jupiter = flag()?,
            "forces.harmonics_degree" => f.harmonics_degree = int()? as usize,
            "forces.ephemeris_table" => f.ephemeris_table = (!value.is_empty()).then(|| PathBuf::from(value)),
            "forces.ephemeris_cache_step_s" => f.ephemeris_cache_step_s = num()?,
            "forces.rel_tol" => f.rel_tol = num()?,
            "forces.inner_rel_tol" => f.inner_rel_tol = num()?,
            "phases.detumble_h" => p.detumble_h = num()?,
            "phases.phase1_days" => p.phase1_days = num()?,
            "phases.coast_days" => p.coast_days = num()?,
            "phases.uncontrolled_days" => p.uncontrolled_days = num()?,
            "phases.escape_radius_km" => p.escape_radius_km = num()?,
            "phases.passes" => p.passes = int()? as usize,
            "phases.nu_on_deg" => p.nu_on_deg = num()?,
            "phases.nu_off_deg" => p.nu_off_deg = num()?,
            "phases.ecc_target" => p.ecc_target = num()?,
            "phases.science_ecc" => p.science_ecc = num()?,
            "phases.science_revs" => p.science_revs = num()?,
            "phases.classify_days" => p.classify_days = num()?,
            "optimizer.constraint" => {
                cons.kind = value.to_string();
                constraint_line = line;
            }
            "optimizer.c3_max_km2s2" => cons.c3_max = num()?,
            "optimizer.rp_min_km" => cons.rp_min = num()?,
            "optimizer.ecc_max" => cons.ecc_max = num()?,
            "optimizer.sma_max_km" => cons.sma_max = num()?,
            "optimizer.trade_c3_max_km2s2" => o.trade_c3_max = num()?,
            "optimizer.trade_rp_min_km" => o.trade_rp_min_km = num()?,
            "optimizer.trade_sma_max_km" => o.trade_sma_max_km = num()?,
            "optimizer.t_burn_max_days" => o.t_burn_max_days = num()?,
            "optimizer.t_coast_max_days" => o.t_coast_max_days = num()?,
            "optimizer.capture_horizon_days" => o.capture_horizon_days = num()?,
            "optimizer.starts" => o.starts = int()? as usize,
            "optimizer.seed" => o.seed = int()?,
            "optimizer.max_iter" => o.max_iter = int()? as usize,
            "optimizer.tol_kkt" => o.tol_kkt = num()?,
            "optimizer.tol_con" => o.tol_con = num()?,
            "optimizer.max_step" => o.max_step = num()?,
            "output.step_s" => cfg.output.step_s = num()?,
            _ => unreachable!("key list and match arms agree"),
        }
    }

    cfg.optimizer.constraints = cons.build().ok_or_else(|| ScenarioError::BadValue {
        line: constraint_line,
        key: "optimizer.constraint".into(),
        value: cons.kind.clone(),
    })?;
    cfg.initial_state.r = r;
    cfg.initial_state.v = v;
    cfg.initial_state.mass = cfg.spacecraft.wet_mass();
    cfg.validate()?;
    Ok(cfg)
}

/// Renders every setting so that `parse_scenario(&echo_scenario(c))` reproduces `c`.
pub fn echo_scenario(cfg: &MissionConfig) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    let sc = &cfg.spacecraft;
    put("spacecraft.dry_mass_kg", sc.dry_mass.to_string());
    put("spacecraft.prop_mass_kg", sc.prop_mass.to_string());
    put("spacecraft.thrust_mN", sc.thrust_mn.to_string());
    put("spacecraft.isp_s", sc.isp_s.to_string());
    put("spacecraft.efficiency", sc.efficiency.to_string());

    let s = &cfg.initial_state;
    put("initial_state.epoch_j2000_s", s.epoch.seconds().to_string());
    put("initial_state.center", s.center.to_string().to_ascii_lowercase());
    for (k, x) in ["x_km", "y_km", "z_km"].iter().zip(s.r.iter()) {
        put(&format!("initial_state.{k}"), x.to_string());
    }
    for (k, x) in ["vx_kms", "vy_kms", "vz_kms"].iter().zip(s.v.iter()) {
        put(&format!("initial_state.{k}"), x.to_string());
    }

    let f = &cfg.forces;
    put("forces.moon", f.moon.to_string());
    put("forces.sun", f.sun.to_string());
    put("forces.jupiter", f.jupiter.to_string());
    put("forces.harmonics_degree", f.harmonics_degree.to_string());
    if let Some(t) = &f.ephemeris_table {
        put("forces.ephemeris_table", t.display().to_string());
    }
    put("forces.ephemeris_cache_step_s", f.ephemeris_cache_step_s.to_string());
    put("forces.rel_tol", f.rel_tol.to_string());
    put("forces.inner_rel_tol", f.inner_rel_tol.to_string());

    let p = &cfg.phases;
    put("phases.detumble_h", p.detumble_h.to_string());
    put("phases.phase1_days", p.phase1_days.to_string());
    put("phases.coast_days", p.coast_days.to_string());
    put("phases.uncontrolled_days", p.uncontrolled_days.to_string());
    put("phases.escape_radius_km", p.escape_radius_km.to_string());
    put("phases.passes", p.passes.to_string());
    put("phases.nu_on_deg", p.nu_on_deg.to_string());
    put("phases.nu_off_deg", p.nu_off_deg.to_string());
    put("phases.ecc_target", p.ecc_target.to_string());
    put("phases.science_ecc", p.science_ecc.to_string());
    put("phases.science_revs", p.science_revs.to_string());
    put("phases.classify_days", p.classify_days.to_string());

    let o = &cfg.optimizer;
    let c = ConstraintKeys::from(&o.constraints);
    put("optimizer.constraint", c.kind.clone());
    match o.constraints {
        CaptureConstraints::C3Perilune { .. } => {
            put("optimizer.c3_max_km2s2", c.c3_max.to_string());
            put("optimizer.rp_min_km", c.rp_min.to_string());
        }
        CaptureConstraints::Eccentricity { .. } => put("optimizer.ecc_max", c.ecc_max.to_string()),
        CaptureConstraints::EccentricitySma { .. } => {
            put("optimizer.ecc_max", c.ecc_max.to_string());
            put("optimizer.sma_max_km", c.sma_max.to_string());
        }
    }
    put("optimizer.trade_c3_max_km2s2", o.trade_c3_max.to_string());
    put("optimizer.trade_rp_min_km", o.trade_rp_min_km.to_string());
    put("optimizer.trade_sma_max_km", o.trade_sma_max_km.to_string());
    put("optimizer.t_burn_max_days", o.t_burn_max_days.to_string());
    put("optimizer.t_coast_max_days", o.t_coast_max_days.to_string());
    put("optimizer.capture_horizon_days", o.capture_horizon_days.to_string());
    put("optimizer.starts", o.starts.to_string());
    put("optimizer.seed", o.seed.to_string());
    put("optimizer.max_iter", o.max_iter.to_string());
    put("optimizer.tol_kkt", o.tol_kkt.to_string());
    put("optimizer.tol_con", o.tol_con.to_string());
    put("optimizer.max_step", o.max_step.to_string());

    put("output.step_s", cfg.output.step_s.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_scenario("").unwrap(), MissionConfig::default());
        assert_eq!(parse_scenario("# nothing\n\n").unwrap(), MissionConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = MissionConfig::default();
        cfg.spacecraft.thrust_mn = 2.4;
        cfg.optimizer.constraints = CaptureConstraints::EccentricitySma {
            ecc_max: 0.55,
            sma_max: 31_000.0,
        };
        cfg.initial_state.r.x = 0.1 + 0.2;
        let text = echo_scenario(&cfg);
        assert!(text.contains("spacecraft.thrust_mN = 2.4"));
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(echo_scenario(&back), text);
    }

    #[test]
    fn wrong_unit_is_reported() {
        let err = parse_scenario("spacecraft.thrust_N = 0.0012").unwrap_err();
        assert!(
            matches!(err, ScenarioError::UnitMismatch { ref expected, .. } if expected == "spacecraft.thrust_mN"),
            "{err}"
        );
        let err = parse_scenario("phases.coast_s = 100").unwrap_err();
        assert!(matches!(err, ScenarioError::UnitMismatch { .. }), "{err}");
    }

    #[test]
    fn unknown_key_and_bad_number() {
        assert!(matches!(
            parse_scenario("phases.warp_factor = 9").unwrap_err(),
            ScenarioError::UnknownKey { line: 1, .. }
        ));
        let err = parse_scenario("\nspacecraft.isp_s = 1e3x").unwrap_err();
        assert!(err.to_string().contains("spacecraft.isp_s"));
        assert!(matches!(err, ScenarioError::BadValue { line: 2, .. }));
    }

    #[test]
    fn calendar_epoch_and_comments() {
        let cfg = parse_scenario("initial_state.epoch = 2018-01-01T00:00:00  # new year\nphases.passes = 12").unwrap();
        assert_eq!(cfg.phases.passes, 12);
        assert_eq!(
            cfg.initial_state.epoch,
            Epoch::from_calendar("2018-01-01T00:00:00").unwrap()
        );
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(matches!(
            parse_scenario("phases.passes = 0").unwrap_err(),
            ScenarioError::Invalid(_)
        ));
        assert!(matches!(
            parse_scenario("phases.nu_on_deg = 130").unwrap_err(),
            ScenarioError::Invalid(_)
        ));
        assert!(matches!(
            parse_scenario("optimizer.constraint = magic").unwrap_err(),
            ScenarioError::BadValue { .. }
        ));
        assert!(matches!(
            parse_scenario("phases.passes = 3\nphases.passes = 4").unwrap_err(),
            ScenarioError::Duplicate { .. }
        ));
    }
}
