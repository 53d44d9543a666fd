use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::astro::{Body, Epoch, Vec3};

use super::{Ephemeris, EphemerisError};

/// Uniformly sampled body positions with cubic Hermite interpolation.
///
/// Nodal velocities come from finite differences of the samples (central inside, second-order
/// one-sided at the ends) so the interpolant is C¹ across nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisTable {
    step: f64,
    t0: f64,
    bodies: BTreeMap<Body, BodySamples>,
}

#[derive(Debug, Clone, PartialEq)]
struct BodySamples {
    positions: Vec<Vec3>,
    rates: Vec<Vec3>,
}

impl BodySamples {
    fn new(positions: Vec<Vec3>, step: f64) -> Self {
        let n = positions.len();
        let rates = (0..n)
            .map(|i| match n {
                0 | 1 => Vec3::zeros(),
                2 => (positions[1] - positions[0]) / step,
                _ if i == 0 => (-3.0 * positions[0] + 4.0 * positions[1] - positions[2]) / (2.0 * step),
                _ if i == n - 1 => (3.0 * positions[n - 1] - 4.0 * positions[n - 2] + positions[n - 3]) / (2.0 * step),
                _ => (positions[i + 1] - positions[i - 1]) / (2.0 * step),
            })
            .collect();
        Self { positions, rates }
    }
}

impl EphemerisTable {
    /// Builds a table from per-body samples starting at `t0` (seconds past J2000).
    pub fn new(
        t0: f64,
        step: f64,
        samples: impl IntoIterator<Item = (Body, Vec<Vec3>)>,
    ) -> Result<Self, EphemerisError> {
        if !(step > 0.0) || !step.is_finite() || !t0.is_finite() {
            return Err(EphemerisError::Parse {
                line: 0,
                message: format!("invalid table step {step} or start {t0}"),
            });
        }
        let mut bodies = BTreeMap::new();
        for (body, positions) in samples {
            if positions.is_empty() {
                continue;
            }
            bodies.insert(body, BodySamples::new(positions, step));
        }
        Ok(Self { step, t0, bodies })
    }

    /// Samples any ephemeris on a uniform grid covering `[start, end]`.
    pub fn sample<E: Ephemeris + ?Sized>(
        eph: &E,
        bodies: &[Body],
        start: Epoch,
        end: Epoch,
        step: f64,
    ) -> Result<Self, EphemerisError> {
        let count = ((end - start) / step).floor() as usize + 1;
        let mut samples = Vec::with_capacity(bodies.len());
        for &body in bodies {
            if body == Body::Earth {
                continue;
            }
            let positions = (0..count)
                .map(|i| eph.body_position(body, start + step * i as f64))
                .collect::<Result<Vec<_>, _>>()?;
            samples.push((body, positions));
        }
        Self::new(start.seconds(), step, samples)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> Epoch {
        Epoch::from_seconds(self.t0)
    }

    pub fn bodies(&self) -> impl Iterator<Item = Body> + '_ {
        self.bodies.keys().copied()
    }

    pub fn sample_count(&self, body: Body) -> usize {
        self.bodies.get(&body).map_or(0, |s| s.positions.len())
    }

    /// Reads the `#EPHEM v1` text format.
    ///
    /// Data rows are `x y z`, or `t x y z` with an explicit epoch that must match the grid.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EphemerisError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EphemerisError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, EphemerisError> {
        let err = |line: usize, message: String| EphemerisError::Parse { line, message };
        let mut header: Option<(f64, f64)> = None;
        let mut blocks: Vec<(Body, Vec<Vec3>)> = Vec::new();
        // Last explicit epoch seen in the current block, with its line.
        let mut last_time: Option<f64> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#EPHEM") {
                if header.is_some() {
                    return Err(err(line_no, "duplicate #EPHEM header".into()));
                }
                header = Some(parse_header(rest).map_err(|m| err(line_no, m))?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("#BODY") {
                if header.is_none() {
                    return Err(err(line_no, "#BODY before #EPHEM header".into()));
                }
                let body: Body = rest
                    .trim()
                    .parse()
                    .map_err(|e: crate::astro::AstroError| err(line_no, e.to_string()))?;
                if blocks.iter().any(|(b, _)| *b == body) {
                    return Err(err(line_no, format!("duplicate block for {body}")));
                }
                blocks.push((body, Vec::new()));
                last_time = None;
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let Some((t0, step)) = header else {
                return Err(err(line_no, "data before #EPHEM header".into()));
            };
            let Some((_, positions)) = blocks.last_mut() else {
                return Err(err(line_no, "data row outside a #BODY block".into()));
            };
            let fields = line
                .split_whitespace()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(line_no, format!("malformed number {f:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let xyz = match fields.len() {
                3 => &fields[..],
                4 => {
                    let t = fields[0];
                    if let Some(prev) = last_time {
                        if t <= prev {
                            return Err(err(line_no, format!("epoch {t} not after {prev}")));
                        }
                    }
                    let expected = t0 + step * positions.len() as f64;
                    if (t - expected).abs() > 1e-6 * step.max(1.0) {
                        return Err(err(
                            line_no,
                            format!("non-uniform step: epoch {t}, expected {expected}"),
                        ));
                    }
                    last_time = Some(t);
                    &fields[1..]
                }
                n => return Err(err(line_no, format!("expected 3 or 4 columns, found {n}"))),
            };
            positions.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
        }
        let (t0, step) = header.ok_or_else(|| err(0, "missing #EPHEM header".into()))?;
        Self::new(t0, step, blocks).map_err(|e| match e {
            EphemerisError::Parse { message, .. } => err(1, message),
            other => other,
        })
    }

    /// Serializes with 17 significant digits so reloading is bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#EPHEM v1 step={:?} t0={:?}", self.step, self.t0);
        for (body, samples) in &self.bodies {
            let _ = writeln!(out, "#BODY {body}");
            for p in &samples.positions {
                let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), EphemerisError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| EphemerisError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

fn parse_header(rest: &str) -> Result<(f64, f64), String> {
    let mut step = None;
    let mut t0 = None;
    let mut tokens = rest.split_whitespace();
    match tokens.next() {
        Some("v1") => {}
        other => return Err(format!("unsupported table version {other:?}")),
    }
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| format!("malformed header field {tok:?}"))?;
        let v: f64 = value.parse().map_err(|_| format!("malformed header value {tok:?}"))?;
        match key {
            "step" => step = Some(v),
            "t0" => t0 = Some(v),
            _ => return Err(format!("unknown header field {key:?}")),
        }
    }
    let step = step.ok_or("header lacks step=")?;
    let t0 = t0.ok_or("header lacks t0=")?;
    if !(step > 0.0) {
        return Err(format!("step must be positive, got {step}"));
    }
    Ok((t0, step))
}

impl Ephemeris for EphemerisTable {
    fn body_position(&self, body: Body, epoch: Epoch) -> Result<Vec3, EphemerisError> {
        if body == Body::Earth {
            return Ok(Vec3::zeros());
        }
        let (start, end) = self.validity(body)?;
        if epoch < start || epoch > end {
            return Err(EphemerisError::Coverage {
                body,
                epoch,
                start,
                end,
            });
        }
        let s = &self.bodies[&body];
        let n = s.positions.len();
        let u = (epoch.seconds() - self.t0) / self.step;
        let nearest = u.round();
        if (u - nearest).abs() < 1e-9 {
            return Ok(s.positions[(nearest as usize).min(n - 1)]);
        }
        let i = (u.floor() as usize).min(n - 2);
        let tau = u - i as f64;
        let (p0, p1) = (s.positions[i], s.positions[i + 1]);
        let (m0, m1) = (s.rates[i] * self.step, s.rates[i + 1] * self.step);
        let tau2 = tau * tau;
        let tau3 = tau2 * tau;
        let h00 = 2.0 * tau3 - 3.0 * tau2 + 1.0;
        let h10 = tau3 - 2.0 * tau2 + tau;
        let h01 = -2.0 * tau3 + 3.0 * tau2;
        let h11 = tau3 - tau2;
        Ok(p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11)
    }

    fn validity(&self, body: Body) -> Result<(Epoch, Epoch), EphemerisError> {
        if body == Body::Earth {
            return Ok((Epoch::from_seconds(f64::MIN), Epoch::from_seconds(f64::MAX)));
        }
        let s = self.bodies.get(&body).ok_or(EphemerisError::MissingBody(body))?;
        let span = self.step * (s.positions.len() - 1) as f64;
        Ok((Epoch::from_seconds(self.t0), Epoch::from_seconds(self.t0 + span)))
    }
}
