//! Earth-centred J2000 positions of the Moon, Sun and Jupiter.
//!
//! Two sources share one interface: a closed-form analytic theory valid for two centuries
//! around J2000, and a uniformly sampled table interpolated with cubic Hermite polynomials.

pub mod analytic;
mod table;

use crate::astro::{Body, Epoch, Vec3};

pub use table::EphemerisTable;

/// Central-difference half step for body velocities, s.
pub const VELOCITY_STEP: f64 = 10.0;

/// Half-width of the analytic validity window, Julian years.
const ANALYTIC_SPAN_YEARS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EphemerisError {
    #[error("{body} ephemeris does not cover {epoch} (valid {start} .. {end})")]
    Coverage {
        body: Body,
        epoch: Epoch,
        start: Epoch,
        end: Epoch,
    },
    #[error("no ephemeris data for {0}")]
    MissingBody(Body),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Positions and velocities of the gravitating bodies relative to the Earth.
pub trait Ephemeris: Send + Sync {
    /// Earth-centred position, km. The Earth itself is the origin.
    fn body_position(&self, body: Body, epoch: Epoch) -> Result<Vec3, EphemerisError>;

    /// Interval over which `body_position` is defined for `body`.
    fn validity(&self, body: Body) -> Result<(Epoch, Epoch), EphemerisError>;

    /// Earth-centred velocity by central difference of `body_position`, km/s.
    fn body_velocity(&self, body: Body, epoch: Epoch) -> Result<Vec3, EphemerisError> {
        body_velocity_with_step(self, body, epoch, VELOCITY_STEP)
    }

    fn body_state(&self, body: Body, epoch: Epoch) -> Result<(Vec3, Vec3), EphemerisError> {
        Ok((self.body_position(body, epoch)?, self.body_velocity(body, epoch)?))
    }
}

/// Central difference with an explicit half step; errors when the stencil leaves coverage.
pub fn body_velocity_with_step<E: Ephemeris + ?Sized>(
    eph: &E,
    body: Body,
    epoch: Epoch,
    h: f64,
) -> Result<Vec3, EphemerisError> {
    if body == Body::Earth {
        return Ok(Vec3::zeros());
    }
    let (start, end) = eph.validity(body)?;
    if epoch - h < start || epoch + h > end {
        return Err(EphemerisError::Coverage {
            body,
            epoch,
            start: start + h,
            end: end - h,
        });
    }
    let ahead = eph.body_position(body, epoch + h)?;
    let behind = eph.body_position(body, epoch - h)?;
    Ok((ahead - behind) / (2.0 * h))
}

/// Closed-form lunar, solar and Jovian positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticEphemeris {
    pub start: Epoch,
    pub end: Epoch,
}

impl Default for AnalyticEphemeris {
    fn default() -> Self {
        let span = ANALYTIC_SPAN_YEARS * 365.25;
        Self {
            start: Epoch::from_days(-span),
            end: Epoch::from_days(span),
        }
    }
}

impl Ephemeris for AnalyticEphemeris {
    fn body_position(&self, body: Body, epoch: Epoch) -> Result<Vec3, EphemerisError> {
        if body == Body::Earth {
            return Ok(Vec3::zeros());
        }
        if epoch < self.start || epoch > self.end {
            return Err(EphemerisError::Coverage {
                body,
                epoch,
                start: self.start,
                end: self.end,
            });
        }
        Ok(match body {
            Body::Moon => analytic::moon_position(epoch),
            Body::Sun => analytic::sun_position(epoch),
            Body::Jupiter => analytic::jupiter_position(epoch),
            Body::Earth => unreachable!(),
        })
    }

    fn validity(&self, _body: Body) -> Result<(Epoch, Epoch), EphemerisError> {
        Ok((self.start, self.end))
    }
}

/// The ephemeris used by the force model: analytic theory or an ingested table.
#[derive(Debug, Clone, PartialEq)]
pub enum EphemerisSource {
    Analytic(AnalyticEphemeris),
    Table(EphemerisTable),
}

impl EphemerisSource {
    pub fn analytic() -> Self {
        EphemerisSource::Analytic(AnalyticEphemeris::default())
    }

    pub fn load_table(path: impl AsRef<std::path::Path>) -> Result<Self, EphemerisError> {
        EphemerisTable::load(path).map(EphemerisSource::Table)
    }

    pub fn is_table(&self) -> bool {
        matches!(self, EphemerisSource::Table(_))
    }
}

impl Ephemeris for EphemerisSource {
    fn body_position(&self, body: Body, epoch: Epoch) -> Result<Vec3, EphemerisError> {
        match self {
            EphemerisSource::Analytic(a) => a.body_position(body, epoch),
            EphemerisSource::Table(t) => t.body_position(body, epoch),
        }
    }

    fn validity(&self, body: Body) -> Result<(Epoch, Epoch), EphemerisError> {
        match self {
            EphemerisSource::Analytic(a) => a.validity(body),
            EphemerisSource::Table(t) => t.validity(body),
        }
    }
}
