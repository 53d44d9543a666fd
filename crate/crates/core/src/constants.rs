//! Physical constants shared by every module.
//!
//! Units: km, km/s, kg, s.

/// Earth gravitational parameter, km³/s².
pub const MU_EARTH: f64 = 398_600.441_8;
/// Moon gravitational parameter, km³/s².
pub const MU_MOON: f64 = 4_902.800_1;
/// Sun gravitational parameter, km³/s².
pub const MU_SUN: f64 = 1.327_124_400_18e11;
/// Jupiter system gravitational parameter, km³/s².
pub const MU_JUPITER: f64 = 1.266_865_34e8;

/// Mean lunar radius used for altitude and impact checks, km.
pub const MOON_RADIUS: f64 = 1_737.4;
/// Equatorial Earth radius, km.
pub const EARTH_RADIUS: f64 = 6_378.137;

/// Standard gravity, m/s².
pub const G0: f64 = 9.806_65;

/// Astronomical unit, km.
pub const AU: f64 = 149_597_870.7;

pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const DAYS_PER_JULIAN_CENTURY: f64 = 36_525.0;

/// Julian date of the J2000 reference epoch (2000-01-01 12:00 TDB).
pub const J2000_JD: f64 = 2_451_545.0;

/// Mean obliquity of the ecliptic at J2000, degrees.
pub const OBLIQUITY_J2000_DEG: f64 = 23.439_291_1;

/// Upper bound on the combined thrust of all heads, mN.
pub const MAX_TOTAL_THRUST_MN: f64 = 1.2;
