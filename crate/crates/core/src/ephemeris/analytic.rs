//! Closed-form geocentric positions of the Moon, Sun and Jupiter.
//!
//! The lunar theory is the truncated periodic series of Meeus, *Astronomical Algorithms*
//! (2nd ed.), ch. 47: 60 longitude/distance terms and 60 latitude terms plus the additive
//! planetary corrections. The Sun follows the low-precision two-body-plus-secular solution of
//! ch. 25. Jupiter is a fixed-element heliocentric ellipse with a linear mean longitude.
//! All positions are rotated from the ecliptic of date to the J2000 equator by removing the
//! general precession in longitude and applying the J2000 obliquity.

use crate::astro::{Epoch, Vec3};
use crate::constants::{AU, OBLIQUITY_J2000_DEG};

/// General precession in longitude, degrees per Julian century.
const PRECESSION_DEG_PER_CENTURY: f64 = 1.396_971_3;

/// Multipliers of D, M, M', F and the longitude (1e-6 deg) / distance (1e-3 km) amplitudes.
#[rustfmt::skip]
const LONGITUDE_DISTANCE: [(i8, i8, i8, i8, f64, f64); 60] = [
    (0, 0, 1, 0, 6_288_774.0, -20_905_355.0),
    (2, 0, -1, 0, 1_274_027.0, -3_699_111.0),
    (2, 0, 0, 0, 658_314.0, -2_955_968.0),
    (0, 0, 2, 0, 213_618.0, -569_925.0),
    (0, 1, 0, 0, -185_116.0, 48_888.0),
    (0, 0, 0, 2, -114_332.0, -3_149.0),
    (2, 0, -2, 0, 58_793.0, 246_158.0),
    (2, -1, -1, 0, 57_066.0, -152_138.0),
    (2, 0, 1, 0, 53_322.0, -170_733.0),
    (2, -1, 0, 0, 45_758.0, -204_586.0),
    (0, 1, -1, 0, -40_923.0, -129_620.0),
    (1, 0, 0, 0, -34_720.0, 108_743.0),
    (0, 1, 1, 0, -30_383.0, 104_755.0),
    (2, 0, 0, -2, 15_327.0, 10_321.0),
    (0, 0, 1, 2, -12_528.0, 0.0),
    (0, 0, 1, -2, 10_980.0, 79_661.0),
    (4, 0, -1, 0, 10_675.0, -34_782.0),
    (0, 0, 3, 0, 10_034.0, -23_210.0),
    (4, 0, -2, 0, 8_548.0, -21_636.0),
    (2, 1, -1, 0, -7_888.0, 24_208.0),
    (2, 1, 0, 0, -6_766.0, 30_824.0),
    (1, 0, -1, 0, -5_163.0, -8_379.0),
    (1, 1, 0, 0, 4_987.0, -16_675.0),
    (2, -1, 1, 0, 4_036.0, -12_831.0),
    (2, 0, 2, 0, 3_994.0, -10_445.0),
    (4, 0, 0, 0, 3_861.0, -11_650.0),
    (2, 0, -3, 0, 3_665.0, 14_403.0),
    (0, 1, -2, 0, -2_689.0, -7_003.0),
    (2, 0, -1, 2, -2_602.0, 0.0),
    (2, -1, -2, 0, 2_390.0, 10_056.0),
    (1, 0, 1, 0, -2_348.0, 6_322.0),
    (2, -2, 0, 0, 2_236.0, -9_884.0),
    (0, 1, 2, 0, -2_120.0, 5_751.0),
    (0, 2, 0, 0, -2_069.0, 0.0),
    (2, -2, -1, 0, 2_048.0, -4_950.0),
    (2, 0, 1, -2, -1_773.0, 4_130.0),
    (2, 0, 0, 2, -1_595.0, 0.0),
    (4, -1, -1, 0, 1_215.0, -3_958.0),
    (0, 0, 2, 2, -1_110.0, 0.0),
    (3, 0, -1, 0, -892.0, 3_258.0),
    (2, 1, 1, 0, -810.0, 2_616.0),
    (4, -1, -2, 0, 759.0, -1_897.0),
    (0, 2, -1, 0, -713.0, -2_117.0),
    (2, 2, -1, 0, -700.0, 2_354.0),
    (2, 1, -2, 0, 691.0, 0.0),
    (2, -1, 0, -2, 596.0, 0.0),
    (4, 0, 1, 0, 549.0, -1_423.0),
    (0, 0, 4, 0, 537.0, -1_117.0),
    (4, -1, 0, 0, 520.0, -1_571.0),
    (1, 0, -2, 0, -487.0, -1_739.0),
    (2, 1, 0, -2, -399.0, 0.0),
    (0, 0, 2, -2, -381.0, -4_421.0),
    (1, 1, 1, 0, 351.0, 0.0),
    (3, 0, -2, 0, -340.0, 0.0),
    (4, 0, -3, 0, 330.0, 0.0),
    (2, -1, 2, 0, 327.0, 0.0),
    (0, 2, 1, 0, -323.0, 1_165.0),
    (1, 1, -1, 0, 299.0, 0.0),
    (2, 0, 3, 0, 294.0, 0.0),
    (2, 0, -1, -2, 0.0, 8_752.0),
];

/// Multipliers of D, M, M', F and the latitude amplitude (1e-6 deg).
#[rustfmt::skip]
const LATITUDE: [(i8, i8, i8, i8, f64); 60] = [
    (0, 0, 0, 1, 5_128_122.0), (0, 0, 1, 1, 280_602.0), (0, 0, 1, -1, 277_693.0),
    (2, 0, 0, -1, 173_237.0), (2, 0, -1, 1, 55_413.0), (2, 0, -1, -1, 46_271.0),
    (2, 0, 0, 1, 32_573.0), (0, 0, 2, 1, 17_198.0), (2, 0, 1, -1, 9_266.0),
    (0, 0, 2, -1, 8_822.0), (2, -1, 0, -1, 8_216.0), (2, 0, -2, -1, 4_324.0),
    (2, 0, 1, 1, 4_200.0), (2, 1, 0, -1, -3_359.0), (2, -1, -1, 1, 2_463.0),
    (2, -1, 0, 1, 2_211.0), (2, -1, -1, -1, 2_065.0), (0, 1, -1, -1, -1_870.0),
    (4, 0, -1, -1, 1_828.0), (0, 1, 0, 1, -1_794.0), (0, 0, 0, 3, -1_749.0),
    (0, 1, -1, 1, -1_565.0), (1, 0, 0, 1, -1_491.0), (0, 1, 1, 1, -1_475.0),
    (0, 1, 1, -1, -1_410.0), (0, 1, 0, -1, -1_344.0), (1, 0, 0, -1, -1_335.0),
    (0, 0, 3, 1, 1_107.0), (4, 0, 0, -1, 1_021.0), (4, 0, -1, 1, 833.0),
    (0, 0, 1, -3, 777.0), (4, 0, -2, 1, 671.0), (2, 0, 0, -3, 607.0),
    (2, 0, 2, -1, 596.0), (2, -1, 1, -1, 491.0), (2, 0, -2, 1, -451.0),
    (0, 0, 3, -1, 439.0), (2, 0, 2, 1, 422.0), (2, 0, -3, -1, 421.0),
    (2, 1, -1, 1, -366.0), (2, 1, 0, 1, -351.0), (4, 0, 0, 1, 331.0),
    (2, -1, 1, 1, 315.0), (2, -2, 0, -1, 302.0), (0, 0, 1, 3, -283.0),
    (2, 1, 1, -1, -229.0), (1, 1, 0, -1, 223.0), (1, 1, 0, 1, 223.0),
    (0, 1, -2, -1, -220.0), (2, 1, -1, -1, -220.0), (1, 0, 1, 1, -185.0),
    (2, -1, -2, -1, 181.0), (0, 1, 2, 1, -177.0), (4, 0, -2, -1, 176.0),
    (4, -1, -1, -1, 166.0), (1, 0, 1, -1, -164.0), (4, 0, 1, -1, 132.0),
    (1, 0, -1, -1, -119.0), (4, -1, 0, -1, 115.0), (2, -2, 0, 1, 107.0),
];

/// Jupiter mean elements at J2000 (ecliptic and equinox J2000): a [AU], e, i, Ω, ϖ, L [deg]
/// and the mean-longitude rate [deg / Julian century].
const JUPITER: (f64, f64, f64, f64, f64, f64, f64) = (
    5.202_887_00,
    0.048_386_24,
    1.304_396_95,
    100.473_909_09,
    14.728_479_83,
    34.396_440_51,
    3_034.746_127_75,
);

fn ecliptic_to_equatorial(v: Vec3) -> Vec3 {
    let (s, c) = OBLIQUITY_J2000_DEG.to_radians().sin_cos();
    Vec3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z)
}

fn spherical(lon: f64, lat: f64, dist: f64) -> Vec3 {
    let (sl, cl) = lon.sin_cos();
    let (sb, cb) = lat.sin_cos();
    Vec3::new(dist * cb * cl, dist * cb * sl, dist * sb)
}

/// Geocentric Moon position, km, J2000 equator.
pub fn moon_position(epoch: Epoch) -> Vec3 {
    let t = epoch.centuries();
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let lp = 218.316_447_7 + 481_267.881_234_21 * t - 0.001_578_6 * t2 + t3 / 538_841.0 - t4 / 65_194_000.0;
    let d = 297.850_192_1 + 445_267.111_403_4 * t - 0.001_881_9 * t2 + t3 / 545_868.0 - t4 / 113_065_000.0;
    let m = 357.529_109_2 + 35_999.050_290_9 * t - 0.000_153_6 * t2 + t3 / 24_490_000.0;
    let mp = 134.963_396_4 + 477_198.867_505_5 * t + 0.008_741_4 * t2 + t3 / 69_699.0 - t4 / 14_712_000.0;
    let f = 93.272_095_0 + 483_202.017_523_3 * t - 0.003_653_9 * t2 - t3 / 3_526_000.0 + t4 / 863_310_000.0;
    let a1 = 119.75 + 131.849 * t;
    let a2 = 53.09 + 479_264.290 * t;
    let a3 = 313.45 + 481_266.484 * t;
    // Decreasing eccentricity of the Earth's orbit.
    let e = 1.0 - 0.002_516 * t - 0.000_007_4 * t2;
    let e_factor = |mult: i8| match mult.abs() {
        0 => 1.0,
        1 => e,
        _ => e * e,
    };

    let (d, m, mp, f) = (d.to_radians(), m.to_radians(), mp.to_radians(), f.to_radians());
    let arg = |cd: i8, cm: i8, cmp: i8, cf: i8| {
        f64::from(cd) * d + f64::from(cm) * m + f64::from(cmp) * mp + f64::from(cf) * f
    };

    let mut sum_l = 0.0;
    let mut sum_r = 0.0;
    for &(cd, cm, cmp, cf, al, ar) in &LONGITUDE_DISTANCE {
        let (s, c) = arg(cd, cm, cmp, cf).sin_cos();
        let k = e_factor(cm);
        sum_l += al * k * s;
        sum_r += ar * k * c;
    }
    let mut sum_b = 0.0;
    for &(cd, cm, cmp, cf, ab) in &LATITUDE {
        sum_b += ab * e_factor(cm) * arg(cd, cm, cmp, cf).sin();
    }

    let (a1, a2, a3, lpr) = (a1.to_radians(), a2.to_radians(), a3.to_radians(), lp.to_radians());
    sum_l += 3_958.0 * a1.sin() + 1_962.0 * (lpr - f).sin() + 318.0 * a2.sin();
    sum_b += -2_235.0 * lpr.sin()
        + 382.0 * a3.sin()
        + 175.0 * (a1 - f).sin()
        + 175.0 * (a1 + f).sin()
        + 127.0 * (lpr - mp).sin()
        - 115.0 * (lpr + mp).sin();

    let lon = (lp + sum_l * 1e-6 - PRECESSION_DEG_PER_CENTURY * t).to_radians();
    let lat = (sum_b * 1e-6).to_radians();
    let dist = 385_000.56 + sum_r * 1e-3;
    ecliptic_to_equatorial(spherical(lon, lat, dist))
}

/// Geocentric Sun position, km, J2000 equator.
pub fn sun_position(epoch: Epoch) -> Vec3 {
    let t = epoch.centuries();
    let l0 = 280.466_46 + 36_000.769_83 * t + 0.000_303_2 * t * t;
    let m = (357.529_11 + 35_999.050_29 * t - 0.000_153_7 * t * t).to_radians();
    let e = 0.016_708_634 - 0.000_042_037 * t - 0.000_000_126_7 * t * t;
    let center = (1.914_602 - 0.004_817 * t - 0.000_014 * t * t) * m.sin()
        + (0.019_993 - 0.000_101 * t) * (2.0 * m).sin()
        + 0.000_289 * (3.0 * m).sin();
    let lon = (l0 + center - PRECESSION_DEG_PER_CENTURY * t).to_radians();
    let nu = m + center.to_radians();
    let dist = 1.000_001_018 * (1.0 - e * e) / (1.0 + e * nu.cos()) * AU;
    ecliptic_to_equatorial(spherical(lon, 0.0, dist))
}

fn solve_kepler(mean_anomaly: f64, ecc: f64) -> f64 {
    let mut ea = mean_anomaly + ecc * mean_anomaly.sin();
    for _ in 0..20 {
        let delta = (ea - ecc * ea.sin() - mean_anomaly) / (1.0 - ecc * ea.cos());
        ea -= delta;
        if delta.abs() < 1e-15 {
            break;
        }
    }
    ea
}

/// Geocentric Jupiter position, km, J2000 equator.
pub fn jupiter_position(epoch: Epoch) -> Vec3 {
    let (a, e, inc, node, peri, l0, rate) = JUPITER;
    let t = epoch.centuries();
    let mean_lon = l0 + rate * t;
    let mean_anomaly = (mean_lon - peri).to_radians().rem_euclid(std::f64::consts::TAU);
    let ea = solve_kepler(mean_anomaly, e);
    let xp = a * AU * (ea.cos() - e);
    let yp = a * AU * (1.0 - e * e).sqrt() * ea.sin();
    let w = (peri - node).to_radians();
    let (so, co) = node.to_radians().sin_cos();
    let (si, ci) = inc.to_radians().sin_cos();
    let (sw, cw) = w.sin_cos();
    let helio = Vec3::new(
        (cw * co - sw * so * ci) * xp + (-sw * co - cw * so * ci) * yp,
        (cw * so + sw * co * ci) * xp + (-sw * so + cw * co * ci) * yp,
        (sw * si) * xp + (cw * si) * yp,
    );
    // Earth's heliocentric position is the negated geocentric Sun.
    ecliptic_to_equatorial(helio) + sun_position(epoch)
}
