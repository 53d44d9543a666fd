//! Fehlberg 7(8) embedded pair, propagated with the eighth-order solution.

use nalgebra::SVector;

pub const STAGES: usize = 13;

pub const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

#[rustfmt::skip]
pub const A: [&[f64]; STAGES] = [
    &[],
    &[2.0 / 27.0],
    &[1.0 / 36.0, 1.0 / 12.0],
    &[1.0 / 24.0, 0.0, 1.0 / 8.0],
    &[5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
    &[1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
    &[-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0],
    &[31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0],
    &[2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0],
    &[-91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0, 17.0 / 6.0, -1.0 / 12.0],
    &[2383.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -301.0 / 82.0, 2133.0 / 4100.0, 45.0 / 82.0, 45.0 / 164.0, 18.0 / 41.0],
    &[3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0],
    &[-1777.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -289.0 / 82.0, 2193.0 / 4100.0, 51.0 / 82.0, 33.0 / 164.0, 12.0 / 41.0, 0.0, 1.0],
];

/// Eighth-order weights.
pub const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

/// Coefficient of (k0 + k10 − k11 − k12) in the local error estimate.
pub const ERR: f64 = 41.0 / 840.0;

/// One step of size `h` from `(t, y)` given `k0 = f(t, y)`.
///
/// Returns the eighth-order solution and the embedded error estimate.
pub fn step<const N: usize, E>(
    f: &mut impl FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
    t: f64,
    y: &SVector<f64, N>,
    k0: &SVector<f64, N>,
    h: f64,
) -> Result<(SVector<f64, N>, SVector<f64, N>), E> {
    let mut k = [SVector::<f64, N>::zeros(); STAGES];
    k[0] = *k0;
    for s in 1..STAGES {
        let mut acc = SVector::<f64, N>::zeros();
        for (j, a) in A[s].iter().enumerate() {
            if *a != 0.0 {
                acc += k[j] * *a;
            }
        }
        let ys = y + acc * h;
        k[s] = f(t + C[s] * h, &ys)?;
    }
    let mut incr = SVector::<f64, N>::zeros();
    for (s, b) in B8.iter().enumerate() {
        if *b != 0.0 {
            incr += k[s] * *b;
        }
    }
    let err = (k[0] + k[10] - k[11] - k[12]) * (ERR * h);
    Ok((y + incr * h, err))
}
