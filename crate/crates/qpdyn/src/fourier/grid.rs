//! FFT bridges between mode maps and uniform grids on the fundamental domain.
//!
//! Sampling θ_j = period·j/n turns both single and doubled torus functions
//! into the same discrete transform, so the routines here never need the
//! `is_double` flag: Σ_m c_m e^{2πi s·m·(period·j/n)} = Σ_m c_m e^{2πi m j/n}
//! because s·period = 1.

use super::{ModeIndex, ScalarTorusFunction};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::BTreeMap;

fn fft_inplace(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    fft.process(data);
}

/// Wrap a mode component into a bin of an n-point grid.
fn bin_of(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Mode component represented by bin b of an n-point transform, in [−n/2, n/2).
fn mode_of(b: usize, n: usize) -> i64 {
    let b = b as i64;
    let n = n as i64;
    if b < (n + 1) / 2 {
        b
    } else {
        b - n
    }
}

/// Sample `f` on the uniform n^d grid of its fundamental domain.
///
/// Errors if the grid cannot hold the support without aliasing.
pub fn eval_grid(f: &ScalarTorusFunction, n: usize) -> Result<Vec<Complex64>> {
    let radius = f.support_radius();
    if 2 * radius >= n as i64 {
        return Err(Error::Aliasing {
            grid: n,
            radius,
        });
    }
    let d = f.d();
    let mut data = vec![Complex64::new(0.0, 0.0); n.pow(d as u32)];
    match d {
        1 => {
            for (m, c) in f.coeffs() {
                data[bin_of(m.0[0], n)] += c;
            }
            fft_inplace(&mut data, true);
        }
        2 => {
            for (m, c) in f.coeffs() {
                data[bin_of(m.0[0], n) * n + bin_of(m.0[1], n)] += c;
            }
            // inverse transform along both axes
            for row in data.chunks_mut(n) {
                fft_inplace(row, true);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft_inplace(&mut col, true);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
        _ => unreachable!("d is 1 or 2"),
    }
    Ok(data)
}

/// Recover modes from grid samples, keeping |m|_max ≤ `keep_radius` and
/// dropping amplitudes at or below `floor_abs`.
pub fn modes_from_grid(
    values: &[Complex64],
    d: usize,
    n: usize,
    keep_radius: i64,
    floor_abs: f64,
) -> BTreeMap<ModeIndex, Complex64> {
    assert_eq!(values.len(), n.pow(d as u32));
    let mut data = values.to_vec();
    let scale = 1.0 / values.len() as f64;
    let mut out = BTreeMap::new();
    match d {
        1 => {
            fft_inplace(&mut data, false);
            for (b, v) in data.iter().enumerate() {
                let m = mode_of(b, n);
                let c = v * scale;
                if m.abs() <= keep_radius && c.norm() > floor_abs {
                    out.insert(ModeIndex::one(m), c);
                }
            }
        }
        2 => {
            for row in data.chunks_mut(n) {
                fft_inplace(row, false);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft_inplace(&mut col, false);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
            for b1 in 0..n {
                let m1 = mode_of(b1, n);
                if m1.abs() > keep_radius {
                    continue;
                }
                for b2 in 0..n {
                    let m2 = mode_of(b2, n);
                    if m2.abs() > keep_radius {
                        continue;
                    }
                    let c = data[b1 * n + b2] * scale;
                    if c.norm() > floor_abs {
                        out.insert(ModeIndex::two(m1, m2), c);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_roundtrip_1d() {
        let f = ScalarTorusFunction::from_mode_list(
            1,
            false,
            &[
                (ModeIndex::one(0), Complex64::new(0.3, 0.0)),
                (ModeIndex::one(2), Complex64::new(0.1, -0.25)),
                (ModeIndex::one(-2), Complex64::new(0.1, 0.25)),
                (ModeIndex::one(5), Complex64::new(-0.04, 0.0)),
                (ModeIndex::one(-5), Complex64::new(-0.04, 0.0)),
            ],
        )
        .unwrap();
        let vals = eval_grid(&f, 32).unwrap();
        let back = modes_from_grid(&vals, 1, 32, 16, 1e-14);
        for (m, c) in f.coeffs() {
            let r = back.get(m).copied().unwrap_or_default();
            assert!((r - c).norm() < 1e-13, "mode {m:?}");
        }
    }

    #[test]
    fn grid_roundtrip_2d() {
        let f = ScalarTorusFunction::from_mode_list(
            2,
            false,
            &[
                (ModeIndex::two(1, -2), Complex64::new(0.2, 0.1)),
                (ModeIndex::two(-1, 2), Complex64::new(0.2, -0.1)),
                (ModeIndex::two(0, 0), Complex64::new(-1.0, 0.0)),
            ],
        )
        .unwrap();
        let vals = eval_grid(&f, 16).unwrap();
        let back = modes_from_grid(&vals, 2, 16, 8, 1e-14);
        for (m, c) in f.coeffs() {
            let r = back.get(m).copied().unwrap_or_default();
            assert!((r - c).norm() < 1e-13);
        }
        assert_eq!(back.len(), f.coeffs().len());
    }

    #[test]
    fn aliasing_refused() {
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(20), 1.0);
        assert!(eval_grid(&f, 32).is_err());
    }
}
