//! The cohomological equation Y(θ+α)·A − A·Y(θ) = A·g(θ), solved mode by
//! mode.
//!
//! Per mode n the equation reads μ_n A⁻¹Y_n A − Y_n = g_n with
//! μ_n = e^{2πi⟨n,α⟩}; the linear operator's eigenvalues are the classical
//! small divisors: μ_n − 1 on the diagonal channel and
//! e^{2πi(⟨n,α⟩ ± 2ρ(A))} − 1 on the off-diagonal channels for elliptic A
//! (|λ|^{∓2}-scaled versions for hyperbolic A). Each mode is a direct 4×4
//! complex solve, which covers the parabolic case without an eigenbasis.

use crate::error::{Error, Result};
use crate::fourier::{MatrixTorusFunction, ModeIndex, ScalarTorusFunction};
use crate::freq::Frequency;
use crate::mat2::{Mat2, Sl2Class};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct CohomologySolution {
    pub y: MatrixTorusFunction,
    /// sup over retained modes of 1/|smallest divisor|.
    pub max_inv_denominator: f64,
    /// Coefficient majorant of Y(θ+α)A − AY(θ) − Ag(θ); bounds the grid sup.
    pub residual: f64,
}

fn unit_phase(x: f64) -> Complex64 {
    let (im, re) = (TAU * x).sin_cos();
    Complex64::new(re, im)
}

/// Smallest |eigenvalue| of the mode-n operator, from the spectral class of A.
pub(crate) fn min_divisor(class: &Sl2Class, x: f64) -> f64 {
    let mu = unit_phase(x);
    let d0 = (mu - 1.0).norm();
    match class {
        Sl2Class::Elliptic(rho) => {
            let dp = (unit_phase(x + 2.0 * rho) - 1.0).norm();
            let dm = (unit_phase(x - 2.0 * rho) - 1.0).norm();
            d0.min(dp).min(dm)
        }
        Sl2Class::Parabolic(_) => d0,
        Sl2Class::Hyperbolic(lam) => {
            let l2 = lam * lam;
            let dp = (mu * l2 - 1.0).norm();
            let dm = (mu / l2 - 1.0).norm();
            d0.min(dp).min(dm)
        }
    }
}

fn solve_mode(
    a: &Matrix4<Complex64>,
    g: [Complex64; 4],
) -> Option<[Complex64; 4]> {
    let rhs = Vector4::from_row_slice(&g);
    a.lu().solve(&rhs).map(|y| [y[0], y[1], y[2], y[3]])
}

/// Operator of the mode-n equation acting on vec(Y) with (i,j) ↦ 2i+j.
fn mode_operator(a: Mat2, mu: Complex64) -> Matrix4<Complex64> {
    let ainv = a.adjugate(); // det = 1
    let ac = [
        [Complex64::new(a.a11, 0.0), Complex64::new(a.a12, 0.0)],
        [Complex64::new(a.a21, 0.0), Complex64::new(a.a22, 0.0)],
    ];
    let ai = [
        [Complex64::new(ainv.a11, 0.0), Complex64::new(ainv.a12, 0.0)],
        [Complex64::new(ainv.a21, 0.0), Complex64::new(ainv.a22, 0.0)],
    ];
    let mut l = Matrix4::<Complex64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for m in 0..2 {
                    // (μ A⁻¹ Y A)_{ij} = Σ μ ai[i][k] Y[k][m] ac[m][j]
                    let mut v = mu * ai[i][k] * ac[m][j];
                    if i == k && j == m {
                        v -= 1.0;
                    }
                    l[(2 * i + j, 2 * k + m)] += v;
                }
            }
        }
    }
    l
}

/// Solve Y(θ+α)·A − A·Y(θ) = A·g(θ) over the retained modes of g.
///
/// g must be mean-free with the excluded modes already removed; any retained
/// divisor below `denom_floor` is an error naming the offending mode (the
/// caller must have classified it resonant).
pub fn solve_cohomological(
    a: Mat2,
    g: &MatrixTorusFunction,
    freq: &Frequency,
    n_trunc: i64,
    exclusions: &BTreeSet<ModeIndex>,
    denom_floor: f64,
) -> Result<CohomologySolution> {
    let scale = g.coeff_norm();
    let g = g.truncate(n_trunc);
    g.check_traceless(1e-9 * (1.0 + scale))?;
    if g.coeff_frobenius(&ModeIndex::ZERO) > 1e-12 * (1.0 + scale) {
        return Err(Error::Degenerate(
            "cohomological right-hand side must be mean-free".into(),
        ));
    }
    for m in exclusions {
        if g.coeff_frobenius(m) > 1e-12 * (1.0 + scale) {
            return Err(Error::Degenerate(format!(
                "excluded mode {m:?} still carries weight"
            )));
        }
    }
    let s = if g.is_double() { 0.5 } else { 1.0 };
    let class = a.classify(1e-12);
    let d = g.d();

    let mut entries: [BTreeMap<ModeIndex, Complex64>; 4] = Default::default();
    let mut max_inv = 0.0f64;
    for n in g.mode_support() {
        if n.is_zero() || exclusions.contains(&n) {
            continue;
        }
        // reality pairing: solve lexicographically positive modes, conjugate
        if n < n.neg() {
            continue;
        }
        let x = s * freq.dot(&n);
        let div = min_divisor(&class, x);
        if div < denom_floor {
            return Err(Error::SmallDivisor {
                mode: n,
                value: div,
                floor: denom_floor,
            });
        }
        max_inv = max_inv.max(1.0 / div);
        let l = mode_operator(a, unit_phase(x));
        let gn = [
            g.a11.coeff(&n),
            g.a12.coeff(&n),
            g.a21.coeff(&n),
            g.a22.coeff(&n),
        ];
        let yn = solve_mode(&l, gn).ok_or(Error::SmallDivisor {
            mode: n,
            value: div,
            floor: denom_floor.max(f64::MIN_POSITIVE),
        })?;
        for (slot, v) in yn.iter().enumerate() {
            entries[slot].insert(n, *v);
            entries[slot].insert(n.neg(), v.conj());
        }
    }

    let mk = |m: &BTreeMap<ModeIndex, Complex64>| {
        ScalarTorusFunction::from_map(d, g.is_double(), true, m.clone())
    };
    let y = MatrixTorusFunction {
        a11: mk(&entries[0]),
        a12: mk(&entries[1]),
        a21: mk(&entries[2]),
        a22: mk(&entries[3]),
    };

    // residual of the solved equation, exact in mode space
    let lhs = y
        .shift_by_freq(freq)
        .mul_const_right(a)
        .sub(&y.mul_const_left(a))?;
    let residual = lhs.sub(&g.mul_const_left(a))?.coeff_norm();

    Ok(CohomologySolution {
        y,
        max_inv_denominator: max_inv,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::ScalarTorusFunction;

    fn single_offdiag_mode(n: i64, c: f64) -> MatrixTorusFunction {
        // g = c·cos(2πnθ) on the (1,2)/(2,1) sl(2,R) slots
        let g12 = ScalarTorusFunction::cosine(1, ModeIndex::one(n), c);
        let g21 = ScalarTorusFunction::sine(1, ModeIndex::one(n), 0.5 * c);
        MatrixTorusFunction::from_entries(
            ScalarTorusFunction::zero(1),
            g12,
            g21,
            ScalarTorusFunction::zero(1),
        )
        .unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sol = solve_cohomological(
            Mat2::rotation_turns(0.3),
            &MatrixTorusFunction::zero(1),
            &Frequency::golden(),
            10,
            &BTreeSet::new(),
            1e-12,
        )
        .unwrap();
        assert_eq!(sol.y.coeff_norm(), 0.0);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn single_mode_offdiag_closed_form() {
        // For a rotation R_φ the +2ρ channel coefficient is g/(e^{2πi(nα±2φ)}−1);
        // verify through the defining equation's residual instead of expanding
        // the channel decomposition by hand.
        let freq = Frequency::golden();
        let a = Mat2::rotation_turns(0.137);
        let g = single_offdiag_mode(3, 1e-3);
        let sol =
            solve_cohomological(a, &g, &freq, 10, &BTreeSet::new(), 1e-9).unwrap();
        assert!(sol.residual < 1e-15, "residual {}", sol.residual);
        assert!(sol.y.trace_defect() < 1e-15);
    }

    #[test]
    fn single_mode_diagonal_closed_form() {
        // diagonal g at mode n: coefficient divides by e^{2πinα} − 1 exactly
        let freq = Frequency::golden();
        let a = Mat2::rotation_turns(0.137);
        let gd = ScalarTorusFunction::cosine(1, ModeIndex::one(5), 2e-4);
        let g = MatrixTorusFunction::from_entries(
            gd.clone(),
            ScalarTorusFunction::zero(1),
            ScalarTorusFunction::zero(1),
            gd.scale(-1.0),
        )
        .unwrap();
        let sol =
            solve_cohomological(a, &g, &freq, 10, &BTreeSet::new(), 1e-9).unwrap();
        assert!(sol.residual < 1e-16);
        // the diagonal channel in the rotation eigenbasis is (y11 - i·y12)-like;
        // check the hand value through one Fourier coefficient of the equation
        let n = ModeIndex::one(5);
        let denom = (Complex64::from_polar(1.0, TAU * freq.dot(&n)) - 1.0).norm();
        let expect = gd.coeff(&n).norm() / denom;
        // the solved coefficient magnitude across slots at mode n
        let got = sol.y.coeff_frobenius(&n);
        // same order; the rotation mixes slots, so compare within a factor 3
        assert!(got > expect / 3.0 && got < expect * 3.0, "{got} vs {expect}");
    }

    #[test]
    fn divisor_floor_triggers() {
        let freq = Frequency::golden();
        // 2ρ exactly at ⟨3,α⟩ → the +channel divisor at mode 3 vanishes
        let rho = freq.dot(&ModeIndex::one(3)) / 2.0;
        let a = Mat2::rotation_turns(rho);
        let g = single_offdiag_mode(3, 1e-3);
        let err = solve_cohomological(a, &g, &freq, 10, &BTreeSet::new(), 1e-6);
        match err {
            Err(Error::SmallDivisor { mode, .. }) => assert_eq!(mode.0[0].abs(), 3),
            other => panic!("expected small divisor, got {other:?}"),
        }
        // excluding the mode makes it solvable
        let mut excl = BTreeSet::new();
        excl.insert(ModeIndex::one(3));
        excl.insert(ModeIndex::one(-3));
        let g_clean = g.truncate(2); // removes mode 3 entirely here
        let sol = solve_cohomological(a, &g_clean, &freq, 10, &excl, 1e-6).unwrap();
        assert!(sol.residual < 1e-15);
    }

    #[test]
    fn hyperbolic_constant_is_well_conditioned() {
        let freq = Frequency::golden();
        let a = Mat2::diag(1.7, 1.0 / 1.7);
        let g = single_offdiag_mode(2, 1e-2);
        let sol = solve_cohomological(a, &g, &freq, 10, &BTreeSet::new(), 1e-9).unwrap();
        assert!(sol.residual < 1e-15);
        assert!(sol.max_inv_denominator < 20.0);
    }
}
