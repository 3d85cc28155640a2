use super::ScalarTorusFunction;

/// Analytic approximant f_j of a finitely differentiable function: a plateau
/// multiplier in mode space, 1 on |n| ≤ j/2, 0 beyond |n| > j, with a C^∞
/// smoothstep transition in between. The kernel depends on j only, never on
/// the smoothness class of f.
pub fn smooth_approximant(f: &ScalarTorusFunction, j: u32) -> ScalarTorusFunction {
    assert!(j >= 1);
    let modes: Vec<_> = f
        .coeffs()
        .iter()
        .map(|(m, c)| (*m, c * plateau(m.norm_max() as f64, j as f64)))
        .collect();
    ScalarTorusFunction::from_mode_list(f.d(), f.is_double(), &modes)
        .expect("same mode lattice")
        .clean(0.0)
}

fn bump(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// σ_j(r): 1 for r ≤ j/2, 0 for r > j, smooth monotone transition between.
fn plateau(r: f64, j: f64) -> f64 {
    if r <= j / 2.0 {
        1.0
    } else if r > j {
        0.0
    } else {
        let t = (2.0 * r - j) / j; // in (0, 1]
        let a = bump(1.0 - t);
        a / (a + bump(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::ModeIndex;

    #[test]
    fn constants_and_low_modes_untouched() {
        let c = ScalarTorusFunction::constant(1, 3.0);
        for j in [1, 2, 5, 20] {
            assert_eq!(smooth_approximant(&c, j), c);
        }
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 1.0);
        for j in [2, 3, 10] {
            assert_eq!(smooth_approximant(&f, j), f);
        }
    }

    #[test]
    fn tail_mass_matches_direct_kernel_application() {
        // modes up to |n| = 50, power-law amplitudes
        let modes: Vec<_> = (1..=50)
            .map(|n| {
                (
                    ModeIndex::one(n),
                    num_complex::Complex64::new(1.0 / (n as f64).powi(3), 0.0),
                )
            })
            .collect();
        let f = ScalarTorusFunction::from_half_modes(1, false, &modes);
        let j = 10;
        let fj = smooth_approximant(&f, j);
        // oracle: apply the kernel mode by mode and sum the removed mass
        let expected: f64 = f
            .coeffs()
            .iter()
            .map(|(m, c)| (c * (1.0 - plateau(m.norm_max() as f64, j as f64))).norm())
            .sum();
        let got = f.sub(&fj).unwrap().coeff_norm();
        assert!((got - expected).abs() < 1e-14);
        // plateau kept intact
        for n in 0..=5 {
            assert_eq!(fj.coeff(&ModeIndex::one(n)), f.coeff(&ModeIndex::one(n)));
        }
        // everything past j removed
        assert!(fj.support_radius() <= j as i64);
    }

    #[test]
    fn approximation_error_monotone_in_j() {
        let modes: Vec<_> = (1..=64)
            .map(|n| {
                (
                    ModeIndex::one(n),
                    num_complex::Complex64::new(0.7 / (n as f64).powi(4), 0.1 / (n as f64).powi(5)),
                )
            })
            .collect();
        let f = ScalarTorusFunction::from_half_modes(1, false, &modes);
        let mut prev = f64::INFINITY;
        for j in 1..=128 {
            let err = f.sub(&smooth_approximant(&f, j)).unwrap().coeff_norm();
            assert!(err <= prev + 1e-15, "j={j}: {err} > {prev}");
            prev = err;
        }
        // plateau covers the whole support once j/2 reaches the max mode
        assert_eq!(prev, 0.0);
    }
}
