//! Frequency vectors and their arithmetic (Diophantine) diagnostics.

use crate::error::{Error, Result};
use crate::fourier::ModeIndex;
use serde::{Deserialize, Serialize};

/// Distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// A translation vector α ∈ T^d, d ∈ {1,2}, with optional Diophantine
/// parameters recorded alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    alpha: Vec<f64>,
    pub dc_params: Option<(f64, f64)>,
}

/// Result of an exhaustive Diophantine scan up to a mode radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiophantineCheck {
    pub passes: bool,
    /// Mode minimizing |n|^τ · dist(⟨n,α⟩, Z).
    pub worst_mode: ModeIndex,
    pub worst_value: f64,
    pub kappa: f64,
    pub tau: f64,
    pub radius: i64,
}

impl Frequency {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() > 2 {
            return Err(Error::Config(format!(
                "frequency dimension {} not in {{1,2}}",
                alpha.len()
            )));
        }
        Ok(Frequency {
            alpha: alpha.into_iter().map(|a| a.rem_euclid(1.0)).collect(),
            dc_params: None,
        })
    }

    /// The golden mean (√5 − 1)/2, the canonical strongly Diophantine choice.
    pub fn golden() -> Self {
        Frequency {
            alpha: vec![(5.0f64.sqrt() - 1.0) / 2.0],
            dc_params: Some((0.2, 1.5)),
        }
    }

    /// (golden, √2 − 1): a rationally independent pair for d = 2.
    pub fn golden_sqrt2() -> Self {
        Frequency {
            alpha: vec![(5.0f64.sqrt() - 1.0) / 2.0, 2.0f64.sqrt() - 1.0],
            dc_params: Some((0.03, 3.0)),
        }
    }

    pub fn with_dc(mut self, kappa: f64, tau: f64) -> Self {
        self.dc_params = Some((kappa, tau));
        self
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// ⟨n, α⟩ for an integer mode.
    pub fn dot(&self, m: &ModeIndex) -> f64 {
        let mut s = m.0[0] as f64 * self.alpha[0];
        if self.alpha.len() == 2 {
            s += m.0[1] as f64 * self.alpha[1];
        }
        s
    }

    /// Iterate modes 0 < |n|_max ≤ radius in shells, lexicographic within a
    /// shell. For d = 1 only (n), (−n) per shell.
    pub fn modes_up_to(&self, radius: i64) -> Vec<ModeIndex> {
        let mut out = Vec::new();
        match self.d() {
            1 => {
                for r in 1..=radius {
                    out.push(ModeIndex::one(-r));
                    out.push(ModeIndex::one(r));
                }
            }
            2 => {
                for r in 1..=radius {
                    let mut shell = Vec::new();
                    for n1 in -r..=r {
                        for n2 in -r..=r {
                            if n1.abs().max(n2.abs()) == r {
                                shell.push(ModeIndex::two(n1, n2));
                            }
                        }
                    }
                    shell.sort();
                    out.extend(shell);
                }
            }
            _ => unreachable!(),
        }
        out
    }

    /// Exhaustive scan of the condition dist(⟨n,α⟩, Z) > κ/|n|^τ for
    /// 0 < |n| ≤ radius.
    pub fn is_diophantine(&self, kappa: f64, tau: f64, radius: i64) -> DiophantineCheck {
        let mut worst_mode = ModeIndex::one(1);
        let mut worst_ratio = f64::INFINITY;
        let mut worst_value = f64::INFINITY;
        for r in 1..=radius {
            let shell: Vec<ModeIndex> = match self.d() {
                1 => vec![ModeIndex::one(r), ModeIndex::one(-r)],
                _ => {
                    let mut s = Vec::new();
                    for n1 in -r..=r {
                        for n2 in -r..=r {
                            if n1.abs().max(n2.abs()) == r {
                                s.push(ModeIndex::two(n1, n2));
                            }
                        }
                    }
                    s.sort();
                    s
                }
            };
            let bound = kappa / (r as f64).powf(tau);
            for m in shell {
                let v = dist_to_int(self.dot(&m));
                let ratio = v / bound;
                if ratio < worst_ratio {
                    worst_ratio = ratio;
                    worst_mode = m;
                    worst_value = v * (r as f64).powf(tau);
                }
            }
        }
        DiophantineCheck {
            passes: worst_ratio > 1.0,
            worst_mode,
            worst_value,
            kappa,
            tau,
            radius,
        }
    }

    /// Smallest dist(⟨n,α⟩, Z) over 0 < |n| ≤ radius, a rational-dependence
    /// diagnostic.
    pub fn irrationality_margin(&self, radius: i64) -> (ModeIndex, f64) {
        let mut worst = (ModeIndex::one(1), f64::INFINITY);
        for m in self.modes_up_to(radius) {
            let v = dist_to_int(self.dot(&m));
            if v < worst.1 {
                worst = (m, v);
            }
        }
        worst
    }
}

/// Check 2φ against the frequency module: ‖2φ − ⟨m,α⟩‖_{ℝ/ℤ} ≥ γ/(|m|+1)^τ
/// for all |m| ≤ radius (m = 0 included).
pub fn rho_diophantine_check(
    freq: &Frequency,
    rho: f64,
    gamma: f64,
    tau: f64,
    radius: i64,
) -> DiophantineCheck {
    let mut worst_mode = ModeIndex::ZERO;
    let mut worst_ratio = dist_to_int(2.0 * rho) / gamma;
    let mut worst_value = dist_to_int(2.0 * rho);
    for m in freq.modes_up_to(radius) {
        let v = dist_to_int(2.0 * rho - freq.dot(&m));
        let bound = gamma / ((m.norm_max() + 1) as f64).powf(tau);
        let ratio = v / bound;
        if ratio < worst_ratio {
            worst_ratio = ratio;
            worst_mode = m;
            worst_value = v * ((m.norm_max() + 1) as f64).powf(tau);
        }
    }
    DiophantineCheck {
        passes: worst_ratio >= 1.0,
        worst_mode,
        worst_value,
        kappa: gamma,
        tau,
        radius,
    }
}

/// Largest γ (up to the scan radius) for which 2φ ∈ DC_α(γ, τ).
pub fn rho_diophantine_gamma(freq: &Frequency, rho: f64, tau: f64, radius: i64) -> f64 {
    let mut gamma = dist_to_int(2.0 * rho);
    for m in freq.modes_up_to(radius) {
        let v = dist_to_int(2.0 * rho - freq.dot(&m));
        gamma = gamma.min(v * ((m.norm_max() + 1) as f64).powf(tau));
    }
    gamma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_is_diophantine() {
        let f = Frequency::golden();
        let check = f.is_diophantine(0.2, 1.5, 10_000);
        assert!(check.passes, "worst {:?}", check);
    }

    #[test]
    fn rational_fails_at_denominator() {
        let f = Frequency::new(vec![1.0 / 3.0]).unwrap();
        let check = f.is_diophantine(0.2, 1.5, 100);
        assert!(!check.passes);
        assert_eq!(check.worst_mode.0[0].abs(), 3);
        assert!(check.worst_value < 1e-12);
    }

    #[test]
    fn two_dim_pair_is_diophantine_at_small_radius() {
        let f = Frequency::golden_sqrt2();
        let check = f.is_diophantine(0.03, 3.0, 1_000);
        assert!(check.passes, "worst {:?}", check);
    }

    #[test]
    fn rho_dc_detects_exact_resonance() {
        let f = Frequency::golden();
        let rho = f.dot(&ModeIndex::one(3)) / 2.0;
        let check = rho_diophantine_check(&f, rho, 0.1, 2.0, 10);
        assert!(!check.passes);
        assert_eq!(check.worst_mode, ModeIndex::one(3));
    }
}
