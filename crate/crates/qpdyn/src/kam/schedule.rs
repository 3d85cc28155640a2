use serde::{Deserialize, Serialize};

/// Scale schedule and numerical thresholds of the KAM iteration.
///
/// The geometric scales l_j = M^(2^{j−1}), the target sizes
/// ε_m = c/((2‖A‖)^D m^{k/4}) and the truncation radii
/// N_j = ⌈2 ln(1/ε_{l_j}) / (1/l_j − 1/l_{j+1})⌉ follow the classical scheme;
/// the constants c, D, the resonance exponent σ and the chain threshold
/// factor are abstract in the theory and exposed as configuration here. The
/// defaults are tuned so that the quadratic contraction is observable at desk
/// scale, and every report echoes the values used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KamSchedule {
    /// Base scale M ≥ 10.
    pub big_m: u64,
    /// The constant c in the size targets.
    pub c_const: f64,
    /// The exponent D in (2‖A‖)^D.
    pub d_const: f64,
    /// Smoothness budget k entering ε_m = c(2‖A‖)^{-D} m^{-k/4}.
    pub k_smooth: u32,
    /// ‖A‖ of the initial constant.
    pub norm_a: f64,
    /// Diophantine exponent τ used in chain thresholds.
    pub tau: f64,
    /// Resonance exponent σ; a site is resonant when ‖2ρ − ⟨m,α⟩‖ < ε^σ.
    pub sigma: f64,
    /// Chain threshold factor T(τ) (abstract in the theory; configured).
    pub t_tau: f64,
    /// Per-mode amplified-coefficient budget factor for the solved Y.
    pub y_budget: f64,
    /// Budget exponent: the per-step Y budget is y_budget · ε^{budget_exp}.
    pub budget_exp: f64,
    /// A site only counts as resonant when ‖2ρ − ⟨m,α⟩‖ is also below this
    /// absolute cap; larger distances are ordinary small divisors.
    pub res_dist_cap: f64,
    /// Stop once ‖f‖ drops below this.
    pub target_eps: f64,
    pub max_steps: u32,
    /// Cap on truncation / resonance scan radii.
    pub radius_cap: i64,
}

impl KamSchedule {
    pub fn with_norm(norm_a: f64) -> Self {
        KamSchedule {
            big_m: 10,
            c_const: 1e-2,
            d_const: 2.0,
            k_smooth: 8,
            norm_a: norm_a.max(1.0),
            tau: 1.5,
            sigma: 0.1,
            t_tau: 1.0,
            y_budget: 1.0,
            budget_exp: 0.6,
            res_dist_cap: 0.02,
            target_eps: 1e-12,
            max_steps: 24,
            radius_cap: 100_000,
        }
    }

    /// l_j = M^(2^{j−1}); saturates to f64 infinity harmlessly for large j.
    pub fn scale(&self, j: u32) -> f64 {
        (self.big_m as f64).powf(2.0f64.powi(j as i32 - 1))
    }

    /// ε_m = c / ((2‖A‖)^D · m^{k/4}).
    pub fn eps_at(&self, m: f64) -> f64 {
        self.c_const / ((2.0 * self.norm_a).powf(self.d_const) * m.powf(self.k_smooth as f64 / 4.0))
    }

    pub fn eps_scale(&self, j: u32) -> f64 {
        self.eps_at(self.scale(j))
    }

    /// Truncation radius N_j = ⌈2 ln(1/ε_{l_j}) / (1/l_j − 1/l_{j+1})⌉, capped.
    pub fn trunc_radius(&self, j: u32) -> i64 {
        let lj = self.scale(j);
        let lj1 = self.scale(j + 1);
        let window = 1.0 / lj - 1.0 / lj1;
        let n = (2.0 / window * (1.0 / self.eps_scale(j)).ln()).ceil();
        if n.is_finite() && n < self.radius_cap as f64 {
            (n as i64).max(1)
        } else {
            self.radius_cap
        }
    }

    /// The threshold ε₀'(r, r') = c (2‖A‖)^{-D} (r − r')^{Dτ} at the first
    /// two scales, entering the chain switchover criterion.
    pub fn eps0_prime(&self) -> f64 {
        let r = 1.0 / self.scale(1);
        let rp = 1.0 / self.scale(2);
        self.c_const / (2.0 * self.norm_a).powf(self.d_const)
            * (r - rp).powf(self.d_const * self.tau)
    }

    /// Chain-entry threshold for a rotation number in DC_α(γ, τ):
    /// T(τ) γ^{11} ε₀'.
    pub fn chain_threshold(&self, gamma: f64) -> f64 {
        self.t_tau * gamma.powi(11) * self.eps0_prime()
    }

    /// Validity of the schedule invariants on the first few scales.
    pub fn validate(&self) -> crate::Result<()> {
        if self.big_m < 10 {
            return Err(crate::Error::Config("schedule base M must be >= 10".into()));
        }
        if !(self.c_const > 0.0 && self.d_const > 0.0) {
            return Err(crate::Error::Config("schedule constants must be positive".into()));
        }
        for j in 1..4 {
            if !(self.scale(j + 1) > self.scale(j)) {
                return Err(crate::Error::Config("scales l_j must increase".into()));
            }
            if !(self.eps_scale(j + 1) < self.eps_scale(j)) {
                return Err(crate::Error::Config("targets ε_{l_j} must decrease".into()));
            }
            if self.trunc_radius(j) <= 0 {
                return Err(crate::Error::Config("truncation radii must be positive".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_invariants_hold() {
        let s = KamSchedule::with_norm(2.0);
        s.validate().unwrap();
        assert_eq!(s.scale(1), 10.0);
        assert_eq!(s.scale(2), 100.0);
        assert_eq!(s.scale(3), 10_000.0);
        // ε decreasing in m
        assert!(s.eps_at(20.0) < s.eps_at(10.0));
        // N_j positive and increasing over the first scales
        assert!(s.trunc_radius(1) > 0);
        assert!(s.trunc_radius(2) > s.trunc_radius(1));
    }

    #[test]
    fn radius_saturates_at_cap() {
        let s = KamSchedule::with_norm(2.0);
        assert_eq!(s.trunc_radius(12), s.radius_cap);
    }
}
