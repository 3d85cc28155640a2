use super::{grid, ModeIndex, NormEstimate, NormKind};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// A finitely supported Fourier series on T^d or 2T^d.
///
/// Invariants maintained by all constructors and operations:
/// - only finitely many modes, stored in lexicographic order;
/// - if `real` is set, coeff(−n) = conj(coeff(n)) for every stored n;
/// - on the doubled torus (`double`), stored index n means frequency n/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTorusFunction {
    d: usize,
    double: bool,
    real: bool,
    coeffs: BTreeMap<ModeIndex, Complex64>,
}

/// Relative floor below which amplitudes are dropped by `clean`.
pub(crate) const CLEAN_REL_FLOOR: f64 = 1e-17;

impl ScalarTorusFunction {
    pub fn zero(d: usize) -> Self {
        assert!(d == 1 || d == 2);
        ScalarTorusFunction {
            d,
            double: false,
            real: true,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, value: f64) -> Self {
        let mut f = Self::zero(d);
        if value != 0.0 {
            f.coeffs
                .insert(ModeIndex::ZERO, Complex64::new(value, 0.0));
        }
        f
    }

    /// amplitude · cos(2π⟨n,θ⟩): the conjugate mode pair (n, −n).
    pub fn cosine(d: usize, n: ModeIndex, amplitude: f64) -> Self {
        let mut f = Self::zero(d);
        let half = Complex64::new(0.5 * amplitude, 0.0);
        *f.coeffs.entry(n).or_default() += half;
        *f.coeffs.entry(n.neg()).or_default() += half;
        f.drop_zeros();
        f
    }

    /// amplitude · sin(2π⟨n,θ⟩).
    pub fn sine(d: usize, n: ModeIndex, amplitude: f64) -> Self {
        let mut f = Self::zero(d);
        let half = Complex64::new(0.0, -0.5 * amplitude);
        *f.coeffs.entry(n).or_default() += half;
        *f.coeffs.entry(n.neg()).or_default() -= half;
        f.drop_zeros();
        f
    }

    /// Build from an explicit mode list. Verifies the reality pairing when
    /// `real` is requested.
    pub fn from_mode_list(
        d: usize,
        double: bool,
        modes: &[(ModeIndex, Complex64)],
    ) -> Result<Self> {
        assert!(d == 1 || d == 2);
        let mut coeffs: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
        for (m, c) in modes {
            if m.0[d..].iter().any(|&x| x != 0) {
                return Err(Error::DimensionMismatch(d, 2));
            }
            *coeffs.entry(*m).or_default() += c;
        }
        let mut scale = 0.0f64;
        for c in coeffs.values() {
            scale = scale.max(c.norm());
        }
        let mut real = true;
        for (m, c) in &coeffs {
            let paired = coeffs.get(&m.neg()).copied().unwrap_or_default();
            if (paired.conj() - c).norm() > 1e-12 * (1.0 + scale) {
                real = false;
                break;
            }
        }
        let mut f = ScalarTorusFunction {
            d,
            double,
            real,
            coeffs,
        };
        f.drop_zeros();
        Ok(f)
    }

    /// Build a real function from coefficients given for modes n ≥ 0 only
    /// (lexicographically positive); the pairing is filled in.
    pub fn from_half_modes(
        d: usize,
        double: bool,
        modes: &[(ModeIndex, Complex64)],
    ) -> Self {
        let mut coeffs: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
        for (m, c) in modes {
            if m.is_zero() {
                coeffs.insert(*m, Complex64::new(c.re, 0.0));
            } else {
                *coeffs.entry(*m).or_default() += c;
                *coeffs.entry(m.neg()).or_default() += c.conj();
            }
        }
        let mut f = ScalarTorusFunction {
            d,
            double,
            real: true,
            coeffs,
        };
        f.drop_zeros();
        f
    }

    pub(crate) fn from_map(
        d: usize,
        double: bool,
        real: bool,
        coeffs: BTreeMap<ModeIndex, Complex64>,
    ) -> Self {
        let mut f = ScalarTorusFunction {
            d,
            double,
            real,
            coeffs,
        };
        if real {
            f.symmetrize();
        }
        f.drop_zeros();
        f
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_double(&self) -> bool {
        self.double
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &BTreeMap<ModeIndex, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, m: &ModeIndex) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    pub fn support_radius(&self) -> i64 {
        self.coeffs.keys().map(|m| m.norm_max()).max().unwrap_or(0)
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    fn drop_zeros(&mut self) {
        self.coeffs.retain(|_, c| c.norm() > 0.0);
    }

    /// Force exact Hermitian pairing (used after grid transforms of real data).
    fn symmetrize(&mut self) {
        let keys: Vec<ModeIndex> = self.coeffs.keys().copied().collect();
        let mut sym = BTreeMap::new();
        for m in keys {
            let c = self.coeff(&m);
            let paired = self.coeff(&m.neg());
            sym.insert(m, 0.5 * (c + paired.conj()));
        }
        self.coeffs = sym;
        if let Some(c0) = self.coeffs.get_mut(&ModeIndex::ZERO) {
            c0.im = 0.0;
        }
    }

    /// Frequency scale: stored mode n means frequency n·s with s = 1 or 1/2.
    fn freq_scale(&self) -> f64 {
        if self.double {
            0.5
        } else {
            1.0
        }
    }

    /// Fundamental period of the domain per axis (1 or 2).
    pub fn period(&self) -> f64 {
        if self.double {
            2.0
        } else {
            1.0
        }
    }

    pub fn eval(&self, theta: &[f64]) -> Complex64 {
        assert_eq!(theta.len(), self.d);
        let s = self.freq_scale();
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.coeffs {
            let mut phase = m.0[0] as f64 * theta[0];
            if self.d == 2 {
                phase += m.0[1] as f64 * theta[1];
            }
            let (im, re) = (TAU * s * phase).sin_cos();
            acc += c * Complex64::new(re, im);
        }
        acc
    }

    pub fn eval_real(&self, theta: &[f64]) -> f64 {
        self.eval(theta).re
    }

    /// θ ↦ θ + α, i.e. multiply mode n by e^{2πi s⟨n,α⟩}.
    pub fn shift(&self, alpha: &[f64]) -> Self {
        assert_eq!(alpha.len(), self.d);
        let s = self.freq_scale();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, c)| {
                let mut phase = m.0[0] as f64 * alpha[0];
                if self.d == 2 {
                    phase += m.0[1] as f64 * alpha[1];
                }
                let (im, re) = (TAU * s * phase).sin_cos();
                (*m, c * Complex64::new(re, im))
            })
            .collect();
        ScalarTorusFunction {
            d: self.d,
            double: self.double,
            real: self.real,
            coeffs,
        }
    }

    /// Represent the same function on the doubled torus (modes n → 2n).
    pub fn promote_to_double(&self) -> Self {
        if self.double {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, c)| (m.scale(2), *c))
            .collect();
        ScalarTorusFunction {
            d: self.d,
            double: true,
            real: self.real,
            coeffs,
        }
    }

    /// If every mode is even, rewrite on the single torus.
    pub fn try_demote(&self) -> Option<Self> {
        if !self.double {
            return Some(self.clone());
        }
        if self
            .coeffs
            .keys()
            .any(|m| m.0[0] % 2 != 0 || m.0[1] % 2 != 0)
        {
            return None;
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, c)| (ModeIndex([m.0[0] / 2, m.0[1] / 2]), *c))
            .collect();
        Some(ScalarTorusFunction {
            d: self.d,
            double: false,
            real: self.real,
            coeffs,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<(Self, Self)> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(self.d, other.d));
        }
        if self.double == other.double {
            Ok((self.clone(), other.clone()))
        } else if self.double {
            Ok((self.clone(), other.promote_to_double()))
        } else {
            Ok((self.promote_to_double(), other.clone()))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.check_compatible(other)?;
        let mut coeffs = a.coeffs;
        for (m, c) in b.coeffs {
            *coeffs.entry(m).or_default() += c;
        }
        let mut f = ScalarTorusFunction {
            d: a.d,
            double: a.double,
            real: a.real && b.real,
            coeffs,
        };
        f.drop_zeros();
        Ok(f)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product; coefficient supports convolve (radii add).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.check_compatible(other)?;
        let mut coeffs: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
        for (m1, c1) in &a.coeffs {
            for (m2, c2) in &b.coeffs {
                *coeffs.entry(m1.add(m2)).or_default() += c1 * c2;
            }
        }
        let mut f = ScalarTorusFunction {
            d: a.d,
            double: a.double,
            real: a.real && b.real,
            coeffs,
        };
        f.drop_zeros();
        Ok(f)
    }

    pub fn scale(&self, s: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(m, c)| (*m, c * s)).collect();
        ScalarTorusFunction {
            d: self.d,
            double: self.double,
            real: self.real,
            coeffs,
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|(m, c)| (*m, c * s)).collect();
        ScalarTorusFunction {
            d: self.d,
            double: self.double,
            real: false,
            coeffs,
        }
    }

    /// Mean over the torus; the mode-0 amplitude.
    pub fn average(&self) -> f64 {
        self.coeff(&ModeIndex::ZERO).re
    }

    pub fn truncate(&self, radius: i64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(m, _)| m.norm_max() <= radius)
            .map(|(m, c)| (*m, *c))
            .collect();
        ScalarTorusFunction {
            d: self.d,
            double: self.double,
            real: self.real,
            coeffs,
        }
    }

    /// Drop amplitudes below `floor` (absolute).
    pub fn clean(&self, floor: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| c.norm() > floor)
            .map(|(m, c)| (*m, *c))
            .collect();
        ScalarTorusFunction {
            d: self.d,
            double: self.double,
            real: self.real,
            coeffs,
        }
    }

    /// Coefficient ℓ¹ norm Σ|f̂(n)| — the h → 0 analytic majorant, an upper
    /// bound for the sup norm.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Majorant of sup over the strip |Im θ| < h: Σ |f̂(n)| e^{2π|n|₁ s h}.
    ///
    /// Monotone nondecreasing in h and dominating every C⁰ evaluation.
    pub fn analytic_norm(&self, h: f64) -> NormEstimate {
        let s = self.freq_scale();
        let value = self
            .coeffs
            .iter()
            .map(|(m, c)| c.norm() * (TAU * m.norm_l1() as f64 * s * h).exp())
            .sum();
        NormEstimate::analytic(h, value)
    }

    /// Partial derivative ∂^order along `axis`, exact mode-wise.
    pub fn derivative(&self, axis: usize, order: u32) -> Self {
        assert!(axis < self.d);
        if order == 0 {
            return self.clone();
        }
        let s = self.freq_scale();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, c)| {
                let factor = Complex64::new(0.0, TAU * s * m.0[axis] as f64).powu(order);
                (*m, c * factor)
            })
            .collect();
        let mut f = ScalarTorusFunction {
            d: self.d,
            double: self.double,
            real: self.real,
            coeffs,
        };
        f.drop_zeros();
        f
    }

    /// Grid sup of |f|, on `grid_n` points per axis (grown if the support
    /// needs finer sampling).
    pub fn sup_norm_grid(&self, grid_n: usize) -> f64 {
        let need = (2 * self.support_radius() + 2).max(grid_n as i64) as usize;
        let n = need.next_power_of_two();
        let vals = grid::eval_grid(self, n).expect("grid grown past support");
        vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ‖f‖_k: max over multi-indices of total order ≤ k of the grid sup of
    /// the corresponding derivative.
    pub fn ck_norm(&self, k: u32, grid_n: usize) -> NormEstimate {
        let mut value: f64 = 0.0;
        match self.d {
            1 => {
                for order in 0..=k {
                    value = value.max(self.derivative(0, order).sup_norm_grid(grid_n));
                }
            }
            2 => {
                for o1 in 0..=k {
                    for o2 in 0..=(k - o1) {
                        value = value.max(
                            self.derivative(0, o1)
                                .derivative(1, o2)
                                .sup_norm_grid(grid_n),
                        );
                    }
                }
            }
            _ => unreachable!(),
        }
        NormEstimate {
            kind: NormKind::Ck(k),
            value,
        }
    }

    /// Structured-text form: deterministic lexicographic mode order.
    pub fn to_repr(&self) -> ScalarRepr {
        ScalarRepr {
            d: self.d,
            is_double: self.double,
            modes: self
                .coeffs
                .iter()
                .map(|(m, c)| {
                    let mut row: Vec<f64> = m.0[..self.d].iter().map(|&x| x as f64).collect();
                    row.push(c.re);
                    row.push(c.im);
                    row
                })
                .collect(),
        }
    }

    pub fn from_repr(repr: &ScalarRepr) -> Result<Self> {
        if repr.d != 1 && repr.d != 2 {
            return Err(Error::Config(format!("bad dimension {}", repr.d)));
        }
        let mut modes = Vec::new();
        for row in &repr.modes {
            if row.len() != repr.d + 2 {
                return Err(Error::Config("bad mode row length".into()));
            }
            let n: Vec<i64> = row[..repr.d].iter().map(|&x| x.round() as i64).collect();
            modes.push((
                ModeIndex::from_slice(&n),
                Complex64::new(row[repr.d], row[repr.d + 1]),
            ));
        }
        let mut f = Self::from_mode_list(repr.d, false, &modes)?;
        f.double = repr.is_double;
        Ok(f)
    }
}

/// Serialized form of [`ScalarTorusFunction`]: `{d, is_double, modes: [[n..., re, im], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarRepr {
    pub d: usize,
    pub is_double: bool,
    pub modes: Vec<Vec<f64>>,
}

impl Serialize for ScalarTorusFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScalarTorusFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ScalarRepr::deserialize(d)?;
        ScalarTorusFunction::from_repr(&repr).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_eval_and_average() {
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 1.0);
        assert_abs_diff_eq!(f.eval_real(&[0.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval_real(&[0.25]), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.average(), 0.0);
        assert!(f.is_real());
    }

    #[test]
    fn analytic_norm_two_mode_closed_form() {
        // cos 2πθ has amplitudes 1/2 at ±1: majorant = e^{2πh}
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 1.0);
        let h = 0.3;
        assert_abs_diff_eq!(
            f.analytic_norm(h).value,
            (TAU * h).exp(),
            epsilon = 1e-12
        );
        // monotone in h
        assert!(f.analytic_norm(0.1).value <= f.analytic_norm(0.2).value);
    }

    #[test]
    fn ck_norm_of_cosine() {
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 1.0);
        assert_abs_diff_eq!(f.ck_norm(0, 256).value, 1.0, epsilon = 1e-12);
        // first derivative amplitude 2π dominates
        assert_abs_diff_eq!(f.ck_norm(1, 256).value, TAU, epsilon = 1e-10);
        let c = ScalarTorusFunction::constant(1, -2.5);
        assert_abs_diff_eq!(c.ck_norm(3, 64).value, 2.5);
    }

    #[test]
    fn shift_is_phase_rotation() {
        let alpha = [0.3819660112501051];
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(3), 0.7);
        let g = f.shift(&alpha);
        for th in [0.0, 0.13, 0.77] {
            assert_abs_diff_eq!(
                g.eval_real(&[th]),
                f.eval_real(&[th + alpha[0]]),
                epsilon = 1e-13
            );
        }
        let back = g.shift(&[-alpha[0]]);
        for (m, c) in f.coeffs() {
            assert!((back.coeff(m) - c).norm() < 1e-15);
        }
    }

    #[test]
    fn mul_matches_grid_product() {
        let f = ScalarTorusFunction::cosine(1, ModeIndex::one(1), 2.0);
        let g = ScalarTorusFunction::sine(1, ModeIndex::one(2), -0.5);
        let p = f.mul(&g).unwrap();
        for th in [0.1, 0.37, 0.9] {
            assert_abs_diff_eq!(
                p.eval_real(&[th]),
                f.eval_real(&[th]) * g.eval_real(&[th]),
                epsilon = 1e-13
            );
        }
        assert_eq!(p.support_radius(), 3);
    }

    #[test]
    fn double_torus_eval_and_demote() {
        // frequency 1/2: period-2 function
        let f = ScalarTorusFunction::from_half_modes(
            1,
            true,
            &[(ModeIndex::one(1), Complex64::new(0.5, 0.0))],
        );
        assert_abs_diff_eq!(f.eval_real(&[0.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval_real(&[1.0]), -1.0, epsilon = 1e-15);
        assert!(f.try_demote().is_none());
        let g = f.mul(&f).unwrap(); // cos² has integer modes only
        let gd = g.try_demote().unwrap();
        assert!(!gd.is_double());
        assert_abs_diff_eq!(gd.average(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn serialization_roundtrip_is_deterministic() {
        let f = ScalarTorusFunction::from_half_modes(
            1,
            false,
            &[
                (ModeIndex::one(2), Complex64::new(0.25, -0.1)),
                (ModeIndex::one(5), Complex64::new(-0.03, 0.0)),
            ],
        );
        let s1 = serde_json::to_string(&f).unwrap();
        let s2 = serde_json::to_string(&f).unwrap();
        assert_eq!(s1, s2);
        let back: ScalarTorusFunction = serde_json::from_str(&s1).unwrap();
        assert_eq!(back, f);
        assert!(back.is_real());
    }
}
