//! Duality between quasi-periodic Schrödinger operators and long-range
//! lattice operators, and the extraction of localized eigenfunctions from
//! reduced cocycles.
//!
//! When the Schrödinger cocycle at energy E is conjugated to the rigid
//! rotation R_{φ''} by b, the complexified first row of b⁻¹ satisfies a
//! three-term recursion whose Fourier coefficients solve the dual eigenvalue
//! problem Σ_k λV_k u(n−k) + 2cos 2π(φ + ⟨n,α⟩)u(n) = E u(n). The decay of
//! the conjugacy's modes is the localization of the dual eigenfunction.

use crate::error::{Error, Result};
use crate::fourier::ModeIndex;
use crate::freq::{dist_to_int, Frequency};
use crate::kam::KamState;
use crate::spectrum::Potential;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// The long-range operator Σ_k v̂_k u_{m−k} + 2cos 2π(φ + ⟨m,α⟩) u_m on
/// ℓ²(ℤ^d).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LongRangeOperator {
    /// Real, even hopping amplitudes (coupling folded in): v̂(−k) = v̂(k).
    pub vhat: BTreeMap<ModeIndex, f64>,
    pub freq: Frequency,
    pub phase: f64,
}

/// Dual of the Schrödinger operator with potential λ·V: hopping = λ·V̂.
///
/// Requires an even potential so the hopping amplitudes are real and the
/// truncated operator is a real symmetric matrix.
pub fn dual_operator(
    pot: &Potential,
    lambda: f64,
    freq: &Frequency,
    phase: f64,
) -> Result<LongRangeOperator> {
    let mut vhat = BTreeMap::new();
    for (m, c) in pot.v.coeffs() {
        if c.im.abs() > 1e-12 * (1.0 + c.norm()) {
            return Err(Error::Degenerate(
                "dual operator needs an even potential (real Fourier coefficients)".into(),
            ));
        }
        let v = lambda * c.re;
        if v != 0.0 {
            vhat.insert(*m, v);
        }
    }
    Ok(LongRangeOperator {
        vhat,
        freq: freq.clone(),
        phase,
    })
}

impl LongRangeOperator {
    pub fn d(&self) -> usize {
        self.freq.d()
    }

    pub fn hopping_radius(&self) -> i64 {
        self.vhat.keys().map(|m| m.norm_max()).max().unwrap_or(0)
    }

    fn diagonal(&self, site: &ModeIndex) -> f64 {
        2.0 * (TAU * (self.phase + self.freq.dot(site))).cos()
    }

    /// Apply to a finitely supported vector, exactly.
    pub fn apply(&self, u: &BTreeMap<ModeIndex, f64>) -> BTreeMap<ModeIndex, f64> {
        let mut out: BTreeMap<ModeIndex, f64> = BTreeMap::new();
        for (site, amp) in u {
            *out.entry(*site).or_default() += self.diagonal(site) * amp;
            for (k, v) in &self.vhat {
                *out.entry(site.add(k)).or_default() += v * amp;
            }
        }
        out
    }
}

/// Enumerate the sites of the box |n|_max ≤ radius in index order.
pub fn box_sites(d: usize, radius: i64) -> Vec<ModeIndex> {
    let side = 2 * radius + 1;
    match d {
        1 => (0..side).map(|i| ModeIndex::one(i - radius)).collect(),
        2 => {
            let mut v = Vec::with_capacity((side * side) as usize);
            for i in 0..side {
                for j in 0..side {
                    v.push(ModeIndex::two(i - radius, j - radius));
                }
            }
            v
        }
        _ => unreachable!(),
    }
}

/// Finite-box matrix H[a,b] = v̂(site_a − site_b) + δ_{ab}·2cos 2π(φ+⟨a,α⟩);
/// symmetric by the evenness of v̂.
pub fn truncated_matrix(op: &LongRangeOperator, radius: i64) -> DMatrix<f64> {
    let sites = box_sites(op.d(), radius);
    let n = sites.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (a, sa) in sites.iter().enumerate() {
        h[(a, a)] = op.diagonal(sa);
        for (k, v) in &op.vhat {
            let target = sa.add(&k.neg());
            if target.norm_max() <= radius {
                let b = site_index(&target, op.d(), radius);
                h[(a, b)] += v;
            }
        }
    }
    h
}

fn site_index(site: &ModeIndex, d: usize, radius: i64) -> usize {
    let side = 2 * radius + 1;
    match d {
        1 => (site.0[0] + radius) as usize,
        _ => ((site.0[0] + radius) * side + (site.0[1] + radius)) as usize,
    }
}

/// A normalized eigenvector of the dual operator with its localization
/// center and the pre-normalization mass of the extracted conjugacy row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizedEigenfunction {
    pub amplitudes: BTreeMap<ModeIndex, f64>,
    pub eigenvalue: f64,
    pub center: ModeIndex,
    /// ℓ² norm of the conjugacy row before normalization.
    pub prenorm: f64,
}

impl LocalizedEigenfunction {
    pub fn amplitude(&self, site: &ModeIndex) -> f64 {
        self.amplitudes.get(site).copied().unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.amplitudes
            .values()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
    }

    pub fn support_radius(&self) -> i64 {
        self.amplitudes
            .keys()
            .map(|m| m.norm_max())
            .max()
            .unwrap_or(0)
    }

    /// CSV dump: n..., u(n).
    pub fn to_csv(&self, d: usize) -> String {
        let mut out = String::new();
        out.push_str(if d == 1 { "n,u\n" } else { "n1,n2,u\n" });
        for (m, a) in &self.amplitudes {
            let idx = m.0[..d]
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!("{idx},{a:.15e}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// Rotation angle of the reduced constant.
    pub phi_reduced: f64,
    /// +1 when φ'' ≡ φ + ⟨m',α⟩, −1 for the mirrored branch.
    pub sign: i8,
    pub m_prime: Vec<i64>,
    pub prenorm: f64,
    /// The lower bound (2‖b‖_{C⁰})⁻¹ the pre-normalization mass must clear.
    pub prenorm_bound: f64,
    pub norm_bound_ok: bool,
    /// ℓ² residual of the dual eigenvalue equation on the full lattice.
    pub residual: f64,
    pub residual_ok: bool,
    /// Relative ℓ² mass discarded when fixing the global phase.
    pub imag_residue: f64,
    /// Mass fraction on the half-integer sublattice of a doubled conjugacy.
    pub odd_mass_fraction: f64,
}

/// Residual tolerance above which an extraction is flagged.
pub const RESID_TOL: f64 = 1e-6;

/// Pull the dual eigenfunction out of a reduced cocycle.
///
/// `site` is the lattice site m whose energy E_m satisfies
/// ρ(E_m) ≡ ±(φ + ⟨m,α⟩); the eigenfunction centers at m' = m − deg_accum.
pub fn extract_eigenfunction(
    reduced: &KamState,
    op: &LongRangeOperator,
    site: ModeIndex,
    e_m: f64,
) -> Result<(LocalizedEigenfunction, ExtractionReport)> {
    let d = reduced.origin().d();
    let a = reduced.a_const;
    // the constant must be a rigid rotation
    let rot_residual = (a.a11 - a.a22).abs().max((a.a12 + a.a21).abs());
    if rot_residual > 1e-6 {
        return Err(Error::NotARotation(rot_residual));
    }
    let phi_reduced = (a.a21.atan2(a.a11) / TAU).rem_euclid(1.0);
    let m_prime = ModeIndex([
        site.0[0] - reduced.deg_accum.0[0],
        site.0[1] - reduced.deg_accum.0[1],
    ]);
    let target = op.phase + op.freq.dot(&m_prime);
    let d_plus = dist_to_int(phi_reduced - target);
    let d_minus = dist_to_int(-phi_reduced - target);
    let sign: i8 = if d_plus <= d_minus { 1 } else { -1 };
    if d_plus.min(d_minus) > 1e-4 {
        return Err(Error::RotationMismatch(d_plus.min(d_minus)));
    }

    // B = b⁻¹; the dual modes are those of B₁₁ − s·i·B₁₂ = b₂₂ + s·i·b₁₂
    let b = &reduced.b_accum;
    let s = sign as f64;
    let mut zhat: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
    for (m, c) in b.a22.coeffs() {
        *zhat.entry(*m).or_default() += c;
    }
    for (m, c) in b.a12.coeffs() {
        *zhat.entry(*m).or_default() += Complex64::new(0.0, s) * c;
    }

    // on a doubled conjugacy only the integer sublattice carries the dual
    // eigenfunction; report how much mass the half-integer part holds
    let mut odd_sq = 0.0;
    let mut even: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
    let is_double = b.is_double();
    for (m, c) in &zhat {
        if is_double && (m.0[0] % 2 != 0 || m.0[1] % 2 != 0) {
            odd_sq += c.norm_sqr();
        } else {
            let key = if is_double {
                ModeIndex([m.0[0] / 2, m.0[1] / 2])
            } else {
                *m
            };
            even.insert(key, *c);
        }
    }
    let even_sq: f64 = even.values().map(|c| c.norm_sqr()).sum();
    let prenorm = (even_sq + odd_sq).sqrt();
    let odd_mass_fraction = if prenorm > 0.0 {
        (odd_sq / (even_sq + odd_sq)).sqrt()
    } else {
        0.0
    };

    // ‖ẑ‖ ≥ (2‖b‖_{C⁰})⁻¹
    let b_c0 = sup_op_norm(b);
    let prenorm_bound = 0.5 / b_c0;
    let norm_bound_ok = prenorm >= prenorm_bound;

    // global phase from the dominant coefficient, then real projection
    let (peak, peak_val) = even
        .iter()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(m, c)| (*m, *c))
        .ok_or_else(|| Error::Degenerate("empty conjugacy row".into()))?;
    let phase_fix = Complex64::from_polar(1.0, -peak_val.arg());
    let mut imag_sq = 0.0;
    let mut real_amps: BTreeMap<ModeIndex, f64> = BTreeMap::new();
    for (m, c) in &even {
        let r = c * phase_fix;
        imag_sq += r.im * r.im;
        // eigenfunction of the phase-φ operator: w(j) = ẑ(j − m')
        real_amps.insert(m.add(&m_prime), r.re);
    }
    let real_norm = real_amps.values().map(|a| a * a).sum::<f64>().sqrt();
    if real_norm == 0.0 {
        return Err(Error::Degenerate("conjugacy row has no real mass".into()));
    }
    for a in real_amps.values_mut() {
        *a /= real_norm;
    }
    let imag_residue = (imag_sq).sqrt() / even_sq.max(1e-300).sqrt();
    let u = LocalizedEigenfunction {
        amplitudes: real_amps,
        eigenvalue: e_m,
        center: peak.add(&m_prime),
        prenorm,
    };
    let residual = eigen_residual(op, &u, e_m);
    let report = ExtractionReport {
        phi_reduced,
        sign,
        m_prime: m_prime.0[..d].to_vec(),
        prenorm,
        prenorm_bound,
        norm_bound_ok,
        residual,
        residual_ok: residual < RESID_TOL,
        imag_residue,
        odd_mass_fraction,
    };
    Ok((u, report))
}

fn sup_op_norm(b: &crate::fourier::MatrixTorusFunction) -> f64 {
    let per = b.a11.period();
    let d = b.d();
    let n = 256usize.max((2 * b.support_radius() + 2) as usize);
    let mut worst = 0.0f64;
    if d == 1 {
        for i in 0..n {
            worst = worst.max(b.eval(&[per * i as f64 / n as f64]).op_norm());
        }
    } else {
        let side = 64.max(2 * b.support_radius() as usize + 2);
        for i in 0..side {
            for j in 0..side {
                let th = [per * i as f64 / side as f64, per * j as f64 / side as f64];
                worst = worst.max(b.eval(&th).op_norm());
            }
        }
    }
    worst
}

/// ℓ² residual ‖(L̂ − E)u‖ over every lattice site the image touches.
pub fn eigen_residual(op: &LongRangeOperator, u: &LocalizedEigenfunction, e: f64) -> f64 {
    let mut r = op.apply(&u.amplitudes);
    for (site, amp) in &u.amplitudes {
        *r.entry(*site).or_default() -= e * amp;
    }
    r.values().map(|x| x * x).sum::<f64>().sqrt()
}

/// Polynomial tail certificate: |u(n)| ≤ ε⁻¹·|n − center|^{−C} for every
/// stored site with |n − center| ≥ (1−ε)N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodnessCertificate {
    pub n_scale: i64,
    pub c_exp: f64,
    pub eps: f64,
    pub passed: bool,
    pub worst_site: Option<Vec<i64>>,
    /// max over checked sites of |u(n)|·|n−center|^C·ε (≤ 1 iff passed).
    pub worst_ratio: f64,
    /// Truncation radius of the stored support the check ran on.
    pub support_radius: i64,
}

pub fn check_good(
    u: &LocalizedEigenfunction,
    n_scale: i64,
    c_exp: f64,
    eps: f64,
) -> GoodnessCertificate {
    let cutoff = ((1.0 - eps) * n_scale as f64).ceil() as i64;
    let mut worst_ratio = 0.0f64;
    let mut worst_site = None;
    for (m, a) in &u.amplitudes {
        let r = ModeIndex([m.0[0] - u.center.0[0], m.0[1] - u.center.0[1]]).norm_max();
        if r < cutoff.max(1) {
            continue;
        }
        let bound = (r as f64).powf(-c_exp) / eps;
        let ratio = a.abs() / bound;
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_site = Some(m.0.to_vec());
        }
    }
    GoodnessCertificate {
        n_scale,
        c_exp,
        eps,
        passed: worst_ratio <= 1.0,
        worst_site,
        worst_ratio,
        support_radius: u.support_radius(),
    }
}

/// Semi-uniform localization certificate: fits the smallest constant C with
/// |u(n)| ≤ C·max(1,|center|)^b·|n − center|^{−k̃} on the support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuleCertificate {
    pub k_tilde: f64,
    pub b_exp: f64,
    pub c_fit: f64,
    pub passed: bool,
    pub support_radius: i64,
}

pub fn check_sule(u: &LocalizedEigenfunction, k_tilde: f64, b_exp: f64) -> SuleCertificate {
    let center_weight = (u.center.norm_max().max(1)) as f64;
    let mut c_fit = 0.0f64;
    for (m, a) in &u.amplitudes {
        let r = ModeIndex([m.0[0] - u.center.0[0], m.0[1] - u.center.0[1]]).norm_max();
        if r == 0 {
            continue;
        }
        c_fit = c_fit.max(a.abs() * (r as f64).powf(k_tilde) / center_weight.powf(b_exp));
    }
    SuleCertificate {
        k_tilde,
        b_exp,
        c_fit,
        passed: c_fit.is_finite(),
        support_radius: u.support_radius(),
    }
}

/// Least-squares decay exponent: slope of log(shell max |u|) against
/// log(shell radius), sign-flipped.
pub fn fit_decay_exponent(u: &LocalizedEigenfunction) -> f64 {
    let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
    for (m, a) in &u.amplitudes {
        let r = ModeIndex([m.0[0] - u.center.0[0], m.0[1] - u.center.0[1]]).norm_max();
        if r >= 1 {
            let e = shells.entry(r).or_default();
            *e = e.max(a.abs());
        }
    }
    let pts: Vec<(f64, f64)> = shells
        .into_iter()
        .filter(|(_, a)| *a > 1e-14)
        .map(|(r, a)| ((r as f64).ln(), a.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    -slope
}

/// Best overlap of an extracted eigenfunction with the eigenvectors of the
/// truncated dual matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleMatch {
    pub overlap: f64,
    pub oracle_eigenvalue: f64,
    pub eigenvalue_mismatch: f64,
    pub flagged: bool,
}

pub fn match_truncated_oracle(
    u: &LocalizedEigenfunction,
    op: &LongRangeOperator,
    radius: i64,
) -> OracleMatch {
    let h = truncated_matrix(op, radius);
    let eig = h.symmetric_eigen();
    let sites = box_sites(op.d(), radius);
    let uv: Vec<f64> = sites.iter().map(|s| u.amplitude(s)).collect();
    let mut best = (0.0f64, 0.0f64);
    for k in 0..eig.eigenvalues.len() {
        let col = eig.eigenvectors.column(k);
        let dot: f64 = uv.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
        if dot.abs() > best.0 {
            best = (dot.abs(), eig.eigenvalues[k]);
        }
    }
    OracleMatch {
        overlap: best.0,
        oracle_eigenvalue: best.1,
        eigenvalue_mismatch: (best.1 - u.eigenvalue).abs(),
        flagged: best.0 < 0.99,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountingReport {
    pub fraction: f64,
    pub per_phase: Vec<f64>,
    pub radius: i64,
    pub n_scale: i64,
    pub c_exp: f64,
    pub eps: f64,
}

/// Finite-box surrogate of the counting criterion: the fraction of box
/// eigenvectors that are (N,C,ε)-good around their own center, averaged over
/// phases from a fixed Kronecker sequence.
pub fn pp_counting_check(
    op: &LongRangeOperator,
    radius: i64,
    n_scale: i64,
    c_exp: f64,
    eps: f64,
    n_phases: u32,
) -> CountingReport {
    let golden = (5.0f64.sqrt() - 1.0) / 2.0;
    let sites = box_sites(op.d(), radius);
    let per_phase: Vec<f64> = (0..n_phases)
        .map(|p| {
            let mut op_p = op.clone();
            op_p.phase = (op.phase + golden * p as f64).rem_euclid(1.0);
            let h = truncated_matrix(&op_p, radius);
            let eig = h.symmetric_eigen();
            let mut count = 0usize;
            for k in 0..eig.eigenvalues.len() {
                let col = eig.eigenvectors.column(k);
                let mut amplitudes = BTreeMap::new();
                let mut center = ModeIndex::ZERO;
                let mut peak = 0.0f64;
                for (i, s) in sites.iter().enumerate() {
                    let a = col[i];
                    if a != 0.0 {
                        amplitudes.insert(*s, a);
                    }
                    if a.abs() > peak {
                        peak = a.abs();
                        center = *s;
                    }
                }
                let u = LocalizedEigenfunction {
                    amplitudes,
                    eigenvalue: eig.eigenvalues[k],
                    center,
                    prenorm: 1.0,
                };
                if check_good(&u, n_scale, c_exp, eps).passed {
                    count += 1;
                }
            }
            count as f64 / (2 * n_scale) as f64
        })
        .collect();
    let fraction = per_phase.iter().sum::<f64>() / per_phase.len().max(1) as f64;
    CountingReport {
        fraction,
        per_phase,
        radius,
        n_scale,
        c_exp,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dual_of_amo_is_tridiagonal() {
        let pot = Potential::almost_mathieu(0.3);
        let freq = Frequency::golden();
        let op = dual_operator(&pot, 0.3, &freq, 0.1).unwrap();
        assert_abs_diff_eq!(op.vhat[&ModeIndex::one(1)], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(op.vhat[&ModeIndex::one(-1)], 0.3, epsilon = 1e-15);
        let h = truncated_matrix(&op, 3);
        assert_eq!(h.nrows(), 7);
        // symmetric, constant off-diagonal, cosine diagonal
        assert_eq!(h, h.transpose());
        assert_abs_diff_eq!(h[(0, 1)], 0.3);
        assert_abs_diff_eq!(h[(2, 5)], 0.0);
        let site = ModeIndex::one(-3);
        assert_abs_diff_eq!(
            h[(0, 0)],
            2.0 * (TAU * (0.1 + freq.dot(&site))).cos(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn zero_potential_dual_is_diagonal() {
        let pot = Potential::zero(1);
        let op = dual_operator(&pot, 1.0, &Frequency::golden(), 0.37).unwrap();
        assert!(op.vhat.is_empty());
        let h = truncated_matrix(&op, 2);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn goodness_certificate_on_polynomial_tail() {
        // |u(n)| ∝ (1+|n|)^{-4}: passes C = 3, fails C = 5
        let mut amplitudes = BTreeMap::new();
        for n in -40i64..=40 {
            amplitudes.insert(ModeIndex::one(n), (1.0 + n.abs() as f64).powi(-4));
        }
        let norm = amplitudes.values().map(|a| a * a).sum::<f64>().sqrt();
        for a in amplitudes.values_mut() {
            *a /= norm;
        }
        let u = LocalizedEigenfunction {
            amplitudes,
            eigenvalue: 0.0,
            center: ModeIndex::ZERO,
            prenorm: 1.0,
        };
        assert!(check_good(&u, 30, 3.0, 0.2).passed);
        assert!(!check_good(&u, 30, 5.0, 0.2).passed);
        // delta function passes anything
        let mut delta = BTreeMap::new();
        delta.insert(ModeIndex::ZERO, 1.0);
        let d = LocalizedEigenfunction {
            amplitudes: delta,
            eigenvalue: 0.0,
            center: ModeIndex::ZERO,
            prenorm: 1.0,
        };
        assert!(check_good(&d, 1, 10.0, 0.1).passed);
        // exact power law fits its exponent
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(ModeIndex::ZERO, 1.0);
        for n in 1i64..=40 {
            for s in [-1, 1] {
                amplitudes.insert(ModeIndex::one(s * n), (n as f64).powi(-4));
            }
        }
        let p = LocalizedEigenfunction {
            amplitudes,
            eigenvalue: 0.0,
            center: ModeIndex::ZERO,
            prenorm: 1.0,
        };
        let fitted = fit_decay_exponent(&p);
        assert!((fitted - 4.0).abs() < 1e-9, "fitted {fitted}");
    }

    #[test]
    fn counting_check_trivial_at_zero_coupling() {
        let pot = Potential::zero(1);
        let op = dual_operator(&pot, 0.0, &Frequency::golden(), 0.21).unwrap();
        let report = pp_counting_check(&op, 16, 16, 4.0, 0.2, 3);
        assert!(report.fraction >= 1.0, "fraction {}", report.fraction);
    }
}
