//! Schrödinger cocycles, integrated density of states, spectrum scanning and
//! gap labeling.
//!
//! The cocycle of H x = x_{n+1} + x_{n−1} + λV(θ+nα)x_n at energy E is
//! S_E(θ) = [[E − λV(θ), −1], [1, 0]]. Its rotation number, folded to
//! [0, 1/2] by the ρ ↔ 1−ρ symmetry, decreases from 1/2 below the spectrum
//! to 0 above it; the density of states is N = 1 − 2ρ, and on every gap
//! 2ρ ≡ ⟨m,α⟩ (mod ℤ) for a unique integer label m.

use crate::config::{RotationQuality, UhOptions};
use crate::dynamics::{
    fold_half, is_uniformly_hyperbolic_hinted, lyapunov_exponent, rotation_number, Cocycle,
};
use crate::error::{Error, Result};
use crate::fourier::{MatrixTorusFunction, ModeIndex, ScalarTorusFunction};
use crate::freq::{dist_to_int, Frequency};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A real potential with its coupling factored out: the effective potential
/// is coupling · v(θ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential {
    pub v: ScalarTorusFunction,
    pub coupling: f64,
}

impl Potential {
    pub fn zero(d: usize) -> Self {
        Potential {
            v: ScalarTorusFunction::zero(d),
            coupling: 0.0,
        }
    }

    /// The almost Mathieu family: V(θ) = 2 cos 2πθ with coupling λ.
    pub fn almost_mathieu(lambda: f64) -> Self {
        Potential {
            v: ScalarTorusFunction::cosine(1, ModeIndex::one(1), 2.0),
            coupling: lambda,
        }
    }

    pub fn new(v: ScalarTorusFunction, coupling: f64) -> Result<Self> {
        if !v.is_real() {
            return Err(Error::Degenerate("potential must be real-valued".into()));
        }
        Ok(Potential { v, coupling })
    }

    pub fn d(&self) -> usize {
        self.v.d()
    }

    /// coupling · v as a single scalar function.
    pub fn effective(&self) -> ScalarTorusFunction {
        self.v.scale(self.coupling)
    }
}

/// S_E^V as an SL(2,ℝ) cocycle; det = 1 exactly by construction.
pub fn schrodinger_cocycle(pot: &Potential, freq: &Frequency, e: f64) -> Result<Cocycle> {
    let d = pot.d();
    if d != freq.d() {
        return Err(Error::DimensionMismatch(d, freq.d()));
    }
    let a11 = ScalarTorusFunction::constant(d, e).sub(&pot.effective())?;
    let amap = MatrixTorusFunction::from_entries(
        a11,
        ScalarTorusFunction::constant(d, -1.0),
        ScalarTorusFunction::constant(d, 1.0),
        ScalarTorusFunction::zero(d),
    )?;
    Cocycle::new(freq.clone(), amap)
}

/// Folded rotation number ρ ∈ [0, 1/2] of the Schrödinger cocycle.
pub fn rho_schrodinger(
    pot: &Potential,
    freq: &Frequency,
    e: f64,
    q: &RotationQuality,
) -> Result<crate::dynamics::RotationEstimate> {
    let c = schrodinger_cocycle(pot, freq, e)?;
    let mut est = rotation_number(&c, q)?;
    est.rho = fold_half(est.rho);
    Ok(est)
}

/// Integrated density of states through the rotation number: N = 1 − 2ρ.
pub fn ids(pot: &Potential, freq: &Frequency, e: f64, q: &RotationQuality) -> Result<f64> {
    Ok(1.0 - 2.0 * rho_schrodinger(pot, freq, e, q)?.rho)
}

/// The unique |m| ≤ radius with ‖2ρ − ⟨m,α⟩‖_{ℝ/ℤ} < tol, if exactly one
/// exists. Several candidates mean the tolerance is too loose for the radius.
pub fn gap_label(rho: f64, freq: &Frequency, radius: i64, tol: f64) -> Result<Option<ModeIndex>> {
    let mut hits: Vec<ModeIndex> = Vec::new();
    if dist_to_int(2.0 * rho) < tol {
        hits.push(ModeIndex::ZERO);
    }
    for m in freq.modes_up_to(radius) {
        if dist_to_int(2.0 * rho - freq.dot(&m)) < tol {
            hits.push(m);
        }
    }
    match hits.len() {
        0 => Ok(None),
        1 => Ok(Some(hits[0])),
        n => Err(Error::AmbiguousLabel(n)),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanQuality {
    pub rotation: RotationQuality,
    pub uh: UhOptions,
    /// Iterations for the per-energy Lyapunov estimate.
    pub lyap_iters: u64,
}

impl Default for ScanQuality {
    fn default() -> Self {
        ScanQuality {
            rotation: RotationQuality {
                n_iters: 30_000,
                n_phases: 16,
            },
            uh: UhOptions::scan(),
            lyap_iters: 20_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyDiagnostics {
    pub e: f64,
    /// Folded rotation number in [0, 1/2].
    pub rho: f64,
    pub rho_err: f64,
    pub lyap: f64,
    pub uh: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapRecord {
    pub gap_id: usize,
    /// Refined inner edges of the gap interval.
    pub lo: f64,
    pub hi: f64,
    pub label: Option<Vec<i64>>,
    pub rho: f64,
    /// Width below the scan step: only a candidate, delegated to the
    /// normal-form test for confirmation.
    pub collapsed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub energies: Vec<EnergyDiagnostics>,
    pub gaps: Vec<GapRecord>,
    /// gap_id per energy index; usize::MAX when not in a detected gap.
    pub gap_of_energy: Vec<usize>,
}

impl SpectrumScan {
    /// CSV: E, rho, lyap, uh, gap_id, label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,rho,lyap,uh,gap_id,label\n");
        for (i, e) in self.energies.iter().enumerate() {
            let gid = self.gap_of_energy[i];
            let (gs, ls) = if gid == usize::MAX {
                (String::new(), String::new())
            } else {
                let label = self.gaps[gid]
                    .label
                    .as_ref()
                    .map(|l| {
                        l.iter()
                            .map(|x| x.to_string())
                            .collect::<Vec<_>>()
                            .join(";")
                    })
                    .unwrap_or_default();
                (gid.to_string(), label)
            };
            out.push_str(&format!(
                "{:.12},{:.12},{:.12},{},{},{}\n",
                e.e, e.rho, e.lyap, u8::from(e.uh), gs, ls
            ));
        }
        out
    }
}

fn refine_edge(
    pot: &Potential,
    freq: &Frequency,
    mut inside: f64,
    mut outside: f64,
    rho_hint: f64,
    uh: &UhOptions,
) -> f64 {
    // 3 refinement levels, factor 8 each: locate the UH transition
    for _ in 0..3 {
        let step = (inside - outside) / 8.0;
        let mut new_inside = inside;
        let mut new_outside = outside;
        for k in 1..8 {
            let e = outside + step * k as f64;
            let c = match schrodinger_cocycle(pot, freq, e) {
                Ok(c) => c,
                Err(_) => break,
            };
            let cert = is_uniformly_hyperbolic_hinted(&c, uh, Some(rho_hint));
            if cert.map(|c| c.uh).unwrap_or(false) {
                new_inside = e;
                break;
            } else {
                new_outside = e;
            }
        }
        inside = new_inside;
        outside = new_outside;
    }
    0.5 * (inside + outside)
}

/// Scan an energy range: per-energy rotation number, Lyapunov exponent and
/// hyperbolicity flag, with UH runs strictly inside the range reported as
/// gaps, labeled by the rotation number at their center.
pub fn scan_spectrum(
    pot: &Potential,
    freq: &Frequency,
    e_range: (f64, f64),
    n_grid: usize,
    quality: &ScanQuality,
) -> Result<SpectrumScan> {
    if n_grid < 16 {
        return Err(Error::Config(
            "scan grid must have at least 16 points".into(),
        ));
    }
    let (e0, e1) = e_range;
    let energies: Vec<f64> = (0..n_grid)
        .map(|i| e0 + (e1 - e0) * i as f64 / (n_grid - 1) as f64)
        .collect();
    let diags: Vec<EnergyDiagnostics> = energies
        .par_iter()
        .map(|&e| -> Result<EnergyDiagnostics> {
            let c = schrodinger_cocycle(pot, freq, e)?;
            let est = rotation_number(&c, &quality.rotation)?;
            let raw_rho = est.rho;
            let lyap = lyapunov_exponent(&c, quality.lyap_iters, 4);
            let cert = is_uniformly_hyperbolic_hinted(&c, &quality.uh, Some(raw_rho))?;
            Ok(EnergyDiagnostics {
                e,
                rho: fold_half(raw_rho),
                rho_err: est.error_bound,
                lyap: lyap.value,
                uh: cert.uh,
            })
        })
        .collect::<Result<_>>()?;

    // maximal UH runs strictly inside the scanned range
    let mut gaps = Vec::new();
    let mut gap_of_energy = vec![usize::MAX; diags.len()];
    let mut i = 0;
    while i < diags.len() {
        if !diags[i].uh {
            i += 1;
            continue;
        }
        let start = i;
        while i < diags.len() && diags[i].uh {
            i += 1;
        }
        let end = i; // exclusive
        if start == 0 || end == diags.len() {
            continue; // touches the range boundary: outside-spectrum region
        }
        let gap_id = gaps.len();
        for g in gap_of_energy.iter_mut().take(end).skip(start) {
            *g = gap_id;
        }
        let mid = (start + end) / 2;
        let rho = diags[mid].rho;
        let label = gap_label(rho, freq, 24, 1e-3)
            .unwrap_or(None)
            .map(|m| m.0[..pot.d()].to_vec());
        let lo = refine_edge(
            pot,
            freq,
            diags[start].e,
            diags[start - 1].e,
            rho,
            &quality.uh,
        );
        let hi = refine_edge(pot, freq, diags[end - 1].e, diags[end].e, rho, &quality.uh);
        gaps.push(GapRecord {
            gap_id,
            lo,
            hi,
            label,
            rho,
            collapsed: end - start <= 1,
        });
    }
    Ok(SpectrumScan {
        energies: diags,
        gaps,
        gap_of_energy,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocatedEnergy {
    pub e: f64,
    pub rho: f64,
    pub rho_err: f64,
    pub evaluations: u32,
}

/// Locate a gap edge: the boundary of the plateau where ρ equals the gap's
/// rotation value. `inside_e` must sit on the plateau, `outside_e` beyond the
/// edge. Bisection on the plateau predicate with staged estimator quality;
/// the edge is resolved to `tol_e` and the returned energy is the innermost
/// bracketed plateau point (the gap side), so downstream reductions land on
/// the non-elliptic side of the edge.
pub fn locate_gap_edge(
    pot: &Potential,
    freq: &Frequency,
    rho_gap: f64,
    inside_e: f64,
    outside_e: f64,
    tol_e: f64,
) -> Result<LocatedEnergy> {
    let mut evals = 0u32;
    let mut inside = inside_e;
    let mut outside = outside_e;
    let q_for = |width: f64| {
        if width > 1e-3 {
            RotationQuality {
                n_iters: 50_000,
                n_phases: 8,
            }
        } else if width > 1e-6 {
            RotationQuality {
                n_iters: 400_000,
                n_phases: 8,
            }
        } else {
            RotationQuality {
                n_iters: 2_000_000,
                n_phases: 8,
            }
        }
    };
    {
        let est = rho_schrodinger(pot, freq, inside, &q_for(1.0))?;
        evals += 1;
        if (est.rho - rho_gap).abs() > 1e-4 {
            return Err(Error::BracketMiss {
                lo: inside_e,
                hi: outside_e,
                target: rho_gap,
            });
        }
    }
    while (inside - outside).abs() > tol_e {
        let mid = 0.5 * (inside + outside);
        let q = q_for((inside - outside).abs());
        let est = rho_schrodinger(pot, freq, mid, &q)?;
        evals += 1;
        let on_plateau = (est.rho - rho_gap).abs() < (3.0 * est.error_bound).max(1e-7);
        if on_plateau {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    let e = inside;
    let est = rho_schrodinger(pot, freq, e, &q_for(0.0))?;
    Ok(LocatedEnergy {
        e,
        rho: est.rho,
        rho_err: est.error_bound,
        evaluations: evals,
    })
}

/// Bisection on the monotone map E ↦ ρ(E) (folded, nonincreasing) to
/// |ρ(E) − target| < tol_rho, with estimator quality ramped as the bracket
/// shrinks.
pub fn locate_energy_by_rotation(
    pot: &Potential,
    freq: &Frequency,
    target_rho: f64,
    bracket: (f64, f64),
    tol_rho: f64,
    tol_e: f64,
) -> Result<LocatedEnergy> {
    let (mut lo, mut hi) = bracket;
    let mut evals = 0u32;
    let mut measure = |e: f64, q: &RotationQuality| -> Result<(f64, f64)> {
        evals += 1;
        let est = rho_schrodinger(pot, freq, e, q)?;
        Ok((est.rho, est.error_bound))
    };
    let q_coarse = RotationQuality {
        n_iters: 20_000,
        n_phases: 8,
    };
    let q_mid = RotationQuality {
        n_iters: 200_000,
        n_phases: 16,
    };
    let q_fine = RotationQuality {
        n_iters: 2_000_000,
        n_phases: 16,
    };
    let (rho_lo, _) = measure(lo, &q_coarse)?;
    let (rho_hi, _) = measure(hi, &q_coarse)?;
    if !(rho_lo >= target_rho - 1e-4 && rho_hi <= target_rho + 1e-4) {
        return Err(Error::BracketMiss {
            lo,
            hi,
            target: target_rho,
        });
    }
    let mut best = (0.5 * (lo + hi), f64::INFINITY, f64::INFINITY);
    loop {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        let q = if width > 1e-2 {
            &q_coarse
        } else if width > 1e-5 {
            &q_mid
        } else {
            &q_fine
        };
        let (rho, err) = measure(mid, q)?;
        if (rho - target_rho).abs() < best.1 {
            best = (mid, (rho - target_rho).abs(), err);
        }
        if (rho - target_rho).abs() < tol_rho && q.n_iters >= q_fine.n_iters {
            return Ok(LocatedEnergy {
                e: mid,
                rho,
                rho_err: err,
                evaluations: evals,
            });
        }
        if width < tol_e {
            let (rho, err) = measure(best.0, &q_fine)?;
            return Ok(LocatedEnergy {
                e: best.0,
                rho,
                rho_err: err,
                evaluations: evals,
            });
        }
        if rho > target_rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn free_cocycle_construction() {
        let pot = Potential::zero(1);
        let freq = Frequency::golden();
        let c = schrodinger_cocycle(&pot, &freq, 0.0).unwrap();
        let m = c.amap.eval(&[0.3]);
        assert_abs_diff_eq!(m.a11, 0.0);
        assert_abs_diff_eq!(m.det(), 1.0);
        // ρ(S_0^0) = arccos(0)/2π = 1/4
        let est = rho_schrodinger(&pot, &freq, 0.0, &RotationQuality::FAST).unwrap();
        assert_abs_diff_eq!(est.rho, 0.25, epsilon = 1e-7);
    }

    #[test]
    fn amo_cocycle_matches_hand_formula() {
        let pot = Potential::almost_mathieu(0.05);
        let freq = Frequency::golden();
        let c = schrodinger_cocycle(&pot, &freq, 0.3).unwrap();
        for th in [0.0, 0.21, 0.73] {
            let want = 0.3 - 2.0 * 0.05 * (TAU * th).cos();
            assert_abs_diff_eq!(c.amap.eval(&[th]).a11, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn free_ids_closed_form() {
        let pot = Potential::zero(1);
        let freq = Frequency::golden();
        for e in [-1.5f64, 0.0, 1.0] {
            let n = ids(&pot, &freq, e, &RotationQuality::FAST).unwrap();
            let want = 1.0 - (e / 2.0).acos() / std::f64::consts::PI;
            assert_abs_diff_eq!(n, want, epsilon = 1e-5);
        }
        // above the spectrum N = 1
        let n = ids(&pot, &freq, 2.5, &RotationQuality::FAST).unwrap();
        assert!((n - 1.0).abs() < 1e-4);
    }

    #[test]
    fn gap_label_basics() {
        let freq = Frequency::golden();
        assert_eq!(
            gap_label(0.0, &freq, 5, 1e-6).unwrap(),
            Some(ModeIndex::ZERO)
        );
        let rho = freq.dot(&ModeIndex::one(1)) / 2.0;
        assert_eq!(
            gap_label(rho, &freq, 5, 1e-6).unwrap(),
            Some(ModeIndex::one(1))
        );
        assert_eq!(gap_label(0.2077, &freq, 3, 1e-7).unwrap(), None);
        // loose tolerance with large radius: ambiguous
        assert!(gap_label(0.2, &freq, 40, 0.2).is_err());
    }

    #[test]
    fn locate_free_energies() {
        let pot = Potential::zero(1);
        let freq = Frequency::golden();
        // ρ = 1/4 at E = 0
        let hit =
            locate_energy_by_rotation(&pot, &freq, 0.25, (-2.2, 2.2), 1e-7, 1e-9).unwrap();
        assert!(hit.e.abs() < 1e-5, "E = {}", hit.e);
        // ρ = 1/6 at E = 2cos(π/3) = 1
        let hit =
            locate_energy_by_rotation(&pot, &freq, 1.0 / 6.0, (-2.2, 2.2), 1e-7, 1e-9).unwrap();
        assert!((hit.e - 1.0).abs() < 1e-4, "E = {}", hit.e);
    }

    #[test]
    fn free_scan_has_no_interior_gaps() {
        let pot = Potential::zero(1);
        let freq = Frequency::golden();
        let scan = scan_spectrum(
            &pot,
            &freq,
            (-2.5, 2.5),
            48,
            &ScanQuality {
                rotation: RotationQuality {
                    n_iters: 4_000,
                    n_phases: 4,
                },
                uh: UhOptions {
                    n_max: 48,
                    grid_n: 64,
                    ..UhOptions::scan()
                },
                lyap_iters: 2_000,
            },
        )
        .unwrap();
        assert!(scan.gaps.is_empty(), "gaps: {:?}", scan.gaps);
        let inside: Vec<_> = scan.energies.iter().filter(|d| d.e.abs() < 1.8).collect();
        assert!(inside.iter().all(|d| !d.uh));
        let outside: Vec<_> = scan.energies.iter().filter(|d| d.e.abs() > 2.1).collect();
        assert!(outside.iter().all(|d| d.uh));
    }
}
