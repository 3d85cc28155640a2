// Exploratory driver used while tuning thresholds; not part of the test suite.

use qpdyn::config::{RotationQuality, UhOptions};
use qpdyn::dynamics::fold_half;
use qpdyn::freq::rho_diophantine_gamma;
use qpdyn::kam::{reduce_chain, reduce_full, ChainMode, KamSchedule, KamState, RhoClass};
use qpdyn::spectrum::{
    locate_energy_by_rotation, rho_schrodinger, scan_spectrum, schrodinger_cocycle, Potential,
    ScanQuality,
};
use qpdyn::Frequency;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    let freq = Frequency::golden();

    if which == "chain" || which.is_empty() {
        // criterion 4 regime: AMO λ=0.01, mid-band energies with DC rho
        let pot = Potential::almost_mathieu(0.01);
        for e in [-1.2f64, -0.5, 0.3, 0.9, 1.4] {
            let t0 = Instant::now();
            let rho = rho_schrodinger(&pot, &freq, e, &RotationQuality::DEFAULT).unwrap();
            let gamma = rho_diophantine_gamma(&freq, rho.rho, 2.0, 100);
            let c = schrodinger_cocycle(&pot, &freq, e).unwrap();
            let st = KamState::from_cocycle(&c).unwrap();
            let sched = KamSchedule::with_norm(c.amap.average().op_norm());
            print!(
                "E={e:+.3} rho={:.6} gamma={gamma:.4} eps0={:.3e} ",
                rho.rho,
                st.eps()
            );
            match reduce_chain(
                &c,
                &sched,
                ChainMode::DiophantineRho {
                    gamma: 0.05,
                    tau: 2.0,
                },
            ) {
                Ok(out) => {
                    let sizes: Vec<String> = out
                        .report
                        .records
                        .iter()
                        .map(|r| format!("{:.2e}", r.eps_out))
                        .collect();
                    println!(
                        "steps={} sizes=[{}] resid={:.2e} bdist={:.3} t={:.2?}",
                        out.report.steps,
                        sizes.join(","),
                        out.report.conj_residual,
                        out.report.b_dist_to_const,
                        t0.elapsed()
                    );
                }
                Err(err) => println!("FAILED: {err}"),
            }
        }
    }

    if which == "scan" || which.is_empty() {
        let t0 = Instant::now();
        let pot = Potential::almost_mathieu(0.3);
        let scan = scan_spectrum(&pot, &freq, (-2.8, 2.8), 400, &ScanQuality::default()).unwrap();
        println!("scan took {:.2?}, gaps:", t0.elapsed());
        for g in &scan.gaps {
            println!(
                "  gap {} [{:.5}, {:.5}] label {:?} rho {:.6} collapsed {}",
                g.gap_id, g.lo, g.hi, g.label, g.rho, g.collapsed
            );
        }
    }

    if which == "rational" {
        // criterion 6: AMO λ=0.3 at the m=1 gap edge (right edge via plateau)
        let pot = Potential::almost_mathieu(0.3);
        let target = fold_half(freq.alpha()[0] / 2.0);
        println!("target rho {target:.8}");
        let t0 = Instant::now();
        let hit = qpdyn::spectrum::locate_gap_edge(&pot, &freq, target, -0.75, -0.2, 1e-9)
            .unwrap();
        println!(
            "edge E={:.10} rho={:.10} err={:.1e} evals={} t={:.2?}",
            hit.e,
            hit.rho,
            hit.rho_err,
            hit.evaluations,
            t0.elapsed()
        );
        let c = schrodinger_cocycle(&pot, &freq, hit.e).unwrap();
        let sched = KamSchedule::with_norm(c.amap.average().op_norm());
        let t0 = Instant::now();
        match reduce_full(
            &c,
            &sched,
            RhoClass::Rational {
                m0: qpdyn::fourier::ModeIndex::one(1),
            },
        ) {
            Ok(out) => {
                println!(
                    "branch={} steps={} deg={:?} final_eps={:.2e} resid={:.2e} rho(A)={:.3e} trace={:.8} t={:.2?}",
                    out.report.branch,
                    out.report.steps,
                    out.report.deg_accum,
                    out.report.final_eps,
                    out.report.conj_residual,
                    out.report.final_rotation,
                    out.state.a_const.trace(),
                    t0.elapsed()
                );
                for r in &out.report.records {
                    println!(
                        "  step {} {} site {:?} eps {:.2e} -> {:.2e}",
                        r.step_index, r.kind, r.site, r.eps_in, r.eps_out
                    );
                }
            }
            Err(err) => println!("FAILED: {err}"),
        }
    }

    if which == "dualize" {
        // criterion 7 regime: AMO λ=0.05, φ=0.1, sites m ∈ {0, 1, 3}
        let lambda = 0.05;
        let phase = 0.1;
        let pot = Potential::almost_mathieu(lambda);
        for m in [0i64, 1, 3] {
            let t0 = Instant::now();
            let site = qpdyn::fourier::ModeIndex::one(m);
            let raw = phase + freq.dot(&site);
            let target = fold_half(raw);
            let hit = locate_energy_by_rotation(&pot, &freq, target, (-2.5, 2.5), 2e-8, 1e-11);
            let hit = match hit {
                Ok(h) => h,
                Err(e) => {
                    println!("m={m}: locate failed: {e}");
                    continue;
                }
            };
            let c = schrodinger_cocycle(&pot, &freq, hit.e).unwrap();
            let sched = KamSchedule::with_norm(c.amap.average().op_norm());
            let gamma = rho_diophantine_gamma(&freq, hit.rho, 2.0, 1000);
            let red = reduce_full(
                &c,
                &sched,
                RhoClass::Diophantine {
                    gamma: gamma * 0.9,
                    tau: 2.0,
                },
            );
            let red = match red {
                Ok(r) => r,
                Err(e) => {
                    println!("m={m}: reduce failed: {e}");
                    continue;
                }
            };
            let op = qpdyn::duality::dual_operator(&pot, lambda, &freq, phase).unwrap();
            match qpdyn::duality::extract_eigenfunction(&red.state, &op, site, hit.e) {
                Ok((u, rep)) => {
                    let oracle = qpdyn::duality::match_truncated_oracle(&u, &op, 64);
                    let decay = qpdyn::duality::fit_decay_exponent(&u);
                    println!(
                        "m={m}: E={:.9} rho={:.9} steps={} deg={:?} overlap={:.6} dE={:.2e} resid={:.2e} prenorm={:.4}>={:.4}:{} decay={:.2} imag={:.1e} t={:.2?}",
                        hit.e, hit.rho, red.report.steps, red.report.deg_accum,
                        oracle.overlap, oracle.eigenvalue_mismatch, rep.residual,
                        rep.prenorm, rep.prenorm_bound, rep.norm_bound_ok, decay,
                        rep.imag_residue, t0.elapsed()
                    );
                }
                Err(e) => println!("m={m}: extract failed: {e}"),
            }
        }
    }

    if which == "gapopen" {
        // criterion 9b: normal form at the m=1 gap edge of AMO λ=0.3
        let pot = Potential::almost_mathieu(0.3);
        let target = fold_half(freq.alpha()[0] / 2.0);
        let hit = qpdyn::spectrum::locate_gap_edge(&pot, &freq, target, -0.75, -0.2, 1e-9)
            .unwrap();
        println!("edge E={:.10}", hit.e);
        let c = schrodinger_cocycle(&pot, &freq, hit.e).unwrap();
        let sched = KamSchedule::with_norm(c.amap.average().op_norm());
        let red = reduce_full(
            &c,
            &sched,
            RhoClass::Rational {
                m0: qpdyn::fourier::ModeIndex::one(1),
            },
        )
        .unwrap();
        let nf = qpdyn::gap::normal_form_at_edge(&red.state).unwrap();
        println!(
            "class {:?} c={:.6e} residual={:.2e}",
            nf.class, nf.c_offdiag, nf.residual
        );
        let w = qpdyn::fourier::ScalarTorusFunction::constant(1, 1.0);
        let data = qpdyn::gap::mp_averages(&nf, &w).unwrap();
        println!(
            "a1={:.6} a2={:.6} a3={:.6} dt={:.6} [y1]={:.6}",
            data.a1, data.a2, data.a3, data.d_tilde, data.y1
        );
        let pred = qpdyn::gap::predict_opening(&data, nf.c_offdiag);
        println!("prediction {:?}", pred);
        let t0 = Instant::now();
        let verdicts = qpdyn::gap::verify_opening(
            &pot,
            &freq,
            hit.e,
            &w,
            &[1e-3, -1e-3, 1e-4, -1e-4],
            pred,
            &UhOptions::patient(),
        )
        .unwrap();
        for v in &verdicts {
            println!("  t={:+.0e} uh={} expected={:?} ok={}", v.t, v.uh, v.expected_uh, v.consistent);
        }
        println!("verify took {:.2?}", t0.elapsed());
        // rate check at |t| = 1e-4 on the opening side
        for t in [1e-4f64, -1e-4] {
            let rate = qpdyn::gap::opening_rate(nf.c_offdiag, data.a1, t);
            if rate > 0.0 {
                let v_new = pot.effective().add(&w.scale(t)).unwrap();
                let p2 = Potential::new(v_new, 1.0).unwrap();
                let c2 = schrodinger_cocycle(&p2, &freq, hit.e).unwrap();
                let le = qpdyn::dynamics::lyapunov_exponent(&c2, 400_000, 8);
                println!(
                    "  t={t:+.0e}: predicted rate {rate:.5e}, measured LE {:.5e}, ratio {:.3}",
                    le.value,
                    le.value / rate
                );
            }
        }
    }

    if which == "uh-edge" {
        // probe UH detection around the m=1 gap (2ρ = α, ρ ≈ 0.309)
        let pot = Potential::almost_mathieu(0.3);
        let target = fold_half(freq.alpha()[0] / 2.0);
        println!("plateau rho target {target:.6}");
        let scanq = UhOptions::patient();
        for i in 0..=16 {
            let e = -1.1 + 0.05 * i as f64;
            let c = schrodinger_cocycle(&pot, &freq, e).unwrap();
            let rho = rho_schrodinger(&pot, &freq, e, &RotationQuality::FAST).unwrap();
            let lyap = qpdyn::dynamics::lyapunov_exponent(&c, 50_000, 4);
            let cert =
                qpdyn::dynamics::is_uniformly_hyperbolic_hinted(&c, &scanq, Some(rho.rho))
                    .unwrap();
            println!(
                "E={e:+.3} rho={:.6} lyap={:.4} uh={} n={:?} margin={:+.3}",
                rho.rho, lyap.value, cert.uh, cert.n_cert, cert.margin
            );
        }
    }
}
