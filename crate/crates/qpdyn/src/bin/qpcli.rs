//! Batch CLI over the qpdyn pipelines: reproducible runs from a single flat
//! JSON config, artifacts to an output directory, deterministic given the
//! same config and seed.

use clap::{Parser, Subcommand};
use qpdyn::config::{RotationQuality, UhOptions};
use qpdyn::duality::{
    dual_operator, extract_eigenfunction, fit_decay_exponent, match_truncated_oracle,
    pp_counting_check,
};
use qpdyn::dynamics::{fold_half, lyapunov_exponent, rotation_number};
use qpdyn::fourier::{ModeIndex, ScalarTorusFunction};
use qpdyn::freq::rho_diophantine_gamma;
use qpdyn::gap::{
    mp_averages, normal_form_at_edge, opening_rate, predict_opening, refine_edge_by_normal_form,
    verify_opening,
};
use qpdyn::kam::{reduce_chain, reduce_full, ChainMode, KamSchedule, RhoClass};
use qpdyn::selftest::{artifact_bundle, run_all, SelftestConfig};
use qpdyn::spectrum::{
    locate_energy_by_rotation, locate_gap_edge, scan_spectrum, schrodinger_cocycle, Potential,
    ScanQuality,
};
use qpdyn::{Error, Frequency};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qpcli",
    about = "quasi-periodic SL(2,R) cocycle pipelines: rotation numbers, KAM reducibility, spectra, duality, gap opening",
    after_help = "Config defaults (JSON):\n  frequency: {\"named\": \"golden\"}\n  potential: {\"family\": \"almost_mathieu\", \"lambda\": 0.05}\n  rotation_quality: {\"n_iters\": 100000, \"n_phases\": 32}\n  uh: {\"n_max\": 256, \"grid_n\": 256, \"growth\": 2.0, \"early_exit\": true, \"twist_search\": true}\n  schedule: per-cocycle defaults (M=10, c=1e-2, D=2, k=8, sigma=0.1, target_eps=1e-12)\n  energy 0.0; e_range [-2.5, 2.5]; n_grid 200; phase 0.1; sites [0]; oracle_radius 64\nExit codes: 0 pass, 1 check failure, 2 usage error, 3 numerical halt."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results are independent of this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fibered rotation number of the configured cocycle at `energy`.
    Rotation,
    /// Lyapunov exponent at `energy`.
    Lyapunov,
    /// Scan `e_range` and emit per-energy diagnostics plus labeled gaps.
    Scan,
    /// KAM reduction at `energy` with the configured rho class.
    Reduce,
    /// Reduce at the sites' energies and extract dual eigenfunctions.
    Dualize,
    /// Normal form at a gap edge, opening prediction and verification.
    Gapopen,
    /// Run the full verification suite.
    Selftest,
}

fn default_frequency() -> FrequencySpec {
    FrequencySpec {
        named: Some("golden".into()),
        components: None,
        kappa: None,
        tau: None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrequencySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    named: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    components: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PotentialSpec {
    #[serde(default = "default_family")]
    family: String,
    #[serde(default = "default_lambda")]
    lambda: f64,
    /// Explicit modes [n..., re, im] when family = "modes".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    d: Option<usize>,
}

fn default_family() -> String {
    "almost_mathieu".into()
}

fn default_lambda() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RhoClassSpec {
    Diophantine { gamma: f64, tau: f64 },
    Rational { m0: Vec<i64> },
    ZeroRho,
    Chain { gamma: f64, tau: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_frequency")]
    frequency: FrequencySpec,
    #[serde(default = "default_potential")]
    potential: PotentialSpec,
    #[serde(default)]
    energy: f64,
    #[serde(default = "default_e_range")]
    e_range: (f64, f64),
    #[serde(default = "default_n_grid")]
    n_grid: usize,
    #[serde(default = "RotationQuality::default")]
    rotation_quality: RotationQuality,
    #[serde(default)]
    uh: UhOptions,
    /// Schedule overrides; `norm_a` is replaced per cocycle when 0.
    #[serde(default)]
    schedule: Option<KamSchedule>,
    #[serde(default = "default_rho_class")]
    rho_class: RhoClassSpec,
    #[serde(default = "default_phase")]
    phase: f64,
    #[serde(default = "default_sites")]
    sites: Vec<i64>,
    #[serde(default = "default_radius")]
    oracle_radius: i64,
    /// Gap label for gapopen; the edge bracket is located from a scan of
    /// e_range when not given explicitly.
    #[serde(default = "default_gap_m")]
    gap_m: Vec<i64>,
    /// Perturbation W as mode rows [n..., re, im]; constant 1 when empty.
    #[serde(default)]
    w_modes: Vec<Vec<f64>>,
    #[serde(default = "default_t_list")]
    t_list: Vec<f64>,
    #[serde(default)]
    edge_bracket: Option<(f64, f64)>,
    #[serde(default)]
    ignore_runtime: bool,
}

fn default_seed() -> u64 {
    20_240_817
}
fn default_potential() -> PotentialSpec {
    PotentialSpec {
        family: default_family(),
        lambda: default_lambda(),
        modes: None,
        d: None,
    }
}
fn default_e_range() -> (f64, f64) {
    (-2.5, 2.5)
}
fn default_n_grid() -> usize {
    200
}
fn default_rho_class() -> RhoClassSpec {
    RhoClassSpec::Diophantine {
        gamma: 0.01,
        tau: 2.0,
    }
}
fn default_phase() -> f64 {
    0.1
}
fn default_sites() -> Vec<i64> {
    vec![0]
}
fn default_radius() -> i64 {
    64
}
fn default_gap_m() -> Vec<i64> {
    vec![1]
}
fn default_t_list() -> Vec<f64> {
    vec![1e-3, -1e-3, 1e-4, -1e-4]
}

impl RunConfig {
    fn frequency(&self) -> Result<Frequency, Error> {
        let mut f = match (&self.frequency.named, &self.frequency.components) {
            (Some(name), _) => match name.as_str() {
                "golden" => Frequency::golden(),
                "golden_sqrt2" => Frequency::golden_sqrt2(),
                other => {
                    return Err(Error::Config(format!("unknown frequency name {other}")))
                }
            },
            (None, Some(c)) => Frequency::new(c.clone())?,
            (None, None) => Frequency::golden(),
        };
        if let (Some(k), Some(t)) = (self.frequency.kappa, self.frequency.tau) {
            f = f.with_dc(k, t);
        }
        Ok(f)
    }

    fn potential(&self) -> Result<Potential, Error> {
        match self.potential.family.as_str() {
            "almost_mathieu" | "amo" => Ok(Potential::almost_mathieu(self.potential.lambda)),
            "zero" => Ok(Potential::zero(self.potential.d.unwrap_or(1))),
            "modes" => {
                let rows = self
                    .potential
                    .modes
                    .as_ref()
                    .ok_or_else(|| Error::Config("potential.modes missing".into()))?;
                let d = self.potential.d.unwrap_or(1);
                let v = scalar_from_rows(d, rows)?;
                Potential::new(v, self.potential.lambda)
            }
            other => Err(Error::Config(format!("unknown potential family {other}"))),
        }
    }

    fn w_function(&self, d: usize) -> Result<ScalarTorusFunction, Error> {
        if self.w_modes.is_empty() {
            Ok(ScalarTorusFunction::constant(d, 1.0))
        } else {
            scalar_from_rows(d, &self.w_modes)
        }
    }

    fn schedule_for(&self, norm_a: f64) -> KamSchedule {
        match &self.schedule {
            Some(s) => {
                let mut s = s.clone();
                if s.norm_a == 0.0 {
                    s.norm_a = norm_a.max(1.0);
                }
                s
            }
            None => KamSchedule::with_norm(norm_a),
        }
    }
}

fn scalar_from_rows(d: usize, rows: &[Vec<f64>]) -> Result<ScalarTorusFunction, Error> {
    let mut modes = Vec::new();
    for row in rows {
        if row.len() != d + 2 {
            return Err(Error::Config(
                "mode rows must be [n..., re, im] matching the dimension".into(),
            ));
        }
        let n: Vec<i64> = row[..d].iter().map(|x| x.round() as i64).collect();
        modes.push((
            ModeIndex::from_slice(&n),
            num_complex::Complex64::new(row[d], row[d + 1]),
        ));
    }
    ScalarTorusFunction::from_mode_list(d, false, &modes)
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> std::io::Result<Outputs> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Report wrapper: config echoed verbatim, timestamp isolated in one field.
fn write_report(
    out: &mut Outputs,
    command: &str,
    config_echo: &serde_json::Value,
    body: serde_json::Value,
    wall_seconds: f64,
) -> std::io::Result<()> {
    let report = json!({
        "generated_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_seconds": wall_seconds,
        "config": config_echo,
        "artifacts": out.files,
        "report": body,
    });
    let bytes = serde_json::to_vec_pretty(&report)?;
    std::fs::write(out.dir.join("report.json"), bytes)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg: RunConfig = match &cli.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => serde_json::from_str("{}")?,
    };
    let config_echo = serde_json::to_value(&cfg)?;
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("qpcli-out"));
    let mut out = Outputs::new(&out_dir)?;
    let t0 = std::time::Instant::now();
    let freq = cfg.frequency()?;
    let pot = cfg.potential()?;

    let exit = match cli.command {
        Command::Rotation => {
            let c = schrodinger_cocycle(&pot, &freq, cfg.energy)?;
            let est = rotation_number(&c, &cfg.rotation_quality)?;
            let body = json!({
                "energy": cfg.energy,
                "rho": est.rho,
                "rho_folded": fold_half(est.rho),
                "error_bound": est.error_bound,
                "weighted_mean_used": est.weighted,
                "quality": cfg.rotation_quality,
                "convention": "rho in [0,1); folded representative in [0,1/2] uses rho <-> 1-rho",
            });
            println!(
                "rho = {:.9} (folded {:.9}) +- {:.2e}",
                est.rho,
                fold_half(est.rho),
                est.error_bound
            );
            write_report(&mut out, "rotation", &config_echo, body, t0.elapsed().as_secs_f64())?;
            0
        }
        Command::Lyapunov => {
            let c = schrodinger_cocycle(&pot, &freq, cfg.energy)?;
            let est = lyapunov_exponent(&c, cfg.rotation_quality.n_iters, cfg.rotation_quality.n_phases);
            let body = json!({
                "energy": cfg.energy,
                "lyapunov": est.value,
                "raw": est.raw,
                "spread": est.spread,
                "n_iters": est.n_iters,
            });
            println!("lyapunov = {:.6e} (raw {:.3e} +- {:.1e})", est.value, est.raw, est.spread);
            write_report(&mut out, "lyapunov", &config_echo, body, t0.elapsed().as_secs_f64())?;
            0
        }
        Command::Scan => {
            let quality = ScanQuality {
                rotation: cfg.rotation_quality,
                uh: cfg.uh,
                lyap_iters: cfg.rotation_quality.n_iters.min(50_000),
            };
            let scan = scan_spectrum(&pot, &freq, cfg.e_range, cfg.n_grid, &quality)?;
            out.write("scan.csv", scan.to_csv().as_bytes())?;
            let body = json!({
                "gaps": scan.gaps,
                "n_grid": cfg.n_grid,
                "e_range": cfg.e_range,
                "quality": quality,
            });
            for g in &scan.gaps {
                println!(
                    "gap {}: [{:.6}, {:.6}] label {:?} rho {:.6}{}",
                    g.gap_id,
                    g.lo,
                    g.hi,
                    g.label,
                    g.rho,
                    if g.collapsed { " (collapsed?)" } else { "" }
                );
            }
            println!("{} energies, {} gaps -> scan.csv", scan.energies.len(), scan.gaps.len());
            write_report(&mut out, "scan", &config_echo, body, t0.elapsed().as_secs_f64())?;
            0
        }
        Command::Reduce => {
            let c = schrodinger_cocycle(&pot, &freq, cfg.energy)?;
            let sched = cfg.schedule_for(c.amap.average().op_norm());
            let outcome = match &cfg.rho_class {
                RhoClassSpec::Diophantine { gamma, tau } => reduce_full(
                    &c,
                    &sched,
                    RhoClass::Diophantine {
                        gamma: *gamma,
                        tau: *tau,
                    },
                ),
                RhoClassSpec::Rational { m0 } => reduce_full(
                    &c,
                    &sched,
                    RhoClass::Rational {
                        m0: ModeIndex::from_slice(m0),
                    },
                ),
                RhoClassSpec::ZeroRho => reduce_chain(&c, &sched, ChainMode::ZeroRho),
                RhoClassSpec::Chain { gamma, tau } => reduce_chain(
                    &c,
                    &sched,
                    ChainMode::DiophantineRho {
                        gamma: *gamma,
                        tau: *tau,
                    },
                ),
            }?;
            let mut telemetry = String::new();
            for r in &outcome.report.records {
                telemetry.push_str(&serde_json::to_string(r)?);
                telemetry.push('\n');
            }
            out.write("telemetry.jsonl", telemetry.as_bytes())?;
            out.write(
                "final_perturbation.json",
                &serde_json::to_vec_pretty(&outcome.state.f_pert)?,
            )?;
            out.write(
                "conjugacy.json",
                &serde_json::to_vec_pretty(&outcome.state.b_accum)?,
            )?;
            println!(
                "branch {} finished: steps {}, |f| {:.2e}, deg {:?}, residual {:.2e}",
                outcome.report.branch,
                outcome.report.steps,
                outcome.report.final_eps,
                outcome.report.deg_accum,
                outcome.report.conj_residual
            );
            let body = serde_json::to_value(&outcome.report)?;
            write_report(&mut out, "reduce", &config_echo, body, t0.elapsed().as_secs_f64())?;
            0
        }
        Command::Dualize => {
            let op = dual_operator(&pot, pot.coupling, &freq, cfg.phase)?;
            let mut sections = Vec::new();
            let mut all_ok = true;
            for &m in &cfg.sites {
                let site = ModeIndex::one(m);
                let target = fold_half(cfg.phase + freq.dot(&site));
                let hit = locate_energy_by_rotation(
                    &pot,
                    &freq,
                    target,
                    cfg.e_range,
                    2e-8,
                    1e-11,
                )?;
                let c = schrodinger_cocycle(&pot, &freq, hit.e)?;
                let sched = cfg.schedule_for(c.amap.average().op_norm());
                let gamma = rho_diophantine_gamma(&freq, hit.rho, 2.0, 1_000);
                let red = reduce_full(
                    &c,
                    &sched,
                    RhoClass::Diophantine {
                        gamma: (gamma * 0.9).max(1e-6),
                        tau: 2.0,
                    },
                )?;
                let (u, rep) = extract_eigenfunction(&red.state, &op, site, hit.e)?;
                let oracle = match_truncated_oracle(&u, &op, cfg.oracle_radius);
                let decay = fit_decay_exponent(&u);
                let ok = rep.residual_ok && rep.norm_bound_ok && !oracle.flagged;
                all_ok &= ok;
                out.write(&format!("eigenfunction_m{m}.csv"), u.to_csv(1).as_bytes())?;
                println!(
                    "site {m}: E {:.9}, overlap {:.6}, residual {:.2e}, decay {:.2} {}",
                    hit.e,
                    oracle.overlap,
                    rep.residual,
                    decay,
                    if ok { "" } else { "[flagged]" }
                );
                sections.push(json!({
                    "site": m,
                    "energy": hit.e,
                    "rho": hit.rho,
                    "extraction": rep,
                    "oracle": oracle,
                    "decay_exponent": decay,
                    "oracle_radius": cfg.oracle_radius,
                }));
            }
            let counting = pp_counting_check(&op, cfg.oracle_radius, cfg.oracle_radius, 4.0, 0.2, 8);
            println!("counting fraction {:.6}", counting.fraction);
            let body = json!({"sites": sections, "counting": counting});
            write_report(&mut out, "dualize", &config_echo, body, t0.elapsed().as_secs_f64())?;
            u8::from(!all_ok)
        }
        Command::Gapopen => {
            let m0 = ModeIndex::from_slice(&cfg.gap_m);
            let target = fold_half(freq.dot(&m0) / 2.0);
            let (lo, hi) = match cfg.edge_bracket {
                Some(b) => b,
                None => {
                    // coarse bracket from a quick scan around the labeled gap
                    let scan = scan_spectrum(
                        &pot,
                        &freq,
                        cfg.e_range,
                        cfg.n_grid.max(100),
                        &ScanQuality::default(),
                    )?;
                    let gap = scan
                        .gaps
                        .iter()
                        .find(|g| g.label.as_deref() == Some(&cfg.gap_m[..]))
                        .ok_or_else(|| {
                            Error::Degenerate(format!(
                                "no gap labeled {:?} detected in the scan",
                                cfg.gap_m
                            ))
                        })?;
                    (0.5 * (gap.lo + gap.hi), gap.hi + 0.2)
                }
            };
            let edge = locate_gap_edge(&pot, &freq, target, lo, hi, 1e-9)?;
            let sched = cfg.schedule_for(2.5);
            let (e_edge, red) = refine_edge_by_normal_form(
                &pot,
                &freq,
                &sched,
                m0,
                edge.e - 1e-6,
                edge.e + 1e-6,
                1e-12,
            )?;
            let nf = normal_form_at_edge(&red.state)?;
            let w = cfg.w_function(pot.d())?;
            let data = mp_averages(&nf, &w)?;
            let pred = predict_opening(&data, nf.c_offdiag);
            let verdicts = verify_opening(&pot, &freq, e_edge, &w, &cfg.t_list, pred, &cfg.uh)?;
            let consistent = verdicts.iter().all(|v| v.consistent);
            println!(
                "edge E {:.10}: class {:?}, c {:.4e}, prediction {:?}",
                e_edge, nf.class, nf.c_offdiag, pred
            );
            for v in &verdicts {
                println!(
                    "  t {:+.1e}: uh {} expected {:?} {}",
                    v.t,
                    v.uh,
                    v.expected_uh,
                    if v.consistent { "ok" } else { "MISMATCH" }
                );
            }
            let rates: Vec<serde_json::Value> = cfg
                .t_list
                .iter()
                .map(|&t| {
                    json!({"t": t, "predicted_rate": opening_rate(nf.c_offdiag, data.a1, t)})
                })
                .collect();
            let body = json!({
                "edge_energy": e_edge,
                "class": nf.class,
                "c": nf.c_offdiag,
                "normal_form_residual": nf.residual,
                "averages": data,
                "prediction": format!("{pred:?}"),
                "verdicts": verdicts,
                "rates": rates,
            });
            write_report(&mut out, "gapopen", &config_echo, body, t0.elapsed().as_secs_f64())?;
            u8::from(!consistent)
        }
        Command::Selftest => {
            let report = run_all(&SelftestConfig {
                seed: cfg.seed,
                ignore_runtime: cfg.ignore_runtime,
            });
            for r in &report.results {
                println!(
                    "[{}] criterion {:2}: {} ({:.1}s) {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.name,
                    r.seconds,
                    r.details
                );
            }
            for (name, bytes) in artifact_bundle(cfg.seed) {
                out.write(&name, &bytes)?;
            }
            let ok = report.all_passed;
            let body = serde_json::to_value(&report)?;
            write_report(&mut out, "selftest", &config_echo, body, t0.elapsed().as_secs_f64())?;
            u8::from(!ok)
        }
    };
    Ok(exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Io(_) | Error::Serde(_) => 2u8,
                Error::Halted(_)
                | Error::NoConvergence { .. }
                | Error::SmallDivisor { .. }
                | Error::ResonanceInChain(_) => 3u8,
                _ => 2u8,
            };
            ExitCode::from(code)
        }
    }
}
