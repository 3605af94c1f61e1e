use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use spinmech::analysis::GridSpec;
use spinmech::config::Config;
use spinmech::output::{ManifestWriter, Table};
use spinmech::protocols::{self, SqueezeParams};
use spinmech::quantum::Spin;
use spinmech::validate::{self, Suite};
use spinmech::Error;

#[derive(Parser)]
#[command(name = "spinmech", version, about = "Spin qubits coupled to a membrane resonator")]
struct Cli {
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true, env = "SPINMECH_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Outcome {
    Up,
    Down,
}

#[derive(Subcommand)]
enum Command {
    /// Optimized sideband cooling, optionally over a radius sweep (μm).
    Cool {
        #[command(flatten)]
        common: Common,
        /// lo:hi:n in μm.
        #[arg(long)]
        radius_sweep: Option<String>,
        #[arg(long)]
        fock_dim: Option<usize>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Cat-state fidelity over decoherence rates.
    Cat {
        #[command(flatten)]
        common: Common,
        /// lo:hi:n in units of ω_m.
        #[arg(long)]
        gamma_sweep: Option<String>,
        /// Write the Wigner grid at the configured decoherence rate.
        #[arg(long)]
        wigner: bool,
        #[arg(long)]
        decoherence: Option<f64>,
        #[arg(long)]
        fock_dim: Option<usize>,
        #[arg(long, value_enum, default_value = "down")]
        outcome: Outcome,
    },
    /// Minimum quadrature variance over a (ξ, Ω) grid.
    Squeeze {
        #[command(flatten)]
        common: Common,
        /// lo:hi:n
        #[arg(long, default_value = "0.5:3:6")]
        xi_grid: String,
        /// lo:hi:n in units of ω_m.
        #[arg(long, default_value = "2:30:8")]
        omega_grid: String,
        #[arg(long)]
        fock_dim: Option<usize>,
    },
    /// Runs the invariant suites.
    Validate {
        #[arg(long, value_enum, default_value = "core")]
        suite: SuiteArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Core,
    Physics,
    All,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::InfeasibleCoolingSite(_) => 3,
        _ => 4,
    }
}

fn parse_sweep(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("sweep {s:?}: expected lo:hi:n"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok(protocols::linspace(lo, hi, n))
}

/// Loads the config and runs `body` with a manifest that is written whether
/// or not the run succeeds.
fn with_manifest(
    name: &str,
    common: &Common,
    body: impl FnOnce(&Config, &mut ManifestWriter) -> Result<(), Error>,
) -> ExitCode {
    let input = std::fs::read(&common.config).unwrap_or_default();
    let cfg = Config::load(&common.config);
    let snapshot = cfg.as_ref().map(|c| c.snapshot()).unwrap_or(serde_json::Value::Null);
    let mut writer = match ManifestWriter::new(&common.out, name, snapshot, &input) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", common.out.display());
            return ExitCode::from(4);
        }
    };
    let result = cfg.and_then(|c| {
        writer.set_tolerances(json!({ "rtol": c.tolerances.rtol, "atol": c.tolerances.atol, "bin": c.bin_tolerance }));
        body(&c, &mut writer)
    });
    let err = result.as_ref().err().map(|e| e.to_string());
    if let Err(e) = writer.finish(err) {
        eprintln!("error: writing manifest: {e}");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn cmd_cool(cfg: &Config, w: &mut ManifestWriter, sweep: Option<&str>, fock: Option<usize>, grid: Option<usize>) -> Result<(), Error> {
    let radii = match sweep {
        Some(s) => parse_sweep(s)?.into_iter().map(|r| r * 1e-6).collect(),
        None => vec![cfg.membrane.radius],
    };
    let fock = fock.unwrap_or(cfg.cooling.fock_dim);
    let n = grid.unwrap_or(cfg.cooling.grid_points);
    let (rabi, det) = (protocols::linspace(0.05, 2.0, n), protocols::linspace(-1.5, -0.5, n));
    w.set_truncation(json!({ "fock_dim": fock, "grid_points": n }));
    let mut table = Table::new(&["R_um", "omega_m_over_2pi_Hz", "nbar", "g_c", "Omega", "delta_c", "n_eff"]);
    for r in radii {
        let c = cfg.with_radius(r);
        let device = c.device()?;
        let (p, _) = c.cooling_params(fock)?;
        let res = protocols::cool(&p, &rabi, &det)?;
        table.push(vec![
            r * 1e6,
            device.mode.omega_m / (2.0 * std::f64::consts::PI),
            res.nbar,
            p.coupling,
            res.rabi,
            res.detuning,
            res.n_eff,
        ]);
    }
    w.write_table("cooling.csv", &table)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn cmd_cat(
    cfg: &Config,
    w: &mut ManifestWriter,
    sweep: Option<&str>,
    wigner: bool,
    decoherence: Option<f64>,
    fock: Option<usize>,
    outcome: Spin,
) -> Result<(), Error> {
    let mut p = cfg.cat_params()?;
    if let Some(f) = fock {
        p.fock_dim = f;
    }
    if let Some(d) = decoherence {
        if !(d >= 0.0) {
            return Err(Error::Config(format!("decoherence must be >= 0, got {d}")));
        }
        p.decoherence = d;
    }
    w.set_truncation(json!({ "fock_dim": p.fock_dim, "xi": p.xi }));
    let rates = match sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![p.decoherence],
    };
    let results = protocols::cat_sweep(&p, &rates, outcome)?;
    let mut table = Table::new(&["Gamma_tilde_over_omega", "fidelity", "probability"]);
    for r in &results {
        table.push(vec![r.decoherence, r.fidelity, r.probability]);
    }
    w.write_table("cat_fidelity.csv", &table)?;
    print!("{}", table.to_csv());
    if wigner {
        let grid = GridSpec::covering(2.0 * p.xi, cfg.cat.wigner_resolution);
        let r = protocols::run_cat(&p, outcome, Some(&grid))?;
        let wg = r.wigner.expect("grid requested");
        wg.write_csv(&w.dir().join("cat_wigner.csv"))?;
        w.write_json("cat_wigner.json", &wg.metadata())?;
        println!("wigner: min {:.6}, max {:.6}, integral {:.6}", wg.min(), wg.max(), wg.integral);
    }
    Ok(())
}

fn cmd_squeeze(cfg: &Config, w: &mut ManifestWriter, xi_grid: &str, omega_grid: &str, fock: Option<usize>) -> Result<(), Error> {
    let xis = parse_sweep(xi_grid)?;
    let rabis = parse_sweep(omega_grid)?;
    if rabis.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Config("omega grid must be positive".into()));
    }
    if xis.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Config("xi grid must be nonnegative".into()));
    }
    let mut base = cfg.squeeze_params()?;
    if let Some(f) = fock {
        base.fock_dim = f;
    }
    let results = protocols::squeeze_scan(&base, &xis, &rabis)?;
    let mut table = Table::new(&["xi", "Omega_ratio", "min_dB", "theta_star", "probability", "criticality", "fock_dim"]);
    for r in &results {
        table.push(vec![r.xi, r.rabi, r.min_db, r.theta, r.probability, r.criticality, r.fock_dim as f64]);
    }
    w.set_truncation(json!({ "fock_dim": results.iter().map(|r| r.fock_dim).collect::<Vec<_>>() }));
    w.write_table("squeeze.csv", &table)?;
    print!("{}", table.to_csv());
    if let Some(best) = protocols::best_squeeze(&results) {
        let grid = GridSpec::covering(3.0, cfg.squeeze.wigner_resolution);
        let p = SqueezeParams { xi: best.xi, rabi: best.rabi, ..base };
        let r = protocols::run_squeeze(&p, Some(&grid))?;
        let wg = r.wigner.expect("grid requested");
        wg.write_csv(&w.dir().join("squeeze_wigner.csv"))?;
        w.write_json(
            "squeeze_best.json",
            &json!({ "xi": r.xi, "Omega_ratio": r.rabi, "min_dB": r.min_db, "theta_star": r.theta,
                     "near_critical": r.near_critical, "wigner": wg.metadata() }),
        )?;
        println!("best: xi {} Omega {} -> {:.4} dB", r.xi, r.rabi, r.min_db);
    }
    Ok(())
}

fn cmd_validate(suite: Suite, out: Option<&Path>) -> ExitCode {
    let results = validate::run_suite(suite);
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        println!("{:<width$}  {}  {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} invariants, {} failed", results.len(), failed);
    if let Some(dir) = out {
        let written = ManifestWriter::new(dir, "validate", json!({ "suite": suite }), b"").and_then(|mut w| {
            w.write_json("validate.json", &serde_json::to_value(&results).expect("results serialize"))?;
            w.finish(if failed > 0 { Some(format!("{failed} invariant(s) failed")) } else { None })
        });
        if let Err(e) = written {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match cli.command {
        Command::Cool { common, radius_sweep, fock_dim, grid_points } => with_manifest("cool", &common, |c, w| {
            cmd_cool(c, w, radius_sweep.as_deref(), fock_dim, grid_points)
        }),
        Command::Cat { common, gamma_sweep, wigner, decoherence, fock_dim, outcome } => {
            let spin = match outcome {
                Outcome::Up => Spin::Up,
                Outcome::Down => Spin::Down,
            };
            with_manifest("cat", &common, |c, w| cmd_cat(c, w, gamma_sweep.as_deref(), wigner, decoherence, fock_dim, spin))
        }
        Command::Squeeze { common, xi_grid, omega_grid, fock_dim } => {
            with_manifest("squeeze", &common, |c, w| cmd_squeeze(c, w, &xi_grid, &omega_grid, fock_dim))
        }
        Command::Validate { suite, out } => {
            let s = match suite {
                SuiteArg::Core => Suite::Core,
                SuiteArg::Physics => Suite::Physics,
                SuiteArg::All => Suite::All,
            };
            cmd_validate(s, out.as_deref())
        }
    }
}
