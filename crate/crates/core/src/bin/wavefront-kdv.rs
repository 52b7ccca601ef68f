//! Batch front end: config-driven experiments emitting CSV/JSON artifacts.

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use wavefront_kdv::characteristics::{trace, CharSpec};
use wavefront_kdv::coefficient::CoefficientKind;
use wavefront_kdv::config::{DataKind, RunConfig};
use wavefront_kdv::detector::{calibrate_threshold, sweep_ii, wf_map, DecayFit, PhasePoint};
use wavefront_kdv::error::Error;
use wavefront_kdv::field::{ComplexField, Grid1D};
use wavefront_kdv::solver::{solve, SolveConfig};
use wavefront_kdv::verify::{run_all, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "wavefront-kdv",
    about = "Wave-packet-transform wave front set detection for linearized KdV",
    version
)]
struct Cli {
    /// Path to a key = value config file (defaults apply when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir from the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread count (default: WAVEFRONT_KDV_THREADS or all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured datum and write trajectory artifacts
    Solve,
    /// Classify the configured phase-space point by criterion (ii)
    Detect,
    /// Classify a grid of phase-space points on the datum itself
    Map,
    /// Trace one bicharacteristic down to time zero
    Trace,
    /// Run the built-in acceptance suite
    Verify {
        /// Mutation check: flip the free-flow sign (the suite must fail)
        #[arg(long)]
        flip_airy_sign: bool,
    },
    /// Print the configured coefficient's parameters and decay constants
    SolitonInfo,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("WAVEFRONT_KDV_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));

    let result = match &cli.command {
        Command::Solve => run_solve(&cfg, &out_dir),
        Command::Detect => run_detect(&cfg, &out_dir),
        Command::Map => run_map(&cfg, &out_dir),
        Command::Trace => run_trace(&cfg, &out_dir),
        Command::Verify { flip_airy_sign } => {
            return run_verify(*flip_airy_sign);
        }
        Command::SolitonInfo => run_soliton_info(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("numeric failure: {e}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    match &cli.config {
        Some(path) => RunConfig::parse(&fs::read_to_string(path)?),
        None => Ok(RunConfig::default()),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn datum_field(cfg: &RunConfig, grid: &Arc<Grid1D>) -> Result<ComplexField, Error> {
    match cfg.data_kind {
        DataKind::Gaussian => ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0)
        }),
        DataKind::JumpGaussian => ComplexField::from_fn(grid.clone(), |x| {
            if x > 0.0 {
                Complex64::new((-x * x).exp(), 0.0)
            } else if x == 0.0 {
                Complex64::new(0.5, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
        DataKind::BackwardEvolvedJump => {
            let jump = ComplexField::from_fn(grid.clone(), |x| {
                if x > 0.0 {
                    Complex64::new((-x * x).exp(), 0.0)
                } else if x == 0.0 {
                    Complex64::new(0.5, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })?;
            wavefront_kdv::propagator::airy_propagate(&jump, -cfg.data_t0)
        }
    }
}

fn run_solve(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    ensure_dir(out)?;
    let grid = Grid1D::new(cfg.grid_half_length, cfg.grid_count)?;
    let u0 = datum_field(cfg, &grid)?;
    let solve_cfg = SolveConfig {
        dt: cfg.solver_dt,
        t_final: cfg.solver_t_final,
        grid: grid.clone(),
        coefficient: cfg.coefficient()?,
        record_stride: cfg.solver_record_stride,
    };
    let traj = solve(&u0, &solve_cfg)?;

    for (i, (t, snap)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let path = out.join(format!("field_{i:04}.csv"));
        let mut f = fs::File::create(&path)?;
        writeln!(f, "# t = {t}")?;
        snap.write_csv(&mut f, Some(cfg.digest()))?;
    }
    let summary = serde_json::json!({
        "config_digest": cfg.digest(),
        "times": traj.times,
        "l2": traj.l2_history,
        "mass_re": traj.mass_history.iter().map(|m| m.re).collect::<Vec<_>>(),
        "mass_im": traj.mass_history.iter().map(|m| m.im).collect::<Vec<_>>(),
        "h3": traj.h3_history,
        "energy_law_residual": traj.energy_law_residual(),
        "dt": traj.dt,
    });
    fs::write(
        out.join("trajectory.json"),
        serde_json::to_string_pretty(&summary).expect("json"),
    )?;
    println!(
        "solved to t = {} ({} snapshots) -> {}",
        cfg.solver_t_final,
        traj.times.len(),
        out.display()
    );
    Ok(())
}

fn resolved_sweep(cfg: &RunConfig) -> Result<wavefront_kdv::detector::SweepConfig, Error> {
    let mut sweep = cfg.sweep();
    if cfg.needs_calibration() {
        let (n_thr, margin) = calibrate_threshold(&sweep)?;
        sweep.n_thr = n_thr;
        sweep.margin = margin;
    }
    Ok(sweep)
}

fn write_sweep_csv(path: &Path, fit: &DecayFit, digest: &str) -> Result<(), Error> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# config_digest = {digest}")?;
    writeln!(f, "lambda,x_traced,abs_w,re_w,im_w")?;
    for i in 0..fit.lambdas.len() {
        writeln!(
            f,
            "{},{},{},{},{}",
            fit.lambdas[i], fit.x_traced[i], fit.magnitudes[i], fit.values[i].re,
            fit.values[i].im
        )?;
    }
    Ok(())
}

fn run_detect(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    ensure_dir(out)?;
    let sweep = resolved_sweep(cfg)?;
    let p = PhasePoint::new(cfg.detector_x, cfg.detector_xi)?;
    let coeff = cfg.coefficient()?;
    let u0 = cfg.data_source();
    let fit = sweep_ii(&u0, &coeff, cfg.detector_t0, p, &sweep)?;
    write_sweep_csv(&out.join("sweep.csv"), &fit, cfg.digest())?;
    let report = serde_json::json!({
        "config_digest": cfg.digest(),
        "point": { "x": p.x, "xi": p.xi },
        "t0": cfg.detector_t0,
        "exponent": fit.exponent,
        "r2": fit.r2,
        "n_thr": sweep.n_thr,
        "margin": sweep.margin,
        "class": fit.classification.as_str(),
    });
    fs::write(
        out.join("detect.json"),
        serde_json::to_string_pretty(&report).expect("json"),
    )?;
    println!(
        "({}, {}) at t0 = {}: {} (N = {:.2}, R2 = {:.3})",
        p.x,
        p.xi,
        cfg.detector_t0,
        fit.classification.as_str(),
        fit.exponent,
        fit.r2
    );
    Ok(())
}

fn run_map(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    ensure_dir(out)?;
    let sweep = resolved_sweep(cfg)?;
    let xs: Vec<f64> = if cfg.map_x_count == 1 {
        vec![cfg.map_x_min]
    } else {
        (0..cfg.map_x_count)
            .map(|i| {
                cfg.map_x_min
                    + (cfg.map_x_max - cfg.map_x_min) * i as f64 / (cfg.map_x_count - 1) as f64
            })
            .collect()
    };
    let map = wf_map(&cfg.data_source(), &xs, &cfg.map_xis, &sweep)?;
    let path = out.join("map.csv");
    let mut f = fs::File::create(&path)?;
    writeln!(f, "# config_digest = {}", cfg.digest())?;
    writeln!(f, "x,xi,exponent,r2,class")?;
    for (i, &x) in map.xs.iter().enumerate() {
        for (j, &xi) in map.xis.iter().enumerate() {
            match map.cell(i, j) {
                Ok(fit) => writeln!(
                    f,
                    "{x},{xi},{},{},{}",
                    fit.exponent,
                    fit.r2,
                    fit.classification.as_str()
                )?,
                Err(e) => writeln!(f, "{x},{xi},nan,nan,error: {e}")?,
            }
        }
    }
    println!("map {} x {} -> {}", map.xs.len(), map.xis.len(), path.display());
    Ok(())
}

fn run_trace(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    ensure_dir(out)?;
    let spec = CharSpec::new(
        cfg.trace_x0,
        cfg.trace_t0,
        cfg.trace_xi,
        cfg.trace_lambda,
        cfg.coefficient()?,
    );
    let path = trace(&spec)?;
    let file = out.join("trace.csv");
    let mut f = fs::File::create(&file)?;
    writeln!(f, "# config_digest = {}", cfg.digest())?;
    writeln!(f, "t,x")?;
    for (t, x) in path.times.iter().zip(&path.positions) {
        writeln!(f, "{t},{x}")?;
    }
    println!(
        "x(0; lambda={}) = {:.6} -> {}",
        cfg.trace_lambda,
        path.x_at_zero,
        file.display()
    );
    Ok(())
}

fn run_verify(flip_airy_sign: bool) -> ExitCode {
    let results = run_all(&VerifyOptions { flip_airy_sign });
    let mut all_pass = true;
    for r in &results {
        println!("{}", r.line());
        all_pass &= r.passed;
    }
    if all_pass {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_soliton_info(cfg: &RunConfig) -> Result<(), Error> {
    let coeff = cfg.coefficient()?;
    match coeff.kind() {
        CoefficientKind::Soliton {
            amplitude,
            width,
            speed,
            offset,
            a_nl,
            gamma,
        } => {
            println!(
                "soliton: amplitude {amplitude}, width {width}, speed {speed}, offset {offset}"
            );
            println!("nonlinearity {a_nl}, gamma {gamma}, rho {}", coeff.rho());
            println!("decay constants (l1 x l2):");
            for (l1, row) in coeff.constants().iter().enumerate() {
                let row_s: Vec<String> = row.iter().map(|c| format!("{c:.4e}")).collect();
                println!("  l1={l1}: {}", row_s.join(" "));
            }
        }
        _ => println!("coefficient: identically zero (free flow)"),
    }
    Ok(())
}
