use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wave_control::experiment::export::{write_json, Table};
use wave_control::experiment::{
    run, run_example1, run_example2, run_frequency_suite, run_property_suites, ExperimentConfig, ExperimentKind,
    FaultInjection, Overrides, RunSummary, SuiteReport,
};
use wave_control::spectral_basis::{enumerate_modes, omega_mass_matrix};

#[derive(Parser, Debug)]
#[command(name = "wavectl", version, about = "Damped-wave control experiments on the unit square")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; CLI flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of Galerkin modes G
    #[arg(long, global = true)]
    modes: Option<usize>,

    /// Control index N (2N + 2 damped passes)
    #[arg(long, global = true)]
    iterations: Option<usize>,

    /// ODE solver tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Control horizon T
    #[arg(long, global = true)]
    horizon: Option<f64>,

    /// Also write whitespace-separated .dat tables for gnuplot
    #[arg(long, global = true)]
    plot_data: bool,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the first G modes; with --out also write modes and the mass matrix
    Modes,
    /// Low-frequency example: control from rest toward (e1 + e2, e1)
    Example1,
    /// High-frequency example: control of a Gaussian beam toward rest
    Example2,
    /// Custom problem from --config
    Control,
    /// Frequency-function suite with radial profiles
    Freq,
    /// Property suites; exits non-zero on any failure
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli, kind: ExperimentKind) -> wave_control::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::defaults_for(kind),
    };
    Overrides {
        modes: cli.modes,
        iterations: cli.iterations,
        tol: cli.tol,
        horizon: cli.horizon,
        out_dir: cli.out.clone(),
        plot_data: cli.plot_data,
    }
    .apply(&mut cfg)?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> wave_control::Result<ExitCode> {
    match cli.command {
        Command::Modes => {
            let cfg = load_config(cli, ExperimentKind::Example1)?;
            let ms = enumerate_modes(cfg.modes)?;
            println!("{:>6} {:>6} {:>6} {:>22}", "j", "k", "l", "lambda");
            for (j, m) in ms.modes().iter().enumerate() {
                println!("{:>6} {:>6} {:>6} {:>22}", j + 1, m.k, m.l, m.lambda);
            }
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                write_json(&dir.join("modes.json"), &ms)?;
                write_json(&dir.join("mass_matrix.json"), &omega_mass_matrix(&ms, cfg.region))?;
                let mut t = Table::new(["j", "k", "l", "lambda"]);
                for (j, m) in ms.modes().iter().enumerate() {
                    t.push(vec![(j + 1) as f64, f64::from(m.k), f64::from(m.l), m.lambda]);
                }
                t.write(dir, "modes", cfg.plot_data)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Example1 => {
            let out = run_example1(&load_config(cli, ExperimentKind::Example1)?)?;
            print_summary(&out.summary, &out.dir);
            Ok(ExitCode::SUCCESS)
        }
        Command::Example2 => {
            let out = run_example2(&load_config(cli, ExperimentKind::Example2)?)?;
            print_summary(&out.summary, &out.dir);
            Ok(ExitCode::SUCCESS)
        }
        Command::Control => {
            let out = run(&load_config(cli, ExperimentKind::Custom)?)?;
            print_summary(&out.summary, &out.dir);
            Ok(ExitCode::SUCCESS)
        }
        Command::Freq => {
            let mut cfg = load_config(cli, ExperimentKind::Custom)?;
            if cli.out.is_none() && cli.config.is_none() {
                cfg.out_dir = PathBuf::from("runs/freq");
            }
            let report = run_frequency_suite(&cfg)?;
            print_report(&report);
            println!("profiles written to {}", cfg.out_dir.display());
            Ok(exit_for(&report))
        }
        Command::Verify => {
            let cfg = load_config(cli, ExperimentKind::Example1)?;
            let report = run_property_suites(&cfg, FaultInjection::default())?;
            print_report(&report);
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                write_json(&dir.join("verify_report.json"), &report)?;
            }
            Ok(exit_for(&report))
        }
    }
}

fn exit_for(report: &SuiteReport) -> ExitCode {
    if report.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed: {}", report.failures().join(", "));
        ExitCode::FAILURE
    }
}

fn print_report(report: &SuiteReport) {
    for c in &report.checks {
        println!(
            "{} {:<34} measured {:>11.3e}  limit {:>9.1e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.limit,
            c.detail
        );
    }
}

fn print_summary(s: &RunSummary, dir: &std::path::Path) {
    println!("G = {}, N = {}, T = {}, tol = {:e}", s.modes, s.iterations, s.horizon, s.tol);
    println!("target energy        {:.6e}", s.target_energy);
    println!("d_-1 -> d_2N         {:.6e} -> {:.6e}", s.d[0], s.d.last().unwrap_or(&0.0));
    println!("predicted |error|^2  {:.6e}", s.predicted_error);
    println!("achieved  |error|^2  {:.6e}  (relative mismatch {:.2e})", s.achieved_error, s.error_mismatch);
    for c in &s.costs {
        println!("cost f_{:<4}          {:.6e}  (per pass {:.6e})", c.n, c.cost, c.normalized);
    }
    if let Some(p) = &s.projection {
        println!(
            "beam projection      norm^2 {:.6e}, doubled-order discrepancy {:.2e}",
            p.norm_sq, p.discrepancy
        );
    }
    println!("artifacts in {}", dir.display());
}
