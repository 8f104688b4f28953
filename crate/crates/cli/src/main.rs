//! `advect`: run, compare and analyse 1D advection solvers from config files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use advect_core::output::{format_number, stability_csv};
use advect_core::{
    compare, convergence_order, run, run_oracle, stability_sweep, write_comparison, write_outputs, Error, RunConfig,
    SchemeId, SignConvention,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "advect",
    version,
    about = "Finite-difference and characteristic solvers for 1D advection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Step the configured scheme and write snapshots plus manifest.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the sign convention from the config file.
        #[arg(long)]
        sign: Option<SignConvention>,
    },
    /// Write the reference solution in the same format as `run`.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sign: Option<SignConvention>,
    },
    /// Run two configurations of the same problem side by side.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Observed order of accuracy under repeated grid doubling.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Analytic versus measured von Neumann amplification, as CSV on stdout.
    Stability {
        #[arg(long)]
        scheme: SchemeId,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 8)]
        theta_samples: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = SignConvention::Standard)]
        sign: SignConvention,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_BLOWN_UP: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Output(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn load(path: &Path, sign: Option<SignConvention>) -> Result<RunConfig, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(sign) = sign {
        cfg.sign = sign;
    }
    Ok(cfg)
}

fn fail(e: impl Into<Error>) -> ExitCode {
    let e = e.into();
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn report_oracle(available: bool) {
    if !available {
        eprintln!("no oracle available");
    }
}

fn cmd_run(config: &Path, out: &Path, sign: Option<SignConvention>) -> Result<ExitCode, ExitCode> {
    let cfg = load(config, sign)?;
    let result = run(&cfg).map_err(fail)?;
    report_oracle(result.manifest.snapshots[0].l2_vs_oracle.is_some());
    write_outputs(&result, out).map_err(fail)?;
    let m = &result.manifest;
    println!(
        "nu_max={} final_time={} blown_up={} drift={}",
        format_number(m.nu_max),
        format_number(m.final_time_reached),
        m.blown_up,
        m.drift_direction.token()
    );
    Ok(if m.blown_up {
        ExitCode::from(EXIT_BLOWN_UP)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_oracle(config: &Path, out: &Path, sign: Option<SignConvention>) -> Result<ExitCode, ExitCode> {
    let cfg = load(config, sign)?;
    if !advect_core::sim::oracle_available(&cfg).map_err(fail)? {
        report_oracle(false);
        return Err(ExitCode::from(EXIT_CONFIG));
    }
    let result = run_oracle(&cfg).map_err(fail)?;
    write_outputs(&result, out).map_err(fail)?;
    println!("final_time={}", format_number(result.manifest.final_time_reached));
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(a: &Path, b: &Path, out: &Path) -> Result<ExitCode, ExitCode> {
    let (cfg_a, cfg_b) = (load(a, None)?, load(b, None)?);
    let cmp = compare(&cfg_a, &cfg_b).map_err(fail)?;
    report_oracle(cmp.rows.first().is_some_and(|r| r.l2_oracle_a.is_some()));
    write_comparison(&cmp, out).map_err(fail)?;
    if let Some(r) = cmp.final_row() {
        println!(
            "step={} tv_a={} tv_b={} l2_diff={}",
            r.step,
            format_number(r.tv_a),
            format_number(r.tv_b),
            format_number(r.l2_diff)
        );
    }
    let blown_up = cmp.a.manifest.blown_up || cmp.b.manifest.blown_up;
    Ok(if blown_up {
        ExitCode::from(EXIT_BLOWN_UP)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_convergence(config: &Path, levels: usize) -> Result<ExitCode, ExitCode> {
    let cfg = load(config, None)?;
    let study = convergence_order(&cfg, levels).map_err(fail)?;
    let mut out = String::from("nx,nt,dx,l2\n");
    for l in &study.levels {
        let _ = writeln!(out, "{},{},{},{}", l.nx, l.nt, format_number(l.dx), format_number(l.l2));
    }
    print!("{out}");
    match study.order {
        Some(order) => println!("order={}", format_number(order)),
        None => println!("order=none (errors below noise floor)"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stability(
    scheme: SchemeId,
    nu: f64,
    theta_samples: usize,
    steps: usize,
    sign: SignConvention,
) -> Result<ExitCode, ExitCode> {
    let rows = stability_sweep(scheme, nu, theta_samples, steps, sign).map_err(fail)?;
    print!("{}", stability_csv(&rows));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, out, sign } => cmd_run(config, out, *sign),
        Command::Oracle { config, out, sign } => cmd_oracle(config, out, *sign),
        Command::Compare {
            config_a,
            config_b,
            out,
        } => cmd_compare(config_a, config_b, out),
        Command::Convergence { config, levels } => cmd_convergence(config, *levels),
        Command::Stability {
            scheme,
            nu,
            theta_samples,
            steps,
            sign,
        } => cmd_stability(*scheme, *nu, *theta_samples, *steps, *sign),
    };
    outcome.unwrap_or_else(|code| code)
}
