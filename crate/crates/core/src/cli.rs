//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::baseline::{estimate_probe_once_throughput, solve_probe_once_policy};
use crate::config::{default_sweep, parse_config, parse_list, ConfigError, Mode, RunConfig};
use crate::error::Error;
use crate::sim::estimate_throughput;
use crate::solver::solve_policy;
use crate::verify::run_checks;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

pub const CSV_HEADER: &str = "rho_g,lambda_star,x_star,r_hat_f,sim_mean,sim_stderr,\
baseline_lambda_star,baseline_sim_mean,baseline_sim_stderr";

#[derive(Debug, Parser)]
#[command(
    name = "relaywait",
    version,
    about = "Relay-waiting opportunistic channel access: policy solver and protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the stopping policy (lambda*, x*, r_hat_f)
    Solve(CommonArgs),
    /// Solve, then estimate the policy's throughput by simulation
    Simulate(CommonArgs),
    /// Solve and simulate both schemes over a list of second-hop SNRs, as CSV
    Sweep(CommonArgs),
    /// Run the self-check suite
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Second-hop mean SNRs (linear), e.g. `2,5,10` or `2..=20`
    #[arg(long = "rho-g")]
    rho_g: Option<String>,
    /// Simulated cycles per estimate
    #[arg(long)]
    cycles: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed-point tolerance on |G(lambda*)|
    #[arg(long)]
    tol: Option<f64>,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(#[from] Error),
    #[error("verification failed: {0} check(s) did not pass")]
    Verification(usize),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn build_config(mode: Mode, args: CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(mode);
    let mut sweep_from_file = None;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let file = parse_config(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(p) = file.params {
            cfg.params = p;
        }
        sweep_from_file = file.sweep;
        cfg.cycles = file.cycles.unwrap_or(cfg.cycles);
        cfg.seed = file.seed.unwrap_or(cfg.seed);
        cfg.tol = file.tol.or(cfg.tol);
    }
    cfg.sweep = match (&args.rho_g, sweep_from_file) {
        (Some(list), _) => parse_list(list).map_err(CliError::Usage)?,
        (None, Some(s)) if mode == Mode::Sweep => s,
        _ => default_sweep(mode, &cfg.params),
    };
    cfg.cycles = args.cycles.unwrap_or(cfg.cycles);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.tol = args.tol.or(cfg.tol);
    cfg.output_path = args.out;
    cfg.validate()?;
    Ok(cfg)
}

/// `%.{digits}g`-style formatting.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g12(x: f64) -> String {
    fmt_sig(x, 12)
}

/// Executes `config`, writing reports to `out` (or to the output path).
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    config.validate()?;
    let mut buf: Vec<u8> = Vec::new();
    let result = run_into(config, &mut buf);
    match &config.output_path {
        Some(path) => fs::write(path, &buf)?,
        None => out.write_all(&buf)?,
    }
    result
}

fn run_into(config: &RunConfig, w: &mut Vec<u8>) -> Result<(), CliError> {
    let tol = config.gap_tolerance();
    match config.mode {
        Mode::Solve => {
            for &rho_g in &config.sweep {
                let params = config.params.with_mean_snr_hop2(rho_g);
                let p = solve_policy(&params, tol)?;
                writeln!(w, "rho_g                = {}", g12(rho_g))?;
                writeln!(w, "lambda_star          = {} bits/s/Hz", g12(p.lambda_star))?;
                writeln!(w, "x_star               = {}", g12(p.rate_cap_snr))?;
                writeln!(w, "r_hat_f              = {}", g12(p.hop1_threshold))?;
                writeln!(w, "rate-cap residual    = {:e}", p.diagnostics.rate_cap_residual)?;
                writeln!(w, "fixed-point residual = {:e}", p.diagnostics.optimality_residual)?;
                writeln!(w, "bisection iterations = {}", p.diagnostics.bisection_iterations)?;
                writeln!(w)?;
            }
        }
        Mode::Simulate => {
            for &rho_g in &config.sweep {
                let params = config.params.with_mean_snr_hop2(rho_g);
                let p = solve_policy(&params, tol)?;
                let est = estimate_throughput(&p, &params, config.cycles, config.seed)?;
                writeln!(w, "rho_g          = {}", g12(rho_g))?;
                writeln!(w, "lambda_star    = {} bits/s/Hz", g12(p.lambda_star))?;
                writeln!(
                    w,
                    "simulated      = {} +/- {} bits/s/Hz ({} cycles, {} s simulated)",
                    g12(est.mean),
                    g12(est.stderr),
                    est.cycles,
                    g12(est.total_time)
                )?;
                writeln!(
                    w,
                    "relative error = {}",
                    g12((est.mean - p.lambda_star) / p.lambda_star)
                )?;
                writeln!(w)?;
            }
        }
        Mode::Sweep => {
            writeln!(w, "{CSV_HEADER}")?;
            for &rho_g in &config.sweep {
                let params = config.params.with_mean_snr_hop2(rho_g);
                let p = solve_policy(&params, tol)?;
                let est = estimate_throughput(&p, &params, config.cycles, config.seed)?;
                let b = solve_probe_once_policy(&params, tol)?;
                let b_est =
                    estimate_probe_once_throughput(&b, &params, config.cycles, config.seed)?;
                let row = [
                    rho_g,
                    p.lambda_star,
                    p.rate_cap_snr,
                    p.hop1_threshold,
                    est.mean,
                    est.stderr,
                    b.lambda_star,
                    b_est.mean,
                    b_est.stderr,
                ]
                .map(g12)
                .join(",");
                writeln!(w, "{row}")?;
            }
        }
        Mode::Verify => {
            let mut failed = 0;
            for &rho_g in &config.sweep {
                let params = config.params.with_mean_snr_hop2(rho_g);
                writeln!(w, "rho_g = {}", g12(rho_g))?;
                for c in run_checks(&params, config.cycles, config.seed, tol)? {
                    writeln!(
                        w,
                        "  [{}] {}: achieved {:e}, tolerance {:e}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.achieved,
                        c.tolerance
                    )?;
                    if !c.passed {
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                return Err(CliError::Verification(failed));
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return if code == 0 { 0 } else { EXIT_USAGE };
        }
    };
    let (mode, common) = match cli.command {
        Command::Solve(a) => (Mode::Solve, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Verify(a) => (Mode::Verify, a),
    };
    let outcome = build_config(mode, common).and_then(|cfg| run(&cfg, out));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "relaywait: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    let code = main_with_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(2.0, 12), "2");
        assert_eq!(fmt_sig(0.337409340890209, 12), "0.33740934089");
        assert_eq!(fmt_sig(10.666939699053621, 12), "10.6669396991");
        assert_eq!(fmt_sig(1.5e-7, 12), "1.5e-07");
        assert_eq!(fmt_sig(-0.25, 12), "-0.25");
        assert_eq!(fmt_sig(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(fmt_sig(0.0, 12), "0");
    }
}
