use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod commands;
mod config;
mod output;

use config::{QuadSpec, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; exit code 2.
    Schema(String),
    /// Failure while computing, or a failed check; exit code 1.
    Runtime(String),
}

#[derive(Parser)]
#[command(name = "rigid-dft", version, about = "Excluded volumes, kernel projection and SCF solves for rigid molecules")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Excluded volume at one orientation or along an angle sweep.
    Exvol(RunArgs),
    /// Project the shape's kernel onto a symmetry-adapted basis.
    Project(RunArgs),
    /// Solve the self-consistent equations from each seed.
    Solve(RunArgs),
    /// Trace branches along a parameter.
    Sweep(RunArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    config: PathBuf,
    /// Output stem; writes <out>.json and <out>.csv.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature nodes as `n_alpha,n_beta,n_gamma`.
    #[arg(long, value_parser = parse_quad)]
    quad: Option<QuadSpec>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion numbers or names.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Writes a JSON report to <out>.json.
    #[arg(long)]
    out: Option<String>,
}

fn parse_quad(s: &str) -> Result<QuadSpec, String> {
    let v: Vec<usize> = s.split(',').map(|x| x.trim().parse().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [n_alpha, n_beta, n_gamma] => Ok(QuadSpec { n_alpha, n_beta, n_gamma }),
        _ => Err("expected three comma-separated counts".into()),
    }
}

fn load(a: &RunArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Schema(format!("{}: {e}", a.config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.quad.is_some() {
        cfg.quadrature = a.quad;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    program: &'static str,
    version: &'static str,
    passed: bool,
    criteria: &'a [rigid_dft_verify::CriterionReport],
}

fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let ids: Vec<u32> = if a.only.is_empty() {
        rigid_dft_verify::ALL.to_vec()
    } else {
        a.only
            .iter()
            .map(|n| {
                rigid_dft_verify::lookup(n).ok_or_else(|| {
                    CliError::Schema(format!(
                        "unknown criterion {n:?}; use 1-10 or one of {}",
                        rigid_dft_verify::short_names().join(", ")
                    ))
                })
            })
            .collect::<Result<_, _>>()?
    };
    let mut reports = Vec::new();
    for id in ids {
        let r = rigid_dft_verify::run(id).expect("registered criterion");
        println!("{}", r.line());
        eprintln!("criterion {id}: {:.1} s", r.seconds);
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    if let Some(out) = &a.out {
        let doc = VerifyReport { program: "rigid-dft", version: output::VERSION, passed, criteria: &reports };
        let mut json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
        json.push('\n');
        std::fs::write(format!("{out}.json"), json).map_err(|e| CliError::Runtime(format!("{out}.json: {e}")))?;
    }
    if !passed {
        let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| format!("{} ({})", r.id, r.title)).collect();
        return Err(CliError::Runtime(format!("failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Exvol(a) => load(a).and_then(|c| commands::exvol(&c)),
        Cmd::Project(a) => load(a).and_then(|c| commands::project(&c)),
        Cmd::Solve(a) => load(a).and_then(|c| commands::solve(&c)),
        Cmd::Sweep(a) => load(a).and_then(|c| commands::sweep(&c)),
        Cmd::Verify(a) => verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Schema(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
