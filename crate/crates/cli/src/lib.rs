//! Command-line front end for the self-similar solver.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

pub use commands::{cmd_classify, cmd_reconstruct, cmd_scan, cmd_solve, cmd_verify, load_profile, SolveOutcome};
pub use config::{Format, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSOLVABLE: i32 = 3;
pub const EXIT_NO_ROOT: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// An error carrying the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self::new(EXIT_RUNTIME, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Parser, Debug)]
#[command(name = "selfsim", version, about = "Self-similar cavity collapse and converging shock solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the admissible exponents for the configured EOS and problem.
    Classify(Common),
    /// Shoot across the bracket and write the numerator signs.
    Scan(Common),
    /// Find the eigenvalue and write the profile and its metadata.
    Solve(Common),
    /// Map a profile to physical fields on the configured grid.
    Reconstruct(Common),
    /// Check a profile against the flow equations and write a report.
    Verify(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub plot: bool,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub k: Option<u8>,
    #[arg(long, value_parser = parse_bracket, allow_hyphen_values = true, value_name = "LO,HI")]
    pub bracket: Option<(f64, f64)>,
    #[arg(long)]
    pub tol_alpha: Option<f64>,
    /// Profile table for reconstruct and verify; defaults to the one in the output directory.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((lo, hi))
}

impl Common {
    pub fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            out: self.out.clone(),
            format: self.format,
            plot: self.plot,
            k: self.k,
            bracket: self.bracket,
            tol_alpha: self.tol_alpha,
        })?;
        Ok(cfg)
    }
}

/// Runs one command and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32, CliError> {
    match cmd {
        Command::Classify(c) => {
            let cfg = c.load()?;
            let (cs, code) = cmd_classify(&cfg)?;
            println!("family: {}", cs.family);
            println!("problem: {}", cs.kind);
            let rel: Vec<&str> = cs.relations.iter().map(|r| r.label.as_str()).collect();
            println!("relations: {}", if rel.is_empty() { "none".to_string() } else { rel.join(", ") });
            println!("free_dims: {}", cs.free_dims);
            if code == EXIT_UNSOLVABLE {
                println!("no smooth bounded scaling solution exists for this combination");
            }
            Ok(code)
        }
        Command::Scan(c) => {
            let cfg = c.load()?;
            let points = cmd_scan(&cfg)?;
            for (lo, hi) in selfsim_core::eigen::sign_changes(&points) {
                println!("sign change in ({lo}, {hi})");
            }
            println!("wrote {}", commands::scan_path(&cfg).display());
            Ok(EXIT_OK)
        }
        Command::Solve(c) => {
            let cfg = c.load()?;
            let out = cmd_solve(&cfg)?;
            for cand in &out.candidates {
                match &cand.error {
                    None => println!(
                        "candidate ({}, {}): {} = {:.12}, sonic xi = {:.6}",
                        cand.bracket[0], cand.bracket[1], name(&cfg), cand.value, cand.sonic_xi
                    ),
                    Some(e) => println!("candidate ({}, {}): {e}", cand.bracket[0], cand.bracket[1]),
                }
            }
            if let Some(r) = &out.result {
                println!("alpha = {:.12}, beta = {:.12}", r.exponents.alpha, r.exponents.beta);
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::Reconstruct(c) => {
            let cfg = c.load()?;
            let s = cmd_reconstruct(&cfg, c.profile.as_deref())?;
            println!("wrote {} rows to {}", s.len(), commands::physical_path(&cfg).display());
            Ok(EXIT_OK)
        }
        Command::Verify(c) => {
            let cfg = c.load()?;
            let (rep, code) = cmd_verify(&cfg, c.profile.as_deref())?;
            let p = rep.pde_residual_norms;
            println!("pde residuals: mass {:.3e} momentum {:.3e} energy {:.3e}", p.mass, p.momentum, p.energy);
            println!("entropy: ok {} margin {:.6e}", rep.entropy.ok, rep.entropy.margin);
            println!("ivt: ok {}", rep.ivt.ok);
            let c3 = rep.conservation_norms;
            println!("conservation: {:.3e} {:.3e} {:.3e}", c3[0], c3[1], c3[2]);
            for n in &rep.notes {
                println!("note: {n}");
            }
            println!("{}", if rep.passed { "passed" } else { "FAILED" });
            Ok(code)
        }
    }
}

fn name(cfg: &RunConfig) -> &'static str {
    match cfg.exponents.free {
        selfsim_core::FreeParam::Alpha => "alpha",
        selfsim_core::FreeParam::Beta => "beta",
    }
}
