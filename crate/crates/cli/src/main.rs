mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{CommonArgs, RunConfig, ValidationError};
use kacspec::KacError;
use output::Report;
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 2;
const EXIT_ACCURACY: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_BREACH: u8 = 5;

/// Spectral and phase-space experiments for the linearized non-cutoff Kac operator.
#[derive(Parser)]
#[command(name = "kacspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalue table with asymptotic diagnostics.
    Spectrum,
    /// Symbol values and expansion residual on a phase-space grid.
    SymbolGrid,
    /// Weyl matrix of a named symbol against its expected diagonal.
    DiagCheck,
    /// Weyl matrix of the Mehler symbol against e^{−t(n+1/2)}.
    MehlerCheck,
    /// Fourier-side linearized operator against the eigenvalues.
    BobylevCheck,
    /// Exact semigroup trajectory of seeded initial data.
    Evolve,
    /// Expansion coefficients and residual decay rates.
    Asymptotics,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SymbolGrid => "symbol-grid",
            Command::DiagCheck => "diag-check",
            Command::MehlerCheck => "mehler-check",
            Command::BobylevCheck => "bobylev-check",
            Command::Evolve => "evolve",
            Command::Asymptotics => "asymptotics",
        }
    }

    fn run(self, cfg: &RunConfig) -> kacspec::Result<Report> {
        match self {
            Command::Spectrum => commands::spectrum(cfg),
            Command::SymbolGrid => commands::symbol_grid_cmd(cfg),
            Command::DiagCheck => commands::diag_check(cfg),
            Command::MehlerCheck => commands::mehler_check(cfg),
            Command::BobylevCheck => commands::bobylev_check(cfg),
            Command::Evolve => commands::evolve(cfg),
            Command::Asymptotics => commands::asymptotics(cfg),
        }
    }
}

fn exit_code(e: &KacError) -> u8 {
    match e {
        KacError::Domain(_) | KacError::Capability(_) => EXIT_VALIDATION,
        _ => EXIT_ACCURACY,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::resolve(cli.command.name(), &cli.common) {
        Ok(c) => c,
        Err(ValidationError(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already configured: {e}");
        }
    }
    let report = match cli.command.run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = report.render(&cfg);
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_IO);
    }
    if !report.breaches.is_empty() {
        for b in &report.breaches {
            eprintln!("tolerance breach: {b}");
        }
        return ExitCode::from(EXIT_BREACH);
    }
    ExitCode::SUCCESS
}
