use clap::{Args, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Desk-scale versus thorough defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

/// Flags shared by every subcommand; unset values fall back to per-command
/// defaults that depend on `--profile`.
#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// Singularity exponent, 0 < s < 1.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub s: f64,
    /// Largest Hermite index.
    #[arg(long = "K", global = true)]
    pub k: Option<usize>,
    /// Velocity dimension.
    #[arg(long, global = true, default_value_t = 1)]
    pub d: usize,
    /// Grid half-width.
    #[arg(long = "L", global = true)]
    pub half_width: Option<f64>,
    /// Phase-space grid points per axis (power of two).
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Acceptance tolerance; breaches exit with status 5.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for randomly drawn coefficient vectors.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Profile::Quick)]
    pub profile: Profile,
    /// Worker threads for data-parallel sweeps.
    #[arg(long, global = true, env = "KACSPEC_THREADS")]
    pub threads: Option<usize>,
    /// Time parameter (Mehler symbol, evolution horizon).
    #[arg(long, global = true, default_value_t = 1.0)]
    pub t: f64,
    /// Symbol for `diag-check`.
    #[arg(long, global = true, default_value = "l1")]
    pub symbol: String,
    /// Expansion order for `asymptotics` and `symbol-grid`.
    #[arg(long, global = true, default_value_t = 2)]
    pub order: usize,
    /// Samples per axis for `symbol-grid`, or time samples for `evolve`.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

/// Fully resolved and validated parameters; echoed into every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub s: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
    pub points: Option<usize>,
    pub tol: f64,
    pub format: Format,
    pub seed: u64,
    pub profile: Profile,
    pub t: f64,
    pub symbol: String,
    pub order: usize,
    pub samples: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct ValidationError(pub String);

struct Defaults {
    k: (usize, usize),
    tol: f64,
    samples: (usize, usize),
}

fn defaults(command: &str) -> Defaults {
    match command {
        "spectrum" => Defaults { k: (1000, 10_000), tol: 1e-10, samples: (0, 0) },
        "symbol-grid" => Defaults { k: (0, 0), tol: 0.0, samples: (41, 81) },
        "diag-check" => Defaults { k: (10, 20), tol: 1e-6, samples: (0, 0) },
        "mehler-check" => Defaults { k: (10, 10), tol: 1e-8, samples: (0, 0) },
        "bobylev-check" => Defaults { k: (10, 20), tol: 1e-5, samples: (0, 0) },
        "evolve" => Defaults { k: (20, 200), tol: 1e-12, samples: (11, 101) },
        _ => Defaults { k: (0, 0), tol: 0.15, samples: (0, 0) },
    }
}

impl RunConfig {
    pub fn resolve(command: &str, a: &CommonArgs) -> Result<Self, ValidationError> {
        let dflt = defaults(command);
        let pick = |pair: (usize, usize)| if a.profile == Profile::Quick { pair.0 } else { pair.1 };
        let cfg = Self {
            command: command.to_string(),
            s: a.s,
            k: a.k.unwrap_or_else(|| pick(dflt.k)),
            d: a.d,
            half_width: a.half_width,
            points: a.points,
            tol: a.tol.unwrap_or(dflt.tol),
            format: a.format,
            seed: a.seed,
            profile: a.profile,
            t: a.t,
            symbol: a.symbol.clone(),
            order: a.order,
            samples: a.samples.unwrap_or_else(|| pick(dflt.samples)),
            out: a.out.clone(),
            threads: a.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ValidationError> {
        let fail = |m: String| Err(ValidationError(m));
        if !(self.s > 0.0 && self.s < 1.0) {
            return fail(format!("--s must lie in (0, 1), got {}", self.s));
        }
        if self.d == 0 {
            return fail("--d must be at least 1".into());
        }
        if matches!(self.command.as_str(), "spectrum" | "diag-check" | "mehler-check" | "bobylev-check" | "evolve")
            && self.k == 0
        {
            return fail("--K must be at least 1".into());
        }
        if let Some(p) = self.points {
            if !p.is_power_of_two() {
                return fail(format!("--points must be a power of two, got {p}"));
            }
        }
        if let Some(l) = self.half_width {
            if !(l > 0.0 && l.is_finite()) {
                return fail(format!("--L must be positive, got {l}"));
            }
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return fail(format!("--tol must be non-negative, got {}", self.tol));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return fail(format!("--t must be non-negative, got {}", self.t));
        }
        if self.d != 1 && self.command != "asymptotics" {
            return fail(format!("{} supports --d 1 only", self.command));
        }
        if self.threads == Some(0) {
            return fail("--threads must be at least 1".into());
        }
        if self.command == "symbol-grid" && self.samples < 2 {
            return fail("--samples must be at least 2".into());
        }
        if self.command == "evolve" && self.samples < 3 {
            return fail("--samples must be at least 3".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        common: CommonArgs,
    }

    fn args(extra: &[&str]) -> CommonArgs {
        let mut v = vec!["kacspec"];
        v.extend_from_slice(extra);
        Wrap::parse_from(v).common
    }

    #[test]
    fn profile_selects_defaults() {
        assert_eq!(RunConfig::resolve("spectrum", &args(&[])).unwrap().k, 1000);
        assert_eq!(RunConfig::resolve("spectrum", &args(&["--profile", "full"])).unwrap().k, 10_000);
        assert_eq!(RunConfig::resolve("spectrum", &args(&["--K", "5", "--profile", "full"])).unwrap().k, 5);
        assert_eq!(RunConfig::resolve("bobylev-check", &args(&[])).unwrap().tol, 1e-5);
    }

    #[test]
    fn rejects_invalid_values() {
        for bad in [&["--s", "0"][..], &["--s", "1"], &["--K", "0"], &["--points", "96"], &["--L=-1"], &["--d", "2"]] {
            assert!(RunConfig::resolve("spectrum", &args(bad)).is_err(), "{bad:?}");
        }
        assert!(RunConfig::resolve("asymptotics", &args(&["--d", "3"])).is_ok());
        assert!(RunConfig::resolve("evolve", &args(&["--samples", "2"])).is_err());
    }
}
