//! Command-line driver.
//!
//! Subcommands:
//!
//! - `dims`: dim W_k for k = 1..kmax at one prime
//! - `table1`: the same for a list of primes, laid out as a p × k grid
//! - `cusps`: cusp classes of X(4p) under `sim` or `approx`
//! - `formulas`: closed-form dimensions and bounds
//! - `verify`: the invariant suite for one prime
//!
//! Every flag can also be set through an environment variable named
//! `X4P_` followed by the flag in upper case with dashes as underscores,
//! e.g. `X4P_KMAX=3` or `X4P_CACHE_DIR=/tmp/c`. Flags win over variables.
//!
//! Exit codes: 0 success, 1 a failed check, 2 invalid configuration or
//! I/O failure, 3 rank certification failure, 4 cache corruption.
//!
//! JSON output is one top-level object carrying `schema_version`; see
//! [`output`] for the per-command layouts. Output only depends on the
//! configuration and seed unless `--timings` adds wall times.

pub mod output;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use x4p_core::cache::Cache;
use x4p_core::cusps::CuspRelation;
use x4p_core::span::{compute_spans_cached, Truncation};
use x4p_core::{CertPolicy, DimensionReport, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;
pub const EXIT_CACHE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "x4p", version, about = "dim W_k for weight-1 pullbacks from X(4) to X(4p)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// dim W_k for k = 1..kmax at one prime.
    Dims {
        #[command(flatten)]
        span: SpanArgs,
        #[command(flatten)]
        common: Common,
    },
    /// dim W_k with bounds for several primes, as a p × k grid.
    Table1 {
        /// Comma-separated odd primes.
        #[arg(long = "p-list", env = "X4P_P_LIST", value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[arg(long, env = "X4P_KMAX", default_value_t = 4)]
        kmax: u32,
        /// Compute every requested cell instead of capping k at 4 for
        /// p ≤ 13 and at 3 above.
        #[arg(long = "no-cap", env = "X4P_NO_CAP")]
        no_cap: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Cusp classes of X(4p).
    Cusps {
        #[arg(long, env = "X4P_P")]
        p: u64,
        #[arg(long, env = "X4P_RELATION", default_value = "sim")]
        relation: CuspRelation,
        /// List every primitive vector of each class.
        #[arg(long, env = "X4P_MEMBERS")]
        members: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form dimensions and upper bounds.
    Formulas {
        #[arg(long = "p-list", env = "X4P_P_LIST", value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[arg(long, env = "X4P_KMAX", default_value_t = 4)]
        kmax: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        span: SpanArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SpanArgs {
    #[arg(long, env = "X4P_P")]
    pub p: u64,
    #[arg(long, env = "X4P_KMAX", default_value_t = 3)]
    pub kmax: u32,
    /// Truncation length; defaults to the valence bound for kmax.
    #[arg(long = "L", env = "X4P_L")]
    pub len: Option<usize>,
    /// Accept a truncation below the valence bound and mark every row UNSOUND.
    #[arg(long = "allow-unsound", env = "X4P_ALLOW_UNSOUND")]
    pub allow_unsound: bool,
}

impl SpanArgs {
    pub fn truncation(&self) -> Truncation {
        match self.len {
            None => Truncation::Sturm,
            Some(len) => Truncation::Fixed {
                len,
                allow_unsound: self.allow_unsound,
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// modular<N> (N agreeing primes, e.g. modular2) or bareiss.
    #[arg(long, env = "X4P_CERT", default_value = "modular2", value_parser = parse_cert)]
    pub cert: CertChoice,
    #[arg(long = "prime-bits", env = "X4P_PRIME_BITS", default_value_t = 62,
          value_parser = clap::value_parser!(u32).range(20..=63))]
    pub prime_bits: u32,
    /// Primes drawn for modular certification; defaults to max(8, 2N).
    #[arg(long = "max-primes", env = "X4P_MAX_PRIMES")]
    pub max_primes: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "X4P_THREADS")]
    pub threads: Option<usize>,
    /// Seed for drawing certification primes.
    #[arg(long, env = "X4P_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Reuse and store generator sets and bases in this directory.
    #[arg(long = "cache-dir", env = "X4P_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, env = "X4P_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the output to this file.
    #[arg(long, env = "X4P_OUT")]
    pub out: Option<PathBuf>,
    /// Add wall times to dimension rows.
    #[arg(long, env = "X4P_TIMINGS")]
    pub timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertChoice {
    Modular(usize),
    Bareiss,
}

fn parse_cert(s: &str) -> Result<CertChoice, String> {
    if s == "bareiss" {
        return Ok(CertChoice::Bareiss);
    }
    match s.strip_prefix("modular").map(str::parse::<usize>) {
        Some(Ok(n)) if n >= 1 => Ok(CertChoice::Modular(n)),
        _ => Err(format!("expected modular<N> with N >= 1, or bareiss; got {s:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl Common {
    pub fn policy(&self) -> Result<CertPolicy, Error> {
        match self.cert {
            CertChoice::Bareiss => Ok(CertPolicy::FractionFree),
            CertChoice::Modular(n) => {
                let budget = self.max_primes.unwrap_or((2 * n).max(8));
                CertPolicy::modular(n, budget, self.prime_bits, self.seed)
            }
        }
    }

    pub fn cache(&self) -> Result<Option<Cache>, Error> {
        self.cache_dir.as_ref().map(|d| Cache::new(d.clone())).transpose()
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::CertificationFailed { .. } => EXIT_CERTIFICATION,
            Error::CacheCorrupt { .. } => EXIT_CACHE,
            Error::BoundViolation { .. } => EXIT_CHECK_FAILED,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

/// Rendered output and exit code of a successful run.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

/// Largest k computed for `p` in `table1` unless `--no-cap` is given.
pub fn feasible_kmax(p: u64) -> u32 {
    if p <= 13 {
        4
    } else {
        3
    }
}

pub fn compute_report(span: &SpanArgs, common: &Common) -> Result<DimensionReport, CliError> {
    if span.kmax < 1 {
        return Err(config_error("--kmax must be at least 1"));
    }
    let policy = common.policy()?;
    let cache = common.cache()?;
    let spans = compute_spans_cached(span.p, span.kmax, span.truncation(), &policy, cache.as_ref())?;
    Ok(DimensionReport::from_spans(&spans, common.timings)?)
}

fn common_of(command: &Command) -> &Common {
    match command {
        Command::Dims { common, .. }
        | Command::Table1 { common, .. }
        | Command::Cusps { common, .. }
        | Command::Formulas { common, .. }
        | Command::Verify { common, .. } => common,
    }
}

fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    let ok = |text| Outcome { text, code: EXIT_OK };
    match command {
        Command::Dims { span, common } => {
            let report = compute_report(span, common)?;
            Ok(ok(output::dims(&report, common.format)?))
        }
        Command::Table1 {
            p_list,
            kmax,
            no_cap,
            common,
        } => {
            if *kmax < 1 {
                return Err(config_error("--kmax must be at least 1"));
            }
            let reports = p_list
                .iter()
                .map(|&p| {
                    let k = if *no_cap { *kmax } else { (*kmax).min(feasible_kmax(p)) };
                    let span = SpanArgs {
                        p,
                        kmax: k,
                        len: None,
                        allow_unsound: false,
                    };
                    compute_report(&span, common)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ok(output::table1(&reports, *kmax, common.format)?))
        }
        Command::Cusps {
            p,
            relation,
            members,
            common,
        } => Ok(ok(output::cusps(*p, *relation, *members, common.format)?)),
        Command::Formulas { p_list, kmax, common } => Ok(ok(output::formulas(p_list, *kmax, common.format)?)),
        Command::Verify { span, common } => {
            let report = verify::run(span, common)?;
            let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
            Ok(Outcome {
                text: output::verify(&report, common.format)?,
                code,
            })
        }
    }
}

/// Runs a parsed command inside a worker pool of the requested size and
/// writes `--out` if given.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let common = common_of(&cli.command);
    let outcome = match common.threads {
        Some(0) => return Err(config_error("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| config_error(e.to_string()))?
            .install(|| dispatch(&cli.command))?,
        None => dispatch(&cli.command)?,
    };
    if let Some(path) = &common.out {
        std::fs::write(path, &outcome.text)
            .map_err(|e| config_error(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(outcome)
}

/// Parses `args` (program name first) and runs them.
pub fn run_args<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError {
        code: if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK },
        message: e.to_string(),
    })?;
    run(&cli)
}
