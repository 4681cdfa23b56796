//! gaplab: prime-gap experiments from the command line.
//!
//! Each subcommand runs one experiment and writes CSV (or JSON for the
//! parameter selectors) to --out or stdout. Every CSV schema is versioned
//! in its leading comment line, outputs carry no timestamps (a sidecar log
//! takes those via --log), and reruns with identical flags produce
//! byte-identical files at any parallelism degree.
//!
//! Exit codes: 0 success, 2 precondition violation, 3 budget exceeded,
//! 64 usage errors, 1 everything else.

mod emit;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use gaplab::rational::{parse_count, parse_decimal, Rational};

fn count_arg(s: &str) -> Result<u64, String> {
    parse_count(s).map_err(|_| format!("{s:?} is not an exact non-negative integer"))
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_decimal(num).map_err(|e| e.to_string())?;
        let d = parse_decimal(den).map_err(|e| e.to_string())?;
        return Ok(n / d);
    }
    parse_decimal(s).map_err(|e| e.to_string())
}

/// Comma-separated offsets like "0,2,6".
#[derive(Clone, Debug)]
pub struct Offsets(pub Vec<u64>);

fn offsets_arg(s: &str) -> Result<Offsets, String> {
    let offs = s
        .split(',')
        .map(|part| count_arg(part.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if offs.is_empty() {
        return Err("tuple needs at least one offset".into());
    }
    Ok(Offsets(offs))
}

#[derive(Parser, Debug)]
#[command(
    name = "gaplab",
    version,
    about = "Prime-gap laboratory: sieve statistics, tuple weights, exact identity checks"
)]
pub struct Cli {
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Output path; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Sidecar log for run metadata (the only place a timestamp appears)
    #[arg(long, global = true)]
    pub log: Option<PathBuf>,

    /// Segment cache directory (default: $GAPLAB_CACHE_DIR)
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Prime counts and theta sums at given points
    Sieve {
        /// Points x, comma separated (scientific notation allowed)
        #[arg(long, value_parser = count_arg, value_delimiter = ',', required = true)]
        x: Vec<u64>,
    },
    /// Histogram of normalized prime gaps up to x
    Gaps {
        #[arg(long, value_parser = count_arg)]
        x: u64,
        /// Explicit bin edges, comma separated
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["edge_step", "edge_max"])]
        edges: Option<Vec<f64>>,
        /// Uniform edge spacing (with --edge-max)
        #[arg(long, requires = "edge_max")]
        edge_step: Option<f64>,
        /// Last edge for uniform spacing
        #[arg(long, requires = "edge_step")]
        edge_max: Option<f64>,
    },
    /// Fraction of gaps below eta log p against 1 - e^-eta
    Explaw {
        #[arg(long, value_parser = count_arg)]
        x: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        eta: Vec<f64>,
    },
    /// Windows (n, n+h] holding more than one prime, with the exact
    /// small-gap inequality
    Qcount {
        #[arg(long = "N", value_parser = count_arg)]
        n: u64,
        #[arg(long, value_delimiter = ',', value_parser = count_arg, required = true)]
        h: Vec<u64>,
    },
    /// Count of n in (N, 2N] with n+h1 and n+h2 both prime
    Pairs {
        #[arg(long = "N", value_parser = count_arg)]
        n: u64,
        #[arg(long, value_parser = count_arg)]
        h1: u64,
        #[arg(long, value_parser = count_arg)]
        h2: u64,
    },
    /// Weight-array moments over (N, 2N]
    Moments {
        #[arg(long = "N", value_parser = count_arg)]
        n: u64,
        /// Tuple offsets, e.g. 0,2
        #[arg(long, value_parser = offsets_arg)]
        tuple: Offsets,
        #[arg(long)]
        l: usize,
        /// Truncation level R
        #[arg(long = "R", value_parser = count_arg, conflicts_with = "r_exp")]
        r: Option<u64>,
        /// R as N^exponent
        #[arg(long = "R-exp")]
        r_exp: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        /// Restrict to rough n (no prime factor of P(n) below R^delta)
        #[arg(long)]
        restricted: bool,
        /// Twist by theta(n + h0): emits the moments-twisted schema
        #[arg(long)]
        twist: Option<u64>,
        /// Computation path: sieve (per-divisor) or oracle (per-n)
        #[arg(long, default_value = "sieve")]
        method: String,
    },
    /// Diagonal statistic over admissible tuples in [1, h]
    Stilde {
        #[arg(long = "N", value_parser = count_arg)]
        n: u64,
        #[arg(long, value_parser = count_arg)]
        h: u64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long = "R", value_parser = count_arg, conflicts_with = "r_exp")]
        r: Option<u64>,
        #[arg(long = "R-exp")]
        r_exp: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
    },
    /// Singular-series averages over k-subsets of [1, h]
    Gallagher {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', value_parser = count_arg, required = true)]
        h: Vec<u64>,
        /// Euler-product truncation
        #[arg(long = "P", value_parser = count_arg, default_value = "1000000")]
        p: u64,
    },
    /// Singular series of given tuples (and twin closed-form values)
    Singular {
        /// Tuple offsets; repeat the flag for several tuples
        #[arg(long, value_parser = offsets_arg, action = clap::ArgAction::Append)]
        tuple: Vec<Offsets>,
        #[arg(long = "P", value_parser = count_arg, default_value = "1000000")]
        p: u64,
        /// Pair separations for the twin closed form
        #[arg(long, value_delimiter = ',', value_parser = count_arg)]
        twin: Option<Vec<u64>>,
    },
    /// Summed maximal progression errors over moduli q <= Q
    Bv {
        #[arg(long, value_delimiter = ',', value_parser = count_arg, required = true)]
        x: Vec<u64>,
        /// Fixed Q (single-x mode)
        #[arg(long = "Q", value_parser = count_arg, conflicts_with_all = ["q_exp", "q_logpow"])]
        q: Option<u64>,
        /// Q = x^exponent / (log x)^logpow
        #[arg(long)]
        q_exp: Option<f64>,
        #[arg(long)]
        q_logpow: Option<f64>,
        /// Normalization log-powers A for bv * (log x)^A / x columns
        #[arg(long = "A", value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
        a: Vec<f64>,
    },
    /// Exact identity grid: series coefficient (or --expansion ratios)
    Identity {
        /// Check the alpha-expansion ratios instead of the series identity
        #[arg(long)]
        expansion: bool,
        #[arg(long, default_value_t = 8)]
        k_max: u64,
        #[arg(long, default_value_t = 4)]
        l_max: u64,
        /// Alpha values (rationals like 1/2, -1/3) for the series identity
        #[arg(long, value_delimiter = ',', value_parser = rational_arg,
              default_values = ["1/2", "-1/2", "1/3", "-1/3", "1/7", "2/5"])]
        alpha: Vec<Rational>,
    },
    /// Quadruple-count formula, with exhaustive oracle for k = 2, 3
    Dkr {
        #[arg(long)]
        k: u64,
        /// Specific r values; all of 0..=k+2 when omitted
        #[arg(long, value_delimiter = ',', value_parser = count_arg)]
        r: Option<Vec<u64>>,
        /// Ambient interval size for the oracle representative
        #[arg(long, value_parser = count_arg)]
        h: Option<u64>,
        /// Run the exhaustive enumeration (k = 2, 3 only)
        #[arg(long)]
        oracle: bool,
    },
    /// Unconditional parameter selection for a target eta
    ParamsUncond {
        #[arg(long, value_parser = rational_arg)]
        eta: Rational,
    },
    /// Minimal tuple size under a level of distribution theta
    ParamsCond {
        #[arg(long, value_parser = rational_arg)]
        theta: Rational,
    },
    /// Parameters in the near-1/2 level regime
    ParamsXi {
        #[arg(long, value_parser = rational_arg)]
        xi: Rational,
    },
    /// Two-prime-shift parameters at the full level of distribution
    ParamsEh {
        #[arg(long, value_parser = rational_arg)]
        eta: Rational,
    },
    /// Fourth moment of the tuple-summed weight (report only)
    Fourth {
        #[arg(long = "N", value_parser = count_arg)]
        n: u64,
        #[arg(long, value_parser = count_arg)]
        h: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        l: usize,
        #[arg(long = "R", value_parser = count_arg, conflicts_with = "r_exp")]
        r: Option<u64>,
        #[arg(long = "R-exp")]
        r_exp: Option<f64>,
    },
    /// Segment-cache management
    Cache {
        #[command(subcommand)]
        verb: CacheVerb,
    },
}

#[derive(Subcommand, Debug)]
pub enum CacheVerb {
    /// List cached spans
    Status(CacheDirArg),
    /// Remove version-matched cache files
    Clear(CacheDirArg),
    /// Build and store segments covering a range
    Prewarm {
        #[command(flatten)]
        dir: CacheDirArg,
        #[arg(long, value_parser = count_arg, default_value = "1")]
        lo: u64,
        #[arg(long, value_parser = count_arg)]
        hi: u64,
        /// Also cache smallest-prime-factor tables
        #[arg(long)]
        spf: bool,
    },
}

#[derive(Args, Debug)]
pub struct CacheDirArg {
    /// Cache directory (default: $GAPLAB_CACHE_DIR)
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(runs::run(cli))
}
