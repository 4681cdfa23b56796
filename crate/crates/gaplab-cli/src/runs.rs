//! Subcommand dispatch: runs the experiment, renders the document, writes
//! it out, maps errors to exit codes.

use std::path::PathBuf;

use gaplab::analytic;
use gaplab::distlevel::{self, QRule};
use gaplab::gaps;
use gaplab::rational;
use gaplab::sieve::{self, cache, Sieve};
use gaplab::tuples::{self, Tuple};
use gaplab::weights::{self, GpyConfig, MomentMethod, MomentReport};
use gaplab::{Classify, ErrorClass};

use crate::csv_row;
use crate::emit::{write_log, write_output, Csv};
use crate::{CacheDirArg, CacheVerb, Cli, Cmd, Offsets};

struct CmdError {
    message: String,
    class: ErrorClass,
}

impl CmdError {
    fn precondition(msg: impl Into<String>) -> Self {
        CmdError {
            message: msg.into(),
            class: ErrorClass::Precondition,
        }
    }
}

impl<E: Classify + std::fmt::Display> From<E> for CmdError {
    fn from(e: E) -> Self {
        CmdError {
            message: e.to_string(),
            class: e.class(),
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Precondition => 2,
        ErrorClass::Budget => 3,
        ErrorClass::Io | ErrorClass::Internal => 1,
    }
}

pub fn run(cli: Cli) -> u8 {
    if cli.threads > 0 {
        // ignore failure: the pool can only be sized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    if let Some(log) = &cli.log {
        let argv: Vec<String> = std::env::args().collect();
        if let Err(e) = write_log(log, &argv) {
            eprintln!("gaplab: cannot write log: {e}");
            return 1;
        }
    }
    match dispatch(&cli) {
        Ok(content) => match write_output(cli.out.as_deref(), &content) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("gaplab: cannot write output: {e}");
                1
            }
        },
        Err(e) => {
            eprintln!("gaplab: {}", e.message);
            exit_code(e.class)
        }
    }
}

fn cache_dir_of(cli_dir: Option<&PathBuf>, arg: Option<&CacheDirArg>) -> Option<PathBuf> {
    arg.and_then(|a| a.dir.clone())
        .or_else(|| cli_dir.cloned())
        .or_else(|| std::env::var_os("GAPLAB_CACHE_DIR").map(PathBuf::from))
}

fn make_sieve(cli: &Cli) -> Sieve {
    match cache_dir_of(cli.cache_dir.as_ref(), None) {
        Some(dir) => Sieve::new().with_cache_dir(dir),
        None => Sieve::new(),
    }
}

fn resolve_r(n: u64, r: Option<u64>, r_exp: Option<f64>) -> Result<u64, CmdError> {
    match (r, r_exp) {
        (Some(r), None) => Ok(r),
        (None, Some(e)) => {
            if !(e > 0.0 && e < 1.0) {
                return Err(CmdError::precondition(format!(
                    "R exponent must lie in (0, 1), got {e}"
                )));
            }
            Ok(((n as f64).powf(e).floor() as u64).max(1))
        }
        (None, None) => Err(CmdError::precondition("one of --R / --R-exp is required")),
        (Some(_), Some(_)) => unreachable!("clap forbids both"),
    }
}

fn tuple_of(offsets: &Offsets) -> Result<Tuple, CmdError> {
    Ok(Tuple::new(offsets.0.clone())?)
}

fn moment_row(csv: &mut Csv, rep: &MomentReport, twisted: bool) {
    if twisted {
        csv_row!(
            csv,
            rep.n,
            rep.k,
            rep.l,
            rep.r,
            rep.delta,
            rep.h0.unwrap_or(0),
            rep.restricted,
            rep.empirical,
            rep.main_term,
            rep.ratio,
            rep.method.as_str(),
        );
    } else {
        csv_row!(
            csv,
            rep.n,
            rep.k,
            rep.l,
            rep.r,
            rep.delta,
            rep.restricted,
            rep.empirical,
            rep.main_term,
            rep.ratio,
            rep.method.as_str(),
        );
    }
}

fn dispatch(cli: &Cli) -> Result<String, CmdError> {
    match &cli.cmd {
        Cmd::Sieve { x } => {
            let sv = make_sieve(cli);
            let mut csv = Csv::new("sieve", 1, &["x", "prime_count", "theta"]);
            for &point in x {
                let pi = sv.prime_count(point)?;
                let theta = sv.theta_sum(point)?;
                csv_row!(csv, point, pi, theta);
            }
            Ok(csv.finish())
        }
        Cmd::Gaps {
            x,
            edges,
            edge_step,
            edge_max,
        } => {
            let edges: Vec<f64> = match (edges, edge_step, edge_max) {
                (Some(e), _, _) => e.clone(),
                (None, Some(step), Some(max)) => {
                    let mut v = Vec::new();
                    let mut i = 1u32;
                    loop {
                        let e = step * i as f64;
                        if e > *max + 1e-12 {
                            break;
                        }
                        v.push(e);
                        i += 1;
                    }
                    v
                }
                _ => (1..=16).map(|i| 0.25 * i as f64).collect(),
            };
            let hist = gaps::gap_histogram(*x, &edges)?;
            let mut csv = Csv::new(
                "gaps-histogram",
                1,
                &["x", "bin_index", "bin_lo", "bin_hi", "count"],
            );
            for (i, &count) in hist.counts.iter().enumerate() {
                let lo = if i == 0 { 0.0 } else { hist.bin_edges[i - 1] };
                let hi = hist
                    .bin_edges
                    .get(i)
                    .map(|e| e.to_string())
                    .unwrap_or_else(|| "inf".into());
                csv_row!(csv, hist.x, i, lo, hi, count);
            }
            Ok(csv.finish())
        }
        Cmd::Explaw { x, eta } => {
            let rows = gaps::exponential_law_table(*x, eta)?;
            let mut csv = Csv::new(
                "explaw",
                1,
                &["x", "eta", "count", "fraction", "conjectured", "diff"],
            );
            for row in rows {
                csv_row!(csv, x, row.eta, row.count, row.fraction, row.conjectured, row.diff);
            }
            Ok(csv.finish())
        }
        Cmd::Qcount { n, h } => {
            let mut csv = Csv::new(
                "qcount",
                1,
                &["N", "h", "Q", "inside_gaps", "boundary", "check34"],
            );
            for &window in h {
                let rep = gaps::q_count(*n, window)?;
                csv_row!(csv, rep.n, rep.h, rep.q, rep.inside_gaps, rep.boundary, rep.check_34);
            }
            Ok(csv.finish())
        }
        Cmd::Pairs { n, h1, h2 } => {
            let rep = gaps::prime_pair_count(*n, *h1, *h2)?;
            let mut csv = Csv::new(
                "pairs",
                1,
                &["N", "h1", "h2", "count", "singular", "hl_ratio"],
            );
            csv_row!(csv, rep.n, rep.h1, rep.h2, rep.count, rep.singular, rep.hl_ratio);
            Ok(csv.finish())
        }
        Cmd::Moments {
            n,
            tuple,
            l,
            r,
            r_exp,
            delta,
            restricted,
            twist,
            method,
        } => {
            let tuple = tuple_of(tuple)?;
            let r = resolve_r(*n, *r, *r_exp)?;
            let h = tuple.max_offset().max(twist.unwrap_or(0));
            let cfg = GpyConfig::new(*n, tuple.k(), *l, r, *delta, h)?;
            let method = match method.as_str() {
                "oracle" => MomentMethod::PerNOracle,
                _ => MomentMethod::PerDSieve,
            };
            match twist {
                None => {
                    let rep = weights::second_moment(&tuple, &cfg, *restricted, method)?;
                    let mut csv = Csv::new(
                        "moments",
                        1,
                        &["N", "k", "l", "R", "delta", "restricted", "empirical", "main_term", "ratio", "method"],
                    );
                    moment_row(&mut csv, &rep, false);
                    Ok(csv.finish())
                }
                Some(h0) => {
                    let rep = weights::twisted_moment(&tuple, *h0, &cfg, *restricted, method)?;
                    let mut csv = Csv::new(
                        "moments-twisted",
                        1,
                        &["N", "k", "l", "R", "delta", "h0", "restricted", "empirical", "main_term", "ratio", "method"],
                    );
                    moment_row(&mut csv, &rep, true);
                    Ok(csv.finish())
                }
            }
        }
        Cmd::Stilde {
            n,
            h,
            k,
            l,
            r,
            r_exp,
            delta,
        } => {
            let r = resolve_r(*n, *r, *r_exp)?;
            let cfg = GpyConfig::new(*n, *k, *l, r, *delta, *h)?;
            let rep = weights::s_tilde(&cfg)?;
            let mut csv = Csv::new(
                "stilde",
                1,
                &[
                    "N", "h", "k", "l", "R", "delta", "value", "comp1", "comp2", "comp3",
                    "main1", "main2", "main3", "ratio1", "ratio2", "ratio3",
                ],
            );
            csv_row!(
                csv,
                rep.n,
                rep.h,
                rep.k,
                rep.l,
                rep.r,
                rep.delta,
                rep.value,
                rep.comp_log,
                rep.comp_twist_in,
                rep.comp_twist_out,
                rep.main_log,
                rep.main_twist_in,
                rep.main_twist_out,
                rep.ratio_log,
                rep.ratio_twist_in,
                rep.ratio_twist_out,
            );
            Ok(csv.finish())
        }
        Cmd::Gallagher { k, h, p } => {
            let mut csv = Csv::new("gallagher", 1, &["k", "h", "P", "sum", "ratio"]);
            for &hh in h {
                let g = tuples::gallagher_sum(*k, hh, *p)?;
                csv_row!(csv, g.k, g.h, g.p_limit, g.sum, g.ratio);
            }
            Ok(csv.finish())
        }
        Cmd::Singular { tuple, p, twin } => {
            if tuple.is_empty() && twin.is_none() {
                return Err(CmdError::precondition(
                    "give at least one --tuple or --twin",
                ));
            }
            if let Some(ds) = twin {
                if !tuple.is_empty() {
                    return Err(CmdError::precondition(
                        "--twin and --tuple emit different schemas; use one",
                    ));
                }
                let mut csv = Csv::new("singular-twin", 1, &["d", "value"]);
                for &d in ds {
                    if d == 0 {
                        return Err(CmdError::precondition("twin separation must be >= 1"));
                    }
                    csv_row!(csv, d, tuples::twin_singular(d));
                }
                return Ok(csv.finish());
            }
            let mut csv = Csv::new(
                "singular",
                1,
                &["offsets", "P", "value", "tail_log_bound", "exact_zero"],
            );
            for offs in tuple {
                let t = tuple_of(offs)?;
                let s = tuples::singular_series(&t, *p)?;
                let joined = t
                    .offsets()
                    .iter()
                    .map(|o| o.to_string())
                    .collect::<Vec<_>>()
                    .join("+");
                csv_row!(csv, joined, s.truncation_bound, s.value, s.tail_log_bound, s.exact_zero);
            }
            Ok(csv.finish())
        }
        Cmd::Bv {
            x,
            q,
            q_exp,
            q_logpow,
            a,
        } => {
            let mut columns = vec!["x".to_string(), "Q".into(), "bv_sum".into()];
            for av in a {
                columns.push(format!("norm_a{av}"));
            }
            let col_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
            let mut csv = Csv::new("bv", 1, &col_refs);
            let rows = match (q, q_exp, q_logpow) {
                (Some(fixed), None, None) => x
                    .iter()
                    .map(|&point| {
                        let bv = distlevel::bv_sum(point, *fixed)?;
                        let lx = (point as f64).ln();
                        let norms =
                            a.iter().map(|&av| bv * lx.powf(av) / point as f64).collect();
                        Ok(distlevel::BvRow {
                            x: point,
                            q: *fixed,
                            bv_sum: bv,
                            normalized: norms,
                        })
                    })
                    .collect::<Result<Vec<_>, CmdError>>()?,
                (None, Some(exp), Some(logpow)) => distlevel::bv_decay_table(
                    x,
                    QRule {
                        exponent: *exp,
                        log_power: *logpow,
                    },
                    a,
                )?,
                _ => {
                    return Err(CmdError::precondition(
                        "give either --Q or both --q-exp and --q-logpow",
                    ))
                }
            };
            for row in rows {
                let mut fields = vec![
                    row.x.to_string(),
                    row.q.to_string(),
                    row.bv_sum.to_string(),
                ];
                fields.extend(row.normalized.iter().map(|v| v.to_string()));
                csv.row(&fields);
            }
            Ok(csv.finish())
        }
        Cmd::Identity {
            expansion,
            k_max,
            l_max,
            alpha,
        } => {
            if *expansion {
                let mut csv = Csv::new(
                    "identity-expansion",
                    1,
                    &["k", "l", "c0", "c1", "c2", "k_formula"],
                );
                for k in 1..=*k_max {
                    for l in 0..=*l_max.min(&(k - 1)) {
                        let e = analytic::expansion_coeffs(k, l)?;
                        let kf = e
                            .k_formula
                            .as_ref()
                            .map(|f| f.to_string())
                            .unwrap_or_else(|| "-".into());
                        csv_row!(csv, k, l, e.c0, e.c1, e.c2, kf);
                    }
                }
                Ok(csv.finish())
            } else {
                let mut csv = Csv::new(
                    "identity-series",
                    1,
                    &["k", "l", "alpha", "closed", "series", "equal"],
                );
                for k in 1..=*k_max {
                    for l in 0..=*l_max.min(&(k - 1)) {
                        for al in alpha {
                            let r = analytic::t_q1(k, l, al)?;
                            csv_row!(csv, k, l, al, r.closed, r.series, r.closed == r.series);
                        }
                    }
                }
                Ok(csv.finish())
            }
        }
        Cmd::Dkr { k, r, h, oracle } => {
            let rs: Vec<u64> = match r {
                Some(list) => list.clone(),
                None => (0..=k + 2).collect(),
            };
            let mut csv = Csv::new(
                "dkr",
                1,
                &[
                    "k", "r", "formula", "oracle_ordered", "oracle_ordered_distinct",
                    "oracle_unordered", "matching",
                ],
            );
            for &rr in &rs {
                let formula = analytic::d_formula(*k, rr)?;
                if *oracle {
                    let ambient = h.unwrap_or(k + rr + 4);
                    let rep = analytic::d_oracle(*k, rr, ambient)?;
                    let matching = rep
                        .matching
                        .map(|m| format!("{m:?}"))
                        .unwrap_or_else(|| "none".into());
                    csv_row!(
                        csv,
                        k,
                        rr,
                        formula,
                        rep.ordered_with_repeats,
                        rep.ordered_distinct,
                        rep.unordered_pair,
                        matching,
                    );
                } else {
                    csv_row!(csv, k, rr, formula, "-", "-", "-", "-");
                }
            }
            Ok(csv.finish())
        }
        Cmd::ParamsUncond { eta } => params_json(analytic::select_unconditional(eta)?),
        Cmd::ParamsCond { theta } => {
            let (k, l) = analytic::select_conditional(theta)?;
            let doc = serde_json::json!({
                "regime": "conditional",
                "theta": rational::to_f64(theta),
                "k": k,
                "l": l,
            });
            Ok(format!("{}\n", serde_json::to_string_pretty(&doc).map_err(|e| CmdError {
                message: e.to_string(),
                class: ErrorClass::Internal,
            })?))
        }
        Cmd::ParamsXi { xi } => params_json(analytic::xi_regime(xi)?),
        Cmd::ParamsEh { eta } => params_json(analytic::eh_two_shift(eta)?),
        Cmd::Fourth { n, h, k, l, r, r_exp } => {
            let r = resolve_r(*n, *r, *r_exp)?;
            let cfg = GpyConfig::new(*n, *k, *l, r, 0.25, *h)?;
            let rep = weights::fourth_moment_probe(&cfg)?;
            let mut csv = Csv::new(
                "fourth",
                1,
                &["N", "h", "k", "l", "R", "sum", "ratio", "tuples"],
            );
            csv_row!(csv, rep.n, rep.h, rep.k, rep.l, rep.r, rep.sum, rep.ratio, rep.tuples);
            Ok(csv.finish())
        }
        Cmd::Cache { verb } => run_cache(cli, verb),
    }
}

fn params_json(report: analytic::ParamReport) -> Result<String, CmdError> {
    serde_json::to_string_pretty(&report)
        .map(|s| format!("{s}\n"))
        .map_err(|e| CmdError {
            message: e.to_string(),
            class: ErrorClass::Internal,
        })
}

fn run_cache(cli: &Cli, verb: &CacheVerb) -> Result<String, CmdError> {
    let dir_of = |arg: &CacheDirArg| {
        cache_dir_of(cli.cache_dir.as_ref(), Some(arg)).ok_or_else(|| {
            CmdError::precondition("no cache directory: give --dir or set GAPLAB_CACHE_DIR")
        })
    };
    match verb {
        CacheVerb::Status(arg) => {
            let dir = dir_of(arg)?;
            let spans = cache::status(&dir)?;
            let mut out = String::new();
            out.push_str(&format!("cached files: {}\n", spans.len()));
            for s in spans {
                let kind = if s.spf { "spf " } else { "bits" };
                out.push_str(&format!("{kind} [{}, {}) {} bytes\n", s.lo, s.hi, s.bytes));
            }
            Ok(out)
        }
        CacheVerb::Clear(arg) => {
            let dir = dir_of(arg)?;
            let removed = cache::clear(&dir)?;
            Ok(format!("removed {removed} cache files\n"))
        }
        CacheVerb::Prewarm { dir, lo, hi, spf } => {
            let dir = dir_of(dir)?;
            if lo >= hi {
                return Err(CmdError::precondition(format!(
                    "need lo < hi, got {lo} >= {hi}"
                )));
            }
            let spans = cache::prewarm(&dir, *lo, *hi, *spf, sieve::DEFAULT_SEGMENT_CAP)?;
            Ok(format!(
                "prewarmed {} segments covering [{lo}, {hi})\n",
                spans.len()
            ))
        }
    }
}
