//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure (bad input, failed checks,
//! beaten fixtures), 2 internal assertion.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::aberration::{compare_k, k_sequence_fast, KSequence};
use crate::catalog::{builtin_catalog32, fixtures, read_catalog, CatalogFile, FixtureStatus, FixtureTable};
use crate::counts::{a_counts, Family};
use crate::design::{check_conditions, expand, parse_design, ConditionReport, DesignInput, RegularSpec};
use crate::error::{Error, Result};
use crate::model::optimality_check;
use crate::param::{
    classify_index, hierarchy_sequence, prior_cov_beta, prior_var_diagonal, variance_formula, EffectClass, PriorSpec,
    MAX_MATERIALIZED_N,
};
use crate::search::{search_ma, SearchMode, SearchResult, SearchTask};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

const OPT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "condma", version, about = "Minimum aberration designs for two conditional/conditioned factor pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the K-sequence of a design file.
    Evaluate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check conditions (i)-(iv) and universal optimality of a design file.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the word-count families of a regular design file.
    Counts {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the prior-variance hierarchy and verify the closed form.
    Prior {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long)]
        json: bool,
    },
    /// Search for minimum aberration designs.
    Search {
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        factors: usize,
        #[arg(long, value_enum, default_value_t = SearchMode::Exhaustive)]
        mode: SearchMode,
        /// Catalog file; 32-run catalog searches default to the bundled catalog.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// List every minimizer instead of the first.
        #[arg(long)]
        all_minima: bool,
        #[arg(long)]
        json: bool,
        /// Evaluate both members of every pair-swapped couple.
        #[arg(long)]
        no_symmetry: bool,
        /// Permit exhaustive search beyond 16 runs.
        #[arg(long)]
        allow_large: bool,
    },
    /// List the published tables; with --verify, re-search every row.
    Fixtures {
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        json: bool,
    },
}

/// JSON form of an evaluated K-sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub runs: usize,
    pub order: Vec<String>,
    #[serde(rename = "values_times_N2")]
    pub values_times_n2: Vec<u64>,
    pub alias_counts: Option<Vec<u64>>,
}

impl EvaluateReport {
    pub fn new(k: &KSequence) -> Self {
        Self {
            n: k.n,
            runs: k.runs,
            order: k.order().iter().map(ToString::to_string).collect(),
            values_times_n2: k.values.clone(),
            alias_counts: k.alias_counts(),
        }
    }

    pub fn to_k(&self) -> KSequence {
        KSequence { n: self.n, runs: self.runs, values: self.values_times_n2.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub conditions: ConditionReport,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorReport {
    pub n: usize,
    pub rho: f64,
    pub sigma2: f64,
    pub hierarchy: Vec<(u8, usize, f64)>,
    pub strictly_decreasing: bool,
    /// Largest deviation of the prior diagonal from the closed form.
    pub max_abs_deviation: f64,
    /// Whether the deviation was measured on the full covariance matrix.
    pub materialized: bool,
}

/// Verdict on one fixture row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureVerdict {
    pub runs: usize,
    pub n: usize,
    pub labels: Vec<u32>,
    pub status: FixtureStatus,
    /// `minimal`, `beaten`, `parent-minimal`, `parent-beaten` or `skipped`.
    pub outcome: String,
    pub fixture_k: Option<Vec<u64>>,
    pub best_k: Option<Vec<u64>>,
    pub minimizers: Option<usize>,
    pub detail: Option<String>,
}

fn read_design(path: &Path) -> Result<DesignInput> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_design(&text)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INVALID;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(Error::OutputClosed) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn io(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::BrokenPipe {
        return Error::OutputClosed;
    }
    Error::Io(e.to_string())
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Evaluate { file, json } => {
            let design = read_design(&file)?;
            let k = k_sequence_fast(&design.matrix())?;
            if json {
                writeln!(out, "{}", to_json(&EvaluateReport::new(&k))).map_err(io)?;
            } else {
                writeln!(out, "N = {}, n = {}", k.runs, k.n).map_err(io)?;
                writeln!(out, "K = {k}").map_err(io)?;
                for (e, v) in k.order().iter().zip(&k.values) {
                    writeln!(out, "  {e:<8} N^2*K = {v}").map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Check { file, json } => {
            let design = read_design(&file)?;
            let m = design.matrix();
            let report = CheckReport { conditions: check_conditions(&m)?, optimal: optimality_check(&m, OPT_TOL)? };
            if json {
                writeln!(out, "{}", to_json(&report)).map_err(io)?;
            } else {
                write!(out, "{}", report.conditions).map_err(io)?;
                writeln!(out, "universally optimal (M = N I): {}", report.optimal).map_err(io)?;
            }
            Ok(if report.conditions.passed() && report.optimal { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Counts { file, json } => {
            let design = read_design(&file)?;
            let spec =
                design.regular().ok_or_else(|| Error::Io("counts needs a regular design given by labels".into()))?;
            let counts = a_counts(spec)?;
            if json {
                writeln!(out, "{}", to_json(&counts)).map_err(io)?;
            } else {
                write!(out, "{:<6}", "l").map_err(io)?;
                for l in 0..=counts.n {
                    write!(out, "{l:>6}").map_err(io)?;
                }
                writeln!(out).map_err(io)?;
                for f in Family::ALL {
                    write!(out, "{:<6}", format!("{f:?}")).map_err(io)?;
                    for l in 0..=counts.n {
                        write!(out, "{:>6}", counts.get(f, l as i64)).map_err(io)?;
                    }
                    writeln!(out).map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Prior { n, rho, sigma2, json } => {
            let report = prior_report(n, rho, sigma2)?;
            if json {
                writeln!(out, "{}", to_json(&report)).map_err(io)?;
            } else {
                writeln!(out, "n = {n}, rho = {rho}, sigma2 = {sigma2}").map_err(io)?;
                for (s, l, v) in &report.hierarchy {
                    writeln!(out, "  (s={s}, l={l})  {v:.6e}").map_err(io)?;
                }
                writeln!(out, "strictly decreasing: {}", report.strictly_decreasing).map_err(io)?;
                let source = if report.materialized { "materialized covariance" } else { "Kronecker diagonal" };
                writeln!(out, "max |diag - closed form| = {:.3e} ({source})", report.max_abs_deviation).map_err(io)?;
            }
            Ok(if report.max_abs_deviation <= 1e-9 && report.strictly_decreasing { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Search { runs, factors, mode, catalog, workers, all_minima, json, no_symmetry, allow_large } => {
            let mut task = match mode {
                SearchMode::Exhaustive => SearchTask::exhaustive(runs, factors),
                SearchMode::Catalog => {
                    let cat = load_catalog(catalog.as_deref(), runs)?;
                    SearchTask::with_catalog(cat, factors)
                }
            };
            task = task.workers(workers).symmetry_pruning(!no_symmetry).allow_large(allow_large);
            let mut result = search_ma(&task)?;
            if json {
                if !all_minima {
                    result.minimizers.truncate(1);
                }
                writeln!(out, "{}", to_json(&result)).map_err(io)?;
            } else {
                print_search(&result, all_minima, out).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Fixtures { verify, runs, workers, json } => {
            let tables: Vec<FixtureTable> =
                fixtures().into_iter().filter(|t| runs.is_none_or(|r| r == t.runs)).collect();
            if tables.is_empty() {
                return Err(Error::Io(format!("no fixture table for {} runs", runs.unwrap_or(0))));
            }
            if !verify {
                if json {
                    writeln!(out, "{}", to_json(&tables)).map_err(io)?;
                } else {
                    for t in &tables {
                        for row in &t.rows {
                            let labels: Vec<String> = row.labels.iter().map(u32::to_string).collect();
                            writeln!(
                                out,
                                "N={:<3} n={:<3} ({}){} [{:?}]",
                                t.runs,
                                row.n,
                                labels.join(","),
                                row.annotation.as_deref().map(|a| format!(" {a}")).unwrap_or_default(),
                                row.status
                            )
                            .map_err(io)?;
                        }
                    }
                }
                return Ok(EXIT_OK);
            }
            let mut verdicts = Vec::new();
            for t in &tables {
                for row in &t.rows {
                    verdicts.push(verify_fixture(t, row.n, workers)?);
                }
            }
            if json {
                writeln!(out, "{}", to_json(&verdicts)).map_err(io)?;
            } else {
                for v in &verdicts {
                    let labels: Vec<String> = v.labels.iter().map(u32::to_string).collect();
                    writeln!(
                        out,
                        "N={:<3} n={:<3} {:<15} ({}){}",
                        v.runs,
                        v.n,
                        v.outcome,
                        labels.join(","),
                        v.detail.as_deref().map(|d| format!("  {d}")).unwrap_or_default()
                    )
                    .map_err(io)?;
                }
            }
            let beaten = verdicts.iter().any(|v| v.status == FixtureStatus::Verified && v.outcome != "minimal");
            Ok(if beaten { EXIT_INVALID } else { EXIT_OK })
        }
    }
}

fn load_catalog(path: Option<&Path>, runs: usize) -> Result<CatalogFile> {
    match path {
        Some(p) => read_catalog(p),
        None if runs == 32 => Ok(builtin_catalog32()),
        None => Err(Error::Infeasible(format!("no bundled catalog for {runs} runs; pass --catalog"))),
    }
}

fn print_search(result: &SearchResult, all: bool, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "N = {}, n = {}, mode = {:?}", result.runs, result.factors, result.mode)?;
    writeln!(out, "best K = {}", result.best_k)?;
    writeln!(
        out,
        "minimizers: {} ({} distinct up to relabelling and pair swap)",
        result.minimizers.len(),
        result.distinct_classes
    )?;
    let shown = if all { result.minimizers.len() } else { 1 };
    for m in result.minimizers.iter().take(shown) {
        writeln!(out, "  {m}")?;
    }
    writeln!(
        out,
        "candidates: {} examined, {} pruned, {} short-circuited; {:.3} s",
        result.candidates_examined, result.pruned, result.short_circuited, result.wall_seconds
    )
}

/// Hierarchy table plus the largest deviation of the prior diagonal from the closed form.
pub fn prior_report(n: usize, rho: f64, sigma2: f64) -> Result<PriorReport> {
    let prior = PriorSpec::new(sigma2, rho)?;
    let seq = hierarchy_sequence(n, &prior)?;
    let materialized = n <= MAX_MATERIALIZED_N;
    let diag: Vec<f64> = if materialized {
        let cov = prior_cov_beta(n, &prior)?;
        (0..cov.nrows()).map(|i| cov[(i, i)]).collect()
    } else {
        prior_var_diagonal(n, &prior)?
    };
    let mut max_dev: f64 = 0.0;
    for (idx, &d) in diag.iter().enumerate() {
        if let EffectClass::Class { s, l } = classify_index(idx, n) {
            max_dev = max_dev.max((d - variance_formula(n, s, l, &prior)?).abs());
        }
    }
    Ok(PriorReport {
        n,
        rho,
        sigma2,
        hierarchy: seq.entries.iter().map(|e| (e.s, e.l, e.variance)).collect(),
        strictly_decreasing: seq.is_strictly_decreasing(),
        max_abs_deviation: max_dev,
        materialized,
    })
}

/// Re-searches one fixture row.
///
/// 16-run rows use the exhaustive search; 32-run rows up to 12 factors use
/// the bundled catalog; larger rows are compared against every role
/// assignment of their own column set only.
pub fn verify_fixture(table: &FixtureTable, n: usize, workers: usize) -> Result<FixtureVerdict> {
    let row = table.row(n).ok_or_else(|| Error::Io(format!("no fixture row n = {n}")))?;
    let mut verdict = FixtureVerdict {
        runs: table.runs,
        n,
        labels: row.labels.clone(),
        status: row.status,
        outcome: "skipped".into(),
        fixture_k: None,
        best_k: None,
        minimizers: None,
        detail: row.note.clone(),
    };
    let spec: RegularSpec = match table.spec(row) {
        Ok(s) => s,
        Err(e) => {
            verdict.detail = Some(format!("not a valid design: {e}"));
            return Ok(verdict);
        }
    };
    let k = k_sequence_fast(&expand(&spec))?;
    let (task, parent_only) = match table.runs {
        16 => (SearchTask::exhaustive(16, n), false),
        32 if n <= 12 => (SearchTask::with_catalog(builtin_catalog32(), n), false),
        runs => {
            let parent = CatalogFile { runs, r: spec.r(), entries: vec![spec.clone()] };
            (SearchTask::with_catalog(parent, n), true)
        }
    };
    let result = search_ma(&task.workers(workers))?;
    let minimal = compare_k(&k, &result.best_k)?.is_eq();
    verdict.outcome = match (parent_only, minimal) {
        (false, true) => "minimal",
        (false, false) => "beaten",
        (true, true) => "parent-minimal",
        (true, false) => "parent-beaten",
    }
    .into();
    if !minimal {
        let first = result.best_k.values.iter().zip(&k.values).position(|(a, b)| a != b);
        if let Some(i) = first {
            let e = result.best_k.order()[i];
            let n2 = (table.runs * table.runs) as u64;
            verdict.detail = Some(format!(
                "first difference at {e}: {} vs best {}, e.g. {}",
                k.values[i] / n2,
                result.best_k.values[i] / n2,
                result.minimizers[0]
            ));
        }
    }
    verdict.fixture_k = Some(k.values);
    verdict.best_k = Some(result.best_k.values);
    verdict.minimizers = Some(result.minimizers.len());
    Ok(verdict)
}
