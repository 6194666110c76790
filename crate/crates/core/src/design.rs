//! Design construction and the universal-optimality projection checks.
//!
//! Factors are indexed from zero in code. Columns 0..4 always carry the
//! roles F1 (conditional), F2 (conditioned), F3 (conditional) and
//! F4 (conditioned); every later column is a traditional factor.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{self, Label, MAX_R};

/// A regular `2^(n-r)` design given by `n` distinct nonzero labels of rank `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegularSpec {
    r: u32,
    columns: Vec<Label>,
}

impl RegularSpec {
    /// Validates labels (range, nonzero, distinct) and full row rank.
    pub fn new(r: u32, columns: Vec<Label>) -> Result<Self> {
        if !(2..=MAX_R).contains(&r) {
            return Err(Error::BadRunSize(1usize << r.min(31)));
        }
        for (i, &c) in columns.iter().enumerate() {
            if c == 0 || c >= 1 << r {
                return Err(Error::LabelOutOfRange { label: c, r });
            }
            if columns[..i].contains(&c) {
                return Err(Error::DuplicateLabel(c));
            }
        }
        let rank = gf2::rank(&columns);
        if rank != r as usize {
            return Err(Error::RankDeficient { rank, r });
        }
        Ok(Self { r, columns })
    }

    /// Builds a spec from a run size `N = 2^r`.
    pub fn with_runs(runs: usize, columns: Vec<Label>) -> Result<Self> {
        Self::new(run_exponent(runs)?, columns)
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn runs(&self) -> usize {
        1 << self.r
    }

    pub fn factors(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Label] {
        &self.columns
    }

    /// `(b1, b2, b3, b4)`; panics when fewer than four columns exist.
    pub fn roles(&self) -> [Label; 4] {
        [self.columns[0], self.columns[1], self.columns[2], self.columns[3]]
    }

    /// The traditional columns `b5..bn`.
    pub fn traditional(&self) -> &[Label] {
        &self.columns[4.min(self.columns.len())..]
    }

    pub(crate) fn require_factors(&self, min: usize) -> Result<()> {
        if self.factors() < min {
            return Err(Error::TooFewFactors { n: self.factors(), min });
        }
        Ok(())
    }
}

impl fmt::Display for RegularSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `log2(runs)` for a power-of-two run size in the supported range.
pub fn run_exponent(runs: usize) -> Result<u32> {
    if runs < 4 || !runs.is_power_of_two() || runs > 1 << MAX_R {
        return Err(Error::BadRunSize(runs));
    }
    Ok(runs.trailing_zeros())
}

/// An `N x n` two-level design with entries in `{+1, -1}`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignMatrix {
    runs: usize,
    factors: usize,
    entries: Vec<i8>,
}

impl DesignMatrix {
    pub fn from_rows<T>(rows: &[Vec<T>]) -> Result<Self>
    where
        T: Copy + Into<i64>,
    {
        let factors = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * factors);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != factors {
                return Err(Error::Ragged { row, found: values.len(), expected: factors });
            }
            for (col, &v) in values.iter().enumerate() {
                match v.into() {
                    1 => entries.push(1),
                    -1 => entries.push(-1),
                    value => return Err(Error::BadEntry { row, col, value }),
                }
            }
        }
        Ok(Self { runs: rows.len(), factors, entries })
    }

    /// The complete `2^n` factorial in lexicographic row order.
    pub fn full_factorial(n: usize) -> Self {
        let runs = 1usize << n;
        let mut entries = Vec::with_capacity(runs * n);
        for u in 0..runs {
            for j in 0..n {
                entries.push(if u >> (n - 1 - j) & 1 == 0 { 1 } else { -1 });
            }
        }
        Self { runs, factors: n, entries }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.factors + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.factors..(row + 1) * self.factors]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks(self.factors.max(1)).take(self.runs)
    }

    pub fn column(&self, col: usize) -> Vec<i8> {
        (0..self.runs).map(|u| self.get(u, col)).collect()
    }

    /// Applies a permutation to the rows: new row `i` is old row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for &u in order {
            entries.extend_from_slice(self.row(u));
        }
        Self { runs: self.runs, factors: self.factors, entries }
    }

    /// Reorders columns: new column `j` is old column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(self.runs * order.len());
        for u in 0..self.runs {
            entries.extend(order.iter().map(|&j| self.get(u, j)));
        }
        Self { runs: self.runs, factors: order.len(), entries }
    }

    pub fn flip_column(&self, col: usize) -> Self {
        let mut out = self.clone();
        for u in 0..self.runs {
            out.entries[u * self.factors + col] *= -1;
        }
        out
    }

    pub(crate) fn require_factors(&self, min: usize) -> Result<()> {
        if self.factors < min {
            return Err(Error::TooFewFactors { n: self.factors, min });
        }
        Ok(())
    }
}

/// Row space of the labels: entry `(u, j)` is `+1` when `<u, b_j> = 0`, else `-1`.
pub fn expand(spec: &RegularSpec) -> DesignMatrix {
    let runs = spec.runs();
    let n = spec.factors();
    let mut entries = Vec::with_capacity(runs * n);
    for u in 0..runs as u32 {
        for &b in spec.columns() {
            entries.push(if gf2::inner(u, b) == 0 { 1 } else { -1 });
        }
    }
    DesignMatrix { runs, factors: n, entries }
}

/// Frequency of every sign tuple observed on the selected columns.
pub fn projection_counts(design: &DesignMatrix, cols: &[usize]) -> BTreeMap<Vec<i8>, usize> {
    let mut counts = BTreeMap::new();
    for row in design.rows() {
        let key: Vec<i8> = cols.iter().map(|&j| row[j]).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// All `2^k` level combinations occur, each equally often.
pub fn equifrequent(design: &DesignMatrix, cols: &[usize]) -> bool {
    let cells = 1usize << cols.len();
    if !design.runs().is_multiple_of(cells) {
        return false;
    }
    let counts = projection_counts(design, cols);
    counts.len() == cells && counts.values().all(|&c| c == design.runs() / cells)
}

/// Outcome of the four projection conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// (i) orthogonal array of strength two.
    pub strength_two: bool,
    /// (ii) projections onto F1, F2, Fj for j in {4, 5, ..., n}.
    pub cond_ii: bool,
    /// (iii) projections onto F3, F4, Fj for j in {2, 5, ..., n}.
    pub cond_iii: bool,
    /// (iv) projection onto F1, F2, F3, F4.
    pub cond_iv: bool,
    /// Zero-based column tuples whose projection is not equifrequent.
    pub failures: Vec<Vec<usize>>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.strength_two && self.cond_ii && self.cond_iii && self.cond_iv
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(f, "(i)   strength two          {}", mark(self.strength_two))?;
        writeln!(f, "(ii)  F1,F2,Fj equifrequent {}", mark(self.cond_ii))?;
        writeln!(f, "(iii) F3,F4,Fj equifrequent {}", mark(self.cond_iii))?;
        writeln!(f, "(iv)  F1..F4 equifrequent   {}", mark(self.cond_iv))?;
        for tuple in &self.failures {
            let names: Vec<String> = tuple.iter().map(|j| format!("F{}", j + 1)).collect();
            writeln!(f, "  not equifrequent: {}", names.join(","))?;
        }
        Ok(())
    }
}

/// The tuples inspected by each condition, in report order.
fn condition_tuples(n: usize) -> [Vec<Vec<usize>>; 4] {
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j])).collect();
    let ii = (3..n).map(|j| vec![0, 1, j]).collect();
    let iii = std::iter::once(1).chain(4..n).map(|j| vec![2, 3, j]).collect();
    let iv = vec![vec![0, 1, 2, 3]];
    [pairs, ii, iii, iv]
}

fn report_from(n: usize, mut holds: impl FnMut(&[usize]) -> bool) -> ConditionReport {
    let mut failures = Vec::new();
    let mut verdicts = [true; 4];
    for (verdict, tuples) in verdicts.iter_mut().zip(condition_tuples(n)) {
        for tuple in tuples {
            if !holds(&tuple) {
                *verdict = false;
                failures.push(tuple);
            }
        }
    }
    let [strength_two, cond_ii, cond_iii, cond_iv] = verdicts;
    ConditionReport { strength_two, cond_ii, cond_iii, cond_iv, failures }
}

/// Checks conditions (i)-(iv) by counting projections of an arbitrary two-level array.
pub fn check_conditions(design: &DesignMatrix) -> Result<ConditionReport> {
    design.require_factors(5)?;
    Ok(report_from(design.factors(), |cols| equifrequent(design, cols)))
}

/// Same verdict as [`check_conditions`] on the expanded design, decided by
/// linear independence of the labels involved.
pub fn check_conditions_regular(spec: &RegularSpec) -> Result<ConditionReport> {
    spec.require_factors(5)?;
    let cols = spec.columns();
    Ok(report_from(spec.factors(), |tuple| {
        let labels: Vec<Label> = tuple.iter().map(|&j| cols[j]).collect();
        gf2::independent(&labels)
    }))
}

/// A parsed design file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DesignInput {
    Regular(RegularSpec),
    Matrix(DesignMatrix),
}

impl DesignInput {
    pub fn matrix(&self) -> DesignMatrix {
        match self {
            DesignInput::Regular(spec) => expand(spec),
            DesignInput::Matrix(m) => m.clone(),
        }
    }

    pub fn regular(&self) -> Option<&RegularSpec> {
        match self {
            DesignInput::Regular(spec) => Some(spec),
            DesignInput::Matrix(_) => None,
        }
    }

    pub fn runs(&self) -> usize {
        match self {
            DesignInput::Regular(spec) => spec.runs(),
            DesignInput::Matrix(m) => m.runs(),
        }
    }

    pub fn factors(&self) -> usize {
        match self {
            DesignInput::Regular(spec) => spec.factors(),
            DesignInput::Matrix(m) => m.factors(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_int<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("expected an integer, found `{tok}`")))
}

/// Parses the design file format.
///
/// ```text
/// 16 5
/// labels: 1 2 4 8 15
/// ```
///
/// or `N n`, a `matrix:` line, then `N` rows of `n` entries in `{1, -1}`.
/// Blank lines and `#` comments are ignored.
pub fn parse_design(text: &str) -> Result<DesignInput> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty design file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(ln, "header must be `N n`"));
    }
    let runs: usize = parse_int(dims[0], ln)?;
    let n: usize = parse_int(dims[1], ln)?;

    let (ln, body) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing `labels:` or `matrix:` line"))?;
    if let Some(rest) = body.strip_prefix("labels:") {
        let labels = rest.split_whitespace().map(|t| parse_int::<Label>(t, ln)).collect::<Result<Vec<_>>>()?;
        if labels.len() != n {
            return Err(parse_err(ln, format!("expected {n} labels, found {}", labels.len())));
        }
        if let Some((extra, _)) = lines.next() {
            return Err(parse_err(extra, "unexpected content after `labels:` line (mixed forms)"));
        }
        let r = run_exponent(runs).map_err(|e| parse_err(1, e.to_string()))?;
        let spec = RegularSpec::new(r, labels).map_err(|e| parse_err(ln, e.to_string()))?;
        Ok(DesignInput::Regular(spec))
    } else if body.trim_end() == "matrix:" {
        let mut rows: Vec<Vec<i64>> = Vec::with_capacity(runs);
        for (ln, line) in lines {
            if line.starts_with("labels:") {
                return Err(parse_err(ln, "`labels:` inside a matrix design (mixed forms)"));
            }
            let row = line.split_whitespace().map(|t| parse_int::<i64>(t, ln)).collect::<Result<Vec<_>>>()?;
            if row.len() != n {
                return Err(parse_err(ln, format!("expected {n} entries, found {}", row.len())));
            }
            if row.iter().any(|&v| v != 1 && v != -1) {
                return Err(parse_err(ln, "entries must be 1 or -1"));
            }
            rows.push(row);
        }
        if rows.len() != runs {
            return Err(parse_err(ln, format!("expected {runs} rows, found {}", rows.len())));
        }
        Ok(DesignInput::Matrix(DesignMatrix::from_rows(&rows)?))
    } else {
        Err(parse_err(ln, "expected `labels:` or `matrix:`"))
    }
}

/// Renders a design in the file format accepted by [`parse_design`].
pub fn format_design(input: &DesignInput) -> String {
    match input {
        DesignInput::Regular(spec) => {
            let labels: Vec<String> = spec.columns().iter().map(u32::to_string).collect();
            format!("{} {}\nlabels: {}\n", spec.runs(), spec.factors(), labels.join(" "))
        }
        DesignInput::Matrix(m) => {
            let mut out = format!("{} {}\nmatrix:\n", m.runs(), m.factors());
            for row in m.rows() {
                let cells: Vec<String> = row.iter().map(i8::to_string).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
            out
        }
    }
}
