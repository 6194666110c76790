//! Design catalogs, the published fixture tables and canonical forms.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{run_exponent, RegularSpec};
use crate::error::{Error, Result};
use crate::gf2::Label;

/// A list of regular designs with a common run size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogFile {
    pub runs: usize,
    pub r: u32,
    pub entries: Vec<RegularSpec>,
}

impl CatalogFile {
    pub fn with_factors(&self, n: usize) -> impl Iterator<Item = &RegularSpec> {
        self.entries.iter().filter(move |e| e.factors() == n)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses the catalog format: a `runs: N` header followed by `n: c1 ... cn` lines.
pub fn parse_catalog(text: &str) -> Result<CatalogFile> {
    let mut header: Option<(usize, u32)> = None;
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| parse_err(ln, "expected `runs: N` or `n: c1 ... cn`"))?;
        let key = key.trim();
        if key == "runs" {
            if header.is_some() {
                return Err(parse_err(ln, "repeated `runs:` header"));
            }
            let runs: usize =
                rest.trim().parse().map_err(|_| parse_err(ln, format!("bad run size `{}`", rest.trim())))?;
            let r = run_exponent(runs).map_err(|e| parse_err(ln, e.to_string()))?;
            header = Some((runs, r));
            continue;
        }
        let (_, r) = header.ok_or_else(|| parse_err(ln, "entry before the `runs:` header"))?;
        let n: usize = key.parse().map_err(|_| parse_err(ln, format!("bad factor count `{key}`")))?;
        let labels = rest
            .split_whitespace()
            .map(|t| t.parse::<Label>().map_err(|_| parse_err(ln, format!("bad label `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if labels.len() != n {
            return Err(parse_err(ln, format!("expected {n} labels, found {}", labels.len())));
        }
        let spec = RegularSpec::new(r, labels).map_err(|e| parse_err(ln, e.to_string()))?;
        let mut key: Vec<Label> = spec.columns().to_vec();
        key.sort_unstable();
        if !seen.insert(key) {
            return Err(parse_err(ln, "duplicate entry"));
        }
        entries.push(spec);
    }
    let (runs, r) = header.ok_or_else(|| parse_err(1, "missing `runs:` header"))?;
    Ok(CatalogFile { runs, r, entries })
}

pub fn read_catalog(path: &Path) -> Result<CatalogFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_catalog(&text)
}

pub fn format_catalog(catalog: &CatalogFile) -> String {
    let mut out = format!("runs: {}\n", catalog.runs);
    for e in &catalog.entries {
        let cols: Vec<String> = e.columns().iter().map(u32::to_string).collect();
        writeln!(out, "{}: {}", e.factors(), cols.join(" ")).expect("string write");
    }
    out
}

/// The 32-run catalog shipped with the crate (all classes for `6 <= n <= 12`).
pub fn builtin_catalog32() -> CatalogFile {
    parse_catalog(include_str!("../data/catalog32.txt")).expect("bundled catalog is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureStatus {
    Verified,
    Advisory,
}

/// One printed row of a results table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub n: usize,
    /// Labels exactly as printed; the first four carry the roles.
    pub labels: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
    pub status: FixtureStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureTable {
    pub runs: usize,
    pub rows: Vec<FixtureRow>,
}

impl FixtureTable {
    pub fn row(&self, n: usize) -> Option<&FixtureRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn spec(&self, row: &FixtureRow) -> Result<RegularSpec> {
        RegularSpec::with_runs(self.runs, row.labels.clone())
    }
}

#[derive(Deserialize)]
struct FixtureFile {
    tables: Vec<FixtureTable>,
}

/// The published 16- and 32-run tables.
pub fn fixtures() -> Vec<FixtureTable> {
    let file: FixtureFile =
        serde_json::from_str(include_str!("../data/fixtures.json")).expect("bundled fixtures parse");
    file.tables
}

pub fn fixture_table(runs: usize) -> Option<FixtureTable> {
    fixtures().into_iter().find(|t| t.runs == runs)
}

/// Inverse of the GF(2) matrix whose columns are `basis` (full rank, length `r`);
/// entry `j` is the image of unit vector `1 << j`.
fn inverse_images(basis: &[Label]) -> Vec<Label> {
    let r = basis.len();
    // rows of [B | I] as (row bits of B, row bits of I)
    let mut rows: Vec<(Label, Label)> = (0..r)
        .map(|i| {
            let b = basis.iter().enumerate().fold(0, |acc, (j, &c)| acc | ((c >> i) & 1) << j);
            (b, 1 << i)
        })
        .collect();
    for col in 0..r {
        let pivot = (col..r).find(|&i| rows[i].0 >> col & 1 == 1).expect("basis has full rank");
        rows.swap(col, pivot);
        let p = rows[col];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != col && row.0 >> col & 1 == 1 {
                row.0 ^= p.0;
                row.1 ^= p.1;
            }
        }
    }
    // rows now hold B^-1 row by row; image of unit j is column j of B^-1
    (0..r).map(|j| rows.iter().enumerate().fold(0, |acc, (i, row)| acc | ((row.1 >> j) & 1) << i)).collect()
}

#[inline]
fn apply(images: &[Label], x: Label) -> Label {
    let mut out = 0;
    let mut bits = x;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        out ^= images[j];
        bits &= bits - 1;
    }
    out
}

/// Ordered tuples of `r` linearly independent entries of `pool`.
fn for_each_basis(pool: &[Label], r: usize, f: &mut impl FnMut(&[Label])) {
    fn go(pool: &[Label], r: usize, chosen: &mut Vec<Label>, span: &mut Vec<bool>, f: &mut impl FnMut(&[Label])) {
        if chosen.len() == r {
            f(chosen);
            return;
        }
        for &c in pool {
            if span[c as usize] {
                continue;
            }
            let added: Vec<usize> = (0..span.len()).filter(|&x| span[x]).map(|x| x ^ c as usize).collect();
            for &x in &added {
                span[x] = true;
            }
            chosen.push(c);
            go(pool, r, chosen, span, f);
            chosen.pop();
            for &x in &added {
                span[x] = false;
            }
        }
    }
    let size = pool.iter().copied().max().unwrap_or(0).next_power_of_two() as usize * 2;
    let mut span = vec![false; size.max(2)];
    span[0] = true;
    go(pool, r, &mut Vec::with_capacity(r), &mut span, f);
}

/// Isomorphism-invariant form of a column set: the lexicographically least
/// sorted image of the columns under an invertible linear map sending some
/// ordered basis drawn from the columns to the unit vectors.
pub fn canonical_form(spec: &RegularSpec) -> Vec<Label> {
    let cols = spec.columns();
    let mut best: Option<Vec<Label>> = None;
    let mut image = Vec::with_capacity(cols.len());
    for_each_basis(cols, spec.r() as usize, &mut |basis| {
        let inv = inverse_images(basis);
        image.clear();
        image.extend(cols.iter().map(|&c| apply(&inv, c)));
        image.sort_unstable();
        if best.as_ref().is_none_or(|b| image < *b) {
            best = Some(image.clone());
        }
    });
    best.expect("spec has full rank")
}

/// Form invariant under linear maps that carry the role columns to the role
/// columns of the other design, up to the swap of the two pairs: the least
/// sorted tail image over all such maps onto roles `(1, 2, 4, 8)`.
pub fn role_canonical_form(spec: &RegularSpec) -> Vec<Label> {
    let r = spec.r() as usize;
    let [b1, b2, b3, b4] = spec.roles();
    let tail = spec.traditional();
    let outside: Vec<Label> = (1..1u32 << r).collect();
    let mut best: Option<Vec<Label>> = None;
    for roles in [[b1, b2, b3, b4], [b3, b4, b1, b2]] {
        let mut image = Vec::with_capacity(tail.len());
        for_each_completion(&roles, &outside, r, &mut |basis| {
            let inv = inverse_images(basis);
            image.clear();
            image.extend(tail.iter().map(|&c| apply(&inv, c)));
            image.sort_unstable();
            if best.as_ref().is_none_or(|b| image < *b) {
                best = Some(image.clone());
            }
        });
    }
    best.expect("roles are independent")
}

/// Ordered bases that start with `head` and continue with vectors from `pool`.
fn for_each_completion(head: &[Label], pool: &[Label], r: usize, f: &mut impl FnMut(&[Label])) {
    fn span_of(vs: &[Label]) -> BTreeSet<Label> {
        let mut s = BTreeSet::from([0]);
        for &v in vs {
            let extra: Vec<Label> = s.iter().map(|x| x ^ v).collect();
            s.extend(extra);
        }
        s
    }
    fn go(chosen: &mut Vec<Label>, pool: &[Label], r: usize, f: &mut impl FnMut(&[Label])) {
        if chosen.len() == r {
            f(chosen);
            return;
        }
        let span = span_of(chosen);
        for &c in pool {
            if !span.contains(&c) {
                chosen.push(c);
                go(chosen, pool, r, f);
                chosen.pop();
            }
        }
    }
    let mut chosen = head.to_vec();
    go(&mut chosen, pool, r, f);
}

/// One canonical representative per isomorphism class of full-rank column
/// sets, for every size `r + 1 ..= max_n`, grown one label at a time.
pub fn isomorphism_classes(r: u32, max_n: usize) -> Vec<(usize, Vec<Vec<Label>>)> {
    use rayon::prelude::*;
    let mut level: BTreeSet<Vec<Label>> = BTreeSet::from([(0..r).map(|i| 1 << i).collect()]);
    let mut out = Vec::new();
    for n in r as usize + 1..=max_n {
        let parents: Vec<Vec<Label>> = level.into_iter().collect();
        level = parents
            .par_iter()
            .flat_map_iter(|p| {
                (1..1u32 << r).filter(|x| !p.contains(x)).map(move |x| {
                    let mut cols = p.clone();
                    cols.push(x);
                    canonical_form(&RegularSpec::new(r, cols).expect("extension keeps full rank"))
                })
            })
            .collect();
        out.push((n, level.iter().cloned().collect()));
    }
    out
}
