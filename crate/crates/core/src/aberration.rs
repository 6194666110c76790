//! The aberration criterion: contamination measures `K_sl(h)` of the
//! main-effect estimators by interactions of order `l`.
//!
//! Every value is carried as the exact integer `N^2 K_sl(h)`, i.e. the sum
//! of squared entries of `X_h1^T X_sl`. Two routes are provided:
//!
//! * [`k_direct`] forms the blocks and squares their inner products;
//! * [`FastEvaluator`] sums `q_sl(u, w) q_h1(u, w)` over run pairs, where
//!   `q_sl(u, w)` is the `(u, w)` entry of `X_sl X_sl^T`, obtained from the
//!   agreement count of the two runs on the traditional factors and the
//!   polynomials `Q_l(c)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::{expand, DesignMatrix, RegularSpec};
use crate::error::{Error, Result};
use crate::model::{build_x_block, dot};

/// `(s, h)` pairs in the order they appear for each interaction order `l`.
pub const SH_ORDER: [(u8, u8); 6] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)];

/// One position of the K-sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KEntry {
    pub s: u8,
    pub l: usize,
    pub h: u8,
}

impl fmt::Display for KEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K{}{}({})", self.s, self.l, self.h)
    }
}

/// `K02(0), K02(1), K12(0), K12(1), K22(0), K22(1), K03(0), ...`, `l` up to `n - 2`.
pub fn entry_order(n: usize) -> Vec<KEntry> {
    (2..=n.saturating_sub(2)).flat_map(|l| SH_ORDER.iter().map(move |&(s, h)| KEntry { s, l, h })).collect()
}

/// The aberration sequence, stored as `N^2 K` integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KSequence {
    pub n: usize,
    pub runs: usize,
    pub values: Vec<u64>,
}

impl KSequence {
    pub fn zeros(n: usize, runs: usize) -> Self {
        Self { n, runs, values: vec![0; entry_order(n).len()] }
    }

    pub fn order(&self) -> Vec<KEntry> {
        entry_order(self.n)
    }

    /// Values divided by `N^2`, when every value is a multiple of `N^2`
    /// (always true for regular designs).
    pub fn alias_counts(&self) -> Option<Vec<u64>> {
        let n2 = (self.runs * self.runs) as u64;
        self.values.iter().map(|&v| (v % n2 == 0).then_some(v / n2)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }
}

impl fmt::Display for KSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts = self.alias_counts();
        let cells: Vec<String> = match counts {
            Some(c) => c.iter().map(u64::to_string).collect(),
            None => {
                let n2 = (self.runs * self.runs) as f64;
                self.values.iter().map(|&v| format!("{}", v as f64 / n2)).collect()
            }
        };
        write!(f, "{{{}}}", cells.join(","))
    }
}

/// Lexicographic comparison of two K-sequences of the same shape.
pub fn compare_k(a: &KSequence, b: &KSequence) -> Result<Ordering> {
    if a.n != b.n || a.runs != b.runs || a.values.len() != b.values.len() {
        return Err(Error::Incomparable(format!(
            "(N={}, n={}, len={}) vs (N={}, n={}, len={})",
            a.runs,
            a.n,
            a.values.len(),
            b.runs,
            b.n,
            b.values.len()
        )));
    }
    Ok(a.values.cmp(&b.values))
}

fn check_entry(n: usize, s: u8, l: usize, h: u8) -> Result<()> {
    if h > 1 || s > 2 || l < 2 || l + 2 > n {
        return Err(Error::InvalidClass { s, l, n });
    }
    Ok(())
}

/// `N^2 K_sl(h)` as the sum of squared entries of `X_h1^T X_sl`.
pub fn k_direct(design: &DesignMatrix, s: u8, l: usize, h: u8) -> Result<u64> {
    design.require_factors(5)?;
    check_entry(design.factors(), s, l, h)?;
    let xh = build_x_block(design, h, 1)?;
    let xs = build_x_block(design, s, l)?;
    let mut total = 0u64;
    for a in 0..xh.width() {
        for b in 0..xs.width() {
            let ip = dot(xh.column(a), xs.column(b));
            total += (ip * ip) as u64;
        }
    }
    Ok(total)
}

pub fn k_sequence_direct(design: &DesignMatrix) -> Result<KSequence> {
    design.require_factors(5)?;
    let n = design.factors();
    let values = entry_order(n).into_iter().map(|e| k_direct(design, e.s, e.l, e.h)).collect::<Result<Vec<_>>>()?;
    Ok(KSequence { n, runs: design.runs(), values })
}

/// `Q_0(c), ..., Q_max_l(c)` for `n` factors by the three-term recursion
/// `l Q_l = (2c - (n-4)) Q_{l-1} - (n-l-2) Q_{l-2}` from `Q_0 = 1`,
/// `Q_1 = 2c - (n-4)`. `None` if a division leaves a remainder.
pub fn q_column(c: usize, n: usize, max_l: usize) -> Option<Vec<i64>> {
    let slope = 2 * c as i128 - (n as i128 - 4);
    let mut out = Vec::with_capacity(max_l + 1);
    let (mut prev, mut cur) = (0i128, 1i128);
    out.push(1);
    for k in 1..=max_l as i128 {
        let numer = slope * cur - (n as i128 - k - 2) * prev;
        if numer % k != 0 {
            return None;
        }
        (prev, cur) = (cur, numer / k);
        out.push(i64::try_from(cur).ok()?);
    }
    Some(out)
}

/// `Q_l(c)`; negative `l` gives 0.
pub fn q_polynomial(l: i64, c: usize, n: usize) -> i64 {
    if l < 0 {
        return 0;
    }
    let column = q_column(c, n, l as usize).expect("Q recursion is integral");
    column[l as usize]
}

/// `Q_l(c)` precomputed for `0 <= c <= n-4` and `-2 <= l <= n-2`.
#[derive(Debug, Clone)]
pub struct QTable {
    n: usize,
    // rows l = -2..=n-2 shifted by 2, columns c
    rows: Vec<Vec<i64>>,
}

impl QTable {
    pub fn new(n: usize) -> Self {
        let m = n.saturating_sub(4);
        let rows = (-2..=n as i64 - 2).map(|l| (0..=m).map(|c| q_polynomial(l, c, n)).collect()).collect();
        Self { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, l: i64, c: usize) -> i64 {
        self.rows[(l + 2) as usize][c]
    }
}

/// Agreement counts `c_uw` of run pairs on the traditional factors `F5..Fn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementCounts {
    pub runs: usize,
    counts: Vec<u32>,
}

impl AgreementCounts {
    #[inline]
    pub fn get(&self, u: usize, w: usize) -> u32 {
        self.counts[u * self.runs + w]
    }
}

pub fn agreement_counts(design: &DesignMatrix) -> Result<AgreementCounts> {
    design.require_factors(5)?;
    let runs = design.runs();
    let mut counts = vec![0; runs * runs];
    for u in 0..runs {
        for w in 0..runs {
            let (a, b) = (&design.row(u)[4..], &design.row(w)[4..]);
            counts[u * runs + w] = a.iter().zip(b).filter(|(x, y)| x == y).count() as u32;
        }
    }
    Ok(AgreementCounts { runs, counts })
}

/// Products `d_uk d_wk` of the four role columns and the agreement count of a run pair.
#[derive(Debug, Clone, Copy)]
struct PairData {
    p: [i64; 4],
    c: usize,
    weight: i64,
}

#[inline]
fn q_from_pair(q: &QTable, pair: &PairData, s: u8, l: usize) -> i64 {
    let [p1, p2, p3, p4] = pair.p;
    let l = l as i64;
    let c = pair.c;
    match s {
        0 => p2 * p4 * q.get(l - 2, c) + (p2 + p4) * q.get(l - 1, c) + q.get(l, c),
        // the partner of the other pair counts towards the residual order
        1 => {
            p1 * (1 + p2) * (q.get(l - 1, c) + p4 * q.get(l - 2, c))
                + p3 * (1 + p4) * (q.get(l - 1, c) + p2 * q.get(l - 2, c))
        }
        _ => p1 * p3 * (1 + p2 + p4 + p2 * p4) * q.get(l - 2, c),
    }
}

fn pair_data(design: &DesignMatrix, u: usize, w: usize, weight: i64) -> PairData {
    let (a, b) = (design.row(u), design.row(w));
    let p = [0, 1, 2, 3].map(|k| i64::from(a[k] * b[k]));
    let c = a[4..].iter().zip(&b[4..]).filter(|(x, y)| x == y).count();
    PairData { p, c, weight }
}

/// `q_sl(u, w)`, the `(u, w)` entry of `X_sl X_sl^T`, computed without forming `X_sl`.
/// Accepts `1 <= l <= n - 2`.
pub fn q_value(design: &DesignMatrix, s: u8, l: usize, u: usize, w: usize) -> Result<i64> {
    design.require_factors(5)?;
    let n = design.factors();
    if s > 2 || l < 1 || l + 2 > n {
        return Err(Error::InvalidClass { s, l, n });
    }
    let q = QTable::new(n);
    Ok(q_from_pair(&q, &pair_data(design, u, w, 1), s, l))
}

/// Evaluates K-sequence entries from run-pair data.
#[derive(Debug, Clone)]
pub struct FastEvaluator<'q> {
    n: usize,
    runs: usize,
    q: std::borrow::Cow<'q, QTable>,
    pairs: Vec<PairData>,
    // q_01 and q_11 for every pair
    h_weights: Vec<[i64; 2]>,
}

impl<'q> FastEvaluator<'q> {
    /// Any two-level design; sums over unordered run pairs.
    pub fn new(design: &DesignMatrix) -> Result<FastEvaluator<'static>> {
        design.require_factors(5)?;
        let q = QTable::new(design.factors());
        let mut ev = FastEvaluator::build(design, std::borrow::Cow::Owned(q), false);
        ev.finish();
        Ok(ev)
    }

    /// Regular designs only: `q(u, w)` depends on `u + w` alone, so the sum
    /// over all pairs is `N` times the sum over pairs `(0, v)`.
    pub fn for_regular(spec: &RegularSpec, q: &'q QTable) -> Result<FastEvaluator<'q>> {
        spec.require_factors(5)?;
        assert_eq!(q.n(), spec.factors(), "Q table built for a different n");
        let design = expand(spec);
        let mut ev = FastEvaluator::build(&design, std::borrow::Cow::Borrowed(q), true);
        ev.finish();
        Ok(ev)
    }

    fn build(design: &DesignMatrix, q: std::borrow::Cow<'q, QTable>, regular: bool) -> Self {
        let runs = design.runs();
        let mut pairs = Vec::new();
        if regular {
            for v in 0..runs {
                pairs.push(pair_data(design, 0, v, runs as i64));
            }
        } else {
            for u in 0..runs {
                pairs.push(pair_data(design, u, u, 1));
                for w in u + 1..runs {
                    pairs.push(pair_data(design, u, w, 2));
                }
            }
        }
        Self { n: design.factors(), runs, q, pairs, h_weights: Vec::new() }
    }

    fn finish(&mut self) {
        let q = &self.q;
        self.h_weights = self.pairs.iter().map(|p| [q_from_pair(q, p, 0, 1), q_from_pair(q, p, 1, 1)]).collect();
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N^2 K_sl(h)`.
    pub fn entry(&self, e: KEntry) -> u64 {
        let total: i64 = self
            .pairs
            .iter()
            .zip(&self.h_weights)
            .map(|(p, hw)| p.weight * q_from_pair(&self.q, p, e.s, e.l) * hw[e.h as usize])
            .sum();
        debug_assert!(total >= 0);
        total as u64
    }

    pub fn sequence(&self) -> KSequence {
        let values = entry_order(self.n).into_iter().map(|e| self.entry(e)).collect();
        KSequence { n: self.n, runs: self.runs, values }
    }

    /// The full sequence unless some prefix proves it lexicographically
    /// greater than `bound`; in that case `None`.
    pub fn sequence_bounded(&self, bound: Option<&KSequence>) -> Option<KSequence> {
        let order = entry_order(self.n);
        let mut values = Vec::with_capacity(order.len());
        let mut tied = bound.is_some();
        for (i, e) in order.into_iter().enumerate() {
            let v = self.entry(e);
            if tied {
                match v.cmp(&bound.expect("tied implies bound").values[i]) {
                    Ordering::Greater => return None,
                    Ordering::Less => tied = false,
                    Ordering::Equal => {}
                }
            }
            values.push(v);
        }
        Some(KSequence { n: self.n, runs: self.runs, values })
    }
}

pub fn k_sequence_fast(design: &DesignMatrix) -> Result<KSequence> {
    Ok(FastEvaluator::new(design)?.sequence())
}
