//! Word counts of regular designs and their conversion to the K-sequence.
//!
//! Each family `A_l^(x)` counts the `l`-subsets of a pool of design columns
//! whose GF(2) sum falls in a target set built from the role labels
//! `b1..b4`. Counts are stored for `l = 0..=n` and read as zero outside
//! that range.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aberration::{entry_order, KSequence};
use crate::design::RegularSpec;
use crate::error::Result;
use crate::gf2::{subset_sum_count, Label};

/// The count families, in a stable order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    A1,
    A21,
    A22,
    A2,
    A31,
    A32,
    A3,
    A42,
    A43,
    A52,
    A7,
    A8,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::A1,
        Family::A21,
        Family::A22,
        Family::A2,
        Family::A31,
        Family::A32,
        Family::A3,
        Family::A42,
        Family::A43,
        Family::A52,
        Family::A7,
        Family::A8,
    ];
}

/// All `A_l^(x)` families of a regular design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVectors {
    pub n: usize,
    pub families: BTreeMap<Family, Vec<u64>>,
}

impl CountVectors {
    /// `A_l` of a family, zero for `l < 0` or `l > n`.
    pub fn get(&self, family: Family, l: i64) -> u64 {
        if l < 0 {
            return 0;
        }
        self.families[&family].get(l as usize).copied().unwrap_or(0)
    }
}

/// Pools and targets of the primary families, keyed by role labels.
fn pools_and_targets(spec: &RegularSpec) -> Vec<(Family, Vec<Label>, Vec<Label>)> {
    let [b1, b2, b3, b4] = spec.roles();
    let tail = spec.traditional();
    let with = |head: &[Label]| -> Vec<Label> { head.iter().chain(tail).copied().collect() };
    let pool_1 = with(&[b2, b4]);
    let pool_4 = with(&[b4]);
    let pool_2 = with(&[b2]);
    let pool_5 = tail.to_vec();
    let t1 = b1 ^ b3;
    let t2 = b1 ^ b2 ^ b3;
    let t3 = b1 ^ b3 ^ b4;
    let t4 = b1 ^ b2 ^ b3 ^ b4;
    vec![
        (Family::A1, pool_1, vec![0]),
        (Family::A21, pool_4.clone(), vec![b1, b1 ^ b2]),
        (Family::A22, pool_2.clone(), vec![b3, b3 ^ b4]),
        (Family::A31, pool_4, vec![0, b2]),
        (Family::A32, pool_2.clone(), vec![0, b4]),
        (Family::A42, pool_2, vec![t1, t3]),
        (Family::A43, pool_5.clone(), vec![t1, t3]),
        (Family::A52, pool_5.clone(), vec![t2, t4]),
        (Family::A7, pool_5.clone(), vec![t1, t2, t3, t4]),
        (Family::A8, pool_5, vec![b1, b3, b1 ^ b2, b1 ^ b4, b2 ^ b3, b3 ^ b4, b1 ^ b2 ^ b4, b2 ^ b3 ^ b4]),
    ]
}

pub fn a_counts(spec: &RegularSpec) -> Result<CountVectors> {
    spec.require_factors(5)?;
    let n = spec.factors();
    let mut families = BTreeMap::new();
    for (family, pool, targets) in pools_and_targets(spec) {
        let counts = (0..=n as i64).map(|l| subset_sum_count(&pool, l, &targets)).collect();
        families.insert(family, counts);
    }
    let sum = |a: &Vec<u64>, b: &Vec<u64>| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
    let a2 = sum(&families[&Family::A21], &families[&Family::A22]);
    let a3 = sum(&families[&Family::A31], &families[&Family::A32]);
    families.insert(Family::A2, a2);
    families.insert(Family::A3, a3);
    Ok(CountVectors { n, families })
}

/// The K-sequence of a regular design from its word counts.
pub fn k_from_counts(spec: &RegularSpec) -> Result<KSequence> {
    let a = a_counts(spec)?;
    Ok(k_from_count_vectors(&a, spec.runs()))
}

pub fn k_from_count_vectors(a: &CountVectors, runs: usize) -> KSequence {
    use Family::*;
    let n = a.n as i64;
    let n2 = (runs * runs) as u64;
    let values = entry_order(a.n)
        .into_iter()
        .map(|e| {
            let l = e.l as i64;
            let g = |f: Family, k: i64| a.get(f, k);
            let alias = match (e.s, e.h) {
                (0, 0) => (l as u64 + 1) * g(A1, l + 1) + (n - l - 1) as u64 * g(A1, l - 1),
                (0, 1) => g(A2, l - 1) + g(A2, l),
                (1, 0) => (n - l - 1) as u64 * g(A2, l - 2) + g(A2, l - 1) + l as u64 * g(A2, l),
                (1, 1) => 2 * g(A3, l - 1) + 2 * (g(A42, l - 1) + g(A43, l - 2) + g(A52, l - 1)),
                (2, 0) => 2 * g(A7, l - 2) + (n - l - 1) as u64 * g(A7, l - 3) + (l - 1) as u64 * g(A7, l - 1),
                _ => 2 * g(A8, l - 2),
            };
            alias * n2
        })
        .collect();
    KSequence { n: a.n, runs, values }
}

/// Leading terms `A_3^(1), A_2^(2), A_1^(7), A_4^(1), A_3^(2)`.
pub fn a_reduced_sequence(spec: &RegularSpec) -> Result<Vec<u64>> {
    let a = a_counts(spec)?;
    Ok(vec![
        a.get(Family::A1, 3),
        a.get(Family::A2, 2),
        a.get(Family::A7, 1),
        a.get(Family::A1, 4),
        a.get(Family::A2, 3),
    ])
}

/// Number of `i`-subsets of `set` whose sum lies in `sums`.
pub fn h_count(i: i64, sums: &[Label], set: &[Label]) -> u64 {
    subset_sum_count(set, i, sums)
}

/// Complementary-set quantities of a regular design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplementCounts {
    /// `T~`: labels of `Delta_r` outside `{b2, b4, ..., bn}`.
    pub t_tilde: Vec<Label>,
    /// `A_l(T~)` for `l = 0..=4`.
    pub a_tilde: Vec<u64>,
    /// `A_2^(12)(T_12)`.
    pub a12_2: u64,
    /// `A_2^(34)(T_34)`.
    pub a34_2: u64,
    /// Whether `b1+b3`, `b1+b2+b3`, `b1+b3+b4`, `b1+b2+b3+b4` is a traditional column.
    pub b_members: [bool; 4],
    /// `H_1({sum}, T)` for the same four sums, `T = Delta_r \ {b5..bn}`.
    pub h1_terms: [u64; 4],
}

pub fn complement_counts(spec: &RegularSpec) -> Result<ComplementCounts> {
    spec.require_factors(5)?;
    let [b1, b2, b3, b4] = spec.roles();
    let tail = spec.traditional();
    let universe = 1..1u32 << spec.r();
    let t_tilde: Vec<Label> = universe.clone().filter(|x| *x != b2 && *x != b4 && !tail.contains(x)).collect();
    let a_tilde = (0..=4).map(|l| subset_sum_count(&t_tilde, l, &[0])).collect();
    let minus =
        |set: &[Label], drop: [Label; 2]| -> Vec<Label> { set.iter().copied().filter(|x| !drop.contains(x)).collect() };
    let t12 = minus(&t_tilde, [b1, b1 ^ b2]);
    let t34 = minus(&t_tilde, [b3, b3 ^ b4]);
    let a12_2 = h_count(2, &[b1, b1 ^ b2], &t12);
    let a34_2 = h_count(2, &[b3, b3 ^ b4], &t34);
    let t: Vec<Label> = universe.filter(|x| !tail.contains(x)).collect();
    let sums = [b1 ^ b3, b1 ^ b2 ^ b3, b1 ^ b3 ^ b4, b1 ^ b2 ^ b3 ^ b4];
    let b_members = sums.map(|s| tail.contains(&s));
    let h1_terms = sums.map(|s| h_count(1, &[s], &t));
    Ok(ComplementCounts { t_tilde, a_tilde, a12_2, a34_2, b_members, h1_terms })
}

/// Traditional wordlength pattern `A_0..A_n` over all `n` columns.
pub fn wordlength_pattern(spec: &RegularSpec) -> Vec<u64> {
    let cols = spec.columns();
    (0..=cols.len() as i64).map(|k| subset_sum_count(cols, k, &[0])).collect()
}
