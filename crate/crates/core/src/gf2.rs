//! Linear algebra over GF(2) on column labels.
//!
//! A label is an `r`-bit vector stored in the low bits of a `u32`; bit `i`
//! is the coefficient of basic factor `i`, so the basic factors of a 16-run
//! design are `1, 2, 4, 8`. Field addition is XOR.

use std::collections::HashMap;

/// Largest supported run-size exponent.
pub const MAX_R: u32 = 16;

/// A GF(2) column label. Zero is the null vector and never a valid label.
pub type Label = u32;

/// Pool sizes above this switch `subset_sum_count` to meet-in-the-middle.
const PLAIN_ENUMERATION_LIMIT: usize = 20;

/// Field addition.
#[inline]
pub const fn vec_add(a: Label, b: Label) -> Label {
    a ^ b
}

/// GF(2) inner product of two bit vectors.
#[inline]
pub const fn inner(a: u32, b: u32) -> u32 {
    (a & b).count_ones() & 1
}

/// Rank of a list of labels, by elimination on leading bits.
pub fn rank(labels: &[Label]) -> usize {
    let mut basis = [0u32; 32];
    let mut rank = 0;
    for &v in labels {
        let mut x = v;
        while x != 0 {
            let top = 31 - x.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = x;
                rank += 1;
                break;
            }
            x ^= basis[top];
        }
    }
    rank
}

/// True when the labels are linearly independent.
pub fn independent(labels: &[Label]) -> bool {
    rank(labels) == labels.len()
}

/// XOR of all labels in the slice.
pub fn xor_sum(labels: &[Label]) -> Label {
    labels.iter().fold(0, |acc, &x| acc ^ x)
}

/// Number of `l`-element subsets of `pool` whose sum lies in `targets`.
///
/// `l < 0` counts nothing and `l == 0` counts the empty subset exactly when
/// `0` is a target. Pool elements are assumed distinct.
pub fn subset_sum_count(pool: &[Label], l: i64, targets: &[Label]) -> u64 {
    if l < 0 || l as usize > pool.len() {
        return 0;
    }
    let l = l as usize;
    if l == 0 {
        return u64::from(targets.contains(&0));
    }
    if pool.len() > PLAIN_ENUMERATION_LIMIT {
        return meet_in_the_middle(pool, l, targets);
    }
    let mut count = 0;
    enumerate(pool, l, 0, &mut |sum| {
        if targets.contains(&sum) {
            count += 1;
        }
    });
    count
}

fn enumerate(pool: &[Label], l: usize, acc: Label, visit: &mut impl FnMut(Label)) {
    if l == 0 {
        visit(acc);
        return;
    }
    // need at least l elements left
    for i in 0..=pool.len() - l {
        enumerate(&pool[i + 1..], l - 1, acc ^ pool[i], visit);
    }
}

/// Histogram of subset sums for every subset of `half`, keyed by size.
fn half_sums(half: &[Label], max_size: usize) -> Vec<HashMap<Label, u64>> {
    let mut by_size = vec![HashMap::new(); max_size.min(half.len()) + 1];
    for mask in 0u64..(1u64 << half.len()) {
        let size = mask.count_ones() as usize;
        if size > max_size {
            continue;
        }
        let sum = half.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0, |acc, (_, &x)| acc ^ x);
        *by_size[size].entry(sum).or_insert(0) += 1;
    }
    by_size
}

fn meet_in_the_middle(pool: &[Label], l: usize, targets: &[Label]) -> u64 {
    let (left, right) = pool.split_at(pool.len() / 2);
    let left_sums = half_sums(left, l);
    let right_sums = half_sums(right, l);
    let mut count = 0;
    for (i, left_hist) in left_sums.iter().enumerate() {
        let Some(right_hist) = right_sums.get(l - i) else {
            continue;
        };
        for (&s, &n_left) in left_hist {
            for &t in targets {
                if let Some(&n_right) = right_hist.get(&(s ^ t)) {
                    count += n_left * n_right;
                }
            }
        }
    }
    count
}
