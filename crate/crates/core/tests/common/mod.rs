#![allow(dead_code)]

use condma::design::{check_conditions_regular, RegularSpec};
use condma::gf2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random full-rank spec with independent roles; not filtered by the conditions.
pub fn random_spec(rng: &mut ChaCha8Rng, r: u32, n: usize) -> RegularSpec {
    loop {
        let mut labels: Vec<u32> = (1..1u32 << r).collect();
        labels.shuffle(rng);
        let cols: Vec<u32> = labels.into_iter().take(n).collect();
        if gf2::independent(&cols[..4]) && gf2::rank(&cols) == r as usize {
            return RegularSpec::new(r, cols).expect("checked rank");
        }
    }
}

/// Random spec satisfying conditions (i)-(iv).
pub fn random_valid_spec(rng: &mut ChaCha8Rng, r: u32, n: usize) -> RegularSpec {
    loop {
        let s = random_spec(rng, r, n);
        if check_conditions_regular(&s).unwrap().passed() {
            return s;
        }
    }
}

pub fn random_n(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi)
}

/// Independent oracle for the K-sequence of a spec under a given `q_1l` rule:
/// sums `q_sl(0, v) q_h1(0, v)` over runs `v` by direct enumeration of the
/// class members, without the `Q` polynomials.
pub fn k_by_member_enumeration(spec: &RegularSpec) -> Vec<u64> {
    use condma::aberration::entry_order;
    use condma::design::expand;
    use condma::model::x_column;
    use condma::param::class_members;
    let d = expand(spec);
    let n = spec.factors();
    let runs = d.runs();
    let q = |s: u8, l: usize| -> Vec<i64> {
        let mut acc = vec![0i64; runs];
        for label in class_members(n, s, l) {
            let x = x_column(&d, label);
            for v in 0..runs {
                acc[v] += i64::from(x[0] * x[v]);
            }
        }
        acc
    };
    let h: [Vec<i64>; 2] = [q(0, 1), q(1, 1)];
    entry_order(n)
        .into_iter()
        .map(|e| {
            let qs = q(e.s, e.l);
            let total: i64 = (0..runs).map(|v| qs[v] * h[e.h as usize][v]).sum();
            (total * runs as i64) as u64
        })
        .collect()
}

fn binomial(m: usize, k: usize) -> i64 {
    if k > m {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (m - i) as i64 / (i + 1) as i64)
}

/// Sum over `l`-subsets of `m` signs, `c` of them `+1`, of the product of the chosen signs.
pub fn psi(l: i64, c: usize, m: usize) -> i64 {
    if l < 0 {
        return 0;
    }
    let l = l as usize;
    (0..=l).map(|j| if j % 2 == 0 { 1 } else { -1 } * binomial(m - c, j) * binomial(c, l - j)).sum()
}

/// `N^2 K` of a regular spec with `q_1l` taken as `(p1 + p1 p2 + p3 + p3 p4) Psi_{l-1}`,
/// the rule under which the tabulated designs were ranked.
pub fn k_alternate_rule(spec: &RegularSpec) -> Vec<u64> {
    use condma::aberration::entry_order;
    use condma::design::expand;
    let d = expand(spec);
    let n = spec.factors();
    let m = n - 4;
    let runs = d.runs() as i64;
    let pairs: Vec<([i64; 4], usize)> = (0..d.runs())
        .map(|v| {
            let (a, b) = (d.row(0), d.row(v));
            let p = [0, 1, 2, 3].map(|k| i64::from(a[k] * b[k]));
            (p, (4..n).filter(|&k| a[k] == b[k]).count())
        })
        .collect();
    let table: Vec<Vec<i64>> = (-2..=n as i64).map(|l| (0..=m).map(|c| psi(l, c, m)).collect()).collect();
    let psi = |l: i64, c: usize, _m: usize| table[(l + 2) as usize][c];
    let q = |[p1, p2, p3, p4]: [i64; 4], c: usize, s: u8, l: i64| -> i64 {
        match s {
            0 => p2 * p4 * psi(l - 2, c, m) + (p2 + p4) * psi(l - 1, c, m) + psi(l, c, m),
            1 => (p1 + p1 * p2 + p3 + p3 * p4) * psi(l - 1, c, m),
            _ => p1 * p3 * (1 + p2 + p4 + p2 * p4) * psi(l - 2, c, m),
        }
    };
    entry_order(n)
        .into_iter()
        .map(|e| {
            let total: i64 = pairs.iter().map(|&(p, c)| q(p, c, e.s, e.l as i64) * q(p, c, e.h, 1)).sum();
            (total * runs) as u64
        })
        .collect()
}

/// Candidate with roles taken from positions `roles` of `cols`, the rest as tail in order.
pub fn with_roles(cols: &[u32], roles: &[usize]) -> Vec<u32> {
    let mut out: Vec<u32> = roles.iter().map(|&i| cols[i]).collect();
    out.extend((0..cols.len()).filter(|i| !roles.contains(i)).map(|i| cols[i]));
    out
}
