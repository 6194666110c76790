//! Conditional-effect parametrization and the prior-induced effect hierarchy.
//!
//! Effect and treatment vectors of length `2^n` are indexed lexicographically
//! by their binary label `j1 j2 ... jn`, with `j1` the most significant bit.
//! The conditional effects `beta` use the same indexing by label; the stacked
//! row order of `W` is only an intermediate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` for which the full `2^n x 2^n` prior covariance is materialized.
pub const MAX_MATERIALIZED_N: usize = 12;
/// Largest `n` for which the prior diagonal is produced.
pub const MAX_DIAGONAL_N: usize = 20;

/// Gaussian prior `cov(tau) = sigma2 * R^{(x)n}` with `R = [[1, rho], [rho, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    sigma2: f64,
    rho: f64,
}

impl PriorSpec {
    pub fn new(sigma2: f64, rho: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidPrior(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidPrior(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(Self { sigma2, rho })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, self.rho, self.rho, 1.0])
    }
}

/// Class of a factorial effect: the grand mean or a member of `Omega_sl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EffectClass {
    GrandMean,
    /// `s` counts how many conditional factors (F1, F3) the effect involves;
    /// `l` is its order.
    Class {
        s: u8,
        l: usize,
    },
}

/// Label bit `k` (zero-based factor index) of an `n`-factor effect index.
#[inline]
pub(crate) fn bit(index: usize, n: usize, k: usize) -> usize {
    index >> (n - 1 - k) & 1
}

/// Effect index of a binary `n`-tuple.
pub fn index_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| acc << 1 | usize::from(b & 1))
}

/// Binary `n`-tuple of an effect index.
pub fn bits_of(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| bit(index, n, k) as u8).collect()
}

/// Classifies an effect given by its binary tuple.
pub fn classify_effect(bits: &[u8]) -> EffectClass {
    classify_index(index_of(bits), bits.len())
}

/// Classifies an effect given by its lexicographic index.
pub fn classify_index(index: usize, n: usize) -> EffectClass {
    if index == 0 {
        return EffectClass::GrandMean;
    }
    let j = |k: usize| bit(index, n, k);
    let tail = (4..n).map(j).sum::<usize>();
    match (j(0), j(2)) {
        (0, 0) => EffectClass::Class { s: 0, l: j(1) + j(3) + tail },
        (1, 0) => EffectClass::Class { s: 1, l: 1 + j(3) + tail },
        (0, 1) => EffectClass::Class { s: 1, l: 1 + j(1) + tail },
        _ => EffectClass::Class { s: 2, l: 2 + tail },
    }
}

/// Whether `Omega_sl` is nonempty for `n` factors.
pub fn valid_class(n: usize, s: u8, l: usize) -> bool {
    n >= 4 && s <= 2 && l >= 1.max(usize::from(s)) && l <= n - 2
}

/// `|Omega_sl|`.
pub fn class_size(n: usize, s: u8, l: usize) -> usize {
    if !valid_class(n, s, l) {
        return 0;
    }
    match s {
        0 => binomial(n - 2, l),
        1 => 4 * binomial(n - 3, l - 1),
        _ => 4 * binomial(n - 4, l - 2),
    }
}

/// Members of `Omega_sl` as effect indices, in lexicographic order.
pub fn class_members(n: usize, s: u8, l: usize) -> Vec<usize> {
    (1..1usize << n).filter(|&i| classify_index(i, n) == EffectClass::Class { s, l }).collect()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn h2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])
}

fn h_row(j: usize) -> DMatrix<f64> {
    let sign = if j == 0 { 1.0 } else { -1.0 };
    DMatrix::from_row_slice(1, 2, &[1.0, sign])
}

fn kron_all(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    factors.iter().skip(1).fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// The 16 x 16 matrix acting on the four role factors, rows stacked in four blocks
/// for `(j1, j3) = (0,0), (1,0), (0,1), (1,1)`.
pub fn build_w() -> DMatrix<f64> {
    let s2i = DMatrix::<f64>::identity(2, 2) * std::f64::consts::SQRT_2;
    let blocks = [
        kron_all(&[h_row(0), h2(), h_row(0), h2()]),
        kron_all(&[h_row(1), s2i.clone(), h_row(0), h2()]),
        kron_all(&[h_row(0), h2(), h_row(1), s2i.clone()]),
        kron_all(&[h_row(1), s2i.clone(), h_row(1), s2i]),
    ];
    let mut w = DMatrix::zeros(16, 16);
    for (b, block) in blocks.iter().enumerate() {
        w.rows_mut(4 * b, 4).copy_from(block);
    }
    w
}

/// Four-bit label `j1 j2 j3 j4` carried by row `k` of [`build_w`].
pub fn w_row_label(k: usize) -> usize {
    let (block, a, b) = (k / 4, (k >> 1) & 1, k & 1);
    let (j1, j3) = [(0, 0), (1, 0), (0, 1), (1, 1)][block];
    j1 << 3 | a << 2 | j3 << 1 | b
}

/// In-place Walsh-Hadamard butterflies over the lowest `bits` index bits.
fn hadamard_low_bits(x: &mut [f64], bits: usize) {
    for t in 0..bits {
        let half = 1usize << t;
        for start in (0..x.len()).step_by(2 * half) {
            for i in start..start + half {
                let (a, b) = (x[i], x[i + half]);
                x[i] = a + b;
                x[i + half] = a - b;
            }
        }
    }
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::TooFewFactors { n, min: 4 });
    }
    if v.len() != 1 << n {
        return Err(Error::LengthMismatch { found: v.len(), expected: 1 << n });
    }
    Ok(())
}

/// `tau = H^{(x)n} theta`.
pub fn theta_to_tau(theta: &[f64]) -> Vec<f64> {
    let mut tau = theta.to_vec();
    hadamard_low_bits(&mut tau, theta.len().trailing_zeros() as usize);
    tau
}

/// `theta = 2^{-n} H^{(x)n} tau`.
pub fn tau_to_theta(tau: &[f64]) -> Vec<f64> {
    let scale = 1.0 / tau.len() as f64;
    theta_to_tau(tau).into_iter().map(|v| v * scale).collect()
}

/// `beta = nu^{-1} (W (x) H^{(x)(n-4)}) tau`, applied factor by factor.
pub fn tau_to_beta(tau: &[f64], n: usize) -> Result<Vec<f64>> {
    check_len(tau, n)?;
    let inner = 1usize << (n - 4);
    let mut x = tau.to_vec();
    hadamard_low_bits(&mut x, n - 4);
    let w = build_w();
    let nu = (1usize << n) as f64;
    let mut beta = vec![0.0; x.len()];
    for k in 0..16 {
        let dest = w_row_label(k) * inner;
        for c in 0..16 {
            let wkc = w[(k, c)];
            if wkc == 0.0 {
                continue;
            }
            for t in 0..inner {
                beta[dest + t] += wkc * x[c * inner + t];
            }
        }
    }
    beta.iter_mut().for_each(|b| *b /= nu);
    Ok(beta)
}

#[inline]
fn delta(j: usize) -> f64 {
    1.0 - 2.0 * j as f64
}

/// Traditional effects from conditional effects, coordinate by coordinate.
pub fn beta_to_theta(beta: &[f64], n: usize) -> Result<Vec<f64>> {
    check_len(beta, n)?;
    let shift = n - 4;
    let inner = 1usize << shift;
    let at = |head: usize, rest: usize| beta[head << shift | rest];
    let mut theta = vec![0.0; beta.len()];
    for (i, out) in theta.iter_mut().enumerate() {
        let (head, rest) = (i >> shift, i & (inner - 1));
        let (j1, j2, j3, j4) = (head >> 3 & 1, head >> 2 & 1, head >> 1 & 1, head & 1);
        *out = match (j1, j3) {
            (0, 0) => at(head, rest),
            (1, 0) => {
                let base = 0b1000 | j4;
                (at(base, rest) + delta(j2) * at(base | 0b0100, rest)) / std::f64::consts::SQRT_2
            }
            (0, 1) => {
                let base = j2 << 2 | 0b0010;
                (at(base, rest) + delta(j4) * at(base | 1, rest)) / std::f64::consts::SQRT_2
            }
            _ => {
                0.5 * (at(0b1010, rest)
                    + delta(j4) * at(0b1011, rest)
                    + delta(j2) * at(0b1110, rest)
                    + delta(j2) * delta(j4) * at(0b1111, rest))
            }
        };
    }
    Ok(theta)
}

/// Full prior covariance of `beta` in label order, assembled as
/// `sigma2 nu^{-2} (W R^{(x)4} W^T) (x) (H R H)^{(x)(n-4)}`.
pub fn prior_cov_beta(n: usize, prior: &PriorSpec) -> Result<DMatrix<f64>> {
    if n < 4 {
        return Err(Error::TooFewFactors { n, min: 4 });
    }
    if n > MAX_MATERIALIZED_N {
        return Err(Error::TooLarge { n, dim: 1 << n, limit: MAX_MATERIALIZED_N });
    }
    let w = build_w();
    let r = prior.r_matrix();
    let r4 = kron_all(&[r.clone(), r.clone(), r.clone(), r.clone()]);
    let head = &w * r4 * w.transpose();
    // reorder the 16 head rows from W's stacking into label order
    let mut head_lex = DMatrix::zeros(16, 16);
    for a in 0..16 {
        for b in 0..16 {
            head_lex[(w_row_label(a), w_row_label(b))] = head[(a, b)];
        }
    }
    let hrh = h2() * &r * h2();
    let mut cov = head_lex;
    for _ in 4..n {
        cov = cov.kronecker(&hrh);
    }
    let nu = (1usize << n) as f64;
    Ok(cov * (prior.sigma2 / (nu * nu)))
}

/// Diagonal of [`prior_cov_beta`], via the Kronecker product of diagonals.
pub fn prior_var_diagonal(n: usize, prior: &PriorSpec) -> Result<Vec<f64>> {
    if n < 4 {
        return Err(Error::TooFewFactors { n, min: 4 });
    }
    if n > MAX_DIAGONAL_N {
        return Err(Error::TooLarge { n, dim: 1 << n, limit: MAX_DIAGONAL_N });
    }
    let w = build_w();
    let r = prior.r_matrix();
    let r4 = kron_all(&[r.clone(), r.clone(), r.clone(), r]);
    let head = &w * r4 * w.transpose();
    let mut diag = vec![0.0; 16];
    for k in 0..16 {
        diag[w_row_label(k)] = head[(k, k)];
    }
    let rho = prior.rho;
    let hrh_diag = [2.0 * (1.0 + rho), 2.0 * (1.0 - rho)];
    for _ in 4..n {
        diag = diag.iter().flat_map(|&d| hrh_diag.iter().map(move |&h| d * h)).collect();
    }
    let nu = (1usize << n) as f64;
    let scale = prior.sigma2 / (nu * nu);
    Ok(diag.into_iter().map(|d| d * scale).collect())
}

/// Closed-form prior variance `sigma2 nu^{-1} (1+rho)^{n-l-s} (1-rho)^l` of
/// any effect in `Omega_sl`.
pub fn variance_formula(n: usize, s: u8, l: usize, prior: &PriorSpec) -> Result<f64> {
    if !valid_class(n, s, l) {
        return Err(Error::InvalidClass { s, l, n });
    }
    Ok(variance_value(n, s, l, prior.sigma2, prior.rho))
}

fn variance_value(n: usize, s: u8, l: usize, sigma2: f64, rho: f64) -> f64 {
    let nu = (1usize << n) as f64;
    sigma2 / nu * (1.0 + rho).powi((n - l - s as usize) as i32) * (1.0 - rho).powi(l as i32)
}

/// One step of the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyEntry {
    pub s: u8,
    pub l: usize,
    pub variance: f64,
}

/// Prior variances in effect-hierarchy order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchySequence {
    pub n: usize,
    pub prior: PriorSpec,
    pub entries: Vec<HierarchyEntry>,
}

impl HierarchySequence {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].variance > w[1].variance)
    }

    pub fn labels(&self) -> Vec<(u8, usize)> {
        self.entries.iter().map(|e| (e.s, e.l)).collect()
    }
}

/// `(0,1), (1,1), (0,2), (1,2), (2,2), (0,3), ...` up to `(2, n-2)`.
pub fn hierarchy_order(n: usize) -> Vec<(u8, usize)> {
    (1..=n.saturating_sub(2))
        .flat_map(|l| (0..=2u8).map(move |s| (s, l)))
        .filter(|&(s, l)| valid_class(n, s, l))
        .collect()
}

pub fn hierarchy_sequence(n: usize, prior: &PriorSpec) -> Result<HierarchySequence> {
    if n < 4 {
        return Err(Error::TooFewFactors { n, min: 4 });
    }
    let entries = hierarchy_order(n)
        .into_iter()
        .map(|(s, l)| HierarchyEntry { s, l, variance: variance_value(n, s, l, prior.sigma2, prior.rho) })
        .collect();
    Ok(HierarchySequence { n, prior: *prior, entries })
}
