//! Minimum aberration search over regular designs.
//!
//! Candidates are streamed in a fixed order, cut into fixed-size chunks and
//! evaluated in parallel. Each chunk starts from the incumbent known when its
//! batch began, so every count reported in [`SearchResult`] is independent of
//! the number of workers.

use std::cmp::Ordering;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aberration::{compare_k, FastEvaluator, KSequence, QTable};
use crate::catalog::{role_canonical_form, CatalogFile};
use crate::counts::wordlength_pattern;
use crate::design::{check_conditions_regular, run_exponent, RegularSpec};
use crate::error::{Error, Result};
use crate::gf2::Label;

const BATCH: usize = 8192;
const CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Roles fixed to the first four basic columns; all admissible tails.
    Exhaustive,
    /// All role assignments of every catalog design.
    Catalog,
}

#[derive(Debug, Clone)]
pub struct SearchTask {
    pub runs: usize,
    pub factors: usize,
    pub mode: SearchMode,
    pub catalog: Option<CatalogFile>,
    /// Evaluate only one of each pair-swapped candidate.
    pub symmetry_pruning: bool,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Allows exhaustive mode beyond 16 runs.
    pub allow_large: bool,
}

impl SearchTask {
    pub fn exhaustive(runs: usize, factors: usize) -> Self {
        Self {
            runs,
            factors,
            mode: SearchMode::Exhaustive,
            catalog: None,
            symmetry_pruning: true,
            workers: 0,
            allow_large: false,
        }
    }

    pub fn with_catalog(catalog: CatalogFile, factors: usize) -> Self {
        Self {
            runs: catalog.runs,
            factors,
            mode: SearchMode::Catalog,
            catalog: Some(catalog),
            symmetry_pruning: true,
            workers: 0,
            allow_large: false,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn symmetry_pruning(mut self, on: bool) -> Self {
        self.symmetry_pruning = on;
        self
    }

    pub fn allow_large(mut self, on: bool) -> Self {
        self.allow_large = on;
        self
    }

    fn validate(&self) -> Result<u32> {
        let r = run_exponent(self.runs)?;
        if r < 4 {
            return Err(Error::Infeasible(format!("{} runs cannot hold four independent roles", self.runs)));
        }
        if self.factors < 5 {
            return Err(Error::TooFewFactors { n: self.factors, min: 5 });
        }
        if self.factors >= 1 << r {
            return Err(Error::Infeasible(format!(
                "{} factors exceed the {} distinct nonzero labels of {} runs",
                self.factors,
                (1usize << r) - 1,
                self.runs
            )));
        }
        match self.mode {
            SearchMode::Exhaustive if self.runs != 16 && !self.allow_large => Err(Error::Infeasible(format!(
                "exhaustive mode is limited to 16 runs without the large-search override (got {})",
                self.runs
            ))),
            SearchMode::Catalog => match &self.catalog {
                None => Err(Error::Infeasible("catalog mode needs a catalog".into())),
                Some(c) if c.runs != self.runs => {
                    Err(Error::Infeasible(format!("catalog has {} runs, task has {}", c.runs, self.runs)))
                }
                Some(_) => Ok(r),
            },
            _ => Ok(r),
        }
    }
}

/// Outcome of a search. Equality ignores `wall_seconds`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub runs: usize,
    pub factors: usize,
    pub mode: SearchMode,
    pub best_k: KSequence,
    /// All K-minimal candidates in canonical order.
    pub minimizers: Vec<RegularSpec>,
    /// Minimizers that remain distinct under role-preserving relabelling and pair swap.
    pub distinct_classes: usize,
    /// Candidates streamed, before any filtering.
    pub candidates_examined: u64,
    /// Candidates rejected by rank, conditions (i)-(iv) or the pair-swap filter.
    pub pruned: u64,
    /// Evaluations abandoned once a K prefix exceeded the incumbent.
    pub short_circuited: u64,
    pub wall_seconds: f64,
}

impl PartialEq for SearchResult {
    fn eq(&self, other: &Self) -> bool {
        self.runs == other.runs
            && self.factors == other.factors
            && self.mode == other.mode
            && self.best_k == other.best_k
            && self.minimizers == other.minimizers
            && self.distinct_classes == other.distinct_classes
            && self.candidates_examined == other.candidates_examined
            && self.pruned == other.pruned
            && self.short_circuited == other.short_circuited
    }
}

/// The image of a label under the swap of bits 0<->2 and 1<->3.
fn swap_pair_bits(x: Label) -> Label {
    let low = x & 0b1111;
    let swapped = (low & 0b0011) << 2 | (low & 0b1100) >> 2;
    (x & !0b1111) | swapped
}

fn sorted(mut v: Vec<Label>) -> Vec<Label> {
    v.sort_unstable();
    v
}

/// Raw candidate stream, before rank and condition filtering.
pub fn enumerate_candidates(task: &SearchTask) -> Result<Box<dyn Iterator<Item = Vec<Label>> + '_>> {
    let r = task.validate()?;
    let n = task.factors;
    match task.mode {
        SearchMode::Exhaustive => {
            let roles: [Label; 4] = [1, 2, 4, 8];
            let pool: Vec<Label> = (1..1u32 << r).filter(|x| !roles.contains(x)).collect();
            if n - 4 > pool.len() {
                return Err(Error::Infeasible(format!("{n} factors do not fit in {} runs", task.runs)));
            }
            Ok(Box::new(
                pool.into_iter().combinations(n - 4).map(move |tail| roles.iter().copied().chain(tail).collect()),
            ))
        }
        SearchMode::Catalog => {
            let catalog = task.catalog.as_ref().expect("validated");
            Ok(Box::new(catalog.with_factors(n).flat_map(move |entry| {
                let cols = entry.columns().to_vec();
                (0..n).permutations(4).map(move |roles| {
                    let mut out: Vec<Label> = roles.iter().map(|&i| cols[i]).collect();
                    out.extend((0..n).filter(|i| !roles.contains(i)).map(|i| cols[i]));
                    out
                })
            })))
        }
    }
}

/// Whether `cols` is the representative of its pair-swap orbit.
fn is_swap_representative(mode: SearchMode, cols: &[Label]) -> bool {
    match mode {
        SearchMode::Exhaustive => {
            let tail = sorted(cols[4..].to_vec());
            let image = sorted(cols[4..].iter().map(|&x| swap_pair_bits(x)).collect());
            tail <= image
        }
        // the two orbit members share their catalog design; roles (b1,b2) vs (b3,b4)
        SearchMode::Catalog => [cols[0], cols[1]] <= [cols[2], cols[3]],
    }
}

/// The pair-swapped partner of a candidate, written in the stream's own form.
fn swap_partner(mode: SearchMode, cols: &[Label]) -> Vec<Label> {
    match mode {
        SearchMode::Exhaustive => {
            cols[..4].iter().copied().chain(cols[4..].iter().map(|&x| swap_pair_bits(x))).collect()
        }
        SearchMode::Catalog => {
            [cols[2], cols[3], cols[0], cols[1]].into_iter().chain(cols[4..].iter().copied()).collect()
        }
    }
}

#[derive(Default)]
struct ChunkOutcome {
    best: Option<KSequence>,
    minimizers: Vec<RegularSpec>,
    pruned: u64,
    short_circuited: u64,
}

fn merge(into: &mut ChunkOutcome, other: ChunkOutcome) {
    into.pruned += other.pruned;
    into.short_circuited += other.short_circuited;
    let Some(k) = other.best else { return };
    match into.best.as_ref().map(|b| k.values.cmp(&b.values)) {
        None | Some(Ordering::Less) => {
            into.best = Some(k);
            into.minimizers = other.minimizers;
        }
        Some(Ordering::Equal) => into.minimizers.extend(other.minimizers),
        Some(Ordering::Greater) => {}
    }
}

fn run_chunk(task: &SearchTask, r: u32, q: &QTable, chunk: &[Vec<Label>], start: Option<&KSequence>) -> ChunkOutcome {
    let mut out = ChunkOutcome { best: start.cloned(), ..Default::default() };
    let mut improved = false;
    for cols in chunk {
        let Ok(spec) = RegularSpec::new(r, cols.clone()) else {
            out.pruned += 1;
            continue;
        };
        if task.symmetry_pruning && !is_swap_representative(task.mode, cols) {
            out.pruned += 1;
            continue;
        }
        if !check_conditions_regular(&spec).map(|c| c.passed()).unwrap_or(false) {
            out.pruned += 1;
            continue;
        }
        let ev = FastEvaluator::for_regular(&spec, q).expect("spec has at least five factors");
        let Some(k) = ev.sequence_bounded(out.best.as_ref()) else {
            out.short_circuited += 1;
            continue;
        };
        match out.best.as_ref().map(|b| k.values.cmp(&b.values)) {
            None | Some(Ordering::Less) => {
                out.best = Some(k);
                out.minimizers = vec![spec];
                improved = true;
            }
            Some(Ordering::Equal) => {
                // ties with the inherited incumbent are still minimizers
                out.minimizers.push(spec);
                improved = true;
            }
            Some(Ordering::Greater) => unreachable!("bounded evaluation returned a larger sequence"),
        }
    }
    if !improved {
        out.best = None;
    }
    out
}

/// Rewrites every spec with its traditional columns ascending; sorts and deduplicates.
pub fn canonicalize(minimizers: Vec<RegularSpec>) -> Vec<RegularSpec> {
    let mut keyed: Vec<(Vec<Label>, RegularSpec)> = minimizers
        .into_iter()
        .map(|s| {
            let mut cols = s.columns().to_vec();
            cols[4..].sort_unstable();
            let spec = RegularSpec::new(s.r(), cols.clone()).expect("reordering keeps validity");
            (cols, spec)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    keyed.into_iter().map(|(_, s)| s).collect()
}

fn search_inner(task: &SearchTask, r: u32) -> Result<SearchResult> {
    let clock = Instant::now();
    let q = QTable::new(task.factors);
    let mut stream = enumerate_candidates(task)?;
    let mut total = ChunkOutcome::default();
    let mut examined = 0u64;
    loop {
        let batch: Vec<Vec<Label>> = stream.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        examined += batch.len() as u64;
        let start = total.best.clone();
        let outcomes: Vec<ChunkOutcome> =
            batch.par_chunks(CHUNK).map(|chunk| run_chunk(task, r, &q, chunk, start.as_ref())).collect();
        for o in outcomes {
            merge(&mut total, o);
        }
    }
    let best_k = total.best.ok_or(Error::NoAdmissibleDesign { runs: task.runs, factors: task.factors })?;
    let mut minimizers = total.minimizers;
    if task.symmetry_pruning {
        let partners: Vec<RegularSpec> = minimizers
            .iter()
            .map(|s| RegularSpec::new(r, swap_partner(task.mode, s.columns())).expect("partner is valid"))
            .collect();
        minimizers.extend(partners);
    }
    let minimizers = canonicalize(minimizers);
    let distinct_classes = minimizers.iter().map(role_canonical_form).unique().count();
    Ok(SearchResult {
        runs: task.runs,
        factors: task.factors,
        mode: task.mode,
        best_k,
        minimizers,
        distinct_classes,
        candidates_examined: examined,
        pruned: total.pruned,
        short_circuited: total.short_circuited,
        wall_seconds: clock.elapsed().as_secs_f64(),
    })
}

/// All K-minimal candidates of the task.
pub fn search_ma(task: &SearchTask) -> Result<SearchResult> {
    let r = task.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(task.workers)
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| search_inner(task, r))
}

/// Least wordlength pattern over all regular designs with `runs` runs and
/// `n` factors, and every column set attaining it (labels ascending).
pub fn traditional_minimum(runs: usize, n: usize) -> Result<(Vec<u64>, Vec<Vec<Label>>)> {
    let r = run_exponent(runs)?;
    let mut best: Option<Vec<u64>> = None;
    let mut sets = Vec::new();
    for cols in (1..1u32 << r).combinations(n) {
        let Ok(spec) = RegularSpec::new(r, cols.clone()) else { continue };
        let w = wordlength_pattern(&spec);
        match best.as_ref().map(|b| w.cmp(b)) {
            None | Some(Ordering::Less) => {
                best = Some(w);
                sets = vec![cols];
            }
            Some(Ordering::Equal) => sets.push(cols),
            Some(Ordering::Greater) => {}
        }
    }
    let best = best.ok_or(Error::NoAdmissibleDesign { runs, factors: n })?;
    Ok((best, sets))
}

/// Lexicographic comparison of K-sequences that panics on shape mismatch.
pub fn k_order(a: &KSequence, b: &KSequence) -> Ordering {
    compare_k(a, b).expect("K-sequences of one search share their shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aberration::k_sequence_fast;
    use crate::design::expand;

    fn k_of(r: u32, cols: &[Label]) -> KSequence {
        k_sequence_fast(&expand(&RegularSpec::new(r, cols.to_vec()).unwrap())).unwrap()
    }

    #[test]
    fn exhaustive_candidate_counts() {
        assert_eq!(enumerate_candidates(&SearchTask::exhaustive(16, 5)).unwrap().count(), 11);
        assert_eq!(enumerate_candidates(&SearchTask::exhaustive(16, 12)).unwrap().count(), 165);
    }

    #[test]
    fn catalog_candidate_count() {
        let catalog = crate::catalog::parse_catalog("runs: 16\n6: 1 2 4 8 7 11\n").unwrap();
        let task = SearchTask::with_catalog(catalog, 6);
        assert_eq!(enumerate_candidates(&task).unwrap().count(), 360);
    }

    #[test]
    fn infeasible_tasks() {
        assert!(matches!(search_ma(&SearchTask::exhaustive(16, 16)), Err(Error::Infeasible(_))));
        assert!(matches!(search_ma(&SearchTask::exhaustive(32, 6)), Err(Error::Infeasible(_))));
        assert!(matches!(
            search_ma(&SearchTask::exhaustive(16, 14)),
            Err(Error::NoAdmissibleDesign { runs: 16, factors: 14 })
        ));
        assert!(matches!(search_ma(&SearchTask::exhaustive(16, 4)), Err(Error::TooFewFactors { .. })));
    }

    #[test]
    fn n13_has_a_single_admissible_tail() {
        let res = search_ma(&SearchTask::exhaustive(16, 13).symmetry_pruning(false)).unwrap();
        assert_eq!(res.minimizers.len(), 1);
        assert_eq!(res.minimizers[0].traditional(), &[5, 6, 7, 9, 10, 11, 13, 14, 15]);
    }

    #[test]
    fn n5_minimum_includes_the_resolution_v_design() {
        let res = search_ma(&SearchTask::exhaustive(16, 5)).unwrap();
        assert_eq!(res.best_k, k_of(4, &[1, 2, 4, 8, 15]));
        // a three-factor word F1F3F5 lies in the same class as F1F2F3F4F5
        let tails: Vec<&[Label]> = res.minimizers.iter().map(|m| m.traditional()).collect();
        assert_eq!(tails, vec![&[5][..], &[7], &[13], &[15]]);
    }

    #[test]
    fn pruning_does_not_change_the_minimizers() {
        for n in [6, 7, 9] {
            let a = search_ma(&SearchTask::exhaustive(16, n)).unwrap();
            let b = search_ma(&SearchTask::exhaustive(16, n).symmetry_pruning(false)).unwrap();
            assert_eq!(a.best_k, b.best_k);
            assert_eq!(a.minimizers, b.minimizers);
            assert!(a.pruned > b.pruned);
        }
    }

    #[test]
    fn swap_bits_is_an_involution() {
        for x in 1..32 {
            assert_eq!(swap_pair_bits(swap_pair_bits(x)), x);
        }
        assert_eq!(swap_pair_bits(1), 4);
        assert_eq!(swap_pair_bits(2), 8);
        assert_eq!(swap_pair_bits(16 | 3), 16 | 12);
    }

    #[test]
    fn canonicalize_sorts_tails_and_dedups() {
        let a = RegularSpec::new(4, vec![1, 2, 4, 8, 11, 7]).unwrap();
        let b = RegularSpec::new(4, vec![1, 2, 4, 8, 7, 11]).unwrap();
        let c = RegularSpec::new(4, vec![1, 2, 4, 8, 15]).unwrap();
        let out = canonicalize(vec![a, c.clone(), b]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].columns(), &[1, 2, 4, 8, 7, 11]);
        assert_eq!(out[1], c);
    }

    #[test]
    fn catalog_and_exhaustive_agree_on_16_runs() {
        let catalog = crate::catalog::parse_catalog(
            "runs: 16\n6: 1 2 4 8 7 11\n6: 1 2 4 8 3 13\n6: 1 2 4 8 15 3\n6: 1 2 4 8 3 5\n6: 1 2 4 8 3 12\n",
        )
        .unwrap();
        let from_catalog = search_ma(&SearchTask::with_catalog(catalog, 6)).unwrap();
        let exhaustive = search_ma(&SearchTask::exhaustive(16, 6)).unwrap();
        assert_eq!(from_catalog.best_k, exhaustive.best_k);
    }

    #[test]
    fn traditional_minimum_small() {
        let (w, sets) = traditional_minimum(16, 5).unwrap();
        assert_eq!(w, vec![1, 0, 0, 0, 0, 1]);
        assert!(sets.contains(&vec![1, 2, 4, 8, 15]));
        assert!(!sets.contains(&vec![1, 2, 4, 7, 8]));
    }
}
