//! Learned-pivot Quicksort variants, implicit pivot extraction and pivot
//! quality scoring.
//!
//! These follow the analysed algorithms closely and are meant for
//! experiments, not speed.

use std::fmt;

use crate::models::{CdfModel, Rmi};
use crate::sample::{self, SampleRng};
use crate::sort::insertion_sort;
use crate::{Error, Key, Result};

/// Segments of at most this many keys are insertion sorted.
pub const DEFAULT_BASE_CASE: usize = 16;

const DEFAULT_SEED: u64 = 0xC1A5;

/// Receives element-operation counts from the instrumented sorts.
pub trait OpCounter {
    fn add(&mut self, ops: u64);
}

impl OpCounter for () {
    #[inline(always)]
    fn add(&mut self, _: u64) {}
}

/// Running total of element operations.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCount(pub u64);

impl OpCounter for OpCount {
    #[inline(always)]
    fn add(&mut self, ops: u64) {
        self.0 += ops;
    }
}

/// `min(max(100, n / 100), 10_000)`, capped at `n`.
pub fn training_sample_size(n: usize) -> usize {
    (n / 100).clamp(100, 10_000).min(n)
}

/// Trains a monotone RMI on a seeded sample of `segment`.
pub fn train_segment_model(segment: &[Key], rng: &mut SampleRng) -> Option<Rmi> {
    let s = sample::draw_sorted(segment, training_sample_size(segment.len()), rng);
    Rmi::train(&s, (s.len() / 32).clamp(1, 256)).ok()
}

fn all_equal(seg: &[Key]) -> bool {
    seg.split_first().is_none_or(|(f, rest)| rest.iter().all(|x| x == f))
}

/// Lomuto partition around the value at `pivot_index`. Returns the final
/// pivot position; keys left of it are `<=` the pivot, keys right are `>`.
fn lomuto(seg: &mut [Key], pivot_index: usize) -> usize {
    let last = seg.len() - 1;
    seg.swap(pivot_index, last);
    let p = seg[last];
    let mut i = 0;
    for j in 0..last {
        if seg[j] <= p {
            seg.swap(i, j);
            i += 1;
        }
    }
    seg.swap(i, last);
    i
}

/// Selects the largest key with `F(x) <= 1/2` and partitions around it.
/// Falls back to the middle element when no key qualifies, and returns a
/// middle split without moving anything when all keys are equal.
pub fn partition_with_model<M: CdfModel + ?Sized>(seg: &mut [Key], model: &M) -> usize {
    assert!(seg.len() >= 2, "partition needs at least two keys");
    if all_equal(seg) {
        return seg.len() / 2;
    }
    let mut best: Option<(usize, Key)> = None;
    for (i, &x) in seg.iter().enumerate() {
        if model.cdf(x) <= 0.5 && best.is_none_or(|(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    let pivot_index = best.map_or(seg.len() / 2, |(i, _)| i);
    lomuto(seg, pivot_index)
}

/// Trains a model on a sample of `seg` and partitions with it.
pub fn partition_learned_pivot(seg: &mut [Key], rng: &mut SampleRng) -> usize {
    match train_segment_model(seg, rng) {
        Some(model) => partition_with_model(seg, &model),
        None => partition_with_model(seg, &FnCdf(|_: Key| 1.0)),
    }
}

/// Adapts a closure to [`CdfModel`].
pub struct FnCdf<F>(pub F);

impl<F: Fn(Key) -> f64> CdfModel for FnCdf<F> {
    #[inline]
    fn cdf(&self, x: Key) -> f64 {
        (self.0)(x)
    }
}

/// Quicksort whose pivot is chosen by a CDF model trained per call.
pub fn quicksort_learned_pivot(a: &mut [Key], base_case_size: usize) {
    quicksort_learned_pivot_seeded(a, base_case_size, DEFAULT_SEED);
}

pub fn quicksort_learned_pivot_seeded(a: &mut [Key], base_case_size: usize, seed: u64) {
    let mut rng = SampleRng::new_seeded(seed);
    qlp(a, base_case_size.max(1), &mut rng);
}

fn qlp(mut seg: &mut [Key], base: usize, rng: &mut SampleRng) {
    loop {
        if seg.len() <= base {
            insertion_sort(seg);
            return;
        }
        if all_equal(seg) {
            return;
        }
        let split = partition_learned_pivot(seg, rng);
        let (left, rest) = std::mem::take(&mut seg).split_at_mut(split);
        let right = &mut rest[1..];
        // Recurse into the smaller side, loop on the larger.
        if left.len() < right.len() {
            qlp(left, base, rng);
            seg = right;
        } else {
            qlp(right, base, rng);
            seg = left;
        }
    }
}

/// Two-index sweep that moves keys with `F(x) <= 1/2` to the front.
/// Returns the length of that front part.
fn sweep<M: CdfModel + ?Sized, C: OpCounter>(seg: &mut [Key], model: &M, ops: &mut C) -> usize {
    let mut i = 0;
    let mut j = seg.len();
    let mut touched = 0u64;
    loop {
        while i < j && model.cdf(seg[i]) <= 0.5 {
            i += 1;
            touched += 1;
        }
        while i < j && model.cdf(seg[j - 1]) > 0.5 {
            j -= 1;
            touched += 1;
        }
        if i >= j {
            break;
        }
        seg.swap(i, j - 1);
        touched += 2;
        i += 1;
        j -= 1;
    }
    ops.add(touched);
    i
}

/// Three-way partition around the median of first, middle and last key.
/// Returns `(lt, gt)`: `[..lt]` is `< p`, `[lt..gt]` is `== p`.
fn three_way<C: OpCounter>(seg: &mut [Key], ops: &mut C) -> (usize, usize) {
    let n = seg.len();
    let (a, b, c) = (seg[0], seg[n / 2], seg[n - 1]);
    let p = a.max(b).min(a.min(b).max(c));
    let (mut lt, mut i, mut gt) = (0, 0, n);
    while i < gt {
        if seg[i] < p {
            seg.swap(lt, i);
            lt += 1;
            i += 1;
        } else if seg[i] > p {
            gt -= 1;
            seg.swap(i, gt);
        } else {
            i += 1;
        }
    }
    ops.add(n as u64);
    (lt, gt)
}

/// Quicksort that partitions by the predicate `F(x) <= 1/2` directly.
pub fn learned_quicksort(a: &mut [Key], base_case_size: usize) {
    learned_quicksort_counted(a, base_case_size, DEFAULT_SEED, &mut ());
}

/// [`learned_quicksort`] with an explicit seed and an operation counter.
pub fn learned_quicksort_counted<C: OpCounter>(a: &mut [Key], base_case_size: usize, seed: u64, ops: &mut C) {
    let mut rng = SampleRng::new_seeded(seed);
    lq(a, base_case_size.max(1), &mut rng, ops);
}

fn lq<C: OpCounter>(seg: &mut [Key], base: usize, rng: &mut SampleRng, ops: &mut C) {
    let n = seg.len();
    if n <= base {
        ops.add(n as u64 + crate::sort::insertion_sort_counting(seg));
        return;
    }
    ops.add(training_sample_size(n) as u64);
    let split = match train_segment_model(seg, rng) {
        Some(model) => sweep(seg, &model, ops),
        None => 0,
    };
    if split == 0 || split == n {
        let (lt, gt) = three_way(seg, ops);
        let (left, rest) = seg.split_at_mut(lt);
        lq(left, base, rng, ops);
        lq(&mut rest[gt - lt..], base, rng, ops);
        return;
    }
    let (left, right) = seg.split_at_mut(split);
    lq(left, base, rng, ops);
    lq(right, base, rng, ops);
}

/// Largest key per CDF cell `floor(F(x) * b)` for cells `0..b-1`; `None`
/// for cells no key maps to.
pub fn learned_pivot_cells<M: CdfModel + ?Sized>(a: &[Key], model: &M, b: usize) -> Vec<Option<Key>> {
    let mut cells = vec![None; b.saturating_sub(1)];
    if cells.is_empty() {
        return cells;
    }
    let bf = b as f64;
    for &x in a {
        let g = (model.cdf(x) * bf) as usize;
        if let Some(c) = cells.get_mut(g) {
            if c.is_none_or(|m| x > m) {
                *c = Some(x);
            }
        }
    }
    cells
}

/// Implicit sample-sort pivots of a CDF model: at most `b - 1` strictly
/// increasing keys of `a`.
pub fn learned_pivots_for_samplesort<M: CdfModel + ?Sized>(a: &[Key], model: &M, b: usize) -> Vec<Key> {
    let mut p: Vec<Key> = learned_pivot_cells(a, model, b).into_iter().flatten().collect();
    p.sort_unstable();
    p.dedup();
    p
}

/// Oversampled random pivots: `step * b - 1` random keys with
/// `step = max(1, floor(0.2 * log2 n))`, sorted, then every `step`-th.
pub fn random_pivots(a: &[Key], b: usize, rng: &mut SampleRng) -> Vec<Key> {
    if b < 2 || a.is_empty() {
        return Vec::new();
    }
    let step = ((0.2 * (a.len() as f64).log2()).floor() as usize).max(1);
    let mut s: Vec<Key> = (0..step * b - 1).map(|_| a[rand::Rng::random_range(rng, 0..a.len())]).collect();
    s.sort_unstable();
    (1..b).map(|i| s[i * step - 1]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotMethod {
    Random,
    Learned,
}

impl fmt::Display for PivotMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Learned => "learned",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotQualityReport {
    pub method: PivotMethod,
    pub pivot_count: usize,
    /// `sum_i |P(A <= p_i) - (i + 1) / b|`.
    pub distance: f64,
    /// Set for single-pivot runs.
    pub eta: Option<f64>,
    /// `false` when fewer than `b - 1` pivots were available.
    pub complete: bool,
}

fn rank_fraction(a_sorted: &[Key], x: Key) -> f64 {
    a_sorted.partition_point(|&y| y <= x) as f64 / a_sorted.len() as f64
}

/// Scores `b - 1` sorted pivots against the sorted data.
pub fn pivot_quality(a_sorted: &[Key], pivots: &[Key], b: usize, method: PivotMethod) -> Result<PivotQualityReport> {
    if pivots.len() + 1 != b {
        return Err(Error::PivotCountMismatch {
            buckets: b,
            expected: b.saturating_sub(1),
            got: pivots.len(),
        });
    }
    let distance = pivots
        .iter()
        .enumerate()
        .map(|(i, &p)| (rank_fraction(a_sorted, p) - (i + 1) as f64 / b as f64).abs())
        .sum();
    Ok(PivotQualityReport {
        method,
        pivot_count: pivots.len(),
        distance,
        eta: (b == 2).then(|| eta(a_sorted, pivots[0])),
        complete: true,
    })
}

/// `max(P, 1 - P) - 1/2` with `P = P(A <= pivot)`.
pub fn eta(a_sorted: &[Key], pivot: Key) -> f64 {
    assert!(!a_sorted.is_empty());
    let p = rank_fraction(a_sorted, pivot);
    p.max(1.0 - p) - 0.5
}

/// Scores cells of [`learned_pivot_cells`] against their own target
/// percentile; empty cells are skipped and mark the report incomplete.
pub fn learned_cells_quality(a_sorted: &[Key], cells: &[Option<Key>], b: usize) -> PivotQualityReport {
    let mut distance = 0.0;
    let mut count = 0;
    for (i, c) in cells.iter().enumerate() {
        if let Some(p) = c {
            distance += (rank_fraction(a_sorted, *p) - (i + 1) as f64 / b as f64).abs();
            count += 1;
        }
    }
    PivotQualityReport {
        method: PivotMethod::Learned,
        pivot_count: count,
        distance,
        eta: None,
        complete: count + 1 == b,
    }
}

/// One trial of the random-versus-learned pivot comparison on sorted data.
/// The RMI is trained on a 1% sample with up to 1000 second-level models.
pub fn pivot_quality_trial(a_sorted: &[Key], pivots: usize, rng: &mut SampleRng) -> Result<(PivotQualityReport, PivotQualityReport)> {
    let b = pivots + 1;
    let random = pivot_quality(a_sorted, &random_pivots(a_sorted, b, rng), b, PivotMethod::Random)?;
    let s = sample::draw_sorted(a_sorted, a_sorted.len().div_ceil(100).max(2), rng);
    let rmi = Rmi::train(&s, (s.len() / 8).clamp(1, 1000))?;
    let learned = learned_cells_quality(a_sorted, &learned_pivot_cells(a_sorted, &rmi, b), b);
    Ok((random, learned))
}

trait NewSeeded {
    fn new_seeded(seed: u64) -> Self;
}

impl NewSeeded for SampleRng {
    fn new_seeded(seed: u64) -> Self {
        rand::SeedableRng::seed_from_u64(seed)
    }
}
