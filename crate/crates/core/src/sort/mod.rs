//! Sorting drivers.
//!
//! [`sort`] is the hybrid recursive sorter: every call samples its segment,
//! picks an RMI or a splitter tree, block-partitions and recurses on the
//! buckets that are not already known to be sorted.
//! [`learned_sort_classic`] is the two-round single-model variant with a
//! counting-sort base case.

mod base;
mod classic;
mod verify;

use std::sync::Arc;

use rayon::prelude::*;

pub use base::{heapsort, insertion_sort, insertion_sort_counting, radix_base_case_sort, radix_sort_with_threshold};
pub use classic::{learned_sort_classic, model_counting_sort, ClassicStats};
pub use verify::{multiset_fingerprint, verify_sorted, Fingerprint, SortedCheck};

use crate::models::{duplicate_fraction, Classifier, LearnedBuckets, PartitionModel, Rmi, SplitterTree};
use crate::partition::{self, BlockPartitionState, BucketBoundary, DEFAULT_BLOCK_SIZE};
use crate::sample::{self, SampleRng};
use crate::{Error, Key, Result};

/// Tuning knobs of both drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SortConfig {
    /// Output buckets of a learned partitioning step.
    pub rmi_bucket_count: usize,
    /// Buckets of a splitter-tree step (before equality doubling).
    pub tree_bucket_count: usize,
    /// Second-level models of the RMI.
    pub rmi_model_count: usize,
    /// Shorter segments always use the splitter tree.
    pub min_rmi_input: usize,
    /// Samples with more duplicates than this use the splitter tree.
    pub max_duplicate_fraction: f64,
    pub radix_base_case: usize,
    pub insertion_base_case: usize,
    pub block_size: usize,
    pub seed: u64,
    pub workers: usize,
    /// Reuse the parent's RMI for child buckets instead of retraining.
    pub forward_rmi: bool,
}

impl Default for SortConfig {
    fn default() -> Self {
        Self {
            rmi_bucket_count: 1024,
            tree_bucket_count: 256,
            rmi_model_count: 1000,
            min_rmi_input: 100_000,
            max_duplicate_fraction: 0.10,
            radix_base_case: 4096,
            insertion_base_case: 16,
            block_size: DEFAULT_BLOCK_SIZE,
            seed: 0x5EED,
            workers: 1,
            forward_rmi: false,
        }
    }
}

impl SortConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rmi_bucket_count", self.rmi_bucket_count),
            ("tree_bucket_count", self.tree_bucket_count),
        ] {
            if !v.is_power_of_two() || v < 2 {
                return Err(Error::BadConfig(format!("{name} must be a power of two >= 2, got {v}")));
            }
        }
        if self.rmi_model_count == 0
            || self.radix_base_case == 0
            || self.insertion_base_case == 0
            || self.block_size == 0
            || self.workers == 0
        {
            return Err(Error::BadConfig("thresholds and counts must be positive".into()));
        }
        if self.insertion_base_case > self.radix_base_case {
            return Err(Error::BadConfig("insertion_base_case exceeds radix_base_case".into()));
        }
        if !(0.0..=1.0).contains(&self.max_duplicate_fraction) {
            return Err(Error::BadConfig("max_duplicate_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// First sample: about 1% of the segment, between 64 keys and
    /// `2 * tree_bucket_count * 16`.
    pub fn first_sample_size(&self, n: usize) -> usize {
        let cap = 2 * self.tree_bucket_count * 16;
        n.div_ceil(100).clamp(64, cap.max(64)).min(n)
    }

    /// Training sample for the RMI: `min(1% of n, 2^20)`.
    pub fn rmi_sample_size(&self, n: usize) -> usize {
        (n / 100).min(1 << 20).min(n)
    }

    /// Recursion levels before the heapsort fallback.
    pub fn depth_limit(&self, n: usize) -> usize {
        let n = n.max(2) as f64;
        let k = self.tree_bucket_count.max(2) as f64;
        (n.log2() / k.log2()).ceil() as usize + 4
    }

    fn tree_buckets_for(&self, sample_len: usize) -> usize {
        let fit = prev_power_of_two(sample_len / 4).max(2);
        self.tree_bucket_count.min(fit)
    }

    fn rmi_models_for(&self, sample_len: usize) -> usize {
        self.rmi_model_count.min((sample_len / 8).max(1))
    }
}

fn prev_power_of_two(x: usize) -> usize {
    if x == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - x.leading_zeros())
    }
}

/// Chooses the classifier for one partitioning step.
pub trait ModelPolicy: Sync {
    type Model: Classifier + Send;

    fn build(&self, segment: &[Key], cfg: &SortConfig, rng: &mut SampleRng) -> Self::Model;

    /// Model for child `bucket` derived from its parent, if the policy
    /// supports reuse.
    fn forward(&self, _parent: &Self::Model, _bucket: usize, _cfg: &SortConfig) -> Option<Self::Model> {
        None
    }
}

/// RMI for large, mostly distinct segments; splitter tree with equality
/// buckets otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct HybridPolicy;

impl ModelPolicy for HybridPolicy {
    type Model = PartitionModel;

    fn build(&self, segment: &[Key], cfg: &SortConfig, rng: &mut SampleRng) -> PartitionModel {
        build_partition_model_with(segment, cfg, rng)
    }

    fn forward(&self, parent: &PartitionModel, bucket: usize, cfg: &SortConfig) -> Option<PartitionModel> {
        if !cfg.forward_rmi {
            return None;
        }
        match parent {
            PartitionModel::Learned(m) => {
                let (lo, hi) = m.bucket_range(bucket);
                (hi > lo).then(|| PartitionModel::Learned(LearnedBuckets::with_range(Arc::clone(m.rmi()), cfg.rmi_bucket_count, lo, hi)))
            }
            PartitionModel::Tree(_) => None,
        }
    }
}

/// Model selection for a top-level segment, seeded from `cfg.seed`.
pub fn build_partition_model(segment: &[Key], cfg: &SortConfig) -> PartitionModel {
    let mut rng = sample::rng_for(cfg.seed, 0, 0);
    build_partition_model_with(segment, cfg, &mut rng)
}

pub fn build_partition_model_with(segment: &[Key], cfg: &SortConfig, rng: &mut SampleRng) -> PartitionModel {
    let n = segment.len();
    let first = sample::draw_sorted(segment, cfg.first_sample_size(n), rng);
    if n >= cfg.min_rmi_input && duplicate_fraction(&first) <= cfg.max_duplicate_fraction {
        let size = cfg.rmi_sample_size(n).max(first.len());
        let big = sample::draw_sorted(segment, size, rng);
        if let Ok(rmi) = Rmi::train(&big, cfg.rmi_models_for(big.len())) {
            return PartitionModel::Learned(LearnedBuckets::new(Arc::new(rmi), cfg.rmi_bucket_count));
        }
    }
    let k = cfg.tree_buckets_for(first.len());
    let tree = SplitterTree::build(&first, k, true).unwrap_or_else(|_| SplitterTree::from_splitters(&[], &[], false));
    PartitionModel::Tree(tree)
}

/// Sorts `a` ascending with the hybrid policy.
pub fn sort(a: &mut [Key], cfg: &SortConfig) {
    sort_with_policy(a, cfg, &HybridPolicy);
}

/// Sorts `a` with a caller-supplied model policy. Termination and
/// `O(n log n)` worst case hold for any monotone or non-monotone policy.
pub fn sort_with_policy<P: ModelPolicy>(a: &mut [Key], cfg: &SortConfig, policy: &P) {
    if a.len() <= 1 {
        return;
    }
    let driver = Driver {
        cfg,
        policy,
        depth_limit: cfg.depth_limit(a.len()),
        parallel_min: cfg.workers.max(1) << 16,
    };
    if cfg.workers <= 1 {
        let mut state = None;
        driver.seq(a, 0, 0, None, &mut state);
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
            Ok(pool) => pool.install(|| driver.par(a, 0, 0, None)),
            Err(_) => {
                let mut state = None;
                driver.seq(a, 0, 0, None, &mut state);
            }
        }
    }
}

struct Driver<'a, P: ModelPolicy> {
    cfg: &'a SortConfig,
    policy: &'a P,
    depth_limit: usize,
    parallel_min: usize,
}

impl<P: ModelPolicy> Driver<'_, P> {
    /// Handles base cases; returns `true` if the segment is done.
    fn base_case(&self, seg: &mut [Key], depth: usize) -> bool {
        let n = seg.len();
        if n <= self.cfg.insertion_base_case {
            insertion_sort(seg);
        } else if n <= self.cfg.radix_base_case {
            radix_sort_with_threshold(seg, self.cfg.insertion_base_case);
        } else if depth >= self.depth_limit {
            heapsort(seg);
        } else {
            return false;
        }
        true
    }

    fn model(&self, seg: &[Key], offset: usize, depth: usize, forwarded: Option<P::Model>) -> P::Model {
        forwarded.unwrap_or_else(|| {
            let mut rng = sample::rng_for(self.cfg.seed, offset, depth);
            self.policy.build(seg, self.cfg, &mut rng)
        })
    }

    fn seq(&self, seg: &mut [Key], offset: usize, depth: usize, forwarded: Option<P::Model>, state: &mut Option<BlockPartitionState>) {
        if self.base_case(seg, depth) {
            return;
        }
        let was_forwarded = forwarded.is_some();
        let model = self.model(seg, offset, depth, forwarded);
        let k = model.num_buckets();
        let st = state.get_or_insert_with(|| BlockPartitionState::new(k, self.cfg.block_size, 1));
        let bounds = partition::partition(seg, &model, st);
        if was_forwarded && stalled(&bounds, seg.len()) {
            self.seq(seg, offset, depth + 1, None, state);
            return;
        }
        for (i, (part, b)) in split_buckets(seg, &bounds).into_iter().enumerate() {
            if b.already_sorted || part.len() <= 1 {
                continue;
            }
            let child = self.policy.forward(&model, i, self.cfg);
            self.seq(part, offset + b.begin, depth + 1, child, state);
        }
    }

    fn par(&self, seg: &mut [Key], offset: usize, depth: usize, forwarded: Option<P::Model>) {
        if seg.len() < self.parallel_min {
            let mut state = None;
            self.seq(seg, offset, depth, forwarded, &mut state);
            return;
        }
        if self.base_case(seg, depth) {
            return;
        }
        let was_forwarded = forwarded.is_some();
        let model = self.model(seg, offset, depth, forwarded);
        let mut state = BlockPartitionState::new(model.num_buckets(), self.cfg.block_size, self.cfg.workers);
        let bounds = partition::partition(seg, &model, &mut state);
        drop(state);
        if was_forwarded && stalled(&bounds, seg.len()) {
            self.par(seg, offset, depth + 1, None);
            return;
        }
        let inline_below = 2 * self.cfg.radix_base_case;
        let tasks: Vec<_> = split_buckets(seg, &bounds)
            .into_iter()
            .enumerate()
            .filter(|(_, (part, b))| !b.already_sorted && part.len() > 1)
            .map(|(i, (part, b))| (part, offset + b.begin, self.policy.forward(&model, i, self.cfg)))
            .collect();
        tasks.into_par_iter().for_each_init(
            || None,
            |state, (part, off, child)| {
                if part.len() < inline_below || part.len() < self.parallel_min {
                    self.seq(part, off, depth + 1, child, state);
                } else {
                    self.par(part, off, depth + 1, child);
                }
            },
        );
    }
}

fn stalled(bounds: &[BucketBoundary], n: usize) -> bool {
    bounds.iter().any(|b| b.len() == n)
}

fn split_buckets<'s>(seg: &'s mut [Key], bounds: &[BucketBoundary]) -> Vec<(&'s mut [Key], BucketBoundary)> {
    let mut out = Vec::with_capacity(bounds.len());
    let mut rest = seg;
    let mut consumed = 0;
    for b in bounds {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(b.end - consumed);
        out.push((head, *b));
        rest = tail;
        consumed = b.end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, DatasetSpec, GENERATORS};
    use rand::{Rng, SeedableRng};

    fn check(input: &[Key], cfg: &SortConfig) {
        let mut v = input.to_vec();
        sort(&mut v, cfg);
        let mut e = input.to_vec();
        e.sort_unstable();
        assert!(v == e, "output differs from reference (n = {})", input.len());
    }

    #[test]
    fn tiny_inputs() {
        let cfg = SortConfig::default();
        let mut empty: Vec<Key> = vec![];
        sort(&mut empty, &cfg);
        assert!(empty.is_empty());
        let mut one = vec![7];
        sort(&mut one, &cfg);
        assert_eq!(one, [7]);
        check(&[3, 1, 2], &cfg);
    }

    #[test]
    fn every_generator_small() {
        let cfg = SortConfig::default();
        for name in GENERATORS {
            let keys = generate(&DatasetSpec::new(name, 120_000, 3).unwrap()).unwrap();
            check(&keys, &cfg);
        }
    }

    #[test]
    fn adversarial_shapes() {
        let cfg = SortConfig::default();
        let n = 200_000u64;
        let sorted: Vec<Key> = (0..n).collect();
        let reversed: Vec<Key> = (0..n).rev().collect();
        let organ: Vec<Key> = (0..n).map(|i| i.min(n - i)).collect();
        let mut near = vec![5; n as usize];
        near[n as usize / 3] = u64::MAX;
        for v in [sorted, reversed, organ, vec![9; n as usize], near] {
            check(&v, &cfg);
        }
    }

    #[test]
    fn forwarded_rmi_sorts() {
        let cfg = SortConfig {
            forward_rmi: true,
            ..SortConfig::default()
        };
        for name in ["uniform", "lognormal", "zipf", "twodups"] {
            let keys = generate(&DatasetSpec::new(name, 300_000, 5).unwrap()).unwrap();
            check(&keys, &cfg);
        }
    }

    #[test]
    fn parallel_workers_sort() {
        let mut rng = SampleRng::seed_from_u64(2);
        let input: Vec<Key> = (0..600_000).map(|_| rng.random()).collect();
        check(&input, &SortConfig::default().with_workers(4));
        let dups = generate(&DatasetSpec::new("rootdups", 600_000, 2).unwrap()).unwrap();
        check(&dups, &SortConfig::default().with_workers(3));
    }

    #[test]
    fn sequential_deterministic() {
        let input = generate(&DatasetSpec::new("mixgauss", 200_000, 1).unwrap()).unwrap();
        let cfg = SortConfig::default();
        let model_a = build_partition_model(&input, &cfg);
        let model_b = build_partition_model(&input, &cfg);
        let classes = |m: &PartitionModel| input.iter().step_by(101).map(|&x| m.classify(x)).collect::<Vec<_>>();
        assert_eq!(classes(&model_a), classes(&model_b));
    }

    #[test]
    fn policy_routing() {
        let cfg = SortConfig::default();
        let uniform = generate(&DatasetSpec::new("uniform", 1_000_000, 1).unwrap()).unwrap();
        assert!(build_partition_model(&uniform, &cfg).is_learned());
        let roots = generate(&DatasetSpec::new("rootdups", 1_000_000, 1).unwrap()).unwrap();
        assert!(!build_partition_model(&roots, &cfg).is_learned());
        assert!(!build_partition_model(&uniform[..10_000], &cfg).is_learned());
    }

    #[test]
    fn constant_bucket_policy_falls_back() {
        struct Everything;
        struct AllZero;
        impl Classifier for AllZero {
            fn num_buckets(&self) -> usize {
                64
            }
            fn classify(&self, _: Key) -> usize {
                0
            }
        }
        impl ModelPolicy for Everything {
            type Model = AllZero;
            fn build(&self, _: &[Key], _: &SortConfig, _: &mut SampleRng) -> AllZero {
                AllZero
            }
        }
        let mut rng = SampleRng::seed_from_u64(3);
        let input: Vec<Key> = (0..100_000).map(|_| rng.random()).collect();
        let mut v = input.clone();
        sort_with_policy(&mut v, &SortConfig::default(), &Everything);
        let mut e = input;
        e.sort_unstable();
        assert_eq!(v, e);
    }

    #[test]
    fn config_rules() {
        let cfg = SortConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.first_sample_size(1_000_000), 8192);
        assert_eq!(cfg.first_sample_size(5000), 64);
        assert_eq!(cfg.rmi_sample_size(1_000_000), 10_000);
        assert_eq!(cfg.rmi_sample_size(1 << 30), 1 << 20);
        assert_eq!(cfg.depth_limit(1 << 24), 7);
        assert!(SortConfig {
            tree_bucket_count: 100,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(SortConfig {
            insertion_base_case: 5000,
            ..cfg
        }
        .validate()
        .is_err());
    }
}
