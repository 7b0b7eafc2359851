//! CDF models and bucket classifiers.

mod linear;
mod rmi;
mod tree;

use std::sync::Arc;

pub use linear::LinearModel;
pub use rmi::{Rmi, SubModel};
pub use tree::SplitterTree;

use crate::{Key, Result};

/// Keys classified per batch in the partitioning hot loop.
pub const BATCH: usize = 32;

/// Maps a key to one of `num_buckets()` buckets. Implementations must be
/// monotone: `x <= y` implies `classify(x) <= classify(y)`.
pub trait Classifier: Sync {
    fn num_buckets(&self) -> usize;

    fn classify(&self, key: Key) -> usize;

    /// Classifies up to [`BATCH`] keys.
    #[inline]
    fn classify_batch(&self, keys: &[Key], out: &mut [usize]) {
        for (o, &k) in out.iter_mut().zip(keys) {
            *o = self.classify(k);
        }
    }

    /// Buckets known to hold a single distinct value by construction.
    fn is_equality_bucket(&self, _bucket: usize) -> bool {
        false
    }
}

/// Anything that estimates `P(A <= x)`.
pub trait CdfModel {
    fn cdf(&self, x: Key) -> f64;
}

impl CdfModel for Rmi {
    #[inline]
    fn cdf(&self, x: Key) -> f64 {
        self.predict(x)
    }
}

impl<M: CdfModel + ?Sized> CdfModel for &M {
    #[inline]
    fn cdf(&self, x: Key) -> f64 {
        (**self).cdf(x)
    }
}

/// `floor(B * F(x))` over a slice `[lo, hi)` of the model's CDF range.
///
/// The full range `[0, 1)` is the ordinary first-level bucketing; narrower
/// ranges re-split a bucket with the same model.
#[derive(Debug, Clone)]
pub struct LearnedBuckets {
    rmi: Arc<Rmi>,
    buckets: usize,
    lo: f64,
    hi: f64,
    scale: f64,
}

impl LearnedBuckets {
    pub fn new(rmi: Arc<Rmi>, buckets: usize) -> Self {
        Self::with_range(rmi, buckets, 0.0, 1.0)
    }

    pub fn with_range(rmi: Arc<Rmi>, buckets: usize, lo: f64, hi: f64) -> Self {
        assert!(buckets >= 1);
        assert!(lo < hi);
        Self {
            rmi,
            buckets,
            lo,
            hi,
            scale: buckets as f64 / (hi - lo),
        }
    }

    pub fn rmi(&self) -> &Arc<Rmi> {
        &self.rmi
    }

    pub fn cdf_range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// CDF sub-range covered by `bucket`.
    pub fn bucket_range(&self, bucket: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.buckets as f64;
        (self.lo + w * bucket as f64, self.lo + w * (bucket + 1) as f64)
    }
}

impl Classifier for LearnedBuckets {
    fn num_buckets(&self) -> usize {
        self.buckets
    }

    #[inline]
    fn classify(&self, key: Key) -> usize {
        // `as` saturates: estimates below `lo` land in bucket 0.
        (((self.rmi.predict(key) - self.lo) * self.scale) as usize).min(self.buckets - 1)
    }
}

/// The per-call model chosen by the hybrid policy.
#[derive(Debug, Clone)]
pub enum PartitionModel {
    Learned(LearnedBuckets),
    Tree(SplitterTree),
}

impl PartitionModel {
    pub fn is_learned(&self) -> bool {
        matches!(self, Self::Learned(_))
    }
}

impl Classifier for PartitionModel {
    fn num_buckets(&self) -> usize {
        match self {
            Self::Learned(m) => m.num_buckets(),
            Self::Tree(t) => t.num_buckets(),
        }
    }

    #[inline]
    fn classify(&self, key: Key) -> usize {
        match self {
            Self::Learned(m) => m.classify(key),
            Self::Tree(t) => t.classify(key),
        }
    }

    #[inline]
    fn classify_batch(&self, keys: &[Key], out: &mut [usize]) {
        match self {
            Self::Learned(m) => m.classify_batch(keys, out),
            Self::Tree(t) => t.classify_batch(keys, out),
        }
    }

    fn is_equality_bucket(&self, bucket: usize) -> bool {
        match self {
            Self::Learned(_) => false,
            Self::Tree(t) => t.is_equality_bucket(bucket),
        }
    }
}

/// Bucket of `x` under `model`.
pub fn bucket_index(model: &impl Classifier, x: Key) -> usize {
    model.classify(x)
}

pub fn train_rmi(sorted_sample: &[Key], model_count: usize) -> Result<Rmi> {
    Rmi::train(sorted_sample, model_count)
}

pub fn build_splitter_tree(sorted_sample: &[Key], k: usize, equality_buckets: bool) -> Result<SplitterTree> {
    SplitterTree::build(sorted_sample, k, equality_buckets)
}

/// `1 - distinct / len` of a sorted sample; 0 for an empty one.
pub fn duplicate_fraction(sorted_sample: &[Key]) -> f64 {
    if sorted_sample.is_empty() {
        return 0.0;
    }
    let distinct = 1 + sorted_sample.windows(2).filter(|w| w[0] != w[1]).count();
    1.0 - distinct as f64 / sorted_sample.len() as f64
}
