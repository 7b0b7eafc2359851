//! Branchless k-way splitter tree with optional equality buckets.

use super::{Classifier, BATCH};
use crate::{Error, Key, Result};

/// `k - 1` sorted splitters stored as an implicit binary heap so that
/// classification is `log2(k)` data-dependent index updates with no
/// branches.
///
/// Leaf `j` receives keys with `splitter[j - 1] < x <= splitter[j]`; keys
/// above the last splitter go to the top leaf, leaving padding leaves empty. In
/// equality mode every leaf splits into two buckets, `2j` and `2j + 1`; the
/// odd one holds keys equal to a heavy splitter and is empty for leaves
/// whose splitter is not heavy.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitterTree {
    /// Heap order, root at index 1; index 0 unused.
    tree: Vec<Key>,
    /// Sorted splitters padded to `leaves` entries; the last is a sentinel.
    sorted: Vec<Key>,
    heavy: Vec<bool>,
    log_leaves: u32,
    equality: bool,
}

impl SplitterTree {
    /// Picks `k - 1` equally spaced order statistics of the sample,
    /// collapses duplicates and, when `equality_buckets` is set, gives every
    /// splitter that occupies more than `1/k` of the sample its own bucket.
    ///
    /// The tree shrinks to the next power of two above the number of
    /// distinct splitters.
    pub fn build(sorted_sample: &[Key], k: usize, equality_buckets: bool) -> Result<Self> {
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::BadBucketCount(k));
        }
        if sorted_sample.is_empty() {
            return Err(Error::SampleTooSmall { len: 0 });
        }
        let m = sorted_sample.len();
        let mut splitters: Vec<Key> = (1..k).map(|i| sorted_sample[(i * m / k).saturating_sub(1)]).collect();
        splitters.dedup();

        let heavy: Vec<bool> = splitters
            .iter()
            .map(|&s| {
                let lo = sorted_sample.partition_point(|&x| x < s);
                let hi = sorted_sample.partition_point(|&x| x <= s);
                (hi - lo) * k > m
            })
            .collect();
        let equality = equality_buckets && heavy.iter().any(|&h| h);
        Ok(Self::from_splitters(&splitters, &heavy, equality))
    }

    /// Builds from strictly increasing splitters; `heavy[i]` flags splitter
    /// `i` for an equality bucket (ignored unless `equality`).
    pub fn from_splitters(splitters: &[Key], heavy: &[bool], equality: bool) -> Self {
        assert!(!splitters.is_empty());
        assert_eq!(splitters.len(), heavy.len());
        debug_assert!(splitters.windows(2).all(|w| w[0] < w[1]));
        let leaves = (splitters.len() + 1).next_power_of_two();
        let last = *splitters.last().unwrap();

        let mut sorted = splitters.to_vec();
        sorted.resize(leaves - 1, last);
        let mut tree = vec![0; leaves];
        fill_heap(&mut tree, 1, &sorted);
        sorted.push(Key::MAX);

        let mut flags = heavy.to_vec();
        flags.resize(leaves, false);
        Self {
            tree,
            sorted,
            heavy: flags,
            log_leaves: leaves.trailing_zeros(),
            equality,
        }
    }

    pub fn leaves(&self) -> usize {
        1 << self.log_leaves
    }

    pub fn equality_mode(&self) -> bool {
        self.equality
    }

    /// Distinct splitters in ascending order.
    pub fn splitters(&self) -> Vec<Key> {
        let mut s = self.sorted[..self.leaves() - 1].to_vec();
        s.dedup();
        s
    }

    /// Whether `bucket` only ever receives copies of a single key.
    pub fn is_equality_bucket(&self, bucket: usize) -> bool {
        self.equality && bucket % 2 == 1 && self.heavy[bucket / 2]
    }

    #[inline(always)]
    fn leaf(&self, x: Key) -> usize {
        let mut i = 1;
        for _ in 0..self.log_leaves {
            i = 2 * i + usize::from(x > self.tree[i]);
        }
        i - self.leaves()
    }

    #[inline(always)]
    fn finish(&self, leaf: usize, x: Key) -> usize {
        if self.equality {
            2 * leaf + usize::from(self.heavy[leaf] & (x == self.sorted[leaf]))
        } else {
            leaf
        }
    }
}

impl Classifier for SplitterTree {
    fn num_buckets(&self) -> usize {
        self.leaves() << usize::from(self.equality)
    }

    #[inline]
    fn classify(&self, x: Key) -> usize {
        self.finish(self.leaf(x), x)
    }

    #[inline]
    fn classify_batch(&self, keys: &[Key], out: &mut [usize]) {
        debug_assert!(keys.len() <= BATCH && out.len() >= keys.len());
        let mut idx = [1usize; BATCH];
        let n = keys.len();
        // Level-major order keeps several independent descents in flight.
        for _ in 0..self.log_leaves {
            for j in 0..n {
                idx[j] = 2 * idx[j] + usize::from(keys[j] > self.tree[idx[j]]);
            }
        }
        let leaves = self.leaves();
        for j in 0..n {
            out[j] = self.finish(idx[j] - leaves, keys[j]);
        }
    }
}

fn fill_heap(tree: &mut [Key], node: usize, sorted: &[Key]) {
    if sorted.is_empty() {
        return;
    }
    let mid = sorted.len() / 2;
    tree[node] = sorted[mid];
    fill_heap(tree, 2 * node, &sorted[..mid]);
    fill_heap(tree, 2 * node + 1, &sorted[mid + 1..]);
}
