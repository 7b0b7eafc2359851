use std::sync::Arc;

use super::base::insertion_sort_counting;
use super::SortConfig;
use crate::models::{CdfModel, Classifier, LearnedBuckets, Rmi};
use crate::partition::{self, BlockPartitionState};
use crate::sample;
use crate::Key;

/// Counters reported by [`learned_sort_classic`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassicStats {
    pub first_round_buckets: usize,
    pub homogeneous_buckets: usize,
    /// Sub-buckets created in the second round, empty ones included.
    pub second_round_buckets: usize,
    /// Keys that went through the second round.
    pub second_round_keys: usize,
    /// Element shifts of the final insertion sweep.
    pub fixup_shifts: u64,
}

impl ClassicStats {
    /// Mean keys per second-round sub-bucket.
    pub fn mean_occupancy(&self) -> f64 {
        if self.second_round_buckets == 0 {
            0.0
        } else {
            self.second_round_keys as f64 / self.second_round_buckets as f64
        }
    }
}

/// Single-model learned sort: one RMI trained on a 1% sample drives two
/// rounds of bucketing, a model-based counting sort inside each sub-bucket,
/// and a final insertion sweep.
pub fn learned_sort_classic(a: &mut [Key], cfg: &SortConfig) -> ClassicStats {
    let mut stats = ClassicStats::default();
    let n = a.len();
    if n <= 1 {
        return stats;
    }
    let mut rng = sample::rng_for(cfg.seed, 0, 0);
    let size = n.div_ceil(100).max(256.min(n));
    let training = sample::draw_sorted(a, size, &mut rng);
    let rmi = match Rmi::train(&training, cfg.rmi_models_for(training.len())) {
        Ok(r) => Arc::new(r),
        Err(_) => {
            super::radix_sort_with_threshold(a, cfg.insertion_base_case);
            return stats;
        }
    };

    let b = cfg.rmi_bucket_count;
    let outer = LearnedBuckets::new(Arc::clone(&rmi), b);
    let mut state = BlockPartitionState::new(b, cfg.block_size, 1);
    let bounds = partition::partition(a, &outer, &mut state);
    drop(state);
    stats.first_round_buckets = b;

    let mut scratch = Vec::new();
    let mut counts = vec![0usize; b + 1];
    for (i, bound) in bounds.iter().enumerate() {
        if bound.homogeneous {
            stats.homogeneous_buckets += 1;
            continue;
        }
        let (lo, hi) = outer.bucket_range(i);
        let bucket = &mut a[bound.begin..bound.end];
        stats.second_round_buckets += b;
        stats.second_round_keys += bucket.len();
        if hi <= lo {
            continue;
        }
        let inner = LearnedBuckets::with_range(Arc::clone(&rmi), b, lo, hi);
        scatter(bucket, &inner, &mut counts, &mut scratch);
        let mut start = 0;
        for j in 0..b {
            let end = counts[j + 1];
            let sub = &mut bucket[start..end];
            if sub.len() > 1 {
                let (slo, shi) = inner.bucket_range(j);
                counting_sort_into(sub, &*rmi, slo, shi, &mut scratch);
            }
            start = end;
        }
    }

    stats.fixup_shifts = insertion_sort_counting(a);
    stats
}

/// Stable out-of-place distribution of `bucket` by `model`. On return
/// `counts[j]..counts[j + 1]` is the extent of sub-bucket `j`.
fn scatter(bucket: &mut [Key], model: &LearnedBuckets, counts: &mut [usize], scratch: &mut Vec<Key>) {
    let k = model.num_buckets();
    counts[..=k].fill(0);
    for &x in bucket.iter() {
        counts[model.classify(x) + 1] += 1;
    }
    for j in 0..k {
        counts[j + 1] += counts[j];
    }
    scratch.clear();
    scratch.resize(bucket.len(), 0);
    let mut heads = counts[..k].to_vec();
    for &x in bucket.iter() {
        let c = model.classify(x);
        scratch[heads[c]] = x;
        heads[c] += 1;
    }
    bucket.copy_from_slice(scratch);
}

/// Places every key at slot `floor(len * (F(x) - lo) / (hi - lo))` of the
/// segment by a stable counting pass, then orders the keys that share a
/// slot. The result is exactly sorted when `model` is monotone on the
/// segment; otherwise only keys whose estimates cross are out of order.
pub fn model_counting_sort<M: CdfModel + ?Sized>(segment: &mut [Key], model: &M, lo: f64, hi: f64) {
    let mut scratch = Vec::new();
    counting_sort_into(segment, model, lo, hi, &mut scratch);
}

fn counting_sort_into<M: CdfModel + ?Sized>(segment: &mut [Key], model: &M, lo: f64, hi: f64, scratch: &mut Vec<Key>) {
    let len = segment.len();
    if len <= 1 {
        return;
    }
    let scale = if hi > lo { len as f64 / (hi - lo) } else { 0.0 };
    let slot = |x: Key| (((model.cdf(x) - lo) * scale) as usize).min(len - 1);

    let mut counts = vec![0usize; len + 1];
    for &x in segment.iter() {
        counts[slot(x) + 1] += 1;
    }
    for j in 0..len {
        counts[j + 1] += counts[j];
    }
    scratch.clear();
    scratch.resize(len, 0);
    let mut heads = counts.clone();
    for &x in segment.iter() {
        let s = slot(x);
        scratch[heads[s]] = x;
        heads[s] += 1;
    }
    segment.copy_from_slice(scratch);
    for j in 0..len {
        let group = &mut segment[counts[j]..counts[j + 1]];
        if group.len() > 1 {
            super::insertion_sort(group);
        }
    }
}
