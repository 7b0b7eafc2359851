//! In-place block partitioning into `k` buckets.
//!
//! Three phases, shared by every driver:
//!
//! 1. **Classification.** Each worker streams over its stripe, classifies
//!    keys in batches and appends them to a per-bucket buffer of `b` keys.
//!    A full buffer is flushed back into the stripe over keys that were
//!    already consumed, so the stripe ends up as a prefix of full
//!    single-bucket blocks followed by free space.
//! 2. **Block permutation.** Bucket boundaries follow from the exact counts.
//!    Every bucket owns the block-aligned slots inside its range and keeps a
//!    packed (read, write) cursor pair in one atomic word. Workers pop
//!    unprocessed blocks, classify the head key and chase swap chains until
//!    each block lands in a free slot of its bucket.
//! 3. **Cleanup.** Partial blocks at bucket edges and the leftover buffer
//!    contents are written into the remaining gaps.
//!
//! Auxiliary memory is the buffers (`k * b` keys per worker), two swap
//! blocks per worker, one overflow block, and `O(k)` counters.

use std::ptr;
use std::sync::atomic::{AtomicI64, AtomicUsize, Ordering};

use crate::models::{Classifier, BATCH};
use crate::Key;

/// Keys per block (2 KiB of `u64`).
pub const DEFAULT_BLOCK_SIZE: usize = 256;

/// One worker's per-bucket buffers.
#[derive(Debug)]
pub struct BucketBuffers {
    data: Vec<Key>,
    fill: Vec<usize>,
    counts: Vec<usize>,
    swap: [Vec<Key>; 2],
}

impl BucketBuffers {
    fn new(buckets: usize, block: usize) -> Self {
        Self {
            data: vec![0; buckets * block],
            fill: vec![0; buckets],
            counts: vec![0; buckets],
            swap: [vec![0; block], vec![0; block]],
        }
    }

    fn reset(&mut self, buckets: usize, block: usize) {
        if self.data.len() < buckets * block {
            self.data.resize(buckets * block, 0);
        }
        self.fill.clear();
        self.fill.resize(buckets, 0);
        self.counts.clear();
        self.counts.resize(buckets, 0);
    }

    /// Keys still buffered for `bucket`.
    pub fn tail(&self, bucket: usize, block: usize) -> &[Key] {
        &self.data[bucket * block..bucket * block + self.fill[bucket]]
    }
}

/// Reusable state for one partitioning step.
#[derive(Debug)]
pub struct BlockPartitionState {
    block: usize,
    buckets: usize,
    workers: Vec<BucketBuffers>,
    bucket_sizes: Vec<usize>,
    /// Full blocks after classification form the prefix `[0, full_prefix)`.
    full_prefix: usize,
    overflow: Vec<Key>,
}

/// Final extent of one bucket inside the partitioned segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketBoundary {
    pub begin: usize,
    pub end: usize,
    pub homogeneous: bool,
    pub already_sorted: bool,
}

impl BucketBoundary {
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }
}

impl BlockPartitionState {
    pub fn new(buckets: usize, block: usize, workers: usize) -> Self {
        assert!(buckets >= 1 && block >= 1 && workers >= 1);
        Self {
            block,
            buckets,
            workers: (0..workers).map(|_| BucketBuffers::new(buckets, block)).collect(),
            bucket_sizes: vec![0; buckets],
            full_prefix: 0,
            overflow: vec![0; block],
        }
    }

    /// Prepares for a step with `buckets` buckets, growing buffers if needed.
    pub fn reset(&mut self, buckets: usize) {
        assert!(buckets >= 1);
        self.buckets = buckets;
        for w in &mut self.workers {
            w.reset(buckets, self.block);
        }
        self.bucket_sizes.clear();
        self.bucket_sizes.resize(buckets, 0);
        self.full_prefix = 0;
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets
    }

    pub fn worker_count(&self) -> usize {
        self.workers.len()
    }

    pub fn bucket_sizes(&self) -> &[usize] {
        &self.bucket_sizes
    }

    /// Length of the prefix made of flushed full blocks.
    pub fn flushed_len(&self) -> usize {
        self.full_prefix
    }

    pub fn worker_buffers(&self) -> &[BucketBuffers] {
        &self.workers
    }
}

/// Classifies every key of `segment`, flushing full buffers into the
/// segment. Afterwards `segment[..state.flushed_len()]` consists of full
/// single-bucket blocks, the tails stay in the buffers and
/// `state.bucket_sizes()` holds exact counts.
///
/// Uses all workers of `state`; call from inside a rayon pool of at least
/// that size for real parallelism.
pub fn classify_and_flush<C: Classifier + ?Sized>(segment: &mut [Key], model: &C, state: &mut BlockPartitionState) {
    state.reset(model.num_buckets());
    let block = state.block;
    let workers = state.workers.len();
    let n = segment.len();

    if workers == 1 || n < 2 * workers * block {
        state.full_prefix = classify_stripe(segment, model, &mut state.workers[0], block);
    } else {
        use rayon::prelude::*;
        let stripe = n.div_ceil(workers).div_ceil(block) * block;
        let written: Vec<usize> = segment
            .par_chunks_mut(stripe)
            .zip(state.workers.par_iter_mut())
            .map(|(s, buf)| classify_stripe(s, model, buf, block))
            .collect();
        state.full_prefix = gather_full_blocks(segment, stripe, &written, block);
    }

    for w in &state.workers {
        for (total, c) in state.bucket_sizes.iter_mut().zip(&w.counts) {
            *total += c;
        }
    }
}

fn classify_stripe<C: Classifier + ?Sized>(stripe: &mut [Key], model: &C, buf: &mut BucketBuffers, block: usize) -> usize {
    let n = stripe.len();
    let mut write = 0;
    let mut keys = [0 as Key; BATCH];
    let mut out = [0usize; BATCH];
    let mut i = 0;
    while i < n {
        let m = BATCH.min(n - i);
        keys[..m].copy_from_slice(&stripe[i..i + m]);
        model.classify_batch(&keys[..m], &mut out[..m]);
        for j in 0..m {
            let b = out[j];
            let f = buf.fill[b];
            let base = b * block;
            buf.data[base + f] = keys[j];
            buf.counts[b] += 1;
            if f + 1 == block {
                // At least `block` keys are buffered, so `write + block`
                // never passes the consumed position `i + j + 1`.
                stripe[write..write + block].copy_from_slice(&buf.data[base..base + block]);
                write += block;
                buf.fill[b] = 0;
            } else {
                buf.fill[b] = f + 1;
            }
        }
        i += m;
    }
    write
}

/// Moves the flushed blocks of every stripe into one contiguous prefix.
/// Returns the prefix length.
fn gather_full_blocks(segment: &mut [Key], stripe: usize, written: &[usize], block: usize) -> usize {
    let total: usize = written.iter().sum();
    let mut holes = Vec::new();
    let mut sources = Vec::new();
    for (t, &w) in written.iter().enumerate() {
        let start = t * stripe;
        let end = (start + stripe).min(segment.len());
        let mut p = start + w;
        while p + block <= end.min(total) {
            holes.push(p);
            p += block;
        }
        let mut q = start.max(total);
        while q < start + w {
            sources.push(q);
            q += block;
        }
    }
    debug_assert_eq!(holes.len(), sources.len());
    for (&h, &s) in holes.iter().zip(&sources) {
        segment.copy_within(s..s + block, h);
    }
    total
}

/// Packed `(read << 32) | write` cursor in block units.
struct BucketCursor {
    rw: AtomicI64,
    reading: AtomicUsize,
}

const WRITE_MASK: i64 = 0xFFFF_FFFF;

impl BucketCursor {
    fn new(write: usize, read: usize) -> Self {
        Self {
            rw: AtomicI64::new(((read as i64) << 32) | write as i64),
            reading: AtomicUsize::new(0),
        }
    }

    #[inline]
    fn unpack(v: i64) -> (i64, i64) {
        (v & WRITE_MASK, v >> 32)
    }

    /// Returns the (write, read) pair before the increment of `write`.
    #[inline]
    fn inc_write(&self) -> (i64, i64) {
        Self::unpack(self.rw.fetch_add(1, Ordering::SeqCst))
    }

    /// Returns the (write, read) pair before the decrement of `read`.
    #[inline]
    fn dec_read(&self) -> (i64, i64) {
        Self::unpack(self.rw.fetch_sub(1 << 32, Ordering::SeqCst))
    }

    fn write(&self) -> usize {
        Self::unpack(self.rw.load(Ordering::SeqCst)).0 as usize
    }

    fn wait_readers(&self) {
        let mut spins = 0u32;
        while self.reading.load(Ordering::SeqCst) != 0 {
            spins += 1;
            if spins < 64 {
                std::hint::spin_loop();
            } else {
                std::thread::yield_now();
            }
        }
    }
}

#[derive(Clone, Copy)]
struct SharedKeys(*mut Key);

// SAFETY: block slots are handed out exclusively through the bucket
// cursors; no two workers ever access the same block concurrently.
unsafe impl Send for SharedKeys {}
unsafe impl Sync for SharedKeys {}

struct Shared<'a, C: ?Sized> {
    seg: SharedKeys,
    len: usize,
    block: usize,
    model: &'a C,
    cursors: &'a [BucketCursor],
    overflow: SharedKeys,
    overflow_slot: &'a AtomicUsize,
}

impl<C: Classifier + ?Sized> Shared<'_, C> {
    /// Pops the next unprocessed block of `bucket` into `buf`, returning its
    /// destination bucket.
    fn pop(&self, bucket: usize, buf: &mut [Key]) -> Option<usize> {
        let cursor = &self.cursors[bucket];
        cursor.reading.fetch_add(1, Ordering::SeqCst);
        let (write, read) = cursor.dec_read();
        if read - 1 < write {
            cursor.reading.fetch_sub(1, Ordering::SeqCst);
            return None;
        }
        let pos = (read - 1) as usize * self.block;
        // SAFETY: slot `read - 1` was claimed by this decrement and is a full
        // in-bounds block (`read <= flushed prefix`).
        unsafe { ptr::copy_nonoverlapping(self.seg.0.add(pos), buf.as_mut_ptr(), self.block) };
        cursor.reading.fetch_sub(1, Ordering::SeqCst);
        Some(self.model.classify(buf[0]))
    }

    /// Places the block in `swap[0]` (destined for `dest`), following swap
    /// chains until a free slot is found.
    fn place(&self, mut dest: usize, swap: &mut [Vec<Key>; 2]) {
        let mut cur = 0;
        loop {
            let cursor = &self.cursors[dest];
            let (write, read) = cursor.inc_write();
            let slot = write as usize;
            let pos = slot * self.block;
            if write >= read {
                cursor.wait_readers();
                if pos + self.block > self.len {
                    self.overflow_slot.store(slot, Ordering::SeqCst);
                    // SAFETY: only the one block straddling the end can map
                    // here, and it is written once.
                    unsafe { ptr::copy_nonoverlapping(swap[cur].as_ptr(), self.overflow.0, self.block) };
                } else {
                    // SAFETY: slot claimed by this increment, no reader left.
                    unsafe { ptr::copy_nonoverlapping(swap[cur].as_ptr(), self.seg.0.add(pos), self.block) };
                }
                return;
            }
            // SAFETY: `write < read` means this increment claimed an
            // unprocessed full block exclusively.
            let head = unsafe { *self.seg.0.add(pos) };
            let target = self.model.classify(head);
            if target == dest {
                continue;
            }
            let other = 1 - cur;
            unsafe {
                ptr::copy_nonoverlapping(self.seg.0.add(pos), swap[other].as_mut_ptr(), self.block);
                ptr::copy_nonoverlapping(swap[cur].as_ptr(), self.seg.0.add(pos), self.block);
            }
            cur = other;
            if cur == 1 {
                // Keep the carried block in swap[0] for the next round.
                swap.swap(0, 1);
                cur = 0;
            }
            dest = target;
        }
    }

    fn run(&self, first_bucket: usize, swap: &mut [Vec<Key>; 2]) {
        let k = self.cursors.len();
        for step in 0..k {
            let bucket = (first_bucket + step) % k;
            while let Some(dest) = self.pop(bucket, &mut swap[0]) {
                self.place(dest, swap);
            }
        }
    }
}

/// Permutes the flushed blocks so that each bucket is contiguous, then
/// writes the buffered tails into place. Returns exact bucket boundaries.
pub fn permute_blocks<C: Classifier + ?Sized>(segment: &mut [Key], model: &C, state: &mut BlockPartitionState) -> Vec<BucketBoundary> {
    let n = segment.len();
    let k = state.buckets;
    let block = state.block;
    assert!(n / block < (1 << 31), "segment too large for 32-bit block cursors");
    debug_assert_eq!(state.bucket_sizes.iter().sum::<usize>(), n);

    let mut starts = Vec::with_capacity(k + 1);
    let mut acc = 0;
    starts.push(0);
    for &s in &state.bucket_sizes {
        acc += s;
        starts.push(acc);
    }

    let flushed_blocks = state.full_prefix / block;
    let cursors: Vec<BucketCursor> = (0..k)
        .map(|i| {
            let first = starts[i].div_ceil(block);
            let last = starts[i + 1].div_ceil(block);
            BucketCursor::new(first, flushed_blocks.clamp(first, last))
        })
        .collect();

    let overflow_slot = AtomicUsize::new(usize::MAX);
    {
        let shared = Shared {
            seg: SharedKeys(segment.as_mut_ptr()),
            len: n,
            block,
            model,
            cursors: &cursors,
            overflow: SharedKeys(state.overflow.as_mut_ptr()),
            overflow_slot: &overflow_slot,
        };
        let workers = state.workers.len();
        if workers == 1 || flushed_blocks < 2 * workers {
            shared.run(0, &mut state.workers[0].swap);
        } else {
            let shared = &shared;
            rayon::scope(|s| {
                for (t, w) in state.workers.iter_mut().enumerate() {
                    s.spawn(move |_| shared.run(t * k / workers, &mut w.swap));
                }
            });
        }
    }

    let write_ends: Vec<usize> = cursors.iter().map(|c| c.write() * block).collect();
    cleanup(segment, state, &starts, &write_ends, overflow_slot.into_inner());

    (0..k)
        .map(|i| {
            let eq = model.is_equality_bucket(i);
            BucketBoundary {
                begin: starts[i],
                end: starts[i + 1],
                homogeneous: eq,
                already_sorted: eq,
            }
        })
        .collect()
}

/// Writes bucket-edge spill and buffered tails into the gaps left by the
/// block permutation. Buckets are processed left to right because a
/// bucket's spill lives in the head gap of its right neighbour.
fn cleanup(segment: &mut [Key], state: &BlockPartitionState, starts: &[usize], write_ends: &[usize], overflow_slot: usize) {
    let n = segment.len();
    let block = state.block;

    // Part of the overflow block that belongs inside the segment.
    let mut overflow_tail: &[Key] = &[];
    if overflow_slot != usize::MAX {
        let pos = overflow_slot * block;
        segment[pos..n].copy_from_slice(&state.overflow[..n - pos]);
        overflow_tail = &state.overflow[n - pos..];
    }

    for i in 0..state.buckets {
        let (begin, end) = (starts[i], starts[i + 1]);
        let aligned = begin.div_ceil(block) * block;
        let written_end = write_ends[i];

        let mut holes = HoleCursor::new([(begin, aligned.min(end)), (written_end.max(begin), end)]);
        if written_end > end && written_end > aligned {
            // Spill of this bucket's last block past its end.
            let in_seg_end = written_end.min(n);
            for p in end..in_seg_end {
                let dst = holes.next();
                segment[dst] = segment[p];
            }
            if written_end > n {
                for &x in overflow_tail {
                    segment[holes.next()] = x;
                }
            }
        }
        for w in &state.workers {
            for &x in w.tail(i, block) {
                segment[holes.next()] = x;
            }
        }
        debug_assert!(holes.done(), "bucket {i}: gaps not filled exactly");
    }
}

struct HoleCursor {
    ranges: [(usize, usize); 2],
    at: usize,
    pos: usize,
}

impl HoleCursor {
    fn new(ranges: [(usize, usize); 2]) -> Self {
        let mut h = Self {
            ranges,
            at: 0,
            pos: ranges[0].0,
        };
        h.skip_empty();
        h
    }

    fn skip_empty(&mut self) {
        while self.at < 2 && self.pos >= self.ranges[self.at].1 {
            self.at += 1;
            if self.at < 2 {
                self.pos = self.ranges[self.at].0;
            }
        }
    }

    #[inline]
    fn next(&mut self) -> usize {
        assert!(self.at < 2, "more keys than gap slots");
        let p = self.pos;
        self.pos += 1;
        self.skip_empty();
        p
    }

    fn done(&self) -> bool {
        self.at >= 2
    }
}

/// Flags buckets that contain a single distinct value. The first/last test
/// is confirmed by a full scan so the result does not depend on the
/// model's monotonicity.
pub fn mark_homogeneous(segment: &[Key], boundaries: &mut [BucketBoundary]) {
    for b in boundaries.iter_mut() {
        if b.homogeneous {
            continue;
        }
        let s = &segment[b.begin..b.end];
        let homogeneous = match s {
            [] | [_] => true,
            [first, .., last] => first == last && s.iter().all(|x| x == first),
        };
        b.homogeneous = homogeneous;
        b.already_sorted |= homogeneous;
    }
}

/// Classification, permutation and homogeneity marking in one call.
pub fn partition<C: Classifier + ?Sized>(segment: &mut [Key], model: &C, state: &mut BlockPartitionState) -> Vec<BucketBoundary> {
    classify_and_flush(segment, model, state);
    let mut bounds = permute_blocks(segment, model, state);
    mark_homogeneous(segment, &mut bounds);
    bounds
}
