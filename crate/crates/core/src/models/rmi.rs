//! Two-layer linear recursive model index with a global monotonicity
//! guarantee.
//!
//! The root model routes a key to one of `B` second-level models; the
//! selected submodel produces the CDF estimate. Each submodel carries an
//! output interval `[lo, hi]` and the intervals are chained so that
//! `hi[i] <= lo[i + 1]`, which makes the whole model nondecreasing over every
//! key, sampled or not.

use super::LinearModel;
use crate::{Error, Key, Result};

/// A second-level model together with its output clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubModel {
    pub model: LinearModel,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rmi {
    root: LinearModel,
    subs: Vec<SubModel>,
    min_key: Key,
    max_key: Key,
    inv_range: f64,
}

impl Rmi {
    /// Assembles a model from raw parts with unconstrained `[0, 1]` clamps.
    /// Mostly useful for tests; call [`Rmi::enforce_monotonic`] afterwards.
    pub fn from_parts(root: LinearModel, submodels: Vec<LinearModel>, min_key: Key, max_key: Key) -> Self {
        assert!(!submodels.is_empty(), "an RMI needs at least one submodel");
        assert!(min_key <= max_key);
        let range = max_key - min_key;
        Self {
            root,
            subs: submodels.into_iter().map(|model| SubModel { model, lo: 0.0, hi: 1.0 }).collect(),
            min_key,
            max_key,
            inv_range: if range == 0 { 0.0 } else { 1.0 / range as f64 },
        }
    }

    /// Least-squares fit of the root and every submodel on `(key, rank/len)`
    /// pairs, without the monotonicity constraint.
    pub fn fit_unconstrained(sorted_sample: &[Key], model_count: usize) -> Result<Self> {
        let n = sorted_sample.len();
        if n < 2 {
            return Err(Error::SampleTooSmall { len: n });
        }
        let model_count = model_count.max(1);
        debug_assert!(sorted_sample.windows(2).all(|w| w[0] <= w[1]));

        let mut rmi = Self::from_parts(
            LinearModel::default(),
            vec![LinearModel::default(); model_count],
            sorted_sample[0],
            sorted_sample[n - 1],
        );
        let inv_n = 1.0 / n as f64;
        let label = |j: usize| j as f64 * inv_n;

        let root = LinearModel::fit(sorted_sample.iter().enumerate().map(|(j, &k)| (rmi.unit(k), label(j))));
        // Sample keys and labels rise together, so this only guards rounding.
        rmi.root = LinearModel::new(root.slope.max(0.0), root.intercept);

        let ranges = rmi.route_sample(sorted_sample);
        for (i, &(start, end)) in ranges.iter().enumerate() {
            rmi.subs[i].model = if start == end {
                LinearModel::constant(label(start))
            } else {
                let pts = sorted_sample[start..end]
                    .iter()
                    .enumerate()
                    .map(|(o, &k)| (rmi.unit(k), label(start + o)));
                LinearModel::fit(pts)
            };
        }
        Ok(rmi)
    }

    /// Clamps negative slopes to zero and recomputes the output bounds so the
    /// chain `0 <= lo[0] <= hi[0] <= lo[1] <= ... <= hi[B-1] <= 1` holds.
    ///
    /// Each submodel's bounds start as the min/max of its own outputs over the
    /// sample keys routed to it and are then clipped into the rank interval
    /// those keys occupy. Rank intervals of consecutive submodels abut, which
    /// gives `hi[i] <= lo[i + 1]`. Submodels that receive no sample keys
    /// become the constant at the rank boundary between their neighbours.
    pub fn enforce_monotonic(mut self, sorted_sample: &[Key]) -> Self {
        let n = sorted_sample.len().max(1) as f64;
        let ranges = self.route_sample(sorted_sample);
        for (i, &(start, end)) in ranges.iter().enumerate() {
            let rank_lo = start as f64 / n;
            let rank_hi = end as f64 / n;
            let sub = &mut self.subs[i];
            if start == end {
                sub.model = LinearModel::constant(rank_lo);
                sub.lo = rank_lo;
                sub.hi = rank_lo;
                continue;
            }
            sub.model.slope = sub.model.slope.max(0.0);
            let first = sub.model.eval(unit(sorted_sample[start], self.min_key, self.inv_range));
            let last = sub.model.eval(unit(sorted_sample[end - 1], self.min_key, self.inv_range));
            sub.lo = first.max(rank_lo).min(rank_hi);
            sub.hi = last.max(rank_lo).min(rank_hi);
        }
        self
    }

    /// Fits and constrains in one step.
    pub fn train(sorted_sample: &[Key], model_count: usize) -> Result<Self> {
        Ok(Self::fit_unconstrained(sorted_sample, model_count)?.enforce_monotonic(sorted_sample))
    }

    /// CDF estimate in `[0, 1]`. Keys outside the training range clamp to
    /// the ends.
    #[inline]
    pub fn predict(&self, x: Key) -> f64 {
        if x < self.min_key {
            return 0.0;
        }
        if x > self.max_key {
            return 1.0;
        }
        let u = unit(x, self.min_key, self.inv_range);
        let sub = &self.subs[self.route(u)];
        sub.model.eval(u).max(sub.lo).min(sub.hi)
    }

    pub fn root(&self) -> LinearModel {
        self.root
    }

    pub fn submodels(&self) -> &[SubModel] {
        &self.subs
    }

    pub fn model_count(&self) -> usize {
        self.subs.len()
    }

    pub fn key_range(&self) -> (Key, Key) {
        (self.min_key, self.max_key)
    }

    #[inline(always)]
    fn unit(&self, x: Key) -> f64 {
        unit(x, self.min_key, self.inv_range)
    }

    #[inline(always)]
    fn route(&self, u: f64) -> usize {
        let b = self.subs.len();
        // Float-to-int `as` saturates, so negative estimates land on 0.
        ((self.root.eval(u) * b as f64) as usize).min(b - 1)
    }

    /// Half-open index range of the sample routed to each submodel.
    fn route_sample(&self, sorted_sample: &[Key]) -> Vec<(usize, usize)> {
        let b = self.subs.len();
        let mut ranges = Vec::with_capacity(b);
        let mut start = 0;
        let mut j = 0;
        for i in 0..b {
            while j < sorted_sample.len() && self.route(self.unit(sorted_sample[j])) <= i {
                j += 1;
            }
            ranges.push((start, j));
            start = j;
        }
        ranges
    }
}

#[inline(always)]
fn unit(x: Key, min_key: Key, inv_range: f64) -> f64 {
    x.wrapping_sub(min_key) as f64 * inv_range
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn empirical_cdf(sorted: &[Key], x: Key) -> f64 {
        sorted.partition_point(|&k| k <= x) as f64 / sorted.len() as f64
    }

    fn assert_chain(rmi: &Rmi) {
        let subs = rmi.submodels();
        for s in subs {
            assert!(0.0 <= s.lo && s.lo <= s.hi && s.hi <= 1.0, "{s:?}");
            assert!(s.model.slope >= 0.0);
        }
        for w in subs.windows(2) {
            assert!(w[0].hi <= w[1].lo, "{:?} -> {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn evenly_spaced_midpoint() {
        let sample: Vec<Key> = (0..1000).collect();
        let rmi = Rmi::train(&sample, 4).unwrap();
        let p = rmi.predict(500);
        assert!((0.45..=0.55).contains(&p), "{p}");
        assert_chain(&rmi);
    }

    #[test]
    fn two_point_fit() {
        let rmi = Rmi::train(&[0, 1], 1).unwrap();
        let (a, b) = (rmi.predict(0), rmi.predict(1));
        assert!(a <= b);
        assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
    }

    #[test]
    fn too_small_sample() {
        assert!(matches!(Rmi::train(&[3], 4), Err(Error::SampleTooSmall { len: 1 })));
        assert!(matches!(Rmi::train(&[], 4), Err(Error::SampleTooSmall { len: 0 })));
    }

    #[test]
    fn clamps_outside_training_range() {
        let sample: Vec<Key> = (100..200).collect();
        let rmi = Rmi::train(&sample, 8).unwrap();
        assert_eq!(rmi.predict(5), 0.0);
        assert_eq!(rmi.predict(10_000), 1.0);
        assert_eq!(rmi.predict(u64::MAX), 1.0);
    }

    #[test]
    fn normal_sample_tracks_empirical_cdf() {
        let mut rng = SampleRng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut sample: Vec<Key> = (0..10_000)
            .map(|_| crate::keys::encode_float(normal.sample(&mut rng)).unwrap())
            .collect();
        sample.sort_unstable();
        let rmi = Rmi::train(&sample, 64).unwrap();
        let err: f64 = sample
            .iter()
            .map(|&x| (rmi.predict(x) - empirical_cdf(&sample, x)).abs())
            .sum::<f64>()
            / sample.len() as f64;
        assert!(err <= 0.05, "mean abs error {err}");
    }

    #[test]
    fn uniform_midrange_tracks_empirical_cdf() {
        let mut rng = SampleRng::seed_from_u64(11);
        let mut sample: Vec<Key> = (0..5_000).map(|_| rng.random_range(0..1u64 << 40)).collect();
        sample.sort_unstable();
        let rmi = Rmi::train(&sample, 32).unwrap();
        for q in [0.25, 0.5, 0.75] {
            let x = sample[(q * sample.len() as f64) as usize];
            assert!((rmi.predict(x) - empirical_cdf(&sample, x)).abs() < 0.05);
        }
    }

    #[test]
    fn overlapping_submodels_get_separated() {
        // Submodel 0 rises to 0.7 over its half, submodel 1 starts at 0.2:
        // the raw outputs overlap across the boundary.
        let sample: Vec<Key> = (0..100).collect();
        let raw = Rmi::from_parts(
            LinearModel::new(1.0, 0.0),
            vec![LinearModel::new(1.4, 0.0), LinearModel::new(0.8, -0.2)],
            0,
            99,
        );
        let left = raw.predict(49);
        let right = raw.predict(50);
        assert!(left > right, "raw model should be non-monotone here");
        let rmi = raw.enforce_monotonic(&sample);
        assert_chain(&rmi);
        assert!(rmi.predict(49) <= rmi.predict(50));
    }

    #[test]
    fn negative_slope_clamped() {
        let sample: Vec<Key> = (0..100).collect();
        let raw = Rmi::from_parts(LinearModel::new(1.0, 0.0), vec![LinearModel::new(-0.5, 0.9)], 0, 99);
        let rmi = raw.enforce_monotonic(&sample);
        assert_eq!(rmi.submodels()[0].model.slope, 0.0);
        assert_chain(&rmi);
    }

    #[test]
    fn enforcement_is_idempotent() {
        let mut rng = SampleRng::seed_from_u64(5);
        let mut sample: Vec<Key> = (0..2_000).map(|_| rng.random_range(0..1_000_000)).collect();
        sample.sort_unstable();
        let once = Rmi::train(&sample, 50).unwrap();
        let twice = once.clone().enforce_monotonic(&sample);
        for &x in &sample {
            assert_eq!(once.predict(x).to_bits(), twice.predict(x).to_bits());
        }
        assert_eq!(once, twice);
    }

    #[test]
    fn training_is_deterministic() {
        let sample: Vec<Key> = (0..3000u64).map(|i| i * i % 7919).collect::<Vec<_>>();
        let mut s = sample.clone();
        s.sort_unstable();
        assert_eq!(Rmi::train(&s, 40).unwrap(), Rmi::train(&s, 40).unwrap());
    }

    #[test]
    fn constant_sample_is_valid() {
        let rmi = Rmi::train(&[9; 50], 8).unwrap();
        assert_chain(&rmi);
        let p = rmi.predict(9);
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(rmi.predict(8), 0.0);
        assert_eq!(rmi.predict(10), 1.0);
    }

    #[test]
    fn monotone_on_random_pairs() {
        let mut rng = SampleRng::seed_from_u64(17);
        let mut sample: Vec<Key> = (0..4_000)
            .map(|_| {
                let v: u64 = rng.random_range(0..1 << 20);
                v * v
            })
            .collect();
        sample.sort_unstable();
        let rmi = Rmi::train(&sample, 128).unwrap();
        for _ in 0..100_000 {
            let a: u64 = rng.random_range(0..1 << 41);
            let b: u64 = rng.random_range(0..1 << 41);
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            assert!(rmi.predict(x) <= rmi.predict(y), "{x} {y}");
        }
    }
}
