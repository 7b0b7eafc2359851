//! Sort keys and the order-preserving float mapping.
//!
//! Every algorithm in this crate sorts plain `u64` values. Floats are mapped
//! into that domain with [`FloatKeyCodec`] so one partitioning core serves
//! both element kinds.

use crate::{Error, Result};

/// A sort element: the unsigned integer order on the 64-bit payload.
pub type Key = u64;

const SIGN: u64 = 1 << 63;

/// Bijection between non-NaN `f64` values and [`Key`]s that preserves order.
///
/// Non-negative floats get their sign bit set, negative floats have every
/// bit flipped. `-0.0` encodes strictly below `+0.0`, unlike IEEE comparison,
/// so the round trip is bit-exact.
#[derive(Debug, Clone, Copy, Default)]
pub struct FloatKeyCodec;

impl FloatKeyCodec {
    /// Returns `None` for NaN.
    #[inline]
    pub fn encode(x: f64) -> Option<Key> {
        if x.is_nan() {
            return None;
        }
        let bits = x.to_bits();
        Some(if bits & SIGN == 0 { bits | SIGN } else { !bits })
    }

    #[inline]
    pub fn decode(k: Key) -> f64 {
        let bits = if k & SIGN != 0 { k ^ SIGN } else { !k };
        f64::from_bits(bits)
    }

    /// Encodes a whole slice, rejecting the first NaN.
    pub fn encode_all(xs: &[f64]) -> Result<Vec<Key>> {
        xs.iter()
            .enumerate()
            .map(|(index, &x)| Self::encode(x).ok_or(Error::NanKey { index }))
            .collect()
    }

    pub fn decode_all(keys: &[Key]) -> Vec<f64> {
        keys.iter().map(|&k| Self::decode(k)).collect()
    }
}

/// Encodes a float, failing on NaN.
pub fn encode_float(x: f64) -> Result<Key> {
    FloatKeyCodec::encode(x).ok_or(Error::NanKey { index: 0 })
}

pub fn decode_float(k: Key) -> f64 {
    FloatKeyCodec::decode(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_encodes_to_sign_bit() {
        assert_eq!(encode_float(0.0).unwrap(), 0x8000_0000_0000_0000);
        assert!(encode_float(-0.0).unwrap() < encode_float(0.0).unwrap());
    }

    #[test]
    fn signed_order() {
        let a = encode_float(-1.0).unwrap();
        let b = encode_float(0.0).unwrap();
        let c = encode_float(1.0).unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn nan_rejected() {
        assert!(matches!(encode_float(f64::NAN), Err(Error::NanKey { .. })));
        let err = FloatKeyCodec::encode_all(&[1.0, 2.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NanKey { index: 2 }));
    }

    #[test]
    fn round_trips() {
        assert_eq!(decode_float(encode_float(3.5).unwrap()), 3.5);
        let neg_zero = decode_float(encode_float(-0.0).unwrap());
        assert_eq!(neg_zero.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn boundary_values_ordered() {
        let vals = [
            f64::NEG_INFINITY,
            f64::MIN,
            -1.0,
            -f64::from_bits(1),
            -0.0,
            0.0,
            f64::from_bits(1),
            1.0,
            f64::MAX,
            f64::INFINITY,
        ];
        let enc: Vec<Key> = vals.iter().map(|&v| encode_float(v).unwrap()).collect();
        assert!(enc.windows(2).all(|w| w[0] < w[1]));
        for (&v, &k) in vals.iter().zip(&enc) {
            assert_eq!(decode_float(k).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn sorting_encoded_matches_float_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                let bits: u64 = rng.random();
                let x = f64::from_bits(bits);
                if x.is_finite() {
                    x
                } else {
                    0.5
                }
            })
            .collect();
        let mut by_float = xs.clone();
        by_float.sort_by(|a, b| a.total_cmp(b));
        let mut keys = FloatKeyCodec::encode_all(&xs).unwrap();
        keys.sort_unstable();
        let decoded = FloatKeyCodec::decode_all(&keys);
        let a: Vec<u64> = by_float.iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = decoded.iter().map(|x| x.to_bits()).collect();
        assert_eq!(a, b);
        for &x in &xs {
            assert_eq!(decode_float(encode_float(x).unwrap()).to_bits(), x.to_bits());
        }
    }

    proptest! {
        #[test]
        fn strictly_monotone(a in any::<f64>(), b in any::<f64>()) {
            prop_assume!(a.is_finite() && b.is_finite());
            let (ka, kb) = (encode_float(a).unwrap(), encode_float(b).unwrap());
            if a < b { prop_assert!(ka < kb); }
            if a > b { prop_assert!(ka > kb); }
            prop_assert_eq!(decode_float(ka).to_bits(), a.to_bits());
        }
    }
}
