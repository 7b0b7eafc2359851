//! Seeded synthetic datasets and the binary key file format.

mod io;

pub use io::{read_keys, read_keys_from_bytes, write_keys, write_keys_to};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, Exp, LogNormal, Normal, Zipf};

use crate::keys::FloatKeyCodec;
use crate::{Error, Key, Result};

/// Registry of generator names.
pub const GENERATORS: [&str; 9] = [
    "uniform",
    "normal",
    "lognormal",
    "mixgauss",
    "exponential",
    "chisquared",
    "rootdups",
    "twodups",
    "zipf",
];

/// Distinct values of the Zipf generator.
pub const ZIPF_DOMAIN: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Float64,
    UInt64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform {
        low: f64,
        high: f64,
    },
    Normal {
        mean: f64,
        std_dev: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Equal-weight mixture; means uniform in `[0, n)`, `sigma = n * sigma_fraction`.
    MixGauss {
        components: usize,
        sigma_fraction: f64,
    },
    Exponential {
        lambda: f64,
    },
    ChiSquared {
        k: f64,
    },
    /// `i mod floor(sqrt(n))`.
    RootDups,
    /// `(i^2 + n/2) mod n`.
    TwoDups,
    Zipf {
        s: f64,
        domain: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub params: Distribution,
    pub element_kind: ElementKind,
}

impl DatasetSpec {
    /// Spec with the standard parameters of generator `name`.
    pub fn new(name: &str, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadDatasetParam("n must be positive".into()));
        }
        let nf = n as f64;
        let (params, element_kind) = match name {
            "uniform" => (Distribution::Uniform { low: 0.0, high: nf }, ElementKind::Float64),
            "normal" => (Distribution::Normal { mean: 0.0, std_dev: 1.0 }, ElementKind::Float64),
            "lognormal" => (Distribution::LogNormal { mu: 0.0, sigma: 0.5 }, ElementKind::Float64),
            "mixgauss" => (
                Distribution::MixGauss {
                    components: 5,
                    sigma_fraction: 0.01,
                },
                ElementKind::Float64,
            ),
            "exponential" => (Distribution::Exponential { lambda: 2.0 }, ElementKind::Float64),
            "chisquared" => (Distribution::ChiSquared { k: 4.0 }, ElementKind::Float64),
            "rootdups" => (Distribution::RootDups, ElementKind::UInt64),
            "twodups" => (Distribution::TwoDups, ElementKind::UInt64),
            "zipf" => (
                Distribution::Zipf {
                    s: 0.75,
                    domain: ZIPF_DOMAIN,
                },
                ElementKind::UInt64,
            ),
            _ => {
                return Err(Error::UnknownDataset {
                    name: name.to_string(),
                    known: GENERATORS.join(", "),
                })
            }
        };
        Ok(Self {
            name: name.to_string(),
            n,
            seed,
            params,
            element_kind,
        })
    }
}

/// Generates the keys of `spec`. Float distributions go through
/// [`FloatKeyCodec`].
pub fn generate(spec: &DatasetSpec) -> Result<Vec<Key>> {
    match generate_floats(spec)? {
        Some(xs) => FloatKeyCodec::encode_all(&xs),
        None => generate_integers(spec),
    }
}

/// Raw samples of a float distribution; `None` for integer generators.
pub fn generate_floats(spec: &DatasetSpec) -> Result<Option<Vec<f64>>> {
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bad = |e: &dyn std::fmt::Display| Error::BadDatasetParam(format!("{}: {e}", spec.name));
    let xs = match spec.params {
        Distribution::Uniform { low, high } => {
            if low.partial_cmp(&high) != Some(std::cmp::Ordering::Less) {
                return Err(Error::BadDatasetParam(format!("uniform needs low < high, got [{low}, {high})")));
            }
            (0..n).map(|_| rng.random_range(low..high)).collect()
        }
        Distribution::Normal { mean, std_dev } => {
            let d = Normal::new(mean, std_dev).map_err(|e| bad(&e))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
        Distribution::LogNormal { mu, sigma } => {
            let d = LogNormal::new(mu, sigma).map_err(|e| bad(&e))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
        Distribution::MixGauss {
            components,
            sigma_fraction,
        } => {
            if components == 0 {
                return Err(Error::BadDatasetParam("mixgauss needs at least one component".into()));
            }
            let sigma = n as f64 * sigma_fraction;
            let parts = (0..components)
                .map(|_| Normal::new(rng.random_range(0.0..n as f64), sigma).map_err(|e| bad(&e)))
                .collect::<Result<Vec<_>>>()?;
            (0..n).map(|_| parts[rng.random_range(0..components)].sample(&mut rng)).collect()
        }
        Distribution::Exponential { lambda } => {
            let d = Exp::new(lambda).map_err(|e| bad(&e))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
        Distribution::ChiSquared { k } => {
            let d = ChiSquared::new(k).map_err(|e| bad(&e))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
        Distribution::RootDups | Distribution::TwoDups | Distribution::Zipf { .. } => return Ok(None),
    };
    Ok(Some(xs))
}

fn generate_integers(spec: &DatasetSpec) -> Result<Vec<Key>> {
    let n = spec.n as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(match spec.params {
        Distribution::RootDups => {
            let root = n.isqrt();
            (0..n).map(|i| i % root).collect()
        }
        Distribution::TwoDups => (0..n as u128).map(|i| ((i * i + n as u128 / 2) % n as u128) as u64).collect(),
        Distribution::Zipf { s, domain } => {
            let d = Zipf::new(domain as f64, s).map_err(|e| Error::BadDatasetParam(format!("zipf: {e}")))?;
            (0..n).map(|_| d.sample(&mut rng) as u64).collect()
        }
        _ => unreachable!("float distributions are handled by generate_floats"),
    })
}
