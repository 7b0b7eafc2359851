//! Learned-pivot sorting for 64-bit keys.
//!
//! A monotone two-layer linear CDF model (an RMI) predicts where each key
//! belongs, and an in-place block partitioner scatters keys into buckets
//! according to those predictions. Small or duplicate-heavy segments fall
//! back to a branchless splitter tree with equality buckets. Both a
//! sequential and a parallel driver are provided, together with the classic
//! single-model LearnedSort pipeline and a set of analysis algorithms
//! (learned-pivot Quicksort, Learned Quicksort, implicit pivot extraction and
//! pivot-quality scoring).
//!
//! ```
//! use cdfsort::{sort, SortConfig};
//!
//! let mut keys: Vec<u64> = (0..100_000u64).rev().collect();
//! sort(&mut keys, &SortConfig::default());
//! assert!(keys.windows(2).all(|w| w[0] <= w[1]));
//! ```

pub mod classic;
pub mod data;
mod error;
pub mod keys;
pub mod models;
pub mod partition;
pub mod sample;
pub mod sort;

pub use error::{Error, Result};
pub use keys::{FloatKeyCodec, Key};
pub use models::{Classifier, LinearModel, PartitionModel, Rmi, SplitterTree};
pub use sort::{
    learned_sort_classic, radix_base_case_sort, sort, sort_with_policy, verify_sorted, HybridPolicy, ModelPolicy, SortConfig, SortedCheck,
};
