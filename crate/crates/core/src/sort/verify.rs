use crate::sample::splitmix64;
use crate::Key;

/// Outcome of [`verify_sorted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SortedCheck {
    /// First index `i` with `a[i - 1] > a[i]`.
    pub first_violation: Option<usize>,
}

impl SortedCheck {
    pub fn is_sorted(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn verify_sorted(a: &[Key]) -> SortedCheck {
    SortedCheck {
        first_violation: a.windows(2).position(|w| w[0] > w[1]).map(|i| i + 1),
    }
}

/// Order-independent hash of a multiset of keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub len: usize,
    pub sum: u64,
    pub mixed: u64,
}

pub fn multiset_fingerprint(a: &[Key]) -> Fingerprint {
    let mut sum = 0u64;
    let mut mixed = 0u64;
    for &x in a {
        let h = splitmix64(x);
        sum = sum.wrapping_add(h);
        mixed = mixed.wrapping_add(splitmix64(h ^ 0xA076_1D64_78BD_642F));
    }
    Fingerprint { len: a.len(), sum, mixed }
}
