//! Terminal sorts for small segments and the depth-cap fallback.

use crate::Key;

/// Below this length the radix sort hands over to insertion sort.
pub const INSERTION_THRESHOLD: usize = 16;

pub fn insertion_sort(v: &mut [Key]) {
    for i in 1..v.len() {
        let x = v[i];
        let mut j = i;
        while j > 0 && v[j - 1] > x {
            v[j] = v[j - 1];
            j -= 1;
        }
        v[j] = x;
    }
}

/// Insertion sort that returns the number of element shifts performed.
pub fn insertion_sort_counting(v: &mut [Key]) -> u64 {
    let mut shifts = 0u64;
    for i in 1..v.len() {
        let x = v[i];
        let mut j = i;
        while j > 0 && v[j - 1] > x {
            v[j] = v[j - 1];
            j -= 1;
        }
        shifts += (i - j) as u64;
        v[j] = x;
    }
    shifts
}

/// Bottom-up heapsort; `O(n log n)` worst case.
pub fn heapsort(v: &mut [Key]) {
    let n = v.len();
    if n < 2 {
        return;
    }
    for i in (0..n / 2).rev() {
        sift_down(v, i, n);
    }
    for end in (1..n).rev() {
        v.swap(0, end);
        sift_down(v, 0, end);
    }
}

fn sift_down(v: &mut [Key], root: usize, end: usize) {
    // Walk to a leaf along larger children, then climb back to the slot.
    let mut j = root;
    loop {
        let l = 2 * j + 1;
        if l >= end {
            break;
        }
        j = if l + 1 < end && v[l + 1] > v[l] { l + 1 } else { l };
    }
    let x = v[root];
    while j > root && v[j] < x {
        j = (j - 1) / 2;
    }
    let mut carry = v[j];
    v[j] = x;
    while j > root {
        j = (j - 1) / 2;
        std::mem::swap(&mut carry, &mut v[j]);
    }
}

/// In-place MSD radix sort on 8-bit digits with insertion sort for short
/// runs.
pub fn radix_base_case_sort(v: &mut [Key]) {
    radix_sort_with_threshold(v, INSERTION_THRESHOLD);
}

pub fn radix_sort_with_threshold(v: &mut [Key], insertion_threshold: usize) {
    msd(v, insertion_threshold.max(1));
}

fn msd(v: &mut [Key], threshold: usize) {
    if v.len() <= threshold {
        insertion_sort(v);
        return;
    }
    // The 8-bit digit starts at the highest bit where keys differ, so the
    // shared prefix costs no passes.
    let first = v[0];
    let diff = v.iter().fold(0, |acc, &x| acc | (x ^ first));
    if diff == 0 {
        return;
    }
    let shift = (63 - diff.leading_zeros()).saturating_sub(7);
    let digit = |x: Key| ((x >> shift) & 0xFF) as usize;

    let mut counts = [0usize; 256];
    for &x in v.iter() {
        counts[digit(x)] += 1;
    }
    let mut heads = [0usize; 256];
    let mut ends = [0usize; 256];
    let mut acc = 0;
    for d in 0..256 {
        heads[d] = acc;
        acc += counts[d];
        ends[d] = acc;
    }
    for d in 0..256 {
        while heads[d] < ends[d] {
            let mut x = v[heads[d]];
            let mut dx = digit(x);
            while dx != d {
                std::mem::swap(&mut x, &mut v[heads[dx]]);
                heads[dx] += 1;
                dx = digit(x);
            }
            v[heads[d]] = x;
            heads[d] += 1;
        }
    }
    if shift == 0 {
        return;
    }
    let mut start = 0;
    for &c in &counts {
        if c > 1 {
            msd(&mut v[start..start + c], threshold);
        }
        start += c;
    }
}
