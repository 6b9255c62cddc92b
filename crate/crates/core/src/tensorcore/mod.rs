//! Dense complex state vectors and density matrices over qubit lattices.
//!
//! Sites are indexed `0..n`. A computational-basis configuration is an `n`-bit
//! mask where bit `i` is set when site `i` carries spin `+1`. States with a
//! conserved magnetization store only the configurations of their sector, in
//! increasing mask order.

mod cache;
mod density;
mod schmidt;
mod state;

use std::fmt;
use std::ops::{BitAnd, BitOr};

pub use cache::{read_state_cache, write_state_cache, CACHE_MAGIC};
pub use density::{
    embed_operator, hermitian_eigen, matrix_log_psd, partial_trace_pure, DensityMatrix,
    SMALL_SYSTEM_DIM,
};
pub use schmidt::{
    entanglement_entropy, entropy, schmidt, schmidt_values, tilde_state, Bipartition,
    SchmidtBlock, SchmidtData, DEFAULT_CUTOFF,
};
pub use state::{Basis, PureState};

pub(crate) use density::check_dim;
pub(crate) use schmidt::tilde_weight;

/// Largest lattice supported by the 32-bit configuration masks.
pub const MAX_SITES: usize = 30;

/// A subset of lattice sites (or of density-matrix subsystems), as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteSet(u32);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);

    pub const fn from_bits(bits: u32) -> Self {
        SiteSet(bits)
    }

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        let mut bits = 0u32;
        for s in sites {
            assert!(s < 32, "site index {s} out of range");
            bits |= 1 << s;
        }
        SiteSet(bits)
    }

    /// All sites `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= 32);
        if n == 32 {
            SiteSet(u32::MAX)
        } else {
            SiteSet((1u32 << n) - 1)
        }
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, site: usize) -> bool {
        site < 32 && self.0 & (1 << site) != 0
    }

    pub const fn union(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & other.0)
    }

    pub const fn difference(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & !other.0)
    }

    pub fn complement(self, n: usize) -> SiteSet {
        SiteSet(!self.0 & SiteSet::full(n).0)
    }

    pub const fn is_disjoint(self, other: SiteSet) -> bool {
        self.0 & other.0 == 0
    }

    pub const fn is_subset(self, other: SiteSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Sites in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let s = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(s)
            }
        })
    }

    /// Highest site index plus one (0 for the empty set).
    pub fn span(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    /// Re-index this set relative to `within`: the k-th member of `within`
    /// becomes site k. `self` must be a subset of `within`.
    pub fn relative_to(self, within: SiteSet) -> SiteSet {
        debug_assert!(self.is_subset(within));
        SiteSet(extract_bits(self.0, within.0))
    }
}

impl BitOr for SiteSet {
    type Output = SiteSet;
    fn bitor(self, rhs: SiteSet) -> SiteSet {
        self.union(rhs)
    }
}

impl BitAnd for SiteSet {
    type Output = SiteSet;
    fn bitand(self, rhs: SiteSet) -> SiteSet {
        self.intersection(rhs)
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Gather the bits of `value` selected by `mask` into the low bits, preserving order.
#[inline]
pub(crate) fn extract_bits(value: u32, mask: u32) -> u32 {
    let mut out = 0u32;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let bit = m & m.wrapping_neg();
        if value & bit != 0 {
            out |= 1 << k;
        }
        k += 1;
        m ^= bit;
    }
    out
}

/// Scatter the low bits of `value` into the positions selected by `mask`.
#[cfg(test)]
pub(crate) fn deposit_bits(value: u32, mask: u32) -> u32 {
    let mut out = 0u32;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let bit = m & m.wrapping_neg();
        if value & (1 << k) != 0 {
            out |= bit;
        }
        k += 1;
        m ^= bit;
    }
    out
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Rank of `mask` among all masks with the same popcount, in increasing order.
///
/// For fixed popcount the increasing numeric order coincides with colex order,
/// whose rank is `sum_i C(p_i, i + 1)` over the set-bit positions `p_0 < p_1 < ...`.
#[inline]
pub(crate) fn colex_rank(mask: u32, table: &BinomialTable) -> usize {
    let mut m = mask;
    let mut i = 0;
    let mut rank = 0;
    while m != 0 {
        let p = m.trailing_zeros() as usize;
        rank += table.get(p, i + 1);
        i += 1;
        m &= m - 1;
    }
    rank
}

/// Pascal's triangle up to 32 choose 32.
pub(crate) struct BinomialTable([[usize; 33]; 33]);

impl BinomialTable {
    pub(crate) fn new() -> Self {
        let mut t = [[0usize; 33]; 33];
        for n in 0..33 {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        BinomialTable(t)
    }

    #[inline]
    pub(crate) fn get(&self, n: usize, k: usize) -> usize {
        if k > n {
            0
        } else {
            self.0[n][k]
        }
    }
}

/// Masks over `n` bits with exactly `k` bits set, increasing.
pub(crate) fn masks_with_popcount(n: usize, k: usize) -> Vec<u32> {
    let count = binomial(n, k);
    let mut out = Vec::with_capacity(count);
    if k == 0 {
        out.push(0);
        return out;
    }
    if k > n {
        return out;
    }
    let limit: u64 = 1u64 << n;
    let mut v: u64 = (1u64 << k) - 1;
    while v < limit {
        out.push(v as u32);
        // Gosper's hack: next larger integer with the same popcount.
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}
