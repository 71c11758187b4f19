//! Multi-indices over the embeddings, binomials and index sets.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::padic::PadicScalar;

/// A tuple `(n_σ)` of nonnegative integers, one per embedding.
///
/// Ordered by total degree, then lexicographically with larger leading
/// entries first, so degree two in two variables runs `(2,0), (1,1), (0,2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u16; 4]>);

impl MultiIndex {
    pub fn new(entries: &[u32]) -> Self {
        MultiIndex(entries.iter().map(|&x| u16::try_from(x).expect("index entry fits u16")).collect())
    }

    pub fn zeros(len: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, len))
    }

    /// `k e_σ`.
    pub fn unit(len: usize, sigma: usize, k: u32) -> Self {
        let mut m = Self::zeros(len);
        m.0[sigma] = k as u16;
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, sigma: usize) -> u32 {
        self.0[sigma] as u32
    }

    pub fn set(&mut self, sigma: usize, value: u32) {
        self.0[sigma] = value as u16;
    }

    pub fn entries(&self) -> Vec<u32> {
        self.0.iter().map(|&x| x as u32).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&x| x as u32)
    }

    /// Total degree `|n|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&x| x as u32).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// `self - other` if `other ≤ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect()))
    }

    /// Concatenation, used for polynomials in two groups of variables.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Splits into the first `at` entries and the rest.
    pub fn split(&self, at: usize) -> (MultiIndex, MultiIndex) {
        (MultiIndex(self.0[..at].into()), MultiIndex(self.0[at..].into()))
    }

    /// `Π_σ n_σ!`.
    pub fn factorial(&self) -> u128 {
        self.iter().map(|n| (1..=n as u128).product::<u128>()).product()
    }

    /// `Π_σ binom(n_σ, k_σ)`, zero unless `k ≤ n`.
    pub fn binom(&self, k: &MultiIndex) -> u128 {
        if !k.le(self) {
            return 0;
        }
        self.iter().zip(k.iter()).map(|(n, k)| binom_u128(n, k)).product()
    }

    /// All `k ≤ self` in canonical order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(0)];
        for n in self.iter() {
            let mut next = Vec::with_capacity(out.len() * (n as usize + 1));
            for prefix in &out {
                for k in 0..=n {
                    let mut v = prefix.0.clone();
                    v.push(k as u16);
                    next.push(MultiIndex(v));
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    /// `Π_σ z_σ^{n_σ}` for the embedded coordinates `z_σ`.
    pub fn monomial(&self, coords: &[PadicScalar]) -> PadicScalar {
        let field = coords[0].field().clone();
        let mut acc = PadicScalar::one(&field);
        for (z, n) in coords.iter().zip(self.iter()) {
            if n > 0 {
                acc = &acc * &z.pow(n);
            }
        }
        acc
    }
}

pub fn binom_u128(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fmt, "{:?}", self.entries())
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(de)?;
        if v.iter().any(|&x| x > u16::MAX as u32) {
            return Err(serde::de::Error::custom("multi-index entry too large"));
        }
        Ok(MultiIndex::new(&v))
    }
}

/// Description of a set of multi-indices: per-embedding caps and a total
/// degree constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexBound {
    /// `Some(c)` caps `n_σ ≤ c`.
    pub caps: Vec<Option<u32>>,
    /// Total degree bound.
    pub total: Option<u32>,
    /// If set, only indices with `|n| = total`.
    pub exact_total: bool,
}

impl IndexBound {
    /// `I_{≤N}`.
    pub fn at_most(len: usize, total: u32) -> Self {
        IndexBound { caps: vec![None; len], total: Some(total), exact_total: false }
    }

    /// `I_{=N}`.
    pub fn exactly(len: usize, total: u32) -> Self {
        IndexBound { caps: vec![None; len], total: Some(total), exact_total: true }
    }

    pub fn contains(&self, n: &MultiIndex) -> bool {
        if n.len() != self.caps.len() {
            return false;
        }
        let caps_ok = self.caps.iter().zip(n.iter()).all(|(c, x)| c.is_none_or(|c| x <= c));
        let total_ok = match self.total {
            None => true,
            Some(t) if self.exact_total => n.degree() == t,
            Some(t) => n.degree() <= t,
        };
        caps_ok && total_ok
    }
}

/// Enumerates a finite index set in canonical order.
pub fn index_set(bound: &IndexBound) -> Result<Vec<MultiIndex>> {
    let len = bound.caps.len();
    let limits: Vec<u32> = match bound.total {
        Some(t) => bound.caps.iter().map(|c| c.map_or(t, |c| c.min(t))).collect(),
        None => bound
            .caps
            .iter()
            .map(|c| c.ok_or_else(|| Error::UnboundedSet("no total bound and an uncapped embedding".into())))
            .collect::<Result<_>>()?,
    };
    let mut out = Vec::new();
    let mut cur = vec![0u32; len];
    loop {
        let n = MultiIndex::new(&cur);
        if bound.contains(&n) {
            out.push(n);
        }
        let mut pos = 0;
        loop {
            if pos == len {
                out.sort();
                return Ok(out);
            }
            if cur[pos] < limits[pos] {
                cur[pos] += 1;
                break;
            }
            cur[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_order_of_degree_two() {
        let set = index_set(&IndexBound::exactly(2, 2)).unwrap();
        assert_eq!(set, vec![MultiIndex::new(&[2, 0]), MultiIndex::new(&[1, 1]), MultiIndex::new(&[0, 2])]);
    }

    #[test]
    fn capped_index_set() {
        let bound = IndexBound { caps: vec![Some(0), None], total: Some(1), exact_total: false };
        assert_eq!(index_set(&bound).unwrap(), vec![MultiIndex::new(&[0, 0]), MultiIndex::new(&[0, 1])]);
    }

    #[test]
    fn unbounded_set_is_rejected() {
        let bound = IndexBound { caps: vec![Some(1), None], total: None, exact_total: false };
        assert!(matches!(index_set(&bound), Err(Error::UnboundedSet(_))));
        let capped = IndexBound { caps: vec![Some(1), Some(2)], total: None, exact_total: false };
        assert_eq!(index_set(&capped).unwrap().len(), 6);
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(MultiIndex::new(&[3, 1]).binom(&MultiIndex::new(&[1, 1])), 3);
        assert_eq!(MultiIndex::new(&[1, 0]).binom(&MultiIndex::new(&[2, 0])), 0);
        assert_eq!(MultiIndex::new(&[2, 3]).factorial(), 12);
    }

    proptest! {
        #[test]
        fn index_set_sizes_match_stars_and_bars(d in 1usize..4, n in 0u32..5) {
            let all = index_set(&IndexBound::at_most(d, n)).unwrap();
            let expect = binom_u128(n + d as u32, d as u32);
            prop_assert_eq!(all.len() as u128, expect);
            prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn vandermonde(a in prop::collection::vec(0u32..6, 2), b in prop::collection::vec(0u32..6, 2), k in prop::collection::vec(0u32..10, 2)) {
            // binom(a+b, k) = Σ_{i ≤ k} binom(a, i) binom(b, k - i)
            let (a, b, k) = (MultiIndex::new(&a), MultiIndex::new(&b), MultiIndex::new(&k));
            let lhs = a.add(&b).binom(&k);
            let rhs: u128 = k.lower_set().iter().map(|i| a.binom(i) * b.binom(&k.checked_sub(i).unwrap())).sum();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
