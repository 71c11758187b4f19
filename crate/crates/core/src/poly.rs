//! Sparse polynomials in the embedded coordinates `X_σ = σ(z - c)`.

use std::collections::BTreeMap;

use crate::field::Field;
use crate::multiindex::MultiIndex;
use crate::padic::{Magnitude, PadicScalar, Q};

/// `Σ_m a_m X^m`, absent terms are zero.
#[derive(Clone, Debug)]
pub struct Poly {
    field: Field,
    nvars: usize,
    terms: BTreeMap<MultiIndex, PadicScalar>,
}

impl Poly {
    pub fn zero(field: &Field, nvars: usize) -> Self {
        Poly { field: field.clone(), nvars, terms: BTreeMap::new() }
    }

    pub fn constant(field: &Field, nvars: usize, c: PadicScalar) -> Self {
        let mut p = Self::zero(field, nvars);
        p.add_term(MultiIndex::zeros(nvars), c);
        p
    }

    pub fn monomial(field: &Field, m: MultiIndex, c: PadicScalar) -> Self {
        let mut p = Self::zero(field, m.len());
        p.add_term(m, c);
        p
    }

    pub fn from_terms(field: &Field, nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, PadicScalar)>) -> Self {
        let mut p = Self::zero(field, nvars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, PadicScalar> {
        &self.terms
    }

    pub fn coeff(&self, m: &MultiIndex) -> Option<&PadicScalar> {
        self.terms.get(m)
    }

    /// Adds `c X^m`.
    pub fn add_term(&mut self, m: MultiIndex, c: PadicScalar) {
        debug_assert_eq!(m.len(), self.nvars);
        if c.is_exact_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                let s = &*slot + &c;
                if s.is_exact_zero() {
                    self.terms.remove(&m);
                } else {
                    *slot = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Largest total degree among stored terms that are not zero to precision.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().filter(|(_, c)| !c.is_zero()).map(|(m, _)| m.degree()).max()
    }

    /// Largest total degree among stored terms.
    pub fn support_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    /// Every coefficient is zero to precision.
    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    /// Drops coefficients that are zero to precision.
    pub fn pruned(&self) -> Poly {
        Poly {
            field: self.field.clone(),
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, s: &PadicScalar) -> Poly {
        Poly::from_terms(&self.field, self.nvars, self.terms.iter().map(|(m, c)| (m.clone(), c * s)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(&self.field, self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.add(m2), c1 * c2);
            }
        }
        out
    }

    /// `P(X + δ)` re-expanded in `X`.
    pub fn translate(&self, delta: &[PadicScalar]) -> Poly {
        debug_assert_eq!(delta.len(), self.nvars);
        if delta.iter().all(|d| d.is_exact_zero()) {
            return self.clone();
        }
        let max_deg: Vec<u32> =
            (0..self.nvars).map(|v| self.terms.keys().map(|m| m.get(v)).max().unwrap_or(0)).collect();
        let powers: Vec<Vec<PadicScalar>> = delta
            .iter()
            .zip(&max_deg)
            .map(|(d, &n)| {
                let mut row = Vec::with_capacity(n as usize + 1);
                let mut acc = PadicScalar::one(&self.field);
                for _ in 0..=n {
                    row.push(acc.clone());
                    acc = &acc * d;
                }
                row
            })
            .collect();
        let mut out = Poly::zero(&self.field, self.nvars);
        for (m, a) in &self.terms {
            for k in m.lower_set() {
                let mut c = a.clone();
                let b = m.binom(&k);
                if b != 1 {
                    c = &c * &PadicScalar::from_u128(&self.field, b);
                }
                for v in 0..self.nvars {
                    let e = m.get(v) - k.get(v);
                    if e > 0 {
                        c = &c * &powers[v][e as usize];
                    }
                }
                out.add_term(k, c);
            }
        }
        out
    }

    /// Scaled derivative `D_i P / i!`: coefficient of `X^{m-i}` is `a_m binom(m, i)`.
    pub fn derived(&self, i: &MultiIndex) -> Poly {
        let mut out = Poly::zero(&self.field, self.nvars);
        for (m, a) in &self.terms {
            if let Some(rest) = m.checked_sub(i) {
                let b = m.binom(i);
                let c = if b == 1 { a.clone() } else { a * &PadicScalar::from_u128(&self.field, b) };
                out.add_term(rest, c);
            }
        }
        out
    }

    /// Evaluates at the coordinates `X_σ`.
    pub fn eval(&self, coords: &[PadicScalar]) -> PadicScalar {
        let mut acc = PadicScalar::zero(&self.field);
        for (m, a) in &self.terms {
            acc = &acc + &(a * &m.monomial(coords));
        }
        acc
    }

    /// `max_m |a_m| q^{-Σ_v ℓ_v m_v}`, the sup on the polydisc `|X_v| ≤ q^{-ℓ_v}`.
    pub fn gauss_bound(&self, levels: &[i64]) -> Magnitude {
        let f = self.field.f() as i64;
        let mut best = Magnitude::ZERO;
        for (m, a) in &self.terms {
            let shift: i64 = m.iter().zip(levels).map(|(x, &l)| x as i64 * l).sum();
            let mag = a.abs_upper().mul(Magnitude::from_exponent(Q::from_integer(shift * f)));
            best = best.max(mag);
        }
        best
    }

    /// Coefficientwise equality to precision.
    pub fn eq_to_precision(&self, other: &Poly) -> bool {
        self.sub(other).is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::embed_all;
    use crate::field::{FieldCtx, FieldDescriptor};
    use proptest::prelude::*;

    fn field() -> Field {
        FieldCtx::new(FieldDescriptor::new(3, 2, 1).unwrap(), Some(16)).unwrap()
    }

    fn arb_poly(k: Field) -> impl Strategy<Value = Poly> {
        prop::collection::vec((0u32..3, 0u32..3, 0i64..30), 0..6).prop_map(move |list| {
            Poly::from_terms(
                &k,
                2,
                list.into_iter().map(|(a, b, c)| (MultiIndex::new(&[a, b]), PadicScalar::from_i64(&k, c - 12))),
            )
        })
    }

    proptest! {
        #[test]
        fn translation_is_consistent_with_evaluation(p in arb_poly(field()), d in 0i64..40, z in 0i64..40) {
            let k = field();
            let delta = embed_all(&k, &(PadicScalar::from_i64(&k, d) * PadicScalar::teichmuller(&k, 4)));
            let point = embed_all(&k, &PadicScalar::from_i64(&k, z));
            let moved = p.translate(&delta);
            let shifted: Vec<PadicScalar> = point.iter().zip(&delta).map(|(a, b)| a + b).collect();
            prop_assert!(moved.eval(&point).eq_to_precision(&p.eval(&shifted)));
            let back: Vec<PadicScalar> = delta.iter().map(|x| x.neg()).collect();
            prop_assert!(moved.translate(&back).eq_to_precision(&p));
        }

        #[test]
        fn derived_tables_compose(p in arb_poly(field())) {
            // D_j (D_i P / i!) / j! = binom(i + j, i) D_{i+j} P / (i + j)!
            let k = field();
            let i = MultiIndex::new(&[1, 0]);
            let j = MultiIndex::new(&[0, 1]);
            let lhs = p.derived(&i).derived(&j);
            let rhs = p.derived(&i.add(&j)).scale(&PadicScalar::from_u128(&k, i.add(&j).binom(&i)));
            prop_assert!(lhs.eq_to_precision(&rhs));
        }
    }

    #[test]
    fn gauss_bound_of_monomial() {
        let k = field();
        let p = Poly::monomial(&k, MultiIndex::new(&[2, 1]), PadicScalar::one(&k));
        assert_eq!(p.gauss_bound(&[1, 1]), Magnitude::q_pow(&k, Q::from_integer(-3)));
        assert_eq!(Poly::zero(&k, 2).gauss_bound(&[0, 0]), Magnitude::ZERO);
    }
}
