//! Locally polynomial functions `O_F → F`: one polynomial in `z - a` per coset
//! `a + ϖ^h O_F`, `a ∈ A_h`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embed::{coset_of, embed_all, CosetRep};
use crate::error::{Error, Result};
use crate::field::{Field, FieldCtx, FieldDescriptor};
use crate::multiindex::MultiIndex;
use crate::padic::{Magnitude, PadicScalar, Q};
use crate::poly::Poly;

/// Optional caps on degrees: per embedding, and in total.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeCaps {
    #[serde(default)]
    pub per_embedding: Vec<Option<u32>>,
    #[serde(default)]
    pub total: Option<u32>,
}

impl DegreeCaps {
    pub fn none() -> Self {
        DegreeCaps::default()
    }

    pub fn total(n: u32) -> Self {
        DegreeCaps { per_embedding: Vec::new(), total: Some(n) }
    }

    pub fn admits(&self, m: &MultiIndex) -> bool {
        let total_ok = self.total.is_none_or(|t| m.degree() <= t);
        let per_ok = self.per_embedding.iter().enumerate().all(|(s, c)| c.is_none_or(|c| m.get(s) <= c));
        total_ok && per_ok
    }
}

/// Which embeddings are analytic (`J`) and the degree caps `d_σ` on the rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryProfile {
    /// `None` for `σ ∈ J`, `Some(d_σ)` otherwise.
    pub caps: Vec<Option<u32>>,
}

impl BoundaryProfile {
    /// Every direction analytic.
    pub fn full(d: usize) -> Self {
        BoundaryProfile { caps: vec![None; d] }
    }

    pub fn new(caps: Vec<Option<u32>>) -> Self {
        BoundaryProfile { caps }
    }

    pub fn in_j(&self, sigma: usize) -> bool {
        self.caps[sigma].is_none()
    }

    /// `J′ = J ∪ {σ : d_σ + 1 > r}`.
    pub fn j_prime(&self, r: Q) -> Vec<bool> {
        self.caps.iter().map(|c| c.is_none_or(|d| Q::from_integer(d as i64 + 1) > r)).collect()
    }

    /// `i ∈ Y`: `i_σ ≤ d_σ` off `J`.
    pub fn in_y(&self, i: &MultiIndex) -> bool {
        self.caps.iter().enumerate().all(|(s, c)| c.is_none_or(|d| i.get(s) <= d))
    }

    /// `i ∈ Y′`: `i_σ ≤ d_σ` off `J′`.
    pub fn in_y_prime(&self, i: &MultiIndex, r: Q) -> bool {
        let jp = self.j_prime(r);
        self.caps.iter().enumerate().all(|(s, c)| jp[s] || c.is_none_or(|d| i.get(s) <= d))
    }

    pub fn validate(&self, field: &Field) -> Result<()> {
        if self.caps.len() != field.degree() {
            return Err(Error::InvalidParameters(format!(
                "profile has {} entries for a field of degree {}",
                self.caps.len(),
                field.degree()
            )));
        }
        Ok(())
    }
}

/// A function in `F_h`: sparse table of coset polynomials, absent means zero.
#[derive(Clone, Debug)]
pub struct LocPolyFun {
    field: Field,
    level: u32,
    caps: DegreeCaps,
    cosets: BTreeMap<u64, Poly>,
}

fn check_same(a: &FieldCtx, b: &FieldCtx) -> Result<()> {
    if a.descriptor() == b.descriptor() {
        Ok(())
    } else {
        Err(Error::FieldMismatch(format!("{} vs {}", a.descriptor(), b.descriptor())))
    }
}

impl LocPolyFun {
    /// The zero function at the given level.
    pub fn zero(field: &Field, level: u32) -> Self {
        LocPolyFun { field: field.clone(), level, caps: DegreeCaps::none(), cosets: BTreeMap::new() }
    }

    /// Builds a function from coset tables, checking caps.
    pub fn construct(
        field: &Field,
        level: u32,
        caps: DegreeCaps,
        tables: impl IntoIterator<Item = (CosetRep, Poly)>,
    ) -> Result<Self> {
        let mut f = LocPolyFun { field: field.clone(), level, caps, cosets: BTreeMap::new() };
        for (rep, poly) in tables {
            f.insert(&rep, poly)?;
        }
        Ok(f)
    }

    /// A polynomial on all of `O_F`, in the variable `z`.
    pub fn global(field: &Field, poly: Poly) -> Self {
        let mut f = Self::zero(field, 0);
        if !poly.terms().is_empty() {
            f.cosets.insert(0, poly);
        }
        f
    }

    /// The monomial `c z^m` on `O_F`.
    pub fn monomial(field: &Field, m: MultiIndex, c: PadicScalar) -> Self {
        Self::global(field, Poly::monomial(field, m, c))
    }

    /// Adds a polynomial on the coset `rep`.
    pub fn insert(&mut self, rep: &CosetRep, poly: Poly) -> Result<()> {
        check_same(&self.field, poly.field())?;
        if rep.level() != self.level {
            return Err(Error::InvalidParameters(format!(
                "coset of level {} in a function of level {}",
                rep.level(),
                self.level
            )));
        }
        rep.validate(&self.field)?;
        if poly.nvars() != self.field.degree() {
            return Err(Error::InvalidParameters("table has the wrong number of variables".into()));
        }
        if let Some(bad) = poly.terms().keys().find(|m| !self.caps.admits(m)) {
            return Err(Error::DegreeTooHigh(format!("index {bad:?} exceeds the caps")));
        }
        let key = rep.index(self.field.q());
        let merged = match self.cosets.remove(&key) {
            Some(old) => old.add(&poly),
            None => poly,
        };
        if !merged.terms().is_empty() {
            self.cosets.insert(key, merged);
        }
        Ok(())
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn caps(&self) -> &DegreeCaps {
        &self.caps
    }

    pub fn with_caps(mut self, caps: DegreeCaps) -> Result<Self> {
        for p in self.cosets.values() {
            if let Some(bad) = p.terms().keys().find(|m| !caps.admits(m)) {
                return Err(Error::DegreeTooHigh(format!("index {bad:?} exceeds the caps")));
            }
        }
        self.caps = caps;
        Ok(self)
    }

    /// Coset tables keyed by `Σ d_m q^m`.
    pub fn tables(&self) -> &BTreeMap<u64, Poly> {
        &self.cosets
    }

    pub fn rep(&self, key: u64) -> CosetRep {
        CosetRep::from_index(key, self.level, self.field.q())
    }

    pub fn table(&self, rep: &CosetRep) -> Option<&Poly> {
        self.cosets.get(&rep.index(self.field.q()))
    }

    /// Largest total degree present.
    pub fn degree(&self) -> Option<u32> {
        self.cosets.values().filter_map(|p| p.degree()).max()
    }

    pub fn is_zero(&self) -> bool {
        self.cosets.values().all(|p| p.is_zero())
    }

    pub fn eval(&self, z: &PadicScalar) -> Result<PadicScalar> {
        check_same(&self.field, z.field())?;
        let rep = coset_of(z, self.level)?;
        match self.table(&rep) {
            None => Ok(PadicScalar::zero(&self.field)),
            Some(p) => {
                let x = z - &rep.to_scalar(&self.field);
                Ok(p.eval(&embed_all(&self.field, &x)))
            }
        }
    }

    /// The table of `D_i f / i!`.
    pub fn derived(&self, i: &MultiIndex) -> LocPolyFun {
        let mut out = LocPolyFun {
            field: self.field.clone(),
            level: self.level,
            caps: self.caps.clone(),
            cosets: BTreeMap::new(),
        };
        for (&k, p) in &self.cosets {
            let d = p.derived(i);
            if !d.terms().is_empty() {
                out.cosets.insert(k, d);
            }
        }
        out
    }

    /// `ε_{f,[r]}(x, y) = f(x + y) - Σ_{|i| ≤ [r]} D_i f(x) y^i / i!`.
    pub fn remainder(&self, r: Q, x: &PadicScalar, y: &PadicScalar) -> Result<PadicScalar> {
        check_same(&self.field, x.field())?;
        check_same(&self.field, y.field())?;
        if r < Q::from_integer(0) {
            return Err(Error::InvalidParameters("negative r".into()));
        }
        let top = crate::padic::floor_q(r) as u32;
        let rep = coset_of(x, self.level)?;
        let mut out = self.eval(&(x + y))?;
        let Some(p) = self.table(&rep) else { return Ok(out) };
        let at = embed_all(&self.field, &(x - &rep.to_scalar(&self.field)));
        let ys = embed_all(&self.field, y);
        for i in crate::multiindex::index_set(&crate::multiindex::IndexBound::at_most(self.field.degree(), top))? {
            let d = p.derived(&i);
            if d.is_zero() {
                continue;
            }
            out = &out - &(d.eval(&at) * i.monomial(&ys));
        }
        Ok(out)
    }

    /// True iff `∂^{d_σ+1}/∂z_σ^{d_σ+1} f = 0` for every `σ ∉ J′`.
    pub fn in_subspace(&self, r: Q, bp: &BoundaryProfile) -> Result<bool> {
        bp.validate(&self.field)?;
        let jp = bp.j_prime(r);
        let d = self.field.degree();
        Ok(bp.caps.iter().enumerate().filter(|&(s, _)| !jp[s]).all(|(s, c)| {
            let cap = c.expect("outside J");
            self.derived(&MultiIndex::unit(d, s, cap + 1)).is_zero()
        }))
    }

    /// The same function with tables on the finer level `level`.
    pub fn refine(&self, level: u32) -> Result<LocPolyFun> {
        if level < self.level {
            return Err(Error::InvalidParameters(format!("cannot refine level {} to {level}", self.level)));
        }
        if level == self.level {
            return Ok(self.clone());
        }
        let q = self.field.q();
        let extra = level - self.level;
        let offsets: Vec<(u64, Vec<PadicScalar>)> = (0..q.pow(extra))
            .map(|t| {
                let mut digits = vec![0u32; self.level as usize];
                digits.extend(CosetRep::from_index(t, extra, q).digits);
                let delta = PadicScalar::from_teich_digits(&self.field, &digits);
                (t * q.pow(self.level), embed_all(&self.field, &delta))
            })
            .collect();
        let mut out = LocPolyFun { field: self.field.clone(), level, caps: self.caps.clone(), cosets: BTreeMap::new() };
        for (&k, p) in &self.cosets {
            for (shift, delta) in &offsets {
                out.cosets.insert(k + shift, p.translate(delta));
            }
        }
        Ok(out)
    }

    /// Merges sibling cosets whose polynomials agree, as far as possible.
    pub fn coarsen(&self) -> LocPolyFun {
        let mut cur = self.clone();
        let q = self.field.q();
        while cur.level > 0 {
            let parent_level = cur.level - 1;
            let stride = q.pow(parent_level);
            let parents: BTreeSet<u64> = cur.cosets.keys().map(|k| k % stride).collect();
            let mut merged = BTreeMap::new();
            let mut ok = true;
            'outer: for &b in &parents {
                let mut candidate: Option<Poly> = None;
                for t in 0..q {
                    let child = b + t * stride;
                    let digits = {
                        let mut d = vec![0u32; parent_level as usize];
                        d.push(t as u32);
                        d
                    };
                    let back = embed_all(&self.field, &PadicScalar::from_teich_digits(&self.field, &digits).neg());
                    let lifted = match cur.cosets.get(&child) {
                        Some(p) => p.translate(&back),
                        None => Poly::zero(&self.field, self.field.degree()),
                    };
                    match &candidate {
                        None => candidate = Some(lifted),
                        Some(c) => {
                            if !c.eq_to_precision(&lifted) {
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                }
                let c = candidate.expect("q >= 2").pruned();
                if !c.terms().is_empty() {
                    merged.insert(b, c);
                }
            }
            if !ok {
                break;
            }
            cur =
                LocPolyFun { field: self.field.clone(), level: parent_level, caps: self.caps.clone(), cosets: merged };
        }
        cur
    }

    fn aligned(&self, other: &LocPolyFun) -> Result<(LocPolyFun, LocPolyFun)> {
        check_same(&self.field, &other.field)?;
        let level = self.level.max(other.level);
        Ok((self.refine(level)?, other.refine(level)?))
    }

    pub fn add(&self, other: &LocPolyFun) -> Result<LocPolyFun> {
        let (mut a, b) = self.aligned(other)?;
        for (k, p) in b.cosets {
            let merged = match a.cosets.remove(&k) {
                Some(old) => old.add(&p),
                None => p,
            };
            a.cosets.insert(k, merged);
        }
        a.caps = merge_caps(&self.caps, &other.caps);
        Ok(a)
    }

    pub fn sub(&self, other: &LocPolyFun) -> Result<LocPolyFun> {
        self.add(&other.scale(&PadicScalar::from_i64(&self.field, -1)))
    }

    pub fn scale(&self, s: &PadicScalar) -> LocPolyFun {
        let mut out = self.clone();
        for p in out.cosets.values_mut() {
            *p = p.scale(s);
        }
        out
    }

    pub fn mul(&self, other: &LocPolyFun) -> Result<LocPolyFun> {
        let (a, b) = self.aligned(other)?;
        let mut out =
            LocPolyFun { field: self.field.clone(), level: a.level, caps: DegreeCaps::none(), cosets: BTreeMap::new() };
        for (k, p) in &a.cosets {
            if let Some(r) = b.cosets.get(k) {
                out.cosets.insert(*k, p.mul(r));
            }
        }
        Ok(out)
    }

    /// Pointwise equality to precision.
    pub fn eq_to_precision(&self, other: &LocPolyFun) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// `‖f‖_{F_h} = max_a max_m |a_m(a)| q^{-h|m|}` with tables at level `h`.
    pub fn fh_norm(&self, h: u32) -> Result<Magnitude> {
        let base = if self.level > h { self.coarsen() } else { self.clone() };
        if base.level > h {
            return Err(Error::InvalidParameters(format!("function is not locally polynomial at level {h}")));
        }
        let fine = base.refine(h)?;
        let radii = vec![h as i64; self.field.degree()];
        Ok(fine.cosets.values().map(|p| p.gauss_bound(&radii)).fold(Magnitude::ZERO, Magnitude::max))
    }

    /// `q^x` helper for this field.
    pub fn q_pow(&self, x: Q) -> Magnitude {
        Magnitude::q_pow(&self.field, x)
    }

    // ---- JSON ---------------------------------------------------------------

    pub fn to_json(&self) -> LocPolyFunJson {
        LocPolyFunJson {
            field: self.field.descriptor(),
            level: self.level,
            caps: self.caps.clone(),
            cosets: self
                .cosets
                .iter()
                .map(|(&k, p)| CosetTableJson {
                    rep: self.rep(k),
                    coeffs: p.terms().iter().map(|(m, c)| CoeffJson { idx: m.clone(), val: c.serialize() }).collect(),
                })
                .collect(),
        }
    }

    /// Parses against an existing field context, which must match.
    pub fn from_json_in(field: &Field, json: &LocPolyFunJson) -> Result<Self> {
        if json.field != field.descriptor() {
            return Err(Error::FieldMismatch(format!("{} vs {}", json.field, field.descriptor())));
        }
        let mut f =
            LocPolyFun { field: field.clone(), level: json.level, caps: json.caps.clone(), cosets: BTreeMap::new() };
        for table in &json.cosets {
            let mut poly = Poly::zero(field, field.degree());
            for c in &table.coeffs {
                if c.idx.len() != field.degree() {
                    return Err(Error::Parse(format!("index {:?} has the wrong length", c.idx)));
                }
                poly.add_term(c.idx.clone(), PadicScalar::parse(field, &c.val)?);
            }
            f.insert(&table.rep, poly)?;
        }
        Ok(f)
    }

    pub fn from_json(json: &LocPolyFunJson, precision: Option<u32>) -> Result<Self> {
        let field = FieldCtx::new(json.field, precision)?;
        Self::from_json_in(&field, json)
    }
}

fn merge_caps(a: &DegreeCaps, b: &DegreeCaps) -> DegreeCaps {
    if a == b {
        a.clone()
    } else {
        DegreeCaps::none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffJson {
    pub idx: MultiIndex,
    pub val: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetTableJson {
    pub rep: CosetRep,
    pub coeffs: Vec<CoeffJson>,
}

/// Interchange form of a [`LocPolyFun`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocPolyFunJson {
    pub field: FieldDescriptor,
    pub level: u32,
    #[serde(default)]
    pub caps: DegreeCaps,
    pub cosets: Vec<CosetTableJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::residue_system;
    use crate::field::FieldDescriptor;
    use proptest::prelude::*;

    fn field(p: u64, f: u32, e: u32) -> Field {
        FieldCtx::new(FieldDescriptor::new(p, f, e).unwrap(), Some(16)).unwrap()
    }

    #[test]
    fn indicator_evaluates_by_coset() {
        let k = field(2, 1, 1);
        let rep = CosetRep::new(vec![1]);
        let f = LocPolyFun::construct(&k, 1, DegreeCaps::none(), [(rep, Poly::constant(&k, 1, PadicScalar::one(&k)))])
            .unwrap();
        assert!(f.eval(&PadicScalar::from_i64(&k, 3)).unwrap().eq_to_precision(&PadicScalar::one(&k)));
        assert!(f.eval(&PadicScalar::from_i64(&k, 2)).unwrap().is_exact_zero());
    }

    #[test]
    fn derived_of_square() {
        let k = field(3, 1, 1);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[2]), PadicScalar::one(&k));
        let d = f.derived(&MultiIndex::new(&[1]));
        let t = d.tables().get(&0).unwrap();
        assert!(t.coeff(&MultiIndex::new(&[1])).unwrap().eq_to_precision(&PadicScalar::from_i64(&k, 2)));
        assert_eq!(t.terms().len(), 1);
    }

    #[test]
    fn caps_are_enforced() {
        let k = field(3, 2, 1);
        let caps = DegreeCaps { per_embedding: vec![None, Some(0)], total: None };
        let p = Poly::monomial(&k, MultiIndex::new(&[0, 1]), PadicScalar::one(&k));
        let err = LocPolyFun::construct(&k, 0, caps, [(CosetRep::zero(0), p)]).unwrap_err();
        assert!(matches!(err, Error::DegreeTooHigh(_)));
    }

    #[test]
    fn refine_then_coarsen_restores_level() {
        let k = field(3, 1, 2);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[1, 1]), PadicScalar::one(&k));
        let fine = f.refine(2).unwrap();
        assert_eq!(fine.tables().len(), 9);
        let back = fine.coarsen();
        assert_eq!(back.level(), 0);
        assert!(back.eq_to_precision(&f));
        for a in residue_system(&k, 2) {
            let z = a.to_scalar(&k);
            assert!(fine.eval(&z).unwrap().eq_to_precision(&f.eval(&z).unwrap()));
        }
    }

    #[test]
    fn fh_norm_of_monomial() {
        let k = field(3, 1, 1);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[2]), PadicScalar::one(&k));
        assert_eq!(f.fh_norm(0).unwrap(), Magnitude::one());
        // on 0 + 3Z_3 the table is z^2 itself: |1| q^{-2}; elsewhere a unit constant term
        assert_eq!(f.fh_norm(1).unwrap(), Magnitude::one());
    }

    #[test]
    fn json_roundtrip() {
        let k = field(5, 1, 1);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[3]), PadicScalar::from_i64(&k, 7)).refine(1).unwrap();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = LocPolyFun::from_json_in(&k, &serde_json::from_str(&text).unwrap()).unwrap();
        assert!(back.eq_to_precision(&f));
    }

    proptest! {
        #[test]
        fn product_rule_on_points(a in 0i64..50, b in 0i64..50, z in 0i64..200) {
            let k = field(5, 1, 1);
            let f = LocPolyFun::monomial(&k, MultiIndex::new(&[2]), PadicScalar::from_i64(&k, a)).refine(1).unwrap();
            let g = LocPolyFun::monomial(&k, MultiIndex::new(&[1]), PadicScalar::from_i64(&k, b));
            let pt = PadicScalar::from_i64(&k, z);
            let lhs = f.mul(&g).unwrap().eval(&pt).unwrap();
            let rhs = &f.eval(&pt).unwrap() * &g.eval(&pt).unwrap();
            prop_assert!(lhs.eq_to_precision(&rhs));
        }
    }

    #[test]
    fn remainder_examples() {
        let k = field(3, 2, 1);
        let r = Q::new(5, 2);
        let xs: Vec<PadicScalar> =
            (0..4).map(|t| PadicScalar::teichmuller(&k, t) + PadicScalar::from_i64(&k, 3 * t as i64)).collect();
        let ys: Vec<PadicScalar> =
            (0..4).map(|t| PadicScalar::teichmuller(&k, 2 * t + 1).mul_pi_pow(t as i64)).collect();
        let low = LocPolyFun::monomial(&k, MultiIndex::new(&[1, 1]), PadicScalar::from_i64(&k, 4))
            .add(&LocPolyFun::monomial(&k, MultiIndex::new(&[0, 2]), PadicScalar::one(&k)))
            .unwrap();
        let m = MultiIndex::new(&[2, 2]);
        let high = LocPolyFun::monomial(&k, m.clone(), PadicScalar::one(&k));
        for x in &xs {
            assert!(high.remainder(r, x, &PadicScalar::zero(&k)).unwrap().is_zero());
            for y in &ys {
                assert!(low.remainder(r, x, y).unwrap().is_zero());
                // Σ_{l ≤ m, |l| > 2} binom(m, l) y^l x^{m - l}
                let (xe, ye) = (embed_all(&k, x), embed_all(&k, y));
                let mut expect = PadicScalar::zero(&k);
                for l in m.lower_set().into_iter().filter(|l| l.degree() > 2) {
                    let rest = m.checked_sub(&l).unwrap();
                    expect = expect + PadicScalar::from_u128(&k, m.binom(&l)) * l.monomial(&ye) * rest.monomial(&xe);
                }
                assert!(high.remainder(r, x, y).unwrap().eq_to_precision(&expect));
            }
        }
    }

    #[test]
    fn boundary_profile_sets() {
        let bp = BoundaryProfile::new(vec![None, Some(1), Some(3)]);
        assert_eq!(bp.j_prime(Q::from_integer(2)), vec![true, false, true]);
        assert_eq!(bp.j_prime(Q::new(3, 2)), vec![true, true, true]);
        assert!(bp.in_y(&MultiIndex::new(&[7, 1, 3])));
        assert!(!bp.in_y(&MultiIndex::new(&[0, 2, 0])));
        assert!(bp.in_y_prime(&MultiIndex::new(&[0, 0, 9]), Q::from_integer(2)));
        assert!(!bp.in_y_prime(&MultiIndex::new(&[0, 2, 0]), Q::from_integer(2)));
    }

    #[test]
    fn subspace_examples() {
        let k = field(3, 2, 1);
        let r = Q::from_integer(3);
        let bp = BoundaryProfile::new(vec![Some(1), None]);
        let capped = LocPolyFun::monomial(&k, MultiIndex::new(&[1, 5]), PadicScalar::one(&k));
        assert!(capped.in_subspace(r, &bp).unwrap());
        let pure = LocPolyFun::monomial(&k, MultiIndex::new(&[2, 0]), PadicScalar::one(&k));
        assert!(!pure.in_subspace(r, &bp).unwrap());
        // d_σ + 1 > r puts σ in J′, so nothing is required
        assert!(pure.in_subspace(Q::new(3, 2), &bp).unwrap());
        assert!(matches!(pure.in_subspace(r, &BoundaryProfile::full(3)), Err(Error::InvalidParameters(_))));
    }
}
