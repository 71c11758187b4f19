//! Distributions on `O_F` given by their moments
//! `∫_{a + ϖ^n O_F} ((z - a)/ϖ^n)^i μ(z)`, the growth criterion for extending
//! them to `C^r`, and the pairing with locally polynomial functions.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::crnorm::RationalJson;
use crate::embed::{coset_of, embed_all, residue_system, CosetRep};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::locpoly::LocPolyFun;
use crate::multiindex::{binom_u128, index_set, IndexBound, MultiIndex};
use crate::padic::{Magnitude, PadicScalar, Q};
use crate::wavelet::{basis_coefficient, pi_power, WaveletCoeffs};

/// A distribution known through its moments on cosets.
///
/// Implementations must be safe to query from several threads.
pub trait MomentOracle: Send + Sync {
    fn field(&self) -> &Field;

    /// Largest total degree `N` of the moments on offer.
    fn max_degree(&self) -> u32;

    /// `∫_{a + ϖ^n O_F} ((z - a)/ϖ^n)^i μ(z)` where `n = a.level()`.
    fn moment(&self, a: &CosetRep, i: &MultiIndex) -> Result<PadicScalar>;

    /// The admissible moment indices.
    fn indices(&self) -> IndexBound {
        IndexBound::at_most(self.field().degree(), self.max_degree())
    }

    /// Cosets of level `n` outside of which all moments vanish, when known.
    fn support(&self, _n: u32) -> Option<Vec<CosetRep>> {
        None
    }
}

fn cosets_at<O: MomentOracle + ?Sized>(mu: &O, n: u32) -> Vec<CosetRep> {
    mu.support(n).unwrap_or_else(|| residue_system(mu.field(), n))
}

fn moment_indices<O: MomentOracle + ?Sized>(mu: &O) -> Result<Vec<MultiIndex>> {
    index_set(&mu.indices())
}

/// Point mass at an integral point.
#[derive(Clone, Debug)]
pub struct Dirac {
    field: Field,
    point: PadicScalar,
    degree: u32,
}

impl Dirac {
    pub fn new(point: PadicScalar, degree: u32) -> Result<Self> {
        if !point.is_integral() {
            return Err(Error::InvalidParameters("point mass outside O_F".into()));
        }
        Ok(Dirac { field: point.field().clone(), point, degree })
    }

    pub fn point(&self) -> &PadicScalar {
        &self.point
    }
}

impl MomentOracle for Dirac {
    fn field(&self) -> &Field {
        &self.field
    }

    fn max_degree(&self) -> u32 {
        self.degree
    }

    fn moment(&self, a: &CosetRep, i: &MultiIndex) -> Result<PadicScalar> {
        let n = a.level();
        if coset_of(&self.point, n)? != *a {
            return Ok(PadicScalar::zero(&self.field));
        }
        let w = (&self.point - &a.to_scalar(&self.field)).mul_pi_pow(-(n as i64));
        Ok(i.monomial(&embed_all(&self.field, &w)))
    }

    fn support(&self, n: u32) -> Option<Vec<CosetRep>> {
        coset_of(&self.point, n).ok().map(|c| vec![c])
    }
}

/// `Σ_{t < N} t^s` for `s = 0..=degree`, from
/// `(s + 1) S_s = N^{s+1} - Σ_{j<s} binom(s+1, j) S_j`.
pub fn power_sums(count: &BigInt, degree: u32) -> Vec<BigInt> {
    let mut sums: Vec<BigInt> = Vec::with_capacity(degree as usize + 1);
    let mut power = count.clone();
    for s in 0..=degree {
        let mut acc = power.clone();
        for (j, sj) in sums.iter().enumerate() {
            acc -= BigInt::from(binom_u128(s + 1, j as u32)) * sj;
        }
        sums.push(acc / BigInt::from(s + 1));
        power *= count;
    }
    sums
}

/// `∫_{Z_p} z^s dz` for `s ≤ degree`, as limits of the Riemann sums
/// `p^{-k} Σ_{t < p^k} t^s`, stopped once two successive sums agree to the
/// working precision.
pub fn volkenborn_moments(field: &Field, degree: u32) -> Result<Vec<PadicScalar>> {
    if field.degree() != 1 {
        return Err(Error::UnsupportedField("Riemann-sum moments need F = Q_p".into()));
    }
    let p = BigInt::from(field.p());
    let limit = 4 * field.precision() + 8;
    let mut count = BigInt::one();
    let mut prev: Option<Vec<PadicScalar>> = None;
    let mut agreed = 0;
    for k in 1..=limit {
        count *= &p;
        let approx: Vec<PadicScalar> = power_sums(&count, degree)
            .iter()
            .map(|s| PadicScalar::from_bigint(field, s).mul_pi_pow(-(k as i64)))
            .collect();
        let same = prev.as_ref().is_some_and(|old| old.iter().zip(&approx).all(|(a, b)| a.eq_to_precision(b)));
        agreed = if same { agreed + 1 } else { 0 };
        if agreed >= 2 {
            return Ok(approx);
        }
        prev = Some(approx);
    }
    Err(Error::PrecisionExhausted("Riemann sums did not stabilize".into()))
}

/// The Volkenborn functional on `Z_p`: the limit of Riemann sums over the
/// integer representatives `0..p^k`.
#[derive(Clone, Debug)]
pub struct Haar {
    field: Field,
    degree: u32,
    base: Vec<PadicScalar>,
}

impl Haar {
    pub fn new(field: &Field, degree: u32) -> Result<Self> {
        let base = volkenborn_moments(field, degree)?;
        Ok(Haar { field: field.clone(), degree, base })
    }

    /// `∫_{Z_p} z^s dz`.
    pub fn base_moment(&self, s: u32) -> Option<&PadicScalar> {
        self.base.get(s as usize)
    }
}

impl MomentOracle for Haar {
    fn field(&self) -> &Field {
        &self.field
    }

    fn max_degree(&self) -> u32 {
        self.degree
    }

    fn moment(&self, a: &CosetRep, i: &MultiIndex) -> Result<PadicScalar> {
        // With z = a_int + p^n t, the coset integral is
        // p^{-n} Σ_s binom(i, s) δ^{i-s} ∫ t^s, δ = (a_int - a)/p^n.
        let k = &self.field;
        let n = a.level();
        let deg = i.get(0);
        if deg > self.degree {
            return Err(Error::DegreeTooHigh(format!("moment of degree {deg} above {}", self.degree)));
        }
        let rep = a.to_scalar(k);
        let a_int = rep.to_integral_raw(n).map_or(0, |raw| raw[0]);
        let delta = (&PadicScalar::from_u128(k, a_int as u128) - &rep).mul_pi_pow(-(n as i64));
        let mut acc = PadicScalar::zero(k);
        for s in 0..=deg {
            let term = &delta.pow(deg - s) * &self.base[s as usize];
            acc = &acc + &(&PadicScalar::from_u128(k, binom_u128(deg, s)) * &term);
        }
        Ok(acc.mul_pi_pow(-(n as i64)))
    }
}

/// `λ μ`.
pub struct Scaled<O> {
    pub inner: O,
    pub factor: PadicScalar,
}

impl<O: MomentOracle> MomentOracle for Scaled<O> {
    fn field(&self) -> &Field {
        self.inner.field()
    }

    fn max_degree(&self) -> u32 {
        self.inner.max_degree()
    }

    fn moment(&self, a: &CosetRep, i: &MultiIndex) -> Result<PadicScalar> {
        Ok(&self.inner.moment(a, i)? * &self.factor)
    }

    fn indices(&self) -> IndexBound {
        self.inner.indices()
    }

    fn support(&self, n: u32) -> Option<Vec<CosetRep>> {
        self.inner.support(n)
    }
}

/// Moments read from a table; absent entries are zero.
#[derive(Clone, Debug)]
pub struct MomentTable {
    field: Field,
    degree: u32,
    entries: BTreeMap<(CosetRep, MultiIndex), PadicScalar>,
    levels: BTreeMap<u32, BTreeSet<CosetRep>>,
}

/// One row of a moment file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentEntryJson {
    pub a: CosetRep,
    pub n: u32,
    pub i: MultiIndex,
    pub val: String,
}

impl MomentTable {
    pub fn new(field: &Field, degree: u32) -> Self {
        MomentTable { field: field.clone(), degree, entries: BTreeMap::new(), levels: BTreeMap::new() }
    }

    pub fn insert(&mut self, a: CosetRep, i: MultiIndex, val: PadicScalar) -> Result<()> {
        a.validate(&self.field)?;
        if i.len() != self.field.degree() {
            return Err(Error::InvalidParameters(format!("moment index {i:?} has the wrong length")));
        }
        if i.degree() > self.degree {
            return Err(Error::DegreeTooHigh(format!("moment index {i:?} above degree {}", self.degree)));
        }
        self.levels.entry(a.level()).or_default().insert(a.clone());
        self.entries.insert((a, i), val);
        Ok(())
    }

    /// Copies every moment of `mu` on cosets of level `≤ depth`.
    pub fn tabulate<O: MomentOracle + ?Sized>(mu: &O, depth: u32) -> Result<Self> {
        let mut table = MomentTable::new(mu.field(), mu.max_degree());
        let indices = moment_indices(mu)?;
        for n in 0..=depth {
            for a in cosets_at(mu, n) {
                for i in &indices {
                    let v = mu.moment(&a, i)?;
                    if !v.is_exact_zero() {
                        table.insert(a.clone(), i.clone(), v)?;
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn to_json(&self) -> Vec<MomentEntryJson> {
        self.entries
            .iter()
            .map(|((a, i), v)| MomentEntryJson { a: a.clone(), n: a.level(), i: i.clone(), val: v.serialize() })
            .collect()
    }

    /// Reads rows; the degree is the largest index degree unless given.
    pub fn from_json(field: &Field, rows: &[MomentEntryJson], degree: Option<u32>) -> Result<Self> {
        let top = rows.iter().map(|r| r.i.degree()).max().unwrap_or(0);
        let mut table = MomentTable::new(field, degree.unwrap_or(top));
        for row in rows {
            if row.a.level() != row.n {
                return Err(Error::Parse(format!("coset {:?} is not of level {}", row.a.digits, row.n)));
            }
            table.insert(row.a.clone(), row.i.clone(), PadicScalar::parse(field, &row.val)?)?;
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_level(&self) -> u32 {
        self.levels.keys().next_back().copied().unwrap_or(0)
    }
}

impl MomentOracle for MomentTable {
    fn field(&self) -> &Field {
        &self.field
    }

    fn max_degree(&self) -> u32 {
        self.degree
    }

    fn moment(&self, a: &CosetRep, i: &MultiIndex) -> Result<PadicScalar> {
        Ok(self.entries.get(&(a.clone(), i.clone())).cloned().unwrap_or_else(|| PadicScalar::zero(&self.field)))
    }

    fn support(&self, n: u32) -> Option<Vec<CosetRep>> {
        Some(self.levels.get(&n).map(|s| s.iter().cloned().collect()).unwrap_or_default())
    }
}

/// A coset and moment index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentWitness {
    pub a: CosetRep,
    pub n: u32,
    pub i: MultiIndex,
}

impl MomentWitness {
    fn new(a: &CosetRep, i: &MultiIndex) -> Self {
        MomentWitness { a: a.clone(), n: a.level(), i: i.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditivityReport {
    pub depth: u32,
    pub checked: u64,
    /// First identity that fails, with the size of the mismatch.
    pub failure: Option<(MomentWitness, Magnitude)>,
}

impl AdditivityReport {
    pub fn valid(&self) -> bool {
        self.failure.is_none()
    }
}

/// Expresses `((z - a)/ϖ^n)^i` on the child `a + t ϖ^n` through the child
/// moments: `Σ_{k ≤ i} binom(i, k) ϖ^{k} σ(teich t)^{i - k} ((z - b)/ϖ^{n+1})^k`.
fn recentered(
    field: &Field,
    i: &MultiIndex,
    digit: u32,
    child: &dyn Fn(&MultiIndex) -> Result<PadicScalar>,
) -> Result<PadicScalar> {
    let shift = embed_all(field, &PadicScalar::teichmuller(field, digit as u64));
    let mut acc = PadicScalar::zero(field);
    for k in i.lower_set() {
        let rest = i.checked_sub(&k).expect("k from the lower set");
        let m = child(&k)?;
        if m.is_exact_zero() {
            continue;
        }
        let c = &(&pi_power(field, 1, &k) * &rest.monomial(&shift)) * &PadicScalar::from_u128(field, i.binom(&k));
        acc = &acc + &(&c * &m);
    }
    Ok(acc)
}

/// Checks that every moment at level `n < depth` equals the sum of the
/// re-centered moments on its children.
pub fn validate_additivity<O: MomentOracle + ?Sized>(mu: &O, depth: u32) -> Result<AdditivityReport> {
    let field = mu.field();
    let indices = moment_indices(mu)?;
    let mut checked = 0;
    for n in 0..depth {
        let parents = cosets_at(mu, n);
        let known: Option<BTreeSet<CosetRep>> = mu.support(n + 1).map(|s| s.into_iter().collect());
        for a in parents {
            let children: Vec<u32> =
                (0..field.q() as u32).filter(|&t| known.as_ref().is_none_or(|s| s.contains(&a.child(t)))).collect();
            for i in &indices {
                let whole = mu.moment(&a, i)?;
                let mut parts = PadicScalar::zero(field);
                for &t in &children {
                    let b = a.child(t);
                    parts = &parts + &recentered(field, i, t, &|k| mu.moment(&b, k))?;
                }
                checked += 1;
                if !whole.eq_to_precision(&parts) {
                    let gap = (&whole - &parts).abs_upper();
                    return Ok(AdditivityReport { depth, checked, failure: Some((MomentWitness::new(&a, i), gap)) });
                }
            }
        }
    }
    Ok(AdditivityReport { depth, checked, failure: None })
}

/// `|moment| q^{-nr}` over the checked range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvvReport {
    pub r: Q,
    pub degree: u32,
    pub depth: u32,
    /// `max_{a, i} |moment(a, i)| q^{-nr}` for `n = 0..=depth`.
    pub envelope: Vec<Magnitude>,
    pub c_estimate: Magnitude,
    pub witness: Option<MomentWitness>,
    /// Whether the envelope past `depth / 2` stays below its maximum up to `depth / 2`.
    pub pass: bool,
    /// The largest ratio at the deepest level, when the envelope grows.
    pub growth_witness: Option<MomentWitness>,
}

/// Growth check of the moments against `q^{nr}` for cosets up to `depth`.
/// The verdict only covers the checked range.
pub fn avv_check<O: MomentOracle + ?Sized>(mu: &O, r: Q, depth: u32) -> Result<AvvReport> {
    let field = mu.field();
    if r < Q::zero() {
        return Err(Error::InvalidParameters("negative order".into()));
    }
    let n_deg = mu.max_degree();
    if (n_deg as i64) < r.floor().to_integer() {
        return Err(Error::InvalidParameters(format!("moment degree {n_deg} below [r]")));
    }
    let indices = moment_indices(mu)?;
    let mut envelope = Vec::with_capacity(depth as usize + 1);
    let mut level_best = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let scale = Magnitude::q_pow(field, -r * n as i64);
        let mut best = Magnitude::ZERO;
        let mut fuzzy = Magnitude::ZERO;
        let mut arg = None;
        for a in cosets_at(mu, n) {
            for i in &indices {
                let m = mu.moment(&a, i)?;
                if !m.abs().exact {
                    fuzzy = fuzzy.max(m.abs_upper());
                    continue;
                }
                let v = m.abs_upper().mul(scale);
                if v > best || arg.is_none() {
                    best = v;
                    arg = Some(MomentWitness::new(&a, i));
                }
            }
        }
        if fuzzy.mul(scale) > best {
            return Err(Error::PrecisionExhausted(format!("moment size at level {n} undecided")));
        }
        envelope.push(best);
        level_best.push(arg);
    }
    let (c_estimate, at) =
        envelope.iter().enumerate().fold((Magnitude::ZERO, 0), |(m, k), (n, &v)| if v > m { (v, n) } else { (m, k) });
    let half = depth as usize / 2;
    let early = envelope[..=half].iter().copied().fold(Magnitude::ZERO, Magnitude::max);
    let late = envelope[half + 1..].iter().copied().fold(Magnitude::ZERO, Magnitude::max);
    let pass = late <= early;
    let growth_witness = if pass { None } else { level_best[depth as usize].clone() };
    Ok(AvvReport {
        r,
        degree: n_deg,
        depth,
        envelope,
        c_estimate,
        witness: level_best[at].clone(),
        pass,
        growth_witness,
    })
}

/// `‖μ‖_{r,N}` over the checked range: the lower end is attained, the upper
/// end is the same value when the envelope has levelled off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualNorm {
    pub lower: Magnitude,
    pub upper: Option<Magnitude>,
    pub witness: Option<MomentWitness>,
}

pub fn dual_norm<O: MomentOracle + ?Sized>(mu: &O, r: Q, depth: u32) -> Result<DualNorm> {
    let report = avv_check(mu, r, depth)?;
    Ok(DualNorm { lower: report.c_estimate, upper: report.pass.then_some(report.c_estimate), witness: report.witness })
}

/// `∫ f μ`, expanding each coset table in the moment monomials.
pub fn pair<O: MomentOracle + ?Sized>(mu: &O, f: &LocPolyFun) -> Result<PadicScalar> {
    let field = mu.field();
    if f.field().descriptor() != field.descriptor() {
        return Err(Error::FieldMismatch("pairing across fields".into()));
    }
    let bound = mu.indices();
    let h = f.level();
    let mut acc = PadicScalar::zero(field);
    for (&key, poly) in f.tables() {
        let a = f.rep(key);
        for (m, c) in poly.terms() {
            if c.is_exact_zero() {
                continue;
            }
            if !bound.contains(m) {
                return Err(Error::DegreeTooHigh(format!("index {m:?} outside the moment range")));
            }
            let term = &(c * &pi_power(field, h, m)) * &mu.moment(&a, m)?;
            acc = &acc + &term;
        }
    }
    Ok(acc)
}

/// `Σ c_{a,i} μ(e_{a,i,r})`.
pub fn extend_pair<O: MomentOracle + ?Sized>(mu: &O, coeffs: &WaveletCoeffs) -> Result<PadicScalar> {
    let field = mu.field();
    if coeffs.field().descriptor() != field.descriptor() {
        return Err(Error::FieldMismatch("pairing across fields".into()));
    }
    let r = coeffs.r();
    if (mu.max_degree() as i64) < r.floor().to_integer() {
        return Err(Error::DegreeTooHigh(format!("moments of degree ≤ {} cannot pair with [r]", mu.max_degree())));
    }
    let mut acc = PadicScalar::zero(field);
    for (a, i, b) in coeffs.entries() {
        let l = a.level();
        let scale = &basis_coefficient(field, l, i, r) * &pi_power(field, l, i);
        acc = &acc + &(&(b * &scale) * &mu.moment(&a, i)?);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvvReportJson {
    pub r: RationalJson,
    pub degree: u32,
    pub depth: u32,
    /// `log_q` of the envelope per level, `null` where all moments vanish.
    pub log_q_envelope: Vec<Option<RationalJson>>,
    pub log_q_c_estimate: Option<RationalJson>,
    pub witness: Option<MomentWitness>,
    pub pass: bool,
    pub growth_witness: Option<MomentWitness>,
}

impl AvvReport {
    pub fn to_json(&self, field: &Field) -> AvvReportJson {
        AvvReportJson {
            r: self.r.into(),
            degree: self.degree,
            depth: self.depth,
            log_q_envelope: self.envelope.iter().map(|m| m.log_q(field).map(Into::into)).collect(),
            log_q_c_estimate: self.c_estimate.log_q(field).map(Into::into),
            witness: self.witness.clone(),
            pass: self.pass,
            growth_witness: self.growth_witness.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldCtx, FieldDescriptor};
    use crate::padic::rat;

    fn field(p: u64, f: u32, e: u32) -> Field {
        FieldCtx::new(FieldDescriptor::new(p, f, e).unwrap(), Some(20)).unwrap()
    }

    fn brute_power_sum(count: u64, s: u32) -> BigInt {
        (0..count).map(|t| BigInt::from(t).pow(s)).sum()
    }

    #[test]
    fn power_sums_match_direct_sums() {
        for count in [1u64, 2, 9, 25, 27] {
            let sums = power_sums(&BigInt::from(count), 5);
            for (s, v) in sums.iter().enumerate() {
                assert_eq!(*v, brute_power_sum(count, s as u32), "count {count} s {s}");
            }
        }
    }

    #[test]
    fn haar_first_moment_is_minus_half() {
        for p in [3u64, 5] {
            let k = field(p, 1, 1);
            let haar = Haar::new(&k, 2).unwrap();
            let half = PadicScalar::from_ratio(&k, -1, 2).unwrap();
            let gap = haar.base_moment(1).unwrap() - &half;
            assert!(gap.is_zero() || gap.pi_valuation().unwrap() >= 10);
            assert!(gap.absolute_precision().unwrap() >= 10);
            // ∫ z^2 = 1/6
            let sixth = PadicScalar::from_ratio(&k, 1, 6).unwrap();
            assert!(haar.base_moment(2).unwrap().eq_to_precision(&sixth));
        }
    }

    #[test]
    fn haar_coset_moments_match_riemann_sums() {
        // p^{-m} Σ_{x ≡ a mod p^n, x < p^m} ((x - a)/p^n)^i, brute force at m = 7
        let k = field(3, 1, 1);
        let haar = Haar::new(&k, 2).unwrap();
        let m = 7u32;
        for n in 0..3u32 {
            for a in residue_system(&k, n) {
                let rep = a.to_scalar(&k);
                for i in 0..=2u32 {
                    let mut sum = PadicScalar::zero(&k);
                    for x in 0..3u64.pow(m) {
                        let z = PadicScalar::from_i64(&k, x as i64);
                        if coset_of(&z, n).unwrap() != a {
                            continue;
                        }
                        sum = &sum + &(&z - &rep).mul_pi_pow(-(n as i64)).pow(i);
                    }
                    let approx = sum.mul_pi_pow(-(m as i64));
                    let exact = haar.moment(&a, &MultiIndex::new(&[i])).unwrap();
                    let gap = &approx - &exact;
                    let v = if gap.is_zero() { i64::MAX } else { gap.pi_valuation().unwrap() };
                    assert!(v >= m as i64 - 2 * n as i64 - 2, "n {n} a {:?} i {i}: gap valuation {v}", a.digits);
                }
            }
        }
    }

    #[test]
    fn builtins_are_additive() {
        let k = field(3, 1, 1);
        let haar = Haar::new(&k, 2).unwrap();
        assert!(validate_additivity(&haar, 4).unwrap().valid());
        let q2 = field(3, 2, 1);
        let point = &PadicScalar::teichmuller(&q2, 4) + &PadicScalar::uniformizer(&q2);
        let dirac = Dirac::new(point, 2).unwrap();
        assert!(validate_additivity(&dirac, 4).unwrap().valid());
        let zero = Dirac::new(PadicScalar::zero(&k), 3).unwrap();
        assert!(validate_additivity(&zero, 6).unwrap().valid());
    }

    #[test]
    fn corrupted_entry_is_reported() {
        let k = field(3, 1, 1);
        let haar = Haar::new(&k, 1).unwrap();
        let mut table = MomentTable::tabulate(&haar, 3).unwrap();
        let bad = CosetRep::new(vec![2, 1]);
        let i = MultiIndex::new(&[1]);
        let v = &haar.moment(&bad, &i).unwrap() + &PadicScalar::one(&k);
        table.insert(bad.clone(), i.clone(), v).unwrap();
        let report = validate_additivity(&table, 3).unwrap();
        let (w, _) = report.failure.unwrap();
        assert_eq!(w.a, bad.truncate(1));
        assert_eq!(w.i, i);
    }

    #[test]
    fn avv_examples() {
        let k = field(3, 1, 1);
        for r in [rat(0, 1), rat(1, 2), rat(1, 1), rat(5, 3), rat(2, 1)] {
            let dirac = Dirac::new(PadicScalar::zero(&k), r.floor().to_integer() as u32).unwrap();
            let rep = avv_check(&dirac, r, 6).unwrap();
            assert!(rep.pass);
            assert_eq!(rep.c_estimate, Magnitude::one());
        }
        let haar = Haar::new(&k, 1).unwrap();
        let rep = avv_check(&haar, rat(1, 1), 5).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.c_estimate, Magnitude::one());
        assert!(rep.envelope.iter().all(|m| *m == Magnitude::one()));
        let haar0 = Haar::new(&k, 0).unwrap();
        let rep = avv_check(&haar0, rat(1, 2), 6).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.growth_witness.as_ref().unwrap().n, 6);
        assert_eq!(rep.envelope[6], Magnitude::q_pow(&k, rat(3, 1)));
    }

    #[test]
    fn dual_norm_of_multiples() {
        let k = field(5, 1, 1);
        let haar = Haar::new(&k, 1).unwrap();
        let base = dual_norm(&haar, rat(1, 1), 3).unwrap();
        assert_eq!(base.lower, Magnitude::one());
        assert_eq!(base.upper, Some(Magnitude::one()));
        let two = Scaled { inner: haar.clone(), factor: PadicScalar::from_i64(&k, 2) };
        assert_eq!(dual_norm(&two, rat(1, 1), 3).unwrap(), base);
        let five = Scaled { inner: haar, factor: PadicScalar::from_i64(&k, 5) };
        assert_eq!(dual_norm(&five, rat(1, 1), 3).unwrap().lower, Magnitude::q_pow(&k, rat(-1, 1)));
    }

    #[test]
    fn pairing_examples() {
        let k = field(5, 1, 1);
        let haar = Haar::new(&k, 2).unwrap();
        let one = LocPolyFun::monomial(&k, MultiIndex::new(&[0]), PadicScalar::one(&k));
        assert!(pair(&haar, &one).unwrap().eq_to_precision(&PadicScalar::one(&k)));
        let z = LocPolyFun::monomial(&k, MultiIndex::new(&[1]), PadicScalar::one(&k));
        let half = PadicScalar::from_ratio(&k, -1, 2).unwrap();
        assert!(pair(&haar, &z).unwrap().eq_to_precision(&half));
        // refining does not change the pairing
        assert!(pair(&haar, &z.refine(2).unwrap()).unwrap().eq_to_precision(&half));
        let dirac = Dirac::new(PadicScalar::zero(&k), 2).unwrap();
        assert!(pair(&dirac, &z).unwrap().is_zero());
        let z3 = LocPolyFun::monomial(&k, MultiIndex::new(&[3]), PadicScalar::one(&k));
        assert!(matches!(pair(&haar, &z3), Err(Error::DegreeTooHigh(_))));
    }

    #[test]
    fn table_json_roundtrip() {
        let k = field(3, 1, 1);
        let haar = Haar::new(&k, 1).unwrap();
        let table = MomentTable::tabulate(&haar, 2).unwrap();
        let rows = table.to_json();
        let text = serde_json::to_string(&rows).unwrap();
        let back: Vec<MomentEntryJson> = serde_json::from_str(&text).unwrap();
        let again = MomentTable::from_json(&k, &back, None).unwrap();
        assert_eq!(again.len(), table.len());
        assert!(validate_additivity(&again, 2).unwrap().valid());
    }
}
