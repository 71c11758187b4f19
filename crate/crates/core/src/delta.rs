//! Difference operators on global polynomials in the embedded coordinates,
//! recovery of top-degree coefficients from iterated differences, and probes
//! of the sup-norm inequalities on shrinking discs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crnorm::{sup_abs, RationalJson, SupInterval};
use crate::embed::CosetRep;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::locpoly::LocPolyFun;
use crate::multiindex::MultiIndex;
use crate::padic::{Magnitude, PadicScalar, Q};
use crate::poly::Poly;
use crate::wavelet::pi_power;

/// `Δ_{τ,h} P(z) = P(…, τ(z) + τ(ϖ^h), …) - P(z)`, exactly on coefficients.
pub fn delta_tau(p: &Poly, tau: usize, h: u32) -> Poly {
    let field = p.field();
    let mut shift = vec![PadicScalar::zero(field); p.nvars()];
    shift[tau] = PadicScalar::uniformizer_pow(field, h as i64).embed(field.embeddings()[tau]);
    p.translate(&shift).sub(p).pruned()
}

/// `Δ_{m,h} = Δ_{σ_1,h}^{m_1} ∘ … ∘ Δ_{σ_d,h}^{m_d}`.
pub fn delta_multi(p: &Poly, m: &MultiIndex, h: u32) -> Poly {
    let mut out = p.clone();
    for tau in (0..m.len()).rev() {
        for _ in 0..m.get(tau) {
            out = delta_tau(&out, tau, h);
        }
    }
    out
}

/// `P = Σ a_i z^i / i!`.
#[derive(Clone, Debug)]
pub struct DividedPowers {
    field: Field,
    coeffs: BTreeMap<MultiIndex, PadicScalar>,
}

impl DividedPowers {
    pub fn new(field: &Field, coeffs: impl IntoIterator<Item = (MultiIndex, PadicScalar)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (m, a) in coeffs {
            if m.len() != field.degree() {
                return Err(Error::InvalidParameters(format!("index {m:?} has the wrong length")));
            }
            if !a.is_zero() {
                map.insert(m, a);
            }
        }
        Ok(DividedPowers { field: field.clone(), coeffs: map })
    }

    /// Reads `a_i = i! c_i` off an ordinary presentation `Σ c_i z^i`.
    pub fn from_poly(p: &Poly) -> Self {
        let field = p.field().clone();
        let coeffs = p
            .terms()
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m.clone(), c * &PadicScalar::from_u128(&field, m.factorial())))
            .collect();
        DividedPowers { field, coeffs }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, PadicScalar> {
        &self.coeffs
    }

    pub fn coeff(&self, m: &MultiIndex) -> PadicScalar {
        self.coeffs.get(m).cloned().unwrap_or_else(|| PadicScalar::zero(&self.field))
    }

    /// `N`, the largest total degree present.
    pub fn top_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|m| m.degree()).max()
    }

    /// `N_2`, the smallest total degree present.
    pub fn bottom_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|m| m.degree()).min()
    }

    pub fn to_poly(&self) -> Result<Poly> {
        let mut p = Poly::zero(&self.field, self.field.degree());
        for (m, a) in &self.coeffs {
            let c = a.checked_div(&PadicScalar::from_u128(&self.field, m.factorial()))?;
            p.add_term(m.clone(), c);
        }
        Ok(p)
    }

    /// Coefficientwise equality to precision.
    pub fn eq_to_precision(&self, other: &DividedPowers) -> bool {
        self.coeffs.keys().chain(other.coeffs.keys()).all(|m| self.coeff(m).eq_to_precision(&other.coeff(m)))
    }
}

/// `ϖ^{-mh} Δ_{m,h} P(z)` for `|m| = N`, which is `a_m` whatever `h` and `z`.
pub fn recover_leading(p: &DividedPowers, m: &MultiIndex, h: u32, z: &PadicScalar) -> Result<PadicScalar> {
    let top = p.top_degree().unwrap_or(0);
    if m.degree() != top {
        return Err(Error::NotTopDegree(format!("|{m:?}| = {} but N = {top}", m.degree())));
    }
    recover_at(&p.to_poly()?, m, h, z)
}

fn recover_at(poly: &Poly, m: &MultiIndex, h: u32, z: &PadicScalar) -> Result<PadicScalar> {
    let field = poly.field();
    let diff = delta_multi(poly, m, h);
    let coords = crate::embed::embed_all(field, z);
    diff.eval(&coords).checked_div(&pi_power(field, h, m))
}

/// All coefficients by peeling: recover the top layer, subtract it, repeat.
pub fn recover_all(p: &DividedPowers, h: u32, z: &PadicScalar) -> Result<DividedPowers> {
    let field = p.field().clone();
    let mut rest = p.to_poly()?;
    let mut found = Vec::new();
    while let Some(n) = rest.pruned().degree() {
        let layer: Vec<MultiIndex> = rest.pruned().terms().keys().filter(|m| m.degree() == n).cloned().collect();
        for m in layer {
            let a = recover_at(&rest, &m, h, z)?;
            let c = a.checked_div(&PadicScalar::from_u128(&field, m.factorial()))?;
            rest = rest.sub(&Poly::monomial(&field, m.clone(), c)).pruned();
            found.push((m, a));
        }
    }
    DividedPowers::new(&field, found)
}

/// One `h` of the probe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeRow {
    pub h: u32,
    /// `sup_{ϖ^h O_F} |P|`.
    pub sup_disc: SupInterval,
    /// Certified lower bound on `sup_{ϖ^h O_F} |P| / (q^{-h N_2} sup_{O_F} |P|)`.
    pub shrink_ratio: Magnitude,
    /// Certified upper bound on `max_{|m| = N} |a_m| q^{-hN} / sup_{ϖ^h O_F} |P|`.
    pub top_ratio: Magnitude,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub top_degree: u32,
    pub bottom_degree: u32,
    pub sup_whole: SupInterval,
    pub rows: Vec<ProbeRow>,
    /// Smallest shrink ratio over the first half of the range.
    pub c_shrink: Magnitude,
    /// Largest top ratio over the first half of the range.
    pub c_top: Magnitude,
    /// Values of `h` in the second half where a constant from the first half fails.
    pub violations: Vec<u32>,
}

impl ProbeReport {
    pub fn bounded(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Both disc inequalities over `h ∈ hs`, with sups enumerated `depth` digits
/// below each disc.
pub fn inequality_probe(p: &DividedPowers, hs: &[u32], depth: u32) -> Result<ProbeReport> {
    let field = p.field().clone();
    if hs.is_empty() {
        return Err(Error::InvalidParameters("empty range of h".into()));
    }
    let n1 = p.top_degree().ok_or_else(|| Error::InvalidParameters("zero polynomial".into()))?;
    let n2 = p.bottom_degree().unwrap_or(0);
    let f = LocPolyFun::global(&field, p.to_poly()?);
    let sup_whole = sup_abs(&f, &CosetRep::zero(0), depth)?;
    let top = p
        .coeffs()
        .iter()
        .filter(|(m, _)| m.degree() == n1)
        .map(|(_, a)| a.abs_upper())
        .fold(Magnitude::ZERO, Magnitude::max);
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let sup_disc = sup_abs(&f, &CosetRep::zero(h), h + depth)?;
        if sup_disc.lower.is_zero() {
            return Err(Error::DepthInsufficient(format!("no lower bound on the disc of level {h}")));
        }
        let hq = Q::from_integer(h as i64);
        let shrink_ratio = sup_disc
            .lower
            .div(Magnitude::q_pow(&field, -hq * n2 as i64).mul(sup_whole.upper))
            .ok_or_else(|| Error::DepthInsufficient("zero sup on O_F".into()))?;
        let top_ratio =
            top.mul(Magnitude::q_pow(&field, -hq * n1 as i64)).div(sup_disc.lower).expect("nonzero lower bound");
        rows.push(ProbeRow { h, sup_disc, shrink_ratio, top_ratio });
    }
    let half = rows.len().div_ceil(2);
    let c_shrink = rows[..half].iter().map(|r| r.shrink_ratio).min().expect("nonempty");
    let c_top = rows[..half].iter().map(|r| r.top_ratio).max().expect("nonempty");
    let violations =
        rows[half..].iter().filter(|r| r.shrink_ratio < c_shrink || r.top_ratio > c_top).map(|r| r.h).collect();
    Ok(ProbeReport { top_degree: n1, bottom_degree: n2, sup_whole, rows, c_shrink, c_top, violations })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRowJson {
    pub h: u32,
    pub log_q_sup_disc_lower: Option<RationalJson>,
    pub log_q_sup_disc_upper: Option<RationalJson>,
    pub log_q_shrink_ratio: Option<RationalJson>,
    pub log_q_top_ratio: Option<RationalJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReportJson {
    pub top_degree: u32,
    pub bottom_degree: u32,
    pub log_q_sup_whole: Option<RationalJson>,
    pub rows: Vec<ProbeRowJson>,
    pub log_q_c_shrink: Option<RationalJson>,
    pub log_q_c_top: Option<RationalJson>,
    pub violations: Vec<u32>,
    pub bounded: bool,
}

impl ProbeReport {
    pub fn to_json(&self, field: &Field) -> ProbeReportJson {
        let lq = |m: &Magnitude| m.log_q(field).map(Into::into);
        ProbeReportJson {
            top_degree: self.top_degree,
            bottom_degree: self.bottom_degree,
            log_q_sup_whole: lq(&self.sup_whole.upper),
            rows: self
                .rows
                .iter()
                .map(|r| ProbeRowJson {
                    h: r.h,
                    log_q_sup_disc_lower: lq(&r.sup_disc.lower),
                    log_q_sup_disc_upper: lq(&r.sup_disc.upper),
                    log_q_shrink_ratio: lq(&r.shrink_ratio),
                    log_q_top_ratio: lq(&r.top_ratio),
                })
                .collect(),
            log_q_c_shrink: lq(&self.c_shrink),
            log_q_c_top: lq(&self.c_top),
            violations: self.violations.clone(),
            bounded: self.bounded(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::embed_all;
    use crate::field::{FieldCtx, FieldDescriptor};
    use crate::multiindex::{index_set, IndexBound};
    use proptest::prelude::*;

    fn field(p: u64, f: u32, e: u32) -> Field {
        FieldCtx::new(FieldDescriptor::new(p, f, e).unwrap(), Some(18)).unwrap()
    }

    fn mono(k: &Field, m: &[u32], c: i64) -> Poly {
        Poly::monomial(k, MultiIndex::new(m), PadicScalar::from_i64(k, c))
    }

    #[test]
    fn one_variable_examples() {
        let k = field(5, 1, 1);
        for h in 0..4 {
            let ph = PadicScalar::uniformizer_pow(&k, h as i64);
            let d = delta_tau(&mono(&k, &[1], 1), 0, h);
            assert!(d.eq_to_precision(&Poly::constant(&k, 1, ph.clone())));
            // (z + p^h)^2 - z^2 = 2 p^h z + p^{2h}
            let d2 = delta_tau(&mono(&k, &[2], 1), 0, h);
            let expect = Poly::from_terms(
                &k,
                1,
                [(MultiIndex::new(&[1]), &PadicScalar::from_i64(&k, 2) * &ph), (MultiIndex::new(&[0]), ph.pow(2))],
            );
            assert!(d2.eq_to_precision(&expect));
        }
    }

    #[test]
    fn difference_of_top_monomial() {
        // Δ_{m,h} z^m = m! ϖ^{mh}
        let k = field(3, 2, 1);
        let m = MultiIndex::new(&[2, 1]);
        let d = delta_multi(&Poly::monomial(&k, m.clone(), PadicScalar::one(&k)), &m, 2);
        let expect = &PadicScalar::from_u128(&k, m.factorial()) * &pi_power(&k, 2, &m);
        assert!(d.eq_to_precision(&Poly::constant(&k, 2, expect)));
        assert!(delta_multi(&mono(&k, &[1, 1], 1), &MultiIndex::new(&[2, 1]), 1).is_zero());
        assert!(delta_multi(&mono(&k, &[1, 1], 7), &MultiIndex::new(&[0, 0]), 1).eq_to_precision(&mono(
            &k,
            &[1, 1],
            7
        )));
    }

    #[test]
    fn recovery_examples() {
        let k = field(7, 1, 1);
        let p = DividedPowers::new(&k, [(MultiIndex::new(&[2]), PadicScalar::from_i64(&k, 2))]).unwrap();
        for h in 1..4 {
            for z in [0, 3, 12] {
                let a = recover_leading(&p, &MultiIndex::new(&[2]), h, &PadicScalar::from_i64(&k, z)).unwrap();
                assert!(a.eq_to_precision(&PadicScalar::from_i64(&k, 2)));
            }
        }
        assert!(matches!(
            recover_leading(&p, &MultiIndex::new(&[1]), 1, &PadicScalar::zero(&k)),
            Err(Error::NotTopDegree(_))
        ));
        let q = field(3, 2, 1);
        let p = DividedPowers::new(&q, [(MultiIndex::new(&[1, 1]), PadicScalar::one(&q))]).unwrap();
        for t in 0..5 {
            let z = PadicScalar::teichmuller(&q, t);
            let a = recover_leading(&p, &MultiIndex::new(&[1, 1]), 1, &z).unwrap();
            assert!(a.eq_to_precision(&PadicScalar::one(&q)));
        }
    }

    fn arb_divided(k: Field, n: u32) -> impl Strategy<Value = DividedPowers> {
        let d = k.degree();
        let indices = index_set(&IndexBound::at_most(d, n)).unwrap();
        prop::collection::vec(-40i64..40, indices.len()).prop_map(move |vals| {
            DividedPowers::new(&k, indices.iter().cloned().zip(vals.into_iter().map(|v| PadicScalar::from_i64(&k, v))))
                .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn differences_commute_and_are_linear(p in arb_divided(field(3, 2, 1), 3), q in arb_divided(field(3, 2, 1), 3), h in 0u32..3) {
            let (p, q) = (p.to_poly().unwrap(), q.to_poly().unwrap());
            let ab = delta_tau(&delta_tau(&p, 0, h), 1, h);
            let ba = delta_tau(&delta_tau(&p, 1, h), 0, h);
            prop_assert!(ab.eq_to_precision(&ba));
            let k = p.field().clone();
            let lam = PadicScalar::from_i64(&k, 5);
            let lhs = delta_tau(&p.scale(&lam).add(&q), 1, h);
            let rhs = delta_tau(&p, 1, h).scale(&lam).add(&delta_tau(&q, 1, h));
            prop_assert!(lhs.eq_to_precision(&rhs));
        }

        #[test]
        fn difference_matches_pointwise_shift(p in arb_divided(field(7, 1, 3), 2), z in 0i64..300, h in 0u32..3) {
            let p = p.to_poly().unwrap();
            let k = p.field().clone();
            let zs = PadicScalar::from_i64(&k, z) * PadicScalar::uniformizer(&k);
            let mut coords = embed_all(&k, &zs);
            let before = p.eval(&coords);
            coords[2] = &coords[2] + &PadicScalar::uniformizer_pow(&k, h as i64).embed(k.embeddings()[2]);
            let after = p.eval(&coords);
            coords[2] = embed_all(&k, &zs)[2].clone();
            prop_assert!(delta_tau(&p, 2, h).eval(&coords).eq_to_precision(&(&after - &before)));
        }

        #[test]
        fn peeling_recovers_every_coefficient(p in arb_divided(field(5, 1, 2), 3), h in 1u32..3) {
            let z = PadicScalar::from_i64(p.field(), 3);
            prop_assert!(recover_all(&p, h, &z).unwrap().eq_to_precision(&p));
        }
    }

    #[test]
    fn probe_examples() {
        let k = field(3, 1, 1);
        let z = DividedPowers::new(&k, [(MultiIndex::new(&[1]), PadicScalar::one(&k))]).unwrap();
        let rep = inequality_probe(&z, &[1, 2, 3, 4], 2).unwrap();
        assert!(rep.bounded());
        for row in &rep.rows {
            assert!(row.sup_disc.is_tight());
            assert_eq!(row.sup_disc.upper, Magnitude::q_pow(&k, Q::from_integer(-(row.h as i64))));
            assert_eq!(row.top_ratio, Magnitude::one());
        }
        let q = field(3, 2, 1);
        let mixed = DividedPowers::new(
            &q,
            [(MultiIndex::new(&[1, 0]), PadicScalar::one(&q)), (MultiIndex::new(&[0, 1]), PadicScalar::one(&q))],
        )
        .unwrap();
        assert!(inequality_probe(&mixed, &[1, 2, 3], 2).unwrap().bounded());
        // 1 + z^3: N_2 = 0 and the disc sup stays 1
        let shifted = DividedPowers::from_poly(&Poly::from_terms(
            &k,
            1,
            [(MultiIndex::new(&[0]), PadicScalar::one(&k)), (MultiIndex::new(&[3]), PadicScalar::one(&k))],
        ));
        let rep = inequality_probe(&shifted, &[1, 2, 3], 2).unwrap();
        assert_eq!(rep.bottom_degree, 0);
        assert!(rep.rows.iter().all(|r| r.shrink_ratio == Magnitude::one()));
    }
}
