//! The Mahler-type basis of `C^r`-regular locally polynomial functions:
//! `e_{a,i,r} = ϖ^{⌊l(a) r⌋} 1_{a + ϖ^{l(a)} O_F}(z) ((z - a) / ϖ^{l(a)})^i`
//! for `a ∈ ∪_h A_h` and `|i| ≤ [r]`, with synthesis, analysis and
//! Taylor approximants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crnorm::RationalJson;
use crate::embed::{embed_all, residue_system, CosetRep};
use crate::error::{Error, Result};
use crate::field::{Field, FieldCtx, FieldDescriptor};
use crate::locpoly::{BoundaryProfile, DegreeCaps, LocPolyFun};
use crate::multiindex::{index_set, IndexBound, MultiIndex};
use crate::padic::{floor_q, Magnitude, PadicScalar, Q};
use crate::poly::Poly;

/// `Y′ ∩ I_{≤[r]}`, the indices of the basis of the closed subspace cut out by `bp`.
pub fn subfamily_indices(r: Q, bp: &BoundaryProfile) -> Result<Vec<MultiIndex>> {
    let all = index_set(&IndexBound::at_most(bp.caps.len(), floor_q(r) as u32))?;
    let out: Vec<MultiIndex> = all.iter().filter(|i| bp.in_y_prime(i, r)).cloned().collect();
    debug_assert!(all.iter().all(|i| bp.in_y(i) == bp.in_y_prime(i, r)));
    Ok(out)
}

/// `ϖ^{lm} := Π_σ σ(ϖ^l)^{m_σ}`.
pub fn pi_power(field: &Field, l: u32, m: &MultiIndex) -> PadicScalar {
    m.monomial(&embed_all(field, &PadicScalar::uniformizer_pow(field, l as i64)))
}

/// Coefficient of `(z - a)^i` in `e_{a,i,r}` when `l(a) = l`.
pub fn basis_coefficient(field: &Field, l: u32, i: &MultiIndex, r: Q) -> PadicScalar {
    let lift = floor_q(r * l as i64);
    let num = PadicScalar::uniformizer_pow(field, lift);
    num.checked_div(&pi_power(field, l, i)).expect("powers of ϖ are units times ϖ^k")
}

fn check_index(i: &MultiIndex, r: Q, d: usize) -> Result<()> {
    if i.len() != d {
        return Err(Error::InvalidParameters(format!("index {i:?} has the wrong length")));
    }
    if i.degree() as i64 > floor_q(r) {
        return Err(Error::IndexTooLarge(format!("|{i:?}| exceeds [r] = {}", floor_q(r))));
    }
    Ok(())
}

/// `e_{a,i,r}` as a function at level `l(a)`.
pub fn basis_fn(field: &Field, a: &CosetRep, i: &MultiIndex, r: Q) -> Result<LocPolyFun> {
    check_index(i, r, field.degree())?;
    a.validate(field)?;
    let l = a.l();
    let rep = a.truncate(l);
    let poly = Poly::monomial(field, i.clone(), basis_coefficient(field, l, i, r));
    LocPolyFun::construct(field, l, DegreeCaps::none(), [(rep, poly)])
}

/// `‖e_{a,i,r}‖_{C^r}`: one for `a = 0`, otherwise
/// `q^{-(⌊l r⌋ - l r + r - |i|)}` with `l = l(a)`.
pub fn basis_norm(field: &FieldCtx, a: &CosetRep, i: &MultiIndex, r: Q) -> Magnitude {
    let l = a.l() as i64;
    if l == 0 {
        return Magnitude::one();
    }
    let lr = r * l;
    let expo = Q::from_integer(floor_q(lr)) - lr + r - Q::from_integer(i.degree() as i64);
    Magnitude::q_pow(field, -expo)
}

/// The upper bound `q` on all basis norms.
pub fn basis_norm_ceiling(field: &FieldCtx) -> Magnitude {
    Magnitude::q_pow(field, Q::from_integer(1))
}

/// Sparse coefficients `b_{a,i}`; `a` is stored at its own level `l(a)`.
#[derive(Clone, Debug)]
pub struct WaveletCoeffs {
    field: Field,
    r: Q,
    entries: BTreeMap<(u32, u64, MultiIndex), PadicScalar>,
}

impl WaveletCoeffs {
    pub fn new(field: &Field, r: Q) -> Self {
        WaveletCoeffs { field: field.clone(), r, entries: BTreeMap::new() }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn r(&self) -> Q {
        self.r
    }

    /// Adds `b` to the coefficient of `e_{a,i,r}`.
    pub fn insert(&mut self, a: &CosetRep, i: MultiIndex, b: PadicScalar) -> Result<()> {
        check_index(&i, self.r, self.field.degree())?;
        a.validate(&self.field)?;
        if b.is_exact_zero() {
            return Ok(());
        }
        let l = a.l();
        let key = (l, a.truncate(l).index(self.field.q()), i);
        let value = match self.entries.remove(&key) {
            Some(old) => &old + &b,
            None => b,
        };
        // a cancellation leaves nothing worth storing
        if !value.is_zero() {
            self.entries.insert(key, value);
        }
        Ok(())
    }

    pub fn get(&self, a: &CosetRep, i: &MultiIndex) -> Option<&PadicScalar> {
        let l = a.l();
        self.entries.get(&(l, a.truncate(l).index(self.field.q()), i.clone()))
    }

    /// `(a, i, b_{a,i})` ordered by level, then coset, then index.
    pub fn entries(&self) -> impl Iterator<Item = (CosetRep, &MultiIndex, &PadicScalar)> + '_ {
        let q = self.field.q();
        self.entries.iter().map(move |((l, k, i), b)| (CosetRep::from_index(*k, *l, q), i, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `l(a)` with a stored coefficient.
    pub fn max_level(&self) -> u32 {
        self.entries.keys().map(|(l, _, _)| *l).max().unwrap_or(0)
    }

    /// `sup |b_{a,i}|`.
    pub fn sup_abs(&self) -> Magnitude {
        self.entries.values().map(|b| b.abs_upper()).fold(Magnitude::ZERO, Magnitude::max)
    }

    /// Coefficientwise equality to precision.
    pub fn eq_to_precision(&self, other: &WaveletCoeffs) -> bool {
        if self.r != other.r {
            return false;
        }
        let keys: std::collections::BTreeSet<_> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.into_iter().all(|k| match (self.entries.get(k), other.entries.get(k)) {
            (Some(a), Some(b)) => a.eq_to_precision(b),
            (Some(a), None) | (None, Some(a)) => a.is_zero(),
            (None, None) => true,
        })
    }

    pub fn to_json(&self) -> WaveletCoeffsJson {
        WaveletCoeffsJson {
            field: Some(self.field.descriptor()),
            r: self.r.into(),
            entries: self.entries().map(|(a, i, b)| WaveletEntryJson { a, i: i.clone(), b: b.serialize() }).collect(),
        }
    }

    pub fn from_json_in(field: &Field, json: &WaveletCoeffsJson) -> Result<Self> {
        if let Some(desc) = json.field {
            if desc != field.descriptor() {
                return Err(Error::FieldMismatch(format!("{desc} vs {}", field.descriptor())));
            }
        }
        let mut out = WaveletCoeffs::new(field, json.r.to_q()?);
        for e in &json.entries {
            out.insert(&e.a, e.i.clone(), PadicScalar::parse(field, &e.b)?)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletEntryJson {
    pub a: CosetRep,
    pub i: MultiIndex,
    pub b: String,
}

/// Interchange form of [`WaveletCoeffs`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoeffsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDescriptor>,
    pub r: RationalJson,
    pub entries: Vec<WaveletEntryJson>,
}

/// `Σ b_{a,i} e_{a,i,r}` at level `max l(a)`.
pub fn synthesize(coeffs: &WaveletCoeffs) -> LocPolyFun {
    synthesize_at(coeffs, coeffs.max_level()).expect("level is at least the maximal l(a)")
}

/// `Σ b_{a,i} e_{a,i,r}` with tables at the given level.
pub fn synthesize_at(coeffs: &WaveletCoeffs, level: u32) -> Result<LocPolyFun> {
    let field = &coeffs.field;
    if level < coeffs.max_level() {
        return Err(Error::InvalidParameters("level below the coefficient support".into()));
    }
    let d = field.degree();
    let mut per_coset: BTreeMap<(u32, u64), Poly> = BTreeMap::new();
    for ((l, k, i), b) in &coeffs.entries {
        let c = b * &basis_coefficient(field, *l, i, coeffs.r);
        per_coset.entry((*l, *k)).or_insert_with(|| Poly::zero(field, d)).add_term(i.clone(), c);
    }
    let mut out = LocPolyFun::zero(field, level);
    for ((l, k), poly) in per_coset {
        let rep = CosetRep::from_index(k, l, field.q());
        let piece = LocPolyFun::construct(field, l, DegreeCaps::none(), [(rep, poly)])?.refine(level)?;
        out = out.add(&piece)?;
    }
    Ok(out)
}

/// Coefficients `b_{a,i}` with `Σ b_{a,i} e_{a,i,r} = f`, for `f` of degree
/// at most `[r]` on every coset.
///
/// On the finest coset `a + ϖ^h O_F` only the basis elements attached to `a`
/// and to its truncations are nonzero, so the coefficients of `a` follow from
/// the table of `f` at `a` once those of the truncations are known.
pub fn analyze(f: &LocPolyFun, r: Q) -> Result<WaveletCoeffs> {
    let field = f.field();
    let floor_r = floor_q(r);
    if let Some(deg) = f.degree() {
        if deg as i64 > floor_r {
            return Err(Error::DegreeTooHigh(format!("degree {deg} exceeds [r] = {floor_r}")));
        }
    }
    let h = f.level();
    let d = field.degree();
    let q = field.q();
    let indices = index_set(&IndexBound::at_most(d, floor_r.max(0) as u32))?;
    let mut out = WaveletCoeffs::new(field, r);
    let mut reps = residue_system(field, h);
    reps.sort_by_key(|a| a.l());
    // polynomial of Σ_i b_{a,i} e_{a,i,r} on its own coset, centered at a
    let mut local: BTreeMap<(u32, u64), Poly> = BTreeMap::new();
    for a in reps {
        let lev = a.l();
        let center = a.to_scalar(field);
        let mut residual = f.table(&a).cloned().unwrap_or_else(|| Poly::zero(field, d));
        for j in 0..lev {
            if j > 0 && a.digits[j as usize - 1] == 0 {
                continue;
            }
            let prefix = a.truncate(j);
            let Some(p) = local.get(&(j, prefix.index(q))) else { continue };
            let delta = embed_all(field, &(&center - &prefix.to_scalar(field)));
            residual = residual.sub(&p.translate(&delta));
        }
        let canonical = a.truncate(lev);
        let mut poly = Poly::zero(field, d);
        for i in &indices {
            let Some(g) = residual.coeff(i) else { continue };
            if g.is_zero() {
                continue;
            }
            let b = g.checked_div(&basis_coefficient(field, lev, i, r))?;
            out.insert(&canonical, i.clone(), b.clone())?;
            poly.add_term(i.clone(), g.clone());
        }
        if !poly.terms().is_empty() {
            local.insert((lev, canonical.index(q)), poly);
        }
    }
    Ok(out)
}

/// `f_h = Σ_{a ∈ A_h} 1_{a + ϖ^h O_F} Σ_{|i| ≤ [r]} (D_i f(a) / i!) (z - a)^i`.
pub fn approximant(f: &LocPolyFun, r: Q, h: u32) -> Result<LocPolyFun> {
    let field = f.field();
    let floor_r = floor_q(r) as u32;
    let d = field.degree();
    let mut out = LocPolyFun::zero(field, h);
    for a in residue_system(field, h) {
        let table = if f.level() <= h {
            let coarse = a.truncate(f.level());
            match f.table(&coarse) {
                None => continue,
                Some(p) => {
                    let delta = embed_all(field, &(&a.to_scalar(field) - &coarse.to_scalar(field)));
                    p.translate(&delta)
                }
            }
        } else {
            match f.table(&a.pad(f.level())) {
                None => continue,
                Some(p) => p.clone(),
            }
        };
        let kept = Poly::from_terms(
            field,
            d,
            table.terms().iter().filter(|(m, _)| m.degree() <= floor_r).map(|(m, c)| (m.clone(), c.clone())),
        );
        if !kept.terms().is_empty() {
            out.insert(&a, kept)?;
        }
    }
    Ok(out)
}

/// The change of basis on `F_h^{[r]}`: column `(a, i)` holds the coordinates of
/// `e_{a,i,r}` in the monomial basis `1_{b + ϖ^h} ((z - b) / ϖ^h)^m`.
/// Rows and columns are ordered by `(coset index, multi-index)`.
pub fn change_of_basis_matrix(
    field: &Field,
    h: u32,
    r: Q,
) -> Result<(Vec<(CosetRep, MultiIndex)>, Vec<Vec<PadicScalar>>)> {
    let d = field.degree();
    let indices = index_set(&IndexBound::at_most(d, floor_q(r).max(0) as u32))?;
    let reps = residue_system(field, h);
    let labels: Vec<(CosetRep, MultiIndex)> =
        reps.iter().flat_map(|a| indices.iter().map(move |i| (a.clone(), i.clone()))).collect();
    let n = labels.len();
    let mut mat = vec![vec![PadicScalar::zero(field); n]; n];
    for (col, (a, i)) in labels.iter().enumerate() {
        let e = basis_fn(field, a, i, r)?.refine(h)?;
        for (row, (b, m)) in labels.iter().enumerate() {
            if let Some(p) = e.table(b) {
                if let Some(c) = p.coeff(m) {
                    mat[row][col] = c * &pi_power(field, h, m);
                }
            }
        }
    }
    Ok((labels, mat))
}
