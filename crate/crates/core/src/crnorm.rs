//! Certified `C^r` norms of locally polynomial functions.
//!
//! The norm is the larger of the Taylor part `max_{|i|≤[r]} sup |D_i f / i!|`
//! and the remainder part `sup |ε_{f,r}(x, y)| / |y|^r` with
//! `ε(x, y) = f(x + y) - Σ_{|j|≤[r]} (D_j f(x) / j!) y^j`.
//! Both are computed by branch and bound over discs of `O_F` (for the
//! remainder, pairs of an x-disc and a y-disc inside one annulus
//! `|y| = q^{-k}`). Each region gets an upper bound (Gauss norms of the
//! polynomials involved) and a lower bound (the value at its center), and only
//! regions whose upper bound beats the best lower bound are refined.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::embed::{embed_all, CosetRep};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::locpoly::LocPolyFun;
use crate::multiindex::{index_set, IndexBound, MultiIndex};
use crate::padic::{floor_q, Magnitude, PadicScalar, Q};
use crate::poly::Poly;

/// Default cap on the number of refined regions per computation.
pub const DEFAULT_BUDGET: u64 = 400_000;

/// Where a lower bound was attained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// Center of the x-disc (or the point, for a sup).
    pub x: CosetRep,
    /// Center of the y-disc, for remainder witnesses.
    pub y: Option<CosetRep>,
    /// Derivative index, for Taylor-part witnesses.
    pub index: Option<MultiIndex>,
}

/// A certified enclosure `lower ≤ value ≤ upper`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupInterval {
    pub lower: Magnitude,
    pub upper: Magnitude,
    pub witness: Option<Witness>,
}

impl SupInterval {
    pub fn exact_zero() -> Self {
        SupInterval { lower: Magnitude::ZERO, upper: Magnitude::ZERO, witness: None }
    }

    pub fn is_tight(&self) -> bool {
        self.lower == self.upper
    }

    /// Enclosure of the maximum of two quantities.
    pub fn max(&self, other: &SupInterval) -> SupInterval {
        let witness = if other.lower > self.lower { other.witness.clone() } else { self.witness.clone() };
        SupInterval { lower: self.lower.max(other.lower), upper: self.upper.max(other.upper), witness }
    }

    /// Multiplies both ends by a constant.
    pub fn scale(&self, m: Magnitude) -> SupInterval {
        SupInterval { lower: self.lower.mul(m), upper: self.upper.mul(m), witness: self.witness.clone() }
    }
}

/// Result of a norm computation.
#[derive(Clone, Debug)]
pub struct CrNormReport {
    pub r: Q,
    pub depth: u32,
    /// Level of the coarsened input.
    pub level: u32,
    pub taylor: SupInterval,
    pub remainder: SupInterval,
    pub norm: SupInterval,
    /// Regions examined.
    pub regions: u64,
    /// Whether the region budget ran out.
    pub budget_exhausted: bool,
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Weight {
    /// `q^{rk}` on the annulus `|y| = q^{-k}`.
    Norm,
    /// Constant `q^{r h}`.
    Profile(u32),
}

struct Engine {
    field: Field,
    h: u32,
    r: Q,
    floor_r: u32,
    low: Vec<MultiIndex>,
    high: Vec<MultiIndex>,
    tables: HashMap<MultiIndex, LocPolyFun>,
    prefix: HashMap<MultiIndex, Vec<HashMap<u64, Magnitude>>>,
    disc_cache: HashMap<(MultiIndex, Vec<u32>), Magnitude>,
    zero_poly: Poly,
    regions: u64,
    budget: u64,
}

fn ordered_q(field: &Field, x: Q) -> Magnitude {
    Magnitude::q_pow(field, x)
}

impl Engine {
    fn new(f: &LocPolyFun, r: Q, budget: u64) -> Result<Self> {
        if r < Q::from_integer(0) {
            return Err(Error::InvalidParameters("r must be nonnegative".into()));
        }
        let field = f.field().clone();
        let f = f.coarsen();
        let h = f.level();
        let floor_r = floor_q(r) as u32;
        let d = field.degree();
        let deg = f.degree().unwrap_or(0);
        let all = index_set(&IndexBound::at_most(d, deg.max(floor_r)))?;
        let low: Vec<MultiIndex> = all.iter().filter(|m| m.degree() <= floor_r).cloned().collect();
        let high: Vec<MultiIndex> = all.iter().filter(|m| m.degree() > floor_r && m.degree() <= deg).cloned().collect();
        let q = field.q();
        let mut tables = HashMap::new();
        let mut prefix = HashMap::new();
        let radii = vec![h as i64; d];
        for j in all.iter().filter(|m| m.degree() <= deg) {
            let t = if j.is_zero() { f.clone() } else { f.derived(j) };
            let mut levels: Vec<HashMap<u64, Magnitude>> = vec![HashMap::new(); h as usize + 1];
            for (&key, p) in t.tables() {
                let b = p.gauss_bound(&radii);
                if b.is_zero() {
                    continue;
                }
                for (l, map) in levels.iter_mut().enumerate() {
                    let pk = key % q.pow(l as u32);
                    let slot = map.entry(pk).or_insert(Magnitude::ZERO);
                    *slot = (*slot).max(b);
                }
            }
            prefix.insert(j.clone(), levels);
            tables.insert(j.clone(), t);
        }
        Ok(Engine {
            zero_poly: Poly::zero(&field, d),
            field,
            h,
            r,
            floor_r,
            low,
            high,
            tables,
            prefix,
            disc_cache: HashMap::new(),
            regions: 0,
            budget,
        })
    }

    fn q_pow(&self, x: Q) -> Magnitude {
        ordered_q(&self.field, x)
    }

    fn table(&self, j: &MultiIndex, key: u64) -> &Poly {
        self.tables.get(j).and_then(|t| t.tables().get(&key)).unwrap_or(&self.zero_poly)
    }

    fn key(&self, digits: &[u32]) -> u64 {
        let q = self.field.q();
        digits[..self.h as usize].iter().rev().fold(0u64, |acc, &d| acc * q + d as u64)
    }

    /// Upper bound of `|D_j f / j!|` on the disc with the given center digits.
    fn sup_disc(&mut self, j: &MultiIndex, digits: &[u32]) -> Magnitude {
        let Some(levels) = self.prefix.get(j) else {
            return Magnitude::ZERO;
        };
        let l = digits.len();
        if l <= self.h as usize {
            let q = self.field.q();
            let key = digits.iter().rev().fold(0u64, |acc, &d| acc * q + d as u64);
            return levels[l].get(&key).copied().unwrap_or(Magnitude::ZERO);
        }
        if levels[0].is_empty() {
            return Magnitude::ZERO;
        }
        let cache_key = (j.clone(), digits.to_vec());
        if let Some(&m) = self.disc_cache.get(&cache_key) {
            return m;
        }
        let key = self.key(digits);
        let poly = self.table(j, key).clone();
        let m = if poly.terms().is_empty() {
            Magnitude::ZERO
        } else {
            let mut tail = vec![0u32; self.h as usize];
            tail.extend_from_slice(&digits[self.h as usize..]);
            let delta = embed_all(&self.field, &PadicScalar::from_teich_digits(&self.field, &tail));
            poly.translate(&delta).gauss_bound(&vec![l as i64; self.field.degree()])
        };
        self.disc_cache.insert(cache_key, m);
        m
    }

    // ---- Taylor part and plain sups -----------------------------------------

    /// Branch and bound for `sup |g|` where `g` is the table `j` restricted
    /// to a set of starting discs.
    fn sup_tables(&mut self, starts: Vec<(MultiIndex, Vec<u32>)>, depth: u32) -> (SupInterval, bool) {
        struct Item {
            upper: Magnitude,
            j: MultiIndex,
            digits: Vec<u32>,
            poly: Poly,
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                self.upper
                    .cmp(&other.upper)
                    .then_with(|| other.j.cmp(&self.j))
                    .then_with(|| other.digits.cmp(&self.digits))
            }
        }
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl PartialEq for Item {
            fn eq(&self, other: &Self) -> bool {
                self.cmp(other) == Ordering::Equal
            }
        }
        impl Eq for Item {}

        let d = self.field.degree();
        let mut best = Magnitude::ZERO;
        let mut witness = None;
        let mut unresolved = Magnitude::ZERO;
        let mut heap = BinaryHeap::new();
        let evaluate = |poly: &Poly, digits: &[u32]| -> (Magnitude, Magnitude) {
            let upper = poly.gauss_bound(&vec![digits.len() as i64; d]);
            let lower = poly.coeff(&MultiIndex::zeros(d)).map_or(Magnitude::ZERO, |c| c.abs_lower());
            (upper, lower)
        };
        for (j, digits) in starts {
            let key = if digits.len() >= self.h as usize { self.key(&digits) } else { continue };
            let base = self.table(&j, key).clone();
            if base.terms().is_empty() {
                continue;
            }
            let mut tail = vec![0u32; self.h as usize];
            tail.extend_from_slice(&digits[self.h as usize..]);
            let poly = if tail.iter().all(|&t| t == 0) {
                base
            } else {
                base.translate(&embed_all(&self.field, &PadicScalar::from_teich_digits(&self.field, &tail)))
            };
            let (upper, lower) = evaluate(&poly, &digits);
            if lower > best {
                best = lower;
                witness = Some(Witness { x: CosetRep::new(digits.clone()), y: None, index: Some(j.clone()) });
            }
            heap.push(Item { upper, j, digits, poly });
        }
        let max_level = depth.max(self.h) as usize;
        let q = self.field.q();
        let mut exhausted = false;
        while let Some(item) = heap.pop() {
            if item.upper <= best {
                break;
            }
            if item.digits.len() >= max_level {
                unresolved = unresolved.max(item.upper);
                continue;
            }
            if self.regions >= self.budget {
                unresolved = unresolved.max(item.upper);
                exhausted = true;
                continue;
            }
            self.regions += 1;
            let lvl = item.digits.len() as u32;
            for t in 0..q {
                let mut digits = item.digits.clone();
                digits.push(t as u32);
                let poly = if t == 0 {
                    item.poly.clone()
                } else {
                    let step = PadicScalar::teichmuller(&self.field, t).mul_pi_pow(lvl as i64);
                    item.poly.translate(&embed_all(&self.field, &step))
                };
                let (upper, lower) = evaluate(&poly, &digits);
                if lower > best {
                    best = lower;
                    witness = Some(Witness { x: CosetRep::new(digits.clone()), y: None, index: Some(item.j.clone()) });
                }
                if upper > best {
                    heap.push(Item { upper, j: item.j.clone(), digits, poly });
                }
            }
        }
        (SupInterval { lower: best, upper: best.max(unresolved), witness }, exhausted)
    }

    fn taylor_part(&mut self, depth: u32) -> (SupInterval, bool) {
        let mut starts = Vec::new();
        for j in self.low.clone() {
            if let Some(t) = self.tables.get(&j) {
                for &key in t.tables().keys() {
                    starts.push((j.clone(), CosetRep::from_index(key, self.h, self.field.q()).digits));
                }
            }
        }
        self.sup_tables(starts, depth)
    }

    // ---- remainder ----------------------------------------------------------

    fn weight(&self, mode: Weight, k: u32) -> Magnitude {
        match mode {
            Weight::Norm => self.q_pow(self.r * k as i64),
            Weight::Profile(h) => self.q_pow(self.r * h as i64),
        }
    }

    /// Bound on `weight(k) sup |ε|` over all annuli `k ≥ big_k ≥ h`.
    fn tail_bound(&mut self, mode: Weight, big_k: u32) -> Magnitude {
        let mut out = Magnitude::ZERO;
        for j in self.high.clone() {
            let s = self.sup_disc(&j, &[]);
            let decay = match mode {
                Weight::Norm => self.q_pow(-(Q::from_integer(j.degree() as i64) - self.r) * big_k as i64),
                Weight::Profile(h) => self.q_pow(self.r * h as i64 - Q::from_integer((j.degree() * big_k) as i64)),
            };
            out = out.max(s.mul(decay));
        }
        out
    }

    fn remainder(&mut self, mode: Weight, depth: u32) -> Result<(SupInterval, bool)> {
        let k_start = match mode {
            Weight::Norm => 0,
            Weight::Profile(h) => h,
        };
        let mut big_k = k_start.max(self.h) + self.floor_r + 2;
        let k_limit = big_k + 256;
        let mut state = RemainderState {
            best: Magnitude::ZERO,
            witness: None,
            unresolved: Magnitude::ZERO,
            heap: BinaryHeap::new(),
            exhausted: false,
        };
        for k in k_start..big_k {
            self.seed_annulus(mode, k, &mut state)?;
        }
        loop {
            self.run_pieces(mode, depth, &mut state)?;
            let tail = self.tail_bound(mode, big_k);
            if tail <= state.best {
                break;
            }
            if big_k >= k_limit {
                state.unresolved = state.unresolved.max(tail);
                break;
            }
            self.seed_annulus(mode, big_k, &mut state)?;
            big_k += 1;
        }
        Ok((
            SupInterval { lower: state.best, upper: state.best.max(state.unresolved), witness: state.witness },
            state.exhausted,
        ))
    }

    fn seed_annulus(&mut self, mode: Weight, k: u32, state: &mut RemainderState) -> Result<()> {
        for t in 1..self.field.q() {
            let mut y = vec![0u32; k as usize];
            y.push(t as u32);
            let piece = self.make_piece(mode, Vec::new(), y, k)?;
            state.offer(piece);
        }
        Ok(())
    }

    fn run_pieces(&mut self, mode: Weight, depth: u32, state: &mut RemainderState) -> Result<()> {
        let q = self.field.q();
        let x_limit = depth.max(self.h) as usize;
        while let Some(piece) = state.heap.pop() {
            if piece.upper <= state.best {
                state.heap.clear();
                break;
            }
            let lx = piece.x.len();
            let ly = piece.y.len();
            let h = self.h as usize;
            let y_limit = piece.k as usize + 1 + depth as usize;
            let can_x = lx < x_limit;
            let can_y = ly < y_limit;
            let split_x = if lx < h && can_x {
                true
            } else if lx.min(ly) < h && can_y {
                false
            } else if can_x && can_y {
                lx.saturating_sub(h) < ly - piece.k as usize
            } else {
                can_x
            };
            if !can_x && !can_y {
                state.unresolved = state.unresolved.max(piece.upper);
                continue;
            }
            if self.regions >= self.budget {
                state.unresolved = state.unresolved.max(piece.upper);
                state.exhausted = true;
                continue;
            }
            self.regions += 1;
            for t in 0..q as u32 {
                let (x, y) = if split_x {
                    let mut x = piece.x.clone();
                    x.push(t);
                    (x, piece.y.clone())
                } else {
                    let mut y = piece.y.clone();
                    y.push(t);
                    (piece.x.clone(), y)
                };
                let child = self.make_piece(mode, x, y, piece.k)?;
                state.offer(child);
            }
        }
        Ok(())
    }

    fn make_piece(&mut self, mode: Weight, x: Vec<u32>, y: Vec<u32>, k: u32) -> Result<Piece> {
        let field = self.field.clone();
        let d = field.degree();
        let h = self.h as usize;
        let w = self.weight(mode, k);
        let cx = PadicScalar::from_teich_digits(&field, &x);
        let cy = PadicScalar::from_teich_digits(&field, &y);
        let s = &cx + &cy;
        let lxy = x.len().min(y.len());
        let s_digits = s.teich_digits(lxy.max(h))?;
        let kq = Q::from_integer(k as i64);

        // triangle bound
        let mut ua = self.sup_disc(&MultiIndex::zeros(d), &s_digits[..lxy]);
        for j in self.low.clone() {
            let b = self.sup_disc(&j, &x).mul(self.q_pow(-kq * j.degree() as i64));
            ua = ua.max(b);
        }
        let mut upper = ua.mul(w);

        // Taylor tail bound inside ϖ^h O_F
        if k as usize >= h {
            let mut ub = Magnitude::ZERO;
            for j in self.high.clone() {
                let b = self.sup_disc(&j, &x).mul(self.q_pow(-kq * j.degree() as i64));
                ub = ub.max(b);
            }
            upper = upper.min(ub.mul(w));
        }

        let lower;
        if x.len() >= h && lxy >= h && !upper.is_zero() {
            let eps = self.bivariate(&x, &cx, &cy, &s, &s_digits[..h]);
            let mut levels = vec![x.len() as i64; d];
            levels.extend(std::iter::repeat_n(y.len() as i64, d));
            upper = upper.min(eps.gauss_bound(&levels).mul(w));
            lower = eps.coeff(&MultiIndex::zeros(2 * d)).map_or(Magnitude::ZERO, |c| c.abs_lower()).mul(w);
        } else if upper.is_zero() {
            lower = Magnitude::ZERO;
        } else {
            lower = self.eps_at(&x, &cx, &cy, &s, &s_digits).abs_lower().mul(w);
        }
        let lower = lower.min(upper);
        Ok(Piece { upper, lower, x, y, k })
    }

    /// `ε(c_x, c_y)` evaluated directly.
    fn eps_at(&self, x: &[u32], cx: &PadicScalar, cy: &PadicScalar, s: &PadicScalar, s_digits: &[u32]) -> PadicScalar {
        let h = self.h as usize;
        let field = &self.field;
        let mut xd = x.to_vec();
        xd.resize(xd.len().max(h), 0);
        let a = CosetRep::new(xd[..h].to_vec());
        let a2 = CosetRep::new(s_digits[..h].to_vec());
        let ka = a.index(field.q());
        let ka2 = a2.index(field.q());
        let d = field.degree();
        let fx = self.table(&MultiIndex::zeros(d), ka2);
        let mut val = fx.eval(&embed_all(field, &(s - &a2.to_scalar(field))));
        let xa = embed_all(field, &(cx - &a.to_scalar(field)));
        let ys = embed_all(field, cy);
        for j in &self.low {
            let t = self.table(j, ka);
            if t.terms().is_empty() {
                continue;
            }
            val = &val - &(&t.eval(&xa) * &j.monomial(&ys));
        }
        val
    }

    /// `ε(c_x + U, c_y + W)` as a polynomial in `(U, W)`.
    fn bivariate(&self, x: &[u32], cx: &PadicScalar, cy: &PadicScalar, s: &PadicScalar, s_digits: &[u32]) -> Poly {
        let field = &self.field;
        let d = field.degree();
        let h = self.h as usize;
        let a = CosetRep::new(x[..h].to_vec());
        let a2 = CosetRep::new(s_digits.to_vec());
        let ka = a.index(field.q());
        let ka2 = a2.index(field.q());
        let dx = embed_all(field, &(cx - &a.to_scalar(field)));
        let ys = embed_all(field, cy);
        let mut eps = Poly::zero(field, 2 * d);
        let zeros = MultiIndex::zeros(d);
        let y_expansion = |j: &MultiIndex| -> Poly {
            let mut out = Poly::zero(field, d);
            for k in j.lower_set() {
                let rest = j.checked_sub(&k).unwrap();
                let c = &PadicScalar::from_u128(field, j.binom(&k)) * &rest.monomial(&ys);
                out.add_term(k, c);
            }
            out
        };
        let mut add_product = |tx: &Poly, j: &MultiIndex, sign: bool| {
            if tx.terms().is_empty() {
                return;
            }
            let yy = y_expansion(j);
            for (mu, cu) in tx.terms() {
                for (mw, cw) in yy.terms() {
                    let c = cu * cw;
                    eps.add_term(mu.concat(mw), if sign { c } else { c.neg() });
                }
            }
        };
        if ka == ka2 {
            for j in &self.high {
                let t = self.table(j, ka);
                if !t.terms().is_empty() {
                    add_product(&t.translate(&dx), j, true);
                }
            }
        } else {
            for j in &self.low {
                let t = self.table(j, ka);
                if !t.terms().is_empty() {
                    add_product(&t.translate(&dx), j, false);
                }
            }
            let p2 = self.table(&zeros, ka2);
            if !p2.terms().is_empty() {
                let shifted = p2.translate(&embed_all(field, &(s - &a2.to_scalar(field))));
                for (m, c) in shifted.terms() {
                    for k in m.lower_set() {
                        let rest = m.checked_sub(&k).unwrap();
                        let coeff = c * &PadicScalar::from_u128(field, m.binom(&k));
                        eps.add_term(k.concat(&rest), coeff);
                    }
                }
            }
        }
        eps
    }
}

#[derive(Debug)]
struct Piece {
    upper: Magnitude,
    lower: Magnitude,
    x: Vec<u32>,
    y: Vec<u32>,
    k: u32,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .cmp(&other.upper)
            .then_with(|| other.k.cmp(&self.k))
            .then_with(|| other.x.cmp(&self.x))
            .then_with(|| other.y.cmp(&self.y))
    }
}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct RemainderState {
    best: Magnitude,
    witness: Option<Witness>,
    unresolved: Magnitude,
    heap: BinaryHeap<Piece>,
    exhausted: bool,
}

impl RemainderState {
    fn offer(&mut self, piece: Piece) {
        if piece.lower > self.best {
            self.best = piece.lower;
            self.witness = Some(Witness {
                x: CosetRep::new(piece.x.clone()),
                y: Some(CosetRep::new(piece.y.clone())),
                index: None,
            });
        }
        if piece.upper > self.best {
            self.heap.push(piece);
        }
    }
}

// ---------------------------------------------------------------------------

/// Certified enclosure of `‖f‖_{C^r}` with refinement to the given depth.
pub fn cr_norm(f: &LocPolyFun, r: Q, depth: u32) -> Result<CrNormReport> {
    cr_norm_with_budget(f, r, depth, DEFAULT_BUDGET)
}

pub fn cr_norm_with_budget(f: &LocPolyFun, r: Q, depth: u32, budget: u64) -> Result<CrNormReport> {
    let mut engine = Engine::new(f, r, budget)?;
    let (taylor, ex1) = engine.taylor_part(depth);
    let (remainder, ex2) = engine.remainder(Weight::Norm, depth)?;
    let norm = taylor.max(&remainder);
    Ok(CrNormReport {
        r,
        depth,
        level: engine.h,
        taylor,
        remainder,
        norm,
        regions: engine.regions,
        budget_exhausted: ex1 || ex2,
    })
}

/// Like [`cr_norm`], increasing the depth up to `max_depth` until the
/// enclosure is tight; fails with `DepthInsufficient` otherwise.
pub fn cr_norm_tight(f: &LocPolyFun, r: Q, max_depth: u32) -> Result<CrNormReport> {
    let mut depth = f.level().min(max_depth);
    loop {
        let rep = cr_norm(f, r, depth)?;
        if rep.norm.is_tight() {
            return Ok(rep);
        }
        if depth >= max_depth {
            return Err(Error::DepthInsufficient(format!(
                "enclosure [{}, {}] not tight at depth {depth}",
                rep.norm.lower, rep.norm.upper
            )));
        }
        depth += 1;
    }
}

/// `C_{f,r}(h) = sup_{x ∈ O_F, y ∈ ϖ^h O_F} |ε_{f,r}(x, y)| q^{rh}` for
/// `h = 0..=h_max`.
pub fn remainder_profile(f: &LocPolyFun, r: Q, h_max: u32, depth: u32) -> Result<Vec<SupInterval>> {
    let mut engine = Engine::new(f, r, DEFAULT_BUDGET)?;
    let mut out = Vec::with_capacity(h_max as usize + 1);
    for h in 0..=h_max {
        let (iv, _) = engine.remainder(Weight::Profile(h), depth)?;
        out.push(iv);
    }
    Ok(out)
}

/// `‖f‖_{C^l}` for `l ≤ r`, recomputed from the function.
pub fn norm_downgrade(report: &CrNormReport, f: &LocPolyFun, l: Q) -> Result<CrNormReport> {
    if l > report.r {
        return Err(Error::InvalidParameters("downgrade target exceeds r".into()));
    }
    if l == report.r {
        return Ok(report.clone());
    }
    cr_norm(f, l, report.depth)
}

/// Certified enclosure of `sup_{z ∈ region} |f(z)|`.
pub fn sup_abs(f: &LocPolyFun, region: &CosetRep, depth: u32) -> Result<SupInterval> {
    region.validate(f.field())?;
    let mut engine = Engine::new(f, Q::from_integer(0), DEFAULT_BUDGET)?;
    let h = engine.h as usize;
    let q = engine.field.q();
    let d = engine.field.degree();
    let zero = MultiIndex::zeros(d);
    let starts: Vec<(MultiIndex, Vec<u32>)> = if region.digits.len() >= h {
        vec![(zero, region.digits.clone())]
    } else {
        engine
            .tables
            .get(&zero)
            .map(|t| {
                t.tables()
                    .keys()
                    .map(|&k| CosetRep::from_index(k, h as u32, q))
                    .filter(|c| region.is_prefix_of(c))
                    .map(|c| (zero.clone(), c.digits))
                    .collect()
            })
            .unwrap_or_default()
    };
    let (iv, _) = engine.sup_tables(starts, depth.max(region.level()));
    Ok(iv)
}

// ---- JSON -----------------------------------------------------------------

/// A rational as `{"num", "den"}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: i64,
    pub den: i64,
}

impl From<Q> for RationalJson {
    fn from(x: Q) -> Self {
        RationalJson { num: *x.numer(), den: *x.denom() }
    }
}

impl RationalJson {
    pub fn to_q(&self) -> Result<Q> {
        if self.den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Q::new(self.num, self.den))
    }
}

/// An interval as `log_q` exponents; `null` stands for zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalJson {
    pub log_q_lower: Option<RationalJson>,
    pub log_q_upper: Option<RationalJson>,
    pub tight: bool,
    pub witness: Option<Witness>,
}

impl IntervalJson {
    pub fn new(field: &Field, iv: &SupInterval) -> Self {
        IntervalJson {
            log_q_lower: iv.lower.log_q(field).map(Into::into),
            log_q_upper: iv.upper.log_q(field).map(Into::into),
            tight: iv.is_tight(),
            witness: iv.witness.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrNormReportJson {
    pub r: RationalJson,
    pub depth: u32,
    pub level: u32,
    pub taylor: IntervalJson,
    pub remainder: IntervalJson,
    pub norm: IntervalJson,
    pub regions: u64,
    pub budget_exhausted: bool,
}

impl CrNormReport {
    pub fn to_json(&self, field: &Field) -> CrNormReportJson {
        CrNormReportJson {
            r: self.r.into(),
            depth: self.depth,
            level: self.level,
            taylor: IntervalJson::new(field, &self.taylor),
            remainder: IntervalJson::new(field, &self.remainder),
            norm: IntervalJson::new(field, &self.norm),
            regions: self.regions,
            budget_exhausted: self.budget_exhausted,
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

    fn identity(k: &Field) -> LocPolyFun {
        LocPolyFun::monomial(k, MultiIndex::unit(k.degree(), 0, 1), PadicScalar::one(k))
    }

    #[test]
    fn norm_of_identity_at_r_one() {
        let k = field(2, 1, 1);
        let rep = cr_norm(&identity(&k), rat(1, 1), 3).unwrap();
        assert!(rep.norm.is_tight());
        assert_eq!(rep.norm.lower, Magnitude::one());
        assert_eq!(rep.remainder.upper, Magnitude::ZERO);
    }

    #[test]
    fn norm_of_identity_at_r_zero_is_remainder_one() {
        // |x + y - x| / |y|^0 = |y| ≤ 1
        let k = field(3, 1, 1);
        let rep = cr_norm(&identity(&k), rat(0, 1), 3).unwrap();
        assert!(rep.remainder.is_tight());
        assert_eq!(rep.remainder.lower, Magnitude::one());
    }

    #[test]
    fn square_at_r_one_half() {
        // ε = 2xy + y^2 - ... with [r] = 0: ε = (x+y)^2 - x^2 = 2xy + y^2.
        // sup |ε| / |y|^{1/2} = sup |y|^{1/2} |2x + y| = 1.
        let k = field(3, 1, 1);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[2]), PadicScalar::one(&k));
        let rep = cr_norm(&f, rat(1, 2), 4).unwrap();
        assert!(rep.norm.is_tight(), "{:?}", rep.norm);
        assert_eq!(rep.norm.lower, Magnitude::one());
    }

    #[test]
    fn indicator_of_small_coset_has_large_norm() {
        // 1_{ϖ O}: ε = 1 for x ∈ ϖO, y a unit; for r = 1 the ratio peaks at
        // |y| = q^{-1}: ε = 0 there (same coset) so the sup is from k = 0: 1.
        // For x = 0 and y with v(y) = 0 the indicator jumps: |ε| = 1.
        let k = field(3, 1, 1);
        let f = LocPolyFun::construct(
            &k,
            1,
            Default::default(),
            [(CosetRep::new(vec![0]), Poly::constant(&k, 1, PadicScalar::one(&k)))],
        )
        .unwrap();
        let rep = cr_norm(&f, rat(1, 1), 3).unwrap();
        assert!(rep.norm.is_tight());
        assert_eq!(rep.norm.lower, Magnitude::one());
        // on ϖ^2 O the jump happens at |y| = q^{-1}, so the ratio is q^r
        let g = LocPolyFun::construct(
            &k,
            2,
            Default::default(),
            [(CosetRep::new(vec![0, 0]), Poly::constant(&k, 1, PadicScalar::one(&k)))],
        )
        .unwrap();
        let rep = cr_norm(&g, rat(1, 1), 3).unwrap();
        assert!(rep.norm.is_tight());
        assert_eq!(rep.norm.lower, Magnitude::q_pow(&k, rat(1, 1)));
    }

    #[test]
    fn sup_of_norm_form_is_one() {
        let k = field(3, 2, 1);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[1, 1]), PadicScalar::one(&k));
        let iv = sup_abs(&f, &CosetRep::zero(0), 4).unwrap();
        assert!(iv.is_tight());
        assert_eq!(iv.lower, Magnitude::one());
        let small = sup_abs(&f, &CosetRep::zero(1), 4).unwrap();
        assert_eq!(small.lower, Magnitude::q_pow(&k, rat(-2, 1)));
    }

    #[test]
    fn sup_needs_refinement_when_cancellation_occurs() {
        // z^2 - z on Z_3 has sup 1 but vanishes at 0 and 1
        let k = field(3, 1, 1);
        let p = Poly::from_terms(
            &k,
            1,
            [(MultiIndex::new(&[2]), PadicScalar::one(&k)), (MultiIndex::new(&[1]), PadicScalar::from_i64(&k, -1))],
        );
        let f = LocPolyFun::global(&k, p);
        let iv = sup_abs(&f, &CosetRep::zero(0), 3).unwrap();
        assert!(iv.is_tight());
        assert_eq!(iv.lower, Magnitude::one());
        // on 3Z_3: |z||z-1| = |z| ≤ 1/3
        let iv = sup_abs(&f, &CosetRep::zero(1), 3).unwrap();
        assert_eq!(iv.lower, Magnitude::q_pow(&k, rat(-1, 1)));
    }

    #[test]
    fn profile_decreases_for_smooth_function() {
        let k = field(2, 1, 1);
        let f = LocPolyFun::monomial(&k, MultiIndex::new(&[2]), PadicScalar::one(&k));
        let prof = remainder_profile(&f, rat(1, 1), 3, 4).unwrap();
        // ε = y^2 for r = 1: sup over |y| ≤ 2^{-h} of |y|^2 2^{h} = 2^{-h}
        for (h, iv) in prof.iter().enumerate() {
            assert!(iv.is_tight());
            assert_eq!(iv.lower, Magnitude::q_pow(&k, rat(-(h as i64), 1)));
        }
    }
}
