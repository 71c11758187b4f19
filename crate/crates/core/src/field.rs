//! Tamely ramified fields `F = Q_q(ϖ)` with `ϖ^e = p`, and arithmetic in their
//! integer rings.
//!
//! An integral element is stored as `Σ_{k<e} c_k(x) ϖ^k` where each `c_k` lives
//! in `Z_q = Z_p[x]/(G)` and `G` lifts the smallest monic irreducible
//! polynomial of degree `f` over `F_p`. Coefficients are kept modulo a power of
//! `p` that matches the ϖ-adic precision of the element.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest absolute degree `d = e f` supported.
pub const MAX_DEGREE: usize = 8;
/// Largest residue field size supported.
pub const MAX_RESIDUE_SIZE: u64 = 100_000;

/// `(p, f, e)` with `e | p - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u64,
    pub f: u32,
    pub e: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

impl FieldDescriptor {
    pub fn new(p: u64, f: u32, e: u32) -> Result<Self> {
        let desc = FieldDescriptor { p, f, e };
        desc.validate()?;
        Ok(desc)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) || self.p > 1 << 20 {
            return Err(Error::UnsupportedField(format!("p = {} is not a supported prime", self.p)));
        }
        if self.f == 0 || self.e == 0 {
            return Err(Error::UnsupportedField("f and e must be positive".into()));
        }
        if !(self.p - 1).is_multiple_of(self.e as u64) {
            return Err(Error::UnsupportedField(format!("e = {} does not divide p - 1 = {}", self.e, self.p - 1)));
        }
        if (self.e * self.f) as usize > MAX_DEGREE {
            return Err(Error::UnsupportedField(format!("degree e*f = {} exceeds {}", self.e * self.f, MAX_DEGREE)));
        }
        match self.p.checked_pow(self.f) {
            Some(q) if q <= MAX_RESIDUE_SIZE => Ok(()),
            _ => Err(Error::UnsupportedField("residue field too large".into())),
        }
    }

    /// Absolute degree `d = e f`.
    pub fn degree(&self) -> usize {
        (self.e * self.f) as usize
    }

    /// Residue field size `q = p^f`.
    pub fn q(&self) -> u64 {
        self.p.pow(self.f)
    }
}

impl std::fmt::Display for FieldDescriptor {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fmt, "(p={}, f={}, e={})", self.p, self.f, self.e)
    }
}

/// Coefficient vector of an integral element; slot `k * f + i` holds the
/// coefficient of `x^i ϖ^k`.
pub type Raw = [u64; MAX_DEGREE];

pub(crate) const RAW_ZERO: Raw = [0; MAX_DEGREE];

/// An embedding `σ_{j,k}`: Frobenius to the `j` on `Z_q`, `ϖ ↦ ζ_e^k ϖ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Embedding {
    pub frob: u32,
    pub twist: u32,
}

/// Shared handle on a field context.
pub type Field = Arc<FieldCtx>;

/// Precomputed data for one field at one working precision.
pub struct FieldCtx {
    desc: FieldDescriptor,
    q: u64,
    precision: u32,
    kmax: u32,
    ppow: Vec<u64>,
    modulus: Vec<u64>,
    frob: Vec<Vec<Vec<u64>>>,
    zeta_pows: Vec<u64>,
    teich: Vec<OnceLock<Raw>>,
    embeddings: Vec<Embedding>,
}

impl std::fmt::Debug for FieldCtx {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fmt, "Field{} @ {}", self.desc, self.precision)
    }
}

// ---------------------------------------------------------------------------
// polynomials over F_p, used only to pick the defining polynomial

fn fp_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn fp_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    fp_trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = fp_pow(b[db], p - 2, p);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let c = r[r.len() - 1] * lead_inv % p;
        for (i, &bi) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - c * bi % p) % p;
        }
        fp_trim(&mut r);
    }
    r
}

fn fp_mulmod(a: &[u64], b: &[u64], g: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    fp_rem(&prod, g, p)
}

fn fp_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    fp_trim(&mut x);
    fp_trim(&mut y);
    while !y.is_empty() {
        let r = fp_rem(&x, &y, p);
        x = y;
        y = r;
    }
    x
}

/// Ben-Or test: no factor of degree `<= deg/2`.
fn fp_irreducible(g: &[u64], p: u64) -> bool {
    let deg = g.len() - 1;
    let mut xpow = vec![0, 1];
    for _ in 0..deg / 2 {
        let mut acc = vec![1u64];
        let mut base = xpow.clone();
        let mut exp = p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = fp_mulmod(&acc, &base, g, p);
            }
            base = fp_mulmod(&base, &base, g, p);
            exp >>= 1;
        }
        xpow = acc;
        let mut diff = xpow.clone();
        diff.resize(diff.len().max(2), 0);
        diff[1] = (diff[1] + p - 1) % p;
        let gcd = fp_gcd(g, &diff, p);
        if gcd.len() != 1 {
            return false;
        }
    }
    true
}

/// Smallest monic irreducible polynomial of degree `f` over `F_p`, ordered by
/// the integer `Σ g_i p^i` of its lower coefficients. Returns `g_0..g_{f-1}`.
fn smallest_irreducible(p: u64, f: u32) -> Vec<u64> {
    if f == 1 {
        return vec![0];
    }
    let count = p.pow(f);
    for code in 0..count {
        let mut g: Vec<u64> = (0..f).map(|i| code / p.pow(i) % p).collect();
        g.push(1);
        if g[0] != 0 && fp_irreducible(&g, p) {
            g.pop();
            return g;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

// ---------------------------------------------------------------------------

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

impl FieldCtx {
    /// Builds a context. `precision` is the relative precision cap in
    /// ϖ-digits; `None` selects the default.
    pub fn new(desc: FieldDescriptor, precision: Option<u32>) -> Result<Field> {
        desc.validate()?;
        let p = desc.p;
        let mut kmax = 0u32;
        let mut pk: u64 = 1;
        let mut ppow = vec![1u64];
        while let Some(next) = pk.checked_mul(p) {
            if next >= 1 << 62 {
                break;
            }
            pk = next;
            kmax += 1;
            ppow.push(pk);
        }
        let cap = desc.e * kmax;
        let precision = match precision {
            None => cap.min(64),
            Some(0) => return Err(Error::InvalidParameters("precision must be positive".into())),
            Some(m) if m > cap => {
                return Err(Error::InvalidParameters(format!(
                    "precision {m} exceeds the supported cap {cap} for p = {p}"
                )))
            }
            Some(m) => m,
        };
        let q = desc.q();
        let f = desc.f as usize;
        let e = desc.e as usize;
        let mut embeddings = Vec::with_capacity(desc.degree());
        for j in 0..desc.f {
            for k in 0..desc.e {
                embeddings.push(Embedding { frob: j, twist: k });
            }
        }
        let mut ctx = FieldCtx {
            desc,
            q,
            precision,
            kmax,
            ppow,
            modulus: smallest_irreducible(p, desc.f),
            frob: Vec::new(),
            zeta_pows: vec![1; e],
            teich: (0..q).map(|_| OnceLock::new()).collect(),
            embeddings,
        };
        let pm = ctx.ppow[kmax as usize];

        // Frobenius: the root of G congruent to x^p.
        let mut x = vec![0u64; f];
        let mut one = vec![0u64; f];
        one[0] = 1;
        if f > 1 {
            x[1] = 1;
        }
        let mut frob_x = if f == 1 { vec![0] } else { ctx.zq_pow(&x, p, pm) };
        if f > 1 {
            for _ in 0..128 {
                let (g_val, g_der) = ctx.eval_modulus(&frob_x, pm);
                let inv = ctx.zq_inv(&g_der, pm);
                let step = ctx.zq_mul(&g_val, &inv, pm);
                let next: Vec<u64> = frob_x.iter().zip(&step).map(|(&a, &b)| submod(a, b, pm)).collect();
                if next == frob_x {
                    break;
                }
                frob_x = next;
            }
        }
        let powers_of = |ctx: &FieldCtx, y: &[u64]| {
            let mut pows = Vec::with_capacity(f);
            let mut acc = one.clone();
            for _ in 0..f {
                pows.push(acc.clone());
                acc = ctx.zq_mul(&acc, y, pm);
            }
            pows
        };
        let frob1 = powers_of(&ctx, &frob_x);
        let mut images = vec![powers_of(&ctx, &x)];
        let mut current = x.clone();
        for _ in 1..f {
            let mut next = vec![0u64; f];
            for (i, &c) in current.iter().enumerate() {
                for t in 0..f {
                    next[t] = addmod(next[t], mulmod(c, frob1[i][t], pm), pm);
                }
            }
            current = next;
            images.push(powers_of(&ctx, &current));
        }
        ctx.frob = images;

        // ζ_e = teich(g)^((p-1)/e) for a generator g of F_p^*.
        if e > 1 {
            let gen = (2..p)
                .find(|&g| {
                    let order = p - 1;
                    let mut n = order;
                    let mut d = 2;
                    let mut ok = true;
                    while d * d <= n {
                        if n.is_multiple_of(d) {
                            if fp_pow(g, order / d, p) == 1 {
                                ok = false;
                            }
                            while n.is_multiple_of(d) {
                                n /= d;
                            }
                        }
                        d += 1;
                    }
                    if n > 1 && fp_pow(g, order / n, p) == 1 {
                        ok = false;
                    }
                    ok
                })
                .expect("F_p^* is cyclic");
            let mut t = gen;
            for _ in 0..=kmax {
                t = pow_mod(t, p, pm);
            }
            let zeta = pow_mod(t, (p - 1) / e as u64, pm);
            let mut acc = 1u64;
            for k in 0..e {
                ctx.zeta_pows[k] = acc;
                acc = mulmod(acc, zeta, pm);
            }
        }
        Ok(Arc::new(ctx))
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        self.desc
    }
    pub fn p(&self) -> u64 {
        self.desc.p
    }
    pub fn f(&self) -> u32 {
        self.desc.f
    }
    pub fn e(&self) -> u32 {
        self.desc.e
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn degree(&self) -> usize {
        self.desc.degree()
    }
    /// Relative precision cap `M`, in ϖ-digits.
    pub fn precision(&self) -> u32 {
        self.precision
    }
    /// Embeddings `σ_{j,k}` in lexicographic order of `(j, k)`.
    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }
    /// Lower coefficients `g_0..g_{f-1}` of the monic defining polynomial.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub(crate) fn same_field(&self, other: &FieldCtx) -> bool {
        self.desc == other.desc
    }

    // ---- Z_q arithmetic modulo m ------------------------------------------

    fn zq_mul(&self, a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
        let f = self.desc.f as usize;
        let mut out = vec![0u64; f];
        zq_mul_into(a, b, &self.modulus, m, &mut out);
        out
    }

    fn zq_pow(&self, a: &[u64], mut exp: u64, m: u64) -> Vec<u64> {
        let f = self.desc.f as usize;
        let mut acc = vec![0u64; f];
        acc[0] = 1 % m;
        let mut base = a.to_vec();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.zq_mul(&acc, &base, m);
            }
            exp >>= 1;
            if exp > 0 {
                base = self.zq_mul(&base, &base, m);
            }
        }
        acc
    }

    /// `G(y)` and `G'(y)` modulo `m`.
    fn eval_modulus(&self, y: &[u64], m: u64) -> (Vec<u64>, Vec<u64>) {
        let f = self.desc.f as usize;
        let mut coeffs: Vec<u64> = self.modulus.iter().map(|&c| c % m).collect();
        coeffs.push(1);
        let mut val = vec![0u64; f];
        let mut der = vec![0u64; f];
        for deg in (0..=f).rev() {
            der = self.zq_mul(&der, y, m);
            for t in 0..f {
                der[t] = addmod(der[t], val[t], m);
            }
            val = self.zq_mul(&val, y, m);
            val[0] = addmod(val[0], coeffs[deg], m);
        }
        (val, der)
    }

    /// Inverse of a unit of `Z_q` modulo `m = p^K`.
    fn zq_inv(&self, a: &[u64], m: u64) -> Vec<u64> {
        let p = self.desc.p;
        let residue: Vec<u64> = a.iter().map(|&c| c % p).collect();
        let mut v = self.zq_pow(&residue, self.q - 2, p);
        if self.q == 2 {
            v = residue.clone();
        }
        for _ in 0..8 {
            let av = self.zq_mul(a, &v, m);
            let mut two_minus = av.iter().map(|&c| submod(0, c, m)).collect::<Vec<_>>();
            two_minus[0] = addmod(two_minus[0], 2 % m, m);
            let next = self.zq_mul(&v, &two_minus, m);
            if next == v {
                break;
            }
            v = next;
        }
        v
    }

    // ---- integral elements at ϖ-precision n --------------------------------

    /// `ζ_e^k` modulo the working modulus.
    pub(crate) fn zeta_pow(&self, k: u32) -> u64 {
        self.zeta_pows[k as usize % self.desc.e as usize]
    }

    /// Number of `p`-digits kept for the `ϖ^k` coefficient at precision `n`.
    #[inline]
    pub(crate) fn pdigits(&self, n: u32, k: usize) -> u32 {
        let k = k as u32;
        if n <= k {
            0
        } else {
            (n - k).div_ceil(self.desc.e)
        }
    }

    #[inline]
    pub(crate) fn pmod(&self, n: u32, k: usize) -> u64 {
        self.ppow[self.pdigits(n, k) as usize]
    }

    pub(crate) fn raw_reduce(&self, a: &mut Raw, n: u32) {
        let f = self.desc.f as usize;
        for k in 0..self.desc.e as usize {
            let m = self.pmod(n, k);
            for i in 0..f {
                a[k * f + i] %= m;
            }
        }
        for slot in a.iter_mut().skip(self.degree()) {
            *slot = 0;
        }
    }

    pub(crate) fn raw_add(&self, a: &Raw, b: &Raw, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let mut out = RAW_ZERO;
        for k in 0..self.desc.e as usize {
            let m = self.pmod(n, k);
            for i in 0..f {
                out[k * f + i] = addmod(a[k * f + i] % m, b[k * f + i] % m, m);
            }
        }
        out
    }

    pub(crate) fn raw_sub(&self, a: &Raw, b: &Raw, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let mut out = RAW_ZERO;
        for k in 0..self.desc.e as usize {
            let m = self.pmod(n, k);
            for i in 0..f {
                out[k * f + i] = submod(a[k * f + i] % m, b[k * f + i] % m, m);
            }
        }
        out
    }

    pub(crate) fn raw_neg(&self, a: &Raw, n: u32) -> Raw {
        self.raw_sub(&RAW_ZERO, a, n)
    }

    pub(crate) fn raw_mul(&self, a: &Raw, b: &Raw, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let e = self.desc.e as usize;
        let m = self.pmod(n, 0);
        let p = self.desc.p;
        let mut out = RAW_ZERO;
        let mut tmp = [0u64; MAX_DEGREE];
        for k1 in 0..e {
            let a_k = &a[k1 * f..k1 * f + f];
            if a_k.iter().all(|&c| c == 0) {
                continue;
            }
            for k2 in 0..e {
                let b_k = &b[k2 * f..k2 * f + f];
                if b_k.iter().all(|&c| c == 0) {
                    continue;
                }
                let mut slot = k1 + k2;
                let mut carry = 1u64;
                if slot >= e {
                    slot -= e;
                    carry = p % m;
                }
                if self.pdigits(n, slot) == 0 {
                    continue;
                }
                zq_mul_into(a_k, b_k, &self.modulus, m, &mut tmp[..f]);
                for i in 0..f {
                    let v = if carry == 1 { tmp[i] } else { mulmod(tmp[i], carry, m) };
                    out[slot * f + i] = addmod(out[slot * f + i], v, m);
                }
            }
        }
        self.raw_reduce(&mut out, n);
        out
    }

    /// Multiplies by the field integer `c` (taken modulo the working modulus).
    pub(crate) fn raw_scale(&self, a: &Raw, c: u64, n: u32) -> Raw {
        let m = self.pmod(n, 0);
        let c = c % m;
        let mut out = RAW_ZERO;
        for (o, &x) in out.iter_mut().zip(a.iter()).take(self.degree()) {
            *o = mulmod(x, c, m);
        }
        self.raw_reduce(&mut out, n);
        out
    }

    /// `a ϖ^t`, result at precision `n`.
    pub(crate) fn raw_mul_pi(&self, a: &Raw, t: u32, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let e = self.desc.e as usize;
        let mut out = RAW_ZERO;
        for k in 0..e {
            let target = k + t as usize;
            let s = (target / e) as u32;
            let slot = target % e;
            let m = self.pmod(n, slot);
            if m == 1 {
                continue;
            }
            if s > self.kmax {
                continue;
            }
            let factor = self.ppow[(s.min(self.kmax)) as usize];
            for i in 0..f {
                out[slot * f + i] = mulmod(a[k * f + i], factor, m);
            }
        }
        out
    }

    /// `a / ϖ^t` for `a` divisible by `ϖ^t`, result at precision `n`.
    pub(crate) fn raw_div_pi(&self, a: &Raw, t: u32, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let e = self.desc.e as i64;
        let mut out = RAW_ZERO;
        for k in 0..e as usize {
            let shifted = k as i64 - t as i64;
            let s = shifted.div_euclid(e);
            let slot = shifted.rem_euclid(e) as usize;
            let m = self.pmod(n, slot);
            for i in 0..f {
                let c = a[k * f + i];
                let v = if s >= 0 {
                    mulmod(c, self.ppow[s as usize], m)
                } else {
                    let d = self.ppow[(-s) as usize];
                    debug_assert_eq!(c % d, 0);
                    (c / d) % m
                };
                out[slot * f + i] = v;
            }
        }
        out
    }

    /// ϖ-adic valuation, or `None` if `a` vanishes at precision `n`.
    pub(crate) fn raw_val(&self, a: &Raw, n: u32) -> Option<u32> {
        let f = self.desc.f as usize;
        let p = self.desc.p;
        let mut best: Option<u32> = None;
        for k in 0..self.desc.e as usize {
            let m = self.pmod(n, k);
            for i in 0..f {
                let mut c = a[k * f + i] % m;
                if c == 0 {
                    continue;
                }
                let mut v = 0u32;
                while c.is_multiple_of(p) {
                    c /= p;
                    v += 1;
                }
                let w = v * self.desc.e + k as u32;
                best = Some(best.map_or(w, |b| b.min(w)));
            }
        }
        best
    }

    /// Inverse of a unit at precision `n`.
    pub(crate) fn raw_inv(&self, a: &Raw, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let p = self.desc.p;
        let residue: Vec<u64> = a[..f].iter().map(|&c| c % p).collect();
        let inv0 = if self.q == 2 { residue } else { self.zq_pow(&residue, self.q - 2, p) };
        let mut v = RAW_ZERO;
        v[..f].copy_from_slice(&inv0);
        let mut two = RAW_ZERO;
        two[0] = 2;
        for _ in 0..12 {
            let av = self.raw_mul(a, &v, n);
            let corr = self.raw_sub(&two, &av, n);
            let next = self.raw_mul(&v, &corr, n);
            if next == v {
                break;
            }
            v = next;
        }
        v
    }

    /// Image of `a` under `σ`.
    pub(crate) fn raw_embed(&self, a: &Raw, sigma: Embedding, n: u32) -> Raw {
        let f = self.desc.f as usize;
        let e = self.desc.e as usize;
        let mut out = RAW_ZERO;
        let images = &self.frob[sigma.frob as usize];
        for k in 0..e {
            let m = self.pmod(n, k);
            if m == 1 {
                continue;
            }
            let zeta = self.zeta_pows[(sigma.twist as usize * k) % e] % m;
            for i in 0..f {
                let c = a[k * f + i] % m;
                if c == 0 {
                    continue;
                }
                for t in 0..f {
                    let term = mulmod(c, images[i][t] % m, m);
                    out[k * f + t] = addmod(out[k * f + t], term, m);
                }
            }
            if zeta != 1 {
                for t in 0..f {
                    out[k * f + t] = mulmod(out[k * f + t], zeta, m);
                }
            }
        }
        out
    }

    /// Residue index `Σ t_i p^i` of the constant coefficient modulo `p`.
    pub(crate) fn raw_residue(&self, a: &Raw) -> u64 {
        let f = self.desc.f as usize;
        let p = self.desc.p;
        let mut idx = 0u64;
        for i in (0..f).rev() {
            idx = idx * p + a[i] % p;
        }
        idx
    }

    /// Teichmüller lift of the residue class with index `t`, at full precision.
    pub(crate) fn teich_raw(&self, t: u64) -> &Raw {
        self.teich[t as usize].get_or_init(|| {
            let f = self.desc.f as usize;
            let p = self.desc.p;
            let pm = self.ppow[self.kmax as usize];
            let mut y: Vec<u64> = (0..f).map(|i| t / p.pow(i as u32) % p).collect();
            for _ in 0..=self.kmax {
                y = self.zq_pow(&y, self.q, pm);
            }
            let mut out = RAW_ZERO;
            out[..f].copy_from_slice(&y);
            out
        })
    }

    /// Teichmüller digits of an integral element known to precision `n`;
    /// returns at most `count` digits (fewer if precision runs out).
    pub(crate) fn raw_digits(&self, a: &Raw, n: u32, count: usize) -> Vec<u32> {
        let mut cur = *a;
        let mut prec = n;
        let mut out = Vec::with_capacity(count);
        while out.len() < count && prec > 0 {
            let t = self.raw_residue(&cur);
            out.push(t as u32);
            let diff = self.raw_sub(&cur, self.teich_raw(t), prec);
            prec -= 1;
            cur = self.raw_div_pi(&diff, 1, prec);
        }
        out
    }
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn zq_mul_into(a: &[u64], b: &[u64], modulus: &[u64], m: u64, out: &mut [u64]) {
    let f = modulus.len();
    let mut prod = [0u128; 2 * MAX_DEGREE];
    let m128 = m as u128;
    for (i, &ai) in a.iter().enumerate().take(f) {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(f) {
            let t = (ai as u128 * bj as u128) % m128;
            prod[i + j] = (prod[i + j] + t) % m128;
        }
    }
    for t in (f..2 * f - 1).rev() {
        let c = prod[t];
        if c == 0 {
            continue;
        }
        for (i, &gi) in modulus.iter().enumerate() {
            if gi == 0 {
                continue;
            }
            let sub = (c * gi as u128) % m128;
            prod[t - f + i] = (prod[t - f + i] + m128 - sub) % m128;
        }
    }
    for i in 0..f {
        out[i] = prod[i] as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wild_ramification() {
        assert!(matches!(FieldDescriptor::new(3, 1, 3), Err(Error::UnsupportedField(_))));
        assert!(FieldDescriptor::new(3, 1, 2).is_ok());
        assert!(FieldDescriptor::new(2, 1, 2).is_err());
        assert!(FieldDescriptor::new(4, 1, 1).is_err());
    }

    #[test]
    fn defining_polynomials_are_irreducible() {
        assert_eq!(smallest_irreducible(3, 2), vec![1, 0]);
        assert_eq!(smallest_irreducible(2, 2), vec![1, 1]);
        assert_eq!(smallest_irreducible(2, 3), vec![1, 1, 0]);
    }

    #[test]
    fn default_precision_respects_word_size() {
        let f5 = FieldCtx::new(FieldDescriptor::new(5, 1, 1).unwrap(), None).unwrap();
        assert_eq!(f5.precision(), 26);
        let f2 = FieldCtx::new(FieldDescriptor::new(2, 1, 1).unwrap(), None).unwrap();
        assert_eq!(f2.precision(), 61);
        let r3 = FieldCtx::new(FieldDescriptor::new(3, 1, 2).unwrap(), None).unwrap();
        assert_eq!(r3.precision(), 64);
        assert!(FieldCtx::new(FieldDescriptor::new(5, 1, 1).unwrap(), Some(40)).is_err());
    }

    #[test]
    fn frobenius_fixes_modulus_root() {
        let ctx = FieldCtx::new(FieldDescriptor::new(3, 2, 1).unwrap(), Some(20)).unwrap();
        let pm = ctx.pmod(20, 0);
        let root = ctx.frob[1][1].clone();
        let (val, _) = ctx.eval_modulus(&root, pm);
        assert!(val.iter().all(|&c| c == 0));
        // Frob^2 = identity on x
        assert_eq!(ctx.frob[0][1], vec![0, 1]);
    }

    #[test]
    fn teichmuller_lifts_are_roots_of_unity() {
        let ctx = FieldCtx::new(FieldDescriptor::new(3, 2, 1).unwrap(), Some(20)).unwrap();
        for t in 1..9u64 {
            let w = *ctx.teich_raw(t);
            let mut acc = w;
            for _ in 1..8 {
                acc = ctx.raw_mul(&acc, &w, 20);
            }
            let mut one = RAW_ZERO;
            one[0] = 1;
            assert_eq!(acc, one, "teich({t})^8");
            assert_eq!(ctx.raw_residue(&w), t);
        }
    }

    #[test]
    fn unit_inverse_roundtrip() {
        let ctx = FieldCtx::new(FieldDescriptor::new(3, 1, 2).unwrap(), Some(30)).unwrap();
        let mut a = RAW_ZERO;
        a[0] = 2;
        a[1] = 7;
        let inv = ctx.raw_inv(&a, 30);
        let mut one = RAW_ZERO;
        one[0] = 1;
        assert_eq!(ctx.raw_mul(&a, &inv, 30), one);
    }

    #[test]
    fn ramified_uniformizer_squares_to_p() {
        let ctx = FieldCtx::new(FieldDescriptor::new(3, 1, 2).unwrap(), Some(20)).unwrap();
        let mut pi = RAW_ZERO;
        pi[1] = 1;
        let sq = ctx.raw_mul(&pi, &pi, 20);
        let mut three = RAW_ZERO;
        three[0] = 3;
        assert_eq!(sq, three);
        assert_eq!(ctx.raw_val(&sq, 20), Some(2));
        let twisted = ctx.raw_embed(&pi, Embedding { frob: 0, twist: 1 }, 20);
        let mut minus_pi = RAW_ZERO;
        minus_pi[1] = ctx.pmod(20, 1) - 1;
        assert_eq!(twisted, minus_pi);
    }

    #[test]
    fn digits_of_teichmuller_sum() {
        let ctx = FieldCtx::new(FieldDescriptor::new(5, 1, 1).unwrap(), Some(10)).unwrap();
        let a = ctx.raw_add(ctx.teich_raw(2), &ctx.raw_mul_pi(ctx.teich_raw(3), 1, 10), 10);
        assert_eq!(ctx.raw_digits(&a, 10, 4), vec![2, 3, 0, 0]);
    }
}
