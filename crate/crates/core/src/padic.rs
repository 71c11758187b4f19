//! Capped relative precision scalars in `F`, absolute values and magnitudes.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::field::{Embedding, Field, FieldCtx, Raw, RAW_ZERO};

/// Rational exponents.
pub type Q = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Q {
    Q::new(num, den)
}

/// Floor of a rational as an integer.
pub fn floor_q(x: Q) -> i64 {
    x.floor().to_integer()
}

/// A nonnegative real of the form `p^{-w}` with `w` rational, or zero.
///
/// Ordering is by size of the real number, so `p^{-1} < p^{0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Magnitude(Option<Q>);

impl Magnitude {
    pub const ZERO: Magnitude = Magnitude(None);

    pub fn one() -> Self {
        Magnitude(Some(Q::zero()))
    }

    /// `p^{-w}`.
    pub fn from_exponent(w: Q) -> Self {
        Magnitude(Some(w))
    }

    /// `q^x` for the residue size of `field`.
    pub fn q_pow(field: &FieldCtx, x: Q) -> Self {
        Magnitude(Some(-x * field.f() as i64))
    }

    /// The exponent `w` with `self = p^{-w}`, `None` for zero.
    pub fn exponent(&self) -> Option<Q> {
        self.0
    }

    /// `log_q` of the magnitude, `None` for zero.
    pub fn log_q(&self, field: &FieldCtx) -> Option<Q> {
        self.0.map(|w| -w / field.f() as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_none()
    }

    pub fn mul(self, other: Magnitude) -> Magnitude {
        match (self.0, other.0) {
            (Some(a), Some(b)) => Magnitude(Some(a + b)),
            _ => Magnitude::ZERO,
        }
    }

    /// `self / other`; `None` when `other` is zero.
    pub fn div(self, other: Magnitude) -> Option<Magnitude> {
        match (self.0, other.0) {
            (_, None) => None,
            (None, _) => Some(Magnitude::ZERO),
            (Some(a), Some(b)) => Some(Magnitude(Some(a - b))),
        }
    }

    pub fn max(self, other: Magnitude) -> Magnitude {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Magnitude) -> Magnitude {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Approximate real value, for display only.
    pub fn to_f64(&self, p: u64) -> f64 {
        match self.0 {
            None => 0.0,
            Some(w) => (p as f64).powf(-(*w.numer() as f64) / (*w.denom() as f64)),
        }
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Magnitude {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0, other.0) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => b.cmp(&a),
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => write!(fmt, "0"),
            Some(w) => write!(fmt, "p^({})", -w),
        }
    }
}

/// `|x| = p^{-w}`, either exact or an upper bound (for values that are zero
/// to the working precision).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AbsValue {
    /// `w` with `|x| = p^{-w}`; `None` means `x` is exactly zero.
    pub exponent: Option<Q>,
    pub exact: bool,
}

impl AbsValue {
    pub fn upper(&self) -> Magnitude {
        Magnitude(self.exponent)
    }

    pub fn lower(&self) -> Magnitude {
        if self.exact {
            Magnitude(self.exponent)
        } else {
            Magnitude::ZERO
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    /// Zero; `Some(n)` means only known modulo `ϖ^n`.
    Zero(Option<i64>),
    /// `ϖ^val · unit`, the unit known modulo `ϖ^rel`.
    Unit { val: i64, rel: u32, unit: Raw },
}

/// An element of `F` with capped relative precision.
#[derive(Clone)]
pub struct PadicScalar {
    field: Field,
    repr: Repr,
}

/// Arithmetic operations on scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl PadicScalar {
    /// Exact zero.
    pub fn zero(field: &Field) -> Self {
        PadicScalar { field: field.clone(), repr: Repr::Zero(None) }
    }

    /// Zero known only modulo `ϖ^abs_prec`.
    pub fn zero_to(field: &Field, abs_prec: i64) -> Self {
        PadicScalar { field: field.clone(), repr: Repr::Zero(Some(abs_prec)) }
    }

    pub fn one(field: &Field) -> Self {
        Self::from_i64(field, 1)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Builds `ϖ^val · raw` where `raw` is integral and known to precision `n`.
    fn from_raw(field: &Field, raw: &Raw, n: u32, val: i64) -> Self {
        match field.raw_val(raw, n) {
            None => PadicScalar::zero_to(field, val + n as i64),
            Some(v) => {
                let rel = (n - v).min(field.precision());
                let unit = if v == 0 {
                    let mut u = *raw;
                    field.raw_reduce(&mut u, rel);
                    u
                } else {
                    let mut u = field.raw_div_pi(raw, v, n - v);
                    field.raw_reduce(&mut u, rel);
                    u
                };
                PadicScalar { field: field.clone(), repr: Repr::Unit { val: val + v as i64, rel, unit } }
            }
        }
    }

    pub fn from_i64(field: &Field, value: i64) -> Self {
        if value == 0 {
            return Self::zero(field);
        }
        let (v, unit) = split_p(value.unsigned_abs() as u128, field.p());
        let mut raw = RAW_ZERO;
        let n = field.precision();
        let m = field.pmod(n, 0) as u128;
        raw[0] = (unit % m) as u64;
        if value < 0 {
            raw = field.raw_neg(&raw, n);
        }
        let s = Self::from_raw(field, &raw, n, 0);
        s.mul_pi_pow(v as i64 * field.e() as i64)
    }

    pub fn from_u128(field: &Field, value: u128) -> Self {
        if value == 0 {
            return Self::zero(field);
        }
        let (v, unit) = split_p(value, field.p());
        let mut raw = RAW_ZERO;
        let n = field.precision();
        raw[0] = (unit % field.pmod(n, 0) as u128) as u64;
        Self::from_raw(field, &raw, n, 0).mul_pi_pow(v as i64 * field.e() as i64)
    }

    pub fn from_bigint(field: &Field, value: &BigInt) -> Self {
        if value.is_zero() {
            return Self::zero(field);
        }
        let p = BigInt::from(field.p());
        let mut v = 0i64;
        let mut u = value.abs();
        loop {
            let (quo, rem) = u.div_rem(&p);
            if !rem.is_zero() {
                break;
            }
            u = quo;
            v += 1;
        }
        let n = field.precision();
        let m = BigInt::from(field.pmod(n, 0));
        let mut raw = RAW_ZERO;
        raw[0] = u.mod_floor(&m).to_u64().expect("reduced below the modulus");
        if value.is_negative() {
            raw = field.raw_neg(&raw, n);
        }
        Self::from_raw(field, &raw, n, 0).mul_pi_pow(v * field.e() as i64)
    }

    /// `num / den` for integers.
    pub fn from_ratio(field: &Field, num: i64, den: i64) -> Result<Self> {
        Self::from_i64(field, num).checked_div(&Self::from_i64(field, den))
    }

    /// `ϖ^k`.
    pub fn uniformizer_pow(field: &Field, k: i64) -> Self {
        Self::one(field).mul_pi_pow(k)
    }

    /// The uniformizer `ϖ`.
    pub fn uniformizer(field: &Field) -> Self {
        Self::uniformizer_pow(field, 1)
    }

    /// Teichmüller representative of the residue class with index `t`.
    pub fn teichmuller(field: &Field, t: u64) -> Self {
        if t == 0 {
            return Self::zero(field);
        }
        let n = field.precision();
        let mut raw = *field.teich_raw(t);
        field.raw_reduce(&mut raw, n);
        Self::from_raw(field, &raw, n, 0)
    }

    /// `Σ_m teich(d_m) ϖ^m`; zero digits beyond the last nonzero one are exact.
    pub fn from_teich_digits(field: &Field, digits: &[u32]) -> Self {
        let Some(first) = digits.iter().position(|&d| d != 0) else {
            return Self::zero(field);
        };
        let n = field.precision();
        let mut raw = RAW_ZERO;
        for (m, &d) in digits.iter().enumerate().skip(first) {
            if d == 0 || (m - first) as u32 >= n {
                continue;
            }
            let shifted = field.raw_mul_pi(field.teich_raw(d as u64), (m - first) as u32, n);
            raw = field.raw_add(&raw, &shifted, n);
        }
        Self::from_raw(field, &raw, n, first as i64)
    }

    // ---- queries ----------------------------------------------------------

    /// Valuation in units where `val(p) = d`; `None` for zero.
    pub fn valuation(&self) -> Option<Q> {
        match self.repr {
            Repr::Unit { val, .. } => Some(Q::new(val * self.field.f() as i64, 1)),
            Repr::Zero(_) => None,
        }
    }

    /// ϖ-adic valuation; `None` for zero.
    pub fn pi_valuation(&self) -> Option<i64> {
        match self.repr {
            Repr::Unit { val, .. } => Some(val),
            Repr::Zero(_) => None,
        }
    }

    /// Relative precision in ϖ-digits (zero for zero elements).
    pub fn relative_precision(&self) -> u32 {
        match self.repr {
            Repr::Unit { rel, .. } => rel,
            Repr::Zero(_) => 0,
        }
    }

    /// Absolute precision `n` in ϖ-digits: the element is known modulo `ϖ^n`.
    /// `None` for exact zero.
    pub fn absolute_precision(&self) -> Option<i64> {
        match self.repr {
            Repr::Unit { val, rel, .. } => Some(val + rel as i64),
            Repr::Zero(a) => a,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(None))
    }

    /// Zero to the working precision (including exact zero).
    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(_))
    }

    /// `|x| = p^{-val_F(x)/…}` normalized so that `|ϖ| = q^{-1}`.
    pub fn abs(&self) -> AbsValue {
        let f = self.field.f() as i64;
        match self.repr {
            Repr::Unit { val, .. } => AbsValue { exponent: Some(Q::from_integer(val * f)), exact: true },
            Repr::Zero(None) => AbsValue { exponent: None, exact: true },
            Repr::Zero(Some(n)) => AbsValue { exponent: Some(Q::from_integer(n * f)), exact: false },
        }
    }

    /// Upper bound on `|x|`.
    pub fn abs_upper(&self) -> Magnitude {
        self.abs().upper()
    }

    /// Lower bound on `|x|`.
    pub fn abs_lower(&self) -> Magnitude {
        self.abs().lower()
    }

    /// Whether `x` lies in `O_F` (zero-to-precision counts as integral).
    pub fn is_integral(&self) -> bool {
        match self.repr {
            Repr::Unit { val, .. } => val >= 0,
            Repr::Zero(_) => true,
        }
    }

    /// Teichmüller digits of the unit part (least significant first).
    pub fn unit_digits(&self) -> Vec<u32> {
        match &self.repr {
            Repr::Unit { rel, unit, .. } => self.field.raw_digits(unit, *rel, *rel as usize),
            Repr::Zero(_) => Vec::new(),
        }
    }

    /// First `count` Teichmüller digits of an integral element.
    pub fn teich_digits(&self, count: usize) -> Result<Vec<u32>> {
        match &self.repr {
            Repr::Zero(None) => Ok(vec![0; count]),
            Repr::Zero(Some(n)) => {
                if (*n as usize) < count {
                    return Err(Error::PrecisionExhausted(format!("zero known to {n} digits, {count} requested")));
                }
                Ok(vec![0; count])
            }
            Repr::Unit { val, rel, unit } => {
                if *val < 0 {
                    return Err(Error::InvalidParameters("element is not integral".into()));
                }
                let val = *val as usize;
                if val >= count {
                    return Ok(vec![0; count]);
                }
                if val + (*rel as usize) < count {
                    return Err(Error::PrecisionExhausted(format!(
                        "element known to {} digits, {count} requested",
                        val + *rel as usize
                    )));
                }
                let mut out = vec![0; val];
                out.extend(self.field.raw_digits(unit, *rel, count - val));
                Ok(out)
            }
        }
    }

    // ---- arithmetic ---------------------------------------------------------

    fn check_field(&self, other: &PadicScalar) -> Result<()> {
        if self.field.same_field(&other.field) {
            Ok(())
        } else {
            Err(Error::FieldMismatch(format!("{} vs {}", self.field.descriptor(), other.field.descriptor())))
        }
    }

    /// Generic entry point for the four operations.
    pub fn arith(op: Op, x: &PadicScalar, y: &PadicScalar) -> Result<PadicScalar> {
        x.check_field(y)?;
        match op {
            Op::Add => Ok(x.add_unchecked(y, false)),
            Op::Sub => Ok(x.add_unchecked(y, true)),
            Op::Mul => Ok(x.mul_unchecked(y)),
            Op::Div => x.div_unchecked(y),
        }
    }

    pub fn checked_add(&self, other: &PadicScalar) -> Result<PadicScalar> {
        Self::arith(Op::Add, self, other)
    }
    pub fn checked_sub(&self, other: &PadicScalar) -> Result<PadicScalar> {
        Self::arith(Op::Sub, self, other)
    }
    pub fn checked_mul(&self, other: &PadicScalar) -> Result<PadicScalar> {
        Self::arith(Op::Mul, self, other)
    }
    pub fn checked_div(&self, other: &PadicScalar) -> Result<PadicScalar> {
        Self::arith(Op::Div, self, other)
    }

    fn add_unchecked(&self, other: &PadicScalar, negate: bool) -> PadicScalar {
        let field = &self.field;
        match (&self.repr, &other.repr) {
            (Repr::Zero(None), _) => {
                if negate {
                    other.neg()
                } else {
                    other.clone()
                }
            }
            (_, Repr::Zero(None)) => self.clone(),
            _ => {
                let ax = self.absolute_precision().unwrap();
                let ay = other.absolute_precision().unwrap();
                let abs = ax.min(ay);
                let vx = self.pi_valuation();
                let vy = other.pi_valuation();
                let vmin = match (vx, vy) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => return PadicScalar::zero_to(field, abs),
                };
                if abs <= vmin {
                    return PadicScalar::zero_to(field, abs);
                }
                let n = (abs - vmin) as u32;
                let mut acc = RAW_ZERO;
                if let Repr::Unit { val, unit, .. } = &self.repr {
                    acc = field.raw_mul_pi(unit, (val - vmin) as u32, n);
                }
                if let Repr::Unit { val, unit, .. } = &other.repr {
                    let shifted = field.raw_mul_pi(unit, (val - vmin) as u32, n);
                    acc = if negate { field.raw_sub(&acc, &shifted, n) } else { field.raw_add(&acc, &shifted, n) };
                }
                PadicScalar::from_raw(field, &acc, n, vmin)
            }
        }
    }

    fn mul_unchecked(&self, other: &PadicScalar) -> PadicScalar {
        let field = &self.field;
        match (&self.repr, &other.repr) {
            (Repr::Zero(None), _) | (_, Repr::Zero(None)) => PadicScalar::zero(field),
            (Repr::Zero(Some(a)), Repr::Zero(Some(b))) => PadicScalar::zero_to(field, a + b),
            (Repr::Zero(Some(a)), Repr::Unit { val, .. }) | (Repr::Unit { val, .. }, Repr::Zero(Some(a))) => {
                PadicScalar::zero_to(field, a + val)
            }
            (Repr::Unit { val: v1, rel: r1, unit: u1 }, Repr::Unit { val: v2, rel: r2, unit: u2 }) => {
                let rel = (*r1).min(*r2);
                let unit = field.raw_mul(u1, u2, rel);
                PadicScalar { field: field.clone(), repr: Repr::Unit { val: v1 + v2, rel, unit } }
            }
        }
    }

    fn div_unchecked(&self, other: &PadicScalar) -> Result<PadicScalar> {
        let field = &self.field;
        match (&self.repr, &other.repr) {
            (_, Repr::Zero(_)) => Err(Error::DivisionByZeroToPrecision),
            (Repr::Zero(None), _) => Ok(PadicScalar::zero(field)),
            (Repr::Zero(Some(a)), Repr::Unit { val, .. }) => Ok(PadicScalar::zero_to(field, a - val)),
            (Repr::Unit { val: v1, rel: r1, unit: u1 }, Repr::Unit { val: v2, rel: r2, unit: u2 }) => {
                let rel = (*r1).min(*r2);
                let inv = field.raw_inv(u2, rel);
                let unit = field.raw_mul(u1, &inv, rel);
                Ok(PadicScalar { field: field.clone(), repr: Repr::Unit { val: v1 - v2, rel, unit } })
            }
        }
    }

    pub fn neg(&self) -> PadicScalar {
        match &self.repr {
            Repr::Zero(_) => self.clone(),
            Repr::Unit { val, rel, unit } => PadicScalar {
                field: self.field.clone(),
                repr: Repr::Unit { val: *val, rel: *rel, unit: self.field.raw_neg(unit, *rel) },
            },
        }
    }

    /// `x ϖ^k`.
    pub fn mul_pi_pow(&self, k: i64) -> PadicScalar {
        match &self.repr {
            Repr::Zero(None) => self.clone(),
            Repr::Zero(Some(n)) => PadicScalar::zero_to(&self.field, n + k),
            Repr::Unit { val, rel, unit } => {
                PadicScalar { field: self.field.clone(), repr: Repr::Unit { val: val + k, rel: *rel, unit: *unit } }
            }
        }
    }

    pub fn inv(&self) -> Result<PadicScalar> {
        PadicScalar::one(&self.field).checked_div(self)
    }

    pub fn pow(&self, exp: u32) -> PadicScalar {
        let mut acc = PadicScalar::one(&self.field);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// Image under the embedding `σ`.
    pub fn embed(&self, sigma: Embedding) -> PadicScalar {
        match &self.repr {
            Repr::Zero(_) => self.clone(),
            Repr::Unit { val, rel, unit } => {
                let field = &self.field;
                let mut u = field.raw_embed(unit, sigma, *rel);
                let twist = (sigma.twist as i64 * val).rem_euclid(field.e() as i64) as u32;
                if twist != 0 {
                    u = field.raw_scale(&u, field.zeta_pow(twist), *rel);
                }
                PadicScalar { field: field.clone(), repr: Repr::Unit { val: *val, rel: *rel, unit: u } }
            }
        }
    }

    /// Equality to the common precision: the difference is zero to precision.
    pub fn eq_to_precision(&self, other: &PadicScalar) -> bool {
        self.field.same_field(&other.field) && self.add_unchecked(other, true).is_zero()
    }

    /// Integer-ring raw form at precision `n` (for integral elements).
    pub(crate) fn to_integral_raw(&self, n: u32) -> Option<Raw> {
        match &self.repr {
            Repr::Zero(_) => Some(RAW_ZERO),
            Repr::Unit { val, unit, .. } => {
                if *val < 0 {
                    return None;
                }
                let v = *val as u32;
                if v >= n {
                    return Some(RAW_ZERO);
                }
                Some(self.field.raw_mul_pi(unit, v, n))
            }
        }
    }

    // ---- serialization ----------------------------------------------------

    /// `p^(a/b) * [d0,d1,...]`: `a/b` is the valuation in powers of `p`
    /// (`val_ϖ / e`), digits are Teichmüller indices of the unit part. A value
    /// that is zero modulo `ϖ^n` is written `p^(n/e) * []`; exact zero is `0`.
    pub fn serialize(&self) -> String {
        let e = self.field.e() as i64;
        match &self.repr {
            Repr::Zero(None) => "0".to_string(),
            Repr::Zero(Some(n)) => format!("p^({}) * []", fmt_q(Q::new(*n, e))),
            Repr::Unit { val, .. } => {
                let digits = self.unit_digits();
                let body: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
                format!("p^({}) * [{}]", fmt_q(Q::new(*val, e)), body.join(","))
            }
        }
    }

    pub fn parse(field: &Field, text: &str) -> Result<PadicScalar> {
        let t = text.trim();
        if t == "0" {
            return Ok(Self::zero(field));
        }
        let err = || Error::Parse(format!("malformed scalar {text:?}"));
        let rest = t.strip_prefix("p^(").ok_or_else(err)?;
        let close = rest.find(')').ok_or_else(err)?;
        let exp = parse_q(&rest[..close]).ok_or_else(err)?;
        let rest = rest[close + 1..].trim_start();
        let rest = rest.strip_prefix('*').ok_or_else(err)?.trim();
        let inner = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(err)?;
        let scaled = exp * field.e() as i64;
        if !scaled.is_integer() {
            return Err(Error::Parse(format!("exponent {exp} is not a multiple of 1/e")));
        }
        let v = scaled.to_integer();
        if inner.trim().is_empty() {
            return Ok(Self::zero_to(field, v));
        }
        let digits: Vec<u32> =
            inner.split(',').map(|d| d.trim().parse::<u32>().map_err(|_| err())).collect::<Result<_>>()?;
        if digits.iter().any(|&d| d as u64 >= field.q()) || digits[0] == 0 {
            return Err(Error::Parse(format!("invalid digit list in {text:?}")));
        }
        if digits.len() as u32 > field.precision() {
            return Err(Error::PrecisionExhausted(format!(
                "{} digits exceed the working precision {}",
                digits.len(),
                field.precision()
            )));
        }
        let unit = Self::from_teich_digits(field, &digits);
        // keep exactly the stated number of digits
        let Repr::Unit { unit: raw, .. } = unit.repr else {
            return Err(err());
        };
        let rel = digits.len() as u32;
        let mut raw = raw;
        field.raw_reduce(&mut raw, rel);
        Ok(PadicScalar { field: field.clone(), repr: Repr::Unit { val: v, rel, unit: raw } })
    }

    /// Rational approximation `n / d` with `d` a power of `p` (for display).
    pub fn to_rational_approx(&self) -> Option<Ratio<BigInt>> {
        if self.field.degree() != 1 {
            return None;
        }
        match &self.repr {
            Repr::Zero(_) => Some(Ratio::from_integer(BigInt::zero())),
            Repr::Unit { val, rel, unit } => {
                let p = BigInt::from(self.field.p());
                let m = BigInt::from(self.field.pmod(*rel, 0));
                let mut u = BigInt::from(unit[0]);
                if u.clone() * 2 > m {
                    u -= m;
                }
                let scale = num_traits::pow(p, val.unsigned_abs() as usize);
                Some(if *val >= 0 { Ratio::from_integer(u * scale) } else { Ratio::new(u, scale) })
            }
        }
    }
}

fn split_p(mut value: u128, p: u64) -> (u32, u128) {
    let p = p as u128;
    let mut v = 0;
    while value.is_multiple_of(p) {
        value /= p;
        v += 1;
    }
    (v, value)
}

pub fn fmt_q(x: Q) -> String {
    if x.is_integer() {
        format!("{}", x.to_integer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(text: &str) -> Option<Q> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let num = a.trim().parse::<i64>().ok()?;
        let den = b.trim().parse::<i64>().ok()?;
        if den == 0 {
            return None;
        }
        Some(Q::new(num, den))
    } else {
        t.parse::<i64>().ok().map(Q::from_integer)
    }
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fmt, "{}", self.serialize())
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fmt, "{}", self.serialize())
    }
}

// Operator forms panic on a field mismatch; use `arith` to get an error instead.
macro_rules! binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait<&PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                PadicScalar::arith($op, self, rhs).expect("scalar operation")
            }
        }
        impl std::ops::$trait<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: PadicScalar) -> PadicScalar {
                PadicScalar::arith($op, &self, &rhs).expect("scalar operation")
            }
        }
        impl std::ops::$trait<&PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                PadicScalar::arith($op, &self, rhs).expect("scalar operation")
            }
        }
    };
}

binop!(Add, add, Op::Add);
binop!(Sub, sub, Op::Sub);
binop!(Mul, mul, Op::Mul);
binop!(Div, div, Op::Div);

impl std::ops::Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        PadicScalar::neg(self)
    }
}

impl std::ops::Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        PadicScalar::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldCtx, FieldDescriptor};
    use proptest::prelude::*;

    fn field(p: u64, f: u32, e: u32, m: u32) -> Field {
        FieldCtx::new(FieldDescriptor::new(p, f, e).unwrap(), Some(m)).unwrap()
    }

    #[test]
    fn geometric_series_inverse() {
        let k = field(5, 1, 1, 4);
        let one = PadicScalar::one(&k);
        let x = one.checked_div(&(&one - &PadicScalar::from_i64(&k, 5))).unwrap();
        // 1 + 5 + 25 + 125, capped at 4 digits
        assert!(x.eq_to_precision(&PadicScalar::from_i64(&k, 156)));
        assert_eq!(x.relative_precision(), 4);
        assert_eq!(x.pi_valuation(), Some(0));
    }

    #[test]
    fn cancellation_is_zero_to_precision() {
        let k = field(5, 1, 1, 10);
        let one = PadicScalar::one(&k);
        let z = &one - &one;
        assert!(z.is_zero());
        assert!(!z.is_exact_zero());
        assert_eq!(z.absolute_precision(), Some(10));
        assert!(!z.abs().exact);
    }

    #[test]
    fn teichmuller_of_two_has_order_four() {
        let k = field(5, 1, 1, 20);
        let w = PadicScalar::teichmuller(&k, 2);
        assert!(w.pow(4).eq_to_precision(&PadicScalar::one(&k)));
        assert!(!w.pow(2).eq_to_precision(&PadicScalar::one(&k)));
    }

    #[test]
    fn uniformizer_normalization() {
        let k = field(3, 1, 2, 20);
        let pi = PadicScalar::uniformizer(&k);
        assert_eq!(pi.abs().exponent, Some(Q::from_integer(1)));
        let three = PadicScalar::from_i64(&k, 3);
        assert_eq!(three.pi_valuation(), Some(2));
        assert!((&pi * &pi).eq_to_precision(&three));
        let u = field(3, 2, 1, 20);
        // |p| = q^{-1} = p^{-2} in the unramified quadratic
        assert_eq!(PadicScalar::from_i64(&u, 3).abs().exponent, Some(Q::from_integer(2)));
    }

    #[test]
    fn division_by_zero_to_precision() {
        let k = field(3, 1, 1, 8);
        let z = PadicScalar::zero_to(&k, 5);
        assert_eq!(PadicScalar::one(&k).checked_div(&z).unwrap_err(), Error::DivisionByZeroToPrecision);
    }

    #[test]
    fn field_mismatch() {
        let a = PadicScalar::one(&field(3, 1, 1, 8));
        let b = PadicScalar::one(&field(5, 1, 1, 8));
        assert!(matches!(a.checked_add(&b), Err(Error::FieldMismatch(_))));
    }

    #[test]
    fn serialization_examples() {
        let k = field(5, 1, 1, 6);
        let x = PadicScalar::from_i64(&k, 10);
        assert_eq!(x.serialize(), "p^(1) * [2,4,3,0,4,2]");
        assert!(PadicScalar::from_teich_digits(&k, &[2, 4, 3, 0, 4, 2]).eq_to_precision(&PadicScalar::from_i64(&k, 2)));
        assert_eq!(PadicScalar::zero_to(&k, 3).serialize(), "p^(3) * []");
        let r = field(3, 1, 2, 6);
        let pi = PadicScalar::uniformizer(&r);
        assert_eq!(pi.serialize(), "p^(1/2) * [1,0,0,0,0,0]");
    }

    #[test]
    fn embeddings_of_pi_and_frobenius() {
        let r = field(3, 1, 2, 12);
        let pi = PadicScalar::uniformizer(&r);
        let s = pi.embed(Embedding { frob: 0, twist: 1 });
        assert!(s.eq_to_precision(&pi.neg()));
        let pi3 = pi.pow(3);
        assert!(pi3.embed(Embedding { frob: 0, twist: 1 }).eq_to_precision(&pi3.neg()));
        let u = field(3, 2, 1, 12);
        let w = PadicScalar::teichmuller(&u, 3);
        let frob = w.embed(Embedding { frob: 1, twist: 0 });
        assert!(frob.eq_to_precision(&w.pow(3)));
    }

    fn arb_scalar(k: Field) -> impl Strategy<Value = PadicScalar> {
        let q = k.q() as u32;
        (prop::collection::vec(0..q, 1..8), -2i64..4).prop_map(move |(mut digits, v)| {
            if digits[0] == 0 {
                digits[0] = 1;
            }
            PadicScalar::from_teich_digits(&k, &digits).mul_pi_pow(v)
        })
    }

    proptest! {
        #[test]
        fn ring_axioms_to_precision(
            a in arb_scalar(field(3, 2, 1, 16)),
            b in arb_scalar(field(3, 2, 1, 16)),
            c in arb_scalar(field(3, 2, 1, 16)),
        ) {
            let lhs = &(&a + &b) * &c;
            let rhs = &(&a * &c) + &(&b * &c);
            prop_assert!(lhs.eq_to_precision(&rhs));
            let q = (&a * &b).checked_div(&b).unwrap();
            prop_assert!(q.eq_to_precision(&a));
        }

        #[test]
        fn valuation_is_multiplicative(a in arb_scalar(field(3, 1, 2, 20)), b in arb_scalar(field(3, 1, 2, 20))) {
            let prod = &a * &b;
            prop_assert_eq!(prod.valuation().unwrap(), a.valuation().unwrap() + b.valuation().unwrap());
            prop_assert!((&a + &b).abs_upper() <= a.abs_upper().max(b.abs_upper()));
        }

        #[test]
        fn serialization_roundtrip(a in arb_scalar(field(5, 1, 1, 12))) {
            let k = a.field().clone();
            let back = PadicScalar::parse(&k, &a.serialize()).unwrap();
            prop_assert!(back.eq_to_precision(&a));
            prop_assert_eq!(back.serialize(), a.serialize());
        }

        #[test]
        fn embeddings_are_ring_maps(a in arb_scalar(field(3, 2, 1, 16)), b in arb_scalar(field(3, 2, 1, 16))) {
            for &s in a.field().clone().embeddings() {
                prop_assert!((&a * &b).embed(s).eq_to_precision(&(&a.embed(s) * &b.embed(s))));
                prop_assert!((&a + &b).embed(s).eq_to_precision(&(&a.embed(s) + &b.embed(s))));
                prop_assert_eq!(a.embed(s).valuation(), a.valuation());
            }
        }
    }
}
