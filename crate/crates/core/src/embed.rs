//! Embeddings into `E = F`, Teichmüller coset representatives and the
//! residue systems `A_h`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{Embedding, Field};
use crate::multiindex::MultiIndex;
use crate::padic::PadicScalar;

/// `σ(x)` for one embedding.
pub fn apply_embedding(sigma: Embedding, x: &PadicScalar) -> PadicScalar {
    x.embed(sigma)
}

/// `(σ(x))_σ` in embedding order.
pub fn embed_all(field: &Field, x: &PadicScalar) -> Vec<PadicScalar> {
    field.embeddings().iter().map(|&s| x.embed(s)).collect()
}

/// `z^n = Π_σ σ(z)^{n_σ}`.
pub fn monomial_eval(field: &Field, z: &PadicScalar, n: &MultiIndex) -> PadicScalar {
    n.monomial(&embed_all(field, z))
}

/// A coset `a + ϖ^h O_F` named by the Teichmüller digits of its canonical
/// representative `a = Σ_{m<h} teich(d_m) ϖ^m`, least significant first.
/// Each digit is a residue index `Σ t_i p^i` of `Σ t_i x^i ∈ F_q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetRep {
    pub digits: Vec<u32>,
}

impl CosetRep {
    pub fn new(digits: Vec<u32>) -> Self {
        CosetRep { digits }
    }

    /// The coset `ϖ^h O_F` around zero.
    pub fn zero(level: u32) -> Self {
        CosetRep { digits: vec![0; level as usize] }
    }

    pub fn level(&self) -> u32 {
        self.digits.len() as u32
    }

    /// `l(a)`: one plus the position of the last nonzero digit, zero for `a = 0`.
    pub fn l(&self) -> u32 {
        self.digits.iter().rposition(|&d| d != 0).map_or(0, |i| i as u32 + 1)
    }

    /// Integer `Σ d_m q^m`, the enumeration key within `A_h`.
    pub fn index(&self, q: u64) -> u64 {
        self.digits.iter().rev().fold(0u64, |acc, &d| acc * q + d as u64)
    }

    pub fn from_index(mut index: u64, level: u32, q: u64) -> Self {
        let mut digits = Vec::with_capacity(level as usize);
        for _ in 0..level {
            digits.push((index % q) as u32);
            index /= q;
        }
        CosetRep { digits }
    }

    /// The representative as a field element.
    pub fn to_scalar(&self, field: &Field) -> PadicScalar {
        PadicScalar::from_teich_digits(field, &self.digits)
    }

    /// The enclosing coset at a coarser level.
    pub fn truncate(&self, level: u32) -> CosetRep {
        CosetRep { digits: self.digits[..level as usize].to_vec() }
    }

    /// The same representative viewed at a finer level.
    pub fn pad(&self, level: u32) -> CosetRep {
        let mut digits = self.digits.clone();
        digits.resize(level as usize, 0);
        CosetRep { digits }
    }

    pub fn child(&self, digit: u32) -> CosetRep {
        let mut digits = self.digits.clone();
        digits.push(digit);
        CosetRep { digits }
    }

    pub fn is_prefix_of(&self, other: &CosetRep) -> bool {
        other.digits.len() >= self.digits.len() && other.digits[..self.digits.len()] == self.digits[..]
    }

    pub fn validate(&self, field: &Field) -> Result<()> {
        if self.digits.iter().any(|&d| d as u64 >= field.q()) {
            return Err(Error::InvalidParameters(format!("digit out of range in {:?}", self.digits)));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CosetRepJson {
    digits: Vec<u32>,
    level: u32,
}

impl Serialize for CosetRep {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        CosetRepJson { digits: self.digits.clone(), level: self.level() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for CosetRep {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = CosetRepJson::deserialize(de)?;
        if raw.digits.len() != raw.level as usize {
            return Err(serde::de::Error::custom("coset digits do not match its level"));
        }
        Ok(CosetRep { digits: raw.digits })
    }
}

/// `A_h` in increasing order of `Σ d_m q^m`.
pub fn residue_system(field: &Field, level: u32) -> Vec<CosetRep> {
    let q = field.q();
    let count = q.pow(level);
    (0..count).map(|i| CosetRep::from_index(i, level, q)).collect()
}

/// The coset of `z ∈ O_F` at the given level.
pub fn coset_of(z: &PadicScalar, level: u32) -> Result<CosetRep> {
    if !z.is_integral() {
        return Err(Error::InvalidParameters("point is not integral".into()));
    }
    Ok(CosetRep { digits: z.teich_digits(level as usize)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldCtx, FieldDescriptor};
    use crate::padic::Q;

    fn field(p: u64, f: u32, e: u32) -> Field {
        FieldCtx::new(FieldDescriptor::new(p, f, e).unwrap(), Some(16)).unwrap()
    }

    #[test]
    fn residue_system_order_and_lengths() {
        let k = field(2, 1, 1);
        let reps: Vec<Vec<u32>> = residue_system(&k, 2).into_iter().map(|a| a.digits).collect();
        assert_eq!(reps, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        let ls: Vec<u32> = residue_system(&k, 2).iter().map(|a| a.l()).collect();
        assert_eq!(ls, vec![0, 1, 2, 2]);
        assert_eq!(residue_system(&k, 0), vec![CosetRep::zero(0)]);
    }

    #[test]
    fn embeddings_count_and_order() {
        let k = field(3, 2, 1);
        let e: Vec<(u32, u32)> = k.embeddings().iter().map(|s| (s.frob, s.twist)).collect();
        assert_eq!(e, vec![(0, 0), (1, 0)]);
        let r = field(7, 1, 3);
        assert_eq!(r.embeddings().len(), 3);
    }

    #[test]
    fn ramified_conjugate_of_pi() {
        let k = field(3, 1, 2);
        let pi = PadicScalar::uniformizer(&k);
        let conj = apply_embedding(Embedding { frob: 0, twist: 1 }, &pi);
        assert!((&conj + &pi).is_zero());
    }

    #[test]
    fn embeddings_preserve_absolute_value() {
        let k = field(7, 1, 3);
        let z = CosetRep::new(vec![3, 0, 5]).to_scalar(&k);
        for s in embed_all(&k, &z) {
            assert_eq!(s.abs(), z.abs());
        }
        let n = MultiIndex::new(&[1, 2, 0]);
        let m = monomial_eval(&k, &PadicScalar::uniformizer(&k), &n);
        assert_eq!(m.abs().exponent, Some(Q::from_integer(3)));
    }

    #[test]
    fn coset_of_recovers_digits() {
        let k = field(3, 2, 1);
        for a in residue_system(&k, 2) {
            let z = &a.to_scalar(&k) + &PadicScalar::uniformizer_pow(&k, 2).mul_pi_pow(0);
            assert_eq!(coset_of(&z, 2).unwrap(), a);
        }
    }

    #[test]
    fn json_shape() {
        let a = CosetRep::new(vec![1, 0, 2]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"digits":[1,0,2],"level":3}"#);
        assert_eq!(serde_json::from_str::<CosetRep>(&s).unwrap(), a);
        assert!(serde_json::from_str::<CosetRep>(r#"{"digits":[1],"level":2}"#).is_err());
    }
}
