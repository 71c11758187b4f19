//! Locally polynomial functions on the integers of a tamely ramified `p`-adic
//! field, their `C^r` norms, a Mahler-type wavelet basis adapted to `C^r`, and
//! the dual side: tempered distributions given by moments.

pub mod error;
pub mod field;
pub mod padic;

pub use error::{Error, Result};
pub use field::{Embedding, Field, FieldCtx, FieldDescriptor};
pub use padic::{AbsValue, Magnitude, PadicScalar, Q};
pub mod embed;
pub mod multiindex;

pub use embed::CosetRep;
pub use multiindex::MultiIndex;
pub mod locpoly;
pub mod poly;

pub use locpoly::{DegreeCaps, LocPolyFun};
pub use poly::Poly;
pub mod acceptance;
pub mod counterexample;
pub mod crnorm;
pub mod delta;
pub mod distribution;
pub mod wavelet;
