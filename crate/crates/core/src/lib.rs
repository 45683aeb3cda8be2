//! Exact-arithmetic combinatorics of Lions words and Lions forests.
//!
//! The crate implements the coupled bialgebras spanned by Lions words and
//! Lions forests: enumeration of partition sequences and couplings, the
//! coupled products and coproducts, gradings and truncation ideals, and a
//! symbolic calculus of Lions derivatives on moment polynomials that
//! realises the finite-particle Taylor identities with exact rationals.
//!
//! Modules follow the layers of the construction:
//!
//! * [`seq`] — partition sequences `A_n[I]` and their combinatorics,
//! * [`partition`] — set partitions, tagged partitions and couplings,
//! * [`word`] — Lions words, the coupled shuffle and deconcatenation,
//! * [`forest`] — Lions forests, cuts and the coupled coproduct,
//! * [`builder`] — the generator expressions over `{1, ⊛, E, ⌊·⌋_i}`,
//! * [`algebra`] — formal sums, bialgebra law checks and truncations,
//! * [`calculus`] — moment polynomials and iterated Lions derivatives.

pub mod algebra;
pub mod builder;
pub mod calculus;
pub mod forest;
pub mod partition;
pub mod seq;
pub mod tag;
pub mod word;

/// Exact rational scalar used everywhere in the crate.
pub type Rat = num::BigRational;

/// Shorthand for building a rational from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}

/// Shorthand for an integer rational.
pub fn rint(num: i64) -> Rat {
    rat(num, 1)
}
