//! Exact symbolic calculus of moment polynomials: iterated Lions
//! derivatives indexed by partition sequences, empirical lifts, the
//! discrete-coupling expansion operator and the finite-particle Taylor
//! identities.
//!
//! A moment polynomial is a polynomial in the space variable `x0`, the
//! free variables `x1, x2, ...` created by Lions derivatives, and the
//! moment symbols `m1, m2, ...` standing for the measure argument's raw
//! moments. Everything is exact rational arithmetic.

use crate::seq::{enumerate_seqs, equiv_class_rep, PartSeq, Token};
use crate::tag::TagId;
use crate::{rint, Rat};
use num::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Errors raised by the calculus.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    /// A sequence uses free variables the polynomial does not have.
    #[error("sequence is incompatible with the polynomial's arity")]
    ArityConflict,
    /// Text form could not be parsed.
    #[error("parse error at byte {0}: {1}")]
    Parse(usize, String),
}

/// A polynomial indeterminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// The space variable `x0`.
    X0,
    /// A free variable `xj`, `j ≥ 1`.
    Free(u32),
    /// A moment symbol `mk`, `k ≥ 1`.
    Moment(u32),
    /// A particle variable `y_i` of an empirical lift.
    Particle(u32),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X0 => write!(f, "x0"),
            Var::Free(j) => write!(f, "x{j}"),
            Var::Moment(k) => write!(f, "m{k}"),
            Var::Particle(i) => write!(f, "y{i}"),
        }
    }
}

/// A monomial: exponents per variable, no zero exponents stored.
pub type Monomial = BTreeMap<Var, u32>;

/// A multivariate polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    pub fn one() -> Self {
        Poly::constant(rint(1))
    }

    pub fn var(v: Var) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::from([(v, 1)]), rint(1));
        p
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rat> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&rint(-1)))
    }

    pub fn scale(&self, r: &Rat) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * r.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(*v).or_insert(0) += e;
                }
                out.add_term(m, c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Formal partial derivative.
    pub fn differentiate(&self, v: Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if let Some(&e) = m.get(&v) {
                let mut m2 = m.clone();
                if e == 1 {
                    m2.remove(&v);
                } else {
                    m2.insert(v, e - 1);
                }
                out.add_term(m2, c.clone() * rint(e as i64));
            }
        }
        out
    }

    /// Substitutes a polynomial for a variable.
    pub fn substitute(&self, v: Var, value: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let e = rest.remove(&v).unwrap_or(0);
            let mut term = Poly {
                terms: BTreeMap::from([(rest, c.clone())]),
            };
            if e > 0 {
                term = term.mul(&value.pow(e));
            }
            out = out.add(&term);
        }
        out
    }

    /// Simultaneous substitution of free variables.
    pub fn substitute_frees(&self, map: &BTreeMap<u32, Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (v, e) in m {
                let factor = match v {
                    Var::Free(j) if map.contains_key(j) => map[j].pow(*e),
                    _ => Poly::var(*v).pow(*e),
                };
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    /// The variables occurring in the polynomial.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.keys().copied()).collect()
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.values().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Bound on the order of non-vanishing Lions derivatives: every
    /// application of a spatial or Lions derivative reduces the weight
    /// `deg(x0) + Σ deg(xj) + Σ k·deg(mk)` of each surviving monomial.
    pub fn weight(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| {
                m.iter()
                    .map(|(v, e)| match v {
                        Var::Moment(k) => k * e,
                        _ => *e,
                    })
                    .sum::<u32>()
            })
            .max()
            .unwrap_or(0)
    }

    /// The constant value of a variable-free polynomial.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&Monomial::new()).cloned(),
            _ => None,
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let negative = c < &Rat::zero();
            let abs = if negative { -c.clone() } else { c.clone() };
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = abs.is_one();
            if !coeff_is_one || m.is_empty() {
                write!(f, "{}", fmt_rat(&abs))?;
            }
            for (j, (v, e)) in m.iter().enumerate() {
                if j > 0 || !coeff_is_one {
                    write!(f, " * ")?;
                }
                write!(f, "{v}")?;
                if *e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A moment polynomial: a polynomial in `x0`, the free variables up to
/// the recorded arity, and the moment symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPoly {
    poly: Poly,
    arity: u32,
}

impl MomentPoly {
    pub fn new(poly: Poly, arity: u32) -> Result<Self, CalcError> {
        for v in poly.vars() {
            match v {
                Var::Free(j) if j > arity => return Err(CalcError::ArityConflict),
                Var::Particle(_) => return Err(CalcError::ArityConflict),
                _ => {}
            }
        }
        Ok(MomentPoly { poly, arity })
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    /// The iterated Lions derivative indexed by a partition sequence over
    /// the base tag: `#0` differentiates in `x0`, a value below the
    /// running maximum differentiates in the matching free variable, and
    /// a fresh value applies the Lions step
    /// `∂_μ F = Σ_k (∂F/∂m_k) · k · x_new^(k-1)`.
    pub fn lions_derivative(&self, a: &PartSeq) -> Result<MomentPoly, CalcError> {
        if self.arity != 0 {
            return Err(CalcError::ArityConflict);
        }
        self.lions_derivative_tagged(a, &PartSeq::empty(BTreeSet::from([TagId::ZERO])))
    }

    /// The iterated derivative of an already-derived polynomial: tags of
    /// `a_bar` may reference the numeric blocks of `base`, which address
    /// the existing free variables; fresh numeric values extend the free
    /// variables beyond the current arity.
    pub fn lions_derivative_tagged(
        &self,
        a_bar: &PartSeq,
        base: &PartSeq,
    ) -> Result<MomentPoly, CalcError> {
        if base.max_num() != self.arity {
            return Err(CalcError::ArityConflict);
        }
        let m0 = self.arity;
        let mut cur = self.poly.clone();
        let mut max_new = 0u32;
        for tok in a_bar.entries() {
            cur = match tok {
                Token::Tag(TagId::Base(0)) => cur.differentiate(Var::X0),
                Token::Tag(TagId::Ref { dist: 1, block }) => {
                    let j = (1..=base.max_num())
                        .find(|&j| {
                            base.preimage_num(j)
                                .iter()
                                .map(|&p| p as u64)
                                .collect::<BTreeSet<u64>>()
                                == *block
                        })
                        .ok_or(CalcError::ArityConflict)?;
                    cur.differentiate(Var::Free(j))
                }
                Token::Tag(_) => return Err(CalcError::ArityConflict),
                Token::Num(v) => {
                    if *v <= max_new {
                        cur.differentiate(Var::Free(m0 + v))
                    } else {
                        max_new = *v;
                        lions_step(&cur, m0 + v)
                    }
                }
            };
        }
        MomentPoly::new(cur, m0 + max_new)
    }

    /// The empirical lift: `x0 ↦ y_i` and `m_k ↦ (1/N) Σ_j y_j^k`.
    pub fn empirical_lift(&self, n_particles: u32, i: u32) -> Poly {
        lift_poly(&self.poly, n_particles, i)
    }
}

/// The Lions step `∂_μ` evaluated at a fresh free variable.
fn lions_step(p: &Poly, new_var: u32) -> Poly {
    let mut out = Poly::zero();
    let moments: BTreeSet<u32> = p
        .vars()
        .into_iter()
        .filter_map(|v| match v {
            Var::Moment(k) => Some(k),
            _ => None,
        })
        .collect();
    for k in moments {
        let d = p.differentiate(Var::Moment(k));
        let factor = Poly::var(Var::Free(new_var))
            .pow(k - 1)
            .scale(&rint(k as i64));
        out = out.add(&d.mul(&factor));
    }
    out
}

fn lift_poly(p: &Poly, n_particles: u32, i: u32) -> Poly {
    let inv_n = Rat::new(1.into(), (n_particles as i64).into());
    let mut cur = p.substitute(Var::X0, &Poly::var(Var::Particle(i)));
    let moments: BTreeSet<u32> = cur
        .vars()
        .into_iter()
        .filter_map(|v| match v {
            Var::Moment(k) => Some(k),
            _ => None,
        })
        .collect();
    for k in moments {
        let mut sum = Poly::zero();
        for j in 1..=n_particles {
            sum = sum.add(&Poly::var(Var::Particle(j)).pow(k));
        }
        cur = cur.substitute(Var::Moment(k), &sum.scale(&inv_n));
    }
    cur
}

impl fmt::Display for MomentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}

impl FromStr for MomentPoly {
    type Err = CalcError;

    /// Parses the term grammar `3/2 * x0^2 * m1 * m3 * x2`, terms joined
    /// by `+` and `-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = PolyParser {
            bytes: s.as_bytes(),
            pos: 0,
        };
        let poly = p.poly()?;
        let arity = poly
            .vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Free(j) => Some(j),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        MomentPoly::new(poly, arity)
    }
}

struct PolyParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PolyParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn integer(&mut self) -> Result<i64, CalcError> {
        self.skip_ws();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(CalcError::Parse(self.pos, "expected an integer".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits")
            .parse()
            .map_err(|_| CalcError::Parse(start, "integer out of range".into()))
    }

    fn poly(&mut self) -> Result<Poly, CalcError> {
        let mut out = Poly::zero();
        let mut sign = rint(1);
        if self.peek() == Some(b'-') {
            self.pos += 1;
            sign = rint(-1);
        } else if self.peek() == Some(b'+') {
            self.pos += 1;
        }
        loop {
            let term = self.term()?;
            out = out.add(&term.scale(&sign));
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    sign = rint(1);
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = rint(-1);
                }
                None => return Ok(out),
                Some(c) => {
                    return Err(CalcError::Parse(
                        self.pos,
                        format!("unexpected `{}`", c as char),
                    ))
                }
            }
        }
    }

    fn term(&mut self) -> Result<Poly, CalcError> {
        let mut coeff = rint(1);
        let mut mono = Monomial::new();
        loop {
            match self.peek() {
                Some(b'0'..=b'9') => {
                    let num = self.integer()?;
                    let mut c = rint(num);
                    if self.peek() == Some(b'/') {
                        self.pos += 1;
                        let den = self.integer()?;
                        if den == 0 {
                            return Err(CalcError::Parse(self.pos, "zero denominator".into()));
                        }
                        c = Rat::new(num.into(), den.into());
                    }
                    coeff *= c;
                }
                Some(b'x') | Some(b'm') | Some(b'y') => {
                    let kind = self.bytes[self.pos];
                    self.pos += 1;
                    let idx = self.integer()? as u32;
                    let v = match kind {
                        b'x' if idx == 0 => Var::X0,
                        b'x' => Var::Free(idx),
                        b'm' => {
                            if idx == 0 {
                                return Err(CalcError::Parse(
                                    self.pos,
                                    "moments start at m1".into(),
                                ));
                            }
                            Var::Moment(idx)
                        }
                        _ => Var::Particle(idx),
                    };
                    let mut e = 1u32;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        e = self.integer()? as u32;
                    }
                    *mono.entry(v).or_insert(0) += e;
                }
                _ => {
                    return Err(CalcError::Parse(
                        self.pos,
                        "expected a coefficient or a variable".into(),
                    ))
                }
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
                continue;
            }
            break;
        }
        let mut p = Poly::zero();
        p.add_term(mono, coeff);
        Ok(p)
    }
}

/// An empirical coupling: `N` equally weighted atom pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteCoupling {
    atoms: Vec<(Rat, Rat)>,
}

impl DiscreteCoupling {
    pub fn new(atoms: Vec<(Rat, Rat)>) -> Option<Self> {
        if atoms.is_empty() {
            None
        } else {
            Some(DiscreteCoupling { atoms })
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> &[(Rat, Rat)] {
        &self.atoms
    }

    /// The k-th raw moment of the first marginal.
    pub fn moment_left(&self, k: u32) -> Rat {
        self.moment(k, |a| a.0.clone())
    }

    /// The k-th raw moment of the second marginal.
    pub fn moment_right(&self, k: u32) -> Rat {
        self.moment(k, |a| a.1.clone())
    }

    fn moment(&self, k: u32, side: impl Fn(&(Rat, Rat)) -> Rat) -> Rat {
        let n = rint(self.atoms.len() as i64);
        let sum = self
            .atoms
            .iter()
            .map(|a| power(&side(a), k))
            .fold(Rat::zero(), |acc, x| acc + x);
        sum / n
    }
}

fn power(r: &Rat, e: u32) -> Rat {
    let mut out = rint(1);
    for _ in 0..e {
        out *= r.clone();
    }
    out
}

/// Evaluates a derived moment polynomial at concrete data: `x0`, the
/// moments of the measure, and an assignment of the free variables.
fn eval_poly(p: &Poly, x0: &Rat, moment: &dyn Fn(u32) -> Rat, free: &dyn Fn(u32) -> Rat) -> Rat {
    let mut out = Rat::zero();
    for (m, c) in p.terms() {
        let mut term = c.clone();
        for (v, e) in m {
            let base = match v {
                Var::X0 => x0.clone(),
                Var::Moment(k) => moment(*k),
                Var::Free(j) => free(*j),
                Var::Particle(_) => panic!("particle variable in a measure polynomial"),
            };
            term *= power(&base, *e);
        }
        out += term;
    }
    out
}

/// The expansion operator at a discrete coupling: the `m[a]`-fold average
/// over atom tuples of the derivative times the product of increments.
pub fn d_a_eval(
    f: &MomentPoly,
    a: &PartSeq,
    x0: &Rat,
    y0: &Rat,
    coupling: &DiscreteCoupling,
) -> Result<Rat, CalcError> {
    let derived = f.lions_derivative(a)?;
    let n = coupling.len();
    let m = a.max_num() as usize;
    let mut total = Rat::zero();
    let mut tuple = vec![0usize; m];
    loop {
        let value = eval_poly(derived.poly(), x0, &|k| coupling.moment_left(k), &|j| {
            coupling.atoms()[tuple[(j - 1) as usize]].0.clone()
        });
        let mut increments = rint(1);
        for tok in a.entries() {
            let inc = match tok {
                Token::Tag(_) => y0.clone() - x0.clone(),
                Token::Num(v) => {
                    let (xa, ya) = &coupling.atoms()[tuple[(*v - 1) as usize]];
                    ya.clone() - xa.clone()
                }
            };
            increments *= inc;
        }
        total += value * increments;

        let mut k = 0;
        loop {
            if k == m {
                let weight = power(&Rat::new(1.into(), (n as i64).into()), m as u32);
                return Ok(total * weight);
            }
            tuple[k] += 1;
            if tuple[k] < n {
                break;
            }
            tuple[k] = 0;
            k += 1;
        }
    }
}

/// The full Taylor expansion up to `order`: for a polynomial of weight at
/// most `order` the remainder vanishes and the sum reproduces
/// `f(y0, ν)` exactly.
pub fn taylor_expand_exact(
    f: &MomentPoly,
    x0: &Rat,
    y0: &Rat,
    coupling: &DiscreteCoupling,
    order: u32,
) -> Result<Rat, CalcError> {
    let tags = BTreeSet::from([TagId::ZERO]);
    let mut total = Rat::zero();
    for len in 0..=order as usize {
        let inv_fact = Rat::new(1.into(), factorial(len));
        for a in enumerate_seqs(len, &tags) {
            total += d_a_eval(f, &a, x0, y0, coupling)? * inv_fact.clone();
        }
    }
    Ok(total)
}

/// The truncated expansion over the graded family `𝒢 ≤ γ`.
pub fn taylor_expand_truncated(
    f: &MomentPoly,
    x0: &Rat,
    y0: &Rat,
    coupling: &DiscreteCoupling,
    params: &crate::seq::GradingParams,
) -> Result<Rat, CalcError> {
    let tags = BTreeSet::from([TagId::ZERO]);
    let mut total = Rat::zero();
    for a in crate::seq::enumerate_truncated(params, &tags) {
        let inv_fact = Rat::new(1.into(), factorial(a.len()));
        total += d_a_eval(f, &a, x0, y0, coupling)? * inv_fact;
    }
    Ok(total)
}

fn factorial(n: usize) -> num::BigInt {
    let mut out: num::BigInt = 1.into();
    for i in 2..=n {
        out *= i as i64;
    }
    out
}

/// Direct evaluation of `f` at the second marginal, the exactness oracle
/// for the Taylor expansion.
pub fn eval_at_target(f: &MomentPoly, y0: &Rat, coupling: &DiscreteCoupling) -> Rat {
    eval_poly(f.poly(), y0, &|k| coupling.moment_right(k), &|_| {
        panic!("arity-0 polynomial")
    })
}

/// Compares the iterated derivative of the empirical lift against the
/// sum over the sequences refining the index pattern (the factor
/// `N^(-m[a])` normalises the empirical measure).
pub fn finite_identity_check(
    f: &MomentPoly,
    n_particles: u32,
    i: u32,
    idx: &[u32],
) -> Result<bool, CalcError> {
    if f.arity() != 0 {
        return Err(CalcError::ArityConflict);
    }
    // Left side: iterated particle derivatives of the lift.
    let mut lhs = f.empirical_lift(n_particles, i);
    for &p in idx {
        lhs = lhs.differentiate(Var::Particle(p));
    }

    // Right side: qualifying sequences with lifted derivatives.
    let rep = equiv_class_rep(idx, &i);
    let tags = BTreeSet::from([TagId::ZERO]);
    let mut rhs = Poly::zero();
    for a in enumerate_seqs(idx.len(), &tags) {
        if !a.leq(&rep).unwrap_or(false) {
            continue;
        }
        let derived = f.lions_derivative(&a)?;
        let lifted = lift_poly(derived.poly(), n_particles, i);
        // Bind the free variables to the particles named by the pattern.
        let binding = crate::seq::compose_values(idx, &i, &a)
            .expect("qualifying sequences refine the pattern");
        let mut frees = BTreeMap::new();
        for (j, particle) in binding.iter().enumerate() {
            frees.insert(j as u32 + 1, Poly::var(Var::Particle(*particle)));
        }
        let bound = lifted.substitute_frees(&frees);
        let weight = power(
            &Rat::new(1.into(), (n_particles as i64).into()),
            a.max_num(),
        );
        rhs = rhs.add(&bound.scale(&weight));
    }
    Ok(lhs == rhs)
}

/// Checks the symmetry of the iterated derivative under a permutation of
/// the derivative positions, with the free variables relabelled along the
/// permuted sequence.
pub fn schwarz_check(f: &MomentPoly, a: &PartSeq, sigma: &[usize]) -> Result<bool, CalcError> {
    assert_eq!(sigma.len(), a.len());
    let left = f.lions_derivative(a)?;

    let permuted: Vec<Token> = sigma.iter().map(|&i| a.entries()[i].clone()).collect();
    let b = equiv_class_rep(&permuted, &Token::Tag(TagId::ZERO));
    let right = f.lions_derivative(&b)?;

    // Free-variable relabelling: block j of the permuted sequence sits at
    // original positions with a common original value.
    let mut relabel: BTreeMap<u32, Poly> = BTreeMap::new();
    for j in 1..=b.max_num() {
        let positions = b.preimage_num(j);
        let first_new = *positions.iter().next().expect("non-empty block");
        let orig_pos = sigma[first_new - 1];
        let Token::Num(orig_val) = a.entries()[orig_pos] else {
            return Err(CalcError::ArityConflict);
        };
        relabel.insert(j, Poly::var(Var::Free(orig_val)));
    }
    let relabelled = right.poly().substitute_frees(&relabel);
    Ok(left.poly() == &relabelled)
}

/// Checks the iterated expansion: the derivative of `f` along `a` is
/// expanded over all extensions of `a`, with the tagged free variables
/// bound to atoms of the coupling and the fresh ones integrated.
pub fn iterated_expand_check(
    f: &MomentPoly,
    a: &PartSeq,
    x0: &Rat,
    y0: &Rat,
    coupling: &DiscreteCoupling,
    assignment: &[usize],
) -> Result<bool, CalcError> {
    let g = f.lions_derivative(a)?;
    let m = a.max_num() as usize;
    assert_eq!(assignment.len(), m);
    let n = coupling.len();

    // Left side: the derivative at the target, free variables bound to
    // the second marginal's atoms.
    let lhs = eval_poly(g.poly(), y0, &|k| coupling.moment_right(k), &|j| {
        coupling.atoms()[assignment[(j - 1) as usize]].1.clone()
    });

    // Right side: sum over the extension sequences.
    let mut suffix_tags: BTreeSet<TagId> = BTreeSet::from([TagId::ZERO]);
    for v in 1..=a.max_num() {
        suffix_tags.insert(TagId::Ref {
            dist: 1,
            block: a.preimage_num(v).iter().map(|&p| p as u64).collect(),
        });
    }
    let order = g.poly().weight();
    let mut rhs = Rat::zero();
    for len in 0..=order as usize {
        let inv_fact = Rat::new(1.into(), factorial(len));
        for abar in enumerate_seqs(len, &suffix_tags) {
            let derived = g.lions_derivative_tagged(&abar, a)?;
            let m_bar = abar.max_num() as usize;
            let mut tuple = vec![0usize; m_bar];
            let mut sub_total = Rat::zero();
            loop {
                let value = eval_poly(derived.poly(), x0, &|k| coupling.moment_left(k), &|j| {
                    if (j as usize) <= m {
                        coupling.atoms()[assignment[(j - 1) as usize]].0.clone()
                    } else {
                        coupling.atoms()[tuple[j as usize - m - 1]].0.clone()
                    }
                });
                let mut increments = rint(1);
                for tok in abar.entries() {
                    let inc = match tok {
                        Token::Tag(TagId::Base(0)) => y0.clone() - x0.clone(),
                        Token::Tag(TagId::Ref { dist: 1, block }) => {
                            let j = (1..=a.max_num())
                                .find(|&j| {
                                    a.preimage_num(j)
                                        .iter()
                                        .map(|&p| p as u64)
                                        .collect::<BTreeSet<u64>>()
                                        == *block
                                })
                                .expect("suffix tags come from the base sequence");
                            let (xa, ya) = &coupling.atoms()[assignment[(j - 1) as usize]];
                            ya.clone() - xa.clone()
                        }
                        Token::Tag(_) => unreachable!("suffix tag set"),
                        Token::Num(v) => {
                            let (xa, ya) = &coupling.atoms()[tuple[(*v - 1) as usize]];
                            ya.clone() - xa.clone()
                        }
                    };
                    increments *= inc;
                }
                sub_total += value * increments;

                let mut k = 0;
                loop {
                    if k == m_bar {
                        break;
                    }
                    tuple[k] += 1;
                    if tuple[k] < n {
                        break;
                    }
                    tuple[k] = 0;
                    k += 1;
                }
                if tuple.iter().all(|&t| t == 0) {
                    break;
                }
            }
            let weight = power(&Rat::new(1.into(), (n as i64).into()), m_bar as u32);
            rhs += sub_total * weight * inv_fact.clone();
        }
    }
    Ok(lhs == rhs)
}

/// Seeded random moment polynomial of bounded weight.
pub fn random_moment_poly(rng: &mut impl rand::Rng, max_weight: u32) -> MomentPoly {
    let n_terms = rng.gen_range(1..=4);
    let mut poly = Poly::zero();
    for _ in 0..n_terms {
        let mut budget = rng.gen_range(0..=max_weight);
        let mut mono = Monomial::new();
        while budget > 0 {
            let choice = rng.gen_range(0..4u32);
            match choice {
                0 => {
                    *mono.entry(Var::X0).or_insert(0) += 1;
                    budget -= 1;
                }
                1 | 2 => {
                    let k = rng.gen_range(1..=3u32.min(budget));
                    *mono.entry(Var::Moment(k)).or_insert(0) += 1;
                    budget -= k;
                }
                _ => break,
            }
        }
        let numer = loop {
            let n = rng.gen_range(-3i64..=3);
            if n != 0 {
                break n;
            }
        };
        let denom = rng.gen_range(1i64..=3);
        poly.add_term(mono, Rat::new(numer.into(), denom.into()));
    }
    if poly.is_zero() {
        poly = Poly::one();
    }
    MomentPoly::new(poly, 0).expect("arity-0 construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use rand::{Rng, SeedableRng};

    fn mp(s: &str) -> MomentPoly {
        s.parse().unwrap()
    }

    fn zc(values: &[u32]) -> PartSeq {
        PartSeq::from_zero_coded(values).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in [
            "m2",
            "x0^2",
            "3/2 * x0^2 * m1 * m3 * x2",
            "m1^2 - 2 * m2",
            "-1/2 * x0 + 1",
        ] {
            let p = mp(s);
            let printed = p.to_string();
            assert_eq!(mp(&printed), p, "{s} -> {printed}");
        }
    }

    #[test]
    fn derivative_examples() {
        let f = mp("m2");
        assert_eq!(
            f.lions_derivative(&zc(&[1])).unwrap().poly(),
            mp("2 * x1").poly()
        );
        assert_eq!(
            f.lions_derivative(&zc(&[1, 1])).unwrap().poly(),
            mp("2").poly()
        );
        assert!(f.lions_derivative(&zc(&[1, 2])).unwrap().poly().is_zero());

        let f = mp("x0^2");
        assert_eq!(
            f.lions_derivative(&zc(&[0, 0])).unwrap().poly(),
            mp("2").poly()
        );

        let f = mp("m1^2");
        assert_eq!(
            f.lions_derivative(&zc(&[1, 2])).unwrap().poly(),
            mp("2").poly()
        );
    }

    #[test]
    fn schwarz_examples() {
        let f = mp("m1 * m2");
        assert!(schwarz_check(&f, &zc(&[1, 2]), &[1, 0]).unwrap());
        assert!(schwarz_check(&f, &zc(&[1, 2]), &[0, 1]).unwrap());
    }

    #[test]
    fn schwarz_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let perms: [Vec<Vec<usize>>; 4] = [
            vec![vec![]],
            vec![vec![0]],
            vec![vec![0, 1], vec![1, 0]],
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0],
            ],
        ];
        for _ in 0..30 {
            let f = random_moment_poly(&mut rng, 3);
            #[allow(clippy::needless_range_loop)]
            for n in 0..=3usize {
                for a in enumerate_seqs(n, &BTreeSet::from([TagId::ZERO])) {
                    for sigma in &perms[n] {
                        assert!(
                            schwarz_check(&f, &a, sigma).unwrap(),
                            "f={f} a={a} sigma={sigma:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn empirical_lift_examples() {
        let f = mp("m1");
        let lift = f.empirical_lift(2, 1);
        let expected = Poly::var(Var::Particle(1))
            .add(&Poly::var(Var::Particle(2)))
            .scale(&rat(1, 2));
        assert_eq!(lift, expected);

        let f = mp("x0 * m1");
        let lift = f.empirical_lift(2, 1);
        assert_eq!(lift, Poly::var(Var::Particle(1)).mul(&expected));

        // The lift turns each moment symbol into a degree-k polynomial,
        // so the weight of f becomes the degree of the lift.
        let f = mp("3 * x0^2 * m2 + m1^3");
        assert_eq!(f.poly().weight(), f.empirical_lift(3, 2).degree());
        let f = mp("x0 * m1");
        assert_eq!(f.poly().degree(), f.empirical_lift(2, 1).degree());
    }

    #[test]
    fn finite_identity_hand_case() {
        let f = mp("m1");
        assert!(finite_identity_check(&f, 2, 1, &[2]).unwrap());
        let f = mp("x0");
        assert!(finite_identity_check(&f, 2, 1, &[2]).unwrap());
        assert!(finite_identity_check(&f, 3, 1, &[2, 3]).unwrap());
    }

    #[test]
    fn finite_identity_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let f = random_moment_poly(&mut rng, 3);
            let n_particles = rng.gen_range(1..=4u32);
            let i = rng.gen_range(1..=n_particles);
            let len = rng.gen_range(0..=3usize);
            let idx: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=n_particles)).collect();
            assert!(
                finite_identity_check(&f, n_particles, i, &idx).unwrap(),
                "f={f} N={n_particles} i={i} idx={idx:?}"
            );
        }
    }

    #[test]
    fn d_a_eval_examples() {
        let f = mp("m1 + x0");
        let coupling = DiscreteCoupling::new(vec![(rint(0), rint(1))]).unwrap();
        let empty = PartSeq::empty(BTreeSet::from([TagId::ZERO]));
        assert_eq!(
            d_a_eval(&f, &empty, &rint(2), &rint(5), &coupling).unwrap(),
            rint(2)
        );

        let f = mp("m1");
        assert_eq!(
            d_a_eval(&f, &zc(&[1]), &rint(0), &rint(0), &coupling).unwrap(),
            rint(1)
        );

        let f = mp("x0");
        assert_eq!(
            d_a_eval(&f, &zc(&[0]), &rint(2), &rint(5), &coupling).unwrap(),
            rint(3)
        );
    }

    #[test]
    fn taylor_exactness_hand_cases() {
        let coupling =
            DiscreteCoupling::new(vec![(rint(1), rint(2)), (rat(1, 2), rint(-1))]).unwrap();
        for s in ["m1", "m2", "m1^2", "x0^2 * m1", "x0 + m3"] {
            let f = mp(s);
            let order = f.poly().weight();
            let lhs = taylor_expand_exact(&f, &rat(1, 3), &rat(5, 7), &coupling, order).unwrap();
            let rhs = eval_at_target(&f, &rat(5, 7), &coupling);
            assert_eq!(lhs, rhs, "{s}");
        }
    }

    #[test]
    fn taylor_exactness_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..25 {
            let f = random_moment_poly(&mut rng, 3);
            let n = rng.gen_range(1..=4usize);
            let atoms: Vec<(Rat, Rat)> = (0..n)
                .map(|_| {
                    (
                        rat(rng.gen_range(-2..=2), rng.gen_range(1..=2)),
                        rat(rng.gen_range(-2..=2), rng.gen_range(1..=2)),
                    )
                })
                .collect();
            let coupling = DiscreteCoupling::new(atoms).unwrap();
            let x0 = rat(rng.gen_range(-2..=2), 1);
            let y0 = rat(rng.gen_range(-2..=2), 1);
            let order = f.poly().weight();
            let lhs = taylor_expand_exact(&f, &x0, &y0, &coupling, order).unwrap();
            let rhs = eval_at_target(&f, &y0, &coupling);
            assert_eq!(lhs, rhs, "f={f}");
        }
    }

    #[test]
    fn truncated_expansion_matches_full_at_high_gamma() {
        let f = mp("m2 + x0");
        let coupling = DiscreteCoupling::new(vec![(rint(0), rint(1)), (rint(1), rint(3))]).unwrap();
        let params = crate::seq::GradingParams::from_ints(1, 1, 4).unwrap();
        let full =
            taylor_expand_exact(&f, &rint(0), &rint(1), &coupling, f.poly().weight()).unwrap();
        let truncated =
            taylor_expand_truncated(&f, &rint(0), &rint(1), &coupling, &params).unwrap();
        assert_eq!(full, truncated);
    }

    #[test]
    fn iterated_expansion_reduces_to_plain_taylor() {
        let f = mp("m2 + x0 * m1");
        let coupling = DiscreteCoupling::new(vec![(rint(0), rint(1)), (rint(2), rint(1))]).unwrap();
        let empty = PartSeq::empty(BTreeSet::from([TagId::ZERO]));
        assert!(iterated_expand_check(&f, &empty, &rint(1), &rint(2), &coupling, &[]).unwrap());
    }

    #[test]
    fn iterated_expansion_examples() {
        let f = mp("m2");
        let coupling =
            DiscreteCoupling::new(vec![(rint(0), rint(1)), (rint(2), rint(-1))]).unwrap();
        for assign in [[0], [1]] {
            assert!(
                iterated_expand_check(&f, &zc(&[1]), &rint(1), &rint(3), &coupling, &assign)
                    .unwrap()
            );
        }
    }

    #[test]
    fn iterated_expansion_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..15 {
            let f = random_moment_poly(&mut rng, 2);
            let n = rng.gen_range(1..=3usize);
            let atoms: Vec<(Rat, Rat)> = (0..n)
                .map(|_| (rat(rng.gen_range(-2..=2), 1), rat(rng.gen_range(-2..=2), 1)))
                .collect();
            let coupling = DiscreteCoupling::new(atoms).unwrap();
            for len in 0..=2usize {
                for a in enumerate_seqs(len, &BTreeSet::from([TagId::ZERO])) {
                    let m = a.max_num() as usize;
                    let assignment: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();
                    assert!(
                        iterated_expand_check(&f, &a, &rint(0), &rint(1), &coupling, &assignment)
                            .unwrap(),
                        "f={f} a={a}"
                    );
                }
            }
        }
    }

    #[test]
    fn split_consistency_of_derivatives() {
        // Deriving along a joined sequence equals deriving the prefix and
        // continuing along the re-encoded suffix.
        for n in 0..=3usize {
            for a in enumerate_seqs(n, &BTreeSet::from([TagId::ZERO])) {
                let f = mp("m2 * m1 + x0 * m1");
                let direct = f.lions_derivative(&a).unwrap();
                for j in 0..=n {
                    let (a1, a2) = a.split(j).unwrap();
                    let partial = f.lions_derivative(&a1).unwrap();
                    let full = partial.lions_derivative_tagged(&a2, &a1).unwrap();
                    assert_eq!(full.poly(), direct.poly(), "a={a} j={j}");
                }
            }
        }
    }

    #[test]
    fn arity_errors() {
        let f = mp("m1");
        let d = f.lions_derivative(&zc(&[1])).unwrap();
        assert_eq!(d.arity(), 1);
        assert_eq!(d.lions_derivative(&zc(&[1])), Err(CalcError::ArityConflict));
        assert_eq!(
            MomentPoly::new(Poly::var(Var::Free(2)), 1),
            Err(CalcError::ArityConflict)
        );
    }
}
