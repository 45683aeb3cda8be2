//! Rational formal sums over canonical basis keys, the lifted coupled
//! products and coproducts, the twist, graded truncation and the axiom
//! verification harness.

use crate::builder::{decompose, BuilderExpr};
use crate::forest::{delta_forest, enumerate_forests_up_to, ForestChain, LionsForest};
use crate::seq::GradingParams;
use crate::tag::TagId;
use crate::word::{
    delta_word, enumerate_words_up_to, pair_shuffle, shuffle_words, LionsWord, WordChain, WordError,
};
use crate::{rint, Rat};
use num::Zero;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A finite rational linear combination over an ordered basis. Zero
/// coefficients are never stored; all arithmetic is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalSum<B: Ord + Clone> {
    terms: BTreeMap<B, Rat>,
}

impl<B: Ord + Clone> Default for FormalSum<B> {
    fn default() -> Self {
        FormalSum {
            terms: BTreeMap::new(),
        }
    }
}

impl<B: Ord + Clone> FormalSum<B> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The single basis element with coefficient one.
    pub fn basis(b: B) -> Self {
        FormalSum {
            terms: BTreeMap::from([(b, rint(1))]),
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (B, Rat)>) -> Self {
        let mut s = Self::zero();
        for (b, c) in terms {
            s.add_term(b, c);
        }
        s
    }

    /// Sum of basis elements with coefficient one each; repeats add up.
    pub fn from_basis_list(list: impl IntoIterator<Item = B>) -> Self {
        Self::from_terms(list.into_iter().map(|b| (b, rint(1))))
    }

    pub fn add_term(&mut self, b: B, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(b).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(b.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        FormalSum {
            terms: self
                .terms
                .iter()
                .map(|(b, c)| (b.clone(), c.clone() * r.clone()))
                .collect(),
        }
    }

    pub fn coeff(&self, b: &B) -> Rat {
        self.terms.get(b).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn terms(&self) -> &BTreeMap<B, Rat> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Linear extension of a basis map producing a list of terms with
    /// coefficient one each.
    pub fn map_basis<C: Ord + Clone>(&self, f: impl Fn(&B) -> Vec<C>) -> FormalSum<C> {
        let mut out = FormalSum::zero();
        for (b, coeff) in &self.terms {
            for c in f(b) {
                out.add_term(c, coeff.clone());
            }
        }
        out
    }

    /// Bilinear extension of a basis rule.
    pub fn bilinear<C: Ord + Clone, D: Ord + Clone>(
        x: &FormalSum<B>,
        y: &FormalSum<C>,
        rule: impl Fn(&B, &C) -> Vec<D>,
    ) -> FormalSum<D> {
        let mut out = FormalSum::zero();
        for (b, cb) in &x.terms {
            for (c, cc) in &y.terms {
                let coeff = cb.clone() * cc.clone();
                for d in rule(b, c) {
                    out.add_term(d, coeff.clone());
                }
            }
        }
        out
    }
}

impl<B: Ord + Clone + fmt::Display> fmt::Display for FormalSum<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (b, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{b}")?;
        }
        Ok(())
    }
}

/// A tensor of two coupled pairs read column-wise: the twist reassociates
/// `(a, b) ⊗ (c, d)` into `((a, c), (b, d))`, carrying each coupling to
/// its side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Twisted<C: Ord + Clone> {
    pub first: C,
    pub second: C,
}

/// The inner twist rule on a 4-tuple; an involution.
pub fn reassociate4<T>(t: (T, T, T, T)) -> (T, T, T, T) {
    (t.0, t.2, t.1, t.3)
}

/// Twist of two coupled-pair sums into column-read pairs of pairs.
pub fn twist<C: Ord + Clone>(x: &FormalSum<C>, y: &FormalSum<C>) -> FormalSum<Twisted<C>> {
    FormalSum::bilinear(x, y, |a, b| {
        vec![Twisted {
            first: a.clone(),
            second: b.clone(),
        }]
    })
}

impl<C: Ord + Clone> Twisted<C> {
    /// The column reading of the reassociated tensor, for pair chains:
    /// `((a, c), (b, d))`.
    pub fn columns<'a, E>(
        &'a self,
        elems: impl Fn(&'a C) -> &'a [E],
    ) -> ((&'a E, &'a E), (&'a E, &'a E)) {
        let p = elems(&self.first);
        let q = elems(&self.second);
        ((&p[0], &q[0]), (&p[1], &q[1]))
    }
}

// ---------------------------------------------------------------------
// Lifted word operations
// ---------------------------------------------------------------------

/// The lifted coupled shuffle.
pub fn shuffle_sum(
    x: &FormalSum<LionsWord>,
    y: &FormalSum<LionsWord>,
) -> Result<FormalSum<LionsWord>, WordError> {
    let mut out = FormalSum::zero();
    for (a, ca) in x.terms() {
        for (b, cb) in y.terms() {
            let coeff = ca.clone() * cb.clone();
            for w in shuffle_words(a, b)? {
                out.add_term(w, coeff.clone());
            }
        }
    }
    Ok(out)
}

/// The lifted deconcatenation coproduct.
pub fn delta_word_sum(x: &FormalSum<LionsWord>) -> FormalSum<WordChain> {
    x.map_basis(delta_word)
}

/// `Δ ⊗̃ I ⊗̃ ... `: split the leftmost chain element.
pub fn extend_delta_left(x: &FormalSum<WordChain>) -> FormalSum<WordChain> {
    x.map_basis(|c| c.split_elem(0))
}

/// `I ⊗̃ ... ⊗̃ Δ`: split the rightmost chain element.
pub fn extend_delta_right(x: &FormalSum<WordChain>) -> FormalSum<WordChain> {
    x.map_basis(|c| c.split_elem(c.len() - 1))
}

/// The counit: the coefficient of the empty word.
pub fn counit_words(x: &FormalSum<LionsWord>) -> Rat {
    x.terms()
        .iter()
        .filter(|(w, _)| w.is_empty())
        .map(|(_, c)| c.clone())
        .fold(Rat::zero(), |a, b| a + b)
}

/// `(ε ⊗̃ I)`: keeps the terms whose leftmost element is empty and
/// contracts it away.
pub fn counit_left_words(x: &FormalSum<WordChain>) -> FormalSum<WordChain> {
    let mut out = FormalSum::zero();
    for (c, coeff) in x.terms() {
        if c.elems()[0].is_empty() {
            out.add_term(c.contract_empty(0), coeff.clone());
        }
    }
    out
}

/// `(I ⊗̃ ε)`: keeps the terms whose rightmost element is empty.
pub fn counit_right_words(x: &FormalSum<WordChain>) -> FormalSum<WordChain> {
    let mut out = FormalSum::zero();
    for (c, coeff) in x.terms() {
        if c.elems()[c.len() - 1].is_empty() {
            out.add_term(c.contract_empty(c.len() - 1), coeff.clone());
        }
    }
    out
}

/// The right side of the word bialgebra law:
/// `(⊔̃ ⊗̃ ⊔̃) ∘ Twist ∘ (Δ ⊗ Δ)` on a pair of basis words.
pub fn bialgebra_rhs_words(
    w1: &LionsWord,
    w2: &LionsWord,
) -> Result<FormalSum<WordChain>, WordError> {
    let d1 = delta_word(w1);
    let d2 = delta_word(w2);
    let twisted = twist(
        &FormalSum::from_basis_list(d1),
        &FormalSum::from_basis_list(d2),
    );
    let mut out = FormalSum::zero();
    for (t, coeff) in twisted.terms() {
        for chain in pair_shuffle(&t.first, &t.second)? {
            out.add_term(chain, coeff.clone());
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Lifted forest operations
// ---------------------------------------------------------------------

/// Canonical representative used as a basis key.
pub fn canon_forest(f: &LionsForest) -> LionsForest {
    f.canonical().0
}

/// The lifted forest product; basis keys stay canonical.
pub fn forest_product_sum(
    x: &FormalSum<LionsForest>,
    y: &FormalSum<LionsForest>,
) -> FormalSum<LionsForest> {
    FormalSum::bilinear(x, y, |a, b| vec![canon_forest(&a.product(b))])
}

/// The lifted coupled coproduct.
pub fn delta_forest_sum(x: &FormalSum<LionsForest>) -> FormalSum<ForestChain> {
    x.map_basis(delta_forest)
}

/// `Δ ⊗̃ I ⊗̃ ...` on forest chains.
pub fn extend_delta_left_forests(x: &FormalSum<ForestChain>) -> FormalSum<ForestChain> {
    x.map_basis(|c| c.split_elem(0))
}

/// `I ⊗̃ ... ⊗̃ Δ` on forest chains.
pub fn extend_delta_right_forests(x: &FormalSum<ForestChain>) -> FormalSum<ForestChain> {
    x.map_basis(|c| c.split_elem(c.len() - 1))
}

/// The counit: the coefficient of the empty forest.
pub fn counit_forests(x: &FormalSum<LionsForest>) -> Rat {
    x.terms()
        .iter()
        .filter(|(f, _)| f.is_one())
        .map(|(_, c)| c.clone())
        .fold(Rat::zero(), |a, b| a + b)
}

/// `(ε ⊗̃ I)` on forest chains.
pub fn counit_left_forests(x: &FormalSum<ForestChain>) -> FormalSum<ForestChain> {
    let mut out = FormalSum::zero();
    for (c, coeff) in x.terms() {
        if c.elems()[0].is_one() {
            out.add_term(c.contract_empty(0), coeff.clone());
        }
    }
    out
}

/// `(I ⊗̃ ε)` on forest chains.
pub fn counit_right_forests(x: &FormalSum<ForestChain>) -> FormalSum<ForestChain> {
    let mut out = FormalSum::zero();
    for (c, coeff) in x.terms() {
        if c.elems()[c.len() - 1].is_one() {
            out.add_term(c.contract_empty(c.len() - 1), coeff.clone());
        }
    }
    out
}

/// The right side of the forest bialgebra law:
/// `(⊛ ⊗̃ ⊛) ∘ Twist ∘ (Δ ⊗ Δ)` on a pair of basis forests.
pub fn bialgebra_rhs_forests(t1: &LionsForest, t2: &LionsForest) -> FormalSum<ForestChain> {
    let d1 = delta_forest(t1);
    let d2 = delta_forest(t2);
    let twisted = twist(
        &FormalSum::from_basis_list(d1),
        &FormalSum::from_basis_list(d2),
    );
    let mut out = FormalSum::zero();
    for (t, coeff) in twisted.terms() {
        out.add_term(t.first.product(&t.second), coeff.clone());
    }
    out
}

/// The coproduct rebuilt from the generator recursion: seeded on the
/// empty forest and the single node, propagated through rooting,
/// decoupling and the bialgebra rule for products. An independent route
/// to the cut-based coproduct.
pub fn delta_via_generators(f: &LionsForest) -> FormalSum<ForestChain> {
    fn go(e: &BuilderExpr) -> FormalSum<ForestChain> {
        match e {
            BuilderExpr::Unit => FormalSum::basis(
                ForestChain::new(vec![LionsForest::one(), LionsForest::one()]).expect("empty pair"),
            ),
            BuilderExpr::Root(label, inner) => {
                let t = inner.eval().expect("builder expressions evaluate");
                let rooted = canon_forest(&t.rooted(*label).expect("valid label"));
                // ⌊T⌋ × 1 + (I ×̃ ⌊·⌋) ∘ Δ[T]
                let boundary = FormalSum::basis(
                    ForestChain::new(vec![rooted, LionsForest::one()])
                        .expect("right element has no blocks to reference"),
                );
                let lifted =
                    go(inner).map_basis(|c| vec![c.root_right(*label).expect("valid label")]);
                boundary.add(&lifted)
            }
            BuilderExpr::Decouple(inner) => go(inner).map_basis(|c| vec![c.decouple_pair()]),
            BuilderExpr::DecoupleSeq(..) => unreachable!("decompose never emits Ea"),
            BuilderExpr::Product(l, r) => {
                let dl = go(l);
                let dr = go(r);
                let twisted = twist(&dl, &dr);
                let mut out = FormalSum::zero();
                for (t, coeff) in twisted.terms() {
                    out.add_term(t.first.product(&t.second), coeff.clone());
                }
                out
            }
        }
    }
    go(&decompose(f))
}

// ---------------------------------------------------------------------
// Graded truncation
// ---------------------------------------------------------------------

/// A truncation level: drop grades above `γ` (or at `γ` when strict).
#[derive(Debug, Clone)]
pub struct TruncationSpec {
    pub params: GradingParams,
    pub strict: bool,
}

impl TruncationSpec {
    fn keeps(&self, grade: (usize, usize)) -> bool {
        let g = self.params.alpha.clone() * rint(grade.0 as i64)
            + self.params.beta.clone() * rint(grade.1 as i64);
        if self.strict {
            g < self.params.gamma
        } else {
            g <= self.params.gamma
        }
    }
}

/// Projection onto the quotient by the grading ideal for word sums.
pub fn truncate_words(x: &FormalSum<LionsWord>, spec: &TruncationSpec) -> FormalSum<LionsWord> {
    FormalSum::from_terms(
        x.terms()
            .iter()
            .filter(|(w, _)| spec.keeps(w.grading()))
            .map(|(w, c)| (w.clone(), c.clone())),
    )
}

/// Projection onto the quotient by the grading ideal for forest sums.
pub fn truncate_forests(
    x: &FormalSum<LionsForest>,
    spec: &TruncationSpec,
) -> FormalSum<LionsForest> {
    FormalSum::from_terms(
        x.terms()
            .iter()
            .filter(|(f, _)| spec.keeps(f.grading()))
            .map(|(f, c)| (f.clone(), c.clone())),
    )
}

// ---------------------------------------------------------------------
// Axiom verification harness
// ---------------------------------------------------------------------

/// The basis family a verification run works over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Words { d: u32 },
    Forests { d: u32 },
}

/// The checkable laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Assoc,
    Comm,
    Unit,
    Coassoc,
    Counit,
    Bialgebra,
    Grading,
}

impl std::str::FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "assoc" => Ok(Axiom::Assoc),
            "comm" => Ok(Axiom::Comm),
            "unit" => Ok(Axiom::Unit),
            "coassoc" => Ok(Axiom::Coassoc),
            "counit" => Ok(Axiom::Counit),
            "bialgebra" => Ok(Axiom::Bialgebra),
            "grading" => Ok(Axiom::Grading),
            other => Err(format!("unknown axiom `{other}`")),
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Assoc => "assoc",
            Axiom::Comm => "comm",
            Axiom::Unit => "unit",
            Axiom::Coassoc => "coassoc",
            Axiom::Counit => "counit",
            Axiom::Bialgebra => "bialgebra",
            Axiom::Grading => "grading",
        };
        write!(f, "{s}")
    }
}

/// Outcome of checking one axiom.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub max_size: usize,
    pub checked: u64,
    pub passed: bool,
    pub counterexamples: Vec<String>,
}

/// Exhaustively checks the listed axioms on all basis elements within the
/// size bound. `fault` corrupts the coproduct (dropping a term) so the
/// harness can demonstrate that it detects violations.
pub fn verify_axioms(
    family: Family,
    max_size: usize,
    axioms: &[Axiom],
    fault: bool,
) -> Vec<AxiomReport> {
    axioms
        .iter()
        .map(|&axiom| match family {
            Family::Words { d } => verify_words(d, max_size, axiom, fault),
            Family::Forests { d } => verify_forests(d, max_size, axiom, fault),
        })
        .collect()
}

fn report(axiom: Axiom, max_size: usize) -> AxiomReport {
    AxiomReport {
        axiom,
        max_size,
        checked: 0,
        passed: true,
        counterexamples: Vec::new(),
    }
}

impl AxiomReport {
    fn observe(&mut self, ok: bool, key: impl Fn() -> String) {
        self.checked += 1;
        if !ok {
            self.passed = false;
            if self.counterexamples.len() < 5 {
                self.counterexamples.push(key());
            }
        }
    }
}

fn faulty_delta_word(w: &LionsWord, fault: bool) -> Vec<WordChain> {
    let mut v = delta_word(w);
    if fault && v.len() > 1 {
        v.pop();
    }
    v
}

fn faulty_delta_forest(f: &LionsForest, fault: bool) -> Vec<ForestChain> {
    let mut v = delta_forest(f);
    if fault && v.len() > 1 {
        v.pop();
    }
    v
}

fn verify_words(d: u32, max_size: usize, axiom: Axiom, fault: bool) -> AxiomReport {
    let tags = BTreeSet::from([TagId::ZERO]);
    let basis = enumerate_words_up_to(max_size, d, &tags);
    let one = LionsWord::empty(tags.clone());
    let mut rep = report(axiom, max_size);
    match axiom {
        Axiom::Assoc => {
            for x in &basis {
                for y in &basis {
                    if x.len() + y.len() > max_size {
                        continue;
                    }
                    for z in &basis {
                        if x.len() + y.len() + z.len() > max_size {
                            continue;
                        }
                        let xy = FormalSum::from_basis_list(shuffle_words(x, y).unwrap());
                        let yz = FormalSum::from_basis_list(shuffle_words(y, z).unwrap());
                        let lhs = shuffle_sum(&xy, &FormalSum::basis(z.clone())).unwrap();
                        let rhs = shuffle_sum(&FormalSum::basis(x.clone()), &yz).unwrap();
                        rep.observe(lhs == rhs, || format!("{x} , {y} , {z}"));
                    }
                }
            }
        }
        Axiom::Comm => {
            for x in &basis {
                for y in &basis {
                    if x.len() + y.len() > max_size {
                        continue;
                    }
                    let lhs = FormalSum::from_basis_list(shuffle_words(x, y).unwrap());
                    let rhs = FormalSum::from_basis_list(shuffle_words(y, x).unwrap());
                    rep.observe(lhs == rhs, || format!("{x} , {y}"));
                }
            }
        }
        Axiom::Unit => {
            for x in &basis {
                let l = shuffle_words(&one, x).unwrap();
                let r = shuffle_words(x, &one).unwrap();
                rep.observe(l == vec![x.clone()] && r == vec![x.clone()], || {
                    x.to_string()
                });
            }
        }
        Axiom::Coassoc => {
            for x in &basis {
                let delta = FormalSum::from_basis_list(faulty_delta_word(x, fault));
                let lhs = extend_delta_left(&delta);
                let rhs = extend_delta_right(&delta);
                rep.observe(lhs == rhs, || x.to_string());
            }
        }
        Axiom::Counit => {
            for x in &basis {
                let delta = FormalSum::from_basis_list(faulty_delta_word(x, fault));
                let expected = FormalSum::basis(WordChain::single(x.clone()));
                let l = counit_left_words(&delta);
                let r = counit_right_words(&delta);
                rep.observe(l == expected && r == expected, || x.to_string());
            }
        }
        Axiom::Bialgebra => {
            for x in &basis {
                for y in &basis {
                    if x.len() + y.len() > max_size {
                        continue;
                    }
                    let product = FormalSum::from_basis_list(shuffle_words(x, y).unwrap());
                    let lhs = product.map_basis(|w| faulty_delta_word(w, fault));
                    let rhs = bialgebra_rhs_words(x, y).unwrap();
                    rep.observe(lhs == rhs, || format!("{x} , {y}"));
                }
            }
        }
        Axiom::Grading => {
            for x in &basis {
                for y in &basis {
                    if x.len() + y.len() > max_size {
                        continue;
                    }
                    let (k1, n1) = x.grading();
                    let (k2, n2) = y.grading();
                    let ok = shuffle_words(x, y)
                        .unwrap()
                        .iter()
                        .all(|w| w.grading() == (k1 + k2, n1 + n2));
                    rep.observe(ok, || format!("{x} , {y}"));
                }
                let g = x.grading();
                let ok = faulty_delta_word(x, fault).iter().all(|c| {
                    let gl = c.elems()[0].plain().grading();
                    let gr = c.elems()[1].grading();
                    (gl.0 + gr.0, gl.1 + gr.1) == g
                });
                rep.observe(ok, || x.to_string());
            }
        }
    }
    rep
}

fn verify_forests(d: u32, max_size: usize, axiom: Axiom, fault: bool) -> AxiomReport {
    let basis = enumerate_forests_up_to(max_size, d);
    let one = LionsForest::one();
    let mut rep = report(axiom, max_size);
    match axiom {
        Axiom::Assoc => {
            for x in &basis {
                for y in &basis {
                    if x.node_count() + y.node_count() > max_size {
                        continue;
                    }
                    for z in &basis {
                        if x.node_count() + y.node_count() + z.node_count() > max_size {
                            continue;
                        }
                        let l = canon_forest(&x.product(y).product(z));
                        let r = canon_forest(&x.product(&y.product(z)));
                        rep.observe(l == r, || {
                            format!("{} , {} , {}", fkey(x), fkey(y), fkey(z))
                        });
                    }
                }
            }
        }
        Axiom::Comm => {
            for x in &basis {
                for y in &basis {
                    if x.node_count() + y.node_count() > max_size {
                        continue;
                    }
                    let l = canon_forest(&x.product(y));
                    let r = canon_forest(&y.product(x));
                    rep.observe(l == r, || format!("{} , {}", fkey(x), fkey(y)));
                }
            }
        }
        Axiom::Unit => {
            for x in &basis {
                let l = canon_forest(&one.product(x));
                let r = canon_forest(&x.product(&one));
                let c = canon_forest(x);
                rep.observe(l == c && r == c, || fkey(x));
            }
        }
        Axiom::Coassoc => {
            for x in &basis {
                let delta = FormalSum::from_basis_list(faulty_delta_forest(x, fault));
                let lhs = extend_delta_left_forests(&delta);
                let rhs = extend_delta_right_forests(&delta);
                rep.observe(lhs == rhs, || fkey(x));
            }
        }
        Axiom::Counit => {
            for x in &basis {
                let delta = FormalSum::from_basis_list(faulty_delta_forest(x, fault));
                let expected =
                    FormalSum::basis(ForestChain::single(x).expect("basis forests are plain"));
                let l = counit_left_forests(&delta);
                let r = counit_right_forests(&delta);
                rep.observe(l == expected && r == expected, || fkey(x));
            }
        }
        Axiom::Bialgebra => {
            for x in &basis {
                for y in &basis {
                    if x.node_count() + y.node_count() > max_size {
                        continue;
                    }
                    let product = canon_forest(&x.product(y));
                    let lhs = FormalSum::from_basis_list(faulty_delta_forest(&product, fault));
                    let rhs = bialgebra_rhs_forests(x, y);
                    rep.observe(lhs == rhs, || format!("{} , {}", fkey(x), fkey(y)));
                }
            }
        }
        Axiom::Grading => {
            for x in &basis {
                for y in &basis {
                    if x.node_count() + y.node_count() > max_size {
                        continue;
                    }
                    let (k1, n1) = x.grading();
                    let (k2, n2) = y.grading();
                    let ok = x.product(y).grading() == (k1 + k2, n1 + n2);
                    rep.observe(ok, || format!("{} , {}", fkey(x), fkey(y)));
                }
                let g = x.grading();
                let ok = faulty_delta_forest(x, fault).iter().all(|c| {
                    let gl = c.elems()[0].plain().grading();
                    let gr = c.elems()[1].grading();
                    (gl.0 + gr.0, gl.1 + gr.1) == g
                });
                rep.observe(ok, || fkey(x));
            }
        }
    }
    rep
}

fn fkey(f: &LionsForest) -> String {
    crate::forest::forest_to_text(f)
}
