//! Generator expressions for Lions forests over `{1, ⊛, E, ⌊·⌋_i}` and
//! the decomposition of a forest into such an expression.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr  := term ('*' term)*              -- '*' is left-associative
//! term  := '1'
//!        | '[' expr ']_' INT             -- rooting with a label
//!        | 'E' '(' expr ')'              -- decoupling
//!        | 'Ea' '{' partseq '}' '(' expr {',' expr} ')'
//!        | '(' expr ')'                  -- grouping
//! ```
//!
//! The partition sequence inside `Ea{...}` uses the parenthesised
//! sequence form, e.g. `Ea{(0,1)}(t1,t2)`.

use crate::forest::{ForestError, LionsForest, NodeId};
use crate::seq::PartSeq;
use crate::tag::TagId;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Abstract syntax of a builder expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuilderExpr {
    /// The empty forest.
    Unit,
    /// `[e]_i`: rooting with label `i`.
    Root(u32, Box<BuilderExpr>),
    /// `E(e)`: decoupling.
    Decouple(Box<BuilderExpr>),
    /// `Ea{a}(e1,...,en)`: grouped decoupling along a partition sequence.
    DecoupleSeq(PartSeq, Vec<BuilderExpr>),
    /// `e * e`.
    Product(Box<BuilderExpr>, Box<BuilderExpr>),
}

/// Parse errors carry the byte offset of the failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuilderError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("argument count does not match the sequence length at byte {offset}")]
    ArityMismatch { offset: usize },
    #[error(transparent)]
    Forest(#[from] ForestError),
}

impl BuilderExpr {
    /// Evaluates the expression to a Lions forest.
    pub fn eval(&self) -> Result<LionsForest, ForestError> {
        match self {
            BuilderExpr::Unit => Ok(LionsForest::one()),
            BuilderExpr::Root(label, e) => e.eval()?.rooted(*label),
            BuilderExpr::Decouple(e) => Ok(e.eval()?.decouple()),
            BuilderExpr::DecoupleSeq(a, es) => {
                let forests = es.iter().map(|e| e.eval()).collect::<Result<Vec<_>, _>>()?;
                LionsForest::decouple_seq(a, &forests)
            }
            BuilderExpr::Product(l, r) => Ok(l.eval()?.product(&r.eval()?)),
        }
    }

    /// Parses the text grammar.
    pub fn parse(text: &str) -> Result<BuilderExpr, BuilderError> {
        let mut p = Parser {
            bytes: text.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(BuilderError::Syntax {
                offset: p.pos,
                message: "trailing input".into(),
            });
        }
        Ok(e)
    }
}

impl fmt::Display for BuilderExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuilderExpr::Unit => write!(f, "1"),
            BuilderExpr::Root(i, e) => write!(f, "[{e}]_{i}"),
            BuilderExpr::Decouple(e) => write!(f, "E({e})"),
            BuilderExpr::DecoupleSeq(a, es) => {
                write!(f, "Ea{{{a}}}(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            BuilderExpr::Product(l, r) => {
                write!(f, "{l} * ")?;
                // A product in the right slot needs grouping to survive
                // the left-associative reparse.
                if matches!(**r, BuilderExpr::Product(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<(), BuilderError> {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(BuilderError::Syntax {
                offset: self.pos,
                message: format!("expected `{}`", c as char),
            })
        }
    }

    fn integer(&mut self) -> Result<u32, BuilderError> {
        self.skip_ws();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(BuilderError::Syntax {
                offset: self.pos,
                message: "expected an integer".into(),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits are valid utf8")
            .parse()
            .map_err(|_| BuilderError::Syntax {
                offset: start,
                message: "integer out of range".into(),
            })
    }

    fn expr(&mut self) -> Result<BuilderExpr, BuilderError> {
        let mut acc = self.term()?;
        while self.peek() == Some(b'*') {
            self.eat(b'*')?;
            let rhs = self.term()?;
            acc = BuilderExpr::Product(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<BuilderExpr, BuilderError> {
        match self.peek() {
            Some(b'1') => {
                self.pos += 1;
                Ok(BuilderExpr::Unit)
            }
            Some(b'[') => {
                self.eat(b'[')?;
                let inner = self.expr()?;
                self.eat(b']')?;
                self.eat(b'_')?;
                let label = self.integer()?;
                Ok(BuilderExpr::Root(label, Box::new(inner)))
            }
            Some(b'(') => {
                self.eat(b'(')?;
                let inner = self.expr()?;
                self.eat(b')')?;
                Ok(inner)
            }
            Some(b'E') => {
                self.pos += 1;
                if self.bytes.get(self.pos) == Some(&b'a') {
                    self.pos += 1;
                    self.eat(b'{')?;
                    let seq_start = self.pos;
                    // The sequence text runs to the matching '}'.
                    let mut depth = 0usize;
                    let mut end = self.pos;
                    while end < self.bytes.len() {
                        match self.bytes[end] {
                            b'{' => depth += 1,
                            b'}' if depth == 0 => break,
                            b'}' => depth -= 1,
                            _ => {}
                        }
                        end += 1;
                    }
                    if end == self.bytes.len() {
                        return Err(BuilderError::Syntax {
                            offset: seq_start,
                            message: "unterminated sequence".into(),
                        });
                    }
                    let seq_text =
                        std::str::from_utf8(&self.bytes[seq_start..end]).expect("input is utf8");
                    let a =
                        parse_seq_lenient(seq_text.trim()).map_err(|e| BuilderError::Syntax {
                            offset: seq_start,
                            message: format!("bad sequence: {e}"),
                        })?;
                    self.pos = end + 1;
                    let args_at = self.pos;
                    self.eat(b'(')?;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(b',') {
                        self.eat(b',')?;
                        args.push(self.expr()?);
                    }
                    self.eat(b')')?;
                    if args.len() != a.len() {
                        return Err(BuilderError::ArityMismatch { offset: args_at });
                    }
                    Ok(BuilderExpr::DecoupleSeq(a, args))
                } else {
                    self.eat(b'(')?;
                    let inner = self.expr()?;
                    self.eat(b')')?;
                    Ok(BuilderExpr::Decouple(Box::new(inner)))
                }
            }
            _ => Err(BuilderError::Syntax {
                offset: self.pos,
                message: "expected `1`, `[`, `E`, `Ea` or `(`".into(),
            }),
        }
    }
}

/// Parses a sequence in either the canonical `(#0,1,2)` form or the
/// zero-coded `(0,1,2)` form where a bare `0` stands for the base tag.
fn parse_seq_lenient(text: &str) -> Result<PartSeq, crate::seq::SeqError> {
    if text.contains('#') {
        return text.parse();
    }
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| crate::seq::SeqError::Parse(0, "expected (...)".into()))?;
    if inner.trim().is_empty() {
        return Ok(PartSeq::empty(BTreeSet::from([TagId::ZERO])));
    }
    let values = inner
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| crate::seq::SeqError::Parse(0, "bad value".into()))?;
    PartSeq::from_zero_coded(&values)
}

/// Decomposes a Lions forest into a generator expression whose evaluation
/// reproduces it up to isomorphism: root-touching hyperedges split the
/// forest into groups, the untagged groups are wrapped in a decoupling,
/// and each tree of a group cuts its root.
pub fn decompose(f: &LionsForest) -> BuilderExpr {
    if f.is_one() {
        return BuilderExpr::Unit;
    }
    let roots = f.roots();
    let h0 = f.tags().get(&TagId::ZERO).cloned().unwrap_or_default();
    let mut factors: Vec<BuilderExpr> = Vec::new();
    if !h0.is_empty() {
        factors.push(decompose_rooted_group(&group_of(f, &h0), &h0));
    }
    let mut root_blocks: Vec<BTreeSet<NodeId>> = f
        .blocks()
        .iter()
        .filter(|b| !b.is_disjoint(&roots))
        .cloned()
        .collect();
    root_blocks.sort();
    for h in root_blocks {
        let sub = group_of(f, &h);
        factors.push(BuilderExpr::Decouple(Box::new(decompose_rooted_group(
            &sub, &h,
        ))));
    }
    factors
        .into_iter()
        .reduce(|acc, e| BuilderExpr::Product(Box::new(acc), Box::new(e)))
        .expect("a non-empty forest has a root-touching hyperedge")
}

/// The subforest spanned by the subtrees of the roots belonging to the
/// hyperedge `h`, with `h` moved into the tag slot.
fn group_of(f: &LionsForest, h: &BTreeSet<NodeId>) -> LionsForest {
    let mut keep = BTreeSet::new();
    let group_roots: BTreeSet<NodeId> = f.roots().intersection(h).copied().collect();
    for &x in &f.nodes() {
        let mut cur = x;
        while let Some(&p) = f.parent_map().get(&cur) {
            cur = p;
        }
        if group_roots.contains(&cur) {
            keep.insert(x);
        }
    }
    let parent: BTreeMap<NodeId, NodeId> = f
        .parent_map()
        .iter()
        .filter(|(c, p)| keep.contains(c) && keep.contains(p))
        .map(|(&c, &p)| (c, p))
        .collect();
    let labels: BTreeMap<NodeId, u32> = f
        .labels()
        .iter()
        .filter(|(x, _)| keep.contains(x))
        .map(|(&x, &l)| (x, l))
        .collect();
    let tags = BTreeMap::from([(TagId::ZERO, h.clone())]);
    let blocks: BTreeSet<BTreeSet<NodeId>> = f
        .blocks()
        .iter()
        .filter(|b| *b != h && b.is_subset(&keep))
        .cloned()
        .collect();
    LionsForest::new(parent, labels, tags, blocks)
        .expect("root groups of a Lions forest are Lions forests")
}

/// Decomposes a forest whose roots are all contained in its `#0` tag:
/// a product over its trees, each tree cutting off its root.
fn decompose_rooted_group(g: &LionsForest, _h: &BTreeSet<NodeId>) -> BuilderExpr {
    let factors: Vec<BuilderExpr> = g
        .components()
        .iter()
        .map(|comp| {
            let tree = g
                .restrict_to(comp)
                .expect("components of a Lions forest are Lions forests");
            let root = *tree.roots().iter().next().expect("a tree has a root");
            let label = tree.labels()[&root];
            let rest: BTreeSet<NodeId> = comp.iter().copied().filter(|&x| x != root).collect();
            let tail = tree
                .restrict_to(&rest)
                .expect("removing the root keeps a Lions forest");
            BuilderExpr::Root(label, Box::new(decompose(&tail)))
        })
        .collect();
    factors
        .into_iter()
        .reduce(|acc, e| BuilderExpr::Product(Box::new(acc), Box::new(e)))
        .unwrap_or(BuilderExpr::Unit)
}
