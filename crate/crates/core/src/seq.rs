//! Partition sequences: the index combinatorics of iterated Lions
//! derivatives.
//!
//! A partition sequence over a tag set `I` is a finite sequence of tokens,
//! each either a tag from `I` or a positive integer, whose integer
//! subsequence starts at 1 and has a 1-Lipschitz running maximum. The
//! integer values name the free variables created by Lions derivatives and
//! the tags name pre-existing variables.

use crate::partition::{Elem, TaggedPartition};
use crate::tag::TagId;
use crate::Rat;
use num::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// One token of a partition sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    /// A tag from the index set.
    Tag(TagId),
    /// A positive integer naming a derivative block.
    Num(u32),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Tag(t) => write!(f, "{t}"),
            Token::Num(v) => write!(f, "{v}"),
        }
    }
}

/// Errors raised by sequence operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    /// A tag token does not belong to the declared tag set.
    #[error("tag not in the index set")]
    UnknownTag,
    /// The integer subsequence violates the 1-Lip envelope or does not
    /// start at 1.
    #[error("integer subsequence violates the envelope condition")]
    EnvelopeViolation,
    /// Two sequences of different lengths were compared.
    #[error("sequence lengths differ")]
    LengthMismatch,
    /// Split index out of range.
    #[error("split index out of range")]
    IndexOutOfRange,
    /// A value sequence is not constant on a block.
    #[error("value sequence is not constant on a block")]
    NotConstantOnBlock,
    /// The sequence does not refine the value sequence's level sets.
    #[error("sequence is not finer than the value sequence")]
    OrderViolation,
    /// Grading parameters out of range.
    #[error("grading weights must be positive")]
    InvalidGrading,
    /// Inverse of the tagged-partition map needs ground `{1..n}`.
    #[error("tagged partition ground must be {{1..n}}")]
    InvalidGround,
    /// Text form could not be parsed.
    #[error("parse error at byte {0}: {1}")]
    Parse(usize, String),
}

/// A validated partition sequence over a tag set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartSeq {
    entries: Vec<Token>,
    tags: BTreeSet<TagId>,
}

/// Per-sequence statistics: length, maximal integer value and the preimage
/// map over tags and integer values (positions are 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqStats {
    pub len: usize,
    pub max_num: u32,
    pub tag_preimages: BTreeMap<TagId, BTreeSet<usize>>,
    /// `num_preimages[j - 1]` is the preimage of the value `j`.
    pub num_preimages: Vec<BTreeSet<usize>>,
}

impl PartSeq {
    /// Validates a token sequence against a tag set.
    pub fn new(entries: Vec<Token>, tags: BTreeSet<TagId>) -> Result<Self, SeqError> {
        let mut max = 0u32;
        for e in &entries {
            match e {
                Token::Tag(t) => {
                    if !tags.contains(t) {
                        return Err(SeqError::UnknownTag);
                    }
                }
                Token::Num(v) => {
                    if *v == 0 || *v > max + 1 {
                        return Err(SeqError::EnvelopeViolation);
                    }
                    max = max.max(*v);
                }
            }
        }
        Ok(PartSeq { entries, tags })
    }

    /// The empty sequence over a tag set.
    pub fn empty(tags: BTreeSet<TagId>) -> Self {
        PartSeq {
            entries: Vec::new(),
            tags,
        }
    }

    /// Convenience constructor from integer values where `0` stands for the
    /// base tag `#0` and positive values are numeric tokens.
    pub fn from_zero_coded(values: &[u32]) -> Result<Self, SeqError> {
        let entries = values
            .iter()
            .map(|&v| {
                if v == 0 {
                    Token::Tag(TagId::ZERO)
                } else {
                    Token::Num(v)
                }
            })
            .collect();
        PartSeq::new(entries, BTreeSet::from([TagId::ZERO]))
    }

    pub fn entries(&self) -> &[Token] {
        &self.entries
    }

    pub fn tags(&self) -> &BTreeSet<TagId> {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `m[a]`: the maximal integer value, 0 when there is none.
    pub fn max_num(&self) -> u32 {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Token::Num(v) => Some(*v),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Preimage of the value `j ≥ 1` (1-based positions).
    pub fn preimage_num(&self, j: u32) -> BTreeSet<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| **e == Token::Num(j))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Preimage of a tag (1-based positions).
    pub fn preimage_tag(&self, t: &TagId) -> BTreeSet<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| **e == Token::Tag(t.clone()))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Length, maximal value and the full preimage map.
    pub fn stats(&self) -> SeqStats {
        let max_num = self.max_num();
        SeqStats {
            len: self.len(),
            max_num,
            tag_preimages: self
                .tags
                .iter()
                .map(|t| (t.clone(), self.preimage_tag(t)))
                .collect(),
            num_preimages: (1..=max_num).map(|j| self.preimage_num(j)).collect(),
        }
    }

    /// Number of tagged positions.
    pub fn tagged_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, Token::Tag(_)))
            .count()
    }

    /// Number of integer positions.
    pub fn num_count(&self) -> usize {
        self.len() - self.tagged_count()
    }

    /// The partial order: every tag preimage is contained in the matching
    /// tag preimage and every numeric block embeds into some block (tagged
    /// or numeric) of `other`.
    pub fn leq(&self, other: &PartSeq) -> Result<bool, SeqError> {
        if self.len() != other.len() {
            return Err(SeqError::LengthMismatch);
        }
        for t in self.tags.union(&other.tags) {
            if !self.preimage_tag(t).is_subset(&other.preimage_tag(t)) {
                return Ok(false);
            }
        }
        let mut targets: Vec<BTreeSet<usize>> = Vec::new();
        for t in &other.tags {
            targets.push(other.preimage_tag(t));
        }
        for j in 1..=other.max_num() {
            targets.push(other.preimage_num(j));
        }
        for j in 1..=self.max_num() {
            let block = self.preimage_num(j);
            if !targets.iter().any(|t| block.is_subset(t)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The grading `α·(tagged positions) + β·(integer positions)`.
    pub fn grading(&self, p: &GradingParams) -> Rat {
        p.alpha.clone() * Rat::from_integer((self.tagged_count() as i64).into())
            + p.beta.clone() * Rat::from_integer((self.num_count() as i64).into())
    }

    /// Splits at `j`: the prefix keeps the tag set; the suffix re-encodes
    /// values that resolve inside the prefix as block references and shifts
    /// the genuinely new values down.
    pub fn split(&self, j: usize) -> Result<(PartSeq, PartSeq), SeqError> {
        if j > self.len() {
            return Err(SeqError::IndexOutOfRange);
        }
        let prefix = PartSeq::new(self.entries[..j].to_vec(), self.tags.clone())?;
        let m1 = prefix.max_num();
        let mut suffix_tags = self.tags.clone();
        for v in 1..=m1 {
            suffix_tags.insert(TagId::Ref {
                dist: 1,
                block: prefix.preimage_num(v).iter().map(|&p| p as Elem).collect(),
            });
        }
        let suffix_entries = self.entries[j..]
            .iter()
            .map(|e| match e {
                Token::Tag(t) => Token::Tag(t.clone()),
                Token::Num(v) if *v <= m1 => Token::Tag(TagId::Ref {
                    dist: 1,
                    block: prefix.preimage_num(*v).iter().map(|&p| p as Elem).collect(),
                }),
                Token::Num(v) => Token::Num(v - m1),
            })
            .collect();
        let suffix = PartSeq::new(suffix_entries, suffix_tags)?;
        Ok((prefix, suffix))
    }

    /// Inverse of [`PartSeq::split`]: concatenates `self` with a sequence
    /// over `tags(self) ∪ blocks(self)`.
    pub fn join(&self, suffix: &PartSeq) -> Result<PartSeq, SeqError> {
        let m1 = self.max_num();
        let mut expected = self.tags.clone();
        for v in 1..=m1 {
            expected.insert(TagId::Ref {
                dist: 1,
                block: self.preimage_num(v).iter().map(|&p| p as Elem).collect(),
            });
        }
        if suffix.tags != expected {
            return Err(SeqError::UnknownTag);
        }
        let mut entries = self.entries.clone();
        for e in &suffix.entries {
            entries.push(match e {
                Token::Tag(TagId::Ref { dist: 1, block }) => {
                    let v = (1..=m1)
                        .find(|&v| {
                            self.preimage_num(v)
                                .iter()
                                .map(|&p| p as Elem)
                                .collect::<BTreeSet<Elem>>()
                                == *block
                        })
                        .ok_or(SeqError::UnknownTag)?;
                    Token::Num(v)
                }
                Token::Tag(t) => Token::Tag(t.clone()),
                Token::Num(v) => Token::Num(v + m1),
            });
        }
        PartSeq::new(entries, self.tags.clone())
    }

    /// The tagged partition of `{1..n}` with the tag preimages as tag
    /// subsets and the numeric preimages as blocks.
    pub fn to_tagged_partition(&self) -> TaggedPartition {
        let tags: BTreeMap<TagId, BTreeSet<Elem>> = self
            .tags
            .iter()
            .map(|t| {
                (
                    t.clone(),
                    self.preimage_tag(t).iter().map(|&p| p as Elem).collect(),
                )
            })
            .collect();
        let blocks = (1..=self.max_num())
            .map(|j| {
                self.preimage_num(j)
                    .iter()
                    .map(|&p| p as Elem)
                    .collect::<BTreeSet<Elem>>()
            })
            .collect();
        TaggedPartition::new(tags, blocks).expect("preimages partition the positions")
    }

    /// Inverse of [`PartSeq::to_tagged_partition`]: requires the ground set
    /// `{1..n}`; blocks are numbered by first occurrence.
    pub fn from_tagged_partition(tp: &TaggedPartition) -> Result<PartSeq, SeqError> {
        let n = tp.ground().len() as Elem;
        let expected: BTreeSet<Elem> = (1..=n).collect();
        if tp.ground() != &expected {
            return Err(SeqError::InvalidGround);
        }
        let mut entries: Vec<Option<Token>> = vec![None; n as usize];
        for (t, set) in tp.tags() {
            for &p in set {
                entries[(p - 1) as usize] = Some(Token::Tag(t.clone()));
            }
        }
        // Number blocks by their minimal position.
        let mut blocks: Vec<&BTreeSet<Elem>> = tp.blocks().iter().collect();
        blocks.sort_by_key(|b| *b.iter().next().expect("blocks are non-empty"));
        for (j, b) in blocks.iter().enumerate() {
            for &p in *b {
                entries[(p - 1) as usize] = Some(Token::Num(j as u32 + 1));
            }
        }
        let entries: Vec<Token> = entries
            .into_iter()
            .map(|e| e.expect("partition covers the ground"))
            .collect();
        PartSeq::new(entries, tp.tag_ids().cloned().collect())
    }

    /// Renders the parenthesised text form, e.g. `(#0,1,1,2)`.
    pub fn text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PartSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for PartSeq {
    type Err = SeqError;

    /// Parses the text form; the tag set is inferred from the occurring
    /// tags. `#k` is a base tag, `#>d{..}` a block reference.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| SeqError::Parse(0, "expected (...)".into()))?;
        let mut entries = Vec::new();
        let mut tags = BTreeSet::new();
        if !inner.trim().is_empty() {
            for raw in split_top_level(inner) {
                let tok = raw.trim();
                if let Some(rest) = tok.strip_prefix("#>") {
                    let brace = rest
                        .find('{')
                        .ok_or_else(|| SeqError::Parse(0, format!("bad reference `{tok}`")))?;
                    let dist: u32 = rest[..brace]
                        .parse()
                        .map_err(|_| SeqError::Parse(0, format!("bad distance `{tok}`")))?;
                    let set_str = rest[brace..]
                        .strip_prefix('{')
                        .and_then(|r| r.strip_suffix('}'))
                        .ok_or_else(|| SeqError::Parse(0, format!("bad set `{tok}`")))?;
                    let mut block = BTreeSet::new();
                    for x in set_str.split(',').filter(|x| !x.trim().is_empty()) {
                        block.insert(
                            x.trim()
                                .parse::<Elem>()
                                .map_err(|_| SeqError::Parse(0, format!("bad element `{x}`")))?,
                        );
                    }
                    let tag = TagId::Ref { dist, block };
                    tags.insert(tag.clone());
                    entries.push(Token::Tag(tag));
                } else if let Some(rest) = tok.strip_prefix('#') {
                    let k: u32 = rest
                        .parse()
                        .map_err(|_| SeqError::Parse(0, format!("bad tag `{tok}`")))?;
                    tags.insert(TagId::Base(k));
                    entries.push(Token::Tag(TagId::Base(k)));
                } else {
                    let v: u32 = tok
                        .parse()
                        .map_err(|_| SeqError::Parse(0, format!("bad value `{tok}`")))?;
                    entries.push(Token::Num(v));
                }
            }
        }
        PartSeq::new(entries, tags)
    }
}

/// Splits on commas that are not inside braces.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Positive grading weights and a truncation level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradingParams {
    pub alpha: Rat,
    pub beta: Rat,
    pub gamma: Rat,
}

impl GradingParams {
    pub fn new(alpha: Rat, beta: Rat, gamma: Rat) -> Result<Self, SeqError> {
        if !alpha.is_positive() || !beta.is_positive() {
            return Err(SeqError::InvalidGrading);
        }
        Ok(GradingParams { alpha, beta, gamma })
    }

    /// Integer convenience constructor.
    pub fn from_ints(alpha: i64, beta: i64, gamma: i64) -> Result<Self, SeqError> {
        GradingParams::new(
            Rat::from_integer(alpha.into()),
            Rat::from_integer(beta.into()),
            Rat::from_integer(gamma.into()),
        )
    }
}

/// All sequences of length `n` over the tag set, in lexicographic order
/// with tag tokens before integer tokens.
pub fn enumerate_seqs(n: usize, tags: &BTreeSet<TagId>) -> Vec<PartSeq> {
    let mut out = Vec::new();
    let mut entries: Vec<Token> = Vec::new();
    fn go(
        n: usize,
        tags: &BTreeSet<TagId>,
        max: u32,
        entries: &mut Vec<Token>,
        out: &mut Vec<PartSeq>,
    ) {
        if entries.len() == n {
            out.push(PartSeq {
                entries: entries.clone(),
                tags: tags.clone(),
            });
            return;
        }
        for t in tags {
            entries.push(Token::Tag(t.clone()));
            go(n, tags, max, entries, out);
            entries.pop();
        }
        for v in 1..=max + 1 {
            entries.push(Token::Num(v));
            go(n, tags, max.max(v), entries, out);
            entries.pop();
        }
    }
    go(n, tags, 0, &mut entries, &mut out);
    out
}

/// The finite truncated family: all sequences with grading at most `γ`.
pub fn enumerate_truncated(p: &GradingParams, tags: &BTreeSet<TagId>) -> Vec<PartSeq> {
    let min_w = p.alpha.clone().min(p.beta.clone());
    if p.gamma < Rat::zero() {
        return Vec::new();
    }
    let max_len = (p.gamma.clone() / min_w).floor().to_integer();
    let max_len: usize = if max_len < Zero::zero() {
        0
    } else {
        max_len.try_into().unwrap_or(0)
    };
    let mut out = Vec::new();
    for n in 0..=max_len {
        for a in enumerate_seqs(n, tags) {
            if a.grading(p) <= p.gamma {
                out.push(a);
            }
        }
    }
    out
}

/// The canonical representative of a value sequence: positions equal to
/// `c` become the base tag `#0` and the remaining level sets are numbered
/// by first occurrence.
pub fn equiv_class_rep<V: Ord>(b: &[V], c: &V) -> PartSeq {
    let mut labels: Vec<&V> = Vec::new();
    let entries = b
        .iter()
        .map(|v| {
            if v == c {
                Token::Tag(TagId::ZERO)
            } else {
                match labels.iter().position(|&l| l == v) {
                    Some(j) => Token::Num(j as u32 + 1),
                    None => {
                        labels.push(v);
                        Token::Num(labels.len() as u32)
                    }
                }
            }
        })
        .collect();
    PartSeq::new(entries, BTreeSet::from([TagId::ZERO]))
        .expect("first-occurrence numbering satisfies the envelope")
}

/// `b ∘ (a)`: the common `b`-value on each numeric block of `a`, for `a`
/// finer than the level sets of `b` with distinguished value `c`.
pub fn compose_values<V: Ord + Clone>(b: &[V], c: &V, a: &PartSeq) -> Result<Vec<V>, SeqError> {
    if b.len() != a.len() {
        return Err(SeqError::LengthMismatch);
    }
    for (i, e) in a.entries().iter().enumerate() {
        if matches!(e, Token::Tag(_)) && &b[i] != c {
            return Err(SeqError::OrderViolation);
        }
    }
    let mut out = Vec::new();
    for j in 1..=a.max_num() {
        let block = a.preimage_num(j);
        let mut iter = block.iter();
        let first = *iter.next().expect("numeric blocks are non-empty");
        let v = &b[first - 1];
        if iter.any(|&p| &b[p - 1] != v) {
            return Err(SeqError::NotConstantOnBlock);
        }
        out.push(v.clone());
    }
    Ok(out)
}
