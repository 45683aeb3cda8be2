//! Lions words: letter sequences carrying a tagged partition of their
//! positions, with the coupled shuffle and the deconcatenation coproduct.
//!
//! Coupled pairs and longer chains are stored in the normal form where
//! every element is tagged by the untagged blocks of the elements to its
//! right; a reference names the target by its distance and its block in
//! the target's own coordinates. Couplings are never stored as raw joint
//! partitions.

use crate::partition::{Elem, TaggedPartition};
use crate::seq::{PartSeq, SeqError};
use crate::tag::TagId;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Errors raised by word operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    /// Letters and sequence have different lengths.
    #[error("letter and sequence lengths differ")]
    LengthMismatch,
    /// The two operands carry different base tag sets.
    #[error("base tag sets differ")]
    TagSetMismatch,
    /// The tag and block sets do not partition the positions.
    #[error("tags and blocks do not partition the positions")]
    CoverMismatch,
    /// A letter is zero (letters are 1-based).
    #[error("letters must be positive")]
    BadLetter,
    /// A chain reference does not resolve to a block of its target.
    #[error("dangling tag reference in a coupled chain")]
    DanglingTagReference,
    /// Underlying sequence error.
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// A Lions word: letters at positions `1..=n` and a tagged partition of
/// the positions. Base tags are always present (possibly empty); reference
/// tags are kept only when non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LionsWord {
    letters: Vec<u32>,
    tags: BTreeMap<TagId, BTreeSet<Elem>>,
    blocks: BTreeSet<BTreeSet<Elem>>,
}

impl LionsWord {
    pub fn new(
        letters: Vec<u32>,
        tags: BTreeMap<TagId, BTreeSet<Elem>>,
        blocks: BTreeSet<BTreeSet<Elem>>,
    ) -> Result<Self, WordError> {
        if letters.contains(&0) {
            return Err(WordError::BadLetter);
        }
        let mut seen = BTreeSet::new();
        for set in tags.values() {
            for &p in set {
                if !seen.insert(p) {
                    return Err(WordError::CoverMismatch);
                }
            }
        }
        for b in &blocks {
            if b.is_empty() {
                return Err(WordError::CoverMismatch);
            }
            for &p in b {
                if !seen.insert(p) {
                    return Err(WordError::CoverMismatch);
                }
            }
        }
        let expected: BTreeSet<Elem> = (1..=letters.len() as Elem).collect();
        if seen != expected {
            return Err(WordError::CoverMismatch);
        }
        let mut w = LionsWord {
            letters,
            tags,
            blocks,
        };
        w.drop_empty_refs();
        Ok(w)
    }

    /// The empty word over a base tag set.
    pub fn empty(tag_ids: impl IntoIterator<Item = TagId>) -> Self {
        LionsWord {
            letters: Vec::new(),
            tags: tag_ids.into_iter().map(|t| (t, BTreeSet::new())).collect(),
            blocks: BTreeSet::new(),
        }
    }

    fn drop_empty_refs(&mut self) {
        self.tags.retain(|t, set| t.is_base() || !set.is_empty());
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn tags(&self) -> &BTreeMap<TagId, BTreeSet<Elem>> {
        &self.tags
    }

    pub fn blocks(&self) -> &BTreeSet<BTreeSet<Elem>> {
        &self.blocks
    }

    /// The base tag ids (the index set `I`).
    pub fn base_tags(&self) -> BTreeSet<TagId> {
        self.tags.keys().filter(|t| t.is_base()).cloned().collect()
    }

    /// The positions partition as a tagged partition value.
    pub fn positions(&self) -> TaggedPartition {
        TaggedPartition::new(self.tags.clone(), self.blocks.clone()).expect("word invariant")
    }

    /// Forgets chain references: their tag blocks become ordinary blocks.
    pub fn plain(&self) -> LionsWord {
        let mut tags = BTreeMap::new();
        let mut blocks = self.blocks.clone();
        for (t, set) in &self.tags {
            if t.is_base() {
                tags.insert(t.clone(), set.clone());
            } else if !set.is_empty() {
                blocks.insert(set.clone());
            }
        }
        LionsWord {
            letters: self.letters.clone(),
            tags,
            blocks,
        }
    }

    /// Builds a word from letters and a partition sequence of equal length.
    pub fn from_seq(letters: Vec<u32>, a: &PartSeq) -> Result<Self, WordError> {
        if letters.len() != a.len() {
            return Err(WordError::LengthMismatch);
        }
        let tp = a.to_tagged_partition();
        LionsWord::new(letters, tp.tags().clone(), tp.blocks().clone())
    }

    /// Inverse of [`LionsWord::from_seq`].
    pub fn to_seq(&self) -> Result<(Vec<u32>, PartSeq), WordError> {
        let a = PartSeq::from_tagged_partition(&self.positions())?;
        Ok((self.letters.clone(), a))
    }

    /// The bigrading `(tagged positions, untagged positions)`.
    pub fn grading(&self) -> (usize, usize) {
        let tagged: usize = self.tags.values().map(|s| s.len()).sum();
        (tagged, self.len() - tagged)
    }
}

impl fmt::Display for LionsWord {
    /// Text form `w[letters|tags|blocks]`, empty word `1`. Example:
    /// `w[1,2|#0={1}|{2}]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() && self.blocks.is_empty() {
            let all_empty = self.tags.values().all(|s| s.is_empty());
            if all_empty {
                return write!(f, "1");
            }
        }
        write!(f, "w[")?;
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "|")?;
        for (i, (t, set)) in self.tags.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}={{")?;
            for (j, p) in set.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "|")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, p) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "]")
    }
}

/// A coupled chain of Lions words: element `k` is tagged by the untagged
/// blocks of every element to its right; the last element carries only
/// base tags. A coupled pair is a chain of length two.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordChain {
    elems: Vec<LionsWord>,
}

impl WordChain {
    /// Validates the reference structure: every reference of element `k`
    /// resolves to an untagged block of the element `dist` to its right.
    pub fn new(elems: Vec<LionsWord>) -> Result<Self, WordError> {
        for (k, w) in elems.iter().enumerate() {
            for t in w.tags.keys() {
                if let TagId::Ref { dist, block } = t {
                    let target = k + *dist as usize;
                    let ok = target < elems.len() && elems[target].blocks.contains(block);
                    if !ok {
                        return Err(WordError::DanglingTagReference);
                    }
                }
            }
        }
        Ok(WordChain { elems })
    }

    pub fn single(w: LionsWord) -> Self {
        WordChain { elems: vec![w] }
    }

    pub fn elems(&self) -> &[LionsWord] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Splits element `k` at every letter boundary, producing the chains
    /// of length `len + 1` that the coproduct contributes through that
    /// element. References of the other elements are re-resolved, with the
    /// right part preferred whenever a block splits.
    pub fn split_elem(&self, k: usize) -> Vec<WordChain> {
        let w = &self.elems[k];
        let n = w.len();
        (0..=n).map(|i| self.split_elem_at(k, i)).collect()
    }

    fn split_elem_at(&self, k: usize, i: usize) -> WordChain {
        let w = &self.elems[k];
        let n = w.len();
        let prefix_set: BTreeSet<Elem> = (1..=i as Elem).collect();
        let suffix_set: BTreeSet<Elem> = (i as Elem + 1..=n as Elem).collect();
        let renum = |p: Elem| p - i as Elem;

        // Prefix: positions unchanged, own refs move one further right,
        // split blocks become references into the suffix.
        let mut ptags: BTreeMap<TagId, BTreeSet<Elem>> = BTreeMap::new();
        let mut stags: BTreeMap<TagId, BTreeSet<Elem>> = BTreeMap::new();
        for (t, set) in &w.tags {
            let pset: BTreeSet<Elem> = set.intersection(&prefix_set).copied().collect();
            let sset: BTreeSet<Elem> = set.intersection(&suffix_set).map(|&p| renum(p)).collect();
            let pid = match t {
                TagId::Ref { dist, block } => TagId::Ref {
                    dist: dist + 1,
                    block: block.clone(),
                },
                other => other.clone(),
            };
            ptags.insert(pid, pset);
            stags.insert(t.clone(), sset);
        }
        let mut pblocks = BTreeSet::new();
        let mut sblocks = BTreeSet::new();
        for b in &w.blocks {
            let bp: BTreeSet<Elem> = b.intersection(&prefix_set).copied().collect();
            let bs: BTreeSet<Elem> = b.intersection(&suffix_set).map(|&p| renum(p)).collect();
            match (bp.is_empty(), bs.is_empty()) {
                (false, true) => {
                    pblocks.insert(bp);
                }
                (true, false) => {
                    sblocks.insert(bs);
                }
                (false, false) => {
                    sblocks.insert(bs.clone());
                    ptags.insert(TagId::Ref { dist: 1, block: bs }, bp);
                }
                (true, true) => {}
            }
        }
        let mut prefix = LionsWord {
            letters: w.letters[..i].to_vec(),
            tags: ptags,
            blocks: pblocks,
        };
        prefix.drop_empty_refs();
        let mut suffix = LionsWord {
            letters: w.letters[i..].to_vec(),
            tags: stags,
            blocks: sblocks,
        };
        suffix.drop_empty_refs();

        // Reassemble the chain with re-resolved references elsewhere.
        let mut elems: Vec<LionsWord> = Vec::with_capacity(self.elems.len() + 1);
        for (q, e) in self.elems.iter().enumerate() {
            if q == k {
                elems.push(prefix.clone());
                elems.push(suffix.clone());
                continue;
            }
            if q > k {
                elems.push(e.clone());
                continue;
            }
            // q < k: adjust reference distances.
            let mut tags: BTreeMap<TagId, BTreeSet<Elem>> = BTreeMap::new();
            for (t, set) in &e.tags {
                let nid = match t {
                    TagId::Ref { dist, block } => {
                        let target = q + *dist as usize;
                        if target < k {
                            t.clone()
                        } else if target > k {
                            TagId::Ref {
                                dist: dist + 1,
                                block: block.clone(),
                            }
                        } else {
                            // Reference into the split element: prefer the
                            // suffix part, fall back to the prefix part.
                            let bs: BTreeSet<Elem> =
                                block.intersection(&suffix_set).map(|&p| renum(p)).collect();
                            if !bs.is_empty() {
                                TagId::Ref {
                                    dist: dist + 1,
                                    block: bs,
                                }
                            } else {
                                let bp: BTreeSet<Elem> =
                                    block.intersection(&prefix_set).copied().collect();
                                TagId::Ref {
                                    dist: *dist,
                                    block: bp,
                                }
                            }
                        }
                    }
                    other => other.clone(),
                };
                tags.insert(nid, set.clone());
            }
            elems.push(LionsWord {
                letters: e.letters.clone(),
                tags,
                blocks: e.blocks.clone(),
            });
        }
        WordChain::new(elems).expect("split preserves the reference structure")
    }

    /// Removes element `k`, which must be an empty word with all tag
    /// blocks empty; used by the counit laws.
    pub fn contract_empty(&self, k: usize) -> WordChain {
        assert!(self.elems[k].is_empty());
        let mut elems = Vec::new();
        for (q, e) in self.elems.iter().enumerate() {
            if q == k {
                continue;
            }
            if q > k {
                elems.push(e.clone());
                continue;
            }
            let mut tags = BTreeMap::new();
            for (t, set) in &e.tags {
                let nid = match t {
                    TagId::Ref { dist, block } if q + *dist as usize > k => TagId::Ref {
                        dist: dist - 1,
                        block: block.clone(),
                    },
                    other => other.clone(),
                };
                tags.insert(nid, set.clone());
            }
            elems.push(LionsWord {
                letters: e.letters.clone(),
                tags,
                blocks: e.blocks.clone(),
            });
        }
        WordChain::new(elems).expect("contracting an empty element keeps references valid")
    }
}

impl fmt::Display for WordChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// The deconcatenation coproduct of a single word: all splits, including
/// both boundary terms, as coupled pairs.
pub fn delta_word(w: &LionsWord) -> Vec<WordChain> {
    WordChain::single(w.clone()).split_elem(0)
}

/// Basis rule of the coupled shuffle: all riffle shuffles with the
/// positions of the second word transported through the interleaving and
/// the tag and block structures unioned.
pub fn shuffle_words(w1: &LionsWord, w2: &LionsWord) -> Result<Vec<LionsWord>, WordError> {
    Ok(shuffle_words_with_maps(w1, w2)?
        .into_iter()
        .map(|(w, _, _)| w)
        .collect())
}

/// A shuffled word with the position maps of both operands into the
/// result (`map[i-1]` is the new position of position `i`).
pub type ShuffledWord = (LionsWord, Vec<Elem>, Vec<Elem>);

/// The shuffle together with the position maps of both operands.
pub fn shuffle_words_with_maps(
    w1: &LionsWord,
    w2: &LionsWord,
) -> Result<Vec<ShuffledWord>, WordError> {
    if w1.base_tags() != w2.base_tags() {
        return Err(WordError::TagSetMismatch);
    }
    let n1 = w1.len();
    let n2 = w2.len();
    let n = n1 + n2;
    let mut out = Vec::new();
    let mut slots: Vec<usize> = (0..n1).collect(); // combination chooser
    loop {
        // `slots` holds the 0-based positions of w1's letters.
        let chosen: BTreeSet<usize> = slots.iter().copied().collect();
        let mut map1 = vec![0 as Elem; n1];
        let mut map2 = vec![0 as Elem; n2];
        let mut letters = vec![0u32; n];
        let (mut i1, mut i2) = (0usize, 0usize);
        #[allow(clippy::needless_range_loop)]
        for pos in 0..n {
            if chosen.contains(&pos) {
                letters[pos] = w1.letters[i1];
                map1[i1] = pos as Elem + 1;
                i1 += 1;
            } else {
                letters[pos] = w2.letters[i2];
                map2[i2] = pos as Elem + 1;
                i2 += 1;
            }
        }
        let tr1 = |set: &BTreeSet<Elem>| -> BTreeSet<Elem> {
            set.iter().map(|&p| map1[(p - 1) as usize]).collect()
        };
        let tr2 = |set: &BTreeSet<Elem>| -> BTreeSet<Elem> {
            set.iter().map(|&p| map2[(p - 1) as usize]).collect()
        };
        let mut tags: BTreeMap<TagId, BTreeSet<Elem>> = BTreeMap::new();
        for (t, set) in &w1.tags {
            tags.entry(t.clone()).or_default().extend(tr1(set));
        }
        for (t, set) in &w2.tags {
            tags.entry(t.clone()).or_default().extend(tr2(set));
        }
        let mut blocks = BTreeSet::new();
        for b in &w1.blocks {
            blocks.insert(tr1(b));
        }
        for b in &w2.blocks {
            blocks.insert(tr2(b));
        }
        let mut w = LionsWord {
            letters,
            tags,
            blocks,
        };
        w.drop_empty_refs();
        out.push((w, map1, map2));

        // next combination of n1 out of n
        if n1 == 0 {
            break;
        }
        let mut k = n1;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if slots[k] != k + n - n1 {
                slots[k] += 1;
                for j in k + 1..n1 {
                    slots[j] = slots[j - 1] + 1;
                }
                break;
            }
        }
    }
    Ok(out)
}

/// Remaps the blocks of every reference at distance `dist` through a
/// position map of the referenced element.
fn remap_refs(w: &LionsWord, dist: u32, map: &[Elem]) -> LionsWord {
    let tags = w
        .tags
        .iter()
        .map(|(t, set)| {
            let nt = match t {
                TagId::Ref { dist: d, block } if *d == dist => TagId::Ref {
                    dist: *d,
                    block: block.iter().map(|&p| map[(p - 1) as usize]).collect(),
                },
                other => other.clone(),
            };
            (nt, set.clone())
        })
        .collect();
    LionsWord {
        letters: w.letters.clone(),
        tags,
        blocks: w.blocks.clone(),
    }
}

/// The componentwise shuffle of two coupled pairs: the right components
/// shuffle, the references of the left components follow the transported
/// blocks, and the left components shuffle on top. This is the composite
/// of the twist with the pairwise product.
pub fn pair_shuffle(p1: &WordChain, p2: &WordChain) -> Result<Vec<WordChain>, WordError> {
    assert_eq!(p1.len(), 2);
    assert_eq!(p2.len(), 2);
    let (a, b) = (&p1.elems[0], &p1.elems[1]);
    let (c, d) = (&p2.elems[0], &p2.elems[1]);
    let mut out = Vec::new();
    for (right, map_b, map_d) in shuffle_words_with_maps(b, d)? {
        let a2 = remap_refs(a, 1, &map_b);
        let c2 = remap_refs(c, 1, &map_d);
        for left in shuffle_words(&a2, &c2)? {
            out.push(WordChain::new(vec![left, right.clone()])?);
        }
    }
    Ok(out)
}

/// All words with the exact length over `d` letters and the base tag set.
pub fn enumerate_words(len: usize, d: u32, tag_ids: &BTreeSet<TagId>) -> Vec<LionsWord> {
    let ground: BTreeSet<Elem> = (1..=len as Elem).collect();
    let decorations = TaggedPartition::enumerate(&ground, tag_ids);
    let mut out = Vec::new();
    let mut letters = vec![1u32; len];
    loop {
        for tp in &decorations {
            out.push(
                LionsWord::new(letters.clone(), tp.tags().clone(), tp.blocks().clone())
                    .expect("enumeration is valid"),
            );
        }
        let mut k = 0;
        loop {
            if k == len {
                return out;
            }
            letters[k] += 1;
            if letters[k] <= d {
                break;
            }
            letters[k] = 1;
            k += 1;
        }
    }
}

/// All words of length at most `max_len`.
pub fn enumerate_words_up_to(max_len: usize, d: u32, tag_ids: &BTreeSet<TagId>) -> Vec<LionsWord> {
    (0..=max_len)
        .flat_map(|n| enumerate_words(n, d, tag_ids))
        .collect()
}

/// Coefficient of the split `(w1, w2)` in the deconcatenation of `w`:
/// the number of splits whose parts, with inherited couplings forgotten,
/// equal the given pair.
pub fn word_count(w: &LionsWord, w1: &LionsWord, w2: &LionsWord) -> u64 {
    delta_word(w)
        .iter()
        .filter(|c| &c.elems()[0].plain() == w1 && &c.elems()[1] == w2)
        .count() as u64
}
