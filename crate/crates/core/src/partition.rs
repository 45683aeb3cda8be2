//! Set partitions, tagged partitions, couplings and the structure maps
//! between them.
//!
//! A coupling of two partitions `P` and `Q` over disjoint grounds is a
//! partition of the union ground restricting to `P` and `Q`; equivalently a
//! partial injective matching of blocks, or a pushout of two injections.
//! The asymmetric structure maps `φ` and `φ̂` project onto the right
//! partition whenever possible, which is the convention every coupled
//! chain in this crate inherits.

use crate::tag::TagId;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Opaque, totally ordered element id.
pub type Elem = u64;

/// A block of a partition.
pub type Block = BTreeSet<Elem>;

/// Errors raised by partition and coupling operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    /// A block was empty.
    #[error("partition blocks must be non-empty")]
    EmptyBlock,
    /// Two blocks (or tag sets) intersect.
    #[error("blocks are not pairwise disjoint")]
    Overlap,
    /// The two ground sets of a coupling intersect.
    #[error("ground sets must be disjoint")]
    GroundOverlap,
    /// A joint partition does not restrict to the stated marginals.
    #[error("joint partition does not restrict to the marginals")]
    RestrictionMismatch,
    /// Inverting a tagged partition into a coupling failed the cover check.
    #[error("tag and block cover does not reassemble the left partition")]
    CoverMismatch,
    /// The nesting condition of the overline union fails.
    #[error("partitions do not nest")]
    NestingViolation,
    /// A pushout leg is not injective.
    #[error("pushout legs must be injective")]
    NotInjective,
    /// A pushout leg maps outside the partition's blocks.
    #[error("pushout leg does not map into the partition")]
    NotABlock,
    /// Text form could not be parsed.
    #[error("parse error at byte {0}: {1}")]
    Parse(usize, String),
}

/// Restriction `{p ∩ s : p ∈ blocks} \ {∅}`.
pub fn restrict_blocks<'a, I>(blocks: I, s: &BTreeSet<Elem>) -> BTreeSet<Block>
where
    I: IntoIterator<Item = &'a Block>,
{
    blocks
        .into_iter()
        .map(|b| b.intersection(s).copied().collect::<Block>())
        .filter(|b| !b.is_empty())
        .collect()
}

/// A partition of a finite ground set into non-empty disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    ground: BTreeSet<Elem>,
    blocks: BTreeSet<Block>,
}

impl Partition {
    /// Builds a partition; the ground is the union of the blocks.
    pub fn new<I>(blocks: I) -> Result<Self, PartitionError>
    where
        I: IntoIterator<Item = Block>,
    {
        let mut ground = BTreeSet::new();
        let mut out = BTreeSet::new();
        for b in blocks {
            if b.is_empty() {
                return Err(PartitionError::EmptyBlock);
            }
            for &x in &b {
                if !ground.insert(x) {
                    return Err(PartitionError::Overlap);
                }
            }
            out.insert(b);
        }
        Ok(Partition {
            ground,
            blocks: out,
        })
    }

    /// The partition of the empty set.
    pub fn empty() -> Self {
        Partition {
            ground: BTreeSet::new(),
            blocks: BTreeSet::new(),
        }
    }

    /// The finest partition of `ground` (all singletons).
    pub fn singletons(ground: &BTreeSet<Elem>) -> Self {
        Partition {
            ground: ground.clone(),
            blocks: ground.iter().map(|&x| BTreeSet::from([x])).collect(),
        }
    }

    pub fn ground(&self) -> &BTreeSet<Elem> {
        &self.ground
    }

    pub fn blocks(&self) -> &BTreeSet<Block> {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The block containing `x`, if any.
    pub fn block_of(&self, x: Elem) -> Option<&Block> {
        self.blocks.iter().find(|b| b.contains(&x))
    }

    /// Restriction of the partition to `s`.
    pub fn restrict(&self, s: &BTreeSet<Elem>) -> Partition {
        Partition {
            ground: self.ground.intersection(s).copied().collect(),
            blocks: restrict_blocks(&self.blocks, s),
        }
    }

    /// All partitions of `ground`, in deterministic order.
    pub fn enumerate(ground: &BTreeSet<Elem>) -> Vec<Partition> {
        // Restricted-growth enumeration over the sorted ground.
        let elems: Vec<Elem> = ground.iter().copied().collect();
        let mut out = Vec::new();
        let mut assignment: Vec<usize> = Vec::new();
        fn go(elems: &[Elem], assignment: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if assignment.len() == elems.len() {
                let m = assignment.iter().copied().max().map_or(0, |m| m + 1);
                let mut blocks = vec![Block::new(); m];
                for (i, &j) in assignment.iter().enumerate() {
                    blocks[j].insert(elems[i]);
                }
                out.push(Partition::new(blocks).expect("enumeration yields valid partitions"));
                return;
            }
            let m = assignment.iter().copied().max().map_or(0, |m| m + 1);
            for j in 0..=m {
                assignment.push(j);
                go(elems, assignment, out);
                assignment.pop();
            }
        }
        go(&elems, &mut assignment, &mut out);
        out
    }
}

impl fmt::Display for Partition {
    /// Text form `{1,3,4 | 2}`; the empty partition prints `{}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            for (j, x) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
        }
        write!(f, "}}")
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| PartitionError::Parse(0, "expected {...}".into()))?;
        if inner.trim().is_empty() {
            return Ok(Partition::empty());
        }
        let mut blocks = Vec::new();
        for part in inner.split('|') {
            let mut block = Block::new();
            for tok in part.split(',') {
                let tok = tok.trim();
                let x: Elem = tok
                    .parse()
                    .map_err(|_| PartitionError::Parse(0, format!("bad element `{tok}`")))?;
                block.insert(x);
            }
            blocks.push(block);
        }
        Partition::new(blocks)
    }
}

/// A tagged partition: disjoint (possibly empty) tag subsets indexed by tag
/// ids, plus a partition of the remaining elements.
///
/// Empty tag subsets are retained so the index set stays part of the value;
/// the derived plain partition [`TaggedPartition::derived`] drops them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaggedPartition {
    ground: BTreeSet<Elem>,
    tags: BTreeMap<TagId, BTreeSet<Elem>>,
    blocks: BTreeSet<Block>,
}

impl TaggedPartition {
    pub fn new(
        tags: BTreeMap<TagId, BTreeSet<Elem>>,
        blocks: BTreeSet<Block>,
    ) -> Result<Self, PartitionError> {
        let mut ground = BTreeSet::new();
        for set in tags.values() {
            for &x in set {
                if !ground.insert(x) {
                    return Err(PartitionError::Overlap);
                }
            }
        }
        for b in &blocks {
            if b.is_empty() {
                return Err(PartitionError::EmptyBlock);
            }
            for &x in b {
                if !ground.insert(x) {
                    return Err(PartitionError::Overlap);
                }
            }
        }
        Ok(TaggedPartition {
            ground,
            tags,
            blocks,
        })
    }

    /// The empty tagged partition over the given tag index set.
    pub fn empty(tag_ids: impl IntoIterator<Item = TagId>) -> Self {
        TaggedPartition {
            ground: BTreeSet::new(),
            tags: tag_ids.into_iter().map(|t| (t, BTreeSet::new())).collect(),
            blocks: BTreeSet::new(),
        }
    }

    pub fn ground(&self) -> &BTreeSet<Elem> {
        &self.ground
    }

    pub fn tags(&self) -> &BTreeMap<TagId, BTreeSet<Elem>> {
        &self.tags
    }

    pub fn blocks(&self) -> &BTreeSet<Block> {
        &self.blocks
    }

    pub fn tag_ids(&self) -> impl Iterator<Item = &TagId> {
        self.tags.keys()
    }

    /// The derived plain partition: blocks plus non-empty tag subsets.
    pub fn derived(&self) -> Partition {
        let mut blocks = self.blocks.clone();
        for set in self.tags.values() {
            if !set.is_empty() {
                blocks.insert(set.clone());
            }
        }
        Partition::new(blocks).expect("derived sets are disjoint by construction")
    }

    /// Number of untagged blocks.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// The tagged-partition partial order: every tag subset grows and every
    /// block embeds into a block of the derived partition.
    pub fn leq(&self, other: &TaggedPartition) -> bool {
        for (t, set) in &self.tags {
            let o = other.tags.get(t).cloned().unwrap_or_default();
            if !set.is_subset(&o) {
                return false;
            }
        }
        let derived = other.derived();
        self.blocks
            .iter()
            .all(|b| derived.blocks().iter().any(|q| b.is_subset(q)))
    }

    /// All tagged partitions of `ground` over the given tag ids.
    pub fn enumerate(ground: &BTreeSet<Elem>, tag_ids: &BTreeSet<TagId>) -> Vec<TaggedPartition> {
        let elems: Vec<Elem> = ground.iter().copied().collect();
        let ids: Vec<TagId> = tag_ids.iter().cloned().collect();
        let mut out = Vec::new();
        // Assign each element either to one of the tags or to "untagged",
        // then partition the untagged remainder.
        let n = elems.len();
        let choices = ids.len() + 1;
        let mut assign = vec![0usize; n];
        loop {
            let mut tags: BTreeMap<TagId, BTreeSet<Elem>> =
                ids.iter().map(|t| (t.clone(), BTreeSet::new())).collect();
            let mut untagged = BTreeSet::new();
            for (i, &c) in assign.iter().enumerate() {
                if c == 0 {
                    untagged.insert(elems[i]);
                } else {
                    tags.get_mut(&ids[c - 1]).unwrap().insert(elems[i]);
                }
            }
            for p in Partition::enumerate(&untagged) {
                out.push(
                    TaggedPartition::new(tags.clone(), p.blocks().clone())
                        .expect("disjoint by construction"),
                );
            }
            // increment mixed-radix counter
            let mut k = 0;
            loop {
                if k == n {
                    return out;
                }
                assign[k] += 1;
                if assign[k] < choices {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
        }
    }
}

impl fmt::Display for TaggedPartition {
    /// Text form `tags: #0={1}; blocks: {2,3}|{4}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tags:")?;
        for (i, (t, set)) in self.tags.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, " {t}={{")?;
            for (j, x) in set.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "; blocks:")?;
        for (i, b) in self.blocks.iter().enumerate() {
            write!(f, "{}{{", if i > 0 { "|" } else { " " })?;
            for (j, x) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// A coupling of two partitions: a partition of the union ground whose
/// restrictions are the two marginals. Stored redundantly so the structure
/// maps need no recomputation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coupling {
    left: Partition,
    right: Partition,
    joint: Partition,
}

impl Coupling {
    pub fn new(
        left: Partition,
        right: Partition,
        joint: Partition,
    ) -> Result<Self, PartitionError> {
        if !left.ground().is_disjoint(right.ground()) {
            return Err(PartitionError::GroundOverlap);
        }
        if joint.restrict(left.ground()) != left || joint.restrict(right.ground()) != right {
            return Err(PartitionError::RestrictionMismatch);
        }
        Ok(Coupling { left, right, joint })
    }

    pub fn left(&self) -> &Partition {
        &self.left
    }

    pub fn right(&self) -> &Partition {
        &self.right
    }

    pub fn joint(&self) -> &Partition {
        &self.joint
    }

    /// `ψ` for the left marginal: each left block to its joint superset.
    pub fn psi_left(&self) -> BTreeMap<Block, Block> {
        self.left
            .blocks()
            .iter()
            .map(|p| {
                let g = self
                    .joint
                    .blocks()
                    .iter()
                    .find(|g| p.is_subset(g))
                    .expect("coupling invariant");
                (p.clone(), g.clone())
            })
            .collect()
    }

    /// `ψ` for the right marginal.
    pub fn psi_right(&self) -> BTreeMap<Block, Block> {
        self.right
            .blocks()
            .iter()
            .map(|q| {
                let g = self
                    .joint
                    .blocks()
                    .iter()
                    .find(|g| q.is_subset(g))
                    .expect("coupling invariant");
                (q.clone(), g.clone())
            })
            .collect()
    }

    /// `φ`: a joint block projects to its right part when it has one, and
    /// is returned unchanged (as a left block) otherwise.
    pub fn phi(&self) -> BTreeMap<Block, Block> {
        self.joint
            .blocks()
            .iter()
            .map(|g| {
                let r: Block = g.intersection(self.right.ground()).copied().collect();
                if r.is_empty() {
                    (g.clone(), g.clone())
                } else {
                    (g.clone(), r)
                }
            })
            .collect()
    }

    /// `φ̂`: a left block maps to its right partner when coupled, else to
    /// itself.
    pub fn varphi(&self) -> BTreeMap<Block, Block> {
        let psi = self.psi_left();
        self.left
            .blocks()
            .iter()
            .map(|p| {
                let g = &psi[p];
                let r: Block = g.intersection(self.right.ground()).copied().collect();
                if r.is_empty() {
                    (p.clone(), p.clone())
                } else {
                    (p.clone(), r)
                }
            })
            .collect()
    }

    /// Left blocks fixed by `φ̂`, i.e. not coupled to any right block.
    pub fn fixed_left_blocks(&self) -> BTreeSet<Block> {
        self.varphi()
            .into_iter()
            .filter(|(p, v)| p == v)
            .map(|(p, _)| p)
            .collect()
    }
}

/// All couplings of `P` and `Q`: every partial injective matching of blocks
/// with matched blocks merged. Deterministic order.
pub fn couplings(p: &Partition, q: &Partition) -> Result<Vec<Coupling>, PartitionError> {
    if !p.ground().is_disjoint(q.ground()) {
        return Err(PartitionError::GroundOverlap);
    }
    let lefts: Vec<&Block> = p.blocks().iter().collect();
    let rights: Vec<&Block> = q.blocks().iter().collect();
    let mut out = Vec::new();
    let mut partner: Vec<Option<usize>> = vec![None; lefts.len()];
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        lefts: &[&Block],
        rights: &[&Block],
        used: &mut Vec<bool>,
        partner: &mut Vec<Option<usize>>,
        p: &Partition,
        q: &Partition,
        out: &mut Vec<Coupling>,
    ) {
        if i == lefts.len() {
            let mut blocks: Vec<Block> = Vec::new();
            let mut used_right = vec![false; rights.len()];
            for (k, part) in partner.iter().enumerate() {
                match part {
                    None => blocks.push(lefts[k].clone()),
                    Some(j) => {
                        used_right[*j] = true;
                        blocks.push(lefts[k].union(rights[*j]).copied().collect());
                    }
                }
            }
            for (j, u) in used_right.iter().enumerate() {
                if !u {
                    blocks.push(rights[j].clone());
                }
            }
            let joint = Partition::new(blocks).expect("matching yields a partition");
            out.push(Coupling::new(p.clone(), q.clone(), joint).expect("valid by construction"));
            return;
        }
        partner[i] = None;
        go(i + 1, lefts, rights, used, partner, p, q, out);
        for j in 0..rights.len() {
            if !used[j] {
                used[j] = true;
                partner[i] = Some(j);
                go(i + 1, lefts, rights, used, partner, p, q, out);
                partner[i] = None;
                used[j] = false;
            }
        }
    }
    let mut used = vec![false; rights.len()];
    go(0, &lefts, &rights, &mut used, &mut partner, p, q, &mut out);
    Ok(out)
}

/// All joint partitions coupling the whole sequence at once: each
/// restriction to a single ground reproduces that marginal.
pub fn iterative_couplings(parts: &[Partition]) -> Result<Vec<Partition>, PartitionError> {
    match parts {
        [] => Ok(vec![Partition::empty()]),
        [p] => Ok(vec![p.clone()]),
        [p, rest @ ..] => {
            let mut out = Vec::new();
            for g in iterative_couplings(rest)? {
                for c in couplings(p, &g)? {
                    out.push(c.joint().clone());
                }
            }
            out.sort();
            out.dedup();
            Ok(out)
        }
    }
}

/// The tagged-partition view of a coupling: the left ground tagged by the
/// right blocks (via `φ̂⁻¹`), with the fixed left blocks untagged.
pub fn coupling_to_tagged(g: &Coupling) -> TaggedPartition {
    let varphi = g.varphi();
    let mut tags: BTreeMap<TagId, BTreeSet<Elem>> = g
        .right()
        .blocks()
        .iter()
        .map(|q| {
            (
                TagId::Ref {
                    dist: 1,
                    block: q.clone(),
                },
                BTreeSet::new(),
            )
        })
        .collect();
    let mut blocks = BTreeSet::new();
    for (p, v) in &varphi {
        if p == v {
            blocks.insert(p.clone());
        } else {
            tags.insert(
                TagId::Ref {
                    dist: 1,
                    block: v.clone(),
                },
                p.clone(),
            );
        }
    }
    TaggedPartition::new(tags, blocks).expect("tag/block sets disjoint by construction")
}

/// Inverse of [`coupling_to_tagged`]: rebuilds the coupling of the tagged
/// partition's underlying left partition with `right`.
pub fn tagged_to_coupling(
    tp: &TaggedPartition,
    right: &Partition,
) -> Result<Coupling, PartitionError> {
    // Tags must be exactly the blocks of `right`.
    let expected: BTreeSet<TagId> = right
        .blocks()
        .iter()
        .map(|q| TagId::Ref {
            dist: 1,
            block: q.clone(),
        })
        .collect();
    let actual: BTreeSet<TagId> = tp.tags().keys().cloned().collect();
    if expected != actual {
        return Err(PartitionError::CoverMismatch);
    }
    let mut joint_blocks: Vec<Block> = Vec::new();
    let mut left_blocks: Vec<Block> = tp.blocks().iter().cloned().collect();
    for (t, set) in tp.tags() {
        let TagId::Ref { block: q, .. } = t else {
            return Err(PartitionError::CoverMismatch);
        };
        if set.is_empty() {
            joint_blocks.push(q.clone());
        } else {
            joint_blocks.push(set.union(q).copied().collect());
            left_blocks.push(set.clone());
        }
    }
    joint_blocks.extend(tp.blocks().iter().cloned());
    let left = Partition::new(left_blocks)?;
    let joint = Partition::new(joint_blocks)?;
    Coupling::new(left, right.clone(), joint)
}

/// Union of two partitions whose overlap nests: every block of `Q`
/// restricted to the ground of `P` must sit inside a block of `P`. Blocks
/// of `P` absorb every `Q`-block they meet.
pub fn overline_union(p: &Partition, q: &Partition) -> Result<Partition, PartitionError> {
    let m = p.ground();
    let n = q.ground();
    for qb in q.blocks() {
        let qm: Block = qb.intersection(m).copied().collect();
        if qm.is_empty() {
            continue;
        }
        let ok = p
            .blocks()
            .iter()
            .any(|pb| qm.is_subset(&pb.intersection(n).copied().collect()));
        if !ok {
            return Err(PartitionError::NestingViolation);
        }
    }
    let mut blocks: Vec<Block> = Vec::new();
    for pb in p.blocks() {
        if pb.is_disjoint(n) {
            blocks.push(pb.clone());
        } else {
            let mut merged = pb.clone();
            for qb in q.blocks() {
                if !qb.is_disjoint(pb) {
                    merged.extend(qb.iter().copied());
                }
            }
            blocks.push(merged);
        }
    }
    for qb in q.blocks() {
        if qb.is_disjoint(m) {
            blocks.push(qb.clone());
        }
    }
    Partition::new(blocks)
}

/// The pushout of two injections realised as a coupling: each pair
/// `(f(z), g(z))` merges one left block with one right block.
pub fn pushout(
    p: &Partition,
    q: &Partition,
    pairs: &[(Block, Block)],
) -> Result<Coupling, PartitionError> {
    if !p.ground().is_disjoint(q.ground()) {
        return Err(PartitionError::GroundOverlap);
    }
    let mut seen_left = BTreeSet::new();
    let mut seen_right = BTreeSet::new();
    for (pb, qb) in pairs {
        if !p.blocks().contains(pb) || !q.blocks().contains(qb) {
            return Err(PartitionError::NotABlock);
        }
        if !seen_left.insert(pb.clone()) || !seen_right.insert(qb.clone()) {
            return Err(PartitionError::NotInjective);
        }
    }
    let mut blocks: Vec<Block> = Vec::new();
    for pb in p.blocks() {
        match pairs.iter().find(|(l, _)| l == pb) {
            Some((_, qb)) => blocks.push(pb.union(qb).copied().collect()),
            None => blocks.push(pb.clone()),
        }
    }
    for qb in q.blocks() {
        if !pairs.iter().any(|(_, r)| r == qb) {
            blocks.push(qb.clone());
        }
    }
    let joint = Partition::new(blocks)?;
    Coupling::new(p.clone(), q.clone(), joint)
}
