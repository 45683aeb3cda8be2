//! Lions forests: labelled directed forests carrying a 1-regular tagged
//! hyperedge partition subject to the root, parent-closure and
//! sibling-parent conditions.
//!
//! The hyperedge structure is equivalent to a tagged partition of the
//! roots plus a partition of every node together with its children; the
//! equivalence drives enumeration, projection and canonical forms.

mod canon;
mod chain;
mod io;

pub use canon::brute_force_isomorphic;
pub use chain::{delta_forest, ForestChain};
pub use io::{forest_from_json, forest_to_dot, forest_to_json, forest_to_text};

use crate::partition::{
    overline_union, restrict_blocks, Block, Coupling, Partition, PartitionError, TaggedPartition,
};
use crate::seq::{PartSeq, Token};
use crate::tag::TagId;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Node identifier.
pub type NodeId = u64;

/// Errors raised by forest construction and operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    /// The edge relation contains a cycle.
    #[error("edges contain a cycle")]
    CycleDetected,
    /// A non-empty tag hyperedge contains no root.
    #[error("non-empty tag hyperedge without a root")]
    TagWithoutRoot,
    /// A strictly deeper node of a hyperedge has its parent outside.
    #[error("hyperedge member's parent escapes the hyperedge")]
    ParentEscape,
    /// Equal-depth members with distinct parents whose parents escape.
    #[error("sibling parents escape the hyperedge")]
    SiblingParentEscape,
    /// Tags and blocks do not partition the node set.
    #[error("hyperedges do not partition the nodes")]
    CoverMismatch,
    /// An edge endpoint is not a node.
    #[error("edge endpoint is not a node")]
    UnknownNode,
    /// A label is zero (labels are 1-based).
    #[error("labels must be positive")]
    BadLabel,
    /// The operation needs a tree.
    #[error("operation requires a tree")]
    NotATree,
    /// A grouped operator got the wrong number of arguments.
    #[error("argument count does not match the sequence length")]
    ArityMismatch,
    /// A chain reference does not resolve.
    #[error("dangling tag reference in a coupled chain")]
    DanglingTagReference,
    /// Underlying partition error.
    #[error(transparent)]
    Partition(#[from] PartitionError),
    /// Structured file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// A labelled Lions forest. Nodes are opaque ids; `parent` maps every
/// non-root node to its parent. Base tags are always present (possibly
/// empty); reference and raw tags are kept only when non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LionsForest {
    parent: BTreeMap<NodeId, NodeId>,
    labels: BTreeMap<NodeId, u32>,
    tags: BTreeMap<TagId, BTreeSet<NodeId>>,
    blocks: BTreeSet<BTreeSet<NodeId>>,
}

impl LionsForest {
    /// Validates the full structure.
    pub fn new(
        parent: BTreeMap<NodeId, NodeId>,
        labels: BTreeMap<NodeId, u32>,
        tags: BTreeMap<TagId, BTreeSet<NodeId>>,
        blocks: BTreeSet<BTreeSet<NodeId>>,
    ) -> Result<Self, ForestError> {
        if labels.values().any(|&l| l == 0) {
            return Err(ForestError::BadLabel);
        }
        let nodes: BTreeSet<NodeId> = labels.keys().copied().collect();
        for (c, p) in &parent {
            if !nodes.contains(c) || !nodes.contains(p) {
                return Err(ForestError::UnknownNode);
            }
        }
        let mut f = LionsForest {
            parent,
            labels,
            tags,
            blocks,
        };
        f.drop_empty_refs();
        let depths = f.try_depths()?;

        // 1-regularity: tags and blocks partition the nodes.
        let mut seen = BTreeSet::new();
        for set in f.tags.values() {
            for &x in set {
                if !seen.insert(x) {
                    return Err(ForestError::CoverMismatch);
                }
            }
        }
        for b in &f.blocks {
            if b.is_empty() {
                return Err(ForestError::CoverMismatch);
            }
            for &x in b {
                if !seen.insert(x) {
                    return Err(ForestError::CoverMismatch);
                }
            }
        }
        if seen != nodes {
            return Err(ForestError::CoverMismatch);
        }

        // Root condition for tags.
        for set in f.tags.values() {
            if !set.is_empty() && !set.iter().any(|x| depths[x] == 0) {
                return Err(ForestError::TagWithoutRoot);
            }
        }
        // Parent closure and sibling parents for every hyperedge.
        for h in f.hyperedges() {
            let dmin = h.iter().map(|x| depths[x]).min().expect("non-empty");
            for &y in &h {
                if depths[&y] > dmin {
                    let p = f.parent[&y];
                    if !h.contains(&p) {
                        return Err(ForestError::ParentEscape);
                    }
                }
            }
            for &x in &h {
                for &y in &h {
                    if x < y && depths[&x] == depths[&y] {
                        if let (Some(&px), Some(&py)) = (f.parent.get(&x), f.parent.get(&y)) {
                            if px != py && (!h.contains(&px) || !h.contains(&py)) {
                                return Err(ForestError::SiblingParentEscape);
                            }
                        }
                    }
                }
            }
        }
        Ok(f)
    }

    /// The empty forest with the single base tag slot `#0`.
    pub fn one() -> Self {
        LionsForest {
            parent: BTreeMap::new(),
            labels: BTreeMap::new(),
            tags: BTreeMap::from([(TagId::ZERO, BTreeSet::new())]),
            blocks: BTreeSet::new(),
        }
    }

    /// A single tagged node, `⌊1⌋_label`.
    pub fn single(label: u32) -> Result<Self, ForestError> {
        LionsForest::one().rooted(label)
    }

    fn drop_empty_refs(&mut self) {
        self.tags.retain(|t, set| t.is_base() || !set.is_empty());
    }

    fn try_depths(&self) -> Result<BTreeMap<NodeId, u32>, ForestError> {
        let mut depths: BTreeMap<NodeId, u32> = BTreeMap::new();
        for &x in self.labels.keys() {
            let mut path = vec![x];
            let mut cur = x;
            loop {
                if let Some(&d) = depths.get(&cur) {
                    for (i, &y) in path.iter().enumerate() {
                        depths.insert(y, d + (path.len() - 1 - i) as u32);
                    }
                    break;
                }
                match self.parent.get(&cur) {
                    None => {
                        for (i, &y) in path.iter().enumerate() {
                            depths.insert(y, (path.len() - 1 - i) as u32);
                        }
                        break;
                    }
                    Some(&p) => {
                        if path.contains(&p) {
                            return Err(ForestError::CycleDetected);
                        }
                        path.push(p);
                        cur = p;
                    }
                }
            }
        }
        Ok(depths)
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        self.labels.keys().copied().collect()
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_one(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn parent_map(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.parent
    }

    pub fn labels(&self) -> &BTreeMap<NodeId, u32> {
        &self.labels
    }

    pub fn tags(&self) -> &BTreeMap<TagId, BTreeSet<NodeId>> {
        &self.tags
    }

    pub fn blocks(&self) -> &BTreeSet<BTreeSet<NodeId>> {
        &self.blocks
    }

    /// The base tag ids (the index set `I`).
    pub fn base_tags(&self) -> BTreeSet<TagId> {
        self.tags.keys().filter(|t| t.is_base()).cloned().collect()
    }

    /// Depth of every node (0 at roots).
    pub fn depths(&self) -> BTreeMap<NodeId, u32> {
        self.try_depths().expect("validated forest")
    }

    pub fn roots(&self) -> BTreeSet<NodeId> {
        self.labels
            .keys()
            .filter(|x| !self.parent.contains_key(x))
            .copied()
            .collect()
    }

    pub fn children(&self, x: NodeId) -> BTreeSet<NodeId> {
        self.parent
            .iter()
            .filter(|(_, &p)| p == x)
            .map(|(&c, _)| c)
            .collect()
    }

    /// True when the forest is a single tree (exactly one root).
    pub fn is_tree(&self) -> bool {
        self.roots().len() == 1
    }

    /// All hyperedges: non-empty tag sets followed by the blocks.
    pub fn hyperedges(&self) -> Vec<BTreeSet<NodeId>> {
        let mut out: Vec<BTreeSet<NodeId>> = self
            .tags
            .values()
            .filter(|s| !s.is_empty())
            .cloned()
            .collect();
        out.extend(self.blocks.iter().cloned());
        out
    }

    /// The hyperedge decoration as a tagged partition of the nodes.
    pub fn decoration(&self) -> TaggedPartition {
        TaggedPartition::new(self.tags.clone(), self.blocks.clone()).expect("forest invariant")
    }

    /// Replaces the decoration, revalidating the hypergraph conditions.
    pub fn with_decoration(&self, tp: &TaggedPartition) -> Result<LionsForest, ForestError> {
        LionsForest::new(
            self.parent.clone(),
            self.labels.clone(),
            tp.tags().clone(),
            tp.blocks().clone(),
        )
    }

    /// Forgets chain references: their blocks become ordinary hyperedges.
    pub fn plain(&self) -> LionsForest {
        let mut tags = BTreeMap::new();
        let mut blocks = self.blocks.clone();
        for (t, set) in &self.tags {
            if t.is_base() {
                tags.insert(t.clone(), set.clone());
            } else if !set.is_empty() {
                blocks.insert(set.clone());
            }
        }
        LionsForest {
            parent: self.parent.clone(),
            labels: self.labels.clone(),
            tags,
            blocks,
        }
    }

    /// The bigrading `(tagged nodes, untagged nodes)`.
    pub fn grading(&self) -> (usize, usize) {
        let tagged: usize = self.tags.values().map(|s| s.len()).sum();
        (tagged, self.node_count() - tagged)
    }

    /// Next unused node id.
    fn fresh_id(&self) -> NodeId {
        self.labels.keys().next_back().map_or(0, |&m| m + 1)
    }

    /// Shifts every node id (including ids inside raw references).
    pub(crate) fn shift_ids(&self, offset: NodeId) -> LionsForest {
        let sh =
            |s: &BTreeSet<NodeId>| -> BTreeSet<NodeId> { s.iter().map(|&x| x + offset).collect() };
        LionsForest {
            parent: self
                .parent
                .iter()
                .map(|(&c, &p)| (c + offset, p + offset))
                .collect(),
            labels: self.labels.iter().map(|(&x, &l)| (x + offset, l)).collect(),
            tags: self
                .tags
                .iter()
                .map(|(t, set)| {
                    let nt = match t {
                        TagId::Raw(b) => TagId::Raw(sh(b)),
                        other => other.clone(),
                    };
                    (nt, sh(set))
                })
                .collect(),
            blocks: self.blocks.iter().map(sh).collect(),
        }
    }

    /// The product `⊛`: disjoint union with the second operand renamed
    /// away from the first, tags unioned per tag id.
    pub fn product(&self, other: &LionsForest) -> LionsForest {
        let offset = self.fresh_id();
        let other = other.shift_ids(offset);
        let mut parent = self.parent.clone();
        parent.extend(other.parent);
        let mut labels = self.labels.clone();
        labels.extend(other.labels);
        let mut tags = self.tags.clone();
        for (t, set) in other.tags {
            tags.entry(t).or_default().extend(set);
        }
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks);
        let mut f = LionsForest {
            parent,
            labels,
            tags,
            blocks,
        };
        f.drop_empty_refs();
        f
    }

    /// The decoupling `𝓔` on the canonical tag `#0`: the tagged hyperedge
    /// becomes an ordinary block.
    pub fn decouple(&self) -> LionsForest {
        self.decouple_tag(&TagId::ZERO)
    }

    /// Decoupling of a specific tag slot.
    pub fn decouple_tag(&self, t: &TagId) -> LionsForest {
        let mut f = self.clone();
        if let Some(set) = f.tags.get_mut(t) {
            if !set.is_empty() {
                let moved = std::mem::take(set);
                f.blocks.insert(moved);
            }
        }
        f.drop_empty_refs();
        f
    }

    /// The grouped decoupling `𝓔^a`: the tagged group is kept as is and
    /// each numbered group is decoupled after taking its product.
    pub fn decouple_seq(a: &PartSeq, forests: &[LionsForest]) -> Result<LionsForest, ForestError> {
        if a.len() != forests.len() {
            return Err(ForestError::ArityMismatch);
        }
        let mut acc = LionsForest::one();
        let mut tagged_group = LionsForest::one();
        for (tok, f) in a.entries().iter().zip(forests) {
            if matches!(tok, Token::Tag(_)) {
                tagged_group = tagged_group.product(f);
            }
        }
        acc = acc.product(&tagged_group);
        for j in 1..=a.max_num() {
            let mut group = LionsForest::one();
            for (tok, f) in a.entries().iter().zip(forests) {
                if *tok == Token::Num(j) {
                    group = group.product(f);
                }
            }
            acc = acc.product(&group.decouple());
        }
        Ok(acc)
    }

    /// The rooting `⌊·⌋_label`: grafts all roots onto a fresh node that
    /// joins the `#0` hyperedge.
    pub fn rooted(&self, label: u32) -> Result<LionsForest, ForestError> {
        self.rooted_fresh(label, self.fresh_id())
    }

    /// Rooting with an explicitly chosen fresh node id, so raw chains can
    /// keep their id spaces disjoint.
    pub(crate) fn rooted_fresh(&self, label: u32, x0: NodeId) -> Result<LionsForest, ForestError> {
        if label == 0 {
            return Err(ForestError::BadLabel);
        }
        if self.labels.contains_key(&x0) {
            return Err(ForestError::UnknownNode);
        }
        let mut parent = self.parent.clone();
        for r in self.roots() {
            parent.insert(r, x0);
        }
        let mut labels = self.labels.clone();
        labels.insert(x0, label);
        let mut tags = self.tags.clone();
        tags.entry(TagId::ZERO).or_default().insert(x0);
        LionsForest::new(parent, labels, tags, self.blocks.clone())
    }

    /// Restriction to a node subset: edges, labels, tags and blocks all
    /// restricted; validity is re-checked.
    pub(crate) fn restrict_to(&self, keep: &BTreeSet<NodeId>) -> Result<LionsForest, ForestError> {
        let parent = self
            .parent
            .iter()
            .filter(|(c, p)| keep.contains(c) && keep.contains(p))
            .map(|(&c, &p)| (c, p))
            .collect();
        let labels = self
            .labels
            .iter()
            .filter(|(x, _)| keep.contains(x))
            .map(|(&x, &l)| (x, l))
            .collect();
        let tags = self
            .tags
            .iter()
            .map(|(t, set)| (t.clone(), set.intersection(keep).copied().collect()))
            .collect();
        let blocks = restrict_blocks(&self.blocks, keep);
        LionsForest::new(parent, labels, tags, blocks)
    }

    /// Node sets of the component trees, one per root, in root order.
    pub fn components(&self) -> Vec<BTreeSet<NodeId>> {
        let mut comp: BTreeMap<NodeId, NodeId> = BTreeMap::new(); // node -> its root
        for &x in self.labels.keys() {
            let mut cur = x;
            while let Some(&p) = self.parent.get(&cur) {
                cur = p;
            }
            comp.insert(x, cur);
        }
        self.roots()
            .iter()
            .map(|r| {
                comp.iter()
                    .filter(|(_, root)| *root == r)
                    .map(|(&x, _)| x)
                    .collect()
            })
            .collect()
    }

    /// All admissible cuts of a tree: non-empty edge subsets meeting every
    /// root path at most once.
    pub fn cuts(&self) -> Result<Vec<Cut>, ForestError> {
        if !self.is_tree() {
            return Err(ForestError::NotATree);
        }
        let root = *self.roots().iter().next().expect("tree has a root");
        fn choices(f: &LionsForest, x: NodeId) -> Vec<BTreeSet<(NodeId, NodeId)>> {
            let mut acc: Vec<BTreeSet<(NodeId, NodeId)>> = vec![BTreeSet::new()];
            for c in f.children(x) {
                let mut opts: Vec<BTreeSet<(NodeId, NodeId)>> = vec![BTreeSet::from([(c, x)])];
                opts.extend(choices(f, c));
                let mut next = Vec::new();
                for base in &acc {
                    for opt in &opts {
                        let mut s = base.clone();
                        s.extend(opt.iter().copied());
                        next.push(s);
                    }
                }
                acc = next;
            }
            acc
        }
        Ok(choices(self, root)
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|edges| Cut { edges })
            .collect())
    }

    /// Splits a tree along a cut into the prune (the forest falling away
    /// from the root) and the root component, hyperedges restricted to
    /// each side. The split blocks couple the two sides; the returned pair
    /// carries that coupling as raw references on the prune.
    pub fn prune_root(&self, cut: &Cut) -> Result<(LionsForest, LionsForest), ForestError> {
        if !self.is_tree() {
            return Err(ForestError::NotATree);
        }
        let mut root_side = BTreeSet::new();
        for &x in self.labels.keys() {
            let mut cur = x;
            let mut severed = false;
            while let Some(&p) = self.parent.get(&cur) {
                if cut.edges.contains(&(cur, p)) {
                    severed = true;
                    break;
                }
                cur = p;
            }
            if !severed {
                root_side.insert(x);
            }
        }
        let prune_side: BTreeSet<NodeId> = self.nodes().difference(&root_side).copied().collect();
        split_with_coupling(self, &prune_side, &root_side)
    }

    /// The counting function: how many coproduct terms equal the pair
    /// `(prune, root)` after forgetting the inherited coupling. Comparison
    /// is up to isomorphism.
    pub fn count(&self, prune: &LionsForest, root: &LionsForest) -> u64 {
        let pk = prune.canonical().0;
        let rk = root.canonical().0;
        chain::delta_forest(self)
            .iter()
            .filter(|c| {
                c.elems()[0].plain().canonical().0 == pk && c.elems()[1].canonical().0 == rk
            })
            .count() as u64
    }

    /// Canonical form and key; see the canon module.
    pub fn canonical(&self) -> (LionsForest, String) {
        let (f, _, key) = canon::canonical_with_map(self);
        (f, key)
    }

    /// Canonical key only.
    pub fn key(&self) -> String {
        self.canonical().1
    }
}

/// Splits a forest into two node sets, restricting every tag to both
/// sides and turning every split block into a raw coupling reference on
/// the left part. Both parts are revalidated.
pub(crate) fn split_with_coupling(
    f: &LionsForest,
    left_nodes: &BTreeSet<NodeId>,
    right_nodes: &BTreeSet<NodeId>,
) -> Result<(LionsForest, LionsForest), ForestError> {
    let sub = |keep: &BTreeSet<NodeId>| -> (BTreeMap<NodeId, NodeId>, BTreeMap<NodeId, u32>) {
        (
            f.parent
                .iter()
                .filter(|(c, p)| keep.contains(c) && keep.contains(p))
                .map(|(&c, &p)| (c, p))
                .collect(),
            f.labels
                .iter()
                .filter(|(x, _)| keep.contains(x))
                .map(|(&x, &l)| (x, l))
                .collect(),
        )
    };
    let (lparent, llabels) = sub(left_nodes);
    let (rparent, rlabels) = sub(right_nodes);
    let mut ltags: BTreeMap<TagId, BTreeSet<NodeId>> = BTreeMap::new();
    let mut rtags: BTreeMap<TagId, BTreeSet<NodeId>> = BTreeMap::new();
    for (t, set) in &f.tags {
        ltags.insert(t.clone(), set.intersection(left_nodes).copied().collect());
        rtags.insert(t.clone(), set.intersection(right_nodes).copied().collect());
    }
    let mut lblocks = BTreeSet::new();
    let mut rblocks = BTreeSet::new();
    for b in &f.blocks {
        let bl: BTreeSet<NodeId> = b.intersection(left_nodes).copied().collect();
        let br: BTreeSet<NodeId> = b.intersection(right_nodes).copied().collect();
        match (bl.is_empty(), br.is_empty()) {
            (false, true) => {
                lblocks.insert(bl);
            }
            (true, false) => {
                rblocks.insert(br);
            }
            (false, false) => {
                ltags.insert(TagId::Raw(br.clone()), bl);
                rblocks.insert(br);
            }
            (true, true) => {}
        }
    }
    let left = LionsForest::new(lparent, llabels, ltags, lblocks)?;
    let right = LionsForest::new(rparent, rlabels, rtags, rblocks)?;
    Ok((left, right))
}

/// An admissible cut: a set of (child, parent) edges meeting every root
/// path at most once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cut {
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl Cut {
    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }
}

/// The local-partition presentation of a Lions forest: a tagged partition
/// of the roots plus a partition of `{x} ∪ children(x)` at every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LionsPartitionForest {
    pub parent: BTreeMap<NodeId, NodeId>,
    pub labels: BTreeMap<NodeId, u32>,
    pub root_tags: TaggedPartition,
    pub local: BTreeMap<NodeId, Partition>,
}

impl LionsForest {
    /// The local-partition view: root-restricted tags and blocks plus the
    /// restriction of the hyperedge partition around every node.
    pub fn to_partition_forest(&self) -> LionsPartitionForest {
        let roots = self.roots();
        let root_tags = TaggedPartition::new(
            self.tags
                .iter()
                .map(|(t, set)| (t.clone(), set.intersection(&roots).copied().collect()))
                .collect(),
            restrict_blocks(&self.blocks, &roots),
        )
        .expect("restriction of a partition");
        let derived = self.decoration().derived();
        let local = self
            .labels
            .keys()
            .map(|&x| {
                let mut around: BTreeSet<NodeId> = self.children(x);
                around.insert(x);
                (x, derived.restrict(&around))
            })
            .collect();
        LionsPartitionForest {
            parent: self.parent.clone(),
            labels: self.labels.clone(),
            root_tags,
            local,
        }
    }

    /// Rebuilds a forest from its local-partition view by stitching the
    /// per-level partitions together.
    pub fn from_partition_forest(pf: &LionsPartitionForest) -> Result<LionsForest, ForestError> {
        let nodes: BTreeSet<NodeId> = pf.labels.keys().copied().collect();
        // Level sets by depth.
        let shape = LionsForest {
            parent: pf.parent.clone(),
            labels: pf.labels.clone(),
            tags: BTreeMap::new(),
            blocks: BTreeSet::new(),
        };
        let depths = shape.try_depths()?;
        let max_depth = depths.values().copied().max().unwrap_or(0);
        let mut stitched = pf.root_tags.derived();
        for d in 0..=max_depth {
            let level: Vec<NodeId> = nodes.iter().filter(|x| depths[x] == d).copied().collect();
            let mut level_blocks: Vec<Block> = Vec::new();
            for &x in &level {
                level_blocks.extend(pf.local[&x].blocks().iter().cloned());
            }
            if level_blocks.is_empty() {
                continue;
            }
            let level_partition = Partition::new(level_blocks)?;
            stitched = if stitched.is_empty() {
                level_partition
            } else {
                overline_union(&stitched, &level_partition)?
            };
        }
        // Tag hyperedges grow out of the root-restricted tag subsets.
        let mut tags: BTreeMap<TagId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut tag_blocks: BTreeSet<Block> = BTreeSet::new();
        for (t, set) in pf.root_tags.tags() {
            if set.is_empty() {
                tags.insert(t.clone(), BTreeSet::new());
            } else {
                let grown = stitched
                    .blocks()
                    .iter()
                    .find(|b| set.is_subset(b))
                    .expect("stitched partition refines the root tags")
                    .clone();
                tag_blocks.insert(grown.clone());
                tags.insert(t.clone(), grown);
            }
        }
        let blocks: BTreeSet<Block> = stitched
            .blocks()
            .iter()
            .filter(|b| !tag_blocks.contains(*b))
            .cloned()
            .collect();
        LionsForest::new(pf.parent.clone(), pf.labels.clone(), tags, blocks)
    }

    /// All Lions-admissible decorations of this forest's shape over the
    /// given tag ids, through the local-partition equivalence.
    pub fn enumerate_admissible(&self, tag_ids: &BTreeSet<TagId>) -> Vec<TaggedPartition> {
        let roots = self.roots();
        let root_choices = TaggedPartition::enumerate(&roots, tag_ids);
        let nodes: Vec<NodeId> = self.labels.keys().copied().collect();
        let local_choices: Vec<(NodeId, Vec<Partition>)> = nodes
            .iter()
            .map(|&x| {
                let mut around = self.children(x);
                around.insert(x);
                (x, Partition::enumerate(&around))
            })
            .collect();
        let mut out = Vec::new();
        for rt in &root_choices {
            let mut pick: Vec<usize> = vec![0; local_choices.len()];
            'odometer: loop {
                let local: BTreeMap<NodeId, Partition> = local_choices
                    .iter()
                    .zip(&pick)
                    .map(|((x, opts), &i)| (*x, opts[i].clone()))
                    .collect();
                let pf = LionsPartitionForest {
                    parent: self.parent.clone(),
                    labels: self.labels.clone(),
                    root_tags: rt.clone(),
                    local,
                };
                let f = LionsForest::from_partition_forest(&pf)
                    .expect("local data always stitches to a Lions forest");
                out.push(f.decoration());

                let mut k = 0;
                loop {
                    if k == pick.len() {
                        break 'odometer;
                    }
                    pick[k] += 1;
                    if pick[k] < local_choices[k].1.len() {
                        break;
                    }
                    pick[k] = 0;
                    k += 1;
                }
            }
        }
        dedup_sorted(out)
    }

    /// Projects an arbitrary tagged partition of a tree's nodes onto the
    /// unique maximal Lions-admissible tagged partition below it.
    pub fn project_admissible(&self, tp: &TaggedPartition) -> Result<TaggedPartition, ForestError> {
        if !self.is_tree() {
            return Err(ForestError::NotATree);
        }
        let derived = tp.derived();
        let depths = self.depths();
        let nodes = self.nodes();
        let max_depth = depths.values().copied().max().unwrap_or(0);
        let mut stitched: Option<Partition> = None;
        for d in 0..=max_depth {
            let level: Vec<NodeId> = nodes.iter().filter(|x| depths[x] == d).copied().collect();
            let mut level_blocks: Vec<Block> = Vec::new();
            for &x in &level {
                let mut around = self.children(x);
                around.insert(x);
                level_blocks.extend(derived.restrict(&around).blocks().iter().cloned());
            }
            let level_partition = Partition::new(level_blocks)?;
            stitched = Some(match stitched {
                None => level_partition,
                Some(acc) => overline_union(&acc, &level_partition)?,
            });
        }
        let stitched = stitched.unwrap_or_else(Partition::empty);
        let root = *self.roots().iter().next().expect("tree has a root");
        let mut tags: BTreeMap<TagId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut tag_blocks: BTreeSet<Block> = BTreeSet::new();
        for (t, set) in tp.tags() {
            if set.contains(&root) {
                let grown = stitched
                    .block_of(root)
                    .expect("stitched covers the nodes")
                    .clone();
                tag_blocks.insert(grown.clone());
                tags.insert(t.clone(), grown);
            } else {
                tags.insert(t.clone(), BTreeSet::new());
            }
        }
        let blocks: BTreeSet<Block> = stitched
            .blocks()
            .iter()
            .filter(|b| !tag_blocks.contains(*b))
            .cloned()
            .collect();
        Ok(TaggedPartition::new(tags, blocks)?)
    }

    /// The Lions couplings of two forests: couplings of the untagged
    /// hyperedge partitions in which every hyperedge of `self` that avoids
    /// its roots stays fixed.
    pub fn lions_couplings(&self, other: &LionsForest) -> Result<Vec<Coupling>, ForestError> {
        let hp = Partition::new(self.blocks.iter().cloned())?;
        let hq = Partition::new(other.blocks.iter().cloned())?;
        let roots = self.roots();
        let all = crate::partition::couplings(&hp, &hq)?;
        Ok(all
            .into_iter()
            .filter(|g| {
                let varphi = g.varphi();
                self.blocks
                    .iter()
                    .filter(|h| h.is_disjoint(&roots))
                    .all(|h| &varphi[h] == h)
            })
            .collect())
    }
}

fn dedup_sorted(mut v: Vec<TaggedPartition>) -> Vec<TaggedPartition> {
    v.sort();
    v.dedup();
    v
}

/// All labelled Lions forests with exactly `n` nodes over `d` labels and
/// the single base tag, one representative per isomorphism class, sorted
/// by canonical key.
pub fn enumerate_forests(n: usize, d: u32) -> Vec<LionsForest> {
    let tag_ids: BTreeSet<TagId> = BTreeSet::from([TagId::ZERO]);
    let mut seen: BTreeMap<String, LionsForest> = BTreeMap::new();
    // Parent maps with parent(i) < i enumerate every forest shape on
    // labelled vertices 0..n (with duplicates across isomorphism).
    let mut parent_choice = vec![0usize; n]; // 0 = root, k = parent is k-1
    loop {
        let parent: BTreeMap<NodeId, NodeId> = parent_choice
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as NodeId, (c - 1) as NodeId))
            .collect();
        let mut labels = vec![1u32; n];
        loop {
            let label_map: BTreeMap<NodeId, u32> = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (i as NodeId, l))
                .collect();
            let shape = LionsForest::new(
                parent.clone(),
                label_map,
                BTreeMap::from([(TagId::ZERO, BTreeSet::new())]),
                (0..n as NodeId).map(|x| BTreeSet::from([x])).collect(),
            )
            .expect("singleton decoration is always admissible");
            for tp in shape.enumerate_admissible(&tag_ids) {
                let f = shape
                    .with_decoration(&tp)
                    .expect("admissible by construction");
                let (canon, key) = f.canonical();
                seen.entry(key).or_insert(canon);
            }
            // next labelling
            let mut k = 0;
            loop {
                if k == n {
                    break;
                }
                labels[k] += 1;
                if labels[k] <= d {
                    break;
                }
                labels[k] = 1;
                k += 1;
            }
            if labels.iter().all(|&l| l == 1) {
                break;
            }
            if n == 0 {
                break;
            }
        }
        // next parent map
        let mut k = 0;
        loop {
            if k == n {
                return seen.into_values().collect();
            }
            parent_choice[k] += 1;
            if parent_choice[k] <= k {
                break;
            }
            parent_choice[k] = 0;
            k += 1;
        }
    }
}

/// All labelled Lions forests with at most `max_n` nodes.
pub fn enumerate_forests_up_to(max_n: usize, d: u32) -> Vec<LionsForest> {
    (0..=max_n).flat_map(|n| enumerate_forests(n, d)).collect()
}

/// Brute-force admissibility test of a tagged partition against this
/// forest's shape; the oracle for the constructive enumeration.
pub fn is_admissible(shape: &LionsForest, tp: &TaggedPartition) -> bool {
    shape.with_decoration(tp).is_ok()
}

#[cfg(test)]
mod tests;
