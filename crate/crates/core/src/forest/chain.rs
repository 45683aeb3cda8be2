//! Coupled chains of Lions forests and the coupled coproduct.
//!
//! A chain `(T_1, ..., T_n)` stores each element canonically; element `k`
//! is tagged by the untagged hyperedges of the elements to its right,
//! referenced by distance and canonical block. Chains are assembled in a
//! raw phase where all elements share one id space and references are
//! concrete node sets; normalisation canonicalises right-to-left and
//! rewrites the references.

use super::canon::canonical_with_map;
use super::{split_with_coupling, ForestError, LionsForest, NodeId};
use crate::tag::TagId;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A coupled chain of Lions forests in canonical normal form; a coupled
/// pair is a chain of length two.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ForestChain {
    elems: Vec<LionsForest>,
}

impl ForestChain {
    /// Validates the reference structure of already-canonical elements.
    pub fn new(elems: Vec<LionsForest>) -> Result<Self, ForestError> {
        for (k, f) in elems.iter().enumerate() {
            for t in f.tags().keys() {
                match t {
                    TagId::Ref { dist, block } => {
                        let target = k + *dist as usize;
                        let ok = target < elems.len() && elems[target].blocks().contains(block);
                        if !ok {
                            return Err(ForestError::DanglingTagReference);
                        }
                    }
                    TagId::Raw(_) => return Err(ForestError::DanglingTagReference),
                    TagId::Base(_) => {}
                }
            }
        }
        Ok(ForestChain { elems })
    }

    /// Normalises a chain of one element.
    pub fn single(f: &LionsForest) -> Result<Self, ForestError> {
        ForestChain::from_raw(vec![f.clone()])
    }

    pub fn elems(&self) -> &[LionsForest] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Normalisation of a raw chain: elements over pairwise disjoint node
    /// sets, coupling references as raw node sets. Canonicalises right to
    /// left, resolving every raw reference to a distance and a canonical
    /// block of its target. Elements referenced from the left and carrying
    /// symmetries branch over their automorphisms (up to block action) and
    /// the lexicographically least chain is the normal form.
    pub(crate) fn from_raw(elems: Vec<LionsForest>) -> Result<Self, ForestError> {
        let n = elems.len();
        let node_sets: Vec<BTreeSet<NodeId>> = elems.iter().map(|f| f.nodes()).collect();
        for i in 0..n {
            for j in i + 1..n {
                if !node_sets[i].is_disjoint(&node_sets[j]) {
                    return Err(ForestError::UnknownNode);
                }
            }
        }
        // Validate references and record which elements are referenced.
        let mut referenced = vec![false; n];
        for (k, f) in elems.iter().enumerate() {
            for t in f.tags().keys() {
                match t {
                    TagId::Raw(s) => {
                        let j = (k + 1..n)
                            .find(|&j| s.is_subset(&node_sets[j]))
                            .ok_or(ForestError::DanglingTagReference)?;
                        if !elems[j].blocks().contains(s) {
                            return Err(ForestError::DanglingTagReference);
                        }
                        referenced[j] = true;
                    }
                    TagId::Ref { .. } => return Err(ForestError::DanglingTagReference),
                    TagId::Base(_) => {}
                }
            }
        }
        // Candidate suffixes, built right to left: canonical elements plus
        // the concrete-to-canonical map of every processed element.
        type Maps = Vec<BTreeMap<NodeId, NodeId>>;
        let mut candidates: Vec<(Vec<LionsForest>, Maps)> = vec![(Vec::new(), Vec::new())];
        for k in (0..n).rev() {
            let mut next: Vec<(Vec<LionsForest>, Maps)> = Vec::new();
            for (suffix, maps) in &candidates {
                let mut tags: BTreeMap<TagId, BTreeSet<NodeId>> = BTreeMap::new();
                for (t, set) in elems[k].tags() {
                    let nt = match t {
                        TagId::Raw(s) => {
                            let j = (k + 1..n)
                                .find(|&j| s.is_subset(&node_sets[j]))
                                .expect("validated above");
                            let map = &maps[j - k - 1];
                            TagId::Ref {
                                dist: (j - k) as u32,
                                block: s.iter().map(|x| map[x]).collect(),
                            }
                        }
                        base => base.clone(),
                    };
                    tags.insert(nt, set.clone());
                }
                let rewritten = LionsForest {
                    parent: elems[k].parent.clone(),
                    labels: elems[k].labels.clone(),
                    tags,
                    blocks: elems[k].blocks.clone(),
                };
                let (c, m0, _) = canonical_with_map(&rewritten);
                if referenced[k] {
                    // Distinct block actions give genuinely different
                    // reference rewritings for elements further left.
                    let mut seen_actions: BTreeSet<Vec<BTreeSet<NodeId>>> = BTreeSet::new();
                    for sigma in super::canon::automorphism_maps(&c) {
                        let action: Vec<BTreeSet<NodeId>> = c
                            .blocks()
                            .iter()
                            .map(|b| b.iter().map(|x| sigma[x]).collect())
                            .collect();
                        if !seen_actions.insert(action) {
                            continue;
                        }
                        let full: BTreeMap<NodeId, NodeId> =
                            m0.iter().map(|(&x, y)| (x, sigma[y])).collect();
                        let mut s = Vec::with_capacity(suffix.len() + 1);
                        s.push(c.clone());
                        s.extend(suffix.iter().cloned());
                        let mut m = Vec::with_capacity(maps.len() + 1);
                        m.push(full);
                        m.extend(maps.iter().cloned());
                        next.push((s, m));
                    }
                } else {
                    let mut s = Vec::with_capacity(suffix.len() + 1);
                    s.push(c);
                    s.extend(suffix.iter().cloned());
                    let mut m = Vec::with_capacity(maps.len() + 1);
                    m.push(m0);
                    m.extend(maps.iter().cloned());
                    next.push((s, m));
                }
            }
            candidates = next;
        }
        let best = candidates
            .into_iter()
            .map(|(chain, _)| chain)
            .min()
            .expect("at least one candidate");
        Ok(ForestChain { elems: best })
    }

    /// The raw view: node ids shifted into disjoint ranges, references
    /// replaced by concrete node sets.
    pub(crate) fn to_raw(&self) -> Vec<LionsForest> {
        let mut offsets = Vec::with_capacity(self.elems.len());
        let mut acc: NodeId = 0;
        for f in &self.elems {
            offsets.push(acc);
            acc += f.node_count() as NodeId + 1;
        }
        self.elems
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let off = offsets[k];
                let sh = |s: &BTreeSet<NodeId>| -> BTreeSet<NodeId> {
                    s.iter().map(|&x| x + off).collect()
                };
                let tags = f
                    .tags()
                    .iter()
                    .map(|(t, set)| {
                        let nt = match t {
                            TagId::Ref { dist, block } => TagId::Raw(
                                block
                                    .iter()
                                    .map(|&x| x + offsets[k + *dist as usize])
                                    .collect(),
                            ),
                            other => other.clone(),
                        };
                        (nt, sh(set))
                    })
                    .collect();
                LionsForest {
                    parent: f.parent.iter().map(|(&c, &p)| (c + off, p + off)).collect(),
                    labels: f.labels.iter().map(|(&x, &l)| (x + off, l)).collect(),
                    tags,
                    blocks: f.blocks.iter().map(sh).collect(),
                }
            })
            .collect()
    }

    /// The coproduct applied to element `k`: every per-component choice
    /// (whole tree left, whole tree right, or a cut) splits the element in
    /// two, references elsewhere are re-resolved with the right part
    /// preferred. Multiplicities appear as repeats.
    pub fn split_elem(&self, k: usize) -> Vec<ForestChain> {
        let raw = self.to_raw();
        let target = &raw[k];
        let target_nodes = target.nodes();
        let mut out = Vec::new();
        for (prune_nodes, root_nodes) in dee_splits(target) {
            let (left, right) = split_with_coupling(target, &prune_nodes, &root_nodes)
                .expect("cut components of a Lions forest are Lions forests");
            let mut elems: Vec<LionsForest> = Vec::with_capacity(raw.len() + 1);
            for (q, e) in raw.iter().enumerate() {
                if q == k {
                    elems.push(left.clone());
                    elems.push(right.clone());
                    continue;
                }
                if q > k {
                    elems.push(e.clone());
                    continue;
                }
                // Re-resolve raw references into the split element.
                let tags = e
                    .tags
                    .iter()
                    .map(|(t, set)| {
                        let nt = match t {
                            TagId::Raw(s) if s.is_subset(&target_nodes) => {
                                let sr: BTreeSet<NodeId> =
                                    s.intersection(&root_nodes).copied().collect();
                                if !sr.is_empty() {
                                    TagId::Raw(sr)
                                } else {
                                    TagId::Raw(s.intersection(&prune_nodes).copied().collect())
                                }
                            }
                            other => other.clone(),
                        };
                        (nt, set.clone())
                    })
                    .collect();
                elems.push(LionsForest {
                    parent: e.parent.clone(),
                    labels: e.labels.clone(),
                    tags,
                    blocks: e.blocks.clone(),
                });
            }
            out.push(
                ForestChain::from_raw(elems).expect("split preserves the reference structure"),
            );
        }
        out
    }

    /// Removes an element that must be the empty forest.
    pub fn contract_empty(&self, k: usize) -> ForestChain {
        assert!(self.elems[k].is_one());
        let mut raw = self.to_raw();
        raw.remove(k);
        ForestChain::from_raw(raw).expect("removing an empty element keeps references valid")
    }

    /// Componentwise product of two chains of equal length: the pairwise
    /// `⊛` with all couplings carried along.
    pub fn product(&self, other: &ForestChain) -> ForestChain {
        assert_eq!(self.len(), other.len());
        let raw_a = self.to_raw();
        let mut raw_b = other.to_raw();
        let max_a: NodeId = raw_a
            .iter()
            .flat_map(|f| f.nodes())
            .max()
            .map_or(0, |m| m + 1);
        raw_b = raw_b.iter().map(|f| f.shift_ids(max_a)).collect();
        let merged: Vec<LionsForest> = raw_a
            .iter()
            .zip(&raw_b)
            .map(|(a, b)| merge_disjoint(a, b))
            .collect();
        ForestChain::from_raw(merged).expect("disjoint merge keeps references valid")
    }

    /// Applies the rooting operator to the rightmost element of a pair.
    pub fn root_right(&self, label: u32) -> Result<ForestChain, ForestError> {
        let mut raw = self.to_raw();
        let last = raw.len() - 1;
        let fresh = raw
            .iter()
            .flat_map(|f| f.nodes())
            .max()
            .map_or(0, |m| m + 1);
        raw[last] = raw[last].rooted_fresh(label, fresh)?;
        ForestChain::from_raw(raw)
    }

    /// Applies the decoupling to a coupled pair: the two base tag parts
    /// merge into one ordinary hyperedge coupled across the pair.
    pub fn decouple_pair(&self) -> ForestChain {
        assert_eq!(self.len(), 2);
        let raw = self.to_raw();
        let (mut l, mut r) = (raw[0].clone(), raw[1].clone());
        let lh = l.tags.get(&TagId::ZERO).cloned().unwrap_or_default();
        let rh = r.tags.get(&TagId::ZERO).cloned().unwrap_or_default();
        if !rh.is_empty() {
            r.tags.insert(TagId::ZERO, BTreeSet::new());
            r.blocks.insert(rh.clone());
            if !lh.is_empty() {
                l.tags.insert(TagId::ZERO, BTreeSet::new());
                l.tags.insert(TagId::Raw(rh), lh);
            }
        } else if !lh.is_empty() {
            l.tags.insert(TagId::ZERO, BTreeSet::new());
            l.blocks.insert(lh);
        }
        ForestChain::from_raw(vec![l, r]).expect("decoupling keeps references valid")
    }
}

impl fmt::Display for ForestChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.elems.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{}", super::io::forest_to_text(e))?;
        }
        Ok(())
    }
}

/// Union of two forests over disjoint concrete node sets, tags merged per
/// id, without renaming.
pub(crate) fn merge_disjoint(a: &LionsForest, b: &LionsForest) -> LionsForest {
    let mut parent = a.parent.clone();
    parent.extend(b.parent.iter().map(|(&c, &p)| (c, p)));
    let mut labels = a.labels.clone();
    labels.extend(b.labels.iter().map(|(&x, &l)| (x, l)));
    let mut tags = a.tags.clone();
    for (t, set) in &b.tags {
        tags.entry(t.clone())
            .or_default()
            .extend(set.iter().copied());
    }
    let mut blocks = a.blocks.clone();
    blocks.extend(b.blocks.iter().cloned());
    let mut f = LionsForest {
        parent,
        labels,
        tags,
        blocks,
    };
    f.drop_empty_refs();
    f
}

/// All coproduct splits of one forest into (prune nodes, root nodes):
/// the product over component trees of "whole tree to the prune", "whole
/// tree to the root", and one choice per admissible cut.
fn dee_splits(f: &LionsForest) -> Vec<(BTreeSet<NodeId>, BTreeSet<NodeId>)> {
    let mut acc: Vec<(BTreeSet<NodeId>, BTreeSet<NodeId>)> =
        vec![(BTreeSet::new(), BTreeSet::new())];
    for comp in f.components() {
        let shape = shape_only(f, &comp);
        let mut options: Vec<(BTreeSet<NodeId>, BTreeSet<NodeId>)> = vec![
            (comp.clone(), BTreeSet::new()),
            (BTreeSet::new(), comp.clone()),
        ];
        for cut in shape.cuts().expect("components are trees") {
            let mut root_side = BTreeSet::new();
            for &x in &comp {
                let mut cur = x;
                let mut severed = false;
                while let Some(&p) = f.parent.get(&cur) {
                    if cut.edges().contains(&(cur, p)) {
                        severed = true;
                        break;
                    }
                    cur = p;
                }
                if !severed {
                    root_side.insert(x);
                }
            }
            let prune_side: BTreeSet<NodeId> = comp.difference(&root_side).copied().collect();
            options.push((prune_side, root_side));
        }
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for (lp, lr) in &acc {
            for (op, or) in &options {
                let mut p = lp.clone();
                p.extend(op.iter().copied());
                let mut r = lr.clone();
                r.extend(or.iter().copied());
                next.push((p, r));
            }
        }
        acc = next;
    }
    acc
}

/// The bare tree shape on a node subset, decorated with singletons.
fn shape_only(f: &LionsForest, keep: &BTreeSet<NodeId>) -> LionsForest {
    LionsForest {
        parent: f
            .parent
            .iter()
            .filter(|(c, p)| keep.contains(c) && keep.contains(p))
            .map(|(&c, &p)| (c, p))
            .collect(),
        labels: f
            .labels
            .iter()
            .filter(|(x, _)| keep.contains(x))
            .map(|(&x, &l)| (x, l))
            .collect(),
        tags: BTreeMap::from([(TagId::ZERO, BTreeSet::new())]),
        blocks: keep.iter().map(|&x| BTreeSet::from([x])).collect(),
    }
}

/// The coupled coproduct of a basis forest as a list of coupled pairs,
/// multiplicities as repeats.
pub fn delta_forest(f: &LionsForest) -> Vec<ForestChain> {
    ForestChain::single(f)
        .expect("a plain forest is a valid chain")
        .split_elem(0)
}
