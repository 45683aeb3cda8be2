//! Canonical forms of Lions forests.
//!
//! The key is built on the local-partition view: a node's key combines its
//! label, the keys of the children sharing its hyperedge, and the grouped
//! keys of the remaining children; the forest level separates tag blocks
//! (by tag id) from untagged root groups. Equal keys characterise
//! isomorphism: a node bijection preserving edges, labels, per-tag blocks
//! and the block structure.

use super::{LionsForest, NodeId};
use std::collections::{BTreeMap, BTreeSet};

/// Canonical form, the renaming old id → new id, and the canonical key.
pub(crate) fn canonical_with_map(
    f: &LionsForest,
) -> (LionsForest, BTreeMap<NodeId, NodeId>, String) {
    let derived = f.decoration().derived();
    let block_index: BTreeMap<NodeId, usize> = derived
        .blocks()
        .iter()
        .enumerate()
        .flat_map(|(i, b)| b.iter().map(move |&x| (x, i)))
        .collect();
    let children: BTreeMap<NodeId, Vec<NodeId>> = f
        .nodes()
        .iter()
        .map(|&x| (x, f.children(x).into_iter().collect()))
        .collect();

    // Bottom-up node keys over an explicit stack.
    let mut keys: BTreeMap<NodeId, String> = BTreeMap::new();
    let mut order: Vec<NodeId> = Vec::new();
    let mut stack: Vec<NodeId> = f.roots().into_iter().collect();
    while let Some(x) = stack.pop() {
        order.push(x);
        stack.extend(children[&x].iter().copied());
    }
    for &x in order.iter().rev() {
        keys.insert(x, node_key(f, x, &children, &block_index, &keys));
    }

    // Forest-level grouping of the roots.
    let roots = f.roots();
    let mut tag_entries: Vec<(String, Vec<NodeId>)> = Vec::new();
    for (t, set) in f.tags() {
        let mut members: Vec<NodeId> = set.intersection(&roots).copied().collect();
        members.sort_by(|a, b| keys[a].cmp(&keys[b]));
        tag_entries.push((t.to_string(), members));
    }
    let tagged: BTreeSet<NodeId> = f.tags().values().flatten().copied().collect();
    let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for &r in &roots {
        if !tagged.contains(&r) {
            groups.entry(block_index[&r]).or_default().push(r);
        }
    }
    let mut block_groups: Vec<(String, Vec<NodeId>)> = groups
        .into_values()
        .map(|mut members| {
            members.sort_by(|a, b| keys[a].cmp(&keys[b]));
            let gk = members
                .iter()
                .map(|r| keys[r].clone())
                .collect::<Vec<_>>()
                .join(",");
            (gk, members)
        })
        .collect();
    block_groups.sort();

    let key = format!(
        "F[{}|{}]",
        tag_entries
            .iter()
            .map(|(t, ms)| format!(
                "{t}=[{}]",
                ms.iter()
                    .map(|r| keys[r].clone())
                    .collect::<Vec<_>>()
                    .join(",")
            ))
            .collect::<Vec<_>>()
            .join(";"),
        block_groups
            .iter()
            .map(|(gk, _)| format!("[{gk}]"))
            .collect::<Vec<_>>()
            .join(";")
    );

    // Canonical renaming: preorder over tag entries then block groups.
    let mut renaming: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut next: NodeId = 0;
    let assign = |root: NodeId, renaming: &mut BTreeMap<NodeId, NodeId>, next: &mut NodeId| {
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            renaming.insert(x, *next);
            *next += 1;
            let mut ordered = ordered_children(f, x, &children, &block_index, &keys);
            ordered.reverse();
            stack.extend(ordered);
        }
    };
    for (_, members) in &tag_entries {
        for &r in members {
            assign(r, &mut renaming, &mut next);
        }
    }
    for (_, members) in &block_groups {
        for &r in members {
            assign(r, &mut renaming, &mut next);
        }
    }

    let rn = |s: &BTreeSet<NodeId>| -> BTreeSet<NodeId> { s.iter().map(|x| renaming[x]).collect() };
    let canon = LionsForest {
        parent: f
            .parent_map()
            .iter()
            .map(|(c, p)| (renaming[c], renaming[p]))
            .collect(),
        labels: f.labels().iter().map(|(x, &l)| (renaming[x], l)).collect(),
        tags: f.tags().iter().map(|(t, s)| (t.clone(), rn(s))).collect(),
        blocks: f.blocks().iter().map(rn).collect(),
    };
    (canon, renaming, key)
}

/// Children of `x` split into its own hyperedge group first, then the
/// other local groups in key order, members of each group sorted by key.
fn ordered_children(
    _f: &LionsForest,
    x: NodeId,
    children: &BTreeMap<NodeId, Vec<NodeId>>,
    block_index: &BTreeMap<NodeId, usize>,
    keys: &BTreeMap<NodeId, String>,
) -> Vec<NodeId> {
    let own = block_index[&x];
    let mut own_children: Vec<NodeId> = Vec::new();
    let mut rest: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for &c in &children[&x] {
        if block_index[&c] == own {
            own_children.push(c);
        } else {
            rest.entry(block_index[&c]).or_default().push(c);
        }
    }
    own_children.sort_by(|a, b| keys[a].cmp(&keys[b]));
    let mut rest_groups: Vec<(String, Vec<NodeId>)> = rest
        .into_values()
        .map(|mut members| {
            members.sort_by(|a, b| keys[a].cmp(&keys[b]));
            let gk = members
                .iter()
                .map(|c| keys[c].clone())
                .collect::<Vec<_>>()
                .join(",");
            (gk, members)
        })
        .collect();
    rest_groups.sort();
    let mut out = own_children;
    for (_, members) in rest_groups {
        out.extend(members);
    }
    out
}

fn node_key(
    f: &LionsForest,
    x: NodeId,
    children: &BTreeMap<NodeId, Vec<NodeId>>,
    block_index: &BTreeMap<NodeId, usize>,
    keys: &BTreeMap<NodeId, String>,
) -> String {
    let own = block_index[&x];
    let mut own_keys: Vec<String> = Vec::new();
    let mut rest: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for &c in &children[&x] {
        if block_index[&c] == own {
            own_keys.push(keys[&c].clone());
        } else {
            rest.entry(block_index[&c])
                .or_default()
                .push(keys[&c].clone());
        }
    }
    own_keys.sort();
    let mut rest_groups: Vec<String> = rest
        .into_values()
        .map(|mut g| {
            g.sort();
            format!("[{}]", g.join(","))
        })
        .collect();
    rest_groups.sort();
    format!(
        "({};{};{})",
        f.labels()[&x],
        own_keys.join(","),
        rest_groups.join(",")
    )
}

/// All automorphisms of a forest: node bijections onto itself preserving
/// edges, labels, per-tag blocks and the block structure. Chains use them
/// to break ties between blocks that plain canonicalisation cannot order.
pub(crate) fn automorphism_maps(f: &LionsForest) -> Vec<BTreeMap<NodeId, NodeId>> {
    let nodes: Vec<NodeId> = f.nodes().into_iter().collect();
    let depths = if nodes.is_empty() {
        BTreeMap::new()
    } else {
        f.depths()
    };
    // Class pruning: a node can only map to a node of equal depth/label.
    let class =
        |x: NodeId| -> (u32, u32) { (depths.get(&x).copied().unwrap_or(0), f.labels()[&x]) };
    let mut out = Vec::new();
    let mut assignment: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut used: BTreeSet<NodeId> = BTreeSet::new();
    fn consistent(f: &LionsForest, map: &BTreeMap<NodeId, NodeId>, x: NodeId) -> bool {
        match f.parent_map().get(&x) {
            Some(p) => match map.get(p) {
                Some(q) => f.parent_map().get(&map[&x]) == Some(q),
                None => true,
            },
            None => !f.parent_map().contains_key(&map[&x]),
        }
    }
    fn full_check(f: &LionsForest, map: &BTreeMap<NodeId, NodeId>) -> bool {
        let tr = |s: &BTreeSet<NodeId>| -> BTreeSet<NodeId> { s.iter().map(|x| map[x]).collect() };
        for set in f.tags().values() {
            if &tr(set) != set {
                return false;
            }
        }
        let mapped: BTreeSet<BTreeSet<NodeId>> = f.blocks().iter().map(tr).collect();
        mapped == *f.blocks()
    }
    fn go(
        f: &LionsForest,
        nodes: &[NodeId],
        class: &dyn Fn(NodeId) -> (u32, u32),
        i: usize,
        assignment: &mut BTreeMap<NodeId, NodeId>,
        used: &mut BTreeSet<NodeId>,
        out: &mut Vec<BTreeMap<NodeId, NodeId>>,
    ) {
        if i == nodes.len() {
            if full_check(f, assignment) {
                out.push(assignment.clone());
            }
            return;
        }
        let x = nodes[i];
        for &y in nodes {
            if used.contains(&y) || class(x) != class(y) {
                continue;
            }
            assignment.insert(x, y);
            if consistent(f, assignment, x) {
                used.insert(y);
                go(f, nodes, class, i + 1, assignment, used, out);
                used.remove(&y);
            }
            assignment.remove(&x);
        }
    }
    go(f, &nodes, &class, 0, &mut assignment, &mut used, &mut out);
    out
}

/// Exhaustive isomorphism test: searches all node bijections preserving
/// edges, labels, per-tag blocks and the block structure. Test oracle for
/// the canonical key; only usable on small forests.
pub fn brute_force_isomorphic(a: &LionsForest, b: &LionsForest) -> bool {
    let an: Vec<NodeId> = a.nodes().into_iter().collect();
    let bn: Vec<NodeId> = b.nodes().into_iter().collect();
    if an.len() != bn.len() {
        return false;
    }
    if a.base_tags() != b.base_tags() {
        return false;
    }
    let mut perm: Vec<usize> = Vec::new();
    let mut used = vec![false; bn.len()];
    fn check(
        a: &LionsForest,
        b: &LionsForest,
        an: &[NodeId],
        _bn: &[NodeId],
        map: &BTreeMap<NodeId, NodeId>,
    ) -> bool {
        for &x in an {
            if a.labels()[&x] != b.labels()[&map[&x]] {
                return false;
            }
            match a.parent_map().get(&x) {
                Some(p) => {
                    if b.parent_map().get(&map[&x]) != Some(&map[p]) {
                        return false;
                    }
                }
                None => {
                    if b.parent_map().contains_key(&map[&x]) {
                        return false;
                    }
                }
            }
        }
        let tr = |s: &BTreeSet<NodeId>| -> BTreeSet<NodeId> { s.iter().map(|x| map[x]).collect() };
        for (t, set) in a.tags() {
            if b.tags().get(t).cloned().unwrap_or_default() != tr(set) {
                return false;
            }
        }
        let mapped: BTreeSet<BTreeSet<NodeId>> = a.blocks().iter().map(tr).collect();
        mapped == *b.blocks()
    }
    fn go(
        a: &LionsForest,
        b: &LionsForest,
        an: &[NodeId],
        bn: &[NodeId],
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if perm.len() == an.len() {
            let map: BTreeMap<NodeId, NodeId> = an
                .iter()
                .zip(perm.iter())
                .map(|(&x, &j)| (x, bn[j]))
                .collect();
            return check(a, b, an, bn, &map);
        }
        for j in 0..bn.len() {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                if go(a, b, an, bn, perm, used) {
                    return true;
                }
                perm.pop();
                used[j] = false;
            }
        }
        false
    }
    go(a, b, &an, &bn, &mut perm, &mut used)
}
