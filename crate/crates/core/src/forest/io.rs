//! Structured file formats for Lions forests: a JSON document with nodes,
//! edges, labels, tags and blocks, and a DOT rendering that clusters the
//! hyperedges by colour and distinguishes tag blocks by a double border.

use super::{ForestError, LionsForest, NodeId};
use crate::tag::TagId;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Serialize, Deserialize)]
struct ForestDoc {
    format: u32,
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    labels: BTreeMap<String, u32>,
    tags: BTreeMap<String, Vec<NodeId>>,
    blocks: Vec<Vec<NodeId>>,
}

fn tag_to_string(t: &TagId) -> String {
    t.to_string()
}

fn tag_from_string(s: &str) -> Result<TagId, ForestError> {
    if let Some(rest) = s.strip_prefix("#>") {
        let brace = rest
            .find('{')
            .ok_or_else(|| ForestError::Parse(format!("bad tag `{s}`")))?;
        let dist: u32 = rest[..brace]
            .parse()
            .map_err(|_| ForestError::Parse(format!("bad tag `{s}`")))?;
        let inner = rest[brace..]
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| ForestError::Parse(format!("bad tag `{s}`")))?;
        let mut block = BTreeSet::new();
        for tok in inner.split(',').filter(|t| !t.trim().is_empty()) {
            block.insert(
                tok.trim()
                    .parse::<NodeId>()
                    .map_err(|_| ForestError::Parse(format!("bad tag `{s}`")))?,
            );
        }
        return Ok(TagId::Ref { dist, block });
    }
    if let Some(rest) = s.strip_prefix('#') {
        let k: u32 = rest
            .parse()
            .map_err(|_| ForestError::Parse(format!("bad tag `{s}`")))?;
        return Ok(TagId::Base(k));
    }
    Err(ForestError::Parse(format!("bad tag `{s}`")))
}

/// Serialises a forest as a JSON document. Writing the result of
/// [`forest_from_json`] reproduces the bytes exactly.
pub fn forest_to_json(f: &LionsForest) -> String {
    let doc = ForestDoc {
        format: 1,
        nodes: f.nodes().into_iter().collect(),
        edges: f.parent_map().iter().map(|(&c, &p)| (c, p)).collect(),
        labels: f
            .labels()
            .iter()
            .map(|(x, &l)| (x.to_string(), l))
            .collect(),
        tags: f
            .tags()
            .iter()
            .map(|(t, set)| (tag_to_string(t), set.iter().copied().collect()))
            .collect(),
        blocks: f
            .blocks()
            .iter()
            .map(|b| b.iter().copied().collect())
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("document serialises") + "\n"
}

/// Parses the JSON document form.
pub fn forest_from_json(text: &str) -> Result<LionsForest, ForestError> {
    let doc: ForestDoc =
        serde_json::from_str(text).map_err(|e| ForestError::Parse(e.to_string()))?;
    if doc.format != 1 {
        return Err(ForestError::Parse(format!(
            "unsupported format {}",
            doc.format
        )));
    }
    let mut labels = BTreeMap::new();
    for (k, v) in &doc.labels {
        let id: NodeId = k
            .parse()
            .map_err(|_| ForestError::Parse(format!("bad node id `{k}`")))?;
        labels.insert(id, *v);
    }
    let declared: BTreeSet<NodeId> = doc.nodes.iter().copied().collect();
    if declared != labels.keys().copied().collect() {
        return Err(ForestError::Parse("nodes and labels disagree".to_string()));
    }
    let parent: BTreeMap<NodeId, NodeId> = doc.edges.iter().copied().collect();
    if parent.len() != doc.edges.len() {
        return Err(ForestError::Parse("repeated child in edges".to_string()));
    }
    let mut tags = BTreeMap::new();
    for (k, v) in &doc.tags {
        tags.insert(tag_from_string(k)?, v.iter().copied().collect());
    }
    let blocks = doc
        .blocks
        .iter()
        .map(|b| b.iter().copied().collect())
        .collect();
    LionsForest::new(parent, labels, tags, blocks)
}

const PALETTE: [&str; 10] = [
    "#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6", "#ffff99", "#1f78b4", "#33a02c",
    "#e31a1c", "#ff7f00",
];

/// DOT rendering: one graph node per forest node labelled `id:label`,
/// solid directed edges, nodes coloured by hyperedge, tag blocks drawn
/// with a double border.
pub fn forest_to_dot(f: &LionsForest) -> String {
    let mut out = String::from("digraph lions_forest {\n");
    out.push_str("  rankdir=BT;\n  node [shape=circle, style=filled];\n");
    let mut colour: BTreeMap<NodeId, (&str, bool)> = BTreeMap::new();
    let mut idx = 0usize;
    for (t, set) in f.tags() {
        if set.is_empty() {
            continue;
        }
        let c = PALETTE[idx % PALETTE.len()];
        idx += 1;
        for &x in set {
            colour.insert(x, (c, true));
        }
        let _ = t;
    }
    for b in f.blocks() {
        let c = PALETTE[idx % PALETTE.len()];
        idx += 1;
        for &x in b {
            colour.insert(x, (c, false));
        }
    }
    for (x, l) in f.labels() {
        let (c, tagged) = colour.get(x).copied().unwrap_or(("#ffffff", false));
        let peripheries = if tagged { 2 } else { 1 };
        out.push_str(&format!(
            "  n{x} [label=\"{x}:{l}\", fillcolor=\"{c}\", peripheries={peripheries}];\n"
        ));
    }
    for (c, p) in f.parent_map() {
        out.push_str(&format!("  n{c} -> n{p};\n"));
    }
    out.push_str("}\n");
    out
}

/// A compact single-line text form used in displays and sums.
pub fn forest_to_text(f: &LionsForest) -> String {
    if f.is_one() {
        return "1".to_string();
    }
    let edges: Vec<String> = f
        .parent_map()
        .iter()
        .map(|(c, p)| format!("{c}->{p}"))
        .collect();
    let labels: Vec<String> = f.labels().iter().map(|(x, l)| format!("{x}:{l}")).collect();
    let tags: Vec<String> = f
        .tags()
        .iter()
        .map(|(t, set)| {
            format!(
                "{t}={{{}}}",
                set.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect();
    let blocks: Vec<String> = f
        .blocks()
        .iter()
        .map(|b| {
            format!(
                "{{{}}}",
                b.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect();
    format!(
        "T[{};{};{};{}]",
        labels.join(","),
        edges.join(","),
        tags.join(","),
        blocks.join(",")
    )
}
