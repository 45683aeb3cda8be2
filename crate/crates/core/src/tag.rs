//! Tag identifiers for tagged partitions, sequences, words and forests.

use std::collections::BTreeSet;
use std::fmt;

/// Identifier of a tag slot in a tagged structure.
///
/// Tags come in three flavours:
///
/// * `Base(k)` — a named base tag such as `#0`; `Base(0)` is the canonical
///   single tag when the index set has one element.
/// * `Ref { dist, block }` — a reference to an untagged block of another
///   element of a coupled chain, `dist` positions to the right, identified
///   by that element's canonically numbered block.
/// * `Raw(set)` — an unresolved reference by concrete element ids, only
///   used while a chain is being assembled; normalisation replaces every
///   `Raw` with a `Ref`.
///
/// The ordering is total and deterministic, which makes enumeration orders
/// and canonical forms reproducible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TagId {
    /// Named base tag (`#k`).
    Base(u32),
    /// Resolved chain reference: block `block` of the element `dist`
    /// positions to the right, in that element's canonical coordinates.
    Ref {
        /// Distance to the referenced chain element (≥ 1).
        dist: u32,
        /// The referenced block in canonical coordinates.
        block: BTreeSet<u64>,
    },
    /// Unresolved reference by concrete ids; never part of a canonical value.
    Raw(BTreeSet<u64>),
}

impl TagId {
    /// The canonical single tag `#0`.
    pub const ZERO: TagId = TagId::Base(0);

    /// True for the `Base` variant.
    pub fn is_base(&self) -> bool {
        matches!(self, TagId::Base(_))
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, set: &BTreeSet<u64>) -> fmt::Result {
    write!(f, "{{")?;
    for (i, x) in set.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "}}")
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagId::Base(k) => write!(f, "#{k}"),
            TagId::Ref { dist, block } => {
                write!(f, "#>{dist}")?;
                write_set(f, block)
            }
            TagId::Raw(block) => {
                write!(f, "#?")?;
                write_set(f, block)
            }
        }
    }
}

/// The tag set `{#0, ..., #(k-1)}` of `k` base tags.
pub fn base_tags(k: u32) -> BTreeSet<TagId> {
    (0..k).map(TagId::Base).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_base_first() {
        let base = TagId::Base(7);
        let r = TagId::Ref {
            dist: 1,
            block: [1].into_iter().collect(),
        };
        let raw = TagId::Raw([1].into_iter().collect());
        assert!(base < r);
        assert!(r < raw);
    }

    #[test]
    fn display_forms() {
        assert_eq!(TagId::Base(0).to_string(), "#0");
        let r = TagId::Ref {
            dist: 2,
            block: [3, 1].into_iter().collect(),
        };
        assert_eq!(r.to_string(), "#>2{1,3}");
    }
}
