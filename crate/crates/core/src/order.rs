//! The strict-order abstraction shared by trees, posets and their restrictions.

use crate::nodeset::NodeSet;
use crate::tree::FiniteTree;

/// A finite strict partial order on `0..len()`.
pub trait PartialOrder {
    fn len(&self) -> usize;

    /// `a < b` in the order.
    fn less(&self, a: usize, b: usize) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn comparable(&self, a: usize, b: usize) -> bool {
        a != b && (self.less(a, b) || self.less(b, a))
    }

    /// Nodes that are allowed to appear in chains. Everything by default.
    fn support(&self) -> NodeSet {
        NodeSet::full(self.len())
    }

    /// Present when the order is a whole rooted tree, which lets chain
    /// searches run per root-to-leaf path.
    fn as_tree(&self) -> Option<&FiniteTree> {
        None
    }

    /// All comparable pairs `(lo, hi)` with `lo < hi` in the order, sorted by
    /// `(hi, lo)` index.
    fn comparable_pairs(&self) -> Vec<(usize, usize)> {
        let support = self.support();
        let mut pairs = Vec::new();
        for b in &support {
            for a in &support {
                if a < b && self.comparable(a, b) {
                    if self.less(a, b) {
                        pairs.push((a, b));
                    } else {
                        pairs.push((b, a));
                    }
                }
            }
        }
        pairs
    }

    fn is_chain(&self, set: &NodeSet) -> bool {
        let v = set.to_vec();
        v.iter()
            .enumerate()
            .all(|(i, &a)| v[i + 1..].iter().all(|&b| self.comparable(a, b)))
    }

    fn is_antichain(&self, set: &NodeSet) -> bool {
        let v = set.to_vec();
        v.iter()
            .enumerate()
            .all(|(i, &a)| v[i + 1..].iter().all(|&b| !self.comparable(a, b)))
    }

    /// Members of a chain listed from the bottom up.
    fn sort_chain(&self, set: &NodeSet) -> Vec<usize> {
        let mut v = set.to_vec();
        v.sort_by(|&a, &b| {
            if self.less(a, b) {
                std::cmp::Ordering::Less
            } else if self.less(b, a) {
                std::cmp::Ordering::Greater
            } else {
                a.cmp(&b)
            }
        });
        v
    }
}

/// An order restricted to a subset of its nodes. Node indices are kept; nodes
/// outside the subset are incomparable to everything.
#[derive(Debug, Clone)]
pub struct SubOrder<'a, O: PartialOrder + ?Sized> {
    base: &'a O,
    nodes: NodeSet,
}

impl<'a, O: PartialOrder + ?Sized> SubOrder<'a, O> {
    pub fn new(base: &'a O, nodes: NodeSet) -> Self {
        Self { base, nodes }
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }
}

impl<O: PartialOrder + ?Sized> PartialOrder for SubOrder<'_, O> {
    fn len(&self) -> usize {
        self.base.len()
    }

    fn less(&self, a: usize, b: usize) -> bool {
        self.nodes.contains(a) && self.nodes.contains(b) && self.base.less(a, b)
    }

    fn support(&self) -> NodeSet {
        self.nodes.clone()
    }
}
