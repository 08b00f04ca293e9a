//! Finite strict posets and the tree of their chains.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nodeset::NodeSet;
use crate::order::PartialOrder;
use crate::tree::FiniteTree;

pub const DEFAULT_MAX_CHAINS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("pair ({0}, {1}) mentions an element outside the poset")]
    OutOfRange(usize, usize),
    #[error("{0} < {0} violates irreflexivity")]
    NotIrreflexive(usize),
    #[error("{0} < {1} and {1} < {0} violate antisymmetry")]
    NotAntisymmetric(usize, usize),
    #[error("{0} < {1} < {2} but not {0} < {2}")]
    NotTransitive(usize, usize, usize),
    #[error("poset has more than {0} chains")]
    TooManyChains(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    n: usize,
    below: Vec<NodeSet>,
}

impl FinitePoset {
    /// Validates the relation exactly as given: it must already be
    /// transitively closed.
    pub fn new(n: usize, less: &[(usize, usize)]) -> Result<Self, PosetError> {
        let mut below = vec![NodeSet::new(); n];
        for &(a, b) in less {
            if a >= n || b >= n {
                return Err(PosetError::OutOfRange(a, b));
            }
            if a == b {
                return Err(PosetError::NotIrreflexive(a));
            }
            below[b].insert(a);
        }
        for b in 0..n {
            for a in &below[b] {
                if below[a].contains(b) {
                    return Err(PosetError::NotAntisymmetric(a.min(b), a.max(b)));
                }
            }
        }
        for c in 0..n {
            for b in &below[c] {
                if let Some(a) = below[b].difference(&below[c]).min() {
                    return Err(PosetError::NotTransitive(a, b, c));
                }
            }
        }
        Ok(Self { n, below })
    }

    /// Transitive closure of `rel`, then validated.
    pub fn from_generating_relation(n: usize, rel: &[(usize, usize)]) -> Result<Self, PosetError> {
        let mut below = vec![NodeSet::new(); n];
        for &(a, b) in rel {
            if a >= n || b >= n {
                return Err(PosetError::OutOfRange(a, b));
            }
            below[b].insert(a);
        }
        loop {
            let mut changed = false;
            for b in 0..n {
                let mut grown = below[b].clone();
                for a in &below[b] {
                    grown.union_with(&below[a]);
                }
                if grown != below[b] {
                    below[b] = grown;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let pairs: Vec<_> = (0..n)
            .flat_map(|b| below[b].iter().map(move |a| (a, b)).collect::<Vec<_>>())
            .collect();
        Self::new(n, &pairs)
    }

    pub fn antichain(n: usize) -> Self {
        Self {
            n,
            below: vec![NodeSet::new(); n],
        }
    }

    pub fn chain(n: usize) -> Self {
        Self {
            n,
            below: (0..n).map(NodeSet::full).collect(),
        }
    }

    /// Sorted `(a, b)` pairs with `a < b`.
    pub fn less_pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = (0..self.n)
            .flat_map(|b| self.below[b].iter().map(move |a| (a, b)))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn below(&self, b: usize) -> &NodeSet {
        &self.below[b]
    }

    /// Random order: each pair `i < j` of indices is related with probability
    /// one half, then closed transitively.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rel = Vec::new();
        for j in 0..n {
            for i in 0..j {
                if rng.gen_bool(0.5) {
                    rel.push((i, j));
                }
            }
        }
        Self::from_generating_relation(n, &rel).expect("index-increasing relation is acyclic")
    }

    /// The same order with elements renamed by `perm` (old index -> new).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut below = vec![NodeSet::new(); self.n];
        for b in 0..self.n {
            below[perm[b]] = self.below[b].iter().map(|a| perm[a]).collect();
        }
        Self { n: self.n, below }
    }
}

impl PartialOrder for FinitePoset {
    fn len(&self) -> usize {
        self.n
    }

    fn less(&self, a: usize, b: usize) -> bool {
        self.below[b].contains(a)
    }
}

/// Every poset on `n` elements up to isomorphism, one representative each.
///
/// Brute force over relations between index pairs; meant for `n <= 5`.
pub fn enumerate_posets(n: usize) -> Vec<FinitePoset> {
    assert!(n <= 5, "poset enumeration is exhaustive and meant for n <= 5");
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let perms = permutations(n);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for bits in 0u64..(1 << pairs.len()) {
        let rel: Vec<_> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let Ok(p) = FinitePoset::new(n, &rel) else { continue };
        let canon = perms
            .iter()
            .map(|perm| p.relabel(perm).less_pairs())
            .min()
            .unwrap();
        if seen.insert(canon) {
            out.push(p);
        }
    }
    out
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                cur.push(x);
                rec(cur, used, out);
                cur.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// The tree of nonempty chains of a poset ordered by end-extension, with a
/// synthetic root (node 0) standing for the empty chain.
#[derive(Debug, Clone)]
pub struct SigmaPrime {
    pub tree: FiniteTree,
    /// Each tree node's chain, listed bottom up. Empty for the root.
    pub chains: Vec<Vec<usize>>,
}

impl SigmaPrime {
    /// Maximum of the chain at `node`; `None` on the root.
    pub fn max_map(&self, node: usize) -> Option<usize> {
        self.chains[node].last().copied()
    }

    pub fn non_root(&self) -> NodeSet {
        let mut s = self.tree.nodes();
        s.remove(self.tree.root());
        s
    }

    /// Image of a set of non-root tree nodes under the max map.
    pub fn push_forward(&self, nodes: &NodeSet) -> NodeSet {
        nodes.iter().filter_map(|x| self.max_map(x)).collect()
    }
}

pub fn sigma_prime(poset: &FinitePoset, max_chains: usize) -> Result<SigmaPrime, PosetError> {
    let n = poset.len();
    let mut chains: Vec<Vec<usize>> = vec![Vec::new()];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut level: Vec<usize> = Vec::new();
    for a in 0..n {
        level.push(chains.len());
        chains.push(vec![a]);
        parent.push(Some(0));
    }
    if chains.len() - 1 > max_chains {
        return Err(PosetError::TooManyChains(max_chains));
    }
    while !level.is_empty() {
        let mut next = Vec::new();
        for &idx in &level {
            let top = *chains[idx].last().unwrap();
            for x in 0..n {
                if poset.less(top, x) {
                    if chains.len() > max_chains {
                        return Err(PosetError::TooManyChains(max_chains));
                    }
                    let mut c = chains[idx].clone();
                    c.push(x);
                    next.push(chains.len());
                    chains.push(c);
                    parent.push(Some(idx));
                }
            }
        }
        level = next;
    }
    let tree = FiniteTree::from_parents(parent).expect("end-extension parents form a tree");
    Ok(SigmaPrime { tree, chains })
}
