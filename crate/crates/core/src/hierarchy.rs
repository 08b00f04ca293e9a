//! The joint recursion of ideals `I(t, sigma)` and `J(t, sigma)` over
//! explicit base ideals, the levels `S_n`, and the sequence sets
//! `Sigma(t, S)`.
//!
//! Base ideals default to principal families. A finite family closed under
//! pairwise unions is principal, and that closure is what makes `J(t, sigma)`
//! equal to the intersection of the `I(t, sigma + <i>)`. Arbitrary
//! downward-closed bases are accepted, but for them only the inclusion of
//! `J` in that intersection holds.

use std::cell::RefCell;
use std::collections::HashMap;

use smallvec::SmallVec;
use thiserror::Error;

use crate::coloring::{c_chi, PairColoring};
use crate::ideal::Family;
use crate::nodeset::NodeSet;
use crate::tree::FiniteTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("node {t} is not in level S_{level}")]
    NodeNotInLevel { t: usize, level: usize },
    #[error("color {color} out of range for {k} colors")]
    InvalidColor { color: usize, k: usize },
    #[error("node {0} is not in the tree")]
    InvalidNode(usize),
    #[error("set is not contained in the predecessors of {0}")]
    NotBelow(usize),
    #[error("need one base ideal per node: expected {expected}, got {got}")]
    BaseCount { expected: usize, got: usize },
    #[error("base ideal at {0} mentions nodes outside its predecessors")]
    BaseOutsidePred(usize),
    #[error("coloring covers {coloring} nodes but the tree has {tree}")]
    SizeMismatch { coloring: usize, tree: usize },
    #[error("I(t, sigma) needs a nonempty sequence")]
    EmptySequence,
}

/// Inputs of the recursion: a tree, a coloring of its comparable pairs, one
/// base ideal of subsets of `pred(t)` per node, and the starting level.
#[derive(Debug, Clone)]
pub struct HierarchyConfig {
    pub tree: FiniteTree,
    pub coloring: PairColoring,
    pub base: Vec<Family>,
    pub s0: NodeSet,
}

impl HierarchyConfig {
    pub fn new(tree: FiniteTree, coloring: PairColoring, base: Vec<Family>, s0: NodeSet) -> Result<Self, HierarchyError> {
        if coloring.node_count() != tree.len() {
            return Err(HierarchyError::SizeMismatch {
                coloring: coloring.node_count(),
                tree: tree.len(),
            });
        }
        if base.len() != tree.len() {
            return Err(HierarchyError::BaseCount {
                expected: tree.len(),
                got: base.len(),
            });
        }
        for (t, f) in base.iter().enumerate() {
            let inside = |s: &NodeSet| s.is_subset(tree.pred(t));
            let ok = match f {
                Family::Principal(u) => inside(u),
                Family::Generated(gens) => gens.iter().all(inside),
                Family::MSpecial(_) => true,
                Family::Extensional(e) => e.members().all(|s| inside(&s)),
            };
            if !ok {
                return Err(HierarchyError::BaseOutsidePred(t));
            }
        }
        if let Some(bad) = s0.iter().find(|&x| x >= tree.len()) {
            return Err(HierarchyError::InvalidNode(bad));
        }
        Ok(Self {
            tree,
            coloring,
            base,
            s0,
        })
    }

    /// Principal base `P(U_t)` at every node.
    pub fn principal(tree: FiniteTree, coloring: PairColoring, bases: Vec<NodeSet>, s0: NodeSet) -> Result<Self, HierarchyError> {
        Self::new(tree, coloring, bases.into_iter().map(Family::Principal).collect(), s0)
    }

    pub fn colors(&self) -> usize {
        self.coloring.colors()
    }

    fn base_contains(&self, t: usize, x: &NodeSet) -> bool {
        self.base[t].contains(&self.tree, x)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    is_j: bool,
    t: usize,
    sigma: SmallVec<[u8; 8]>,
    x: NodeSet,
}

impl Key {
    fn new(is_j: bool, t: usize, sigma: &[usize], x: &NodeSet) -> Self {
        Self {
            is_j,
            t,
            sigma: sigma.iter().map(|&c| c as u8).collect(),
            x: x.clone(),
        }
    }
}

/// A configuration with memo tables. Queries take `&self`; the tables sit
/// behind `RefCell`, so a session is confined to one thread.
pub struct HierarchySession {
    cfg: HierarchyConfig,
    levels: RefCell<Vec<NodeSet>>,
    memo: RefCell<HashMap<Key, bool>>,
}

impl HierarchySession {
    pub fn new(cfg: HierarchyConfig) -> Self {
        let s0 = cfg.s0.clone();
        Self {
            cfg,
            levels: RefCell::new(vec![s0]),
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.cfg
    }

    /// `S_n`, extending the cached sequence as needed.
    pub fn level(&self, n: usize) -> NodeSet {
        let mut levels = self.levels.borrow_mut();
        while levels.len() <= n {
            let cur = levels.last().unwrap().clone();
            let next = cur
                .iter()
                .filter(|&t| !self.cfg.base_contains(t, &cur.intersection(self.cfg.tree.pred(t))))
                .collect();
            levels.push(next);
        }
        levels[n].clone()
    }

    /// `[S_0, ..., S_depth]`.
    pub fn s_sequence(&self, depth: usize) -> Vec<NodeSet> {
        (0..=depth).map(|n| self.level(n)).collect()
    }

    fn check(&self, t: usize, sigma: &[usize], x: &NodeSet, level: usize) -> Result<(), HierarchyError> {
        if t >= self.cfg.tree.len() {
            return Err(HierarchyError::InvalidNode(t));
        }
        if let Some(&color) = sigma.iter().find(|&&c| c >= self.cfg.colors()) {
            return Err(HierarchyError::InvalidColor {
                color,
                k: self.cfg.colors(),
            });
        }
        if !x.is_subset(self.cfg.tree.pred(t)) {
            return Err(HierarchyError::NotBelow(t));
        }
        if !self.level(level).contains(t) {
            return Err(HierarchyError::NodeNotInLevel { t, level });
        }
        Ok(())
    }

    /// `X ∈ J(t, sigma)`; requires `t ∈ S_{|sigma|}`.
    pub fn in_j(&self, t: usize, sigma: &[usize], x: &NodeSet) -> Result<bool, HierarchyError> {
        self.check(t, sigma, x, sigma.len())?;
        Ok(self.j(t, sigma, x))
    }

    /// `X ∈ I(t, sigma)` for nonempty `sigma`; requires `t ∈ S_{|sigma|-1}`.
    pub fn in_i(&self, t: usize, sigma: &[usize], x: &NodeSet) -> Result<bool, HierarchyError> {
        if sigma.is_empty() {
            return Err(HierarchyError::EmptySequence);
        }
        self.check(t, sigma, x, sigma.len() - 1)?;
        Ok(self.i(t, sigma, x))
    }

    fn j(&self, t: usize, sigma: &[usize], x: &NodeSet) -> bool {
        if sigma.is_empty() {
            return self.cfg.base_contains(t, x);
        }
        let key = Key::new(true, t, sigma, x);
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let tree = &self.cfg.tree;
        let below = self.level(sigma.len() - 1).intersection(tree.pred(t));
        let positive: NodeSet = below
            .iter()
            .filter(|&s| !self.i(s, sigma, &x.intersection(tree.pred(s))))
            .collect();
        let v = self.cfg.base_contains(t, &positive);
        self.memo.borrow_mut().insert(key, v);
        v
    }

    fn i(&self, t: usize, sigma: &[usize], x: &NodeSet) -> bool {
        let key = Key::new(false, t, sigma, x);
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let (&color, inner) = sigma.split_last().expect("nonempty sequence");
        let reach = c_chi(&self.cfg.tree, &self.cfg.coloring, t, color).expect("color checked");
        let v = self.j(t, inner, &x.intersection(&reach));
        self.memo.borrow_mut().insert(key, v);
        v
    }

    /// The members of `Sigma_0` for which `S ∩ pred(t)` is positive for
    /// `I(t, sigma)`. Sequences whose level does not contain `t` are skipped.
    pub fn sigma_set(&self, t: usize, s: &NodeSet) -> Result<Vec<Vec<usize>>, HierarchyError> {
        if t >= self.cfg.tree.len() {
            return Err(HierarchyError::InvalidNode(t));
        }
        let x = s.intersection(self.cfg.tree.pred(t));
        Ok(sigma0(self.cfg.colors())
            .into_iter()
            .filter(|sigma| self.level(sigma.len() - 1).contains(t) && !self.i(t, sigma, &x))
            .collect())
    }
}

/// Nonempty sequences of distinct colors below `k`, shortest first and
/// lexicographic within a length.
pub fn sigma0(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for seq in &frontier {
            for c in 0..k {
                if !seq.contains(&c) {
                    let mut s = seq.clone();
                    s.push(c);
                    next.push(s);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every sequence over `0..k` of length at most `len`, shortest first.
pub fn all_sequences(k: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..len {
        frontier = frontier
            .iter()
            .flat_map(|s: &Vec<usize>| {
                (0..k).map(move |c| {
                    let mut s = s.clone();
                    s.push(c);
                    s
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

/// How `J(t, sigma)` compares with the intersection of the
/// `I(t, sigma + <i>)` over all subsets of `pred(t)`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct IdentityRow {
    pub t: usize,
    pub sigma: Vec<usize>,
    pub inclusion: bool,
    pub equality: bool,
}

/// Compares `J` with the intersection of the `I`s at every node of its
/// level, for every sequence up to length `max_len`.
pub fn identity_report(session: &HierarchySession, max_len: usize) -> Vec<IdentityRow> {
    let cfg = session.config();
    let k = cfg.colors();
    let mut rows = Vec::new();
    for sigma in all_sequences(k, max_len) {
        for t in &session.level(sigma.len()) {
            let pred = cfg.tree.pred(t).to_vec();
            let (mut inclusion, mut equality) = (true, true);
            for mask in 0u64..1 << pred.len() {
                let x: NodeSet = pred.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
                let j = session.j(t, &sigma, &x);
                let all_i = (0..k).all(|c| {
                    let mut ext = sigma.clone();
                    ext.push(c);
                    session.i(t, &ext, &x)
                });
                inclusion &= !j || all_i;
                equality &= j == all_i;
            }
            rows.push(IdentityRow {
                t,
                sigma: sigma.clone(),
                inclusion,
                equality,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::random_coloring;
    use crate::tree::{all_recursive_trees, gen_tree, TreeKind};
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> NodeSet {
        xs.iter().copied().collect()
    }

    fn path3(u2: NodeSet) -> HierarchySession {
        let t = FiniteTree::path(3);
        let c = PairColoring::constant(&t, 2, 0).unwrap();
        let bases = vec![NodeSet::new(), NodeSet::new(), u2];
        HierarchySession::new(HierarchyConfig::principal(t.clone(), c, bases, t.nodes()).unwrap())
    }

    #[test]
    fn j_and_i_examples() {
        let h = path3(set(&[0]));
        assert!(h.in_j(2, &[], &set(&[0])).unwrap());
        assert!(!h.in_j(2, &[], &set(&[1])).unwrap());
        assert!(!h.in_i(2, &[0], &set(&[1])).unwrap());
        assert!(h.in_i(2, &[0], &set(&[0])).unwrap());
        // c_1(2) is empty under the constant-0 coloring.
        assert!(h.in_i(2, &[1], &set(&[0, 1])).unwrap());
        assert!(matches!(h.in_i(2, &[2], &NodeSet::new()), Err(HierarchyError::InvalidColor { .. })));
        assert_eq!(h.in_j(2, &[], &set(&[2])), Err(HierarchyError::NotBelow(2)));
    }

    #[test]
    fn level_examples() {
        let h = path3(NodeSet::new());
        assert_eq!(
            h.s_sequence(3),
            vec![set(&[0, 1, 2]), set(&[1, 2]), set(&[2]), NodeSet::new()]
        );
        assert_eq!(h.in_j(1, &[0, 0], &NodeSet::new()), Err(HierarchyError::NodeNotInLevel { t: 1, level: 2 }));

        let t = FiniteTree::path(3);
        let c = PairColoring::constant(&t, 2, 0).unwrap();
        let full: Vec<NodeSet> = (0..3).map(|x| t.pred(x).clone()).collect();
        let h = HierarchySession::new(HierarchyConfig::principal(t.clone(), c.clone(), full, t.nodes()).unwrap());
        assert!(h.level(1).is_empty());
        let h = HierarchySession::new(HierarchyConfig::principal(t, c, vec![NodeSet::new(); 3], NodeSet::new()).unwrap());
        assert!(h.s_sequence(4).iter().all(|s| s.is_empty()));
    }

    #[test]
    fn sigma0_counts() {
        assert_eq!(sigma0(1), vec![vec![0]]);
        assert_eq!(sigma0(2), vec![vec![0], vec![1], vec![0, 1], vec![1, 0]]);
        for k in 1..=5usize {
            let expected: usize = (1..=k).map(|j| (k - j + 1..=k).product::<usize>()).sum();
            assert_eq!(sigma0(k).len(), expected);
        }
    }

    #[test]
    fn sigma_set_examples() {
        let h = path3(NodeSet::new());
        let sig = h.sigma_set(2, &set(&[0, 1, 2])).unwrap();
        assert!(sig.contains(&vec![0]));
        assert!(!sig.contains(&vec![1]));
        assert!(h.sigma_set(2, &NodeSet::new()).unwrap().is_empty());
        assert!(h.sigma_set(0, &set(&[0, 1, 2])).unwrap().is_empty());
    }

    #[test]
    fn config_validation() {
        let t = FiniteTree::path(3);
        let c = PairColoring::constant(&t, 2, 0).unwrap();
        let bad = vec![NodeSet::new(), set(&[1]), NodeSet::new()];
        assert_eq!(
            HierarchyConfig::principal(t.clone(), c.clone(), bad, t.nodes()).unwrap_err(),
            HierarchyError::BaseOutsidePred(1)
        );
        assert!(matches!(
            HierarchyConfig::principal(t.clone(), c, vec![NodeSet::new(); 2], t.nodes()),
            Err(HierarchyError::BaseCount { .. })
        ));
    }

    #[test]
    fn principal_bases_give_equality_on_small_trees() {
        for n in 1..=4 {
            for tree in all_recursive_trees(n) {
                for seed in 0..4 {
                    let c = random_coloring(&tree, 2, seed).unwrap();
                    let bases: Vec<NodeSet> = (0..n)
                        .map(|t| tree.pred(t).iter().filter(|&x| (x as u64 + seed + t as u64).is_multiple_of(3)).collect())
                        .collect();
                    let cfg = HierarchyConfig::principal(tree.clone(), c, bases, tree.nodes()).unwrap();
                    let h = HierarchySession::new(cfg);
                    for row in identity_report(&h, 2) {
                        assert!(row.inclusion && row.equality, "{row:?}");
                    }
                }
            }
        }
    }

    fn arb_config() -> impl Strategy<Value = HierarchyConfig> {
        (1usize..=6, any::<u64>(), any::<u64>(), any::<u64>()).prop_map(|(n, ts, cs, bs)| {
            let tree = gen_tree(TreeKind::Random { n }, ts).unwrap();
            let c = random_coloring(&tree, 2, cs).unwrap();
            // Downward closure of two generator sets per node.
            let base = (0..n)
                .map(|t| {
                    let p = tree.pred(t).to_vec();
                    let pick = |salt: u64| -> NodeSet {
                        p.iter()
                            .enumerate()
                            .filter(|(i, _)| (bs.rotate_left((t * 7 + *i) as u32) ^ salt) & 1 == 1)
                            .map(|(_, &x)| x)
                            .collect()
                    };
                    Family::Generated(vec![pick(0), pick(1)])
                })
                .collect();
            let s0 = if bs & 1 == 0 { tree.nodes() } else { NodeSet::from_mask(bs >> 11).intersection(&tree.nodes()) };
            HierarchyConfig::new(tree, c, base, s0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn levels_decrease(cfg in arb_config()) {
            let h = HierarchySession::new(cfg);
            let seq = h.s_sequence(6);
            for w in seq.windows(2) {
                prop_assert!(w[1].is_subset(&w[0]));
            }
        }

        #[test]
        fn j_is_contained_in_every_i(cfg in arb_config()) {
            let h = HierarchySession::new(cfg);
            for row in identity_report(&h, 2) {
                prop_assert!(row.inclusion);
            }
        }

        #[test]
        fn families_are_downward_closed(cfg in arb_config()) {
            let h = HierarchySession::new(cfg);
            let tree = h.config().tree.clone();
            for sigma in all_sequences(2, 2) {
                for t in &h.level(sigma.len()) {
                    let p = tree.pred(t).to_vec();
                    for mask in 0u64..1 << p.len() {
                        let x: NodeSet = p.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
                        if h.in_j(t, &sigma, &x).unwrap() {
                            for y in &x {
                                let mut smaller = x.clone();
                                smaller.remove(y);
                                prop_assert!(h.in_j(t, &sigma, &smaller).unwrap());
                            }
                        }
                    }
                }
            }
        }

        #[test]
        fn sigma_set_is_monotone(cfg in arb_config(), r in any::<u64>(), s in any::<u64>()) {
            let n = cfg.tree.len();
            let h = HierarchySession::new(cfg);
            let small = NodeSet::from_mask(r & s).intersection(&NodeSet::full(n));
            let big = NodeSet::from_mask(s).intersection(&NodeSet::full(n));
            for t in 0..n {
                let a = h.sigma_set(t, &small).unwrap();
                let b = h.sigma_set(t, &big).unwrap();
                prop_assert!(a.iter().all(|x| b.contains(x)));
            }
        }
    }
}
