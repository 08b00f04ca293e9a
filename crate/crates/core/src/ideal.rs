//! Diagonal unions, regressive maps, and downward-closed families standing
//! in for ideals on a finite tree.
//!
//! Finite families here are downward closed but not required to be closed
//! under unions: a finite family closed under pairwise unions is just the
//! power set of its largest member, which would trivialize every question.
//! Completeness is modeled instead by explicit budgets (`m`-special sets).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guard::Guards;
use crate::nodeset::NodeSet;
use crate::order::PartialOrder;
use crate::tree::FiniteTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdealError {
    #[error("family must give one set per node: expected {expected}, got {got}")]
    FamilyLength { expected: usize, got: usize },
    #[error("node {0} is not in the tree")]
    InvalidNode(usize),
    #[error("search over {size} nodes exceeds the guard of {limit}")]
    SearchBudgetExceeded { size: usize, limit: usize },
    #[error("{0} and {1} are comparable, so the set is not an antichain")]
    NotAnAntichain(usize, usize),
    #[error("index {0} is not a member of the antichain")]
    IndexOutsideAntichain(usize),
    #[error("the set attached to {0} is not inside its cone")]
    NotInCone(usize),
    #[error("the set attached to {t} needs {needed} antichains, more than the budget {m}")]
    BudgetViolated { t: usize, needed: usize, m: usize },
    #[error("materialized families are limited to {limit} nodes, tree has {n}")]
    AmbientTooLarge { n: usize, limit: usize },
    #[error("round count must be at least 1")]
    NoRounds,
    #[error("budget m must be at least 1")]
    ZeroBudget,
    #[error("the extra set at {0} meets its cone")]
    NotOutsideCone(usize),
    #[error("map is not regressive at {0}")]
    NotRegressive(usize),
    #[error("map domain differs from the set it should cover")]
    DomainMismatch,
    #[error("fiber over {0} is not in the family")]
    FiberOutsideFamily(usize),
    #[error("cannot parse family spec {0:?}")]
    Parse(String),
}

/// A downward-closed family of node sets. The empty set is always a member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// Sets whose longest chain has at most `m` nodes, i.e. unions of at
    /// most `m` antichains.
    MSpecial(usize),
    /// All subsets of the given set.
    Principal(NodeSet),
    /// Downward closure of the listed generator sets.
    Generated(Vec<NodeSet>),
    /// Membership table indexed by bitmask.
    Extensional(ExtensionalFamily),
}

impl Family {
    pub fn power_set(tree: &FiniteTree) -> Self {
        Family::Principal(tree.nodes())
    }

    pub fn contains(&self, tree: &FiniteTree, set: &NodeSet) -> bool {
        if set.is_empty() {
            return true;
        }
        match self {
            Family::MSpecial(m) => tree.longest_chain_in(set) <= *m,
            Family::Principal(u) => set.is_subset(u),
            Family::Generated(gens) => gens.iter().any(|g| set.is_subset(g)),
            Family::Extensional(e) => e.contains(set),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &NodeSet| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Family::MSpecial(m) => write!(f, "mspecial:{m}"),
            Family::Principal(u) => write!(f, "principal:{}", list(u)),
            Family::Generated(gens) => {
                write!(f, "gens:{}", gens.iter().map(list).collect::<Vec<_>>().join(";"))
            }
            Family::Extensional(e) => write!(f, "<extensional family, {} members>", e.len()),
        }
    }
}

/// Parses a comma-separated node list; the empty string is the empty set.
pub fn parse_node_list(s: &str) -> Option<NodeSet> {
    let s = s.trim();
    if s.is_empty() {
        return Some(NodeSet::new());
    }
    s.split(',').map(|x| x.trim().parse::<usize>().ok()).collect()
}

impl FromStr for Family {
    type Err = IdealError;

    /// `mspecial:<m>`, `principal:<set>` or `gens:<set>;<set>;...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || IdealError::Parse(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(err)?;
        match kind.trim() {
            "mspecial" => rest.trim().parse().map(Family::MSpecial).map_err(|_| err()),
            "principal" => parse_node_list(rest).map(Family::Principal).ok_or_else(err),
            "gens" => rest
                .split(';')
                .map(parse_node_list)
                .collect::<Option<Vec<_>>>()
                .map(Family::Generated)
                .ok_or_else(err),
            _ => Err(err()),
        }
    }
}

/// An explicitly listed family over `0..n`, stored as a membership table of
/// size `2^n`.
#[derive(Clone, PartialEq, Eq)]
pub struct ExtensionalFamily {
    n: usize,
    members: Vec<bool>,
}

impl ExtensionalFamily {
    /// Materializes `pred` over all subsets of `0..n`; `n` must be small.
    pub fn from_predicate(n: usize, mut pred: impl FnMut(&NodeSet) -> bool) -> Self {
        assert!(n < 32, "extensional families are indexed by u32 masks");
        let members = (0u64..1 << n).map(|m| pred(&NodeSet::from_mask(m))).collect();
        Self { n, members }
    }

    pub fn contains(&self, set: &NodeSet) -> bool {
        match set.to_mask() {
            Some(m) if m < self.members.len() as u64 => self.members[m as usize],
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> impl Iterator<Item = NodeSet> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(m, _)| NodeSet::from_mask(m as u64))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.iter().zip(other.members.iter()).all(|(&a, &b)| !a || b)
    }

    pub fn is_downward_closed(&self) -> bool {
        (0..self.members.len()).all(|m| {
            !self.members[m] || (0..self.n).all(|i| m >> i & 1 == 0 || self.members[m & !(1 << i)])
        })
    }
}

impl fmt::Debug for ExtensionalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.members()).finish()
    }
}

/// A map sending each non-root node of its domain strictly below itself,
/// and the root (if present) to itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressiveMap {
    pub assignment: BTreeMap<usize, usize>,
}

impl RegressiveMap {
    pub fn domain(&self) -> NodeSet {
        self.assignment.keys().copied().collect()
    }

    pub fn get(&self, t: usize) -> Option<usize> {
        self.assignment.get(&t).copied()
    }

    pub fn fibers(&self) -> BTreeMap<usize, NodeSet> {
        let mut out: BTreeMap<usize, NodeSet> = BTreeMap::new();
        for (&x, &t) in &self.assignment {
            out.entry(t).or_default().insert(x);
        }
        out
    }

    pub fn check_regressive(&self, tree: &FiniteTree) -> Result<(), IdealError> {
        for (&x, &t) in &self.assignment {
            if x >= tree.len() || t >= tree.len() {
                return Err(IdealError::InvalidNode(x.max(t)));
            }
            let ok = if x == tree.root() { t == x } else { tree.less(t, x) };
            if !ok {
                return Err(IdealError::NotRegressive(x));
            }
        }
        Ok(())
    }

    /// Checks that this map witnesses `set` in the diagonal-union ideal of
    /// `family`.
    pub fn check_witness(&self, tree: &FiniteTree, set: &NodeSet, family: &Family) -> Result<(), IdealError> {
        if self.domain() != *set {
            return Err(IdealError::DomainMismatch);
        }
        self.check_regressive(tree)?;
        for (t, fiber) in self.fibers() {
            if !family.contains(tree, &fiber) {
                return Err(IdealError::FiberOutsideFamily(t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    pub witness: Option<RegressiveMap>,
}

fn check_family_len(tree: &FiniteTree, family: &[NodeSet]) -> Result<(), IdealError> {
    if family.len() != tree.len() {
        return Err(IdealError::FamilyLength {
            expected: tree.len(),
            got: family.len(),
        });
    }
    for s in family {
        tree.check_set(s).map_err(|_| IdealError::InvalidNode(s.max().unwrap_or(0)))?;
    }
    Ok(())
}

/// `union over t of (A_t ∩ cone t)`, with the cone of the root being the
/// whole tree.
pub fn diag_union(tree: &FiniteTree, family: &[NodeSet]) -> Result<NodeSet, IdealError> {
    check_family_len(tree, family)?;
    let mut out = NodeSet::new();
    for (t, a) in family.iter().enumerate() {
        if t == tree.root() {
            out.union_with(a);
        } else {
            out.union_with(&a.intersection(tree.strict_above(t)));
        }
    }
    Ok(out)
}

/// Decides whether `set` is a diagonal union of members of `family` by
/// searching for a regressive map on `set` whose fibers all lie in the
/// family.
///
/// Nodes are assigned deepest first, ties by index; each tries its strict
/// predecessors in index order. The root is always sent to itself. Since the
/// family is downward closed, a fiber that leaves the family can be pruned
/// at once.
pub fn in_diag_ideal(
    tree: &FiniteTree,
    set: &NodeSet,
    family: &Family,
    guards: &Guards,
) -> Result<Membership, IdealError> {
    tree.check_set(set).map_err(|_| IdealError::InvalidNode(set.max().unwrap_or(0)))?;
    if set.len() > guards.diag_nodes {
        return Err(IdealError::SearchBudgetExceeded {
            size: set.len(),
            limit: guards.diag_nodes,
        });
    }
    let mut order: Vec<usize> = set.to_vec();
    order.sort_by_key(|&x| (std::cmp::Reverse(tree.depth(x)), x));
    let candidates: Vec<Vec<usize>> = order
        .iter()
        .map(|&x| {
            if x == tree.root() {
                vec![x]
            } else {
                tree.pred(x).to_vec()
            }
        })
        .collect();

    struct Search<'a> {
        tree: &'a FiniteTree,
        family: &'a Family,
        order: &'a [usize],
        candidates: &'a [Vec<usize>],
        fibers: Vec<NodeSet>,
        choice: Vec<usize>,
    }

    impl Search<'_> {
        fn run(&mut self, i: usize) -> bool {
            if i == self.order.len() {
                return true;
            }
            let x = self.order[i];
            for &t in &self.candidates[i] {
                let mut grown = self.fibers[t].clone();
                grown.insert(x);
                if !self.family.contains(self.tree, &grown) {
                    continue;
                }
                let old = std::mem::replace(&mut self.fibers[t], grown);
                self.choice[i] = t;
                if self.run(i + 1) {
                    return true;
                }
                self.fibers[t] = old;
            }
            false
        }
    }

    let mut search = Search {
        tree,
        family,
        order: &order,
        candidates: &candidates,
        fibers: vec![NodeSet::new(); tree.len()],
        choice: vec![0; order.len()],
    };
    if search.run(0) {
        let assignment = order.iter().copied().zip(search.choice.iter().copied()).collect();
        Ok(Membership {
            member: true,
            witness: Some(RegressiveMap { assignment }),
        })
    } else {
        Ok(Membership {
            member: false,
            witness: None,
        })
    }
}

/// Membership in the diagonal union of the `m`-special family.
pub fn ns_member(tree: &FiniteTree, set: &NodeSet, m: usize, guards: &Guards) -> Result<Membership, IdealError> {
    if m == 0 {
        return Err(IdealError::ZeroBudget);
    }
    in_diag_ideal(tree, set, &Family::MSpecial(m), guards)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialCover {
    pub cover: Vec<NodeSet>,
    pub min_count: usize,
}

/// Partitions `set` into antichains by how many members of `set` lie below
/// each node. The number of parts equals the longest chain inside `set`,
/// which is the least possible.
pub fn special_cover(tree: &FiniteTree, set: &NodeSet) -> SpecialCover {
    let mut cover: Vec<NodeSet> = Vec::new();
    for x in set {
        let level = tree.pred(x).intersection(set).len();
        if cover.len() <= level {
            cover.resize(level + 1, NodeSet::new());
        }
        cover[level].insert(x);
    }
    SpecialCover {
        min_count: cover.len(),
        cover,
    }
}

/// Merges `m`-special sets sitting in the cones of pairwise incomparable
/// nodes into one cover by at most `m` antichains. Cones above an antichain
/// are disjoint and mutually incomparable, so the `j`-th antichains of all
/// the pieces can share one index.
pub fn merge_special_above_antichain(
    tree: &FiniteTree,
    antichain: &NodeSet,
    parts: &BTreeMap<usize, NodeSet>,
    m: usize,
) -> Result<Vec<NodeSet>, IdealError> {
    tree.check_set(antichain).map_err(|_| IdealError::InvalidNode(antichain.max().unwrap_or(0)))?;
    let members = antichain.to_vec();
    for (i, &a) in members.iter().enumerate() {
        if let Some(&b) = members[i + 1..].iter().find(|&&b| tree.comparable(a, b)) {
            return Err(IdealError::NotAnAntichain(a, b));
        }
    }
    let mut merged: Vec<NodeSet> = Vec::new();
    for (&t, part) in parts {
        if !antichain.contains(t) {
            return Err(IdealError::IndexOutsideAntichain(t));
        }
        if !part.is_subset(&tree.cone(t)) {
            return Err(IdealError::NotInCone(t));
        }
        let cover = special_cover(tree, part);
        if cover.min_count > m {
            return Err(IdealError::BudgetViolated {
                t,
                needed: cover.min_count,
                m,
            });
        }
        for (j, level) in cover.cover.into_iter().enumerate() {
            if merged.len() <= j {
                merged.push(NodeSet::new());
            }
            merged[j].union_with(&level);
        }
    }
    Ok(merged)
}

/// Sends each `t` in `s` to the highest member of `s` strictly below it, or
/// to the root when there is none. Every fiber is an antichain, except that
/// the root's own fiber also holds the root itself when the root is in `s`.
pub fn isolated_regressive(tree: &FiniteTree, s: &NodeSet) -> RegressiveMap {
    let assignment = s
        .iter()
        .map(|t| {
            let below = tree.pred(t).intersection(s);
            let image = below
                .iter()
                .max_by_key(|&u| tree.depth(u))
                .unwrap_or(tree.root());
            (t, image)
        })
        .collect();
    RegressiveMap { assignment }
}

/// Iterates `F -> diagonal-union ideal of F` the given number of times,
/// materializing each round over all subsets of the tree.
pub fn diag_iterate(
    tree: &FiniteTree,
    family: &Family,
    rounds: usize,
    guards: &Guards,
) -> Result<ExtensionalFamily, IdealError> {
    if rounds == 0 {
        return Err(IdealError::NoRounds);
    }
    let n = tree.len();
    if n > guards.extensional_nodes.min(24) {
        return Err(IdealError::AmbientTooLarge {
            n,
            limit: guards.extensional_nodes.min(24),
        });
    }
    let mut current = family.clone();
    let mut result = None;
    for _ in 0..rounds {
        let mut err = None;
        let next = ExtensionalFamily::from_predicate(n, |x| {
            match in_diag_ideal(tree, x, &current, guards) {
                Ok(m) => m.member,
                Err(e) => {
                    err.get_or_insert(e);
                    false
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        current = Family::Extensional(next.clone());
        result = Some(next);
    }
    Ok(result.expect("at least one round"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub holds: bool,
}

/// Evaluates the eight elementary diagonal-union identities on one family
/// `A` and one choice of extra sets `X_t` disjoint from `cone t`. Each
/// entry compares the diagonal union of `A` with the right-hand side.
pub fn diag_union_identities(
    tree: &FiniteTree,
    family: &[NodeSet],
    extras: &[NodeSet],
) -> Result<Vec<IdentityCheck>, IdealError> {
    check_family_len(tree, family)?;
    check_family_len(tree, extras)?;
    let n = tree.len();
    let all = tree.nodes();
    let root = tree.root();
    for (t, x) in extras.iter().enumerate() {
        if !x.is_disjoint(&tree.cone(t)) {
            return Err(IdealError::NotOutsideCone(t));
        }
    }
    let lhs = diag_union(tree, family)?;
    let map = |f: &dyn Fn(usize) -> NodeSet| -> Result<NodeSet, IdealError> {
        diag_union(tree, &(0..n).map(f).collect::<Vec<_>>())
    };

    // s belongs iff s is in A_root or in some A_t with t strictly below s.
    let alt: NodeSet = all
        .iter()
        .filter(|&s| family[root].contains(s) || tree.pred(s).iter().any(|t| family[t].contains(s)))
        .collect();
    let weakly_below = |t: usize| {
        let mut s = tree.pred(t).clone();
        s.insert(t);
        s
    };

    let rhs = [
        ("alternative form", alt),
        ("restrict to cone", map(&|t| family[t].intersection(&tree.cone(t)))?),
        (
            "add predecessors and self",
            map(&|t| {
                let mut s = family[t].union(tree.pred(t));
                if t != root {
                    s.insert(t);
                }
                s
            })?,
        ),
        (
            "add complement of cone",
            map(&|t| family[t].union(&tree.cone(t).complement(n)))?,
        ),
        ("add outside material", map(&|t| family[t].union(&extras[t]))?),
        ("remove outside material", map(&|t| family[t].difference(&extras[t]))?),
        (
            "cumulative union",
            map(&|t| {
                let mut s = NodeSet::new();
                for u in &weakly_below(t) {
                    s.union_with(&family[u]);
                }
                s
            })?,
        ),
        (
            "difference from earlier",
            map(&|t| {
                let mut earlier = NodeSet::new();
                for u in tree.pred(t) {
                    earlier.union_with(&family[u]);
                }
                family[t].difference(&earlier)
            })?,
        ),
    ];
    Ok(rhs
        .into_iter()
        .map(|(name, r)| IdentityCheck { name, holds: r == lhs })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{gen_tree, TreeKind};
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> NodeSet {
        xs.iter().copied().collect()
    }

    fn tree(p: &[Option<usize>]) -> FiniteTree {
        FiniteTree::from_parents(p.to_vec()).unwrap()
    }

    fn g() -> Guards {
        Guards::default()
    }

    /// Every diagonal union of a choice of members of `members`, one per
    /// node, enumerated directly and deduplicated as choices accumulate.
    fn diag_ideal_by_enumeration(tree: &FiniteTree, members: &[NodeSet]) -> Vec<NodeSet> {
        let mut reachable = vec![NodeSet::new()];
        for t in 0..tree.len() {
            let mut next: Vec<NodeSet> = Vec::new();
            for r in &reachable {
                for a in members {
                    let mut fam = vec![NodeSet::new(); tree.len()];
                    fam[t] = a.clone();
                    let u = r.union(&diag_union(tree, &fam).unwrap());
                    if !next.contains(&u) {
                        next.push(u);
                    }
                }
            }
            reachable = next;
        }
        reachable
    }

    #[test]
    fn diag_union_examples() {
        let three = tree(&[None, Some(0), Some(0)]);
        let fam = vec![set(&[0, 2]), set(&[1, 2]), set(&[])];
        assert_eq!(diag_union(&three, &fam).unwrap(), set(&[0, 2]));
        let p4 = FiniteTree::path(4);
        let fam = vec![set(&[3]), set(&[]), set(&[]), set(&[])];
        assert_eq!(diag_union(&p4, &fam).unwrap(), set(&[3]));
        assert!(diag_union(&p4, &vec![NodeSet::new(); 4]).unwrap().is_empty());
        assert_eq!(
            diag_union(&p4, &[NodeSet::new()]),
            Err(IdealError::FamilyLength { expected: 4, got: 1 })
        );
    }

    #[test]
    fn in_diag_ideal_examples() {
        let p4 = FiniteTree::path(4);
        let r = in_diag_ideal(&p4, &set(&[1, 2, 3]), &Family::MSpecial(1), &g()).unwrap();
        assert!(r.member);
        let w = r.witness.unwrap();
        assert_eq!((w.get(1), w.get(2), w.get(3)), (Some(0), Some(1), Some(2)));

        let p2 = FiniteTree::path(2);
        let r = in_diag_ideal(&p2, &set(&[0, 1]), &Family::MSpecial(1), &g()).unwrap();
        assert!(!r.member && r.witness.is_none());

        let p3 = FiniteTree::path(3);
        let r = in_diag_ideal(&p3, &set(&[0, 1, 2]), &Family::MSpecial(2), &g()).unwrap();
        let w = r.witness.unwrap();
        assert_eq!((w.get(0), w.get(1), w.get(2)), (Some(0), Some(0), Some(1)));
        w.check_witness(&p3, &set(&[0, 1, 2]), &Family::MSpecial(2)).unwrap();
    }

    #[test]
    fn guard_applies() {
        let p = FiniteTree::path(5);
        let tight = Guards { diag_nodes: 3, ..Guards::default() };
        assert_eq!(
            in_diag_ideal(&p, &p.nodes(), &Family::MSpecial(1), &tight),
            Err(IdealError::SearchBudgetExceeded { size: 5, limit: 3 })
        );
    }

    #[test]
    fn ns_member_examples() {
        let p4 = FiniteTree::path(4);
        assert!(ns_member(&p4, &set(&[1, 2, 3]), 1, &g()).unwrap().member);
        let p2 = FiniteTree::path(2);
        assert!(!ns_member(&p2, &p2.nodes(), 1, &g()).unwrap().member);
        let p3 = FiniteTree::path(3);
        assert!(ns_member(&p3, &p3.nodes(), 2, &g()).unwrap().member);
        assert_eq!(ns_member(&p3, &p3.nodes(), 0, &g()), Err(IdealError::ZeroBudget));
    }

    #[test]
    fn special_cover_examples() {
        let p4 = FiniteTree::path(4);
        let c = special_cover(&p4, &p4.nodes());
        assert_eq!(c.min_count, 4);
        assert!(c.cover.iter().all(|a| a.len() == 1));
        let three = tree(&[None, Some(0), Some(0)]);
        let c = special_cover(&three, &three.nodes());
        assert_eq!(c.cover, vec![set(&[0]), set(&[1, 2])]);
        let comp = gen_tree(TreeKind::Complete { branching: 2, levels: 3 }, 0).unwrap();
        assert_eq!(special_cover(&comp, &comp.nodes()).min_count, 3);
        assert_eq!(special_cover(&comp, &NodeSet::new()).min_count, 0);
    }

    #[test]
    fn merge_examples() {
        let comp = gen_tree(TreeKind::Complete { branching: 2, levels: 3 }, 0).unwrap();
        assert!(merge_special_above_antichain(&comp, &NodeSet::new(), &BTreeMap::new(), 1)
            .unwrap()
            .is_empty());

        let single: BTreeMap<_, _> = [(1, set(&[3, 4]))].into_iter().collect();
        let m = merge_special_above_antichain(&comp, &set(&[1]), &single, 1).unwrap();
        assert_eq!(m, special_cover(&comp, &set(&[3, 4])).cover);

        // Children of the root are 1 and 2; each cone is a 1-special pair of
        // leaves here, so use the children together with their leaves.
        let parts: BTreeMap<_, _> = [(1, comp.cone(1)), (2, comp.cone(2))].into_iter().collect();
        let merged = merge_special_above_antichain(&comp, &set(&[1, 2]), &parts, 2).unwrap();
        assert!(merged.len() <= 2);
        let union: NodeSet = merged.iter().fold(NodeSet::new(), |a, b| a.union(b));
        assert_eq!(union, comp.cone(1).union(&comp.cone(2)));
        assert!(merged.iter().all(|a| comp.is_antichain(a)));
        assert!(special_cover(&comp, &union).min_count <= 2);

        assert_eq!(
            merge_special_above_antichain(&comp, &set(&[0, 1]), &BTreeMap::new(), 1),
            Err(IdealError::NotAnAntichain(0, 1))
        );
        let bad: BTreeMap<_, _> = [(1, set(&[2]))].into_iter().collect();
        assert_eq!(
            merge_special_above_antichain(&comp, &set(&[1]), &bad, 1),
            Err(IdealError::NotInCone(1))
        );
        let p = FiniteTree::path(4);
        let tall: BTreeMap<_, _> = [(1, set(&[2, 3]))].into_iter().collect();
        assert_eq!(
            merge_special_above_antichain(&p, &set(&[1]), &tall, 1),
            Err(IdealError::BudgetViolated { t: 1, needed: 2, m: 1 })
        );
    }

    #[test]
    fn isolated_regressive_examples() {
        let p4 = FiniteTree::path(4);
        let f = isolated_regressive(&p4, &set(&[1, 3]));
        assert_eq!((f.get(1), f.get(3)), (Some(0), Some(1)));
        assert!(isolated_regressive(&p4, &NodeSet::new()).assignment.is_empty());
        let three = tree(&[None, Some(0), Some(0)]);
        let f = isolated_regressive(&three, &set(&[1, 2]));
        assert_eq!(f.fibers().get(&0), Some(&set(&[1, 2])));
        f.check_regressive(&three).unwrap();
    }

    #[test]
    fn isolated_regressive_fibers_are_antichains_exhaustively() {
        for n in 1..=6 {
            for tr in crate::tree::all_recursive_trees(n) {
                for mask in 0u64..1 << n {
                    let s = NodeSet::from_mask(mask);
                    let f = isolated_regressive(&tr, &s);
                    f.check_regressive(&tr).unwrap();
                    for (t, fiber) in f.fibers() {
                        let mut rest = fiber.clone();
                        rest.remove(tr.root());
                        assert!(tr.is_antichain(&rest));
                        if !s.contains(tr.root()) || t != tr.root() {
                            assert!(tr.is_antichain(&fiber));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn diag_iterate_examples() {
        let p3 = FiniteTree::path(3);
        let empty = diag_iterate(&p3, &Family::Principal(NodeSet::new()), 3, &g()).unwrap();
        assert_eq!(empty.members().collect::<Vec<_>>(), vec![NodeSet::new()]);
        let all = diag_iterate(&p3, &Family::power_set(&p3), 1, &g()).unwrap();
        assert_eq!(all.len(), 8);

        // With m-special bases iteration is idempotent at this size...
        let r1 = diag_iterate(&p3, &Family::MSpecial(1), 1, &g()).unwrap();
        let r2 = diag_iterate(&p3, &Family::MSpecial(1), 2, &g()).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.len(), 6);
        // ...but not for arbitrary downward-closed families.
        let t = tree(&[None, Some(0), Some(1), Some(1)]);
        let f: Family = "gens:1;0,2;3".parse().unwrap();
        let r1 = diag_iterate(&t, &f, 1, &g()).unwrap();
        let r2 = diag_iterate(&t, &f, 2, &g()).unwrap();
        assert!(r1.is_subset(&r2) && r1 != r2);
        let gained: Vec<_> = r2.members().filter(|x| !r1.contains(x)).collect();
        assert_eq!(gained, vec![set(&[1, 2, 3])]);

        assert_eq!(diag_iterate(&p3, &f, 0, &g()), Err(IdealError::NoRounds));
        let big = FiniteTree::path(13);
        assert!(matches!(
            diag_iterate(&big, &f, 1, &g()),
            Err(IdealError::AmbientTooLarge { .. })
        ));
    }

    #[test]
    fn family_spec_grammar() {
        assert_eq!("mspecial:2".parse::<Family>().unwrap(), Family::MSpecial(2));
        assert_eq!("principal:".parse::<Family>().unwrap(), Family::Principal(NodeSet::new()));
        assert_eq!(
            "gens:0,1;;2".parse::<Family>().unwrap(),
            Family::Generated(vec![set(&[0, 1]), set(&[]), set(&[2])])
        );
        for s in ["mspecial:2", "principal:0,3", "gens:0,1;2"] {
            assert_eq!(s.parse::<Family>().unwrap().to_string(), s);
        }
        assert!("mspecial:x".parse::<Family>().is_err());
        assert!("nope:1".parse::<Family>().is_err());
    }

    #[test]
    fn extensional_downward_closure() {
        let f = ExtensionalFamily::from_predicate(3, |s| s.len() <= 1);
        assert!(f.is_downward_closed());
        let g = ExtensionalFamily::from_predicate(3, |s| s.len() == 2 || s.is_empty());
        assert!(!g.is_downward_closed());
    }

    fn arb_tree() -> impl Strategy<Value = FiniteTree> {
        (1usize..=5, any::<u64>()).prop_map(|(n, seed)| gen_tree(TreeKind::Random { n }, seed).unwrap())
    }

    proptest! {
        #[test]
        fn regressive_search_matches_enumeration(tr in arb_tree(), gens in prop::collection::vec(0u64..32, 0..=3)) {
            let n = tr.len();
            let gens: Vec<NodeSet> = gens.into_iter().map(|m| NodeSet::from_mask(m & ((1 << n) - 1))).collect();
            let fam = Family::Generated(gens);
            let members: Vec<NodeSet> = (0u64..1 << n).map(NodeSet::from_mask).filter(|s| fam.contains(&tr, s)).collect();
            let ideal = diag_ideal_by_enumeration(&tr, &members);
            for mask in 0u64..1 << n {
                let x = NodeSet::from_mask(mask);
                let r = in_diag_ideal(&tr, &x, &fam, &g()).unwrap();
                prop_assert_eq!(r.member, ideal.contains(&x));
                if let Some(w) = r.witness {
                    prop_assert!(w.check_witness(&tr, &x, &fam).is_ok());
                }
            }
        }

        #[test]
        fn diag_ideal_contains_family_and_is_downward_closed(tr in arb_tree(), m in 1usize..3) {
            let fam = Family::MSpecial(m);
            let once = diag_iterate(&tr, &fam, 1, &g()).unwrap();
            prop_assert!(once.is_downward_closed());
            let base = ExtensionalFamily::from_predicate(tr.len(), |s| fam.contains(&tr, s));
            prop_assert!(base.is_subset(&once));
        }

        #[test]
        fn diag_union_is_monotone_and_distributes(
            tr in arb_tree(),
            a in prop::collection::vec(0u64..32, 5),
            b in prop::collection::vec(0u64..32, 5),
        ) {
            let n = tr.len();
            let mask = (1u64 << n) - 1;
            let fa: Vec<NodeSet> = a[..n].iter().map(|m| NodeSet::from_mask(m & mask)).collect();
            let fb: Vec<NodeSet> = b[..n].iter().map(|m| NodeSet::from_mask(m & mask)).collect();
            let both: Vec<NodeSet> = fa.iter().zip(&fb).map(|(x, y)| x.union(y)).collect();
            let da = diag_union(&tr, &fa).unwrap();
            let db = diag_union(&tr, &fb).unwrap();
            let dboth = diag_union(&tr, &both).unwrap();
            prop_assert!(da.is_subset(&dboth));
            prop_assert_eq!(da.union(&db), dboth);
        }
    }
}
