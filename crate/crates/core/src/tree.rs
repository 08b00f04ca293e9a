//! Finite rooted trees: validation, structural queries and generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nodeset::NodeSet;
use crate::order::PartialOrder;

/// Generated trees are refused beyond this many nodes.
pub const MAX_GENERATED_NODES: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("parent array is empty")]
    Empty,
    #[error("no root: every node names a parent")]
    NoRoot,
    #[error("multiple roots: nodes {0} and {1} have no parent")]
    MultipleRoots(usize, usize),
    #[error("node {0} lies on a parent cycle")]
    CycleDetected(usize),
    #[error("node {node} names parent {parent}, which does not exist")]
    DanglingParent { node: usize, parent: usize },
    #[error("node {0} is not in the tree")]
    InvalidNode(usize),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
}

/// A rooted tree on nodes `0..n`, given by its parent map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    parent: Vec<Option<usize>>,
    root: usize,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    pred: Vec<NodeSet>,
    above: Vec<NodeSet>,
}

/// The three per-node queries: strict ancestors, cone, and height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeQueries {
    pub pred: NodeSet,
    pub cone: NodeSet,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetClass {
    pub is_chain: bool,
    pub is_antichain: bool,
    pub isolated_points: NodeSet,
}

impl FiniteTree {
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self, TreeError> {
        let n = parent.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        let mut root = None;
        for (node, p) in parent.iter().enumerate() {
            match *p {
                Some(p) if p >= n => return Err(TreeError::DanglingParent { node, parent: p }),
                Some(_) => {}
                None => match root {
                    Some(r) => return Err(TreeError::MultipleRoots(r, node)),
                    None => root = Some(node),
                },
            }
        }
        let root = root.ok_or(TreeError::NoRoot)?;

        // Depths by walking up to a node of known depth; a walk longer than n
        // means a cycle.
        let mut depth: Vec<Option<usize>> = vec![None; n];
        depth[root] = Some(0);
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            while depth[cur].is_none() {
                path.push(cur);
                if path.len() > n {
                    return Err(TreeError::CycleDetected(start));
                }
                cur = parent[cur].expect("only the root lacks a parent");
            }
            let mut d = depth[cur].unwrap();
            for &x in path.iter().rev() {
                d += 1;
                depth[x] = Some(d);
            }
        }
        let depth: Vec<usize> = depth.into_iter().map(Option::unwrap).collect();

        let mut children = vec![Vec::new(); n];
        for (node, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(node);
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&x| depth[x]);
        let mut pred = vec![NodeSet::new(); n];
        for &x in &order {
            if let Some(p) = parent[x] {
                let mut s = pred[p].clone();
                s.insert(p);
                pred[x] = s;
            }
        }
        let mut above = vec![NodeSet::new(); n];
        for &x in order.iter().rev() {
            if let Some(p) = parent[x] {
                let mut s = std::mem::take(&mut above[p]);
                s.insert(x);
                s.union_with(&above[x]);
                above[p] = s;
            }
        }

        Ok(Self {
            parent,
            root,
            children,
            depth,
            pred,
            above,
        })
    }

    /// `path(n)`: the chain `0 < 1 < .. < n-1`.
    pub fn path(n: usize) -> Self {
        assert!(n > 0, "path needs at least one node");
        let parent = (0..n).map(|i| i.checked_sub(1)).collect();
        Self::from_parents(parent).expect("path is a valid tree")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parent[t]
    }

    pub fn children(&self, t: usize) -> &[usize] {
        &self.children[t]
    }

    pub fn depth(&self, t: usize) -> usize {
        self.depth[t]
    }

    /// Number of levels; `path(4)` has height 4.
    pub fn height(&self) -> usize {
        self.depth.iter().max().map_or(0, |d| d + 1)
    }

    pub fn nodes(&self) -> NodeSet {
        NodeSet::full(self.len())
    }

    /// Strict ancestors of `t`.
    pub fn pred(&self, t: usize) -> &NodeSet {
        &self.pred[t]
    }

    /// Strict descendants of `t`, except that the cone of the root is the
    /// whole tree, root included.
    pub fn cone(&self, t: usize) -> NodeSet {
        if t == self.root {
            self.nodes()
        } else {
            self.above[t].clone()
        }
    }

    /// Strict descendants of `t` (no root exception).
    pub fn strict_above(&self, t: usize) -> &NodeSet {
        &self.above[t]
    }

    pub fn is_leaf(&self, t: usize) -> bool {
        self.children[t].is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&t| self.is_leaf(t))
    }

    /// Root-to-leaf path ending at `leaf`, as a node set.
    pub fn branch(&self, leaf: usize) -> NodeSet {
        let mut s = self.pred[leaf].clone();
        s.insert(leaf);
        s
    }

    pub fn check_node(&self, t: usize) -> Result<(), TreeError> {
        if t < self.len() {
            Ok(())
        } else {
            Err(TreeError::InvalidNode(t))
        }
    }

    pub fn check_set(&self, set: &NodeSet) -> Result<(), TreeError> {
        match set.max() {
            Some(m) if m >= self.len() => Err(TreeError::InvalidNode(m)),
            _ => Ok(()),
        }
    }

    pub fn node_queries(&self, t: usize) -> Result<NodeQueries, TreeError> {
        self.check_node(t)?;
        Ok(NodeQueries {
            pred: self.pred[t].clone(),
            cone: self.cone(t),
            height: self.pred[t].len(),
        })
    }

    /// Chain/antichain status of `set`. Finite trees have no limit nodes, so
    /// every point of `set` is isolated.
    pub fn classify_subset(&self, set: &NodeSet) -> Result<SubsetClass, TreeError> {
        self.check_set(set)?;
        Ok(SubsetClass {
            is_chain: self.is_chain(set),
            is_antichain: self.is_antichain(set),
            isolated_points: set.clone(),
        })
    }

    /// Length of the longest chain contained in `set`.
    pub fn longest_chain_in(&self, set: &NodeSet) -> usize {
        set.iter()
            .map(|x| self.pred[x].intersection(set).len() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Graphviz rendering, edges from parent to child.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tree {\n");
        for t in 0..self.len() {
            out.push_str(&format!("  {t};\n"));
        }
        for (t, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                out.push_str(&format!("  {p} -> {t};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

impl PartialOrder for FiniteTree {
    fn len(&self) -> usize {
        self.parent.len()
    }

    fn less(&self, a: usize, b: usize) -> bool {
        self.pred[b].contains(a)
    }

    fn as_tree(&self) -> Option<&FiniteTree> {
        Some(self)
    }

    fn is_chain(&self, set: &NodeSet) -> bool {
        // A set is a chain iff it sits inside the branch of its deepest member.
        match set.iter().max_by_key(|&x| self.depth[x]) {
            None => true,
            Some(top) => set.is_subset(&self.branch(top)),
        }
    }
}

/// Every tree on `0..n` in which each parent has a smaller index than its
/// child (so node 0 is the root). Every finite rooted tree is isomorphic to
/// one of these.
pub fn all_recursive_trees(n: usize) -> Vec<FiniteTree> {
    if n == 0 {
        return Vec::new();
    }
    let mut parents: Vec<Vec<Option<usize>>> = vec![vec![None]];
    for i in 1..n {
        parents = parents
            .into_iter()
            .flat_map(|p| {
                (0..i).map(move |q| {
                    let mut p = p.clone();
                    p.push(Some(q));
                    p
                })
            })
            .collect();
    }
    parents
        .into_iter()
        .map(|p| FiniteTree::from_parents(p).expect("parents precede children"))
        .collect()
}

/// Tree generators. Parameters are all positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    Path { n: usize },
    Complete { branching: usize, levels: usize },
    /// Strictly increasing sequences over `0..m` of length at most `d`,
    /// ordered by end-extension and rooted at the empty sequence.
    Wq { m: usize, d: usize },
    /// Each node after the root picks a uniformly random earlier parent.
    Random { n: usize },
}

pub fn gen_tree(kind: TreeKind, seed: u64) -> Result<FiniteTree, TreeError> {
    let positive = |name: &str, v: usize| {
        if v == 0 {
            Err(TreeError::ParamOutOfRange(format!("{name} must be positive")))
        } else {
            Ok(())
        }
    };
    let too_big = || TreeError::ParamOutOfRange(format!("more than {MAX_GENERATED_NODES} nodes"));
    let parent: Vec<Option<usize>> = match kind {
        TreeKind::Path { n } => {
            positive("n", n)?;
            if n > MAX_GENERATED_NODES {
                return Err(too_big());
            }
            (0..n).map(|i| i.checked_sub(1)).collect()
        }
        TreeKind::Random { n } => {
            positive("n", n)?;
            if n > MAX_GENERATED_NODES {
                return Err(too_big());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
                .collect()
        }
        TreeKind::Complete { branching, levels } => {
            positive("branching", branching)?;
            positive("levels", levels)?;
            let mut parent = vec![None];
            let mut frontier = vec![0usize];
            for _ in 1..levels {
                let mut next = Vec::new();
                for &p in &frontier {
                    for _ in 0..branching {
                        if parent.len() >= MAX_GENERATED_NODES {
                            return Err(too_big());
                        }
                        next.push(parent.len());
                        parent.push(Some(p));
                    }
                }
                frontier = next;
            }
            parent
        }
        TreeKind::Wq { m, d } => {
            positive("m", m)?;
            positive("d", d)?;
            // Breadth first: by length, then lexicographically.
            let mut seqs: Vec<Vec<usize>> = vec![Vec::new()];
            let mut parent = vec![None];
            let mut level_start = 0;
            for _ in 0..d {
                let level_end = seqs.len();
                for idx in level_start..level_end {
                    let from = seqs[idx].last().map_or(0, |&l| l + 1);
                    for x in from..m {
                        if seqs.len() >= MAX_GENERATED_NODES {
                            return Err(too_big());
                        }
                        let mut s = seqs[idx].clone();
                        s.push(x);
                        seqs.push(s);
                        parent.push(Some(idx));
                    }
                }
                level_start = level_end;
            }
            parent
        }
    };
    FiniteTree::from_parents(parent)
}
