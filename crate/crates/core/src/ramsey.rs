//! Homogeneous chains and the finite arrow relation `P -> (l_0, ..., l_{k-1})^2`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::coloring::{ColoringError, PairColoring};
use crate::guard::Guards;
use crate::nodeset::NodeSet;
use crate::order::{PartialOrder, SubOrder};
use crate::poset::{sigma_prime, FinitePoset, PosetError, SigmaPrime};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RamseyError {
    #[error("goal list must be nonempty")]
    EmptyGoal,
    #[error("goal lengths must be at least 1")]
    ZeroGoal,
    #[error("too many colors: {0}")]
    TooManyColors(usize),
    #[error("color {color} out of range for {k} colors")]
    InvalidColor { color: usize, k: usize },
    #[error("coloring covers {coloring} nodes but the order has {order}")]
    SizeMismatch { coloring: usize, order: usize },
    #[error("coloring uses {coloring} colors but the goal lists {goal}")]
    ColorCountMismatch { coloring: usize, goal: usize },
    #[error("{k}^{pairs} colorings exceed the guard of 2^{limit_log2}")]
    SearchSpaceTooLarge { pairs: usize, k: usize, limit_log2: u32 },
    #[error("no color reaches its goal length in the chain tree")]
    NoHomogeneousChain,
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// Required homogeneous-chain length per color; the number of colors is the
/// length of the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowGoal {
    goals: Vec<usize>,
}

impl ArrowGoal {
    pub fn new(goals: Vec<usize>) -> Result<Self, RamseyError> {
        if goals.is_empty() {
            return Err(RamseyError::EmptyGoal);
        }
        if goals.contains(&0) {
            return Err(RamseyError::ZeroGoal);
        }
        if goals.len() > crate::coloring::MAX_COLORS {
            return Err(RamseyError::TooManyColors(goals.len()));
        }
        Ok(Self { goals })
    }

    pub fn goals(&self) -> &[usize] {
        &self.goals
    }

    pub fn colors(&self) -> usize {
        self.goals.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousChain {
    pub length: usize,
    pub chain: NodeSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowVerdict {
    pub holds: bool,
    /// A coloring with no homogeneous chain reaching its goal, when the
    /// relation fails.
    pub witness_coloring: Option<PairColoring>,
    /// A chain meeting its goal in the last coloring examined, when the
    /// relation holds.
    pub witness_chain: Option<(NodeSet, usize)>,
    /// Partial colorings visited by the search.
    pub colorings_examined: u64,
}

/// Finds a clique of size `need` inside `cand` using `adj`; among all such
/// cliques it returns the lexicographically least.
fn find_clique(adj: &[NodeSet], cand: &NodeSet, need: usize) -> Option<NodeSet> {
    if need == 0 {
        return Some(NodeSet::new());
    }
    if cand.len() < need {
        return None;
    }
    for v in cand {
        let mut rest = cand.intersection(&adj[v]);
        rest = rest.iter().filter(|&u| u > v).collect();
        if let Some(mut found) = find_clique(adj, &rest, need - 1) {
            found.insert(v);
            return Some(found);
        }
    }
    None
}

/// Maximum clique in `cand`, lexicographically least among the maximum ones.
/// Include-first search in index order visits candidates lexicographically,
/// so the first maximum found is kept and only branches that could strictly
/// improve are explored.
fn max_clique(adj: &[NodeSet], cand: &NodeSet) -> NodeSet {
    fn rec(adj: &[NodeSet], chosen: &mut Vec<usize>, cand: NodeSet, best: &mut Vec<usize>) {
        if chosen.len() + cand.len() <= best.len() {
            return;
        }
        let Some(v) = cand.min() else {
            *best = chosen.clone();
            return;
        };
        let above: NodeSet = adj[v].iter().filter(|&u| u > v).collect();
        chosen.push(v);
        rec(adj, chosen, cand.intersection(&above), best);
        chosen.pop();
        let mut without = cand;
        without.remove(v);
        rec(adj, chosen, without, best);
    }
    let mut best = Vec::new();
    rec(adj, &mut Vec::new(), cand.clone(), &mut best);
    best.into_iter().collect()
}

fn color_graph<O: PartialOrder + ?Sized>(order: &O, c: &PairColoring, chi: usize) -> Vec<NodeSet> {
    let mut adj = vec![NodeSet::new(); order.len()];
    for (lo, hi) in order.comparable_pairs() {
        if c.get(lo, hi) == Some(chi) {
            adj[lo].insert(hi);
            adj[hi].insert(lo);
        }
    }
    adj
}

/// A longest chain all of whose pairs are colored `chi`, lexicographically
/// least among the longest. On trees each maximal branch is searched
/// separately; other orders use branch and bound over the comparability
/// graph.
pub fn max_homog_chain<O: PartialOrder + ?Sized>(
    order: &O,
    c: &PairColoring,
    chi: usize,
) -> Result<HomogeneousChain, RamseyError> {
    if chi >= c.colors() {
        return Err(RamseyError::InvalidColor { color: chi, k: c.colors() });
    }
    if c.node_count() != order.len() {
        return Err(RamseyError::SizeMismatch {
            coloring: c.node_count(),
            order: order.len(),
        });
    }
    let adj = color_graph(order, c, chi);
    let chain = match order.as_tree() {
        Some(tree) => {
            let support = order.support();
            let mut best = NodeSet::new();
            for leaf in tree.leaves() {
                let found = max_clique(&adj, &tree.branch(leaf).intersection(&support));
                if found.len() > best.len()
                    || (found.len() == best.len() && found.lex_cmp(&best).is_lt())
                {
                    best = found;
                }
            }
            best
        }
        None => max_clique(&adj, &order.support()),
    };
    assert!(
        order.is_chain(&chain) && c.is_homogeneous(&chain, chi),
        "homogeneous chain search returned an invalid chain"
    );
    Ok(HomogeneousChain {
        length: chain.len(),
        chain,
    })
}

struct ArrowSearch<'a> {
    pairs: &'a [(usize, usize)],
    goals: &'a [usize],
    k: usize,
    support: NodeSet,
    symmetric: bool,
    /// Per color, adjacency of pairs assigned that color.
    assigned: Vec<Vec<NodeSet>>,
    /// Adjacency of pairs not yet assigned.
    open: Vec<NodeSet>,
    colors: Vec<usize>,
    examined: u64,
    last_chain: Option<(NodeSet, usize)>,
}

impl<'a> ArrowSearch<'a> {
    fn new(n: usize, pairs: &'a [(usize, usize)], goals: &'a [usize], support: NodeSet) -> Self {
        let k = goals.len();
        let mut open = vec![NodeSet::new(); n];
        for &(a, b) in pairs {
            open[a].insert(b);
            open[b].insert(a);
        }
        Self {
            pairs,
            goals,
            k,
            support,
            symmetric: k > 1 && goals.iter().all(|&g| g == goals[0]),
            assigned: vec![vec![NodeSet::new(); n]; k],
            open,
            colors: Vec::with_capacity(pairs.len()),
            examined: 0,
            last_chain: None,
        }
    }

    /// Colors to try at depth `i`, in reflected Gray-code order.
    fn color_order(&self, i: usize) -> Vec<usize> {
        if i == 0 && self.symmetric {
            return vec![0];
        }
        let parity: usize = self.colors.iter().sum();
        if parity.is_multiple_of(2) {
            (0..self.k).collect()
        } else {
            (0..self.k).rev().collect()
        }
    }

    /// Assigns the next pair; returns a goal-length chain it completes, if any.
    fn push(&mut self, chi: usize) -> Option<NodeSet> {
        let (a, b) = self.pairs[self.colors.len()];
        self.colors.push(chi);
        self.open[a].remove(b);
        self.open[b].remove(a);
        self.assigned[chi][a].insert(b);
        self.assigned[chi][b].insert(a);
        self.examined += 1;
        let adj = &self.assigned[chi];
        let common = adj[a].intersection(&adj[b]);
        find_clique(adj, &common, self.goals[chi] - 2).map(|mut s| {
            s.insert(a);
            s.insert(b);
            s
        })
    }

    fn pop(&mut self) {
        let chi = self.colors.pop().expect("pop without push");
        let (a, b) = self.pairs[self.colors.len()];
        self.assigned[chi][a].remove(b);
        self.assigned[chi][b].remove(a);
        self.open[a].insert(b);
        self.open[b].insert(a);
    }

    /// True when every completion of the current partial coloring avoids
    /// all goals.
    fn all_completions_fail(&self) -> bool {
        (0..self.k).all(|chi| {
            let adj: Vec<NodeSet> = self.assigned[chi]
                .iter()
                .zip(&self.open)
                .map(|(x, y)| x.union(y))
                .collect();
            find_clique(&adj, &self.support, self.goals[chi]).is_none()
        })
    }

    /// Searches below the current prefix for a counterexample; on success
    /// the completed colors (unassigned pairs filled with 0) are returned.
    fn run(&mut self) -> Option<Vec<usize>> {
        if self.all_completions_fail() {
            let mut full = self.colors.clone();
            full.resize(self.pairs.len(), 0);
            return Some(full);
        }
        let depth = self.colors.len();
        if depth == self.pairs.len() {
            return None;
        }
        for chi in self.color_order(depth) {
            match self.push(chi) {
                Some(chain) => self.last_chain = Some((chain, chi)),
                None => {
                    if let Some(found) = self.run() {
                        self.pop();
                        return Some(found);
                    }
                }
            }
            self.pop();
        }
        None
    }

    /// All prefixes of the given length in search order.
    fn prefixes(&mut self, len: usize) -> Vec<Vec<usize>> {
        if self.colors.len() == len {
            return vec![self.colors.clone()];
        }
        let mut out = Vec::new();
        for chi in self.color_order(self.colors.len()) {
            self.colors.push(chi);
            out.extend(self.prefixes(len));
            self.colors.pop();
        }
        out
    }
}

struct TaskResult {
    counterexample: Option<Vec<usize>>,
    last_chain: Option<(NodeSet, usize)>,
    examined: u64,
}

/// Decides whether every coloring of the comparable pairs of `order` has,
/// for some color `chi`, a `chi`-homogeneous chain of length `goals[chi]`.
///
/// Colorings are searched pair by pair (pairs sorted by upper then lower
/// endpoint) with colors in Gray-code order. A branch is cut as soon as an
/// assigned color completes a goal-length chain, and accepted as a
/// counterexample as soon as no completion can reach any goal. With all
/// goals equal the first pair is fixed to color 0. The space is split into
/// prefix tasks in a fixed way, so the verdict and witnesses do not depend
/// on `workers`.
pub fn arrows_decide<O: PartialOrder + Sync + ?Sized>(
    order: &O,
    goal: &ArrowGoal,
    guards: &Guards,
    workers: usize,
) -> Result<ArrowVerdict, RamseyError> {
    let k = goal.colors();
    let goals = goal.goals();
    let pairs = order.comparable_pairs();
    let support = order.support();
    let space_log2 = pairs.len() as f64 * (k as f64).log2();
    if space_log2 > guards.arrow_log2 as f64 + 1e-9 {
        return Err(RamseyError::SearchSpaceTooLarge {
            pairs: pairs.len(),
            k,
            limit_log2: guards.arrow_log2,
        });
    }
    let build = |colors: &[usize]| {
        PairColoring::from_fn(order, k, |lo, hi| {
            let i = pairs.binary_search_by_key(&(hi, lo), |&(l, h)| (h, l)).expect("pair listed");
            colors[i]
        })
    };

    // A single node is a homogeneous chain of every color.
    if let Some(chi) = goals.iter().position(|&g| g <= 1) {
        if let Some(v) = support.min() {
            return Ok(ArrowVerdict {
                holds: true,
                witness_coloring: None,
                witness_chain: Some((NodeSet::singleton(v), chi)),
                colorings_examined: 0,
            });
        }
    }

    let mut root = ArrowSearch::new(order.len(), &pairs, goals, support.clone());
    let mut prefix_len = 0;
    let mut count = 1usize;
    while prefix_len < pairs.len() && count < 256 {
        count *= if prefix_len == 0 && root.symmetric { 1 } else { k };
        prefix_len += 1;
    }
    let tasks = root.prefixes(prefix_len);

    let run_task = |prefix: &Vec<usize>| -> TaskResult {
        let mut s = ArrowSearch::new(order.len(), &pairs, goals, support.clone());
        for &chi in prefix {
            if let Some(chain) = s.push(chi) {
                return TaskResult {
                    counterexample: None,
                    last_chain: Some((chain, chi)),
                    examined: s.examined,
                };
            }
        }
        let counterexample = s.run();
        TaskResult {
            counterexample,
            last_chain: s.last_chain,
            examined: s.examined,
        }
    };

    let workers = workers.max(1).min(tasks.len());
    let results: Vec<Mutex<Option<TaskResult>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let first_found = AtomicUsize::new(usize::MAX);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= tasks.len() {
            break;
        }
        if i > first_found.load(Ordering::SeqCst) {
            continue;
        }
        let r = run_task(&tasks[i]);
        if r.counterexample.is_some() {
            first_found.fetch_min(i, Ordering::SeqCst);
        }
        *results[i].lock().expect("result slot") = Some(r);
    };
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(work);
            }
        });
    }

    let results: Vec<Option<TaskResult>> = results
        .into_iter()
        .map(|m| m.into_inner().expect("result slot"))
        .collect();
    let examined = 1 + results.iter().flatten().map(|r| r.examined).sum::<u64>();
    if let Some(r) = results.iter().flatten().find(|r| r.counterexample.is_some()) {
        let coloring = build(r.counterexample.as_ref().unwrap())?;
        for (chi, &g) in goals.iter().enumerate() {
            assert!(
                max_homog_chain(order, &coloring, chi)?.length < g,
                "arrow search produced an invalid counterexample"
            );
        }
        return Ok(ArrowVerdict {
            holds: false,
            witness_coloring: Some(coloring),
            witness_chain: None,
            colorings_examined: examined,
        });
    }
    let witness_chain = results.iter().rev().flatten().find_map(|r| r.last_chain.clone());
    Ok(ArrowVerdict {
        holds: true,
        witness_coloring: None,
        witness_chain,
        colorings_examined: examined,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transfer {
    pub tree_chain: NodeSet,
    pub poset_chain: NodeSet,
    pub color: usize,
}

/// The coloring of the chain tree (root excluded) given by
/// `c'{a, b} = c{max a, max b}`.
pub fn pullback_coloring(sp: &SigmaPrime, c: &PairColoring) -> Result<PairColoring, RamseyError> {
    let sub = SubOrder::new(&sp.tree, sp.non_root());
    let mut bad = None;
    let pulled = PairColoring::from_fn(&sub, c.colors(), |a, b| {
        let (x, y) = (sp.max_map(a).unwrap(), sp.max_map(b).unwrap());
        c.get(x, y).unwrap_or_else(|| {
            bad.get_or_insert((x, y));
            0
        })
    })?;
    match bad {
        Some((x, y)) => Err(ColoringError::NotComparable(x, y).into()),
        None => Ok(pulled),
    }
}

/// Finds a goal-length homogeneous chain in the chain tree of `p` under
/// the pulled-back coloring and pushes it forward to `p`. Colors are tried
/// in order; the tree chain is cut to its lowest `goal` members.
pub fn pullback_transfer(
    p: &FinitePoset,
    c: &PairColoring,
    goal: &ArrowGoal,
    guards: &Guards,
) -> Result<Transfer, RamseyError> {
    if c.colors() != goal.colors() {
        return Err(RamseyError::ColorCountMismatch {
            coloring: c.colors(),
            goal: goal.colors(),
        });
    }
    if c.node_count() != p.len() {
        return Err(RamseyError::SizeMismatch {
            coloring: c.node_count(),
            order: p.len(),
        });
    }
    let sp = sigma_prime(p, guards.chains)?;
    let pulled = pullback_coloring(&sp, c)?;
    let sub = SubOrder::new(&sp.tree, sp.non_root());
    for (chi, &g) in goal.goals().iter().enumerate() {
        let found = max_homog_chain(&sub, &pulled, chi)?;
        if found.length >= g {
            let tree_chain: NodeSet = sub.sort_chain(&found.chain).into_iter().take(g).collect();
            let poset_chain = sp.push_forward(&tree_chain);
            assert!(
                poset_chain.len() == g && p.is_chain(&poset_chain) && c.is_homogeneous(&poset_chain, chi),
                "pushed-forward chain lost homogeneity"
            );
            return Ok(Transfer {
                tree_chain,
                poset_chain,
                color: chi,
            });
        }
    }
    Err(RamseyError::NoHomogeneousChain)
}
