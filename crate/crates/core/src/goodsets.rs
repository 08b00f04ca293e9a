//! Nested good chains: certification, exhaustive construction, extraction of
//! homogeneous chains and pigeonhole refinement.
//!
//! A `(rho, <>)`-good set is a single node. A `(rho, s + <i>)`-good set is a
//! union of `rho` blocks, each `(rho, s)`-good, where every node of an earlier
//! block lies below every node of a later one and all such cross pairs have
//! color `i`. The outermost level of a decomposition therefore carries the
//! last entry of the color sequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::PairColoring;
use crate::guard::Guards;
use crate::nodeset::NodeSet;
use crate::order::PartialOrder;
use crate::ordinal::verify_pigeonhole_finite;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GoodError {
    #[error("decomposition shape does not match arity {rho} and sequence length {depth}")]
    ArityMismatch { rho: usize, depth: usize },
    #[error("set is not a chain")]
    NotAChain,
    #[error("chain of {size} nodes exceeds the guard of {limit}")]
    ChainTooLong { size: usize, limit: usize },
    #[error("search gave up after {0} steps")]
    SearchBudgetExceeded(u64),
    #[error("color {0} does not occur in the decomposition")]
    ColorNotInRange(usize),
    #[error("arity {rho} does not force a fiber of size {xi} among {m} colors")]
    PigeonholeHypothesisFails { rho: usize, xi: usize, m: usize },
    #[error("labeling gives node {node} color {color}, outside 0..{m}")]
    InvalidLabel { node: usize, color: usize, m: usize },
    #[error("node {0} is not in the order")]
    InvalidNode(usize),
    #[error("decomposition is not good for the given coloring")]
    NotGood,
}

/// Witness structure for a good set: a leaf is one node, a level is an
/// ordered list of blocks together with the color joining them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GoodDecomposition {
    Leaf(usize),
    Level { color: usize, blocks: Vec<GoodDecomposition> },
}

impl GoodDecomposition {
    /// Leaves from left to right.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            GoodDecomposition::Leaf(x) => out.push(*x),
            GoodDecomposition::Level { blocks, .. } => blocks.iter().for_each(|b| b.collect_leaves(out)),
        }
    }

    pub fn leaf_set(&self) -> NodeSet {
        self.leaves().into_iter().collect()
    }

    pub fn first_leaf(&self) -> usize {
        match self {
            GoodDecomposition::Leaf(x) => *x,
            GoodDecomposition::Level { blocks, .. } => blocks[0].first_leaf(),
        }
    }

    /// Level colors along the leftmost branch, innermost first, i.e. the
    /// color sequence this decomposition is built for.
    pub fn color_sequence(&self) -> Vec<usize> {
        match self {
            GoodDecomposition::Leaf(_) => Vec::new(),
            GoodDecomposition::Level { color, blocks } => {
                let mut s = blocks.first().map(|b| b.color_sequence()).unwrap_or_default();
                s.push(*color);
                s
            }
        }
    }

    /// Number of blocks at the outermost level, if there is one.
    pub fn arity(&self) -> Option<usize> {
        match self {
            GoodDecomposition::Leaf(_) => None,
            GoodDecomposition::Level { blocks, .. } => Some(blocks.len()),
        }
    }
}

/// Checks that `d` certifies its leaves as `(rho, sigma)`-good. Shape errors
/// (wrong block counts or nesting depth) are reported as errors; order and
/// color failures give `Ok(false)`.
pub fn is_good<O: PartialOrder + ?Sized>(
    order: &O,
    c: &PairColoring,
    d: &GoodDecomposition,
    rho: usize,
    sigma: &[usize],
) -> Result<bool, GoodError> {
    let shape = || GoodError::ArityMismatch { rho, depth: sigma.len() };
    if rho == 0 {
        return Err(shape());
    }
    match d {
        GoodDecomposition::Leaf(x) => {
            if !sigma.is_empty() {
                return Err(shape());
            }
            if *x >= order.len() {
                return Err(GoodError::InvalidNode(*x));
            }
            Ok(true)
        }
        GoodDecomposition::Level { color, blocks } => {
            let Some((&last, inner)) = sigma.split_last() else {
                return Err(shape());
            };
            if blocks.len() != rho {
                return Err(shape());
            }
            let mut ok = *color == last;
            for b in blocks {
                ok &= is_good(order, c, b, rho, inner)?;
            }
            if !ok {
                return Ok(false);
            }
            let leaves: Vec<Vec<usize>> = blocks.iter().map(|b| b.leaves()).collect();
            for (i, early) in leaves.iter().enumerate() {
                for late in &leaves[i + 1..] {
                    for &a in early {
                        for &b in late {
                            if !order.less(a, b) || c.get(a, b) != Some(last) {
                                return Ok(false);
                            }
                        }
                    }
                }
            }
            Ok(true)
        }
    }
}

struct Builder<'a, O: PartialOrder + ?Sized> {
    order: &'a O,
    c: &'a PairColoring,
    rho: usize,
    /// The chain, bottom to top.
    chain: Vec<usize>,
    steps: u64,
    limit: u64,
}

type Cont<'c, B> = dyn FnMut(&mut B, GoodDecomposition) -> Result<bool, GoodError> + 'c;

impl<O: PartialOrder + ?Sized> Builder<'_, O> {
    fn size(&self, depth: usize) -> usize {
        self.rho.saturating_pow(depth as u32)
    }

    fn tick(&mut self) -> Result<(), GoodError> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(GoodError::SearchBudgetExceeded(self.limit));
        }
        Ok(())
    }

    /// Offers every `(rho, sigma)`-good subset of `allowed` to `cont` until
    /// it accepts one.
    fn good(&mut self, sigma: &[usize], allowed: &NodeSet, cont: &mut Cont<'_, Self>) -> Result<bool, GoodError> {
        self.tick()?;
        if allowed.len() < self.size(sigma.len()) {
            return Ok(false);
        }
        match sigma.split_last() {
            None => {
                for &x in &self.chain.clone() {
                    if allowed.contains(x) && cont(self, GoodDecomposition::Leaf(x))? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Some((&color, inner)) => self.blocks(color, inner, allowed, &mut Vec::new(), cont),
        }
    }

    fn blocks(
        &mut self,
        color: usize,
        inner: &[usize],
        allowed: &NodeSet,
        acc: &mut Vec<GoodDecomposition>,
        cont: &mut Cont<'_, Self>,
    ) -> Result<bool, GoodError> {
        if acc.len() == self.rho {
            return cont(self, GoodDecomposition::Level {
                color,
                blocks: acc.clone(),
            });
        }
        if allowed.len() < (self.rho - acc.len()) * self.size(inner.len()) {
            return Ok(false);
        }
        let (order, c) = (self.order, self.c);
        self.good(inner, allowed, &mut |this: &mut Self, block| {
            let members = block.leaves();
            let next: NodeSet = allowed
                .iter()
                .filter(|&x| members.iter().all(|&y| order.less(y, x) && c.get(y, x) == Some(color)))
                .collect();
            acc.push(block);
            let found = this.blocks(color, inner, &next, acc, cont);
            acc.pop();
            found
        })
    }
}

/// Searches the chain `x` for a `(rho, sigma)`-good subset and returns a
/// decomposition of the first one found, or `None` when none exists. The
/// search is exhaustive: blocks are filled left to right and leaves are
/// tried bottom up.
pub fn build_good<O: PartialOrder + ?Sized>(
    order: &O,
    c: &PairColoring,
    x: &NodeSet,
    rho: usize,
    sigma: &[usize],
    guards: &Guards,
) -> Result<Option<GoodDecomposition>, GoodError> {
    if rho == 0 {
        return Err(GoodError::ArityMismatch { rho, depth: sigma.len() });
    }
    if let Some(bad) = x.iter().find(|&v| v >= order.len()) {
        return Err(GoodError::InvalidNode(bad));
    }
    if !order.is_chain(x) {
        return Err(GoodError::NotAChain);
    }
    if x.len() > guards.good_chain {
        return Err(GoodError::ChainTooLong {
            size: x.len(),
            limit: guards.good_chain,
        });
    }
    let mut builder = Builder {
        order,
        c,
        rho,
        chain: order.sort_chain(x),
        steps: 0,
        limit: guards.good_steps,
    };
    let mut found = None;
    builder.good(sigma, x, &mut |_, d| {
        found = Some(d);
        Ok(true)
    })?;
    if let Some(d) = &found {
        assert!(
            is_good(order, c, d, rho, sigma)?,
            "good-set search returned an uncertified decomposition"
        );
    }
    Ok(found)
}

/// A `j`-homogeneous chain with one node per block at the level carrying
/// `j`: descend into the first block while `j` occurs further in, otherwise
/// take the first leaf of every block.
pub fn extract_homog(d: &GoodDecomposition, c: &PairColoring, j: usize) -> Result<NodeSet, GoodError> {
    if !d.color_sequence().contains(&j) {
        return Err(GoodError::ColorNotInRange(j));
    }
    let mut cur = d;
    let chain: NodeSet = loop {
        match cur {
            GoodDecomposition::Leaf(_) => unreachable!("color occurs above every leaf"),
            GoodDecomposition::Level { color, blocks } => {
                if blocks[0].color_sequence().contains(&j) {
                    cur = &blocks[0];
                } else if *color == j {
                    break blocks.iter().map(|b| b.first_leaf()).collect();
                } else {
                    return Err(GoodError::ColorNotInRange(j));
                }
            }
        }
    };
    if !c.is_homogeneous(&chain, j) {
        return Err(GoodError::NotGood);
    }
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refined {
    pub refined: GoodDecomposition,
    pub g_color: usize,
}

/// Shrinks a `(rho, sigma)`-good decomposition to a `(xi, sigma)`-good one on
/// which `g` is constant. Each block is refined first; then, among the
/// values `g` takes on the refined blocks, the least one shared by at least
/// `xi` blocks is kept along with the first `xi` such blocks.
pub fn refine_good<O: PartialOrder + ?Sized>(
    order: &O,
    c: &PairColoring,
    d: &GoodDecomposition,
    g: &dyn Fn(usize) -> usize,
    xi: usize,
    m: usize,
) -> Result<Refined, GoodError> {
    fn rec(d: &GoodDecomposition, g: &dyn Fn(usize) -> usize, xi: usize, m: usize) -> Result<Refined, GoodError> {
        match d {
            GoodDecomposition::Leaf(x) => {
                let color = g(*x);
                if color >= m {
                    return Err(GoodError::InvalidLabel { node: *x, color, m });
                }
                Ok(Refined {
                    refined: d.clone(),
                    g_color: color,
                })
            }
            GoodDecomposition::Level { color, blocks } => {
                let parts = blocks.iter().map(|b| rec(b, g, xi, m)).collect::<Result<Vec<_>, _>>()?;
                let mut counts = vec![0usize; m];
                for p in &parts {
                    counts[p.g_color] += 1;
                }
                let target = counts.iter().position(|&n| n >= xi).ok_or(GoodError::PigeonholeHypothesisFails {
                    rho: blocks.len(),
                    xi,
                    m,
                })?;
                let kept = parts
                    .into_iter()
                    .filter(|p| p.g_color == target)
                    .take(xi)
                    .map(|p| p.refined)
                    .collect();
                Ok(Refined {
                    refined: GoodDecomposition::Level { color: *color, blocks: kept },
                    g_color: target,
                })
            }
        }
    }

    if let Some(rho) = d.arity() {
        if xi == 0 || m == 0 || !verify_pigeonhole_finite(rho as u64, xi as u64, m as u64) {
            return Err(GoodError::PigeonholeHypothesisFails { rho, xi, m });
        }
    }
    let out = rec(d, g, xi, m)?;
    if d.arity().is_some() && !is_good(order, c, &out.refined, xi, &d.color_sequence())? {
        return Err(GoodError::NotGood);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::random_coloring;
    use crate::ordinal::{pigeonhole_goal, Ordinal};
    use crate::tree::FiniteTree;
    use proptest::prelude::*;

    fn blocks_of_three() -> (FiniteTree, PairColoring) {
        let p = FiniteTree::path(9);
        let c = PairColoring::from_fn(&p, 2, |a, b| usize::from(a / 3 != b / 3)).unwrap();
        (p, c)
    }

    fn two_leaves() -> GoodDecomposition {
        GoodDecomposition::Level {
            color: 0,
            blocks: vec![GoodDecomposition::Leaf(0), GoodDecomposition::Leaf(1)],
        }
    }

    #[test]
    fn is_good_examples() {
        let p = FiniteTree::path(2);
        let zero = PairColoring::constant(&p, 2, 0).unwrap();
        let one = PairColoring::constant(&p, 2, 1).unwrap();
        for rho in 1..4 {
            assert!(is_good(&p, &zero, &GoodDecomposition::Leaf(1), rho, &[]).unwrap());
        }
        assert!(is_good(&p, &zero, &two_leaves(), 2, &[0]).unwrap());
        assert!(!is_good(&p, &one, &two_leaves(), 2, &[0]).unwrap());
        assert!(!is_good(&p, &zero, &two_leaves(), 2, &[1]).unwrap());
        assert!(is_good(&p, &zero, &two_leaves(), 3, &[0]).is_err());
        assert!(is_good(&p, &zero, &two_leaves(), 2, &[0, 0]).is_err());
        assert!(is_good(&p, &zero, &two_leaves(), 0, &[0]).is_err());

        let backwards = GoodDecomposition::Level {
            color: 0,
            blocks: vec![GoodDecomposition::Leaf(1), GoodDecomposition::Leaf(0)],
        };
        assert!(!is_good(&p, &zero, &backwards, 2, &[0]).unwrap());
    }

    #[test]
    fn build_examples() {
        let g = Guards::default();
        let p = FiniteTree::path(4);
        let c = PairColoring::constant(&p, 2, 0).unwrap();
        let d = build_good(&p, &c, &p.nodes(), 2, &[0], &g).unwrap().unwrap();
        assert_eq!(d, two_leaves());
        assert_eq!(build_good(&p, &c, &p.nodes(), 2, &[1], &g).unwrap(), None);

        let (p9, c9) = blocks_of_three();
        let d = build_good(&p9, &c9, &p9.nodes(), 3, &[0, 1], &g).unwrap().unwrap();
        assert!(is_good(&p9, &c9, &d, 3, &[0, 1]).unwrap());
        let GoodDecomposition::Level { color, blocks } = &d else { panic!() };
        assert_eq!(*color, 1);
        let triples: Vec<Vec<usize>> = blocks.iter().map(|b| b.leaves()).collect();
        assert_eq!(triples, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]]);
        // The nesting cannot be turned around.
        assert_eq!(build_good(&p9, &c9, &p9.nodes(), 3, &[1, 0], &g).unwrap(), None);
    }

    #[test]
    fn build_guards_and_errors() {
        let three = FiniteTree::from_parents(vec![None, Some(0), Some(0)]).unwrap();
        let c = PairColoring::constant(&three, 2, 0).unwrap();
        let g = Guards::default();
        assert_eq!(
            build_good(&three, &c, &three.nodes(), 2, &[0], &g),
            Err(GoodError::NotAChain)
        );
        let p = FiniteTree::path(31);
        let c = PairColoring::constant(&p, 2, 0).unwrap();
        assert!(matches!(
            build_good(&p, &c, &p.nodes(), 2, &[0], &g),
            Err(GoodError::ChainTooLong { .. })
        ));
        let p = FiniteTree::path(12);
        let c = PairColoring::constant(&p, 2, 0).unwrap();
        let tight = Guards { good_steps: 5, ..g };
        assert_eq!(
            build_good(&p, &c, &p.nodes(), 3, &[0, 0], &tight),
            Err(GoodError::SearchBudgetExceeded(5))
        );
    }

    #[test]
    fn extract_examples() {
        let g = Guards::default();
        let (p9, c9) = blocks_of_three();
        let d = build_good(&p9, &c9, &p9.nodes(), 3, &[0, 1], &g).unwrap().unwrap();
        assert_eq!(extract_homog(&d, &c9, 1).unwrap().to_vec(), vec![0, 3, 6]);
        assert_eq!(extract_homog(&d, &c9, 0).unwrap().to_vec(), vec![0, 1, 2]);
        let p2 = FiniteTree::path(2);
        let c = PairColoring::constant(&p2, 2, 0).unwrap();
        assert_eq!(extract_homog(&two_leaves(), &c, 0).unwrap().len(), 2);
        assert_eq!(extract_homog(&two_leaves(), &c, 1), Err(GoodError::ColorNotInRange(1)));
    }

    #[test]
    fn refine_examples() {
        let p = FiniteTree::path(5);
        let c = PairColoring::constant(&p, 2, 0).unwrap();
        let leaf = GoodDecomposition::Leaf(3);
        let r = refine_good(&p, &c, &leaf, &|x| x % 2, 1, 2).unwrap();
        assert_eq!((r.refined, r.g_color), (leaf, 1));

        let d = build_good(&p, &c, &p.nodes(), 5, &[0], &Guards::default()).unwrap().unwrap();
        let r = refine_good(&p, &c, &d, &|x| x % 2, 3, 2).unwrap();
        assert_eq!(r.refined.leaves(), vec![0, 2, 4]);
        assert_eq!(r.g_color, 0);
        assert!(is_good(&p, &c, &r.refined, 3, &[0]).unwrap());

        let d4 = GoodDecomposition::Level {
            color: 0,
            blocks: (0..4).map(GoodDecomposition::Leaf).collect(),
        };
        assert_eq!(
            refine_good(&p, &c, &d4, &|x| x % 2, 3, 2),
            Err(GoodError::PigeonholeHypothesisFails { rho: 4, xi: 3, m: 2 })
        );
        assert!(matches!(
            refine_good(&p, &c, &d, &|_| 7, 3, 2),
            Err(GoodError::InvalidLabel { .. })
        ));
    }

    #[test]
    fn serde_shape() {
        let d = GoodDecomposition::Level {
            color: 1,
            blocks: vec![two_leaves(), GoodDecomposition::Leaf(4)],
        };
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"color":1,"blocks":[{"color":0,"blocks":[0,1]},4]}"#);
        assert_eq!(serde_json::from_str::<GoodDecomposition>(&s).unwrap(), d);
    }

    /// Direct search over all subsets for a good set, used as an oracle for
    /// the existence answer of `build_good`.
    fn exists_by_subsets(p: &FiniteTree, c: &PairColoring, rho: usize, sigma: &[usize]) -> bool {
        fn good_set(c: &PairColoring, s: &[usize], rho: usize, sigma: &[usize]) -> bool {
            let Some((&last, inner)) = sigma.split_last() else {
                return s.len() == 1;
            };
            let size = rho.pow(inner.len() as u32);
            if s.len() != size * rho {
                return false;
            }
            // On a path the blocks must be consecutive runs of the sorted set.
            let blocks: Vec<&[usize]> = s.chunks(size).collect();
            blocks.iter().all(|b| good_set(c, b, rho, inner))
                && blocks.iter().enumerate().all(|(i, a)| {
                    blocks[i + 1..]
                        .iter()
                        .all(|b| a.iter().all(|&x| b.iter().all(|&y| c.get(x, y) == Some(last))))
                })
        }
        let n = p.len();
        (0u64..1 << n).any(|mask| {
            let s = NodeSet::from_mask(mask).to_vec();
            good_set(c, &s, rho, sigma)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn build_is_complete_and_certified(
            n in 1usize..=9, seed in any::<u64>(), rho in 1usize..=3,
            sigma in prop::collection::vec(0usize..2, 0..=2),
        ) {
            let p = FiniteTree::path(n);
            let c = random_coloring(&p, 2, seed).unwrap();
            let d = build_good(&p, &c, &p.nodes(), rho, &sigma, &Guards::default()).unwrap();
            prop_assert_eq!(d.is_some(), exists_by_subsets(&p, &c, rho, &sigma));
            if let Some(d) = d {
                prop_assert!(is_good(&p, &c, &d, rho, &sigma).unwrap());
                for &j in &sigma {
                    let h = extract_homog(&d, &c, j).unwrap();
                    prop_assert_eq!(h.len(), rho);
                    prop_assert!(p.is_chain(&h) && c.is_homogeneous(&h, j));
                }
            }
        }

        #[test]
        fn pipeline_refines_and_extracts(xi in 1u64..=3, m in 1u64..=2, seed in any::<u64>(), j in 0usize..2) {
            let rho = pigeonhole_goal(&Ordinal::finite(xi), m).unwrap().as_finite().unwrap() as usize;
            let n = rho * rho;
            let p = FiniteTree::path(n);
            // Blocks of rho, joined by color 1 across and color 0 inside.
            let c = PairColoring::from_fn(&p, 2, |a, b| usize::from(a / rho != b / rho)).unwrap();
            let d = build_good(&p, &c, &p.nodes(), rho, &[0, 1], &Guards::default()).unwrap().unwrap();
            let gseed = seed;
            let g = move |x: usize| ((x as u64).wrapping_mul(gseed | 1) >> 7) as usize % m as usize;
            let r = refine_good(&p, &c, &d, &g, xi as usize, m as usize).unwrap();
            prop_assert!(is_good(&p, &c, &r.refined, xi as usize, &[0, 1]).unwrap());
            prop_assert!(r.refined.leaf_set().is_subset(&d.leaf_set()));
            prop_assert!(r.refined.leaves().iter().all(|&x| g(x) == r.g_color));
            let h = extract_homog(&r.refined, &c, j).unwrap();
            prop_assert_eq!(h.len(), xi as usize);
            prop_assert!(c.is_homogeneous(&h, j));
        }
    }
}
