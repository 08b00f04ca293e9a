//! Finite partition calculus on trees and posets.
//!
//! The crate covers diagonal unions and the diagonal-union ideal of a family
//! of subtrees, colorings of comparable pairs, exact homogeneous-chain search
//! and arrow-relation decisions, `(rho, sigma)`-good chains, the `I`/`J`
//! ideal recursion over finite base ideals, Cantor-normal-form ordinal
//! bookkeeping, and the reduction from posets to the tree of their chains.

pub mod coloring;
pub mod goodsets;
pub mod guard;
pub mod hierarchy;
pub mod ideal;
pub mod io;
pub mod nodeset;
pub mod order;
pub mod ordinal;
pub mod poset;
pub mod ramsey;
pub mod tree;

pub use coloring::{PairColoring, SpecializingMap};
pub use goodsets::GoodDecomposition;
pub use guard::Guards;
pub use hierarchy::{HierarchyConfig, HierarchySession};
pub use ideal::{Family, RegressiveMap};
pub use nodeset::NodeSet;
pub use order::{PartialOrder, SubOrder};
pub use ordinal::Ordinal;
pub use poset::{FinitePoset, SigmaPrime};
pub use ramsey::{ArrowGoal, ArrowVerdict};
pub use tree::FiniteTree;
