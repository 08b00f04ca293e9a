use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use arbor::coloring::{
    c_chi, galvin_coloring, random_coloring, sierpinski_coloring, specializing_map, PairColoring, SpecializingMap,
};
use arbor::goodsets::{build_good, extract_homog, is_good, refine_good};
use arbor::hierarchy::{identity_report, HierarchyConfig, HierarchySession};
use arbor::ideal::{diag_iterate, diag_union, in_diag_ideal, ns_member, parse_node_list, special_cover, Family};
use arbor::io::{self, FORMAT_VERSION};
use arbor::ordinal::{pigeonhole_goal, verify_pigeonhole_finite, Ordinal};
use arbor::poset::sigma_prime;
use arbor::ramsey::{arrows_decide, max_homog_chain, ArrowGoal};
use arbor::tree::{gen_tree, TreeKind};
use arbor::{FinitePoset, FiniteTree, Guards, NodeSet, PartialOrder};

const GUARD_VAR: &str = "ARBOR_SEARCH_GUARD";

#[derive(Parser)]
#[command(name = "arbor", version, about = "Finite partition calculus on trees and posets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tree or poset.
    Gen(GenArgs),
    /// Write a pair coloring as CSV.
    Color(ColorArgs),
    /// Predecessors of a node joined to it by one color.
    Chi(ChiArgs),
    /// Diagonal unions and their ideals.
    #[command(subcommand)]
    Diag(DiagCommand),
    /// Membership in the diagonal ideal of m-special sets.
    Nsmember(NsArgs),
    /// Least cover of a set by antichains.
    Cover(CoverArgs),
    /// Decide an arrow relation by exhaustive search.
    Arrow(ArrowArgs),
    /// Longest homogeneous chain of one color.
    Maxchain(MaxchainArgs),
    /// Build, verify or mine good decompositions.
    #[command(subcommand)]
    Good(GoodCommand),
    /// Refine a good decomposition to be constant for a node labeling.
    Refine(RefineArgs),
    /// Levels, sequence sets and identity checks of the ideal hierarchy.
    Hier(HierArgs),
    /// Tree of chains of a poset.
    Sigmaprime(SigmaPrimeArgs),
    /// Ordinal arithmetic in Cantor normal form.
    #[command(subcommand)]
    Ord(OrdCommand),
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Ambient {
    /// Tree JSON file.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Poset JSON file.
    #[arg(long)]
    poset: Option<PathBuf>,
}

#[derive(Args)]
struct ColoringInput {
    /// Coloring CSV file.
    #[arg(long)]
    coloring: PathBuf,
    /// Number of colors; inferred from the file when absent.
    #[arg(long)]
    colors: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Path,
    Complete,
    Wq,
    Random,
    PosetRandom,
    PosetChain,
    PosetAntichain,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Json,
    Dot,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: TreeFormat,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColorKind {
    Galvin,
    Sierpinski,
    Random,
}

#[derive(Args)]
struct ColorArgs {
    #[arg(value_enum)]
    kind: ColorKind,
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    poset: Option<PathBuf>,
    /// Node labels JSON for the Galvin coloring (depth when absent).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Permutation for the Sierpinski coloring, e.g. `2,0,1`.
    #[arg(long)]
    perm: Option<String>,
    #[arg(long, default_value_t = 2)]
    colors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ChiArgs {
    #[arg(long)]
    tree: PathBuf,
    #[command(flatten)]
    coloring: ColoringInput,
    #[arg(long)]
    node: usize,
    #[arg(long)]
    color: usize,
}

#[derive(Subcommand)]
enum DiagCommand {
    /// Diagonal union of one set per node, separated by `;`.
    Union {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        sets: String,
    },
    /// Whether a set is a diagonal union of members of a family.
    Member {
        #[arg(long)]
        tree: PathBuf,
        /// `mspecial:<m>`, `principal:<set>` or `gens:<set>;<set>;...`.
        #[arg(long)]
        family: String,
        #[arg(long)]
        set: String,
        /// Where to write the regressive-map witness.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Check a regressive-map witness.
    Verify {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        family: String,
        #[arg(long)]
        set: String,
        #[arg(long)]
        witness: PathBuf,
    },
    /// Iterate the diagonal-ideal operation and list the members.
    Iterate {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
}

#[derive(Args)]
struct NsArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    set: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    set: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Path,
    Random,
    Complete,
}

#[derive(Args)]
struct ArrowArgs {
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    poset: Option<PathBuf>,
    /// Goal length per color, e.g. `3,3`.
    #[arg(long, value_delimiter = ',', required = true)]
    goals: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Where to write a counterexample coloring.
    #[arg(long)]
    witness_out: Option<PathBuf>,
    /// Check that this coloring avoids every goal instead of searching.
    #[arg(long, conflicts_with_all = ["sweep", "witness_out"])]
    check_witness: Option<PathBuf>,
    /// Decide the relation over a family of generated trees.
    #[arg(long, value_enum, conflicts_with_all = ["tree", "poset"])]
    sweep: Option<SweepKind>,
    /// Size range for the sweep, e.g. `3-6`.
    #[arg(long, default_value = "2-5")]
    sizes: String,
    /// Seeds per size for random sweeps.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct MaxchainArgs {
    #[command(flatten)]
    ambient: Ambient,
    #[command(flatten)]
    coloring: ColoringInput,
    #[arg(long)]
    color: usize,
    /// Report whether the chain reaches this length.
    #[arg(long)]
    goal: Option<usize>,
}

#[derive(Subcommand)]
enum GoodCommand {
    /// Search a chain for a good subset.
    Build {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        coloring: ColoringInput,
        /// The chain to search; a whole path tree when absent.
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        rho: usize,
        /// Color sequence, innermost level first, e.g. `0,1`.
        #[arg(long, default_value = "")]
        sigma: String,
        #[command(flatten)]
        output: Output,
    },
    /// Check a decomposition file.
    Verify {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        coloring: ColoringInput,
        #[arg(long)]
        decomposition: PathBuf,
    },
    /// Homogeneous chain of one color from a decomposition.
    Extract {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        coloring: ColoringInput,
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long)]
        color: usize,
    },
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    tree: PathBuf,
    #[command(flatten)]
    coloring: ColoringInput,
    #[arg(long)]
    decomposition: PathBuf,
    #[arg(long)]
    xi: usize,
    #[arg(long)]
    m: usize,
    /// Node labels JSON giving g.
    #[arg(long, conflicts_with = "labels_mod")]
    labels: Option<PathBuf>,
    /// Use g(x) = x mod m.
    #[arg(long)]
    labels_mod: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct HierArgs {
    #[arg(long)]
    tree: PathBuf,
    #[command(flatten)]
    coloring: ColoringInput,
    /// Base ideal per node (`principal:<set>`, `gens:...`, or `full` for all
    /// subsets of the predecessors); one value applies to every node.
    #[arg(long = "base", required = true)]
    base: Vec<String>,
    /// Starting level; the whole tree when absent.
    #[arg(long)]
    s0: Option<String>,
    /// Longest sequence in the identity checks.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SigmaPrimeArgs {
    #[arg(long)]
    poset: PathBuf,
    /// Where to write the chain listed at each tree node.
    #[arg(long)]
    chains_out: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum OrdCommand {
    /// Print in normal form.
    Norm { a: String },
    Add { a: String, b: String },
    Cmp { a: String, b: String },
    Indecomposable { a: String },
    /// A goal rho with rho -> (xi)^1_m (least when xi is finite).
    Pigeonhole {
        #[arg(long)]
        xi: String,
        #[arg(long)]
        m: u64,
    },
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

type Res<T> = Result<T, Failure>;

fn domain<E: Display>(kind: &'static str) -> impl Fn(E) -> Failure {
    move |e| Failure {
        code: 1,
        kind,
        message: e.to_string(),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "usage",
        message: message.into(),
    }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        kind: "io",
        message: format!("{}: {e}", path.display()),
    })
}

fn write(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text).map_err(|e| Failure {
        code: 1,
        kind: "io",
        message: format!("{}: {e}", path.display()),
    })
}

fn emit(output: &Output, text: &str) -> Res<()> {
    match &output.out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn doc(mut v: Value) -> String {
    v.as_object_mut()
        .expect("reports are objects")
        .insert("format_version".into(), json!(FORMAT_VERSION));
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn load_tree(path: &Path) -> Res<FiniteTree> {
    io::tree_from_json(&read(path)?).map_err(domain("tree"))
}

fn load_poset(path: &Path) -> Res<FinitePoset> {
    io::poset_from_json(&read(path)?).map_err(domain("poset"))
}

enum Loaded {
    Tree(FiniteTree),
    Poset(FinitePoset),
}

impl Loaded {
    fn from_paths(tree: &Option<PathBuf>, poset: &Option<PathBuf>) -> Res<Self> {
        match (tree, poset) {
            (Some(t), None) => Ok(Loaded::Tree(load_tree(t)?)),
            (None, Some(p)) => Ok(Loaded::Poset(load_poset(p)?)),
            _ => Err(usage("give exactly one of --tree and --poset")),
        }
    }

    fn order(&self) -> &(dyn PartialOrder + Sync) {
        match self {
            Loaded::Tree(t) => t,
            Loaded::Poset(p) => p,
        }
    }
}

fn load_coloring(order: &dyn PartialOrder, input: &ColoringInput) -> Res<PairColoring> {
    io::coloring_from_csv(order, &read(&input.coloring)?, input.colors).map_err(domain("coloring"))
}

fn node_list(s: &str) -> Res<NodeSet> {
    parse_node_list(s).ok_or_else(|| usage(format!("bad node list {s:?}")))
}

fn color_list(s: &str) -> Res<Vec<usize>> {
    node_list_ordered(s)
}

fn node_list_ordered(s: &str) -> Res<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("bad list {s:?}"))))
        .collect()
}

fn family(spec: &str) -> Res<Family> {
    spec.parse().map_err(|e: arbor::ideal::IdealError| usage(e.to_string()))
}

fn guards() -> Res<Guards> {
    match std::env::var(GUARD_VAR) {
        Ok(spec) => Guards::parse(&spec).map_err(|e| usage(format!("{GUARD_VAR}: {e}"))),
        Err(_) => Ok(Guards::default()),
    }
}

fn need(v: Option<usize>, name: &str) -> Res<usize> {
    v.ok_or_else(|| usage(format!("--{name} is required for this kind")))
}

fn run_gen(a: GenArgs) -> Res<()> {
    let tree_kind = match a.kind {
        GenKind::Path => Some(TreeKind::Path { n: need(a.n, "n")? }),
        GenKind::Random => Some(TreeKind::Random { n: need(a.n, "n")? }),
        GenKind::Complete => Some(TreeKind::Complete {
            branching: need(a.branching, "branching")?,
            levels: need(a.levels, "levels")?,
        }),
        GenKind::Wq => Some(TreeKind::Wq {
            m: need(a.m, "m")?,
            d: need(a.d, "d")?,
        }),
        _ => None,
    };
    let text = match tree_kind {
        Some(kind) => {
            let tree = gen_tree(kind, a.seed).map_err(domain("tree"))?;
            match a.format {
                TreeFormat::Json => io::tree_to_json(&tree),
                TreeFormat::Dot => tree.to_dot(),
            }
        }
        None => {
            let n = need(a.n, "n")?;
            let p = match a.kind {
                GenKind::PosetChain => FinitePoset::chain(n),
                GenKind::PosetAntichain => FinitePoset::antichain(n),
                _ => FinitePoset::random(n, a.seed),
            };
            io::poset_to_json(&p)
        }
    };
    emit(&a.output, &text)
}

fn run_color(a: ColorArgs) -> Res<()> {
    let (order, c): (Box<dyn PartialOrder>, PairColoring) = match a.kind {
        ColorKind::Sierpinski => {
            let perm = node_list_ordered(a.perm.as_deref().ok_or_else(|| usage("--perm is required"))?)?;
            let c = sierpinski_coloring(&perm).map_err(domain("coloring"))?;
            (Box::new(FiniteTree::path(perm.len().max(1))), c)
        }
        ColorKind::Random => {
            let loaded = Loaded::from_paths(&a.tree, &a.poset)?;
            let c = random_coloring(loaded.order(), a.colors, a.seed).map_err(domain("coloring"))?;
            (into_box(loaded), c)
        }
        ColorKind::Galvin => {
            let loaded = Loaded::from_paths(&a.tree, &a.poset)?;
            let f = match (&a.labels, &loaded) {
                (Some(p), _) => {
                    let labels = io::labels_from_json(&read(p)?).map_err(domain("labels"))?;
                    SpecializingMap::new(loaded.order(), labels).map_err(domain("labels"))?
                }
                (None, Loaded::Tree(t)) => specializing_map(t),
                (None, Loaded::Poset(_)) => return Err(usage("--labels is required for posets")),
            };
            let c = galvin_coloring(loaded.order(), &f).map_err(domain("coloring"))?;
            (into_box(loaded), c)
        }
    };
    emit(&a.output, &io::coloring_to_csv(order.as_ref(), &c))
}

fn into_box(l: Loaded) -> Box<dyn PartialOrder> {
    match l {
        Loaded::Tree(t) => Box::new(t),
        Loaded::Poset(p) => Box::new(p),
    }
}

fn run_chi(a: ChiArgs) -> Res<()> {
    let tree = load_tree(&a.tree)?;
    let c = load_coloring(&tree, &a.coloring)?;
    let s = c_chi(&tree, &c, a.node, a.color).map_err(domain("coloring"))?;
    print!("{}", doc(json!({ "node": a.node, "color": a.color, "set": s })));
    Ok(())
}

fn run_diag(cmd: DiagCommand) -> Res<()> {
    let g = guards()?;
    match cmd {
        DiagCommand::Union { tree, sets } => {
            let tree = load_tree(&tree)?;
            let fam: Vec<NodeSet> = sets.split(';').map(node_list).collect::<Res<_>>()?;
            let u = diag_union(&tree, &fam).map_err(domain("ideal"))?;
            print!("{}", doc(json!({ "union": u })));
        }
        DiagCommand::Member {
            tree,
            family: f,
            set,
            witness_out,
        } => {
            let tree = load_tree(&tree)?;
            let r = in_diag_ideal(&tree, &node_list(&set)?, &family(&f)?, &g).map_err(domain("ideal"))?;
            report_membership(r, witness_out)?;
        }
        DiagCommand::Verify {
            tree,
            family: f,
            set,
            witness,
        } => {
            let tree = load_tree(&tree)?;
            let w = io::regressive_from_json(&read(&witness)?).map_err(domain("witness"))?;
            let x = node_list(&set)?;
            let verdict = w.check_witness(&tree, &x, &family(&f)?);
            print_verdict(verdict.map_err(|e| e.to_string()))?;
        }
        DiagCommand::Iterate { tree, family: f, rounds } => {
            let tree = load_tree(&tree)?;
            let fam = diag_iterate(&tree, &family(&f)?, rounds, &g).map_err(domain("ideal"))?;
            let members: Vec<NodeSet> = fam.members().collect();
            print!("{}", doc(json!({ "rounds": rounds, "count": members.len(), "members": members })));
        }
    }
    Ok(())
}

fn report_membership(r: arbor::ideal::Membership, witness_out: Option<PathBuf>) -> Res<()> {
    let mut path = Value::Null;
    if let (Some(w), Some(p)) = (&r.witness, &witness_out) {
        write(p, &io::regressive_to_json(w))?;
        path = json!(p.display().to_string());
    }
    let witness: Value = match (&r.witness, &witness_out) {
        (Some(w), None) => json!(w.assignment.iter().map(|(a, b)| [*a, *b]).collect::<Vec<_>>()),
        _ => Value::Null,
    };
    print!("{}", doc(json!({ "member": r.member, "witness_path": path, "witness": witness })));
    Ok(())
}

/// Prints a verdict; an invalid one also fails the command.
fn print_verdict(result: Result<(), String>) -> Res<()> {
    match result {
        Ok(()) => {
            print!("{}", doc(json!({ "verdict": "valid" })));
            Ok(())
        }
        Err(reason) => {
            print!("{}", doc(json!({ "verdict": "invalid", "reason": reason })));
            Err(Failure {
                code: 1,
                kind: "invalid_witness",
                message: reason,
            })
        }
    }
}

fn run_ns(a: NsArgs) -> Res<()> {
    let tree = load_tree(&a.tree)?;
    let r = ns_member(&tree, &node_list(&a.set)?, a.m, &guards()?).map_err(domain("ideal"))?;
    report_membership(r, a.witness_out)
}

fn run_cover(a: CoverArgs) -> Res<()> {
    let tree = load_tree(&a.tree)?;
    let x = node_list(&a.set)?;
    tree.check_set(&x).map_err(domain("tree"))?;
    let c = special_cover(&tree, &x);
    print!("{}", doc(json!({ "min_count": c.min_count, "cover": c.cover })));
    Ok(())
}

fn parse_range(s: &str) -> Res<(usize, usize)> {
    let bad = || usage(format!("bad size range {s:?}; expected like 3-6"));
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn run_arrow(a: ArrowArgs) -> Res<()> {
    let goal = ArrowGoal::new(a.goals.clone()).map_err(|e| usage(e.to_string()))?;
    let g = guards()?;
    if let Some(kind) = a.sweep {
        return run_sweep(kind, &a, &goal, &g);
    }
    let loaded = Loaded::from_paths(&a.tree, &a.poset)?;
    let order = loaded.order();
    if let Some(path) = &a.check_witness {
        let c = io::coloring_from_csv(order, &read(path)?, Some(goal.colors())).map_err(domain("coloring"))?;
        let mut reached = None;
        for (chi, &l) in goal.goals().iter().enumerate() {
            let found = max_homog_chain(order, &c, chi).map_err(domain("ramsey"))?;
            if found.length >= l {
                reached = Some(format!("color {chi} has a homogeneous chain of length {}", found.length));
                break;
            }
        }
        return print_verdict(reached.map_or(Ok(()), Err));
    }
    let start = Instant::now();
    let v = arrows_decide(order, &goal, &g, a.workers).map_err(domain("ramsey"))?;
    let elapsed = start.elapsed().as_millis() as u64;
    let mut witness_path = Value::Null;
    let mut inline = Value::Null;
    if let Some(w) = &v.witness_coloring {
        let csv = io::coloring_to_csv(order, w);
        let target = a.witness_out.clone().or_else(|| {
            a.output.out.as_ref().map(|o| o.with_extension("witness.csv"))
        });
        match target {
            Some(p) => {
                write(&p, &csv)?;
                witness_path = json!(p.display().to_string());
            }
            None => inline = json!(w.triples(order)),
        }
    }
    let chain = v
        .witness_chain
        .as_ref()
        .map(|(s, chi)| json!({ "chain": s, "color": chi }))
        .unwrap_or(Value::Null);
    let report = json!({
        "holds": v.holds,
        "witness_coloring_path": witness_path,
        "witness_coloring": inline,
        "witness_chain": chain,
        "elapsed_ms": elapsed,
        "colorings_examined": v.colorings_examined,
        "goals": goal.goals(),
    });
    emit(&a.output, &doc(report))
}

fn run_sweep(kind: SweepKind, a: &ArrowArgs, goal: &ArrowGoal, g: &Guards) -> Res<()> {
    let (lo, hi) = parse_range(&a.sizes)?;
    let mut rows = Vec::new();
    for n in lo..=hi {
        let seeds: Vec<u64> = match kind {
            SweepKind::Random => (0..a.seeds).collect(),
            _ => vec![0],
        };
        for seed in seeds {
            let tree_kind = match kind {
                SweepKind::Path => TreeKind::Path { n },
                SweepKind::Random => TreeKind::Random { n },
                SweepKind::Complete => TreeKind::Complete { branching: 2, levels: n },
            };
            let tree = gen_tree(tree_kind, seed).map_err(domain("tree"))?;
            let mut row = json!({
                "size": n,
                "seed": seed,
                "nodes": tree.len(),
                "height": tree.height(),
                "leaves": tree.leaves().count(),
                "pairs": tree.comparable_pairs().len(),
                "parent": tree.parents(),
            });
            match arrows_decide(&tree, goal, g, a.workers) {
                Ok(v) => {
                    row["holds"] = json!(v.holds);
                    row["colorings_examined"] = json!(v.colorings_examined);
                }
                Err(e) => {
                    row["holds"] = Value::Null;
                    row["error"] = json!(e.to_string());
                }
            }
            rows.push(row);
        }
    }
    emit(&a.output, &doc(json!({ "goals": goal.goals(), "rows": rows })))
}

fn run_maxchain(a: MaxchainArgs) -> Res<()> {
    let loaded = Loaded::from_paths(&a.ambient.tree, &a.ambient.poset)?;
    let order = loaded.order();
    let c = load_coloring(order, &a.coloring)?;
    let r = max_homog_chain(order, &c, a.color).map_err(domain("ramsey"))?;
    let mut report = json!({ "color": a.color, "length": r.length, "chain": r.chain });
    if let Some(goal) = a.goal {
        report["goal"] = json!(goal);
        report["verdict"] = json!(if r.length >= goal { "valid" } else { "too_short" });
    }
    print!("{}", doc(report));
    Ok(())
}

fn run_good(cmd: GoodCommand) -> Res<()> {
    let g = guards()?;
    match cmd {
        GoodCommand::Build {
            tree,
            coloring,
            set,
            rho,
            sigma,
            output,
        } => {
            let tree = load_tree(&tree)?;
            let c = load_coloring(&tree, &coloring)?;
            let x = match set {
                Some(s) => node_list(&s)?,
                None => tree.nodes(),
            };
            let sigma = color_list(&sigma)?;
            let d = build_good(&tree, &c, &x, rho, &sigma, &g).map_err(domain("goodsets"))?;
            match d {
                Some(d) => {
                    let text = io::decomposition_to_json(rho, &sigma, &d);
                    match &output.out {
                        Some(p) => {
                            write(p, &text)?;
                            print!("{}", doc(json!({ "found": true, "path": p.display().to_string() })));
                        }
                        None => print!("{text}"),
                    }
                }
                None => print!("{}", doc(json!({ "found": false }))),
            }
        }
        GoodCommand::Verify {
            tree,
            coloring,
            decomposition,
        } => {
            let tree = load_tree(&tree)?;
            let c = load_coloring(&tree, &coloring)?;
            let d = io::decomposition_from_json(&read(&decomposition)?).map_err(domain("decomposition"))?;
            let verdict = match is_good(&tree, &c, &d.decomposition, d.rho, &d.sigma) {
                Ok(true) => Ok(()),
                Ok(false) => Err("blocks are out of order or joined by the wrong color".to_string()),
                Err(e) => Err(e.to_string()),
            };
            print_verdict(verdict)?;
        }
        GoodCommand::Extract {
            tree,
            coloring,
            decomposition,
            color,
        } => {
            let tree = load_tree(&tree)?;
            let c = load_coloring(&tree, &coloring)?;
            let d = io::decomposition_from_json(&read(&decomposition)?).map_err(domain("decomposition"))?;
            let chain = extract_homog(&d.decomposition, &c, color).map_err(domain("goodsets"))?;
            print!("{}", doc(json!({ "color": color, "chain": chain })));
        }
    }
    Ok(())
}

fn run_refine(a: RefineArgs) -> Res<()> {
    let tree = load_tree(&a.tree)?;
    let c = load_coloring(&tree, &a.coloring)?;
    let d = io::decomposition_from_json(&read(&a.decomposition)?).map_err(domain("decomposition"))?;
    let labels: Vec<usize> = match (&a.labels, a.labels_mod) {
        (Some(p), false) => io::labels_from_json(&read(p)?).map_err(domain("labels"))?,
        (None, true) => (0..tree.len()).map(|x| x % a.m.max(1)).collect(),
        _ => return Err(usage("give --labels or --labels-mod")),
    };
    if labels.len() != tree.len() {
        return Err(domain("labels")(format!("expected {} labels, got {}", tree.len(), labels.len())));
    }
    let r = refine_good(&tree, &c, &d.decomposition, &|x| labels[x], a.xi, a.m).map_err(domain("goodsets"))?;
    let text = io::decomposition_to_json(a.xi, &d.sigma, &r.refined);
    match &a.output.out {
        Some(p) => {
            write(p, &text)?;
            print!("{}", doc(json!({ "g_color": r.g_color, "path": p.display().to_string() })));
        }
        None => print!("{}", doc(json!({ "g_color": r.g_color, "refined": r.refined }))),
    }
    Ok(())
}

fn run_hier(a: HierArgs) -> Res<()> {
    let tree = load_tree(&a.tree)?;
    let c = load_coloring(&tree, &a.coloring)?;
    let n = tree.len();
    let specs: Vec<&String> = match a.base.len() {
        1 => vec![&a.base[0]; n],
        len if len == n => a.base.iter().collect(),
        len => return Err(usage(format!("need 1 or {n} --base values, got {len}"))),
    };
    let base: Vec<Family> = specs
        .iter()
        .enumerate()
        .map(|(t, s)| {
            if s.trim() == "full" {
                Ok(Family::Principal(tree.pred(t).clone()))
            } else {
                family(s)
            }
        })
        .collect::<Res<_>>()?;
    let s0 = match &a.s0 {
        Some(s) => node_list(s)?,
        None => tree.nodes(),
    };
    let cfg = HierarchyConfig::new(tree, c, base, s0.clone()).map_err(domain("hierarchy"))?;
    let h = HierarchySession::new(cfg);
    let levels = h.s_sequence(a.depth + 1);
    let mut sigma_sets = Vec::new();
    for t in 0..n {
        let sets = h.sigma_set(t, &s0).map_err(domain("hierarchy"))?;
        sigma_sets.push(json!({ "t": t, "sigmas": sets }));
    }
    let rows = identity_report(&h, a.depth);
    let report = json!({
        "levels": levels,
        "sigma_sets": sigma_sets,
        "identities": rows,
        "inclusion_holds": rows.iter().all(|r| r.inclusion),
        "equality_holds": rows.iter().all(|r| r.equality),
    });
    emit(&a.output, &doc(report))
}

fn run_sigmaprime(a: SigmaPrimeArgs) -> Res<()> {
    let p = load_poset(&a.poset)?;
    let sp = sigma_prime(&p, guards()?.chains).map_err(domain("poset"))?;
    if let Some(path) = &a.chains_out {
        write(path, &doc(json!({ "chains": sp.chains })))?;
    }
    emit(&a.output, &io::tree_to_json(&sp.tree))
}

fn ordinal(s: &str) -> Res<Ordinal> {
    s.parse().map_err(domain("ordinal"))
}

fn run_ord(cmd: OrdCommand) -> Res<()> {
    let report = match cmd {
        OrdCommand::Norm { a } => json!({ "value": ordinal(&a)?.to_string() }),
        OrdCommand::Add { a, b } => json!({ "value": ordinal(&a)?.add(&ordinal(&b)?).to_string() }),
        OrdCommand::Cmp { a, b } => {
            let ord = match ordinal(&a)?.cmp(&ordinal(&b)?) {
                std::cmp::Ordering::Less => "less",
                std::cmp::Ordering::Equal => "equal",
                std::cmp::Ordering::Greater => "greater",
            };
            json!({ "ordering": ord })
        }
        OrdCommand::Indecomposable { a } => {
            json!({ "indecomposable": ordinal(&a)?.is_indecomposable().map_err(domain("ordinal"))? })
        }
        OrdCommand::Pigeonhole { xi, m } => {
            let xi = ordinal(&xi)?;
            let rho = pigeonhole_goal(&xi, m).map_err(domain("ordinal"))?;
            let checked = match (rho.as_finite(), xi.as_finite()) {
                (Some(r), Some(x)) => json!(verify_pigeonhole_finite(r, x, m)),
                _ => Value::Null,
            };
            json!({ "rho": rho.to_string(), "verified": checked })
        }
    };
    print!("{}", doc(report));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Color(a) => run_color(a),
        Command::Chi(a) => run_chi(a),
        Command::Diag(c) => run_diag(c),
        Command::Nsmember(a) => run_ns(a),
        Command::Cover(a) => run_cover(a),
        Command::Arrow(a) => run_arrow(a),
        Command::Maxchain(a) => run_maxchain(a),
        Command::Good(c) => run_good(c),
        Command::Refine(a) => run_refine(a),
        Command::Hier(a) => run_hier(a),
        Command::Sigmaprime(a) => run_sigmaprime(a),
        Command::Ord(c) => run_ord(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", doc(json!({ "error": f.kind, "message": f.message })).trim_end());
            ExitCode::from(f.code)
        }
    }
}
