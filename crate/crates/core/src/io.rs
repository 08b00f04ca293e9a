//! File formats: trees and posets as JSON, pair colorings as CSV, and JSON
//! for decompositions, node labels and regressive maps. Every JSON document
//! carries `format_version` (currently 1); readers also accept documents
//! without it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{ColoringError, PairColoring};
use crate::goodsets::GoodDecomposition;
use crate::ideal::RegressiveMap;
use crate::order::PartialOrder;
use crate::poset::{FinitePoset, PosetError};
use crate::tree::{FiniteTree, TreeError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u32),
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
}

fn check_version(v: Option<u32>) -> Result<(), FormatError> {
    match v {
        None | Some(FORMAT_VERSION) => Ok(()),
        Some(v) => Err(FormatError::UnsupportedVersion(v)),
    }
}

fn to_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    #[serde(default)]
    format_version: Option<u32>,
    parent: Vec<Option<usize>>,
}

pub fn tree_to_json(tree: &FiniteTree) -> String {
    to_line(&TreeDoc {
        format_version: Some(FORMAT_VERSION),
        parent: tree.parents().to_vec(),
    })
}

pub fn tree_from_json(text: &str) -> Result<FiniteTree, FormatError> {
    let doc: TreeDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    Ok(FiniteTree::from_parents(doc.parent)?)
}

#[derive(Serialize, Deserialize)]
struct PosetDoc {
    #[serde(default)]
    format_version: Option<u32>,
    n: usize,
    less: Vec<(usize, usize)>,
}

/// Writes the full (transitively closed) strict order.
pub fn poset_to_json(p: &FinitePoset) -> String {
    to_line(&PosetDoc {
        format_version: Some(FORMAT_VERSION),
        n: p.len(),
        less: p.less_pairs(),
    })
}

/// Reads a strict order; the listed pairs are closed under transitivity.
pub fn poset_from_json(text: &str) -> Result<FinitePoset, FormatError> {
    let doc: PosetDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    Ok(FinitePoset::from_generating_relation(doc.n, &doc.less)?)
}

/// One `u,v,color` row per comparable pair with `u` below `v`, after a
/// header line.
pub fn coloring_to_csv<O: PartialOrder + ?Sized>(order: &O, c: &PairColoring) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["u", "v", "color"]).expect("in-memory write");
    for (u, v, color) in c.triples(order) {
        w.serialize((u, v, color)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("ASCII output")
}

/// Reads `u,v,color` rows, with or without the header. The number of colors
/// is `colors` when given, otherwise one more than the largest color seen.
pub fn coloring_from_csv<O: PartialOrder + ?Sized>(
    order: &O,
    text: &str,
    colors: Option<usize>,
) -> Result<PairColoring, FormatError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if i == 0 && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case("u")) {
            continue;
        }
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(FormatError::Row {
                line,
                reason: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let field = |j: usize| {
            rec[j].parse::<usize>().map_err(|_| FormatError::Row {
                line,
                reason: format!("{:?} is not a nonnegative integer", &rec[j]),
            })
        };
        rows.push((field(0)?, field(1)?, field(2)?));
    }
    let k = colors.unwrap_or_else(|| rows.iter().map(|r| r.2 + 1).max().unwrap_or(1));
    Ok(PairColoring::from_triples(order, k, &rows)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    #[serde(default)]
    pub format_version: Option<u32>,
    pub rho: usize,
    pub sigma: Vec<usize>,
    pub decomposition: GoodDecomposition,
}

pub fn decomposition_to_json(rho: usize, sigma: &[usize], d: &GoodDecomposition) -> String {
    to_line(&DecompositionDoc {
        format_version: Some(FORMAT_VERSION),
        rho,
        sigma: sigma.to_vec(),
        decomposition: d.clone(),
    })
}

pub fn decomposition_from_json(text: &str) -> Result<DecompositionDoc, FormatError> {
    let doc: DecompositionDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    Ok(doc)
}

#[derive(Serialize, Deserialize)]
struct LabelsDoc {
    #[serde(default)]
    format_version: Option<u32>,
    labels: Vec<usize>,
}

/// A label per node, e.g. a specializing map or a coloring of nodes.
pub fn labels_to_json(labels: &[usize]) -> String {
    to_line(&LabelsDoc {
        format_version: Some(FORMAT_VERSION),
        labels: labels.to_vec(),
    })
}

pub fn labels_from_json(text: &str) -> Result<Vec<usize>, FormatError> {
    let doc: LabelsDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    Ok(doc.labels)
}

#[derive(Serialize, Deserialize)]
struct MapDoc {
    #[serde(default)]
    format_version: Option<u32>,
    /// `[node, image]` pairs.
    map: Vec<(usize, usize)>,
}

pub fn regressive_to_json(f: &RegressiveMap) -> String {
    to_line(&MapDoc {
        format_version: Some(FORMAT_VERSION),
        map: f.assignment.iter().map(|(&a, &b)| (a, b)).collect(),
    })
}

pub fn regressive_from_json(text: &str) -> Result<RegressiveMap, FormatError> {
    let doc: MapDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    Ok(RegressiveMap {
        assignment: doc.map.into_iter().collect(),
    })
}
