//! Distance matrices over witnesses and commentary pseudo-witnesses, and the
//! two classic distance-based tree builders: UPGMA and neighbor joining.
//!
//! Both builders are deterministic: ties are broken on taxon labels (a
//! cluster is represented by its lexicographically smallest leaf label), and
//! internal arithmetic runs in label order, so permuting the rows of the
//! input matrix never changes the output.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::collation::{self, tokenize, TokenSequence};
use crate::corpus::{Corpus, CorpusError, UnitId, WitnessKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhyloError {
    #[error("need at least {needed} taxa, found {found}")]
    InsufficientTaxa { needed: usize, found: usize },
    #[error("taxa `{a}` and `{b}` share no unit with content")]
    InsufficientOverlap { a: String, b: String },
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("taxon label `{0}` is used by both a witness and a commentary")]
    TaxonCollision(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl PhyloError {
    pub fn code(&self) -> &'static str {
        match self {
            PhyloError::InsufficientTaxa { .. } => "InsufficientTaxa",
            PhyloError::InsufficientOverlap { .. } => "InsufficientOverlap",
            PhyloError::InvalidMatrix(_) => "InvalidMatrix",
            PhyloError::TaxonCollision(_) => "TaxonCollision",
            PhyloError::Corpus(e) => e.code(),
        }
    }
}

/// Symmetric, zero-diagonal matrix of non-negative distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    taxa: Vec<String>,
    d: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(taxa: Vec<String>, d: Vec<Vec<f64>>) -> Result<Self, PhyloError> {
        let n = taxa.len();
        if n < 2 {
            return Err(PhyloError::InsufficientTaxa { needed: 2, found: n });
        }
        let mut sorted = taxa.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(PhyloError::InvalidMatrix(format!("duplicate taxon `{}`", w[0])));
        }
        if d.len() != n || d.iter().any(|row| row.len() != n) {
            return Err(PhyloError::InvalidMatrix(format!("expected a {n}x{n} matrix")));
        }
        for i in 0..n {
            if d[i][i] != 0.0 {
                return Err(PhyloError::InvalidMatrix(format!("non-zero diagonal at `{}`", taxa[i])));
            }
            for j in 0..n {
                let v = d[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(PhyloError::InvalidMatrix(format!("bad distance {v} at ({i},{j})")));
                }
                if v != d[j][i] {
                    return Err(PhyloError::InvalidMatrix(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix { taxa, d })
    }

    /// Builds a matrix from the upper triangle of pairwise distances.
    pub fn from_pairs<F>(taxa: Vec<String>, mut dist: F) -> Result<Self, PhyloError>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = taxa.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = dist(i, j);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        Self::new(taxa, d)
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn len(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxa.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn distance(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.taxa.iter().position(|t| t == a)?;
        let j = self.taxa.iter().position(|t| t == b)?;
        Some(self.d[i][j])
    }

    /// CSV with a header row and a header column of taxon labels.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("").chain(self.taxa.iter().map(String::as_str));
        w.write_record(header).expect("in-memory csv");
        for (label, row) in self.taxa.iter().zip(&self.d) {
            let cells = std::iter::once(label.clone()).chain(row.iter().map(|&v| format_length(v)));
            w.write_record(cells).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub label: Option<String>,
    pub branch_length: f64,
    pub children: Vec<usize>,
}

/// A tree stored as an arena of nodes. UPGMA trees are rooted; NJ trees are
/// unrooted and carry a trifurcating root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhyloTree {
    nodes: Vec<TreeNode>,
    root: usize,
    rooted: bool,
    /// Set when neighbor joining produced a negative branch length that was
    /// clamped to zero.
    clamped_negative: bool,
}

impl PhyloTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn is_rooted(&self) -> bool {
        self.rooted
    }

    pub fn clamped_negative(&self) -> bool {
        self.clamped_negative
    }

    /// Leaf labels in Newick (left to right) order.
    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaf_depths().into_iter().map(|(l, _)| l).collect()
    }

    /// Sum of branch lengths from the root to every leaf.
    pub fn leaf_depths(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, 0.0)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id];
            if node.children.is_empty() {
                out.push((node.label.clone().unwrap_or_default(), depth));
            }
            for &c in node.children.iter().rev() {
                stack.push((c, depth + self.nodes[c].branch_length));
            }
        }
        out
    }

    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root, &mut out);
        out.push(';');
        out
    }

    fn write_node(&self, id: usize, out: &mut String) {
        let node = &self.nodes[id];
        if !node.children.is_empty() {
            out.push('(');
            for (k, &c) in node.children.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                self.write_node(c, out);
            }
            out.push(')');
        }
        if let Some(label) = &node.label {
            out.push_str(&quote_label(label));
        }
        if id != self.root {
            let _ = write!(out, ":{}", format_length(node.branch_length));
        }
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_newick())
    }
}

/// Newick rendering of a tree.
pub fn to_newick(tree: &PhyloTree) -> String {
    tree.to_newick()
}

/// Six decimal places with trailing zeros (and a bare point) trimmed.
pub fn format_length(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn quote_label(label: &str) -> String {
    let needs_quotes = label.chars().any(|c| "(),:;'".contains(c) || c.is_whitespace());
    if needs_quotes {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_owned()
    }
}

/// Agglomerative clusters shared by both builders.
struct Clusters {
    nodes: Vec<TreeNode>,
    /// Smallest leaf label per node.
    keys: Vec<String>,
}

impl Clusters {
    fn with_leaves(labels: &[String]) -> Self {
        let nodes = labels
            .iter()
            .map(|l| TreeNode { label: Some(l.clone()), branch_length: 0.0, children: Vec::new() })
            .collect();
        Clusters { nodes, keys: labels.to_vec() }
    }

    /// Adds an internal node over `children`, ordered by key.
    fn join(&mut self, mut children: Vec<(usize, f64)>) -> usize {
        children.sort_by(|a, b| self.keys[a.0].cmp(&self.keys[b.0]));
        let key = self.keys[children[0].0].clone();
        for &(c, len) in &children {
            self.nodes[c].branch_length = len;
        }
        self.nodes.push(TreeNode { label: None, branch_length: 0.0, children: children.iter().map(|c| c.0).collect() });
        self.keys.push(key);
        self.nodes.len() - 1
    }
}

/// Leaf indices sorted by label, so that all arithmetic runs in label order.
fn label_order(m: &DistanceMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_by(|&a, &b| m.taxa[a].cmp(&m.taxa[b]));
    order
}

/// UPGMA: repeatedly merge the closest pair of clusters; the distance from
/// the merged cluster to any other is the size-weighted mean of its parts.
/// Each internal node sits at half its merge distance.
pub fn upgma(m: &DistanceMatrix) -> PhyloTree {
    let order = label_order(m);
    let labels: Vec<String> = order.iter().map(|&i| m.taxa[i].clone()).collect();
    let n = labels.len();
    let mut clusters = Clusters::with_leaves(&labels);

    // Distances indexed by node id; rows grow as clusters are created.
    let mut dist: Vec<Vec<f64>> = vec![vec![0.0; 2 * n - 1]; 2 * n - 1];
    for a in 0..n {
        for b in 0..n {
            dist[a][b] = m.d[order[a]][order[b]];
        }
    }
    let mut size = vec![1usize; 2 * n - 1];
    let mut height = vec![0.0f64; 2 * n - 1];
    let mut active: Vec<usize> = (0..n).collect();

    while active.len() > 1 {
        let (p, q) = closest_pair(&active, |a, b| dist[a][b], &clusters.keys);
        let h = dist[p][q] / 2.0;
        let node = clusters.join(vec![(p, (h - height[p]).max(0.0)), (q, (h - height[q]).max(0.0))]);
        height[node] = h.max(height[p]).max(height[q]);
        size[node] = size[p] + size[q];
        active.retain(|&c| c != p && c != q);
        for &k in &active {
            let v = (size[p] as f64 * dist[p][k] + size[q] as f64 * dist[q][k]) / size[node] as f64;
            dist[node][k] = v;
            dist[k][node] = v;
        }
        let slot = active.partition_point(|&c| clusters.keys[c] < clusters.keys[node]);
        active.insert(slot, node);
    }

    PhyloTree { root: active[0], nodes: clusters.nodes, rooted: true, clamped_negative: false }
}

/// Pair minimising `score`, ties going to the lexicographically smallest
/// (key, key) pair. `active` must be sorted by key.
fn closest_pair(active: &[usize], mut score: impl FnMut(usize, usize) -> f64, keys: &[String]) -> (usize, usize) {
    let mut best: Option<(f64, usize, usize)> = None;
    for (x, &a) in active.iter().enumerate() {
        for &b in &active[x + 1..] {
            let s = score(a, b);
            let better = match best {
                None => true,
                Some((bs, ba, bb)) => s < bs || (s == bs && (&keys[a], &keys[b]) < (&keys[ba], &keys[bb])),
            };
            if better {
                best = Some((s, a, b));
            }
        }
    }
    let (_, a, b) = best.expect("at least two active clusters");
    (a, b)
}

/// Neighbor joining with the Q-criterion. The final three clusters are
/// joined at a trifurcating root using the three-point formulas. Negative
/// branch lengths are clamped to zero and flagged on the tree.
pub fn neighbor_joining(m: &DistanceMatrix) -> Result<PhyloTree, PhyloError> {
    if m.len() < 3 {
        return Err(PhyloError::InsufficientTaxa { needed: 3, found: m.len() });
    }
    let order = label_order(m);
    let labels: Vec<String> = order.iter().map(|&i| m.taxa[i].clone()).collect();
    let n = labels.len();
    let mut clusters = Clusters::with_leaves(&labels);
    let total = 2 * n - 2;
    let mut dist: Vec<Vec<f64>> = vec![vec![0.0; total]; total];
    for a in 0..n {
        for b in 0..n {
            dist[a][b] = m.d[order[a]][order[b]];
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut clamped = false;
    let mut clamp = |x: f64| {
        if x < 0.0 {
            clamped = true;
            0.0
        } else {
            x
        }
    };

    while active.len() > 3 {
        let r = active.len() as f64;
        let sums: BTreeMap<usize, f64> =
            active.iter().map(|&i| (i, active.iter().map(|&k| dist[i][k]).sum())).collect();
        let (i, j) = closest_pair(&active, |a, b| (r - 2.0) * dist[a][b] - sums[&a] - sums[&b], &clusters.keys);
        let dij = dist[i][j];
        let li = dij / 2.0 + (sums[&i] - sums[&j]) / (2.0 * (r - 2.0));
        let lj = dij - li;
        let node = clusters.join(vec![(i, clamp(li)), (j, clamp(lj))]);
        active.retain(|&c| c != i && c != j);
        for &k in &active {
            let v = (dist[i][k] + dist[j][k] - dij) / 2.0;
            dist[node][k] = v;
            dist[k][node] = v;
        }
        let slot = active.partition_point(|&c| clusters.keys[c] < clusters.keys[node]);
        active.insert(slot, node);
    }

    let (a, b, c) = (active[0], active[1], active[2]);
    let la = (dist[a][b] + dist[a][c] - dist[b][c]) / 2.0;
    let lb = (dist[a][b] + dist[b][c] - dist[a][c]) / 2.0;
    let lc = (dist[a][c] + dist[b][c] - dist[a][b]) / 2.0;
    let root = clusters.join(vec![(a, clamp(la)), (b, clamp(lb)), (c, clamp(lc))]);

    Ok(PhyloTree { root, nodes: clusters.nodes, rooted: false, clamped_negative: clamped })
}

/// Which taxa enter a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceSelector {
    /// Hand-entered witnesses: manuscripts and printed editions.
    #[default]
    ManuscriptsOnly,
    ManuscriptsAndCommentaries,
    CommentariesOnly,
}

impl SourceSelector {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceSelector::ManuscriptsOnly => "manuscripts",
            SourceSelector::ManuscriptsAndCommentaries => "both",
            SourceSelector::CommentariesOnly => "commentaries",
        }
    }

    fn includes_witnesses(self) -> bool {
        self != SourceSelector::CommentariesOnly
    }

    fn includes_commentaries(self) -> bool {
        self != SourceSelector::ManuscriptsOnly
    }
}

impl std::str::FromStr for SourceSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manuscripts" | "ManuscriptsOnly" => Ok(SourceSelector::ManuscriptsOnly),
            "both" | "ManuscriptsAndCommentaries" => Ok(SourceSelector::ManuscriptsAndCommentaries),
            "commentaries" | "CommentariesOnly" => Ok(SourceSelector::CommentariesOnly),
            other => Err(format!("unknown source selector `{other}` (manuscripts|commentaries|both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreeMethod {
    #[default]
    Upgma,
    NeighborJoining,
}

impl TreeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeMethod::Upgma => "upgma",
            TreeMethod::NeighborJoining => "nj",
        }
    }
}

impl std::str::FromStr for TreeMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upgma" | "UPGMA" => Ok(TreeMethod::Upgma),
            "nj" | "NJ" => Ok(TreeMethod::NeighborJoining),
            other => Err(format!("unknown tree method `{other}` (upgma|nj)")),
        }
    }
}

/// How a pair of token sequences is turned into a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Token edit distance divided by the longer length.
    #[default]
    Normalized,
    /// Plain token edit distance.
    Raw,
}

impl DistanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::Normalized => "normalized",
            DistanceMode::Raw => "raw",
        }
    }

    pub fn measure(self, a: &TokenSequence, b: &TokenSequence) -> f64 {
        match self {
            DistanceMode::Normalized => collation::normalized_distance(a.as_slice(), b.as_slice()),
            DistanceMode::Raw => collation::edit_distance(a.as_slice(), b.as_slice()) as f64,
        }
    }
}

impl std::str::FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(DistanceMode::Normalized),
            "raw" => Ok(DistanceMode::Raw),
            other => Err(format!("unknown distance `{other}` (normalized|raw)")),
        }
    }
}

macro_rules! string_serde {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(de::Error::custom)
            }
        }
    )*};
}

string_serde!(SourceSelector, TreeMethod, DistanceMode);

/// Units a tree is computed over; serialized as `"all"` or a list of ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum UnitScope {
    #[default]
    All,
    Units(Vec<UnitId>),
}

impl UnitScope {
    pub fn as_slice(&self) -> Option<&[UnitId]> {
        match self {
            UnitScope::All => None,
            UnitScope::Units(ids) => Some(ids),
        }
    }
}

impl Serialize for UnitScope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            UnitScope::All => s.serialize_str("all"),
            UnitScope::Units(ids) => ids.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for UnitScope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(Vec<UnitId>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "all" => Ok(UnitScope::All),
            Raw::Word(w) => Err(de::Error::custom(format!("expected \"all\" or a list of unit ids, got `{w}`"))),
            Raw::List(ids) => Ok(UnitScope::Units(ids)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TreeRequest {
    #[serde(default)]
    pub sources: SourceSelector,
    #[serde(default)]
    pub method: TreeMethod,
    #[serde(default)]
    pub units: UnitScope,
    #[serde(default)]
    pub distance: DistanceMode,
}

/// One taxon with its token sequence per unit (units without content are
/// absent).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Taxon {
    pub label: String,
    pub kind: WitnessKind,
    pub sequences: BTreeMap<UnitId, TokenSequence>,
}

/// Resolves the taxa a request selects: every hand-entered witness with at
/// least one reading in scope, and/or one pseudo-witness per commentary
/// label with evidence in scope.
pub fn collect_taxa(corpus: &Corpus, work_id: &str, request: &TreeRequest) -> Result<Vec<Taxon>, PhyloError> {
    let work = corpus.work(work_id)?;
    let scope: Vec<UnitId> = match &request.units {
        UnitScope::All => work.units.iter().map(|u| u.id.clone()).collect(),
        UnitScope::Units(ids) => {
            for id in ids {
                work.unit(id)?;
            }
            ids.clone()
        }
    };

    let mut taxa: Vec<Taxon> = Vec::new();
    if request.sources.includes_witnesses() {
        let mut by_witness: BTreeMap<String, BTreeMap<UnitId, TokenSequence>> = BTreeMap::new();
        for id in &scope {
            for reading in &work.unit(id)?.readings {
                let seq = tokenize(&reading.text, &work.script).with_source(reading.witness_id.clone());
                let entry = by_witness.entry(reading.witness_id.clone()).or_default();
                if !seq.is_empty() {
                    entry.insert(id.clone(), seq);
                }
            }
        }
        for (witness_id, sequences) in by_witness {
            let witness = corpus.witness(&witness_id)?;
            taxa.push(Taxon { label: witness_id, kind: witness.kind, sequences });
        }
    }
    if request.sources.includes_commentaries() {
        let mut labels = work.layer_labels();
        labels.sort();
        for label in labels {
            if taxa.iter().any(|t| t.label == label) {
                return Err(PhyloError::TaxonCollision(label));
            }
            let pseudo = collation::pseudo_witness(corpus, &label, work_id, Some(&scope))?;
            let sequences: BTreeMap<_, _> = pseudo.sequences.into_iter().filter(|(_, s)| !s.is_empty()).collect();
            // Like a witness without readings, a commentary without evidence
            // in scope is not a taxon.
            if !sequences.is_empty() {
                taxa.push(Taxon { label, kind: WitnessKind::CommentaryDerived, sequences });
            }
        }
    }
    Ok(taxa)
}

/// Pairwise distance between two taxa: the mean over shared units of the
/// per-unit distance.
pub fn taxon_distance(a: &Taxon, b: &Taxon, mode: DistanceMode) -> Result<f64, PhyloError> {
    let mut total = 0.0;
    let mut shared = 0usize;
    for (unit, seq_a) in &a.sequences {
        if let Some(seq_b) = b.sequences.get(unit) {
            total += mode.measure(seq_a, seq_b);
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(PhyloError::InsufficientOverlap { a: a.label.clone(), b: b.label.clone() });
    }
    Ok(total / shared as f64)
}

pub fn build_matrix(corpus: &Corpus, work_id: &str, request: &TreeRequest) -> Result<DistanceMatrix, PhyloError> {
    let taxa = collect_taxa(corpus, work_id, request)?;
    matrix_from_taxa(&taxa, request.distance)
}

pub fn matrix_from_taxa(taxa: &[Taxon], mode: DistanceMode) -> Result<DistanceMatrix, PhyloError> {
    if taxa.len() < 2 {
        return Err(PhyloError::InsufficientTaxa { needed: 2, found: taxa.len() });
    }
    let n = taxa.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = taxon_distance(&taxa[i], &taxa[j], mode)?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    DistanceMatrix::new(taxa.iter().map(|t| t.label.clone()).collect(), d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeResult {
    pub matrix: DistanceMatrix,
    pub tree: PhyloTree,
    pub newick: String,
    pub warnings: Vec<String>,
}

/// Matrix plus tree for a request, in one call.
pub fn build_tree(corpus: &Corpus, work_id: &str, request: &TreeRequest) -> Result<TreeResult, PhyloError> {
    let matrix = build_matrix(corpus, work_id, request)?;
    let tree = match request.method {
        TreeMethod::Upgma => upgma(&matrix),
        TreeMethod::NeighborJoining => neighbor_joining(&matrix)?,
    };
    let mut warnings = Vec::new();
    if tree.clamped_negative() {
        warnings.push("negative branch lengths clamped to 0".to_owned());
    }
    Ok(TreeResult { newick: tree.to_newick(), matrix, tree, warnings })
}
