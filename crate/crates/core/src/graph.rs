//! Sparse graph representation, graph powers, induced subgraphs and the
//! per-layer FLOP model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Default growth budget for [`graph_power`]: the result may hold at most this
/// many times the input's stored entries.
pub const DEFAULT_EDGE_BUDGET_FACTOR: usize = 32;

/// Binary, undirected adjacency in CSR form.
///
/// Every undirected edge is stored twice, once per direction, so
/// [`SparseGraph::num_edges`] counts directed entries. Rows are sorted and
/// the diagonal is never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl SparseGraph {
    /// Builds a graph from undirected edges. Duplicates and both orientations
    /// collapse into one edge; self-loops are dropped.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self::from_sorted_rows(adj))
    }

    /// Validates raw CSR arrays.
    pub fn from_csr(num_nodes: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>) -> Result<Self> {
        if row_offsets.len() != num_nodes + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidGraph("bad row offsets".into()));
        }
        if *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::InvalidGraph("offsets do not cover columns".into()));
        }
        let g = Self {
            num_nodes,
            row_offsets,
            col_indices,
        };
        for i in 0..num_nodes {
            if g.row_offsets[i] > g.row_offsets[i + 1] {
                return Err(Error::InvalidGraph(format!("row {i} has negative length")));
            }
            let row = g.neighbors(i);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGraph(format!("row {i} not strictly increasing")));
            }
            for &j in row {
                if j >= num_nodes {
                    return Err(Error::InvalidGraph(format!("column {j} out of range")));
                }
                if j == i {
                    return Err(Error::InvalidGraph(format!("self-loop at {i}")));
                }
                if !g.has_edge(j, i) {
                    return Err(Error::InvalidGraph(format!("edge ({i}, {j}) not symmetric")));
                }
            }
        }
        Ok(g)
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            row_offsets: vec![0; num_nodes + 1],
            col_indices: Vec::new(),
        }
    }

    fn from_sorted_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in &rows {
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        Self {
            num_nodes: rows.len(),
            row_offsets,
            col_indices,
        }
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Stored (directed) entries; each undirected edge counts twice.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    /// Undirected edge count `|E|`.
    #[inline]
    pub fn num_undirected_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Dense 0/1 adjacency, row-major. Intended for tests and small graphs.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.num_nodes]; self.num_nodes];
        for (i, row) in dense.iter_mut().enumerate() {
            for &j in self.neighbors(i) {
                row[j] = 1;
            }
        }
        dense
    }

    /// Number of connected components.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.num_nodes];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.num_nodes {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// Disjoint union; nodes of `other` are shifted by `self.num_nodes()`.
    pub fn disjoint_union(&self, other: &SparseGraph) -> SparseGraph {
        let shift = self.num_nodes;
        let mut row_offsets = self.row_offsets.clone();
        let mut col_indices = self.col_indices.clone();
        let base = col_indices.len();
        row_offsets.extend(other.row_offsets[1..].iter().map(|o| o + base));
        col_indices.extend(other.col_indices.iter().map(|c| c + shift));
        SparseGraph {
            num_nodes: self.num_nodes + other.num_nodes,
            row_offsets,
            col_indices,
        }
    }
}

/// Per-node class labels for single-label classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Shape(format!("label {bad} >= {num_classes} classes")));
        }
        Ok(Self { labels, num_classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn gather(&self, indices: &[usize]) -> Self {
        Self {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// Boolean train/validation/test node masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Masks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Masks {
    pub fn all_train(n: usize) -> Self {
        Self {
            train: vec![true; n],
            val: vec![true; n],
            test: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn gather(&self, indices: &[usize]) -> Self {
        let pick = |m: &[bool]| indices.iter().map(|&i| m[i]).collect();
        Self {
            train: pick(&self.train),
            val: pick(&self.val),
            test: pick(&self.test),
        }
    }

    pub fn train_count(&self) -> usize {
        self.train.iter().filter(|&&b| b).count()
    }
}

/// Euclidean node positions, `n × d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    points: FeatureMatrix,
}

impl Coordinates {
    pub fn new(points: FeatureMatrix) -> Result<Self> {
        if points.cols() == 0 {
            return Err(Error::Shape("coordinates need at least one dimension".into()));
        }
        if !points.is_finite() {
            return Err(Error::Shape("non-finite coordinate".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &FeatureMatrix {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn dist_sq(&self, a: usize, b: usize) -> f64 {
        self.points
            .row(a)
            .iter()
            .zip(self.points.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }

    pub fn gather(&self, indices: &[usize]) -> Self {
        Self {
            points: self.points.gather_rows(indices),
        }
    }
}

/// Sorted, unique node indices into a parent graph: the injection matrix `P`
/// stored by its nonzero rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSelection {
    indices: Vec<usize>,
}

impl NodeSelection {
    /// Validates a selection against a parent with `parent_nodes` nodes.
    pub fn new(indices: Vec<usize>, parent_nodes: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSelection("selection is empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSelection("indices must be strictly increasing".into()));
        }
        if *indices.last().unwrap() >= parent_nodes {
            return Err(Error::InvalidSelection(format!(
                "index {} out of range for {parent_nodes} nodes",
                indices.last().unwrap()
            )));
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, parent_nodes: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, parent_nodes)
    }

    pub fn all(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Maps a selection made inside this one back to this selection's parent.
    pub fn compose(&self, inner: &NodeSelection) -> NodeSelection {
        NodeSelection {
            indices: inner.indices.iter().map(|&i| self.indices[i]).collect(),
        }
    }

    /// Child index of a parent node, if selected.
    pub fn position(&self, parent_index: usize) -> Option<usize> {
        self.indices.binary_search(&parent_index).ok()
    }

    fn check_against(&self, parent_nodes: usize) -> Result<()> {
        match self.indices.last() {
            None => Err(Error::InvalidSelection("selection is empty".into())),
            Some(&last) if last >= parent_nodes => Err(Error::InvalidSelection(format!(
                "index {last} out of range for {parent_nodes} nodes"
            ))),
            _ => Ok(()),
        }
    }
}

/// Boolean `p`-th power of the adjacency with the diagonal removed, using the
/// default edge budget.
pub fn graph_power(g: &SparseGraph, p: usize) -> Result<SparseGraph> {
    graph_power_with_budget(g, p, DEFAULT_EDGE_BUDGET_FACTOR)
}

/// Boolean `p`-th power: `(i, j)` is an edge iff a walk of exactly `p` steps
/// joins them and `i != j`. Fails once the result exceeds
/// `budget_factor × g.num_edges()` stored entries.
pub fn graph_power_with_budget(g: &SparseGraph, p: usize, budget_factor: usize) -> Result<SparseGraph> {
    if p == 0 {
        return Err(Error::ZeroPower);
    }
    if p == 1 {
        return Ok(g.clone());
    }
    let n = g.num_nodes();
    let budget = budget_factor.saturating_mul(g.num_edges());
    let mut mark = vec![usize::MAX; n];
    let mut rows = Vec::with_capacity(n);
    let mut total = 0usize;
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    for i in 0..n {
        frontier.clear();
        frontier.push(i);
        for step in 0..p {
            next.clear();
            let stamp = i * p + step;
            for &u in &frontier {
                for &v in g.neighbors(u) {
                    if mark[v] != stamp {
                        mark[v] = stamp;
                        next.push(v);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        let mut row: Vec<usize> = frontier.iter().copied().filter(|&j| j != i).collect();
        row.sort_unstable();
        total += row.len();
        if total > budget {
            return Err(Error::EdgeBudgetExceeded {
                power: p,
                edges: total,
                budget,
            });
        }
        rows.push(row);
    }
    Ok(SparseGraph::from_sorted_rows(rows))
}

/// `Pᵀ A P`: the subgraph induced by `sel`, relabeled so child node `a` is
/// parent node `sel[a]`.
pub fn induced_subgraph(g: &SparseGraph, sel: &NodeSelection) -> Result<SparseGraph> {
    sel.check_against(g.num_nodes())?;
    let mut child_of = vec![usize::MAX; g.num_nodes()];
    for (a, &i) in sel.indices().iter().enumerate() {
        child_of[i] = a;
    }
    let rows = sel
        .indices()
        .iter()
        .map(|&i| {
            g.neighbors(i)
                .iter()
                .filter_map(|&j| (child_of[j] != usize::MAX).then_some(child_of[j]))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SparseGraph::from_sorted_rows(rows))
}

/// Row-gathers features, labels and masks by `sel` (`Pᵀ X`, `Pᵀ Y`).
pub fn restrict(
    x: &FeatureMatrix,
    y: &LabelVector,
    masks: &Masks,
    sel: &NodeSelection,
) -> Result<(FeatureMatrix, LabelVector, Masks)> {
    if x.rows() != y.len() || y.len() != masks.len() {
        return Err(Error::Shape(format!(
            "features {} rows, labels {}, masks {}",
            x.rows(),
            y.len(),
            masks.len()
        )));
    }
    sel.check_against(x.rows())?;
    let idx = sel.indices();
    Ok((x.gather_rows(idx), y.gather(idx), masks.gather(idx)))
}

pub fn degrees(g: &SparseGraph) -> Vec<usize> {
    (0..g.num_nodes()).map(|i| g.neighbors(i).len()).collect()
}

/// Multiplications in one GCN layer: `2·|E|·c_in + |V|·c_in·c_out`, with `|E|`
/// the undirected edge count.
pub fn gcn_layer_flops(num_edges: u64, num_nodes: u64, c_in: u64, c_out: u64) -> u64 {
    2 * num_edges * c_in + num_nodes * c_in * c_out
}

/// Nodes within `k` hops of `root`, sorted.
pub fn bfs_ball(g: &SparseGraph, root: usize, k: usize) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    seen.insert(root);
    let mut frontier = vec![root];
    for _ in 0..k {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if seen.insert(v) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    seen.into_iter().collect()
}
