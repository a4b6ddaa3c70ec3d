use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::matrix::Matrix;

/// The message-passing operator applied by every layer: either the raw
/// adjacency `A` or `D̃^{-1/2}(A + I)D̃^{-1/2}`. Both are symmetric, so the
/// same operator serves the backward pass.
#[derive(Debug, Clone)]
pub struct Propagator {
    num_nodes: usize,
    num_undirected_edges: usize,
    row_offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl Propagator {
    pub fn new(g: &SparseGraph, normalize: bool) -> Self {
        let n = g.num_nodes();
        if !normalize {
            return Self {
                num_nodes: n,
                num_undirected_edges: g.num_undirected_edges(),
                row_offsets: g.row_offsets().to_vec(),
                cols: g.col_indices().to_vec(),
                weights: vec![1.0; g.num_edges()],
            };
        }
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / ((g.neighbors(i).len() + 1) as f64).sqrt())
            .collect();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(g.num_edges() + n);
        let mut weights = Vec::with_capacity(g.num_edges() + n);
        row_offsets.push(0);
        for i in 0..n {
            let mut self_done = false;
            for &j in g.neighbors(i) {
                if !self_done && j > i {
                    cols.push(i);
                    weights.push(inv_sqrt[i] * inv_sqrt[i]);
                    self_done = true;
                }
                cols.push(j);
                weights.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            if !self_done {
                cols.push(i);
                weights.push(inv_sqrt[i] * inv_sqrt[i]);
            }
            row_offsets.push(cols.len());
        }
        Self {
            num_nodes: n,
            num_undirected_edges: g.num_undirected_edges(),
            row_offsets,
            cols,
            weights,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// `|E|` of the underlying graph, used by the FLOP model.
    pub fn num_undirected_edges(&self) -> usize {
        self.num_undirected_edges
    }

    /// `Â · x`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.num_nodes {
            return Err(Error::Shape(format!(
                "propagating {} rows over {} nodes",
                x.rows(),
                self.num_nodes
            )));
        }
        let c = x.cols();
        let mut out = Matrix::zeros(self.num_nodes, c);
        for i in 0..self.num_nodes {
            let range = self.row_offsets[i]..self.row_offsets[i + 1];
            let out_row = out.row_mut(i);
            for (&j, &w) in self.cols[range.clone()].iter().zip(&self.weights[range]) {
                for (o, &v) in out_row.iter_mut().zip(x.row(j)) {
                    *o += w * v;
                }
            }
        }
        Ok(out)
    }

    /// Dense copy of the operator, for tests.
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.num_nodes, self.num_nodes);
        for i in 0..self.num_nodes {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                m[(i, self.cols[k])] = self.weights[k];
            }
        }
        m
    }
}
