//! Linear least squares on a full graph versus a node-selected subgraph.
//!
//! For a selection `C` with complement `F`, the coarse prediction
//! `A_CC X_C θ` differs from the selected rows of the fine prediction
//! `(A X θ)_C` by exactly the cut term `A_CF X_F θ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarsening::random_select;
use crate::datasets::{gen_sbm, SbmSpec};
use crate::engine::Propagator;
use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, NodeSelection, SparseGraph};
use crate::matrix::Matrix;

/// Diagonal shift used when the normal equations are singular.
pub const RIDGE: f64 = 1e-10;

/// Relative pivot threshold below which the Gram matrix counts as singular.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLSProblem {
    pub graph: SparseGraph,
    pub x: Matrix,
    pub y: Matrix,
    pub selection: NodeSelection,
}

impl LinearLSProblem {
    pub fn new(graph: SparseGraph, x: Matrix, y: Matrix, selection: NodeSelection) -> Result<Self> {
        let n = graph.num_nodes();
        if x.rows() != n || y.rows() != n {
            return Err(Error::Shape(format!(
                "graph has {n} nodes, features {} rows, targets {} rows",
                x.rows(),
                y.rows()
            )));
        }
        if selection.indices().last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidSelection("selection exceeds graph".into()));
        }
        if selection.len() < x.cols() {
            return Err(Error::InvalidSelection(format!(
                "{} selected rows cannot determine {} coefficients",
                selection.len(),
                x.cols()
            )));
        }
        Ok(Self {
            graph,
            x,
            y,
            selection,
        })
    }

    /// Indices of the unselected nodes, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut keep = vec![true; self.graph.num_nodes()];
        for &i in self.selection.indices() {
            keep[i] = false;
        }
        (0..keep.len()).filter(|&i| keep[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution {
    pub theta: Matrix,
    /// Set when the normal equations were singular and the ridge was applied.
    pub ridge: Option<f64>,
}

/// Minimizes `‖D θ − Y‖_F` through the normal equations `DᵀD θ = DᵀY`.
/// A rank-deficient design is an error unless `allow_ridge` is set, in which
/// case `RIDGE · I` is added and the shift is reported.
pub fn solve_ls(design: &Matrix, targets: &Matrix, allow_ridge: bool) -> Result<LsSolution> {
    if design.rows() != targets.rows() {
        return Err(Error::Shape(format!(
            "design has {} rows, targets {}",
            design.rows(),
            targets.rows()
        )));
    }
    let gram = design.t_matmul(design)?;
    let rhs = design.t_matmul(targets)?;
    match cholesky(&gram) {
        Ok(l) => Ok(LsSolution {
            theta: cholesky_solve(&l, &rhs),
            ridge: None,
        }),
        Err(e) if !allow_ridge => Err(e),
        Err(_) => {
            let mut shifted = gram;
            for i in 0..shifted.rows() {
                shifted[(i, i)] += RIDGE;
            }
            let l = cholesky_unchecked(&shifted)?;
            Ok(LsSolution {
                theta: cholesky_solve(&l, &rhs),
                ridge: Some(RIDGE),
            })
        }
    }
}

fn cholesky(a: &Matrix) -> Result<Matrix> {
    let scale = (0..a.rows()).map(|i| a[(i, i)]).fold(0.0, f64::max);
    let l = factor(a, |pivot| pivot > PIVOT_TOL * scale)?;
    Ok(l)
}

fn cholesky_unchecked(a: &Matrix) -> Result<Matrix> {
    factor(a, |pivot| pivot > 0.0)
}

fn factor(a: &Matrix, accept: impl Fn(f64) -> bool) -> Result<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !accept(d) {
            return Err(Error::RankDeficient { pivot: d });
        }
        let d = d.sqrt();
        l.data_mut()[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l.data_mut()[i * n + j] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x.row_mut(i)[col] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x.row_mut(i)[col] = s / l[(i, i)];
        }
    }
    x
}

/// The `C × F` block of the adjacency in CSR form, columns indexed by
/// position within `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossBlock {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl CrossBlock {
    pub fn from_cut(g: &SparseGraph, selection: &NodeSelection) -> Self {
        let n = g.num_nodes();
        let mut f_pos = vec![usize::MAX; n];
        let mut cols = 0;
        let mut selected = vec![false; n];
        for &i in selection.indices() {
            selected[i] = true;
        }
        for (i, _) in selected.iter().enumerate().filter(|(_, s)| !**s) {
            f_pos[i] = cols;
            cols += 1;
        }
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        for &c in selection.indices() {
            col_indices.extend(g.neighbors(c).iter().filter(|&&j| !selected[j]).map(|&j| f_pos[j]));
            row_offsets.push(col_indices.len());
        }
        Self {
            rows: selection.len(),
            cols,
            row_offsets,
            col_indices,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of stored cut entries; zero for a separable selection.
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn apply(&self, x_f: &Matrix) -> Result<Matrix> {
        if x_f.rows() != self.cols {
            return Err(Error::Shape(format!("block has {} columns, input {} rows", self.cols, x_f.rows())));
        }
        let mut out = Matrix::zeros(self.rows, x_f.cols());
        for i in 0..self.rows {
            let row = out.row_mut(i);
            for &j in &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]] {
                for (o, v) in row.iter_mut().zip(x_f.row(j)) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut d = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for &j in &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]] {
                d.row_mut(i)[j] += 1.0;
            }
        }
        d
    }
}

/// `A_CF X_F θ_C` and its Frobenius norm.
pub fn residual_term(block: &CrossBlock, x_f: &Matrix, theta_c: &Matrix) -> Result<(Matrix, f64)> {
    let r = block.apply(x_f)?.matmul(theta_c)?;
    let norm = r.frobenius_norm();
    Ok((r, norm))
}

/// Outcome of one fine-versus-coarse comparison. Losses use `1/(2N)` with
/// `N` the number of fine nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub nodes: usize,
    pub selected: usize,
    pub cut_edges: usize,
    /// `min_θ (1/2N)‖AXθ − Y‖²`.
    pub fine_loss: f64,
    /// `(1/2N)‖A_CC X_C θ_C* − Y_C‖²` where `θ_C*` fits the selected rows of `AX`.
    pub coarse_loss: f64,
    /// `(1/2N)‖(AX)_C θ_C* − Y_C‖²`, the fine loss restricted to `C`.
    pub restricted_fine_loss: f64,
    /// Optimum of the problem posed directly on the coarse graph.
    pub coarse_graph_optimum: f64,
    pub residual_norm_sq: f64,
    pub tight_bound: f64,
    pub factor2_bound: f64,
    pub tight_bound_holds: bool,
    pub factor2_bound_holds: bool,
    /// Largest entry of `|A_CC X_C θ + R − (AX)_C θ|` at `θ_C*`.
    pub identity_error: f64,
    pub ridge_used: bool,
}

/// Fine optimum, coarse evaluation of the selected-row optimum, the cut
/// residual and both bound forms `(1+ε)/(2N)(‖AXθ*−Y‖² + ‖R‖²)` and twice that.
pub fn check_theorem(problem: &LinearLSProblem, epsilon: f64, allow_ridge: bool) -> Result<TrialReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon {epsilon}")));
    }
    let n = problem.graph.num_nodes();
    let sel = problem.selection.indices();
    let two_n = 2.0 * n as f64;

    let ax = Propagator::new(&problem.graph, false).apply(&problem.x)?;
    let fine = solve_ls(&ax, &problem.y, allow_ridge)?;
    let fine_resid_sq = ax.matmul(&fine.theta)?.sub(&problem.y)?.frobenius_norm_sq();

    let ax_c = ax.gather_rows(sel);
    let y_c = problem.y.gather_rows(sel);
    let sketched = solve_ls(&ax_c, &y_c, allow_ridge)?;
    let theta_c = &sketched.theta;

    let a_cc = induced_subgraph(&problem.graph, &problem.selection)?;
    let x_c = problem.x.gather_rows(sel);
    let acc_xc = Propagator::new(&a_cc, false).apply(&x_c)?;
    let coarse_pred = acc_xc.matmul(theta_c)?;
    let coarse_loss = coarse_pred.sub(&y_c)?.frobenius_norm_sq() / two_n;
    let sketched_pred = ax_c.matmul(theta_c)?;
    let restricted_fine_loss = sketched_pred.sub(&y_c)?.frobenius_norm_sq() / two_n;

    let block = CrossBlock::from_cut(&problem.graph, &problem.selection);
    let x_f = problem.x.gather_rows(&problem.complement());
    let (r, r_norm) = residual_term(&block, &x_f, theta_c)?;
    let mut lhs = coarse_pred;
    lhs.add_assign(&r)?;
    let identity_error = lhs.max_abs_diff(&sketched_pred);

    let coarse_opt = solve_ls(&acc_xc, &y_c, allow_ridge)?;
    let coarse_graph_optimum = acc_xc.matmul(&coarse_opt.theta)?.sub(&y_c)?.frobenius_norm_sq() / two_n;

    let residual_norm_sq = r_norm * r_norm;
    let tight_bound = (1.0 + epsilon) * (fine_resid_sq + residual_norm_sq) / two_n;
    let factor2_bound = 2.0 * tight_bound;
    Ok(TrialReport {
        nodes: n,
        selected: sel.len(),
        cut_edges: block.nnz(),
        fine_loss: fine_resid_sq / two_n,
        coarse_loss,
        restricted_fine_loss,
        coarse_graph_optimum,
        residual_norm_sq,
        tight_bound,
        factor2_bound,
        tight_bound_holds: coarse_loss <= tight_bound,
        factor2_bound_holds: coarse_loss <= factor2_bound,
        identity_error,
        ridge_used: fine.ridge.is_some() || sketched.ridge.is_some() || coarse_opt.ridge.is_some(),
    })
}

/// Random SBM trials with a uniformly drawn selection of fixed size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremTrials {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Blocks of the SBM, which is also the feature channel count.
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default = "default_selected")]
    pub selected: usize,
    #[serde(default = "default_targets")]
    pub targets: usize,
    #[serde(default = "default_p_in")]
    pub p_in: f64,
    #[serde(default = "default_p_out")]
    pub p_out: f64,
    #[serde(default = "default_noise")]
    pub target_noise: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_true")]
    pub allow_ridge: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    100
}
fn default_nodes() -> usize {
    200
}
fn default_channels() -> usize {
    4
}
fn default_selected() -> usize {
    100
}
fn default_targets() -> usize {
    2
}
fn default_p_in() -> f64 {
    0.1
}
fn default_p_out() -> f64 {
    0.01
}
fn default_noise() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}

impl Default for TheoremTrials {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub config: TheoremTrials,
    pub trials: Vec<TrialReport>,
    pub tight_bound_rate: f64,
    pub factor2_bound_rate: f64,
    pub max_identity_error: f64,
    /// Largest identity error over an extra random `θ` per trial.
    pub max_identity_error_random_theta: f64,
}

/// Runs the configured trials in parallel; trial `t` draws from its own
/// stream derived from `seed` and `t`.
pub fn run_theorem_trials(cfg: &TheoremTrials) -> Result<TheoremReport> {
    if cfg.trials == 0 {
        return Err(Error::Config("at least one trial".into()));
    }
    if cfg.selected > cfg.nodes || cfg.selected < cfg.channels {
        return Err(Error::Config(format!(
            "selection of {} rows out of {} nodes with {} channels",
            cfg.selected, cfg.nodes, cfg.channels
        )));
    }
    let results: Vec<(TrialReport, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t as u64))
        .collect::<Result<_>>()?;
    let count = |f: fn(&TrialReport) -> bool| results.iter().filter(|(r, _)| f(r)).count() as f64;
    let total = cfg.trials as f64;
    Ok(TheoremReport {
        config: cfg.clone(),
        tight_bound_rate: count(|r| r.tight_bound_holds) / total,
        factor2_bound_rate: count(|r| r.factor2_bound_holds) / total,
        max_identity_error: results.iter().map(|(r, _)| r.identity_error).fold(0.0, f64::max),
        max_identity_error_random_theta: results.iter().map(|(_, e)| *e).fold(0.0, f64::max),
        trials: results.into_iter().map(|(r, _)| r).collect(),
    })
}

fn run_trial(cfg: &TheoremTrials, t: u64) -> Result<(TrialReport, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t + 1);
    let data = gen_sbm(&SbmSpec {
        nodes: cfg.nodes,
        blocks: cfg.channels,
        p_in: cfg.p_in,
        p_out: cfg.p_out,
        feature_noise: 1.0,
        seed: cfg.seed ^ (t.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    })?;
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let theta_true = Matrix::from_fn(cfg.channels, cfg.targets, |_, _| normal(&mut rng));
    let ax = Propagator::new(&data.graph, false).apply(&data.features)?;
    let mut y = ax.matmul(&theta_true)?;
    for v in y.data_mut() {
        *v += cfg.target_noise * normal(&mut rng);
    }
    let selection = random_select(cfg.nodes, cfg.selected, &mut rng)?;
    let problem = LinearLSProblem::new(data.graph, data.features, y, selection)?;
    let report = check_theorem(&problem, cfg.epsilon, cfg.allow_ridge)?;
    let theta = Matrix::from_fn(cfg.channels, cfg.targets, |_, _| normal(&mut rng));
    let random_error = identity_error(&problem, &theta)?;
    Ok((report, random_error))
}

/// Largest entry of `|A_CC X_C θ + A_CF X_F θ − (A X θ)_C|`.
pub fn identity_error(problem: &LinearLSProblem, theta: &Matrix) -> Result<f64> {
    let sel = problem.selection.indices();
    let fine = Propagator::new(&problem.graph, false)
        .apply(&problem.x)?
        .gather_rows(sel)
        .matmul(theta)?;
    let a_cc = induced_subgraph(&problem.graph, &problem.selection)?;
    let mut coarse = Propagator::new(&a_cc, false)
        .apply(&problem.x.gather_rows(sel))?
        .matmul(theta)?;
    let block = CrossBlock::from_cut(&problem.graph, &problem.selection);
    let (r, _) = residual_term(&block, &problem.x.gather_rows(&problem.complement()), theta)?;
    coarse.add_assign(&r)?;
    Ok(coarse.max_abs_diff(&fine))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_design_returns_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = rand_matrix(&mut rng, 4, 2);
        let sol = solve_ls(&Matrix::identity(4), &y, false).unwrap();
        assert!(sol.theta.max_abs_diff(&y) < 1e-14);
        assert_eq!(sol.ridge, None);
    }

    #[test]
    fn consistent_system_has_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = rand_matrix(&mut rng, 10, 3);
        let theta = rand_matrix(&mut rng, 3, 1);
        let y = d.matmul(&theta).unwrap();
        let sol = solve_ls(&d, &y, false).unwrap();
        assert!(d.matmul(&sol.theta).unwrap().sub(&y).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_design() {
        let d = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(solve_ls(&d, &y, false), Err(Error::RankDeficient { .. })));
        let sol = solve_ls(&d, &y, true).unwrap();
        assert_eq!(sol.ridge, Some(RIDGE));
        assert!(sol.theta.is_finite());
    }

    fn two_cliques() -> SparseGraph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        SparseGraph::from_edges(8, &edges).unwrap()
    }

    #[test]
    fn separable_cut_has_zero_residual() {
        let g = two_cliques();
        let sel = NodeSelection::new(vec![0, 1, 2, 3], 8).unwrap();
        let block = CrossBlock::from_cut(&g, &sel);
        assert_eq!(block.nnz(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (r, norm) = residual_term(&block, &rand_matrix(&mut rng, 4, 2), &rand_matrix(&mut rng, 2, 1)).unwrap();
        assert_eq!(norm, 0.0);
        assert!(r.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_theta_has_zero_residual() {
        let g = SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let sel = NodeSelection::new(vec![0, 2], 4).unwrap();
        let block = CrossBlock::from_cut(&g, &sel);
        let (_, norm) = residual_term(&block, &Matrix::from_fn(2, 2, |i, j| (i + j) as f64 + 1.0), &Matrix::zeros(2, 3)).unwrap();
        assert_eq!(norm, 0.0);
    }

    #[test]
    fn residual_matches_dense_triple_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 9;
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(0.4))
            .collect();
        let g = SparseGraph::from_edges(n, &edges).unwrap();
        let sel = NodeSelection::new(vec![1, 4, 5, 8], n).unwrap();
        let f = [0, 2, 3, 6, 7];
        let dense = g.to_dense();
        let a_cf = Matrix::from_fn(4, 5, |i, j| f64::from(dense[sel.indices()[i]][f[j]]));
        let x_f = rand_matrix(&mut rng, 5, 3);
        let theta = rand_matrix(&mut rng, 3, 2);
        let block = CrossBlock::from_cut(&g, &sel);
        assert_eq!(block.to_dense(), a_cf);
        let (r, norm) = residual_term(&block, &x_f, &theta).unwrap();
        let expected = a_cf.matmul(&x_f).unwrap().matmul(&theta).unwrap();
        assert!(r.max_abs_diff(&expected) < 1e-14);
        assert!((norm - expected.frobenius_norm()).abs() < 1e-14);
    }

    fn problem(g: SparseGraph, sel: Vec<usize>, seed: u64) -> LinearLSProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.num_nodes();
        let x = rand_matrix(&mut rng, n, 2);
        let y = rand_matrix(&mut rng, n, 1);
        LinearLSProblem::new(g, x, y, NodeSelection::new(sel, n).unwrap()).unwrap()
    }

    #[test]
    fn separable_coarse_solution_is_restricted_optimum() {
        let p = problem(two_cliques(), vec![4, 5, 6, 7], 6);
        let rep = check_theorem(&p, 0.1, false).unwrap();
        assert_eq!(rep.residual_norm_sq, 0.0);
        assert!((rep.coarse_loss - rep.restricted_fine_loss).abs() < 1e-12);
        assert!((rep.coarse_graph_optimum - rep.coarse_loss).abs() < 1e-12);
        assert!(rep.tight_bound_holds && rep.factor2_bound_holds);
    }

    #[test]
    fn full_selection_reproduces_fine_loss() {
        let g = SparseGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)]).unwrap();
        let rep = check_theorem(&problem(g, (0..6).collect(), 7), 0.0, false).unwrap();
        assert!((rep.coarse_loss - rep.fine_loss).abs() < 1e-12);
        assert!(rep.tight_bound_holds);
    }

    #[test]
    fn too_few_rows_rejected() {
        let g = SparseGraph::from_edges(3, &[(0, 1)]).unwrap();
        let r = LinearLSProblem::new(
            g,
            Matrix::zeros(3, 2),
            Matrix::zeros(3, 1),
            NodeSelection::new(vec![0], 3).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn trials_are_reproducible_and_exact() {
        let cfg = TheoremTrials {
            trials: 6,
            nodes: 40,
            selected: 20,
            seed: 11,
            ..TheoremTrials::default()
        };
        let a = run_theorem_trials(&cfg).unwrap();
        assert_eq!(a, run_theorem_trials(&cfg).unwrap());
        assert!(a.max_identity_error < 1e-10);
        assert!(a.max_identity_error_random_theta < 1e-10);
        assert_eq!(a.factor2_bound_rate, 1.0);
        let json = serde_json::to_string(&a).unwrap();
        let back: TheoremReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.trials.len(), 6);
    }
}
