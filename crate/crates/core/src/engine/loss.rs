use crate::error::{Error, Result};
use crate::graph::{LabelVector, SparseGraph};
use crate::matrix::Matrix;

use super::propagate::Propagator;

/// What the logits are scored against.
#[derive(Debug, Clone, Copy)]
pub enum LossHead<'a> {
    /// Mean softmax cross-entropy over the masked nodes.
    Nll {
        labels: &'a LabelVector,
        mask: &'a [bool],
    },
    /// `(1/2N) ‖Z − Y‖²_F` over all `N` rows.
    LeastSquares { targets: &'a Matrix },
}

impl LossHead<'_> {
    /// Loss value and its gradient with respect to the logits.
    pub fn evaluate(&self, logits: &Matrix) -> Result<(f64, Matrix)> {
        match *self {
            LossHead::Nll { labels, mask } => nll_with_grad(logits, labels, mask),
            LossHead::LeastSquares { targets } => least_squares_with_grad(logits, targets),
        }
    }
}

fn log_softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
    let lse = max + sum.ln();
    for (o, v) in out.iter_mut().zip(row) {
        *o = v - lse;
    }
}

fn check_nll_shapes(logits: &Matrix, labels: &LabelVector, mask: &[bool]) -> Result<usize> {
    if logits.rows() != labels.len() || mask.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows, {} labels, {} mask entries",
            logits.rows(),
            labels.len(),
            mask.len()
        )));
    }
    if logits.cols() != labels.num_classes() {
        return Err(Error::Shape(format!(
            "{} logit columns for {} classes",
            logits.cols(),
            labels.num_classes()
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptyMask("loss mask selects no nodes"));
    }
    Ok(count)
}

/// Mean negative log-softmax of the true class over the masked nodes.
pub fn nll_loss(logits: &Matrix, labels: &LabelVector, mask: &[bool]) -> Result<f64> {
    let count = check_nll_shapes(logits, labels, mask)?;
    let mut logp = vec![0.0; logits.cols()];
    let mut total = 0.0;
    for i in (0..logits.rows()).filter(|&i| mask[i]) {
        log_softmax_row(logits.row(i), &mut logp);
        total -= logp[labels.labels()[i]];
    }
    Ok(total / count as f64)
}

pub fn nll_with_grad(logits: &Matrix, labels: &LabelVector, mask: &[bool]) -> Result<(f64, Matrix)> {
    let count = check_nll_shapes(logits, labels, mask)?;
    let scale = 1.0 / count as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut logp = vec![0.0; logits.cols()];
    let mut total = 0.0;
    for i in (0..logits.rows()).filter(|&i| mask[i]) {
        log_softmax_row(logits.row(i), &mut logp);
        let y = labels.labels()[i];
        total -= logp[y];
        for (g, &lp) in grad.row_mut(i).iter_mut().zip(&logp) {
            *g = lp.exp() * scale;
        }
        grad[(i, y)] -= scale;
    }
    Ok((total * scale, grad))
}

pub fn least_squares_with_grad(pred: &Matrix, targets: &Matrix) -> Result<(f64, Matrix)> {
    let mut resid = pred.sub(targets)?;
    let n = pred.rows().max(1) as f64;
    let loss = resid.frobenius_norm_sq() / (2.0 * n);
    resid.scale(1.0 / n);
    Ok((loss, resid))
}

/// `(1/2N) ‖A X θ − Y‖²_F` with the raw adjacency and `N` rows.
pub fn least_squares_loss(g: &SparseGraph, x: &Matrix, theta: &Matrix, y: &Matrix) -> Result<f64> {
    let ax = Propagator::new(g, false).apply(x)?;
    let pred = ax.matmul(theta)?;
    Ok(least_squares_with_grad(&pred, y)?.0)
}

/// Fraction of masked nodes whose largest logit is the true class.
pub fn accuracy(logits: &Matrix, labels: &LabelVector, mask: &[bool]) -> Result<f64> {
    let count = check_nll_shapes(logits, labels, mask)?;
    let correct = (0..logits.rows())
        .filter(|&i| mask[i] && logits.argmax_row(i) == labels.labels()[i])
        .count();
    Ok(correct as f64 / count as f64)
}
