//! Minimal GCN/GIN engine: layer-wise reverse mode, softmax cross-entropy and
//! least squares heads, and Adam. Every forward pass reports its FLOPs.

mod adam;
mod checkpoint;
mod loss;
mod model;
mod propagate;
mod tape;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, CHECKPOINT_FORMAT};
pub use loss::{accuracy, least_squares_loss, least_squares_with_grad, nll_loss, nll_with_grad, LossHead};
pub use model::{Gradients, Layer, LayerKind, Model, ModelSpec};
pub use propagate::Propagator;
pub use tape::{backward, forward, Tape};

use crate::error::Result;
use crate::matrix::Matrix;

/// Result of one forward/backward evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub grads: Gradients,
    pub logits: Matrix,
    pub flops: u64,
}

/// Forward pass, loss head and backward pass in one call.
pub fn loss_and_gradients(model: &Model, prop: &Propagator, x: &Matrix, head: LossHead<'_>) -> Result<Evaluation> {
    let (logits, tape) = forward(model, prop, x)?;
    let (loss, grad_logits) = head.evaluate(&logits)?;
    let grads = backward(model, prop, &tape, &grad_logits)?;
    Ok(Evaluation {
        loss,
        grads,
        logits,
        flops: tape.flops(),
    })
}

/// Loss only.
pub fn loss_only(model: &Model, prop: &Propagator, x: &Matrix, head: LossHead<'_>) -> Result<(f64, u64)> {
    let (logits, tape) = forward(model, prop, x)?;
    Ok((head.evaluate(&logits)?.0, tape.flops()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{LabelVector, SparseGraph};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path3() -> SparseGraph {
        SparseGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn single_gcn(w: Matrix) -> Model {
        let (c_in, c_out) = w.shape();
        Model {
            layers: vec![Layer {
                kind: LayerKind::Gcn,
                c_in,
                c_out,
                gin_eps: 0.0,
                params: vec![w, Matrix::zeros(1, c_out)],
            }],
            normalize_adjacency: false,
        }
    }

    #[test]
    fn identity_weights_give_ax() {
        let g = path3();
        let prop = Propagator::new(&g, false);
        let x = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 + 1.0);
        let (out, tape) = forward(&single_gcn(Matrix::identity(2)), &prop, &x).unwrap();
        assert_eq!(out, prop.apply(&x).unwrap());
        assert_eq!(tape.flops(), crate::graph::gcn_layer_flops(2, 3, 2, 2));
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let prop = Propagator::new(&path3(), true);
        let x = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let (out, _) = forward(&single_gcn(Matrix::zeros(2, 4)), &prop, &x).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn path_layer_matches_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = Matrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        let x = Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let dense_a = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let reference = dense_a.matmul(&x).unwrap().matmul(&w).unwrap();
        let (out, _) = forward(&single_gcn(w), &Propagator::new(&path3(), false), &x).unwrap();
        assert!(out.max_abs_diff(&reference) < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let prop = Propagator::new(&path3(), false);
        let model = single_gcn(Matrix::identity(2));
        assert!(forward(&model, &prop, &Matrix::zeros(3, 3)).is_err());
        assert!(forward(&model, &prop, &Matrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn tape_from_other_graph_rejected() {
        let model = single_gcn(Matrix::identity(2));
        let small = Propagator::new(&path3(), false);
        let big = Propagator::new(&SparseGraph::empty(5), false);
        let (_, tape) = forward(&model, &small, &Matrix::zeros(3, 2)).unwrap();
        assert!(matches!(
            backward(&model, &big, &tape, &Matrix::zeros(3, 2)),
            Err(crate::error::Error::TapeMismatch(_))
        ));
        let other = single_gcn(Matrix::identity(3));
        assert!(backward(&other, &small, &tape, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn linear_least_squares_gradient_closed_form() {
        // one GCN layer without bias contribution: ∇θ = (1/N) Xᵀ Aᵀ (A X θ − Y)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = path3();
        let prop = Propagator::new(&g, false);
        let x = Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let theta = Matrix::from_fn(2, 1, |_, _| rng.random_range(-1.0..1.0));
        let y = Matrix::from_fn(3, 1, |_, _| rng.random_range(-1.0..1.0));
        let model = single_gcn(theta.clone());
        let eval = loss_and_gradients(&model, &prop, &x, LossHead::LeastSquares { targets: &y }).unwrap();
        let ax = prop.apply(&x).unwrap();
        let resid = ax.matmul(&theta).unwrap().sub(&y).unwrap();
        let expected = ax.t_matmul(&resid).unwrap().scaled(1.0 / 3.0);
        assert!(eval.grads.layers[0][0].max_abs_diff(&expected) < 1e-14);
        let ls = least_squares_loss(&g, &x, &theta, &y).unwrap();
        assert!((eval.loss - ls).abs() < 1e-15);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let g = path3();
        let prop = Propagator::new(&g, false);
        let x = Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let model = single_gcn(Matrix::from_rows(&[vec![1.0], vec![-0.5]]).unwrap());
        let (y, _) = forward(&model, &prop, &x).unwrap();
        let eval = loss_and_gradients(&model, &prop, &x, LossHead::LeastSquares { targets: &y }).unwrap();
        assert_eq!(eval.loss, 0.0);
        assert_eq!(eval.grads.norm(), 0.0);
    }

    #[test]
    fn softmax_shift_invariance() {
        let y = LabelVector::new(vec![0, 2], 3).unwrap();
        let logits = Matrix::from_rows(&[vec![0.3, -1.2, 2.0], vec![1.5, 0.0, -0.7]]).unwrap();
        let mut shifted = logits.clone();
        for v in shifted.row_mut(1) {
            *v += 123.456;
        }
        let a = nll_loss(&logits, &y, &[true, true]).unwrap();
        let b = nll_loss(&shifted, &y, &[true, true]).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
