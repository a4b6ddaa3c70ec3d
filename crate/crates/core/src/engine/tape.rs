//! Forward pass with a recorded tape, and the matching reverse pass.

use crate::error::{Error, Result};
use crate::graph::gcn_layer_flops;
use crate::matrix::Matrix;

use super::model::{Gradients, LayerKind, Model};
use super::propagate::Propagator;

#[derive(Debug, Clone)]
enum LayerTape {
    Gcn {
        /// `Â X`
        aggregated: Matrix,
        /// pre-activation output
        pre: Matrix,
    },
    Gin {
        /// `(1 + ε) X + Â X`
        combined: Matrix,
        hidden_pre: Matrix,
        hidden: Matrix,
        pre: Matrix,
    },
}

impl LayerTape {
    fn pre(&self) -> &Matrix {
        match self {
            LayerTape::Gcn { pre, .. } | LayerTape::Gin { pre, .. } => pre,
        }
    }
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    layers: Vec<LayerTape>,
    shapes: Vec<Vec<(usize, usize)>>,
    num_nodes: usize,
    flops: u64,
}

impl Tape {
    /// Multiplications performed by the forward pass under the per-layer
    /// `2·|E|·c_in + |V|·c_in·c_out` model.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }
}

fn relu(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

fn relu_backward(grad: &mut Matrix, pre: &Matrix) {
    for (g, &p) in grad.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Runs the model on one graph. ReLU follows every layer but the last; the
/// returned logits are the raw output of the final layer.
pub fn forward(model: &Model, prop: &Propagator, x: &Matrix) -> Result<(Matrix, Tape)> {
    model.validate()?;
    if x.cols() != model.input_channels() {
        return Err(Error::Shape(format!(
            "features have {} channels, model expects {}",
            x.cols(),
            model.input_channels()
        )));
    }
    if x.rows() != prop.num_nodes() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} nodes",
            x.rows(),
            prop.num_nodes()
        )));
    }
    let n = prop.num_nodes() as u64;
    let e = prop.num_undirected_edges() as u64;
    let last = model.layers.len() - 1;
    let mut flops = 0u64;
    let mut tapes = Vec::with_capacity(model.layers.len());
    let mut h = x.clone();
    for (l, layer) in model.layers.iter().enumerate() {
        let (c_in, c_out) = (layer.c_in as u64, layer.c_out as u64);
        let tape = match layer.kind {
            LayerKind::Gcn => {
                let aggregated = prop.apply(&h)?;
                let mut pre = aggregated.matmul(&layer.params[0])?;
                pre.add_row_broadcast(&layer.params[1])?;
                flops += gcn_layer_flops(e, n, c_in, c_out);
                LayerTape::Gcn { aggregated, pre }
            }
            LayerKind::Gin => {
                let mut combined = prop.apply(&h)?;
                combined.axpy(1.0 + layer.gin_eps, &h)?;
                let mut hidden_pre = combined.matmul(&layer.params[0])?;
                hidden_pre.add_row_broadcast(&layer.params[1])?;
                let hidden = relu(&hidden_pre);
                let mut pre = hidden.matmul(&layer.params[2])?;
                pre.add_row_broadcast(&layer.params[3])?;
                flops += gcn_layer_flops(e, n, c_in, c_out) + n * c_out * c_out;
                LayerTape::Gin {
                    combined,
                    hidden_pre,
                    hidden,
                    pre,
                }
            }
        };
        h = if l == last { tape.pre().clone() } else { relu(tape.pre()) };
        tapes.push(tape);
    }
    Ok((
        h,
        Tape {
            layers: tapes,
            shapes: model.shapes(),
            num_nodes: x.rows(),
            flops,
        },
    ))
}

/// Reverse pass: gradients of a scalar loss given `d loss / d logits`.
///
/// `prop` must be the operator used in the forward pass.
pub fn backward(model: &Model, prop: &Propagator, tape: &Tape, grad_logits: &Matrix) -> Result<Gradients> {
    if tape.shapes != model.shapes() {
        return Err(Error::TapeMismatch("parameter shapes differ".into()));
    }
    if tape.num_nodes != prop.num_nodes() {
        return Err(Error::TapeMismatch(format!(
            "tape recorded {} nodes, operator has {}",
            tape.num_nodes,
            prop.num_nodes()
        )));
    }
    if grad_logits.shape() != (tape.num_nodes, model.output_channels()) {
        return Err(Error::TapeMismatch(format!(
            "logit gradient shape {:?}",
            grad_logits.shape()
        )));
    }
    let mut grads = Gradients::zeros_like(model);
    let mut upstream = grad_logits.clone();
    let last = model.layers.len() - 1;
    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let tape_l = &tape.layers[l];
        if l != last {
            relu_backward(&mut upstream, tape_l.pre());
        }
        let d_pre = upstream;
        match tape_l {
            LayerTape::Gcn { aggregated, .. } => {
                grads.layers[l][0] = aggregated.t_matmul(&d_pre)?;
                grads.layers[l][1] = d_pre.column_sums();
                upstream = if l > 0 {
                    prop.apply(&d_pre.matmul_t(&layer.params[0])?)?
                } else {
                    Matrix::zeros(0, 0)
                };
            }
            LayerTape::Gin {
                combined,
                hidden_pre,
                hidden,
                ..
            } => {
                grads.layers[l][2] = hidden.t_matmul(&d_pre)?;
                grads.layers[l][3] = d_pre.column_sums();
                let mut d_hidden = d_pre.matmul_t(&layer.params[2])?;
                relu_backward(&mut d_hidden, hidden_pre);
                grads.layers[l][0] = combined.t_matmul(&d_hidden)?;
                grads.layers[l][1] = d_hidden.column_sums();
                upstream = if l > 0 {
                    let d_combined = d_hidden.matmul_t(&layer.params[0])?;
                    let mut d_in = prop.apply(&d_combined)?;
                    d_in.axpy(1.0 + layer.gin_eps, &d_combined)?;
                    d_in
                } else {
                    Matrix::zeros(0, 0)
                };
            }
        }
    }
    Ok(grads)
}
