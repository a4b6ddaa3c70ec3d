use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    /// `X' = Â X W + b`
    Gcn,
    /// `X' = MLP((1 + ε) X + Â X)` with one hidden layer of width `c_out`.
    Gin,
}

/// Architecture description, independent of any graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: LayerKind,
    /// Channel widths `c_0, c_1, …, c_L`; `c_0` is the input width and `c_L`
    /// the number of classes.
    pub channels: Vec<usize>,
    #[serde(default = "default_normalize")]
    pub normalize_adjacency: bool,
    #[serde(default)]
    pub gin_eps: f64,
}

fn default_normalize() -> bool {
    true
}

impl ModelSpec {
    pub fn gcn(channels: Vec<usize>) -> Self {
        Self {
            kind: LayerKind::Gcn,
            channels,
            normalize_adjacency: true,
            gin_eps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.len() < 2 {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        if self.channels.contains(&0) {
            return Err(Error::Config("channel widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    pub c_in: usize,
    pub c_out: usize,
    pub gin_eps: f64,
    /// GCN: `[W, b]`. GIN: `[W1, b1, W2, b2]`. Biases are `1 × c`.
    pub params: Vec<Matrix>,
}

impl Layer {
    pub fn new<R: Rng + ?Sized>(kind: LayerKind, c_in: usize, c_out: usize, gin_eps: f64, rng: &mut R) -> Self {
        let params = match kind {
            LayerKind::Gcn => vec![glorot(c_in, c_out, rng), Matrix::zeros(1, c_out)],
            LayerKind::Gin => vec![
                glorot(c_in, c_out, rng),
                Matrix::zeros(1, c_out),
                glorot(c_out, c_out, rng),
                Matrix::zeros(1, c_out),
            ],
        };
        Self {
            kind,
            c_in,
            c_out,
            gin_eps,
            params,
        }
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.params.iter().map(Matrix::shape).collect()
    }
}

fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..limit))
}

/// The weight stack `θ`. Shapes depend only on channel widths, so one model
/// runs unchanged on graphs of any size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub layers: Vec<Layer>,
    pub normalize_adjacency: bool,
}

impl Model {
    pub fn init<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .channels
            .windows(2)
            .map(|w| Layer::new(spec.kind, w[0], w[1], spec.gin_eps, rng))
            .collect();
        Ok(Self {
            layers,
            normalize_adjacency: spec.normalize_adjacency,
        })
    }

    /// Checks that layer widths chain and parameters have the expected shapes.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        for w in self.layers.windows(2) {
            if w[0].c_out != w[1].c_in {
                return Err(Error::Shape(format!(
                    "layer widths do not chain: {} then {}",
                    w[0].c_out, w[1].c_in
                )));
            }
        }
        for layer in &self.layers {
            let (i, o) = (layer.c_in, layer.c_out);
            let expected = match layer.kind {
                LayerKind::Gcn => vec![(i, o), (1, o)],
                LayerKind::Gin => vec![(i, o), (1, o), (o, o), (1, o)],
            };
            if layer.param_shapes() != expected {
                return Err(Error::Shape(format!(
                    "{:?} layer {i}->{o} has parameter shapes {:?}",
                    layer.kind,
                    layer.param_shapes()
                )));
            }
            if layer.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Shape("non-finite weight".into()));
            }
        }
        Ok(())
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].c_in
    }

    pub fn output_channels(&self) -> usize {
        self.layers.last().map_or(0, |l| l.c_out)
    }

    pub fn num_params(&self) -> usize {
        self.params().map(|p| p.data().len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &Matrix> {
        self.layers.iter().flat_map(|l| l.params.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut())
    }

    pub fn shapes(&self) -> Vec<Vec<(usize, usize)>> {
        self.layers.iter().map(Layer::param_shapes).collect()
    }

    /// All weights concatenated in layer, then parameter order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params().flat_map(|p| p.data().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for p in self.params_mut() {
            let len = p.data().len();
            p.data_mut().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }
}

/// Gradient tree with the same shapes as [`Model`] weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Vec<Matrix>>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| l.params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect())
                .collect(),
        }
    }

    pub fn shapes(&self) -> Vec<Vec<(usize, usize)>> {
        self.layers
            .iter()
            .map(|l| l.iter().map(Matrix::shape).collect())
            .collect()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Gradients) -> Result<()> {
        if self.shapes() != other.shapes() {
            return Err(Error::Shape("gradient trees differ".into()));
        }
        for (a, b) in self.iter_mut().zip(other.iter()) {
            a.axpy(alpha, b)?;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix> {
        self.layers.iter().flatten()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.layers.iter_mut().flatten()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.iter().flat_map(|m| m.data().iter().copied()).collect()
    }

    pub fn max_abs_diff(&self, other: &Gradients) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(Matrix::frobenius_norm_sq).sum::<f64>().sqrt()
    }
}
