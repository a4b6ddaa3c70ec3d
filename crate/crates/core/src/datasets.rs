//! Synthetic graph generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coarsening::LevelData;
use crate::error::{Error, Result};
use crate::graph::{Coordinates, LabelVector, Masks, SparseGraph};
use crate::matrix::{FeatureMatrix, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub nodes: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    #[serde(default = "default_noise")]
    pub feature_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise() -> f64 {
    1.0
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        for p in [self.p_in, self.p_out] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("probability {p} outside [0, 1]")));
            }
        }
        if self.blocks == 0 || self.nodes < self.blocks {
            return Err(Error::Config(format!(
                "{} nodes cannot fill {} blocks",
                self.nodes, self.blocks
            )));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::Config(format!("feature noise {}", self.feature_noise)));
        }
        Ok(())
    }

    /// Block of node `i`: contiguous, near-equal blocks.
    pub fn block_of(&self, i: usize) -> usize {
        i * self.blocks / self.nodes
    }

    /// Expected undirected edge count.
    pub fn expected_edges(&self) -> f64 {
        let mut sizes = vec![0usize; self.blocks];
        for i in 0..self.nodes {
            sizes[self.block_of(i)] += 1;
        }
        let pairs = |m: usize| (m * m.saturating_sub(1) / 2) as f64;
        let within: f64 = sizes.iter().map(|&m| pairs(m)).sum();
        let total = pairs(self.nodes);
        within * self.p_in + (total - within) * self.p_out
    }
}

/// Random 60/20/20 train/validation/test split.
pub fn random_split<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Masks {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let n_train = (n * 6).div_ceil(10);
    let n_val = (n * 2) / 10;
    let mut masks = Masks {
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
    };
    for (k, &i) in order.iter().enumerate() {
        if k < n_train {
            masks.train[i] = true;
        } else if k < n_train + n_val {
            masks.val[i] = true;
        } else {
            masks.test[i] = true;
        }
    }
    masks
}

/// Stochastic block model with block-indicator features plus Gaussian noise.
/// Labels are block ids.
pub fn gen_sbm(spec: &SbmSpec) -> Result<LevelData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nodes;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if spec.block_of(i) == spec.block_of(j) {
                spec.p_in
            } else {
                spec.p_out
            };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let graph = SparseGraph::from_edges(n, &edges)?;
    let noise = Normal::new(0.0, spec.feature_noise).map_err(|e| Error::Config(e.to_string()))?;
    let features = Matrix::from_fn(n, spec.blocks, |i, j| {
        let indicator = if spec.block_of(i) == j { 1.0 } else { 0.0 };
        indicator + noise.sample(&mut rng)
    });
    let labels = LabelVector::new((0..n).map(|i| spec.block_of(i)).collect(), spec.blocks)?;
    let masks = random_split(n, &mut rng);
    LevelData::new(graph, features, labels, masks, None)
}

/// Symmetrized k-nearest-neighbour graph over the given points; equal
/// distances prefer the lower index.
pub fn knn_graph(points: &Matrix, k: usize) -> Result<SparseGraph> {
    let n = points.rows();
    if k >= n {
        return Err(Error::Config(format!("k = {k} needs more than {n} points")));
    }
    let dist = |a: usize, b: usize| -> f64 {
        points
            .row(a)
            .iter()
            .zip(points.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    };
    let mut edges = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)));
        cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        edges.extend(cand[..k].iter().map(|&(_, j)| (i, j)));
    }
    SparseGraph::from_edges(n, &edges)
}

/// Uniform points in `[0, 1]^d` joined by a symmetrized kNN graph.
pub fn gen_knn_cloud(n: usize, d: usize, k: usize, seed: u64) -> Result<(SparseGraph, Coordinates)> {
    if d == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = Matrix::from_fn(n, d, |_, _| rng.random::<f64>());
    let g = knn_graph(&points, k)?;
    Ok((g, Coordinates::new(points)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QtipsSpec {
    pub num_graphs: usize,
    pub grid_side: usize,
    pub rod_length: usize,
    pub rods_per_graph: usize,
    #[serde(default = "default_qtips_k")]
    pub knn_k: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_qtips_k() -> usize {
    8
}

/// Background plus three rod types.
pub const QTIPS_CLASSES: usize = 4;
/// Feature channels: blue endpoint, yellow endpoint, uncoloured rod body.
pub const QTIPS_CHANNELS: usize = 3;

pub const BACKGROUND: usize = 0;
pub const BLUE_BLUE: usize = 1;
pub const YELLOW_YELLOW: usize = 2;
pub const MIXED: usize = 3;

const MAX_ROD_ATTEMPTS: usize = 2000;

impl QtipsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rod_length < 2 {
            return Err(Error::Config("rods need at least two nodes".into()));
        }
        if self.rod_length > self.grid_side {
            return Err(Error::Config(format!(
                "rod of {} nodes does not fit a {}-wide grid",
                self.rod_length, self.grid_side
            )));
        }
        if self.knn_k < 2 {
            return Err(Error::Config("kNN background needs k >= 2".into()));
        }
        if self.knn_k >= self.grid_side * self.grid_side {
            return Err(Error::Config("k too large for the grid".into()));
        }
        Ok(())
    }
}

/// One generated rod scene.
#[derive(Debug, Clone, PartialEq)]
pub struct QtipsGraph {
    pub graph: SparseGraph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub masks: Masks,
    pub coords: Coordinates,
    /// Node ids of every rod, endpoint to endpoint.
    pub rods: Vec<Vec<usize>>,
}

const DIRECTIONS: [(i64, i64); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (-1, 0), (0, -1), (-1, -1), (-1, 1)];

/// Rod scenes on a square grid. Background points are joined by a kNN graph;
/// each rod is a straight path (axis-aligned or diagonal) whose endpoint colours
/// decide its type, so interior nodes can only be classified by looking at
/// both ends.
pub fn gen_qtips(spec: &QtipsSpec) -> Result<Vec<QtipsGraph>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.grid_side;
    let n = side * side;
    let points = Matrix::from_fn(n, 2, |i, j| if j == 0 { (i % side) as f64 } else { (i / side) as f64 });
    let graph = knn_graph(&points, spec.knn_k)?;
    let coords = Coordinates::new(points)?;

    let mut out = Vec::with_capacity(spec.num_graphs);
    for _ in 0..spec.num_graphs {
        let mut blocked = vec![false; n];
        let mut rods = Vec::with_capacity(spec.rods_per_graph);
        for _ in 0..spec.rods_per_graph {
            let rod = place_rod(side, spec.rod_length, &blocked, &mut rng)?;
            for &c in &rod {
                let (x, y) = ((c % side) as i64, (c / side) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0 && ny >= 0 && (nx as usize) < side && (ny as usize) < side {
                            blocked[ny as usize * side + nx as usize] = true;
                        }
                    }
                }
            }
            rods.push(rod);
        }

        let mut features = Matrix::zeros(n, QTIPS_CHANNELS);
        let mut labels = vec![BACKGROUND; n];
        for rod in &rods {
            let start_blue = rng.random_bool(0.5);
            let end_blue = rng.random_bool(0.5);
            let kind = match (start_blue, end_blue) {
                (true, true) => BLUE_BLUE,
                (false, false) => YELLOW_YELLOW,
                _ => MIXED,
            };
            let last = rod.len() - 1;
            for (k, &node) in rod.iter().enumerate() {
                labels[node] = kind;
                let channel = match k {
                    0 => usize::from(!start_blue),
                    k if k == last => usize::from(!end_blue),
                    _ => 2,
                };
                features[(node, channel)] = 1.0;
            }
        }
        out.push(QtipsGraph {
            graph: graph.clone(),
            features,
            labels: LabelVector::new(labels, QTIPS_CLASSES)?,
            masks: Masks::all_train(n),
            coords: coords.clone(),
            rods,
        });
    }
    Ok(out)
}

fn place_rod<R: Rng + ?Sized>(side: usize, len: usize, blocked: &[bool], rng: &mut R) -> Result<Vec<usize>> {
    'attempt: for _ in 0..MAX_ROD_ATTEMPTS {
        let x0 = rng.random_range(0..side) as i64;
        let y0 = rng.random_range(0..side) as i64;
        let (dx, dy) = DIRECTIONS[rng.random_range(0..DIRECTIONS.len())];
        let mut cells = Vec::with_capacity(len);
        for k in 0..len as i64 {
            let (x, y) = (x0 + k * dx, y0 + k * dy);
            if x < 0 || y < 0 || x as usize >= side || y as usize >= side {
                continue 'attempt;
            }
            let c = y as usize * side + x as usize;
            if blocked[c] {
                continue 'attempt;
            }
            cells.push(c);
        }
        return Ok(cells);
    }
    Err(Error::RodPlacement(MAX_ROD_ATTEMPTS))
}

/// Joins training and held-out scenes into one disjoint graph. Nodes of the
/// training scenes form the train mask; held-out scenes alternate between the
/// validation and test masks. Scene coordinates are shifted apart along x.
pub fn qtips_union(train: &[QtipsGraph], held_out: &[QtipsGraph]) -> Result<LevelData> {
    let scenes: Vec<(&QtipsGraph, Option<bool>)> = train
        .iter()
        .map(|g| (g, None))
        .chain(held_out.iter().enumerate().map(|(i, g)| (g, Some(i % 2 == 0))))
        .collect();
    let (first, _) = scenes
        .first()
        .ok_or_else(|| Error::Config("no scenes to join".into()))?;
    let mut graph = SparseGraph::empty(0);
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    let mut points = Vec::new();
    let mut masks = Masks {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    let gap = 4.0;
    let mut x_offset = 0.0;
    for (scene, held) in &scenes {
        graph = graph.disjoint_union(&scene.graph);
        feats.extend_from_slice(scene.features.data());
        labels.extend_from_slice(scene.labels.labels());
        let n = scene.graph.num_nodes();
        let width = (0..n)
            .map(|i| scene.coords.points()[(i, 0)])
            .fold(0.0, f64::max);
        for i in 0..n {
            let p = scene.coords.points().row(i);
            points.push(p[0] + x_offset);
            points.extend_from_slice(&p[1..]);
        }
        x_offset += width + gap;
        masks.train.extend(std::iter::repeat_n(held.is_none(), n));
        masks.val.extend(std::iter::repeat_n(*held == Some(true), n));
        masks.test.extend(std::iter::repeat_n(*held == Some(false), n));
    }
    let total = graph.num_nodes();
    let dim = first.coords.dim();
    LevelData::new(
        graph,
        Matrix::from_vec(total, QTIPS_CHANNELS, feats)?,
        LabelVector::new(labels, QTIPS_CLASSES)?,
        masks,
        Some(Coordinates::new(Matrix::from_vec(total, dim, points)?)?),
    )
}
