//! Node-selection policies and multilevel hierarchy construction.
//!
//! Each coarser level is derived from the level directly above it: a policy
//! picks a node subset, the parent adjacency is raised to the plan's power,
//! and the selected rows and columns are kept together with their features,
//! labels and masks.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    bfs_ball, degrees, graph_power, induced_subgraph, restrict, Coordinates, LabelVector, Masks,
    NodeSelection, SparseGraph,
};
use crate::matrix::FeatureMatrix;

/// Attempts per level before hierarchy construction gives up on finding a
/// selection that keeps at least one training node.
pub const MAX_SELECTION_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Random,
    Topk,
    Ego,
    NearestGeometric,
    /// Random selection on even levels and a subgraph selection on odd ones,
    /// starting with Random for level 2. The subgraph step uses coordinates
    /// when the data has them and an ego-network otherwise.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarsenPlan {
    /// Total number of levels `R`, including the original graph.
    pub levels: usize,
    /// Fraction of the parent's nodes kept at each coarsening step.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Adjacency power applied before selecting rows and columns.
    #[serde(default = "default_power")]
    pub power: usize,
    pub policy: Policy,
    /// Hop radius per coarse level (entry 0 is level 2).
    #[serde(default = "default_ego_hops")]
    pub ego_hops: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_ratio() -> f64 {
    0.5
}

fn default_power() -> usize {
    1
}

fn default_ego_hops() -> Vec<usize> {
    vec![6, 4, 2]
}

impl CoarsenPlan {
    pub fn new(levels: usize, policy: Policy) -> Self {
        Self {
            levels,
            ratio: default_ratio(),
            power: default_power(),
            policy,
            ego_hops: default_ego_hops(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("plan needs at least one level".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("ratio {} outside (0, 1)", self.ratio)));
        }
        if self.power == 0 {
            return Err(Error::ZeroPower);
        }
        let needs_hops = matches!(self.policy, Policy::Ego | Policy::Hybrid);
        if needs_hops && self.ego_hops.len() < self.levels - 1 {
            return Err(Error::Config(format!(
                "{} levels need {} hop counts, got {}",
                self.levels,
                self.levels - 1,
                self.ego_hops.len()
            )));
        }
        Ok(())
    }

    /// Hop radius used to build level `level` (2-based).
    fn hops_for(&self, level: usize) -> usize {
        self.ego_hops[level - 2]
    }
}

/// Everything a trainer needs for one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelData {
    pub graph: SparseGraph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub masks: Masks,
    pub coords: Option<Coordinates>,
    /// Composition of all selections back to the original nodes.
    pub selection: NodeSelection,
}

impl LevelData {
    pub fn new(
        graph: SparseGraph,
        features: FeatureMatrix,
        labels: LabelVector,
        masks: Masks,
        coords: Option<Coordinates>,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n || labels.len() != n || masks.len() != n {
            return Err(Error::Shape(format!(
                "graph has {n} nodes; features {}, labels {}, masks {}",
                features.rows(),
                labels.len(),
                masks.len()
            )));
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(Error::Shape(format!("{} coordinates for {n} nodes", c.len())));
            }
        }
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        Ok(Self {
            graph,
            features,
            labels,
            masks,
            coords,
            selection: NodeSelection::all(n),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Child level holding the selected nodes of `self`, with adjacency
    /// `Pᵀ Aᵖ P`.
    pub fn coarsen(&self, sel: &NodeSelection, power: usize) -> Result<LevelData> {
        let powered = graph_power(&self.graph, power)?;
        let graph = induced_subgraph(&powered, sel)?;
        let (features, labels, masks) = restrict(&self.features, &self.labels, &self.masks, sel)?;
        Ok(LevelData {
            graph,
            features,
            labels,
            masks,
            coords: self.coords.as_ref().map(|c| c.gather(sel.indices())),
            selection: self.selection.compose(sel),
        })
    }
}

/// Levels ordered fine to coarse; index 0 holds the original data.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelHierarchy {
    levels: Vec<LevelData>,
}

impl LevelHierarchy {
    pub fn new(levels: Vec<LevelData>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("hierarchy needs at least one level".into()));
        }
        if levels.windows(2).any(|w| w[1].num_nodes() > w[0].num_nodes()) {
            return Err(Error::Config("hierarchy levels must not grow".into()));
        }
        Ok(Self { levels })
    }

    pub fn single(level: LevelData) -> Self {
        Self { levels: vec![level] }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Level `r`, 1-based (`r = 1` is the original graph).
    pub fn level(&self, r: usize) -> &LevelData {
        &self.levels[r - 1]
    }

    pub fn finest(&self) -> &LevelData {
        &self.levels[0]
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }
}

/// `m_target` nodes drawn uniformly without replacement, sorted.
pub fn random_select<R: Rng + ?Sized>(n: usize, m_target: usize, rng: &mut R) -> Result<NodeSelection> {
    if m_target == 0 || m_target > n {
        return Err(Error::InvalidSelection(format!("cannot draw {m_target} of {n} nodes")));
    }
    let picked = index::sample(rng, n, m_target).into_vec();
    NodeSelection::from_unsorted(picked, n)
}

/// The `m_target` highest-degree nodes; equal degrees prefer the lower index.
pub fn topk_select(g: &SparseGraph, m_target: usize) -> Result<NodeSelection> {
    let n = g.num_nodes();
    if m_target == 0 || m_target > n {
        return Err(Error::InvalidSelection(format!("cannot pick {m_target} of {n} nodes")));
    }
    let deg = degrees(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
    order.truncate(m_target);
    NodeSelection::from_unsorted(order, n)
}

/// Ego-network: every node within `k` hops of `root`, including `root`.
pub fn ego_select(g: &SparseGraph, root: usize, k: usize) -> Result<NodeSelection> {
    if root >= g.num_nodes() {
        return Err(Error::InvalidSelection(format!("root {root} out of range")));
    }
    NodeSelection::new(bfs_ball(g, root, k), g.num_nodes())
}

/// `root` and its `m_target - 1` nearest nodes in Euclidean distance; equal
/// distances prefer the lower index.
pub fn nearest_select(coords: Option<&Coordinates>, root: usize, m_target: usize) -> Result<NodeSelection> {
    let coords = coords.ok_or(Error::MissingCoordinates)?;
    let n = coords.len();
    if root >= n {
        return Err(Error::InvalidSelection(format!("root {root} out of range")));
    }
    if m_target == 0 || m_target > n {
        return Err(Error::InvalidSelection(format!("cannot pick {m_target} of {n} nodes")));
    }
    let mut others: Vec<(f64, usize)> = (0..n)
        .filter(|&i| i != root)
        .map(|i| (coords.dist_sq(root, i), i))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut picked: Vec<usize> = others.iter().take(m_target - 1).map(|&(_, i)| i).collect();
    picked.push(root);
    NodeSelection::from_unsorted(picked, n)
}

/// Target node count for a ratio-driven step, kept strictly below `n`.
pub fn target_count(n: usize, ratio: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Config(format!("cannot coarsen a graph of {n} node(s)")));
    }
    let m = ((n as f64) * ratio).round() as usize;
    Ok(m.clamp(1, n - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Random,
    Topk,
    Ego,
    Nearest,
}

fn step_for(plan: &CoarsenPlan, level: usize, has_coords: bool) -> Step {
    match plan.policy {
        Policy::Random => Step::Random,
        Policy::Topk => Step::Topk,
        Policy::Ego => Step::Ego,
        Policy::NearestGeometric => Step::Nearest,
        Policy::Hybrid if level % 2 == 0 => Step::Random,
        Policy::Hybrid if has_coords => Step::Nearest,
        Policy::Hybrid => Step::Ego,
    }
}

/// Builds `plan.levels` scales from the original data.
pub fn build_hierarchy(
    g: SparseGraph,
    x: FeatureMatrix,
    y: LabelVector,
    masks: Masks,
    coords: Option<Coordinates>,
    plan: &CoarsenPlan,
) -> Result<LevelHierarchy> {
    let finest = LevelData::new(g, x, y, masks, coords)?;
    build_hierarchy_from(finest, plan)
}

pub fn build_hierarchy_from(finest: LevelData, plan: &CoarsenPlan) -> Result<LevelHierarchy> {
    plan.validate()?;
    if matches!(plan.policy, Policy::NearestGeometric) && finest.coords.is_none() {
        return Err(Error::MissingCoordinates);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut levels = vec![finest];
    // Ego levels reuse one root so the subgraphs stay nested.
    let mut ego_root: Option<usize> = None;

    for level in 2..=plan.levels {
        let parent = levels.last().unwrap();
        let step = step_for(plan, level, parent.coords.is_some());
        if step != Step::Ego {
            ego_root = None;
        }
        let n = parent.num_nodes();
        let mut child = None;
        for attempt in 0..MAX_SELECTION_RETRIES {
            let sel = match step {
                Step::Random => random_select(n, target_count(n, plan.ratio)?, &mut rng)?,
                Step::Topk => topk_select(&parent.graph, target_count(n, plan.ratio)?)?,
                Step::Nearest => {
                    let root = rng.random_range(0..n);
                    nearest_select(parent.coords.as_ref(), root, target_count(n, plan.ratio)?)?
                }
                Step::Ego => {
                    let root = match ego_root {
                        Some(r) if attempt == 0 => r,
                        _ => rng.random_range(0..n),
                    };
                    let sel = ego_select(&parent.graph, root, plan.hops_for(level))?;
                    ego_root = sel.position(root);
                    sel
                }
            };
            let candidate = parent.coarsen(&sel, plan.power)?;
            if candidate.masks.train_count() > 0 {
                child = Some(candidate);
                break;
            }
            // A deterministic policy yields the same selection on every retry.
            if step == Step::Topk {
                break;
            }
        }
        let child = child.ok_or(Error::CoarseningFailed {
            level,
            retries: MAX_SELECTION_RETRIES,
        })?;
        levels.push(child);
    }
    LevelHierarchy::new(levels)
}
