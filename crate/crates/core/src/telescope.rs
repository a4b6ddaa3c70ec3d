//! Telescopic multiscale loss estimation.
//!
//! The fine-scale expected loss is written as the coarsest loss plus a sum of
//! cross-scale differences:
//!
//! ```text
//! E L⁽¹⁾ = E L⁽ᴿ⁾ + Σ_{r=2..R} E (L⁽ʳ⁻¹⁾ − L⁽ʳ⁾)
//! ```
//!
//! Each expectation is estimated with its own number of samples. The
//! coarsest term averages `M_R` samples at scale `R`; the difference term
//! between scales `r−1` and `r` averages `M_{r−1}` paired samples, where the
//! scale-`r` half of a pair is a coarsening of its scale-`(r−1)` half. With
//! `M_R ≥ … ≥ M_1` most evaluations happen on small graphs. (Indexing the
//! difference term by `M_r` instead is the other common reading; both agree
//! whenever the counts are equal.)

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coarsening::{random_select, target_count, LevelData, LevelHierarchy};
use crate::engine::{backward, forward, Gradients, LossHead, Model, Propagator, Tape};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::trainers::{MetricLog, TrainSchedule, TrainingSession};

const MAX_SAMPLE_RETRIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelescopeConfig {
    /// Number of scales `R`.
    pub levels: usize,
    /// `[M_1, …, M_R]`; must be nondecreasing toward the coarsest scale.
    #[serde(default)]
    pub samples_per_term: Vec<usize>,
    /// Fraction of a sample's nodes kept when deriving the next scale.
    #[serde(default = "default_retain")]
    pub retain_fraction: f64,
    /// Fraction of the full graph's nodes in each finest-scale sample.
    #[serde(default = "default_sample_fraction")]
    pub sample_fraction: f64,
    /// First epoch trained on the plain fine loss.
    pub switch_epoch: usize,
    #[serde(default = "default_power")]
    pub power: usize,
}

fn default_retain() -> f64 {
    0.75
}

fn default_sample_fraction() -> f64 {
    0.25
}

fn default_power() -> usize {
    1
}

impl TelescopeConfig {
    pub fn new(levels: usize, switch_epoch: usize) -> Self {
        Self {
            levels,
            samples_per_term: default_samples(levels),
            retain_fraction: default_retain(),
            sample_fraction: default_sample_fraction(),
            switch_epoch,
            power: default_power(),
        }
    }

    /// Sample counts, filling in the default `M_r = 2^(r−1)` when unset.
    pub fn samples(&self) -> Vec<usize> {
        if self.samples_per_term.is_empty() {
            default_samples(self.levels)
        } else {
            self.samples_per_term.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("telescope needs at least one level".into()));
        }
        let m = self.samples();
        if m.len() != self.levels {
            return Err(Error::Config(format!(
                "{} sample counts for {} levels",
                m.len(),
                self.levels
            )));
        }
        if m[0] == 0 || m.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(format!(
                "sample counts {m:?} must be positive and nondecreasing toward the coarsest scale"
            )));
        }
        if !(self.retain_fraction > 0.0 && self.retain_fraction < 1.0) {
            return Err(Error::Config(format!("retain fraction {}", self.retain_fraction)));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Config(format!("sample fraction {}", self.sample_fraction)));
        }
        if self.power == 0 {
            return Err(Error::ZeroPower);
        }
        Ok(())
    }
}

fn default_samples(levels: usize) -> Vec<usize> {
    (0..levels).map(|r| 1usize << r).collect()
}

/// `|L_fine − L_coarse| / L_fine`.
pub fn loss_gap_gamma(loss_coarse: f64, loss_fine: f64) -> Result<f64> {
    if loss_fine == 0.0 {
        return Err(Error::ZeroFineLoss);
    }
    Ok((loss_fine - loss_coarse).abs() / loss_fine)
}

/// Source of samples for the telescopic estimator. Scales are 1-based.
pub trait TelescopeSampler {
    /// A pair `(scale r−1, scale r)` for the difference term of scale `r ≥ 2`.
    fn sample_pair(&mut self, r: usize) -> Result<(Arc<LevelData>, Arc<LevelData>)>;

    /// A sample at scale `r` for the coarsest term.
    fn sample_at(&mut self, r: usize) -> Result<Arc<LevelData>>;
}

/// Returns the same data for every scale and draw.
pub struct IdenticalSampler {
    data: Arc<LevelData>,
}

impl IdenticalSampler {
    pub fn new(data: Arc<LevelData>) -> Self {
        Self { data }
    }
}

impl TelescopeSampler for IdenticalSampler {
    fn sample_pair(&mut self, _r: usize) -> Result<(Arc<LevelData>, Arc<LevelData>)> {
        Ok((self.data.clone(), self.data.clone()))
    }

    fn sample_at(&mut self, _r: usize) -> Result<Arc<LevelData>> {
        Ok(self.data.clone())
    }
}

/// Serves levels of a fixed hierarchy: every draw of scale `r` is level `r`.
pub struct HierarchySampler {
    levels: Vec<Arc<LevelData>>,
}

impl HierarchySampler {
    pub fn new(hierarchy: &LevelHierarchy) -> Self {
        Self {
            levels: hierarchy.levels().iter().cloned().map(Arc::new).collect(),
        }
    }

    fn get(&self, r: usize) -> Result<Arc<LevelData>> {
        self.levels
            .get(r - 1)
            .cloned()
            .ok_or_else(|| Error::SamplerExhausted(format!("hierarchy has no level {r}")))
    }
}

impl TelescopeSampler for HierarchySampler {
    fn sample_pair(&mut self, r: usize) -> Result<(Arc<LevelData>, Arc<LevelData>)> {
        Ok((self.get(r - 1)?, self.get(r)?))
    }

    fn sample_at(&mut self, r: usize) -> Result<Arc<LevelData>> {
        self.get(r)
    }
}

/// Hands out prepared samples in order; errors once a queue runs dry.
#[derive(Default)]
pub struct QueueSampler {
    pub pairs: Vec<std::collections::VecDeque<(Arc<LevelData>, Arc<LevelData>)>>,
    pub coarsest: std::collections::VecDeque<Arc<LevelData>>,
}

impl TelescopeSampler for QueueSampler {
    fn sample_pair(&mut self, r: usize) -> Result<(Arc<LevelData>, Arc<LevelData>)> {
        self.pairs
            .get_mut(r - 2)
            .and_then(|q| q.pop_front())
            .ok_or_else(|| Error::SamplerExhausted(format!("no pair left for scale {r}")))
    }

    fn sample_at(&mut self, r: usize) -> Result<Arc<LevelData>> {
        self.coarsest
            .pop_front()
            .ok_or_else(|| Error::SamplerExhausted(format!("no sample left for scale {r}")))
    }
}

/// Transductive sampler: a finest-scale sample is a random node subset of the
/// full graph; each coarser scale keeps a random `retain_fraction` of the
/// previous one.
pub struct SubsetSampler {
    full: Arc<LevelData>,
    sample_fraction: f64,
    retain_fraction: f64,
    power: usize,
    rng: ChaCha8Rng,
}

impl SubsetSampler {
    pub fn new(full: Arc<LevelData>, cfg: &TelescopeConfig, seed: u64) -> Self {
        Self {
            full,
            sample_fraction: cfg.sample_fraction,
            retain_fraction: cfg.retain_fraction,
            power: cfg.power,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn finest_sample(&mut self) -> Result<LevelData> {
        let n = self.full.num_nodes();
        if self.sample_fraction >= 1.0 {
            return Ok((*self.full).clone());
        }
        let m = ((n as f64) * self.sample_fraction).round().clamp(1.0, n as f64) as usize;
        let sel = random_select(n, m, &mut self.rng)?;
        self.full.coarsen(&sel, 1)
    }

    fn coarser(&mut self, data: &LevelData) -> Result<LevelData> {
        let n = data.num_nodes();
        let sel = random_select(n, target_count(n, self.retain_fraction)?, &mut self.rng)?;
        data.coarsen(&sel, self.power)
    }

    /// Draws a chain of samples for scales `1..=depth`, retrying until the
    /// deepest sample keeps a training node.
    fn chain(&mut self, depth: usize) -> Result<Vec<LevelData>> {
        for _ in 0..MAX_SAMPLE_RETRIES {
            let mut chain = vec![self.finest_sample()?];
            for _ in 1..depth {
                let next = self.coarser(chain.last().unwrap())?;
                chain.push(next);
            }
            if chain.last().unwrap().masks.train_count() > 0 {
                return Ok(chain);
            }
        }
        Err(Error::SamplerExhausted(format!(
            "no scale-{depth} sample with training nodes after {MAX_SAMPLE_RETRIES} draws"
        )))
    }
}

impl TelescopeSampler for SubsetSampler {
    fn sample_pair(&mut self, r: usize) -> Result<(Arc<LevelData>, Arc<LevelData>)> {
        let mut chain = self.chain(r)?;
        let coarse = chain.pop().unwrap();
        let fine = chain.pop().unwrap();
        Ok((Arc::new(fine), Arc::new(coarse)))
    }

    fn sample_at(&mut self, r: usize) -> Result<Arc<LevelData>> {
        Ok(Arc::new(self.chain(r)?.pop().unwrap()))
    }
}

struct TapeEntry {
    weight: f64,
    data: Arc<LevelData>,
    prop: Propagator,
    tape: Tape,
    grad_logits: Matrix,
}

/// Everything recorded while evaluating one telescopic estimate. The gradient
/// of the estimate is the weighted sum of per-term reverse passes.
pub struct TapeSet {
    entries: Vec<TapeEntry>,
}

impl TapeSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn backward(&self, model: &Model) -> Result<Gradients> {
        let mut total = Gradients::zeros_like(model);
        for e in &self.entries {
            let g = backward(model, &e.prop, &e.tape, &e.grad_logits)?;
            total.add_scaled(e.weight, &g)?;
        }
        Ok(total)
    }

    /// `(weight, node count)` of every evaluated term, in evaluation order.
    pub fn terms(&self) -> Vec<(f64, usize)> {
        self.entries.iter().map(|e| (e.weight, e.data.num_nodes())).collect()
    }
}

/// Telescopic estimate of the fine training loss.
pub struct TelescopeEstimate {
    pub loss: f64,
    pub tapes: TapeSet,
    pub flops: u64,
}

fn evaluate_term(model: &Model, data: Arc<LevelData>, weight: f64) -> Result<(f64, u64, TapeEntry)> {
    let prop = Propagator::new(&data.graph, model.normalize_adjacency);
    let (logits, tape) = forward(model, &prop, &data.features)?;
    let head = LossHead::Nll {
        labels: &data.labels,
        mask: &data.masks.train,
    };
    let (loss, grad_logits) = head.evaluate(&logits)?;
    let flops = tape.flops();
    Ok((
        loss,
        flops,
        TapeEntry {
            weight,
            data,
            prop,
            tape,
            grad_logits,
        },
    ))
}

pub fn telescopic_loss(
    model: &Model,
    sampler: &mut dyn TelescopeSampler,
    cfg: &TelescopeConfig,
) -> Result<TelescopeEstimate> {
    cfg.validate()?;
    let m = cfg.samples();
    let big_r = cfg.levels;
    let mut entries = Vec::new();
    let mut loss = 0.0;
    let mut flops = 0;

    for r in 2..=big_r {
        let count = m[r - 2];
        let w = 1.0 / count as f64;
        for _ in 0..count {
            let (fine, coarse) = sampler.sample_pair(r)?;
            let (lf, ff, ef) = evaluate_term(model, fine, w)?;
            let (lc, fc, ec) = evaluate_term(model, coarse, -w)?;
            loss += w * (lf - lc);
            flops += ff + fc;
            entries.push(ef);
            entries.push(ec);
        }
    }
    let count = m[big_r - 1];
    let w = 1.0 / count as f64;
    for _ in 0..count {
        let data = sampler.sample_at(big_r)?;
        let (l, f, e) = evaluate_term(model, data, w)?;
        loss += w * l;
        flops += f;
        entries.push(e);
    }
    Ok(TelescopeEstimate {
        loss,
        tapes: TapeSet { entries },
        flops,
    })
}

/// Multiscale-gradient training: epochs before `cfg.switch_epoch` step on the
/// telescopic estimate, later epochs on the plain fine loss. Records of the
/// multiscale phase carry level `R`.
pub fn train_ms_gradient(
    model: Model,
    data: &LevelData,
    cfg: &TelescopeConfig,
    schedule: &TrainSchedule,
) -> Result<(Model, MetricLog)> {
    cfg.validate()?;
    let full = Arc::new(data.clone());
    let mut sampler = SubsetSampler::new(full, cfg, schedule.seed);
    train_ms_gradient_with(model, data, cfg, schedule, &mut sampler)
}

pub fn train_ms_gradient_with(
    model: Model,
    data: &LevelData,
    cfg: &TelescopeConfig,
    schedule: &TrainSchedule,
    sampler: &mut dyn TelescopeSampler,
) -> Result<(Model, MetricLog)> {
    cfg.validate()?;
    let epochs = *schedule
        .epochs_per_level
        .first()
        .ok_or_else(|| Error::Config("empty schedule".into()))?;
    let mut session = TrainingSession::new(model, data, schedule)?;
    let switch = cfg.switch_epoch.min(epochs);
    for epoch in 0..switch {
        let est = telescopic_loss(&session.model, sampler, cfg)?;
        let grads = est.tapes.backward(&session.model)?;
        session.add_flops(est.flops);
        session.optimizer.step(&mut session.model, &grads)?;
        session.record(cfg.levels, epoch, epoch + 1 == switch, est.loss)?;
    }
    if switch < epochs {
        let prop = Propagator::new(&data.graph, session.model.normalize_adjacency);
        for epoch in switch..epochs {
            let loss = session.step_on(&prop, data)?;
            session.record(1, epoch, epoch + 1 == epochs, loss)?;
        }
    }
    Ok(session.finish())
}

/// `[γ_1, …, γ_R]` for one hierarchy: `γ_1 = 0` and
/// `γ_r = |L⁽ʳ⁻¹⁾ − L⁽ʳ⁾| / L⁽ʳ⁻¹⁾` with training-mask losses.
pub fn gamma_profile(model: &Model, hierarchy: &LevelHierarchy) -> Result<Vec<f64>> {
    let losses = hierarchy
        .levels()
        .iter()
        .map(|lvl| {
            let prop = Propagator::new(&lvl.graph, model.normalize_adjacency);
            let (logits, _) = forward(model, &prop, &lvl.features)?;
            LossHead::Nll {
                labels: &lvl.labels,
                mask: &lvl.masks.train,
            }
            .evaluate(&logits)
            .map(|(l, _)| l)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gammas = vec![0.0];
    for w in losses.windows(2) {
        gammas.push(loss_gap_gamma(w[1], w[0])?);
    }
    Ok(gammas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{loss_and_gradients, ModelSpec};
    use crate::graph::{LabelVector, Masks, SparseGraph};
    use rand::Rng;
    use std::collections::VecDeque;

    fn small_data(seed: u64, n: usize) -> LevelData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.2) {
                    edges.push((i, j));
                }
            }
        }
        let g = SparseGraph::from_edges(n, &edges).unwrap();
        let x = Matrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = LabelVector::new((0..n).map(|_| rng.random_range(0..2)).collect(), 2).unwrap();
        LevelData::new(g, x, y, Masks::all_train(n), None).unwrap()
    }

    fn model(seed: u64) -> Model {
        Model::init(&ModelSpec::gcn(vec![3, 4, 2]), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn fine_loss(model: &Model, data: &LevelData) -> (f64, Gradients) {
        let prop = Propagator::new(&data.graph, model.normalize_adjacency);
        let head = LossHead::Nll {
            labels: &data.labels,
            mask: &data.masks.train,
        };
        let e = loss_and_gradients(model, &prop, &data.features, head).unwrap();
        (e.loss, e.grads)
    }

    #[test]
    fn gamma_examples() {
        assert!((loss_gap_gamma(0.94, 1.0).unwrap() - 0.06).abs() < 1e-12);
        assert_eq!(loss_gap_gamma(0.5, 0.5).unwrap(), 0.0);
        assert_eq!(loss_gap_gamma(2.0, 1.0).unwrap(), 1.0);
        assert!(matches!(loss_gap_gamma(1.0, 0.0), Err(Error::ZeroFineLoss)));
    }

    #[test]
    fn single_scale_is_plain_loss() {
        let data = Arc::new(small_data(1, 12));
        let m = model(1);
        let mut cfg = TelescopeConfig::new(1, 0);
        cfg.samples_per_term = vec![1];
        let est = telescopic_loss(&m, &mut IdenticalSampler::new(data.clone()), &cfg).unwrap();
        let (l, g) = fine_loss(&m, &data);
        assert_eq!(est.loss, l);
        assert!(est.tapes.backward(&m).unwrap().max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn identical_data_telescopes_exactly() {
        let data = Arc::new(small_data(2, 16));
        let m = model(2);
        let (l, g) = fine_loss(&m, &data);
        for levels in 2..=4 {
            let mut cfg = TelescopeConfig::new(levels, 0);
            cfg.samples_per_term = vec![1; levels];
            let est = telescopic_loss(&m, &mut IdenticalSampler::new(data.clone()), &cfg).unwrap();
            assert!((est.loss - l).abs() < 1e-10);
            assert!(est.tapes.backward(&m).unwrap().max_abs_diff(&g) < 1e-10);
        }
    }

    #[test]
    fn two_scale_hand_case() {
        // M_1 = 2 pairs and M_2 = 2 coarse draws, fed explicitly:
        // L = ½(L(c₁) + L(c₂)) + ½((L(f₁) − L(g₁)) + (L(f₂) − L(g₂)))
        let m = model(3);
        let samples: Vec<_> = (10..16).map(|s| Arc::new(small_data(s, 6 + s as usize % 3))).collect();
        let l: Vec<f64> = samples.iter().map(|d| fine_loss(&m, d).0).collect();
        let mut q = QueueSampler::default();
        q.pairs.push(VecDeque::from(vec![
            (samples[0].clone(), samples[1].clone()),
            (samples[2].clone(), samples[3].clone()),
        ]));
        q.coarsest = VecDeque::from(vec![samples[4].clone(), samples[5].clone()]);
        let mut cfg = TelescopeConfig::new(2, 0);
        cfg.samples_per_term = vec![2, 2];
        let est = telescopic_loss(&m, &mut q, &cfg).unwrap();
        let expected = 0.5 * (l[4] + l[5]) + 0.5 * ((l[0] - l[1]) + (l[2] - l[3]));
        assert!((est.loss - expected).abs() < 1e-14);
        assert!(matches!(
            telescopic_loss(&m, &mut q, &cfg),
            Err(Error::SamplerExhausted(_))
        ));
    }

    #[test]
    fn estimator_gradient_is_weighted_sum_of_terms() {
        let m = model(4);
        let d: Vec<_> = (20..23).map(|s| Arc::new(small_data(s, 10))).collect();
        let mut q = QueueSampler::default();
        q.pairs.push(VecDeque::from(vec![(d[0].clone(), d[1].clone())]));
        q.coarsest = VecDeque::from(vec![d[2].clone(), d[2].clone()]);
        let mut cfg = TelescopeConfig::new(2, 0);
        cfg.samples_per_term = vec![1, 2];
        let est = telescopic_loss(&m, &mut q, &cfg).unwrap();
        let got = est.tapes.backward(&m).unwrap();
        let mut expected = fine_loss(&m, &d[0]).1;
        expected.add_scaled(-1.0, &fine_loss(&m, &d[1]).1).unwrap();
        expected.add_scaled(1.0, &fine_loss(&m, &d[2]).1).unwrap();
        assert!(got.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TelescopeConfig::new(3, 5);
        assert_eq!(cfg.samples(), vec![1, 2, 4]);
        assert!(cfg.validate().is_ok());
        cfg.samples_per_term = vec![4, 2, 1];
        assert!(cfg.validate().is_err());
        cfg.samples_per_term = vec![1, 2];
        assert!(cfg.validate().is_err());
        let mut cfg = TelescopeConfig::new(2, 5);
        cfg.retain_fraction = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn subset_sampler_pairs_are_nested() {
        let data = Arc::new(small_data(5, 40));
        let cfg = TelescopeConfig::new(3, 0);
        let mut s = SubsetSampler::new(data, &cfg, 9);
        let (fine, coarse) = s.sample_pair(3).unwrap();
        assert!(coarse.num_nodes() < fine.num_nodes());
        let fine_nodes = fine.selection.indices();
        assert!(coarse.selection.indices().iter().all(|i| fine_nodes.contains(i)));
        assert_eq!(s.sample_at(2).unwrap().num_nodes(), 8);
    }
}
