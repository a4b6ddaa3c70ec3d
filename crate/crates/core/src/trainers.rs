//! Single-level, coarse-to-fine and sub-to-full training loops.
//!
//! All loops share one [`Model`] and one Adam state; weights move from level
//! to level untouched. Validation and test accuracy are always measured on the
//! original graph, so coarse levels that dropped test nodes still report
//! comparable numbers.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarsening::{build_hierarchy_from, CoarsenPlan, LevelData, LevelHierarchy, Policy};
use crate::engine::{
    accuracy, forward, loss_and_gradients, AdamConfig, LossHead, Model, OptimizerState, Propagator,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSchedule {
    /// Epoch budget per level, index 0 = coarsest level.
    pub epochs_per_level: Vec<usize>,
    pub learning_rate: f64,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_eval_every() -> usize {
    10
}

impl TrainSchedule {
    /// `[…, 4·E, 2·E, E]` coarse to fine: the budget doubles at every
    /// coarsening step.
    pub fn doubling(levels: usize, fine_epochs: usize, learning_rate: f64) -> Self {
        let epochs_per_level = (0..levels).rev().map(|r| fine_epochs << r).collect();
        Self {
            epochs_per_level,
            learning_rate,
            eval_every: default_eval_every(),
            seed: 0,
        }
    }

    pub fn single(epochs: usize, learning_rate: f64) -> Self {
        Self {
            epochs_per_level: vec![epochs],
            learning_rate,
            eval_every: default_eval_every(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_level.is_empty() || self.epochs_per_level.contains(&0) {
            return Err(Error::Config("every level needs at least one epoch".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {}", self.learning_rate)));
        }
        Ok(())
    }

    /// Epochs for level `r` (1 = finest) of an `R`-level run.
    pub fn epochs_for(&self, r: usize) -> usize {
        let levels = self.epochs_per_level.len();
        self.epochs_per_level[levels - r]
    }

    pub fn total_epochs(&self) -> usize {
        self.epochs_per_level.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub level: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub cum_flops: u64,
    pub wall_ms: u64,
}

/// Per-epoch training records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricLog {
    pub records: Vec<MetricRecord>,
}

pub const METRIC_CSV_HEADER: &str = "level,epoch,train_loss,val_acc,test_acc,cum_flops,wall_ms";

impl MetricLog {
    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }

    pub fn total_flops(&self) -> u64 {
        self.records.last().map_or(0, |r| r.cum_flops)
    }

    pub fn final_test_acc(&self) -> Option<f64> {
        self.records.last().map(|r| r.test_acc)
    }

    /// Writes the log as CSV. With `with_wall_time == false` the `wall_ms`
    /// column is written as 0 so repeated runs produce identical bytes.
    pub fn write_csv<W: Write>(&self, mut w: W, with_wall_time: bool) -> std::io::Result<()> {
        writeln!(w, "{METRIC_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:.17e},{:.17e},{:.17e},{},{}",
                r.level,
                r.epoch,
                r.train_loss,
                r.val_acc,
                r.test_acc,
                r.cum_flops,
                if with_wall_time { r.wall_ms } else { 0 }
            )?;
        }
        Ok(())
    }
}

/// Argmax accuracy of `model` on `level` over `mask`.
pub fn evaluate(model: &Model, level: &LevelData, mask: &[bool]) -> Result<f64> {
    let prop = Propagator::new(&level.graph, model.normalize_adjacency);
    let (logits, _) = forward(model, &prop, &level.features)?;
    accuracy(&logits, &level.labels, mask)
}

/// Shared state of one training run: the optimizer, the reference level used
/// for evaluation, and the running FLOP and time counters.
pub struct TrainingSession<'a> {
    pub model: Model,
    pub optimizer: OptimizerState,
    pub log: MetricLog,
    eval_level: &'a LevelData,
    eval_prop: Propagator,
    eval_every: usize,
    cum_flops: u64,
    started: Instant,
}

impl<'a> TrainingSession<'a> {
    pub fn new(model: Model, eval_level: &'a LevelData, schedule: &TrainSchedule) -> Result<Self> {
        schedule.validate()?;
        model.validate()?;
        let optimizer = OptimizerState::new(&model, AdamConfig::with_lr(schedule.learning_rate));
        let eval_prop = Propagator::new(&eval_level.graph, model.normalize_adjacency);
        Ok(Self {
            model,
            optimizer,
            log: MetricLog::default(),
            eval_level,
            eval_prop,
            eval_every: schedule.eval_every,
            cum_flops: 0,
            started: Instant::now(),
        })
    }

    pub fn cum_flops(&self) -> u64 {
        self.cum_flops
    }

    pub fn add_flops(&mut self, flops: u64) {
        self.cum_flops += flops;
    }

    /// One full-batch step on `level`; returns the pre-step training loss.
    pub fn step_on(&mut self, prop: &Propagator, level: &LevelData) -> Result<f64> {
        let head = LossHead::Nll {
            labels: &level.labels,
            mask: &level.masks.train,
        };
        let eval = loss_and_gradients(&self.model, prop, &level.features, head)?;
        self.cum_flops += eval.flops;
        self.optimizer.step(&mut self.model, &eval.grads)?;
        Ok(eval.loss)
    }

    /// Logs the epoch when it falls on the evaluation stride or closes a level.
    pub fn record(&mut self, level: usize, epoch: usize, last_of_level: bool, train_loss: f64) -> Result<()> {
        if !train_loss.is_finite() {
            return Err(Error::Diverged { level, epoch });
        }
        if !(last_of_level || (epoch + 1) % self.eval_every == 0) {
            return Ok(());
        }
        let (logits, _) = forward(&self.model, &self.eval_prop, &self.eval_level.features)?;
        let masks = &self.eval_level.masks;
        let labels = &self.eval_level.labels;
        let val_acc = accuracy(&logits, labels, &masks.val)?;
        let test_acc = accuracy(&logits, labels, &masks.test)?;
        self.log.records.push(MetricRecord {
            level,
            epoch,
            train_loss,
            val_acc,
            test_acc,
            cum_flops: self.cum_flops,
            wall_ms: self.started.elapsed().as_millis() as u64,
        });
        Ok(())
    }

    /// Trains on one level for a fixed budget.
    pub fn train_level(&mut self, level_index: usize, level: &LevelData, epochs: usize) -> Result<()> {
        if level.masks.train_count() == 0 {
            return Err(Error::EmptyMask("training level has no training nodes"));
        }
        let prop = Propagator::new(&level.graph, self.model.normalize_adjacency);
        for epoch in 0..epochs {
            let loss = self.step_on(&prop, level)?;
            self.record(level_index, epoch, epoch + 1 == epochs, loss)?;
        }
        Ok(())
    }

    pub fn finish(self) -> (Model, MetricLog) {
        (self.model, self.log)
    }
}

/// Plain training on one graph for `schedule.epochs_per_level[0]` epochs.
pub fn train_single_level(model: Model, level: &LevelData, schedule: &TrainSchedule) -> Result<(Model, MetricLog)> {
    let epochs = *schedule
        .epochs_per_level
        .first()
        .ok_or_else(|| Error::Config("empty schedule".into()))?;
    let mut session = TrainingSession::new(model, level, schedule)?;
    session.train_level(1, level, epochs)?;
    Ok(session.finish())
}

/// Trains on levels `R, R−1, …, 1` with the same weights and optimizer state
/// throughout. `on_level_end` sees the model after each level.
pub fn coarse_to_fine_with(
    model: Model,
    hierarchy: &LevelHierarchy,
    schedule: &TrainSchedule,
    mut on_level_end: impl FnMut(usize, &Model),
) -> Result<(Model, MetricLog)> {
    let levels = hierarchy.num_levels();
    if schedule.epochs_per_level.len() != levels {
        return Err(Error::Config(format!(
            "schedule has {} entries for {levels} levels",
            schedule.epochs_per_level.len()
        )));
    }
    let mut session = TrainingSession::new(model, hierarchy.finest(), schedule)?;
    for r in (1..=levels).rev() {
        session.train_level(r, hierarchy.level(r), schedule.epochs_for(r))?;
        on_level_end(r, &session.model);
    }
    Ok(session.finish())
}

pub fn coarse_to_fine(model: Model, hierarchy: &LevelHierarchy, schedule: &TrainSchedule) -> Result<(Model, MetricLog)> {
    coarse_to_fine_with(model, hierarchy, schedule, |_, _| {})
}

/// Coarse-to-fine over growing subgraphs around one root: the coarsest level
/// is the smallest ego-network (or nearest-point patch) and each finer level
/// widens it until the full graph.
pub fn sub_to_full(
    model: Model,
    data: LevelData,
    plan: &CoarsenPlan,
    schedule: &TrainSchedule,
) -> Result<(Model, MetricLog, LevelHierarchy)> {
    if !matches!(plan.policy, Policy::Ego | Policy::NearestGeometric) {
        return Err(Error::Config(format!(
            "sub-to-full needs a subgraph policy, got {:?}",
            plan.policy
        )));
    }
    let hierarchy = build_hierarchy_from(data, plan)?;
    let (model, log) = coarse_to_fine(model, &hierarchy, schedule)?;
    Ok((model, log, hierarchy))
}
