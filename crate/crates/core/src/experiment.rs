//! Experiment configuration and the runner behind the `msgnn` binary.
//!
//! A config is one TOML file. Every seed runs independently and writes into
//! its own directory under `<output>/<name>/`:
//!
//! ```text
//! <output>/<name>/manifest.json
//! <output>/<name>/summary.json
//! <output>/<name>/seed-<s>/metrics.csv      training modes
//! <output>/<name>/seed-<s>/model.{json,bin} training modes
//! <output>/<name>/seed-<s>/theorem.json     theorem mode
//! <output>/<name>/seed-<s>/inspect.json     coarsen-inspect mode
//! <output>/<name>/seed-<s>/flops.json       flops mode
//! ```

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coarsening::{build_hierarchy_from, CoarsenPlan, LevelData, LevelHierarchy};
use crate::datasets::{gen_qtips, gen_sbm, qtips_union, QtipsSpec, SbmSpec};
use crate::engine::{forward, save_checkpoint, LossHead, Model, ModelSpec, Propagator, CHECKPOINT_FORMAT};
use crate::error::{Error, Result};
use crate::io::DatasetFiles;
use crate::telescope::{train_ms_gradient, TelescopeConfig};
use crate::theory::{run_theorem_trials, TheoremReport, TheoremTrials};
use crate::trainers::{coarse_to_fine, evaluate, sub_to_full, train_single_level, MetricLog, TrainSchedule, METRIC_CSV_HEADER};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "MSGNN_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Baseline,
    #[serde(rename = "coarse2fine")]
    CoarseToFine,
    #[serde(rename = "sub2full")]
    SubToFull,
    Msgrad,
    Theorem,
    Flops,
    CoarsenInspect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Sbm(SbmSpec),
    /// Scenes from `train` form the training split; scenes from `held_out`
    /// alternate between validation and test.
    Qtips { train: QtipsSpec, held_out: QtipsSpec },
    Files(DatasetFiles),
}

impl DatasetSpec {
    /// Relative file paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<LevelData> {
        match self {
            DatasetSpec::Sbm(spec) => gen_sbm(spec),
            DatasetSpec::Qtips { train, held_out } => qtips_union(&gen_qtips(train)?, &gen_qtips(held_out)?),
            DatasetSpec::Files(files) => files.load(base),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Write measured wall time into the metric CSVs. Off by default so
    /// repeated runs produce identical files.
    #[serde(default)]
    pub with_wall_time: bool,
    /// Model checkpoint stem evaluated by `coarsen-inspect` instead of a
    /// freshly initialized model.
    #[serde(default)]
    pub inspect_checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub plan: Option<CoarsenPlan>,
    #[serde(default)]
    pub schedule: Option<TrainSchedule>,
    #[serde(default)]
    pub telescope: Option<TelescopeConfig>,
    #[serde(default)]
    pub theorem: Option<TheoremTrials>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

fn missing(section: &str, mode: Mode) -> Error {
    Error::Config(format!("mode {mode:?} needs a [{section}] section"))
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without the mode checks, which only make sense once command
    /// line overrides are applied.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and parses a config file; see [`Overrides::apply`] for validation.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Hex SHA-256 of the serialized config.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let mode = self.mode;
        let needs = |present: bool, section: &str| if present { Ok(()) } else { Err(missing(section, mode)) };
        if mode != Mode::Theorem {
            needs(self.dataset.is_some(), "dataset")?;
            needs(self.model.is_some(), "model")?;
        }
        match mode {
            Mode::Baseline | Mode::Flops => needs(self.schedule.is_some(), "schedule")?,
            Mode::CoarseToFine | Mode::SubToFull => {
                needs(self.plan.is_some(), "plan")?;
                needs(self.schedule.is_some(), "schedule")?;
            }
            Mode::Msgrad => {
                needs(self.telescope.is_some(), "telescope")?;
                needs(self.schedule.is_some(), "schedule")?;
            }
            Mode::CoarsenInspect => needs(self.plan.is_some(), "plan")?,
            Mode::Theorem => {}
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if let Some(p) = &self.plan {
            p.validate()?;
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        if let Some(t) = &self.telescope {
            t.validate()?;
        }
        Ok(())
    }
}

/// Command-line adjustments applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Overrides {
    /// Output precedence: explicit `out`, then `MSGNN_OUT_DIR`, then the config.
    pub fn apply(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        } else if let Some(env) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            cfg.output = PathBuf::from(env);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub test_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub total_flops: u64,
    pub epochs: usize,
    pub wall_ms: u64,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub mode: Mode,
    pub runs: usize,
    pub test_acc_mean: Option<f64>,
    /// Population standard deviation over seeds.
    pub test_acc_std: Option<f64>,
    pub total_flops_mean: f64,
    pub wall_ms_total: u64,
    pub warnings: Vec<String>,
    pub seeds: Vec<SeedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub crate_version: String,
    pub metric_csv_header: String,
    pub checkpoint_format: String,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Seeds a fresh model from the run seed.
pub fn init_model(spec: &ModelSpec, seed: u64) -> Result<Model> {
    Model::init(spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Warnings about config sections the mode does not use.
pub fn mode_warnings(cfg: &ExperimentConfig) -> Vec<String> {
    let mut w = Vec::new();
    if cfg.mode == Mode::Baseline {
        if cfg.plan.as_ref().is_some_and(|p| p.levels > 1) {
            w.push("baseline mode trains on the original graph; the coarsening plan is ignored".into());
        }
        if cfg.schedule.as_ref().is_some_and(|s| s.epochs_per_level.len() > 1) {
            w.push("baseline mode uses only the finest entry of epochs_per_level".into());
        }
    }
    if cfg.telescope.is_some() && cfg.mode != Mode::Msgrad {
        w.push(format!("mode {:?} ignores the [telescope] section", cfg.mode));
    }
    w
}

/// Schedule for an `levels`-level run: a single-entry schedule is expanded
/// by doubling toward the coarse levels.
pub fn schedule_for_levels(schedule: &TrainSchedule, levels: usize) -> Result<TrainSchedule> {
    let n = schedule.epochs_per_level.len();
    if n == levels {
        return Ok(schedule.clone());
    }
    if n == 1 {
        let mut s = TrainSchedule::doubling(levels, schedule.epochs_per_level[0], schedule.learning_rate);
        s.eval_every = schedule.eval_every;
        s.seed = schedule.seed;
        return Ok(s);
    }
    Err(Error::Config(format!("schedule has {n} entries for {levels} levels")))
}

struct SeedRun<'a> {
    cfg: &'a ExperimentConfig,
    data: Option<Arc<LevelData>>,
    dir: PathBuf,
    seed: u64,
}

impl SeedRun<'_> {
    fn data(&self) -> &LevelData {
        self.data.as_deref().expect("validated config has a dataset")
    }

    fn model_spec(&self) -> &ModelSpec {
        self.cfg.model.as_ref().expect("validated config has a model")
    }

    fn schedule(&self) -> TrainSchedule {
        let mut s = self.cfg.schedule.clone().expect("validated config has a schedule");
        s.seed = self.seed;
        s
    }

    fn plan(&self) -> CoarsenPlan {
        let mut p = self.cfg.plan.clone().expect("validated config has a plan");
        p.seed = self.seed;
        p
    }

    fn model(&self) -> Result<Model> {
        let spec = self.model_spec();
        let c = self.data().features.cols();
        if spec.channels[0] != c {
            return Err(Error::Config(format!(
                "model expects {} input channels, dataset has {c}",
                spec.channels[0]
            )));
        }
        init_model(spec, self.seed)
    }

    fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<String> {
        let f = fs::File::create(self.dir.join(file))?;
        serde_json::to_writer_pretty(BufWriter::new(f), value)?;
        Ok(file.to_string())
    }

    fn finish_training(&self, model: &Model, log: &MetricLog, started: Instant) -> Result<SeedResult> {
        let f = fs::File::create(self.dir.join("metrics.csv"))?;
        log.write_csv(BufWriter::new(f), self.cfg.with_wall_time)?;
        save_checkpoint(model, &self.dir.join("model"))?;
        let last = log.last();
        Ok(SeedResult {
            seed: self.seed,
            test_acc: last.map(|r| r.test_acc),
            val_acc: last.map(|r| r.val_acc),
            total_flops: log.total_flops(),
            epochs: log.records.iter().map(|r| r.epoch + 1).max().unwrap_or(0),
            wall_ms: started.elapsed().as_millis() as u64,
            artifacts: vec!["metrics.csv".into(), "model.json".into(), "model.bin".into()],
        })
    }

    fn run(&self) -> Result<SeedResult> {
        fs::create_dir_all(&self.dir)?;
        let started = Instant::now();
        match self.cfg.mode {
            Mode::Baseline => {
                let mut schedule = self.schedule();
                let fine = *schedule.epochs_per_level.last().expect("validated");
                schedule.epochs_per_level = vec![fine];
                let (model, log) = train_single_level(self.model()?, self.data(), &schedule)?;
                self.finish_training(&model, &log, started)
            }
            Mode::CoarseToFine => {
                let plan = self.plan();
                let hierarchy = build_hierarchy_from(self.data().clone(), &plan)?;
                let schedule = schedule_for_levels(&self.schedule(), plan.levels)?;
                let (model, log) = coarse_to_fine(self.model()?, &hierarchy, &schedule)?;
                self.finish_training(&model, &log, started)
            }
            Mode::SubToFull => {
                let plan = self.plan();
                let schedule = schedule_for_levels(&self.schedule(), plan.levels)?;
                let (model, log, _) = sub_to_full(self.model()?, self.data().clone(), &plan, &schedule)?;
                self.finish_training(&model, &log, started)
            }
            Mode::Msgrad => {
                let tele = self.cfg.telescope.as_ref().expect("validated");
                let schedule = self.schedule();
                let (model, log) = train_ms_gradient(self.model()?, self.data(), tele, &schedule)?;
                self.finish_training(&model, &log, started)
            }
            Mode::Theorem => {
                let mut trials = self.cfg.theorem.clone().unwrap_or_default();
                trials.seed = self.seed;
                let report: TheoremReport = run_theorem_trials(&trials)?;
                let file = self.write_json("theorem.json", &report)?;
                Ok(SeedResult {
                    seed: self.seed,
                    test_acc: None,
                    val_acc: None,
                    total_flops: 0,
                    epochs: 0,
                    wall_ms: started.elapsed().as_millis() as u64,
                    artifacts: vec![file],
                })
            }
            Mode::CoarsenInspect => {
                let plan = self.plan();
                let hierarchy = build_hierarchy_from(self.data().clone(), &plan)?;
                let model = match &self.cfg.inspect_checkpoint {
                    Some(stem) => crate::engine::load_checkpoint(stem)?,
                    None => self.model()?,
                };
                let report = inspect_hierarchy(&hierarchy, &model)?;
                print!("{}", report.table());
                let file = self.write_json("inspect.json", &report)?;
                Ok(SeedResult {
                    seed: self.seed,
                    test_acc: None,
                    val_acc: None,
                    total_flops: 0,
                    epochs: 0,
                    wall_ms: started.elapsed().as_millis() as u64,
                    artifacts: vec![file],
                })
            }
            Mode::Flops => {
                let model = self.model()?;
                let levels = match &self.cfg.plan {
                    Some(_) => build_hierarchy_from(self.data().clone(), &self.plan())?,
                    None => LevelHierarchy::single(self.data().clone()),
                };
                let schedule = schedule_for_levels(&self.schedule(), levels.num_levels())?;
                let report = flop_report(&model, &levels, &schedule)?;
                print!("{}", report.table());
                let file = self.write_json("flops.json", &report)?;
                Ok(SeedResult {
                    seed: self.seed,
                    test_acc: None,
                    val_acc: None,
                    total_flops: report.multilevel_total,
                    epochs: schedule.total_epochs(),
                    wall_ms: started.elapsed().as_millis() as u64,
                    artifacts: vec![file],
                })
            }
        }
    }
}

/// Runs every seed of `cfg`, at most `jobs` at a time, and writes the
/// manifest and summary. `base` resolves relative dataset paths.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path, jobs: usize) -> Result<Summary> {
    cfg.validate()?;
    let warnings = mode_warnings(cfg);
    for w in &warnings {
        warn!("{w}");
    }
    let data = match (&cfg.dataset, cfg.mode) {
        (_, Mode::Theorem) | (None, _) => None,
        (Some(spec), _) => Some(Arc::new(spec.load(base)?)),
    };
    let root = cfg.output.join(&cfg.name);
    fs::create_dir_all(&root)?;
    let manifest = Manifest {
        name: cfg.name.clone(),
        config_hash: cfg.hash()?,
        seeds: cfg.seeds.clone(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        metric_csv_header: METRIC_CSV_HEADER.into(),
        checkpoint_format: CHECKPOINT_FORMAT.into(),
    };
    serde_json::to_writer_pretty(BufWriter::new(fs::File::create(root.join("manifest.json"))?), &manifest)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<SeedResult> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                SeedRun {
                    cfg,
                    data: data.clone(),
                    dir: root.join(format!("seed-{seed}")),
                    seed,
                }
                .run()
            })
            .collect::<Result<_>>()
    })?;

    let accs: Vec<f64> = results.iter().filter_map(|r| r.test_acc).collect();
    let stats = mean_std(&accs);
    let summary = Summary {
        name: cfg.name.clone(),
        mode: cfg.mode,
        runs: results.len(),
        test_acc_mean: stats.map(|s| s.0),
        test_acc_std: stats.map(|s| s.1),
        total_flops_mean: results.iter().map(|r| r.total_flops as f64).sum::<f64>() / results.len() as f64,
        wall_ms_total: results.iter().map(|r| r.wall_ms).sum(),
        warnings,
        seeds: results,
    };
    serde_json::to_writer_pretty(BufWriter::new(fs::File::create(root.join("summary.json"))?), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Nodes relative to the previous level (1.0 at level 1).
    pub node_ratio: f64,
    /// Edges relative to the previous level (1.0 at level 1, and whenever the
    /// previous level has no edges).
    pub edge_ratio: f64,
    pub train_nodes: usize,
    pub loss: f64,
    /// `|L_r − L_1|` on the training masks.
    pub delta_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub levels: Vec<LevelStats>,
}

impl InspectReport {
    pub fn table(&self) -> String {
        let mut s = String::from("level  nodes  edges  node_ratio  edge_ratio  train  loss  delta_loss\n");
        for l in &self.levels {
            s.push_str(&format!(
                "{}  {}  {}  {:.4}  {:.4}  {}  {:.6e}  {:.6e}\n",
                l.level, l.nodes, l.edges, l.node_ratio, l.edge_ratio, l.train_nodes, l.loss, l.delta_loss
            ));
        }
        s
    }
}

/// Per-level sizes and the training-loss gap to the finest level.
pub fn inspect_hierarchy(hierarchy: &LevelHierarchy, model: &Model) -> Result<InspectReport> {
    let mut levels: Vec<LevelStats> = Vec::with_capacity(hierarchy.num_levels());
    for (k, lvl) in hierarchy.levels().iter().enumerate() {
        let prop = Propagator::new(&lvl.graph, model.normalize_adjacency);
        let (logits, _) = forward(model, &prop, &lvl.features)?;
        let (loss, _) = LossHead::Nll {
            labels: &lvl.labels,
            mask: &lvl.masks.train,
        }
        .evaluate(&logits)?;
        let (nodes, edges) = (lvl.num_nodes(), lvl.graph.num_undirected_edges());
        let (node_ratio, edge_ratio) = match levels.last() {
            None => (1.0, 1.0),
            Some(prev) => (
                nodes as f64 / prev.nodes as f64,
                if prev.edges == 0 { 1.0 } else { edges as f64 / prev.edges as f64 },
            ),
        };
        let fine_loss = levels.first().map_or(loss, |l| l.loss);
        levels.push(LevelStats {
            level: k + 1,
            nodes,
            edges,
            node_ratio,
            edge_ratio,
            train_nodes: lvl.masks.train_count(),
            loss,
            delta_loss: (loss - fine_loss).abs(),
        });
    }
    Ok(InspectReport { levels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFlops {
    pub level: usize,
    pub nodes: usize,
    pub edges: usize,
    pub flops_per_epoch: u64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopReport {
    pub levels: Vec<LevelFlops>,
    pub multilevel_total: u64,
    /// Same total epoch count spent entirely on level 1.
    pub fine_only_total: u64,
}

impl FlopReport {
    pub fn table(&self) -> String {
        let mut s = String::from("level  nodes  edges  flops_per_epoch  epochs\n");
        for l in &self.levels {
            s.push_str(&format!(
                "{}  {}  {}  {}  {}\n",
                l.level, l.nodes, l.edges, l.flops_per_epoch, l.epochs
            ));
        }
        s.push_str(&format!(
            "multilevel total {}  fine-only total {}\n",
            self.multilevel_total, self.fine_only_total
        ));
        s
    }
}

/// Forward-pass FLOPs per training epoch at each level and the schedule totals.
pub fn flop_report(model: &Model, hierarchy: &LevelHierarchy, schedule: &TrainSchedule) -> Result<FlopReport> {
    let mut levels = Vec::new();
    for (k, lvl) in hierarchy.levels().iter().enumerate() {
        let prop = Propagator::new(&lvl.graph, model.normalize_adjacency);
        let (_, tape) = forward(model, &prop, &lvl.features)?;
        levels.push(LevelFlops {
            level: k + 1,
            nodes: lvl.num_nodes(),
            edges: lvl.graph.num_undirected_edges(),
            flops_per_epoch: tape.flops(),
            epochs: schedule.epochs_for(k + 1),
        });
    }
    let multilevel_total = levels.iter().map(|l| l.flops_per_epoch * l.epochs as u64).sum();
    let fine_only_total = levels[0].flops_per_epoch * schedule.total_epochs() as u64;
    Ok(FlopReport {
        levels,
        multilevel_total,
        fine_only_total,
    })
}

/// Test accuracy of `model` on level 1 of `data`.
pub fn test_accuracy(model: &Model, data: &LevelData) -> Result<f64> {
    evaluate(model, data, &data.masks.test)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SBM_C2F: &str = r#"
name = "c2f"
mode = "coarse2fine"
seeds = [1, 2, 3]

[dataset]
kind = "sbm"
nodes = 60
blocks = 3
p_in = 0.3
p_out = 0.02
feature_noise = 0.5
seed = 5

[model]
kind = "gcn"
channels = [3, 8, 3]

[plan]
levels = 2
policy = "random"

[schedule]
epochs_per_level = [20, 10]
learning_rate = 0.05
eval_every = 5
"#;

    #[test]
    fn config_round_trips() {
        let cfg = ExperimentConfig::from_toml(SBM_C2F).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = ExperimentConfig::from_toml("mode = \"baseline\"\nseeds = [1]\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = ExperimentConfig::from_toml("mode = \"baseline\"\nseeds = []\n").unwrap_err();
        assert!(err.to_string().contains("seeds"), "{err}");
        let err = ExperimentConfig::from_toml("mode = \"msgrad\"\nseeds = [1]\n").unwrap_err();
        assert!(err.to_string().contains("dataset"), "{err}");
    }

    #[test]
    fn baseline_warns_about_plan() {
        let mut cfg = ExperimentConfig::from_toml(SBM_C2F).unwrap();
        cfg.mode = Mode::Baseline;
        let w = mode_warnings(&cfg);
        assert!(w.iter().any(|m| m.contains("plan is ignored")));
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).is_none());
    }

    #[test]
    fn single_entry_schedule_doubles() {
        let s = schedule_for_levels(&TrainSchedule::single(100, 0.01), 3).unwrap();
        assert_eq!(s.epochs_per_level, vec![400, 200, 100]);
        assert!(schedule_for_levels(&TrainSchedule::doubling(2, 10, 0.01), 3).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = ExperimentConfig::from_toml(SBM_C2F).unwrap();
        let o = Overrides {
            mode: Some(Mode::Baseline),
            seed: Some(9),
            out: Some(PathBuf::from("/tmp/x")),
            jobs: None,
        };
        let cfg = o.apply(cfg).unwrap();
        assert_eq!(cfg.mode, Mode::Baseline);
        assert_eq!(cfg.seeds, vec![9]);
        assert_eq!(cfg.output, PathBuf::from("/tmp/x"));
    }
}
