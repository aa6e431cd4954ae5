//! Multi-head linear extraction model: six 5-way goal heads and eight
//! constraint heads over the shared feature vector, trained with the dual
//! goal loss and the temperature-annealed order-agnostic constraint loss.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::{featurize, FeatureConfig, FeatureVector};
use crate::corpus::CorpusExample;
use crate::game::map::GameMap;
use crate::intent::{
    Constraint, GoalBucket, IntentSpec, BUCKET_COUNT, CONSTRAINT_LABELS, CONSTRAINT_SLOTS,
    GOAL_COUNT,
};
use crate::losses::{
    constraint_grad_logits, constraint_loss_aligned, goal_grad_logits, goal_loss, oaxe_loss,
    softmax, Alignment, AnnealSchedule, SlotDistributions,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("loss diverged at step {step}: {loss}")]
    DivergedLoss { step: usize, loss: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("too few examples: have {have}, need at least {need}")]
    TooFewExamples { have: usize, need: usize },
    #[error("unsupported model format version {0}")]
    FormatVersion(u32),
    #[error("model file: {0}")]
    Serde(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which head groups a model carries and a training run fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Goals,
    Constraints,
    Both,
}

impl Task {
    pub fn wants_goals(self) -> bool {
        matches!(self, Task::Goals | Task::Both)
    }

    pub fn wants_constraints(self) -> bool {
        matches!(self, Task::Constraints | Task::Both)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Goals => f.write_str("goals"),
            Task::Constraints => f.write_str("constraints"),
            Task::Both => f.write_str("both"),
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "goals" => Ok(Task::Goals),
            "constraints" => Ok(Task::Constraints),
            "both" => Ok(Task::Both),
            other => Err(format!(
                "unknown task `{other}` (expected goals, constraints, or both)"
            )),
        }
    }
}

/// One affine classification head: `labels x dim` weights plus biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub labels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Head {
    fn zeroed(labels: usize, dim: usize) -> Head {
        Head {
            labels,
            weights: vec![0.0; labels * dim],
            bias: vec![0.0; labels],
        }
    }

    fn randomized(labels: usize, dim: usize, rng: &mut ChaCha8Rng) -> Head {
        let mut head = Head::zeroed(labels, dim);
        for w in &mut head.weights {
            *w = rng.random_range(-0.01..0.01);
        }
        head
    }

    fn logits(&self, fv: &FeatureVector, dim: usize) -> Vec<f64> {
        let mut logits = self.bias.clone();
        for (index, value) in fv.entries() {
            debug_assert!(index < dim);
            for (label, logit) in logits.iter_mut().enumerate() {
                *logit += self.weights[label * dim + index] * value;
            }
        }
        logits
    }

    /// `weights -= lr * grad_logits (outer) fv` with sparse features.
    fn apply_gradient(&mut self, grads: &[f64], fv: &FeatureVector, dim: usize, lr: f64) {
        for (index, value) in fv.entries() {
            for (label, g) in grads.iter().enumerate() {
                self.weights[label * dim + index] -= lr * g * value;
            }
        }
        for (label, g) in grads.iter().enumerate() {
            self.bias[label] -= lr * g;
        }
    }
}

/// The trained extraction model. Head groups are present according to the
/// task; parameters are plain `f64`s so files round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionModel {
    pub format_version: u32,
    pub task: Task,
    pub feature: FeatureConfig,
    pub seed: u64,
    pub goal_heads: Option<Vec<Head>>,
    pub constraint_heads: Option<Vec<Head>>,
}

impl ExtractionModel {
    /// All-zero parameters: every head predicts the uniform distribution.
    pub fn zeroed(task: Task, feature: FeatureConfig, seed: u64) -> ExtractionModel {
        let dim = feature.total_dim();
        ExtractionModel {
            format_version: MODEL_FORMAT_VERSION,
            task,
            feature,
            seed,
            goal_heads: task.wants_goals().then(|| {
                (0..GOAL_COUNT)
                    .map(|_| Head::zeroed(BUCKET_COUNT, dim))
                    .collect()
            }),
            constraint_heads: task.wants_constraints().then(|| {
                (0..CONSTRAINT_SLOTS)
                    .map(|_| Head::zeroed(CONSTRAINT_LABELS, dim))
                    .collect()
            }),
        }
    }

    /// Small random weights, the initialization training starts from.
    pub fn randomized(task: Task, feature: FeatureConfig, seed: u64) -> ExtractionModel {
        let dim = feature.total_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let goal_heads = task.wants_goals().then(|| {
            (0..GOAL_COUNT)
                .map(|_| Head::randomized(BUCKET_COUNT, dim, &mut rng))
                .collect()
        });
        let constraint_heads = task.wants_constraints().then(|| {
            (0..CONSTRAINT_SLOTS)
                .map(|_| Head::randomized(CONSTRAINT_LABELS, dim, &mut rng))
                .collect()
        });
        ExtractionModel {
            format_version: MODEL_FORMAT_VERSION,
            task,
            feature,
            seed,
            goal_heads,
            constraint_heads,
        }
    }

    pub fn featurize(
        &self,
        text: &str,
        selections: &BTreeMap<String, u32>,
        map: &GameMap,
    ) -> FeatureVector {
        featurize(text, selections, map, &self.feature)
    }

    fn check_dim(&self, fv: &FeatureVector) -> Result<(), ModelError> {
        if fv.total_dim() != self.feature.total_dim() {
            return Err(ModelError::DimensionMismatch(format!(
                "feature vector has {} dims, model expects {}",
                fv.total_dim(),
                self.feature.total_dim()
            )));
        }
        Ok(())
    }

    /// Per-head softmax distributions for whichever head groups exist.
    pub fn forward(&self, fv: &FeatureVector) -> Result<ModelOutput, ModelError> {
        self.check_dim(fv)?;
        let dim = self.feature.total_dim();
        let run = |heads: &Vec<Head>| {
            let rows: Vec<Vec<f64>> = heads.iter().map(|h| softmax(&h.logits(fv, dim))).collect();
            SlotDistributions::new(rows).expect("softmax rows are valid distributions")
        };
        Ok(ModelOutput {
            goals: self.goal_heads.as_ref().map(run),
            constraints: self.constraint_heads.as_ref().map(run),
        })
    }

    /// Predicts a well-formed intent. Goal heads report their argmax bucket
    /// as the bucket midpoint; constraint heads are read in slot order with
    /// greedy de-duplication (a head whose favourite label is taken falls
    /// back to its best remaining label; null is always available).
    pub fn predict(
        &self,
        map: &GameMap,
        text: &str,
        selections: &BTreeMap<String, u32>,
    ) -> Result<IntentSpec, ModelError> {
        let fv = self.featurize(text, selections, map);
        let output = self.forward(&fv)?;

        let mut goal_values = [0i32; GOAL_COUNT];
        if let Some(goals) = &output.goals {
            for (slot, value) in goal_values.iter_mut().enumerate() {
                let bucket = argmax(&goals.rows()[slot]);
                *value = GoalBucket(bucket as u8).midpoint();
            }
        }

        let mut slots = [None; CONSTRAINT_SLOTS];
        if let Some(constraints) = &output.constraints {
            let mut taken: Vec<Constraint> = Vec::new();
            for (slot, row) in constraints.rows().iter().enumerate() {
                let mut order: Vec<usize> = (0..row.len()).collect();
                order.sort_by(|a, b| row[*b].partial_cmp(&row[*a]).unwrap().then(a.cmp(b)));
                for label in order {
                    match Constraint::from_label_index(label) {
                        None => {
                            slots[slot] = None;
                            break;
                        }
                        Some(constraint) if !taken.contains(&constraint) => {
                            taken.push(constraint);
                            slots[slot] = Some(constraint);
                            break;
                        }
                        Some(_) => continue,
                    }
                }
            }
        }

        Ok(IntentSpec::new(goal_values, slots).expect("greedy de-duplication yields a valid spec"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let json = serde_json::to_string(self).map_err(|e| ModelError::Serde(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExtractionModel, ModelError> {
        let text = std::fs::read_to_string(path)?;
        let model: ExtractionModel =
            serde_json::from_str(&text).map_err(|e| ModelError::Serde(e.to_string()))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::FormatVersion(model.format_version));
        }
        let dim = model.feature.total_dim();
        let check = |heads: &Option<Vec<Head>>, count: usize, labels: usize, what: &str| {
            if let Some(heads) = heads {
                if heads.len() != count
                    || heads.iter().any(|h| {
                        h.labels != labels
                            || h.weights.len() != labels * dim
                            || h.bias.len() != labels
                    })
                {
                    return Err(ModelError::DimensionMismatch(format!(
                        "{what} heads do not match the declared feature configuration"
                    )));
                }
            }
            Ok(())
        };
        check(&model.goal_heads, GOAL_COUNT, BUCKET_COUNT, "goal")?;
        check(
            &model.constraint_heads,
            CONSTRAINT_SLOTS,
            CONSTRAINT_LABELS,
            "constraint",
        )?;
        Ok(model)
    }
}

#[derive(Debug, Clone)]
pub struct ModelOutput {
    pub goals: Option<SlotDistributions>,
    pub constraints: Option<SlotDistributions>,
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Training hyperparameters. `epochs`, `batch_size`, and `learning_rate`
/// default per task when unset (goals: 25/8/0.05, constraints: 10/16/0.05).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: f64,
    /// Goal-loss CE weight (`alpha`).
    pub alpha: f64,
    /// Temperature schedule steepness (`k`).
    pub anneal_steepness: f64,
    /// Temperature schedule midpoint (`m`, fraction of the run).
    pub anneal_midpoint: f64,
    pub seed: u64,
    pub folds: usize,
    pub text_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            task: Task::Both,
            epochs: None,
            batch_size: None,
            learning_rate: None,
            momentum: 0.0,
            alpha: 0.5,
            anneal_steepness: 10.0,
            anneal_midpoint: 0.5,
            seed: 0,
            folds: 10,
            text_dim: FeatureConfig::default().text_dim,
        }
    }
}

impl TrainConfig {
    pub fn feature(&self) -> FeatureConfig {
        FeatureConfig {
            text_dim: self.text_dim,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == Some(0) {
            return Err(ModelError::InvalidConfig(
                "epochs must be positive".to_string(),
            ));
        }
        if self.learning_rate.is_some_and(|lr| lr <= 0.0) {
            return Err(ModelError::InvalidConfig(
                "learning rate must be positive".to_string(),
            ));
        }
        if self.text_dim == 0 {
            return Err(ModelError::InvalidConfig(
                "text_dim must be positive".to_string(),
            ));
        }
        Ok(())
    }

    fn goal_hyper(&self) -> (usize, usize, f64) {
        (
            self.epochs.unwrap_or(25),
            self.batch_size.unwrap_or(8).max(1),
            self.learning_rate.unwrap_or(0.05),
        )
    }

    fn constraint_hyper(&self) -> (usize, usize, f64) {
        (
            self.epochs.unwrap_or(10),
            self.batch_size.unwrap_or(16).max(1),
            self.learning_rate.unwrap_or(0.05),
        )
    }
}

/// Per-epoch mean losses, pretraining epochs first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub goal_epoch_losses: Vec<f64>,
    pub constraint_epoch_losses: Vec<f64>,
}

struct PreparedExample {
    features: FeatureVector,
    goal_targets: [usize; GOAL_COUNT],
    constraint_targets: [usize; CONSTRAINT_SLOTS],
}

fn prepare(
    examples: &[CorpusExample],
    map: &GameMap,
    feature: &FeatureConfig,
) -> Vec<PreparedExample> {
    examples
        .iter()
        .map(|example| {
            let features = featurize(&example.text, &example.selections, map, feature);
            let mut goal_targets = [0usize; GOAL_COUNT];
            for (slot, goal) in crate::intent::Goal::ALL.iter().enumerate() {
                goal_targets[slot] = example.intent.goal_bucket(*goal).index();
            }
            let mut constraint_targets = [0usize; CONSTRAINT_SLOTS];
            for (slot, target) in constraint_targets.iter_mut().enumerate() {
                *target = Constraint::slot_label(&example.intent.constraints()[slot]);
            }
            PreparedExample {
                features,
                goal_targets,
                constraint_targets,
            }
        })
        .collect()
}

struct Velocity {
    per_head: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Velocity {
    fn new(heads: &[Head], dim: usize) -> Velocity {
        Velocity {
            per_head: heads
                .iter()
                .map(|h| (vec![0.0; h.labels * dim], vec![0.0; h.labels]))
                .collect(),
        }
    }
}

enum HeadGroup {
    Goals,
    Constraints,
}

/// One full pass (several epochs) of minibatch gradient descent over one
/// head group. Returns per-epoch mean losses.
#[allow(clippy::too_many_arguments)]
fn run_pass(
    model: &mut ExtractionModel,
    group: &HeadGroup,
    data: &[PreparedExample],
    epochs: usize,
    batch_size: usize,
    lr: f64,
    momentum: f64,
    alpha: f64,
    schedule: &AnnealSchedule,
    global_step: &mut usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, ModelError> {
    let dim = model.feature.total_dim();
    let mut epoch_losses = Vec::with_capacity(epochs);
    let mut velocity = {
        let heads = match group {
            HeadGroup::Goals => model.goal_heads.as_ref().unwrap(),
            HeadGroup::Constraints => model.constraint_heads.as_ref().unwrap(),
        };
        (momentum != 0.0).then(|| Velocity::new(heads, dim))
    };

    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let temperature = schedule.temperature(*global_step);
            *global_step += 1;
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;

            // per-head accumulated logit gradients, applied after the batch
            let heads = match group {
                HeadGroup::Goals => model.goal_heads.as_mut().unwrap(),
                HeadGroup::Constraints => model.constraint_heads.as_mut().unwrap(),
            };
            let mut updates: Vec<(usize, Vec<Vec<f64>>)> = Vec::with_capacity(batch.len());
            for &index in batch {
                let example = &data[index];
                let rows: Vec<Vec<f64>> = heads
                    .iter()
                    .map(|h| softmax(&h.logits(&example.features, dim)))
                    .collect();
                let probs =
                    SlotDistributions::new(rows).expect("softmax rows are valid distributions");
                let (loss, grads) = match group {
                    HeadGroup::Goals => {
                        let loss = goal_loss(&probs, &example.goal_targets, alpha);
                        let grads = goal_grad_logits(&probs, &example.goal_targets, alpha);
                        (loss, grads)
                    }
                    HeadGroup::Constraints => {
                        let (_, alignment) = oaxe_loss(&probs, &example.constraint_targets);
                        let loss = constraint_loss_aligned(
                            &probs,
                            &example.constraint_targets,
                            temperature,
                            &alignment,
                        );
                        let grads = constraint_grad_logits(
                            &probs,
                            &example.constraint_targets,
                            temperature,
                            &alignment,
                        );
                        (loss, grads)
                    }
                };
                batch_loss += loss;
                updates.push((index, grads));
            }

            batch_loss *= scale;
            if !batch_loss.is_finite() {
                return Err(ModelError::DivergedLoss {
                    step: *global_step,
                    loss: batch_loss,
                });
            }
            epoch_loss += batch_loss * batch.len() as f64;

            match &mut velocity {
                None => {
                    for (index, grads) in &updates {
                        let fv = &data[*index].features;
                        for (head, grad) in heads.iter_mut().zip(grads) {
                            let scaled: Vec<f64> = grad.iter().map(|g| g * scale).collect();
                            head.apply_gradient(&scaled, fv, dim, lr);
                        }
                    }
                }
                Some(velocity) => {
                    // dense momentum buffers; accumulate batch gradient first
                    for (head_index, (w_vel, b_vel)) in velocity.per_head.iter_mut().enumerate() {
                        for v in w_vel.iter_mut() {
                            *v *= momentum;
                        }
                        for v in b_vel.iter_mut() {
                            *v *= momentum;
                        }
                        for (index, grads) in &updates {
                            let fv = &data[*index].features;
                            let grad = &grads[head_index];
                            for (feature_index, value) in fv.entries() {
                                for (label, g) in grad.iter().enumerate() {
                                    w_vel[label * dim + feature_index] += g * scale * value;
                                }
                            }
                            for (label, g) in grad.iter().enumerate() {
                                b_vel[label] += g * scale;
                            }
                        }
                        let head = &mut heads[head_index];
                        for (w, v) in head.weights.iter_mut().zip(w_vel.iter()) {
                            *w -= lr * v;
                        }
                        for (b, v) in head.bias.iter_mut().zip(b_vel.iter()) {
                            *b -= lr * v;
                        }
                    }
                }
            }
        }
        epoch_losses.push(epoch_loss / data.len() as f64);
    }
    Ok(epoch_losses)
}

/// Trains a model: an optional pretraining pass over a synthetic corpus,
/// then the main pass. Deterministic for a fixed config and seed. The
/// constraint temperature anneals once across both passes.
pub fn train(
    corpus: &[CorpusExample],
    map: &GameMap,
    config: &TrainConfig,
    pretrain: Option<&[CorpusExample]>,
) -> Result<(ExtractionModel, TrainLog), ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    config.validate()?;
    let feature = config.feature();
    let mut model = ExtractionModel::randomized(config.task, feature, config.seed);
    let mut log = TrainLog::default();

    let main_data = prepare(corpus, map, &feature);
    let pre_data = pretrain.map(|examples| prepare(examples, map, &feature));

    if model.goal_heads.is_some() {
        let (epochs, batch, lr) = config.goal_hyper();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let mut step = 0;
        let schedule = AnnealSchedule::default(); // unused by the goal loss
        for data in pre_data.iter().chain(std::iter::once(&main_data)) {
            let losses = run_pass(
                &mut model,
                &HeadGroup::Goals,
                data,
                epochs,
                batch,
                lr,
                config.momentum,
                config.alpha,
                &schedule,
                &mut step,
                &mut rng,
            )?;
            log.goal_epoch_losses.extend(losses);
        }
    }

    if model.constraint_heads.is_some() {
        let (epochs, batch, lr) = config.constraint_hyper();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(2);
        let batches = |n: usize| n.div_ceil(batch);
        let total_steps = epochs
            * (batches(main_data.len()) + pre_data.as_ref().map(|d| batches(d.len())).unwrap_or(0));
        let schedule = AnnealSchedule::new(
            total_steps.max(1),
            config.anneal_steepness,
            config.anneal_midpoint,
        );
        let mut step = 0;
        for data in pre_data.iter().chain(std::iter::once(&main_data)) {
            let losses = run_pass(
                &mut model,
                &HeadGroup::Constraints,
                data,
                epochs,
                batch,
                lr,
                config.momentum,
                config.alpha,
                &schedule,
                &mut step,
                &mut rng,
            )?;
            log.constraint_epoch_losses.extend(losses);
        }
    }

    Ok((model, log))
}

/// Maximum relative error between analytic parameter gradients and central
/// finite differences, probed at `probes` random coordinates per head group
/// with the constraint alignment held fixed.
pub fn gradient_check(
    model: &ExtractionModel,
    map: &GameMap,
    examples: &[CorpusExample],
    alpha: f64,
    temperature: f64,
    probes: usize,
    seed: u64,
) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let dim = model.feature.total_dim();
    let data = prepare(examples, map, &model.feature);
    let scale = 1.0 / data.len() as f64;
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;

    // freeze alignments at the unperturbed parameters
    let alignments: Vec<Option<Alignment>> = data
        .iter()
        .map(|example| {
            model.constraint_heads.as_ref().map(|heads| {
                let rows: Vec<Vec<f64>> = heads
                    .iter()
                    .map(|head| softmax(&head.logits(&example.features, dim)))
                    .collect();
                let probs = SlotDistributions::new(rows).expect("valid rows");
                oaxe_loss(&probs, &example.constraint_targets).1
            })
        })
        .collect();

    let batch_loss = |model: &ExtractionModel| -> f64 {
        data.iter()
            .zip(&alignments)
            .map(|(example, alignment)| {
                let mut loss = 0.0;
                if let Some(heads) = &model.goal_heads {
                    let rows: Vec<Vec<f64>> = heads
                        .iter()
                        .map(|head| softmax(&head.logits(&example.features, dim)))
                        .collect();
                    let probs = SlotDistributions::new(rows).expect("valid rows");
                    loss += goal_loss(&probs, &example.goal_targets, alpha);
                }
                if let Some(heads) = &model.constraint_heads {
                    let rows: Vec<Vec<f64>> = heads
                        .iter()
                        .map(|head| softmax(&head.logits(&example.features, dim)))
                        .collect();
                    let probs = SlotDistributions::new(rows).expect("valid rows");
                    loss += constraint_loss_aligned(
                        &probs,
                        &example.constraint_targets,
                        temperature,
                        alignment
                            .as_ref()
                            .expect("constraint heads imply alignments"),
                    );
                }
                loss * scale
            })
            .sum()
    };

    // analytic batch gradients per head group
    let mut goal_grads: Option<Vec<(Vec<f64>, Vec<f64>)>> =
        model.goal_heads.as_ref().map(|heads| {
            heads
                .iter()
                .map(|h| (vec![0.0; h.labels * dim], vec![0.0; h.labels]))
                .collect()
        });
    let mut constraint_grads: Option<Vec<(Vec<f64>, Vec<f64>)>> =
        model.constraint_heads.as_ref().map(|heads| {
            heads
                .iter()
                .map(|h| (vec![0.0; h.labels * dim], vec![0.0; h.labels]))
                .collect()
        });

    for (example, alignment) in data.iter().zip(&alignments) {
        if let (Some(heads), Some(accum)) = (&model.goal_heads, goal_grads.as_mut()) {
            let rows: Vec<Vec<f64>> = heads
                .iter()
                .map(|head| softmax(&head.logits(&example.features, dim)))
                .collect();
            let probs = SlotDistributions::new(rows).expect("valid rows");
            let grads = goal_grad_logits(&probs, &example.goal_targets, alpha);
            accumulate(accum, &grads, &example.features, dim, scale);
        }
        if let (Some(heads), Some(accum)) = (&model.constraint_heads, constraint_grads.as_mut()) {
            let rows: Vec<Vec<f64>> = heads
                .iter()
                .map(|head| softmax(&head.logits(&example.features, dim)))
                .collect();
            let probs = SlotDistributions::new(rows).expect("valid rows");
            let grads = constraint_grad_logits(
                &probs,
                &example.constraint_targets,
                temperature,
                alignment
                    .as_ref()
                    .expect("constraint heads imply alignments"),
            );
            accumulate(accum, &grads, &example.features, dim, scale);
        }
    }

    type ParamSlot = Box<dyn Fn(&mut ExtractionModel) -> &mut f64>;

    // probe random coordinates, preferring ones touched by the features
    let feature_indices: Vec<usize> = {
        let mut all: Vec<usize> = data
            .iter()
            .flat_map(|example| example.features.entries().map(|(i, _)| i))
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    let probe = |heads: &Option<Vec<Head>>,
                 grads: &Option<Vec<(Vec<f64>, Vec<f64>)>>,
                 is_goal: bool,
                 rng: &mut ChaCha8Rng,
                 max_rel: &mut f64| {
        let (Some(heads), Some(grads)) = (heads, grads) else {
            return;
        };
        for _ in 0..probes {
            let head_index = rng.random_range(0..heads.len());
            let labels = heads[head_index].labels;
            let label = rng.random_range(0..labels);
            let use_bias = rng.random_range(0..4) == 0 || feature_indices.is_empty();
            let mut perturbed = model.clone();
            let (analytic, slot): (f64, ParamSlot) = if use_bias {
                (
                    grads[head_index].1[label],
                    Box::new(move |m: &mut ExtractionModel| {
                        let heads = if is_goal {
                            m.goal_heads.as_mut().unwrap()
                        } else {
                            m.constraint_heads.as_mut().unwrap()
                        };
                        &mut heads[head_index].bias[label]
                    }),
                )
            } else {
                let fi = feature_indices[rng.random_range(0..feature_indices.len())];
                (
                    grads[head_index].0[label * dim + fi],
                    Box::new(move |m: &mut ExtractionModel| {
                        let heads = if is_goal {
                            m.goal_heads.as_mut().unwrap()
                        } else {
                            m.constraint_heads.as_mut().unwrap()
                        };
                        &mut heads[head_index].weights[label * dim + fi]
                    }),
                )
            };
            *slot(&mut perturbed) += h;
            let plus = batch_loss(&perturbed);
            *slot(&mut perturbed) -= 2.0 * h;
            let minus = batch_loss(&perturbed);
            let fd = (plus - minus) / (2.0 * h);
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
            *max_rel = max_rel.max(rel);
        }
    };
    probe(&model.goal_heads, &goal_grads, true, &mut rng, &mut max_rel);
    probe(
        &model.constraint_heads,
        &constraint_grads,
        false,
        &mut rng,
        &mut max_rel,
    );
    Ok(max_rel)
}

fn accumulate(
    accum: &mut [(Vec<f64>, Vec<f64>)],
    grads: &[Vec<f64>],
    fv: &FeatureVector,
    dim: usize,
    scale: f64,
) {
    for (head_index, grad) in grads.iter().enumerate() {
        let (w, b) = &mut accum[head_index];
        for (feature_index, value) in fv.entries() {
            for (label, g) in grad.iter().enumerate() {
                w[label * dim + feature_index] += g * scale * value;
            }
        }
        for (label, g) in grad.iter().enumerate() {
            b[label] += g * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate::{generate_corpus, TemplateBank};
    use crate::game::state::builtin_initializations;

    fn map() -> &'static GameMap {
        GameMap::canonical()
    }

    fn small_corpus(n: usize, seed: u64) -> Vec<CorpusExample> {
        generate_corpus(
            map(),
            builtin_initializations(),
            TemplateBank::builtin(),
            n,
            seed,
        )
        .unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            text_dim: 512,
            epochs: Some(2),
            seed: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_model_is_uniform_and_predicts_well_formed_specs() {
        let model = ExtractionModel::zeroed(Task::Both, FeatureConfig { text_dim: 256 }, 0);
        let example = &small_corpus(1, 11)[0];
        let fv = model.featurize(&example.text, &example.selections, map());
        let output = model.forward(&fv).unwrap();
        let goals = output.goals.unwrap();
        for row in goals.rows() {
            for p in row {
                assert!((p - 0.2).abs() < 1e-12);
            }
        }
        let constraints = output.constraints.unwrap();
        assert_eq!(constraints.slot_count(), 8);
        assert_eq!(constraints.label_count(), CONSTRAINT_LABELS);
        // prediction is still a valid spec
        let spec = model
            .predict(map(), &example.text, &example.selections)
            .unwrap();
        assert_eq!(spec.constraints().len(), 8);
    }

    #[test]
    fn two_epochs_reduce_loss_on_synthetic_data() {
        let corpus = small_corpus(100, 3);
        let (_, log) = train(&corpus, map(), &small_config(), None).unwrap();
        let goals = &log.goal_epoch_losses;
        let constraints = &log.constraint_epoch_losses;
        assert!(goals.last().unwrap() < goals.first().unwrap());
        assert!(constraints.last().unwrap() < constraints.first().unwrap());
    }

    #[test]
    fn training_is_bit_deterministic() {
        let corpus = small_corpus(40, 5);
        let (a, log_a) = train(&corpus, map(), &small_config(), None).unwrap();
        let (b, log_b) = train(&corpus, map(), &small_config(), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn memorizes_a_single_repeated_example() {
        let example = small_corpus(1, 9).remove(0);
        let corpus: Vec<CorpusExample> = vec![example.clone(); 24];
        let config = TrainConfig {
            text_dim: 512,
            epochs: Some(30),
            seed: 1,
            ..TrainConfig::default()
        };
        let (model, _) = train(&corpus, map(), &config, None).unwrap();
        let predicted = model
            .predict(map(), &example.text, &example.selections)
            .unwrap();
        let (goals_correct, constraints_correct) =
            crate::intent::score_prediction(&predicted, &example.intent);
        assert_eq!(goals_correct, 6);
        assert_eq!(constraints_correct, 8);
    }

    #[test]
    fn duplicate_argmax_heads_fall_back() {
        // two heads that both love the same concrete label
        let feature = FeatureConfig { text_dim: 8 };
        let mut model = ExtractionModel::zeroed(Task::Constraints, feature, 0);
        let heads = model.constraint_heads.as_mut().unwrap();
        let favourite = 3usize; // some concrete constraint
        let runner_up = 10usize;
        for head in heads.iter_mut().take(2) {
            head.bias[favourite] = 5.0;
            head.bias[runner_up] = 4.0;
        }
        let spec = model.predict(map(), "anything", &BTreeMap::new()).unwrap();
        let slots = spec.constraints();
        assert_eq!(slots[0], Constraint::from_label_index(favourite));
        assert_eq!(slots[1], Constraint::from_label_index(runner_up));
        // remaining zero heads drift to earliest labels with de-duplication,
        // and the result is well-formed by construction
        let concrete: Vec<_> = spec.non_null_constraints().collect();
        let mut dedup = concrete.clone();
        dedup.dedup();
        assert_eq!(concrete.len(), dedup.len());
    }

    #[test]
    fn gradient_check_at_initialization() {
        let corpus = small_corpus(5, 13);
        let model = ExtractionModel::randomized(Task::Both, FeatureConfig { text_dim: 256 }, 3);
        for (alpha, temperature) in [(0.5, 0.5), (1.0, 1.0), (0.0, 0.0)] {
            let max_rel =
                gradient_check(&model, map(), &corpus, alpha, temperature, 40, 17).unwrap();
            assert!(max_rel < 1e-4, "max relative error {max_rel}");
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            train(&[], map(), &small_config(), None),
            Err(ModelError::EmptyCorpus)
        ));
        let corpus = small_corpus(4, 1);
        let bad = TrainConfig {
            learning_rate: Some(0.0),
            ..small_config()
        };
        assert!(matches!(
            train(&corpus, map(), &bad, None),
            Err(ModelError::InvalidConfig(_))
        ));
    }

    #[test]
    fn pretraining_runs_a_two_phase_pass() {
        let pretrain = small_corpus(30, 21);
        let main = small_corpus(20, 22);
        let config = TrainConfig {
            task: Task::Constraints,
            text_dim: 256,
            epochs: Some(3),
            seed: 2,
            ..TrainConfig::default()
        };
        let (with_pre, log) = train(&main, map(), &config, Some(&pretrain)).unwrap();
        // pretraining epochs logged first, then the main pass
        assert_eq!(log.constraint_epoch_losses.len(), 6);
        let (without_pre, _) = train(&main, map(), &config, None).unwrap();
        assert_ne!(with_pre, without_pre);
        // deterministic across reruns
        let (again, log_again) = train(&main, map(), &config, Some(&pretrain)).unwrap();
        assert_eq!(with_pre, again);
        assert_eq!(log, log_again);
    }

    #[test]
    fn model_file_round_trip() {
        let corpus = small_corpus(10, 2);
        let config = TrainConfig {
            text_dim: 128,
            epochs: Some(1),
            ..TrainConfig::default()
        };
        let (model, _) = train(&corpus, map(), &config, None).unwrap();
        let dir = std::env::temp_dir().join("stratagem-model-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        model.save(&path).unwrap();
        let loaded = ExtractionModel::load(&path).unwrap();
        assert_eq!(model, loaded);
        std::fs::remove_file(&path).ok();
    }
}
