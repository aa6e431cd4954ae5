//! Cross-validated evaluation with slot-level accuracies and mean-correct
//! counts per example (the headline table format).

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{train, ExtractionModel, ModelError, TrainConfig};
use crate::corpus::CorpusExample;
use crate::game::map::GameMap;
use crate::intent::{score_prediction, CONSTRAINT_SLOTS, GOAL_COUNT};

/// Per-example correct counts for a trained model over a held-out set.
pub fn evaluate_examples(
    model: &ExtractionModel,
    map: &GameMap,
    examples: &[CorpusExample],
) -> Result<Vec<(usize, usize)>, ModelError> {
    examples
        .iter()
        .map(|example| {
            let predicted = model.predict(map, &example.text, &example.selections)?;
            Ok(score_prediction(&predicted, &example.intent))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub goal_slot_accuracy: f64,
    pub constraint_slot_accuracy: f64,
    pub goals_correct_mean: f64,
    pub constraints_correct_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub folds: Vec<FoldMetrics>,
    /// Fold-level mean and standard deviation of slot accuracies.
    pub goal_slot_accuracy_mean: f64,
    pub goal_slot_accuracy_std: f64,
    pub constraint_slot_accuracy_mean: f64,
    pub constraint_slot_accuracy_std: f64,
    /// Example-level mean and standard deviation of correct counts.
    pub goals_correct_mean: f64,
    pub goals_correct_std: f64,
    pub constraints_correct_mean: f64,
    pub constraints_correct_std: f64,
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "goals correct (of {GOAL_COUNT}): {:.2} +/- {:.2}",
            self.goals_correct_mean, self.goals_correct_std
        )?;
        writeln!(
            f,
            "constraints correct (of {CONSTRAINT_SLOTS}): {:.2} +/- {:.2}",
            self.constraints_correct_mean, self.constraints_correct_std
        )?;
        write!(
            f,
            "slot accuracy: goals {:.4} +/- {:.4}, constraints {:.4} +/- {:.4}",
            self.goal_slot_accuracy_mean,
            self.goal_slot_accuracy_std,
            self.constraint_slot_accuracy_mean,
            self.constraint_slot_accuracy_std
        )
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Deterministic k-fold cross-validation: a seeded shuffle, near-equal
/// contiguous folds, one train/evaluate run per fold.
pub fn kfold_evaluate(
    corpus: &[CorpusExample],
    map: &GameMap,
    config: &TrainConfig,
) -> Result<EvalSummary, ModelError> {
    let k = config.folds.max(2);
    if corpus.len() < k {
        return Err(ModelError::TooFewExamples {
            have: corpus.len(),
            need: k,
        });
    }

    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0xF01D);
    indices.shuffle(&mut rng);

    let base = corpus.len() / k;
    let extra = corpus.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut per_example: Vec<(usize, usize)> = Vec::with_capacity(corpus.len());
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let test_idx = &indices[start..start + size];
        start += size;
        let train_set: Vec<CorpusExample> = indices
            .iter()
            .filter(|i| !test_idx.contains(i))
            .map(|i| corpus[*i].clone())
            .collect();
        let test_set: Vec<CorpusExample> = test_idx.iter().map(|i| corpus[*i].clone()).collect();

        let (model, _) = train(&train_set, map, config, None)?;
        let scores = evaluate_examples(&model, map, &test_set)?;
        let goals: Vec<f64> = scores.iter().map(|(g, _)| *g as f64).collect();
        let constraints: Vec<f64> = scores.iter().map(|(_, c)| *c as f64).collect();
        folds.push(FoldMetrics {
            fold,
            train_size: train_set.len(),
            test_size: test_set.len(),
            goal_slot_accuracy: mean(&goals) / GOAL_COUNT as f64,
            constraint_slot_accuracy: mean(&constraints) / CONSTRAINT_SLOTS as f64,
            goals_correct_mean: mean(&goals),
            constraints_correct_mean: mean(&constraints),
        });
        per_example.extend(scores);
    }

    let goal_accs: Vec<f64> = folds.iter().map(|f| f.goal_slot_accuracy).collect();
    let constraint_accs: Vec<f64> = folds.iter().map(|f| f.constraint_slot_accuracy).collect();
    let goals: Vec<f64> = per_example.iter().map(|(g, _)| *g as f64).collect();
    let constraints: Vec<f64> = per_example.iter().map(|(_, c)| *c as f64).collect();

    Ok(EvalSummary {
        goal_slot_accuracy_mean: mean(&goal_accs),
        goal_slot_accuracy_std: std_dev(&goal_accs),
        constraint_slot_accuracy_mean: mean(&constraint_accs),
        constraint_slot_accuracy_std: std_dev(&constraint_accs),
        goals_correct_mean: mean(&goals),
        goals_correct_std: std_dev(&goals),
        constraints_correct_mean: mean(&constraints),
        constraints_correct_std: std_dev(&constraints),
        folds,
    })
}
