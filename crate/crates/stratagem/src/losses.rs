//! The loss layer for set-structured prediction: minimum-cost assignment,
//! order-agnostic cross entropy built on it, the temperature-blended
//! constraint loss, the dual CE+MSE goal loss, and the logistic temperature
//! schedule. Analytic gradients (with the alignment held fixed) live here so
//! the trainer and the finite-difference checks share one definition.

use thiserror::Error;

/// Probabilities below this are clamped before `ln`, bounding per-cell
/// assignment costs at about 27.6.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("cost matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NonSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },
    #[error("cost matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

/// A perfect assignment of `n` rows to `n` columns and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `permutation[row] = column`; always a bijection.
    pub permutation: Vec<usize>,
    pub cost: f64,
}

impl Alignment {
    /// Inverse view: which row was assigned to each column.
    pub fn row_for_column(&self) -> Vec<usize> {
        let mut inverse = vec![0; self.permutation.len()];
        for (row, &col) in self.permutation.iter().enumerate() {
            inverse[col] = row;
        }
        inverse
    }
}

/// Minimum-cost perfect assignment on a square cost matrix, via the
/// O(n^3) potential (shortest augmenting path) formulation.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Alignment, LossError> {
    let n = cost.len();
    if n == 0 {
        return Err(LossError::NonSquare {
            rows: 0,
            row: 0,
            cols: 0,
        });
    }
    for (row, entries) in cost.iter().enumerate() {
        if entries.len() != n {
            return Err(LossError::NonSquare {
                rows: n,
                row,
                cols: entries.len(),
            });
        }
        for (col, value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(LossError::NonFinite { row, col });
            }
        }
    }

    // 1-indexed arrays; p[j] is the row matched to column j, 0 when free.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut permutation = vec![usize::MAX; n];
    for j in 1..=n {
        permutation[p[j] - 1] = j - 1;
    }
    let cost_total = (0..n).map(|i| cost[i][permutation[i]]).sum();
    Ok(Alignment {
        permutation,
        cost: cost_total,
    })
}

/// Per-slot probability rows: one row per prediction slot, each a
/// distribution over the label space.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDistributions {
    rows: Vec<Vec<f64>>,
}

impl SlotDistributions {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<SlotDistributions, LossError> {
        if rows.is_empty() {
            return Err(LossError::InvalidDistribution("no slots".to_string()));
        }
        let labels = rows[0].len();
        for (slot, row) in rows.iter().enumerate() {
            if row.len() != labels {
                return Err(LossError::InvalidDistribution(format!(
                    "slot {slot} has {} labels, expected {labels}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if p.is_nan() || p < 0.0 {
                    return Err(LossError::InvalidDistribution(format!(
                        "slot {slot} has a negative or NaN probability"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(LossError::InvalidDistribution(format!(
                    "slot {slot} sums to {sum}"
                )));
            }
        }
        Ok(SlotDistributions { rows })
    }

    pub fn uniform(slots: usize, labels: usize) -> SlotDistributions {
        SlotDistributions {
            rows: vec![vec![1.0 / labels as f64; labels]; slots],
        }
    }

    /// Row-wise softmax.
    pub fn from_logits(logits: &[Vec<f64>]) -> SlotDistributions {
        let rows = logits.iter().map(|row| softmax(row)).collect();
        SlotDistributions { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn slot_count(&self) -> usize {
        self.rows.len()
    }

    pub fn label_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn probability(&self, slot: usize, label: usize) -> f64 {
        self.rows[slot][label]
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn neg_log_prob(p: f64) -> f64 {
    -p.max(PROB_CLAMP).ln()
}

/// Cross entropy under the default slot order: `sum_i -ln p_i(target_i)`.
pub fn cross_entropy(dists: &SlotDistributions, targets: &[usize]) -> f64 {
    assert_eq!(dists.slot_count(), targets.len());
    targets
        .iter()
        .enumerate()
        .map(|(slot, &label)| neg_log_prob(dists.probability(slot, label)))
        .sum()
}

/// Order-agnostic cross entropy: the cross entropy of the best possible
/// target-to-slot alignment, found by the assignment solver on the
/// negative-log-probability cost matrix. Returns the loss and the alignment
/// (`permutation[target_index] = slot`).
///
/// The loss sums per-slot terms in slot order, exactly like
/// [`cross_entropy`], so the two are bit-identical whenever the identity
/// alignment is optimal.
pub fn oaxe_loss(dists: &SlotDistributions, targets: &[usize]) -> (f64, Alignment) {
    assert_eq!(dists.slot_count(), targets.len());
    let n = targets.len();
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|target| {
            (0..n)
                .map(|slot| neg_log_prob(dists.probability(slot, targets[target])))
                .collect()
        })
        .collect();
    let alignment = hungarian(&cost).expect("cost matrix is square and finite");
    (oaxe_loss_aligned(dists, targets, &alignment), alignment)
}

/// OaXE evaluated under a fixed alignment (the trainer's straight-through
/// view, and the closed form finite differences are checked against).
pub fn oaxe_loss_aligned(
    dists: &SlotDistributions,
    targets: &[usize],
    alignment: &Alignment,
) -> f64 {
    alignment
        .row_for_column()
        .iter()
        .enumerate()
        .map(|(slot, &target)| neg_log_prob(dists.probability(slot, targets[target])))
        .sum()
}

/// Temperature blend of default-order CE and OaXE:
/// `T * CE + (1 - T) * OaXE`.
pub fn constraint_loss(dists: &SlotDistributions, targets: &[usize], temperature: f64) -> f64 {
    let (oaxe, _) = oaxe_loss(dists, targets);
    temperature * cross_entropy(dists, targets) + (1.0 - temperature) * oaxe
}

/// The blend with the OaXE side pinned to a given alignment.
pub fn constraint_loss_aligned(
    dists: &SlotDistributions,
    targets: &[usize],
    temperature: f64,
    alignment: &Alignment,
) -> f64 {
    temperature * cross_entropy(dists, targets)
        + (1.0 - temperature) * oaxe_loss_aligned(dists, targets, alignment)
}

/// Gradient of [`constraint_loss_aligned`] with respect to the per-slot
/// logits, given the softmax probabilities.
pub fn constraint_grad_logits(
    probs: &SlotDistributions,
    targets: &[usize],
    temperature: f64,
    alignment: &Alignment,
) -> Vec<Vec<f64>> {
    let slots = probs.slot_count();
    let labels = probs.label_count();
    let row_for_column = alignment.row_for_column();
    let mut grads = vec![vec![0.0; labels]; slots];
    for slot in 0..slots {
        let aligned_target = targets[row_for_column[slot]];
        let default_target = targets[slot];
        for (label, grad) in grads[slot].iter_mut().enumerate() {
            let p = probs.probability(slot, label);
            let ce = p - f64::from(label == default_target);
            let oaxe = p - f64::from(label == aligned_target);
            *grad = temperature * ce + (1.0 - temperature) * oaxe;
        }
    }
    grads
}

/// Dual goal loss: `alpha * CE + (1 - alpha) * MSE`, both terms averaged
/// over the slots. CE is the usual negative log probability of the target
/// bucket; MSE compares the expected bucket index under the distribution to
/// the target index, which keeps the term ordinal-aware and differentiable.
pub fn goal_loss(dists: &SlotDistributions, target_buckets: &[usize], alpha: f64) -> f64 {
    assert_eq!(dists.slot_count(), target_buckets.len());
    let slots = dists.slot_count() as f64;
    let mut ce = 0.0;
    let mut mse = 0.0;
    for (slot, &target) in target_buckets.iter().enumerate() {
        ce += neg_log_prob(dists.probability(slot, target));
        let expected: f64 = dists.rows()[slot]
            .iter()
            .enumerate()
            .map(|(bucket, p)| bucket as f64 * p)
            .sum();
        mse += (expected - target as f64).powi(2);
    }
    alpha * ce / slots + (1.0 - alpha) * mse / slots
}

/// Gradient of [`goal_loss`] with respect to the per-slot logits.
pub fn goal_grad_logits(
    probs: &SlotDistributions,
    target_buckets: &[usize],
    alpha: f64,
) -> Vec<Vec<f64>> {
    let slots = probs.slot_count();
    let labels = probs.label_count();
    let slots_f = slots as f64;
    let mut grads = vec![vec![0.0; labels]; slots];
    for slot in 0..slots {
        let target = target_buckets[slot] as f64;
        let expected: f64 = probs.rows()[slot]
            .iter()
            .enumerate()
            .map(|(bucket, p)| bucket as f64 * p)
            .sum();
        for (label, grad) in grads[slot].iter_mut().enumerate() {
            let p = probs.probability(slot, label);
            let ce = p - f64::from(label == target_buckets[slot]);
            // d/dlogit_k of (E - t)^2 is 2 (E - t) * p_k (k - E)
            let mse = 2.0 * (expected - target) * p * (label as f64 - expected);
            *grad = (alpha * ce + (1.0 - alpha) * mse) / slots_f;
        }
    }
    grads
}

/// Logistic temperature schedule, rescaled to run exactly from 1 at step 0
/// to 0 at the final step, with midpoint `m` (as a fraction of the run) and
/// steepness `k`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnnealSchedule {
    pub total_steps: usize,
    pub steepness: f64,
    pub midpoint: f64,
}

impl AnnealSchedule {
    pub fn new(total_steps: usize, steepness: f64, midpoint: f64) -> AnnealSchedule {
        assert!(steepness > 0.0, "steepness must be positive");
        assert!((0.0..1.0).contains(&midpoint), "midpoint must be in (0,1)");
        AnnealSchedule {
            total_steps,
            steepness,
            midpoint,
        }
    }

    /// Temperature at a step, non-increasing from 1 to 0.
    pub fn temperature(&self, step: usize) -> f64 {
        if self.total_steps == 0 {
            return 0.0;
        }
        let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
        let raw = |x: f64| sigmoid(-self.steepness * (x - self.midpoint));
        let x = (step.min(self.total_steps)) as f64 / self.total_steps as f64;
        let lo = raw(1.0);
        let hi = raw(0.0);
        ((raw(x) - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

impl Default for AnnealSchedule {
    fn default() -> AnnealSchedule {
        AnnealSchedule {
            total_steps: 0,
            steepness: 10.0,
            midpoint: 0.5,
        }
    }
}
