//! Featurization of (description, selections) pairs: hashed word n-gram
//! counts for the text plus a fixed troop block for the deployments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::game::map::{GameMap, TerritoryId, TERRITORY_COUNT};
use crate::game::state::DRAFT_TROOPS;

/// Troop block width: 21 scaled counts plus a 3-way size class per
/// territory (unselected, 1-3 troops, 4+).
pub const TROOP_FEATURES: usize = TERRITORY_COUNT * 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Hash-bucket count for the text n-grams.
    pub text_dim: usize,
}

impl Default for FeatureConfig {
    fn default() -> FeatureConfig {
        FeatureConfig { text_dim: 2048 }
    }
}

impl FeatureConfig {
    pub fn total_dim(&self) -> usize {
        self.text_dim + TROOP_FEATURES
    }
}

/// Sparse text block plus dense troop block. Text entries are sorted by
/// hash bucket; troop features live at indices `text_dim..total_dim` of the
/// combined space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub text: Vec<(u32, f64)>,
    pub troops: Vec<f64>,
    pub text_dim: usize,
}

impl FeatureVector {
    pub fn total_dim(&self) -> usize {
        self.text_dim + self.troops.len()
    }

    /// All non-zero entries of the combined vector.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let text = self.text.iter().map(|(i, v)| (*i as usize, *v));
        let troops = self
            .troops
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (self.text_dim + i, *v));
        text.chain(troops)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.total_dim()];
        for (i, v) in self.entries() {
            dense[i] = v;
        }
        dense
    }
}

/// FNV-1a, fixed forever so feature layouts are stable across toolchains.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
        .collect()
}

/// Lowercased unigram and bigram counts hashed into `text_dim` buckets,
/// with the troop block appended. Deterministic for identical input.
pub fn featurize(
    text: &str,
    selections: &BTreeMap<String, u32>,
    map: &GameMap,
    config: &FeatureConfig,
) -> FeatureVector {
    let words = words(text);
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    let mut bump = |token: &str| {
        let bucket = (fnv1a(token.as_bytes()) % config.text_dim as u64) as u32;
        *counts.entry(bucket).or_insert(0.0) += 1.0;
    };
    for word in &words {
        bump(word);
    }
    for pair in words.windows(2) {
        bump(&format!("{} {}", pair[0], pair[1]));
    }

    let mut troops = vec![0.0; TROOP_FEATURES];
    for t in TerritoryId::all() {
        let count = selections.get(map.name(t)).copied().unwrap_or(0);
        troops[t.index()] = count as f64 / DRAFT_TROOPS as f64;
        let class = match count {
            0 => 0,
            1..=3 => 1,
            _ => 2,
        };
        troops[TERRITORY_COUNT + t.index() * 3 + class] = 1.0;
    }

    FeatureVector {
        text: counts.into_iter().collect(),
        troops,
        text_dim: config.text_dim,
    }
}
