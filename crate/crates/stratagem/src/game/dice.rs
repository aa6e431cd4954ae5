//! Dice combat: a sampled combat round plus an exact enumeration of the
//! round's outcome distribution (the oracle the sampler is tested against).

use std::collections::BTreeMap;

use rand::Rng;

use super::engine::EngineError;

/// Source of six-sided die rolls. Implemented for every [`rand::Rng`];
/// tests substitute scripted rolls.
pub trait Dice {
    fn roll_d6(&mut self) -> u8;
}

impl<R: Rng> Dice for R {
    fn roll_d6(&mut self) -> u8 {
        self.random_range(1..=6)
    }
}

/// Rolls one combat round: `att_dice` vs `def_dice` dice, both sorted
/// descending and compared pairwise. The defender wins ties.
///
/// Returns `(attacker_losses, defender_losses)`; the two always sum to the
/// number of comparisons, `min(att_dice, def_dice)`.
pub fn combat_round(att_dice: usize, def_dice: usize, dice: &mut impl Dice) -> (u32, u32) {
    debug_assert!((1..=3).contains(&att_dice));
    debug_assert!((1..=2).contains(&def_dice));
    let mut att: Vec<u8> = (0..att_dice).map(|_| dice.roll_d6()).collect();
    let mut def: Vec<u8> = (0..def_dice).map(|_| dice.roll_d6()).collect();
    att.sort_unstable_by(|a, b| b.cmp(a));
    def.sort_unstable_by(|a, b| b.cmp(a));
    let mut att_losses = 0;
    let mut def_losses = 0;
    for (a, d) in att.iter().zip(def.iter()) {
        if a > d {
            def_losses += 1;
        } else {
            att_losses += 1;
        }
    }
    (att_losses, def_losses)
}

/// Exact distribution over `(attacker_losses, defender_losses)` for one
/// combat round, obtained by enumerating all `6^(att_dice+def_dice)`
/// ordered rolls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombatDistribution {
    counts: BTreeMap<(u32, u32), u64>,
    total: u64,
}

impl CombatDistribution {
    /// Number of enumerated roll sequences producing the outcome.
    pub fn count(&self, att_losses: u32, def_losses: u32) -> u64 {
        self.counts
            .get(&(att_losses, def_losses))
            .copied()
            .unwrap_or(0)
    }

    /// Total number of enumerated roll sequences (`6^dice`).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probability(&self, att_losses: u32, def_losses: u32) -> f64 {
        self.count(att_losses, def_losses) as f64 / self.total as f64
    }

    pub fn outcomes(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.counts
            .iter()
            .map(|(&k, &v)| (k, v as f64 / self.total as f64))
    }
}

/// Enumerates every ordered roll outcome for one combat round and tallies
/// the loss pattern of each.
pub fn combat_round_distribution(
    att_dice: usize,
    def_dice: usize,
) -> Result<CombatDistribution, EngineError> {
    if !(1..=3).contains(&att_dice) || !(1..=2).contains(&def_dice) {
        return Err(EngineError::InvalidTroopCount(format!(
            "dice counts out of range: {att_dice} vs {def_dice}"
        )));
    }
    let dice = att_dice + def_dice;
    let total = 6u64.pow(dice as u32);
    let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut rolls = vec![1u8; dice];
    loop {
        let mut att: Vec<u8> = rolls[..att_dice].to_vec();
        let mut def: Vec<u8> = rolls[att_dice..].to_vec();
        att.sort_unstable_by(|a, b| b.cmp(a));
        def.sort_unstable_by(|a, b| b.cmp(a));
        let mut att_losses = 0;
        let mut def_losses = 0;
        for (a, d) in att.iter().zip(def.iter()) {
            if a > d {
                def_losses += 1;
            } else {
                att_losses += 1;
            }
        }
        *counts.entry((att_losses, def_losses)).or_insert(0) += 1;

        // advance the odometer
        let mut i = 0;
        loop {
            if i == dice {
                let sum: u64 = counts.values().sum();
                debug_assert_eq!(sum, total);
                return Ok(CombatDistribution { counts, total });
            }
            if rolls[i] < 6 {
                rolls[i] += 1;
                break;
            }
            rolls[i] = 1;
            i += 1;
        }
    }
}

#[cfg(test)]
pub(crate) struct ScriptedDice(pub Vec<u8>);

#[cfg(test)]
impl Dice for ScriptedDice {
    fn roll_d6(&mut self) -> u8 {
        self.0.remove(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_vs_one_exact() {
        let d = combat_round_distribution(1, 1).unwrap();
        assert_eq!(d.total(), 36);
        assert_eq!(d.count(0, 1), 15);
        assert_eq!(d.count(1, 0), 21);
    }

    #[test]
    fn two_vs_one_exact() {
        let d = combat_round_distribution(2, 1).unwrap();
        assert_eq!(d.total(), 216);
        assert_eq!(d.count(0, 1), 125);
        assert_eq!(d.count(1, 0), 91);
    }

    #[test]
    fn three_vs_two_exact() {
        let d = combat_round_distribution(3, 2).unwrap();
        assert_eq!(d.total(), 7776);
        assert_eq!(d.count(0, 2), 2890);
        assert_eq!(d.count(1, 1), 2611);
        assert_eq!(d.count(2, 0), 2275);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for att in 1..=3 {
            for def in 1..=2 {
                let d = combat_round_distribution(att, def).unwrap();
                let counted: u64 = d.outcomes().map(|((a, l), _)| d.count(a, l)).sum();
                assert_eq!(counted, d.total());
                let total: f64 = d.outcomes().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn defender_wins_ties() {
        let (att_loss, def_loss) = combat_round(1, 1, &mut ScriptedDice(vec![4, 4]));
        assert_eq!((att_loss, def_loss), (1, 0));
    }

    #[test]
    fn round_losses_equal_comparisons() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let att = rng.random_range(1..=3usize);
            let def = rng.random_range(1..=2usize);
            let (a, d) = combat_round(att, def, &mut rng);
            assert_eq!((a + d) as usize, att.min(def));
        }
    }

    #[test]
    fn rejects_out_of_range_dice() {
        assert!(combat_round_distribution(0, 1).is_err());
        assert!(combat_round_distribution(4, 2).is_err());
        assert!(combat_round_distribution(3, 3).is_err());
    }
}
