//! Headless episode runner: plays full games with a scripted or random ego
//! policy against the heuristic opponents.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::reward::{reward, RewardKind};
use crate::game::engine::{apply_action, is_terminal, legal_actions, Outcome};
use crate::game::heuristic::{opponent_heuristic, scripted_action};
use crate::game::map::GameMap;
use crate::game::state::GameState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgoPolicy {
    /// Uniform choice among the enumerated legal actions.
    Random,
    /// The same scripted rules the opponents follow.
    Heuristic,
}

impl EgoPolicy {
    pub fn name(self) -> &'static str {
        match self {
            EgoPolicy::Random => "random",
            EgoPolicy::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for EgoPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EgoPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(EgoPolicy::Random),
            "heuristic" => Ok(EgoPolicy::Heuristic),
            other => Err(format!(
                "unknown policy `{other}` (expected random or heuristic)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub outcome: Outcome,
    pub total_reward: f64,
    pub turns: u32,
    pub steps: u64,
}

/// Plays one episode to termination, summing the chosen reward.
pub fn run_episode(
    map: &GameMap,
    start: &GameState,
    policy: EgoPolicy,
    kind: RewardKind,
    rng: &mut ChaCha8Rng,
) -> EpisodeStats {
    let mut state = start.clone();
    let mut total_reward = 0.0;
    let mut steps = 0u64;
    loop {
        let outcome = is_terminal(&state);
        if outcome != Outcome::Ongoing {
            return EpisodeStats {
                outcome,
                total_reward,
                turns: state.turn_number,
                steps,
            };
        }
        let action = if state.current_player.is_opponent() {
            opponent_heuristic(map, &state)
        } else {
            match policy {
                EgoPolicy::Heuristic => scripted_action(map, &state),
                EgoPolicy::Random => *legal_actions(map, &state)
                    .choose(rng)
                    .expect("legal action list is never empty"),
            }
        };
        let next = apply_action(map, &state, &action, rng).expect("chosen action is legal");
        total_reward += reward(&state, &action, &next, kind);
        state = next;
        steps += 1;
        assert!(steps < 5_000_000, "episode exceeded the step bound");
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub episodes: u32,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    pub mean_reward: f64,
    pub mean_turns: f64,
}

impl fmt::Display for SimulationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "episodes: {}  wins: {}  losses: {}  draws: {}",
            self.episodes, self.wins, self.losses, self.draws
        )?;
        write!(
            f,
            "mean reward: {:.4}  mean turns: {:.2}",
            self.mean_reward, self.mean_turns
        )
    }
}

/// Runs seeded episodes from a common starting state. Episode `i` draws from
/// an independent stream derived from `(seed, i)`, so results do not depend
/// on scheduling.
pub fn simulate(
    map: &GameMap,
    start: &GameState,
    episodes: u32,
    policy: EgoPolicy,
    kind: RewardKind,
    seed: u64,
) -> SimulationSummary {
    let mut wins = 0;
    let mut losses = 0;
    let mut draws = 0;
    let mut reward_sum = 0.0;
    let mut turn_sum = 0u64;
    for episode in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(episode as u64 + 1);
        let stats = run_episode(map, start, policy, kind, &mut rng);
        match stats.outcome {
            Outcome::EgoWin => wins += 1,
            Outcome::EgoLoss => losses += 1,
            Outcome::Draw => draws += 1,
            Outcome::Ongoing => unreachable!("episodes run to termination"),
        }
        reward_sum += stats.total_reward;
        turn_sum += stats.turns as u64;
    }
    SimulationSummary {
        episodes,
        wins,
        losses,
        draws,
        mean_reward: reward_sum / episodes.max(1) as f64,
        mean_turns: turn_sum as f64 / episodes.max(1) as f64,
    }
}

/// Convenience: sample intermediate states from seeded random-policy
/// rollouts, for property tests and encoder fuzzing.
pub fn sample_rollout_states(
    map: &GameMap,
    start: &GameState,
    episodes: u32,
    max_per_episode: usize,
    seed: u64,
) -> Vec<GameState> {
    let mut states = Vec::new();
    for episode in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(episode as u64 + 1);
        let mut state = start.clone();
        let mut taken = 0;
        while is_terminal(&state) == Outcome::Ongoing && taken < max_per_episode {
            let action = if state.current_player.is_opponent() {
                opponent_heuristic(map, &state)
            } else {
                *legal_actions(map, &state)
                    .choose(&mut rng)
                    .expect("legal action list is never empty")
            };
            state = apply_action(map, &state, &action, &mut rng).expect("legal");
            states.push(state.clone());
            taken += 1;
        }
    }
    states
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::state::{builtin_initializations, load_initialization};

    #[test]
    fn identical_seeds_give_identical_statistics() {
        let map = GameMap::canonical();
        let start = load_initialization(&builtin_initializations()[0], map).unwrap();
        let a = simulate(map, &start, 20, EgoPolicy::Random, RewardKind::Sparse, 3);
        let b = simulate(map, &start, 20, EgoPolicy::Random, RewardKind::Sparse, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_episode_rewards_are_unit_valued() {
        let map = GameMap::canonical();
        let start = load_initialization(&builtin_initializations()[1], map).unwrap();
        for episode_seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(episode_seed);
            let stats = run_episode(map, &start, EgoPolicy::Random, RewardKind::Sparse, &mut rng);
            assert!(
                [-1.0, 0.0, 1.0].contains(&stats.total_reward),
                "sparse episode reward {}",
                stats.total_reward
            );
            let expected = match stats.outcome {
                Outcome::EgoWin => 1.0,
                Outcome::EgoLoss => -1.0,
                _ => 0.0,
            };
            assert_eq!(stats.total_reward, expected);
        }
    }
}
