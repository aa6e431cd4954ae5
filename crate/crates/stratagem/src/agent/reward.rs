//! The four reward signals, from sparse win/loss to a dense rules-based
//! shaping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::engine::{is_terminal, Outcome};
use crate::game::state::{Action, GameState, Phase, Player};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    Sparse,
    TurnCount,
    Survival,
    RulesBased,
}

impl RewardKind {
    pub const ALL: [RewardKind; 4] = [
        RewardKind::Sparse,
        RewardKind::TurnCount,
        RewardKind::Survival,
        RewardKind::RulesBased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::Sparse => "sparse",
            RewardKind::TurnCount => "turn-count",
            RewardKind::Survival => "survival",
            RewardKind::RulesBased => "rules-based",
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RewardKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<&str> = RewardKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown reward `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Did this transition finish a full ego turn (the ego player ending its
/// freemove phase)?
fn completed_ego_turn(prev: &GameState, action: &Action) -> bool {
    prev.current_player == Player::Ego
        && prev.phase == Phase::Freemove
        && matches!(action, Action::EndPhase)
}

/// Reward for the transition `prev --action--> next`, always from the ego
/// player's perspective.
///
/// * `Sparse`: +1 on a win, -1 on a loss, 0 elsewhere.
/// * `TurnCount`: +1 for every completed ego turn.
/// * `Survival`: turn counting plus an extra -10 on a loss.
/// * `RulesBased`: every applied ego action earns +1, plus +1 for either
///   completing a phase or making a substantive in-phase move, plus +10 on a
///   win.
pub fn reward(prev: &GameState, action: &Action, next: &GameState, kind: RewardKind) -> f64 {
    let outcome = is_terminal(next);
    match kind {
        RewardKind::Sparse => match outcome {
            Outcome::EgoWin => 1.0,
            Outcome::EgoLoss => -1.0,
            _ => 0.0,
        },
        RewardKind::TurnCount => {
            if completed_ego_turn(prev, action) {
                1.0
            } else {
                0.0
            }
        }
        RewardKind::Survival => {
            let mut r = if completed_ego_turn(prev, action) {
                1.0
            } else {
                0.0
            };
            if outcome == Outcome::EgoLoss {
                r -= 10.0;
            }
            r
        }
        RewardKind::RulesBased => {
            let mut r = 0.0;
            if prev.current_player == Player::Ego {
                r += 1.0; // the action itself
                r += 1.0; // phase completion or substantive in-phase move
            }
            if outcome == Outcome::EgoWin {
                r += 10.0;
            }
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::map::TerritoryId;
    use crate::game::state::{builtin_initializations, load_initialization};

    fn terminal_pair(win: bool) -> (GameState, GameState) {
        let map = crate::game::map::GameMap::canonical();
        let prev = load_initialization(&builtin_initializations()[0], map).unwrap();
        let mut next = prev.clone();
        next.phase = Phase::Reinforce;
        next.troops_to_place = [0, 0, 0];
        for t in TerritoryId::all() {
            next.owner[t.index()] = Some(if win { Player::Ego } else { Player::Grey });
            next.troops[t.index()] = 1;
        }
        next.players_alive = if win {
            [true, false, false]
        } else {
            [false, true, false]
        };
        (prev, next)
    }

    #[test]
    fn sparse_rewards_terminal_only() {
        let (prev, win) = terminal_pair(true);
        let (_, loss) = terminal_pair(false);
        let action = Action::EndPhase;
        assert_eq!(reward(&prev, &action, &win, RewardKind::Sparse), 1.0);
        assert_eq!(reward(&prev, &action, &loss, RewardKind::Sparse), -1.0);
        // non-terminal transition
        assert_eq!(reward(&prev, &action, &prev, RewardKind::Sparse), 0.0);
    }

    #[test]
    fn turn_count_pays_completed_ego_turns() {
        let (mut prev, _) = terminal_pair(true);
        prev.phase = Phase::Freemove;
        prev.current_player = Player::Ego;
        let next = prev.clone();
        assert_eq!(
            reward(&prev, &Action::EndPhase, &next, RewardKind::TurnCount),
            1.0
        );
        prev.current_player = Player::Grey;
        assert_eq!(
            reward(&prev, &Action::EndPhase, &next, RewardKind::TurnCount),
            0.0
        );
    }

    #[test]
    fn survival_penalizes_elimination() {
        let (prev, loss) = terminal_pair(false);
        assert_eq!(
            reward(&prev, &Action::EndPhase, &loss, RewardKind::Survival),
            -10.0
        );
    }

    #[test]
    fn rules_based_win_includes_tenfold_bonus() {
        let (mut prev, win) = terminal_pair(true);
        prev.current_player = Player::Ego;
        prev.phase = Phase::Attack;
        let r = reward(
            &prev,
            &Action::Attack {
                from: TerritoryId(0),
                to: TerritoryId(1),
                move_troops: 1,
            },
            &win,
            RewardKind::RulesBased,
        );
        assert_eq!(r, 12.0); // 1 action + 1 in-phase + 10 win
    }
}
