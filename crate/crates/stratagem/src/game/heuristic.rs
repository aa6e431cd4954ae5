//! The scripted opponent: a deterministic rule per phase. Draft concentrates
//! on continents, reinforce strengthens the weakest exposed territory, and
//! attacks are launched only with favourable single-round odds.

use std::sync::OnceLock;

use super::dice::combat_round_distribution;
use super::engine::is_action_legal;
use super::map::{GameMap, TerritoryId};
use super::state::{Action, GameState, Phase, Player};

/// Draft spread cap: past this many owned territories the drafter stacks
/// instead of claiming new ground, mirroring the compact reference
/// deployments and leaving room for the players drafting later.
const DRAFT_SPREAD_CAP: usize = 5;

/// Minimum single-round probability of out-damaging the defender before the
/// heuristic commits to an attack.
const ATTACK_ODDS_THRESHOLD: f64 = 0.5;

/// P(defender loses more troops than the attacker in one round), indexed by
/// `[att_dice - 1][def_dice - 1]`.
fn round_win_probability(att_dice: usize, def_dice: usize) -> f64 {
    static TABLE: OnceLock<[[f64; 2]; 3]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [[0.0; 2]; 3];
        for (a, row) in t.iter_mut().enumerate() {
            for (d, cell) in row.iter_mut().enumerate() {
                let dist = combat_round_distribution(a + 1, d + 1).expect("dice counts in range");
                *cell = dist
                    .outcomes()
                    .filter(|((att_loss, def_loss), _)| def_loss > att_loss)
                    .map(|(_, p)| p)
                    .sum();
            }
        }
        t
    });
    table[att_dice - 1][def_dice - 1]
}

fn draft_target(map: &GameMap, state: &GameState, player: Player) -> Option<TerritoryId> {
    let owned = state.count_owned(player);
    if owned < DRAFT_SPREAD_CAP {
        // Empty territory with the most friendly troops already on its
        // continent; lowest index breaks ties.
        let best = TerritoryId::all()
            .filter(|t| state.owner_of(*t).is_none())
            .max_by_key(|t| {
                let score = state.continent_troops(map, player, map.continent_of(*t));
                (score, std::cmp::Reverse(t.index()))
            });
        if best.is_some() {
            return best;
        }
    }
    // Stack: reinforce the weakest owned territory.
    state
        .owned_territories(player)
        .min_by_key(|t| (state.troops_on(*t), t.index()))
}

fn is_exposed(map: &GameMap, state: &GameState, player: Player, territory: TerritoryId) -> bool {
    let hostile = |t: TerritoryId| state.owner_of(t).map(|o| o != player).unwrap_or(false);
    map.neighbours(territory).iter().any(|&t| hostile(t))
        || TerritoryId::all().any(|t| hostile(t) && map.has_edge(t, territory))
}

fn reinforce_target(map: &GameMap, state: &GameState, player: Player) -> Option<TerritoryId> {
    let exposed = state
        .owned_territories(player)
        .filter(|t| is_exposed(map, state, player, *t))
        .min_by_key(|t| (state.troops_on(*t), t.index()));
    exposed.or_else(|| {
        state
            .owned_territories(player)
            .min_by_key(|t| (state.troops_on(*t), t.index()))
    })
}

fn attack_choice(map: &GameMap, state: &GameState, player: Player) -> Option<Action> {
    let mut best: Option<(f64, TerritoryId, TerritoryId)> = None;
    for &(from, to) in map.edges() {
        if state.owner_of(from) != Some(player)
            || state.owner_of(to) == Some(player)
            || state.troops_on(from) < 2
        {
            continue;
        }
        let odds = match state.owner_of(to) {
            None => 1.0, // unoccupied: walking in costs nothing
            Some(_) => {
                let att_dice = ((state.troops_on(from) - 1).min(3)) as usize;
                let def_dice = (state.troops_on(to).min(2)) as usize;
                round_win_probability(att_dice, def_dice)
            }
        };
        if odds < ATTACK_ODDS_THRESHOLD {
            continue;
        }
        let candidate = (odds, from, to);
        best = match best {
            None => Some(candidate),
            Some(current) => {
                let better = candidate.0 > current.0
                    || (candidate.0 == current.0
                        && (candidate.1, candidate.2) < (current.1, current.2));
                Some(if better { candidate } else { current })
            }
        };
    }
    best.map(|(_, from, to)| Action::Attack {
        from,
        to,
        move_troops: state.troops_on(from) - 1,
    })
}

/// Deterministic scripted move for the current player, whichever player that
/// is. Always returns a legal action.
pub fn scripted_action(map: &GameMap, state: &GameState) -> Action {
    let player = state.current_player;
    let budget = state.troops_to_place[player.index()];
    let action = match state.phase {
        Phase::Draft if budget > 0 => draft_target(map, state, player)
            .map(|territory| Action::Draft { territory })
            .unwrap_or(Action::EndPhase),
        Phase::Reinforce if budget > 0 => reinforce_target(map, state, player)
            .map(|territory| Action::Reinforce { territory })
            .unwrap_or(Action::EndPhase),
        Phase::Attack => attack_choice(map, state, player).unwrap_or(Action::EndPhase),
        _ => Action::EndPhase,
    };
    debug_assert!(is_action_legal(map, state, &action), "{action:?}");
    action
}

/// The pre-determined opponent controller.
///
/// # Panics
/// If the current player is the ego player; opponents only.
pub fn opponent_heuristic(map: &GameMap, state: &GameState) -> Action {
    assert!(
        state.current_player.is_opponent(),
        "opponent heuristic asked to act for the ego player"
    );
    scripted_action(map, state)
}
