//! Game rules: legal-action enumeration, the state transition function,
//! battle resolution, reinforcement counts, and the terminal test.

use thiserror::Error;

use super::dice::{combat_round, Dice};
use super::map::{GameMap, TerritoryId};
use super::state::{Action, GameState, Phase, Player};

/// Turn cap: the game is declared a draw once this many full ego turns have
/// been played, which guarantees rollouts terminate.
pub const TURN_CAP: u32 = 100;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("invalid troop count: {0}")]
    InvalidTroopCount(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ongoing,
    EgoWin,
    EgoLoss,
    Draw,
}

/// Result of running one attack to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BattleOutcome {
    pub attacker_losses: u32,
    pub defender_losses: u32,
    pub conquered: bool,
    pub troops_moved: u32,
}

/// Fights combat rounds until the defender is wiped out or the attacker is
/// down to a single troop. Each round rolls `min(3, attackers - 1)` against
/// `min(2, defenders)` dice; ties go to the defender. On conquest exactly
/// `move_on_win` survivors advance, clamped so one troop garrisons the
/// source.
pub fn resolve_battle(
    att_troops: u32,
    def_troops: u32,
    move_on_win: u32,
    dice: &mut impl Dice,
) -> Result<BattleOutcome, EngineError> {
    if att_troops < 2 {
        return Err(EngineError::InvalidTroopCount(format!(
            "attacker needs at least 2 troops, has {att_troops}"
        )));
    }
    if def_troops < 1 {
        return Err(EngineError::InvalidTroopCount(format!(
            "defender needs at least 1 troop, has {def_troops}"
        )));
    }
    if move_on_win < 1 || move_on_win > att_troops - 1 {
        return Err(EngineError::InvalidTroopCount(format!(
            "move_on_win {move_on_win} outside 1..={}",
            att_troops - 1
        )));
    }

    let mut att = att_troops;
    let mut def = def_troops;
    let mut attacker_losses = 0;
    let mut defender_losses = 0;
    while att >= 2 && def >= 1 {
        let att_dice = (att - 1).min(3) as usize;
        let def_dice = def.min(2) as usize;
        let (a, d) = combat_round(att_dice, def_dice, dice);
        attacker_losses += a;
        defender_losses += d;
        att -= a;
        def -= d;
    }

    let conquered = def == 0;
    let troops_moved = if conquered {
        move_on_win.min(att - 1)
    } else {
        0
    };
    Ok(BattleOutcome {
        attacker_losses,
        defender_losses,
        conquered,
        troops_moved,
    })
}

/// Reinforcements granted to a player at the start of its reinforce phase:
/// `max(3, territories/3)` plus the bonus of each fully held continent.
/// Eliminated players receive nothing.
pub fn reinforcement_count(map: &GameMap, state: &GameState, player: Player) -> u32 {
    let owned = state.count_owned(player) as u32;
    if owned == 0 {
        return 0;
    }
    let base = (owned / 3).max(3);
    let bonus: u32 = crate::game::map::Continent::ALL
        .iter()
        .filter(|c| state.continent_owner(map, **c) == Some(player))
        .map(|c| c.bonus())
        .sum();
    base + bonus
}

/// Can `player` stack a drafted or reinforcing troop on `territory`?
/// Drafting targets empty territories or the player's own stacks; never an
/// enemy territory.
fn placement_legal(state: &GameState, player: Player, territory: TerritoryId) -> bool {
    match state.owner_of(territory) {
        None => true,
        Some(owner) => owner == player && state.phase == Phase::Draft,
    }
}

/// Checks a single action against the rules, independent of the enumerated
/// action list. `apply_action` accepts exactly the actions this accepts.
pub fn is_action_legal(map: &GameMap, state: &GameState, action: &Action) -> bool {
    let player = state.current_player;
    let budget = state.troops_to_place[player.index()];
    match (state.phase, action) {
        (Phase::Draft, Action::Draft { territory }) => {
            budget > 0 && placement_legal(state, player, *territory)
        }
        (Phase::Reinforce, Action::Reinforce { territory }) => {
            budget > 0 && state.owner_of(*territory) == Some(player)
        }
        (
            Phase::Attack,
            Action::Attack {
                from,
                to,
                move_troops,
            },
        ) => {
            state.owner_of(*from) == Some(player)
                && state.owner_of(*to) != Some(player)
                && state.troops_on(*from) >= 2
                && map.has_edge(*from, *to)
                && *move_troops >= 1
                && *move_troops < state.troops_on(*from)
        }
        (Phase::Freemove, Action::Freemove { from, to, troops }) => {
            state.owner_of(*from) == Some(player)
                && state.owner_of(*to) == Some(player)
                && map.has_edge(*from, *to)
                && *troops >= 1
                && *troops < state.troops_on(*from)
        }
        // Placement phases must spend their budget before ending; attack and
        // freemove may always be ended.
        (Phase::Draft | Phase::Reinforce, Action::EndPhase) => budget == 0,
        (Phase::Attack | Phase::Freemove, Action::EndPhase) => true,
        _ => false,
    }
}

/// Enumerates the canonical action list for the current player. Attack and
/// freemove actions are listed once per edge with the maximum movable troop
/// count; `is_action_legal` additionally admits smaller counts.
pub fn legal_actions(map: &GameMap, state: &GameState) -> Vec<Action> {
    let player = state.current_player;
    let budget = state.troops_to_place[player.index()];
    let mut actions = Vec::new();
    match state.phase {
        Phase::Draft => {
            if budget > 0 {
                for t in TerritoryId::all() {
                    if placement_legal(state, player, t) {
                        actions.push(Action::Draft { territory: t });
                    }
                }
            } else {
                actions.push(Action::EndPhase);
            }
        }
        Phase::Reinforce => {
            if budget > 0 {
                for t in state.owned_territories(player) {
                    actions.push(Action::Reinforce { territory: t });
                }
            } else {
                actions.push(Action::EndPhase);
            }
        }
        Phase::Attack => {
            for &(from, to) in map.edges() {
                if state.owner_of(from) == Some(player)
                    && state.owner_of(to) != Some(player)
                    && state.troops_on(from) >= 2
                {
                    actions.push(Action::Attack {
                        from,
                        to,
                        move_troops: state.troops_on(from) - 1,
                    });
                }
            }
            actions.push(Action::EndPhase);
        }
        Phase::Freemove => {
            for &(from, to) in map.edges() {
                if state.owner_of(from) == Some(player)
                    && state.owner_of(to) == Some(player)
                    && state.troops_on(from) >= 2
                {
                    actions.push(Action::Freemove {
                        from,
                        to,
                        troops: state.troops_on(from) - 1,
                    });
                }
            }
            actions.push(Action::EndPhase);
        }
    }
    actions
}

fn refresh_alive(state: &mut GameState) {
    for player in Player::ALL {
        if state.players_alive[player.index()]
            && state.count_owned(player) == 0
            && state.troops_to_place[player.index()] == 0
        {
            state.players_alive[player.index()] = false;
        }
    }
}

fn next_player_after(state: &GameState, from: Player) -> Player {
    let order = [Player::Ego, Player::Grey, Player::Black];
    let start = from.index();
    for step in 1..=3 {
        let candidate = order[(start + step) % 3];
        if state.players_alive[candidate.index()] {
            return candidate;
        }
    }
    from
}

/// Advances the phase machine after an `EndPhase`. Draft rotates through the
/// drafting players and then hands the ego player its first reinforce phase;
/// afterwards each player plays Reinforce -> Attack -> Freemove, and control
/// returning to the ego player starts a new numbered turn.
fn advance_phase(map: &GameMap, state: &mut GameState) {
    match state.phase {
        Phase::Draft => {
            // Opponents complete their drafts before the ego player.
            let next_drafter = [Player::Grey, Player::Black, Player::Ego]
                .iter()
                .copied()
                .find(|p| state.troops_to_place[p.index()] > 0);
            match next_drafter {
                Some(p) => {
                    state.current_player = p;
                }
                None => {
                    state.phase = Phase::Reinforce;
                    state.current_player = Player::Ego;
                    state.troops_to_place[Player::Ego.index()] =
                        reinforcement_count(map, state, Player::Ego);
                }
            }
        }
        Phase::Reinforce => {
            state.phase = Phase::Attack;
        }
        Phase::Attack => {
            state.phase = Phase::Freemove;
        }
        Phase::Freemove => {
            let next = next_player_after(state, state.current_player);
            if next.index() <= state.current_player.index() {
                // wrapped around to a new round
                state.turn_number += 1;
            }
            state.current_player = next;
            state.phase = Phase::Reinforce;
            state.troops_to_place[next.index()] = reinforcement_count(map, state, next);
        }
    }
}

/// Applies one action, returning the successor state. The input state is
/// untouched; an illegal action reports [`EngineError::IllegalAction`].
pub fn apply_action(
    map: &GameMap,
    state: &GameState,
    action: &Action,
    dice: &mut impl Dice,
) -> Result<GameState, EngineError> {
    if !is_action_legal(map, state, action) {
        return Err(EngineError::IllegalAction(format!(
            "{action:?} in {:?} phase of {}",
            state.phase, state.current_player
        )));
    }
    let mut next = state.clone();
    let player = state.current_player;
    match *action {
        Action::Draft { territory } | Action::Reinforce { territory } => {
            next.owner[territory.index()] = Some(player);
            next.troops[territory.index()] += 1;
            next.troops_to_place[player.index()] -= 1;
        }
        Action::Attack {
            from,
            to,
            move_troops,
        } => {
            if next.owner_of(to).is_none() {
                // Unoccupied territory: an uncontested occupation, no dice.
                let moved = move_troops.min(next.troops_on(from) - 1);
                next.troops[from.index()] -= moved;
                next.troops[to.index()] = moved;
                next.owner[to.index()] = Some(player);
            } else {
                let outcome =
                    resolve_battle(next.troops_on(from), next.troops_on(to), move_troops, dice)?;
                next.troops[from.index()] -= outcome.attacker_losses;
                if outcome.conquered {
                    next.troops[from.index()] -= outcome.troops_moved;
                    next.troops[to.index()] = outcome.troops_moved;
                    next.owner[to.index()] = Some(player);
                } else {
                    next.troops[to.index()] -= outcome.defender_losses;
                }
            }
            refresh_alive(&mut next);
        }
        Action::Freemove { from, to, troops } => {
            next.troops[from.index()] -= troops;
            next.troops[to.index()] += troops;
        }
        Action::EndPhase => {
            advance_phase(map, &mut next);
        }
    }
    Ok(next)
}

/// Terminal test: the ego player wins by holding all territories, loses by
/// holding none once its draft is spent, and the game is drawn at the turn
/// cap.
pub fn is_terminal(state: &GameState) -> Outcome {
    if state.phase != Phase::Draft {
        let owned = state.count_owned(Player::Ego);
        if owned == crate::game::map::TERRITORY_COUNT {
            return Outcome::EgoWin;
        }
        if owned == 0 {
            return Outcome::EgoLoss;
        }
        if state.turn_number >= TURN_CAP {
            return Outcome::Draw;
        }
    }
    Outcome::Ongoing
}
