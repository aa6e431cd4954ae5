//! Fixed-length numeric views of a game state for downstream learners.
//!
//! Six encoders are provided. `f54` packs signed per-opponent troop counts,
//! `f132` switches to one-hot ownership blocks, `n` suffixes denote variants
//! scaled into `[0, 1]`, `f134n` appends phase information, and `f298n`
//! appends per-edge attack/freemove availability flags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::engine::reinforcement_count;
use crate::game::map::{Continent, GameMap, TerritoryId, TERRITORY_COUNT};
use crate::game::state::{GameState, Phase, Player, DRAFT_TROOPS};

/// Practical ceiling used to scale troop counts into `[0, 1]`.
const TROOP_SCALE: f64 = 40.0;
/// Turn-count scale (the engine's draw cap).
const TURN_SCALE: f64 = 100.0;
/// Number of edge slots reserved per flag block in `f298n`. The canonical
/// edge list is padded (or truncated) to exactly this length.
pub const EDGE_SLOTS: usize = 83;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderId {
    F54,
    F54N,
    F132,
    F132N,
    F134N,
    F298N,
}

impl EncoderId {
    pub const ALL: [EncoderId; 6] = [
        EncoderId::F54,
        EncoderId::F54N,
        EncoderId::F132,
        EncoderId::F132N,
        EncoderId::F134N,
        EncoderId::F298N,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncoderId::F54 => "f54",
            EncoderId::F54N => "f54n",
            EncoderId::F132 => "f132",
            EncoderId::F132N => "f132n",
            EncoderId::F134N => "f134n",
            EncoderId::F298N => "f298n",
        }
    }

    pub fn feature_count(self) -> usize {
        match self {
            EncoderId::F54 | EncoderId::F54N => 54,
            EncoderId::F132 | EncoderId::F132N => 132,
            EncoderId::F134N => 134,
            EncoderId::F298N => 298,
        }
    }

    pub fn is_normalized(self) -> bool {
        !matches!(self, EncoderId::F54 | EncoderId::F132)
    }
}

impl fmt::Display for EncoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EncoderId::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<&str> = EncoderId::ALL.iter().map(|e| e.name()).collect();
                format!(
                    "unknown encoder `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// A fixed-length feature vector tagged with the encoder that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedState {
    pub encoder: EncoderId,
    pub values: Vec<f64>,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Signed value in [-scale, scale] mapped affinely onto [0, 1].
fn signed_to_unit(v: f64, scale: f64) -> f64 {
    ((v / scale).clamp(-1.0, 1.0) + 1.0) / 2.0
}

fn owner_code(owner: Option<Player>) -> f64 {
    match owner {
        None => 0.0,
        Some(Player::Ego) => 1.0,
        Some(Player::Grey) => 2.0,
        Some(Player::Black) => 3.0,
    }
}

/// The seven game scalars shared by `f54` and `f132`: areas controlled,
/// troops left to draft, troops left to reinforce, players alive, turn
/// number, ego-turn flag, phase index.
fn game_scalars(state: &GameState, normalized: bool) -> [f64; 7] {
    let ego = Player::Ego.index();
    let draft_left = if state.phase == Phase::Draft {
        state.troops_to_place[ego] as f64
    } else {
        0.0
    };
    let reinforce_left = if state.phase == Phase::Reinforce && state.current_player == Player::Ego {
        state.troops_to_place[ego] as f64
    } else {
        0.0
    };
    let raw = [
        state.count_owned(Player::Ego) as f64,
        draft_left,
        reinforce_left,
        state.alive_count() as f64,
        state.turn_number as f64,
        (state.current_player == Player::Ego) as u8 as f64,
        state.phase.index() as f64,
    ];
    if !normalized {
        return raw;
    }
    [
        raw[0] / TERRITORY_COUNT as f64,
        raw[1] / DRAFT_TROOPS as f64,
        clamp01(raw[2] / TROOP_SCALE),
        raw[3] / 3.0,
        clamp01(raw[4] / TURN_SCALE),
        raw[5],
        raw[6] / 3.0,
    ]
}

fn encode_f54(map: &GameMap, state: &GameState, normalized: bool) -> Vec<f64> {
    let mut values = Vec::with_capacity(54);
    // 2 x 21 signed country features: positive for ego troops, negative for
    // the respective opponent's troops, zero otherwise.
    for opponent in [Player::Grey, Player::Black] {
        for t in TerritoryId::all() {
            let v = match state.owner_of(t) {
                Some(Player::Ego) => state.troops_on(t) as f64,
                Some(p) if p == opponent => -(state.troops_on(t) as f64),
                _ => 0.0,
            };
            values.push(if normalized {
                signed_to_unit(v, TROOP_SCALE)
            } else {
                v
            });
        }
    }
    // 5 continent ownership codes
    for continent in Continent::ALL {
        let code = owner_code(state.continent_owner(map, continent));
        values.push(if normalized { code / 3.0 } else { code });
    }
    values.extend(game_scalars(state, normalized));
    values
}

fn encode_f132(map: &GameMap, state: &GameState, normalized: bool) -> Vec<f64> {
    let mut values = Vec::with_capacity(132);
    // 84 ownership one-hots: 21 per owner class (ego, grey, black, none)
    for class in [
        Some(Player::Ego),
        Some(Player::Grey),
        Some(Player::Black),
        None,
    ] {
        for t in TerritoryId::all() {
            values.push((state.owner_of(t) == class) as u8 as f64);
        }
    }
    // 21 troop counts
    for t in TerritoryId::all() {
        let v = state.troops_on(t) as f64;
        values.push(if normalized {
            clamp01(v / TROOP_SCALE)
        } else {
            v
        });
    }
    // 20 continent-ownership one-hots: 5 per owner class
    for class in [
        Some(Player::Ego),
        Some(Player::Grey),
        Some(Player::Black),
        None,
    ] {
        for continent in Continent::ALL {
            values.push((state.continent_owner(map, continent) == class) as u8 as f64);
        }
    }
    values.extend(game_scalars(state, normalized));
    values
}

/// Fraction of the current phase's troop budget already spent; placement-free
/// phases report zero.
fn budget_spent_fraction(map: &GameMap, state: &GameState) -> f64 {
    let player = state.current_player;
    let left = state.troops_to_place[player.index()] as f64;
    let budget = match state.phase {
        Phase::Draft => DRAFT_TROOPS as f64,
        Phase::Reinforce => reinforcement_count(map, state, player) as f64,
        Phase::Attack | Phase::Freemove => 0.0,
    };
    if budget <= 0.0 {
        0.0
    } else {
        clamp01((budget - left) / budget)
    }
}

/// The canonical edge ordering truncated or padded to [`EDGE_SLOTS`].
fn edge_slots(map: &GameMap) -> impl Iterator<Item = Option<(TerritoryId, TerritoryId)>> + '_ {
    (0..EDGE_SLOTS).map(|i| map.edges().get(i).copied())
}

fn encode_f298(map: &GameMap, state: &GameState) -> Vec<f64> {
    let mut values = encode_f132(map, state, true);
    let player = state.current_player;
    // attack-possible flags, one per edge slot
    for slot in edge_slots(map) {
        let possible = matches!(state.phase, Phase::Attack)
            && slot
                .map(|(from, to)| {
                    state.owner_of(from) == Some(player)
                        && state.owner_of(to) != Some(player)
                        && state.troops_on(from) >= 2
                })
                .unwrap_or(false);
        values.push(possible as u8 as f64);
    }
    // freemove-possible flags
    for slot in edge_slots(map) {
        let possible = matches!(state.phase, Phase::Freemove)
            && slot
                .map(|(from, to)| {
                    state.owner_of(from) == Some(player)
                        && state.owner_of(to) == Some(player)
                        && state.troops_on(from) >= 2
                })
                .unwrap_or(false);
        values.push(possible as u8 as f64);
    }
    values
}

/// Encodes a state with the requested encoder. Pure and deterministic.
pub fn encode(map: &GameMap, state: &GameState, encoder: EncoderId) -> EncodedState {
    let values = match encoder {
        EncoderId::F54 => encode_f54(map, state, false),
        EncoderId::F54N => encode_f54(map, state, true),
        EncoderId::F132 => encode_f132(map, state, false),
        EncoderId::F132N => encode_f132(map, state, true),
        EncoderId::F134N => {
            let mut values = encode_f132(map, state, true);
            values.push(state.phase.index() as f64 / 3.0);
            values.push(budget_spent_fraction(map, state));
            values
        }
        EncoderId::F298N => encode_f298(map, state),
    };
    debug_assert_eq!(values.len(), encoder.feature_count());
    EncodedState { encoder, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::state::{builtin_initializations, load_initialization};

    fn map() -> &'static GameMap {
        GameMap::canonical()
    }

    fn reference_state() -> GameState {
        load_initialization(&builtin_initializations()[0], map()).unwrap()
    }

    #[test]
    fn feature_counts_match() {
        let state = reference_state();
        for encoder in EncoderId::ALL {
            let encoded = encode(map(), &state, encoder);
            assert_eq!(encoded.values.len(), encoder.feature_count(), "{encoder}");
        }
    }

    #[test]
    fn normalized_variants_bounded() {
        let state = reference_state();
        for encoder in EncoderId::ALL.iter().filter(|e| e.is_normalized()) {
            let encoded = encode(map(), &state, *encoder);
            assert!(
                encoded.values.iter().all(|v| (0.0..=1.0).contains(v)),
                "{encoder} out of bounds"
            );
        }
    }

    #[test]
    fn empty_board_f132_marks_everything_unowned() {
        let state = GameState::new_game();
        let encoded = encode(map(), &state, EncoderId::F132);
        // owner one-hots: ego block, grey block, black block all zero,
        // "none" block all ones
        assert!(encoded.values[..63].iter().all(|v| *v == 0.0));
        assert!(encoded.values[63..84].iter().all(|v| *v == 1.0));
        // troop counts all zero
        assert!(encoded.values[84..105].iter().all(|v| *v == 0.0));
        // continent one-hots: none block set
        assert!(encoded.values[105..120].iter().all(|v| *v == 0.0));
        assert!(encoded.values[120..125].iter().all(|v| *v == 1.0));
    }

    #[test]
    fn f54_signs_split_players() {
        let state = reference_state();
        let encoded = encode(map(), &state, EncoderId::F54);
        let yellow_c = map().territory("Yellow_C").unwrap().index();
        let purple_a = map().territory("Purple_A").unwrap().index();
        // grey block: grey troops negative, black troops invisible
        assert_eq!(encoded.values[yellow_c], -5.0);
        assert_eq!(encoded.values[purple_a], 0.0);
        // black block
        assert_eq!(encoded.values[21 + purple_a], -5.0);
        assert_eq!(encoded.values[21 + yellow_c], 0.0);
    }

    #[test]
    fn unknown_encoder_name_is_rejected() {
        assert!("f999".parse::<EncoderId>().is_err());
        assert_eq!("f298n".parse::<EncoderId>().unwrap(), EncoderId::F298N);
    }

    #[test]
    fn f134n_reports_budget_fraction() {
        let mut state = reference_state();
        state.troops_to_place[Player::Ego.index()] = 7; // half the draft spent
        let encoded = encode(map(), &state, EncoderId::F134N);
        assert_eq!(encoded.values[133], 0.5);
        // draft phase index is 0
        assert_eq!(encoded.values[132], 0.0);
    }
}
