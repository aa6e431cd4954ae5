//! Game state, actions, and the fixed pre-draft map initializations.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::map::{Continent, GameMap, MapError, TerritoryId, TERRITORY_COUNT};

pub const PLAYER_COUNT: usize = 3;

/// Troops each player deploys during the one-time draft.
pub const DRAFT_TROOPS: u32 = 14;

/// The ego player (shown white in the original material) against two
/// scripted opponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Ego,
    Grey,
    Black,
}

impl Player {
    pub const ALL: [Player; 3] = [Player::Ego, Player::Grey, Player::Black];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_opponent(self) -> bool {
        self != Player::Ego
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Ego => f.write_str("ego"),
            Player::Grey => f.write_str("grey"),
            Player::Black => f.write_str("black"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Draft,
    Reinforce,
    Attack,
    Freemove,
}

impl Phase {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// One gameplay action. Draft and Reinforce place a single troop; Attack and
/// Freemove carry a target territory and a troop count; `EndPhase` advances
/// the phase machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Action {
    Draft {
        territory: TerritoryId,
    },
    Reinforce {
        territory: TerritoryId,
    },
    Attack {
        from: TerritoryId,
        to: TerritoryId,
        move_troops: u32,
    },
    Freemove {
        from: TerritoryId,
        to: TerritoryId,
        troops: u32,
    },
    EndPhase,
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("invalid initialization: {0}")]
    InvalidInitialization(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Full game position. The engine's transition functions are the only
/// sanctioned way to evolve one; [`GameState::validate`] re-checks the
/// structural invariants after deserialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub owner: [Option<Player>; TERRITORY_COUNT],
    pub troops: [u32; TERRITORY_COUNT],
    pub phase: Phase,
    pub current_player: Player,
    pub troops_to_place: [u32; PLAYER_COUNT],
    pub turn_number: u32,
    pub players_alive: [bool; PLAYER_COUNT],
}

impl GameState {
    /// Empty board: nobody owns anything, every player still has the full
    /// draft budget, grey drafts first (opponents draft before the ego
    /// player).
    pub fn new_game() -> GameState {
        GameState {
            owner: [None; TERRITORY_COUNT],
            troops: [0; TERRITORY_COUNT],
            phase: Phase::Draft,
            current_player: Player::Grey,
            troops_to_place: [DRAFT_TROOPS; PLAYER_COUNT],
            turn_number: 0,
            players_alive: [true; PLAYER_COUNT],
        }
    }

    pub fn owner_of(&self, territory: TerritoryId) -> Option<Player> {
        self.owner[territory.index()]
    }

    pub fn troops_on(&self, territory: TerritoryId) -> u32 {
        self.troops[territory.index()]
    }

    pub fn owned_territories(&self, player: Player) -> impl Iterator<Item = TerritoryId> + '_ {
        TerritoryId::all().filter(move |t| self.owner[t.index()] == Some(player))
    }

    pub fn count_owned(&self, player: Player) -> usize {
        self.owner.iter().filter(|o| **o == Some(player)).count()
    }

    /// Player troops summed over a continent.
    pub fn continent_troops(&self, map: &GameMap, player: Player, continent: Continent) -> u32 {
        map.territories_of(continent)
            .filter(|t| self.owner_of(*t) == Some(player))
            .map(|t| self.troops_on(t))
            .sum()
    }

    /// Sole owner of every territory on the continent, if any.
    pub fn continent_owner(&self, map: &GameMap, continent: Continent) -> Option<Player> {
        let mut owner = None;
        for t in map.territories_of(continent) {
            match (owner, self.owner_of(t)) {
                (_, None) => return None,
                (None, Some(p)) => owner = Some(p),
                (Some(prev), Some(p)) if prev != p => return None,
                _ => {}
            }
        }
        owner
    }

    pub fn alive_count(&self) -> usize {
        self.players_alive.iter().filter(|a| **a).count()
    }

    /// Checks the structural invariants that every reachable state satisfies.
    pub fn validate(&self) -> Result<(), StateError> {
        for t in TerritoryId::all() {
            let owned = self.owner[t.index()].is_some();
            let troops = self.troops[t.index()];
            if owned && troops == 0 {
                return Err(StateError::InvalidState(format!(
                    "territory {} owned but empty",
                    t.index()
                )));
            }
            if !owned && troops != 0 {
                return Err(StateError::InvalidState(format!(
                    "territory {} has troops but no owner",
                    t.index()
                )));
            }
        }
        for player in Player::ALL {
            let alive = self.players_alive[player.index()];
            let owns = self.count_owned(player) > 0;
            let drafting = self.troops_to_place[player.index()] > 0 && self.phase == Phase::Draft;
            if alive && !owns && !drafting && self.phase != Phase::Draft {
                return Err(StateError::InvalidState(format!(
                    "player {player} marked alive without territories"
                )));
            }
        }
        Ok(())
    }

    /// Places the ego player's drafted troops directly (the corpus path,
    /// which records a finished deployment rather than a move sequence).
    pub fn with_ego_selections(
        &self,
        map: &GameMap,
        selections: &BTreeMap<String, u32>,
    ) -> Result<GameState, StateError> {
        let mut state = self.clone();
        let mut placed = 0;
        for (name, &count) in selections {
            let t = map.territory(name)?;
            if count == 0 {
                return Err(StateError::InvalidState(format!(
                    "selection {name} places zero troops"
                )));
            }
            if state.owner_of(t).is_some() {
                return Err(StateError::InvalidState(format!(
                    "selection {name} targets an occupied territory"
                )));
            }
            state.owner[t.index()] = Some(Player::Ego);
            state.troops[t.index()] = count;
            placed += count;
        }
        if placed != DRAFT_TROOPS {
            return Err(StateError::InvalidState(format!(
                "selections place {placed} troops, expected {DRAFT_TROOPS}"
            )));
        }
        state.troops_to_place[Player::Ego.index()] = 0;
        Ok(state)
    }
}

/// A fixed pre-draft deployment for both opponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapInitialization {
    pub id: u8,
    pub grey: BTreeMap<String, u32>,
    pub black: BTreeMap<String, u32>,
}

impl MapInitialization {
    fn check_side(
        map: &GameMap,
        side: &str,
        deployments: &BTreeMap<String, u32>,
    ) -> Result<(), StateError> {
        let mut total = 0;
        for (name, &count) in deployments {
            map.territory(name)?;
            if count == 0 {
                return Err(StateError::InvalidInitialization(format!(
                    "{side} places zero troops on {name}"
                )));
            }
            total += count;
        }
        if total != DRAFT_TROOPS {
            return Err(StateError::InvalidInitialization(format!(
                "{side} deploys {total} troops, expected {DRAFT_TROOPS}"
            )));
        }
        Ok(())
    }

    pub fn validate(&self, map: &GameMap) -> Result<(), StateError> {
        Self::check_side(map, "grey", &self.grey)?;
        Self::check_side(map, "black", &self.black)?;
        for name in self.grey.keys() {
            if self.black.contains_key(name) {
                return Err(StateError::InvalidInitialization(format!(
                    "both opponents deploy on {name}"
                )));
            }
        }
        Ok(())
    }
}

/// Builds the post-initialization state: opponents placed, ego player in the
/// draft phase with the full budget.
pub fn load_initialization(
    init: &MapInitialization,
    map: &GameMap,
) -> Result<GameState, StateError> {
    init.validate(map)?;
    let mut state = GameState::new_game();
    state.current_player = Player::Ego;
    state.troops_to_place = [DRAFT_TROOPS, 0, 0];
    for (player, deployments) in [(Player::Grey, &init.grey), (Player::Black, &init.black)] {
        for (name, &count) in deployments {
            let t = map.territory(name)?;
            state.owner[t.index()] = Some(player);
            state.troops[t.index()] = count;
        }
    }
    Ok(state)
}

/// The 15 deployments shipped with the crate.
pub fn builtin_initializations() -> &'static [MapInitialization] {
    static INITS: OnceLock<Vec<MapInitialization>> = OnceLock::new();
    INITS.get_or_init(|| {
        parse_initializations(
            include_str!("../../data/initializations.txt"),
            GameMap::canonical(),
        )
        .expect("built-in initialization file is valid")
    })
}

fn parse_deployments(value: &str, line: usize) -> Result<BTreeMap<String, u32>, StateError> {
    let mut out = BTreeMap::new();
    for item in value.split_whitespace() {
        let (name, count) = item.split_once('=').ok_or_else(|| StateError::Parse {
            line,
            message: format!("expected `Territory=count`, found `{item}`"),
        })?;
        let count: u32 = count.parse().map_err(|_| StateError::Parse {
            line,
            message: format!("invalid troop count `{count}`"),
        })?;
        if out.insert(name.to_string(), count).is_some() {
            return Err(StateError::Parse {
                line,
                message: format!("territory `{name}` listed twice"),
            });
        }
    }
    Ok(out)
}

pub fn parse_initializations(
    text: &str,
    map: &GameMap,
) -> Result<Vec<MapInitialization>, StateError> {
    let mut version = None;
    let mut inits: Vec<MapInitialization> = Vec::new();
    let mut current: Option<(u8, usize)> = None;
    let mut grey: Option<BTreeMap<String, u32>> = None;
    let mut black: Option<BTreeMap<String, u32>> = None;

    let flush = |current: &mut Option<(u8, usize)>,
                 grey: &mut Option<BTreeMap<String, u32>>,
                 black: &mut Option<BTreeMap<String, u32>>,
                 inits: &mut Vec<MapInitialization>|
     -> Result<(), StateError> {
        if let Some((id, line)) = current.take() {
            let init = MapInitialization {
                id,
                grey: grey.take().ok_or(StateError::Parse {
                    line,
                    message: format!("init {id} is missing grey deployments"),
                })?,
                black: black.take().ok_or(StateError::Parse {
                    line,
                    message: format!("init {id} is missing black deployments"),
                })?,
            };
            inits.push(init);
        }
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| StateError::Parse {
            line: lineno,
            message: "expected `key: value`".to_string(),
        })?;
        let value = value.trim();
        match key.trim() {
            "format_version" => version = Some(value.to_string()),
            "init" => {
                flush(&mut current, &mut grey, &mut black, &mut inits)?;
                let id: u8 = value.parse().map_err(|_| StateError::Parse {
                    line: lineno,
                    message: format!("invalid init id `{value}`"),
                })?;
                current = Some((id, lineno));
            }
            "source" => {} // provenance label, informational only
            "grey" => grey = Some(parse_deployments(value, lineno)?),
            "black" => black = Some(parse_deployments(value, lineno)?),
            other => {
                return Err(StateError::Parse {
                    line: lineno,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    flush(&mut current, &mut grey, &mut black, &mut inits)?;

    if version.as_deref() != Some("1") {
        return Err(StateError::InvalidInitialization(
            "missing or unsupported format_version (expected 1)".to_string(),
        ));
    }
    for init in &inits {
        init.validate(map)?;
    }
    let mut ids: Vec<u8> = inits.iter().map(|i| i.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != inits.len() {
        return Err(StateError::InvalidInitialization(
            "duplicate init id".to_string(),
        ));
    }
    Ok(inits)
}

pub fn read_initializations(
    path: impl AsRef<Path>,
    map: &GameMap,
) -> Result<Vec<MapInitialization>, StateError> {
    parse_initializations(&std::fs::read_to_string(path)?, map)
}

/// Reads a JSON-lines state file (one serialized [`GameState`] per line).
pub fn read_states(path: impl AsRef<Path>) -> Result<Vec<GameState>, StateError> {
    let text = std::fs::read_to_string(path)?;
    let mut states = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let state: GameState = serde_json::from_str(line).map_err(|e| StateError::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        state.validate().map_err(|e| StateError::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        states.push(state);
    }
    Ok(states)
}

pub fn write_states(states: &[GameState], path: impl AsRef<Path>) -> Result<(), StateError> {
    let mut out = String::new();
    for state in states {
        out.push_str(&serde_json::to_string(state).expect("state serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_init() -> &'static MapInitialization {
        &builtin_initializations()[0]
    }

    #[test]
    fn builtin_file_has_fifteen_valid_records() {
        let inits = builtin_initializations();
        assert_eq!(inits.len(), 15);
        for (i, init) in inits.iter().enumerate() {
            assert_eq!(init.id as usize, i + 1);
        }
    }

    #[test]
    fn reference_scenario_matches_documented_deployments() {
        let init = reference_init();
        assert_eq!(init.grey.get("Yellow_C"), Some(&5));
        assert_eq!(init.grey.get("Yellow_D"), Some(&4));
        assert_eq!(init.grey.get("Red_A"), Some(&1));
        assert_eq!(init.black.get("Purple_A"), Some(&5));
        assert_eq!(init.black.get("Blue_A"), Some(&4));
    }

    #[test]
    fn load_initialization_leaves_eleven_empty_territories() {
        let map = GameMap::canonical();
        let state = load_initialization(reference_init(), map).unwrap();
        let empty = TerritoryId::all()
            .filter(|t| state.owner_of(*t).is_none())
            .count();
        // 21 territories minus the ten the two opponents occupy.
        assert_eq!(empty, 11);
        assert_eq!(state.troops_to_place[Player::Ego.index()], DRAFT_TROOPS);
        assert_eq!(state.phase, Phase::Draft);
        assert_eq!(state.current_player, Player::Ego);
    }

    #[test]
    fn short_deployment_rejected() {
        let map = GameMap::canonical();
        let mut init = reference_init().clone();
        *init.grey.get_mut("Yellow_C").unwrap() = 4; // 13 total
        assert!(matches!(
            load_initialization(&init, map),
            Err(StateError::InvalidInitialization(_))
        ));
    }

    #[test]
    fn overlapping_deployment_rejected() {
        let map = GameMap::canonical();
        let mut init = reference_init().clone();
        // black also lands on Red_A
        init.black.remove("Purple_B");
        init.black.insert("Red_A".to_string(), 1);
        assert!(matches!(
            load_initialization(&init, map),
            Err(StateError::InvalidInitialization(_))
        ));
    }

    #[test]
    fn ego_selections_applied() {
        let map = GameMap::canonical();
        let state = load_initialization(reference_init(), map).unwrap();
        let selections: BTreeMap<String, u32> = [
            ("Purple_E".to_string(), 7),
            ("Purple_C".to_string(), 5),
            ("Purple_D".to_string(), 2),
        ]
        .into_iter()
        .collect();
        let placed = state.with_ego_selections(map, &selections).unwrap();
        assert_eq!(placed.troops_on(map.territory("Purple_E").unwrap()), 7);
        assert_eq!(placed.count_owned(Player::Ego), 3);
        placed.validate().unwrap();

        // 13 troops is rejected
        let mut short = selections.clone();
        *short.get_mut("Purple_E").unwrap() = 6;
        assert!(state.with_ego_selections(map, &short).is_err());

        // occupied target is rejected
        let mut clash = selections;
        clash.insert("Red_A".to_string(), 1);
        assert!(state.with_ego_selections(map, &clash).is_err());
    }

    #[test]
    fn state_json_round_trip() {
        let map = GameMap::canonical();
        let state = load_initialization(reference_init(), map).unwrap();
        let json = serde_json::to_string(&state).unwrap();
        let back: GameState = serde_json::from_str(&json).unwrap();
        assert_eq!(state, back);
    }
}
