//! Heavier engine properties driven by rollouts: the legal-action /
//! transition closure, bit-level determinism, and draft accounting.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stratagem::game::engine::{apply_action, is_terminal, legal_actions, Outcome};
use stratagem::game::heuristic::opponent_heuristic;
use stratagem::game::map::GameMap;
use stratagem::game::state::{
    builtin_initializations, load_initialization, Action, GameState, Phase, Player,
};

fn map() -> &'static GameMap {
    GameMap::canonical()
}

/// Every enumerated action applies cleanly and yields a valid state, fuzzed
/// over 10,000+ reachable states.
#[test]
fn legal_actions_apply_cleanly_everywhere() {
    let mut checked_states = 0usize;
    let mut applied = 0usize;
    let mut episode = 0u64;
    while checked_states < 10_000 {
        let init = &builtin_initializations()[(episode % 15) as usize];
        let mut state = load_initialization(init, map()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0xC105);
        rng.set_stream(episode + 1);
        episode += 1;
        while is_terminal(&state) == Outcome::Ongoing && checked_states < 10_000 {
            let actions = legal_actions(map(), &state);
            assert!(!actions.is_empty(), "no legal actions in {:?}", state.phase);
            for action in &actions {
                let mut probe_rng = ChaCha8Rng::seed_from_u64(checked_states as u64);
                let next = apply_action(map(), &state, action, &mut probe_rng)
                    .unwrap_or_else(|e| panic!("enumerated action {action:?} failed: {e}"));
                next.validate().unwrap();
                applied += 1;
            }
            checked_states += 1;
            let action = if state.current_player.is_opponent() {
                opponent_heuristic(map(), &state)
            } else {
                *actions.choose(&mut rng).unwrap()
            };
            state = apply_action(map(), &state, &action, &mut rng).unwrap();
        }
    }
    assert!(applied >= 10_000);
    println!("closure fuzz: {checked_states} states, {applied} applications");
}

/// Identical (initial state, action sequence, seed) gives a bit-identical
/// final state.
#[test]
fn replays_are_bit_identical() {
    for seed in 0..20u64 {
        let init = &builtin_initializations()[(seed % 15) as usize];
        let start = load_initialization(init, map()).unwrap();

        // first run: record the action sequence
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = start.clone();
        let mut actions: Vec<Action> = Vec::new();
        while is_terminal(&state) == Outcome::Ongoing {
            let action = if state.current_player.is_opponent() {
                opponent_heuristic(map(), &state)
            } else {
                *legal_actions(map(), &state).choose(&mut rng).unwrap()
            };
            actions.push(action);
            state = apply_action(map(), &state, &action, &mut rng).unwrap();
        }

        // replay with a fresh rng from the same seed
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut replay = start.clone();
        for action in &actions {
            if !replay.current_player.is_opponent() {
                // consume the same choice randomness the first run drew
                let _ = legal_actions(map(), &replay).choose(&mut rng);
            }
            replay = apply_action(map(), &replay, action, &mut rng).unwrap();
        }
        assert_eq!(state, replay, "seed {seed}");
    }
}

/// Scripted drafts always place exactly the draft budget for all three
/// players, from a bare board.
#[test]
fn scripted_draft_places_full_budget() {
    for seed in 0..5u64 {
        let mut state = GameState::new_game();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while state.phase == Phase::Draft {
            let action = stratagem::scripted_action(map(), &state);
            state = apply_action(map(), &state, &action, &mut rng).unwrap();
        }
        for player in Player::ALL {
            let total: u32 = state
                .owned_territories(player)
                .map(|t| state.troops_on(t))
                .sum();
            assert_eq!(total, 14, "{player}");
        }
    }
}
