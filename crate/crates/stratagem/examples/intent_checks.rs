//! The intent DSL in action: evaluate constraints against a position, catch
//! inconsistent constraint sets, and score a prediction against gold.
//!
//! ```bash
//! cargo run -p stratagem --example intent_checks
//! ```

use std::collections::BTreeMap;

use stratagem::intent::CONSTRAINT_SLOTS;
use stratagem::{
    builtin_initializations, check_against_selections, check_consistency, evaluate_constraint,
    load_initialization, score_prediction, Constraint, Continent, GameMap, IntentSpec, Player,
};

fn main() {
    let map = GameMap::canonical();
    let base = load_initialization(&builtin_initializations()[0], map).unwrap();
    let selections: BTreeMap<String, u32> = [
        ("Purple_E".to_string(), 7),
        ("Purple_C".to_string(), 5),
        ("Purple_D".to_string(), 2),
    ]
    .into_iter()
    .collect();
    let state = base.with_ego_selections(map, &selections).unwrap();

    println!("position: ego holds Purple_E=7, Purple_C=5, Purple_D=2\n");
    for constraint in [
        Constraint::HasTroopsOn(Continent::Purple),
        Constraint::NoTroopsOn(Continent::Red),
        Constraint::CountryTroopsAtLeast(7),
        Constraint::ProtectBorders(Continent::Purple),
        Constraint::CanReachInOneMove(Continent::Green),
        Constraint::ContinentsAtMost(1),
    ] {
        let holds = evaluate_constraint(&constraint, map, &state, Player::Ego);
        println!("  {:<12} -> {holds}", constraint.to_string());
    }

    // a full spec against the same selections
    let mut slots = [None; CONSTRAINT_SLOTS];
    slots[0] = Some(Constraint::HasTroopsOn(Continent::Purple));
    slots[1] = Some(Constraint::NoTroopsOn(Continent::Red));
    slots[2] = Some(Constraint::CountryTroopsAtLeast(7));
    let gold = IntentSpec::new([-20, 0, 80, -60, 60, 40], slots).unwrap();
    println!("\nconsistency: {}", check_consistency(&gold));
    println!(
        "selection agreement: {}",
        check_against_selections(&gold, map, &state, Player::Ego)
    );

    // contradictory spread bounds are flagged
    let mut bad = [None; CONSTRAINT_SLOTS];
    bad[0] = Some(Constraint::ContinentsAtLeast(2));
    bad[1] = Some(Constraint::ContinentsAtMost(1));
    let conflicted = IntentSpec::new([0; 6], bad).unwrap();
    println!("\ncontradictory bounds: {}", check_consistency(&conflicted));

    // scoring is order-free over the constraint slots
    let mut pred_slots = [None; CONSTRAINT_SLOTS];
    pred_slots[0] = Some(Constraint::CountryTroopsAtLeast(7));
    pred_slots[1] = Some(Constraint::HasTroopsOn(Continent::Purple));
    pred_slots[2] = Some(Constraint::HasTroopsOn(Continent::Blue)); // miss
    let pred = IntentSpec::new([-20, 0, 80, -60, 60, 40], pred_slots).unwrap();
    let (goals_correct, constraints_correct) = score_prediction(&pred, &gold);
    println!("\nscore vs gold: goals {goals_correct}/6, constraints {constraints_correct}/8");
}
