//! Exact single-round combat odds for every dice matchup, and a sampled
//! convergence check against the enumeration.
//!
//! ```bash
//! cargo run -p stratagem --example combat_odds
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stratagem::{combat_round, combat_round_distribution};

fn main() {
    println!("exact outcome distribution per combat round (attacker losses, defender losses):\n");
    for att_dice in 1..=3usize {
        for def_dice in 1..=2usize {
            let dist = combat_round_distribution(att_dice, def_dice).expect("dice in range");
            let cells: Vec<String> = dist
                .outcomes()
                .map(|((a, d), p)| {
                    format!("({a},{d}) {}/{} = {p:.4}", dist.count(a, d), dist.total())
                })
                .collect();
            println!("{att_dice} vs {def_dice} dice: {}", cells.join("   "));
        }
    }

    println!("\nsampling 200,000 rounds of 3v2 with a seeded generator:");
    let exact = combat_round_distribution(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rounds = 200_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..rounds {
        *counts.entry(combat_round(3, 2, &mut rng)).or_insert(0u64) += 1;
    }
    for ((a, d), count) in counts {
        let sampled = count as f64 / rounds as f64;
        let truth = exact.probability(a, d);
        println!(
            "  ({a},{d}): sampled {sampled:.4}  exact {truth:.4}  |diff| {:.4}",
            (sampled - truth).abs()
        );
    }
}
