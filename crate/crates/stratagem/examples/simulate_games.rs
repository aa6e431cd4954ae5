//! Roll out full games from a fixed map initialization with both ego
//! policies, and compare the four reward signals.
//!
//! ```bash
//! cargo run -p stratagem --example simulate_games
//! ```

use stratagem::{
    builtin_initializations, load_initialization, simulate, EgoPolicy, GameMap, RewardKind,
};

fn main() {
    let map = GameMap::canonical();
    let init = &builtin_initializations()[0];
    let start = load_initialization(init, map).expect("built-in initialization loads");

    println!(
        "map initialization {} (grey + black pre-placed, ego drafts 14)\n",
        init.id
    );
    for policy in [EgoPolicy::Random, EgoPolicy::Heuristic] {
        for kind in RewardKind::ALL {
            let summary = simulate(map, &start, 200, policy, kind, 42);
            println!(
                "policy {policy:<9} reward {kind:<11} -> wins {:>3}  losses {:>3}  draws {:>3}  \
                 mean reward {:>9.3}  mean turns {:>6.2}",
                summary.wins,
                summary.losses,
                summary.draws,
                summary.mean_reward,
                summary.mean_turns
            );
        }
        println!();
    }
}
