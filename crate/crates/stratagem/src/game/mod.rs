//! The deterministic game core: map, state, rules, dice, and the scripted
//! opponent.

pub mod dice;
pub mod engine;
pub mod heuristic;
pub mod map;
pub mod state;
