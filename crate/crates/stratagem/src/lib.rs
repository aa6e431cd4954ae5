//! `stratagem` simulates a compact three-player conquest wargame and turns
//! free-form strategy descriptions into machine-checkable intent: six valued
//! goals plus up to eight templated constraints. The crate covers the whole
//! pipeline around that representation:
//!
//! * [`game`] — the fixed 21-territory map, game state, rules, exact dice
//!   mathematics, and a scripted opponent;
//! * [`agent`] — six fixed-length state encoders and four reward functions
//!   for reinforcement learners;
//! * [`intent`] — the goal/constraint DSL with consistency checking,
//!   evaluation against game states, and prediction scoring;
//! * [`corpus`] — synthetic corpus generation from templates and a
//!   paraphrase-augmentation pipeline with a quality filter;
//! * [`losses`] — minimum-cost assignment, order-agnostic cross entropy,
//!   blended goal/constraint losses, and the temperature schedule;
//! * [`extract`] — a multi-head linear model that reads (text, selections)
//!   pairs back into intent, with training and k-fold evaluation;
//! * [`sim`] — headless episode rollouts;
//! * [`cli`] — the `stratagem` binary's subcommands, usable in-process.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p stratagem --example simulate_games
//! cargo run -p stratagem --example combat_odds
//! cargo run -p stratagem --example encode_states
//! cargo run -p stratagem --example intent_checks
//! cargo run -p stratagem --example build_corpus
//! cargo run -p stratagem --example alignment_losses
//! cargo run -p stratagem --example train_extractor
//! ```
//!
//! The same functionality is exposed as subcommands of the `stratagem`
//! binary (`gen-corpus`, `augment`, `train`, `eval`, `predict`, `check`,
//! `simulate`, `encode`).

pub mod agent;
pub mod cli;
pub mod corpus;
pub mod extract;
pub mod game;
pub mod intent;
pub mod losses;
pub mod sim;

pub use agent::encode::{encode, EncodedState, EncoderId};
pub use agent::reward::{reward, RewardKind};
pub use corpus::augment::{augment, augment_corpus, FilterParams, Paraphraser, RuleParaphraser};
pub use corpus::generate::{generate_corpus, realize, sample_intent, TemplateBank};
pub use corpus::{read_corpus, write_corpus, CorpusError, CorpusExample, Source};
pub use extract::eval::{evaluate_examples, kfold_evaluate, EvalSummary};
pub use extract::features::{featurize, FeatureConfig, FeatureVector};
pub use extract::model::{gradient_check, train, ExtractionModel, ModelError, Task, TrainConfig};
pub use game::dice::{combat_round, combat_round_distribution, CombatDistribution, Dice};
pub use game::engine::{
    apply_action, is_action_legal, is_terminal, legal_actions, reinforcement_count, resolve_battle,
    BattleOutcome, EngineError, Outcome, TURN_CAP,
};
pub use game::heuristic::{opponent_heuristic, scripted_action};
pub use game::map::{Continent, GameMap, MapError, TerritoryId, TERRITORY_COUNT};
pub use game::state::{
    builtin_initializations, load_initialization, read_initializations, Action, GameState,
    MapInitialization, Phase, Player, StateError, DRAFT_TROOPS,
};
pub use intent::{
    bucketize, check_against_selections, check_consistency, evaluate_constraint, score_prediction,
    ConflictReport, Constraint, ConstraintClass, Goal, GoalBucket, IntentSpec,
};
pub use losses::{
    constraint_loss, cross_entropy, goal_loss, hungarian, oaxe_loss, Alignment, AnnealSchedule,
    LossError, SlotDistributions,
};
pub use sim::{run_episode, simulate, EgoPolicy, SimulationSummary};
