//! The machine-checkable intent representation: six valued goals, up to
//! eight constraints drawn from nine templated classes, consistency rules,
//! constraint evaluation against game states, and prediction scoring.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::map::{Continent, GameMap, TerritoryId};
use crate::game::state::{GameState, Player};

/// Goal values live on a signed 200-point scale.
pub const GOAL_MIN: i32 = -100;
pub const GOAL_MAX: i32 = 100;

/// Number of goal slots in a spec.
pub const GOAL_COUNT: usize = 6;

/// Number of constraint slots in a spec.
pub const CONSTRAINT_SLOTS: usize = 8;

/// Number of discretization buckets for goal values.
pub const BUCKET_COUNT: usize = 5;

/// Concrete constraints: 4 continent classes x 5 continents plus 5 numeric
/// classes x 14 values.
pub const CONSTRAINT_SPACE: usize = 90;

/// Label space for constraint prediction: every concrete constraint plus the
/// null slot.
pub const CONSTRAINT_LABELS: usize = CONSTRAINT_SPACE + 1;

/// Largest value a numeric constraint can carry.
pub const NUMBER_MAX: u8 = 14;

#[derive(Debug, Error, PartialEq)]
pub enum IntentError {
    #[error("goal value {0} outside [{GOAL_MIN}, {GOAL_MAX}]")]
    OutOfRange(i32),
    #[error("numeric constraint value {0} outside 1..={NUMBER_MAX}")]
    BadNumber(u8),
    #[error("duplicate constraint {0}")]
    DuplicateConstraint(String),
    #[error("malformed spec: {0}")]
    Malformed(String),
}

/// The six fixed goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Goal {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
}

impl Goal {
    pub const ALL: [Goal; GOAL_COUNT] =
        [Goal::G1, Goal::G2, Goal::G3, Goal::G4, Goal::G5, Goal::G6];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Human-readable statement of the goal.
    pub fn description(self) -> &'static str {
        match self {
            Goal::G1 => "surround enemy territories",
            Goal::G2 => "maximize the number of countries occupied",
            Goal::G3 => "keep troops close together",
            Goal::G4 => "maximize battles throughout the game",
            Goal::G5 => "fortify borders of controlled continents",
            Goal::G6 => "battle opposing players one at a time",
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One of the five uniform value buckets: `[-100,-60) [-60,-20) [-20,20)
/// [20,60) [60,100]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoalBucket(pub u8);

impl GoalBucket {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Midpoint used when a bucket must be reported as a numeric value.
    pub fn midpoint(self) -> i32 {
        [-80, -40, 0, 40, 80][self.index()]
    }

    /// The neutral band around zero.
    pub fn is_neutral(self) -> bool {
        self.0 == 2
    }
}

/// Discretizes a goal value. Total over the valid range, monotone, and onto
/// the five buckets; the closed upper boundary means 100 lands in bucket 4.
pub fn bucketize(value: i32) -> Result<GoalBucket, IntentError> {
    if !(GOAL_MIN..=GOAL_MAX).contains(&value) {
        return Err(IntentError::OutOfRange(value));
    }
    let index = (((value - GOAL_MIN) / 40) as u8).min(BUCKET_COUNT as u8 - 1);
    Ok(GoalBucket(index))
}

/// Constraint classes, in template order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintClass {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
}

impl ConstraintClass {
    pub const ALL: [ConstraintClass; 9] = [
        ConstraintClass::C1,
        ConstraintClass::C2,
        ConstraintClass::C3,
        ConstraintClass::C4,
        ConstraintClass::C5,
        ConstraintClass::C6,
        ConstraintClass::C7,
        ConstraintClass::C8,
        ConstraintClass::C9,
    ];

    pub fn takes_continent(self) -> bool {
        matches!(
            self,
            ConstraintClass::C1 | ConstraintClass::C2 | ConstraintClass::C3 | ConstraintClass::C4
        )
    }
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A concrete constraint: a class plus its continent or numeric value.
///
/// * `C1` troops required on a continent
/// * `C2` continent must stay empty of own troops
/// * `C3` continent reachable in one move
/// * `C4` all borders of a continent held
/// * `C5` some continent holds at least N own troops in total
/// * `C6` at least N countries held
/// * `C7` troops on at least N continents
/// * `C8` some single country holds at least N troops
/// * `C9` troops on at most N continents
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    HasTroopsOn(Continent),
    NoTroopsOn(Continent),
    CanReachInOneMove(Continent),
    ProtectBorders(Continent),
    ContinentTroopsAtLeast(u8),
    CountriesAtLeast(u8),
    ContinentsAtLeast(u8),
    CountryTroopsAtLeast(u8),
    ContinentsAtMost(u8),
}

impl Constraint {
    pub fn class(self) -> ConstraintClass {
        match self {
            Constraint::HasTroopsOn(_) => ConstraintClass::C1,
            Constraint::NoTroopsOn(_) => ConstraintClass::C2,
            Constraint::CanReachInOneMove(_) => ConstraintClass::C3,
            Constraint::ProtectBorders(_) => ConstraintClass::C4,
            Constraint::ContinentTroopsAtLeast(_) => ConstraintClass::C5,
            Constraint::CountriesAtLeast(_) => ConstraintClass::C6,
            Constraint::ContinentsAtLeast(_) => ConstraintClass::C7,
            Constraint::CountryTroopsAtLeast(_) => ConstraintClass::C8,
            Constraint::ContinentsAtMost(_) => ConstraintClass::C9,
        }
    }

    pub fn continent(self) -> Option<Continent> {
        match self {
            Constraint::HasTroopsOn(c)
            | Constraint::NoTroopsOn(c)
            | Constraint::CanReachInOneMove(c)
            | Constraint::ProtectBorders(c) => Some(c),
            _ => None,
        }
    }

    pub fn number(self) -> Option<u8> {
        match self {
            Constraint::ContinentTroopsAtLeast(n)
            | Constraint::CountriesAtLeast(n)
            | Constraint::ContinentsAtLeast(n)
            | Constraint::CountryTroopsAtLeast(n)
            | Constraint::ContinentsAtMost(n) => Some(n),
            _ => None,
        }
    }

    pub fn from_parts(
        class: ConstraintClass,
        value: ConstraintValue,
    ) -> Result<Constraint, IntentError> {
        match (class, value) {
            (ConstraintClass::C1, ConstraintValue::Continent(c)) => Ok(Constraint::HasTroopsOn(c)),
            (ConstraintClass::C2, ConstraintValue::Continent(c)) => Ok(Constraint::NoTroopsOn(c)),
            (ConstraintClass::C3, ConstraintValue::Continent(c)) => {
                Ok(Constraint::CanReachInOneMove(c))
            }
            (ConstraintClass::C4, ConstraintValue::Continent(c)) => {
                Ok(Constraint::ProtectBorders(c))
            }
            (ConstraintClass::C5, ConstraintValue::Number(n)) => {
                Constraint::checked_number(n).map(Constraint::ContinentTroopsAtLeast)
            }
            (ConstraintClass::C6, ConstraintValue::Number(n)) => {
                Constraint::checked_number(n).map(Constraint::CountriesAtLeast)
            }
            (ConstraintClass::C7, ConstraintValue::Number(n)) => {
                Constraint::checked_number(n).map(Constraint::ContinentsAtLeast)
            }
            (ConstraintClass::C8, ConstraintValue::Number(n)) => {
                Constraint::checked_number(n).map(Constraint::CountryTroopsAtLeast)
            }
            (ConstraintClass::C9, ConstraintValue::Number(n)) => {
                Constraint::checked_number(n).map(Constraint::ContinentsAtMost)
            }
            (class, value) => Err(IntentError::Malformed(format!(
                "class {class} cannot take value {value:?}"
            ))),
        }
    }

    fn checked_number(n: u8) -> Result<u8, IntentError> {
        if (1..=NUMBER_MAX).contains(&n) {
            Ok(n)
        } else {
            Err(IntentError::BadNumber(n))
        }
    }

    /// Stable index into the 0..=90 label space (null is the final label).
    pub fn label_index(self) -> usize {
        let continent_pos = |c: Continent| c.index();
        match self {
            Constraint::HasTroopsOn(c) => continent_pos(c),
            Constraint::NoTroopsOn(c) => 5 + continent_pos(c),
            Constraint::CanReachInOneMove(c) => 10 + continent_pos(c),
            Constraint::ProtectBorders(c) => 15 + continent_pos(c),
            Constraint::ContinentTroopsAtLeast(n) => 20 + (n as usize - 1),
            Constraint::CountriesAtLeast(n) => 34 + (n as usize - 1),
            Constraint::ContinentsAtLeast(n) => 48 + (n as usize - 1),
            Constraint::CountryTroopsAtLeast(n) => 62 + (n as usize - 1),
            Constraint::ContinentsAtMost(n) => 76 + (n as usize - 1),
        }
    }

    /// Inverse of [`Constraint::label_index`]; `CONSTRAINT_SPACE` is null.
    pub fn from_label_index(index: usize) -> Option<Constraint> {
        if index >= CONSTRAINT_SPACE {
            return None;
        }
        let continent = |i: usize| Continent::ALL[i];
        Some(match index {
            0..=4 => Constraint::HasTroopsOn(continent(index)),
            5..=9 => Constraint::NoTroopsOn(continent(index - 5)),
            10..=14 => Constraint::CanReachInOneMove(continent(index - 10)),
            15..=19 => Constraint::ProtectBorders(continent(index - 15)),
            20..=33 => Constraint::ContinentTroopsAtLeast((index - 20) as u8 + 1),
            34..=47 => Constraint::CountriesAtLeast((index - 34) as u8 + 1),
            48..=61 => Constraint::ContinentsAtLeast((index - 48) as u8 + 1),
            62..=75 => Constraint::CountryTroopsAtLeast((index - 62) as u8 + 1),
            _ => Constraint::ContinentsAtMost((index - 76) as u8 + 1),
        })
    }

    /// Index for an optional slot: a concrete constraint or the null label.
    pub fn slot_label(slot: &Option<Constraint>) -> usize {
        slot.map(|c| c.label_index()).unwrap_or(CONSTRAINT_SPACE)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.continent(), self.number()) {
            (Some(c), _) => write!(f, "{}({c})", self.class()),
            (_, Some(n)) => write!(f, "{}({n})", self.class()),
            _ => unreachable!(),
        }
    }
}

/// Serialized form: `{"class": "C1", "value": "Purple"}` or
/// `{"class": "C6", "value": 3}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConstraintRepr {
    class: ConstraintClass,
    value: ConstraintValue,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintValue {
    Number(u8),
    Continent(Continent),
}

impl Serialize for Constraint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let value = match (self.continent(), self.number()) {
            (Some(c), _) => ConstraintValue::Continent(c),
            (_, Some(n)) => ConstraintValue::Number(n),
            _ => unreachable!(),
        };
        ConstraintRepr {
            class: self.class(),
            value,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Constraint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ConstraintRepr::deserialize(deserializer)?;
        Constraint::from_parts(repr.class, repr.value).map_err(serde::de::Error::custom)
    }
}

/// Serialized goal assignment: `{"goal": "G1", "value": -40}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalAssignment {
    pub goal: Goal,
    pub value: i32,
}

/// A full intent: every goal valued, eight constraint slots (null allowed).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntentSpec {
    goal_values: [i32; GOAL_COUNT],
    constraints: [Option<Constraint>; CONSTRAINT_SLOTS],
}

impl IntentSpec {
    pub fn new(
        goal_values: [i32; GOAL_COUNT],
        constraints: [Option<Constraint>; CONSTRAINT_SLOTS],
    ) -> Result<IntentSpec, IntentError> {
        for value in goal_values {
            if !(GOAL_MIN..=GOAL_MAX).contains(&value) {
                return Err(IntentError::OutOfRange(value));
            }
        }
        let mut seen = Vec::new();
        for constraint in constraints.iter().flatten() {
            if seen.contains(constraint) {
                return Err(IntentError::DuplicateConstraint(constraint.to_string()));
            }
            seen.push(*constraint);
        }
        Ok(IntentSpec {
            goal_values,
            constraints,
        })
    }

    pub fn goal_value(&self, goal: Goal) -> i32 {
        self.goal_values[goal.index()]
    }

    pub fn goal_values(&self) -> &[i32; GOAL_COUNT] {
        &self.goal_values
    }

    pub fn goal_bucket(&self, goal: Goal) -> GoalBucket {
        bucketize(self.goal_value(goal)).expect("stored goal values are in range")
    }

    pub fn constraints(&self) -> &[Option<Constraint>; CONSTRAINT_SLOTS] {
        &self.constraints
    }

    pub fn non_null_constraints(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.constraints.iter().flatten().copied()
    }

    pub fn assignments(&self) -> Vec<GoalAssignment> {
        Goal::ALL
            .iter()
            .map(|g| GoalAssignment {
                goal: *g,
                value: self.goal_value(*g),
            })
            .collect()
    }

    /// Canonical content key: goal values plus the sorted constraint set.
    /// Two specs with equal keys express the same intent.
    pub fn canonical_key(&self) -> ([i32; GOAL_COUNT], Vec<Constraint>) {
        let mut constraints: Vec<Constraint> = self.non_null_constraints().collect();
        constraints.sort();
        (self.goal_values, constraints)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IntentRepr {
    goals: Vec<GoalAssignment>,
    constraints: Vec<Option<Constraint>>,
}

impl Serialize for IntentSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        IntentRepr {
            goals: self.assignments(),
            constraints: self.constraints.to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntentSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = IntentRepr::deserialize(deserializer)?;
        if repr.goals.len() != GOAL_COUNT {
            return Err(D::Error::custom(format!(
                "expected {GOAL_COUNT} goals, found {}",
                repr.goals.len()
            )));
        }
        if repr.constraints.len() != CONSTRAINT_SLOTS {
            return Err(D::Error::custom(format!(
                "expected {CONSTRAINT_SLOTS} constraint slots, found {}",
                repr.constraints.len()
            )));
        }
        let mut goal_values = [i32::MIN; GOAL_COUNT];
        for assignment in &repr.goals {
            let slot = &mut goal_values[assignment.goal.index()];
            if *slot != i32::MIN {
                return Err(D::Error::custom(format!(
                    "goal {} assigned twice",
                    assignment.goal
                )));
            }
            *slot = assignment.value;
        }
        if goal_values.contains(&i32::MIN) {
            return Err(D::Error::custom("missing goal assignment"));
        }
        let mut constraints = [None; CONSTRAINT_SLOTS];
        for (slot, value) in constraints.iter_mut().zip(repr.constraints) {
            *slot = value;
        }
        IntentSpec::new(goal_values, constraints).map_err(D::Error::custom)
    }
}

/// Why a pair of slots (or a single slot) was flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConflictRule {
    /// C7 demands more continents than a C9 cap allows.
    SpreadBounds,
    /// C1 and C2 on the same continent.
    PresenceContradiction,
    /// The same concrete constraint twice.
    Duplicate,
    /// A constraint the selections do not satisfy.
    UnsatisfiedBySelections,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub slots: (usize, Option<usize>),
    pub rule: ConflictRule,
    pub message: String,
}

/// Outcome of a consistency or selection check; empty means clean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub conflicts: Vec<Conflict>,
}

impl ConflictReport {
    pub fn is_empty(&self) -> bool {
        self.conflicts.is_empty()
    }
}

impl fmt::Display for ConflictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "clean");
        }
        for (i, conflict) in self.conflicts.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "slot {}", conflict.slots.0)?;
            if let Some(other) = conflict.slots.1 {
                write!(f, " vs slot {other}")?;
            }
            write!(f, ": {}", conflict.message)?;
        }
        Ok(())
    }
}

/// Internal consistency of a constraint set: flags contradictory spread
/// bounds (C7 above C9), presence contradictions (C1 with C2 on one
/// continent), and duplicated constraints.
#[allow(clippy::needless_range_loop)] // conflicts are reported by slot pair
pub fn check_consistency(spec: &IntentSpec) -> ConflictReport {
    let mut conflicts = Vec::new();
    let slots = spec.constraints();
    for i in 0..CONSTRAINT_SLOTS {
        let Some(a) = slots[i] else { continue };
        for j in (i + 1)..CONSTRAINT_SLOTS {
            let Some(b) = slots[j] else { continue };
            if a == b {
                conflicts.push(Conflict {
                    slots: (i, Some(j)),
                    rule: ConflictRule::Duplicate,
                    message: format!("duplicate constraint {a}"),
                });
                continue;
            }
            match (a, b) {
                (Constraint::ContinentsAtLeast(lo), Constraint::ContinentsAtMost(hi))
                | (Constraint::ContinentsAtMost(hi), Constraint::ContinentsAtLeast(lo))
                    if lo > hi =>
                {
                    conflicts.push(Conflict {
                        slots: (i, Some(j)),
                        rule: ConflictRule::SpreadBounds,
                        message: format!("at least {lo} continents contradicts at most {hi}"),
                    });
                }
                (Constraint::HasTroopsOn(x), Constraint::NoTroopsOn(y))
                | (Constraint::NoTroopsOn(y), Constraint::HasTroopsOn(x))
                    if x == y =>
                {
                    conflicts.push(Conflict {
                        slots: (i, Some(j)),
                        rule: ConflictRule::PresenceContradiction,
                        message: format!("troops both required and forbidden on {x}"),
                    });
                }
                _ => {}
            }
        }
    }
    ConflictReport { conflicts }
}

/// Evaluates one constraint against a state from `player`'s perspective.
pub fn evaluate_constraint(
    constraint: &Constraint,
    map: &GameMap,
    state: &GameState,
    player: Player,
) -> bool {
    let has_troops_on = |continent: Continent| {
        map.territories_of(continent)
            .any(|t| state.owner_of(t) == Some(player) && state.troops_on(t) > 0)
    };
    let continents_touched = || Continent::ALL.iter().filter(|c| has_troops_on(**c)).count();
    match *constraint {
        Constraint::HasTroopsOn(c) => has_troops_on(c),
        Constraint::NoTroopsOn(c) => !has_troops_on(c),
        Constraint::CanReachInOneMove(c) => {
            // Occupancy implies access; otherwise an owned territory needs a
            // connection into the continent.
            has_troops_on(c)
                || state.owned_territories(player).any(|from| {
                    map.neighbours(from)
                        .iter()
                        .any(|to| map.continent_of(*to) == c)
                })
        }
        Constraint::ProtectBorders(c) => map
            .borders(c)
            .iter()
            .all(|t| state.owner_of(*t) == Some(player)),
        Constraint::ContinentTroopsAtLeast(n) => Continent::ALL
            .iter()
            .any(|c| state.continent_troops(map, player, *c) >= n as u32),
        Constraint::CountriesAtLeast(n) => state.count_owned(player) >= n as usize,
        Constraint::ContinentsAtLeast(n) => continents_touched() >= n as usize,
        Constraint::CountryTroopsAtLeast(n) => TerritoryId::all()
            .any(|t| state.owner_of(t) == Some(player) && state.troops_on(t) >= n as u32),
        Constraint::ContinentsAtMost(n) => continents_touched() <= n as usize,
    }
}

/// Checks every non-null constraint against the player's actual position,
/// reporting one conflict per unsatisfied slot.
pub fn check_against_selections(
    spec: &IntentSpec,
    map: &GameMap,
    state: &GameState,
    player: Player,
) -> ConflictReport {
    let mut conflicts = Vec::new();
    for (i, slot) in spec.constraints().iter().enumerate() {
        let Some(constraint) = slot else { continue };
        if !evaluate_constraint(constraint, map, state, player) {
            conflicts.push(Conflict {
                slots: (i, None),
                rule: ConflictRule::UnsatisfiedBySelections,
                message: format!("{constraint} does not match the selections"),
            });
        }
    }
    ConflictReport { conflicts }
}

/// Per-example score: goals counted by bucket agreement, constraints by the
/// size of a maximum matching between the two slot multisets (null matches
/// null).
pub fn score_prediction(pred: &IntentSpec, gold: &IntentSpec) -> (usize, usize) {
    let goals_correct = Goal::ALL
        .iter()
        .filter(|g| pred.goal_bucket(**g) == gold.goal_bucket(**g))
        .count();

    // Multiset matching: identical labels pair up, so the maximum matching
    // size is the sum of per-label count minima.
    let tally = |spec: &IntentSpec| {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for slot in spec.constraints() {
            *counts.entry(Constraint::slot_label(slot)).or_insert(0) += 1;
        }
        counts
    };
    let pred_counts = tally(pred);
    let gold_counts = tally(gold);
    let constraints_correct = pred_counts
        .iter()
        .map(|(label, count)| count.min(gold_counts.get(label).unwrap_or(&0)))
        .sum();

    (goals_correct, constraints_correct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::state::{builtin_initializations, load_initialization};
    use proptest::prelude::*;

    fn map() -> &'static GameMap {
        GameMap::canonical()
    }

    /// The worked tutorial position: ego troops all inside Purple.
    fn annotated_state() -> GameState {
        let state = load_initialization(&builtin_initializations()[0], map()).unwrap();
        let selections: BTreeMap<String, u32> = [
            ("Purple_E".to_string(), 7),
            ("Purple_C".to_string(), 5),
            ("Purple_D".to_string(), 2),
        ]
        .into_iter()
        .collect();
        state.with_ego_selections(map(), &selections).unwrap()
    }

    fn annotated_spec() -> IntentSpec {
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::HasTroopsOn(Continent::Purple));
        constraints[1] = Some(Constraint::NoTroopsOn(Continent::Red));
        constraints[2] = Some(Constraint::CountryTroopsAtLeast(7));
        IntentSpec::new([0, -20, 60, -80, 40, 20], constraints).unwrap()
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucketize(-100).unwrap(), GoalBucket(0));
        assert_eq!(bucketize(-61).unwrap(), GoalBucket(0));
        assert_eq!(bucketize(-60).unwrap(), GoalBucket(1));
        assert_eq!(bucketize(-20).unwrap(), GoalBucket(2));
        assert_eq!(bucketize(19).unwrap(), GoalBucket(2));
        assert_eq!(bucketize(20).unwrap(), GoalBucket(3));
        assert_eq!(bucketize(60).unwrap(), GoalBucket(4));
        assert_eq!(bucketize(100).unwrap(), GoalBucket(4));
        assert_eq!(bucketize(101), Err(IntentError::OutOfRange(101)));
        assert_eq!(bucketize(-101), Err(IntentError::OutOfRange(-101)));
    }

    #[test]
    fn bucketize_is_total_monotone_surjective() {
        let mut last = 0u8;
        let mut seen = [false; BUCKET_COUNT];
        for value in GOAL_MIN..=GOAL_MAX {
            let bucket = bucketize(value).unwrap();
            assert!(bucket.0 >= last);
            last = bucket.0;
            seen[bucket.index()] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn annotated_constraints_hold() {
        let state = annotated_state();
        assert!(evaluate_constraint(
            &Constraint::HasTroopsOn(Continent::Purple),
            map(),
            &state,
            Player::Ego
        ));
        assert!(evaluate_constraint(
            &Constraint::NoTroopsOn(Continent::Red),
            map(),
            &state,
            Player::Ego
        ));
        assert!(evaluate_constraint(
            &Constraint::CountryTroopsAtLeast(7),
            map(),
            &state,
            Player::Ego
        ));
        // and the full spec agrees with the selections
        assert!(check_against_selections(&annotated_spec(), map(), &state, Player::Ego).is_empty());
        assert!(check_consistency(&annotated_spec()).is_empty());

        // all-null constraint slots have nothing to check
        let empty = IntentSpec::new([0; 6], [None; CONSTRAINT_SLOTS]).unwrap();
        assert!(check_against_selections(&empty, map(), &state, Player::Ego).is_empty());

        // an unsatisfied constraint is reported against its slot
        let mut slots = [None; CONSTRAINT_SLOTS];
        slots[2] = Some(Constraint::HasTroopsOn(Continent::Blue));
        let unmet = IntentSpec::new([0; 6], slots).unwrap();
        let report = check_against_selections(&unmet, map(), &state, Player::Ego);
        assert_eq!(report.conflicts.len(), 1);
        assert_eq!(report.conflicts[0].slots, (2, None));
        assert_eq!(
            report.conflicts[0].rule,
            ConflictRule::UnsatisfiedBySelections
        );
    }

    #[test]
    fn access_follows_possession_or_edges() {
        let state = annotated_state();
        // possession implies access
        assert!(evaluate_constraint(
            &Constraint::CanReachInOneMove(Continent::Purple),
            map(),
            &state,
            Player::Ego
        ));
        // Purple_A is black's, so Green is reachable only via Purple_A ->
        // Green_E... which ego does not own. No ego edge into Green:
        assert!(!evaluate_constraint(
            &Constraint::CanReachInOneMove(Continent::Green),
            map(),
            &state,
            Player::Ego
        ));
        // grey sits on Yellow_D which connects into Green
        assert!(evaluate_constraint(
            &Constraint::CanReachInOneMove(Continent::Green),
            map(),
            &state,
            Player::Grey
        ));
    }

    #[test]
    fn protect_borders_requires_all_entrances() {
        let mut state = annotated_state();
        let purple_a = map().territory("Purple_A").unwrap();
        // black holds Purple_A, one of Purple's two borders
        assert!(!evaluate_constraint(
            &Constraint::ProtectBorders(Continent::Purple),
            map(),
            &state,
            Player::Ego
        ));
        state.owner[purple_a.index()] = Some(Player::Ego);
        assert!(evaluate_constraint(
            &Constraint::ProtectBorders(Continent::Purple),
            map(),
            &state,
            Player::Ego
        ));
    }

    #[test]
    fn numeric_constraints() {
        let state = annotated_state();
        // 14 ego troops all on Purple
        assert!(evaluate_constraint(
            &Constraint::ContinentTroopsAtLeast(14),
            map(),
            &state,
            Player::Ego
        ));
        assert!(evaluate_constraint(
            &Constraint::CountriesAtLeast(3),
            map(),
            &state,
            Player::Ego
        ));
        assert!(!evaluate_constraint(
            &Constraint::CountriesAtLeast(4),
            map(),
            &state,
            Player::Ego
        ));
        assert!(evaluate_constraint(
            &Constraint::ContinentsAtLeast(1),
            map(),
            &state,
            Player::Ego
        ));
        assert!(evaluate_constraint(
            &Constraint::ContinentsAtMost(1),
            map(),
            &state,
            Player::Ego
        ));
        assert!(!evaluate_constraint(
            &Constraint::ContinentsAtMost(1),
            map(),
            &state,
            Player::Grey // grey spans Red and Yellow
        ));
    }

    #[test]
    fn consistency_rules() {
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::ContinentsAtLeast(2));
        constraints[1] = Some(Constraint::ContinentsAtMost(1));
        let spec = IntentSpec::new([0; 6], constraints).unwrap();
        let report = check_consistency(&spec);
        assert_eq!(report.conflicts.len(), 1);
        assert_eq!(report.conflicts[0].rule, ConflictRule::SpreadBounds);

        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::HasTroopsOn(Continent::Blue));
        constraints[3] = Some(Constraint::NoTroopsOn(Continent::Blue));
        let spec = IntentSpec::new([0; 6], constraints).unwrap();
        let report = check_consistency(&spec);
        assert_eq!(report.conflicts.len(), 1);
        assert_eq!(
            report.conflicts[0].rule,
            ConflictRule::PresenceContradiction
        );
        assert_eq!(report.conflicts[0].slots, (0, Some(3)));

        // compatible bounds pass
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::ContinentsAtLeast(2));
        constraints[1] = Some(Constraint::ContinentsAtMost(2));
        let spec = IntentSpec::new([0; 6], constraints).unwrap();
        assert!(check_consistency(&spec).is_empty());
    }

    #[test]
    fn duplicate_constraints_rejected_at_construction() {
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::HasTroopsOn(Continent::Blue));
        constraints[5] = Some(Constraint::HasTroopsOn(Continent::Blue));
        assert!(matches!(
            IntentSpec::new([0; 6], constraints),
            Err(IntentError::DuplicateConstraint(_))
        ));
    }

    #[test]
    fn scoring_identity_and_matching() {
        let spec = annotated_spec();
        assert_eq!(score_prediction(&spec, &spec), (6, 8));

        // gold: 5 constraints + 3 nulls; pred matches 4 of them + 3 nulls
        let mut gold_slots = [None; CONSTRAINT_SLOTS];
        gold_slots[0] = Some(Constraint::HasTroopsOn(Continent::Purple));
        gold_slots[1] = Some(Constraint::NoTroopsOn(Continent::Red));
        gold_slots[2] = Some(Constraint::CountryTroopsAtLeast(7));
        gold_slots[3] = Some(Constraint::ContinentsAtMost(2));
        gold_slots[4] = Some(Constraint::CountriesAtLeast(3));
        let gold = IntentSpec::new([0; 6], gold_slots).unwrap();
        let mut pred_slots = [None; CONSTRAINT_SLOTS];
        pred_slots[0] = Some(Constraint::CountriesAtLeast(3));
        pred_slots[1] = Some(Constraint::HasTroopsOn(Continent::Purple));
        pred_slots[2] = Some(Constraint::NoTroopsOn(Continent::Red));
        pred_slots[3] = Some(Constraint::CountryTroopsAtLeast(7));
        pred_slots[4] = Some(Constraint::ContinentsAtLeast(4)); // miss
        let pred = IntentSpec::new([0; 6], pred_slots).unwrap();
        let (_, constraints_correct) = score_prediction(&pred, &gold);
        assert_eq!(constraints_correct, 4 + 3);
    }

    #[test]
    fn label_space_round_trips() {
        for index in 0..CONSTRAINT_SPACE {
            let constraint = Constraint::from_label_index(index).unwrap();
            assert_eq!(constraint.label_index(), index);
        }
        assert_eq!(Constraint::from_label_index(CONSTRAINT_SPACE), None);
        assert_eq!(Constraint::slot_label(&None), CONSTRAINT_SPACE);
    }

    #[test]
    fn constraint_json_spelling() {
        let c = Constraint::HasTroopsOn(Continent::Purple);
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"{"class":"C1","value":"Purple"}"#
        );
        let n = Constraint::CountriesAtLeast(3);
        assert_eq!(
            serde_json::to_string(&n).unwrap(),
            r#"{"class":"C6","value":3}"#
        );
        let back: Constraint = serde_json::from_str(r#"{"class":"C9","value":2}"#).unwrap();
        assert_eq!(back, Constraint::ContinentsAtMost(2));
        assert!(serde_json::from_str::<Constraint>(r#"{"class":"C9","value":"Red"}"#).is_err());
        assert!(serde_json::from_str::<Constraint>(r#"{"class":"C9","value":15}"#).is_err());
    }

    proptest! {
        #[test]
        fn presence_constraints_are_complements(seed in 0u64..500) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let start = load_initialization(
                &builtin_initializations()[(seed % 15) as usize], map()).unwrap();
            let states = crate::sim::sample_rollout_states(map(), &start, 1, 40, seed);
            let state = states.last().cloned().unwrap_or(start);
            let _ = &mut rng;
            for continent in Continent::ALL {
                for player in Player::ALL {
                    let c1 = evaluate_constraint(
                        &Constraint::HasTroopsOn(continent), map(), &state, player);
                    let c2 = evaluate_constraint(
                        &Constraint::NoTroopsOn(continent), map(), &state, player);
                    prop_assert_eq!(c1, !c2);
                }
            }
        }

        #[test]
        fn spread_constraints_are_monotone(seed in 0u64..200) {
            let start = load_initialization(
                &builtin_initializations()[(seed % 15) as usize], map()).unwrap();
            let states = crate::sim::sample_rollout_states(map(), &start, 1, 30, seed);
            let state = states.last().cloned().unwrap_or(start);
            for player in Player::ALL {
                for n in 2..=NUMBER_MAX {
                    let stronger = evaluate_constraint(
                        &Constraint::ContinentsAtLeast(n), map(), &state, player);
                    let weaker = evaluate_constraint(
                        &Constraint::ContinentsAtLeast(n - 1), map(), &state, player);
                    prop_assert!(!stronger || weaker);
                    let tight = evaluate_constraint(
                        &Constraint::ContinentsAtMost(n - 1), map(), &state, player);
                    let loose = evaluate_constraint(
                        &Constraint::ContinentsAtMost(n), map(), &state, player);
                    prop_assert!(!tight || loose);
                }
            }
        }

        #[test]
        fn constraint_matching_is_permutation_invariant(
            perm_seed in 0u64..1000,
            labels_a in proptest::collection::vec(0usize..CONSTRAINT_LABELS, CONSTRAINT_SLOTS),
            labels_b in proptest::collection::vec(0usize..CONSTRAINT_LABELS, CONSTRAINT_SLOTS),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            // sanitize into valid specs (drop duplicate concrete labels)
            let build = |labels: &[usize]| {
                let mut seen = Vec::new();
                let mut slots = [None; CONSTRAINT_SLOTS];
                for (slot, label) in slots.iter_mut().zip(labels) {
                    let c = Constraint::from_label_index(*label);
                    if let Some(c) = c {
                        if seen.contains(&c) { continue; }
                        seen.push(c);
                        *slot = Some(c);
                    }
                }
                IntentSpec::new([0; 6], slots).unwrap()
            };
            let a = build(&labels_a);
            let b = build(&labels_b);
            let base = score_prediction(&a, &b);
            // symmetry of the constraint component
            prop_assert_eq!(score_prediction(&b, &a).1, base.1);
            // invariance under slot permutation of either side
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
            let mut shuffled = *a.constraints();
            shuffled.shuffle(&mut rng);
            let a_shuffled = IntentSpec::new(*a.goal_values(), shuffled).unwrap();
            prop_assert_eq!(score_prediction(&a_shuffled, &b).1, base.1);
        }
    }
}
