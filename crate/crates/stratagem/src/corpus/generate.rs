//! Synthetic corpus generation: sampling consistent intents, solving for a
//! troop placement that satisfies them, and rendering template text.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, CorpusExample, Source};
use crate::game::map::{Continent, GameMap, TerritoryId};
use crate::game::state::{load_initialization, GameState, MapInitialization, Player, DRAFT_TROOPS};
use crate::intent::{
    bucketize, check_against_selections, check_consistency, Constraint, ConstraintClass, Goal,
    GoalBucket, IntentSpec, CONSTRAINT_SLOTS, CONSTRAINT_SPACE, GOAL_MAX, GOAL_MIN,
};

/// Fresh placement attempts per intent before it is declared infeasible.
const PLACEMENT_ATTEMPTS: usize = 12;

/// Intent draws per emitted example before generation gives up.
const INTENT_RETRY_BUDGET: usize = 2000;

/// Surface templates for goals (per value bucket) and constraints (per
/// class), loaded from a versioned data file.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    goal_levels: [Vec<String>; 5],
    goal_phrases: [String; 6],
    constraint_templates: [Vec<String>; 9],
}

impl TemplateBank {
    pub fn builtin() -> &'static TemplateBank {
        static BANK: OnceLock<TemplateBank> = OnceLock::new();
        BANK.get_or_init(|| {
            TemplateBank::parse(include_str!("../../data/templates.txt"))
                .expect("built-in template file is valid")
        })
    }

    pub fn parse(text: &str) -> Result<TemplateBank, CorpusError> {
        let mut goal_levels: [Vec<String>; 5] = Default::default();
        let mut goal_phrases: [Option<String>; 6] = Default::default();
        let mut constraint_templates: [Vec<String>; 9] = Default::default();
        let mut version = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line.split_once(':').ok_or_else(|| {
                CorpusError::Template(format!("line {lineno}: expected `key: value`"))
            })?;
            let rest = rest.trim();
            let split_tagged = |rest: &str| -> Result<(String, String), CorpusError> {
                let (tag, body) = rest.split_once('|').ok_or_else(|| {
                    CorpusError::Template(format!("line {lineno}: expected `tag | text`"))
                })?;
                Ok((tag.trim().to_string(), body.trim().to_string()))
            };
            match key.trim() {
                "format_version" => version = Some(rest.to_string()),
                "goal_template" => {
                    let (tag, body) = split_tagged(rest)?;
                    let bucket: usize = tag.parse().map_err(|_| {
                        CorpusError::Template(format!("line {lineno}: bad bucket `{tag}`"))
                    })?;
                    if bucket >= 5 {
                        return Err(CorpusError::Template(format!(
                            "line {lineno}: bucket {bucket} out of range"
                        )));
                    }
                    goal_levels[bucket].push(body);
                }
                "goal_phrase" => {
                    let (tag, body) = split_tagged(rest)?;
                    let goal = Goal::ALL
                        .iter()
                        .find(|g| format!("{g:?}") == tag)
                        .ok_or_else(|| {
                            CorpusError::Template(format!("line {lineno}: bad goal `{tag}`"))
                        })?;
                    goal_phrases[goal.index()] = Some(body);
                }
                "constraint_template" => {
                    let (tag, body) = split_tagged(rest)?;
                    let class = ConstraintClass::ALL
                        .iter()
                        .position(|c| format!("{c:?}") == tag)
                        .ok_or_else(|| {
                            CorpusError::Template(format!("line {lineno}: bad class `{tag}`"))
                        })?;
                    constraint_templates[class].push(body);
                }
                other => {
                    return Err(CorpusError::Template(format!(
                        "line {lineno}: unknown key `{other}`"
                    )))
                }
            }
        }

        if version.as_deref() != Some("1") {
            return Err(CorpusError::Template(
                "missing or unsupported format_version (expected 1)".to_string(),
            ));
        }
        for (bucket, templates) in goal_levels.iter().enumerate() {
            if templates.len() < 3 {
                return Err(CorpusError::Template(format!(
                    "goal bucket {bucket} has {} templates, needs at least 3",
                    templates.len()
                )));
            }
        }
        for (class, templates) in constraint_templates.iter().enumerate() {
            if templates.len() < 3 {
                return Err(CorpusError::Template(format!(
                    "constraint class C{} has {} templates, needs at least 3",
                    class + 1,
                    templates.len()
                )));
            }
        }
        let goal_phrases = {
            let mut out: [String; 6] = Default::default();
            for (i, phrase) in goal_phrases.into_iter().enumerate() {
                out[i] = phrase.ok_or_else(|| {
                    CorpusError::Template(format!("missing goal_phrase for G{}", i + 1))
                })?;
            }
            out
        };
        Ok(TemplateBank {
            goal_levels,
            goal_phrases,
            constraint_templates,
        })
    }

    /// Renders a goal sentence; the neutral bucket renders nothing.
    pub fn render_goal(
        &self,
        goal: Goal,
        bucket: GoalBucket,
        rng: &mut ChaCha8Rng,
    ) -> Option<String> {
        if bucket.is_neutral() {
            return None;
        }
        let template = self.goal_levels[bucket.index()]
            .choose(rng)
            .expect("bucket has templates");
        Some(template.replace("{goal}", &self.goal_phrases[goal.index()]))
    }

    pub fn render_constraint(&self, constraint: Constraint, rng: &mut ChaCha8Rng) -> String {
        let class = ConstraintClass::ALL
            .iter()
            .position(|c| *c == constraint.class())
            .expect("class listed");
        let template = self.constraint_templates[class]
            .choose(rng)
            .expect("class has templates");
        match (constraint.continent(), constraint.number()) {
            (Some(c), _) => template.replace("{continent}", c.name()),
            (_, Some(n)) => template.replace("{number}", &n.to_string()),
            _ => unreachable!(),
        }
    }
}

/// Uniformly samples an internally consistent intent: six goal values and
/// three to eight distinct constraints, rejection-sampled until the
/// consistency rules pass.
pub fn sample_intent(rng: &mut ChaCha8Rng) -> IntentSpec {
    loop {
        let mut goal_values = [0i32; 6];
        for value in &mut goal_values {
            *value = rng.random_range(GOAL_MIN..=GOAL_MAX);
        }
        let count = rng.random_range(3..=CONSTRAINT_SLOTS);
        let mut labels: Vec<usize> = (0..CONSTRAINT_SPACE).collect();
        let (chosen, _) = labels.partial_shuffle(rng, count);
        let mut constraints = [None; CONSTRAINT_SLOTS];
        for (slot, label) in constraints.iter_mut().zip(chosen.iter()) {
            *slot = Constraint::from_label_index(*label);
        }
        let spec = IntentSpec::new(goal_values, constraints)
            .expect("distinct sampled constraints are well-formed");
        if check_consistency(&spec).is_empty() {
            return spec;
        }
    }
}

struct Placement<'a> {
    map: &'a GameMap,
    base: &'a GameState,
    troops: BTreeMap<TerritoryId, u32>,
    budget: u32,
    banned: Vec<Continent>,
    spread_cap: usize,
}

impl<'a> Placement<'a> {
    fn new(map: &'a GameMap, base: &'a GameState, intent: &IntentSpec) -> Placement<'a> {
        let banned: Vec<Continent> = intent
            .non_null_constraints()
            .filter_map(|c| match c {
                Constraint::NoTroopsOn(continent) => Some(continent),
                _ => None,
            })
            .collect();
        let spread_cap = intent
            .non_null_constraints()
            .filter_map(|c| match c {
                Constraint::ContinentsAtMost(n) => Some(n as usize),
                _ => None,
            })
            .min()
            .unwrap_or(Continent::ALL.len());
        Placement {
            map,
            base,
            troops: BTreeMap::new(),
            budget: DRAFT_TROOPS,
            banned,
            spread_cap,
        }
    }

    fn allowed(&self, territory: TerritoryId) -> bool {
        !self.banned.contains(&self.map.continent_of(territory))
    }

    fn is_empty_territory(&self, territory: TerritoryId) -> bool {
        self.base.owner_of(territory).is_none() && !self.troops.contains_key(&territory)
    }

    fn touched(&self) -> Vec<Continent> {
        let mut touched: Vec<Continent> = self
            .troops
            .keys()
            .map(|t| self.map.continent_of(*t))
            .collect();
        touched.sort();
        touched.dedup();
        touched
    }

    fn add(&mut self, territory: TerritoryId, amount: u32) -> bool {
        if amount > self.budget {
            return false;
        }
        self.budget -= amount;
        *self.troops.entry(territory).or_insert(0) += amount;
        true
    }

    /// Claim a fresh empty territory with one troop.
    fn claim(&mut self, territory: TerritoryId) -> bool {
        debug_assert!(self.is_empty_territory(territory));
        self.add(territory, 1)
    }

    fn empty_in(&self, continent: Continent) -> Vec<TerritoryId> {
        self.map
            .territories_of(continent)
            .filter(|t| self.is_empty_territory(*t))
            .collect()
    }
}

/// Tries one randomized greedy placement pass. Returns the selections or
/// `None` when this pass painted itself into a corner.
fn try_place(
    intent: &IntentSpec,
    base: &GameState,
    map: &GameMap,
    rng: &mut ChaCha8Rng,
) -> Option<BTreeMap<TerritoryId, u32>> {
    let mut placement = Placement::new(map, base, intent);
    let constraints: Vec<Constraint> = intent.non_null_constraints().collect();

    // Border duty first: C4 pins specific territories.
    for constraint in &constraints {
        if let Constraint::ProtectBorders(continent) = constraint {
            if placement.banned.contains(continent) {
                return None;
            }
            for border in map.borders(*continent) {
                if placement.troops.contains_key(border) {
                    continue;
                }
                if !placement.is_empty_territory(*border) || !placement.claim(*border) {
                    return None;
                }
            }
        }
    }

    // Continent presence: C1, then C3 where no connection already works.
    for constraint in &constraints {
        if let Constraint::HasTroopsOn(continent) = constraint {
            if placement.banned.contains(continent) {
                return None;
            }
            if placement.touched().contains(continent) {
                continue;
            }
            let options = placement.empty_in(*continent);
            let target = options.choose(rng)?;
            if !placement.claim(*target) {
                return None;
            }
        }
    }
    for constraint in &constraints {
        if let Constraint::CanReachInOneMove(continent) = constraint {
            let satisfied = placement.touched().contains(continent)
                || placement.troops.keys().any(|from| {
                    map.neighbours(*from)
                        .iter()
                        .any(|to| map.continent_of(*to) == *continent)
                });
            if satisfied {
                continue;
            }
            // Prefer a territory connected into the continent; fall back to
            // entering the continent itself.
            let mut options: Vec<TerritoryId> = TerritoryId::all()
                .filter(|t| {
                    placement.is_empty_territory(*t)
                        && placement.allowed(*t)
                        && map
                            .neighbours(*t)
                            .iter()
                            .any(|to| map.continent_of(*to) == *continent)
                })
                .collect();
            if options.is_empty() && !placement.banned.contains(continent) {
                options = placement.empty_in(*continent);
            }
            let target = options.choose(rng)?;
            if !placement.claim(*target) {
                return None;
            }
        }
    }

    // Spread floor: C7 (the largest demand wins if several are present).
    let spread_floor = constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::ContinentsAtLeast(n) => Some(*n),
            _ => None,
        })
        .max();
    if let Some(n) = spread_floor {
        while placement.touched().len() < n as usize {
            let candidates: Vec<Continent> = Continent::ALL
                .iter()
                .copied()
                .filter(|c| {
                    !placement.banned.contains(c)
                        && !placement.touched().contains(c)
                        && !placement.empty_in(*c).is_empty()
                })
                .collect();
            let continent = candidates.choose(rng)?;
            let options = placement.empty_in(*continent);
            let target = options.choose(rng)?;
            if !placement.claim(*target) {
                return None;
            }
        }
    }
    if placement.touched().len() > placement.spread_cap {
        return None;
    }

    // Country floor: C6 claims more territories, inside touched continents
    // when the spread cap is tight.
    let country_floor = constraints
        .iter()
        .filter_map(|c| match c {
            Constraint::CountriesAtLeast(n) => Some(*n),
            _ => None,
        })
        .max();
    if let Some(n) = country_floor {
        while placement.troops.len() < n as usize {
            let at_cap = placement.touched().len() >= placement.spread_cap;
            let options: Vec<TerritoryId> = TerritoryId::all()
                .filter(|t| {
                    placement.is_empty_territory(*t)
                        && placement.allowed(*t)
                        && (!at_cap || placement.touched().contains(&map.continent_of(*t)))
                })
                .collect();
            let target = options.choose(rng)?;
            if !placement.claim(*target) {
                return None;
            }
        }
    }

    // Make sure at least one territory exists to absorb stacks and leftovers.
    if placement.troops.is_empty() {
        let options: Vec<TerritoryId> = TerritoryId::all()
            .filter(|t| placement.is_empty_territory(*t) && placement.allowed(*t))
            .collect();
        let target = options.choose(rng)?;
        if !placement.claim(*target) {
            return None;
        }
    }

    // Stack height: C8 tops up the tallest stack.
    for constraint in &constraints {
        if let Constraint::CountryTroopsAtLeast(n) = constraint {
            let (&target, &height) = placement
                .troops
                .iter()
                .max_by_key(|(t, height)| (**height, std::cmp::Reverse(t.index())))
                .expect("placement is non-empty");
            if height < *n as u32 && !placement.add(target, *n as u32 - height) {
                return None;
            }
        }
    }

    // Continent mass: C5 tops up the heaviest continent.
    for constraint in &constraints {
        if let Constraint::ContinentTroopsAtLeast(n) = constraint {
            let touched = placement.touched();
            let heaviest = touched
                .iter()
                .max_by_key(|c| {
                    placement
                        .troops
                        .iter()
                        .filter(|(t, _)| map.continent_of(**t) == **c)
                        .map(|(_, height)| *height)
                        .sum::<u32>()
                })
                .copied()
                .expect("placement is non-empty");
            let mass: u32 = placement
                .troops
                .iter()
                .filter(|(t, _)| map.continent_of(**t) == heaviest)
                .map(|(_, height)| *height)
                .sum();
            if mass < *n as u32 {
                let (&target, _) = placement
                    .troops
                    .iter()
                    .filter(|(t, _)| map.continent_of(**t) == heaviest)
                    .max_by_key(|(t, height)| (**height, std::cmp::Reverse(t.index())))
                    .expect("touched continent has a stack");
                if !placement.add(target, *n as u32 - mass) {
                    return None;
                }
            }
        }
    }

    // Spend the leftovers on territories already claimed.
    let claimed: Vec<TerritoryId> = placement.troops.keys().copied().collect();
    while placement.budget > 0 {
        let target = claimed.choose(rng).copied()?;
        if !placement.add(target, 1) {
            return None;
        }
    }
    Some(placement.troops)
}

/// Produces a full corpus example for a consistent intent: selections that
/// satisfy every constraint on the initialized map, plus rendered text (one
/// sentence per constraint and per non-neutral goal, shuffled).
pub fn realize(
    intent: &IntentSpec,
    init: &MapInitialization,
    map: &GameMap,
    bank: &TemplateBank,
    rng: &mut ChaCha8Rng,
) -> Result<CorpusExample, CorpusError> {
    let base =
        load_initialization(init, map).map_err(|e| CorpusError::InfeasibleIntent(e.to_string()))?;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let Some(placement) = try_place(intent, &base, map, rng) else {
            continue;
        };
        let selections: BTreeMap<String, u32> = placement
            .iter()
            .map(|(t, count)| (map.name(*t).to_string(), *count))
            .collect();
        let Ok(state) = base.with_ego_selections(map, &selections) else {
            continue;
        };
        if !check_against_selections(intent, map, &state, Player::Ego).is_empty() {
            continue;
        }
        let text = render_text(intent, bank, rng);
        return Ok(CorpusExample {
            map_id: init.id,
            text,
            selections,
            intent: intent.clone(),
            source: Source::Synthetic,
        });
    }
    Err(CorpusError::InfeasibleIntent(format!(
        "no {DRAFT_TROOPS}-troop placement on map {} satisfies the constraints",
        init.id
    )))
}

fn render_text(intent: &IntentSpec, bank: &TemplateBank, rng: &mut ChaCha8Rng) -> String {
    let mut sentences: Vec<String> = Vec::new();
    for constraint in intent.non_null_constraints() {
        sentences.push(bank.render_constraint(constraint, rng));
    }
    for goal in Goal::ALL {
        let bucket = bucketize(intent.goal_value(goal)).expect("stored values in range");
        if let Some(sentence) = bank.render_goal(goal, bucket, rng) {
            sentences.push(sentence);
        }
    }
    sentences.shuffle(rng);
    sentences.join(" ")
}

/// Generates `n` pairwise-distinct validated examples. Example `i` draws all
/// of its randomness from a stream derived from `(seed, i)`, so the output
/// is reproducible and independent of batching.
pub fn generate_corpus(
    map: &GameMap,
    inits: &[MapInitialization],
    bank: &TemplateBank,
    n: usize,
    seed: u64,
) -> Result<Vec<CorpusExample>, CorpusError> {
    assert!(
        !inits.is_empty(),
        "at least one map initialization required"
    );
    let mut seen = HashSet::new();
    let mut examples = Vec::with_capacity(n);
    for index in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64 + 1);
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > INTENT_RETRY_BUDGET {
                return Err(CorpusError::RetryBudgetExceeded {
                    index,
                    attempts: attempts - 1,
                });
            }
            let init = inits.choose(&mut rng).expect("non-empty initializations");
            let intent = sample_intent(&mut rng);
            if seen.contains(&intent.canonical_key()) {
                continue;
            }
            match realize(&intent, init, map, bank, &mut rng) {
                Ok(example) => {
                    seen.insert(intent.canonical_key());
                    examples.push(example);
                    break;
                }
                Err(CorpusError::InfeasibleIntent(_)) => continue,
                Err(other) => return Err(other),
            }
        }
    }
    Ok(examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::state::builtin_initializations;

    fn map() -> &'static GameMap {
        GameMap::canonical()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn builtin_bank_parses_with_enough_variety() {
        let bank = TemplateBank::builtin();
        for level in &bank.goal_levels {
            assert!(level.len() >= 3);
        }
        for class in &bank.constraint_templates {
            assert!(class.len() >= 3);
        }
    }

    #[test]
    fn sampled_intents_are_consistent_and_sized() {
        let mut rng = rng(5);
        for _ in 0..200 {
            let intent = sample_intent(&mut rng);
            assert!(check_consistency(&intent).is_empty());
            let count = intent.non_null_constraints().count();
            assert!((3..=8).contains(&count), "constraint count {count}");
        }
    }

    #[test]
    fn batch_generation_is_unique_and_self_validating() {
        let inits = builtin_initializations();
        let examples = generate_corpus(map(), inits, TemplateBank::builtin(), 60, 99).unwrap();
        assert_eq!(examples.len(), 60);
        let mut keys = HashSet::new();
        for example in &examples {
            assert!(
                keys.insert(example.intent.canonical_key()),
                "duplicate intent"
            );
            example.validate(map()).unwrap();
            assert!(check_consistency(&example.intent).is_empty());
            let init = inits.iter().find(|i| i.id == example.map_id).unwrap();
            let base = load_initialization(init, map()).unwrap();
            let state = base
                .with_ego_selections(map(), &example.selections)
                .unwrap();
            assert!(
                check_against_selections(&example.intent, map(), &state, Player::Ego).is_empty()
            );
        }
    }

    #[test]
    fn realize_places_required_continent_and_mentions_it() {
        let inits = builtin_initializations();
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::HasTroopsOn(Continent::Purple));
        let intent = IntentSpec::new([0; 6], constraints).unwrap();
        let example = realize(
            &intent,
            &inits[0],
            map(),
            TemplateBank::builtin(),
            &mut rng(3),
        )
        .unwrap();
        assert!(example.text.contains("Purple"), "text: {}", example.text);
        assert!(example
            .selections
            .keys()
            .any(|name| name.starts_with("Purple")));
    }

    #[test]
    fn pigeonhole_infeasibility_detected() {
        // Demand 14 distinct countries when only 11 territories are open.
        let inits = builtin_initializations();
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::CountriesAtLeast(14));
        let intent = IntentSpec::new([0; 6], constraints).unwrap();
        let result = realize(
            &intent,
            &inits[0],
            map(),
            TemplateBank::builtin(),
            &mut rng(3),
        );
        assert!(matches!(result, Err(CorpusError::InfeasibleIntent(_))));
    }

    #[test]
    fn realize_is_deterministic_per_seed() {
        let inits = builtin_initializations();
        let mut rng_a = rng(17);
        let mut rng_b = rng(17);
        let intent = sample_intent(&mut rng_a);
        let intent_b = sample_intent(&mut rng_b);
        assert_eq!(intent, intent_b);
        let a = realize(
            &intent,
            &inits[2],
            map(),
            TemplateBank::builtin(),
            &mut rng_a,
        );
        let b = realize(
            &intent_b,
            &inits[2],
            map(),
            TemplateBank::builtin(),
            &mut rng_b,
        );
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            other => panic!("divergent outcomes: {other:?}"),
        }
    }
}
