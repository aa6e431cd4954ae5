//! Paraphrase augmentation with a data-quality filter. Descriptions are
//! split into sentences; candidate paraphrases that drop a protected keyword
//! (continent names, numbers) or stay too close to the original in edit
//! distance are rejected, and labels are never touched.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusExample, Source};
use crate::game::map::Continent;

/// Produces candidate rewrites for a single sentence. Implementations must
/// be deterministic; candidate selection is the caller's randomness.
pub trait Paraphraser {
    fn candidates(&self, sentence: &str) -> Vec<String>;
}

/// Quality-filter settings.
#[derive(Debug, Clone)]
pub struct FilterParams {
    /// Words that must survive a paraphrase unchanged (multiset-wise).
    /// Digit tokens are always protected in addition to this list.
    pub protected_keywords: Vec<String>,
    /// Minimum Levenshtein distance, normalized by the longer sentence,
    /// below which a candidate counts as a trivial rewording.
    pub min_edit_distance_ratio: f64,
}

impl Default for FilterParams {
    fn default() -> FilterParams {
        FilterParams {
            protected_keywords: Continent::ALL
                .iter()
                .map(|c| c.name().to_string())
                .collect(),
            min_edit_distance_ratio: 0.15,
        }
    }
}

/// Splits on sentence-final `.`, `!`, `?` followed by whitespace, keeping
/// the punctuation. A short abbreviation list guards against false splits.
pub fn split_sentences(text: &str) -> Vec<String> {
    const ABBREVIATIONS: [&str; 8] = ["e.g", "i.e", "mr", "mrs", "dr", "vs", "etc", "st"];
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let next = chars.get(i + 1);
            let boundary = next.is_none_or(|n| n.is_whitespace());
            if boundary && c == '.' {
                // look back at the word before the period
                let word: String = chars[start..i]
                    .iter()
                    .rev()
                    .take_while(|ch| ch.is_alphanumeric() || **ch == '.')
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                let word = word.trim_end_matches('.').to_ascii_lowercase();
                if ABBREVIATIONS.contains(&word.as_str()) {
                    i += 1;
                    continue;
                }
            }
            if boundary {
                let sentence: String = chars[start..=i].iter().collect();
                let sentence = sentence.trim().to_string();
                if !sentence.is_empty() {
                    sentences.push(sentence);
                }
                start = i + 1;
            }
        }
        i += 1;
    }
    let tail: String = chars[start.min(chars.len())..].iter().collect();
    let tail = tail.trim().to_string();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

fn tokens(sentence: &str) -> impl Iterator<Item = String> + '_ {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
}

/// Multiset of protected tokens in a sentence: listed keywords plus any
/// all-digit token.
fn protected_multiset(sentence: &str, params: &FilterParams) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for token in tokens(sentence) {
        let keyword = params
            .protected_keywords
            .iter()
            .any(|k| k.eq_ignore_ascii_case(&token));
        let digits = token.chars().all(|c| c.is_ascii_digit());
        if keyword || digits {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    counts
}

/// Levenshtein distance normalized by the longer string's character count.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    strsim::levenshtein(a, b) as f64 / longest as f64
}

/// The quality filter: keyword preservation plus the distance floor.
pub fn candidate_passes(original: &str, candidate: &str, params: &FilterParams) -> bool {
    if candidate.trim().is_empty() {
        return false;
    }
    if protected_multiset(original, params) != protected_multiset(candidate, params) {
        return false;
    }
    normalized_edit_distance(original, candidate) >= params.min_edit_distance_ratio
}

/// Rewrites one example's text sentence by sentence, keeping any sentence
/// whose candidates all fail the filter. Labels (`map_id`, selections,
/// goals, constraints) are copied bit for bit; only `text` and `source`
/// change.
pub fn augment(
    example: &CorpusExample,
    paraphraser: &dyn Paraphraser,
    params: &FilterParams,
    rng: &mut ChaCha8Rng,
) -> CorpusExample {
    let mut sentences = Vec::new();
    for sentence in split_sentences(&example.text) {
        let survivors: Vec<String> = paraphraser
            .candidates(&sentence)
            .into_iter()
            .filter(|candidate| candidate_passes(&sentence, candidate, params))
            .collect();
        match survivors.choose(rng) {
            Some(replacement) => sentences.push(replacement.clone()),
            None => sentences.push(sentence),
        }
    }
    CorpusExample {
        map_id: example.map_id,
        text: sentences.join(" "),
        selections: example.selections.clone(),
        intent: example.intent.clone(),
        source: Source::Augmented,
    }
}

/// Augments a whole corpus with one derived random stream per example.
pub fn augment_corpus(
    examples: &[CorpusExample],
    paraphraser: &dyn Paraphraser,
    params: &FilterParams,
    seed: u64,
) -> Vec<CorpusExample> {
    examples
        .iter()
        .enumerate()
        .map(|(index, example)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64 + 1);
            augment(example, paraphraser, params, &mut rng)
        })
        .collect()
}

/// Whole-word, case-insensitive phrase replacement; `None` when the phrase
/// does not occur.
fn replace_phrase(sentence: &str, pattern: &str, replacement: &str) -> Option<String> {
    let lower = sentence.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    let mut out = String::new();
    let mut cursor = 0;
    let mut replaced = false;
    while let Some(pos) = lower[cursor..].find(pattern) {
        let start = cursor + pos;
        let end = start + pattern.len();
        let left_ok = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        let right_ok = end == bytes.len() || !bytes[end].is_ascii_alphanumeric();
        if left_ok && right_ok {
            out.push_str(&sentence[cursor..start]);
            out.push_str(replacement);
            replaced = true;
            cursor = end;
        } else {
            out.push_str(&sentence[cursor..end]);
            cursor = end;
        }
    }
    if !replaced {
        return None;
    }
    out.push_str(&sentence[cursor..]);
    Some(out)
}

/// Restores sentence case after lowercase rewriting: first letter, the
/// pronoun `i`, and continent names.
fn fix_case(sentence: &str) -> String {
    let mut out = String::with_capacity(sentence.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if word.is_empty() {
            return;
        }
        if word == "i" {
            out.push('I');
        } else if let Some(continent) = Continent::ALL
            .iter()
            .find(|c| c.name().eq_ignore_ascii_case(word))
        {
            out.push_str(continent.name());
        } else {
            out.push_str(word);
        }
        word.clear();
    };
    for c in sentence.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);

    // capitalize the first alphabetic character
    let mut result = String::with_capacity(out.len());
    let mut capitalized = false;
    for c in out.chars() {
        if !capitalized && c.is_alphabetic() {
            result.extend(c.to_uppercase());
            capitalized = true;
        } else {
            result.push(c);
        }
    }
    result
}

/// Rule-based paraphrase provider: a synonym/phrase table plus one clause
/// reordering rule. Candidates are the all-rules rewrite (two synonym
/// picks), each single-rule rewrite, and the reordered clause form.
pub struct RuleParaphraser {
    rules: Vec<(&'static str, Vec<&'static str>)>,
}

impl Default for RuleParaphraser {
    fn default() -> RuleParaphraser {
        // Longer patterns first so specific phrasings win over single words.
        // Replacements deliberately avoid continent names and digits.
        let rules: Vec<(&'static str, Vec<&'static str>)> = vec![
            (
                "i must be able to",
                vec!["i need to be able to", "i want to be able to"],
            ),
            ("i must have", vec!["i need to keep", "i have to maintain"]),
            ("i must not", vec!["i refuse to", "i will not"]),
            ("i must", vec!["i absolutely need to", "i have to"]),
            ("i need to", vec!["i have to", "i intend to"]),
            ("i need a", vec!["i require a", "i want a"]),
            ("i need", vec!["i require"]),
            ("i want to", vec!["i would like to", "i aim to"]),
            ("i plan to", vec!["i intend to", "i mean to"]),
            ("my strategy is", vec!["my game plan is", "my approach is"]),
            ("my strategy", vec!["my game plan"]),
            ("my plan", vec!["my approach"]),
            ("my whole plan", vec!["my entire approach"]),
            ("at least", vec!["no fewer than", "a minimum of"]),
            ("at most", vec!["no more than", "a maximum of"]),
            ("spread across", vec!["expand over", "fan out across"]),
            ("large army", vec!["big force", "sizeable army"]),
            ("close together", vec!["tightly grouped", "near each other"]),
            ("troops", vec!["forces", "units"]),
            ("countries", vec!["territories"]),
            ("country", vec!["territory"]),
            ("battle", vec!["fight"]),
            ("battles", vec!["fights"]),
            ("protect", vec!["defend", "guard"]),
            ("borders", vec!["frontiers", "border territories"]),
            ("essential", vec!["critical", "vital"]),
            ("occupy", vec!["take control of", "capture"]),
            ("place", vec!["deploy", "position"]),
            ("keep", vec!["maintain"]),
            ("avoid", vec!["stay away from", "steer clear of"]),
            ("access", vec!["reach"]),
            ("priority", vec!["top concern"]),
            ("hold", vec!["control"]),
        ];
        RuleParaphraser { rules }
    }
}

impl RuleParaphraser {
    fn apply_all(&self, sentence: &str, pick: usize) -> String {
        let mut current = sentence.to_ascii_lowercase();
        for (pattern, replacements) in &self.rules {
            let replacement = replacements[pick.min(replacements.len() - 1)];
            if let Some(next) = replace_phrase(&current, pattern, replacement) {
                current = next;
            }
        }
        current
    }

    fn reorder_clause(sentence: &str) -> Option<String> {
        let lower = sentence.to_ascii_lowercase();
        let rest = lower.strip_prefix("because ")?;
        let (head, tail) = rest.split_once(", ")?;
        let tail = tail.trim_end_matches(['.', '!', '?']).trim();
        if head.is_empty() || tail.is_empty() {
            return None;
        }
        Some(format!("{tail} because {head}."))
    }
}

impl Paraphraser for RuleParaphraser {
    fn candidates(&self, sentence: &str) -> Vec<String> {
        let mut raw = vec![self.apply_all(sentence, 0), self.apply_all(sentence, 1)];
        for (pattern, replacements) in &self.rules {
            if let Some(single) =
                replace_phrase(&sentence.to_ascii_lowercase(), pattern, replacements[0])
            {
                raw.push(single);
            }
        }
        if let Some(reordered) = Self::reorder_clause(sentence) {
            raw.push(self.apply_all(&reordered, 0));
            raw.push(reordered);
        }
        let mut out: Vec<String> = Vec::new();
        for candidate in raw {
            let cased = fix_case(&candidate);
            if cased != sentence && !out.contains(&cased) {
                out.push(cased);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate::{generate_corpus, TemplateBank};
    use crate::game::map::GameMap;
    use crate::game::state::builtin_initializations;

    struct Scripted(Vec<String>);
    impl Paraphraser for Scripted {
        fn candidates(&self, _sentence: &str) -> Vec<String> {
            self.0.clone()
        }
    }

    fn sample_example() -> CorpusExample {
        let map = GameMap::canonical();
        generate_corpus(
            map,
            builtin_initializations(),
            TemplateBank::builtin(),
            1,
            4,
        )
        .unwrap()
        .remove(0)
    }

    #[test]
    fn sentence_splitting_keeps_punctuation_and_guards_abbreviations() {
        let text = "I must have troops on Purple. I avoid Red! Should I spread out? \
                    This works, e.g. on tight maps.";
        let sentences = split_sentences(text);
        assert_eq!(
            sentences,
            vec![
                "I must have troops on Purple.",
                "I avoid Red!",
                "Should I spread out?",
                "This works, e.g. on tight maps.",
            ]
        );
    }

    #[test]
    fn keyword_swaps_are_rejected() {
        let params = FilterParams::default();
        assert!(!candidate_passes(
            "I must have troops on Purple.",
            "I really should maintain my forces on Blue somehow.",
            &params
        ));
        // digits are protected too
        assert!(!candidate_passes(
            "I want a stack of at least 7 troops somewhere safe.",
            "I want a stack of at least 9 troops somewhere safe.",
            &params
        ));
    }

    #[test]
    fn near_identical_candidates_are_rejected() {
        let params = FilterParams::default();
        let original = "I must have troops on Purple.";
        assert!(!candidate_passes(original, original, &params));
        assert!(!candidate_passes(
            original,
            "I must have troops on Purple!",
            &params
        ));
        assert!(candidate_passes(
            original,
            "I need to keep forces on Purple.",
            &params
        ));
    }

    #[test]
    fn all_rejected_keeps_original_text() {
        let example = sample_example();
        let paraphraser = Scripted(vec!["Garbage on Blue and Red and Green.".to_string()]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let augmented = augment(&example, &paraphraser, &FilterParams::default(), &mut rng);
        assert_eq!(augmented.text, example.text);
        assert_eq!(augmented.source, Source::Augmented);
    }

    #[test]
    fn labels_survive_augmentation_bit_for_bit() {
        let example = sample_example();
        let paraphraser = RuleParaphraser::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let augmented = augment(&example, &paraphraser, &FilterParams::default(), &mut rng);
        assert_eq!(augmented.map_id, example.map_id);
        assert_eq!(augmented.selections, example.selections);
        assert_eq!(augmented.intent, example.intent);
        assert_eq!(augmented.source, Source::Augmented);
    }

    #[test]
    fn continent_mentions_are_preserved() {
        let params = FilterParams::default();
        let paraphraser = RuleParaphraser::default();
        let examples = {
            let map = GameMap::canonical();
            generate_corpus(
                map,
                builtin_initializations(),
                TemplateBank::builtin(),
                20,
                8,
            )
            .unwrap()
        };
        let augmented = augment_corpus(&examples, &paraphraser, &params, 21);
        let mut changed = 0;
        for (before, after) in examples.iter().zip(&augmented) {
            assert_eq!(
                protected_multiset(&before.text, &params),
                protected_multiset(&after.text, &params)
            );
            if before.text != after.text {
                changed += 1;
            }
        }
        // the rule provider should actually rewrite most examples
        assert!(changed >= 15, "only {changed}/20 examples were rewritten");
    }

    #[test]
    fn rule_paraphraser_rewrites_with_distance() {
        let paraphraser = RuleParaphraser::default();
        let sentence = "I must have troops on Purple.";
        let candidates = paraphraser.candidates(sentence);
        assert!(!candidates.is_empty());
        let params = FilterParams::default();
        assert!(
            candidates
                .iter()
                .any(|c| candidate_passes(sentence, c, &params)),
            "no candidate passes the filter: {candidates:?}"
        );
    }

    #[test]
    fn clause_reordering() {
        let reordered = RuleParaphraser::reorder_clause(
            "Because it anchors my position, I must hold every border of Blue.",
        )
        .unwrap();
        assert_eq!(
            reordered,
            "i must hold every border of blue because it anchors my position."
        );
    }
}
