//! Strategy corpora: one JSON record per line pairing a map, a natural
//! language strategy description, troop selections, and the gold intent.

pub mod augment;
pub mod generate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::map::GameMap;
use crate::game::state::DRAFT_TROOPS;
use crate::intent::IntentSpec;

/// Minimum description length demanded of human-authored records.
pub const HUMAN_MIN_CHARS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Synthetic,
    Augmented,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Human => f.write_str("human"),
            Source::Synthetic => f.write_str("synthetic"),
            Source::Augmented => f.write_str("augmented"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: validation error: {message}")]
    Validation { line: usize, message: String },
    #[error("infeasible intent: {0}")]
    InfeasibleIntent(String),
    #[error("gave up generating example {index} after {attempts} attempts")]
    RetryBudgetExceeded { index: usize, attempts: usize },
    #[error("template bank: {0}")]
    Template(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One corpus record. Serializes with the exact field names `map_id`,
/// `text`, `selections`, `goals`, `constraints`, `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusExample {
    pub map_id: u8,
    pub text: String,
    pub selections: BTreeMap<String, u32>,
    #[serde(flatten)]
    pub intent: IntentSpec,
    pub source: Source,
}

impl CorpusExample {
    /// Record-local invariants: selections name real territories and total
    /// the draft budget, the text is non-empty (with the human length
    /// floor). Agreement with a concrete map initialization is checked
    /// separately by the `check` pipeline.
    pub fn validate(&self, map: &GameMap) -> Result<(), String> {
        let mut total = 0;
        for (name, &count) in &self.selections {
            map.territory(name).map_err(|e| e.to_string())?;
            if count == 0 {
                return Err(format!("selection {name} places zero troops"));
            }
            total += count;
        }
        if total != DRAFT_TROOPS {
            return Err(format!(
                "selections sum to {total}, expected {DRAFT_TROOPS}"
            ));
        }
        if self.text.trim().is_empty() {
            return Err("text is empty".to_string());
        }
        if self.source == Source::Human && self.text.chars().count() < HUMAN_MIN_CHARS {
            return Err(format!(
                "human-sourced text has {} characters, needs at least {HUMAN_MIN_CHARS}",
                self.text.chars().count()
            ));
        }
        Ok(())
    }
}

/// Serializes a corpus to its line-oriented file form.
pub fn corpus_to_string(examples: &[CorpusExample]) -> String {
    let mut out = String::new();
    for example in examples {
        out.push_str(&serde_json::to_string(example).expect("corpus example serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_corpus(text: &str, map: &GameMap) -> Result<Vec<CorpusExample>, CorpusError> {
    let mut examples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let example: CorpusExample =
            serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                line: line_number,
                message: e.to_string(),
            })?;
        example
            .validate(map)
            .map_err(|message| CorpusError::Validation {
                line: line_number,
                message,
            })?;
        examples.push(example);
    }
    Ok(examples)
}

pub fn read_corpus(
    path: impl AsRef<Path>,
    map: &GameMap,
) -> Result<Vec<CorpusExample>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?, map)
}

pub fn write_corpus(examples: &[CorpusExample], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    std::fs::write(path, corpus_to_string(examples))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::map::Continent;
    use crate::intent::{Constraint, CONSTRAINT_SLOTS};

    fn example() -> CorpusExample {
        let mut constraints = [None; CONSTRAINT_SLOTS];
        constraints[0] = Some(Constraint::HasTroopsOn(Continent::Purple));
        constraints[1] = Some(Constraint::CountryTroopsAtLeast(7));
        CorpusExample {
            map_id: 1,
            text: "I must have troops on Purple. I must place at least 7 troops to \
                   effectively defend a country."
                .to_string(),
            selections: [
                ("Purple_E".to_string(), 7),
                ("Purple_C".to_string(), 5),
                ("Purple_D".to_string(), 2),
            ]
            .into_iter()
            .collect(),
            intent: IntentSpec::new([0, 10, -10, 5, 0, 0], constraints).unwrap(),
            source: Source::Synthetic,
        }
    }

    #[test]
    fn field_names_are_exact() {
        let json = serde_json::to_string(&example()).unwrap();
        // the six fields appear with their exact names, in declaration order
        let positions: Vec<usize> = [
            "map_id",
            "text",
            "selections",
            "goals",
            "constraints",
            "source",
        ]
        .iter()
        .map(|field| {
            json.find(&format!("\"{field}\":"))
                .unwrap_or_else(|| panic!("field `{field}` missing from {json}"))
        })
        .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");

        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let object = value.as_object().unwrap();
        assert_eq!(object.len(), 6);
        assert_eq!(object["source"], "synthetic");
        assert_eq!(object["constraints"].as_array().unwrap().len(), 8);
        assert_eq!(object["goals"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn round_trip_preserves_examples() {
        let map = GameMap::canonical();
        let examples = vec![example(), example()];
        let text = corpus_to_string(&examples);
        let back = parse_corpus(&text, map).unwrap();
        assert_eq!(examples, back);
    }

    #[test]
    fn short_selection_sum_is_a_validation_error_with_line() {
        let map = GameMap::canonical();
        let mut bad = example();
        *bad.selections.get_mut("Purple_E").unwrap() = 6; // 13 total
        let text = corpus_to_string(&[example(), bad]);
        match parse_corpus(&text, map) {
            Err(CorpusError::Validation { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("13"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_empty_corpus() {
        let map = GameMap::canonical();
        assert!(parse_corpus("", map).unwrap().is_empty());
        assert!(parse_corpus("\n\n", map).unwrap().is_empty());
    }

    #[test]
    fn human_records_need_long_text() {
        let map = GameMap::canonical();
        let mut short = example();
        short.source = Source::Human;
        let text = corpus_to_string(&[short]);
        assert!(matches!(
            parse_corpus(&text, map),
            Err(CorpusError::Validation { line: 1, .. })
        ));
    }
}
