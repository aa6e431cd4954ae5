//! Generate a synthetic strategy corpus and paraphrase-augment it, showing
//! one record before and after the rewrite.
//!
//! ```bash
//! cargo run -p stratagem --example build_corpus
//! ```

use stratagem::{
    augment_corpus, builtin_initializations, generate_corpus, FilterParams, GameMap,
    RuleParaphraser, TemplateBank,
};

fn main() {
    let map = GameMap::canonical();
    let corpus = generate_corpus(
        map,
        builtin_initializations(),
        TemplateBank::builtin(),
        50,
        9,
    )
    .expect("generation succeeds");
    let augmented = augment_corpus(
        &corpus,
        &RuleParaphraser::default(),
        &FilterParams::default(),
        10,
    );

    let example = &corpus[0];
    println!(
        "map {}  selections {:?}",
        example.map_id, example.selections
    );
    println!("constraints:");
    for constraint in example.intent.non_null_constraints() {
        println!("  {constraint}");
    }
    println!("\noriginal text:\n  {}", example.text);
    println!("\naugmented text:\n  {}", augmented[0].text);

    let rewritten = corpus
        .iter()
        .zip(&augmented)
        .filter(|(a, b)| a.text != b.text)
        .count();
    println!(
        "\n{} of {} texts rewritten; labels and selections untouched by construction",
        rewritten,
        corpus.len()
    );
    // the CLI equivalents:
    //   stratagem gen-corpus --n 4000 --seed 7 --out synth.jsonl
    //   stratagem augment --corpus synth.jsonl --seed 8 --out synth_aug.jsonl
    //   stratagem check --example-file synth_aug.jsonl
}
