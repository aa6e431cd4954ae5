//! Train the extraction model on synthetic strategies and read a held-out
//! description back into goals and constraints.
//!
//! ```bash
//! cargo run --release -p stratagem --example train_extractor
//! ```

use stratagem::{
    builtin_initializations, evaluate_examples, generate_corpus, train, GameMap, Task,
    TemplateBank, TrainConfig,
};

fn main() {
    let map = GameMap::canonical();
    println!("generating 1,200 synthetic examples...");
    let all = generate_corpus(
        map,
        builtin_initializations(),
        TemplateBank::builtin(),
        1200,
        77,
    )
    .expect("generation succeeds");
    let (train_set, held_out) = all.split_at(1000);

    let config = TrainConfig {
        task: Task::Both,
        seed: 4,
        ..TrainConfig::default()
    };
    println!("training goal and constraint heads (defaults: 25 and 10 epochs)...");
    let (model, log) = train(train_set, map, &config, None).expect("training succeeds");
    println!(
        "goal loss {:.4} -> {:.4}; constraint loss {:.4} -> {:.4}",
        log.goal_epoch_losses.first().unwrap(),
        log.goal_epoch_losses.last().unwrap(),
        log.constraint_epoch_losses.first().unwrap(),
        log.constraint_epoch_losses.last().unwrap()
    );

    let scores = evaluate_examples(&model, map, held_out).expect("evaluation succeeds");
    let n = scores.len() as f64;
    let goals_mean = scores.iter().map(|(g, _)| *g as f64).sum::<f64>() / n;
    let constraints_mean = scores.iter().map(|(_, c)| *c as f64).sum::<f64>() / n;
    println!("\nheld-out ({} examples):", scores.len());
    println!("  Goals (Total = 6): {goals_mean:.2}");
    println!("  Constraints (Total = 8): {constraints_mean:.2}");

    let sample = &held_out[0];
    println!("\nsample description:\n  {}", sample.text);
    let predicted = model
        .predict(map, &sample.text, &sample.selections)
        .expect("prediction succeeds");
    println!("\npredicted constraints:");
    for constraint in predicted.non_null_constraints() {
        println!("  {constraint}");
    }
    println!("gold constraints:");
    for constraint in sample.intent.non_null_constraints() {
        println!("  {constraint}");
    }
}
