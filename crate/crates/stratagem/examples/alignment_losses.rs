//! The set-prediction loss layer: minimum-cost assignment, order-agnostic
//! cross entropy against ordinary CE, and the logistic temperature blend.
//!
//! ```bash
//! cargo run -p stratagem --example alignment_losses
//! ```

use stratagem::{
    constraint_loss, cross_entropy, hungarian, oaxe_loss, AnnealSchedule, SlotDistributions,
};

fn main() {
    let cost = vec![
        vec![4.0, 1.0, 3.0],
        vec![2.0, 0.0, 5.0],
        vec![3.0, 2.0, 2.0],
    ];
    let alignment = hungarian(&cost).unwrap();
    println!(
        "assignment on a 3x3 cost matrix: {:?} with total cost {}",
        alignment.permutation, alignment.cost
    );

    // Slots predicting the right labels in the wrong order: OaXE forgives
    // the permutation, plain CE does not.
    let sharp = 8.0;
    let logits = vec![
        vec![0.0, sharp, 0.0, 0.0], // slot 0 is sure of label B
        vec![sharp, 0.0, 0.0, 0.0], // slot 1 is sure of label A
        vec![0.0, 0.0, 0.0, sharp], // slot 2 is sure of the null label
    ];
    let dists = SlotDistributions::from_logits(&logits);
    let targets = [0usize, 1, 3]; // gold: A, B, null
    let (oaxe, alignment) = oaxe_loss(&dists, &targets);
    println!("\ntargets (A, B, null) vs slots predicting (B, A, null):");
    println!(
        "  default-order CE : {:.4}",
        cross_entropy(&dists, &targets)
    );
    println!(
        "  OaXE             : {oaxe:.4}  (alignment {:?})",
        alignment.permutation
    );

    let schedule = AnnealSchedule::new(10, 10.0, 0.5);
    println!("\ntemperature schedule over 10 steps (1 -> 0, logistic):");
    let curve: Vec<String> = (0..=10)
        .map(|step| format!("{:.3}", schedule.temperature(step)))
        .collect();
    println!("  [{}]", curve.join(", "));
    for step in [0, 5, 10] {
        let t = schedule.temperature(step);
        println!(
            "  step {step:>2}: blended loss {:.4}",
            constraint_loss(&dists, &targets, t)
        );
    }
}
