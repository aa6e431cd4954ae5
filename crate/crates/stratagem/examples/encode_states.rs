//! Encode the reference scenario with all six state encoders.
//!
//! ```bash
//! cargo run -p stratagem --example encode_states
//! ```

use std::collections::BTreeMap;

use stratagem::{builtin_initializations, encode, load_initialization, EncoderId, GameMap};

fn main() {
    let map = GameMap::canonical();
    let init = &builtin_initializations()[0];
    let base = load_initialization(init, map).unwrap();
    // the documented tutorial deployment: everything into Purple
    let selections: BTreeMap<String, u32> = [
        ("Purple_E".to_string(), 7),
        ("Purple_C".to_string(), 5),
        ("Purple_D".to_string(), 2),
    ]
    .into_iter()
    .collect();
    let state = base.with_ego_selections(map, &selections).unwrap();

    for encoder in EncoderId::ALL {
        let encoded = encode(map, &state, encoder);
        let head: Vec<String> = encoded
            .values
            .iter()
            .take(8)
            .map(|v| format!("{v:.3}"))
            .collect();
        let bounded = encoded.values.iter().all(|v| (0.0..=1.0).contains(v));
        println!(
            "{:<6} {} features, normalized: {:<5} first 8: [{} ...]",
            encoder.name(),
            encoded.values.len(),
            if encoder.is_normalized() {
                format!("{bounded}")
            } else {
                "n/a".to_string()
            },
            head.join(", ")
        );
    }

    // the same vectors stream from the CLI:
    //   stratagem encode --init-id 1 --encoder f298n
}
