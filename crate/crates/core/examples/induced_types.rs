//! Replays censored runs and reads off the instruction set each wing was
//! committed to once its transcript was fixed.
//!
//! cargo run --release --example induced_types

use std::collections::BTreeMap;

use censored_bell::strategies::negotiation_strategy;
use censored_bell::{induced_instruction_set, run_experiment_streaming, same_color_fraction, RunConfig};

fn main() -> censored_bell::Result<()> {
    let config = RunConfig::default();
    let strategy = negotiation_strategy();
    let mut tally = BTreeMap::new();
    let mut mismatched = 0u64;
    run_experiment_streaming(&config, &*strategy, 20_000, 3, |record| {
        let (left, right) = induced_instruction_set(&config, &*strategy, record)?;
        if left != right {
            mismatched += 1;
        }
        *tally.entry(left.to_string()).or_insert(0u64) += 1;
        Ok(())
    })?;
    for (iset, count) in &tally {
        let exact = same_color_fraction(iset.parse().unwrap());
        println!("{iset}  {count:>5} runs  same-color fraction {exact}");
    }
    println!("runs where the wings were committed to different sets: {mismatched}");
    Ok(())
}
