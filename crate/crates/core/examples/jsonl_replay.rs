//! Writes runs as JSON lines, reads them back and replays each one from its
//! seed, then shows that a tampered record is caught.
//!
//! cargo run --example jsonl_replay

use censored_bell::protocol::replay;
use censored_bell::strategies::negotiation_strategy;
use censored_bell::{run_experiment_streaming, RunConfig, RunRecord};

fn main() -> censored_bell::Result<()> {
    let config = RunConfig::default();
    let strategy = negotiation_strategy();
    let mut log = String::new();
    run_experiment_streaming(&config, &*strategy, 5, 2024, |r| {
        log.push_str(&r.to_json_line());
        log.push('\n');
        Ok(())
    })?;
    print!("{log}");

    let records: Vec<RunRecord> = log.lines().map(RunRecord::from_json_line).collect::<Result<_, _>>()?;
    for r in &records {
        replay(&config, &*strategy, r)?;
    }
    println!("replayed {} records", records.len());

    let mut forged = records[0].clone();
    forged.colors.0 = forged.colors.0.flip();
    forged.colors.1 = forged.colors.1.flip();
    match replay(&config, &*strategy, &forged) {
        Err(e) => println!("tampered record rejected: {e}"),
        Ok(_) => panic!("tampering went unnoticed"),
    }
    Ok(())
}
