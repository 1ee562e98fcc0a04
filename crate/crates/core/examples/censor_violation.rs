//! The cheat strategy sends its setting in round one. With the censor off it
//! reproduces the quantum statistics; with it on, the first run is aborted.
//!
//! cargo run --release --example censor_violation

use censored_bell::strategies::cheat_strategy;
use censored_bell::{run_experiment, Error, RunConfig};

fn main() {
    let strategy = cheat_strategy();
    let off = RunConfig::default().with_censor(false);
    let stats = run_experiment(&off, &*strategy, 100_000, 5).expect("uncensored run");
    println!("censor off: same-color fraction {:.4}", stats.overall_same().to_f64());
    println!("            equal settings      {}", stats.equal_settings_same().unwrap());

    match run_experiment(&RunConfig::default(), &*strategy, 100_000, 5) {
        Err(Error::ExperimentAborted { run_index, violation, partial }) => {
            println!("censor on:  aborted at run {run_index} after {} clean runs", partial.n_runs());
            println!("            {violation}");
            println!("{}", violation.to_json());
        }
        other => panic!("expected an abort, got {other:?}"),
    }
}
