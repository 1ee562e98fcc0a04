//! Puts a censored classical strategy next to the quantum oracle and reports
//! whether their confidence intervals separate.
//!
//! cargo run --release --example bell_gap -- [strategy-id] [n]

use censored_bell::analysis::DEFAULT_FAILURE_PROBABILITY;
use censored_bell::{bell_gap_report, quantum_experiment, run_experiment, Registry, RunConfig};

fn main() -> censored_bell::Result<()> {
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or_else(|| "negotiation".into());
    let n = args.next().map_or(100_000, |a| a.parse().expect("numeric n"));

    let config = RunConfig::default();
    let strategy = Registry::builtin().load(&id, &config)?;
    let classical = run_experiment(&config, &*strategy, n, 11)?;
    let quantum = quantum_experiment(n, 11)?;
    let report = bell_gap_report(&classical, &quantum, DEFAULT_FAILURE_PROBABILITY)?;
    print!("{}", report.to_text());
    Ok(())
}
