//! Runs the negotiation strategy: the left wing draws an instruction set from
//! the shared tape and sends it; both wings then answer from that set.
//!
//! cargo run --release --example negotiation_experiment -- [n] [seed]

use censored_bell::analysis::{hoeffding_radius, DEFAULT_FAILURE_PROBABILITY};
use censored_bell::strategies::negotiation_strategy;
use censored_bell::{check_feature_i, run_experiment_streaming, RunConfig, SettingPair};

fn main() -> censored_bell::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("numeric argument"));
    let n = args.next().unwrap_or(100_000);
    let seed = args.next().unwrap_or(1);

    let mut records = Vec::new();
    let stats = run_experiment_streaming(&RunConfig::default(), &*negotiation_strategy(), n, seed, |r| {
        if r.run_index < 3 {
            println!("{}", r.to_json_line());
        }
        if r.settings.is_equal() {
            records.push(r.clone());
        }
        Ok(())
    })?;

    println!("\nsame-color fraction per setting pair:");
    for pair in SettingPair::all() {
        let f = stats.per_pair_same(pair).map(|f| f.to_f64()).unwrap_or(f64::NAN);
        println!("  {pair}  {f:.4}  ({} runs)", stats.count(pair).total());
    }
    let radius = hoeffding_radius(n, DEFAULT_FAILURE_PROBABILITY);
    println!("overall  {:.4} ± {radius:.4}", stats.overall_same().to_f64());
    println!("equal settings always agree: {}", check_feature_i(&records).holds);
    Ok(())
}
