//! Samples the singlet-state joint distribution and compares it with the
//! exact probabilities.
//!
//! cargo run --release --example quantum_oracle -- [n]

use censored_bell::analysis::{check_feature_ii, Tolerance};
use censored_bell::{quantum_experiment, singlet_joint, SettingPair};

fn main() -> censored_bell::Result<()> {
    let n = std::env::args().nth(1).map_or(100_000, |a| a.parse().expect("numeric n"));
    let joint = singlet_joint();
    let stats = quantum_experiment(n, 7)?;

    println!("pair  exact   observed");
    for pair in SettingPair::all() {
        let observed = stats.per_pair_same(pair).map_or(f64::NAN, |f| f.to_f64());
        println!("{pair}  {:<6}  {observed:.4}", joint.p_same(pair));
    }
    println!("overall exact {}  observed {:.4}", joint.overall_same(), stats.overall_same().to_f64());

    let check = check_feature_ii(&stats, Tolerance::Hoeffding { failure_probability: 1e-6 })?;
    println!("within ±{:.4} of 1/2: {}", check.tolerance, check.holds);
    Ok(())
}
