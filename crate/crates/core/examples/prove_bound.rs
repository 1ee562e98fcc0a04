//! Enumerates the eight instruction sets and prints the exact same-color
//! fraction of each, plus the minimum over all of them.
//!
//! cargo run --example prove_bound

use censored_bell::{all_instruction_sets, prove_bound, same_color_fraction};

fn main() {
    for iset in all_instruction_sets() {
        println!("{iset}  {}", same_color_fraction(iset));
    }
    let report = prove_bound();
    println!();
    print!("{}", report.to_text());
    assert!(report.holds());
}
