//! Vets a single frame by hand, then checks that whole runs produce the same
//! transcript under every alternative setting pair.
//!
//! cargo run --example counterfactual_replay

use censored_bell::censor::verify_strategy;
use censored_bell::protocol::{Inbox, RunTapes, WingView};
use censored_bell::strategies::InitContext;
use censored_bell::{vet_emission, whole_run_counterfactual, Registry, RunConfig, Setting, SettingPair, Wing};

fn main() -> censored_bell::Result<()> {
    let registry = Registry::builtin();
    let config = RunConfig::default();

    for id in ["negotiation", "cheat"] {
        let strategy = registry.get(id)?;
        let tapes = RunTapes::derive(&config, 42);
        let state = strategy.init(&InitContext {
            wing: Wing::Left,
            run_index: 0,
            shared_tape: &tapes.shared,
            private_tape: tapes.private(Wing::Left),
        });
        let view = WingView {
            wing: Wing::Left,
            run_index: 0,
            shared_tape: &tapes.shared,
            private_tape: tapes.private(Wing::Left),
            state: &state,
            inbox: Inbox::EMPTY,
            setting: Setting::Two,
        };
        let verdict = vet_emission(&*strategy, &view, 1, tapes.slice(Wing::Left, 1), config.payload_bytes);
        match verdict.violation {
            None => println!("{id:<12} round 1 frame passes"),
            Some(v) => println!("{id:<12} {v}"),
        }
    }

    let off = config.clone().with_censor(false);
    for strategy in registry.iter() {
        let pair = SettingPair::new(Setting::One, Setting::Three);
        let check = whole_run_counterfactual(&off, &**strategy, pair, 9, 0)?;
        let bulk = if strategy.requires_censor_off() { None } else { verify_strategy(&config, &**strategy, 2_000, 3)? };
        println!(
            "{:<16} whole-run replay {:<6} 2000-run sweep {}",
            strategy.id(),
            if check.holds() { "holds" } else { "breaks" },
            if strategy.requires_censor_off() { "skipped" } else if bulk.is_none() { "clean" } else { "FAILED" },
        );
    }
    Ok(())
}
