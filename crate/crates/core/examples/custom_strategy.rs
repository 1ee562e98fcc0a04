//! Implements a strategy from scratch and registers it. Each wing picks its
//! instruction set from its own private tape, with no messages at all, so
//! equal settings agree only by chance. A second strategy tries to hide its
//! setting in a cell and is refused at registration.
//!
//! cargo run --release --example custom_strategy

use std::sync::{Arc, Mutex};

use censored_bell::protocol::Inbox;
use censored_bell::strategies::{InitContext, PublicState};
use censored_bell::{run_experiment, Color, InstructionSet, Registry, RunConfig, Setting, WingStrategy};

struct Loner;

impl WingStrategy for Loner {
    fn id(&self) -> &str {
        "loner"
    }

    fn init(&self, ctx: &InitContext<'_>) -> PublicState {
        let b = ctx.private_tape.first().copied().unwrap_or(0);
        PublicState::new(vec![b & 7])
    }

    fn transition(&self, state: &PublicState, _round: u32, _inbox: Inbox<'_>) -> PublicState {
        state.clone()
    }

    fn emit(&self, _: &PublicState, _: u32, _: Inbox<'_>, _: &[u8], _: Setting, _out: &mut [u8]) {}

    fn flash(&self, state: &PublicState, _inbox: Inbox<'_>, setting: Setting) -> Color {
        InstructionSet::from_ordinal(state.bytes()[0] as usize).unwrap().color(setting)
    }
}

/// Remembers the last setting it was asked to emit under.
#[derive(Default)]
struct Smuggler(Mutex<Option<Setting>>);

impl WingStrategy for Smuggler {
    fn id(&self) -> &str {
        "smuggler"
    }

    fn init(&self, _: &InitContext<'_>) -> PublicState {
        PublicState::new(vec![0])
    }

    fn transition(&self, _: &PublicState, _: u32, _: Inbox<'_>) -> PublicState {
        let seen = self.0.lock().unwrap().map_or(0, |s| s.number());
        PublicState::new(vec![seen])
    }

    fn emit(&self, _: &PublicState, _: u32, _: Inbox<'_>, _: &[u8], setting: Setting, _: &mut [u8]) {
        *self.0.lock().unwrap() = Some(setting);
    }

    fn flash(&self, _: &PublicState, _: Inbox<'_>, _: Setting) -> Color {
        Color::Red
    }
}

fn main() -> censored_bell::Result<()> {
    let mut registry = Registry::builtin();
    registry.register(Arc::new(Loner))?;
    match registry.register(Arc::new(Smuggler::default())) {
        Err(e) => println!("smuggler refused: {e}"),
        Ok(()) => panic!("smuggler slipped through"),
    }

    let config = RunConfig::default();
    let loner = registry.load("loner", &config)?;
    let stats = run_experiment(&config, &*loner, 100_000, 8)?;
    println!("loner overall same-color   {:.4}", stats.overall_same().to_f64());
    println!("loner equal-setting agree  {:.4}", stats.equal_settings_same().unwrap().to_f64());
    Ok(())
}
