//! Enforcement of the one rule on inter-wing traffic: a frame may not depend
//! on the sender's setting.
//!
//! Each emission is recomputed under all three settings with every other
//! input held byte-identical. Public-state transitions never receive the
//! setting, so if every frame passes, the whole transcript is identical under
//! any counterfactual setting of either wing (induction over rounds).

use std::fmt;

use serde::Serialize;

use crate::domain::{Setting, SettingPair, Wing};
use crate::error::{Error, Result};
use crate::protocol::{self, Inbox, Message, RunConfig, RunTapes, Transcript, WingView};
use crate::strategies::{InitContext, WingStrategy};

/// Two settings of the same wing that produced different frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensorViolation {
    pub strategy_id: String,
    pub wing: Wing,
    pub round: u32,
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub payload_a: Vec<u8>,
    pub payload_b: Vec<u8>,
}

impl CensorViolation {
    pub fn report(&self) -> ViolationReport {
        ViolationReport {
            kind: "censor_violation",
            strategy: self.strategy_id.clone(),
            wing: self.wing.to_string(),
            round: self.round,
            setting_a: self.setting_a.number(),
            setting_b: self.setting_b.number(),
            payload_a: hex::encode(&self.payload_a),
            payload_b: hex::encode(&self.payload_b),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.report()).expect("report serializes")
    }
}

impl fmt::Display for CensorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} wing of {:?} leaks its setting in round {}: setting {} sends {}, setting {} sends {}",
            self.wing,
            self.strategy_id,
            self.round,
            self.setting_a,
            hex::encode(&self.payload_a),
            self.setting_b,
            hex::encode(&self.payload_b),
        )
    }
}

/// Serialized form of a [`CensorViolation`], payloads hex-encoded.
#[derive(Clone, Debug, Serialize)]
pub struct ViolationReport {
    pub kind: &'static str,
    pub strategy: String,
    pub wing: String,
    pub round: u32,
    pub setting_a: u8,
    pub setting_b: u8,
    pub payload_a: String,
    pub payload_b: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensorVerdict {
    pub ok: bool,
    /// The frame to deliver, present iff `ok`.
    pub delivered: Option<Vec<u8>>,
    pub violation: Option<CensorViolation>,
}

impl CensorVerdict {
    pub fn into_result(self) -> Result<Vec<u8>, CensorViolation> {
        match (self.delivered, self.violation) {
            (Some(payload), None) => Ok(payload),
            (_, Some(v)) => Err(v),
            (None, None) => unreachable!("verdict carries a frame or a violation"),
        }
    }
}

/// Calls the strategy's message function into a fresh zeroed frame of
/// `payload_bytes`.
pub fn emit_frame(
    strategy: &dyn WingStrategy,
    view: &WingView<'_>,
    round: u32,
    randomness: &[u8],
    setting: Setting,
    payload_bytes: usize,
) -> Vec<u8> {
    let mut frame = vec![0u8; payload_bytes];
    strategy.emit(view.state, round, view.inbox, randomness, setting, &mut frame);
    frame
}

/// Counterfactual check of one emission. Never alters the frame.
pub fn vet_emission(
    strategy: &dyn WingStrategy,
    view: &WingView<'_>,
    round: u32,
    randomness: &[u8],
    payload_bytes: usize,
) -> CensorVerdict {
    let frames = Setting::ALL.map(|s| emit_frame(strategy, view, round, randomness, s, payload_bytes));
    if let Some(i) = (1..3).find(|&i| frames[i] != frames[0]) {
        let [a, b, c] = frames;
        return CensorVerdict {
            ok: false,
            delivered: None,
            violation: Some(CensorViolation {
                strategy_id: strategy.id().to_string(),
                wing: view.wing,
                round,
                setting_a: Setting::One,
                setting_b: Setting::ALL[i],
                payload_a: a,
                payload_b: if i == 1 { b } else { c },
            }),
        };
    }
    let [first, ..] = frames;
    // all three agree, so this is also the actual setting's frame
    CensorVerdict { ok: true, delivered: Some(first), violation: None }
}

/// Probe runs used by [`state_transition_guard`].
const PROBE_SEEDS: [u64; 3] = [1, 0x5eed, u64::MAX];

/// Confirms that the strategy's state transitions cannot observe the setting
/// and that every slot is deterministic.
///
/// The trait already withholds the setting from `init` and `transition`; this
/// probe additionally catches strategies that smuggle it through interior
/// state of the strategy object (e.g. stashing it during `emit` and reading
/// it back in `transition`). Returns `Err` with the reason on failure.
pub fn probe_strategy(strategy: &dyn WingStrategy) -> Result<(), String> {
    let config = RunConfig::default().with_censor(false);
    strategy.check_config(&config).map_err(|e| e.to_string())?;
    for seed in PROBE_SEEDS {
        for settings in SettingPair::all() {
            probe_run(strategy, &config, settings, seed)?;
        }
    }
    Ok(())
}

pub fn state_transition_guard(strategy: &dyn WingStrategy) -> bool {
    probe_strategy(strategy).is_ok()
}

fn probe_run(strategy: &dyn WingStrategy, config: &RunConfig, settings: SettingPair, seed: u64) -> Result<(), String> {
    let tapes = RunTapes::derive(config, seed);
    let run_index = seed % 97;
    let ctx = |wing| InitContext { wing, run_index, shared_tape: &tapes.shared, private_tape: tapes.private(wing) };
    let mut states = [Wing::Left, Wing::Right].map(|w| strategy.init(&ctx(w)));
    for wing in [Wing::Left, Wing::Right] {
        if strategy.init(&ctx(wing)) != states[protocol::wing_slot(wing)] {
            return Err(format!("init is not deterministic for the {wing} wing"));
        }
    }
    let mut received: [Vec<Message>; 2] = Default::default();
    let mut sent: [Vec<Message>; 2] = Default::default();

    for round in 1..=config.rounds {
        let mut frames = Vec::new();
        for wing in [Wing::Left, Wing::Right] {
            let slot = protocol::wing_slot(wing);
            let view = WingView {
                wing,
                run_index,
                shared_tape: &tapes.shared,
                private_tape: tapes.private(wing),
                state: &states[slot],
                inbox: Inbox { received: &received[slot], sent: &sent[slot] },
                setting: settings.get(wing),
            };
            let slice = tapes.slice(wing, round);
            let once = emit_frame(strategy, &view, round, slice, view.setting, config.payload_bytes);
            let twice = emit_frame(strategy, &view, round, slice, view.setting, config.payload_bytes);
            if once != twice {
                return Err(format!("emit is not deterministic ({wing} wing, round {round})"));
            }
            frames.push(Message { sender: wing, round, payload: once });
        }
        for frame in frames {
            let from = protocol::wing_slot(frame.sender);
            received[1 - from].push(frame.clone());
            sent[from].push(frame);
        }
        for wing in [Wing::Left, Wing::Right] {
            let slot = protocol::wing_slot(wing);
            let inbox = Inbox { received: &received[slot], sent: &sent[slot] };
            let view = WingView {
                wing,
                run_index,
                shared_tape: &tapes.shared,
                private_tape: tapes.private(wing),
                state: &states[slot],
                inbox,
                setting: settings.get(wing),
            };
            // Prime the strategy with each setting, then transition with
            // identical inputs; any difference means the setting got through.
            let mut next = Vec::with_capacity(6);
            for s in Setting::ALL {
                emit_frame(strategy, &view, round, tapes.slice(wing, round), s, config.payload_bytes);
                next.push(strategy.transition(&states[slot], round, inbox));
                strategy.flash(&states[slot], inbox, s);
                next.push(strategy.transition(&states[slot], round, inbox));
            }
            if next.windows(2).any(|w| w[0] != w[1]) {
                return Err(format!(
                    "public state of the {wing} wing depends on its setting (round {round})"
                ));
            }
            states[slot] = next.swap_remove(0);
        }
    }
    Ok(())
}

/// Outcome of replaying a whole run under counterfactual settings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoninterferenceCheck {
    pub reference: Transcript,
    /// Counterfactual runs executed (up to 4: two alternatives per wing).
    pub runs_compared: usize,
    /// First counterfactual whose transcript differed, if any.
    pub first_difference: Option<(Wing, Setting)>,
}

impl NoninterferenceCheck {
    pub fn holds(&self) -> bool {
        self.first_difference.is_none()
    }
}

/// Re-executes the run with each wing's setting replaced by each alternative,
/// the other wing's setting and every tape held fixed, and compares the full
/// transcripts byte for byte.
///
/// The censor is switched off for the counterfactual runs so that a leaking
/// strategy shows up as a transcript difference rather than an abort.
pub fn whole_run_counterfactual(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    settings: SettingPair,
    seed: u64,
    run_index: u64,
) -> Result<NoninterferenceCheck> {
    let open = config.clone().with_censor(false);
    let reference = protocol::simulate(&open, strategy, settings, seed, run_index)?.transcript;
    let mut runs_compared = 0;
    for wing in [Wing::Left, Wing::Right] {
        for s in Setting::ALL {
            if s == settings.get(wing) {
                continue;
            }
            runs_compared += 1;
            let alt = protocol::simulate(&open, strategy, settings.with(wing, s), seed, run_index)?;
            if alt.transcript != reference {
                return Ok(NoninterferenceCheck { reference, runs_compared, first_difference: Some((wing, s)) });
            }
        }
    }
    Ok(NoninterferenceCheck { reference, runs_compared, first_difference: None })
}

/// Runs `n_runs` runs of an experiment and checks each one by counterfactual
/// replay. Stops at the first run whose transcript depends on a setting.
pub fn verify_strategy(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    n_runs: u64,
    master_seed: u64,
) -> Result<Option<(u64, NoninterferenceCheck)>> {
    if n_runs == 0 {
        return Err(Error::Precondition("n_runs must be at least 1".into()));
    }
    for i in 0..n_runs {
        let seed = protocol::split_seed(master_seed, i);
        let check = whole_run_counterfactual(config, strategy, protocol::settings_for_seed(seed), seed, i)?;
        if !check.holds() {
            return Ok(Some((i, check)));
        }
    }
    Ok(None)
}
