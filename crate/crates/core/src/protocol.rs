//! The referee: draws settings, hands out tapes, runs the synchronous message
//! rounds between the two wings and collects their flashes.
//!
//! Every run is a pure function of `(config, strategy, settings, seed,
//! run_index)`. All randomness a run uses is cut from ChaCha8 streams keyed by
//! the run seed before either wing sees its setting:
//!
//! | stream | contents                          |
//! |--------|-----------------------------------|
//! | 0      | the setting pair                  |
//! | 1      | shared tape                       |
//! | 2, 3   | left / right private tape         |
//! | 4, 5   | left / right per-round slices     |
//! | 6      | quantum oracle coin flips         |
//!
//! Per-run seeds are derived from the experiment's master seed with
//! SplitMix64 (see [`split_seed`]).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::ExperimentStats;
use crate::censor;
use crate::domain::{Color, RunRecord, Setting, SettingPair, Wing};
use crate::error::{Error, Result};
use crate::strategies::{InitContext, PublicState, WingStrategy};

pub(crate) const STREAM_SETTINGS: u64 = 0;
const STREAM_SHARED: u64 = 1;
const STREAM_PRIVATE: [u64; 2] = [2, 3];
const STREAM_SLICES: [u64; 2] = [4, 5];
pub(crate) const STREAM_QUANTUM: u64 = 6;

/// Name of the per-run seed mixer, recorded in output headers.
pub const SEED_MIXER: &str = "splitmix64(master_seed + (run_index + 1) * 0x9E3779B97F4A7C15)";

/// A single fixed-size frame sent by one wing in one round.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub sender: Wing,
    /// 1-based.
    pub round: u32,
    pub payload: Vec<u8>,
}

/// All messages of one run in send order: per round, left then right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Checks alternation, round numbering and frame size against `config`.
    pub fn check_shape(&self, config: &RunConfig) -> Result<(), String> {
        let expected = 2 * config.rounds as usize;
        if self.messages.len() != expected {
            return Err(format!("{} messages, expected {expected}", self.messages.len()));
        }
        for (i, m) in self.messages.iter().enumerate() {
            let round = (i / 2) as u32 + 1;
            let sender = if i % 2 == 0 { Wing::Left } else { Wing::Right };
            if m.round != round || m.sender != sender {
                return Err(format!(
                    "message {i} is ({}, round {}), expected ({}, round {round})",
                    m.sender, m.round, sender
                ));
            }
            if m.payload.len() != config.payload_bytes {
                return Err(format!(
                    "message {i} carries {} bytes, expected {}",
                    m.payload.len(),
                    config.payload_bytes
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    /// Message rounds per run; each round carries one frame in each direction.
    pub rounds: u32,
    /// Size of every frame.
    pub payload_bytes: usize,
    pub shared_tape_bytes: usize,
    pub private_tape_bytes: usize,
    /// Randomness handed to `emit` per round, per wing.
    pub slice_bytes: usize,
    pub censor_enabled: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rounds: 4,
            payload_bytes: 32,
            shared_tape_bytes: 64,
            private_tape_bytes: 64,
            slice_bytes: 32,
            censor_enabled: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.payload_bytes == 0 {
            return Err(Error::Config("payload_bytes must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_censor(mut self, enabled: bool) -> Self {
        self.censor_enabled = enabled;
        self
    }
}

/// What one wing has heard and said so far in a run.
#[derive(Clone, Copy, Debug)]
pub struct Inbox<'a> {
    pub received: &'a [Message],
    pub sent: &'a [Message],
}

impl<'a> Inbox<'a> {
    pub const EMPTY: Inbox<'static> = Inbox { received: &[], sent: &[] };

    /// The peer's frame from `round`, if already delivered.
    pub fn received_in(&self, round: u32) -> Option<&'a Message> {
        self.received.iter().find(|m| m.round == round)
    }
}

/// Everything a wing holds at the moment it emits a message.
#[derive(Clone, Copy, Debug)]
pub struct WingView<'a> {
    pub wing: Wing,
    pub run_index: u64,
    pub shared_tape: &'a [u8],
    pub private_tape: &'a [u8],
    pub state: &'a PublicState,
    pub inbox: Inbox<'a>,
    pub setting: Setting,
}

/// Tapes and randomness slices for one run, all drawn from the run seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTapes {
    pub shared: Vec<u8>,
    pub private: [Vec<u8>; 2],
    /// `slices[wing][round - 1]`
    pub slices: [Vec<Vec<u8>>; 2],
}

impl RunTapes {
    pub fn derive(config: &RunConfig, seed: u64) -> RunTapes {
        let bytes = |stream: u64, len: usize| {
            let mut rng = stream_rng(seed, stream);
            let mut buf = vec![0u8; len];
            rng.fill_bytes(&mut buf);
            buf
        };
        let slices = |stream: u64| {
            let mut rng = stream_rng(seed, stream);
            (0..config.rounds)
                .map(|_| {
                    let mut buf = vec![0u8; config.slice_bytes];
                    rng.fill_bytes(&mut buf);
                    buf
                })
                .collect()
        };
        RunTapes {
            shared: bytes(STREAM_SHARED, config.shared_tape_bytes),
            private: STREAM_PRIVATE.map(|s| bytes(s, config.private_tape_bytes)),
            slices: STREAM_SLICES.map(slices),
        }
    }

    pub fn private(&self, wing: Wing) -> &[u8] {
        &self.private[wing_slot(wing)]
    }

    pub fn slice(&self, wing: Wing, round: u32) -> &[u8] {
        &self.slices[wing_slot(wing)][round as usize - 1]
    }
}

pub(crate) fn wing_slot(wing: Wing) -> usize {
    match wing {
        Wing::Left => 0,
        Wing::Right => 1,
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run_index` within an experiment seeded with `master_seed`.
pub fn split_seed(master_seed: u64, run_index: u64) -> u64 {
    mix64(master_seed.wrapping_add(run_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Independent uniform settings for the two wings.
pub fn draw_settings<R: Rng + ?Sized>(rng: &mut R) -> SettingPair {
    let left = Setting::ALL[rng.random_range(0..3)];
    let right = Setting::ALL[rng.random_range(0..3)];
    SettingPair::new(left, right)
}

/// The settings the referee assigns to the run with this seed.
pub fn settings_for_seed(seed: u64) -> SettingPair {
    draw_settings(&mut stream_rng(seed, STREAM_SETTINGS))
}

/// Full internal result of a run, including each wing's final state.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub tapes: RunTapes,
    pub transcript: Transcript,
    pub final_states: [PublicState; 2],
    pub received: [Vec<Message>; 2],
    pub sent: [Vec<Message>; 2],
    pub colors: (Color, Color),
}

impl RunTrace {
    pub fn inbox(&self, wing: Wing) -> Inbox<'_> {
        let slot = wing_slot(wing);
        Inbox { received: &self.received[slot], sent: &self.sent[slot] }
    }
}

/// Runs the message rounds and flashes. The round schedule is fixed: in each
/// round left emits, right emits, then both frames are delivered and both
/// wings apply their state transition.
pub fn simulate(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    settings: SettingPair,
    seed: u64,
    run_index: u64,
) -> Result<RunTrace> {
    config.validate()?;
    strategy.check_config(config)?;
    let tapes = RunTapes::derive(config, seed);

    let mut states = [Wing::Left, Wing::Right].map(|wing| {
        strategy.init(&InitContext {
            wing,
            run_index,
            shared_tape: &tapes.shared,
            private_tape: tapes.private(wing),
        })
    });
    let mut received: [Vec<Message>; 2] = Default::default();
    let mut sent: [Vec<Message>; 2] = Default::default();
    let mut transcript = Transcript { messages: Vec::with_capacity(2 * config.rounds as usize) };

    for round in 1..=config.rounds {
        let mut frames = Vec::with_capacity(2);
        for wing in [Wing::Left, Wing::Right] {
            let slot = wing_slot(wing);
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
            let payload = if config.censor_enabled {
                censor::vet_emission(strategy, &view, round, slice, config.payload_bytes)
                    .into_result()
                    .map_err(|v| Error::CensorViolation(Box::new(v)))?
            } else {
                censor::emit_frame(strategy, &view, round, slice, view.setting, config.payload_bytes)
            };
            frames.push(Message { sender: wing, round, payload });
        }
        for frame in frames {
            let from = wing_slot(frame.sender);
            received[1 - from].push(frame.clone());
            sent[from].push(frame.clone());
            transcript.messages.push(frame);
        }
        for wing in [Wing::Left, Wing::Right] {
            let slot = wing_slot(wing);
            let inbox = Inbox { received: &received[slot], sent: &sent[slot] };
            states[slot] = strategy.transition(&states[slot], round, inbox);
        }
    }

    let flash = |wing: Wing| {
        let slot = wing_slot(wing);
        let inbox = Inbox { received: &received[slot], sent: &sent[slot] };
        strategy.flash(&states[slot], inbox, settings.get(wing))
    };
    let colors = (flash(Wing::Left), flash(Wing::Right));

    Ok(RunTrace { tapes, transcript, final_states: states, received, sent, colors })
}

/// One complete run, as a replayable record.
pub fn execute_run(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    settings: SettingPair,
    seed: u64,
    run_index: u64,
) -> Result<RunRecord> {
    let trace = simulate(config, strategy, settings, seed, run_index)?;
    Ok(RunRecord {
        run_index,
        settings,
        colors: trace.colors,
        transcript: trace.transcript,
        seed,
        strategy_id: strategy.id().to_string(),
    })
}

/// Re-executes a record and fails unless colors and transcript match exactly.
pub fn replay(config: &RunConfig, strategy: &dyn WingStrategy, record: &RunRecord) -> Result<RunTrace> {
    if record.strategy_id != strategy.id() {
        return Err(Error::ReplayMismatch {
            run_index: record.run_index,
            detail: format!("record is for {:?}, not {:?}", record.strategy_id, strategy.id()),
        });
    }
    let trace = simulate(config, strategy, record.settings, record.seed, record.run_index)?;
    if trace.transcript != record.transcript {
        return Err(Error::ReplayMismatch {
            run_index: record.run_index,
            detail: "transcript differs".into(),
        });
    }
    if trace.colors != record.colors {
        return Err(Error::ReplayMismatch {
            run_index: record.run_index,
            detail: "colors differ".into(),
        });
    }
    Ok(trace)
}

/// First line of a JSON-lines run stream.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentHeader {
    pub config: RunConfig,
    pub strategy: String,
    /// Decimal, to survive JSON readers without 64-bit integers.
    pub master_seed: String,
    pub n_runs: u64,
    pub seed_mixer: &'static str,
    pub code_version: &'static str,
}

impl ExperimentHeader {
    pub fn new(config: &RunConfig, strategy: &str, n_runs: u64, master_seed: u64) -> Self {
        ExperimentHeader {
            config: config.clone(),
            strategy: strategy.to_string(),
            master_seed: master_seed.to_string(),
            n_runs,
            seed_mixer: SEED_MIXER,
            code_version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "header": self }).to_string()
    }
}

const CHUNK: u64 = 8192;

/// Drives `n_runs` runs, in parallel chunks, feeding records to `sink` in
/// run-index order. A censor violation stops the experiment; the error carries
/// the stats of every run before the offending one.
pub(crate) fn drive<F, S>(n_runs: u64, master_seed: u64, run: F, mut sink: S) -> Result<ExperimentStats>
where
    F: Fn(u64, u64, SettingPair) -> Result<RunRecord> + Sync,
    S: FnMut(&RunRecord) -> Result<()>,
{
    if n_runs == 0 {
        return Err(Error::Precondition("n_runs must be at least 1".into()));
    }
    let mut stats = ExperimentStats::new();
    let mut start = 0;
    while start < n_runs {
        let end = (start + CHUNK).min(n_runs);
        let results: Vec<Result<RunRecord>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let seed = split_seed(master_seed, i);
                run(i, seed, settings_for_seed(seed))
            })
            .collect();
        for (i, result) in (start..end).zip(results) {
            match result {
                Ok(record) => {
                    stats.record(record.settings, record.colors);
                    sink(&record)?;
                }
                Err(Error::CensorViolation(violation)) => {
                    return Err(Error::ExperimentAborted {
                        run_index: i,
                        violation,
                        partial: Box::new(stats),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        start = end;
    }
    Ok(stats)
}

/// Runs `n_runs` runs and aggregates their statistics.
pub fn run_experiment(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    n_runs: u64,
    master_seed: u64,
) -> Result<ExperimentStats> {
    run_experiment_streaming(config, strategy, n_runs, master_seed, |_| Ok(()))
}

/// Like [`run_experiment`], also handing every record to `sink` in order.
pub fn run_experiment_streaming<S>(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    n_runs: u64,
    master_seed: u64,
    sink: S,
) -> Result<ExperimentStats>
where
    S: FnMut(&RunRecord) -> Result<()>,
{
    config.validate()?;
    strategy.check_config(config)?;
    drive(
        n_runs,
        master_seed,
        |i, seed, settings| execute_run(config, strategy, settings, seed, i),
        sink,
    )
}
