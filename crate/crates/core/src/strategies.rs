//! Wing strategies and the registry that hands them out by id.
//!
//! A strategy describes how *both* wings behave; the referee tells each call
//! which wing it is acting for. The setting only ever reaches `emit` (where
//! the censor vets it) and `flash`. `init` and `transition` build the wing's
//! public state from tapes and traffic alone.

use std::fmt;
use std::sync::Arc;

use crate::censor;
use crate::domain::{all_instruction_sets, Color, InstructionSet, Setting, Wing};
use crate::error::{Error, Result};
use crate::protocol::{mix64, Inbox, RunConfig};

/// Opaque per-wing state carried between rounds.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct PublicState(Vec<u8>);

impl PublicState {
    pub fn new(bytes: Vec<u8>) -> Self {
        PublicState(bytes)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    fn byte(&self, i: usize) -> Option<u8> {
        self.0.get(i).copied()
    }
}

impl fmt::Debug for PublicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicState({})", hex::encode(&self.0))
    }
}

/// What a wing knows before the first round. Deliberately no setting.
#[derive(Clone, Copy, Debug)]
pub struct InitContext<'a> {
    pub wing: Wing,
    /// Position of the run in its experiment; usable as a shared clock.
    pub run_index: u64,
    pub shared_tape: &'a [u8],
    pub private_tape: &'a [u8],
}

/// Behaviour of both wings in a run. Every method must be deterministic in
/// its arguments; implementations are shared across concurrent runs.
pub trait WingStrategy: Send + Sync {
    fn id(&self) -> &str;

    fn description(&self) -> &str {
        ""
    }

    /// Strategies that deliberately leak their setting.
    fn requires_censor_off(&self) -> bool {
        false
    }

    fn check_config(&self, _config: &RunConfig) -> Result<()> {
        Ok(())
    }

    fn init(&self, ctx: &InitContext<'_>) -> PublicState;

    /// Called for each wing after both frames of `round` are delivered.
    fn transition(&self, state: &PublicState, round: u32, inbox: Inbox<'_>) -> PublicState;

    /// Writes this round's frame into `out`, which arrives zeroed and has
    /// exactly the configured payload length.
    fn emit(
        &self,
        state: &PublicState,
        round: u32,
        inbox: Inbox<'_>,
        randomness: &[u8],
        setting: Setting,
        out: &mut [u8],
    );

    fn flash(&self, state: &PublicState, inbox: Inbox<'_>, setting: Setting) -> Color;
}

const KNOWN: u8 = 0x80;

fn known_ordinal(byte: u8) -> Option<usize> {
    (byte & KNOWN != 0).then_some((byte & 0x07) as usize)
}

fn tape_byte(tape: &[u8], i: usize) -> u8 {
    if tape.is_empty() {
        0
    } else {
        tape[i % tape.len()]
    }
}

fn flash_ordinal(ordinal: Option<usize>, setting: Setting) -> Color {
    ordinal
        .and_then(InstructionSet::from_ordinal)
        .map_or(Color::Red, |s| s.color(setting))
}

/// Left proposes an instruction set drawn from the shared tape, right adopts
/// it on delivery and echoes it back; both flash the agreed set.
#[derive(Clone, Debug)]
pub struct Negotiation {
    id: String,
    weights: Option<[u32; 8]>,
}

impl Negotiation {
    /// Picks the proposal from the source tape: the low bit of each of the
    /// first three bytes gives the colors for settings 1, 2, 3 (uniform over
    /// the eight sets), or a weighted draw from four bytes when weighted.
    fn propose(&self, tape: &[u8]) -> usize {
        match self.weights {
            None => {
                let colors = [0, 1, 2].map(|k| Color::from_bit(tape_byte(tape, k)));
                InstructionSet::new(colors).ordinal()
            }
            Some(weights) => {
                let total: u64 = weights.iter().map(|&w| w as u64).sum();
                let word = u32::from_le_bytes([0, 1, 2, 3].map(|k| tape_byte(tape, k))) as u64;
                let mut target = (word * total) >> 32;
                for (ordinal, &w) in weights.iter().enumerate() {
                    if target < w as u64 {
                        return ordinal;
                    }
                    target -= w as u64;
                }
                unreachable!("target below total weight")
            }
        }
    }
}

impl WingStrategy for Negotiation {
    fn id(&self) -> &str {
        &self.id
    }

    fn description(&self) -> &str {
        "left proposes an instruction set from the shared tape, right acknowledges; both flash it"
    }

    fn init(&self, ctx: &InitContext<'_>) -> PublicState {
        match ctx.wing {
            Wing::Left => {
                let source = if ctx.shared_tape.is_empty() { ctx.private_tape } else { ctx.shared_tape };
                PublicState::new(vec![KNOWN | self.propose(source) as u8])
            }
            Wing::Right => PublicState::new(vec![0]),
        }
    }

    fn transition(&self, state: &PublicState, round: u32, inbox: Inbox<'_>) -> PublicState {
        if state.byte(0).and_then(known_ordinal).is_some() {
            return state.clone();
        }
        match inbox.received_in(round).and_then(|m| known_ordinal(m.payload[0])) {
            Some(ordinal) => PublicState::new(vec![KNOWN | ordinal as u8]),
            None => state.clone(),
        }
    }

    fn emit(&self, state: &PublicState, _: u32, _: Inbox<'_>, _: &[u8], _: Setting, out: &mut [u8]) {
        out[0] = state.byte(0).unwrap_or(0);
    }

    fn flash(&self, state: &PublicState, _: Inbox<'_>, setting: Setting) -> Color {
        flash_ordinal(state.byte(0).and_then(known_ordinal), setting)
    }
}

pub fn negotiation_strategy() -> Arc<dyn WingStrategy> {
    Arc::new(Negotiation { id: "negotiation".into(), weights: None })
}

/// Negotiation whose proposals follow `weights` over the eight sets, in the
/// order of [`all_instruction_sets`].
pub fn weighted_negotiation_strategy(id: &str, weights: [u32; 8]) -> Result<Arc<dyn WingStrategy>> {
    if weights.iter().all(|&w| w == 0) {
        return Err(Error::Config("negotiation weights must not all be zero".into()));
    }
    Ok(Arc::new(Negotiation { id: id.into(), weights: Some(weights) }))
}

/// Both wings flash a fixed instruction set and send zero frames.
#[derive(Clone, Debug)]
pub struct FixedInstruction {
    id: String,
    iset: InstructionSet,
}

impl WingStrategy for FixedInstruction {
    fn id(&self) -> &str {
        &self.id
    }

    fn description(&self) -> &str {
        "both wings flash a fixed instruction set"
    }

    fn init(&self, _: &InitContext<'_>) -> PublicState {
        PublicState::default()
    }

    fn transition(&self, state: &PublicState, _: u32, _: Inbox<'_>) -> PublicState {
        state.clone()
    }

    fn emit(&self, _: &PublicState, _: u32, _: Inbox<'_>, _: &[u8], _: Setting, _: &mut [u8]) {}

    fn flash(&self, _: &PublicState, _: Inbox<'_>, setting: Setting) -> Color {
        self.iset.color(setting)
    }
}

pub fn fixed_instruction_strategy(iset: InstructionSet) -> Arc<dyn WingStrategy> {
    Arc::new(FixedInstruction { id: format!("fixed-{iset}"), iset })
}

/// Sends its setting in byte 0 of every frame, then samples the quantum joint
/// distribution from the shared tape once both settings are known.
#[derive(Clone, Debug)]
pub struct Cheat;

impl Cheat {
    /// Both wings evaluate this with the same inputs, so they agree.
    fn joint(shared_tape: &[u8], left: Setting, right: Setting) -> (Color, Color) {
        let left_color = Color::from_bit(shared_tape[0]);
        let same = left == right || shared_tape[1] & 0b11 == 0;
        (left_color, if same { left_color } else { left_color.flip() })
    }
}

impl WingStrategy for Cheat {
    fn id(&self) -> &str {
        "cheat"
    }

    fn description(&self) -> &str {
        "announces its setting, then reproduces the quantum statistics (censor must be off)"
    }

    fn requires_censor_off(&self) -> bool {
        true
    }

    fn check_config(&self, config: &RunConfig) -> Result<()> {
        if config.shared_tape_bytes < 2 {
            return Err(Error::Config("cheat needs a shared tape of at least 2 bytes".into()));
        }
        Ok(())
    }

    // state: [wing, shared[0], shared[1], peer setting once heard]
    fn init(&self, ctx: &InitContext<'_>) -> PublicState {
        let wing = crate::protocol::wing_slot(ctx.wing) as u8;
        PublicState::new(vec![wing, ctx.shared_tape[0], ctx.shared_tape[1]])
    }

    fn transition(&self, state: &PublicState, _: u32, inbox: Inbox<'_>) -> PublicState {
        let mut bytes = state.bytes()[..3].to_vec();
        if let Some(first) = inbox.received_in(1) {
            bytes.push(first.payload[0]);
        }
        PublicState::new(bytes)
    }

    fn emit(&self, _: &PublicState, _: u32, _: Inbox<'_>, _: &[u8], setting: Setting, out: &mut [u8]) {
        out[0] = setting.number();
    }

    fn flash(&self, state: &PublicState, _: Inbox<'_>, setting: Setting) -> Color {
        let peer = state.byte(3).and_then(Setting::from_number).unwrap_or(setting);
        let tape = &state.bytes()[1..3];
        if state.bytes()[0] == 0 {
            Cheat::joint(tape, setting, peer).0
        } else {
            Cheat::joint(tape, peer, setting).1
        }
    }
}

pub fn cheat_strategy() -> Arc<dyn WingStrategy> {
    Arc::new(Cheat)
}

/// Flashes an instruction set that changes with the run index, the way two
/// detectors reading synchronized clocks would.
#[derive(Clone, Debug)]
pub struct ClockKeyed;

impl WingStrategy for ClockKeyed {
    fn id(&self) -> &str {
        "clock-keyed"
    }

    fn description(&self) -> &str {
        "instruction set cycles with the run index (synchronized clocks)"
    }

    fn init(&self, ctx: &InitContext<'_>) -> PublicState {
        // ticks every three runs
        let ordinal = (ctx.run_index / 3) % 8;
        PublicState::new(vec![KNOWN | ordinal as u8])
    }

    fn transition(&self, state: &PublicState, _: u32, _: Inbox<'_>) -> PublicState {
        state.clone()
    }

    fn emit(&self, state: &PublicState, round: u32, _: Inbox<'_>, _: &[u8], _: Setting, out: &mut [u8]) {
        let stamp = mix64(state.bytes()[0] as u64 ^ (round as u64) << 8).to_le_bytes();
        for (o, b) in out.iter_mut().zip(stamp.iter().cycle()) {
            *o = *b;
        }
    }

    fn flash(&self, state: &PublicState, _: Inbox<'_>, setting: Setting) -> Color {
        flash_ordinal(state.byte(0).and_then(known_ordinal), setting)
    }
}

fn fold_hash(seed: u64, bytes: &[u8]) -> u64 {
    bytes.chunks(8).fold(mix64(seed ^ bytes.len() as u64), |h, chunk| {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        mix64(h ^ u64::from_le_bytes(word))
    })
}

/// Each wing contributes a digest of its private tape in round 1; both then
/// XOR the two contributions with a shared-tape byte to pick the set.
#[derive(Clone, Debug)]
pub struct TapeMixer;

impl WingStrategy for TapeMixer {
    fn id(&self) -> &str {
        "tape-mixer"
    }

    fn description(&self) -> &str {
        "both wings mix private-tape digests with the shared tape to agree on a set"
    }

    fn init(&self, ctx: &InitContext<'_>) -> PublicState {
        let digest = fold_hash(0x7a9e, ctx.private_tape) as u8;
        PublicState::new(vec![digest, tape_byte(ctx.shared_tape, 0), 0])
    }

    fn transition(&self, state: &PublicState, _: u32, inbox: Inbox<'_>) -> PublicState {
        let mut bytes = state.bytes().to_vec();
        if let Some(peer) = inbox.received_in(1) {
            bytes[2] = KNOWN | ((bytes[0] ^ peer.payload[0] ^ bytes[1]) & 0x07);
        }
        PublicState::new(bytes)
    }

    fn emit(&self, state: &PublicState, _: u32, _: Inbox<'_>, _: &[u8], _: Setting, out: &mut [u8]) {
        out[0] = state.bytes()[0];
        if let Some(o) = out.get_mut(1) {
            *o = state.bytes()[2];
        }
    }

    fn flash(&self, state: &PublicState, _: Inbox<'_>, setting: Setting) -> Color {
        flash_ordinal(known_ordinal(state.bytes()[2]), setting)
    }
}

/// Sends its whole randomness slice every round and picks the set from the
/// XOR of every byte exchanged.
#[derive(Clone, Debug)]
pub struct RandomnessHog;

impl WingStrategy for RandomnessHog {
    fn id(&self) -> &str {
        "randomness-hog"
    }

    fn description(&self) -> &str {
        "spends its full randomness budget every round; set chosen from all traffic"
    }

    fn init(&self, _: &InitContext<'_>) -> PublicState {
        PublicState::default()
    }

    fn transition(&self, state: &PublicState, _: u32, _: Inbox<'_>) -> PublicState {
        state.clone()
    }

    fn emit(&self, _: &PublicState, _: u32, _: Inbox<'_>, randomness: &[u8], _: Setting, out: &mut [u8]) {
        for (o, r) in out.iter_mut().zip(randomness.iter().cycle()) {
            *o = *r;
        }
    }

    fn flash(&self, _: &PublicState, inbox: Inbox<'_>, setting: Setting) -> Color {
        let xor = inbox
            .received
            .iter()
            .chain(inbox.sent)
            .flat_map(|m| m.payload.iter())
            .fold(0u8, |acc, b| acc ^ b);
        flash_ordinal(Some((xor & 0x07) as usize), setting)
    }
}

/// Frames are a hash of everything the wing holds except its setting.
#[derive(Clone, Debug)]
pub struct NearLeak;

impl WingStrategy for NearLeak {
    fn id(&self) -> &str {
        "near-leak"
    }

    fn description(&self) -> &str {
        "frames hash every input except the setting"
    }

    fn init(&self, ctx: &InitContext<'_>) -> PublicState {
        let mut bytes = fold_hash(ctx.run_index, ctx.private_tape).to_le_bytes().to_vec();
        let agreed = fold_hash(ctx.run_index, ctx.shared_tape) % 8;
        bytes.push(KNOWN | agreed as u8);
        PublicState::new(bytes)
    }

    fn transition(&self, state: &PublicState, round: u32, inbox: Inbox<'_>) -> PublicState {
        let mut h = fold_hash(round as u64, state.bytes());
        for m in inbox.received.iter().chain(inbox.sent) {
            h = fold_hash(h, &m.payload);
        }
        let mut bytes = h.to_le_bytes().to_vec();
        bytes.push(state.bytes()[8]);
        PublicState::new(bytes)
    }

    fn emit(
        &self,
        state: &PublicState,
        round: u32,
        inbox: Inbox<'_>,
        randomness: &[u8],
        _: Setting,
        out: &mut [u8],
    ) {
        let mut h = fold_hash(round as u64, state.bytes());
        h = fold_hash(h, randomness);
        for m in inbox.received {
            h = fold_hash(h, &m.payload);
        }
        for chunk in out.chunks_mut(8) {
            h = mix64(h);
            chunk.copy_from_slice(&h.to_le_bytes()[..chunk.len()]);
        }
    }

    fn flash(&self, state: &PublicState, _: Inbox<'_>, setting: Setting) -> Color {
        flash_ordinal(state.byte(8).and_then(known_ordinal), setting)
    }
}

/// Stress strategies that coordinate in every allowed way.
pub fn adversarial_strategy_suite() -> Vec<Arc<dyn WingStrategy>> {
    vec![Arc::new(ClockKeyed), Arc::new(TapeMixer), Arc::new(RandomnessHog), Arc::new(NearLeak)]
}

/// Strategies by id, in registration order.
#[derive(Clone, Default)]
pub struct Registry {
    strategies: Vec<Arc<dyn WingStrategy>>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// Every shipped strategy.
    pub fn builtin() -> Self {
        let mut registry = Registry::new();
        let all = std::iter::once(negotiation_strategy())
            .chain(all_instruction_sets().into_iter().map(fixed_instruction_strategy))
            .chain(adversarial_strategy_suite())
            .chain(std::iter::once(cheat_strategy()));
        for strategy in all {
            registry.register(strategy).expect("builtin strategies are well-formed");
        }
        registry
    }

    /// Adds a strategy after probing it with [`censor::probe_strategy`].
    pub fn register(&mut self, strategy: Arc<dyn WingStrategy>) -> Result<()> {
        let id = strategy.id().to_string();
        if self.strategies.iter().any(|s| s.id() == id) {
            return Err(Error::MalformedStrategy { id, reason: "duplicate id".into() });
        }
        censor::probe_strategy(&*strategy).map_err(|reason| Error::MalformedStrategy { id, reason })?;
        self.strategies.push(strategy);
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        self.strategies.iter().map(|s| s.id().to_string()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn WingStrategy>> {
        self.strategies.iter()
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn WingStrategy>> {
        self.strategies
            .iter()
            .find(|s| s.id() == id)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy { id: id.into(), available: self.ids() })
    }

    /// Looks up a strategy and checks it can run under `config`. Strategies
    /// that need the censor off are refused while it is on.
    pub fn load(&self, id: &str, config: &RunConfig) -> Result<Arc<dyn WingStrategy>> {
        let strategy = self.get(id)?;
        if strategy.requires_censor_off() && config.censor_enabled {
            return Err(Error::Config(format!("strategy {id:?} can only run with the censor off")));
        }
        config.validate()?;
        strategy.check_config(config)?;
        Ok(strategy)
    }
}
