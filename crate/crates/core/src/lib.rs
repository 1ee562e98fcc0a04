//! Simulator and verifier for a two-wing Bell experiment in which the wings
//! may talk freely, except that no message may reveal a wing's setting.
//!
//! Each run, a referee assigns settings 1, 2 or 3 to the left and right wing,
//! lets the wings exchange fixed-size frames for a fixed number of rounds and
//! then collects a red or green flash from each. A censor recomputes every
//! frame under all three settings and aborts the run if they differ.
//!
//! The crate shows, exactly and by experiment, that any strategy which passes
//! the censor and flashes equal colors on equal settings flashes equal colors
//! at least 5/9 of the time, while the singlet-state statistics give 1/2.
//!
//! - [`domain`]: settings, colors, instruction sets, exact fractions.
//! - [`protocol`]: the referee, run records and experiments.
//! - [`censor`]: counterfactual vetting of frames and whole runs.
//! - [`strategies`]: the strategy interface, shipped strategies, registry.
//! - [`quantum`]: the singlet-state oracle.
//! - [`analysis`]: the exact bound, feature checks, gap reports.
//! - [`cli`]: the `censored-bell` command line.
//!
//! Runnable walkthroughs live in `examples/`: `prove_bound`,
//! `negotiation_experiment`, `quantum_oracle`, `bell_gap`,
//! `censor_violation`, `counterfactual_replay`, `induced_types`,
//! `jsonl_replay` and `custom_strategy`.

pub mod analysis;
pub mod censor;
pub mod cli;
pub mod domain;
pub mod error;
pub mod protocol;
pub mod quantum;
pub mod strategies;
mod wire;

pub use analysis::{
    bell_gap_report, check_feature_i, check_feature_ii, hoeffding_radius, induced_instruction_set, prove_bound,
    BoundReport, ExperimentStats, GapReport, Tolerance,
};
pub use censor::{vet_emission, whole_run_counterfactual, CensorVerdict, CensorViolation};
pub use domain::{
    all_instruction_sets, same_color_fraction, settings_equal_probability, Color, Fraction, InstructionSet,
    RunRecord, Setting, SettingPair, Wing,
};
pub use error::{Error, Result};
pub use protocol::{execute_run, run_experiment, run_experiment_streaming, Message, RunConfig, Transcript};
pub use quantum::{quantum_experiment, singlet_joint};
pub use strategies::{Registry, WingStrategy};
