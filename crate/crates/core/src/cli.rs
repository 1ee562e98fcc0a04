//! The `censored-bell` command line.
//!
//! Every error path writes exactly one JSON line to the error stream and
//! returns one of the exit codes below.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    bell_bound, bell_gap_report, check_feature_ii, half_gap, hoeffding_radius, prove_bound, ExperimentStats, FeatureICheck,
    Tolerance,
};
use crate::censor::{self, CensorViolation};
use crate::error::Error;
use crate::protocol::{run_experiment_streaming, ExperimentHeader, RunConfig};
use crate::quantum::{quantum_experiment, quantum_experiment_streaming, QUANTUM_ORACLE_ID};
use crate::strategies::{Registry, WingStrategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNKNOWN_STRATEGY: i32 = 3;
pub const EXIT_CENSOR_VIOLATION: i32 = 4;
pub const EXIT_VERIFICATION_FAILED: i32 = 5;

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  I/O error
  2  invalid configuration or usage
  3  unknown strategy
  4  censor violation (a frame or transcript depends on a setting)
  5  verification failed (bound not 5/9)";

#[derive(Debug, Parser)]
#[command(name = "censored-bell", version, about = "Bell experiment with censored classical communication")]
#[command(after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and report its statistics.
    Run(ExperimentArgs),
    /// Print the exact same-color fraction of every instruction set.
    ProveBound(OutputArgs),
    /// Compare a classical strategy with the quantum oracle.
    Gap(ExperimentArgs),
    /// Check a strategy by counterfactual replay of whole runs.
    VerifyCensor(ExperimentArgs),
    /// List registered strategy ids.
    ListStrategies(OutputArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output path, `-` for standard output.
    #[arg(long, env = "CENSORED_BELL_OUTPUT", default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value = "negotiation")]
    pub strategy: String,
    /// Number of runs.
    #[arg(long = "n", default_value_t = 100_000)]
    pub n_runs: u64,
    #[arg(long, env = "CENSORED_BELL_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub rounds: u32,
    #[arg(long, default_value_t = 32)]
    pub payload_bytes: usize,
    #[arg(long, default_value_t = 64)]
    pub shared_tape_bytes: usize,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub censor: Switch,
    /// Failure probability for Hoeffding confidence radii.
    #[arg(long, default_value_t = crate::analysis::DEFAULT_FAILURE_PROBABILITY)]
    pub failure_probability: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

impl ExperimentArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            rounds: self.rounds,
            payload_bytes: self.payload_bytes,
            shared_tape_bytes: self.shared_tape_bytes,
            censor_enabled: self.censor == Switch::On,
            ..RunConfig::default()
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let message = e.to_string().lines().next().unwrap_or_default().to_string();
            return diagnose(stderr, "usage", &message, EXIT_CONFIG);
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => report_error(stderr, &e),
    }
}

fn diagnose(stderr: &mut dyn Write, kind: &str, message: &str, code: i32) -> i32 {
    let line = serde_json::json!({ "error": kind, "message": message });
    let _ = writeln!(stderr, "{line}");
    code
}

fn violation_line(v: &CensorViolation, extra: serde_json::Value) -> serde_json::Value {
    let mut value = serde_json::to_value(v.report()).expect("report serializes");
    value["error"] = "censor_violation".into();
    value["message"] = v.to_string().into();
    if let (Some(obj), serde_json::Value::Object(more)) = (value.as_object_mut(), extra) {
        obj.extend(more);
    }
    value
}

fn report_error(stderr: &mut dyn Write, e: &Error) -> i32 {
    match e {
        Error::CensorViolation(v) => {
            let _ = writeln!(stderr, "{}", violation_line(v, serde_json::json!({})));
            EXIT_CENSOR_VIOLATION
        }
        Error::ExperimentAborted { run_index, violation, partial } => {
            let extra = serde_json::json!({ "run": run_index, "partial": partial.to_json() });
            let _ = writeln!(stderr, "{}", violation_line(violation, extra));
            EXIT_CENSOR_VIOLATION
        }
        Error::UnknownStrategy { .. } => diagnose(stderr, "unknown_strategy", &e.to_string(), EXIT_UNKNOWN_STRATEGY),
        Error::Config(_) | Error::Precondition(_) | Error::MalformedStrategy { .. } | Error::Parse(_) => {
            diagnose(stderr, "config", &e.to_string(), EXIT_CONFIG)
        }
        Error::Io(_) | Error::Json(_) => diagnose(stderr, "io", &e.to_string(), EXIT_IO),
        Error::ReplayMismatch { .. } => diagnose(stderr, "replay_mismatch", &e.to_string(), EXIT_VERIFICATION_FAILED),
    }
}

fn open_output<'a>(path: &PathBuf, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, Error> {
    if path.as_os_str() == "-" {
        Ok(Box::new(stdout))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

/// Classical strategy or the quantum oracle, selected by id.
enum Source {
    Strategy(std::sync::Arc<dyn WingStrategy>),
    Quantum,
}

fn resolve(registry: &Registry, id: &str) -> Result<Source, Error> {
    if id == QUANTUM_ORACLE_ID {
        return Ok(Source::Quantum);
    }
    registry.get(id).map(Source::Strategy).map_err(|e| match e {
        Error::UnknownStrategy { id, mut available } => {
            available.push(QUANTUM_ORACLE_ID.into());
            Error::UnknownStrategy { id, available }
        }
        other => other,
    })
}

fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Error> {
    let registry = Registry::builtin();
    match command {
        Command::Run(args) => cmd_run(&registry, args, stdout),
        Command::ProveBound(out) => cmd_prove_bound(out, stdout),
        Command::Gap(args) => cmd_gap(&registry, args, stdout, stderr),
        Command::VerifyCensor(args) => cmd_verify_censor(&registry, args, stdout, stderr),
        Command::ListStrategies(out) => cmd_list_strategies(&registry, out, stdout),
    }
}

fn experiment<S>(source: &Source, args: &ExperimentArgs, config: &RunConfig, sink: S) -> Result<ExperimentStats, Error>
where
    S: FnMut(&crate::domain::RunRecord) -> Result<(), Error>,
{
    match source {
        // Strategies that need the censor off still run with it on: the
        // resulting violation is the point of the exercise.
        Source::Strategy(s) => run_experiment_streaming(config, &**s, args.n_runs, args.seed, sink),
        Source::Quantum => quantum_experiment_streaming(args.n_runs, args.seed, sink),
    }
}

pub fn cmd_run(registry: &Registry, args: &ExperimentArgs, stdout: &mut dyn Write) -> Result<i32, Error> {
    let source = resolve(registry, &args.strategy)?;
    let config = args.run_config();
    config.validate()?;
    if args.n_runs == 0 {
        return Err(Error::Precondition("--n must be at least 1".into()));
    }
    let mut out = open_output(&args.out.output, stdout)?;
    let mut feature_i = FeatureICheck::new();
    let stats = match args.out.format {
        Format::Jsonl => {
            let header = ExperimentHeader::new(&config, &args.strategy, args.n_runs, args.seed);
            writeln!(out, "{}", header.to_json_line())?;
            let stats = experiment(&source, args, &config, |r| {
                feature_i.observe(r);
                writeln!(out, "{}", r.to_json_line())?;
                Ok(())
            })?;
            let summary = summary_json(&stats, &feature_i, args.failure_probability)?;
            writeln!(out, "{}", serde_json::json!({ "summary": summary }))?;
            stats
        }
        Format::Csv => {
            let stats = experiment(&source, args, &config, |r| {
                feature_i.observe(r);
                Ok(())
            })?;
            write!(out, "{}", stats.to_csv(args.failure_probability))?;
            stats
        }
        Format::Text => {
            let stats = experiment(&source, args, &config, |r| {
                feature_i.observe(r);
                Ok(())
            })?;
            write!(out, "{}", text_report(&args.strategy, &stats, &feature_i, args.failure_probability)?)?;
            stats
        }
    };
    out.flush()?;
    debug_assert_eq!(stats.n_runs(), args.n_runs);
    Ok(EXIT_OK)
}

fn summary_json(stats: &ExperimentStats, feature_i: &FeatureICheck, delta: f64) -> Result<serde_json::Value, Error> {
    let feature_ii = check_feature_ii(stats, Tolerance::Hoeffding { failure_probability: delta })?;
    Ok(serde_json::json!({
        "stats": stats.to_json(),
        "feature_i": { "holds": feature_i.holds, "violations": feature_i.violations.len() },
        "feature_ii": feature_ii,
        "bound": bell_bound(),
        "radius": hoeffding_radius(stats.n_runs(), delta),
    }))
}

/// Narrative order: feature (i), feature (ii), bound, verdict.
fn text_report(strategy: &str, stats: &ExperimentStats, feature_i: &FeatureICheck, delta: f64) -> Result<String, Error> {
    use std::fmt::Write as _;
    let feature_ii = check_feature_ii(stats, Tolerance::Hoeffding { failure_probability: delta })?;
    let radius = feature_ii.tolerance;
    let overall = stats.overall_same();
    let mut s = String::new();
    writeln!(s, "strategy             {strategy}").unwrap();
    writeln!(s, "runs                 {}", stats.n_runs()).unwrap();
    writeln!(
        s,
        "feature (i)          {}  ({} equal-setting runs, {} mismatched)",
        if feature_i.holds { "holds" } else { "fails" },
        feature_i.equal_setting_runs,
        feature_i.violations.len()
    )
    .unwrap();
    writeln!(
        s,
        "feature (ii)         {}  (same-color fraction {:.6}, expected 1/2 +- {radius:.4})",
        if feature_ii.holds { "holds" } else { "fails" },
        overall.to_f64(),
    )
    .unwrap();
    writeln!(s, "same-color fraction  {:.6}  ({overall})", overall.to_f64()).unwrap();
    writeln!(s, "classical bound      {}  (radius {radius:.4} at failure probability {delta:e})", bell_bound()).unwrap();
    let verdict = if radius > half_gap() {
        "too few runs to tell 1/2 from 5/9"
    } else if feature_i.holds && feature_ii.holds {
        "reproduces the quantum data: only possible if settings leaked"
    } else if feature_i.holds && overall.to_f64() >= bell_bound().to_f64() - radius {
        "respects the classical floor of 5/9"
    } else if feature_i.holds {
        "below the classical floor: check the strategy"
    } else {
        "feature (i) fails, so the bound does not apply"
    };
    writeln!(s, "verdict              {verdict}").unwrap();
    Ok(s)
}

pub fn cmd_prove_bound(out_args: &OutputArgs, stdout: &mut dyn Write) -> Result<i32, Error> {
    let report = prove_bound();
    let mut out = open_output(&out_args.output, stdout)?;
    match out_args.format {
        Format::Text => write!(out, "{}", report.to_text())?,
        Format::Jsonl => writeln!(out, "{}", serde_json::to_string(&report)?)?,
        Format::Csv => {
            writeln!(out, "instruction_set,same_fraction")?;
            for (set, f) in &report.per_set_fractions {
                writeln!(out, "{set},{f}")?;
            }
        }
    }
    out.flush()?;
    Ok(if report.holds() { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

pub fn cmd_gap(
    registry: &Registry,
    args: &ExperimentArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Error> {
    let source = resolve(registry, &args.strategy)?;
    let config = args.run_config();
    config.validate()?;
    let classical = experiment(&source, args, &config, |_| Ok(()))?;
    let quantum = quantum_experiment(args.n_runs, args.seed)?;
    let report = bell_gap_report(&classical, &quantum, args.failure_probability)?;
    if let Some(w) = &report.warning {
        let _ = writeln!(stderr, "{}", serde_json::json!({ "warning": "insufficient_power", "message": w }));
    }
    let mut out = open_output(&args.out.output, stdout)?;
    match args.out.format {
        Format::Text => write!(out, "{}", report.to_text())?,
        Format::Jsonl => writeln!(out, "{}", serde_json::to_string(&report)?)?,
        Format::Csv => {
            writeln!(out, "source,runs,same_fraction,radius")?;
            for (name, i, n) in [
                ("classical", &report.classical_interval, report.classical_runs),
                ("quantum", &report.quantum_interval, report.quantum_runs),
            ] {
                writeln!(out, "{name},{n},{:.6},{:.6}", i.center, i.radius)?;
            }
        }
    }
    out.flush()?;
    Ok(EXIT_OK)
}

pub fn cmd_verify_censor(
    registry: &Registry,
    args: &ExperimentArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Error> {
    let strategy = match resolve(registry, &args.strategy)? {
        Source::Strategy(s) => s,
        Source::Quantum => {
            return Err(Error::Precondition("the quantum oracle exchanges no messages to verify".into()))
        }
    };
    let config = args.run_config();
    let guard = censor::probe_strategy(&*strategy);
    let leak = censor::verify_strategy(&config, &*strategy, args.n_runs, args.seed)?;
    let mut out = open_output(&args.out.output, stdout)?;
    let result = serde_json::json!({
        "strategy": strategy.id(),
        "runs": args.n_runs,
        "state_guard": guard.as_ref().map(|_| "ok").unwrap_or_else(|r| r.as_str()),
        "noninterference": leak.as_ref().map_or("holds".to_string(), |(run, check)| {
            let (wing, s) = check.first_difference.expect("leak has a difference");
            format!("transcript of run {run} changes when the {wing} wing's setting becomes {s}")
        }),
    });
    match args.out.format {
        Format::Jsonl | Format::Csv => writeln!(out, "{result}")?,
        Format::Text => {
            writeln!(out, "strategy         {}", result["strategy"].as_str().unwrap_or_default())?;
            writeln!(out, "runs replayed    {}", args.n_runs)?;
            writeln!(out, "state guard      {}", result["state_guard"].as_str().unwrap_or_default())?;
            writeln!(out, "noninterference  {}", result["noninterference"].as_str().unwrap_or_default())?;
        }
    }
    out.flush()?;
    if let Some((run, check)) = leak {
        let (wing, s) = check.first_difference.expect("leak has a difference");
        let line = serde_json::json!({
            "error": "censor_violation",
            "strategy": strategy.id(),
            "run": run,
            "wing": wing.to_string(),
            "setting": s.number(),
            "message": "transcript depends on a setting",
        });
        let _ = writeln!(stderr, "{line}");
        return Ok(EXIT_CENSOR_VIOLATION);
    }
    if let Err(reason) = guard {
        return Ok(diagnose(stderr, "malformed_strategy", &reason, EXIT_CONFIG));
    }
    Ok(EXIT_OK)
}

pub fn cmd_list_strategies(registry: &Registry, out_args: &OutputArgs, stdout: &mut dyn Write) -> Result<i32, Error> {
    let mut out = open_output(&out_args.output, stdout)?;
    let mut rows: Vec<(String, String, bool)> = registry
        .iter()
        .map(|s| (s.id().to_string(), s.description().to_string(), s.requires_censor_off()))
        .collect();
    rows.push((QUANTUM_ORACLE_ID.into(), "singlet-state color source (run and gap only)".into(), false));
    for (id, description, censor_off) in rows {
        match out_args.format {
            Format::Text => {
                let note = if censor_off { " [censor off]" } else { "" };
                writeln!(out, "{id:<16} {description}{note}")?;
            }
            Format::Jsonl => writeln!(
                out,
                "{}",
                serde_json::json!({ "id": id, "description": description, "requires_censor_off": censor_off })
            )?,
            Format::Csv => writeln!(out, "{id},{censor_off}")?,
        }
    }
    out.flush()?;
    Ok(EXIT_OK)
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
