//! Exit criteria. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use censored_bell::analysis::{bell_bound, hoeffding_radius, FeatureICheck};
use censored_bell::censor::whole_run_counterfactual;
use censored_bell::protocol::{execute_run, run_experiment_streaming, split_seed, RunConfig};
use censored_bell::strategies::{adversarial_strategy_suite, cheat_strategy, negotiation_strategy, Registry};
use censored_bell::{
    induced_instruction_set, prove_bound, quantum_experiment, same_color_fraction, Error, ExperimentStats, Fraction,
    Setting, SettingPair, Wing,
};

const N: u64 = 100_000;
/// Criterion 2 floor margin: Hoeffding radius at n = 1e5, delta = 1e-6.
const FLOOR_MARGIN: f64 = 0.0085;
/// Criteria 3 and 5.
const QUANTUM_TOLERANCE: f64 = 0.01;
const FAILURE_PROBABILITY: f64 = 1e-6;
const MASTER_SEED: u64 = 20_021_007;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1_exact_bound() -> Outcome {
    let start = Instant::now();
    let report = prove_bound();
    let elapsed = start.elapsed();
    let expected = [
        ("RRG", "5/9"),
        ("RGR", "5/9"),
        ("GRR", "5/9"),
        ("GGR", "5/9"),
        ("GRG", "5/9"),
        ("RGG", "5/9"),
        ("RRR", "1"),
        ("GGG", "1"),
    ];
    let got: Vec<(String, String)> = report.per_set_fractions.iter().map(|(s, f)| (s.clone(), f.to_string())).collect();
    let want: Vec<(String, String)> = expected.iter().map(|(s, f)| (s.to_string(), f.to_string())).collect();
    check(got == want, format!("fractions {got:?}"))?;
    check(report.minimum == bell_bound() && report.minimum.to_string() == "5/9", format!("minimum {}", report.minimum))?;
    check(elapsed < Duration::from_millis(1), format!("took {elapsed:?}"))?;
    Ok(format!("minimum {} in {elapsed:?}", report.minimum))
}

fn criterion_2_classical_floor() -> Outcome {
    let registry = Registry::builtin();
    let config = RunConfig::default();
    let floor = bell_bound().to_f64() - FLOOR_MARGIN;
    let mut summary = Vec::new();
    for strategy in registry.iter().filter(|s| !s.requires_censor_off()) {
        let start = Instant::now();
        let mut feature_i = FeatureICheck::new();
        let stats = run_experiment_streaming(&config, &**strategy, N, MASTER_SEED, |r| {
            feature_i.observe(r);
            Ok(())
        })
        .map_err(|e| format!("{}: {e}", strategy.id()))?;
        let elapsed = start.elapsed();
        let same = stats.overall_same().to_f64();
        check(feature_i.holds, format!("{} breaks feature (i)", strategy.id()))?;
        check(same >= floor, format!("{} same {same:.5} < {floor:.5}", strategy.id()))?;
        check(elapsed < Duration::from_secs(10), format!("{} took {elapsed:?}", strategy.id()))?;
        summary.push(format!("{}={same:.4}", strategy.id()));
    }
    Ok(format!("floor {floor:.4}: {}", summary.join(" ")))
}

fn quantum_statistics(stats: &ExperimentStats, label: &str) -> Outcome {
    let equal = SettingPair::all().filter(SettingPair::is_equal).map(|p| stats.count(p));
    let mismatches: u64 = equal.map(|c| c.different).sum();
    check(mismatches == 0, format!("{label}: {mismatches} equal-setting mismatches"))?;
    check(stats.equal_settings_same() == Some(Fraction::ONE), format!("{label}: equal-setting fraction not 1"))?;
    let overall = stats.overall_same().to_f64();
    check((overall - 0.5).abs() <= QUANTUM_TOLERANCE, format!("{label}: overall {overall:.5}"))?;
    let mut worst: f64 = 0.0;
    for pair in SettingPair::all().filter(|p| !p.is_equal()) {
        let f = stats.per_pair_same(pair).ok_or(format!("{label}: no runs at {pair}"))?.to_f64();
        check((f - 0.25).abs() <= QUANTUM_TOLERANCE, format!("{label}: pair {pair} same {f:.5}"))?;
        worst = worst.max((f - 0.25).abs());
    }
    Ok(format!("overall {overall:.4}, worst unequal-pair deviation {worst:.4}"))
}

fn criterion_3_quantum_statistics() -> Outcome {
    let stats = quantum_experiment(N, MASTER_SEED).map_err(|e| e.to_string())?;
    quantum_statistics(&stats, "oracle")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_censored-bell"))
        .args(args)
        .env_remove("CENSORED_BELL_SEED")
        .env_remove("CENSORED_BELL_OUTPUT")
        .output()
        .expect("binary runs")
}

fn criterion_4_gap() -> Outcome {
    let seed = MASTER_SEED.to_string();
    let out = run_cli(&["gap", "--n", "100000", "--seed", &seed, "--format", "jsonl"]);
    check(out.status.success(), format!("exit {:?}", out.status.code()))?;
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let c = &report["classical_interval"];
    let q = &report["quantum_interval"];
    let c_low = c["center"].as_f64().unwrap() - c["radius"].as_f64().unwrap();
    let q_high = q["center"].as_f64().unwrap() + q["radius"].as_f64().unwrap();
    check(report["gap_exhibited"] == true, "gap not exhibited")?;
    check(c_low > q_high, format!("classical low {c_low:.4} <= quantum high {q_high:.4}"))?;
    check(c_low >= bell_bound().to_f64() - FLOOR_MARGIN, format!("classical low {c_low:.4} below the floor"))?;
    check((q["center"].as_f64().unwrap() - 0.5).abs() <= QUANTUM_TOLERANCE, "quantum center off 1/2")?;
    check(report["warning"].is_null(), "power warning at n = 1e5")?;
    Ok(format!("classical low {c_low:.4} > quantum high {q_high:.4}"))
}

fn criterion_5_censor_necessity() -> Outcome {
    let cheat = cheat_strategy();
    let off = RunConfig::default().with_censor(false);
    let stats = run_experiment_streaming(&off, &*cheat, N, MASTER_SEED, |_| Ok(())).map_err(|e| e.to_string())?;
    let stats_line = quantum_statistics(&stats, "cheat")?;

    let on = RunConfig::default();
    let mut violations = Vec::new();
    for seed in [1, 2, 3] {
        for pair in SettingPair::all() {
            match execute_run(&on, &*cheat, pair, seed, 0) {
                Err(Error::CensorViolation(v)) => violations.push(*v),
                other => return Err(format!("censor on, {pair}: expected violation, got {other:?}")),
            }
        }
    }
    for v in &violations {
        check(v.round == 1, format!("violation in round {}", v.round))?;
        check(v.wing == Wing::Left, "first emitter is the left wing")?;
        check(v.payload_a != v.payload_b && v.setting_a != v.setting_b, "violation lacks differing payloads")?;
    }
    check(violations.windows(2).all(|w| w[0] == w[1]), "violation depends on seed or settings")?;
    Ok(format!("censor off: {stats_line}; censor on: round-1 violation, payloads {} vs {}",
        hex::encode(&violations[0].payload_a[..1]),
        hex::encode(&violations[0].payload_b[..1])))
}

fn criterion_6_noninterference() -> Outcome {
    let registry = Registry::builtin();
    let compliant: Vec<_> = registry.iter().filter(|s| !s.requires_censor_off()).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let config = RunConfig::default();
    for trial in 0..1_000 {
        let strategy = &compliant[rng.random_range(0..compliant.len())];
        let seed: u64 = rng.random();
        let run_index: u64 = rng.random_range(0..1_000_000);
        let settings = SettingPair::new(
            Setting::ALL[rng.random_range(0..3)],
            Setting::ALL[rng.random_range(0..3)],
        );
        let check_result = whole_run_counterfactual(&config, &**strategy, settings, seed, run_index)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        check(
            check_result.holds() && check_result.runs_compared == 4,
            format!("trial {trial}: {} transcript moved at {:?}", strategy.id(), check_result.first_difference),
        )?;
    }
    Ok(format!("1000 triples over {} strategies, 4000 counterfactual runs identical", compliant.len()))
}

fn criterion_7_induced_types() -> Outcome {
    let config = RunConfig::default();
    let strategy = negotiation_strategy();
    let runs = 1_000u64;
    let mut expected = Fraction::ZERO;
    let mut observed = 0u64;
    for i in 0..runs {
        let seed = split_seed(MASTER_SEED, i);
        let settings = censored_bell::protocol::settings_for_seed(seed);
        let record = execute_run(&config, &*strategy, settings, seed, i).map_err(|e| e.to_string())?;
        let (left, right) = induced_instruction_set(&config, &*strategy, &record).map_err(|e| e.to_string())?;
        check(left == right, format!("run {i}: induced {left} vs {right}"))?;
        check(
            record.colors == (left.color(settings.left), right.color(settings.right)),
            format!("run {i}: colors disagree with induced sets"),
        )?;
        expected = expected + same_color_fraction(left);
        observed += record.same_color() as u64;
    }
    let expected = expected.to_f64() / runs as f64;
    let observed = observed as f64 / runs as f64;
    let radius = hoeffding_radius(runs, FAILURE_PROBABILITY);
    check((observed - expected).abs() <= radius, format!("observed {observed:.4} vs expected {expected:.4}"))?;
    Ok(format!("observed {observed:.4}, expected {expected:.4} +- {radius:.4}"))
}

fn criterion_8_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (i, strategy) in ["negotiation", "randomness-hog", "quantum-oracle"].iter().enumerate() {
        let mut pair = Vec::new();
        for attempt in 0..2 {
            let path = dir.path().join(format!("{i}-{attempt}.jsonl"));
            let path_str = path.to_str().unwrap();
            let out = run_cli(&[
                "run", "--strategy", strategy, "--n", "20000", "--seed", "99", "--format", "jsonl", "--output", path_str,
            ]);
            check(out.status.success(), format!("{strategy}: exit {:?}", out.status.code()))?;
            pair.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        check(pair[0] == pair[1], format!("{strategy}: outputs differ"))?;
        check(pair[0].iter().filter(|&&b| b == b'\n').count() == 20_002, format!("{strategy}: wrong line count"))?;
        outputs.push(pair.swap_remove(0));
    }
    let stdout_a = run_cli(&["run", "--n", "5000", "--seed", "5", "--format", "jsonl"]).stdout;
    let stdout_b = run_cli(&["run", "--n", "5000", "--seed", "5", "--format", "jsonl"]).stdout;
    check(stdout_a == stdout_b, "stdout streams differ")?;
    let bytes: usize = outputs.iter().map(Vec::len).sum();
    Ok(format!("3 strategies x 2 runs byte-identical ({bytes} bytes), stdout identical"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 exact bound", criterion_1_exact_bound),
        ("2 classical floor", criterion_2_classical_floor),
        ("3 quantum statistics", criterion_3_quantum_statistics),
        ("4 gap", criterion_4_gap),
        ("5 censor necessity", criterion_5_censor_necessity),
        ("6 noninterference soundness", criterion_6_noninterference),
        ("7 induced types", criterion_7_induced_types),
        ("8 determinism", criterion_8_determinism),
    ];
    // keep adversarial ids visible in the log
    let adversaries: Vec<String> = adversarial_strategy_suite().iter().map(|s| s.id().to_string()).collect();
    println!("acceptance: master seed {MASTER_SEED}, adversaries {}", adversaries.join(", "));

    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{:.2?}]", start.elapsed()),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {name}: {reason} [{:.2?}]", start.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
