//! Exact verification of the classical bound and statistics over run streams.

use std::fmt::Write as _;

use serde::Serialize;

use crate::domain::{all_instruction_sets, same_color_fraction, Color, Fraction, InstructionSet, RunRecord, Setting, SettingPair, Wing};
use crate::error::{Error, Result};
use crate::protocol::{self, RunConfig};
use crate::strategies::WingStrategy;

/// Failure probability used for confidence radii unless told otherwise.
pub const DEFAULT_FAILURE_PROBABILITY: f64 = 1e-6;

/// The classical floor, 5/9.
pub fn bell_bound() -> Fraction {
    Fraction::new(5, 9).expect("nonzero denominator")
}

pub fn one_half() -> Fraction {
    Fraction::new(1, 2).expect("nonzero denominator")
}

/// Half-width `sqrt(ln(2/delta) / 2n)` of a two-sided Hoeffding interval for
/// the mean of `n` draws in [0, 1].
pub fn hoeffding_radius(n: u64, failure_probability: f64) -> f64 {
    assert!(n > 0, "radius needs at least one sample");
    assert!(failure_probability > 0.0 && failure_probability < 1.0);
    ((2.0 / failure_probability).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PairCount {
    pub same: u64,
    pub different: u64,
}

impl PairCount {
    pub fn total(&self) -> u64 {
        self.same + self.different
    }
}

/// Same/different tallies per setting pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentStats {
    counts: [[PairCount; 3]; 3],
}

impl ExperimentStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut stats = Self::new();
        for r in records {
            stats.record(r.settings, r.colors);
        }
        stats
    }

    pub fn record(&mut self, settings: SettingPair, colors: (Color, Color)) {
        let cell = &mut self.counts[settings.left.index()][settings.right.index()];
        if colors.0 == colors.1 {
            cell.same += 1;
        } else {
            cell.different += 1;
        }
    }

    /// Associative and commutative; the empty stats are the identity.
    pub fn merge(&self, other: &ExperimentStats) -> ExperimentStats {
        let mut out = self.clone();
        for (row, other_row) in out.counts.iter_mut().zip(&other.counts) {
            for (cell, o) in row.iter_mut().zip(other_row) {
                cell.same += o.same;
                cell.different += o.different;
            }
        }
        out
    }

    pub fn count(&self, settings: SettingPair) -> PairCount {
        self.counts[settings.left.index()][settings.right.index()]
    }

    pub fn n_runs(&self) -> u64 {
        self.cells().map(|(_, c)| c.total()).sum()
    }

    pub fn same_runs(&self) -> u64 {
        self.cells().map(|(_, c)| c.same).sum()
    }

    fn cells(&self) -> impl Iterator<Item = (SettingPair, PairCount)> + '_ {
        SettingPair::all().map(|p| (p, self.count(p)))
    }

    /// Overall same-color fraction; zero for empty stats.
    pub fn overall_same(&self) -> Fraction {
        Fraction::new(self.same_runs(), self.n_runs()).unwrap_or(Fraction::ZERO)
    }

    /// `None` when no run had these settings.
    pub fn per_pair_same(&self, settings: SettingPair) -> Option<Fraction> {
        let c = self.count(settings);
        Fraction::new(c.same, c.total())
    }

    /// Same-color fraction over runs whose settings coincide.
    pub fn equal_settings_same(&self) -> Option<Fraction> {
        let (same, total) = Setting::ALL
            .iter()
            .map(|&s| self.count(SettingPair::new(s, s)))
            .fold((0, 0), |(s, t), c| (s + c.same, t + c.total()));
        Fraction::new(same, total)
    }

    pub fn unequal_settings_same(&self) -> Option<Fraction> {
        let (same, total) = self
            .cells()
            .filter(|(p, _)| !p.is_equal())
            .fold((0, 0), |(s, t), (_, c)| (s + c.same, t + c.total()));
        Fraction::new(same, total)
    }

    /// Stats with the wings' roles exchanged.
    pub fn swapped(&self) -> ExperimentStats {
        let mut out = ExperimentStats::new();
        for (p, c) in self.cells() {
            out.counts[p.right.index()][p.left.index()] = c;
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pairs: Vec<_> = self
            .cells()
            .map(|(p, c)| {
                serde_json::json!({
                    "settings": [p.left.number(), p.right.number()],
                    "same": c.same,
                    "different": c.different,
                })
            })
            .collect();
        serde_json::json!({
            "n_runs": self.n_runs(),
            "overall_same": self.overall_same(),
            "overall_same_f64": self.overall_same().to_f64(),
            "pairs": pairs,
        })
    }

    /// One row per setting pair, for external plotting.
    pub fn to_csv(&self, failure_probability: f64) -> String {
        let mut out = String::from("left,right,runs,same,same_fraction,radius\n");
        for (p, c) in self.cells() {
            let (fraction, radius) = if c.total() == 0 {
                (String::new(), String::new())
            } else {
                (
                    format!("{:.6}", c.same as f64 / c.total() as f64),
                    format!("{:.6}", hoeffding_radius(c.total(), failure_probability)),
                )
            };
            writeln!(out, "{},{},{},{},{fraction},{radius}", p.left, p.right, c.total(), c.same).unwrap();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub per_set_fractions: Vec<(String, Fraction)>,
    pub minimum: Fraction,
    pub minimizers: Vec<String>,
    pub reduction: &'static str,
}

const REDUCTION: &str = "Every censor-compliant run that matches on equal settings follows one of the \
eight instruction sets, so the long-run same-color rate is a convex combination of the eight \
per-set rates and cannot fall below their minimum.";

impl BoundReport {
    /// True iff the minimum is exactly 5/9.
    pub fn holds(&self) -> bool {
        self.minimum == bell_bound()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("instruction set  same-color fraction\n");
        for (set, f) in &self.per_set_fractions {
            writeln!(out, "{set:<16} {f}").unwrap();
        }
        writeln!(out, "minimum          {}", self.minimum).unwrap();
        writeln!(out, "minimizers       {}", self.minimizers.join(" ")).unwrap();
        writeln!(out, "{}", self.reduction).unwrap();
        out
    }
}

/// Same-color fraction of each instruction set, exactly, and their minimum.
pub fn prove_bound() -> BoundReport {
    let sets = all_instruction_sets();
    let fractions: Vec<(InstructionSet, Fraction)> = sets.iter().map(|&s| (s, same_color_fraction(s))).collect();
    let minimum = fractions.iter().map(|&(_, f)| f).min().expect("eight sets");
    let minimizers = fractions.iter().filter(|(_, f)| *f == minimum).map(|(s, _)| s.to_string()).collect();
    BoundReport {
        per_set_fractions: fractions.iter().map(|(s, f)| (s.to_string(), *f)).collect(),
        minimum,
        minimizers,
        reduction: REDUCTION,
    }
}

/// Equal settings must give equal colors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FeatureICheck {
    pub holds: bool,
    pub equal_setting_runs: u64,
    pub violations: Vec<u64>,
}

impl FeatureICheck {
    pub fn new() -> Self {
        FeatureICheck { holds: true, equal_setting_runs: 0, violations: Vec::new() }
    }

    pub fn observe(&mut self, record: &RunRecord) {
        if record.settings.is_equal() {
            self.equal_setting_runs += 1;
            if !record.same_color() {
                self.holds = false;
                self.violations.push(record.run_index);
            }
        }
    }
}

pub fn check_feature_i<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> FeatureICheck {
    let mut check = FeatureICheck::new();
    for r in records {
        check.observe(r);
    }
    check
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Hoeffding radius at this failure probability for the stats' run count.
    Hoeffding { failure_probability: f64 },
}

impl Tolerance {
    pub fn resolve(&self, n_runs: u64) -> f64 {
        match *self {
            Tolerance::Absolute(t) => t,
            Tolerance::Hoeffding { failure_probability } => hoeffding_radius(n_runs, failure_probability),
        }
    }
}

/// Ignoring settings, same and different colors are equally frequent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureIICheck {
    pub holds: bool,
    pub observed: Fraction,
    pub expected: Fraction,
    pub tolerance: f64,
}

pub fn check_feature_ii(stats: &ExperimentStats, tolerance: Tolerance) -> Result<FeatureIICheck> {
    if stats.n_runs() == 0 {
        return Err(Error::Precondition("feature (ii) needs at least one run".into()));
    }
    let tolerance = tolerance.resolve(stats.n_runs());
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let observed = stats.overall_same();
    let expected = one_half();
    Ok(FeatureIICheck {
        holds: (observed.to_f64() - expected.to_f64()).abs() <= tolerance,
        observed,
        expected,
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub center: f64,
    pub radius: f64,
}

impl Interval {
    /// Clamped to [0, 1].
    pub fn low(&self) -> f64 {
        (self.center - self.radius).max(0.0)
    }
    pub fn high(&self) -> f64 {
        (self.center + self.radius).min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub classical_runs: u64,
    pub quantum_runs: u64,
    pub classical_same: Fraction,
    pub quantum_same: Fraction,
    pub bound: Fraction,
    pub failure_probability: f64,
    pub classical_interval: Interval,
    pub quantum_interval: Interval,
    /// Intervals are disjoint with the classical one above.
    pub gap_exhibited: bool,
    pub warning: Option<String>,
}

impl GapReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, name: &str, f: Fraction, i: &Interval, n: u64| {
            writeln!(
                out,
                "{name:<10} runs {n:>9}  same {:.6}  interval [{:.6}, {:.6}]",
                f.to_f64(),
                i.low(),
                i.high()
            )
            .unwrap();
        };
        line(&mut out, "classical", self.classical_same, &self.classical_interval, self.classical_runs);
        line(&mut out, "quantum", self.quantum_same, &self.quantum_interval, self.quantum_runs);
        writeln!(out, "bound      {}  (failure probability {:e})", self.bound, self.failure_probability).unwrap();
        if let Some(w) = &self.warning {
            writeln!(out, "warning    {w}").unwrap();
        }
        let verdict = if self.gap_exhibited {
            "disjoint: no censor-compliant classical strategy reproduces the quantum data"
        } else {
            "no gap: intervals overlap"
        };
        writeln!(out, "verdict    {verdict}").unwrap();
        out
    }
}

/// Half the distance between 5/9 and 1/2; radii above this cannot separate
/// the two.
pub fn half_gap() -> f64 {
    (bell_bound() - one_half()).to_f64() / 2.0
}

/// Compares a classical experiment with the quantum oracle.
pub fn bell_gap_report(
    classical: &ExperimentStats,
    quantum: &ExperimentStats,
    failure_probability: f64,
) -> Result<GapReport> {
    if classical.n_runs() == 0 || quantum.n_runs() == 0 {
        return Err(Error::Precondition("gap report needs runs on both sides".into()));
    }
    let interval = |s: &ExperimentStats| Interval {
        center: s.overall_same().to_f64(),
        radius: hoeffding_radius(s.n_runs(), failure_probability),
    };
    let classical_interval = interval(classical);
    let quantum_interval = interval(quantum);
    let half_gap = half_gap();
    let widest = classical_interval.radius.max(quantum_interval.radius);
    let warning = (widest > half_gap).then(|| {
        format!("insufficient power: radius {widest:.4} exceeds half the 5/9 - 1/2 gap ({half_gap:.4})")
    });
    Ok(GapReport {
        classical_runs: classical.n_runs(),
        quantum_runs: quantum.n_runs(),
        classical_same: classical.overall_same(),
        quantum_same: quantum.overall_same(),
        bound: bell_bound(),
        failure_probability,
        gap_exhibited: classical_interval.low() > quantum_interval.high(),
        classical_interval,
        quantum_interval,
        warning,
    })
}

/// Replays a run and evaluates each wing's flash at all three local settings
/// with the transcript held fixed, giving the instruction set each wing
/// followed in that run.
pub fn induced_instruction_set(
    config: &RunConfig,
    strategy: &dyn WingStrategy,
    record: &RunRecord,
) -> Result<(InstructionSet, InstructionSet)> {
    if strategy.requires_censor_off() {
        return Err(Error::Precondition(format!(
            "{:?} leaks its setting, so its flashes cannot be evaluated counterfactually",
            strategy.id()
        )));
    }
    let trace = protocol::replay(config, strategy, record)?;
    let induced = |wing: Wing| {
        let slot = protocol::wing_slot(wing);
        InstructionSet::new(Setting::ALL.map(|s| strategy.flash(&trace.final_states[slot], trace.inbox(wing), s)))
    };
    Ok((induced(Wing::Left), induced(Wing::Right)))
}
