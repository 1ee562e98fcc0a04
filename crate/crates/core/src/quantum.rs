//! Color source reproducing two spin-1/2 particles in the singlet state
//! measured along three coplanar directions 120 degrees apart, with one
//! detector's color labels reversed.
//!
//! Between directions at angle θ the singlet gives opposite spins with
//! probability cos²(θ/2); after the label flip that is the probability of
//! equal colors: 1 for equal settings, cos²(60°) = 1/4 otherwise. The oracle
//! samples this joint law directly and never goes through wings or censor.

use rand::Rng;

use crate::analysis::ExperimentStats;
use crate::domain::{Color, Fraction, RunRecord, SettingPair};
use crate::error::Result;
use crate::protocol::{self, Transcript, STREAM_QUANTUM};

pub const QUANTUM_ORACLE_ID: &str = "quantum-oracle";

/// Probability of equal colors for each setting pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantumJoint {
    p_same: [[Fraction; 3]; 3],
}

impl QuantumJoint {
    pub fn p_same(&self, settings: SettingPair) -> Fraction {
        self.p_same[settings.left.index()][settings.right.index()]
    }

    /// Same-color probability under uniform independent settings.
    pub fn overall_same(&self) -> Fraction {
        let ninth = Fraction::new(1, 9).expect("nonzero denominator");
        SettingPair::all().map(|p| self.p_same(p) * ninth).fold(Fraction::ZERO, |a, b| a + b)
    }
}

pub fn singlet_joint() -> QuantumJoint {
    let quarter = Fraction::new(1, 4).expect("nonzero denominator");
    let mut p_same = [[quarter; 3]; 3];
    for (i, row) in p_same.iter_mut().enumerate() {
        row[i] = Fraction::ONE;
    }
    QuantumJoint { p_same }
}

/// One draw from the joint law: left color uniform, right equal to it with
/// probability `p_same`.
pub fn sample_quantum_run<R: Rng + ?Sized>(settings: SettingPair, rng: &mut R) -> (Color, Color) {
    let left = if rng.random::<bool>() { Color::Green } else { Color::Red };
    // p_same is 1 or 1/4
    let same = settings.is_equal() || rng.random_range(0..4u8) == 0;
    (left, if same { left } else { left.flip() })
}

/// The oracle's record for run `run_index` with per-run `seed`.
pub fn quantum_run(settings: SettingPair, seed: u64, run_index: u64) -> RunRecord {
    let colors = sample_quantum_run(settings, &mut protocol::stream_rng(seed, STREAM_QUANTUM));
    RunRecord {
        run_index,
        settings,
        colors,
        transcript: Transcript::default(),
        seed,
        strategy_id: QUANTUM_ORACLE_ID.to_string(),
    }
}

/// Same referee pipeline and seed lineage as a classical experiment, so the
/// two see identical settings run by run.
pub fn quantum_experiment(n_runs: u64, master_seed: u64) -> Result<ExperimentStats> {
    quantum_experiment_streaming(n_runs, master_seed, |_| Ok(()))
}

pub fn quantum_experiment_streaming<S>(n_runs: u64, master_seed: u64, sink: S) -> Result<ExperimentStats>
where
    S: FnMut(&RunRecord) -> Result<()>,
{
    protocol::drive(n_runs, master_seed, |i, seed, settings| Ok(quantum_run(settings, seed, i)), sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Setting;
    use crate::protocol::stream_rng;

    #[test]
    fn joint_matches_both_derivations() {
        let joint = singlet_joint();
        // route 1: the feature (ii) consistency equation (1/3)*1 + (2/3)*p = 1/2
        let third = Fraction::new(1, 3).unwrap();
        let two_thirds = Fraction::new(2, 3).unwrap();
        let half = Fraction::new(1, 2).unwrap();
        let p = Fraction::new(1, 4).unwrap();
        assert_eq!(third + two_thirds * p, half);
        // route 2: cos²(120°/2)
        let cos2 = (60f64.to_radians()).cos().powi(2);
        assert!((cos2 - 0.25).abs() < 1e-12);

        for pair in SettingPair::all() {
            let expected = if pair.is_equal() { Fraction::ONE } else { p };
            assert_eq!(joint.p_same(pair), expected, "{pair}");
            assert_eq!(joint.p_same(pair), joint.p_same(pair.swapped()));
        }
        assert_eq!(joint.overall_same(), half);
    }

    #[test]
    fn equal_settings_always_match() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..1_000 {
            let (l, r) = sample_quantum_run(SettingPair::new(Setting::One, Setting::One), &mut rng);
            assert_eq!(l, r);
        }
    }

    #[test]
    fn unequal_settings_match_a_quarter_of_the_time() {
        let mut rng = stream_rng(2, 0);
        let n = 100_000;
        let pair = SettingPair::new(Setting::One, Setting::Two);
        let same = (0..n).filter(|_| {
            let (l, r) = sample_quantum_run(pair, &mut rng);
            l == r
        });
        let f = same.count() as f64 / n as f64;
        assert!((f - 0.25).abs() <= 0.01, "{f}");
    }

    #[test]
    fn left_marginal_is_uniform() {
        let mut rng = stream_rng(3, 0);
        let n = 100_000;
        let red = (0..n)
            .filter(|_| {
                let settings = protocol::draw_settings(&mut rng);
                sample_quantum_run(settings, &mut rng).0 == Color::Red
            })
            .count();
        let f = red as f64 / n as f64;
        assert!((f - 0.5).abs() <= 0.01, "{f}");
    }

    #[test]
    fn experiment_is_deterministic() {
        assert_eq!(quantum_experiment(5_000, 9).unwrap(), quantum_experiment(5_000, 9).unwrap());
        assert!(quantum_experiment(0, 9).is_err());
    }
}
