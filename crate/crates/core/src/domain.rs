//! Shared vocabulary: settings, colors, instruction sets, exact fractions and
//! the per-run record.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::protocol::Transcript;

/// One of the three detector settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Setting {
    One,
    Two,
    Three,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::One, Setting::Two, Setting::Three];

    /// Zero-based position, used to index instruction sets and count tables.
    pub fn index(self) -> usize {
        self as usize
    }

    /// The label 1, 2 or 3.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_index(index: usize) -> Option<Setting> {
        Setting::ALL.get(index).copied()
    }

    pub fn from_number(number: u8) -> Option<Setting> {
        number.checked_sub(1).and_then(|i| Setting::from_index(i as usize))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// The color a wing flashes at the end of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    Red,
    Green,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::Red => Color::Green,
            Color::Green => Color::Red,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Color::Red => 'R',
            Color::Green => 'G',
        }
    }

    pub fn from_char(c: char) -> Option<Color> {
        match c {
            'R' => Some(Color::Red),
            'G' => Some(Color::Green),
            _ => None,
        }
    }

    /// Low bit of `byte`: 0 is red, 1 is green.
    pub fn from_bit(byte: u8) -> Color {
        if byte & 1 == 0 {
            Color::Red
        } else {
            Color::Green
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Left or right side of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wing {
    Left,
    Right,
}

impl Wing {
    pub fn peer(self) -> Wing {
        match self {
            Wing::Left => Wing::Right,
            Wing::Right => Wing::Left,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Wing::Left => "L",
            Wing::Right => "R",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Wing> {
        match tag {
            "L" => Some(Wing::Left),
            "R" => Some(Wing::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Wing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wing::Left => "left",
            Wing::Right => "right",
        })
    }
}

/// A color for each setting, agreed on before the settings are known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InstructionSet([Color; 3]);

impl InstructionSet {
    pub const fn new(colors: [Color; 3]) -> Self {
        InstructionSet(colors)
    }

    pub fn color(&self, setting: Setting) -> Color {
        self.0[setting.index()]
    }

    pub fn colors(&self) -> [Color; 3] {
        self.0
    }

    pub fn flipped(&self) -> Self {
        InstructionSet(self.0.map(Color::flip))
    }

    /// Relabels settings: the result maps `perm[s]` to what `self` maps `s` to.
    pub fn permuted(&self, perm: [Setting; 3]) -> Self {
        let mut out = self.0;
        for s in Setting::ALL {
            out[perm[s.index()].index()] = self.0[s.index()];
        }
        InstructionSet(out)
    }

    /// Position in [`all_instruction_sets`].
    pub fn ordinal(&self) -> usize {
        ALL_INSTRUCTION_SETS
            .iter()
            .position(|s| s == self)
            .expect("every triple is listed")
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        ALL_INSTRUCTION_SETS.get(ordinal).copied()
    }
}

impl fmt::Display for InstructionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for InstructionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let colors: Vec<Color> = s.chars().map(Color::from_char).collect::<Option<_>>().ok_or_else(
            || Error::Parse(format!("instruction set {s:?} must use only R and G")),
        )?;
        let colors: [Color; 3] = colors
            .try_into()
            .map_err(|_| Error::Parse(format!("instruction set {s:?} must have three colors")))?;
        Ok(InstructionSet(colors))
    }
}

use Color::{Green as G, Red as R};

const ALL_INSTRUCTION_SETS: [InstructionSet; 8] = [
    InstructionSet::new([R, R, G]),
    InstructionSet::new([R, G, R]),
    InstructionSet::new([G, R, R]),
    InstructionSet::new([G, G, R]),
    InstructionSet::new([G, R, G]),
    InstructionSet::new([R, G, G]),
    InstructionSet::new([R, R, R]),
    InstructionSet::new([G, G, G]),
];

/// All eight instruction sets: the six mixed ones first, then RRR and GGG.
pub fn all_instruction_sets() -> [InstructionSet; 8] {
    ALL_INSTRUCTION_SETS
}

/// Settings for both wings in one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingPair {
    pub left: Setting,
    pub right: Setting,
}

impl SettingPair {
    pub fn new(left: Setting, right: Setting) -> Self {
        SettingPair { left, right }
    }

    /// The nine pairs in row-major order (11, 12, 13, 21, ...).
    pub fn all() -> impl Iterator<Item = SettingPair> {
        Setting::ALL
            .into_iter()
            .flat_map(|l| Setting::ALL.into_iter().map(move |r| SettingPair::new(l, r)))
    }

    pub fn is_equal(&self) -> bool {
        self.left == self.right
    }

    pub fn get(&self, wing: Wing) -> Setting {
        match wing {
            Wing::Left => self.left,
            Wing::Right => self.right,
        }
    }

    pub fn with(&self, wing: Wing, setting: Setting) -> Self {
        match wing {
            Wing::Left => SettingPair::new(setting, self.right),
            Wing::Right => SettingPair::new(self.left, setting),
        }
    }

    pub fn swapped(&self) -> Self {
        SettingPair::new(self.right, self.left)
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.left, self.right)
    }
}

/// Non-negative rational number kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u64>);

impl Fraction {
    pub const ZERO: Fraction = Fraction(Ratio::new_raw(0, 1));
    pub const ONE: Fraction = Fraction(Ratio::new_raw(1, 1));

    /// Returns `None` when `denominator` is zero.
    pub fn new(numerator: u64, denominator: u64) -> Option<Fraction> {
        (denominator != 0).then(|| Fraction(Ratio::new(numerator, denominator)))
    }

    pub fn numerator(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denominator(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    /// `None` if `other` exceeds `self`.
    pub fn checked_sub(&self, other: Fraction) -> Option<Fraction> {
        (other <= *self).then(|| Fraction(self.0 - other.0))
    }
}

impl Add for Fraction {
    type Output = Fraction;
    fn add(self, rhs: Fraction) -> Fraction {
        Fraction(self.0 + rhs.0)
    }
}

impl Sub for Fraction {
    type Output = Fraction;
    /// Panics if the result would be negative.
    fn sub(self, rhs: Fraction) -> Fraction {
        self.checked_sub(rhs).expect("fraction subtraction underflow")
    }
}

impl Mul for Fraction {
    type Output = Fraction;
    fn mul(self, rhs: Fraction) -> Fraction {
        Fraction(self.0 * rhs.0)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse(format!("bad fraction {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n = n.parse().map_err(|_| bad())?;
        let d = d.parse().map_err(|_| bad())?;
        Fraction::new(n, d).ok_or_else(bad)
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fraction of the nine equally likely setting pairs on which `iset` gives
/// both wings the same color.
pub fn same_color_fraction(iset: InstructionSet) -> Fraction {
    let same = SettingPair::all()
        .filter(|p| iset.color(p.left) == iset.color(p.right))
        .count() as u64;
    Fraction::new(same, 9).expect("nonzero denominator")
}

/// Probability that independently drawn uniform settings coincide.
pub fn settings_equal_probability() -> Fraction {
    let diagonal = SettingPair::all().filter(SettingPair::is_equal).count() as u64;
    Fraction::new(diagonal, 9).expect("nonzero denominator")
}

/// Everything needed to audit and replay one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub run_index: u64,
    pub settings: SettingPair,
    pub colors: (Color, Color),
    pub transcript: Transcript,
    pub seed: u64,
    pub strategy_id: String,
}

impl RunRecord {
    pub fn same_color(&self) -> bool {
        self.colors.0 == self.colors.1
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&crate::wire::RecordWire::from(self)).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<RunRecord, Error> {
        let wire: crate::wire::RecordWire = serde_json::from_str(line)?;
        wire.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iset(s: &str) -> InstructionSet {
        s.parse().unwrap()
    }

    #[test]
    fn lists_sets_in_reference_order() {
        let names: Vec<String> = all_instruction_sets().iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["RRG", "RGR", "GRR", "GGR", "GRG", "RGG", "RRR", "GGG"]);
    }

    #[test]
    fn instruction_sets_are_exhaustive_and_distinct() {
        let sets = all_instruction_sets();
        assert_eq!(sets.len(), 8);
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                assert_ne!(a, b);
            }
        }
        // every total function Setting -> Color appears
        for bits in 0u8..8 {
            let colors = [0, 1, 2].map(|k| Color::from_bit(bits >> k));
            assert!(sets.contains(&InstructionSet::new(colors)));
        }
    }

    // Brute force over the nine pairs, independent of same_color_fraction.
    fn brute_same(iset: InstructionSet) -> (u64, u64) {
        let mut same = 0;
        let mut total = 0;
        for a in 1..=3u8 {
            for b in 1..=3u8 {
                let ca = iset.colors()[a as usize - 1];
                let cb = iset.colors()[b as usize - 1];
                total += 1;
                if ca == cb {
                    same += 1;
                }
            }
        }
        (same, total)
    }

    #[test]
    fn same_color_fraction_examples() {
        assert_eq!(same_color_fraction(iset("RRG")), Fraction::new(5, 9).unwrap());
        assert_eq!(same_color_fraction(iset("RRR")), Fraction::ONE);
        assert_eq!(same_color_fraction(iset("GGG")), Fraction::ONE);
        assert_eq!(brute_same(iset("RGR")), (5, 9));
        assert_eq!(same_color_fraction(iset("RGR")), Fraction::new(5, 9).unwrap());
    }

    #[test]
    fn same_color_fraction_matches_brute_force_everywhere() {
        for s in all_instruction_sets() {
            let (n, d) = brute_same(s);
            assert_eq!(same_color_fraction(s), Fraction::new(n, d).unwrap(), "{s}");
        }
    }

    #[test]
    fn equal_settings_probability_is_one_third() {
        let p = settings_equal_probability();
        assert_eq!(p, Fraction::new(1, 3).unwrap());
        assert_eq!(p, Fraction::new(3, 9).unwrap());
        assert_eq!(Fraction::ONE - p, Fraction::new(2, 3).unwrap());
    }

    #[test]
    fn bound_holds_exactly() {
        let five_ninths = Fraction::new(5, 9).unwrap();
        let min = all_instruction_sets().into_iter().map(same_color_fraction).min().unwrap();
        assert_eq!(min, five_ninths);
        for s in all_instruction_sets() {
            let f = same_color_fraction(s);
            assert!(f >= five_ninths && f <= Fraction::ONE);
            let constant = s.colors().iter().all(|&c| c == s.colors()[0]);
            assert_eq!(f == Fraction::ONE, constant, "{s}");
        }
    }

    #[test]
    fn invariant_under_flip_and_relabeling() {
        use Setting::*;
        let perms = [
            [One, Two, Three],
            [One, Three, Two],
            [Two, One, Three],
            [Two, Three, One],
            [Three, One, Two],
            [Three, Two, One],
        ];
        for s in all_instruction_sets() {
            assert_eq!(same_color_fraction(s.flipped()), same_color_fraction(s));
            for p in perms {
                assert_eq!(same_color_fraction(s.permuted(p)), same_color_fraction(s));
            }
        }
    }

    #[test]
    fn flip_is_an_involution() {
        for c in [Color::Red, Color::Green] {
            assert_ne!(c.flip(), c);
            assert_eq!(c.flip().flip(), c);
        }
    }

    #[test]
    fn settings_are_ordered() {
        assert!(Setting::One < Setting::Two && Setting::Two < Setting::Three);
        assert_eq!(Setting::from_number(0), None);
        assert_eq!(Setting::from_number(4), None);
        assert_eq!(Setting::from_number(2), Some(Setting::Two));
        assert_eq!(SettingPair::all().count(), 9);
    }

    #[test]
    fn fraction_parsing_and_display() {
        assert_eq!("10/18".parse::<Fraction>().unwrap().to_string(), "5/9");
        assert_eq!("9/9".parse::<Fraction>().unwrap().to_string(), "1");
        assert!("1/0".parse::<Fraction>().is_err());
        assert!(Fraction::new(1, 3).unwrap().checked_sub(Fraction::ONE).is_none());
    }

    #[test]
    fn rejects_malformed_instruction_sets() {
        assert!("RG".parse::<InstructionSet>().is_err());
        assert!("RGX".parse::<InstructionSet>().is_err());
        assert!("RGGR".parse::<InstructionSet>().is_err());
    }
}
