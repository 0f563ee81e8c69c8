//! Letters, i.i.d. sources and letter counts.
//!
//! Letters are dense integer ids: `a_1` in 1-based notation is id `0`,
//! `a_2` is id `1`, and so on. A [`SourceSpec`] is either an explicit
//! finite pmf, a geometric law over the countable alphabet, or an explicit
//! finite-support pmf embedded in a countable alphabet.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator used by every sampler in the crate.
pub const RNG_NAME: &str = "chacha8";

/// Tolerance on the total mass of an explicit pmf.
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// The seeded generator used throughout the crate.
pub type SourceRng = ChaCha8Rng;

/// A letter of the source alphabet, identified by its ordinal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(pub u64);

impl Letter {
    pub fn id(self) -> u64 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u64> for Letter {
    fn from(id: u64) -> Self {
        Letter(id)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a_{}", self.0)
    }
}

/// Shorthand for building letter sequences in tests and examples.
pub fn letters(ids: &[u64]) -> Vec<Letter> {
    ids.iter().copied().map(Letter).collect()
}

/// The law of an i.i.d. source.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceKind {
    /// Explicit pmf over the finite alphabet `0..probs.len()`.
    Finite(Vec<f64>),
    /// `p(i) = (1 - ratio) * ratio^i` over the countable alphabet.
    Geometric { ratio: f64 },
    /// Explicit pmf over letters `0..probs.len()`, viewed as a source on the
    /// countable alphabet (all later letters have probability zero).
    Countable(Vec<f64>),
}

/// An i.i.d. source together with the seed used when it is sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSource", into = "RawSource")]
pub struct SourceSpec {
    kind: SourceKind,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RawSource {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawSource> for SourceSpec {
    type Error = Error;

    fn try_from(raw: RawSource) -> Result<Self> {
        let kind = match raw.kind.as_str() {
            "finite" | "countable" => {
                let probs =
                    raw.probs.ok_or_else(|| Error::InvalidSource(format!("kind {:?} requires \"probs\"", raw.kind)))?;
                if raw.kind == "finite" {
                    SourceKind::Finite(probs)
                } else {
                    SourceKind::Countable(probs)
                }
            }
            "geometric" => SourceKind::Geometric {
                ratio: raw.ratio.ok_or_else(|| Error::InvalidSource("kind \"geometric\" requires \"ratio\"".into()))?,
            },
            other => return Err(Error::InvalidSource(format!("unknown source kind {other:?}"))),
        };
        SourceSpec::new(kind, raw.seed)
    }
}

impl From<SourceSpec> for RawSource {
    fn from(src: SourceSpec) -> Self {
        let seed = src.seed;
        match src.kind {
            SourceKind::Finite(probs) => RawSource { kind: "finite".into(), probs: Some(probs), ratio: None, seed },
            SourceKind::Countable(probs) => {
                RawSource { kind: "countable".into(), probs: Some(probs), ratio: None, seed }
            }
            SourceKind::Geometric { ratio } => {
                RawSource { kind: "geometric".into(), probs: None, ratio: Some(ratio), seed }
            }
        }
    }
}

fn check_pmf(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidSource("pmf is empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidSource(format!("pmf entry {p} is not a non-negative number")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PMF_SUM_TOLERANCE {
        return Err(Error::InvalidSource(format!("pmf sums to {sum}, not 1")));
    }
    Ok(())
}

impl SourceSpec {
    pub fn new(kind: SourceKind, seed: u64) -> Result<Self> {
        match &kind {
            SourceKind::Finite(probs) | SourceKind::Countable(probs) => check_pmf(probs)?,
            SourceKind::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidSource(format!("geometric ratio {ratio} is not in (0, 1)")));
                }
            }
        }
        Ok(SourceSpec { kind, seed })
    }

    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        Self::new(SourceKind::Finite(probs), 0)
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidSource("uniform source over an empty alphabet".into()));
        }
        Self::finite(vec![1.0 / size as f64; size])
    }

    pub fn geometric(ratio: f64) -> Result<Self> {
        Self::new(SourceKind::Geometric { ratio }, 0)
    }

    pub fn countable(probs: Vec<f64>) -> Result<Self> {
        Self::new(SourceKind::Countable(probs), 0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Size of the alphabet for finite sources; `None` for countable ones.
    pub fn alphabet_size(&self) -> Option<u64> {
        match &self.kind {
            SourceKind::Finite(probs) => Some(probs.len() as u64),
            _ => None,
        }
    }

    /// Letters with non-zero probability, when there are finitely many.
    pub fn support(&self) -> Option<Vec<(Letter, f64)>> {
        match &self.kind {
            SourceKind::Finite(probs) | SourceKind::Countable(probs) => {
                Some(probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, p)| (Letter(i as u64), *p)).collect())
            }
            SourceKind::Geometric { .. } => None,
        }
    }

    /// Number of letters with non-zero probability, `None` if infinite.
    pub fn support_size(&self) -> Option<usize> {
        self.support().map(|s| s.len())
    }

    /// Exact probability of a letter.
    pub fn pmf(&self, a: Letter) -> Result<f64> {
        match &self.kind {
            SourceKind::Finite(probs) => probs
                .get(a.index())
                .copied()
                .filter(|_| a.0 < probs.len() as u64)
                .ok_or(Error::LetterOutOfRange { letter: a, size: probs.len() as u64 }),
            SourceKind::Countable(probs) => Ok(probs.get(a.index()).copied().unwrap_or(0.0)),
            SourceKind::Geometric { ratio } => Ok((1.0 - ratio) * ratio.powf(a.0 as f64)),
        }
    }

    /// Probability mass of letters with id `>= from`.
    pub fn tail_mass(&self, from: u64) -> f64 {
        match &self.kind {
            SourceKind::Finite(probs) | SourceKind::Countable(probs) => probs.iter().skip(from as usize).sum(),
            SourceKind::Geometric { ratio } => ratio.powf(from as f64),
        }
    }

    /// The letters `0..n` (and their probabilities) where `n` is the first
    /// cut whose tail mass is at most `tail_eps`. Letters with probability 0
    /// are skipped. Returns the kept letters and the discarded tail mass.
    pub fn truncate(&self, tail_eps: f64) -> (Vec<(Letter, f64)>, f64) {
        if let Some(support) = self.support() {
            return (support, 0.0);
        }
        let SourceKind::Geometric { ratio } = self.kind else { unreachable!() };
        let mut kept = Vec::new();
        let mut tail = 1.0;
        let mut i = 0u64;
        while tail > tail_eps {
            let p = (1.0 - ratio) * ratio.powf(i as f64);
            kept.push((Letter(i), p));
            i += 1;
            tail = ratio.powf(i as f64);
        }
        (kept, tail)
    }

    /// A sampler drawing i.i.d. letters from this source.
    pub fn sampler(&self) -> Sampler {
        match &self.kind {
            SourceKind::Finite(probs) | SourceKind::Countable(probs) => {
                let mut acc = 0.0;
                let cdf: Vec<f64> = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                Sampler::Table { cdf, last }
            }
            SourceKind::Geometric { ratio } => Sampler::Geometric { log_ratio: ratio.ln() },
        }
    }

    /// Draws the letter counts of a length-`t` sample directly, as a
    /// sequence of conditional binomial draws. The result has the same
    /// distribution as `count(&sample)` for an i.i.d. sample of length `t`.
    pub fn sample_counts<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> CountTable {
        let last_positive = match &self.kind {
            SourceKind::Finite(probs) | SourceKind::Countable(probs) => {
                probs.iter().rposition(|p| *p > 0.0).map(|i| i as u64)
            }
            SourceKind::Geometric { .. } => None,
        };
        let mut table = CountTable::new();
        let mut remaining_n = t;
        let mut remaining_mass = 1.0;
        let mut letter = 0u64;
        while remaining_n > 0 {
            let p = self.pmf(Letter(letter)).unwrap_or(0.0);
            let k = if Some(letter) == last_positive {
                remaining_n
            } else if p <= 0.0 {
                0
            } else {
                let q = (p / remaining_mass).clamp(0.0, 1.0);
                Binomial::new(remaining_n, q).expect("probability in [0, 1]").sample(rng)
            };
            table.add_n(Letter(letter), k);
            remaining_n -= k;
            remaining_mass = match &self.kind {
                SourceKind::Geometric { ratio } => ratio.powf((letter + 1) as f64),
                _ => (remaining_mass - p).max(0.0),
            };
            letter += 1;
        }
        table
    }
}

/// Per-source sampling state. Cheap to clone.
#[derive(Clone, Debug)]
pub enum Sampler {
    Table { cdf: Vec<f64>, last: usize },
    Geometric { log_ratio: f64 },
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Letter {
        match self {
            Sampler::Table { cdf, last } => {
                let u: f64 = rng.random();
                // First index whose cumulative mass exceeds u; rounding slack
                // at the top lands on the last letter with positive mass.
                let i = cdf.partition_point(|c| *c <= u).min(*last);
                Letter(i as u64)
            }
            Sampler::Geometric { log_ratio } => {
                // Inverse transform on U in (0, 1].
                let u: f64 = 1.0 - rng.random::<f64>();
                Letter((u.ln() / log_ratio).floor() as u64)
            }
        }
    }
}

/// Draws `t` i.i.d. letters from `src`; identical output for identical
/// `(src, t, seed)`.
pub fn sample_sequence(src: &SourceSpec, t: usize, seed: u64) -> Vec<Letter> {
    let mut rng = SourceRng::seed_from_u64(seed);
    let sampler = src.sampler();
    (0..t).map(|_| sampler.sample(&mut rng)).collect()
}

/// Sparse letter counts `ν^t(a)` together with their total `t`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountTable {
    counts: BTreeMap<Letter, u64>,
    total: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, a: Letter) {
        self.add_n(a, 1);
    }

    pub fn add_n(&mut self, a: Letter, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(a).or_insert(0) += n;
        self.total += n;
    }

    pub fn get(&self, a: Letter) -> u64 {
        self.counts.get(&a).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of letters with a non-zero count.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Letters with non-zero counts, in increasing letter order.
    pub fn iter(&self) -> impl Iterator<Item = (Letter, u64)> + '_ {
        self.counts.iter().map(|(a, n)| (*a, *n))
    }
}

impl FromIterator<Letter> for CountTable {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        let mut table = CountTable::new();
        for a in iter {
            table.add(a);
        }
        table
    }
}

/// Exact occurrence counts of a sequence.
pub fn count(seq: &[Letter]) -> CountTable {
    seq.iter().copied().collect()
}
