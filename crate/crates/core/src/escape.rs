//! Prediction when the alphabet is known only through an upper bound.
//!
//! The escape predictor re-shapes its tree after every letter: each letter
//! seen so far is a leaf of the root, and one extra root son (the escape
//! vertex) holds all still-unseen letters as equiprobable leaves. With the
//! Laplace estimator this gives
//!
//! ```text
//! η(a) = (ν(a) + 1) / (t + |A₊| + 1)              if ν(a) > 0
//! η(a) = 1 / ((t + |A₊| + 1) · |A₀|)              if ν(a) = 0
//! ```
//!
//! where `A₊` is the set of seen letters and `A₀` its complement.
//!
//! Once every letter has been seen the escape vertex would be empty; from
//! then on the predictor is the plain additive rule over the whole alphabet,
//! `(ν(a) + δ) / (t + δ|A|)`, so the distribution stays normalized.

use serde::Serialize;

use crate::alphabet::{CountTable, Letter, SourceSpec};
use crate::error::{Error, Result};
use crate::estimators::AdditiveEstimator;
use crate::lab::{self, McConfig};
use crate::predictor::{Predictor, PredictorSpec, Split, Step};

#[derive(Clone, Debug, PartialEq)]
pub struct EscapePredictor {
    alphabet_size: u64,
    counts: CountTable,
    estimator: AdditiveEstimator,
}

impl EscapePredictor {
    pub fn new(alphabet_size: u64, estimator: AdditiveEstimator) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::AlphabetTooSmall(alphabet_size));
        }
        Ok(EscapePredictor { alphabet_size, counts: CountTable::new(), estimator })
    }

    pub fn laplace(alphabet_size: u64) -> Result<Self> {
        Self::new(alphabet_size, AdditiveEstimator::LAPLACE)
    }

    /// `|A₊|`, the number of distinct letters seen.
    pub fn seen_count(&self) -> u64 {
        self.counts.distinct() as u64
    }

    /// `|A₀|`, the number of letters not yet seen.
    pub fn unseen_count(&self) -> u64 {
        self.alphabet_size - self.seen_count()
    }

    pub fn seen(&self) -> impl Iterator<Item = Letter> + '_ {
        self.counts.iter().map(|(a, _)| a)
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    fn check(&self, a: Letter) -> Result<()> {
        if a.0 < self.alphabet_size {
            Ok(())
        } else {
            Err(Error::LetterOutOfRange { letter: a, size: self.alphabet_size })
        }
    }

    /// Denominator `t + δ(|A₊| + 1)` of the root estimates.
    fn root_total(&self) -> f64 {
        self.counts.total() as f64 + self.estimator.delta() * (self.seen_count() + 1) as f64
    }

    fn root_split(&self) -> Split {
        let total = self.root_total();
        let delta = self.estimator.delta();
        let mut probs: Vec<f64> = self.counts.iter().map(|(_, n)| (n as f64 + delta) / total).collect();
        probs.push(delta / total);
        Split::Probs(probs)
    }

    fn full_split(&self) -> Split {
        let t = self.counts.total();
        Split::Probs(
            (0..self.alphabet_size)
                .map(|i| self.estimator.estimate_unchecked(self.counts.get(Letter(i)), t, self.alphabet_size))
                .collect(),
        )
    }

    /// Position of an unseen letter among all unseen letters.
    fn unseen_rank(&self, a: Letter) -> u64 {
        a.0 - self.seen().take_while(|s| *s < a).count() as u64
    }

    fn unseen_at(&self, rank: u64) -> Letter {
        let mut id = rank;
        for s in self.seen() {
            if s.0 <= id {
                id += 1;
            } else {
                break;
            }
        }
        Letter(id)
    }
}

impl Predictor for EscapePredictor {
    fn predict(&self, a: Letter) -> Result<f64> {
        self.check(a)?;
        let nu = self.counts.get(a);
        let unseen = self.unseen_count();
        if unseen == 0 {
            return Ok(self.estimator.estimate_unchecked(nu, self.counts.total(), self.alphabet_size));
        }
        let delta = self.estimator.delta();
        if nu > 0 {
            Ok((nu as f64 + delta) / self.root_total())
        } else {
            Ok(delta / (self.root_total() * unseen as f64))
        }
    }

    fn update(&mut self, a: Letter) -> Result<()> {
        self.check(a)?;
        self.counts.add(a);
        Ok(())
    }

    fn absorb(&mut self, counts: &CountTable) -> Result<()> {
        for (a, n) in counts.iter() {
            self.check(a)?;
            self.counts.add_n(a, n);
        }
        Ok(())
    }

    fn observed(&self) -> u64 {
        self.counts.total()
    }

    fn alphabet_size(&self) -> Option<u64> {
        Some(self.alphabet_size)
    }

    fn supports(&self, a: Letter) -> bool {
        a.0 < self.alphabet_size
    }

    fn path_length(&self, a: Letter) -> Result<u64> {
        self.check(a)?;
        Ok(if self.counts.get(a) > 0 || self.unseen_count() == 0 { 1 } else { 2 })
    }

    fn code_path(&self, a: Letter) -> Result<Vec<Step>> {
        self.check(a)?;
        let unseen = self.unseen_count();
        if unseen == 0 {
            return Ok(vec![(self.full_split(), a.0)]);
        }
        let seen = self.seen_count();
        if self.counts.get(a) > 0 {
            let slot = self.seen().take_while(|s| *s < a).count() as u64;
            return Ok(vec![(self.root_split(), slot)]);
        }
        let mut steps = vec![(self.root_split(), seen)];
        if unseen > 1 {
            steps.push((Split::Uniform(unseen), self.unseen_rank(a)));
        }
        Ok(steps)
    }

    fn decode_path(&self, choose: &mut dyn FnMut(&Split) -> Result<u64>) -> Result<Letter> {
        let unseen = self.unseen_count();
        if unseen == 0 {
            let b = choose(&self.full_split())?;
            return if b < self.alphabet_size {
                Ok(Letter(b))
            } else {
                Err(Error::Corrupt("branch out of range".into()))
            };
        }
        let seen = self.seen_count();
        let b = choose(&self.root_split())?;
        if b < seen {
            return Ok(self.seen().nth(b as usize).expect("branch below seen count"));
        }
        if b > seen {
            return Err(Error::Corrupt("branch out of range".into()));
        }
        let rank = if unseen > 1 { choose(&Split::Uniform(unseen))? } else { 0 };
        if rank >= unseen {
            return Err(Error::Corrupt("escape rank out of range".into()));
        }
        Ok(self.unseen_at(rank))
    }

    fn predict_distribution(&self) -> Result<Vec<(Letter, f64)>> {
        (0..self.alphabet_size).map(|i| Ok((Letter(i), self.predict(Letter(i))?))).collect()
    }
}

/// One row of the escape-predictor asymptotics check.
#[derive(Clone, Debug, Serialize)]
pub struct EscapeLimitRow {
    pub t: u64,
    pub r_t: f64,
    pub stderr: f64,
    /// `t·r^t` (Laplace) or `2t·r^t` (other estimators).
    pub scaled: f64,
    pub scaled_stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeLimitTable {
    /// `min{s, |A| − 1}`.
    pub bound: f64,
    /// Multiplier applied to `t·r^t`: 1 for Laplace, 2 otherwise.
    pub scale: f64,
    pub rows: Vec<EscapeLimitRow>,
}

/// `min{s, |A| − 1}`, the limit bound on `t·r^t` for the escape predictor
/// with `s` letters of non-zero probability.
pub fn escape_limit_bound(support_size: u64, alphabet_size: u64) -> f64 {
    support_size.min(alphabet_size.saturating_sub(1)) as f64
}

/// Monte-Carlo estimates of `t·r^t` (or `2t·r^t` for the Krichevsky
/// variant) for the escape predictor, to compare with `min{s, |A| − 1}`.
pub fn escape_limit_check(
    src: &SourceSpec,
    alphabet_size: u64,
    estimator: AdditiveEstimator,
    t_grid: &[u64],
    cfg: &McConfig,
) -> Result<EscapeLimitTable> {
    let s = src.support_size().ok_or(Error::InfiniteAlphabet)? as u64;
    if let Some((a, _)) = src.support().into_iter().flatten().find(|(a, _)| a.0 >= alphabet_size) {
        return Err(Error::LetterOutOfRange { letter: a, size: alphabet_size });
    }
    let spec = PredictorSpec::Escape { alphabet_size, estimator };
    let scale = if estimator.is_laplace() { 1.0 } else { 2.0 };
    let rows = t_grid
        .iter()
        .map(|&t| {
            let est = lab::average_redundancy(&spec, src, t, cfg)?;
            let factor = scale * t as f64;
            Ok(EscapeLimitRow {
                t,
                r_t: est.mean,
                stderr: est.stderr,
                scaled: factor * est.mean,
                scaled_stderr: factor * est.stderr,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EscapeLimitTable { bound: escape_limit_bound(s, alphabet_size), scale, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::letters;
    use crate::estimators::LOG2_E;
    use proptest::prelude::*;

    fn after(size: u64, history: &[u64]) -> EscapePredictor {
        let mut p = EscapePredictor::laplace(size).unwrap();
        for a in letters(history) {
            p.update(a).unwrap();
        }
        p
    }

    #[test]
    fn formula_examples() {
        // A = {a, b, c} as ids 0, 1, 2; history "a b a".
        let p = after(3, &[0, 1, 0]);
        assert!((p.predict(Letter(0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((p.predict(Letter(1)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.predict(Letter(2)).unwrap() - 1.0 / 6.0).abs() < 1e-15);

        let p = after(2, &[0]);
        assert!((p.predict(Letter(0)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.predict(Letter(1)).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let fresh = EscapePredictor::laplace(7).unwrap();
        for (_, q) in fresh.predict_distribution().unwrap() {
            assert!((q - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn set_bookkeeping() {
        let mut p = after(3, &[0, 1, 0]);
        assert_eq!((p.seen_count(), p.unseen_count()), (2, 1));
        p.update(Letter(2)).unwrap();
        assert_eq!((p.seen_count(), p.unseen_count(), p.observed()), (3, 0, 4));

        let mut q = EscapePredictor::laplace(5).unwrap();
        q.update(Letter(3)).unwrap();
        assert_eq!(q.seen().collect::<Vec<_>>(), letters(&[3]));
        assert_eq!(q.observed(), 1);
        assert!(matches!(q.update(Letter(5)), Err(Error::LetterOutOfRange { .. })));
        assert!(matches!(q.predict(Letter(9)), Err(Error::LetterOutOfRange { .. })));
    }

    #[test]
    fn all_seen_falls_back_to_common_laplace() {
        let p = after(3, &[0, 1, 2, 0]);
        let flat = {
            let mut t = crate::tree::PredictorTree::flat(3, AdditiveEstimator::LAPLACE).unwrap();
            for a in letters(&[0, 1, 2, 0]) {
                t.update(a).unwrap();
            }
            t
        };
        for a in letters(&[0, 1, 2]) {
            assert!((p.predict(a).unwrap() - flat.predict(a).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn unseen_rank_round_trip() {
        let p = after(10, &[2, 5, 6, 9]);
        let unseen: Vec<Letter> = (0..10).map(Letter).filter(|a| p.counts.get(*a) == 0).collect();
        for (rank, a) in unseen.iter().enumerate() {
            assert_eq!(p.unseen_rank(*a), rank as u64);
            assert_eq!(p.unseen_at(rank as u64), *a);
        }
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(escape_limit_bound(1, 2), 1.0);
        assert_eq!(escape_limit_bound(2, 2), 1.0);
        assert_eq!(escape_limit_bound(3, 100), 3.0);
    }

    #[test]
    fn point_mass_limit_is_one_nat() {
        // After t copies of the only letter its prediction is (t+1)/(t+2),
        // so t·r^t = t·log₂((t+2)/(t+1)) → log₂e bits, i.e. 1 nat.
        let src = SourceSpec::finite({
            let mut p = vec![0.0; 10];
            p[4] = 1.0;
            p
        })
        .unwrap();
        let cfg = McConfig { trials: 200, seed: 1, ..McConfig::default() };
        let table = escape_limit_check(&src, 10, AdditiveEstimator::LAPLACE, &[500], &cfg).unwrap();
        let row = &table.rows[0];
        assert_eq!(table.bound, 1.0);
        let oracle = 500.0 * (502.0f64 / 501.0).log2();
        assert!((row.scaled - oracle).abs() < 1e-12, "{row:?}");
        assert!(row.scaled / LOG2_E <= table.bound);
        assert!(row.scaled > table.bound);
    }

    proptest! {
        #[test]
        fn normalized_positive_monotone(size in 2u64..30, history in prop::collection::vec(0u64..30, 0..80), delta in 0.2f64..2.0) {
            let mut p = EscapePredictor::new(size, AdditiveEstimator::new(delta).unwrap()).unwrap();
            let mut last_seen = 0;
            for id in history.into_iter().filter(|id| *id < size) {
                p.update(Letter(id)).unwrap();
                prop_assert!(p.seen_count() >= last_seen);
                last_seen = p.seen_count();
            }
            let dist = p.predict_distribution().unwrap();
            prop_assert!(dist.iter().all(|(_, q)| *q > 0.0));
            prop_assert!((dist.iter().map(|(_, q)| q).sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, q) in &dist {
                let via: f64 = p.code_path(*a).unwrap().iter().map(|(s, b)| s.prob(*b)).product();
                prop_assert!((via - q).abs() < 1e-12);
            }
        }

        #[test]
        fn single_unseen_gets_escape_mass(size in 2u64..12, extra in prop::collection::vec(0u64..12, 0..30)) {
            // See every letter but the last, then some repeats.
            let mut p = EscapePredictor::laplace(size).unwrap();
            for id in 0..size - 1 {
                p.update(Letter(id)).unwrap();
            }
            for id in extra.into_iter().filter(|id| *id < size - 1) {
                p.update(Letter(id)).unwrap();
            }
            let t = p.observed() as f64;
            let escape = 1.0 / (t + p.seen_count() as f64 + 1.0);
            prop_assert!((p.predict(Letter(size - 1)).unwrap() - escape).abs() < 1e-15);
            // Seen letters follow Laplace over |A₊| + 1 symbols.
            let sigma = p.seen_count() + 1;
            for a in p.seen().collect::<Vec<_>>() {
                let l = AdditiveEstimator::LAPLACE.estimate(p.counts.get(a), p.observed(), sigma).unwrap();
                prop_assert!((p.predict(a).unwrap() - l).abs() < 1e-15);
            }
        }
    }
}
