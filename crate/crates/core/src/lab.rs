//! Redundancy measurements.
//!
//! The redundancy of a predictor `γ` on source `p` after `t` letters is the
//! expected divergence `r^t = E D(p ‖ γ(·|x_1…x_t))` over histories drawn
//! from `p`, in bits. It is estimated here either exactly, by enumerating
//! every history when there are at most [`McConfig::exact_limit`] of them,
//! or by Monte-Carlo over independent replicas.
//!
//! Replicas own private RNG streams (`seed`, replica index) and are merged
//! in replica order, so reports are bit-identical across thread counts.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Letter, SourceRng, SourceSpec};
use crate::error::{Error, Result};
use crate::escape::escape_limit_bound;
use crate::estimators::{AdditiveEstimator, LOG2_E};
use crate::predictor::{Model, Predictor, PredictorSpec};

/// Trials per replica. Fixed so that the replica layout, and hence the
/// output, depends only on the trial count.
const REPLICA_TRIALS: u64 = 1000;

/// Hard cap on forced exact enumeration.
const EXACT_HARD_LIMIT: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact when the history count is within `exact_limit`, else sampled.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Countable sources are cut where their tail mass drops below this.
    pub tail_eps: f64,
    pub mode: Mode,
    /// Largest `s^t` (support size to the power `t`) enumerated in auto mode.
    pub exact_limit: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { trials: 10_000, seed: 0, tail_eps: 1e-9, mode: Mode::Auto, exact_limit: 4096 }
    }
}

/// A redundancy estimate in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `√trials`; 0 in exact mode.
    pub stderr: f64,
    /// Sampled histories, or enumerated histories in exact mode.
    pub trials: u64,
    /// Bound on the error from truncating a countable source.
    pub remainder: f64,
    pub exact: bool,
}

/// `Σ p(a) log₂(p(a)/q(a))` over two pmfs indexed by letter.
pub fn divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut d = 0.0;
    for (i, &pa) in p.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let qa = q.get(i).copied().unwrap_or(0.0);
        if qa <= 0.0 {
            return Err(Error::InfiniteDivergence(Letter(i as u64)));
        }
        d += pa * (pa / qa).log2();
    }
    Ok(d)
}

/// `log₂e · (−1 + Σ μ(a)²/η(a))`, an upper bound on `D(μ ‖ η)` for any
/// pair of distributions.
pub fn chi_square_bound(mu: &[f64], eta: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (i, &m) in mu.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let e = eta.get(i).copied().unwrap_or(0.0);
        if e <= 0.0 {
            return Err(Error::InfiniteDivergence(Letter(i as u64)));
        }
        s += m * m / e;
    }
    Ok(LOG2_E * (s - 1.0))
}

/// The source's kept letters plus the error bound for what was cut.
struct Truncation {
    kept: Vec<(Letter, f64)>,
    tail: f64,
    /// `Σ_tail p(a)|c(a)|` for code trees, else 0.
    tail_length: f64,
}

fn truncation(spec: &PredictorSpec, src: &SourceSpec, tail_eps: f64) -> Result<Truncation> {
    let (kept, tail) = src.truncate(tail_eps);
    if let Some(n) = spec.build()?.alphabet_size() {
        if let Some((a, _)) = kept.iter().find(|(a, _)| a.0 >= n) {
            return Err(Error::InfiniteDivergence(*a));
        }
        if tail > 0.0 {
            return Err(Error::InfiniteDivergence(Letter(n)));
        }
    }
    let tail_length = match spec {
        PredictorSpec::Code { code, .. } if tail > 0.0 => {
            let next = kept.last().map_or(0, |(a, _)| a.0 + 1);
            code.length_sum_from(src, next, tail_eps * 1e-3)?.mean
        }
        _ => 0.0,
    };
    Ok(Truncation { kept, tail, tail_length })
}

impl Truncation {
    /// Bound on `|D − Σ_kept|` after `t` letters. A tail letter has
    /// `−log₂ q(a) ≤ |c(a)| log₂((t + 2δ)/δ)` on a binary code tree, and the
    /// tail sum is at least `P_tail log₂ P_tail`.
    fn remainder(&self, t: u64, estimator: AdditiveEstimator) -> f64 {
        if self.tail <= 0.0 {
            return 0.0;
        }
        let d = estimator.delta();
        let upper = self.tail_length * ((t as f64 + 2.0 * d) / d).log2();
        upper.max(-self.tail * self.tail.log2())
    }
}

/// `D(p ‖ γ)` for the predictor's current state, summed over `kept`.
fn divergence_kept<P: Predictor>(kept: &[(Letter, f64)], predictor: &P) -> Result<f64> {
    let mut d = 0.0;
    for &(a, p) in kept {
        if !predictor.supports(a) {
            return Err(Error::InfiniteDivergence(a));
        }
        let lq = predictor.log2_predict(a)?;
        if lq == f64::NEG_INFINITY {
            return Err(Error::InfiniteDivergence(a));
        }
        d += p * (p.log2() - lq);
    }
    Ok(d)
}

/// One-step divergence `D(p ‖ γ(·|history))` in bits, with the truncation
/// remainder for countable sources.
pub fn divergence_step<P: Predictor>(src: &SourceSpec, predictor: &P, tail_eps: f64) -> Result<(f64, f64)> {
    let (kept, tail) = src.truncate(tail_eps);
    if tail > 0.0 && predictor.alphabet_size().is_some() {
        return Err(Error::InfiniteDivergence(Letter(predictor.alphabet_size().unwrap_or(0))));
    }
    let d = divergence_kept(&kept, predictor)?;
    let remainder = if tail > 0.0 { -tail * tail.log2() } else { 0.0 };
    Ok((d, remainder))
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + delta * delta * (self.n as f64 * o.n as f64) / n as f64,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

fn replica_rng(seed: u64, replica: u64) -> SourceRng {
    let mut rng = SourceRng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs `trials` draws of `f`, returning one [`Moments`] per output slot.
fn replicate<F>(trials: u64, seed: u64, slots: usize, f: F) -> Result<Vec<Moments>>
where
    F: Fn(&mut SourceRng, &mut [f64]) -> Result<()> + Sync,
{
    let replicas = trials.div_ceil(REPLICA_TRIALS);
    let parts: Vec<Result<Vec<Moments>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let n = REPLICA_TRIALS.min(trials - r * REPLICA_TRIALS);
            let mut moments = vec![Moments::default(); slots];
            let mut out = vec![0.0; slots];
            for _ in 0..n {
                f(&mut rng, &mut out)?;
                for (m, x) in moments.iter_mut().zip(&out) {
                    m.push(*x);
                }
            }
            Ok(moments)
        })
        .collect();
    let mut total = vec![Moments::default(); slots];
    for part in parts {
        for (acc, m) in total.iter_mut().zip(part?) {
            *acc = acc.merge(m);
        }
    }
    Ok(total)
}

/// Number of length-`t` histories over `s` letters, saturating.
fn history_count(s: u64, t: u64) -> u64 {
    u32::try_from(t).ok().and_then(|t| s.checked_pow(t)).unwrap_or(u64::MAX)
}

fn use_exact(src: &SourceSpec, t: u64, cfg: &McConfig) -> Result<bool> {
    let count = src.support_size().map(|s| history_count(s as u64, t));
    match (cfg.mode, count) {
        (Mode::MonteCarlo, _) => Ok(false),
        (Mode::Auto, Some(n)) => Ok(n <= cfg.exact_limit),
        (Mode::Auto, None) => Ok(false),
        (Mode::Exact, Some(n)) if n <= EXACT_HARD_LIMIT => Ok(true),
        (Mode::Exact, _) => {
            Err(Error::Config(format!("exact mode needs a finite support with at most {EXACT_HARD_LIMIT} histories")))
        }
    }
}

/// Expected divergence by walking every history in `support^t`.
fn exact_average(initial: &Model, support: &[(Letter, f64)], t: u64) -> Result<(f64, u64)> {
    let mut stack = vec![(initial.clone(), 0u64, 1.0f64)];
    let mut sum = 0.0;
    let mut histories = 0;
    while let Some((model, depth, prob)) = stack.pop() {
        if depth == t {
            sum += prob * divergence_kept(support, &model)?;
            histories += 1;
            continue;
        }
        for &(a, p) in support {
            let mut next = model.clone();
            next.update(a)?;
            stack.push((next, depth + 1, prob * p));
        }
    }
    Ok((sum, histories))
}

/// Average redundancy `r^t` of the predictor described by `spec` on `src`.
pub fn average_redundancy(spec: &PredictorSpec, src: &SourceSpec, t: u64, cfg: &McConfig) -> Result<Estimate> {
    let trunc = truncation(spec, src, cfg.tail_eps)?;
    let initial = spec.build()?;
    let remainder = trunc.remainder(t, spec.estimator());
    if use_exact(src, t, cfg)? {
        let (mean, histories) = exact_average(&initial, &trunc.kept, t)?;
        return Ok(Estimate { mean, stderr: 0.0, trials: histories, remainder, exact: true });
    }
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let m = replicate(cfg.trials, cfg.seed, 1, |rng, out| {
        let mut model = initial.clone();
        model.absorb(&src.sample_counts(t, rng))?;
        out[0] = divergence_kept(&trunc.kept, &model)?;
        Ok(())
    })?[0];
    Ok(Estimate { mean: m.mean, stderr: m.stderr(), trials: m.n, remainder, exact: false })
}

/// `R^t` from per-step redundancies `r^1, r^2, …`.
pub fn cumulative_from_steps(r: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    r.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CumulativeRow {
    pub t: u64,
    pub r_t: f64,
    pub r_stderr: f64,
    #[serde(rename = "R_t")]
    pub cumulative: f64,
    pub cumulative_stderr: f64,
}

/// `r^t` and `R^t = t⁻¹ Σ_{i=1..t} r^i` for `t = 1..=t_max`. Exact when
/// every horizon can be enumerated, otherwise along sampled trajectories.
pub fn cumulative_redundancy(
    spec: &PredictorSpec,
    src: &SourceSpec,
    t_max: u64,
    cfg: &McConfig,
) -> Result<Vec<CumulativeRow>> {
    if t_max == 0 {
        return Err(Error::Config("t_max must be at least 1".into()));
    }
    if use_exact(src, t_max, cfg)? {
        let r =
            (1..=t_max).map(|t| average_redundancy(spec, src, t, cfg).map(|e| e.mean)).collect::<Result<Vec<_>>>()?;
        return Ok(cumulative_from_steps(&r)
            .into_iter()
            .zip(r)
            .enumerate()
            .map(|(i, (cum, r_t))| CumulativeRow {
                t: i as u64 + 1,
                r_t,
                r_stderr: 0.0,
                cumulative: cum,
                cumulative_stderr: 0.0,
            })
            .collect());
    }
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let trunc = truncation(spec, src, cfg.tail_eps)?;
    let initial = spec.build()?;
    let sampler = src.sampler();
    let n = t_max as usize;
    let m = replicate(cfg.trials, cfg.seed, 2 * n, |rng, out| {
        let mut model = initial.clone();
        let mut acc = 0.0;
        for i in 0..n {
            model.update(sampler.sample(rng))?;
            let d = divergence_kept(&trunc.kept, &model)?;
            acc += d;
            out[i] = d;
            out[n + i] = acc / (i + 1) as f64;
        }
        Ok(())
    })?;
    Ok((0..n)
        .map(|i| CumulativeRow {
            t: i as u64 + 1,
            r_t: m[i].mean,
            r_stderr: m[i].stderr(),
            cumulative: m[n + i].mean,
            cumulative_stderr: m[n + i].stderr(),
        })
        .collect())
}

/// Redundancy over a grid of sources at one horizon. The maximum is a lower
/// bound on the supremum over all sources, nothing more.
#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub t: u64,
    pub estimates: Vec<Estimate>,
    pub argmax: usize,
}

impl Sweep {
    pub fn max(&self) -> &Estimate {
        &self.estimates[self.argmax]
    }
}

pub fn worst_case_sweep(spec: &PredictorSpec, grid: &[SourceSpec], t: u64, cfg: &McConfig) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::Config("source grid is empty".into()));
    }
    let estimates = grid.iter().map(|src| average_redundancy(spec, src, t, cfg)).collect::<Result<Vec<_>>>()?;
    let argmax = (0..estimates.len())
        .max_by(|&i, &j| estimates[i].mean.total_cmp(&estimates[j].mean))
        .expect("grid is nonempty");
    Ok(Sweep { t, estimates, argmax })
}

/// Binary sources `(p, 1 − p)` for `p` in `{1/2, 1/2 − h, …}` down to
/// `min_p`, over an alphabet of two letters.
pub fn binary_grid(points: usize, min_p: f64) -> Result<Vec<SourceSpec>> {
    let points = points.max(1);
    (0..points)
        .map(|i| {
            let p = if points == 1 { 0.5 } else { 0.5 - (0.5 - min_p) * i as f64 / (points - 1) as f64 };
            SourceSpec::finite(vec![p, 1.0 - p])
        })
        .collect()
}

/// `E[p/(ϑ + 1)]` for `ϑ ~ Binomial(t, p)`, in closed form.
pub fn unseen_mass_expectation(mass: f64, t: u64) -> f64 {
    let n = t as f64 + 1.0;
    (1.0 - (1.0 - mass).powf(n)) / n
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnseenMassCell {
    pub mass: f64,
    pub t: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `min{p, 1/(t + 1)}`.
    pub bound: f64,
}

/// Monte-Carlo mean of `p/(ϑ + 1)` where `ϑ` counts hits of a set of mass
/// `p` among `t` draws.
pub fn unseen_mass_check(mass: f64, t: u64, cfg: &McConfig) -> Result<UnseenMassCell> {
    if !(0.0..=1.0).contains(&mass) {
        return Err(Error::InvalidSource(format!("mass {mass} outside [0, 1]")));
    }
    let binom = Binomial::new(t, mass).map_err(|e| Error::InvalidSource(e.to_string()))?;
    let m = replicate(cfg.trials.max(1), cfg.seed, 1, |rng, out| {
        out[0] = mass / (binom.sample(rng) as f64 + 1.0);
        Ok(())
    })?[0];
    Ok(UnseenMassCell { mass, t, mean: m.mean, stderr: m.stderr(), bound: mass.min(1.0 / (t as f64 + 1.0)) })
}

/// The analytic comparison value for `r^t`, where one applies: the tree
/// bound for Laplace trees and code trees, `(σ − 1)log₂e / 2t` for flat
/// Krichevsky, and the escape limit `min{s, |A| − 1}` divided by `t` (or
/// `2t`). The last two are asymptotic, not finite-`t` guarantees.
pub fn analytic_bound(spec: &PredictorSpec, src: &SourceSpec, t: u64, tail_eps: f64) -> Option<f64> {
    let est = spec.estimator();
    match (spec, spec.build().ok()?) {
        (_, Model::Tree(tree)) if est.is_laplace() => tree.redundancy_bound(src, t).ok().map(|b| b.total_bits),
        (PredictorSpec::Flat { alphabet_size, .. }, _) if est == AdditiveEstimator::KRICHEVSKY && t > 0 => {
            crate::estimators::krichevsky_asymptote(*alphabet_size).ok().map(|k| k / (2.0 * t as f64))
        }
        (PredictorSpec::Escape { alphabet_size, .. }, _) if t > 0 => {
            let s = src.support_size()? as u64;
            let scale = if est.is_laplace() { 1.0 } else { 2.0 };
            Some(escape_limit_bound(s, *alphabet_size) / (scale * t as f64))
        }
        (_, Model::Code(code)) if est.is_laplace() => {
            code.redundancy_bound(src, t, tail_eps).ok().map(|b| b.total_bits)
        }
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub t: u64,
    pub r_t: f64,
    pub stderr: f64,
    pub bound: Option<f64>,
    pub remainder: f64,
    #[serde(rename = "R_t")]
    pub cumulative: Option<f64>,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RedundancyReport {
    pub predictor: PredictorSpec,
    pub source: SourceSpec,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

/// `r^t` at each horizon in `t_grid`, with bounds and, if requested, `R^t`.
pub fn redundancy_report(
    spec: &PredictorSpec,
    src: &SourceSpec,
    t_grid: &[u64],
    cfg: &McConfig,
    cumulative: bool,
) -> Result<RedundancyReport> {
    let cum = match t_grid.iter().max() {
        Some(&t_max) if cumulative && t_max > 0 => Some(cumulative_redundancy(spec, src, t_max, cfg)?),
        _ => None,
    };
    let rows = t_grid
        .iter()
        .map(|&t| {
            let e = average_redundancy(spec, src, t, cfg)?;
            Ok(ReportRow {
                t,
                r_t: e.mean,
                stderr: e.stderr,
                bound: analytic_bound(spec, src, t, cfg.tail_eps),
                remainder: e.remainder,
                cumulative: cum.as_ref().and_then(|c| t.checked_sub(1).map(|i| c[i as usize].cumulative)),
                exact: e.exact,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RedundancyReport { predictor: spec.clone(), source: src.clone(), trials: cfg.trials, seed: cfg.seed, rows })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl RedundancyReport {
    pub const CSV_HEADER: &'static str = "t,r_t,stderr,bound,remainder,R_t";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ =
                writeln!(s, "{},{},{},{},{},{}", r.t, r.r_t, r.stderr, opt(r.bound), r.remainder, opt(r.cumulative));
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>8}  {:>12}  {:>10}  {:>12}  {:>10}  {:>12}\n",
            "t", "r_t", "stderr", "bound", "remainder", "R_t"
        );
        let cell = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>8}  {:>12.6e}  {:>10.3e}  {:>12}  {:>10.3e}  {:>12}{}",
                r.t,
                r.r_t,
                r.stderr,
                cell(r.bound),
                r.remainder,
                cell(r.cumulative),
                if r.exact { "  (exact)" } else { "" },
            );
        }
        s
    }
}

/// Draws a uniformly random pmf over `n` letters (normalized exponentials).
pub fn random_pmf<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::letters;
    use crate::prefix_code::{CodeRule, PrefixCode};
    use crate::tree::PredictorTree;
    use proptest::prelude::*;

    fn cfg(trials: u64, seed: u64) -> McConfig {
        McConfig { trials, seed, ..McConfig::default() }
    }

    #[test]
    fn divergence_examples() {
        assert_eq!(divergence(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        let d = divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert!((d - (0.5 + 0.5 * (2.0f64 / 3.0).log2())).abs() < 1e-15);
        assert!((d - 0.207519).abs() < 1e-6);
        let third = 1.0 / 3.0;
        let d = divergence(&[third; 3], &[4.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0]).unwrap();
        let oracle = third * ((7.0f64 / 12.0).log2() + (7.0f64 / 3.0).log2() + (7.0f64 / 6.0).log2());
        assert!((d - oracle).abs() < 1e-15, "{d}");
        assert!((d - 0.22239).abs() < 1e-5);
        assert!(matches!(divergence(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::InfiniteDivergence(Letter(1)))));
        assert_eq!(divergence(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn divergence_step_on_predictor() {
        let mut tree = PredictorTree::flat(3, AdditiveEstimator::LAPLACE).unwrap();
        for a in letters(&[0, 2, 0, 0]) {
            tree.update(a).unwrap();
        }
        let (d, rem) = divergence_step(&SourceSpec::uniform(3).unwrap(), &tree, 1e-9).unwrap();
        assert!((d - divergence(&[1.0 / 3.0; 3], &[4.0 / 7.0, 1.0 / 7.0, 2.0 / 7.0]).unwrap()).abs() < 1e-15);
        assert_eq!(rem, 0.0);
        assert!(divergence_step(&SourceSpec::geometric(0.5).unwrap(), &tree, 1e-9).is_err());
    }

    #[test]
    fn exact_mode_examples() {
        let c = McConfig::default();
        let e = average_redundancy(&PredictorSpec::laplace(2), &SourceSpec::uniform(2).unwrap(), 1, &c).unwrap();
        assert!(e.exact);
        assert_eq!(e.trials, 2);
        let oracle = 0.5 * (0.5f64 / (2.0 / 3.0)).log2() + 0.5 * (0.5f64 / (1.0 / 3.0)).log2();
        assert!((e.mean - oracle).abs() < 1e-15);
        assert!((e.mean - 0.084963).abs() < 1e-6);

        let src = SourceSpec::finite(vec![0.7, 0.2, 0.1]).unwrap();
        let e = average_redundancy(&PredictorSpec::krichevsky(3), &src, 0, &c).unwrap();
        assert!((e.mean - divergence(&[0.7, 0.2, 0.1], &[1.0 / 3.0; 3]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_count_enumeration() {
        // Independent oracle: sum over compositions with multinomial weights.
        let probs: [f64; 3] = [0.5, 0.3, 0.2];
        let t = 5u64;
        let mut oracle = 0.0;
        for n0 in 0..=t {
            for n1 in 0..=t - n0 {
                let n2 = t - n0 - n1;
                let fact = |n: u64| (1..=n).product::<u64>() as f64;
                let w = fact(t) / (fact(n0) * fact(n1) * fact(n2))
                    * probs[0].powi(n0 as i32)
                    * probs[1].powi(n1 as i32)
                    * probs[2].powi(n2 as i32);
                let q: Vec<f64> = [n0, n1, n2].iter().map(|n| (*n as f64 + 1.0) / (t as f64 + 3.0)).collect();
                oracle += w * divergence(&probs, &q).unwrap();
            }
        }
        let e = average_redundancy(
            &PredictorSpec::laplace(3),
            &SourceSpec::finite(probs.to_vec()).unwrap(),
            t,
            &McConfig::default(),
        )
        .unwrap();
        assert!(e.exact);
        assert!((e.mean - oracle).abs() < 1e-14);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_agrees() {
        let spec = PredictorSpec::laplace(3);
        let src = SourceSpec::finite(vec![0.6, 0.3, 0.1]).unwrap();
        let mc = McConfig { mode: Mode::MonteCarlo, ..cfg(20_000, 3) };
        let a = average_redundancy(&spec, &src, 6, &mc).unwrap();
        let b = average_redundancy(&spec, &src, 6, &mc).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let exact = average_redundancy(&spec, &src, 6, &McConfig::default()).unwrap();
        assert!((a.mean - exact.mean).abs() <= 4.0 * a.stderr, "{a:?} vs {exact:?}");
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| average_redundancy(&spec, &src, 6, &mc).unwrap());
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn cumulative_examples() {
        assert_eq!(cumulative_from_steps(&[0.3; 5]), vec![0.3; 5]);
        let c = 0.7;
        let r: Vec<f64> = (1..=50).map(|i| c / (i as f64 + 1.0)).collect();
        let cum = cumulative_from_steps(&r);
        for (i, value) in cum.iter().enumerate() {
            let t = i as f64 + 1.0;
            let harmonic: f64 = (1..=i + 2).map(|k| 1.0 / k as f64).sum();
            assert!((value - c * (harmonic - 1.0) / t).abs() < 1e-14);
        }

        let spec = PredictorSpec::laplace(2);
        let src = SourceSpec::uniform(2).unwrap();
        let exact = cumulative_redundancy(&spec, &src, 10, &McConfig::default()).unwrap();
        let mc =
            cumulative_redundancy(&spec, &src, 10, &McConfig { mode: Mode::MonteCarlo, ..cfg(20_000, 5) }).unwrap();
        for (e, m) in exact.iter().zip(&mc) {
            assert!((e.r_t - m.r_t).abs() <= 4.0 * m.r_stderr);
            assert!((e.cumulative - m.cumulative).abs() <= 4.0 * m.cumulative_stderr + 1e-12);
        }
        let avg: f64 = exact.iter().map(|r| r.r_t).sum::<f64>() / 10.0;
        assert!((exact[9].cumulative - avg).abs() < 1e-15);
    }

    #[test]
    fn sweep_of_one_source() {
        let spec = PredictorSpec::laplace(2);
        let src = SourceSpec::finite(vec![0.9, 0.1]).unwrap();
        let c = cfg(500, 2);
        let sweep = worst_case_sweep(&spec, std::slice::from_ref(&src), 40, &c).unwrap();
        assert_eq!(*sweep.max(), average_redundancy(&spec, &src, 40, &c).unwrap());
        assert!(worst_case_sweep(&spec, &[], 40, &c).is_err());
    }

    #[test]
    fn unseen_mass_closed_form() {
        for &p in &[0.05, 0.3, 0.7] {
            for &t in &[3, 10, 100] {
                let exact = unseen_mass_expectation(p, t);
                assert!(exact <= p.min(1.0 / (t as f64 + 1.0)) + 1e-15);
                let cell = unseen_mass_check(p, t, &cfg(20_000, 9)).unwrap();
                assert!((cell.mean - exact).abs() <= 4.0 * cell.stderr, "{cell:?} vs {exact}");
            }
        }
    }

    #[test]
    fn bounds_populated() {
        let u3 = SourceSpec::uniform(3).unwrap();
        let b = analytic_bound(&PredictorSpec::laplace(3), &u3, 4, 1e-9).unwrap();
        assert!((b - 0.5771).abs() < 1e-4);
        let geo = SourceSpec::geometric(0.5).unwrap();
        let code =
            PredictorSpec::Code { code: PrefixCode::Rule(CodeRule::Unary), estimator: AdditiveEstimator::LAPLACE };
        assert!(analytic_bound(&code, &geo, 100, 1e-9).unwrap() > 0.0);
        let esc = PredictorSpec::Escape { alphabet_size: 100, estimator: AdditiveEstimator::LAPLACE };
        assert_eq!(analytic_bound(&esc, &u3, 10, 1e-9), Some(0.3));
        let report = redundancy_report(&PredictorSpec::laplace(3), &u3, &[1, 4], &cfg(100, 1), true).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("t,r_t,stderr,bound,remainder,R_t\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn countable_remainder_is_reported() {
        let spec =
            PredictorSpec::Code { code: PrefixCode::Rule(CodeRule::Unary), estimator: AdditiveEstimator::LAPLACE };
        let e = average_redundancy(&spec, &SourceSpec::geometric(0.5).unwrap(), 50, &cfg(200, 4)).unwrap();
        assert!(!e.exact);
        assert!(e.remainder > 0.0 && e.remainder < 1e-6, "{e:?}");
        assert!(e.mean > 0.0);
    }

    proptest! {
        #[test]
        fn gibbs_and_chi_square(seed in 0u64..10_000, n in 1usize..12) {
            let mut rng = SourceRng::seed_from_u64(seed);
            let mu = random_pmf(n, &mut rng);
            let eta = random_pmf(n, &mut rng);
            let d = divergence(&mu, &eta).unwrap();
            prop_assert!(d >= -1e-12);
            prop_assert!(d <= chi_square_bound(&mu, &eta).unwrap() + 1e-12);
        }
    }
}
