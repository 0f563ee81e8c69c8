//! Prefix codes and the predictor on their code tree.
//!
//! Over a countable alphabet the first letter can only be sent with a code
//! both ends agree on in advance. Any binary prefix code `c` defines a tree
//! `Γ` (its trie) whose leaves are letters, and running the tree predictor on
//! `Γ` gives an adaptive code whose redundancy vanishes whenever the mean
//! codeword length `Σ p(a)|c(a)|` is finite.
//!
//! [`CodeTreePredictor`] never builds `Γ` in full: only vertices on the paths
//! of letters seen so far are stored, and every other vertex implicitly has
//! count zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alphabet::{CountTable, Letter, SourceSpec};
use crate::error::{Error, Result};
use crate::estimators::{AdditiveEstimator, LOG2_E};
use crate::lab::{self, McConfig};
use crate::predictor::{Predictor, PredictorSpec, Split, Step};
use crate::tree::{BoundReport, BoundTerm, TreeSpec};

/// Codewords longer than this are never materialized.
const MAX_MATERIALIZED_LEN: u64 = 1 << 20;

/// Generator rules for codes over the countable alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeRule {
    /// Letter `k` ↦ `1^k 0`: `0, 10, 110, 1110, …`.
    Unary,
    /// Letter `k` ↦ Elias γ code of `k + 1`: `⌊log₂(k+1)⌋` zeros, then
    /// `k + 1` in binary.
    EliasGamma,
    /// Letter `k` ↦ `1^(2^(k+1) − 1) 0`, so `|c(a_i)| = 2^i`. Useful only as
    /// an example of a code with infinite mean length.
    ExpUnary,
}

/// A binary prefix code, either a named rule or an explicit table whose
/// `i`-th entry is the codeword of letter `i`. Serialized as
/// `{"rule": "unary"}` or `{"table": ["0", "10", "11"]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawCode", into = "RawCode")]
pub enum PrefixCode {
    Rule(CodeRule),
    Table(Vec<String>),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum RawCode {
    Rule { rule: CodeRule },
    Table { table: Vec<String> },
}

impl From<RawCode> for PrefixCode {
    fn from(raw: RawCode) -> Self {
        match raw {
            RawCode::Rule { rule } => PrefixCode::Rule(rule),
            RawCode::Table { table } => PrefixCode::Table(table),
        }
    }
}

impl From<PrefixCode> for RawCode {
    fn from(code: PrefixCode) -> Self {
        match code {
            PrefixCode::Rule(rule) => RawCode::Rule { rule },
            PrefixCode::Table(table) => RawCode::Table { table },
        }
    }
}

impl PrefixCode {
    pub fn table<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        PrefixCode::Table(words.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for PrefixCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrefixCode::Rule(rule) => write!(f, "{rule:?}"),
            PrefixCode::Table(table) => write!(f, "table{table:?}"),
        }
    }
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
}

fn parse_bits(word: &str) -> Result<Vec<u8>> {
    word.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidCode(format!("symbol {other:?} in codeword {word:?} is not binary"))),
        })
        .collect()
}

impl PrefixCode {
    /// Size of the channel alphabet.
    pub fn arity(&self) -> u64 {
        2
    }

    /// Number of letters for tables, `None` for generator rules.
    pub fn letter_count(&self) -> Option<u64> {
        match self {
            PrefixCode::Rule(_) => None,
            PrefixCode::Table(t) => Some(t.len() as u64),
        }
    }

    /// `|c(a)|` as a float; exact for every representable length.
    pub fn length_f64(&self, a: Letter) -> Result<f64> {
        Ok(match self {
            PrefixCode::Rule(CodeRule::Unary) => a.0 as f64 + 1.0,
            PrefixCode::Rule(CodeRule::EliasGamma) => {
                let n = a.0 as u128 + 1;
                (2 * (127 - n.leading_zeros()) + 1) as f64
            }
            PrefixCode::Rule(CodeRule::ExpUnary) => 2f64.powf(a.0 as f64 + 1.0),
            PrefixCode::Table(t) => {
                t.get(a.index()).map(|w| w.chars().count() as f64).ok_or(Error::UnknownLetter(a))?
            }
        })
    }

    /// `|c(a)|`.
    pub fn codeword_len(&self, a: Letter) -> Result<u64> {
        let len = self.length_f64(a)?;
        if len > u64::MAX as f64 / 2.0 {
            return Err(Error::InvalidCode(format!("codeword of {a} is too long")));
        }
        Ok(len as u64)
    }

    /// The codeword of `a` as a sequence of 0/1 symbols.
    pub fn codeword(&self, a: Letter) -> Result<Vec<u8>> {
        match self {
            PrefixCode::Table(t) => parse_bits(t.get(a.index()).ok_or(Error::UnknownLetter(a))?),
            PrefixCode::Rule(rule) => {
                let len = self.codeword_len(a)?;
                if len > MAX_MATERIALIZED_LEN {
                    return Err(Error::InvalidCode(format!("codeword of {a} has {len} symbols")));
                }
                Ok(match rule {
                    CodeRule::Unary | CodeRule::ExpUnary => {
                        let mut w = vec![1u8; len as usize - 1];
                        w.push(0);
                        w
                    }
                    CodeRule::EliasGamma => {
                        let n = a.0 as u128 + 1;
                        let m = 127 - n.leading_zeros();
                        let mut w = vec![0u8; m as usize];
                        w.extend((0..=m).rev().map(|i| ((n >> i) & 1) as u8));
                        w
                    }
                })
            }
        }
    }

    fn cursor(&self) -> Result<Cursor> {
        Ok(match self {
            PrefixCode::Rule(CodeRule::Unary) => Cursor::Unary(0),
            PrefixCode::Rule(CodeRule::ExpUnary) => Cursor::ExpUnary(0),
            PrefixCode::Rule(CodeRule::EliasGamma) => Cursor::GammaZeros(0),
            PrefixCode::Table(_) => Cursor::Table(0),
        })
    }

    /// Partial Kraft sum and prefix-freeness over the first `max_letters`
    /// codewords (all of them for tables).
    pub fn kraft_check(&self, max_letters: u64) -> Result<KraftReport> {
        let n = self.letter_count().map_or(max_letters, |c| c.min(max_letters));
        let mut words: Vec<(Vec<u8>, Letter)> = Vec::with_capacity(n as usize);
        let mut sum = 0.0;
        for i in 0..n {
            let a = Letter(i);
            let len = self.length_f64(a)?;
            sum += 2f64.powf(-len);
            if len <= MAX_MATERIALIZED_LEN as f64 {
                words.push((self.codeword(a)?, a));
            }
        }
        if let Some(w) = words.iter().find(|(w, _)| w.is_empty()) {
            return Err(Error::InvalidCode(format!("letter {} has an empty codeword", w.1)));
        }
        // In lexicographic order a prefix sorts immediately before some word
        // it prefixes, so adjacent pairs suffice.
        words.sort();
        let violation = words.windows(2).find(|p| p[1].0.starts_with(&p[0].0)).map(|p| Violation {
            first_letter: p[0].1,
            first: bits_to_string(&p[0].0),
            second_letter: p[1].1,
            second: bits_to_string(&p[1].0),
        });
        Ok(KraftReport { letters: n, sum, ok: violation.is_none() && sum <= 1.0 + 1e-12, violation })
    }

    fn check_prefix_free(&self) -> Result<()> {
        if let PrefixCode::Table(t) = self {
            if t.is_empty() {
                return Err(Error::InvalidCode("empty code table".into()));
            }
            let report = self.kraft_check(t.len() as u64)?;
            if let Some(v) = report.violation {
                return Err(Error::PrefixViolation {
                    first_letter: v.first_letter,
                    first: v.first,
                    second_letter: v.second_letter,
                    second: v.second,
                });
            }
        }
        Ok(())
    }

    /// Mean codeword length `Σ p(a)|c(a)|` under `src`.
    ///
    /// Countable sums stop once the source's tail mass is below `tail_eps`
    /// and a ratio test on the last terms puts the remaining sum below
    /// `tail_eps` as well. If the terms stop shrinking after the tail mass is
    /// negligible, or the partial sum passes a large cap, the mean is flagged
    /// divergent. Divergence detection is heuristic.
    pub fn expected_codeword_length(&self, src: &SourceSpec, tail_eps: f64) -> Result<ExpectedLength> {
        self.length_sum_from(src, 0, tail_eps)
    }

    /// `Σ_{a ≥ from} p(a)|c(a)|`, with the same truncation rule.
    pub fn length_sum_from(&self, src: &SourceSpec, from: u64, tail_eps: f64) -> Result<ExpectedLength> {
        const PARTIAL_SUM_CAP: f64 = 1e12;
        const MAX_LETTERS: u64 = 1 << 22;
        const STALL_RUN: u32 = 32;

        if let Some(support) = src.support() {
            let mut mean = 0.0;
            for (a, p) in support.into_iter().filter(|(a, _)| a.0 >= from) {
                mean += p * self.length_f64(a)?;
            }
            return Ok(ExpectedLength {
                mean,
                remainder: 0.0,
                tail_mass: 0.0,
                letters: 0,
                divergent: !mean.is_finite(),
            });
        }
        let mut mean = 0.0;
        let mut prev_term = f64::INFINITY;
        let mut stall = 0;
        let mut i = from;
        loop {
            let a = Letter(i);
            let term = src.pmf(a)? * self.length_f64(a)?;
            mean += term;
            let tail_mass = src.tail_mass(i + 1);
            let letters = i + 1 - from;
            if !mean.is_finite() || mean > PARTIAL_SUM_CAP || letters >= MAX_LETTERS {
                return Ok(ExpectedLength { mean, remainder: f64::INFINITY, tail_mass, letters, divergent: true });
            }
            if tail_mass <= tail_eps {
                let ratio = term / prev_term;
                if term == 0.0 {
                    return Ok(ExpectedLength { mean, remainder: 0.0, tail_mass, letters, divergent: false });
                }
                if ratio < 1.0 {
                    stall = 0;
                    let remainder = term * ratio / (1.0 - ratio);
                    if remainder <= tail_eps {
                        return Ok(ExpectedLength { mean, remainder, tail_mass, letters, divergent: false });
                    }
                } else {
                    stall += 1;
                    if stall >= STALL_RUN {
                        return Ok(ExpectedLength {
                            mean,
                            remainder: f64::INFINITY,
                            tail_mass,
                            letters,
                            divergent: true,
                        });
                    }
                }
            }
            prev_term = term;
            i += 1;
        }
    }
}

/// Offending pair of a prefix-freeness check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub first_letter: Letter,
    pub first: String,
    pub second_letter: Letter,
    pub second: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KraftReport {
    pub letters: u64,
    /// `Σ 2^{−|c_i|}` over the enumerated codewords.
    pub sum: f64,
    pub ok: bool,
    pub violation: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedLength {
    /// Truncated sum `Σ p(a)|c(a)|`.
    pub mean: f64,
    /// Estimated size of the omitted part of the sum.
    pub remainder: f64,
    /// Source mass of the letters not summed.
    pub tail_mass: f64,
    /// Letters summed (0 when the support was summed exactly).
    pub letters: u64,
    pub divergent: bool,
}

/// Position in the code tree while reading a codeword symbol by symbol.
#[derive(Clone, Copy, Debug)]
enum Cursor {
    /// After `k` ones.
    Unary(u64),
    ExpUnary(u64),
    /// After `m` leading zeros.
    GammaZeros(u32),
    /// Inside the binary part: `value` read so far, `remaining` bits to go.
    GammaBits {
        value: u128,
        remaining: u32,
    },
    /// Vertex of an explicit trie.
    Table(usize),
}

enum Next {
    Inner(Cursor),
    Leaf(Letter),
}

/// Explicit trie of a code table.
#[derive(Clone, Debug, PartialEq)]
struct StaticTrie {
    children: Vec<[Option<usize>; 2]>,
    letter: Vec<Option<Letter>>,
}

impl StaticTrie {
    fn build(code: &PrefixCode) -> Result<Option<Self>> {
        let PrefixCode::Table(t) = code else { return Ok(None) };
        let mut trie = StaticTrie { children: vec![[None, None]], letter: vec![None] };
        for (i, word) in t.iter().enumerate() {
            let mut node = 0;
            for b in parse_bits(word)? {
                node = match trie.children[node][b as usize] {
                    Some(c) => c,
                    None => {
                        trie.children.push([None, None]);
                        trie.letter.push(None);
                        let c = trie.children.len() - 1;
                        trie.children[node][b as usize] = Some(c);
                        c
                    }
                };
            }
            trie.letter[node] = Some(Letter(i as u64));
        }
        Ok(Some(trie))
    }
}

impl Cursor {
    /// Which channel symbols continue towards at least one codeword.
    fn sons(&self, trie: Option<&StaticTrie>) -> [bool; 2] {
        match *self {
            Cursor::Unary(_) | Cursor::GammaZeros(_) | Cursor::GammaBits { .. } => [true, true],
            Cursor::ExpUnary(k) => [(k + 1).is_power_of_two() && k >= 1, true],
            Cursor::Table(n) => {
                let c = trie.expect("table cursor needs its trie").children[n];
                [c[0].is_some(), c[1].is_some()]
            }
        }
    }

    fn step(&self, bit: u8, trie: Option<&StaticTrie>) -> Result<Next> {
        Ok(match (*self, bit) {
            (Cursor::Unary(k), 0) => Next::Leaf(Letter(k)),
            (Cursor::Unary(k), _) => Next::Inner(Cursor::Unary(k + 1)),
            (Cursor::ExpUnary(k), 0) if (k + 1).is_power_of_two() && k >= 1 => {
                Next::Leaf(Letter((k + 1).trailing_zeros() as u64 - 1))
            }
            (Cursor::ExpUnary(_), 0) => return Err(Error::Corrupt("no codeword on this branch".into())),
            (Cursor::ExpUnary(k), _) => Next::Inner(Cursor::ExpUnary(k + 1)),
            (Cursor::GammaZeros(m), 0) if m >= 63 => return Err(Error::Corrupt("Elias gamma prefix too long".into())),
            (Cursor::GammaZeros(m), 0) => Next::Inner(Cursor::GammaZeros(m + 1)),
            (Cursor::GammaZeros(0), _) => Next::Leaf(Letter(0)),
            (Cursor::GammaZeros(m), _) => Next::Inner(Cursor::GammaBits { value: 1, remaining: m }),
            (Cursor::GammaBits { value, remaining }, b) => {
                let value = value * 2 + b as u128;
                if remaining == 1 {
                    Next::Leaf(Letter((value - 1) as u64))
                } else {
                    Next::Inner(Cursor::GammaBits { value, remaining: remaining - 1 })
                }
            }
            (Cursor::Table(n), b) => {
                let trie = trie.expect("table cursor needs its trie");
                let child =
                    trie.children[n][b as usize].ok_or_else(|| Error::Corrupt("no codeword on this branch".into()))?;
                match trie.letter[child] {
                    Some(a) => Next::Leaf(a),
                    None => Next::Inner(Cursor::Table(child)),
                }
            }
        })
    }
}

/// Count-trie vertex; child index 0 means "not materialized" (the root is
/// never anyone's child).
#[derive(Clone, Debug, PartialEq)]
struct CountNode {
    count: u64,
    children: [u32; 2],
}

/// The tree predictor on the (possibly infinite) code tree of a prefix code,
/// materializing vertices only along visited paths.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeTreePredictor {
    code: PrefixCode,
    trie: Option<StaticTrie>,
    estimator: AdditiveEstimator,
    nodes: Vec<CountNode>,
}

impl CodeTreePredictor {
    pub fn new(code: PrefixCode, estimator: AdditiveEstimator) -> Result<Self> {
        code.check_prefix_free()?;
        let trie = StaticTrie::build(&code)?;
        Ok(CodeTreePredictor { code, trie, estimator, nodes: vec![CountNode { count: 0, children: [0, 0] }] })
    }

    pub fn code(&self) -> &PrefixCode {
        &self.code
    }

    /// Number of stored vertices, including the root.
    pub fn materialized(&self) -> usize {
        self.nodes.len()
    }

    fn child(&self, node: Option<usize>, bit: u8) -> Option<usize> {
        let c = self.nodes[node?].children[bit as usize];
        (c != 0).then_some(c as usize)
    }

    fn count(&self, node: Option<usize>) -> u64 {
        node.map_or(0, |n| self.nodes[n].count)
    }

    fn add_path(&mut self, word: &[u8], n: u64) {
        let mut node = 0usize;
        self.nodes[0].count += n;
        for &b in word {
            let c = self.nodes[node].children[b as usize];
            node = if c == 0 {
                self.nodes.push(CountNode { count: 0, children: [0, 0] });
                let id = self.nodes.len() - 1;
                self.nodes[node].children[b as usize] = id as u32;
                id
            } else {
                c as usize
            };
            self.nodes[node].count += n;
        }
    }

    /// Branch decisions along the codeword of `a`, skipping single-son
    /// vertices.
    fn steps(&self, a: Letter) -> Result<Vec<Step>> {
        let word = self.code.codeword(a)?;
        let trie = self.trie.as_ref();
        let mut cursor = self.code.cursor()?;
        let mut node = Some(0usize);
        let mut steps = Vec::new();
        for (i, &b) in word.iter().enumerate() {
            let sons = cursor.sons(trie);
            if sons[0] && sons[1] {
                let total = self.count(node);
                let c0 = self.count(self.child(node, 0));
                let c1 = self.count(self.child(node, 1));
                let p0 = self.estimator.estimate_unchecked(c0, total, 2);
                let p1 = self.estimator.estimate_unchecked(c1, total, 2);
                steps.push((Split::Probs(vec![p0, p1]), b as u64));
            }
            node = self.child(node, b);
            match cursor.step(b, trie)? {
                Next::Inner(c) => cursor = c,
                Next::Leaf(_) if i + 1 == word.len() => {}
                Next::Leaf(_) => return Err(Error::InvalidCode("codeword passes through a leaf".into())),
            }
        }
        Ok(steps)
    }

    /// The tree redundancy bound on the code tree, truncated where the
    /// source's tail mass drops below `tail_eps`. Vertices on the paths of
    /// dropped letters are covered by `log₂e · Σ_tail p(a)|c(a)|`, reported
    /// as `remainder_bits` and included in `total_bits`.
    pub fn redundancy_bound(&self, src: &SourceSpec, t: u64, tail_eps: f64) -> Result<BoundReport> {
        let (kept, _) = src.truncate(tail_eps);
        // Internal vertices of the truncated trie, keyed by codeword prefix.
        let mut vertices: std::collections::BTreeMap<Vec<u8>, (u64, f64)> = Default::default();
        let trie = self.trie.as_ref();
        for (a, p) in &kept {
            let word = self.code.codeword(*a)?;
            let mut cursor = self.code.cursor()?;
            for i in 0..word.len() {
                let sigma = cursor.sons(trie).iter().filter(|s| **s).count() as u64;
                let entry = vertices.entry(word[..i].to_vec()).or_insert((sigma, 0.0));
                entry.1 += p;
                if let Next::Inner(c) = cursor.step(word[i], trie)? {
                    cursor = c;
                }
            }
        }
        let terms: Vec<BoundTerm> = vertices
            .into_iter()
            .map(|(prefix, (sigma, mass))| BoundTerm {
                path: prefix.iter().map(|b| *b as usize).collect(),
                sigma,
                mass,
                bits: LOG2_E * ((sigma - 1) as f64 / (t as f64 + 1.0)).min(mass),
            })
            .collect();
        let next = kept.last().map_or(0, |(a, _)| a.0 + 1);
        let tail =
            if src.support().is_some() { 0.0 } else { self.code.length_sum_from(src, next, tail_eps * 1e-3)?.mean };
        let remainder_bits = LOG2_E * tail;
        Ok(BoundReport {
            t,
            total_bits: terms.iter().map(|b| b.bits).sum::<f64>() + remainder_bits,
            terms,
            remainder_bits,
        })
    }
}

impl Predictor for CodeTreePredictor {
    fn predict(&self, a: Letter) -> Result<f64> {
        Ok(self.log2_predict(a)?.exp2())
    }

    fn log2_predict(&self, a: Letter) -> Result<f64> {
        Ok(self.steps(a)?.iter().map(|(s, b)| s.prob(*b).log2()).sum())
    }

    fn update(&mut self, a: Letter) -> Result<()> {
        let word = self.code.codeword(a)?;
        self.add_path(&word, 1);
        Ok(())
    }

    fn absorb(&mut self, counts: &CountTable) -> Result<()> {
        for (a, n) in counts.iter() {
            let word = self.code.codeword(a)?;
            self.add_path(&word, n);
        }
        Ok(())
    }

    fn observed(&self) -> u64 {
        self.nodes[0].count
    }

    fn alphabet_size(&self) -> Option<u64> {
        self.code.letter_count()
    }

    fn supports(&self, a: Letter) -> bool {
        self.code.letter_count().is_none_or(|n| a.0 < n)
    }

    fn path_length(&self, a: Letter) -> Result<u64> {
        self.code.codeword_len(a)
    }

    fn code_path(&self, a: Letter) -> Result<Vec<Step>> {
        self.steps(a)
    }

    fn decode_path(&self, choose: &mut dyn FnMut(&Split) -> Result<u64>) -> Result<Letter> {
        let trie = self.trie.as_ref();
        let mut cursor = self.code.cursor()?;
        let mut node = Some(0usize);
        let mut depth = 0u64;
        loop {
            let sons = cursor.sons(trie);
            let bit = match sons {
                [true, true] => {
                    let total = self.count(node);
                    let c0 = self.count(self.child(node, 0));
                    let c1 = self.count(self.child(node, 1));
                    let split = Split::Probs(vec![
                        self.estimator.estimate_unchecked(c0, total, 2),
                        self.estimator.estimate_unchecked(c1, total, 2),
                    ]);
                    match choose(&split)? {
                        b @ 0..=1 => b as u8,
                        _ => return Err(Error::Corrupt("branch out of range".into())),
                    }
                }
                [true, false] => 0,
                [false, true] => 1,
                [false, false] => return Err(Error::InvalidCode("dead end in code tree".into())),
            };
            depth += 1;
            if depth > MAX_MATERIALIZED_LEN {
                return Err(Error::Corrupt("codeword exceeds the length limit".into()));
            }
            node = self.child(node, bit);
            match cursor.step(bit, trie)? {
                Next::Inner(c) => cursor = c,
                Next::Leaf(a) => return Ok(a),
            }
        }
    }

    fn predict_distribution(&self) -> Result<Vec<(Letter, f64)>> {
        let n = self.code.letter_count().ok_or(Error::InfiniteAlphabet)?;
        (0..n).map(|i| Ok((Letter(i), self.predict(Letter(i))?))).collect()
    }
}

/// The explicit code tree of the first `letters` codewords (all of them for
/// tables), for use with [`crate::tree::PredictorTree`].
pub fn code_tree_spec(code: &PrefixCode, letters: u64) -> Result<TreeSpec> {
    let n = code.letter_count().map_or(letters, |c| c.min(letters));
    let table = PrefixCode::table(
        (0..n).map(|i| code.codeword(Letter(i)).map(|w| bits_to_string(&w))).collect::<Result<Vec<_>>>()?,
    );
    table.check_prefix_free()?;
    let trie = StaticTrie::build(&table)?.expect("table code");
    fn walk(trie: &StaticTrie, node: usize) -> TreeSpec {
        match trie.letter[node] {
            Some(letter) => TreeSpec::Leaf { letter },
            None => TreeSpec::node(trie.children[node].iter().flatten().map(|c| walk(trie, *c)).collect()),
        }
    }
    Ok(walk(&trie, 0))
}

/// One row of the vanishing-redundancy experiment.
#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub t: u64,
    pub r_t: f64,
    pub stderr: f64,
    /// Upper bound on the part of `r_t` lost to truncation.
    pub remainder: f64,
}

/// Monte-Carlo redundancy of the code-tree predictor at each `t`, for
/// checking that it decays to zero. Refuses codes whose mean length under
/// `src` diverges.
pub fn code_tree_decay(
    src: &SourceSpec,
    code: &PrefixCode,
    estimator: AdditiveEstimator,
    t_grid: &[u64],
    cfg: &McConfig,
) -> Result<Vec<DecayRow>> {
    let mean = code.expected_codeword_length(src, cfg.tail_eps)?;
    if mean.divergent {
        return Err(Error::DivergentCode { partial_sum: mean.mean, letters: mean.letters });
    }
    let spec = PredictorSpec::Code { code: code.clone(), estimator };
    t_grid
        .iter()
        .map(|&t| {
            let est = lab::average_redundancy(&spec, src, t, cfg)?;
            Ok(DecayRow { t, r_t: est.mean, stderr: est.stderr, remainder: est.remainder })
        })
        .collect()
}
