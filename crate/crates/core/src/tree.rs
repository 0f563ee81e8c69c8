//! Tree-structured predictors.
//!
//! A [`PredictorTree`] is a rooted tree whose leaves are marked by distinct
//! letters. Every vertex `λ` stands for the set `A_λ` of letters below it and
//! keeps the count `ν^t(A_λ)` of history letters falling in that set. The
//! next letter `a` is predicted by the product, over the vertices on the
//! root-to-`a` path, of the additive estimate of "the next letter falls in
//! this son's set given it falls in the father's set":
//!
//! ```text
//! P(a) = Π  (ν(A_son) + δ) / (ν(A_father) + δ·σ(father))
//! ```
//!
//! A root with `|A|` leaf sons is the ordinary Laplace (or Krichevsky)
//! predictor. Grouping letters under intermediate vertices lets the
//! redundancy depend on how much probability each group carries instead of
//! on the raw alphabet size; [`PredictorTree::redundancy_bound`] evaluates the
//! resulting guarantee.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::alphabet::{CountTable, Letter, SourceSpec};
use crate::error::{Error, Result};
use crate::estimators::{AdditiveEstimator, LOG2_E};
use crate::predictor::{Predictor, Split, Step};

/// Paths longer than this are multiplied in the log domain.
const LOG_DOMAIN_DEPTH: usize = 64;

/// Tree topology as nested JSON: `{"letter": id}` for leaves,
/// `{"children": [...]}` for internal vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeSpec {
    Leaf { letter: Letter },
    Internal { children: Vec<TreeSpec> },
}

impl TreeSpec {
    pub fn leaf(id: u64) -> Self {
        TreeSpec::Leaf { letter: Letter(id) }
    }

    pub fn node(children: Vec<TreeSpec>) -> Self {
        TreeSpec::Internal { children }
    }

    /// Root with one leaf per letter `0..size`.
    pub fn flat(size: u64) -> Self {
        TreeSpec::node((0..size).map(TreeSpec::leaf).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Node {
    parent: Option<usize>,
    /// Position among the parent's sons.
    slot: usize,
    children: Vec<usize>,
    letter: Option<Letter>,
    count: u64,
}

/// A rooted tree of letter groups with per-vertex counts.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorTree {
    nodes: Vec<Node>,
    leaves: BTreeMap<Letter, usize>,
    estimator: AdditiveEstimator,
}

/// One summand of the tree redundancy bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTerm {
    /// Son positions from the root to the vertex.
    pub path: Vec<usize>,
    pub sigma: u64,
    /// `p(A_λ)`.
    pub mass: f64,
    /// `log₂e · min{(σ − 1)/(t + 1), p(A_λ)}`.
    pub bits: f64,
}

/// Value and per-vertex breakdown of the tree redundancy bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub t: u64,
    pub total_bits: f64,
    pub terms: Vec<BoundTerm>,
    /// Upper-bound correction for letters dropped by truncation (countable
    /// alphabets only).
    pub remainder_bits: f64,
}

impl PredictorTree {
    pub fn from_spec(spec: &TreeSpec, estimator: AdditiveEstimator) -> Result<Self> {
        let mut tree = PredictorTree { nodes: Vec::new(), leaves: BTreeMap::new(), estimator };
        tree.push(spec, None, 0)?;
        Ok(tree)
    }

    fn push(&mut self, spec: &TreeSpec, parent: Option<usize>, slot: usize) -> Result<()> {
        let id = self.nodes.len();
        self.nodes.push(Node { parent, slot, children: Vec::new(), letter: None, count: 0 });
        match spec {
            TreeSpec::Leaf { letter } => {
                if self.leaves.insert(*letter, id).is_some() {
                    return Err(Error::InvalidTree(format!("letter {letter} marks two leaves")));
                }
                self.nodes[id].letter = Some(*letter);
            }
            TreeSpec::Internal { children } => {
                if children.is_empty() {
                    return Err(Error::InvalidTree("internal vertex without sons".into()));
                }
                for (slot, child) in children.iter().enumerate() {
                    let child_id = self.nodes.len();
                    self.nodes[id].children.push(child_id);
                    self.push(child, Some(id), slot)?;
                }
            }
        }
        Ok(())
    }

    /// A root with `alphabet_size` leaf sons: the common additive predictor.
    pub fn flat(alphabet_size: u64, estimator: AdditiveEstimator) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::AlphabetTooSmall(alphabet_size));
        }
        Self::from_spec(&TreeSpec::flat(alphabet_size), estimator)
    }

    /// A depth-two tree: one root son per group. Singleton groups are leaves
    /// of the root; larger groups get one leaf per member.
    pub fn from_partition(groups: &[Vec<Letter>], estimator: AdditiveEstimator) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for group in groups {
            if group.is_empty() {
                return Err(Error::InvalidPartition("empty group".into()));
            }
            for a in group {
                if !seen.insert(*a) {
                    return Err(Error::InvalidPartition(format!("letter {a} appears in two groups")));
                }
            }
        }
        let n = seen.len() as u64;
        if n < 2 {
            return Err(Error::AlphabetTooSmall(n));
        }
        if seen.iter().enumerate().any(|(i, a)| a.0 != i as u64) {
            return Err(Error::InvalidPartition(format!("groups do not cover the alphabet 0..{n}")));
        }
        let children = groups
            .iter()
            .map(|g| match g.as_slice() {
                [a] => TreeSpec::Leaf { letter: *a },
                many => TreeSpec::node(many.iter().map(|a| TreeSpec::Leaf { letter: *a }).collect()),
            })
            .collect();
        Self::from_spec(&TreeSpec::node(children), estimator)
    }

    pub fn to_spec(&self) -> TreeSpec {
        self.spec_at(0)
    }

    fn spec_at(&self, id: usize) -> TreeSpec {
        let node = &self.nodes[id];
        match node.letter {
            Some(letter) => TreeSpec::Leaf { letter },
            None => TreeSpec::node(node.children.iter().map(|c| self.spec_at(*c)).collect()),
        }
    }

    pub fn estimator(&self) -> AdditiveEstimator {
        self.estimator
    }

    /// Leaf letters in increasing order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.leaves.keys().copied()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    /// Count `ν^t(A_λ)` of the vertex reached by following son positions
    /// `path` from the root.
    pub fn count_at(&self, path: &[usize]) -> Option<u64> {
        let mut id = 0;
        for slot in path {
            id = *self.nodes[id].children.get(*slot)?;
        }
        Some(self.nodes[id].count)
    }

    fn leaf(&self, a: Letter) -> Result<usize> {
        self.leaves.get(&a).copied().ok_or(Error::UnknownLetter(a))
    }

    /// Vertices from the root's son down to the leaf of `a`.
    fn path_ids(&self, leaf: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut id = leaf;
        while let Some(parent) = self.nodes[id].parent {
            path.push(id);
            id = parent;
        }
        path.reverse();
        path
    }

    fn add_along_path(&mut self, leaf: usize, n: u64) {
        let mut id = Some(leaf);
        while let Some(i) = id {
            self.nodes[i].count += n;
            id = self.nodes[i].parent;
        }
    }

    /// Conditional estimate of entering `son` from its father.
    fn branch_estimate(&self, son: usize) -> Option<f64> {
        let father = &self.nodes[self.nodes[son].parent?];
        let sigma = father.children.len() as u64;
        if sigma == 1 {
            return None;
        }
        Some(self.estimator.estimate_unchecked(self.nodes[son].count, father.count, sigma))
    }

    /// Exact prediction as a fraction (Laplace only; `None` on overflow or
    /// for other estimators).
    pub fn predict_exact(&self, a: Letter) -> Result<Option<Ratio<u128>>> {
        let leaf = self.leaf(a)?;
        let mut acc = Ratio::from_integer(1u128);
        for son in self.path_ids(leaf) {
            let father = &self.nodes[self.nodes[son].parent.expect("path vertex has a father")];
            let sigma = father.children.len() as u64;
            if sigma == 1 {
                continue;
            }
            let Some(factor) = self.estimator.estimate_exact(self.nodes[son].count, father.count, sigma) else {
                return Ok(None);
            };
            let Some(next) = checked_mul(&acc, &factor) else { return Ok(None) };
            acc = next;
        }
        Ok(Some(acc))
    }

    /// Internal vertices with their son count, path and leaf letters.
    fn internal_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|i| self.nodes[*i].letter.is_none())
    }

    fn slot_path(&self, id: usize) -> Vec<usize> {
        self.path_ids(id).iter().map(|i| self.nodes[*i].slot).collect()
    }

    /// `log₂e · Σ_λ min{(σ(λ) − 1)/(t + 1), p(A_λ)}` over internal vertices,
    /// the guaranteed bound on the average redundancy after `t` letters.
    /// Leaves contribute nothing and are not listed.
    pub fn redundancy_bound(&self, src: &SourceSpec, t: u64) -> Result<BoundReport> {
        let mut mass = vec![0.0; self.nodes.len()];
        let mut covered = 0.0;
        for (a, id) in &self.leaves {
            let p = src.pmf(*a).unwrap_or(0.0);
            mass[*id] = p;
            covered += p;
        }
        if let Some(support) = src.support() {
            if let Some((a, _)) = support.iter().find(|(a, _)| !self.leaves.contains_key(a)) {
                return Err(Error::UnknownLetter(*a));
            }
        } else if 1.0 - covered > 1e-12 {
            return Err(Error::InvalidTree(format!("source puts mass {} outside the tree's letters", 1.0 - covered)));
        }
        // Sons always follow their father in the arena.
        for id in (1..self.nodes.len()).rev() {
            let parent = self.nodes[id].parent.expect("non-root vertex");
            mass[parent] += mass[id];
        }
        let terms: Vec<BoundTerm> = self
            .internal_vertices()
            .map(|id| {
                let sigma = self.nodes[id].children.len() as u64;
                let bits = LOG2_E * ((sigma - 1) as f64 / (t as f64 + 1.0)).min(mass[id]);
                BoundTerm { path: self.slot_path(id), sigma, mass: mass[id], bits }
            })
            .collect();
        Ok(BoundReport { t, total_bits: terms.iter().map(|b| b.bits).sum(), terms, remainder_bits: 0.0 })
    }
}

fn checked_mul(a: &Ratio<u128>, b: &Ratio<u128>) -> Option<Ratio<u128>> {
    // Cross-reduce before multiplying to keep the numbers small.
    let g1 = gcd(*a.numer(), *b.denom());
    let g2 = gcd(*b.numer(), *a.denom());
    let numer = (a.numer() / g1).checked_mul(b.numer() / g2)?;
    let denom = (a.denom() / g2).checked_mul(b.denom() / g1)?;
    Some(Ratio::new(numer, denom))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Predictor for PredictorTree {
    fn predict(&self, a: Letter) -> Result<f64> {
        let leaf = self.leaf(a)?;
        let path = self.path_ids(leaf);
        if path.len() > LOG_DOMAIN_DEPTH {
            return Ok(self.log2_predict(a)?.exp2());
        }
        Ok(path.iter().filter_map(|son| self.branch_estimate(*son)).product())
    }

    fn log2_predict(&self, a: Letter) -> Result<f64> {
        let leaf = self.leaf(a)?;
        Ok(self.path_ids(leaf).iter().filter_map(|son| self.branch_estimate(*son)).map(f64::log2).sum())
    }

    fn update(&mut self, a: Letter) -> Result<()> {
        let leaf = self.leaf(a)?;
        self.add_along_path(leaf, 1);
        Ok(())
    }

    fn absorb(&mut self, counts: &CountTable) -> Result<()> {
        let leaves: Vec<(usize, u64)> = counts.iter().map(|(a, n)| Ok((self.leaf(a)?, n))).collect::<Result<_>>()?;
        for (leaf, n) in leaves {
            self.add_along_path(leaf, n);
        }
        Ok(())
    }

    fn observed(&self) -> u64 {
        self.nodes[0].count
    }

    fn alphabet_size(&self) -> Option<u64> {
        Some(self.leaves.len() as u64)
    }

    fn supports(&self, a: Letter) -> bool {
        self.leaves.contains_key(&a)
    }

    fn path_length(&self, a: Letter) -> Result<u64> {
        Ok(self.path_ids(self.leaf(a)?).len() as u64)
    }

    fn code_path(&self, a: Letter) -> Result<Vec<Step>> {
        let leaf = self.leaf(a)?;
        Ok(self
            .path_ids(leaf)
            .into_iter()
            .filter_map(|son| {
                let father = &self.nodes[self.nodes[son].parent?];
                let sigma = father.children.len() as u64;
                (sigma > 1).then(|| (self.split_at(father), self.nodes[son].slot as u64))
            })
            .collect())
    }

    fn decode_path(&self, choose: &mut dyn FnMut(&Split) -> Result<u64>) -> Result<Letter> {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            if let Some(letter) = node.letter {
                return Ok(letter);
            }
            let branch = if node.children.len() == 1 {
                0
            } else {
                let split = self.split_at(node);
                let b = choose(&split)?;
                if b >= split.arity() {
                    return Err(Error::Corrupt(format!("branch {b} out of range")));
                }
                b as usize
            };
            id = node.children[branch];
        }
    }

    fn predict_distribution(&self) -> Result<Vec<(Letter, f64)>> {
        self.letters().map(|a| Ok((a, self.predict(a)?))).collect()
    }
}

impl PredictorTree {
    fn split_at(&self, father: &Node) -> Split {
        let sigma = father.children.len() as u64;
        Split::Probs(
            father
                .children
                .iter()
                .map(|c| self.estimator.estimate_unchecked(self.nodes[*c].count, father.count, sigma))
                .collect(),
        )
    }
}
