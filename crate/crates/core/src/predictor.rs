//! The interface shared by every sequential predictor, and a serializable
//! descriptor that rebuilds any of them.

use serde::{Deserialize, Serialize};

use crate::alphabet::{CountTable, Letter};
use crate::error::{Error, Result};
use crate::escape::EscapePredictor;
use crate::estimators::AdditiveEstimator;
use crate::prefix_code::{CodeTreePredictor, PrefixCode};
use crate::tree::{PredictorTree, TreeSpec};

/// The branch distribution at one internal node of a predictor tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Split {
    /// Explicit probabilities of each son, summing to 1.
    Probs(Vec<f64>),
    /// `n` equiprobable sons.
    Uniform(u64),
}

impl Split {
    pub fn arity(&self) -> u64 {
        match self {
            Split::Probs(p) => p.len() as u64,
            Split::Uniform(n) => *n,
        }
    }

    pub fn prob(&self, branch: u64) -> f64 {
        match self {
            Split::Probs(p) => p[branch as usize],
            Split::Uniform(n) => 1.0 / *n as f64,
        }
    }
}

/// One coded decision: a branch distribution and the branch taken.
pub type Step = (Split, u64);

/// A sequential predictor over letters whose probabilities factor along a
/// root-to-leaf path.
pub trait Predictor: Clone + Send + Sync {
    /// Predicted probability of `a` as the next letter.
    fn predict(&self, a: Letter) -> Result<f64>;

    /// `log₂` of [`Predictor::predict`], summed in the log domain.
    fn log2_predict(&self, a: Letter) -> Result<f64> {
        Ok(self.predict(a)?.log2())
    }

    /// Records one more occurrence of `a`.
    fn update(&mut self, a: Letter) -> Result<()>;

    /// Records a whole batch of occurrences. All predictors in this crate
    /// depend on the history only through its counts, so this is equivalent
    /// to updating with any ordering of the batch.
    fn absorb(&mut self, counts: &CountTable) -> Result<()> {
        for (a, n) in counts.iter() {
            for _ in 0..n {
                self.update(a)?;
            }
        }
        Ok(())
    }

    /// Number of letters observed so far.
    fn observed(&self) -> u64;

    /// Finite alphabet size, or `None` for countable alphabets.
    fn alphabet_size(&self) -> Option<u64>;

    /// Whether `a` can be predicted at all.
    fn supports(&self, a: Letter) -> bool;

    /// Number of vertices on the path to `a` below the root (the codeword
    /// length for code trees).
    fn path_length(&self, a: Letter) -> Result<u64>;

    /// The decisions an arithmetic coder makes to code `a`. Nodes with a
    /// single son are omitted.
    fn code_path(&self, a: Letter) -> Result<Vec<Step>>;

    /// Walks the tree from the root, asking `choose` for the branch taken at
    /// every decision, and returns the letter reached.
    fn decode_path(&self, choose: &mut dyn FnMut(&Split) -> Result<u64>) -> Result<Letter>;

    /// Predicted distribution over all letters of a finite alphabet.
    fn predict_distribution(&self) -> Result<Vec<(Letter, f64)>>;
}

/// A serializable description of a predictor in its initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    /// Root with `alphabet_size` leaf sons.
    Flat { alphabet_size: u64, estimator: AdditiveEstimator },
    /// Explicit tree topology.
    Tree { tree: TreeSpec, estimator: AdditiveEstimator },
    /// Seen letters at the root plus one escape subtree for unseen letters.
    Escape { alphabet_size: u64, estimator: AdditiveEstimator },
    /// The tree of a prefix code over a countable alphabet.
    Code { code: PrefixCode, estimator: AdditiveEstimator },
}

impl PredictorSpec {
    pub fn laplace(alphabet_size: u64) -> Self {
        PredictorSpec::Flat { alphabet_size, estimator: AdditiveEstimator::LAPLACE }
    }

    pub fn krichevsky(alphabet_size: u64) -> Self {
        PredictorSpec::Flat { alphabet_size, estimator: AdditiveEstimator::KRICHEVSKY }
    }

    pub fn estimator(&self) -> AdditiveEstimator {
        match self {
            PredictorSpec::Flat { estimator, .. }
            | PredictorSpec::Tree { estimator, .. }
            | PredictorSpec::Escape { estimator, .. }
            | PredictorSpec::Code { estimator, .. } => *estimator,
        }
    }

    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            PredictorSpec::Flat { alphabet_size, estimator } => {
                Model::Tree(PredictorTree::flat(*alphabet_size, *estimator)?)
            }
            PredictorSpec::Tree { tree, estimator } => Model::Tree(PredictorTree::from_spec(tree, *estimator)?),
            PredictorSpec::Escape { alphabet_size, estimator } => {
                Model::Escape(EscapePredictor::new(*alphabet_size, *estimator)?)
            }
            PredictorSpec::Code { code, estimator } => Model::Code(CodeTreePredictor::new(code.clone(), *estimator)?),
        })
    }

    /// Parses a CLI-style predictor name: `laplace`, `krichevsky`,
    /// `additive:<δ>` (flat trees), `escape`, `escape-kt`.
    pub fn from_name(name: &str, alphabet_size: u64) -> Result<Self> {
        match name {
            "escape" => Ok(PredictorSpec::Escape { alphabet_size, estimator: AdditiveEstimator::LAPLACE }),
            "escape-kt" => Ok(PredictorSpec::Escape { alphabet_size, estimator: AdditiveEstimator::KRICHEVSKY }),
            other => Ok(PredictorSpec::Flat {
                alphabet_size,
                estimator: other.parse().map_err(|_| Error::Config(format!("unknown predictor {other:?}")))?,
            }),
        }
    }
}

/// Any predictor built from a [`PredictorSpec`].
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Tree(PredictorTree),
    Escape(EscapePredictor),
    Code(CodeTreePredictor),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            Model::Tree($m) => $body,
            Model::Escape($m) => $body,
            Model::Code($m) => $body,
        }
    };
}

impl Predictor for Model {
    fn predict(&self, a: Letter) -> Result<f64> {
        dispatch!(self, m => m.predict(a))
    }
    fn log2_predict(&self, a: Letter) -> Result<f64> {
        dispatch!(self, m => m.log2_predict(a))
    }
    fn update(&mut self, a: Letter) -> Result<()> {
        dispatch!(self, m => m.update(a))
    }
    fn absorb(&mut self, counts: &CountTable) -> Result<()> {
        dispatch!(self, m => m.absorb(counts))
    }
    fn observed(&self) -> u64 {
        dispatch!(self, m => m.observed())
    }
    fn alphabet_size(&self) -> Option<u64> {
        dispatch!(self, m => m.alphabet_size())
    }
    fn supports(&self, a: Letter) -> bool {
        dispatch!(self, m => m.supports(a))
    }
    fn path_length(&self, a: Letter) -> Result<u64> {
        dispatch!(self, m => m.path_length(a))
    }
    fn code_path(&self, a: Letter) -> Result<Vec<Step>> {
        dispatch!(self, m => m.code_path(a))
    }
    fn decode_path(&self, choose: &mut dyn FnMut(&Split) -> Result<u64>) -> Result<Letter> {
        dispatch!(self, m => m.decode_path(choose))
    }
    fn predict_distribution(&self) -> Result<Vec<(Letter, f64)>> {
        dispatch!(self, m => m.predict_distribution())
    }
}
