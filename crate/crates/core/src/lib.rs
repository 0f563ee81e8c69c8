//! Tree-structured adaptive predictors for i.i.d. sources over large and
//! countable alphabets, an arithmetic coder driven by them, and tools for
//! measuring their redundancy.
//!
//! ```
//! use treepred::{Letter, Predictor, PredictorTree, AdditiveEstimator};
//!
//! let mut p = PredictorTree::flat(3, AdditiveEstimator::LAPLACE)?;
//! for id in [0, 2, 0, 0] {
//!     p.update(Letter(id))?;
//! }
//! assert!((p.predict(Letter(0))? - 4.0 / 7.0).abs() < 1e-12);
//! # Ok::<(), treepred::Error>(())
//! ```

pub mod alphabet;
pub mod coder;
pub mod error;
pub mod escape;
pub mod estimators;
pub mod lab;
pub mod predictor;
pub mod prefix_code;
pub mod tree;

pub use alphabet::{count, letters, sample_sequence, CountTable, Letter, SourceKind, SourceSpec};
pub use coder::{decode, encode, Descriptor, EncodeStats};
pub use error::{Error, Result};
pub use escape::EscapePredictor;
pub use estimators::AdditiveEstimator;
pub use lab::McConfig;
pub use predictor::{Model, Predictor, PredictorSpec};
pub use prefix_code::{CodeRule, CodeTreePredictor, PrefixCode};
pub use tree::{PredictorTree, TreeSpec};

// The book's chapters, compiled so their code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sources.md")]
    mod sources {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/tree-predictor.md")]
    mod tree_predictor {}
    #[doc = include_str!("../../../book/src/escape.md")]
    mod escape {}
    #[doc = include_str!("../../../book/src/prefix-codes.md")]
    mod prefix_codes {}
    #[doc = include_str!("../../../book/src/coding.md")]
    mod coding {}
    #[doc = include_str!("../../../book/src/redundancy.md")]
    mod redundancy {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
