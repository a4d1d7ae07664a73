//! Spectral cut-off estimation with residual-based early stopping.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod lazy_svd;
pub mod lowerbound;
pub mod mc;
pub mod model;
pub mod numeric;
pub mod oracles;
pub mod rng;
pub mod signals;
pub mod stopping;

pub use error::{Error, Result};

/// Guide chapters, compiled and run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/sequence-model.md")]
    pub mod sequence_model {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    pub mod estimator {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    pub mod oracles {}
    #[doc = include_str!("../../../book/src/stopping.md")]
    pub mod stopping {}
    #[doc = include_str!("../../../book/src/lazy-svd.md")]
    pub mod lazy_svd {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    pub mod monte_carlo {}
    #[doc = include_str!("../../../book/src/lower-bounds.md")]
    pub mod lower_bounds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
