//! Pessimistic offline assortment optimization under the multinomial logit
//! (MNL) choice model.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`model`]: MNL choice probabilities, expected revenue and its gradient.
//! - [`likelihood`]: the empirical negative log-likelihood, maximum-likelihood
//!   fitting and the likelihood-ratio confidence region.
//! - [`lp`]: the linear-programming form of the assortment problem, a dense
//!   simplex solver and a brute-force enumeration oracle.
//! - [`solver`]: the pessimistic max-min solver (alternating LP and
//!   feasible gradient descent) and the estimate-then-optimize baseline.
//! - [`diagnostics`]: Hellinger/KL distances, the IPW value estimator and the
//!   Lipschitz bound of the log-likelihood ratio.
//! - [`datagen`]: synthetic instances and offline datasets.
//! - [`metrics`]: regret and assortment accuracy.
//!
//! Item indices are zero-based throughout the API. File formats in the
//! companion crate use one-based indices with `0` meaning "no purchase".

#![no_std]
// Checks such as `!(x > 0.0)` are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod datagen;
pub mod diagnostics;
mod error;
pub mod likelihood;
pub(crate) mod linalg;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Assortment, Catalog, ChoiceDistribution, ParamSpace, ParamVector};
