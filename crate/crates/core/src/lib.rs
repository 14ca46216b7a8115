//! Numerical (ε, δ) accounting for the shuffle model of differential
//! privacy.
//!
//! The crate builds discrete privacy loss distributions (PLDs) for two
//! families of shuffled mechanisms and evaluates tight δ(ε) / ε(δ) bounds,
//! including adaptive compositions via FFT convolution:
//!
//! - [`clones`]: the two-dimensional dominating pair for a general shuffled
//!   ε₀-LDP local randomiser, with an O(n²) exact builder, an O(n)
//!   Hoeffding-truncated builder, and a subsampled variant.
//! - [`krr`]: shuffled k-randomised response under a strong or weak
//!   adversary, plus the closed-form analytic baseline bound.
//! - [`accountant`]: grid discretisation (round-up, hence conservative),
//!   FFT composition, both δ integral forms, ε(δ) by bisection, and exact
//!   single-round evaluation.
//! - [`oracles`]: independent ground truth — exhaustive view enumeration
//!   for tiny k-RR instances and a Monte-Carlo hockey-stick estimator for
//!   shuffled Gaussian mechanisms.
//!
//! See the `examples/` directory for one runnable program per capability;
//! the `shuffle-acct` binary exposes the same pipelines as subcommands.

#![forbid(unsafe_code)]

pub mod accountant;
pub mod cli;
pub mod clones;
mod error;
pub mod krr;
pub mod numeric;
pub mod oracles;
pub mod pld;

pub use error::{Error, Result};
pub use pld::{Direction, DiscretePld, LossAtom};
