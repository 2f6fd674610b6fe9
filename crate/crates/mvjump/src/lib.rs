//! Mean-variance portfolio choice in a jump-diffusion market, learned by
//! simulation.
//!
//! The crate bundles five pieces that fit together into one workflow:
//!
//! * [`market`]: jump-diffusion stock paths and the wealth dynamics induced by
//!   either a candidate parameter triple or an executed Gaussian policy.
//! * [`policy`]: closed forms for the entropy-regularized mean-variance
//!   equilibrium policy, its value function, and the drift test functions used
//!   in training.
//! * [`trainer`]: stochastic-approximation loop that recovers the market
//!   triple `(mu, sigma, delta)` from simulated wealth paths via martingale
//!   orthogonality losses.
//! * [`mle`]: maximum-likelihood calibration of the five jump-diffusion
//!   parameters from log returns, with a self-contained Nelder-Mead search.
//! * [`eval`] and [`data`]: Monte-Carlo performance reports with standard
//!   errors, and the CSV plumbing plus rolling calendar windows used by the
//!   backtest command.
//!
//! The `mvjump` binary wires these into `fit`, `train`, `simulate`,
//! `evaluate`, and `backtest` subcommands driven by a small INI-style config
//! file. All randomness flows from explicit 64-bit seeds through
//! [`rng::derive_stream`], so every artifact the crate writes is reproducible
//! byte for byte.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod market;
pub mod mle;
pub mod policy;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
