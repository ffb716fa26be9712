//! Desk-scale emulation of a spiking reinforcement-learning agent together
//! with the machinery to meta-optimize its learning behavior.
//!
//! The crate is organized bottom-up:
//!
//! - [`env`]: task families (random MDPs, two-armed Bernoulli bandits) and
//!   score normalization against random/optimal references.
//! - [`baselines`]: exact Value Iteration and a Gittins-index bandit policy.
//! - [`emulator`]: the spiking agent itself: quantized synapses, first-spike
//!   action selection, periodic weight rescaling, trial execution.
//! - [`plasticity`]: synaptic update rules (one-step TD, TD with eligibility
//!   traces, and a small-MLP learned rule).
//! - [`outer`]: the outer optimization loop (cross-entropy, evolution
//!   strategies, simulated annealing, numerical gradient ascent) over
//!   hyperparameter vectors.
//! - [`analysis`]: variance-based input importance, update-curve extraction,
//!   and transfer comparisons for learned rules.
//! - [`config`]: JSON experiment configuration shared with the CLI.
//!
//! Every random decision flows through [`seed`], which derives independent
//! ChaCha streams from a master seed and integer coordinates, so results are
//! bit-reproducible regardless of thread count or scheduling.

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod emulator;
pub mod env;
pub mod error;
pub mod outer;
pub mod plasticity;
pub mod seed;

pub use error::{Error, Result};
