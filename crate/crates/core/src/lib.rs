//! Beam-rate prediction for mmWave downlinks under adversarial input
//! perturbation.
//!
//! The crate is organised as a pipeline:
//!
//! - [`channel`] simulates a street-canyon multipath downlink, evaluates every
//!   beam of a DFT codebook and assembles (omni pilot, best-beam rate) datasets.
//! - [`numcore`] holds the MLP regressor, exact reverse-mode gradients and Adam.
//! - [`attack`] crafts FGSM perturbations under an l-infinity budget.
//! - [`defense`] runs iterative adversarial training until the held-out
//!   adversarial error plateaus.
//! - [`harness`] orchestrates the clean / attacked / defended scenarios over
//!   repeated seeds and writes CSV/JSON reports.

pub mod attack;
pub mod channel;
pub mod defense;
pub mod error;
pub mod harness;
pub mod numcore;
pub mod rng;

pub use error::{Error, Result};
