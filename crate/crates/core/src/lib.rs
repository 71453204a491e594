//! Online learning of unknown stochastic dynamical environments through
//! adaptive 1-Wasserstein ambiguity sets.
//!
//! The crate is organised around the per-step learning loop:
//!
//! * [`noise`] — subGaussian disturbance models and their closed-form tail
//!   and moment bounds.
//! * [`predictors`] — the known predictor class, mixture evaluation and the
//!   true environment used in simulation.
//! * [`ambiguity`] — history windows, empirical distributions, the radii and
//!   the composite confidence bound.
//! * [`estimator`] — regularizers, the data matrix/vector, the thresholded
//!   pseudo-inverse solve and the coefficient error bound.
//! * [`learner`] — the streaming loop tying estimator and ambiguity together.
//! * [`transport`] — exact discrete 1-Wasserstein distances, used as the
//!   verification oracle.
//! * [`robot_sim`] — the differential-drive scenario with road zones.
//! * [`verification`] — seeded Monte Carlo coverage and concentration checks.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod error;
pub mod estimator;
pub mod learner;
pub mod noise;
pub mod predictors;
pub mod robot_sim;
pub mod transport;
pub mod verification;

pub use error::{Error, Result};

/// Deterministic random stream used for every simulation in the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's seeded random stream.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
