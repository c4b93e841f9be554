//! Exact drift, Monte Carlo verifiers for the rate-drift claims, and the
//! statistics used to aggregate experiments.

pub mod drift;
pub mod stats;
pub mod verify;

pub use drift::{exact_drift, region_bounds, DriftValue, RegionBounds};
pub use stats::{summarize, wilson_interval, MonteCarloEstimate, Summary};
pub use verify::{mc_all_worse, mc_rate_halving, mc_winner_origin, Claim, VerifierReport};
