//! Self-adjusting (1+λ) evolutionary algorithm with two-rate standard bit
//! mutation, on OneMax.
//!
//! - [`point`]: bit-string genotypes and OneMax.
//! - [`mutation`]: standard bit mutation kernels and delta-space sampling.
//! - [`exact`]: exact transition probabilities of one mutation.
//! - [`controller`]: the self-adjusting rate rule and baseline policies.
//! - [`engine`]: the generation loop.
//! - [`analysis`]: exact drift, Monte Carlo verifiers and statistics.
//! - [`harness`]: sweeps, CSV/JSON output and SVG plots.

pub mod analysis;
pub mod controller;
pub mod engine;
pub mod error;
pub mod exact;
pub mod harness;
pub mod mutation;
pub mod numeric;
pub mod point;

pub use controller::{Controller, ControllerSpec, ControllerState, GenerationOutcome, Subpopulation};
pub use engine::{run_ea, EAConfig, EAState, Kernel, RunRecord, TrajectoryPoint};
pub use error::{Error, Result};
pub use exact::{exact_point_prob, exact_tail_prob, ExactDistribution};
pub use mutation::{mutate, mutate_per_bit, sample_delta, MutationDelta};
pub use point::{onemax, random_search_point, SearchPoint};
