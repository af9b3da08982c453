//! Exact event-driven simulation of the walk.
//!
//! One master clock drives the process: from state `x` the waiting time is
//! exponential with rate `sum_j x_j`, coordinate `i` fires with probability
//! `x_i / sum_j x_j`, and a fresh sample of row `i` of the navigation matrix
//! is added to `x`. Paths are right-continuous; a checkpoint reports the state
//! in force at that instant.

mod ensemble;
mod path;
mod rng;
mod stats;
mod step;

pub use ensemble::{
    run_ensemble, run_ensemble_samples, BlockExecutor, EnsembleSamples, Sequential, BLOCK_SIZE,
};
pub use path::{simulate_path, simulate_path_observed, Trajectory};
pub use rng::{splitmix64, trajectory_rng, uniform_open_closed, PathRng};
pub use stats::{CoMoments, EnsembleStats, Moments};
pub use step::{event_window_counts, step, EventRecord, WalkState, WindowCounts, TENABILITY_GUARD};
