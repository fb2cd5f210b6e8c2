//! Comparators, rollouts, statistics and the experiment driver.

mod comparator;
mod experiment;
mod rollout;
mod stats;

pub use comparator::{best_in_hindsight, brute_force_totals, comparator_for, Comparator, TIE_BREAK};
pub use experiment::{
    cost_seed, prefix_fit, run_experiment, run_seed, run_sweep, thread_pool, write_json,
    write_sweep_csv, ExperimentConfig, ExperimentOutcome, ExperimentSummary, Instance,
    InstanceSpec, LearnerSpec, Mode, SeedRun, SeedSummary, SweepConfig, SweepRow, FAILURE_BOUND,
};
pub use rollout::{rollout, rollout_with, EPISODE_CAP};
pub use stats::{
    loglog_fit, mean_se, ols, rw_bound, rw_max_expectation, rw_min_steps, LinearFit,
    RandomWalkEstimate,
};
