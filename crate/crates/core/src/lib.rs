//! Online mirror descent over occupancy measures for adversarial stochastic
//! shortest path (SSP) problems with known transitions.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: SSP environments, hitting times, the fast policy, occupancy
//!   measures and flow-constraint checks.
//! - [`regularizers`]: the `l_r`-norm family `psi_p` and negative entropy.
//! - [`omd`]: the closed-form mirror step and the Bregman projection onto the
//!   occupancy polytope, solved in the Lagrangian dual.
//! - [`learners`]: tuned OMD, the restart-based sparsity-agnostic learner and
//!   the parameter-free meta-learner.
//! - [`instances`]: hard instances and their cost processes.
//! - [`harness`]: comparators, rollouts, experiments and CSV traces.

pub mod error;
pub mod harness;
pub mod instances;
pub mod learners;
pub mod mdp;
pub mod omd;
pub mod regularizers;
pub mod rng;
pub mod trace;

pub use error::{Result, SspError};
pub use mdp::{CostVector, Next, OccupancyMeasure, Policy, SspMdp};
pub use omd::{DualVariables, OmdEngine, ProjectionReport, SolverConfig};
pub use regularizers::Regularizer;
pub use trace::{RegretTrace, TraceRecord};

