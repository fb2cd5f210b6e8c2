//! Fixed-horizon instance on which entropy-regularized OMD cannot exploit
//! sparsity.
//!
//! ```text
//!            s0 --(1/2)--> s0L --a1,a2--> sgL --> g
//!               \-(1/2)--> s0R --a1-----> sgR --> g
//!                              \-a2--> leaf_1..leaf_N (uniform) --> g
//! ```
//!
//! Every policy takes exactly 3 steps. Costs: `c_k(s0L, a1) = (1 + (-1)^k)/2`,
//! `c_k(s0L, a2) = 1/2`, `c_k(s0R, a2) = 1`. The start distribution of OMD puts
//! mass about `1/sqrt(N)` on the cheap right action, and entropy needs many
//! episodes to move it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::InstanceMeta;
use crate::error::{Result, SspError};
use crate::mdp::{CostVector, Next, SspMdp};

pub const S0: usize = 0;
pub const S0_LEFT: usize = 1;
pub const S0_RIGHT: usize = 2;
pub const SG_LEFT: usize = 3;
pub const SG_RIGHT: usize = 4;
pub const FIRST_LEAF: usize = 5;
pub const A1: usize = 0;
pub const A2: usize = 1;

#[derive(Debug, Clone)]
pub struct FailureInstance {
    pub num_states: usize,
    /// Number of leaves, `S - 5`.
    pub n: usize,
    pub mdp: Arc<SspMdp>,
}

pub fn gen_failure_mdp(num_states: usize) -> Result<FailureInstance> {
    if num_states < 6 {
        return Err(SspError::BadParam(format!(
            "failure instance needs at least 6 states, got {num_states}"
        )));
    }
    let n = num_states - 5;
    let mut b = SspMdp::builder(num_states, 2, S0);
    for a in [A1, A2] {
        b.transition(S0, a, Next::State(S0_LEFT), 0.5)
            .transition(S0, a, Next::State(S0_RIGHT), 0.5)
            .transition(S0_LEFT, a, Next::State(SG_LEFT), 1.0)
            .transition(SG_LEFT, a, Next::Goal, 1.0)
            .transition(SG_RIGHT, a, Next::Goal, 1.0);
        for leaf in 0..n {
            b.transition(FIRST_LEAF + leaf, a, Next::Goal, 1.0);
        }
    }
    b.transition(S0_RIGHT, A1, Next::State(SG_RIGHT), 1.0);
    for leaf in 0..n {
        b.transition(S0_RIGHT, A2, Next::State(FIRST_LEAF + leaf), 1.0 / n as f64);
    }
    Ok(FailureInstance {
        num_states,
        n,
        mdp: Arc::new(b.build()?),
    })
}

impl FailureInstance {
    /// Cost of episode `k` (1-based).
    pub fn cost(&self, k: usize) -> CostVector {
        let left_a1 = if k % 2 == 0 { 1.0 } else { 0.0 };
        CostVector::new(
            k,
            [
                (self.mdp.pair(S0_LEFT, A1), left_a1),
                (self.mdp.pair(S0_LEFT, A2), 0.5),
                (self.mdp.pair(S0_RIGHT, A2), 1.0),
            ],
        )
        .expect("costs are in range")
    }

    pub fn costs(&self, num_episodes: usize) -> Vec<CostVector> {
        (1..=num_episodes).map(|k| self.cost(k)).collect()
    }

    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            construction: "failure".into(),
            params: serde_json::json!({ "num_states": self.num_states }),
            seed: None,
            claimed_diameter: 3.0,
            claimed_t_star: 3.0,
            claimed_sparsity: 3,
            relaxed: false,
            warnings: Vec::new(),
        }
    }

    /// The hindsight-optimal occupancy: `a2` on the left and `a1` on the right.
    pub fn comparator_occupancy(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.mdp.num_pairs()];
        let p = |s: usize, a: usize| s * 2 + a;
        q[p(S0, A1)] = 0.5;
        q[p(S0, A2)] = 0.5;
        q[p(S0_LEFT, A2)] = 0.5;
        q[p(SG_LEFT, A1)] = 0.25;
        q[p(SG_LEFT, A2)] = 0.25;
        q[p(S0_RIGHT, A1)] = 0.5;
        q[p(SG_RIGHT, A1)] = 0.25;
        q[p(SG_RIGHT, A2)] = 0.25;
        q
    }
}

/// Closed-form entropy-OMD iterate at episode `k` on the failure instance.
/// `q(s, a)` stands for both actions where they coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEntries {
    pub s0_a: f64,
    pub s0_left_a1: f64,
    pub s0_left_a2: f64,
    pub sg_left_a: f64,
    pub s0_right_a1: f64,
    pub s0_right_a2: f64,
    pub sg_right_a: f64,
    pub leaf_a: f64,
}

impl OracleEntries {
    /// `(state, action, value)` triples covering every pair of the instance.
    pub fn pairs(&self, n: usize) -> Vec<(usize, usize, f64)> {
        let mut out = vec![
            (S0, A1, self.s0_a),
            (S0, A2, self.s0_a),
            (S0_LEFT, A1, self.s0_left_a1),
            (S0_LEFT, A2, self.s0_left_a2),
            (S0_RIGHT, A1, self.s0_right_a1),
            (S0_RIGHT, A2, self.s0_right_a2),
            (SG_LEFT, A1, self.sg_left_a),
            (SG_LEFT, A2, self.sg_left_a),
            (SG_RIGHT, A1, self.sg_right_a),
            (SG_RIGHT, A2, self.sg_right_a),
        ];
        for leaf in 0..n {
            out.push((FIRST_LEAF + leaf, A1, self.leaf_a));
            out.push((FIRST_LEAF + leaf, A2, self.leaf_a));
        }
        out
    }
}

pub fn negent_closed_form_oracle(num_states: usize, eta: f64, k: usize) -> Result<OracleEntries> {
    if num_states < 6 || k < 1 || !(eta > 0.0) {
        return Err(SspError::BadParam("need S >= 6, k >= 1, eta > 0".into()));
    }
    let n = (num_states - 5) as f64;
    let sn = n.sqrt();
    let left_a1 = if k % 2 == 0 {
        0.5 / (1.0 + (-0.5 * eta).exp())
    } else {
        0.25
    };
    // 0.5 sqrt(N) / (sqrt(N) + e^{x}) written to stay accurate when e^{x} overflows.
    let x = 0.5 * eta * (k as f64 - 1.0);
    let ln_ratio = x - sn.ln();
    let right_a2 = 0.5 / (1.0 + ln_ratio.exp());
    // a1 share: 0.5 / (1 + sqrt(N) e^{-x}), computed without cancellation.
    let right_a1 = 0.5 / (1.0 + (-ln_ratio).exp());
    Ok(OracleEntries {
        s0_a: 0.5,
        s0_left_a1: left_a1,
        s0_left_a2: 0.5 - left_a1,
        sg_left_a: 0.25,
        s0_right_a1: right_a1,
        s0_right_a2: right_a2,
        sg_right_a: right_a1 / 2.0,
        leaf_a: right_a2 / (2.0 * n),
    })
}
