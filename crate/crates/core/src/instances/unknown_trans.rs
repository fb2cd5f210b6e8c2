//! Lower-bound family for unknown transitions with a single unit-cost pair.
//!
//! With `S >= 3` the start state sends every action uniformly to one of the
//! `S - 2` arm states. In an arm state `s` every action reaches the goal with
//! probability `(1 - eps 1{a != a*_s}) / D` and otherwise moves to `f`, whose
//! return action (action 0) pays 1 and goes back to the start. With `S = 2`
//! the start state is the only arm. The expected cost of playing `a*`
//! everywhere is `D - 1`.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::InstanceMeta;
use crate::error::{Result, SspError};
use crate::harness::rollout_with;
use crate::mdp::{CostVector, Next, Policy, SspMdp};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownTransParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub diameter: f64,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct UnknownTransInstance {
    pub params: UnknownTransParams,
    pub arm_states: Vec<usize>,
    /// Hidden best action of each arm state, aligned with `arm_states`.
    pub a_star: Vec<usize>,
    pub f_state: usize,
    pub mdp: Arc<SspMdp>,
}

pub fn gen_unknown_trans_lb(params: UnknownTransParams) -> Result<UnknownTransInstance> {
    let UnknownTransParams {
        num_states: s,
        num_actions: a,
        diameter: d,
        epsilon: eps,
        seed,
    } = params;
    if !(0.0..0.125).contains(&eps) {
        return Err(SspError::BadParam(format!("epsilon = {eps} outside [0, 1/8)")));
    }
    if a <= 16 {
        return Err(SspError::BadParam(format!("need A > 16, got {a}")));
    }
    if !(d >= 2.0) {
        return Err(SspError::BadParam(format!("need D >= 2, got {d}")));
    }
    if s < 2 {
        return Err(SspError::BadParam("need S >= 2".into()));
    }
    let f = s - 1;
    let arm_states: Vec<usize> = if s == 2 { vec![0] } else { (1..s - 1).collect() };
    let mut r = rng::seeded(seed);
    let a_star: Vec<usize> = arm_states.iter().map(|_| r.random_range(0..a)).collect();

    let mut b = SspMdp::builder(s, a, 0);
    if s > 2 {
        let w = 1.0 / arm_states.len() as f64;
        for act in 0..a {
            for &arm in &arm_states {
                b.transition(0, act, Next::State(arm), w);
            }
        }
    }
    for (&arm, &best) in arm_states.iter().zip(&a_star) {
        for act in 0..a {
            let pg = if act == best { 1.0 / d } else { (1.0 - eps) / d };
            b.transition(arm, act, Next::Goal, pg)
                .transition(arm, act, Next::State(f), 1.0 - pg);
        }
    }
    b.transition(f, 0, Next::State(0), 1.0);
    for act in 1..a {
        b.transition(f, act, Next::State(f), 1.0);
    }
    Ok(UnknownTransInstance {
        params,
        arm_states,
        a_star,
        f_state: f,
        mdp: Arc::new(b.build()?),
    })
}

/// Per-episode counts: `n` steps spent in arm states, `n_star` of them on `a*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeCounts {
    pub n: u64,
    pub n_star: u64,
    pub cost: u64,
}

impl UnknownTransInstance {
    pub fn cost(&self, k: usize) -> CostVector {
        CostVector::new(k, [(self.mdp.pair(self.f_state, 0), 1.0)]).expect("unit cost")
    }

    /// Expected cost of the optimal policy.
    pub fn optimal_cost(&self) -> f64 {
        self.params.diameter - 1.0
    }

    /// Policy playing `a*` in arm states and the return action elsewhere.
    pub fn optimal_policy(&self) -> Policy {
        let mut actions = vec![0; self.mdp.num_states()];
        for (&s, &a) in self.arm_states.iter().zip(&self.a_star) {
            actions[s] = a;
        }
        Policy::deterministic(self.mdp.num_actions(), &actions).expect("actions in range")
    }

    /// Uniform over actions in arm states, the return action at `f`.
    pub fn uniform_learner(&self) -> Policy {
        let na = self.mdp.num_actions();
        let mut probs = vec![1.0 / na as f64; self.mdp.num_pairs()];
        let row = &mut probs[self.f_state * na..(self.f_state + 1) * na];
        row.fill(0.0);
        row[0] = 1.0;
        Policy::new(na, probs).expect("rows are distributions")
    }

    pub fn run_episode(&self, policy: &Policy, rng: &mut Rng, cap: u64) -> Result<EpisodeCounts> {
        let na = self.mdp.num_actions();
        let mut star = vec![usize::MAX; self.mdp.num_states()];
        for (&s, &a) in self.arm_states.iter().zip(&self.a_star) {
            star[s] = a;
        }
        let mut counts = EpisodeCounts {
            n: 0,
            n_star: 0,
            cost: 0,
        };
        let f_pair = self.f_state * na;
        rollout_with(&self.mdp, policy, rng, cap, |s, a| {
            if star[s] != usize::MAX {
                counts.n += 1;
                if star[s] == a {
                    counts.n_star += 1;
                }
            }
            if s * na + a == f_pair {
                counts.cost += 1;
            }
        })?;
        Ok(counts)
    }

    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            construction: "unknown_trans".into(),
            params: serde_json::to_value(self.params).expect("params serialize"),
            seed: Some(self.params.seed),
            claimed_diameter: self.params.diameter,
            claimed_t_star: self.params.diameter,
            claimed_sparsity: 1,
            relaxed: false,
            warnings: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::cost_to_go;

    #[test]
    fn optimal_cost_is_d_minus_one() {
        for s in [2, 6] {
            let inst = gen_unknown_trans_lb(UnknownTransParams {
                num_states: s,
                num_actions: 20,
                diameter: 5.0,
                epsilon: 0.05,
                seed: 1,
            })
            .unwrap();
            let j = cost_to_go(&inst.mdp, &inst.optimal_policy(), &inst.cost(1)).unwrap();
            assert!((j[0] - 4.0).abs() < 1e-9, "{}", j[0]);
        }
    }

    #[test]
    fn epsilon_zero_makes_actions_equivalent() {
        let inst = gen_unknown_trans_lb(UnknownTransParams {
            num_states: 5,
            num_actions: 17,
            diameter: 3.0,
            epsilon: 0.0,
            seed: 2,
        })
        .unwrap();
        let j = cost_to_go(&inst.mdp, &inst.uniform_learner(), &inst.cost(1)).unwrap();
        assert!((j[0] - inst.optimal_cost()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        let base = UnknownTransParams {
            num_states: 3,
            num_actions: 20,
            diameter: 4.0,
            epsilon: 0.05,
            seed: 0,
        };
        assert!(gen_unknown_trans_lb(UnknownTransParams { epsilon: 0.2, ..base }).is_err());
        assert!(gen_unknown_trans_lb(UnknownTransParams { num_actions: 16, ..base }).is_err());
        assert!(gen_unknown_trans_lb(UnknownTransParams { diameter: 1.5, ..base }).is_err());
    }
}
