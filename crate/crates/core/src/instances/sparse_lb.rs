//! Sparse lower-bound instance: a binary tree routing to `N` leaves, a few
//! "good" leaf actions with stochastic Bernoulli costs and slow exits, and a
//! bad state `f` with a fast but deterministic-cost exit.
//!
//! States are numbered in breadth-first tree order (root 0, children of `x` at
//! `2x + 1` and `2x + 2`), followed by `f`. Actions `0..A-1` are `a_1..a_{A-1}`
//! and the last action is `a_f`.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::InstanceMeta;
use crate::error::{Result, SspError};
use crate::mdp::{CostVector, Next, Policy, SspMdp};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseLbParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub diameter: f64,
    pub t_star: f64,
    pub sparsity: usize,
    pub seed: u64,
    /// Waive the magnitude preconditions of the lower bound (`M >= 101` etc.).
    #[serde(default)]
    pub relaxed: bool,
}

#[derive(Debug, Clone)]
pub struct SparseLbInstance {
    pub params: SparseLbParams,
    /// Tree depth parameter: the tree has `B + 2` levels.
    pub b: usize,
    /// Number of leaves.
    pub n: usize,
    /// Number of good pairs.
    pub l: usize,
    pub d_prime: f64,
    pub t_prime: f64,
    /// Flattened pair indices of the good pairs, in construction order.
    pub good_pairs: Vec<usize>,
    pub f_state: usize,
    pub f_pair: usize,
    pub mdp: Arc<SspMdp>,
    pub warnings: Vec<String>,
}

pub fn gen_sparse_lb(params: SparseLbParams) -> Result<SparseLbInstance> {
    let SparseLbParams {
        num_states: s,
        num_actions: a,
        diameter: d,
        t_star,
        sparsity: m,
        relaxed,
        ..
    } = params;
    if s < 5 {
        return Err(SspError::BadParam("need S >= 5 for a tree with two levels".into()));
    }
    if a < 3 {
        return Err(SspError::BadParam("need A >= 3 (two tree actions and a_f)".into()));
    }
    if m < 2 {
        return Err(SspError::BadParam("need M >= 2 so that one good pair exists".into()));
    }
    // B = ceil(log2(S/2)) - 2, computed on integers.
    let mut e = 0usize;
    while (1usize << e) * 2 < s {
        e += 1;
    }
    let b = e - 2;
    let n = 1usize << (b + 1);
    let l = (m - 1).min(n * (a - 1));
    let d_prime = d - b as f64 - 2.0;
    let t_prime = t_star - b as f64 - 1.0;
    if !(d_prime >= 1.0) {
        return Err(SspError::BadParam(format!(
            "D = {d} leaves D' = D - B - 2 = {d_prime} < 1 (B = {b})"
        )));
    }
    if !(t_star >= d) {
        return Err(SspError::BadParam(format!("T* = {t_star} must be at least D = {d}")));
    }

    let mut warnings = Vec::new();
    if !(d >= 3.0 * (s as f64).ln()) {
        warnings.push(format!("D = {d} is below 3 log S"));
    }
    if s * (a - 1) < 400 {
        warnings.push(format!("S(A-1) = {} is below 400", s * (a - 1)));
    }
    if m < 101 {
        warnings.push(format!("M = {m} is below 101"));
    }
    if !relaxed && !warnings.is_empty() {
        return Err(SspError::BadParam(format!(
            "lower-bound preconditions fail ({}); use relaxed mode",
            warnings.join("; ")
        )));
    }

    let num_nodes = (1usize << (b + 2)) - 1;
    let first_leaf = n - 1;
    let f = num_nodes;
    let ns = num_nodes + 1;
    let af = a - 1;
    let mut builder = SspMdp::builder(ns, a, 0);
    for x in 0..first_leaf {
        builder
            .transition(x, 0, Next::State(2 * x + 1), 1.0)
            .transition(x, 1, Next::State(2 * x + 2), 1.0);
        for act in 2..a {
            builder.transition(x, act, Next::State(x), 1.0);
        }
    }
    let mut good_pairs = Vec::with_capacity(l);
    let exit = 1.0 / t_prime;
    for i in 1..=n {
        let leaf = first_leaf + i - 1;
        builder.transition(leaf, af, Next::State(f), 1.0);
        for j in 1..a {
            if j + (a - 1) * (i - 1) <= l {
                builder
                    .transition(leaf, j - 1, Next::Goal, exit)
                    .transition(leaf, j - 1, Next::State(leaf), 1.0 - exit);
                good_pairs.push(leaf * a + j - 1);
            } else {
                builder.transition(leaf, j - 1, Next::State(f), 1.0);
            }
        }
    }
    builder
        .transition(f, af, Next::Goal, 1.0 / d_prime)
        .transition(f, af, Next::State(f), 1.0 - 1.0 / d_prime);
    for act in 0..af {
        builder.transition(f, act, Next::State(f), 1.0);
    }
    let mdp = builder.build()?;
    Ok(SparseLbInstance {
        params,
        b,
        n,
        l,
        d_prime,
        t_prime,
        good_pairs,
        f_state: f,
        f_pair: f * a + af,
        mdp: Arc::new(mdp),
        warnings,
    })
}

impl SparseLbInstance {
    /// Bernoulli parameter of the good-pair costs, `D'/(2T')`.
    pub fn bernoulli(&self) -> f64 {
        self.d_prime / (2.0 * self.t_prime)
    }

    /// Samples `num_episodes` i.i.d. costs; identical seeds give identical streams.
    pub fn costs(&self, num_episodes: usize, seed: u64) -> Vec<CostVector> {
        let mut rng = rng::seeded(seed);
        let p = self.bernoulli();
        (1..=num_episodes)
            .map(|k| {
                let mut entries: Vec<(usize, f64)> = self
                    .good_pairs
                    .iter()
                    .filter(|_| rng.random_bool(p))
                    .map(|&pair| (pair, 1.0))
                    .collect();
                entries.push((self.f_pair, 1.0));
                CostVector::new(k, entries).expect("costs are in range")
            })
            .collect()
    }

    /// Deterministic policy walking down the tree to the leaf of `pair` and
    /// playing its action there. Off-path rows play `a_f` (leaves) or `a_1`.
    pub fn policy_for_pair(&self, pair: usize) -> Policy {
        let a = self.mdp.num_actions();
        let ns = self.mdp.num_states();
        let leaf = pair / a;
        let mut actions: Vec<usize> = (0..ns)
            .map(|s| if s + 1 >= self.n && s != self.f_state { a - 1 } else { 0 })
            .collect();
        actions[self.f_state] = a - 1;
        let mut x = leaf;
        while x > 0 {
            let parent = (x - 1) / 2;
            actions[parent] = if x == 2 * parent + 1 { 0 } else { 1 };
            x = parent;
        }
        actions[leaf] = pair % a;
        Policy::deterministic(a, &actions).expect("actions in range")
    }

    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            construction: "sparse_lb".into(),
            params: serde_json::to_value(self.params).expect("params serialize"),
            seed: Some(self.params.seed),
            claimed_diameter: self.params.diameter,
            claimed_t_star: self.params.t_star,
            claimed_sparsity: self.l + 1,
            relaxed: self.params.relaxed,
            warnings: self.warnings.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{cost_to_go, expected_hitting_times, fast_policy_and_diameter};

    fn small(m: usize) -> SparseLbInstance {
        gen_sparse_lb(SparseLbParams {
            num_states: 32,
            num_actions: 16,
            diameter: 6.0,
            t_star: 12.0,
            sparsity: m,
            seed: 7,
            relaxed: true,
        })
        .unwrap()
    }

    #[test]
    fn construction_identities() {
        let inst = small(16);
        assert_eq!(inst.b, 2);
        assert_eq!(inst.n, 8);
        assert!(inst.n * 4 >= 32);
        assert_eq!(inst.l, 15);
        assert_eq!(inst.mdp.num_states(), 16);
        let fp = fast_policy_and_diameter(&inst.mdp).unwrap();
        assert!((fp.diameter - 6.0).abs() < 1e-8, "{}", fp.diameter);
        let pi = inst.policy_for_pair(inst.good_pairs[3]);
        let t = expected_hitting_times(&inst.mdp, &pi).unwrap();
        assert!((t[0] - 12.0).abs() < 1e-8);
    }

    #[test]
    fn strict_mode_rejects_desk_scale() {
        let mut p = small(16).params;
        p.relaxed = false;
        assert!(gen_sparse_lb(p).is_err());
        p.relaxed = true;
        p.diameter = 3.0;
        assert!(gen_sparse_lb(p).is_err());
    }

    #[test]
    fn stream_reproducible_and_sparse() {
        let inst = small(8);
        let a = inst.costs(50, 3);
        assert_eq!(a, inst.costs(50, 3));
        assert_ne!(a, inst.costs(50, 4));
        assert!(a.iter().all(|c| c.support_size() <= 8));
    }

    #[test]
    fn good_pair_policy_expected_cost() {
        // A single good pair played forever costs T' * Bernoulli mean = D'/2.
        let inst = small(8);
        let pair = inst.good_pairs[0];
        let pi = inst.policy_for_pair(pair);
        let mean = CostVector::new(1, [(pair, inst.bernoulli())]).unwrap();
        let j = cost_to_go(&inst.mdp, &pi, &mean).unwrap();
        assert!((j[0] - inst.d_prime / 2.0).abs() < 1e-9);
    }
}
