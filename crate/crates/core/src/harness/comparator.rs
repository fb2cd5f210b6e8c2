use crate::error::Result;
use crate::mdp::{evaluate_policy, fast_policy_and_diameter, occupancy_of_policy, CostVector, Policy, SspMdp};

/// Uniform cost added to the aggregate so that zero-cost cycles are never preferred.
pub const TIE_BREAK: f64 = 1e-9;

/// Best proper deterministic policy for a whole (oblivious) cost stream.
#[derive(Debug, Clone)]
pub struct Comparator {
    pub policy: Policy,
    pub occupancy: Vec<f64>,
    /// `<q*, c_k>` for every episode.
    pub losses: Vec<f64>,
    pub total: f64,
    /// Expected hitting time of the comparator from the start state.
    pub hitting_time: f64,
}

/// Exact policy iteration on `sum_k c_k + TIE_BREAK`, started from the fast
/// policy, then evaluated per episode. Value iteration from zero is avoided on
/// purpose: a cycle whose only cost is the tie-break makes it crawl.
pub fn best_in_hindsight(mdp: &SspMdp, costs: &[CostVector]) -> Result<Comparator> {
    let mut aggregate = vec![TIE_BREAK; mdp.num_pairs()];
    for c in costs {
        for &(i, x) in c.entries() {
            aggregate[i] += x;
        }
    }
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let fast = fast_policy_and_diameter(mdp)?;
    let mut actions: Vec<usize> = (0..ns).map(|s| fast.policy.action(s).unwrap_or(0)).collect();
    let evaluate = |actions: &[usize]| -> Result<Vec<f64>> {
        let state_cost: Vec<f64> = actions.iter().enumerate().map(|(s, &a)| aggregate[s * na + a]).collect();
        evaluate_policy(mdp, &Policy::deterministic(na, actions)?, &state_cost)
    };
    let mut value = evaluate(&actions)?;
    for _ in 0..MAX_IMPROVEMENTS {
        let mut changed = false;
        for s in 0..ns {
            let q = |a: usize| {
                let pair = mdp.pair(s, a);
                let (next, probs) = mdp.successors(pair);
                aggregate[pair] + next.iter().zip(probs).map(|(&t, &p)| p * value[t]).sum::<f64>()
            };
            let cur = q(actions[s]);
            let (best_a, best) = (0..na)
                .map(|a| (a, q(a)))
                .fold((actions[s], cur), |b, x| if x.1 < b.1 { x } else { b });
            if best < cur - 1e-12 * cur.abs().max(1.0) {
                actions[s] = best_a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        value = evaluate(&actions)?;
    }
    comparator_for(mdp, Policy::deterministic(na, &actions)?, costs)
}

const MAX_IMPROVEMENTS: usize = 1000;

/// Loss profile of a fixed policy on a stream.
pub fn comparator_for(mdp: &SspMdp, policy: Policy, costs: &[CostVector]) -> Result<Comparator> {
    let occupancy = occupancy_of_policy(mdp, &policy)?.into_values();
    let losses: Vec<f64> = costs.iter().map(|c| c.dot(&occupancy)).collect();
    let hitting_time = occupancy.iter().sum();
    Ok(Comparator {
        policy,
        total: losses.iter().sum(),
        losses,
        occupancy,
        hitting_time,
    })
}

/// Total expected cost of every deterministic policy, by enumeration.
/// Improper policies are skipped. Meant for tiny instances.
pub fn brute_force_totals(mdp: &SspMdp, costs: &[CostVector]) -> Vec<(Vec<usize>, f64)> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut aggregate = vec![0.0; mdp.num_pairs()];
    for c in costs {
        for &(i, x) in c.entries() {
            aggregate[i] += x;
        }
    }
    let mut out = Vec::new();
    let mut actions = vec![0usize; ns];
    loop {
        let pi = Policy::deterministic(na, &actions).expect("actions in range");
        let state_cost: Vec<f64> = (0..ns).map(|s| aggregate[s * na + actions[s]]).collect();
        if let Ok(v) = evaluate_policy(mdp, &pi, &state_cost) {
            out.push((actions.clone(), v[mdp.start_state()]));
        }
        let mut i = 0;
        while i < ns {
            actions[i] += 1;
            if actions[i] < na {
                break;
            }
            actions[i] = 0;
            i += 1;
        }
        if i == ns {
            return out;
        }
    }
}
