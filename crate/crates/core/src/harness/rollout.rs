use rand::Rng as _;

use crate::error::{Result, SspError};
use crate::mdp::{CostVector, Policy, SspMdp};
use crate::rng::Rng;

/// Default episode cap for Monte Carlo rollouts.
pub const EPISODE_CAP: u64 = 10_000_000;

/// Simulates one episode from the start state, calling `visit(s, a)` for every
/// step taken. Returns the episode length.
pub fn rollout_with<F: FnMut(usize, usize)>(
    mdp: &SspMdp,
    policy: &Policy,
    rng: &mut Rng,
    cap: u64,
    mut visit: F,
) -> Result<u64> {
    let na = mdp.num_actions();
    let mut s = mdp.start_state();
    let mut steps = 0u64;
    loop {
        if steps >= cap {
            return Err(SspError::EpisodeCapExceeded { cap });
        }
        let row = policy.row(s);
        let mut u: f64 = rng.random();
        let mut a = na - 1;
        for (i, &p) in row.iter().enumerate() {
            if u < p {
                a = i;
                break;
            }
            u -= p;
        }
        // Rounding can leave u just above the last positive entry.
        if row[a] == 0.0 {
            a = row.iter().rposition(|&p| p > 0.0).expect("row has mass");
        }
        visit(s, a);
        steps += 1;
        let (states, probs) = mdp.successors(mdp.pair(s, a));
        let mut u: f64 = rng.random();
        let mut next = None;
        for (&t, &p) in states.iter().zip(probs) {
            if u < p {
                next = Some(t);
                break;
            }
            u -= p;
        }
        match next {
            Some(t) => s = t,
            None => return Ok(steps),
        }
    }
}

/// One episode: realized cost and length.
pub fn rollout(
    mdp: &SspMdp,
    policy: &Policy,
    cost: &CostVector,
    rng: &mut Rng,
    cap: u64,
) -> Result<(f64, u64)> {
    let mut total = 0.0;
    let len = rollout_with(mdp, policy, rng, cap, |s, a| total += cost.get(mdp.pair(s, a)))?;
    Ok((total, len))
}
