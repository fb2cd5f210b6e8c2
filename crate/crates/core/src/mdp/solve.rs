//! Planning and policy evaluation on a known kernel.

use nalgebra::{DMatrix, DVector};

use super::{OccupancyMeasure, Policy, SspMdp};
use crate::error::{Result, SspError};

/// Above this many state-action pairs the linear solves switch from dense LU
/// to Gauss-Seidel sweeps.
pub const DENSE_LU_LIMIT: usize = 5000;
/// Hitting-time values above this are treated as divergence.
pub const IMPROPER_CEILING: f64 = 1e12;
/// Flow tolerance, scaled by `max(1, T)` when classifying membership.
pub const TOL_FLOW: f64 = 1e-8;
/// State mass below which the occupancy row is replaced by the fallback policy.
pub const MASS_FLOOR: f64 = 1e-12;

const GS_REL_TOL: f64 = 1e-14;
const GS_MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ValueIterationConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub ceiling: f64,
}

impl Default for ValueIterationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 1_000_000,
            ceiling: IMPROPER_CEILING,
        }
    }
}

/// The minimum-hitting-time policy with its exact hitting times.
#[derive(Debug, Clone)]
pub struct FastPolicy {
    pub policy: Policy,
    pub diameter: f64,
    pub hitting_times: Vec<f64>,
}

impl FastPolicy {
    pub fn start_hitting_time(&self, mdp: &SspMdp) -> f64 {
        self.hitting_times[mdp.start_state()]
    }
}

/// Gauss-Seidel value iteration for `V(s) = min_a c(s,a) + sum_s' P(s'|s,a) V(s')`.
///
/// Self-loops are folded in exactly, i.e. the update uses
/// `(c + sum_{s' != s} P V(s')) / (1 - P(s|s,a))`, which has the same fixed point
/// and removes the slow geometric tail of sticky states. Sweeps alternate
/// direction. Returns the values and a greedy deterministic action per state.
pub fn value_iteration(
    mdp: &SspMdp,
    pair_cost: &[f64],
    cfg: &ValueIterationConfig,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    assert_eq!(pair_cost.len(), mdp.num_pairs());
    let mut v = vec![0.0f64; ns];
    let mut converged = false;
    for sweep in 0..cfg.max_sweeps {
        let mut delta = 0.0f64;
        let mut vmax = 0.0f64;
        for idx in 0..ns {
            let s = if sweep % 2 == 0 { ns - 1 - idx } else { idx };
            let best = (0..na)
                .map(|a| backup(mdp, &v, pair_cost, s, a))
                .fold(f64::INFINITY, f64::min);
            if best > cfg.ceiling {
                return Err(SspError::NoProperPolicy {
                    ceiling: cfg.ceiling,
                });
            }
            delta = delta.max((best - v[s]).abs());
            vmax = vmax.max(best.abs());
            v[s] = best;
        }
        if delta < cfg.tol * vmax.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SspError::NoProperPolicy {
            ceiling: cfg.ceiling,
        });
    }
    let actions = (0..ns)
        .map(|s| {
            let mut best = (0, f64::INFINITY);
            for a in 0..na {
                let val = backup(mdp, &v, pair_cost, s, a);
                if val < best.1 && (best.1.is_infinite() || val < best.1 - 1e-12 * best.1.abs().max(1.0)) {
                    best = (a, val);
                }
            }
            best.0
        })
        .collect();
    Ok((v, actions))
}

#[inline]
fn backup(mdp: &SspMdp, v: &[f64], cost: &[f64], s: usize, a: usize) -> f64 {
    let pair = mdp.pair(s, a);
    let (states, probs) = mdp.successors(pair);
    let mut stay = 0.0;
    let mut acc = cost[pair];
    for (&t, &p) in states.iter().zip(probs) {
        if t == s {
            stay += p;
        } else {
            acc += p * v[t];
        }
    }
    if stay >= 1.0 - 1e-15 {
        f64::INFINITY
    } else {
        acc / (1.0 - stay)
    }
}

/// Deterministic policy minimizing every state's expected hitting time, and the
/// diameter `D = max_s T^{pi_f}(s)` from an exact evaluation of that policy.
pub fn fast_policy_and_diameter(mdp: &SspMdp) -> Result<FastPolicy> {
    let ones = vec![1.0; mdp.num_pairs()];
    let (_, actions) = value_iteration(mdp, &ones, &ValueIterationConfig::default())?;
    let policy = Policy::deterministic(mdp.num_actions(), &actions)?;
    let hitting_times = expected_hitting_times(mdp, &policy).map_err(|_| SspError::NoProperPolicy {
        ceiling: IMPROPER_CEILING,
    })?;
    let diameter = hitting_times.iter().copied().fold(0.0, f64::max);
    Ok(FastPolicy {
        policy,
        diameter,
        hitting_times,
    })
}

/// State-level kernel of a policy: for each state, (successor, prob) pairs.
fn policy_kernel(mdp: &SspMdp, policy: &Policy) -> Result<Vec<Vec<(usize, f64)>>> {
    if policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() {
        return Err(SspError::Domain("policy shape does not match the MDP".into()));
    }
    let ns = mdp.num_states();
    let mut rows = Vec::with_capacity(ns);
    let mut scratch: Vec<f64> = vec![0.0; ns];
    let mut touched: Vec<usize> = Vec::new();
    for s in 0..ns {
        for (a, &pa) in policy.row(s).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let (states, probs) = mdp.successors(mdp.pair(s, a));
            for (&t, &p) in states.iter().zip(probs) {
                if scratch[t] == 0.0 {
                    touched.push(t);
                }
                scratch[t] += pa * p;
            }
        }
        touched.sort_unstable();
        let row: Vec<(usize, f64)> = touched.iter().map(|&t| (t, scratch[t])).collect();
        for &t in &touched {
            scratch[t] = 0.0;
        }
        touched.clear();
        rows.push(row);
    }
    Ok(rows)
}

/// Every state must reach the goal with positive probability under the policy.
fn check_proper(mdp: &SspMdp, policy: &Policy, kernel: &[Vec<(usize, f64)>]) -> Result<()> {
    let ns = mdp.num_states();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); ns];
    let mut reaches = vec![false; ns];
    let mut stack = Vec::new();
    for s in 0..ns {
        for &(t, _) in &kernel[s] {
            incoming[t].push(s);
        }
        let to_goal: f64 = policy
            .row(s)
            .iter()
            .enumerate()
            .map(|(a, &pa)| pa * mdp.goal_prob(mdp.pair(s, a)))
            .sum();
        if to_goal > 0.0 {
            reaches[s] = true;
            stack.push(s);
        }
    }
    while let Some(t) = stack.pop() {
        for &s in &incoming[t] {
            if !reaches[s] {
                reaches[s] = true;
                stack.push(s);
            }
        }
    }
    match reaches.iter().position(|&r| !r) {
        Some(s) => Err(SspError::ImproperPolicy(format!("goal unreachable from state {s}"))),
        None => Ok(()),
    }
}

fn check_solution(x: &[f64]) -> Result<()> {
    for (s, &val) in x.iter().enumerate() {
        if !val.is_finite() || val > IMPROPER_CEILING || val < -1e-8 * (1.0 + val.abs()) {
            return Err(SspError::ImproperPolicy(format!(
                "solution entry {s} is {val}"
            )));
        }
    }
    Ok(())
}

/// Solves `(I - P_pi) x = b` or, with `transpose`, `(I - P_pi)^T x = b`.
fn solve_policy_system(
    mdp: &SspMdp,
    kernel: &[Vec<(usize, f64)>],
    b: &[f64],
    transpose: bool,
) -> Result<Vec<f64>> {
    let ns = mdp.num_states();
    if mdp.num_pairs() <= DENSE_LU_LIMIT {
        let mut m = DMatrix::<f64>::identity(ns, ns);
        for (s, row) in kernel.iter().enumerate() {
            for &(t, p) in row {
                if transpose {
                    m[(t, s)] -= p;
                } else {
                    m[(s, t)] -= p;
                }
            }
        }
        let rhs = DVector::from_column_slice(b);
        let lu = m.clone().lu();
        let mut x = lu
            .solve(&rhs)
            .ok_or_else(|| SspError::ImproperPolicy("singular policy system".into()))?;
        // one step of iterative refinement
        let r = &rhs - &m * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        check_solution(&x)?;
        return Ok(x);
    }

    // Gauss-Seidel on x = b + P x (or P^T x), self-loops folded in.
    let rows: Vec<Vec<(usize, f64)>> = if transpose {
        let mut t_rows = vec![Vec::new(); ns];
        for (s, row) in kernel.iter().enumerate() {
            for &(t, p) in row {
                t_rows[t].push((s, p));
            }
        }
        t_rows
    } else {
        kernel.to_vec()
    };
    let diag: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(s, row)| {
            1.0 - row
                .iter()
                .filter(|&&(t, _)| t == s)
                .map(|&(_, p)| p)
                .sum::<f64>()
        })
        .collect();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(SspError::ImproperPolicy("absorbing self-loop".into()));
    }
    let mut x = vec![0.0; ns];
    for sweep in 0..GS_MAX_SWEEPS {
        let mut delta = 0.0f64;
        let mut xmax = 0.0f64;
        for idx in 0..ns {
            let s = if sweep % 2 == 0 { idx } else { ns - 1 - idx };
            let mut acc = b[s];
            for &(t, p) in &rows[s] {
                if t != s {
                    acc += p * x[t];
                }
            }
            let val = acc / diag[s];
            delta = delta.max((val - x[s]).abs());
            xmax = xmax.max(val.abs());
            x[s] = val;
        }
        if xmax > IMPROPER_CEILING {
            return Err(SspError::ImproperPolicy("values exceeded the ceiling".into()));
        }
        if delta <= GS_REL_TOL * xmax.max(1.0) {
            check_solution(&x)?;
            return Ok(x);
        }
    }
    Err(SspError::ImproperPolicy(
        "iterative policy evaluation did not converge".into(),
    ))
}

/// Expected cost-to-go of a policy under per-state expected costs `state_cost`.
pub fn evaluate_policy(mdp: &SspMdp, policy: &Policy, state_cost: &[f64]) -> Result<Vec<f64>> {
    let kernel = policy_kernel(mdp, policy)?;
    check_proper(mdp, policy, &kernel)?;
    solve_policy_system(mdp, &kernel, state_cost, false)
}

/// `T^pi(s)`, the expected number of steps to the goal from each state.
pub fn expected_hitting_times(mdp: &SspMdp, policy: &Policy) -> Result<Vec<f64>> {
    evaluate_policy(mdp, policy, &vec![1.0; mdp.num_states()])
}

/// `J^pi(s)` for a sparse cost vector.
pub fn cost_to_go(mdp: &SspMdp, policy: &Policy, cost: &super::CostVector) -> Result<Vec<f64>> {
    let dense = cost.to_dense(mdp.num_pairs());
    let state_cost = state_costs(mdp, policy, &dense);
    evaluate_policy(mdp, policy, &state_cost)
}

pub(crate) fn state_costs(mdp: &SspMdp, policy: &Policy, pair_cost: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    (0..mdp.num_states())
        .map(|s| {
            policy
                .row(s)
                .iter()
                .zip(&pair_cost[s * na..(s + 1) * na])
                .map(|(&p, &c)| p * c)
                .sum()
        })
        .collect()
}

/// Occupancy measure of a proper policy. The returned bound is the total mass
/// plus the flow tolerance.
pub fn occupancy_of_policy(mdp: &SspMdp, policy: &Policy) -> Result<OccupancyMeasure> {
    let kernel = policy_kernel(mdp, policy)?;
    check_proper(mdp, policy, &kernel)?;
    let mut e = vec![0.0; mdp.num_states()];
    e[mdp.start_state()] = 1.0;
    let visits = solve_policy_system(mdp, &kernel, &e, true)?;
    let na = mdp.num_actions();
    let mut q = vec![0.0; mdp.num_pairs()];
    for (s, &x) in visits.iter().enumerate() {
        let x = x.max(0.0);
        for a in 0..na {
            q[s * na + a] = x * policy.prob(s, a);
        }
    }
    let mass: f64 = q.iter().sum();
    Ok(OccupancyMeasure::from_raw(q, mass + TOL_FLOW * mass.max(1.0)))
}

/// Normalizes an occupancy measure into a policy; rows with mass at or below
/// [`MASS_FLOOR`] are copied from `fallback`.
pub fn policy_from_occupancy(q: &OccupancyMeasure, fallback: &Policy) -> Policy {
    let na = fallback.num_actions();
    let mut probs = Vec::with_capacity(q.values().len());
    for (s, row) in q.values().chunks(na).enumerate() {
        let mass: f64 = row.iter().sum();
        if mass > MASS_FLOOR {
            probs.extend(row.iter().map(|&x| x / mass));
        } else {
            probs.extend_from_slice(fallback.row(s));
        }
    }
    Policy::new(na, probs).expect("normalized rows are distributions")
}

/// Flow-constraint diagnostics for a raw vector over pairs.
#[derive(Debug, Clone)]
pub struct FlowReport {
    /// `r(s) = out(s) - in(s) - 1{s = s0}`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub worst_state: usize,
    /// `T - sum q`.
    pub mass_slack: f64,
    pub min_entry: f64,
    /// Tolerance used for the membership test, `TOL_FLOW * max(1, T)`.
    pub tol: f64,
    pub member: bool,
}

pub fn check_flow_constraints(q: &[f64], mdp: &SspMdp, bound: f64) -> FlowReport {
    assert_eq!(q.len(), mdp.num_pairs(), "vector dimension must be S*A");
    let residuals = flow_residuals(mdp, q);
    let (worst_state, max_residual) = residuals
        .iter()
        .enumerate()
        .map(|(s, r)| (s, r.abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mass: f64 = q.iter().sum();
    let min_entry = q.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TOL_FLOW * bound.max(1.0);
    let mass_slack = bound - mass;
    FlowReport {
        member: max_residual <= tol && mass_slack >= -tol && min_entry >= 0.0,
        residuals,
        max_residual,
        worst_state,
        mass_slack,
        min_entry,
        tol,
    }
}

pub(crate) fn flow_residuals(mdp: &SspMdp, q: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    let mut r: Vec<f64> = q.chunks(na).map(|row| row.iter().sum()).collect();
    r[mdp.start_state()] -= 1.0;
    for (pair, &x) in q.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let (states, probs) = mdp.successors(pair);
        for (&t, &p) in states.iter().zip(probs) {
            r[t] -= p * x;
        }
    }
    r
}
