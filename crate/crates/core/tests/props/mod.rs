//! Randomized invariant checks shared by the `properties` test target and the
//! acceptance binary. Each check draws its own cases from a fixed seed.

#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::Rng as _;

use ssp_omd::harness::{best_in_hindsight, brute_force_totals, rollout};
use ssp_omd::instances::{gen_sparse_lb, SparseLbParams};
use ssp_omd::learners::{interval_for, meta_step, Learner, SparseAgnostic};
use ssp_omd::mdp::{
    check_flow_constraints, cost_to_go, expected_hitting_times, fast_policy_and_diameter,
    occupancy_of_policy, policy_from_occupancy, CostVector, Next, Policy, SspMdp,
};
use ssp_omd::omd::{project, unconstrained_step, SolverConfig};
use ssp_omd::rng::{self, Rng};
use ssp_omd::{RegretTrace, Regularizer, TraceRecord};

pub type Check = fn(u32) -> Result<(), String>;

pub const CHECKS: &[(&str, Check)] = &[
    ("occupancy_policy_roundtrip", occupancy_policy_roundtrip),
    ("occupancy_cost_matches_cost_to_go", occupancy_cost_matches_cost_to_go),
    ("hitting_time_is_occupancy_mass", hitting_time_is_occupancy_mass),
    ("fast_policy_is_fastest", fast_policy_is_fastest),
    ("regularizer_gradient_fd", regularizer_gradient_fd),
    ("regularizer_hessian_fd", regularizer_hessian_fd),
    ("bregman_nonnegative", bregman_nonnegative),
    ("lr_norm_tends_to_entropy", lr_norm_tends_to_entropy),
    ("hessian_inverse_monotone", hessian_inverse_monotone),
    ("projection_kkt_and_optimality", projection_kkt_and_optimality),
    ("projection_boundary_safe", projection_boundary_safe),
    ("zero_cost_step_is_fixed", zero_cost_step_is_fixed),
    ("stability_inequality", stability_inequality),
    ("meta_step_simplex", meta_step_simplex),
    ("restart_count_bound", restart_count_bound),
    ("sparse_lb_identities", sparse_lb_identities),
    ("comparator_beats_enumeration", comparator_beats_enumeration),
    ("trace_prefix_sums_and_csv", trace_prefix_sums_and_csv),
];

fn runner(cases: u32) -> TestRunner {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(fail(format!($($arg)*)));
        }
    };
}

/// Random SSP where action 0 always reaches the goal with probability at
/// least 0.05, so that proper policies exist.
pub fn random_mdp(r: &mut Rng, max_s: usize, max_a: usize) -> SspMdp {
    let ns = r.random_range(1..=max_s);
    let na = r.random_range(1..=max_a);
    let mut b = SspMdp::builder(ns, na, r.random_range(0..ns));
    for s in 0..ns {
        for a in 0..na {
            let goal = if a == 0 {
                r.random_range(0.05..1.0)
            } else if r.random_bool(0.3) {
                0.0
            } else {
                r.random_range(0.0..1.0)
            };
            let k = r.random_range(1..=3usize.min(ns));
            let mut w: Vec<f64> = (0..k).map(|_| r.random_range(0.1..1.0)).collect();
            let tot: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x *= (1.0 - goal) / tot);
            if goal > 0.0 {
                b.transition(s, a, Next::Goal, goal);
            }
            for x in w {
                b.transition(s, a, Next::State(r.random_range(0..ns)), x);
            }
        }
    }
    b.build().expect("random rows are distributions")
}

/// Stochastic policy with at least `floor` mass on action 0 (hence proper).
pub fn random_policy(r: &mut Rng, ns: usize, na: usize, floor: f64) -> Policy {
    let mut probs = Vec::with_capacity(ns * na);
    for _ in 0..ns {
        let mut row: Vec<f64> = (0..na).map(|_| r.random_range(0.0..1.0)).collect();
        let tot: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x *= (1.0 - floor) / tot);
        row[0] += floor;
        probs.extend(row);
    }
    Policy::new(na, probs).expect("rows are distributions")
}

pub fn random_cost(r: &mut Rng, num_pairs: usize, k: usize) -> CostVector {
    let m = r.random_range(0..=num_pairs.min(6));
    let idx = rand::seq::index::sample(r, num_pairs, m);
    CostVector::new(k, idx.into_iter().map(|i| (i, r.random_range(0.0..=1.0)))).expect("costs in range")
}

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

fn run_seeded(cases: u32, f: impl Fn(&mut Rng) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases)
        .run(&seeds(), |seed| f(&mut rng::seeded(seed)))
        .map_err(|e| e.to_string())
}

pub fn occupancy_policy_roundtrip(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 10, 4);
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.2);
        let q = occupancy_of_policy(&mdp, &pi).map_err(|e| fail(e.to_string()))?;
        let back = policy_from_occupancy(&q, &Policy::uniform(mdp.num_states(), mdp.num_actions()));
        let na = mdp.num_actions();
        for s in 0..mdp.num_states() {
            if q.state_mass(s, na) > 1e-12 {
                for a in 0..na {
                    ensure!((back.prob(s, a) - pi.prob(s, a)).abs() <= 1e-8, "state {s} action {a}");
                }
            }
        }
        Ok(())
    })
}

pub fn occupancy_cost_matches_cost_to_go(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 10, 4);
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.2);
        let c = random_cost(r, mdp.num_pairs(), 1);
        let q = occupancy_of_policy(&mdp, &pi).map_err(|e| fail(e.to_string()))?;
        let j = cost_to_go(&mdp, &pi, &c).map_err(|e| fail(e.to_string()))?;
        let t = q.mass();
        ensure!((q.dot(&c) - j[mdp.start_state()]).abs() <= 1e-8 * t.max(1.0), "{} vs {}", q.dot(&c), j[mdp.start_state()]);
        Ok(())
    })
}

pub fn hitting_time_is_occupancy_mass(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 10, 4);
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.2);
        let q = occupancy_of_policy(&mdp, &pi).map_err(|e| fail(e.to_string()))?;
        let t = expected_hitting_times(&mdp, &pi).map_err(|e| fail(e.to_string()))?;
        let t0 = t[mdp.start_state()];
        ensure!((t0 - q.mass()).abs() <= 1e-8 * t0.max(1.0), "{t0} vs {}", q.mass());
        ensure!(check_flow_constraints(q.values(), &mdp, q.bound()).member, "not a member");
        Ok(())
    })
}

pub fn fast_policy_is_fastest(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 10, 4);
        let fast = fast_policy_and_diameter(&mdp).map_err(|e| fail(e.to_string()))?;
        ensure!(fast.diameter >= 1.0 - 1e-12, "D = {}", fast.diameter);
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.1);
        let t = expected_hitting_times(&mdp, &pi).map_err(|e| fail(e.to_string()))?;
        for (s, (&tf, &tp)) in fast.hitting_times.iter().zip(&t).enumerate() {
            ensure!(tf <= tp * (1.0 + 1e-9), "state {s}: fast {tf} > {tp}");
        }
        Ok(())
    })
}

fn random_reg(r: &mut Rng) -> Regularizer {
    if r.random_bool(0.3) {
        Regularizer::NegativeEntropy
    } else {
        Regularizer::lr_norm(1.0 + r.random_range(0.0..8.0f64).exp2()).unwrap()
    }
}

pub fn regularizer_gradient_fd(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let reg = random_reg(r);
        let q: Vec<f64> = (0..4).map(|_| 10f64.powf(r.random_range(-2.0..1.0))).collect();
        let g = reg.gradient(&q).unwrap();
        for i in 0..q.len() {
            let h = 1e-5 * q[i];
            let (mut up, mut dn) = (q.clone(), q.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (reg.value(&up).unwrap() - reg.value(&dn).unwrap()) / (2.0 * h);
            ensure!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "{reg:?} q={} fd={fd} g={}", q[i], g[i]);
        }
        Ok(())
    })
}

pub fn regularizer_hessian_fd(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let reg = random_reg(r);
        let x = 10f64.powf(r.random_range(-2.0..1.0));
        let h = 1e-5 * x;
        let fd = (reg.gradient_at(x + h) - reg.gradient_at(x - h)) / (2.0 * h);
        let want = 1.0 / reg.hessian_inv_at(x);
        ensure!((fd - want).abs() <= 1e-5 * want.abs(), "{reg:?} x={x} fd={fd} want={want}");
        Ok(())
    })
}

pub fn bregman_nonnegative(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let reg = random_reg(r);
        let n = r.random_range(1..8);
        let q: Vec<f64> = (0..n).map(|_| r.random_range(0.0..5.0)).collect();
        let mut q2: Vec<f64> = (0..n).map(|_| r.random_range(0.0..5.0)).collect();
        if reg == Regularizer::NegativeEntropy {
            q2.iter_mut().for_each(|x| *x += 1e-3);
        }
        let d = reg.bregman(&q, &q2).unwrap();
        ensure!(d >= 0.0, "{reg:?} D = {d}");
        ensure!(reg.bregman(&q2, &q2).unwrap() == 0.0, "D(q, q) != 0");
        if q.iter().zip(&q2).any(|(a, b)| (a - b).abs() > 1e-3) {
            ensure!(d > 0.0, "distinct points with zero divergence");
        }
        Ok(())
    })
}

pub fn lr_norm_tends_to_entropy(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let n = r.random_range(2..6);
        let simplex = |r: &mut Rng| {
            let v: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
            let t: f64 = v.iter().sum();
            v.into_iter().map(|x| x / t).collect::<Vec<_>>()
        };
        let (q, q2) = (simplex(r), simplex(r));
        let target = Regularizer::NegativeEntropy.bregman(&q, &q2).unwrap();
        // The gap is of order 1/p but its leading term can change sign, so
        // compare envelopes instead of consecutive errors.
        let err: Vec<f64> = (1..=8)
            .map(|j| (Regularizer::lr_norm(2f64.powi(j)).unwrap().bregman(&q, &q2).unwrap() - target).abs())
            .collect();
        let head = err[..4].iter().copied().fold(0.0, f64::max);
        let tail = err[4..].iter().copied().fold(0.0, f64::max);
        ensure!(tail <= 0.5 * head + 1e-15, "tail {tail} vs head {head}");
        ensure!(err[7] < 1e-2, "error {} at p = 256", err[7]);
        Ok(())
    })
}

pub fn hessian_inverse_monotone(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let reg = random_reg(r);
        let hi = r.random_range(0.0..10.0);
        let lo = hi * r.random_range(0.0..=1.0);
        ensure!(reg.hessian_inv_at(lo) <= reg.hessian_inv_at(hi), "{reg:?} {lo} {hi}");
        Ok(())
    })
}

/// Random projection problem: MDP, regularizer, `q'`, cap `T`, feasible points.
fn projection_case(r: &mut Rng, zeros: bool) -> (SspMdp, Regularizer, Vec<f64>, f64, Vec<Vec<f64>>) {
    let mdp = random_mdp(r, 6, 3);
    let reg = if r.random_bool(0.5) {
        Regularizer::NegativeEntropy
    } else {
        Regularizer::lr_norm(r.random_range(1.5..8.0)).unwrap()
    };
    let fast = fast_policy_and_diameter(&mdp).unwrap();
    let t_min = fast.start_hitting_time(&mdp);
    let t = t_min * r.random_range(1.0..3.0);
    let mut q_prime: Vec<f64> = (0..mdp.num_pairs()).map(|_| 10f64.powf(r.random_range(-3.0..0.5))).collect();
    if zeros && matches!(reg, Regularizer::LrNorm { .. }) {
        for x in q_prime.iter_mut() {
            if r.random_bool(0.4) {
                *x = 0.0;
            }
        }
    }
    let mut feasible = vec![occupancy_of_policy(&mdp, &fast.policy).unwrap().into_values()];
    for _ in 0..100 {
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.3);
        let x = occupancy_of_policy(&mdp, &pi).unwrap();
        if x.mass() <= t {
            feasible.push(x.into_values());
        }
    }
    (mdp, reg, q_prime, t, feasible)
}

pub fn projection_kkt_and_optimality(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let (mdp, reg, q_prime, t, feasible) = projection_case(r, false);
        let cfg = SolverConfig::default();
        let (q, _, rep) = project(&reg, &q_prime, &mdp, t, &cfg).map_err(|e| fail(e.to_string()))?;
        ensure!(rep.converged && rep.kkt_residual <= cfg.tol, "kkt {}", rep.kkt_residual);
        let scale = rep.dual_objective.abs().max(1.0);
        ensure!(rep.max_objective_increase <= 1e-12 * scale, "F rose by {}", rep.max_objective_increase);
        ensure!(check_flow_constraints(q.values(), &mdp, t).member, "projection not feasible");
        let gq = reg.gradient(q.values()).unwrap();
        let gp = reg.gradient(&q_prime).unwrap();
        for x in &feasible {
            let vi: f64 = (0..x.len())
                .filter(|&i| q.values()[i] > 0.0 || x[i] > 0.0)
                .map(|i| (gq[i] - gp[i]) * (x[i] - q.values()[i]))
                .sum();
            ensure!(vi >= -1e-6, "variational inequality {vi}");
            let lhs = reg.bregman(x, &q_prime).unwrap();
            let rhs = reg.bregman(x, q.values()).unwrap() + reg.bregman(q.values(), &q_prime).unwrap();
            ensure!(lhs >= rhs - 1e-6, "Pythagorean {lhs} < {rhs}");
        }
        Ok(())
    })
}

pub fn projection_boundary_safe(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let (mdp, reg, q_prime, t, _) = projection_case(r, true);
        let (q, _, rep) = project(&reg, &q_prime, &mdp, t, &SolverConfig::default()).map_err(|e| fail(e.to_string()))?;
        ensure!(q.values().iter().all(|x| x.is_finite() && *x >= 0.0), "bad entry");
        ensure!(rep.converged, "not converged");
        Ok(())
    })
}

pub fn zero_cost_step_is_fixed(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 6, 3);
        let reg = random_reg(r);
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.2);
        let q = occupancy_of_policy(&mdp, &pi).unwrap();
        let q_prime = unconstrained_step(&reg, q.values(), &CostVector::zero(1), 0.5);
        ensure!(q_prime == q.values(), "zero cost moved the mirror step");
        let t = q.mass() * 1.5;
        let (q2, _, _) = project(&reg, &q_prime, &mdp, t, &SolverConfig::default()).map_err(|e| fail(e.to_string()))?;
        for (a, b) in q2.values().iter().zip(q.values()) {
            ensure!((a - b).abs() <= 1e-6 * b.max(1.0), "{a} vs {b}");
        }
        Ok(())
    })
}

pub fn stability_inequality(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let p = 1.0 + r.random_range(0.0..6.0f64).exp2();
        let reg = Regularizer::lr_norm(p).unwrap();
        let n = r.random_range(1..40);
        let q: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(-6.0..1.5))).collect();
        let m = r.random_range(1..=n);
        let c = CostVector::new(1, (0..m).map(|i| (i, r.random_range(0.0..=1.0)))).unwrap();
        let bound = (m as f64).powf(1.0 / p) * (1.0 + c.dot(&q));
        let local = reg.local_norm_sq(&q, c.entries());
        ensure!(local <= bound + 1e-9, "p={p} m={m}: {local} > {bound}");
        Ok(())
    })
}

pub fn meta_step_simplex(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let n = r.random_range(1..12);
        let mut w: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
        let t: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= t);
        let etas: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(-3.0..0.0))).collect();
        let x: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1000.0)).collect();
        let out = meta_step(&w, &etas, &x);
        ensure!(out.iter().all(|v| v.is_finite() && *v >= 1e-300), "weights {out:?}");
        ensure!((out.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "sum {}", out.iter().sum::<f64>());
        Ok(())
    })
}

pub fn restart_count_bound(cases: u32) -> Result<(), String> {
    let mdp = {
        let mut b = SspMdp::builder(2, 40, 0);
        for a in 0..40 {
            b.transition(0, a, Next::State(1), 0.5).transition(0, a, Next::Goal, 0.5);
            b.transition(1, a, Next::Goal, 1.0);
        }
        Arc::new(b.build().unwrap())
    };
    run_seeded(cases.min(200), |r| {
        let mut l = SparseAgnostic::new(mdp.clone(), 3.0, 1.5, 30, SolverConfig::default()).unwrap();
        let mut max_support = 1usize;
        for k in 1..=12 {
            let m = r.random_range(0..=80);
            let c = CostVector::new(k, (0..m).map(|i| (i, 0.5))).unwrap();
            max_support = max_support.max(c.support_size());
            l.observe(&c).map_err(|e| fail(e.to_string()))?;
        }
        let intervals = l.restarts().len() + 1;
        let cap = interval_for(max_support) as usize + 1;
        ensure!(intervals <= cap, "{intervals} intervals for max support {max_support}");
        Ok(())
    })
}

pub fn sparse_lb_identities(cases: u32) -> Result<(), String> {
    run_seeded(cases.min(300), |r| {
        let s = r.random_range(5..40);
        let a = r.random_range(3..10);
        let mut e = 0;
        while (1usize << e) * 2 < s {
            e += 1;
        }
        let b = e - 2;
        let d = (b + 3) as f64 + r.random_range(0.0..5.0);
        let params = SparseLbParams {
            num_states: s,
            num_actions: a,
            diameter: d,
            t_star: d + r.random_range(0.0..10.0),
            sparsity: r.random_range(2..30),
            seed: r.random(),
            relaxed: true,
        };
        let inst = gen_sparse_lb(params).map_err(|e| fail(e.to_string()))?;
        ensure!(inst.n * 4 >= s, "N = {} < S/4", inst.n);
        let fast = fast_policy_and_diameter(&inst.mdp).unwrap();
        ensure!((fast.diameter - d).abs() <= 1e-8 * d, "D {} vs {d}", fast.diameter);
        let pi = inst.policy_for_pair(inst.good_pairs[0]);
        let t = expected_hitting_times(&inst.mdp, &pi).unwrap()[0];
        ensure!((t - params.t_star).abs() <= 1e-8 * t, "T* {t}");
        let costs = inst.costs(30, params.seed);
        ensure!(costs == inst.costs(30, params.seed), "stream not reproducible");
        ensure!(costs.iter().all(|c| c.support_size() <= params.sparsity), "support above M");
        // Comparator identity: T' times the cheapest good pair's total.
        let cmp = best_in_hindsight(&inst.mdp, &costs).unwrap();
        let best = inst
            .good_pairs
            .iter()
            .map(|&g| costs.iter().map(|c| c.get(g)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let want = (inst.t_prime * best).min(inst.d_prime * costs.len() as f64);
        ensure!((cmp.total - want).abs() <= 1e-6 * want.max(1.0), "comparator {} vs {want}", cmp.total);
        Ok(())
    })
}

pub fn comparator_beats_enumeration(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 6, 3);
        let k = r.random_range(1..6);
        let costs: Vec<CostVector> = (1..=k).map(|e| random_cost(r, mdp.num_pairs(), e)).collect();
        let cmp = best_in_hindsight(&mdp, &costs).map_err(|e| fail(e.to_string()))?;
        for (actions, total) in brute_force_totals(&mdp, &costs) {
            ensure!(cmp.total <= total + 1e-7 * total.max(1.0), "{actions:?} costs {total} < {}", cmp.total);
        }
        Ok(())
    })
}

pub fn trace_prefix_sums_and_csv(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mut t = RegretTrace::new();
        for k in 1..=r.random_range(1..50) {
            t.push(TraceRecord {
                episode: k,
                learner_loss: r.random_range(0.0..10.0),
                comparator_loss: r.random_range(0.0..10.0),
                cum_regret: 0.0,
                penalty_cert: r.random_bool(0.5).then(|| r.random_range(-1.0..1.0)),
                stability_cert: None,
                proj_iters: r.random_range(0..100),
                kkt_residual: r.random_range(0.0..1e-8),
                interval_b: Some(1),
                sampled_instance: None,
            });
        }
        let mut acc = 0.0;
        for rec in &t.records {
            acc += rec.learner_loss - rec.comparator_loss;
            ensure!((acc - rec.cum_regret).abs() <= 1e-9, "prefix sum drift");
        }
        let mut a = Vec::new();
        t.write_csv(&mut a).unwrap();
        let back = RegretTrace::read_csv(&a[..]).unwrap();
        let mut b = Vec::new();
        back.write_csv(&mut b).unwrap();
        ensure!(a == b, "CSV not byte-stable");
        Ok(())
    })
}

/// Monte Carlo episode length against the exact hitting time (few cases: each
/// one runs 10^5 rollouts).
pub fn rollout_length_consistency(cases: u32) -> Result<(), String> {
    run_seeded(cases, |r| {
        let mdp = random_mdp(r, 6, 3);
        let pi = random_policy(r, mdp.num_states(), mdp.num_actions(), 0.3);
        let t = expected_hitting_times(&mdp, &pi).unwrap()[mdp.start_state()];
        let mut rr = rng::seeded(r.random());
        let n = 100_000;
        let lens: Vec<f64> = (0..n)
            .map(|_| rollout(&mdp, &pi, &CostVector::zero(1), &mut rr, 1_000_000).unwrap().1 as f64)
            .collect();
        let m = lens.iter().sum::<f64>() / n as f64;
        let var = lens.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        ensure!((m - t).abs() <= 3.0 * se + 1e-12, "mean {m} vs {t} (se {se})");
        Ok(())
    })
}
