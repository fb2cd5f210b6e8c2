//! One OMD step over the occupancy polytope
//! `Delta(T) = { q >= 0 : flow conservation, sum q <= T }`.
//!
//! The step is the closed-form mirror update followed by a Bregman projection.
//! The projection is solved in the Lagrangian dual over `lambda >= 0` (mass) and
//! `v` (one multiplier per state). Writing
//!
//! ```text
//! adj(s,a) = lambda + sum_s' P(s'|s,a) v(s') - v(s)
//! ```
//!
//! the primal point is `q = [q'^(1/p) - adj/(p+1)]_+^p` for `psi_p` and
//! `q = q' exp(-adj)` for entropy, and the (negated) dual objective is
//!
//! ```text
//! F(lambda, v) = sum_i [q'_i^(1/p) - adj_i/(p+1)]_+^(p+1) - v(s0) + lambda T   (psi_p)
//! F(lambda, v) = sum_i q'_i exp(-adj_i)                  - v(s0) + lambda T   (entropy)
//! ```
//!
//! Its gradient in `v` is the flow residual of `q` and in `lambda` it is the mass
//! slack `T - sum q`, so a stationary point is a feasible projection. `F` is
//! minimized by a projected Newton method with Armijo backtracking: the Newton
//! system `A W A^T d = -g` (with `W` the inverse Hessian of the regularizer) is
//! solved matrix-free by Jacobi-preconditioned CG, and `lambda` is held out of
//! it while pinned at zero. When the Newton direction fails its line search,
//! the iteration falls back to the gradient scaled by the Hessian diagonal.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};
use crate::mdp::{fast_policy_and_diameter, CostVector, FastPolicy, OccupancyMeasure, SspMdp};
use crate::regularizers::Regularizer;

/// Entries below this are flushed to zero.
pub const FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Bound on the flow residual, the projected mass gradient and `|lambda (T - sum q)|`.
    pub tol: f64,
    /// For entropy: bound on `|g_t| / h_t`, the scaled step in each `v(t)`. The
    /// absolute test alone cannot resolve states carrying vanishing mass.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub contraction: f64,
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            rel_tol: 1e-9,
            max_iter: 100_000,
            armijo: 1e-4,
            contraction: 0.5,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DualVariables {
    pub lambda: f64,
    pub v: Vec<f64>,
}

impl DualVariables {
    pub fn zeros(num_states: usize) -> Self {
        Self {
            lambda: 0.0,
            v: vec![0.0; num_states],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub iterations: usize,
    /// max of flow residual, projected mass gradient and complementarity.
    pub kkt_residual: f64,
    pub flow_residual: f64,
    /// `T - sum q`.
    pub mass_slack: f64,
    pub complementarity: f64,
    /// Entropy only: `max |g_t| / h_t` at the solution.
    pub rel_residual: f64,
    /// `F` at the solution, up to an additive constant.
    pub dual_objective: f64,
    /// Largest increase of `F` over an accepted step (rounding only).
    pub max_objective_increase: f64,
    pub converged: bool,
}

/// Closed-form minimizer of `eta <c, q> + D(q, q_k)` over the nonnegative orthant.
/// Only coordinates in the cost support change.
pub fn unconstrained_step(reg: &Regularizer, q_k: &[f64], c_k: &CostVector, eta: f64) -> Vec<f64> {
    let mut out = q_k.to_vec();
    for &(i, c) in c_k.entries() {
        out[i] = match *reg {
            Regularizer::LrNorm { p } => {
                let x = q_k[i].powf(1.0 / p) - eta * c / (p + 1.0);
                if x > 0.0 {
                    x.powf(p)
                } else {
                    0.0
                }
            }
            Regularizer::NegativeEntropy => q_k[i] * (-eta * c).exp(),
        };
        if out[i] < FLUSH {
            out[i] = 0.0;
        }
    }
    out
}

/// Per-pair data reused across projections on the same MDP.
struct Layout {
    self_prob: Vec<f64>,
}

impl Layout {
    fn new(mdp: &SspMdp) -> Self {
        let self_prob = (0..mdp.num_pairs())
            .map(|i| {
                let s = mdp.state_of(i);
                let (st, pr) = mdp.successors(i);
                st.iter().zip(pr).filter(|(&t, _)| t == s).map(|(_, &p)| p).sum()
            })
            .collect();
        Self { self_prob }
    }
}

struct Dual<'a> {
    mdp: &'a SspMdp,
    layout: &'a Layout,
    reg: Regularizer,
    bound: f64,
    /// `q'^(1/p)` for `psi_p`, `q'` for entropy.
    base: Vec<f64>,
}

/// Primal quantities at a dual point.
#[derive(Clone)]
struct Primal {
    q: Vec<f64>,
    /// `psi_p`: `u = base - adj/(p+1)`. Unused for entropy.
    u: Vec<f64>,
}

struct Gradient {
    g_v: Vec<f64>,
    g_lambda: f64,
    h_v: Vec<f64>,
    h_lambda: f64,
    mass: f64,
}

impl<'a> Dual<'a> {
    fn new(mdp: &'a SspMdp, layout: &'a Layout, reg: Regularizer, bound: f64, q_prime: &[f64]) -> Self {
        let base = match reg {
            Regularizer::LrNorm { p } => q_prime.iter().map(|&x| x.powf(1.0 / p)).collect(),
            Regularizer::NegativeEntropy => q_prime.to_vec(),
        };
        Self {
            mdp,
            layout,
            reg,
            bound,
            base,
        }
    }

    #[inline]
    fn adj(&self, i: usize, lambda: f64, v: &[f64]) -> f64 {
        let (st, pr) = self.mdp.successors(i);
        let mut pv = 0.0;
        for (&t, &p) in st.iter().zip(pr) {
            pv += p * v[t];
        }
        lambda + pv - v[self.mdp.state_of(i)]
    }

    fn primal(&self, dual: &DualVariables, out: &mut Primal) {
        let n = self.base.len();
        out.q.resize(n, 0.0);
        out.u.resize(n, 0.0);
        match self.reg {
            Regularizer::LrNorm { p } => {
                let k = 1.0 / (p + 1.0);
                for i in 0..n {
                    let u = self.base[i] - self.adj(i, dual.lambda, &dual.v) * k;
                    out.u[i] = u;
                    let q = if u > 0.0 { u.powf(p) } else { 0.0 };
                    out.q[i] = if q < FLUSH { 0.0 } else { q };
                }
            }
            Regularizer::NegativeEntropy => {
                for i in 0..n {
                    let b = self.base[i];
                    let q = if b > 0.0 {
                        b * (-self.adj(i, dual.lambda, &dual.v)).exp()
                    } else {
                        0.0
                    };
                    out.q[i] = if q < FLUSH { 0.0 } else { q };
                }
            }
        }
    }

    fn objective(&self, dual: &DualVariables, x: &Primal) -> f64 {
        let s0 = self.mdp.start_state();
        let sum: f64 = match self.reg {
            Regularizer::LrNorm { p } => x
                .u
                .iter()
                .map(|&u| if u > 0.0 { u.powf(p + 1.0) } else { 0.0 })
                .sum(),
            Regularizer::NegativeEntropy => x.q.iter().sum(),
        };
        sum - dual.v[s0] + dual.lambda * self.bound
    }

    /// Weight `psi''(q_i)^{-1}` at the current primal point.
    #[inline]
    fn weight(&self, i: usize, x: &Primal) -> f64 {
        match self.reg {
            Regularizer::LrNorm { p } => {
                let u = x.u[i];
                if u > 0.0 && x.q[i] > 0.0 {
                    p / (p + 1.0) * u.powf(p - 1.0)
                } else {
                    0.0
                }
            }
            Regularizer::NegativeEntropy => x.q[i],
        }
    }

    fn gradient(&self, x: &Primal, out: &mut Gradient) {
        let ns = self.mdp.num_states();
        out.g_v.clear();
        out.g_v.resize(ns, 0.0);
        out.h_v.clear();
        out.h_v.resize(ns, 0.0);
        let mut mass = 0.0;
        let mut h_lambda = 0.0;
        for (i, &q) in x.q.iter().enumerate() {
            let w = self.weight(i, x);
            if q == 0.0 && w == 0.0 {
                continue;
            }
            let s = self.mdp.state_of(i);
            mass += q;
            h_lambda += w;
            out.g_v[s] += q;
            let sp = self.layout.self_prob[i];
            out.h_v[s] += w * (1.0 - sp) * (1.0 - sp);
            let (st, pr) = self.mdp.successors(i);
            for (&t, &p) in st.iter().zip(pr) {
                out.g_v[t] -= p * q;
                if t != s {
                    out.h_v[t] += w * p * p;
                }
            }
        }
        out.g_v[self.mdp.start_state()] -= 1.0;
        out.g_lambda = self.bound - mass;
        out.h_lambda = h_lambda;
        out.mass = mass;
    }

    /// `(H x)` for `H = sum_i w_i b_i b_i^T`, `b_i = (e_s - P_i, -1)`, restricted
    /// to the `v` block and, when `with_lambda`, the `lambda` row.
    fn hess_vec(&self, w: &[f64], x_v: &[f64], x_l: f64, out_v: &mut [f64]) -> f64 {
        out_v.fill(0.0);
        let mut out_l = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            let s = self.mdp.state_of(i);
            let (st, pr) = self.mdp.successors(i);
            let mut z = x_v[s] - x_l;
            for (&t, &p) in st.iter().zip(pr) {
                z -= p * x_v[t];
            }
            let wz = wi * z;
            out_v[s] += wz;
            for (&t, &p) in st.iter().zip(pr) {
                out_v[t] -= wz * p;
            }
            out_l -= wz;
        }
        out_l
    }

    /// Exact-as-possible change of `F`, summed term by term, with its rounding
    /// allowance.
    fn delta_objective(
        &self,
        old: &Primal,
        new: &Primal,
        d_v: &[f64],
        alpha: f64,
        d_lambda: f64,
    ) -> (f64, f64) {
        let s0 = self.mdp.start_state();
        let mut total = 0.0;
        let mut scale = 0.0;
        let dadj = |i: usize| -> f64 {
            let (st, pr) = self.mdp.successors(i);
            let mut pv = 0.0;
            for (&t, &p) in st.iter().zip(pr) {
                pv += p * d_v[t];
            }
            d_lambda + alpha * (pv - d_v[self.mdp.state_of(i)])
        };
        match self.reg {
            Regularizer::LrNorm { p } => {
                for i in 0..old.u.len() {
                    let (uo, un) = (old.u[i], new.u[i]);
                    if uo <= 0.0 && un <= 0.0 {
                        continue;
                    }
                    let term = if uo > 0.0 && un > 0.0 {
                        let du = -dadj(i) / (p + 1.0);
                        uo.powf(p + 1.0) * ((p + 1.0) * (du / uo).ln_1p()).exp_m1()
                    } else {
                        un.max(0.0).powf(p + 1.0) - uo.max(0.0).powf(p + 1.0)
                    };
                    total += term;
                    scale += term.abs();
                }
            }
            Regularizer::NegativeEntropy => {
                for i in 0..old.q.len() {
                    if old.q[i] == 0.0 && new.q[i] == 0.0 {
                        continue;
                    }
                    let term = if old.q[i] > 0.0 {
                        old.q[i] * (-dadj(i)).exp_m1()
                    } else {
                        new.q[i]
                    };
                    total += term;
                    scale += term.abs();
                }
            }
        }
        let dv0 = alpha * d_v[s0];
        let dl = d_lambda * self.bound;
        total += dl - dv0;
        scale += dl.abs() + dv0.abs();
        (total, 1e-13 * scale + 1e-300)
    }
}

fn kkt(grad: &Gradient, lambda: f64) -> (f64, f64, f64) {
    let flow = grad.g_v.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let proj_mass = if lambda > 0.0 {
        grad.g_lambda.abs()
    } else {
        (-grad.g_lambda).max(0.0)
    };
    let comp = (lambda * grad.g_lambda).abs();
    (flow, proj_mass, comp)
}

fn rel_step(grad: &Gradient) -> f64 {
    grad.g_v
        .iter()
        .zip(&grad.h_v)
        .map(|(&g, &h)| {
            if g == 0.0 {
                0.0
            } else if h > 0.0 {
                g.abs() / h
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Workspace for the Newton-CG direction.
struct Cg {
    w: Vec<f64>,
    x: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    hp: Vec<f64>,
}

impl Cg {
    fn new(ns: usize, n: usize) -> Self {
        Self {
            w: vec![0.0; n],
            x: vec![0.0; ns],
            r: vec![0.0; ns],
            z: vec![0.0; ns],
            p: vec![0.0; ns],
            hp: vec![0.0; ns],
        }
    }
}

const CG_DAMPING: f64 = 1e-10;
/// Iterations without halving the relative residual before it is taken as converged.
const REL_STALL: usize = 30;
const CG_FORCING: f64 = 1e-2;

/// Inexact Newton direction by Jacobi-preconditioned CG on the dual Hessian.
/// `lambda` is part of the system only when `lambda_free`. Coordinates with
/// zero curvature are held fixed. Returns `None` if CG breaks down at once.
fn newton_direction(
    problem: &Dual<'_>,
    x: &Primal,
    grad: &Gradient,
    lambda_free: bool,
    cg: &mut Cg,
    d_v: &mut [f64],
) -> Option<f64> {
    let ns = grad.g_v.len();
    for i in 0..cg.w.len() {
        cg.w[i] = problem.weight(i, x);
    }
    let diag = |t: usize| grad.h_v[t] * (1.0 + CG_DAMPING);
    let diag_l = grad.h_lambda * (1.0 + CG_DAMPING);
    let use_l = lambda_free && grad.h_lambda > 0.0;
    // Scaled residual norms: preconditioned 2-norm and max |r_t| / h_t.
    let norms = |r: &[f64], r_l: f64| -> (f64, f64) {
        let mut two = 0.0;
        let mut inf = 0.0f64;
        for t in 0..ns {
            if grad.h_v[t] > 0.0 {
                two += r[t] * r[t] / diag(t);
                inf = inf.max(r[t].abs() / diag(t));
            }
        }
        if use_l {
            two += r_l * r_l / diag_l;
            inf = inf.max(r_l.abs() / diag_l);
        }
        (two.sqrt(), inf)
    };
    let mut x_l = 0.0;
    let mut r_l = if use_l { -grad.g_lambda } else { 0.0 };
    for t in 0..ns {
        cg.x[t] = 0.0;
        cg.r[t] = if grad.h_v[t] > 0.0 { -grad.g_v[t] } else { 0.0 };
        cg.z[t] = if grad.h_v[t] > 0.0 { cg.r[t] / diag(t) } else { 0.0 };
        cg.p[t] = cg.z[t];
    }
    let mut z_l = if use_l { r_l / diag_l } else { 0.0 };
    let mut p_l = z_l;
    let mut rz: f64 = (0..ns).map(|t| cg.r[t] * cg.z[t]).sum::<f64>() + r_l * z_l;
    let (two0, inf0) = norms(&cg.r, r_l);
    if two0 == 0.0 {
        return None;
    }
    let max_cg = (ns + 1).clamp(10, 200);
    let mut done_any = false;
    for _ in 0..max_cg {
        let mut hp_l = problem.hess_vec(&cg.w, &cg.p, if use_l { p_l } else { 0.0 }, &mut cg.hp);
        for t in 0..ns {
            cg.hp[t] += CG_DAMPING * grad.h_v[t] * cg.p[t];
        }
        hp_l += CG_DAMPING * grad.h_lambda * p_l;
        if !use_l {
            hp_l = 0.0;
        }
        let php: f64 = (0..ns).map(|t| cg.p[t] * cg.hp[t]).sum::<f64>() + p_l * hp_l;
        if !(php > 0.0) {
            break;
        }
        let a = rz / php;
        for t in 0..ns {
            cg.x[t] += a * cg.p[t];
            cg.r[t] -= a * cg.hp[t];
        }
        x_l += a * p_l;
        r_l -= a * hp_l;
        done_any = true;
        let (two, inf) = norms(&cg.r, r_l);
        if two <= CG_FORCING * two0 && inf <= CG_FORCING * inf0 {
            break;
        }
        for t in 0..ns {
            cg.z[t] = if grad.h_v[t] > 0.0 { cg.r[t] / diag(t) } else { 0.0 };
        }
        z_l = if use_l { r_l / diag_l } else { 0.0 };
        let rz_new: f64 = (0..ns).map(|t| cg.r[t] * cg.z[t]).sum::<f64>() + r_l * z_l;
        let beta = rz_new / rz;
        rz = rz_new;
        for t in 0..ns {
            cg.p[t] = cg.z[t] + beta * cg.p[t];
        }
        p_l = z_l + beta * p_l;
    }
    if !done_any {
        return None;
    }
    d_v.copy_from_slice(&cg.x);
    Some(if use_l { x_l } else { 0.0 })
}

fn solve(
    problem: &Dual<'_>,
    mut dual: DualVariables,
    cfg: &SolverConfig,
) -> Result<(OccupancyMeasure, DualVariables, ProjectionReport)> {
    let ns = problem.mdp.num_states();
    let n = problem.base.len();
    let clamp = match problem.reg {
        Regularizer::LrNorm { p } => {
            10.0 * (p + 1.0) * problem.base.iter().copied().fold(1.0, f64::max)
        }
        Regularizer::NegativeEntropy => 10.0,
    };
    let mut cur = Primal {
        q: vec![0.0; n],
        u: vec![0.0; n],
    };
    let mut trial = cur.clone();
    problem.primal(&dual, &mut cur);
    let mut grad = Gradient {
        g_v: Vec::new(),
        g_lambda: 0.0,
        h_v: Vec::new(),
        h_lambda: 0.0,
        mass: 0.0,
    };
    let mut d_v = vec![0.0; ns];
    let mut trial_dual = dual.clone();
    let mut cg = Cg::new(ns, n);
    let mut best_rel = f64::INFINITY;
    let mut stall = 0usize;
    let mut alpha_prev: f64 = 1.0;
    let mut iterations = 0;
    let mut max_increase = f64::NEG_INFINITY;
    let check_rel = matches!(problem.reg, Regularizer::NegativeEntropy);

    loop {
        problem.gradient(&cur, &mut grad);
        let (flow, proj_mass, comp) = kkt(&grad, dual.lambda);
        let res = flow.max(proj_mass).max(comp);
        let rel = if check_rel { rel_step(&grad) } else { 0.0 };
        if rel < 0.5 * best_rel {
            best_rel = rel;
            stall = 0;
        } else {
            stall += 1;
        }
        // The relative test can sit on a rounding floor for states whose mass
        // is many orders below the rest; accept once it stops improving.
        let done = res <= cfg.tol && (rel <= cfg.rel_tol || stall >= REL_STALL);
        let report = |converged: bool, iterations: usize, dual: &DualVariables, inc: f64| {
            ProjectionReport {
                iterations,
                kkt_residual: res,
                flow_residual: flow,
                mass_slack: grad.g_lambda,
                complementarity: comp,
                rel_residual: rel,
                dual_objective: problem.objective(dual, &cur),
                max_objective_increase: inc.max(0.0),
                converged,
            }
        };
        if done {
            let rep = report(true, iterations, &dual, max_increase);
            let q = OccupancyMeasure::from_raw(std::mem::take(&mut cur.q), problem.bound);
            return Ok((q, dual, rep));
        }
        if iterations >= cfg.max_iter {
            return Err(SspError::NonConvergence {
                iterations,
                kkt_residual: res,
            });
        }

        // lambda is held out of the Newton system when it is epsilon-close to
        // its bound with the gradient pushing into it.
        let lambda_free = grad.g_lambda < 0.0 || dual.lambda > res.min(1e-3);
        let flat_move = (0..ns).any(|t| grad.h_v[t] == 0.0 && grad.g_v[t] != 0.0);
        // A Newton direction from a nearly singular system can fail its line
        // search outright or stall under the clamp; the scaled gradient is the
        // fallback.
        let mut try_newton = true;
        let mut accepted;
        let mut alpha;
        loop {
            let mut newton = if flat_move || !try_newton {
                None
            } else {
                newton_direction(problem, &cur, &grad, lambda_free, &mut cg, &mut d_v)
            };
            if let Some(d_l) = newton {
                let lin: f64 = grad.g_v.iter().zip(&d_v).map(|(g, d)| g * d).sum::<f64>() + grad.g_lambda * d_l;
                if !(lin < 0.0) {
                    newton = None;
                }
            }
            let mut rescaled = false;
            let d_lambda = match newton {
                Some(_) if !lambda_free => {
                    let big = d_v.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                    let scale = if big > clamp { clamp / big } else { 1.0 };
                    rescaled = scale < 1.0;
                    d_v.iter_mut().for_each(|d| *d *= scale);
                    if grad.h_lambda > 0.0 {
                        (-grad.g_lambda / grad.h_lambda).clamp(-clamp, clamp)
                    } else {
                        -dual.lambda
                    }
                }
                Some(d_l) => {
                    // Scale the whole direction so no coordinate exceeds the clamp.
                    let big = d_v.iter().fold(d_l.abs(), |m, d| m.max(d.abs()));
                    let scale = if big > clamp { clamp / big } else { 1.0 };
                    rescaled = scale < 1.0;
                    d_v.iter_mut().for_each(|d| *d *= scale);
                    d_l * scale
                }
                None => {
                    let h_max = grad.h_v.iter().copied().fold(0.0, f64::max);
                    let h_floor = 1e-12 * h_max.max(1e-300);
                    for t in 0..ns {
                        // Only flat coordinates get the floor; tiny curvatures are genuine.
                        let h = if grad.h_v[t] > 0.0 { grad.h_v[t] } else { h_floor };
                        d_v[t] = (-grad.g_v[t] / h).clamp(-clamp, clamp);
                    }
                    if grad.h_lambda > 0.0 {
                        (-grad.g_lambda / grad.h_lambda).clamp(-clamp, clamp)
                    } else {
                        0.0
                    }
                }
            };

            alpha = if newton.is_some() { 1.0 } else { (2.0 * alpha_prev).min(1.0) };
            accepted = false;
            let alpha_min = if newton.is_some() { 1e-12 } else { 1e-30 };
            while alpha > alpha_min {
                trial_dual.lambda = (dual.lambda + alpha * d_lambda).max(0.0);
                let dl = trial_dual.lambda - dual.lambda;
                for t in 0..ns {
                    trial_dual.v[t] = dual.v[t] + alpha * d_v[t];
                }
                problem.primal(&trial_dual, &mut trial);
                let (delta, noise) = problem.delta_objective(&cur, &trial, &d_v, alpha, dl);
                let lin: f64 = alpha
                    * grad
                        .g_v
                        .iter()
                        .zip(&d_v)
                        .map(|(g, d)| g * d)
                        .sum::<f64>()
                    + grad.g_lambda * dl;
                if delta <= cfg.armijo * lin + noise {
                    // A clamped Newton step can be dominated by a state with
                    // vanishing mass and leave everything else in place.
                    if rescaled && delta > -1e-13 * (1.0 + grad.mass) {
                        break;
                    }
                    max_increase = max_increase.max(delta);
                    accepted = true;
                    break;
                }
                alpha *= cfg.contraction;
            }
            if accepted || newton.is_none() {
                break;
            }
            try_newton = false;
        }
        if !accepted {
            // Line search exhausted: the iterate sits at the rounding floor.
            if res <= 10.0 * cfg.tol {
                let rep = report(true, iterations, &dual, max_increase);
                let q = OccupancyMeasure::from_raw(std::mem::take(&mut cur.q), problem.bound);
                return Ok((q, dual, rep));
            }
            return Err(SspError::NonConvergence {
                iterations,
                kkt_residual: res,
            });
        }
        std::mem::swap(&mut dual, &mut trial_dual);
        std::mem::swap(&mut cur, &mut trial);
        alpha_prev = alpha;
        iterations += 1;
    }
}

/// Bregman projection of `q_prime` onto `Delta(T)`, cold-started at zero duals.
pub fn project(
    reg: &Regularizer,
    q_prime: &[f64],
    mdp: &SspMdp,
    bound: f64,
    cfg: &SolverConfig,
) -> Result<(OccupancyMeasure, DualVariables, ProjectionReport)> {
    check_q_prime(q_prime, mdp)?;
    let layout = Layout::new(mdp);
    let problem = Dual::new(mdp, &layout, *reg, bound, q_prime);
    solve(&problem, DualVariables::zeros(mdp.num_states()), cfg)
}

fn check_q_prime(q_prime: &[f64], mdp: &SspMdp) -> Result<()> {
    if q_prime.len() != mdp.num_pairs() {
        return Err(SspError::Domain("vector dimension must be S*A".into()));
    }
    if let Some(i) = q_prime.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(SspError::Domain(format!("q' entry {i} is {}", q_prime[i])));
    }
    Ok(())
}

fn check_bound(mdp: &SspMdp, bound: f64) -> Result<()> {
    let fast = fast_policy_and_diameter(mdp)?;
    check_bound_with(&fast, mdp, bound)
}

/// `Delta(T)` is nonempty iff `T` is at least the fast policy's start hitting time.
pub fn check_bound_with(fast: &FastPolicy, mdp: &SspMdp, bound: f64) -> Result<()> {
    let min_t = fast.start_hitting_time(mdp);
    if !(bound >= min_t * (1.0 - 1e-12)) {
        return Err(SspError::InfeasibleT {
            bound,
            min_hitting_time: min_t,
        });
    }
    Ok(())
}

/// Minimizer of the regularizer over `Delta(T)`: the projection of the
/// all-ones vector, which is where both gradients vanish up to a constant.
pub fn init_occupancy(
    mdp: &SspMdp,
    bound: f64,
    reg: &Regularizer,
    cfg: &SolverConfig,
) -> Result<(OccupancyMeasure, ProjectionReport)> {
    check_bound(mdp, bound)?;
    let (q, _, rep) = project(reg, &vec![1.0; mdp.num_pairs()], mdp, bound, cfg)?;
    Ok((q, rep))
}

pub fn omd_step(
    reg: &Regularizer,
    q_k: &OccupancyMeasure,
    c_k: &CostVector,
    eta: f64,
    mdp: &SspMdp,
    bound: f64,
    cfg: &SolverConfig,
) -> Result<(OccupancyMeasure, ProjectionReport)> {
    let q_prime = unconstrained_step(reg, q_k.values(), c_k, eta);
    let (q, _, rep) = project(reg, &q_prime, mdp, bound, cfg)?;
    Ok((q, rep))
}

/// Stateful wrapper around [`omd_step`] that keeps the last dual solution as a
/// warm start. One engine per experiment thread.
#[derive(Debug, Clone)]
pub struct OmdEngine {
    mdp: Arc<SspMdp>,
    layout: Arc<Layout>,
    reg: Regularizer,
    bound: f64,
    cfg: SolverConfig,
    dual: Option<DualVariables>,
}

impl std::fmt::Debug for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Layout").field("pairs", &self.self_prob.len()).finish()
    }
}

impl OmdEngine {
    pub fn new(mdp: Arc<SspMdp>, reg: Regularizer, bound: f64, cfg: SolverConfig) -> Result<Self> {
        check_bound(&mdp, bound)?;
        Ok(Self::new_unchecked(mdp, reg, bound, cfg))
    }

    /// Skips the feasibility check (the caller already ran it).
    pub fn new_unchecked(mdp: Arc<SspMdp>, reg: Regularizer, bound: f64, cfg: SolverConfig) -> Self {
        let layout = Arc::new(Layout::new(&mdp));
        Self {
            mdp,
            layout,
            reg,
            bound,
            cfg,
            dual: None,
        }
    }

    pub fn mdp(&self) -> &Arc<SspMdp> {
        &self.mdp
    }

    pub fn regularizer(&self) -> Regularizer {
        self.reg
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn dual(&self) -> Option<&DualVariables> {
        self.dual.as_ref()
    }

    /// Drops the warm start.
    pub fn reset(&mut self) {
        self.dual = None;
    }

    /// Switches regularizer, dropping the warm start.
    pub fn set_regularizer(&mut self, reg: Regularizer) {
        self.reg = reg;
        self.dual = None;
    }

    pub fn project(&mut self, q_prime: &[f64]) -> Result<(OccupancyMeasure, ProjectionReport)> {
        check_q_prime(q_prime, &self.mdp)?;
        let problem = Dual::new(&self.mdp, &self.layout, self.reg, self.bound, q_prime);
        let zero = DualVariables::zeros(self.mdp.num_states());
        // Warm start only if it is the better of the two starting points.
        let start = match (&self.dual, self.cfg.warm_start) {
            (Some(prev), true) => {
                let mut x = Primal {
                    q: Vec::new(),
                    u: Vec::new(),
                };
                problem.primal(prev, &mut x);
                let f_prev = problem.objective(prev, &x);
                problem.primal(&zero, &mut x);
                let f_zero = problem.objective(&zero, &x);
                if f_prev < f_zero {
                    prev.clone()
                } else {
                    zero
                }
            }
            _ => zero,
        };
        let (q, dual, rep) = solve(&problem, start, &self.cfg)?;
        self.dual = Some(dual);
        Ok((q, rep))
    }

    pub fn init(&mut self) -> Result<(OccupancyMeasure, ProjectionReport)> {
        self.reset();
        let ones = vec![1.0; self.mdp.num_pairs()];
        self.project(&ones)
    }

    pub fn step(
        &mut self,
        q_k: &OccupancyMeasure,
        c_k: &CostVector,
        eta: f64,
    ) -> Result<(OccupancyMeasure, ProjectionReport)> {
        let q_prime = unconstrained_step(&self.reg, q_k.values(), c_k, eta);
        self.project(&q_prime)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{check_flow_constraints, occupancy_of_policy, Next, Policy};

    fn two_arm() -> SspMdp {
        let mut b = SspMdp::builder(1, 2, 0);
        b.transition(0, 0, Next::Goal, 1.0).transition(0, 1, Next::Goal, 1.0);
        b.build().unwrap()
    }

    #[test]
    fn unconstrained_examples() {
        let r = Regularizer::lr_norm(2.0).unwrap();
        let c = CostVector::new(1, [(0, 1.0)]).unwrap();
        assert_eq!(unconstrained_step(&r, &[1.0, 0.3], &c, 3.0), vec![0.0, 0.3]);
        let ne = Regularizer::NegativeEntropy;
        let out = unconstrained_step(&ne, &[0.5], &c, 2f64.ln());
        assert!((out[0] - 0.25).abs() < 1e-16);
        assert_eq!(unconstrained_step(&r, &[0.7], &CostVector::zero(1), 1.0), vec![0.7]);
    }

    #[test]
    fn symmetric_init() {
        let mdp = two_arm();
        for reg in [Regularizer::lr_norm(3.0).unwrap(), Regularizer::NegativeEntropy] {
            let (q, rep) = init_occupancy(&mdp, 1.0, &reg, &SolverConfig::default()).unwrap();
            assert!(rep.converged);
            assert!((q.values()[0] - 0.5).abs() < 1e-9, "{:?}", q.values());
            assert!((q.values()[1] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn feasible_point_is_fixed() {
        let mut b = SspMdp::builder(2, 2, 0);
        b.transition(0, 0, Next::State(1), 1.0)
            .transition(0, 1, Next::Goal, 0.5)
            .transition(0, 1, Next::State(0), 0.5)
            .transition(1, 0, Next::Goal, 1.0)
            .transition(1, 1, Next::State(0), 0.3)
            .transition(1, 1, Next::Goal, 0.7);
        let mdp = b.build().unwrap();
        let pi = Policy::new(2, vec![0.3, 0.7, 0.6, 0.4]).unwrap();
        let q = occupancy_of_policy(&mdp, &pi).unwrap();
        for reg in [Regularizer::lr_norm(2.0).unwrap(), Regularizer::NegativeEntropy] {
            let (r, _, rep) = project(&reg, q.values(), &mdp, 10.0, &SolverConfig::default()).unwrap();
            assert!(rep.converged);
            for (a, b) in r.values().iter().zip(q.values()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn infeasible_bound() {
        let mut b = SspMdp::builder(1, 1, 0);
        b.transition(0, 0, Next::Goal, 0.5).transition(0, 0, Next::State(0), 0.5);
        let mdp = b.build().unwrap();
        let err = init_occupancy(&mdp, 1.5, &Regularizer::NegativeEntropy, &SolverConfig::default());
        assert!(matches!(err, Err(SspError::InfeasibleT { .. })));
    }

    #[test]
    fn active_mass_constraint() {
        // Action 1 loops; the cap forces most mass onto the fast action.
        let mut b = SspMdp::builder(1, 2, 0);
        b.transition(0, 0, Next::Goal, 1.0)
            .transition(0, 1, Next::Goal, 0.1)
            .transition(0, 1, Next::State(0), 0.9);
        let mdp = b.build().unwrap();
        let eng_cfg = SolverConfig::default();
        for reg in [Regularizer::lr_norm(2.0).unwrap(), Regularizer::NegativeEntropy] {
            let (q, _, rep) = project(&reg, &[0.1, 50.0], &mdp, 2.0, &eng_cfg).unwrap();
            let flow = check_flow_constraints(q.values(), &mdp, 2.0);
            assert!(flow.member, "{flow:?}");
            assert!(rep.mass_slack.abs() < 1e-8);
        }
    }
}
