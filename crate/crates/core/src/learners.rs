//! Full-information learners over occupancy measures.
//!
//! - [`OmdLearner`]: OMD over `Delta(T)` with a fixed regularizer and step size.
//!   [`BaseConfig`] gives the tuning `p = log(TM)`,
//!   `eta = sqrt(p T^(1+1/p) / (K D M^(1/p)))` for the `psi_p` family.
//! - [`SparseAgnostic`]: restarts OMD with the guess `m(b) = 2^(2^b)` whenever a
//!   cost vector is denser than the current guess.
//! - [`ParameterFree`]: runs one sparse-agnostic instance per scale
//!   `b(j) = 2^(j0 + j)` and mixes them with weighted exponential weights.

use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};
use crate::mdp::{
    fast_policy_and_diameter, policy_from_occupancy, CostVector, FastPolicy, OccupancyMeasure,
    Policy, SspMdp,
};
use crate::omd::{check_bound_with, OmdEngine, ProjectionReport, SolverConfig, FLUSH};
use crate::regularizers::Regularizer;
use crate::rng::{self, Rng};
use crate::trace::{RegretTrace, TraceRecord};

/// How the sparsity level `M` of a cost stream is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityMode {
    /// Number of nonzero entries.
    #[default]
    L0,
    /// Sum of entries, a weaker requirement that the same analysis covers.
    L1,
}

impl SparsityMode {
    pub fn measure(self, c: &CostVector) -> f64 {
        match self {
            SparsityMode::L0 => c.support_size() as f64,
            SparsityMode::L1 => c.l1_norm(),
        }
    }

    /// Largest measure over a stream, at least 1.
    pub fn observed(self, costs: &[CostVector]) -> f64 {
        costs.iter().map(|c| self.measure(c)).fold(1.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    /// Hitting-time cap `T` of the decision set.
    pub t: f64,
    /// Sparsity bound `M`.
    pub m: f64,
    pub k: usize,
    pub d: f64,
    #[serde(default)]
    pub mode: SparsityMode,
}

impl BaseConfig {
    pub fn new(t: f64, m: f64, k: usize, d: f64) -> Result<Self> {
        let cfg = Self {
            t,
            m,
            k,
            d,
            mode: SparsityMode::L0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn p(&self) -> f64 {
        (self.t * self.m).ln()
    }

    pub fn eta(&self) -> f64 {
        tuned_eta(self.p(), self.t, self.m, self.k, self.d)
    }

    /// Largest step size the stability argument allows, `4 M^(-1/p)`.
    pub fn eta_limit(&self) -> f64 {
        4.0 * self.m.powf(-1.0 / self.p())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > std::f64::consts::E) {
            return Err(SspError::BadParam(format!("need T > e, got {}", self.t)));
        }
        if !(self.m >= 1.0) || !(self.d > 0.0) || self.k == 0 {
            return Err(SspError::BadParam("need M >= 1, D > 0 and K >= 1".into()));
        }
        let (eta, limit) = (self.eta(), self.eta_limit());
        if !(eta <= limit) {
            return Err(SspError::BadParam(format!(
                "K = {} is too small: eta = {eta} exceeds 4 M^(-1/p) = {limit}",
                self.k
            )));
        }
        Ok(())
    }
}

fn tuned_eta(p: f64, t: f64, m: f64, k: usize, d: f64) -> f64 {
    (p * t.powf(1.0 + 1.0 / p) / (k as f64 * d * m.powf(1.0 / p))).sqrt()
}

/// Step size of entropy OMD with the usual tuning, `sqrt(T log(SAT) / (D K))`.
pub fn neg_entropy_eta(mdp: &SspMdp, t: f64, d: f64, k: usize) -> f64 {
    (t * (mdp.num_pairs() as f64 * t).ln() / (d * k as f64)).sqrt()
}

/// Diagnostics of one episode, produced when the cost is revealed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Step {
    /// Expected loss `<q_k, c_k>` of what was played (a mixture for the meta-learner).
    pub loss: f64,
    /// Loss of the sampled instance, when the learner samples.
    pub realized_loss: Option<f64>,
    pub penalty_cert: Option<f64>,
    pub stability_cert: Option<f64>,
    pub proj_iters: usize,
    pub kkt_residual: f64,
    pub interval_b: Option<u32>,
    pub sampled_instance: Option<usize>,
}

pub trait Learner {
    fn name(&self) -> String;

    /// Policy for the coming episode. Randomized learners draw here; calling
    /// it again in the same episode returns the same draw.
    fn policy(&mut self) -> Policy;

    /// Reveals `c_k`, returns the episode's diagnostics and moves to `k + 1`.
    fn observe(&mut self, c: &CostVector) -> Result<Step>;

    /// Comparator occupancy used for the penalty certificate. Optional.
    fn set_comparator(&mut self, _q: Arc<Vec<f64>>) {}
}

/// OMD over `Delta(T)`.
#[derive(Debug, Clone)]
pub struct OmdLearner {
    engine: OmdEngine,
    fast: Arc<FastPolicy>,
    q: OccupancyMeasure,
    q1: OccupancyMeasure,
    eta: f64,
    /// Sparsity bound used by the stability certificate (`psi_p` only).
    cert_m: Option<f64>,
    comparator: Option<Arc<Vec<f64>>>,
    penalty_cert: Option<f64>,
    init_report: ProjectionReport,
}

impl OmdLearner {
    pub fn new(
        mdp: Arc<SspMdp>,
        reg: Regularizer,
        bound: f64,
        eta: f64,
        cfg: SolverConfig,
    ) -> Result<Self> {
        let fast = Arc::new(fast_policy_and_diameter(&mdp)?);
        Self::with_fast(mdp, fast, reg, bound, eta, cfg)
    }

    /// `psi_p` learner tuned by `base`.
    pub fn tuned(mdp: Arc<SspMdp>, base: &BaseConfig, cfg: SolverConfig) -> Result<Self> {
        base.validate()?;
        let reg = Regularizer::lr_norm(base.p())?;
        let mut l = Self::new(mdp, reg, base.t, base.eta(), cfg)?;
        l.cert_m = Some(base.m);
        Ok(l)
    }

    pub(crate) fn with_fast(
        mdp: Arc<SspMdp>,
        fast: Arc<FastPolicy>,
        reg: Regularizer,
        bound: f64,
        eta: f64,
        cfg: SolverConfig,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(SspError::BadParam(format!("step size {eta} must be positive")));
        }
        check_bound_with(&fast, &mdp, bound)?;
        let mut engine = OmdEngine::new_unchecked(mdp, reg, bound, cfg);
        let (q, init_report) = converged(engine.init())?;
        Ok(Self {
            engine,
            fast,
            q1: q.clone(),
            q,
            eta,
            cert_m: None,
            comparator: None,
            penalty_cert: None,
            init_report,
        })
    }

    pub fn occupancy(&self) -> &OccupancyMeasure {
        &self.q
    }

    pub fn initial_occupancy(&self) -> &OccupancyMeasure {
        &self.q1
    }

    pub fn init_report(&self) -> &ProjectionReport {
        &self.init_report
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn regularizer(&self) -> Regularizer {
        self.engine.regularizer()
    }

    pub fn bound(&self) -> f64 {
        self.engine.bound()
    }

    /// Enables the stability certificate with sparsity bound `m`.
    pub fn certify_with(&mut self, m: f64) {
        self.cert_m = Some(m);
    }

    /// Restarts from the regularizer minimizer, possibly with new parameters.
    pub fn restart(&mut self, reg: Regularizer, eta: f64) -> Result<ProjectionReport> {
        self.engine.set_regularizer(reg);
        self.eta = eta;
        let (q, rep) = converged(self.engine.init())?;
        self.q1 = q.clone();
        self.q = q;
        self.init_report = rep.clone();
        self.penalty_cert = self.compute_penalty_cert();
        Ok(rep)
    }

    fn compute_penalty_cert(&self) -> Option<f64> {
        let q_star = self.comparator.as_ref()?;
        let Regularizer::LrNorm { p } = self.engine.regularizer() else {
            return None;
        };
        let reg = self.engine.regularizer();
        let lhs = reg.value(q_star).ok()? - reg.value(self.q1.values()).ok()?;
        let t = self.engine.bound();
        Some(p * t.powf(1.0 + 1.0 / p) - lhs)
    }

    fn stability_cert(&self, c: &CostVector) -> Option<f64> {
        let m = self.cert_m?;
        let Regularizer::LrNorm { p } = self.engine.regularizer() else {
            return None;
        };
        let local = self.engine.regularizer().local_norm_sq(self.q.values(), c.entries());
        Some(m.powf(1.0 / p) * (1.0 + c.dot(self.q.values())) - local)
    }

    /// Loss and certificate for `c` at the current point, without updating.
    fn assess(&self, c: &CostVector) -> Step {
        Step {
            loss: c.dot(self.q.values()),
            penalty_cert: self.penalty_cert,
            stability_cert: self.stability_cert(c),
            ..Step::default()
        }
    }

    fn update(&mut self, c: &CostVector, step: &mut Step) -> Result<()> {
        if c.support_size() == 0 {
            return Ok(());
        }
        let (q, rep) = converged(self.engine.step(&self.q, c, self.eta))?;
        self.q = q;
        step.proj_iters = rep.iterations;
        step.kkt_residual = rep.kkt_residual;
        Ok(())
    }
}

fn converged(
    r: Result<(OccupancyMeasure, ProjectionReport)>,
) -> Result<(OccupancyMeasure, ProjectionReport)> {
    let (q, rep) = r?;
    if !rep.converged {
        return Err(SspError::NonConvergence {
            iterations: rep.iterations,
            kkt_residual: rep.kkt_residual,
        });
    }
    Ok((q, rep))
}

impl Learner for OmdLearner {
    fn name(&self) -> String {
        match self.engine.regularizer() {
            Regularizer::LrNorm { p } => format!("lr_norm(p={p:.4},eta={:.4e})", self.eta),
            Regularizer::NegativeEntropy => format!("neg_entropy(eta={:.4e})", self.eta),
        }
    }

    fn policy(&mut self) -> Policy {
        policy_from_occupancy(&self.q, &self.fast.policy)
    }

    fn observe(&mut self, c: &CostVector) -> Result<Step> {
        let mut step = self.assess(c);
        self.update(c, &mut step)?;
        Ok(step)
    }

    fn set_comparator(&mut self, q: Arc<Vec<f64>>) {
        self.comparator = Some(q);
        self.penalty_cert = self.compute_penalty_cert();
    }
}

/// `m(b) = 2^(2^b)`, saturating at `f64::MAX`.
pub fn sparsity_guess(b: u32) -> f64 {
    2f64.powf(2f64.powi(b as i32))
}

/// Smallest interval index whose guess covers `support`: `ceil(log2 log2 support)`, at least 1.
pub fn interval_for(support: usize) -> u32 {
    let mut b = 1;
    while sparsity_guess(b) < support as f64 {
        b += 1;
    }
    b
}

/// Sparse-agnostic OMD: `psi_p` with `p(b) = log(m(b) T)` and
/// `eta(b) = sqrt(p T^(1+1/p) / (D K m(b)^(1/p)))`, restarted from the minimizer
/// of the new regularizer whenever `||c_k||_0 > m(b)`.
#[derive(Debug, Clone)]
pub struct SparseAgnostic {
    inner: OmdLearner,
    t: f64,
    d: f64,
    k: usize,
    b: u32,
    restarts: Vec<usize>,
    episode: usize,
    eta_capped: bool,
}

impl SparseAgnostic {
    pub fn new(mdp: Arc<SspMdp>, t: f64, d: f64, k: usize, cfg: SolverConfig) -> Result<Self> {
        let fast = Arc::new(fast_policy_and_diameter(&mdp)?);
        Self::with_fast(mdp, fast, t, d, k, cfg)
    }

    pub(crate) fn with_fast(
        mdp: Arc<SspMdp>,
        fast: Arc<FastPolicy>,
        t: f64,
        d: f64,
        k: usize,
        cfg: SolverConfig,
    ) -> Result<Self> {
        if !(t > std::f64::consts::E) {
            return Err(SspError::BadParam(format!("need T > e, got {t}")));
        }
        if !(d > 0.0) || k == 0 {
            return Err(SspError::BadParam("need D > 0 and K >= 1".into()));
        }
        let (reg, eta, capped) = Self::params(1, t, d, k);
        let mut inner = OmdLearner::with_fast(mdp, fast, reg, t, eta, cfg)?;
        inner.certify_with(sparsity_guess(1));
        Ok(Self {
            inner,
            t,
            d,
            k,
            b: 1,
            restarts: Vec::new(),
            episode: 0,
            eta_capped: capped,
        })
    }

    /// Regularizer and step size of interval `b`. The step is capped at
    /// `4 m(b)^(-1/p)`, which only binds when `T` is large relative to `K`.
    fn params(b: u32, t: f64, d: f64, k: usize) -> (Regularizer, f64, bool) {
        let m = sparsity_guess(b);
        let p = (m * t).ln();
        let eta = tuned_eta(p, t, m, k, d);
        let limit = 4.0 * m.powf(-1.0 / p);
        (Regularizer::LrNorm { p }, eta.min(limit), eta > limit)
    }

    pub fn interval(&self) -> u32 {
        self.b
    }

    /// Episodes (1-based) at which a restart was triggered.
    pub fn restarts(&self) -> &[usize] {
        &self.restarts
    }

    pub fn eta_capped(&self) -> bool {
        self.eta_capped
    }

    pub fn bound(&self) -> f64 {
        self.t
    }

    pub fn occupancy(&self) -> &OccupancyMeasure {
        self.inner.occupancy()
    }

    pub fn current(&self) -> &OmdLearner {
        &self.inner
    }
}

impl Learner for SparseAgnostic {
    fn name(&self) -> String {
        format!("sparse_agnostic(T={})", self.t)
    }

    fn policy(&mut self) -> Policy {
        self.inner.policy()
    }

    fn observe(&mut self, c: &CostVector) -> Result<Step> {
        self.episode += 1;
        let interval = self.b;
        let mut step;
        if (c.support_size() as f64) <= sparsity_guess(self.b) {
            step = self.inner.assess(c);
            self.inner.update(c, &mut step)?;
        } else {
            // The triggering episode is charged at the old point; no OMD
            // update happens, so no stability certificate applies.
            step = Step {
                loss: c.dot(self.inner.occupancy().values()),
                penalty_cert: self.inner.penalty_cert,
                ..Step::default()
            };
            self.b = interval_for(c.support_size());
            let (reg, eta, capped) = Self::params(self.b, self.t, self.d, self.k);
            self.eta_capped |= capped;
            let rep = self.inner.restart(reg, eta)?;
            self.inner.certify_with(sparsity_guess(self.b));
            self.restarts.push(self.episode);
            step.proj_iters = rep.iterations;
            step.kkt_residual = rep.kkt_residual;
        }
        step.interval_b = Some(interval);
        Ok(step)
    }

    fn set_comparator(&mut self, q: Arc<Vec<f64>>) {
        self.inner.set_comparator(q);
    }
}

/// One weighted-entropy mirror step on the simplex:
/// `p'(j) = p(j) exp(-eta_j (x_j + mu))` with `mu` chosen by bisection so that
/// `p'` sums to one.
pub fn meta_step(weights: &[f64], etas: &[f64], x: &[f64]) -> Vec<f64> {
    assert!(weights.len() == etas.len() && etas.len() == x.len());
    let logw: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    // log sum_j p(j) exp(-eta_j (x_j + mu)), decreasing in mu.
    let f = |mu: f64| -> f64 {
        let terms: Vec<f64> = (0..x.len()).map(|j| logw[j] - etas[j] * (x[j] + mu)).collect();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    };
    let eta_min = etas.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-50.0 / eta_min, 50.0 / eta_min);
    // The root lies in [-max x, -min x] for nonnegative losses; widen if needed.
    while f(lo) < 0.0 {
        lo *= 2.0;
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * mid.abs().max(1.0) {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);
    let mut out: Vec<f64> = (0..x.len())
        .map(|j| (logw[j] - etas[j] * (x[j] + mu)).exp().max(FLUSH))
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w = (*w / total).max(FLUSH));
    out
}

/// Meta-learner over `N` sparse-agnostic instances at scales `b(j) = 2^(j0 + j)`.
#[derive(Debug, Clone)]
pub struct ParameterFree {
    instances: Vec<SparseAgnostic>,
    scales: Vec<f64>,
    etas: Vec<f64>,
    weights: Vec<f64>,
    j0: i32,
    rng: Rng,
    sampled: Option<usize>,
    instance_losses: Vec<f64>,
}

impl ParameterFree {
    /// `m_guess` enters the meta step sizes `eta_j = (D b(j) K log(b(j) m_guess))^(-1/4)`;
    /// [`ParameterFree::new`] uses `S A`.
    pub fn with_guess(
        mdp: Arc<SspMdp>,
        k: usize,
        m_guess: f64,
        seed: u64,
        cfg: SolverConfig,
    ) -> Result<Self> {
        if k < 2 {
            return Err(SspError::BadParam("need K > 1".into()));
        }
        let fast = Arc::new(fast_policy_and_diameter(&mdp)?);
        let d = fast.diameter;
        let j0 = fast.start_hitting_time(&mdp).log2().ceil() as i32 - 1;
        let n = (k as f64).log2().ceil() as i32 - j0;
        if n < 1 {
            return Err(SspError::BadParam(format!(
                "K = {k} leaves no instance above the fast hitting time"
            )));
        }
        let scales: Vec<f64> = (1..=n).map(|j| 2f64.powi(j0 + j)).collect();
        let etas: Vec<f64> = scales
            .iter()
            .map(|&b| (d * b * k as f64 * (b * m_guess).ln()).sqrt().powf(-0.5))
            .collect();
        let instances = scales
            .par_iter()
            .map(|&b| SparseAgnostic::with_fast(mdp.clone(), fast.clone(), b, d, k, cfg))
            .collect::<Result<Vec<_>>>()?;
        let weights = Self::prior(&etas);
        Ok(Self {
            instances,
            scales,
            instance_losses: vec![0.0; etas.len()],
            etas,
            weights,
            j0,
            rng: rng::seeded(seed),
            sampled: None,
        })
    }

    pub fn new(mdp: Arc<SspMdp>, k: usize, seed: u64, cfg: SolverConfig) -> Result<Self> {
        let guess = mdp.num_pairs() as f64;
        Self::with_guess(mdp, k, guess, seed, cfg)
    }

    /// `p_1(j) = eta_j / (eta_1 N)` for `j > 1`, with the first weight taking the rest.
    pub fn prior(etas: &[f64]) -> Vec<f64> {
        let n = etas.len() as f64;
        let mut p: Vec<f64> = etas.iter().map(|e| e / (etas[0] * n)).collect();
        p[0] = 1.0 - p[1..].iter().sum::<f64>();
        p
    }

    pub fn j0(&self) -> i32 {
        self.j0
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn instances(&self) -> &[SparseAgnostic] {
        &self.instances
    }

    /// Cumulative expected loss of each instance so far.
    pub fn instance_losses(&self) -> &[f64] {
        &self.instance_losses
    }

    fn draw(&mut self) -> usize {
        if let Some(j) = self.sampled {
            return j;
        }
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut pick = self.weights.len() - 1;
        for (j, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = j;
                break;
            }
        }
        self.sampled = Some(pick);
        pick
    }
}

impl Learner for ParameterFree {
    fn name(&self) -> String {
        format!("parameter_free(N={})", self.instances.len())
    }

    fn policy(&mut self) -> Policy {
        let j = self.draw();
        self.instances[j].policy()
    }

    fn observe(&mut self, c: &CostVector) -> Result<Step> {
        let j = self.draw();
        self.sampled = None;
        let steps = self
            .instances
            .par_iter_mut()
            .map(|inst| inst.observe(c))
            .collect::<Result<Vec<_>>>()?;
        let losses: Vec<f64> = steps.iter().map(|s| s.loss).collect();
        let expected: f64 = self.weights.iter().zip(&losses).map(|(w, l)| w * l).sum();
        for (acc, l) in self.instance_losses.iter_mut().zip(&losses) {
            *acc += l;
        }
        let x: Vec<f64> = losses
            .iter()
            .zip(&self.etas)
            .map(|(l, e)| l + 4.0 * e * l * l)
            .collect();
        self.weights = meta_step(&self.weights, &self.etas, &x);
        Ok(Step {
            loss: expected,
            realized_loss: Some(losses[j]),
            penalty_cert: None,
            stability_cert: None,
            proj_iters: steps.iter().map(|s| s.proj_iters).sum(),
            kkt_residual: steps.iter().map(|s| s.kkt_residual).fold(0.0, f64::max),
            interval_b: steps[j].interval_b,
            sampled_instance: Some(j + 1),
        })
    }

    fn set_comparator(&mut self, q: Arc<Vec<f64>>) {
        for inst in &mut self.instances {
            inst.set_comparator(q.clone());
        }
    }
}

/// Which loss of a sampling learner enters the regret column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossAccounting {
    /// `sum_j p_k(j) <q_k^j, c_k>`.
    #[default]
    Expected,
    /// `<q_k^{j_k}, c_k>` of the sampled instance.
    Realized,
}

/// Runs `learner` over the stream, appending to `trace` so that a failure
/// leaves the episodes completed so far in place.
pub fn run_learner_into(
    learner: &mut dyn Learner,
    costs: &[CostVector],
    comparator_losses: &[f64],
    accounting: LossAccounting,
    trace: &mut RegretTrace,
) -> Result<()> {
    if comparator_losses.len() != costs.len() {
        return Err(SspError::BadParam("one comparator loss per episode is required".into()));
    }
    for (k, (c, &cmp)) in costs.iter().zip(comparator_losses).enumerate() {
        let step = learner.observe(c)?;
        let loss = match accounting {
            LossAccounting::Expected => step.loss,
            LossAccounting::Realized => step.realized_loss.unwrap_or(step.loss),
        };
        trace.push(TraceRecord {
            episode: k + 1,
            learner_loss: loss,
            comparator_loss: cmp,
            cum_regret: 0.0,
            penalty_cert: step.penalty_cert,
            stability_cert: step.stability_cert,
            proj_iters: step.proj_iters,
            kkt_residual: step.kkt_residual,
            interval_b: step.interval_b,
            sampled_instance: step.sampled_instance,
        });
    }
    Ok(())
}

pub fn run_learner(
    learner: &mut dyn Learner,
    costs: &[CostVector],
    comparator_losses: &[f64],
) -> Result<RegretTrace> {
    let mut trace = RegretTrace::new();
    run_learner_into(learner, costs, comparator_losses, LossAccounting::Expected, &mut trace)?;
    Ok(trace)
}

fn attach(learner: &mut dyn Learner, comparator: Option<&[f64]>) {
    if let Some(q) = comparator {
        learner.set_comparator(Arc::new(q.to_vec()));
    }
}

fn zero_if_missing(costs: &[CostVector], losses: Option<&[f64]>) -> Vec<f64> {
    losses.map_or_else(|| vec![0.0; costs.len()], <[f64]>::to_vec)
}

/// Tuned `psi_p` OMD. `comparator` is the occupancy of the comparator policy
/// and its per-episode losses; without it the regret column is the raw loss.
pub fn run_base_omd(
    mdp: Arc<SspMdp>,
    costs: &[CostVector],
    cfg: &BaseConfig,
    comparator: Option<(&[f64], &[f64])>,
    solver: SolverConfig,
) -> Result<RegretTrace> {
    let mut l = OmdLearner::tuned(mdp, cfg, solver)?;
    attach(&mut l, comparator.map(|c| c.0));
    run_learner(&mut l, costs, &zero_if_missing(costs, comparator.map(|c| c.1)))
}

pub fn run_sparse_agnostic(
    mdp: Arc<SspMdp>,
    costs: &[CostVector],
    t: f64,
    d: f64,
    k: usize,
    comparator: Option<(&[f64], &[f64])>,
    solver: SolverConfig,
) -> Result<RegretTrace> {
    let mut l = SparseAgnostic::new(mdp, t, d, k, solver)?;
    attach(&mut l, comparator.map(|c| c.0));
    run_learner(&mut l, costs, &zero_if_missing(costs, comparator.map(|c| c.1)))
}

pub fn run_parameter_free(
    mdp: Arc<SspMdp>,
    costs: &[CostVector],
    seed: u64,
    comparator: Option<(&[f64], &[f64])>,
    solver: SolverConfig,
) -> Result<RegretTrace> {
    let mut l = ParameterFree::new(mdp, costs.len(), seed, solver)?;
    attach(&mut l, comparator.map(|c| c.0));
    run_learner(&mut l, costs, &zero_if_missing(costs, comparator.map(|c| c.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_failure_mdp;

    #[test]
    fn base_config_values() {
        let c = BaseConfig::new(10.0, 5.0, 1_000_000, 3.0).unwrap();
        assert!((c.p() - 50f64.ln()).abs() < 1e-12);
        assert!((c.p() - 3.912).abs() < 1e-3);
        assert!(c.eta() <= c.eta_limit());
        assert!(BaseConfig::new(2.0, 5.0, 1000, 3.0).is_err());
        assert!(BaseConfig::new(10.0, 5.0, 1, 3.0).is_err());
    }

    #[test]
    fn interval_rule() {
        assert_eq!(sparsity_guess(1), 4.0);
        assert_eq!(interval_for(3), 1);
        assert_eq!(interval_for(20), 3);
        assert_eq!(interval_for(16), 2);
        assert_eq!(interval_for(17), 3);
    }

    #[test]
    fn meta_step_examples() {
        let out = meta_step(&[0.5, 0.5], &[1.0, 1.0], &[0.0, 3f64.ln()]);
        assert!((out[0] - 0.75).abs() < 1e-12 && (out[1] - 0.25).abs() < 1e-12);
        let w = [0.2, 0.3, 0.5];
        let same = meta_step(&w, &[0.7; 3], &[2.0; 3]);
        for (a, b) in same.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
        let moved = meta_step(&w, &[0.7; 3], &[1.0, 0.0, 0.0]);
        assert!(moved[0] < w[0] && moved[1] > w[1] && moved[2] > w[2]);
        assert!((moved.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_sums_to_one() {
        let p = ParameterFree::prior(&[0.4, 0.3, 0.2, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[2] - 0.2 / (0.4 * 4.0)).abs() < 1e-15);
        assert!(p[0] >= 0.0);
    }

    #[test]
    fn zero_costs_keep_initial_point() {
        let inst = gen_failure_mdp(9).unwrap();
        let mdp = inst.mdp.clone();
        let mut l = OmdLearner::new(mdp, Regularizer::lr_norm(2.0).unwrap(), 4.0, 0.5, SolverConfig::default())
            .unwrap();
        let q1 = l.occupancy().clone();
        let costs: Vec<_> = (1..=5).map(CostVector::zero).collect();
        let trace = run_learner(&mut l, &costs, &[0.0; 5]).unwrap();
        assert_eq!(trace.total_regret(), 0.0);
        assert_eq!(l.occupancy(), &q1);
    }

    #[test]
    fn restart_on_dense_cost() {
        let inst = gen_failure_mdp(40).unwrap();
        let mut l = SparseAgnostic::new(inst.mdp.clone(), 4.0, 3.0, 100, SolverConfig::default()).unwrap();
        let sparse = inst.cost(1);
        let dense = CostVector::new(2, (0..20).map(|i| (i, 0.1))).unwrap();
        assert_eq!(l.observe(&sparse).unwrap().interval_b, Some(1));
        let s = l.observe(&dense).unwrap();
        assert_eq!(s.interval_b, Some(1));
        assert_eq!(s.stability_cert, None);
        assert_eq!(l.interval(), 3);
        assert_eq!(l.restarts(), &[2]);
        assert_eq!(l.observe(&inst.cost(3)).unwrap().interval_b, Some(3));
    }

    #[test]
    fn parameter_free_layout() {
        let inst = gen_failure_mdp(9).unwrap();
        // Fast hitting time 3, so j0 = ceil(log2 3) - 1 = 1 and b(1) = 4.
        let pf = ParameterFree::new(inst.mdp.clone(), 64, 1, SolverConfig::default()).unwrap();
        assert_eq!(pf.j0(), 1);
        assert_eq!(pf.scales()[0], 4.0);
        assert_eq!(pf.scales().len(), 5);
        assert!((pf.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
