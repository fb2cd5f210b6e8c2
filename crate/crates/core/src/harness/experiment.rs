//! Config-driven experiments: one regret trace per seed, written as CSV, plus a
//! JSON summary per experiment.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::comparator::best_in_hindsight;
use super::rollout::{rollout, EPISODE_CAP};
use super::stats::{loglog_fit, mean_se, LinearFit};
use crate::error::{Result, SspError};
use crate::instances::{
    gen_failure_mdp, gen_sparse_lb, gen_unknown_trans_lb, FailureInstance, InstanceMeta,
    SparseLbInstance, SparseLbParams, UnknownTransInstance, UnknownTransParams,
};
use crate::learners::{
    neg_entropy_eta, BaseConfig, Learner, LossAccounting, OmdLearner, ParameterFree,
    SparseAgnostic, SparsityMode,
};
use crate::mdp::{fast_policy_and_diameter, read_cost_stream, CostVector, MdpDocument, SspMdp};
use crate::omd::SolverConfig;
use crate::regularizers::Regularizer;
use crate::rng;
use crate::trace::{RegretTrace, TraceRecord};

/// Decision-set cap used on the failure instance when none is given. Every
/// policy there takes exactly 3 steps, so any cap of at least 3 gives the
/// same set; 4 keeps the mass constraint inactive.
pub const FAILURE_BOUND: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum InstanceSpec {
    Failure { num_states: usize },
    SparseLb(SparseLbParams),
    UnknownTrans(UnknownTransParams),
    /// An MDP document and a JSON-lines cost stream, one array of `{s, a, cost}` per episode.
    File { mdp: PathBuf, costs: PathBuf },
}

enum Source {
    Failure(FailureInstance),
    SparseLb(SparseLbInstance),
    UnknownTrans(UnknownTransInstance),
    File(Vec<CostVector>),
}

/// A generated or loaded instance ready to produce cost streams.
pub struct Instance {
    pub mdp: Arc<SspMdp>,
    pub meta: Option<InstanceMeta>,
    source: Source,
}

impl Instance {
    pub fn load(spec: &InstanceSpec) -> Result<Self> {
        Ok(match spec {
            InstanceSpec::Failure { num_states } => {
                let inst = gen_failure_mdp(*num_states)?;
                Self {
                    mdp: inst.mdp.clone(),
                    meta: Some(inst.meta()),
                    source: Source::Failure(inst),
                }
            }
            InstanceSpec::SparseLb(p) => {
                let inst = gen_sparse_lb(*p)?;
                Self {
                    mdp: inst.mdp.clone(),
                    meta: Some(inst.meta()),
                    source: Source::SparseLb(inst),
                }
            }
            InstanceSpec::UnknownTrans(p) => {
                let inst = gen_unknown_trans_lb(*p)?;
                Self {
                    mdp: inst.mdp.clone(),
                    meta: Some(inst.meta()),
                    source: Source::UnknownTrans(inst),
                }
            }
            InstanceSpec::File { mdp, costs } => {
                let doc: MdpDocument = serde_json::from_reader(std::io::BufReader::new(
                    std::fs::File::open(mdp)?,
                ))?;
                let meta = doc
                    .meta
                    .clone()
                    .and_then(|m| serde_json::from_value::<InstanceMeta>(m).ok());
                let mdp = Arc::new(doc.to_mdp()?);
                let reader = std::io::BufReader::new(std::fs::File::open(costs)?);
                let stream = read_cost_stream(reader, mdp.num_actions())?;
                Self {
                    mdp,
                    meta,
                    source: Source::File(stream),
                }
            }
        })
    }

    /// The first `k` cost vectors. Only the sparse lower bound is random; it
    /// draws from `seed`.
    pub fn costs(&self, k: usize, seed: u64) -> Result<Vec<CostVector>> {
        Ok(match &self.source {
            Source::Failure(inst) => inst.costs(k),
            Source::SparseLb(inst) => inst.costs(k, seed),
            Source::UnknownTrans(inst) => (1..=k).map(|e| inst.cost(e)).collect(),
            Source::File(stream) => {
                if stream.len() < k {
                    return Err(SspError::BadParam(format!(
                        "cost file has {} episodes, {k} requested",
                        stream.len()
                    )));
                }
                stream[..k].to_vec()
            }
        })
    }

    /// Cap used when a learner spec leaves `bound` out.
    pub fn default_bound(&self) -> Option<f64> {
        match &self.source {
            Source::Failure(_) => Some(FAILURE_BOUND),
            _ => self.meta.as_ref().map(|m| m.claimed_t_star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    /// Entropy OMD; `eta` defaults to `sqrt(T log(SAT) / (D K))`.
    NegEntropy {
        #[serde(default)]
        bound: Option<f64>,
        #[serde(default)]
        eta: Option<f64>,
    },
    /// `psi_p` OMD with explicit parameters.
    LrNorm {
        #[serde(default)]
        bound: Option<f64>,
        p: f64,
        eta: f64,
    },
    /// `psi_p` OMD tuned with `p = log(TM)`; `m` defaults to the observed sparsity.
    LrNormTuned {
        #[serde(default)]
        bound: Option<f64>,
        #[serde(default)]
        m: Option<f64>,
        #[serde(default)]
        mode: SparsityMode,
    },
    SparseAgnostic {
        #[serde(default)]
        bound: Option<f64>,
    },
    ParameterFree {
        #[serde(default)]
        m_guess: Option<f64>,
        #[serde(default)]
        accounting: LossAccounting,
    },
}

impl LearnerSpec {
    fn bound(&self, inst: &Instance) -> Result<f64> {
        let explicit = match self {
            LearnerSpec::NegEntropy { bound, .. }
            | LearnerSpec::LrNorm { bound, .. }
            | LearnerSpec::LrNormTuned { bound, .. }
            | LearnerSpec::SparseAgnostic { bound } => *bound,
            LearnerSpec::ParameterFree { .. } => return Ok(f64::NAN),
        };
        explicit
            .or_else(|| inst.default_bound())
            .ok_or_else(|| SspError::BadParam("learner needs a bound T for this instance".into()))
    }

    pub fn accounting(&self) -> LossAccounting {
        match self {
            LearnerSpec::ParameterFree { accounting, .. } => *accounting,
            _ => LossAccounting::Expected,
        }
    }

    pub fn build(
        &self,
        inst: &Instance,
        costs: &[CostVector],
        seed: u64,
        solver: SolverConfig,
    ) -> Result<Box<dyn Learner + Send>> {
        let mdp = inst.mdp.clone();
        let k = costs.len();
        let d = fast_policy_and_diameter(&mdp)?.diameter;
        let t = self.bound(inst)?;
        Ok(match self {
            LearnerSpec::NegEntropy { eta, .. } => {
                let eta = eta.unwrap_or_else(|| neg_entropy_eta(&mdp, t, d, k));
                Box::new(OmdLearner::new(mdp, Regularizer::NegativeEntropy, t, eta, solver)?)
            }
            LearnerSpec::LrNorm { p, eta, .. } => {
                Box::new(OmdLearner::new(mdp, Regularizer::lr_norm(*p)?, t, *eta, solver)?)
            }
            LearnerSpec::LrNormTuned { m, mode, .. } => {
                let m = m.unwrap_or_else(|| mode.observed(costs));
                let mut base = BaseConfig::new(t, m, k, d)?;
                base.mode = *mode;
                Box::new(OmdLearner::tuned(mdp, &base, solver)?)
            }
            LearnerSpec::SparseAgnostic { .. } => Box::new(SparseAgnostic::new(mdp, t, d, k, solver)?),
            LearnerSpec::ParameterFree { m_guess, .. } => {
                let guess = m_guess.unwrap_or(mdp.num_pairs() as f64);
                Box::new(ParameterFree::with_guess(mdp, k, guess, seed, solver)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact inner products `<q_k, c_k>`.
    #[default]
    Expected,
    /// The learner's policy is rolled out once per episode.
    Montecarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub instance: InstanceSpec,
    pub learner: LearnerSpec,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_name() -> String {
    "experiment".into()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(SspError::BadParam("episodes must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(SspError::BadParam("seeds must be nonempty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub learner: String,
    pub episodes_completed: usize,
    /// Regret as written in the trace (realized costs in Monte Carlo mode).
    pub total_regret: f64,
    /// Regret from exact inner products, in either mode.
    pub expected_regret: f64,
    pub learner_total: f64,
    pub comparator_total: f64,
    pub comparator_hitting_time: f64,
    pub min_penalty_cert: Option<f64>,
    pub min_stability_cert: Option<f64>,
    pub max_kkt_residual: f64,
    pub total_proj_iters: usize,
    /// Log-log fit of cumulative regret at dyadic prefixes.
    pub prefix_fit: Option<LinearFit>,
    pub csv: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedSummary>,
    pub mean_regret: f64,
    pub se_regret: f64,
    pub mean_expected_regret: f64,
}

pub struct SeedRun {
    pub summary: SeedSummary,
    pub trace: RegretTrace,
}

/// Rayon pool honoring `SSP_OMD_THREADS`.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("SSP_OMD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Runs one seed. Errors inside the episode loop are recorded in the summary
/// with the partial trace; errors before the first episode are returned.
pub fn run_seed(cfg: &ExperimentConfig, inst: &Instance, seed: u64) -> Result<SeedRun> {
    let costs = inst.costs(cfg.episodes, cost_seed(seed))?;
    let cmp = best_in_hindsight(&inst.mdp, &costs)?;
    let mut learner = cfg.learner.build(inst, &costs, seed, cfg.solver)?;
    learner.set_comparator(Arc::new(cmp.occupancy.clone()));
    let accounting = cfg.learner.accounting();
    let mut roll_rng = rng::derive(seed, 3);
    let mut trace = RegretTrace::new();
    let mut expected_regret = 0.0;
    let mut error = None;
    for (k, (c, &cl)) in costs.iter().zip(&cmp.losses).enumerate() {
        let realized = match cfg.mode {
            Mode::Expected => None,
            Mode::Montecarlo => {
                let pi = learner.policy();
                match rollout(&inst.mdp, &pi, c, &mut roll_rng, EPISODE_CAP) {
                    Ok((cost, _)) => Some(cost),
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
        };
        let step = match learner.observe(c) {
            Ok(s) => s,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        expected_regret += step.loss - cl;
        let loss = match (realized, accounting) {
            (Some(r), _) => r,
            (None, LossAccounting::Expected) => step.loss,
            (None, LossAccounting::Realized) => step.realized_loss.unwrap_or(step.loss),
        };
        trace.push(TraceRecord {
            episode: k + 1,
            learner_loss: loss,
            comparator_loss: cl,
            cum_regret: 0.0,
            penalty_cert: step.penalty_cert,
            stability_cert: step.stability_cert,
            proj_iters: step.proj_iters,
            kkt_residual: step.kkt_residual,
            interval_b: step.interval_b,
            sampled_instance: step.sampled_instance,
        });
    }
    let (min_penalty_cert, min_stability_cert) = trace.min_certificates();
    let summary = SeedSummary {
        seed,
        learner: learner.name(),
        episodes_completed: trace.len(),
        total_regret: trace.total_regret(),
        expected_regret,
        learner_total: trace.learner_total(),
        comparator_total: trace.comparator_total(),
        comparator_hitting_time: cmp.hitting_time,
        min_penalty_cert,
        min_stability_cert,
        max_kkt_residual: trace.records.iter().map(|r| r.kkt_residual).fold(0.0, f64::max),
        total_proj_iters: trace.records.iter().map(|r| r.proj_iters).sum(),
        prefix_fit: prefix_fit(&trace),
        csv: None,
        error,
    };
    Ok(SeedRun { summary, trace })
}

/// Seed of the cost sampler for an experiment seed.
pub fn cost_seed(seed: u64) -> u64 {
    rng::derive(seed, 1).random()
}

/// Fit of log cumulative regret against log k over k = 16, 32, ...
pub fn prefix_fit(trace: &RegretTrace) -> Option<LinearFit> {
    let mut ks = Vec::new();
    let mut rs = Vec::new();
    let mut k = 16;
    while k <= trace.len() {
        ks.push(k as f64);
        rs.push(trace.regret_at(k));
        k *= 2;
    }
    loglog_fit(&ks, &rs).ok()
}

pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub traces: Vec<RegretTrace>,
}

/// Runs every seed in parallel. With `cfg.out` set, writes
/// `<name>_seed<seed>.csv` per seed and `<name>_summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let inst = Instance::load(&cfg.instance)?;
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
    }
    let runs = thread_pool().install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let mut run = run_seed(cfg, &inst, seed)?;
                if let Some(dir) = &cfg.out {
                    let path = dir.join(format!("{}_seed{seed}.csv", cfg.name));
                    run.trace.save_csv(&path)?;
                    run.summary.csv = Some(path);
                }
                Ok(run)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let totals: Vec<f64> = runs.iter().map(|r| r.summary.total_regret).collect();
    let expected: Vec<f64> = runs.iter().map(|r| r.summary.expected_regret).collect();
    let (mean_regret, se_regret) = mean_se(&totals);
    let summary = ExperimentSummary {
        config: cfg.clone(),
        seeds: runs.iter().map(|r| r.summary.clone()).collect(),
        mean_regret,
        se_regret,
        mean_expected_regret: mean_se(&expected).0,
    };
    if let Some(dir) = &cfg.out {
        write_json(&dir.join(format!("{}_summary.json", cfg.name)), &summary)?;
    }
    Ok(ExperimentOutcome {
        summary,
        traces: runs.into_iter().map(|r| r.trace).collect(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}

/// A grid over one config field, addressed by a JSON pointer such as
/// `/instance/num_states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: serde_json::Value,
    pub param: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub seed: u64,
    pub total_regret: f64,
    pub expected_regret: f64,
    pub learner_total: f64,
    pub comparator_total: f64,
    pub episodes_completed: usize,
    pub error: Option<String>,
}

pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for value in &sweep.values {
        let mut doc = sweep.base.clone();
        let slot = doc
            .pointer_mut(&sweep.param)
            .ok_or_else(|| SspError::BadParam(format!("no field at {}", sweep.param)))?;
        *slot = value.clone();
        let cfg: ExperimentConfig = serde_json::from_value(doc)?;
        let out = run_experiment(&cfg)?;
        for s in out.summary.seeds {
            rows.push(SweepRow {
                value: value.to_string(),
                seed: s.seed,
                total_regret: s.total_regret,
                expected_regret: s.expected_regret,
                learner_total: s.learner_total,
                comparator_total: s.comparator_total,
                episodes_completed: s.episodes_completed,
                error: s.error,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
