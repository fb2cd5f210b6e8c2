//! Stochastic shortest path MDPs with a known transition kernel.
//!
//! States are indexed `0..num_states`; the goal is an absorbing sink that is
//! not part of the state space. State-action pairs are flattened row-major as
//! `s * num_actions + a`, which is the layout every dense vector over pairs in
//! this crate uses (costs, occupancy measures, policies).

mod io;
mod solve;

pub use io::{read_cost_stream, write_cost_stream, CostEntry, MdpDocument, TransitionRecord};
pub use solve::{
    check_flow_constraints, cost_to_go, evaluate_policy, expected_hitting_times,
    fast_policy_and_diameter, occupancy_of_policy, policy_from_occupancy, value_iteration,
    FastPolicy, FlowReport, ValueIterationConfig, DENSE_LU_LIMIT, IMPROPER_CEILING, MASS_FLOOR,
    TOL_FLOW,
};

use crate::error::{Result, SspError};

/// Tolerance on the row sums of the transition kernel and of policies.
pub const PROB_TOL: f64 = 1e-12;

/// Destination of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Next {
    State(usize),
    Goal,
}

/// An SSP environment: states, a shared action set, transition kernel, start state.
///
/// The kernel is stored in compressed rows, one row per state-action pair, listing
/// the non-goal successors. The remaining mass of each row goes to the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct SspMdp {
    num_states: usize,
    num_actions: usize,
    start_state: usize,
    row_ptr: Vec<usize>,
    succ_state: Vec<usize>,
    succ_prob: Vec<f64>,
    goal_prob: Vec<f64>,
}

impl SspMdp {
    pub fn builder(num_states: usize, num_actions: usize, start_state: usize) -> SspMdpBuilder {
        SspMdpBuilder {
            num_states,
            num_actions,
            start_state,
            records: Vec::new(),
        }
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    #[inline]
    pub fn start_state(&self) -> usize {
        self.start_state
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        debug_assert!(s < self.num_states && a < self.num_actions);
        s * self.num_actions + a
    }

    #[inline]
    pub fn state_of(&self, pair: usize) -> usize {
        pair / self.num_actions
    }

    /// Non-goal successors of a pair as parallel slices (states, probabilities).
    #[inline]
    pub fn successors(&self, pair: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[pair], self.row_ptr[pair + 1]);
        (&self.succ_state[lo..hi], &self.succ_prob[lo..hi])
    }

    #[inline]
    pub fn goal_prob(&self, pair: usize) -> f64 {
        self.goal_prob[pair]
    }

    /// Probability of moving from `pair` to state `target`.
    pub fn prob(&self, pair: usize, target: Next) -> f64 {
        match target {
            Next::Goal => self.goal_prob[pair],
            Next::State(t) => {
                let (states, probs) = self.successors(pair);
                states
                    .iter()
                    .zip(probs)
                    .find(|(&s, _)| s == t)
                    .map_or(0.0, |(_, &p)| p)
            }
        }
    }

    /// Number of stored (pair, successor) entries, goal transitions included.
    pub fn nnz(&self) -> usize {
        self.succ_state.len() + self.goal_prob.iter().filter(|&&p| p > 0.0).count()
    }

    /// All transitions as flat records, goal transitions last within each pair.
    pub fn transition_records(&self) -> Vec<TransitionRecord> {
        let mut out = Vec::with_capacity(self.nnz());
        for pair in 0..self.num_pairs() {
            let s = self.state_of(pair);
            let a = pair % self.num_actions;
            let (states, probs) = self.successors(pair);
            for (&t, &p) in states.iter().zip(probs) {
                out.push(TransitionRecord {
                    s,
                    a,
                    next: t as i64,
                    prob: p,
                });
            }
            if self.goal_prob[pair] > 0.0 {
                out.push(TransitionRecord {
                    s,
                    a,
                    next: -1,
                    prob: self.goal_prob[pair],
                });
            }
        }
        out
    }

    /// Full validation: kernel well-formed (guaranteed by construction) and at
    /// least one proper policy exists.
    pub fn validate(&self) -> Result<()> {
        fast_policy_and_diameter(self).map(|_| ())
    }
}

/// Accumulates transitions and builds a validated [`SspMdp`].
#[derive(Debug, Clone)]
pub struct SspMdpBuilder {
    num_states: usize,
    num_actions: usize,
    start_state: usize,
    records: Vec<(usize, Next, f64)>,
}

impl SspMdpBuilder {
    /// Adds `prob` to the transition `(s, a) -> next`. Repeated entries accumulate.
    pub fn transition(&mut self, s: usize, a: usize, next: Next, prob: f64) -> &mut Self {
        let pair = s * self.num_actions + a;
        // Out-of-range indices are reported by build().
        if s < self.num_states && a < self.num_actions {
            self.records.push((pair, next, prob));
        } else {
            self.records.push((usize::MAX, next, prob));
        }
        self
    }

    pub fn build(&self) -> Result<SspMdp> {
        let (ns, na) = (self.num_states, self.num_actions);
        if ns == 0 || na == 0 {
            return Err(SspError::InvalidMdp("empty state or action set".into()));
        }
        if self.start_state >= ns {
            return Err(SspError::InvalidMdp(format!(
                "start state {} out of range",
                self.start_state
            )));
        }
        let np = ns * na;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); np];
        let mut goal = vec![0.0; np];
        for &(pair, next, prob) in &self.records {
            if pair == usize::MAX {
                return Err(SspError::InvalidMdp("state or action index out of range".into()));
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(SspError::InvalidMdp(format!(
                    "negative or non-finite probability {prob} at pair {pair}"
                )));
            }
            match next {
                Next::Goal => goal[pair] += prob,
                Next::State(t) => {
                    if t >= ns {
                        return Err(SspError::InvalidMdp(format!("successor {t} out of range")));
                    }
                    rows[pair].push((t, prob));
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(np + 1);
        let mut succ_state = Vec::new();
        let mut succ_prob = Vec::new();
        row_ptr.push(0);
        for (pair, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(t, _)| t);
            let mut total = goal[pair];
            let mut i = 0;
            while i < row.len() {
                let t = row[i].0;
                let mut p = 0.0;
                while i < row.len() && row[i].0 == t {
                    p += row[i].1;
                    i += 1;
                }
                total += p;
                if p > 0.0 {
                    succ_state.push(t);
                    succ_prob.push(p);
                }
            }
            if (total - 1.0).abs() > PROB_TOL {
                return Err(SspError::InvalidMdp(format!(
                    "outgoing probabilities of (s={}, a={}) sum to {total}",
                    pair / na,
                    pair % na
                )));
            }
            row_ptr.push(succ_state.len());
        }
        Ok(SspMdp {
            num_states: ns,
            num_actions: na,
            start_state: self.start_state,
            row_ptr,
            succ_state,
            succ_prob,
            goal_prob: goal,
        })
    }
}

/// Sparse per-episode cost over state-action pairs, values in `(0, 1]`.
///
/// Entries are keyed by flattened pair index and kept sorted; zero costs are
/// not stored, so `support_size` is the `l0` norm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostVector {
    episode: usize,
    entries: Vec<(usize, f64)>,
}

impl CostVector {
    pub fn new(episode: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut stored: Vec<(usize, f64)> = Vec::new();
        for (pair, c) in entries {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(SspError::Domain(format!("cost {c} at pair {pair} outside [0, 1]")));
            }
            if c > 0.0 {
                stored.push((pair, c));
            }
        }
        stored.sort_by_key(|&(p, _)| p);
        if stored.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SspError::Domain("duplicate pair in cost vector".into()));
        }
        Ok(Self {
            episode,
            entries: stored,
        })
    }

    pub fn zero(episode: usize) -> Self {
        Self {
            episode,
            entries: Vec::new(),
        }
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    pub fn get(&self, pair: usize) -> f64 {
        self.entries
            .binary_search_by_key(&pair, |&(p, _)| p)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Inner product with a dense vector over pairs.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(p, c)| c * dense[p]).sum()
    }

    pub fn to_dense(&self, num_pairs: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_pairs];
        for &(p, c) in &self.entries {
            out[p] = c;
        }
        out
    }

    pub fn max_pair(&self) -> Option<usize> {
        self.entries.last().map(|&(p, _)| p)
    }
}

/// Stationary randomized policy, one distribution over actions per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    num_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if num_actions == 0 || probs.len() % num_actions != 0 {
            return Err(SspError::Domain("policy table has the wrong shape".into()));
        }
        for (s, row) in probs.chunks(num_actions).enumerate() {
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(SspError::Domain(format!("negative probability in policy row {s}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(SspError::Domain(format!("policy row {s} sums to {total}")));
            }
        }
        Ok(Self { num_actions, probs })
    }

    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(SspError::Domain(format!("action {a} out of range")));
            }
            probs[s * num_actions + a] = 1.0;
        }
        Ok(Self { num_actions, probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Action of a deterministic row, `None` when the row is randomized.
    pub fn action(&self, s: usize) -> Option<usize> {
        let row = self.row(s);
        row.iter().position(|&p| p == 1.0)
    }
}

/// Nonnegative vector over pairs satisfying the flow constraints, with its
/// hitting-time cap.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    values: Vec<f64>,
    bound: f64,
}

impl OccupancyMeasure {
    /// Wraps raw values. Only elementwise nonnegativity is checked here; flow
    /// feasibility needs the MDP, see [`check_flow_constraints`].
    pub fn new(values: Vec<f64>, bound: f64) -> Result<Self> {
        if let Some(i) = values.iter().position(|&x| !x.is_finite() || x < 0.0) {
            return Err(SspError::Domain(format!(
                "occupancy entry {i} is {} (must be finite and nonnegative)",
                values[i]
            )));
        }
        Ok(Self { values, bound })
    }

    pub(crate) fn from_raw(values: Vec<f64>, bound: f64) -> Self {
        Self { values, bound }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Total mass, i.e. the expected hitting time of the induced policy.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn state_mass(&self, s: usize, num_actions: usize) -> f64 {
        self.values[s * num_actions..(s + 1) * num_actions].iter().sum()
    }

    pub fn dot(&self, cost: &CostVector) -> f64 {
        cost.dot(&self.values)
    }
}
