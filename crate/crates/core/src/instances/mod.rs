//! Hard instances with their cost processes.
//!
//! Every generator returns the MDP wrapped in an `Arc` (learners and engines
//! share it) together with an [`InstanceMeta`] block that is written next to
//! the MDP when an instance is serialized.

mod failure;
mod sparse_lb;
mod unknown_trans;

pub use failure::{gen_failure_mdp, negent_closed_form_oracle, FailureInstance, OracleEntries};
pub use sparse_lb::{gen_sparse_lb, SparseLbInstance, SparseLbParams};
pub use unknown_trans::{gen_unknown_trans_lb, EpisodeCounts, UnknownTransInstance, UnknownTransParams};

use serde::{Deserialize, Serialize};

use crate::mdp::{MdpDocument, SspMdp};

/// Construction details stored alongside a generated MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub construction: String,
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
    pub claimed_diameter: f64,
    pub claimed_t_star: f64,
    pub claimed_sparsity: usize,
    #[serde(default)]
    pub relaxed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl InstanceMeta {
    pub fn document(&self, mdp: &SspMdp) -> MdpDocument {
        MdpDocument::from_mdp(mdp, Some(serde_json::to_value(self).expect("meta serializes")))
    }
}
