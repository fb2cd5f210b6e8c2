use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CostVector, Next, SspMdp};
use crate::error::{Result, SspError};

/// One transition; `next == -1` is the goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub s: usize,
    pub a: usize,
    pub next: i64,
    pub prob: f64,
}

/// Serialized form of an MDP. `meta` carries construction details for
/// generated instances and is ignored when building.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub start_state: usize,
    pub transitions: Vec<TransitionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl MdpDocument {
    pub fn from_mdp(mdp: &SspMdp, meta: Option<serde_json::Value>) -> Self {
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            start_state: mdp.start_state(),
            transitions: mdp.transition_records(),
            meta,
        }
    }

    pub fn to_mdp(&self) -> Result<SspMdp> {
        let mut b = SspMdp::builder(self.num_states, self.num_actions, self.start_state);
        for r in &self.transitions {
            let next = match r.next {
                -1 => Next::Goal,
                t if t >= 0 => Next::State(t as usize),
                t => return Err(SspError::InvalidMdp(format!("bad successor index {t}"))),
            };
            b.transition(r.s, r.a, next, r.prob);
        }
        b.build()
    }
}

/// One sparse entry of a serialized cost vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub s: usize,
    pub a: usize,
    pub cost: f64,
}

/// Writes a cost stream as JSON lines, one array of entries per episode.
pub fn write_cost_stream<W: Write>(mut w: W, costs: &[CostVector], num_actions: usize) -> Result<()> {
    for c in costs {
        let entries: Vec<CostEntry> = c
            .entries()
            .iter()
            .map(|&(p, cost)| CostEntry {
                s: p / num_actions,
                a: p % num_actions,
                cost,
            })
            .collect();
        serde_json::to_writer(&mut w, &entries)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSON-lines cost stream. Blank lines are skipped; episodes are
/// numbered from 1 in file order.
pub fn read_cost_stream<R: BufRead>(r: R, num_actions: usize) -> Result<Vec<CostVector>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entries: Vec<CostEntry> = serde_json::from_str(&line)?;
        if entries.iter().any(|e| e.a >= num_actions) {
            return Err(SspError::Domain("cost entry action out of range".into()));
        }
        out.push(CostVector::new(
            out.len() + 1,
            entries.iter().map(|e| (e.s * num_actions + e.a, e.cost)),
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mdp_document_round_trip() {
        let mut b = SspMdp::builder(2, 2, 0);
        b.transition(0, 0, Next::State(1), 0.5)
            .transition(0, 0, Next::Goal, 0.5)
            .transition(0, 1, Next::Goal, 1.0)
            .transition(1, 0, Next::Goal, 1.0)
            .transition(1, 1, Next::State(0), 1.0);
        let mdp = b.build().unwrap();
        let doc = MdpDocument::from_mdp(&mdp, None);
        let text = serde_json::to_string(&doc).unwrap();
        let back: MdpDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_mdp().unwrap(), mdp);
    }

    #[test]
    fn cost_stream_round_trip() {
        let costs = vec![
            CostVector::new(1, [(0, 0.25), (3, 1.0)]).unwrap(),
            CostVector::zero(2),
        ];
        let mut buf = Vec::new();
        write_cost_stream(&mut buf, &costs, 2).unwrap();
        let back = read_cost_stream(buf.as_slice(), 2).unwrap();
        assert_eq!(back, costs);
    }
}
