//! Per-episode regret traces and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One CSV row. Optional columns are left empty when they do not apply to the
/// learner (certificates for entropy, `interval_b` outside the restart scheme).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: usize,
    pub learner_loss: f64,
    pub comparator_loss: f64,
    pub cum_regret: f64,
    /// `p T^(1+1/p) - (psi_p(q*) - psi_p(q_1))` for the interval containing the episode.
    pub penalty_cert: Option<f64>,
    /// `M^(1/p) (1 + <c_k, q_k>) - ||c_k||^2` in the local norm at `q_k`.
    pub stability_cert: Option<f64>,
    pub proj_iters: usize,
    pub kkt_residual: f64,
    pub interval_b: Option<u32>,
    pub sampled_instance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegretTrace {
    pub records: Vec<TraceRecord>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record, filling in the cumulative regret.
    pub fn push(&mut self, mut rec: TraceRecord) {
        let prev = self.records.last().map_or(0.0, |r| r.cum_regret);
        rec.cum_regret = prev + (rec.learner_loss - rec.comparator_loss);
        self.records.push(rec);
    }

    pub fn total_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn learner_total(&self) -> f64 {
        self.records.iter().map(|r| r.learner_loss).sum()
    }

    pub fn comparator_total(&self) -> f64 {
        self.records.iter().map(|r| r.comparator_loss).sum()
    }

    /// Cumulative regret after episode `k` (1-based), or the total if `k` is past the end.
    pub fn regret_at(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            _ => self.records[k.min(self.records.len()) - 1].cum_regret,
        }
    }

    /// Worst value of each certificate column; `None` when the column is empty.
    pub fn min_certificates(&self) -> (Option<f64>, Option<f64>) {
        let min = |f: fn(&TraceRecord) -> Option<f64>| {
            self.records.iter().filter_map(f).reduce(f64::min)
        };
        (min(|r| r.penalty_cert), min(|r| r.stability_cert))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.records.is_empty() {
            wtr.write_record(HEADER)?;
        }
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let records = rdr.deserialize().collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
        Ok(Self { records })
    }
}

pub const HEADER: [&str; 10] = [
    "episode",
    "learner_loss",
    "comparator_loss",
    "cum_regret",
    "penalty_cert",
    "stability_cert",
    "proj_iters",
    "kkt_residual",
    "interval_b",
    "sampled_instance",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, l: f64, c: f64) -> TraceRecord {
        TraceRecord {
            episode: k,
            learner_loss: l,
            comparator_loss: c,
            cum_regret: f64::NAN,
            penalty_cert: None,
            stability_cert: Some(0.5),
            proj_iters: 3,
            kkt_residual: 1e-10,
            interval_b: Some(1),
            sampled_instance: None,
        }
    }

    #[test]
    fn cumulative_and_roundtrip() {
        let mut t = RegretTrace::new();
        t.push(rec(1, 1.0, 0.25));
        t.push(rec(2, 0.5, 0.25));
        assert_eq!(t.total_regret(), 1.0);
        assert_eq!(t.regret_at(1), 0.75);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&HEADER.join(",")));
        assert_eq!(RegretTrace::read_csv(&buf[..]).unwrap(), t);
        assert_eq!(t.min_certificates(), (None, Some(0.5)));
    }

    #[test]
    fn empty_trace_still_has_header() {
        let mut buf = Vec::new();
        RegretTrace::new().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), HEADER.join(","));
    }
}
