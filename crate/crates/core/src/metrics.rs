//! Recall, precision and average relative error against the exact oracle,
//! plus aggregation across repetitions and peers.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdcmss::ItemId;
use crate::workload::ExactAnswer;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub recall: f64,
    pub precision: f64,
    pub are: f64,
    pub reported: usize,
}

/// Scores a reported set `(item, estimated frequency)` against the exact
/// answer computed at the same query time and threshold.
pub fn score(reported: &[(ItemId, f64)], exact: &ExactAnswer) -> Result<Score> {
    let items: BTreeSet<ItemId> = reported.iter().map(|&(v, _)| v).collect();
    let truth = &exact.heavy_hitters;
    let hits = items.intersection(truth).count();
    let recall = if truth.is_empty() { 1.0 } else { hits as f64 / truth.len() as f64 };
    let precision = if items.is_empty() { 1.0 } else { hits as f64 / items.len() as f64 };
    let mut err = 0.0;
    for &(v, fs) in reported {
        let f = exact.frequency(v);
        if f <= 0.0 {
            return Err(Error::OracleMismatch(format!("item {v} was reported but never occurs")));
        }
        err += (fs - f).abs() / f;
    }
    let are = if reported.is_empty() { 0.0 } else { err / reported.len() as f64 };
    Ok(Score {
        recall,
        precision,
        are,
        reported: items.len(),
    })
}

/// One scored peer of one repetition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub rep: u32,
    pub peer: usize,
    pub recall: f64,
    pub precision: f64,
    pub are: f64,
    pub reported: usize,
    pub rounds: u32,
}

impl MetricsRecord {
    pub fn new(rep: u32, peer: usize, rounds: u32, score: Score) -> Self {
        MetricsRecord {
            rep,
            peer,
            recall: score.recall,
            precision: score.precision,
            are: score.are,
            reported: score.reported,
            rounds,
        }
    }
}

/// Mean with a 95% normal-approximation confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let k = values.len();
        if k == 0 {
            return Err(Error::invalid("cannot summarise an empty sample"));
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let half_width = if k < 2 {
            0.0
        } else {
            let s2 = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            Z95 * s2.sqrt() / (k as f64).sqrt()
        };
        Ok(Estimate { mean, half_width })
    }

    pub fn low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.mean + self.half_width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Distinct peers contributing a per-peer average.
    pub peers: usize,
    pub records: usize,
    pub recall: Estimate,
    pub precision: Estimate,
    pub are: Estimate,
}

/// Averages each peer over its repetitions, then summarises across peers.
pub fn aggregate(records: &[MetricsRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::invalid("no records to aggregate"));
    }
    let mut per_peer: BTreeMap<usize, [f64; 4]> = BTreeMap::new();
    for r in records {
        let acc = per_peer.entry(r.peer).or_insert([0.0; 4]);
        acc[0] += r.recall;
        acc[1] += r.precision;
        acc[2] += r.are;
        acc[3] += 1.0;
    }
    let column = |k: usize| -> Vec<f64> { per_peer.values().map(|a| a[k] / a[3]).collect() };
    Ok(Summary {
        peers: per_peer.len(),
        records: records.len(),
        recall: Estimate::from_values(&column(0))?,
        precision: Estimate::from_values(&column(1))?,
        are: Estimate::from_values(&column(2))?,
    })
}

pub const CSV_HEADER: &str = "config_hash,rep,peer,recall,precision,are,reported,rounds,churn_kind,topology";

pub const SUMMARY_HEADER: &str = "config_hash,metric,mean,ci95_low,ci95_high,peers,records";

/// Writes the header followed by one row per record.
pub fn write_records<W: Write>(
    mut out: W,
    config_hash: &str,
    churn_kind: &str,
    topology: &str,
    records: &[MetricsRecord],
) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{config_hash},{},{},{},{},{},{},{},{churn_kind},{topology}",
            r.rep, r.peer, r.recall, r.precision, r.are, r.reported, r.rounds
        )?;
    }
    out.flush()
}

pub fn write_summary<W: Write>(mut out: W, config_hash: &str, summary: &Summary) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for (name, e) in [
        ("recall", summary.recall),
        ("precision", summary.precision),
        ("are", summary.are),
    ] {
        writeln!(
            out,
            "{config_hash},{name},{},{},{},{},{}",
            e.mean,
            e.low(),
            e.high(),
            summary.peers,
            summary.records
        )?;
    }
    out.flush()
}
