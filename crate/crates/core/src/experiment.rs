//! Experiment configuration and the repetition driver behind `tfhh run`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fdcmss::{DecaySpec, Timestamp};
use crate::gossip::{self, GossipParams, PeerState, QueryResult};
use crate::metrics::{self, MetricsRecord, Summary};
use crate::rng;
use crate::simnet::{run_round, ChurnModel, ChurnSpec, RoundReport, TopologyKind};
use crate::workload::{self, ExactAnswer, StreamSpec};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TFHH_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream_length: u64,
    pub universe: u32,
    pub skew: f64,
    pub peers: usize,
    pub topology: TopologyKind,
    pub depth: usize,
    pub width: usize,
    pub rounds: u32,
    pub fan_out: usize,
    pub phi: f64,
    /// Upper estimate of the peer count; the actual count when absent.
    pub p_star: Option<u64>,
    pub delta_g: f64,
    pub decay: DecaySpec,
    pub churn: ChurnSpec,
    pub repetitions: u32,
    pub master_seed: u64,
    /// Directory for CSV output. Not part of the configuration hash.
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::desk_scale()
    }
}

impl ExperimentConfig {
    /// Laptop-sized profile.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            stream_length: 1_000_000,
            universe: 100_000,
            skew: 1.2,
            peers: 100,
            topology: TopologyKind::ErdosRenyi { edge_prob: None },
            depth: 4,
            width: 600,
            rounds: 24,
            fan_out: 1,
            phi: 0.02,
            p_star: None,
            delta_g: 0.05,
            decay: DecaySpec::default(),
            churn: ChurnSpec::None,
            repetitions: 10,
            master_seed: 1,
            output_path: None,
        }
    }

    /// Full-size defaults of the published experiments.
    pub fn paper_scale() -> Self {
        ExperimentConfig {
            stream_length: 100_000_000,
            peers: 5000,
            width: 2500,
            ..ExperimentConfig::desk_scale()
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "desk" | "desk_scale" => Ok(Self::desk_scale()),
            "paper" | "paper_scale" => Ok(Self::paper_scale()),
            other => Err(Error::config("profile", format!("unknown profile `{other}`"))),
        }
    }

    pub fn p_star(&self) -> u64 {
        self.p_star.unwrap_or(self.peers as u64)
    }

    pub fn stream_spec(&self, seed: u64) -> StreamSpec {
        StreamSpec {
            n: self.stream_length,
            m: self.universe,
            skew: self.skew,
            seed,
        }
    }

    pub fn gossip_params(&self) -> Result<GossipParams> {
        GossipParams::new(self.p_star(), self.delta_g, self.fan_out, self.rounds, self.phi)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: String| if ok { Ok(()) } else { Err(Error::config(field, msg)) };
        check(self.stream_length >= 1, "stream_length", "must be at least 1".into())?;
        check(self.universe >= 1, "universe", "must be at least 1".into())?;
        check(self.skew.is_finite() && self.skew > 0.0, "skew", format!("must be positive, got {}", self.skew))?;
        check(self.peers >= 1, "peers", "must be at least 1".into())?;
        check(self.depth >= 1, "depth", "must be at least 1".into())?;
        check(self.width >= 1, "width", "must be at least 1".into())?;
        check(self.fan_out >= 1, "fan_out", "must be at least 1".into())?;
        check(self.phi > 0.0 && self.phi < 1.0, "phi", format!("must lie in (0, 1), got {}", self.phi))?;
        check(
            self.delta_g > 0.0 && self.delta_g < 1.0,
            "delta_g",
            format!("must lie in (0, 1), got {}", self.delta_g),
        )?;
        check(self.p_star() >= 1, "p_star", "must be at least 1".into())?;
        check(self.repetitions >= 1, "repetitions", "must be at least 1".into())?;
        match self.topology {
            TopologyKind::BarabasiAlbert { m_attach } => check(
                m_attach >= 1 && m_attach < self.peers,
                "topology.m_attach",
                format!("must lie in [1, peers), got {m_attach} with {} peers", self.peers),
            )?,
            TopologyKind::ErdosRenyi { edge_prob: Some(q) } => check(
                (0.0..=1.0).contains(&q),
                "topology.edge_prob",
                format!("must lie in [0, 1], got {q}"),
            )?,
            _ => {}
        }
        self.decay
            .validate()
            .map_err(|e| Error::config("decay", e.to_string()))?;
        check(
            self.stream_length > self.decay.landmark,
            "decay.landmark",
            "must precede the query time".into(),
        )?;
        self.churn.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Applies `path=value` overrides to leaf fields. Paths are dotted
    /// (`topology.edge_prob`) or JSON pointers (`/topology/edge_prob`);
    /// values are JSON, with bare words taken as strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc = serde_json::to_value(self).expect("config serialises");
        for o in overrides {
            let (path, raw) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::config(o.as_ref(), "override must look like path=value"))?;
            set_leaf(&mut doc, path.trim(), parse_value(raw.trim()))?;
        }
        let config: ExperimentConfig =
            serde_json::from_value(doc).map_err(|e| Error::config("override", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Stable identifier of everything that affects results.
    pub fn hash(&self) -> String {
        let rendered = serde_json::to_string(&ExperimentConfig {
            output_path: None,
            ..self.clone()
        })
        .expect("config serialises");
        Sha256::digest(rendered.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn to_pointer(path: &str) -> String {
    if path.starts_with('/') {
        path.to_string()
    } else {
        format!("/{}", path.replace('.', "/"))
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_leaf(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let pointer = to_pointer(path);
    if let Some(slot) = doc.pointer_mut(&pointer) {
        *slot = value;
        return Ok(());
    }
    // Optional fields of a tagged variant may be absent; allow adding a key
    // to an existing object.
    let (parent, key) = pointer.rsplit_once('/').expect("pointer starts with '/'");
    match doc.pointer_mut(parent) {
        Some(Value::Object(map)) => {
            map.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::config(path, "no such configuration field")),
    }
}

/// One configuration per value of the swept field.
pub fn expand_sweep(base: &ExperimentConfig, path: &str, values: &[String]) -> Result<Vec<ExperimentConfig>> {
    values
        .iter()
        .map(|v| base.with_overrides(&[format!("{path}={v}")]))
        .collect()
}

/// A peer's answer at the end of a repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct PeerQuery {
    pub peer: usize,
    pub result: QueryResult,
}

#[derive(Clone, Debug)]
pub struct RepetitionOutcome {
    pub rep: u32,
    pub exact: ExactAnswer,
    pub queries: Vec<PeerQuery>,
    pub records: Vec<MetricsRecord>,
    /// Active peers whose `q` was still zero at query time.
    pub unconverged: usize,
    /// Peers that answered with a clamped error factor.
    pub pre_convergence: usize,
    pub rounds: Vec<RoundReport>,
    pub final_states: Vec<PeerState>,
}

pub fn repetition_seed(config: &ExperimentConfig, rep: u32) -> u64 {
    rng::child_seed(config.master_seed, "experiment.rep", rep as u64)
}

/// Generates the stream and topology, gossips for the configured rounds
/// and scores every active peer at `t = n`.
pub fn run_repetition(config: &ExperimentConfig, rep: u32) -> Result<RepetitionOutcome> {
    let seed = repetition_seed(config, rep);
    let params = config.gossip_params()?;
    let stream = workload::gen_stream(&config.stream_spec(rng::child_seed(seed, "workload", 0)))?;
    let topology = config
        .topology
        .generate(config.peers, rng::child_seed(seed, "topology", 0))?;
    let hash_seed = rng::child_seed(seed, "fdcmss", 0);
    let parts = workload::partition(&stream, config.peers)?;
    let mut states = parts
        .par_iter()
        .enumerate()
        .map(|(i, part)| gossip::init_peer(i + 1, part, config.depth, config.width, hash_seed, &config.decay))
        .collect::<Result<Vec<_>>>()?;
    drop(parts);

    let mut churn = ChurnModel::new(config.churn, config.peers, rng::child_seed(seed, "churn", 0))?;
    let mut round_rng = rng::substream(seed, "simnet.round", 0);
    let rounds = (1..=config.rounds as u64)
        .map(|r| run_round(&topology, &mut states, &params, &mut churn, r, &mut round_rng))
        .collect::<Result<Vec<_>>>()?;

    let t = Timestamp(config.stream_length);
    let exact = workload::exact_oracle(&stream, &config.decay, t, config.phi)?;
    let mut queries = Vec::new();
    let mut records = Vec::new();
    let mut unconverged = 0;
    let mut pre_convergence = 0;
    for state in states.iter().filter(|s| s.is_active()) {
        match gossip::query(state, &params, t, &config.decay) {
            Ok(result) => {
                let score = metrics::score(&result.items, &exact)?;
                pre_convergence += result.pre_convergence as usize;
                records.push(MetricsRecord::new(rep, state.id, state.round, score));
                queries.push(PeerQuery { peer: state.id, result });
            }
            Err(Error::NotConverged { .. }) => unconverged += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(RepetitionOutcome {
        rep,
        exact,
        queries,
        records,
        unconverged,
        pre_convergence,
        rounds,
        final_states: states,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config_hash: String,
    /// Ordered by `(rep, peer)`.
    pub records: Vec<MetricsRecord>,
    /// Absent when no peer could answer.
    pub summary: Option<Summary>,
    pub unconverged: usize,
    pub pre_convergence: usize,
}

/// Runs all repetitions in parallel; output order does not depend on
/// scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let outcomes = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_output(config, outcomes))
}

pub fn collect_output(config: &ExperimentConfig, outcomes: Vec<RepetitionOutcome>) -> ExperimentOutput {
    let mut records = Vec::new();
    let mut unconverged = 0;
    let mut pre_convergence = 0;
    for o in outcomes {
        records.extend(o.records);
        unconverged += o.unconverged;
        pre_convergence += o.pre_convergence;
    }
    records.sort_by_key(|r| (r.rep, r.peer));
    let summary = metrics::aggregate(&records).ok();
    ExperimentOutput {
        config_hash: config.hash(),
        records,
        summary,
        unconverged,
        pre_convergence,
    }
}

impl ExperimentOutput {
    pub fn records_csv(&self, config: &ExperimentConfig) -> String {
        let mut out = Vec::new();
        metrics::write_records(
            &mut out,
            &self.config_hash,
            config.churn.label(),
            config.topology.label(),
            &self.records,
        )
        .expect("writing to memory");
        String::from_utf8(out).expect("csv is utf-8")
    }

    pub fn summary_csv(&self) -> String {
        let mut out = Vec::new();
        if let Some(summary) = &self.summary {
            metrics::write_summary(&mut out, &self.config_hash, summary).expect("writing to memory");
        } else {
            out.extend_from_slice(metrics::SUMMARY_HEADER.as_bytes());
            out.push(b'\n');
        }
        String::from_utf8(out).expect("csv is utf-8")
    }
}

/// Resolves the output directory: explicit path, then the environment
/// variable, then the working directory.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .output_path
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
