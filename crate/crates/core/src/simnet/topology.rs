use std::collections::VecDeque;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const MAX_RETRIES: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyKind {
    BarabasiAlbert { m_attach: usize },
    /// A missing probability means `2 ln p / p`.
    ErdosRenyi { edge_prob: Option<f64> },
    Complete,
}

impl TopologyKind {
    pub fn label(&self) -> &'static str {
        match self {
            TopologyKind::BarabasiAlbert { .. } => "ba",
            TopologyKind::ErdosRenyi { .. } => "er",
            TopologyKind::Complete => "complete",
        }
    }

    pub fn generate(&self, p: usize, seed: u64) -> Result<Topology> {
        match *self {
            TopologyKind::BarabasiAlbert { m_attach } => gen_barabasi_albert(p, m_attach, seed),
            TopologyKind::ErdosRenyi { edge_prob } => {
                gen_erdos_renyi(p, edge_prob.unwrap_or_else(|| default_edge_prob(p)), seed)
            }
            TopologyKind::Complete => complete(p),
        }
    }
}

/// `2 ln p / p`, capped at 1.
pub fn default_edge_prob(p: usize) -> f64 {
    if p < 2 {
        1.0
    } else {
        (2.0 * (p as f64).ln() / p as f64).min(1.0)
    }
}

/// An undirected graph over peer indices `0..p` (peer id = index + 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub p: usize,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<usize>>,
    pub kind: TopologyKind,
}

impl Topology {
    fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize)>, kind: TopologyKind) -> Self {
        let mut adjacency = vec![Vec::new(); p];
        for (u, v) in edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Topology { p, adjacency, kind }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        if self.p <= 1 {
            return true;
        }
        let mut seen = vec![false; self.p];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.p
    }

    /// Edges `(u, v)` with `u < v`, as 0-based indices.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// One `u v` line per edge, using 1-based peer ids.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", u + 1, v + 1)?;
        }
        out.flush()
    }
}

pub fn complete(p: usize) -> Result<Topology> {
    if p == 0 {
        return Err(Error::invalid("a topology needs at least one peer"));
    }
    let adjacency = (0..p).map(|i| (0..p).filter(|&j| j != i).collect()).collect();
    Ok(Topology {
        p,
        adjacency,
        kind: TopologyKind::Complete,
    })
}

/// `G(p, edge_prob)`, regenerated with the next sub-seed until connected.
pub fn gen_erdos_renyi(p: usize, edge_prob: f64, seed: u64) -> Result<Topology> {
    if p == 0 {
        return Err(Error::invalid("a topology needs at least one peer"));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::invalid(format!("edge probability must lie in [0, 1], got {edge_prob}")));
    }
    for attempt in 0..MAX_RETRIES {
        let topology = erdos_renyi_sample(p, edge_prob, seed, attempt);
        if topology.is_connected() {
            return Ok(topology);
        }
    }
    Err(Error::config(
        "topology.edge_prob",
        format!("no connected G({p}, {edge_prob}) within {MAX_RETRIES} attempts"),
    ))
}

/// One `G(p, edge_prob)` draw, connected or not.
pub fn erdos_renyi_sample(p: usize, edge_prob: f64, seed: u64, attempt: u64) -> Topology {
    let mut rng = rng::substream(seed, "simnet.erdos_renyi", attempt);
    let mut edges = Vec::new();
    for u in 0..p {
        for v in u + 1..p {
            if rng.gen_bool(edge_prob) {
                edges.push((u, v));
            }
        }
    }
    let kind = TopologyKind::ErdosRenyi {
        edge_prob: Some(edge_prob),
    };
    Topology::from_edges(p, edges, kind)
}

/// Preferential attachment grown from a complete core on the first
/// `m_attach` nodes; every later node links to `m_attach` distinct existing
/// nodes picked with probability proportional to degree.
pub fn gen_barabasi_albert(p: usize, m_attach: usize, seed: u64) -> Result<Topology> {
    if m_attach == 0 || p <= m_attach {
        return Err(Error::invalid(format!(
            "Barabasi-Albert needs p > m_attach >= 1, got p={p}, m_attach={m_attach}"
        )));
    }
    let mut rng = rng::substream(seed, "simnet.barabasi_albert", 0);
    let mut edges = Vec::with_capacity(m_attach * p);
    // One entry per edge endpoint, so uniform picks are degree-weighted.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m_attach * p);
    for u in 0..m_attach {
        for v in u + 1..m_attach {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let mut chosen = Vec::with_capacity(m_attach);
    for new in m_attach..p {
        chosen.clear();
        if new == m_attach {
            chosen.extend(0..m_attach);
        } else {
            while chosen.len() < m_attach {
                let t = endpoints[rng.gen_range(0..endpoints.len())];
                if !chosen.contains(&t) {
                    chosen.push(t);
                }
            }
        }
        for &t in &chosen {
            edges.push((t, new));
            endpoints.extend([t, new]);
        }
    }
    let topology = Topology::from_edges(
        p,
        edges,
        TopologyKind::BarabasiAlbert { m_attach },
    );
    debug_assert!(topology.is_connected());
    Ok(topology)
}
