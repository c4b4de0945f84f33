//! Helpers shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use tfhh::fdcmss::{DecaySpec, ItemId, Sketch, Timestamp};

const P: u128 = (1 << 61) - 1;

/// Straight-line FDCMSS written directly from the update and query
/// pseudocode. It shares only the hash parameters with the library.
type Slot = (Option<ItemId>, f64);

pub struct Reference {
    d: usize,
    w: usize,
    hashes: Vec<(u64, u64)>,
    /// `cells[row][col] = [(item, fhat); 2]`; `None` marks an empty counter.
    cells: Vec<Vec<[Slot; 2]>>,
}

impl Reference {
    pub fn like(sketch: &Sketch) -> Self {
        Reference {
            d: sketch.depth(),
            w: sketch.width(),
            hashes: sketch.row_hashes().iter().map(|h| (h.a, h.b)).collect(),
            cells: vec![vec![[(None, 0.0); 2]; sketch.width()]; sketch.depth()],
        }
    }

    fn h(&self, row: usize, item: ItemId) -> usize {
        let (a, b) = self.hashes[row];
        (((a as u128 * item as u128 + b as u128) % P) % self.w as u128) as usize
    }

    pub fn update(&mut self, item: ItemId, x: f64) {
        for j in 0..self.d {
            let col = self.h(j, item);
            let s = &mut self.cells[j][col];
            if s[0].0 == Some(item) {
                s[0].1 += x;
            } else if s[1].0 == Some(item) {
                s[1].1 += x;
            } else if s[0].0.is_none() {
                s[0] = (Some(item), x);
            } else if s[1].0.is_none() {
                s[1] = (Some(item), x);
            } else {
                let k = if s[0].1 <= s[1].1 { 0 } else { 1 };
                s[k] = (Some(item), s[k].1 + x);
            }
        }
    }

    fn point_estimate(&self, item: ItemId) -> f64 {
        let mut answer = f64::INFINITY;
        for k in 0..self.d {
            let s = &self.cells[k][self.h(k, item)];
            if s[0].0 == Some(item) {
                answer = answer.min(s[0].1);
            } else if s[1].0 == Some(item) {
                answer = answer.min(s[1].1);
            } else {
                answer = answer.min(s[0].1.min(s[1].1));
            }
        }
        answer
    }

    /// Reported `(item, decayed estimate)` with the count taken from the
    /// first row.
    pub fn query(&self, phi: f64, eps_star: f64, g_t: f64) -> BTreeMap<ItemId, f64> {
        let mut c = 0.0;
        for s in &self.cells[0] {
            c += s[0].1 + s[1].1;
        }
        c /= g_t;
        let tau = phi * c * (1.0 - eps_star) / (1.0 + eps_star);
        let mut h = BTreeMap::new();
        for row in &self.cells {
            for s in row {
                let cm = if s[1].1 > s[0].1 { s[1] } else { s[0] };
                let Some(item) = cm.0 else { continue };
                if cm.1 / g_t > tau {
                    let p = self.point_estimate(item) / g_t;
                    if p > tau {
                        h.insert(item, p);
                    }
                }
            }
        }
        h
    }
}

/// Builds both a library sketch and the reference from one stream; the
/// reference weighs occurrences with `g(t_i - L)` computed by `g`.
pub fn build_both(
    stream: &[(ItemId, Timestamp)],
    d: usize,
    w: usize,
    seed: u64,
    decay: &DecaySpec,
    g: impl Fn(f64) -> f64,
) -> (Sketch, Reference) {
    let mut sketch = Sketch::new(d, w, seed).unwrap();
    let mut reference = Reference::like(&sketch);
    for &(item, ts) in stream {
        sketch.update(item, ts, decay).unwrap();
        reference.update(item, g((ts.tick() - decay.landmark) as f64));
    }
    (sketch, reference)
}

use tfhh::gossip::{self, GossipParams, PeerState};
use tfhh::rng;
use tfhh::simnet::{self, ChurnModel, Topology};

/// Peers with 1x1 sketches holding one unit of their own id; peer 1 seeds `q`.
pub fn scalar_peers(p: usize) -> Vec<PeerState> {
    (1..=p)
        .map(|l| {
            let mut peer = gossip::init_peer(l, &[], 1, 1, 0, &DecaySpec::default()).unwrap();
            peer.sketch.update_weight(l as ItemId, 1.0);
            peer
        })
        .collect()
}

/// Mean of `sigma2[r+1] / sigma2[r]` over `rounds`, tracking `q`.
pub fn mean_q_ratio(history: &[f64], rounds: std::ops::RangeInclusive<usize>) -> f64 {
    let ratios: Vec<f64> = rounds.map(|r| history[r + 1] / history[r]).collect();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

/// Variance of `q` after each of `rounds` simulator rounds (index 0 is the
/// initial state).
pub fn simulator_q_history(topology: &Topology, rounds: u64, seed: u64, fan_out: usize) -> Vec<f64> {
    let p = topology.p;
    let mut states = scalar_peers(p);
    let params = GossipParams::new(p as u64, 0.05, fan_out, rounds as u32, 0.1).unwrap();
    let mut churn = ChurnModel::none(p);
    let mut rng = rng::substream(seed, "test.round", 0);
    let mut history = vec![simnet::q_variance(&states)];
    for r in 1..=rounds {
        simnet::run_round(topology, &mut states, &params, &mut churn, r, &mut rng).unwrap();
        history.push(simnet::q_variance(&states));
    }
    history
}

/// Same as [`simulator_q_history`] for the global averaging oracle.
pub fn avg_merge_q_history(p: usize, rounds: u64, seed: u64) -> Vec<f64> {
    let mut states = scalar_peers(p);
    let mut rng = rng::substream(seed, "test.avg_merge", 0);
    let mut history = vec![simnet::q_variance(&states)];
    for _ in 0..rounds {
        gossip::avg_merge_round(&mut states, &mut rng).unwrap();
        history.push(simnet::q_variance(&states));
    }
    history
}
