use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gossip::{self, GossipParams, PeerState};

use super::churn::ChurnModel;
use super::topology::Topology;

/// Traffic generated by one round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundReport {
    pub round: u64,
    /// Peers that were alive and online after churn.
    pub active: usize,
    /// Completed push-pull exchanges.
    pub interactions: usize,
    pub messages: usize,
    pub bytes: usize,
}

/// Runs one gossip round: churn first, then every active peer, in random
/// order, exchanges with up to `fan_out` distinct active neighbours. Each
/// exchange starts from the pusher's current state. Every peer's round
/// counter advances, so the error factor tracks elapsed rounds.
pub fn run_round<R: Rng + ?Sized>(
    topology: &Topology,
    states: &mut [PeerState],
    params: &GossipParams,
    churn: &mut ChurnModel,
    round: u64,
    rng: &mut R,
) -> Result<RoundReport> {
    if states.len() != topology.p {
        return Err(Error::invalid(format!(
            "{} peer states for a topology of {} peers",
            states.len(),
            topology.p
        )));
    }
    churn.step(states, round);
    let mut order: Vec<usize> = (0..states.len()).filter(|&i| states[i].is_active()).collect();
    let all_active = order.len() == states.len();
    let mut report = RoundReport {
        round,
        active: order.len(),
        ..RoundReport::default()
    };
    order.shuffle(rng);

    let mut candidates = Vec::new();
    for &i in &order {
        let neighbors = topology.neighbors(i);
        let pool: &[usize] = if all_active {
            neighbors
        } else {
            candidates.clear();
            candidates.extend(neighbors.iter().copied().filter(|&j| states[j].is_active()));
            &candidates
        };
        let k = params.fan_out.min(pool.len());
        if k == 0 {
            continue;
        }
        let picks: Vec<usize> = index::sample(rng, pool.len(), k).into_iter().map(|x| pool[x]).collect();
        for j in picks {
            let (a, b) = gossip::pair_mut(states, i, j);
            report.bytes += gossip::push_pull(a, b)?;
            report.interactions += 1;
            report.messages += 2;
        }
    }
    for state in states.iter_mut() {
        state.round += 1;
    }
    Ok(report)
}

/// Unbiased sample variance `1/(p-1) sum (w - mean)^2`; zero for fewer
/// than two values.
pub fn variance(values: &[f64]) -> f64 {
    let k = values.len();
    if k < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    values.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (k - 1) as f64
}

/// Variance of a tracked scalar after round `round`, and its ratio to the
/// previous round's variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceStats {
    pub round: u64,
    pub sigma2: f64,
    pub ratio: Option<f64>,
}

/// Builds per-round statistics from a variance series whose first entry is
/// the initial (round 0) variance.
pub fn convergence_stats(sigma2: &[f64]) -> Vec<ConvergenceStats> {
    sigma2
        .iter()
        .enumerate()
        .map(|(r, &s)| ConvergenceStats {
            round: r as u64,
            sigma2: s,
            ratio: (r > 0 && sigma2[r - 1] > 0.0).then(|| s / sigma2[r - 1]),
        })
        .collect()
}

/// Variance of `q` over active peers.
pub fn q_variance(states: &[PeerState]) -> f64 {
    let qs: Vec<f64> = states.iter().filter(|s| s.is_active()).map(|s| s.q).collect();
    variance(&qs)
}
