//! Peer state machine of the averaging protocol.
//!
//! Each peer holds a sketch of its (implicit) share of the global stream and
//! a scalar `q` estimating `1/p`. A push-pull exchange replaces both
//! participants' states with the average `scale(merge(a, b), 2)`,
//! `(q_a + q_b) / 2`. After enough rounds every sketch approximates the
//! global sketch divided by `p`, and `1/q` scales it back.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdcmss::{self, DecaySpec, ItemId, Sketch, Timestamp};
use crate::planner;

#[derive(Clone, Debug, PartialEq)]
pub struct PeerState {
    /// 1-based peer identifier; peer 1 seeds the `q` estimator.
    pub id: usize,
    pub sketch: Sketch,
    pub q: f64,
    /// Gossip rounds elapsed since initialisation.
    pub round: u32,
    pub alive: bool,
    pub online: bool,
}

impl PeerState {
    pub fn is_active(&self) -> bool {
        self.alive && self.online
    }

    /// Handles an incoming message. A push is answered with a pull carrying
    /// the updated state; a pull overwrites the local state.
    pub fn on_receive(&mut self, msg: GossipMessage) -> Result<Option<GossipMessage>> {
        match msg.kind {
            MessageKind::Push => {
                let (sketch, q) = average(&msg.sketch, msg.q, &self.sketch, self.q)?;
                self.sketch = sketch;
                self.q = q;
                Ok(Some(GossipMessage::pull(self)))
            }
            MessageKind::Pull => {
                if !self.sketch.is_compatible(&msg.sketch) {
                    return Err(Error::Incompatible(format!(
                        "pull from peer {} does not match peer {}",
                        msg.sender, self.id
                    )));
                }
                self.sketch = msg.sketch;
                self.q = msg.q;
                Ok(None)
            }
        }
    }
}

fn average(a: &Sketch, qa: f64, b: &Sketch, qb: f64) -> Result<(Sketch, f64)> {
    let mut merged = a.merge(b)?;
    merged.scale(2.0)?;
    Ok((merged, (qa + qb) / 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GossipParams {
    /// Upper estimate of the number of peers.
    pub p_star: u64,
    pub delta_g: f64,
    pub gamma: f64,
    pub fan_out: usize,
    pub rounds: u32,
    pub phi: f64,
}

impl GossipParams {
    pub fn new(p_star: u64, delta_g: f64, fan_out: usize, rounds: u32, phi: f64) -> Result<Self> {
        let params = GossipParams {
            p_star,
            delta_g,
            gamma: planner::gamma(),
            fan_out,
            rounds,
            phi,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_star == 0 {
            return Err(Error::invalid("p* must be at least 1"));
        }
        if !(self.delta_g > 0.0 && self.delta_g < 1.0) {
            return Err(Error::invalid(format!("delta_g must lie in (0, 1), got {}", self.delta_g)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.fan_out == 0 {
            return Err(Error::invalid("fan-out must be at least 1"));
        }
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(Error::invalid(format!("phi must lie in (0, 1), got {}", self.phi)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKind {
    Push,
    Pull,
}

/// A gossip message carrying a snapshot of the sender's `(sketch, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GossipMessage {
    pub kind: MessageKind,
    pub sender: usize,
    pub sketch: Sketch,
    pub q: f64,
}

impl GossipMessage {
    pub fn push(from: &PeerState) -> Self {
        Self::snapshot(MessageKind::Push, from)
    }

    pub fn pull(from: &PeerState) -> Self {
        Self::snapshot(MessageKind::Pull, from)
    }

    fn snapshot(kind: MessageKind, from: &PeerState) -> Self {
        GossipMessage {
            kind,
            sender: from.id,
            sketch: from.sketch.clone(),
            q: from.q,
        }
    }

    /// Wire size: kind (u8), sender (u32), q (f64), then the sketch layout.
    pub fn encoded_len(&self) -> usize {
        message_len(&self.sketch)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(match self.kind {
            MessageKind::Push => 0,
            MessageKind::Pull => 1,
        });
        out.extend_from_slice(&(self.sender as u32).to_le_bytes());
        out.extend_from_slice(&self.q.to_le_bytes());
        out.extend_from_slice(&fdcmss::encode(&self.sketch));
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() < 13 {
            return Err(Error::Decode("message shorter than its header".into()));
        }
        let kind = match buf[0] {
            0 => MessageKind::Push,
            1 => MessageKind::Pull,
            k => return Err(Error::Decode(format!("unknown message kind {k}"))),
        };
        let sender = u32::from_le_bytes(buf[1..5].try_into().expect("4 bytes")) as usize;
        let q = f64::from_le_bytes(buf[5..13].try_into().expect("8 bytes"));
        if !(q.is_finite() && q >= 0.0) {
            return Err(Error::Decode(format!("invalid q {q}")));
        }
        Ok(GossipMessage {
            kind,
            sender,
            sketch: fdcmss::decode(&buf[13..])?,
            q,
        })
    }
}

/// Wire size of one message carrying `sketch`.
pub fn message_len(sketch: &Sketch) -> usize {
    1 + 4 + 8 + fdcmss::encoded_len(sketch.depth(), sketch.width())
}

/// Builds peer `l`'s initial state from its local stream.
pub fn init_peer(
    l: usize,
    local_stream: &[(ItemId, Timestamp)],
    d: usize,
    w: usize,
    hash_seed: u64,
    decay: &DecaySpec,
) -> Result<PeerState> {
    if l == 0 {
        return Err(Error::invalid("peer identifiers are 1-based"));
    }
    let mut sketch = Sketch::new(d, w, hash_seed)?;
    for &(item, ts) in local_stream {
        sketch.update(item, ts, decay)?;
    }
    Ok(PeerState {
        id: l,
        sketch,
        q: if l == 1 { 1.0 } else { 0.0 },
        round: 0,
        alive: true,
        online: true,
    })
}

/// The averaged state both participants adopt after an exchange. Identity
/// fields (`id`, `round`, liveness) are taken from `si`.
pub fn pair_update(si: &PeerState, sj: &PeerState) -> Result<PeerState> {
    let (sketch, q) = average(&si.sketch, si.q, &sj.sketch, sj.q)?;
    Ok(PeerState {
        sketch,
        q,
        ..si.clone()
    })
}

/// Atomic push-pull between two peers. Returns the bytes put on the wire.
pub fn push_pull(initiator: &mut PeerState, responder: &mut PeerState) -> Result<usize> {
    let push = GossipMessage::push(initiator);
    let mut bytes = push.encoded_len();
    let pull = responder
        .on_receive(push)?
        .expect("a push is always answered");
    bytes += pull.encoded_len();
    initiator.on_receive(pull)?;
    Ok(bytes)
}

/// Mutable references to two distinct elements.
pub(crate) fn pair_mut<T>(xs: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (a, b) = xs.split_at_mut(j);
        (&mut a[i], &mut b[0])
    } else {
        let (a, b) = xs.split_at_mut(i);
        (&mut b[0], &mut a[j])
    }
}

/// `p* sqrt(gamma^r / delta_g)` for this parameter set.
pub fn epsilon_star(params: &GossipParams, r: u32) -> f64 {
    params.p_star as f64 * (params.gamma.powi(r as i32) / params.delta_g).sqrt()
}

/// `1/q`, the peer's estimate of the network size.
pub fn estimate_p(state: &PeerState) -> Result<f64> {
    if state.q > 0.0 {
        Ok(1.0 / state.q)
    } else {
        Err(Error::NotConverged { peer: state.id })
    }
}

/// Heavy hitters reported by one peer.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    /// `(item, global frequency estimate)`, sorted by item.
    pub items: Vec<(ItemId, f64)>,
    /// The error factor actually used, after clamping into `[0, 1)`.
    pub eps_star: f64,
    pub p_estimate: f64,
    /// Set when the unclamped error factor was at least 1.
    pub pre_convergence: bool,
}

/// Largest value strictly below 1.
const EPS_STAR_CAP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Queries with the error factor implied by the peer's round counter.
pub fn query(
    state: &PeerState,
    params: &GossipParams,
    t: Timestamp,
    decay: &DecaySpec,
) -> Result<QueryResult> {
    query_with_eps_star(state, params.phi, epsilon_star(params, state.round), t, decay)
}

/// Queries with an explicit error factor. Local estimates are scaled by
/// `1/q` to global frequencies.
pub fn query_with_eps_star(
    state: &PeerState,
    phi: f64,
    eps_star: f64,
    t: Timestamp,
    decay: &DecaySpec,
) -> Result<QueryResult> {
    let p_estimate = estimate_p(state)?;
    if eps_star.is_nan() || eps_star < 0.0 {
        return Err(Error::invalid(format!("eps* must be non-negative, got {eps_star}")));
    }
    let pre_convergence = eps_star >= 1.0;
    let eps_star = eps_star.min(EPS_STAR_CAP);
    let items = state
        .sketch
        .local_query(phi, eps_star, t, decay)?
        .into_iter()
        .map(|(item, f)| (item, f * p_estimate))
        .collect();
    Ok(QueryResult {
        items,
        eps_star,
        p_estimate,
        pre_convergence,
    })
}

/// One round of the global averaging oracle: walk a random permutation of
/// the peers, pairing each with a uniformly random other peer.
pub fn avg_merge_round<R: Rng + ?Sized>(states: &mut [PeerState], rng: &mut R) -> Result<()> {
    let p = states.len();
    if p < 2 {
        return Ok(());
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    for i in order {
        let mut j = rng.gen_range(0..p - 1);
        if j >= i {
            j += 1;
        }
        let averaged = pair_update(&states[i], &states[j])?;
        let (a, b) = pair_mut(states, i, j);
        a.sketch = averaged.sketch.clone();
        a.q = averaged.q;
        b.sketch = averaged.sketch;
        b.q = averaged.q;
    }
    for s in states.iter_mut() {
        s.round += 1;
    }
    Ok(())
}
