use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gossip::PeerState;
use crate::rng::{self, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeKind {
    Pareto,
    Exponential,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChurnSpec {
    #[default]
    None,
    /// Each live peer fails independently with `fail_prob` every round.
    FailStop { fail_prob: f64 },
    /// Peers alternate online/offline with per-peer duration laws.
    Yao { lifetime: LifetimeKind },
}

impl ChurnSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ChurnSpec::None => "none",
            ChurnSpec::FailStop { .. } => "fail_stop",
            ChurnSpec::Yao {
                lifetime: LifetimeKind::Pareto,
            } => "yao_pareto",
            ChurnSpec::Yao {
                lifetime: LifetimeKind::Exponential,
            } => "yao_exponential",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChurnSpec::FailStop { fail_prob } if !(0.0..=1.0).contains(&fail_prob) => Err(Error::config(
                "churn.fail_prob",
                format!("must lie in [0, 1], got {fail_prob}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Shifted Pareto (type II) law: `F(x) = 1 - (1 + (x - mu)/beta)^-alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pareto2 {
    pub mu: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl Pareto2 {
    pub fn cdf(&self, x: f64) -> f64 {
        pareto2_cdf(self.mu, self.beta, self.alpha, x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_pareto2(self.mu, self.beta, self.alpha, rng.gen::<f64>())
    }

    /// Finite for `alpha > 1`.
    pub fn mean(&self) -> f64 {
        self.mu + self.beta / (self.alpha - 1.0)
    }
}

/// Inverse-CDF draw for a uniform `u` in `[0, 1)`.
pub fn sample_pareto2(mu: f64, beta: f64, alpha: f64, u: f64) -> f64 {
    mu + beta * ((1.0 - u).powf(-1.0 / alpha) - 1.0)
}

pub fn pareto2_cdf(mu: f64, beta: f64, alpha: f64, x: f64) -> f64 {
    if x <= mu {
        0.0
    } else {
        1.0 - (1.0 + (x - mu) / beta).powf(-alpha)
    }
}

/// Law of the per-peer mean lifetime `l_i`.
pub const MEAN_LIFETIME: Pareto2 = Pareto2 {
    mu: 1.01,
    beta: 1.0,
    alpha: 3.0,
};

/// Law of the per-peer mean offline time `d_i`.
pub const MEAN_OFFTIME: Pareto2 = Pareto2 {
    mu: 1.01,
    beta: 2.0,
    alpha: 3.0,
};

/// A duration law in continuous time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Duration {
    Pareto(Pareto2),
    Exponential { rate: f64 },
}

impl Duration {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Duration::Pareto(law) => law.sample(rng),
            Duration::Exponential { rate } => -(1.0 - rng.gen::<f64>()).ln() / rate,
        }
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Duration::Pareto(law) => 1.0 - law.cdf(x),
            Duration::Exponential { rate } => (-rate * x.max(0.0)).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Duration::Pareto(law) => law.mean(),
            Duration::Exponential { rate } => 1.0 / rate,
        }
    }

    /// Draw converted to whole rounds, at least one.
    pub fn sample_rounds<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        to_rounds(self.sample(rng))
    }
}

pub fn to_rounds(x: f64) -> u64 {
    (x.ceil() as u64).max(1)
}

/// Per-peer Yao parameters and schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct YaoPeer {
    pub mean_lifetime: f64,
    pub mean_offtime: f64,
    /// `F_i`, drawn on entering the online state.
    pub online: Duration,
    /// `G_i`, drawn on entering the offline state.
    pub offline: Duration,
    /// Round at which the peer next flips.
    pub next_transition: u64,
}

impl YaoPeer {
    pub fn new(mean_lifetime: f64, mean_offtime: f64, kind: LifetimeKind) -> Self {
        let online = match kind {
            LifetimeKind::Pareto => Duration::Pareto(Pareto2 {
                mu: 0.0,
                beta: 2.0,
                alpha: 2.0 * mean_lifetime,
            }),
            LifetimeKind::Exponential => Duration::Exponential {
                rate: 1.0 / mean_lifetime,
            },
        };
        let offline = Duration::Pareto(Pareto2 {
            mu: 0.0,
            beta: 3.0,
            alpha: 2.0 * mean_offtime,
        });
        YaoPeer {
            mean_lifetime,
            mean_offtime,
            online,
            offline,
            next_transition: u64::MAX,
        }
    }
}

/// Churn state for one simulation run. Every peer owns its own random
/// stream so its transitions do not depend on the network size.
#[derive(Clone, Debug)]
pub struct ChurnModel {
    pub spec: ChurnSpec,
    pub yao: Vec<YaoPeer>,
    rngs: Vec<SimRng>,
}

impl ChurnModel {
    pub fn new(spec: ChurnSpec, p: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let rngs = (0..p as u64).map(|i| rng::substream(seed, "simnet.churn", i)).collect();
        let mut model = ChurnModel {
            spec,
            yao: Vec::new(),
            rngs,
        };
        if let ChurnSpec::Yao { lifetime } = spec {
            model.yao_init(lifetime);
        }
        Ok(model)
    }

    pub fn none(p: usize) -> Self {
        ChurnModel::new(ChurnSpec::None, p, 0).expect("no-churn spec is valid")
    }

    /// Draws `l_i`, `d_i` and the first online period. All peers start
    /// online at round 1.
    fn yao_init(&mut self, kind: LifetimeKind) {
        self.yao = self
            .rngs
            .iter_mut()
            .map(|rng| {
                let l = MEAN_LIFETIME.sample(rng);
                let d = MEAN_OFFTIME.sample(rng);
                let mut peer = YaoPeer::new(l, d, kind);
                peer.next_transition = 1 + peer.online.sample_rounds(rng);
                peer
            })
            .collect();
    }

    /// Applies this round's transitions.
    pub fn step(&mut self, states: &mut [PeerState], round: u64) {
        match self.spec {
            ChurnSpec::None => {}
            ChurnSpec::FailStop { .. } => self.fail_stop_step(states),
            ChurnSpec::Yao { .. } => self.yao_step(states, round),
        }
    }

    pub fn fail_stop_step(&mut self, states: &mut [PeerState]) {
        let ChurnSpec::FailStop { fail_prob } = self.spec else {
            return;
        };
        for (state, rng) in states.iter_mut().zip(&mut self.rngs) {
            if state.alive && rng.gen_bool(fail_prob) {
                state.alive = false;
            }
        }
    }

    /// Flips peers whose transition round has arrived and schedules the
    /// next flip. Offline peers keep their state.
    pub fn yao_step(&mut self, states: &mut [PeerState], round: u64) {
        for ((state, peer), rng) in states.iter_mut().zip(&mut self.yao).zip(&mut self.rngs) {
            if peer.next_transition > round {
                continue;
            }
            state.online = !state.online;
            let law = if state.online { peer.online } else { peer.offline };
            peer.next_transition = round + law.sample_rounds(rng);
        }
    }
}

/// Long-run online fraction of a peer under the round discretisation:
/// `E[on] / (E[on] + E[off])` with `E[max(1, ceil X)] = 1 + sum_{k>=1} P(X > k)`.
pub fn expected_online_fraction(peer: &YaoPeer) -> f64 {
    let on = expected_rounds(&peer.online);
    let off = expected_rounds(&peer.offline);
    on / (on + off)
}

fn expected_rounds(law: &Duration) -> f64 {
    let mut total = 1.0;
    let mut k = 1.0;
    loop {
        let s = law.survival(k);
        total += s;
        if s < 1e-13 || k > 1e7 {
            break;
        }
        k += 1.0;
    }
    total
}
