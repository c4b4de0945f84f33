//! Synthetic Zipfian streams, round-robin partitioning and the exact
//! decayed-frequency oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdcmss::{DecaySpec, ItemId, Timestamp};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    /// Stream length.
    pub n: u64,
    /// Universe size; items are `1..=m` after the rank permutation.
    pub m: u32,
    /// Zipf exponent.
    pub skew: f64,
    pub seed: u64,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("stream length must be at least 1"));
        }
        if self.m == 0 {
            return Err(Error::invalid("universe size must be at least 1"));
        }
        if !(self.skew.is_finite() && self.skew > 0.0) {
            return Err(Error::invalid(format!("skew must be positive, got {}", self.skew)));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over ranks `1..=m` with `P(i) ∝ i^-skew`.
#[derive(Clone, Debug)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(m: u32, skew: f64) -> Result<Self> {
        if m == 0 || !(skew.is_finite() && skew > 0.0) {
            return Err(Error::invalid("zipf needs m >= 1 and a positive skew"));
        }
        let mut cdf = Vec::with_capacity(m as usize);
        let mut acc = 0.0;
        for i in 1..=m {
            acc += (i as f64).powf(-skew);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        *cdf.last_mut().expect("m >= 1") = 1.0;
        Ok(Zipf { cdf })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// Probability of 1-based `rank`.
    pub fn pmf(&self, rank: u32) -> f64 {
        let i = rank as usize - 1;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    /// 1-based rank for a uniform `u` in `[0, 1)`.
    pub fn rank_for(&self, u: f64) -> u32 {
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1) as u32 + 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.rank_for(rng.gen::<f64>())
    }
}

/// Seed-derived bijection from ranks to item identifiers.
pub fn rank_permutation(m: u32, seed: u64) -> Vec<ItemId> {
    let mut ids: Vec<ItemId> = (1..=m).collect();
    ids.shuffle(&mut rng::substream(seed, "workload.ids", 0));
    ids
}

/// `n` i.i.d. Zipf draws stamped with their 1-based positions.
pub fn gen_stream(spec: &StreamSpec) -> Result<Vec<(ItemId, Timestamp)>> {
    spec.validate()?;
    let zipf = Zipf::new(spec.m, spec.skew)?;
    let ids = rank_permutation(spec.m, spec.seed);
    let mut rng = rng::substream(spec.seed, "workload.stream", 0);
    Ok((1..=spec.n)
        .map(|t| {
            let rank = zipf.sample(&mut rng);
            (ids[rank as usize - 1], Timestamp(t))
        })
        .collect())
}

/// Round-robin split: position `k` (0-based) goes to peer `(k mod p) + 1`,
/// i.e. to `parts[k mod p]`.
pub fn partition<T: Clone>(stream: &[T], p: usize) -> Result<Vec<Vec<T>>> {
    if p == 0 {
        return Err(Error::invalid("cannot partition across zero peers"));
    }
    let mut parts: Vec<Vec<T>> = (0..p)
        .map(|_| Vec::with_capacity(stream.len() / p + 1))
        .collect();
    for (k, x) in stream.iter().enumerate() {
        parts[k % p].push(x.clone());
    }
    Ok(parts)
}

/// Exact decayed frequencies at a fixed query time.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactAnswer {
    pub frequencies: BTreeMap<ItemId, f64>,
    /// Decayed count `C(t)`.
    pub total: f64,
    pub phi: f64,
    pub heavy_hitters: BTreeSet<ItemId>,
}

impl ExactAnswer {
    pub fn frequency(&self, item: ItemId) -> f64 {
        self.frequencies.get(&item).copied().unwrap_or(0.0)
    }

    /// Items with `f > phi * C`.
    pub fn heavy_hitters_at(&self, phi: f64) -> BTreeSet<ItemId> {
        let threshold = phi * self.total;
        self.frequencies
            .iter()
            .filter(|&(_, &f)| f > threshold)
            .map(|(&v, _)| v)
            .collect()
    }
}

/// Brute-force summation of decayed weights.
pub fn exact_oracle(
    stream: &[(ItemId, Timestamp)],
    decay: &DecaySpec,
    t: Timestamp,
    phi: f64,
) -> Result<ExactAnswer> {
    if t.tick() <= decay.landmark {
        return Err(Error::invalid(format!(
            "query time {} must exceed the landmark {}",
            t.tick(),
            decay.landmark
        )));
    }
    let norm = decay.weight(t)?;
    let mut raw: BTreeMap<ItemId, f64> = BTreeMap::new();
    for &(item, ts) in stream {
        if ts > t {
            return Err(Error::invalid(format!(
                "stream timestamp {} is after the query time {}",
                ts.tick(),
                t.tick()
            )));
        }
        *raw.entry(item).or_insert(0.0) += decay.weight(ts)?;
    }
    let frequencies: BTreeMap<ItemId, f64> = raw.into_iter().map(|(v, f)| (v, f / norm)).collect();
    let total = frequencies.values().sum();
    let mut answer = ExactAnswer {
        frequencies,
        total,
        phi,
        heavy_hitters: BTreeSet::new(),
    };
    answer.heavy_hitters = answer.heavy_hitters_at(phi);
    Ok(answer)
}

const RECORD_LEN: usize = 12;

/// Writes records as little-endian `u32` item followed by `u64` timestamp.
pub fn write_stream<W: Write>(mut out: W, stream: &[(ItemId, Timestamp)]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(stream.len() * RECORD_LEN);
    for &(item, ts) in stream {
        buf.extend_from_slice(&item.to_le_bytes());
        buf.extend_from_slice(&ts.tick().to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

pub fn read_stream<R: Read>(mut input: R) -> Result<Vec<(ItemId, Timestamp)>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() % RECORD_LEN != 0 {
        return Err(Error::Decode(format!(
            "stream file length {} is not a multiple of {RECORD_LEN}",
            buf.len()
        )));
    }
    Ok(buf
        .chunks_exact(RECORD_LEN)
        .map(|r| {
            let item = u32::from_le_bytes(r[..4].try_into().expect("4 bytes"));
            let ts = u64::from_le_bytes(r[4..].try_into().expect("8 bytes"));
            (item, Timestamp(ts))
        })
        .collect())
}
