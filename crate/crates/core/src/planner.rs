//! Closed-form parameter planning: sketch width `w`, depth `d` and gossip
//! rounds `R` for a requested threshold, tolerance and failure probability.
//!
//! All logarithms are natural.

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convergence factor of permutation-based pairwise averaging,
/// `1 / (2 sqrt(e))`.
pub fn gamma() -> f64 {
    (-(LN_2 + 0.5)).exp()
}

/// Gossip error factor after `r` rounds: `p* sqrt(gamma^r / delta_g)`.
pub fn epsilon_star(p_star: f64, delta_g: f64, r: u32) -> f64 {
    p_star * (gamma().powi(r as i32) / delta_g).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanInput {
    pub phi: f64,
    pub eps: f64,
    pub delta_g: f64,
    pub delta: f64,
    pub p_star: f64,
}

impl PlanInput {
    pub fn validate(&self) -> Result<()> {
        let PlanInput {
            phi,
            eps,
            delta_g,
            delta,
            p_star,
        } = *self;
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::invalid(format!("phi must lie in (0, 1), got {phi}")));
        }
        if !(eps > 0.0 && eps < phi) {
            return Err(Error::invalid(format!("eps must lie in (0, phi), got {eps}")));
        }
        if !(delta_g > 0.0 && delta_g < 1.0) {
            return Err(Error::invalid(format!("delta_g must lie in (0, 1), got {delta_g}")));
        }
        if !(delta > delta_g && delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (delta_g, 1), got {delta} with delta_g = {delta_g}"
            )));
        }
        if !(p_star >= 1.0 && p_star.is_finite()) {
            return Err(Error::invalid(format!("p* must be at least 1, got {p_star}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Fewest rounds, width chosen to match.
    TimeDominant,
    /// Smallest width, rounds chosen to match.
    SpaceDominant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub strategy: Strategy,
    pub d: usize,
    pub w: usize,
    pub rounds: u32,
    pub eps_star: f64,
    pub predicted_tolerance: f64,
}

/// Real-valued width required for tolerance `eps` at gossip error `eps_star`.
/// Returns `None` when the denominator is not positive.
pub fn w_real(phi: f64, eps: f64, eps_star: f64) -> Option<f64> {
    let denom = 2.0 * eps * (1.0 + eps_star).powi(2) - 8.0 * phi * eps_star;
    let numer = E * (1.0 - eps_star * eps_star);
    (denom > 0.0 && numer > 0.0).then(|| numer / denom)
}

/// Width needed after `rounds` rounds, rounded up.
pub fn w_given_r(input: &PlanInput, rounds: u32) -> Result<usize> {
    input.validate()?;
    let es = epsilon_star(input.p_star, input.delta_g, rounds);
    match w_real(input.phi, input.eps, es) {
        Some(w) => Ok(w.ceil() as usize),
        None => Err(Error::RoundsInsufficient(format!(
            "{rounds} rounds leave eps* = {es:.6}, too large for eps = {}",
            input.eps
        ))),
    }
}

/// The real-valued bound that `R` must exceed.
pub fn r_min_real(input: &PlanInput) -> f64 {
    let PlanInput {
        phi,
        eps,
        delta_g,
        p_star,
        ..
    } = *input;
    let root = (2.0 * phi - eps - 2.0 * (phi * phi - eps * phi).sqrt()) / (eps * p_star);
    (delta_g.ln() + 2.0 * root.ln()) / gamma().ln()
}

/// Minimum number of rounds for which some finite width achieves `eps`.
pub fn r_min(input: &PlanInput) -> Result<u32> {
    input.validate()?;
    Ok(rounds_above(r_min_real(input)))
}

fn rounds_above(x: f64) -> u32 {
    (x.floor() + 1.0).max(0.0) as u32
}

/// `floor(e / 2 eps) + 1`, the width reached as `R` grows without bound.
pub fn w_min(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    Ok((E / (2.0 * eps)).floor() as usize + 1)
}

/// Gossip error factor at which width `w` exactly meets the tolerance.
pub fn eps_star_for_width(phi: f64, eps: f64, w: usize) -> f64 {
    let w = w as f64;
    (2.0 * w * (2.0 * phi - eps) - (16.0 * phi * w * w * (phi - eps) + E * E).sqrt())
        / (E + 2.0 * eps * w)
}

/// Rounds needed so that `w_min(eps)` columns meet the tolerance.
/// Returns `(R, eps*)` where `eps*` is the closed-form target.
pub fn r_for_space_dominant(input: &PlanInput) -> Result<(u32, f64)> {
    input.validate()?;
    let w = w_min(input.eps)?;
    let target = eps_star_for_width(input.phi, input.eps, w);
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::DegeneratePlan(format!(
            "closed-form eps* = {target} is outside (0, 1)"
        )));
    }
    let real = (2.0 * target.ln() - 2.0 * input.p_star.ln() + input.delta_g.ln()) / gamma().ln();
    Ok((rounds_above(real), target))
}

/// Depth for overall failure probability `delta`.
pub fn d_min(delta: f64, delta_g: f64) -> Result<usize> {
    if !(delta_g >= 0.0 && delta > delta_g && delta <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 <= delta_g < delta <= 1, got delta = {delta}, delta_g = {delta_g}"
        )));
    }
    let d = ((1.0 - delta_g) / (delta - delta_g)).ln().ceil();
    Ok((d as usize).max(1))
}

/// Overall failure probability for depth `d`.
pub fn failure_probability(d: usize, delta_g: f64) -> f64 {
    delta_g + (-(d as f64)).exp() * (1.0 - delta_g)
}

/// False-positive tolerance guaranteed by width `w` at gossip error `eps_star`.
pub fn predicted_tolerance(w: usize, eps_star: f64, phi: f64) -> f64 {
    let w = w as f64;
    4.0 * eps_star * phi / (1.0 + eps_star).powi(2) + E / (2.0 * w) * (1.0 - eps_star) / (1.0 + eps_star)
}

/// Smallest width for which no frequent item is more likely to be missed
/// than a false positive is to slip in.
pub fn false_negative_width_bound(phi: f64, eps_star: f64) -> f64 {
    E / (2.0 * phi) * (1.0 + eps_star) / (1.0 - eps_star)
}

pub fn plan(input: &PlanInput, strategy: Strategy) -> Result<Plan> {
    input.validate()?;
    let d = d_min(input.delta, input.delta_g)?;
    let (w, rounds) = match strategy {
        Strategy::TimeDominant => {
            let rounds = r_min(input)?;
            (w_given_r(input, rounds)?, rounds)
        }
        Strategy::SpaceDominant => {
            let (rounds, _) = r_for_space_dominant(input)?;
            (w_min(input.eps)?, rounds)
        }
    };
    let eps_star = epsilon_star(input.p_star, input.delta_g, rounds);
    Ok(Plan {
        strategy,
        d,
        w,
        rounds,
        eps_star,
        predicted_tolerance: predicted_tolerance(w, eps_star, input.phi),
    })
}
