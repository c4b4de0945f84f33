use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in abstract stream time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn tick(self) -> u64 {
        self.0
    }
}

impl From<u64> for Timestamp {
    fn from(tick: u64) -> Self {
        Timestamp(tick)
    }
}

/// Forward decay function `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayKind {
    /// `g(x) = x^degree`
    Polynomial { degree: f64 },
    /// `g(x) = exp(rate * x)`
    Exponential { rate: f64 },
}

/// A forward decay function together with its landmark time `L`.
///
/// The stored weight of an occurrence at `t_i` is `g(t_i - L)`; the decayed
/// weight at query time `t` is that value divided by `g(t - L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    #[serde(flatten)]
    pub kind: DecayKind,
    pub landmark: u64,
}

impl Default for DecaySpec {
    fn default() -> Self {
        DecaySpec {
            kind: DecayKind::Polynomial { degree: 2.0 },
            landmark: 0,
        }
    }
}

impl DecaySpec {
    pub fn polynomial(degree: f64, landmark: u64) -> Result<Self> {
        let spec = DecaySpec {
            kind: DecayKind::Polynomial { degree },
            landmark,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exponential(rate: f64, landmark: u64) -> Result<Self> {
        let spec = DecaySpec {
            kind: DecayKind::Exponential { rate },
            landmark,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DecayKind::Polynomial { degree } if !(degree.is_finite() && degree > 0.0) => {
                Err(Error::invalid(format!("polynomial degree must be positive, got {degree}")))
            }
            DecayKind::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                Err(Error::invalid(format!("exponential rate must be positive, got {rate}")))
            }
            _ => Ok(()),
        }
    }

    /// Evaluates `g` at a positive age.
    pub fn g(&self, age: f64) -> f64 {
        match self.kind {
            DecayKind::Polynomial { degree } => {
                if degree.fract() == 0.0 && degree <= i32::MAX as f64 {
                    age.powi(degree as i32)
                } else {
                    age.powf(degree)
                }
            }
            DecayKind::Exponential { rate } => (rate * age).exp(),
        }
    }

    /// Non-normalized forward-decay weight `g(ts - L)`.
    pub fn weight(&self, ts: Timestamp) -> Result<f64> {
        if ts.0 <= self.landmark {
            return Err(Error::invalid(format!(
                "timestamp {} must be after the landmark {}",
                ts.0, self.landmark
            )));
        }
        let x = self.g((ts.0 - self.landmark) as f64);
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::invalid(format!(
                "decay weight at tick {} is not a positive finite number",
                ts.0
            )));
        }
        Ok(x)
    }

    /// Decayed weight of an occurrence at `ts` seen from query time `t`.
    pub fn normalized_weight(&self, ts: Timestamp, t: Timestamp) -> Result<f64> {
        Ok(self.weight(ts)? / self.weight(t)?)
    }
}

/// Free-function form of [`DecaySpec::weight`].
pub fn weight(ts: Timestamp, decay: &DecaySpec) -> Result<f64> {
    decay.weight(ts)
}
