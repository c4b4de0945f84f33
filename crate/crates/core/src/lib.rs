//! Gossip-based mining of time-faded heavy hitters over unstructured
//! peer-to-peer networks.
//!
//! * [`fdcmss`]: the forward-decay Count-Min / Space-Saving sketch.
//! * [`gossip`]: peer state, push-pull averaging and the final query.
//! * [`simnet`]: topologies, churn and the round-based simulator.
//! * [`workload`]: Zipfian streams and the exact decayed-frequency oracle.
//! * [`planner`]: closed-form selection of sketch width, depth and rounds.
//! * [`metrics`]: recall, precision and relative error with aggregation.
//! * [`experiment`]: configuration and the experiment driver behind the CLI.

pub mod error;
pub mod experiment;
pub mod fdcmss;
pub mod gossip;
pub mod metrics;
pub mod planner;
pub mod rng;
pub mod simnet;
pub mod workload;

pub use error::{Error, Result};
