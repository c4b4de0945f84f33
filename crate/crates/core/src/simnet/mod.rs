//! Deterministic round-based network simulator.

pub mod churn;
pub mod round;
pub mod topology;

pub use churn::{sample_pareto2, pareto2_cdf, ChurnModel, ChurnSpec, LifetimeKind, Pareto2};
pub use round::{convergence_stats, q_variance, run_round, variance, ConvergenceStats, RoundReport};
pub use topology::{complete, erdos_renyi_sample, gen_barabasi_albert, gen_erdos_renyi, Topology, TopologyKind};
