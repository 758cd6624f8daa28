//! Simulation and semimartingale criteria for stationary-increment mixed
//! moving averages driven by infinitely divisible random measures.

pub mod counterexamples;
pub mod cli;
pub mod criteria;
pub mod kernels;
pub mod levy_measure;
pub mod path_stats;
pub mod quad;
pub mod series_sim;
pub mod special;
