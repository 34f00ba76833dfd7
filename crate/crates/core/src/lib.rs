//! Bandit-driven antenna state selection for interference alignment in the
//! three-user 2×2 MIMO interference channel.
//!
//! Receivers carry reconfigurable antennas with `P` radiation states. Each
//! joint choice of states is one arm; after closed-form alignment the arm pays
//! a sum-rate or chordal-distance reward, and index policies (UCB1, KL-UCB)
//! learn which combination to use.
//!
//! The crate is `no_std` with `alloc`. Enable `std` only if a dependent
//! needs it; `serde` derives serialization for configuration types.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod bandit;
pub mod channel;
pub mod cxmat;
pub mod engine;
pub mod error;
pub mod ia;
mod math;
pub mod stats;

pub use bandit::{ArmState, Divergence, Policy, PolicyKind, RewardSample};
pub use channel::{
    generate_pool, ChannelModel, ChannelPool, LinkSet, ScenarioConfig, StateCombination, ANTENNAS,
    USERS,
};
pub use cxmat::{Complex, ComplexMat2, ComplexVec2};
pub use engine::{
    precompute_true_means, regret_trace, run_combinational, run_distributed, Environment,
    LinkTable, RewardKind, RewardModel, RunTrace, TrueMeans,
};
pub use error::{Error, Result};
pub use ia::{IaSolution, LinkMetrics};
