//! Tabular reinforcement learning for slate recommendation.
//!
//! The slate Q-function over `C(K-1, N)` slates per state is decomposed into
//! `K` state-item values per state. This crate provides:
//!
//! * slate combinatorics, catalogs and policies ([`slate`], [`catalog`], [`policy`]),
//! * synthetic user choice models ([`user`]),
//! * item marginals and numeric checks of the decomposed Bellman equations ([`decomposition`]),
//! * a brute-force exact solver used as ground truth ([`exact`]),
//! * SlateFree-Q/-SARSA, SlateQ and vanilla tabular learners ([`agents`]),
//! * the experiment harness behind the `slatefree` CLI ([`harness`]).

pub mod agents;
pub mod catalog;
pub mod decomposition;
pub mod error;
pub mod exact;
pub mod harness;
pub mod mdp;
pub mod policy;
pub mod slate;
pub mod tables;
pub mod user;

pub use agents::{Agent, AgentConfig, Algorithm, ChoiceModelOracle};
pub use catalog::{build_catalog, Catalog, CostMode};
pub use error::{Error, Result};
pub use exact::ExactSolution;
pub use mdp::SlateMdp;
pub use policy::RandomizedPolicy;
pub use slate::{count_slates, enumerate_slates, rank_slate, unrank_slate, Slate, SlateSpace};
pub use tables::{ItemQTable, SlateQTable};
pub use user::{RejectionPool, UserModel, UserVariant};
