//! Greedy best-first STRIPS planning with heuristics learned from
//! relaxed-plan features.
//!
//! The crate covers the full loop: PDDL parsing and grounding, the FF
//! heuristic and its relaxed-plan DAG, single- and pairwise-action feature
//! extraction, ridge regression and RankSVM learners with leave-one-out
//! model selection, lazy dual-queue greedy best-first search, training-data
//! collection, synthetic instance generators, and an experiment harness.

pub mod cli;
pub mod features;
pub mod generators;
pub mod ground;
pub mod harness;
pub mod heuristic;
pub mod learn;
pub mod par;
pub mod pddl;
pub mod pipeline;
pub mod search;
pub mod util;
