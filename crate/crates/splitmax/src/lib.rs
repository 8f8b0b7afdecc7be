//! Budget splitting between billboard slots and social-network seeds.
//!
//! Two advertising channels compete for one budget: renting digital
//! billboard time slots, whose reach comes from trajectory data, and
//! buying seed users in a social network, whose reach comes from
//! Independent Cascade diffusion. The combined objective adds a
//! cross-channel interaction term on top of the two per-channel influence
//! functions, which makes it monotone but not bisubmodular. This crate
//! implements the model, two budget-splitting greedy optimizers with an
//! approximation guarantee expressed through the measured bisubmodularity
//! ratio and generalized curvature, four ranking baselines, brute-force
//! oracles to verify all of it on small instances, and a CLI harness for
//! experiment sweeps.

pub mod billboard;
pub mod combined;
pub mod data;
pub mod diagnostics;
pub mod diffusion;
pub mod exec;
pub mod harness;
pub mod optimize;
