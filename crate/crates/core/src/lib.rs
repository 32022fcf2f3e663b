//! Safe policy improvement from logged data with probabilistic shields.
//!
//! Transition counts from a dataset give a point estimate and PAC interval
//! model of an MDP whose support graph is known. Robust reach-avoid
//! probabilities on the interval model decide which actions are θ-safe; the
//! resulting shield restricts SPIBB and DUIPI to those actions.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod duipi;
pub mod envs;
pub mod error;
pub mod imdp;
mod linalg;
pub mod mdp;
pub mod scalar;
pub mod shield;
pub mod spibb;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mdp64 = mdp::Mdp<f64>;
pub type Mdp32 = mdp::Mdp<f32>;
pub type Policy64 = mdp::TabularPolicy<f64>;
pub type Policy32 = mdp::TabularPolicy<f32>;
pub type IntervalMdp64 = imdp::IntervalMdp<f64>;
pub type IntervalMdp32 = imdp::IntervalMdp<f32>;
pub type Shield64 = shield::Shield<f64>;
pub type Shield32 = shield::Shield<f32>;
pub type Benchmark64 = envs::Benchmark<f64>;
pub type Benchmark32 = envs::Benchmark<f32>;
