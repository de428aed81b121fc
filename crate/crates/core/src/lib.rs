//! Discontinuous integral control for second-order mechanical systems.
//!
//! The crate is `no_std` (it needs `alloc` for trajectories and sample sets)
//! and contains everything that is pure computation:
//!
//! - [`homogeneous`]: signed powers, weighted dilations, homogeneous norms,
//!   unit-sphere sampling and a numerical homogeneity checker.
//! - [`plants`]: double integrator, frictionless pendulum, perturbation
//!   signals and the tracking-error / feedback-linearizing normal form.
//! - [`controllers`]: the discontinuous integral state-feedback law, its
//!   output-feedback variant with a finite-time observer, the Twisting
//!   baseline and the gain-scaling map.
//! - [`simulator`]: fixed-step closed-loop integration with sample-and-hold
//!   control, and the settling / precision / chattering metrics.
//! - [`lyapunov`]: the homogeneous Lyapunov functions of the closed loops,
//!   sphere-sampled sign checks, contraction rate and settling-time bound,
//!   and a parameter search for certifiable gains.
//!
//! File formats, CSV export and the command-line front end live in the
//! `dic-cli` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod controllers;
mod error;
pub mod homogeneous;
pub mod lyapunov;
pub mod plants;
pub mod simulator;

pub use error::{Error, Result};
