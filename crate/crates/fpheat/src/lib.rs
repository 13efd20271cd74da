//! Desk-scale numerical laboratory for the degenerate parabolic fractional
//! p-Laplace flow `∂ₜu + (−Δₚ)ˢu = 0` with `s ∈ (0,1)` and
//! `2 ≤ p < 2/(1−s)`.
//!
//! The crate provides the nonlocal operator with principal-value singularity
//! handling, a monotone explicit time stepper with a discrete comparison
//! principle, parabolic inf/sup-convolutions, the doubling-of-variables
//! geometric toolkit (moduli of continuity, concavity cones, second
//! increments, localizers), time-regularity barriers, and regression-based
//! estimation of space/time regularity exponents — plus the `fpheat` CLI
//! that packages these as reproducible experiments.

pub mod error;
pub mod params;
pub mod tail;
pub mod grid;
pub mod quadrature;
pub mod operator;
pub mod norms;
pub mod evolution;
pub mod comparison;
pub mod convolution;
pub mod doubling;
pub mod barrier;
pub mod regularity;
pub mod cli;

pub use error::{Error, Result};
pub use params::{make_params, AlphaPrediction, AlphaRegime, FracParams};
