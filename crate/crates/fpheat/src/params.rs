//! Problem parameters for the flow `∂ₜu + (−Δₚ)ˢu = 0`.
//!
//! The admissible range is `s ∈ (0,1)`, `2 ≤ p < 2/(1−s)`, `d ∈ {1,2,3}`.
//! The derived critical exponent `q_c = −1 + p(1−s)` controls the time
//! regularity regime: `q_c > 0` gives Lipschitz-in-time behaviour, `q_c ≤ 0`
//! only a Hölder exponent strictly below `1/(1−q_c)`.

use crate::error::{Error, Result};
use std::fmt;

/// Which time-regularity regime a parameter triple falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaRegime {
    /// `q_c > 0`: the exponent 1 is attained.
    LipschitzInTime,
    /// `q_c ≤ 0`: `1/(1−q_c)` is a strict upper bound, reported as `(·)⁻`.
    StrictUpperBound,
}

/// Predicted time Hölder exponent together with its regime tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPrediction {
    pub value: f64,
    pub regime: AlphaRegime,
}

impl AlphaPrediction {
    pub fn is_strict(&self) -> bool {
        self.regime == AlphaRegime::StrictUpperBound
    }
}

impl fmt::Display for AlphaPrediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.regime {
            AlphaRegime::LipschitzInTime => write!(f, "{}", self.value),
            AlphaRegime::StrictUpperBound => write!(f, "{}-", self.value),
        }
    }
}

/// Validated parameter triple with derived exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    s: f64,
    p: f64,
    d: usize,
    q_c: f64,
    gamma_barrier: f64,
    alpha_predicted: AlphaPrediction,
}

impl FracParams {
    /// Validates `(s, p, d)` and derives `q_c`, the barrier exponent and the
    /// predicted time exponent. Fails on any out-of-range input.
    pub fn new(s: f64, p: f64, d: usize) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 || s >= 1.0 {
            return Err(Error::InvalidParams(format!("s out of range (0,1): {s}")));
        }
        if !p.is_finite() || p < 2.0 {
            return Err(Error::InvalidParams(format!("p out of range: {p} < 2")));
        }
        if p >= 2.0 / (1.0 - s) {
            return Err(Error::InvalidParams(format!(
                "p out of range: need 2 <= p < 2/(1-s) = {}, got p = {p}",
                2.0 / (1.0 - s)
            )));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidParams(format!("unsupported dimension {d}")));
        }
        let q_c = -1.0 + p * (1.0 - s);
        let gamma_barrier = (1.0 - q_c / (p - 1.0)).max(0.0).max(1.0);
        let alpha_predicted = if q_c > 0.0 {
            AlphaPrediction { value: 1.0, regime: AlphaRegime::LipschitzInTime }
        } else {
            AlphaPrediction {
                value: 1.0 / (1.0 - q_c),
                regime: AlphaRegime::StrictUpperBound,
            }
        };
        Ok(Self { s, p, d, q_c, gamma_barrier, alpha_predicted })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Critical exponent `q_c = −1 + p(1−s)`; always `< 1` for valid params.
    pub fn q_c(&self) -> f64 {
        self.q_c
    }

    /// Barrier exponent `γ = max{(1 − q_c/(p−1))⁺, 1}`; equals 1 iff `q_c ≥ 0`.
    pub fn gamma_barrier(&self) -> f64 {
        self.gamma_barrier
    }

    pub fn alpha_predicted(&self) -> AlphaPrediction {
        self.alpha_predicted
    }

    /// Kernel order `d + sp`.
    pub fn kernel_order(&self) -> f64 {
        self.d as f64 + self.s * self.p
    }

    /// `sp`, the order of the kernel singularity beyond the dimension.
    pub fn sp(&self) -> f64 {
        self.s * self.p
    }
}

/// Convenience constructor mirroring the CLI surface.
pub fn make_params(s: f64, p: f64, d: usize) -> Result<FracParams> {
    FracParams::new(s, p, d)
}
