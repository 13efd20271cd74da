//! Exterior data ("tails"): how a field continues on the rest of `ℝᵈ`
//! outside its grid box.
//!
//! The catalog is deliberately small: zero and constant extensions,
//! compactly supported bumps, inverse-power decays, and a global linear
//! profile. Every entry has closed-form bounds, which is what makes the
//! analytic remainder estimates in the quadrature modules possible.

use crate::error::{Error, Result};
use crate::params::FracParams;

/// Radially decaying closed-form profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticTail {
    /// `amp · (1 − (|x|/radius)²)₊²`, supported in `|x| ≤ radius`.
    CompactBump { amplitude: f64, radius: f64 },
    /// `amp · (1 + |x|²)^{−β/2}`; bounded at the origin, `~ amp·|x|^{−β}`
    /// at infinity.
    PowerDecay { amplitude: f64, beta: f64 },
    /// `g · x` on all of `ℝᵈ`. Exists for exact-cancellation tests; its
    /// tail norm is finite only when `p − 1 < sp`.
    Linear { gradient: Vec<f64> },
}

/// Exterior extension of a grid field.
#[derive(Debug, Clone, PartialEq)]
pub enum TailSpec {
    Zero,
    Constant(f64),
    Analytic(AnalyticTail),
}

/// What the tail looks like far out, for remainder bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum FarBehavior {
    /// `|tail(x) − c| ≤ amp·|x|^{−beta}` for `|x| ≥ r0`.
    ApproachesConstant { c: f64, amp: f64, beta: f64, r0: f64 },
    /// `tail(x) = g·x` exactly.
    Linear { gradient: Vec<f64> },
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl AnalyticTail {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticTail::CompactBump { amplitude, radius } => {
                let u = norm2(x) / radius;
                let w = (1.0 - u * u).max(0.0);
                amplitude * w * w
            }
            AnalyticTail::PowerDecay { amplitude, beta } => {
                let r2 = x.iter().map(|v| v * v).sum::<f64>();
                amplitude * (1.0 + r2).powf(-beta / 2.0)
            }
            AnalyticTail::Linear { gradient } => {
                gradient.iter().zip(x).map(|(g, v)| g * v).sum()
            }
        }
    }
}

impl TailSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TailSpec::Zero => 0.0,
            TailSpec::Constant(c) => *c,
            TailSpec::Analytic(a) => a.eval(x),
        }
    }

    /// Text tag used by the field file format and the CLI:
    /// `zero`, `constant <c>`, `bump <amp> <radius>`, `power <amp> <beta>`,
    /// `linear <g…>`.
    pub fn tag(&self) -> String {
        match self {
            TailSpec::Zero => "zero".into(),
            TailSpec::Constant(c) => format!("constant {c}"),
            TailSpec::Analytic(AnalyticTail::CompactBump { amplitude, radius }) => {
                format!("bump {amplitude} {radius}")
            }
            TailSpec::Analytic(AnalyticTail::PowerDecay { amplitude, beta }) => {
                format!("power {amplitude} {beta}")
            }
            TailSpec::Analytic(AnalyticTail::Linear { gradient }) => {
                let g: Vec<String> = gradient.iter().map(|x| x.to_string()).collect();
                format!("linear {}", g.join(" "))
            }
        }
    }

    pub fn parse(s: &str) -> Result<TailSpec> {
        let mut it = s.split_whitespace();
        let tag = it.next().unwrap_or_default();
        let rest: Vec<f64> = it
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad number in tail tag: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match (tag, rest.as_slice()) {
            ("zero", []) => Ok(TailSpec::Zero),
            ("constant", [c]) => Ok(TailSpec::Constant(*c)),
            ("bump", [a, r]) => {
                Ok(TailSpec::Analytic(AnalyticTail::CompactBump { amplitude: *a, radius: *r }))
            }
            ("power", [a, b]) => {
                Ok(TailSpec::Analytic(AnalyticTail::PowerDecay { amplitude: *a, beta: *b }))
            }
            ("linear", g) if !g.is_empty() => {
                Ok(TailSpec::Analytic(AnalyticTail::Linear { gradient: g.to_vec() }))
            }
            _ => Err(Error::Domain(format!("unknown tail tag: {s}"))),
        }
    }

    /// Validates the catalog constraints for the given parameters: power
    /// decays must satisfy the margin `β > (d + sp)/(p − 1)`, and linear
    /// profiles have a finite tail norm only when `p − 1 < sp`.
    pub fn validate(&self, params: &FracParams) -> Result<()> {
        match self {
            TailSpec::Zero | TailSpec::Constant(_) => Ok(()),
            TailSpec::Analytic(AnalyticTail::CompactBump { radius, .. }) => {
                if *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain("bump tail needs radius > 0".into()))
                }
            }
            TailSpec::Analytic(AnalyticTail::PowerDecay { beta, .. }) => {
                let margin = params.kernel_order() / (params.p() - 1.0);
                if *beta > margin {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "power tail decay beta = {beta} below the catalog margin \
                         (d+sp)/(p-1) = {margin}"
                    )))
                }
            }
            TailSpec::Analytic(AnalyticTail::Linear { gradient }) => {
                if gradient.len() != params.d() {
                    return Err(Error::Domain(format!(
                        "linear tail gradient has length {}, expected d = {}",
                        gradient.len(),
                        params.d()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn far_behavior(&self) -> FarBehavior {
        match self {
            TailSpec::Zero => {
                FarBehavior::ApproachesConstant { c: 0.0, amp: 0.0, beta: 1.0, r0: 0.0 }
            }
            TailSpec::Constant(c) => {
                FarBehavior::ApproachesConstant { c: *c, amp: 0.0, beta: 1.0, r0: 0.0 }
            }
            TailSpec::Analytic(AnalyticTail::CompactBump { radius, .. }) => {
                FarBehavior::ApproachesConstant { c: 0.0, amp: 0.0, beta: 1.0, r0: *radius }
            }
            TailSpec::Analytic(AnalyticTail::PowerDecay { amplitude, beta }) => {
                FarBehavior::ApproachesConstant {
                    c: 0.0,
                    amp: amplitude.abs(),
                    beta: *beta,
                    r0: 1.0,
                }
            }
            TailSpec::Analytic(AnalyticTail::Linear { gradient }) => {
                FarBehavior::Linear { gradient: gradient.clone() }
            }
        }
    }

    /// Radius beyond which the tail differs from its limit constant by at
    /// most `tol`. `None` for linear tails (no limit).
    pub fn variation_radius(&self, tol: f64) -> Option<f64> {
        match self.far_behavior() {
            FarBehavior::Linear { .. } => None,
            FarBehavior::ApproachesConstant { amp, beta, r0, .. } => {
                if amp == 0.0 {
                    Some(r0.max(1.0))
                } else {
                    Some(r0.max(1.0).max((amp / tol).powf(1.0 / beta)))
                }
            }
        }
    }

    /// Exact pointwise dominance `self ≥ other` on all of `ℝᵈ` where both
    /// shapes allow an exact answer; falls back to dense radial sampling.
    pub fn dominates(&self, other: &TailSpec, d: usize) -> bool {
        use AnalyticTail::*;
        use TailSpec::*;
        match (self, other) {
            (Zero, Zero) => true,
            (Constant(a), Constant(b)) => a >= b,
            (Zero, Constant(b)) => 0.0 >= *b,
            (Constant(a), Zero) => *a >= 0.0,
            (Zero, Analytic(CompactBump { amplitude, .. }))
            | (Analytic(CompactBump { amplitude, .. }), Zero) => {
                let nonneg_side_is_self = matches!(self, Analytic(_));
                if nonneg_side_is_self {
                    *amplitude >= 0.0
                } else {
                    *amplitude <= 0.0
                }
            }
            (
                Analytic(CompactBump { amplitude: a, radius: ra }),
                Analytic(CompactBump { amplitude: b, radius: rb }),
            ) if ra == rb => a >= b,
            (a, b) if a == b => true,
            _ => {
                // Conservative sampled check along the axes.
                let mut ok = true;
                for axis in 0..d {
                    for k in 0..4096 {
                        let r = 1e-3 * 1.01f64.powi(k);
                        if r > 1e6 {
                            break;
                        }
                        for sgn in [-1.0, 1.0] {
                            let mut x = vec![0.0; d];
                            x[axis] = sgn * r;
                            if self.eval(&x) < other.eval(&x) - 1e-14 {
                                ok = false;
                            }
                        }
                    }
                }
                ok
            }
        }
    }
}
