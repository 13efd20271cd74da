//! Quadrature primitives shared by the whole crate.
//!
//! The singular kernel `|z|^{−d−sp}` is integrated in shifted polar
//! coordinates: geometric radial shells (so each shell sees a slowly varying
//! integrand) times a small angular table whose directions come in exact
//! antipodal pairs. The pairing is load-bearing: odd integrands cancel
//! pointwise, which is what makes the principal value of the operator on
//! linear data exactly zero instead of a difference of two divergent halves.
//!
//! Every routine returns a [`QuadResult`] carrying the value and an error
//! estimate; callers are expected to check the estimate against their
//! tolerance instead of trusting values blindly.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Value plus error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
}

impl QuadResult {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, err: 0.0 }
    }
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult { value: self.value + rhs.value, err: self.err + rhs.err }
    }
}

impl std::ops::AddAssign for QuadResult {
    fn add_assign(&mut self, rhs: QuadResult) {
        self.value += rhs.value;
        self.err += rhs.err;
    }
}

/// Radial rule used inside each geometric shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialRule {
    /// 8-point Gauss–Legendre per shell, 4-point rule as error estimate.
    Gauss,
    /// Midpoint rule per shell; the independent cross-check rule.
    Midpoint,
}

/// Quadrature configuration for the nonlocal operator.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    /// Inner principal-value cutoff radius.
    pub eps_pv: f64,
    /// Annulus subdivisions per radius doubling (geometric shells).
    pub ring_count: usize,
    /// Target absolute tolerance for remainders.
    pub tol: f64,
    /// Truncation radius beyond which varying tails are replaced by their
    /// analytic far form (extended adaptively when the decay requires it).
    pub r_tail: f64,
    /// Angular directions per ring for d ≥ 2 (rounded up to even).
    pub angular: usize,
    pub rule: RadialRule,
}

impl QuadConfig {
    pub fn new(eps_pv: f64, ring_count: usize, tol: f64, r_tail: f64) -> Result<Self> {
        let cfg = Self { eps_pv, ring_count, tol, r_tail, angular: 16, rule: RadialRule::Gauss };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults tied to a grid: `eps_pv = h/2`, truncation at 64 box
    /// half-widths.
    pub fn for_grid(grid: &Grid) -> Self {
        let hw = (0..grid.d()).map(|a| grid.half_width(a)).fold(0.0f64, f64::max);
        Self {
            eps_pv: grid.h() / 2.0,
            ring_count: 8,
            tol: 1e-8,
            r_tail: 64.0 * hw,
            angular: 16,
            rule: RadialRule::Gauss,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_pv > 0.0) || !(self.eps_pv < self.r_tail) {
            return Err(Error::Domain(format!(
                "need 0 < eps_pv < r_tail, got eps_pv = {}, r_tail = {}",
                self.eps_pv, self.r_tail
            )));
        }
        if self.ring_count < 4 {
            return Err(Error::Domain(format!("ring_count must be >= 4: {}", self.ring_count)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive: {}", self.tol)));
        }
        Ok(())
    }

    pub fn with_rule(mut self, rule: RadialRule) -> Self {
        self.rule = rule;
        self
    }
}

// Gauss–Legendre nodes/weights on [-1, 1].
const GAUSS2: [(f64, f64); 2] =
    [(-0.5773502691896258, 1.0), (0.5773502691896258, 1.0)];
const GAUSS4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.34785484513745385),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.34785484513745385),
];
const GAUSS8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.10122853629037626),
    (-0.7966664774136267, 0.22238103445337448),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.22238103445337448),
    (0.9602898564975363, 0.10122853629037626),
];

pub fn gauss_nodes(order: usize) -> &'static [(f64, f64)] {
    match order {
        2 => &GAUSS2,
        8 => &GAUSS8,
        _ => &GAUSS4,
    }
}

/// One Gauss panel on [a, b].
pub fn integrate_panel(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, order: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in gauss_nodes(order) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Composite Gauss on `panels` equal subintervals; the error estimate is the
/// difference against the half-order rule.
pub fn integrate_smooth(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> QuadResult {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut hi = 0.0;
    let mut lo = 0.0;
    for k in 0..panels {
        let pa = a + k as f64 * w;
        let pb = pa + w;
        hi += integrate_panel(f, pa, pb, order);
        lo += integrate_panel(f, pa, pb, order / 2);
    }
    QuadResult::new(hi, (hi - lo).abs())
}

/// Geometric shell boundaries from `r0` up to `r1`, `ring_count` shells per
/// octave, with `breakpoints` (radii of known kinks: box faces, support
/// radii) spliced in so no shell straddles a discontinuity.
pub fn geometric_radii(r0: f64, r1: f64, ring_count: usize, breakpoints: &[f64]) -> Vec<f64> {
    assert!(r0 > 0.0 && r1 > r0);
    let ratio = 2f64.powf(1.0 / ring_count as f64);
    let mut radii = vec![r0];
    let mut r = r0;
    while r * ratio < r1 {
        r *= ratio;
        radii.push(r);
    }
    radii.push(r1);
    for &b in breakpoints {
        if b > r0 * (1.0 + 1e-12) && b < r1 * (1.0 - 1e-12) {
            radii.push(b);
        }
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs());
    radii
}

/// Integrates `g(r)·r^{−1−sp}` over the shells defined by `radii`, where `g`
/// is the angular pair sum at radius `r` (already weighted). Gauss shells
/// carry an embedded 2-point error estimate; midpoint shells estimate error
/// from the neighbour-difference of the integrand.
pub fn integrate_radial_kernel(
    g: &mut dyn FnMut(f64) -> f64,
    radii: &[f64],
    sp: f64,
    rule: RadialRule,
) -> QuadResult {
    let mut out = QuadResult::zero();
    match rule {
        RadialRule::Gauss => {
            for win in radii.windows(2) {
                let (a, b) = (win[0], win[1]);
                let mut f = |r: f64| g(r) * r.powf(-1.0 - sp);
                let hi = integrate_panel(&mut f, a, b, 8);
                let lo = integrate_panel(&mut f, a, b, 4);
                out.value += hi;
                out.err += (hi - lo).abs();
            }
        }
        RadialRule::Midpoint => {
            // Eight midpoint sub-panels per shell; error from the four-panel
            // variant.
            for win in radii.windows(2) {
                let (a, b) = (win[0], win[1]);
                let mut f = |r: f64| g(r) * r.powf(-1.0 - sp);
                let mut fine = 0.0;
                for k in 0..8 {
                    let pa = a + (b - a) * k as f64 / 8.0;
                    let pb = a + (b - a) * (k + 1) as f64 / 8.0;
                    fine += f(0.5 * (pa + pb)) * (pb - pa);
                }
                let mut coarse = 0.0;
                for k in 0..4 {
                    let pa = a + (b - a) * k as f64 / 4.0;
                    let pb = a + (b - a) * (k + 1) as f64 / 4.0;
                    coarse += f(0.5 * (pa + pb)) * (pb - pa);
                }
                out.value += fine;
                out.err += (fine - coarse).abs();
            }
        }
    }
    out
}

/// Half-sphere direction table; each entry is used as an antipodal pair.
#[derive(Debug, Clone)]
pub struct AngularTable {
    /// (unit direction, weight). The weight already accounts for both the
    /// direction and its antipode, split evenly: summing
    /// `w · [f(x + rω) + f(x − rω)]` over entries integrates over the whole
    /// sphere of directions.
    pub pairs: Vec<(Vec<f64>, f64)>,
}

impl AngularTable {
    pub fn build(d: usize, resolution: usize) -> Self {
        match d {
            1 => AngularTable { pairs: vec![(vec![1.0], 1.0)] },
            2 => {
                // n even directions; keep one of each antipodal pair.
                let n = (resolution.max(4) + 1) & !1usize;
                let half = n / 2;
                let w = 2.0 * std::f64::consts::PI / n as f64;
                let pairs = (0..half)
                    .map(|k| {
                        let th = (k as f64 + 0.25) * 2.0 * std::f64::consts::PI / n as f64;
                        (vec![th.cos(), th.sin()], w)
                    })
                    .collect();
                AngularTable { pairs }
            }
            3 => {
                // Product rule: Gauss in cosθ × uniform φ. Antipode of
                // (μ, φ) is (−μ, φ+π); keep μ > 0 plus the equator handled
                // by φ-halving.
                let nphi = ((resolution.max(8) + 1) & !1usize).max(8);
                let wphi = 2.0 * std::f64::consts::PI / nphi as f64;
                let mut pairs = Vec::new();
                for &(mu, wmu) in gauss_nodes(8) {
                    if mu <= 0.0 {
                        continue; // antipodal partner of a μ > 0 node
                    }
                    let s = (1.0 - mu * mu).sqrt();
                    for j in 0..nphi {
                        let phi = (j as f64 + 0.25) * wphi;
                        pairs.push((vec![s * phi.cos(), s * phi.sin(), mu], wmu * wphi));
                    }
                }
                AngularTable { pairs }
            }
            _ => panic!("unsupported dimension {d}"),
        }
    }

    /// Total measure represented (should be the sphere area `ω_d` once both
    /// antipodes are counted).
    pub fn total_weight_both_sides(&self) -> f64 {
        2.0 * self.pairs.iter().map(|(_, w)| *w).sum::<f64>()
    }
}

/// Surface area of the unit sphere in `ℝᵈ`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("unsupported dimension {d}"),
    }
}

/// `∫_{|z| > R} |z|^{−d−sp} dz = ω_d R^{−sp} / (sp)`.
pub fn far_kernel_mass(d: usize, sp: f64, r: f64) -> f64 {
    sphere_area(d) * r.powf(-sp) / sp
}

/// 1D one-sided exterior mass `∫_{y > b} |x − y|^{−1−sp} dy` for `x < b`.
pub fn one_sided_mass_1d(sp: f64, dist: f64) -> f64 {
    dist.powf(-sp) / sp
}
