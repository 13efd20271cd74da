//! Time-regularity barrier `Ψ_η(x,t) = η + L₀(t−t₀) + L₁|x|^γ` and the
//! numerical verification of its strict supersolution property
//! `∂ₜΨ_η + (−Δₚ)ˢv > 0` on `B_{1/2} × (t₀, 0]`, where `v` patches the
//! barrier inside `B₁` to the reference field outside. The exponent
//! `γ = max{(1 − q_c/(p−1))⁺, 1}` keeps the local integral finite
//! (`γ > sp/(p−1)`), and the slope is tied to the spatial constant through
//! `L₀ = C·L₁^{p−1}`.

use crate::error::{Error, Result};
use crate::grid::SpaceTimeField;
use crate::operator::{j_p, FarField, PointField, SingularModel};
use crate::params::{AlphaPrediction, FracParams};
use crate::quadrature::{
    far_kernel_mass, geometric_radii, integrate_radial_kernel, AngularTable, QuadConfig,
};
use crate::tail::{norm2, FarBehavior};

/// Barrier exponent `γ = max{(1 − q_c/(p−1))⁺, 1}`; equals 1 iff q_c ≥ 0.
pub fn barrier_gamma(params: &FracParams) -> f64 {
    params.gamma_barrier()
}

/// `Ψ_η(x,t) = η + L₀(t−t₀) + L₁|x|^γ`.
pub fn barrier_eval(x: &[f64], t: f64, eta: f64, l0: f64, l1: f64, gamma: f64, t0: f64) -> f64 {
    eta + l0 * (t - t0) + l1 * norm2(x).powf(gamma)
}

/// Predicted time exponent with its regime tag (shared with the core
/// parameter derivation).
pub fn predicted_alpha(params: &FracParams) -> AlphaPrediction {
    params.alpha_predicted()
}

/// Minimizer of `f(η) = η + c·η^{(1−γ)(p−1)}`; for γ = 1 the optimum is
/// η = 0, otherwise the closed form `(c(γ−1)(p−1))^{1/((γ−1)(p−1)+1)}`.
pub fn eta_optimize(c: f64, gamma: f64, p: f64) -> Result<f64> {
    if !(c > 0.0) || gamma < 1.0 {
        return Err(Error::Domain("need c > 0 and gamma >= 1".into()));
    }
    if gamma == 1.0 {
        return Ok(0.0);
    }
    let e = (gamma - 1.0) * (p - 1.0);
    Ok((c * e).powf(1.0 / (e + 1.0)))
}

/// The patched scene `v`: barrier inside `B₁`, `u(·,t) − u(0,t₀)` outside.
pub struct PatchedBarrier<'a> {
    pub eta: f64,
    pub l0: f64,
    pub l1: f64,
    pub gamma: f64,
    pub t0: f64,
    pub exterior: &'a SpaceTimeField,
    /// `u(0, t₀)` subtracted from the exterior data.
    pub offset: f64,
    pub t: f64,
    slice: usize,
}

impl<'a> PatchedBarrier<'a> {
    pub fn new(
        eta: f64,
        l0: f64,
        l1: f64,
        gamma: f64,
        t0: f64,
        exterior: &'a SpaceTimeField,
        t: f64,
    ) -> Self {
        let slice = exterior.nearest_slice(t0);
        let offset = exterior.slice_field(slice).eval_extended(&vec![0.0; exterior.grid().d()]);
        let slice_t = exterior.nearest_slice(t);
        Self { eta, l0, l1, gamma, t0, exterior, offset, t, slice: slice_t }
    }
}

impl<'a> PointField for PatchedBarrier<'a> {
    fn d(&self) -> usize {
        self.exterior.grid().d()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if norm2(x) <= 1.0 {
            barrier_eval(x, self.t, self.eta, self.l0, self.l1, self.gamma, self.t0)
        } else {
            self.exterior.slice_field(self.slice).eval_extended(x) - self.offset
        }
    }

    fn far_field(&self) -> FarField {
        match self.exterior.tail().far_behavior() {
            FarBehavior::ApproachesConstant { c, amp, beta, r0 } => FarField::ApproachesConstant {
                c: c - self.offset,
                amp,
                beta,
                r0,
            },
            FarBehavior::Linear { gradient } => FarField::Linear { gradient },
        }
    }

    fn kink_radii(&self, x: &[f64]) -> Vec<f64> {
        let r = norm2(x);
        let g = self.exterior.grid();
        let mut out = vec![r, (1.0 - r).abs(), 1.0 + r];
        for a in 0..g.d() {
            out.push((x[a] - g.lo(a)).abs());
            out.push((g.hi(a) - x[a]).abs());
        }
        out
    }

    fn settled_radius(&self, tol: f64) -> f64 {
        let g = self.exterior.grid();
        let corner: f64 = (0..g.d())
            .map(|a| g.half_width(a) + g.center()[a].abs())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        self.exterior
            .tail()
            .variation_radius(tol)
            .unwrap_or(corner)
            .max(corner)
            .max(1.0)
    }

    fn singular_model(&self, _x: &[f64], _eps: f64) -> SingularModel {
        SingularModel::Direct
    }

    fn check_point(&self, x: &[f64], eps: f64) -> Result<()> {
        let r = norm2(x);
        if r + eps >= 1.0 {
            return Err(Error::Domain("barrier sample too close to the patch sphere".into()));
        }
        if self.gamma < 2.0 && r <= eps {
            return Err(Error::Domain(
                "barrier sample inside the kink exclusion ball".into(),
            ));
        }
        Ok(())
    }
}

/// One sampled point of the supersolution check, with the integral split
/// into the inner local part (`|z| < |x̄|/2`), the rest of `B₁`, and the
/// exterior.
#[derive(Debug, Clone)]
pub struct BarrierSample {
    pub x: Vec<f64>,
    pub t: f64,
    /// local integral over `|z| < |x̄|/2` (kink-free, gradient-dominated)
    pub i1: f64,
    /// rest of the local integral over `B₁`
    pub i2: f64,
    /// exterior integral (the tail-controlled part)
    pub l2: f64,
    /// `∂ₜΨ_η = L₀`
    pub dt_psi: f64,
    pub total: f64,
    pub err: f64,
}

/// Outcome of the sampled supersolution verification.
#[derive(Debug, Clone)]
pub struct SupersolutionReport {
    pub samples: Vec<BarrierSample>,
    pub min_total: f64,
    /// worst-case error bar at the minimizing sample
    pub min_err: f64,
    pub c_claim: f64,
    pub l0: f64,
}

impl SupersolutionReport {
    /// True when the sampled minimum is positive with the error bar
    /// excluded.
    pub fn strictly_positive(&self) -> bool {
        self.min_total - self.min_err > 0.0
    }
}

fn split_operator(
    scene: &PatchedBarrier,
    x: &[f64],
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<(f64, f64, f64, f64)> {
    let d = params.d();
    let p = params.p();
    let sp = params.sp();
    let angular = AngularTable::build(d, quad.angular);
    let eps = quad.eps_pv;
    scene.check_point(x, eps)?;
    let u_x = scene.eval(x);
    let r_norm = norm2(x);
    let r_in = (r_norm / 2.0).max(eps * 2.0);
    let kinks = scene.kink_radii(x);

    let mut buf = vec![0.0; d];
    let mut pair_sum_clipped = |r: f64, want_inside_b1: bool| {
        let mut acc = 0.0;
        for (omega, w) in &angular.pairs {
            for sign in [1.0f64, -1.0] {
                for a in 0..d {
                    buf[a] = x[a] + sign * r * omega[a];
                }
                let inside = norm2(&buf) <= 1.0;
                if inside == want_inside_b1 {
                    acc += w * j_p(u_x - scene.eval(&buf), p);
                }
            }
        }
        acc
    };

    // singular ball (inside B1 by the sample margins) + inner rings
    let r_lo = eps * f64::EPSILON.sqrt();
    let sing_radii = geometric_radii(r_lo, eps, quad.ring_count, &kinks);
    let sing = integrate_radial_kernel(
        &mut |r| pair_sum_clipped(r, true),
        &sing_radii,
        sp,
        quad.rule,
    );
    let inner_radii = geometric_radii(eps, r_in, quad.ring_count, &kinks);
    let inner = integrate_radial_kernel(
        &mut |r| pair_sum_clipped(r, true),
        &inner_radii,
        sp,
        quad.rule,
    );
    let i1 = sing + inner;

    // rest of B1
    let outer_local_radii = geometric_radii(r_in, 1.0 + r_norm, quad.ring_count, &kinks);
    let i2 = integrate_radial_kernel(
        &mut |r| pair_sum_clipped(r, true),
        &outer_local_radii,
        sp,
        quad.rule,
    );

    // exterior: sampled shells out to the settled radius plus analytic far
    let settled = scene.settled_radius(quad.tol);
    let r_active = settled + r_norm;
    let ext_radii = geometric_radii(1.0 - r_norm, r_active, quad.ring_count, &kinks);
    let mut l2 = integrate_radial_kernel(
        &mut |r| pair_sum_clipped(r, false),
        &ext_radii,
        sp,
        quad.rule,
    );
    match scene.far_field() {
        FarField::ApproachesConstant { c, amp, beta, .. } => {
            let mass = far_kernel_mass(d, sp, r_active);
            l2.value += j_p(u_x - c, p) * mass;
            if amp > 0.0 {
                let dev = amp * r_active.powf(-beta);
                l2.err += (p - 1.0) * ((u_x - c).abs() + dev).powf(p - 2.0) * dev * mass;
            }
        }
        FarField::Linear { .. } => {
            return Err(Error::Domain("barrier exterior needs a tail with a limit".into()))
        }
    }

    Ok((i1.value, i2.value, l2.value, i1.err + i2.err + l2.err))
}

/// Samples `∂ₜΨ_η + (−Δₚ)ˢv` over `B_{1/2} × (t₀, 0]` with
/// `L₀ = C_claim·L₁^{p−1}` and returns the sampled minimum with error bars
/// and the per-sample breakdown. Sample points keep a kink-exclusion ball
/// of radius `h` around the origin (integration still crosses the kink).
pub fn verify_supersolution(
    params: &FracParams,
    exterior: &SpaceTimeField,
    eta: f64,
    l1: f64,
    c_claim: f64,
    n_space: usize,
    n_time: usize,
    quad: &QuadConfig,
) -> Result<SupersolutionReport> {
    let gamma = barrier_gamma(params);
    let p = params.p();
    let l0 = c_claim * l1.powf(p - 1.0);
    let t0 = *exterior
        .times()
        .first()
        .ok_or_else(|| Error::Domain("empty exterior trajectory".into()))?;
    let t_hi = *exterior.times().last().unwrap();
    let h_excl = exterior.grid().h().max(4.0 * quad.eps_pv);

    let mut samples = Vec::new();
    for j in 0..n_time {
        let t = if n_time == 1 {
            t_hi
        } else {
            t0 + (t_hi - t0) * (j as f64 + 1.0) / n_time as f64
        };
        let scene = PatchedBarrier::new(eta, l0, l1, gamma, t0, exterior, t);
        for i in 0..n_space {
            // symmetric grid of sample radii in [h_excl, 1/2)
            let frac = (i as f64 + 0.5) / n_space as f64;
            let r = h_excl + (0.5 - 2.0 * h_excl) * frac;
            for sign in [1.0f64, -1.0] {
                let mut x = vec![0.0; params.d()];
                x[0] = sign * r;
                let (i1, i2, l2, err) = split_operator(&scene, &x, params, quad)?;
                let total = l0 + i1 + i2 + l2;
                samples.push(BarrierSample { x, t, i1, i2, l2, dt_psi: l0, total, err });
            }
        }
    }
    let (mut min_total, mut min_err) = (f64::INFINITY, 0.0);
    for s in &samples {
        if s.total < min_total {
            min_total = s.total;
            min_err = s.err;
        }
    }
    Ok(SupersolutionReport { samples, min_total, min_err, c_claim, l0 })
}

/// Doubling search for the smallest power-of-two `C_claim` whose sampled
/// minimum is positive with error bars excluded.
pub fn c_claim_threshold(
    params: &FracParams,
    exterior: &SpaceTimeField,
    eta: f64,
    l1: f64,
    n_space: usize,
    n_time: usize,
    quad: &QuadConfig,
) -> Result<f64> {
    let mut c = 1.0f64;
    for _ in 0..40 {
        let rep = verify_supersolution(params, exterior, eta, l1, c, n_space, n_time, quad)?;
        if rep.strictly_positive() {
            return Ok(c);
        }
        c *= 2.0;
    }
    Err(Error::Contract("no positive barrier threshold below 2^40".into()))
}
