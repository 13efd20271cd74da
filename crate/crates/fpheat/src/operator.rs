//! Pointwise evaluation of the fractional p-Laplacian
//! `P.V. ∫ J_p(u(x) − u(y)) |x−y|^{−d−sp} dy`, the weak energy form, and the
//! `J_p` utilities.
//!
//! The principal value is split into three parts:
//!   (i)  `|z| < eps_pv`: antipodal pairs `(z, −z)` of a C² model of the
//!        field, which makes the singular part absolutely convergent;
//!   (ii) geometric annuli from `eps_pv` out to the radius where the field
//!        stops varying (box, patch or tail-support radius);
//!   (iii) an analytic far term using the tail's limit behaviour, with a
//!        remainder bound folded into the error estimate.

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::params::FracParams;
use crate::quadrature::{
    far_kernel_mass, geometric_radii, integrate_panel, integrate_radial_kernel, sphere_area,
    AngularTable, QuadConfig, QuadResult,
};
use crate::tail::{norm2, FarBehavior, TailSpec};

/// `J_p(τ) = |τ|^{p−2} τ`. Odd and nondecreasing. The `p ∈ {2, 3}` branches
/// avoid `powf` both for speed and for exact monotonicity in floats.
#[inline]
pub fn j_p(tau: f64, p: f64) -> f64 {
    if p == 2.0 {
        tau
    } else if p == 3.0 {
        tau.abs() * tau
    } else {
        tau.abs().powf(p - 2.0) * tau
    }
}

/// `J_p'(τ) = (p−1)|τ|^{p−2}`.
#[inline]
pub fn j_p_prime(tau: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p == 3.0 {
        2.0 * tau.abs()
    } else {
        (p - 1.0) * tau.abs().powf(p - 2.0)
    }
}

/// Numeric `∫₀¹ |b + τ(a−b)|^{p−2} dτ`, panels graded toward the interior
/// zero of the integrand when there is one.
pub fn chord_integral(a: f64, b: f64, p: f64) -> f64 {
    let c = a - b;
    let mut f = |t: f64| (b + t * c).abs().powf(p - 2.0);
    if p == 2.0 {
        return 1.0;
    }
    let t_zero = if c != 0.0 { -b / c } else { -1.0 };
    let mut acc = 0.0;
    let mut graded = |lo: f64, hi: f64, toward_lo: bool| {
        // 10 geometric panels accumulating toward the kink endpoint.
        let n = 10;
        let mut edges = vec![lo];
        for k in 1..n {
            let frac = 0.5f64.powi((n - k) as i32);
            edges.push(lo + (hi - lo) * if toward_lo { frac } else { 1.0 - frac });
        }
        edges.push(hi);
        if !toward_lo {
            edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
        }
        let mut s = 0.0;
        for w in edges.windows(2) {
            s += integrate_panel(&mut f, w[0], w[1], 4);
        }
        s
    };
    if t_zero > 0.0 && t_zero < 1.0 {
        acc += graded(0.0, t_zero, false);
        acc += graded(t_zero, 1.0, true);
    } else {
        acc += graded(0.0, 1.0, t_zero <= 0.0);
    }
    acc
}

/// The same chord integral in closed form via the `J_p` difference quotient;
/// valid for `a ≠ b`.
pub fn chord_integral_closed(a: f64, b: f64, p: f64) -> f64 {
    (j_p(a, p) - j_p(b, p)) / ((p - 1.0) * (a - b))
}

/// Empirical two-sided bound for the ratio
/// `∫₀¹|b+τ(a−b)|^{p−2}dτ / (|b|+|a−b|)^{p−2}` over `n` seeded samples.
pub fn chord_ratio_band(p: f64, n: usize, seed: u64) -> (f64, f64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut count = 0usize;
    while count < n {
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        if (a - b).abs() < 1e-9 && b.abs() < 1e-9 {
            continue;
        }
        let denom = (b.abs() + (a - b).abs()).powf(p - 2.0);
        if denom == 0.0 {
            continue;
        }
        let num = if (a - b).abs() < 1e-12 {
            b.abs().powf(p - 2.0)
        } else {
            chord_integral_closed(a, b, p)
        };
        let r = num / denom;
        lo = lo.min(r);
        hi = hi.max(r);
        count += 1;
    }
    (lo, hi)
}

/// Limit behaviour of a point field far from the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum FarField {
    /// `|f(y) − c| ≤ amp·|y|^{−beta}` for `|y| ≥ r0`.
    ApproachesConstant { c: f64, amp: f64, beta: f64, r0: f64 },
    /// `f(y) = g·y + (offset irrelevant)` exactly for large `|y|`; handled
    /// by exact antipodal pairing plus an analytic paired remainder.
    Linear { gradient: Vec<f64> },
}

impl From<FarBehavior> for FarField {
    fn from(fb: FarBehavior) -> Self {
        match fb {
            FarBehavior::ApproachesConstant { c, amp, beta, r0 } => {
                FarField::ApproachesConstant { c, amp, beta, r0 }
            }
            FarBehavior::Linear { gradient } => FarField::Linear { gradient },
        }
    }
}

/// How the sub-`eps_pv` ball is evaluated.
pub enum SingularModel {
    /// Evaluate the field itself (for closed-form C² inputs).
    Direct,
    /// Quadratic model `±g·z + ½ zᵀHz` (for grid data, built from
    /// neighbouring nodes).
    Quadratic { grad: Vec<f64>, hess: Vec<f64> },
}

/// A scalar field on all of `ℝᵈ` that the operator can be evaluated on.
pub trait PointField: Sync {
    fn d(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn far_field(&self) -> FarField;

    /// Radii (distances from `x`) at which the field has known kinks —
    /// box faces, patch spheres, tail support edges. Ring boundaries are
    /// spliced there so no quadrature panel straddles a discontinuity.
    fn kink_radii(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// Radius (from the origin) beyond which the field differs from its far
    /// form by less than `tol`.
    fn settled_radius(&self, tol: f64) -> f64;

    fn singular_model(&self, _x: &[f64], _eps: f64) -> SingularModel {
        SingularModel::Direct
    }

    /// Extra admissibility check for the evaluation point.
    fn check_point(&self, _x: &[f64], _eps: f64) -> Result<()> {
        Ok(())
    }
}

/// Extended view of a grid field: interpolation inside the box, tail
/// outside.
pub struct ExtendedField<'a> {
    pub field: &'a GridField,
}

impl<'a> ExtendedField<'a> {
    pub fn new(field: &'a GridField) -> Self {
        Self { field }
    }

    /// Quadratic model from central differences at the node nearest to `x`.
    fn node_model(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = self.field.grid();
        let d = g.d();
        let h = g.h();
        let mut base = vec![0.0; d];
        for a in 0..d {
            let i = ((x[a] - g.lo(a)) / h).round() as isize;
            let i = i.clamp(0, g.n()[a] as isize - 1) as usize;
            base[a] = g.node_coord(a, i);
        }
        let ev = |dx: &[f64]| {
            let y: Vec<f64> = base.iter().zip(dx).map(|(b, d)| b + d).collect();
            self.field.eval_extended(&y)
        };
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        let u0 = ev(&vec![0.0; d]);
        for a in 0..d {
            let mut dp = vec![0.0; d];
            dp[a] = h;
            let mut dm = vec![0.0; d];
            dm[a] = -h;
            let (up, um) = (ev(&dp), ev(&dm));
            grad[a] = (up - um) / (2.0 * h);
            hess[a * d + a] = (up - 2.0 * u0 + um) / (h * h);
        }
        for a in 0..d {
            for b in (a + 1)..d {
                let mut q = vec![0.0; d];
                q[a] = h;
                q[b] = h;
                let pp = ev(&q);
                q[a] = -h;
                q[b] = -h;
                let mm = ev(&q);
                q[a] = h;
                q[b] = -h;
                let pm = ev(&q);
                q[a] = -h;
                q[b] = h;
                let mp = ev(&q);
                let c = (pp + mm - pm - mp) / (4.0 * h * h);
                hess[a * d + b] = c;
                hess[b * d + a] = c;
            }
        }
        (grad, hess)
    }
}

impl<'a> PointField for ExtendedField<'a> {
    fn d(&self) -> usize {
        self.field.grid().d()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.field.eval_extended(x)
    }

    fn far_field(&self) -> FarField {
        self.field.tail().far_behavior().into()
    }

    fn kink_radii(&self, x: &[f64]) -> Vec<f64> {
        let g = self.field.grid();
        let mut out = Vec::new();
        for a in 0..g.d() {
            out.push((x[a] - g.lo(a)).abs());
            out.push((g.hi(a) - x[a]).abs());
        }
        if let TailSpec::Analytic(crate::tail::AnalyticTail::CompactBump { radius, .. }) =
            self.field.tail()
        {
            let r = norm2(x);
            out.push((radius - r).abs());
            out.push(radius + r);
        }
        out
    }

    fn settled_radius(&self, tol: f64) -> f64 {
        let g = self.field.grid();
        let corner: f64 = (0..g.d())
            .map(|a| g.half_width(a) + g.center()[a].abs())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let tail_r = self.field.tail().variation_radius(tol).unwrap_or(corner);
        corner.max(tail_r)
    }

    fn singular_model(&self, x: &[f64], _eps: f64) -> SingularModel {
        let (grad, hess) = self.node_model(x);
        SingularModel::Quadratic { grad, hess }
    }

    fn check_point(&self, x: &[f64], eps: f64) -> Result<()> {
        let g = self.field.grid();
        let margin = g.interior_margin(x);
        if margin < eps + g.h() {
            return Err(Error::Domain(format!(
                "evaluation point too close to the box boundary: margin {margin} < eps + h = {}",
                eps + g.h()
            )));
        }
        Ok(())
    }
}

/// Closed-form field: a closure plus declared far behaviour. The closure is
/// assumed C² near any evaluation point (the singular part samples it
/// directly).
pub struct FnField<F: Fn(&[f64]) -> f64 + Sync> {
    pub dim: usize,
    pub f: F,
    pub far: FarField,
    /// Radii of kink spheres centred at the origin.
    pub kinks: Vec<f64>,
    /// Points where the function has a kink (e.g. edges of a shifted bump).
    pub kink_points: Vec<Vec<f64>>,
    pub settled: f64,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(dim: usize, f: F, far: FarField, settled: f64) -> Self {
        Self { dim, f, far, kinks: Vec::new(), kink_points: Vec::new(), settled }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> PointField for FnField<F> {
    fn d(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn far_field(&self) -> FarField {
        self.far.clone()
    }

    fn kink_radii(&self, x: &[f64]) -> Vec<f64> {
        let r = norm2(x);
        let mut out: Vec<f64> =
            self.kinks.iter().flat_map(|&k| [(k - r).abs(), k + r]).collect();
        for pt in &self.kink_points {
            let dist: f64 =
                pt.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            out.push(dist);
        }
        out
    }

    fn settled_radius(&self, _tol: f64) -> f64 {
        self.settled
    }
}

/// The three contributions to a principal-value evaluation.
#[derive(Debug, Clone, Copy)]
pub struct OperatorParts {
    pub singular: QuadResult,
    pub rings: QuadResult,
    pub far: QuadResult,
}

impl OperatorParts {
    pub fn total(&self) -> QuadResult {
        self.singular + self.rings + self.far
    }
}

fn pair_sum(
    field: &dyn PointField,
    u_x: f64,
    x: &[f64],
    angular: &AngularTable,
    p: f64,
    r: f64,
    buf: &mut Vec<f64>,
) -> f64 {
    let d = field.d();
    buf.resize(d, 0.0);
    let mut acc = 0.0;
    for (omega, w) in &angular.pairs {
        for a in 0..d {
            buf[a] = x[a] + r * omega[a];
        }
        let fp = j_p(u_x - field.eval(buf), p);
        for a in 0..d {
            buf[a] = x[a] - r * omega[a];
        }
        let fm = j_p(u_x - field.eval(buf), p);
        acc += w * (fp + fm);
    }
    acc
}

/// Symmetrized pair sum of the quadratic model: increments are
/// `δ(±z) = ∓ g·z − ½ zᵀHz`.
fn pair_sum_model(
    grad: &[f64],
    hess: &[f64],
    angular: &AngularTable,
    p: f64,
    r: f64,
) -> f64 {
    let d = grad.len();
    let mut acc = 0.0;
    for (omega, w) in &angular.pairs {
        let mut g = 0.0;
        let mut q = 0.0;
        for a in 0..d {
            g += grad[a] * omega[a];
            for b in 0..d {
                q += omega[a] * hess[a * d + b] * omega[b];
            }
        }
        let lin = g * r;
        let quad = 0.5 * q * r * r;
        acc += w * (j_p(-lin - quad, p) + j_p(lin - quad, p));
    }
    acc
}

/// Full principal-value evaluation, split into parts.
pub fn frac_p_laplacian_parts(
    field: &dyn PointField,
    x: &[f64],
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<OperatorParts> {
    quad.validate()?;
    if field.d() != params.d() {
        return Err(Error::Domain("field dimension does not match params".into()));
    }
    let eps = quad.eps_pv;
    field.check_point(x, eps)?;
    let d = params.d();
    let p = params.p();
    let sp = params.sp();
    let angular = AngularTable::build(d, quad.angular);
    let u_x = field.eval(x);

    // (i) singular ball. Direct evaluation of antipodal pair sums hits
    // catastrophic cancellation below r ≈ eps·√ε_mach (the pair sum is
    // O(r²) while each term is O(r)); the quadratic model has no such
    // floor because its increments are formed symbolically.
    let kinks = field.kink_radii(x);
    let model = field.singular_model(x, eps);
    let r_lo = match &model {
        SingularModel::Direct => eps * f64::EPSILON.sqrt(),
        SingularModel::Quadratic { .. } => eps * 2f64.powi(-45),
    };
    let sing_radii = geometric_radii(r_lo, eps, quad.ring_count, &kinks);
    let mut singular = match &model {
        SingularModel::Direct => {
            let mut buf = Vec::new();
            integrate_radial_kernel(
                &mut |r| pair_sum(field, u_x, x, &angular, p, r, &mut buf),
                &sing_radii,
                sp,
                quad.rule,
            )
        }
        SingularModel::Quadratic { grad, hess } => integrate_radial_kernel(
            &mut |r| pair_sum_model(grad, hess, &angular, p, r),
            &sing_radii,
            sp,
            quad.rule,
        ),
    };
    // The part below r_lo is O(r_lo^{p(1−s)}); bound it by the innermost
    // shell's own contribution.
    if sing_radii.len() >= 2 {
        let inner = integrate_radial_kernel(
            &mut |r| match &model {
                SingularModel::Direct => {
                    let mut buf = Vec::new();
                    pair_sum(field, u_x, x, &angular, p, r, &mut buf)
                }
                SingularModel::Quadratic { grad, hess } => {
                    pair_sum_model(grad, hess, &angular, p, r)
                }
            },
            &sing_radii[0..2],
            sp,
            quad.rule,
        );
        singular.err += inner.value.abs();
    }

    // (ii) annuli out to where the field settles into its far form.
    let far = field.far_field();
    let settled = match &far {
        FarField::ApproachesConstant { amp, .. } => {
            let tol_radius = field.settled_radius(quad.tol);
            if *amp == 0.0 {
                tol_radius
            } else {
                tol_radius.min(quad.r_tail.max(norm2(x) + 1.0))
            }
        }
        FarField::Linear { .. } => field.settled_radius(quad.tol),
    };
    let r_active = (settled + norm2(x)).max(eps * 2.0);
    let ring_radii = geometric_radii(eps, r_active, quad.ring_count, &kinks);
    let mut buf = Vec::new();
    let rings = integrate_radial_kernel(
        &mut |r| pair_sum(field, u_x, x, &angular, p, r, &mut buf),
        &ring_radii,
        sp,
        quad.rule,
    );

    // (iii) analytic far term.
    let far_part = match far {
        FarField::ApproachesConstant { c, amp, beta, .. } => {
            let mass = far_kernel_mass(d, sp, r_active);
            let value = j_p(u_x - c, p) * mass;
            let mut err = 0.0;
            if amp > 0.0 {
                // |J_p(u_x − tail) − J_p(u_x − c)| ≤ (p−1)(|u_x−c|+dev)^{p−2}·dev
                let dev = amp * r_active.powf(-beta);
                let lip = (p - 1.0) * ((u_x - c).abs() + dev).powf(p - 2.0);
                err = lip * dev * mass;
                if err > quad.tol {
                    return Err(Error::Quadrature(format!(
                        "tail remainder bound {err} exceeds tol {} at radius {r_active}",
                        quad.tol
                    )));
                }
            }
            QuadResult::new(value, err)
        }
        FarField::Linear { gradient } => {
            // Antipodal pairs cancel the odd part exactly; what is left is
            // bounded by 2(p−1)(|g|r)^{p−2}|c| with c = u_x − ℓ(x), and
            // integrates to a finite remainder since q_c < 1.
            let gnorm = norm2(&gradient);
            let ell_x: f64 = gradient.iter().zip(x).map(|(g, v)| g * v).sum();
            let c = u_x - ell_x;
            let expo = sp + 2.0 - p; // positive iff q_c < 1
            let bound = if c == 0.0 || gnorm == 0.0 {
                0.0
            } else {
                2.0 * (p - 1.0)
                    * (gnorm * r_active).powf(p - 2.0)
                    * c.abs()
                    * sphere_area(d)
                    * r_active.powf(-expo)
                    / expo
            };
            QuadResult::new(0.0, bound)
        }
    };

    Ok(OperatorParts { singular, rings, far: far_part })
}

/// `(−Δₚ)ˢ` at a point, with error estimate.
pub fn frac_p_laplacian_point(
    field: &dyn PointField,
    x: &[f64],
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    Ok(frac_p_laplacian_parts(field, x, params, quad)?.total())
}

/// Node-wise operator on the interior nodes of a grid field. The output
/// grid is shrunk by the margin layers the pointwise evaluation requires;
/// its tail is a placeholder (`Zero`).
pub fn frac_p_laplacian_grid(
    u: &GridField,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<GridField> {
    use rayon::prelude::*;
    let g = u.grid();
    let layers = ((quad.eps_pv + g.h()) / g.h()).ceil() as usize;
    let n_out: Vec<usize> = g
        .n()
        .iter()
        .map(|&n| n.checked_sub(2 * layers).unwrap_or(0))
        .collect();
    if n_out.iter().any(|&n| n < 3) {
        return Err(Error::Domain("grid too small for interior evaluation".into()));
    }
    let out_grid = crate::grid::Grid::new(g.center().to_vec(), n_out, g.h())?;
    let scene = ExtendedField::new(u);
    let values: Vec<Result<f64>> = (0..out_grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = out_grid.node_position(idx);
            frac_p_laplacian_point(&scene, &x, params, quad).map(|r| r.value)
        })
        .collect();
    let mut out = Vec::with_capacity(values.len());
    for (idx, v) in values.into_iter().enumerate() {
        match v {
            Ok(v) => out.push(v),
            Err(e) => {
                return Err(Error::Quadrature(format!("node {idx}: {e}")));
            }
        }
    }
    GridField::new(out_grid, out, TailSpec::Zero)
}

/// Compactly supported space-time test function with analytic time
/// derivative.
pub struct TestFn<'a> {
    pub support_center: Vec<f64>,
    pub support_half_width: Vec<f64>,
    pub eval: &'a (dyn Fn(&[f64], f64) -> f64 + Sync),
    pub dt: &'a (dyn Fn(&[f64], f64) -> f64 + Sync),
}

impl<'a> TestFn<'a> {
    pub fn in_support(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.support_center)
            .zip(&self.support_half_width)
            .all(|((xi, c), hw)| (xi - c).abs() <= *hw)
    }
}

/// `ℰ(u, φ) = ∬_{ℝᵈ×ℝᵈ} J_p(u(x)−u(y)) (φ(x)−φ(y)) |x−y|^{−d−sp} dy dx`
/// at a fixed time. The outer integral runs over the support `S` of `φ`;
/// the region `{x ∉ S, y ∈ S}` equals the `{x ∈ S, y ∉ S}` cross term by
/// the swap symmetry of the integrand, so exterior `y`-samples carry
/// weight 2.
pub fn energy_form(
    u: &dyn PointField,
    phi: &TestFn,
    t: f64,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    let d = params.d();
    let p = params.p();
    let sp = params.sp();
    let angular = AngularTable::build(d, quad.angular);
    let far = u.far_field();
    let (far_c, settled) = match &far {
        FarField::ApproachesConstant { c, .. } => (*c, u.settled_radius(quad.tol)),
        FarField::Linear { .. } => {
            return Err(Error::Domain("energy form needs a tail with a limit".into()))
        }
    };

    // Outer tensor-panel quadrature over the support box.
    let panels_per_axis = 24usize;
    let mut grid_pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for a in 0..d {
        let lo = phi.support_center[a] - phi.support_half_width[a];
        let hi = phi.support_center[a] + phi.support_half_width[a];
        let w = (hi - lo) / panels_per_axis as f64;
        let mut next = Vec::new();
        for (pt, wt) in &grid_pts {
            for k in 0..panels_per_axis {
                let mid = lo + (k as f64 + 0.5) * w;
                for &(gx, gw) in crate::quadrature::gauss_nodes(4) {
                    let mut q = pt.clone();
                    q.push(mid + 0.5 * w * gx);
                    next.push((q, wt * gw * 0.5 * w));
                }
            }
        }
        grid_pts = next;
    }

    use rayon::prelude::*;
    let contributions: Vec<QuadResult> = grid_pts
        .par_iter()
        .map(|(x, wx)| {
            let u_x = u.eval(x);
            let phi_x = (phi.eval)(x, t);
            let support_diam: f64 = phi
                .support_half_width
                .iter()
                .map(|h| 2.0 * h * h)
                .sum::<f64>()
                .sqrt();
            let r_active = (settled + norm2(x)).max(support_diam);
            let r_lo = r_active * f64::EPSILON.sqrt();
            let mut kinks = u.kink_radii(x);
            for a in 0..d {
                let lo = phi.support_center[a] - phi.support_half_width[a];
                let hi = phi.support_center[a] + phi.support_half_width[a];
                kinks.push((x[a] - lo).abs());
                kinks.push((hi - x[a]).abs());
            }
            let radii = geometric_radii(r_lo, r_active, quad.ring_count, &kinks);
            let mut buf = vec![0.0; d];
            let in_support = |y: &[f64]| {
                y.iter()
                    .zip(&phi.support_center)
                    .zip(&phi.support_half_width)
                    .all(|((yi, c), hw)| (yi - c).abs() <= *hw)
            };
            let mut g = |r: f64| {
                let mut acc = 0.0;
                for (omega, w) in &angular.pairs {
                    for sign in [1.0f64, -1.0] {
                        for a in 0..d {
                            buf[a] = x[a] + sign * r * omega[a];
                        }
                        let mirror = if in_support(&buf) { 1.0 } else { 2.0 };
                        acc += w
                            * mirror
                            * j_p(u_x - u.eval(&buf), p)
                            * (phi_x - (phi.eval)(&buf, t));
                    }
                }
                acc
            };
            let mut inner = integrate_radial_kernel(&mut g, &radii, sp, quad.rule);
            // Far part: φ vanishes there, u is its limit constant; far
            // points are outside the support, hence the mirror factor.
            inner.value +=
                2.0 * j_p(u_x - far_c, p) * phi_x * far_kernel_mass(d, sp, r_active);
            QuadResult::new(wx * inner.value, wx.abs() * inner.err)
        })
        .collect();

    let mut out = QuadResult::zero();
    for c in contributions {
        out += c;
    }
    Ok(out)
}

/// Energy form with both integrals restricted to the box
/// `support_center ± support_half_width` (the comparison object for the
/// Gagliardo seminorm identity `ℰ(u,u) = [u]^p`).
pub fn energy_form_boxed(
    u: &dyn PointField,
    phi: &TestFn,
    t: f64,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    let d = params.d();
    if d != 1 {
        return Err(Error::Domain("boxed energy form implemented for d = 1".into()));
    }
    let p = params.p();
    let sp = params.sp();
    let lo = phi.support_center[0] - phi.support_half_width[0];
    let hi = phi.support_center[0] + phi.support_half_width[0];
    let panels = 64usize;
    let pw = (hi - lo) / panels as f64;
    use rayon::prelude::*;
    let parts: Vec<QuadResult> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let mut acc = QuadResult::zero();
            let mid = lo + (k as f64 + 0.5) * pw;
            for &(gx, gw) in crate::quadrature::gauss_nodes(4) {
                let x = mid + 0.5 * pw * gx;
                let wx = gw * 0.5 * pw;
                let u_x = u.eval(&[x]);
                let phi_x = (phi.eval)(&[x], t);
                let span = (hi - lo).max(1e-12);
                let r_lo = span * f64::EPSILON.sqrt();
                let radii =
                    geometric_radii(r_lo, span, quad.ring_count, &[(x - lo).abs(), (hi - x).abs()]);
                let mut g = |r: f64| {
                    let mut acc = 0.0;
                    for (yv, active) in [(x + r, x + r <= hi), (x - r, x - r >= lo)] {
                        if active {
                            acc += j_p(u_x - u.eval(&[yv]), p) * (phi_x - (phi.eval)(&[yv], t));
                        }
                    }
                    acc
                };
                let inner = integrate_radial_kernel(&mut g, &radii, sp, quad.rule);
                acc += QuadResult::new(wx * inner.value, wx * inner.err);
            }
            acc
        })
        .collect();
    let mut out = QuadResult::zero();
    for c in parts {
        out += c;
    }
    Ok(out)
}

/// `|P.V. ∫_{B_eps(x)} J_p(w(x)−w(y)) |x−y|^{−d−sp} dy|` for a C² input,
/// evaluated by direct antipodal pairing.
pub fn pv_local_bound(
    w: &dyn PointField,
    x: &[f64],
    eps: f64,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let d = params.d();
    let p = params.p();
    let sp = params.sp();
    let angular = AngularTable::build(d, quad.angular);
    let u_x = w.eval(x);
    let radii =
        geometric_radii(eps * f64::EPSILON.sqrt(), eps, quad.ring_count, &w.kink_radii(x));
    let mut buf = Vec::new();
    let r = integrate_radial_kernel(
        &mut |r| pair_sum(w, u_x, x, &angular, p, r, &mut buf),
        &radii,
        sp,
        quad.rule,
    );
    Ok(QuadResult::new(r.value.abs(), r.err))
}

/// Quadratic space-time patch glued to a scaled tail outside a ball:
/// the smooth-test-function scene used by the continuity scan.
pub struct QuadraticPatchScene<'a> {
    pub center: Vec<f64>,
    pub value0: f64,
    pub time_slope: f64,
    pub linear: Vec<f64>,
    pub matrix: Vec<f64>,
    pub radius: f64,
    pub t0: f64,
    pub tail: &'a TailSpec,
    pub scale: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// Fixed-time view of the patch scene.
pub struct PatchSlice<'a> {
    pub scene: &'a QuadraticPatchScene<'a>,
    pub t: f64,
}

impl<'a> QuadraticPatchScene<'a> {
    pub fn patch_value(&self, x: &[f64], t: f64) -> f64 {
        let d = self.center.len();
        let mut lin = 0.0;
        let mut quad = 0.0;
        for a in 0..d {
            let dx = x[a] - self.center[a];
            lin += self.linear[a] * dx;
            for b in 0..d {
                quad += dx * self.matrix[a * d + b] * (x[b] - self.center[b]);
            }
        }
        self.value0 + self.time_slope * (t - self.t0) + lin + 0.5 * quad
    }

    pub fn at_time(&'a self, t: f64) -> PatchSlice<'a> {
        PatchSlice { scene: self, t }
    }
}

impl<'a> PointField for PatchSlice<'a> {
    fn d(&self) -> usize {
        self.scene.center.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let dist: f64 = x
            .iter()
            .zip(&self.scene.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist <= self.scene.radius {
            self.scene.patch_value(x, self.t)
        } else {
            (self.scene.scale)(self.t) * self.scene.tail.eval(x)
        }
    }

    fn far_field(&self) -> FarField {
        let lam = (self.scene.scale)(self.t);
        match self.scene.tail.far_behavior() {
            FarBehavior::ApproachesConstant { c, amp, beta, r0 } => {
                FarField::ApproachesConstant { c: lam * c, amp: lam.abs() * amp, beta, r0 }
            }
            FarBehavior::Linear { gradient } => {
                FarField::Linear { gradient: gradient.iter().map(|g| lam * g).collect() }
            }
        }
    }

    fn kink_radii(&self, x: &[f64]) -> Vec<f64> {
        let dist: f64 = x
            .iter()
            .zip(&self.scene.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        vec![(self.scene.radius - dist).abs(), self.scene.radius + dist]
    }

    fn settled_radius(&self, tol: f64) -> f64 {
        let patch_extent =
            self.scene.radius + norm2(&self.scene.center);
        self.scene
            .tail
            .variation_radius(tol)
            .unwrap_or(patch_extent)
            .max(patch_extent)
    }

    fn check_point(&self, x: &[f64], eps: f64) -> Result<()> {
        let dist: f64 = x
            .iter()
            .zip(&self.scene.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist + eps >= self.scene.radius {
            return Err(Error::Domain("scan point too close to the patch edge".into()));
        }
        Ok(())
    }
}

/// Result of the space-time continuity scan of `(−Δₚ)ˢφ` on a patched
/// quadratic.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub max_time_jump: f64,
    pub max_space_jump: f64,
    pub all_finite: bool,
    /// (x-sample index, t-sample index) → operator value.
    pub values: Vec<Vec<f64>>,
}

/// Evaluates the operator on a sample grid over the cylinder and reports the
/// largest jumps between adjacent samples. The local (patch) increments are
/// time-independent, so with a static tail the time jumps are identically
/// zero.
pub fn continuity_scan(
    scene: &QuadraticPatchScene,
    cylinder: &crate::grid::ParabolicCylinder,
    n_space: usize,
    n_time: usize,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<ContinuityReport> {
    if params.d() != scene.center.len() {
        return Err(Error::Domain("scene dimension mismatch".into()));
    }
    let span = (cylinder.radius).min(scene.radius - 4.0 * quad.eps_pv);
    if span <= 0.0 {
        return Err(Error::Domain("cylinder too large for the patch".into()));
    }
    let mut values = vec![vec![0.0; n_time]; n_space];
    let t_start = cylinder.t_start();
    for (j, tj) in (0..n_time)
        .map(|j| {
            let f = (j as f64 + 1.0) / n_time as f64;
            (j, t_start + f * (cylinder.t_end - t_start))
        })
        .collect::<Vec<_>>()
    {
        let slice = scene.at_time(tj);
        for i in 0..n_space {
            let f = i as f64 / (n_space - 1).max(1) as f64;
            let mut x = scene.center.clone();
            x[0] += (2.0 * f - 1.0) * span * 0.9;
            let r = frac_p_laplacian_point(&slice, &x, params, quad)?;
            values[i][j] = r.value;
        }
    }
    let mut max_time_jump = 0.0f64;
    let mut max_space_jump = 0.0f64;
    let mut all_finite = true;
    for i in 0..n_space {
        for j in 0..n_time {
            if !values[i][j].is_finite() {
                all_finite = false;
            }
            if j + 1 < n_time {
                max_time_jump = max_time_jump.max((values[i][j + 1] - values[i][j]).abs());
            }
            if i + 1 < n_space {
                max_space_jump = max_space_jump.max((values[i + 1][j] - values[i][j]).abs());
            }
        }
    }
    Ok(ContinuityReport { max_time_jump, max_space_jump, all_finite, values })
}
