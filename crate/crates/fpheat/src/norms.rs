//! The two global functionals: the weighted tail norm
//! `‖w‖ = (∫ |w(x)|^{p−1} / (1 + |x|^{d+sp}) dx)^{1/(p−1)}`
//! and the Gagliardo seminorm
//! `[w] = (∬ |w(x)−w(y)|^p |x−y|^{−d−sp} dx dy)^{1/p}`,
//! plus the extended-field energy used by the dissipation trace.

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::operator::j_p;
use crate::params::FracParams;
use crate::quadrature::{
    gauss_nodes, geometric_radii, integrate_radial_kernel, integrate_smooth, sphere_area,
    AngularTable, QuadConfig, QuadResult, RadialRule,
};
use crate::tail::{FarBehavior, TailSpec};

fn weight_kernel(r2_norm: f64, order: f64) -> f64 {
    1.0 / (1.0 + r2_norm.powf(order))
}

/// `|x|^p` with fast paths for the common integer exponents.
#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 3.0 {
        let a = x.abs();
        a * a * a
    } else {
        x.abs().powf(p)
    }
}

/// Absolute remainder bound for `∫_{|x|>R} |tail|^{p−1}/(1+|x|^{d+sp})` from
/// the catalog decay, using `1 + r^{d+sp} ≥ r^{d+sp}`.
fn tail_integral_remainder(tail: &TailSpec, params: &FracParams, r: f64) -> f64 {
    let d = params.d();
    let p = params.p();
    let sp = params.sp();
    match tail.far_behavior() {
        FarBehavior::ApproachesConstant { c, amp, beta, .. } => {
            let bound = c.abs() + amp * r.powf(-beta);
            sphere_area(d) * bound.powf(p - 1.0) * r.powf(-sp) / sp
        }
        FarBehavior::Linear { gradient } => {
            let g = crate::tail::norm2(&gradient);
            let expo = sp - (p - 1.0);
            if expo <= 0.0 {
                return f64::INFINITY;
            }
            sphere_area(d) * g.powf(p - 1.0) * r.powf(-expo) / expo
        }
    }
}

/// Radius at which the analytic tail remainder drops below `target`.
fn tail_cut_radius(tail: &TailSpec, params: &FracParams, start: f64, target: f64) -> Result<f64> {
    let mut r = start.max(1.0);
    for _ in 0..2000 {
        if tail_integral_remainder(tail, params, r) <= target {
            return Ok(r);
        }
        r *= 2.0;
        if r > 1e300 {
            break;
        }
    }
    Err(Error::Quadrature("tail not integrable at requested tolerance".into()))
}

/// `∫_{ℝᵈ} |tail(x)|^{p−1}/(1+|x|^{d+sp}) dx` for a catalog profile.
fn tail_profile_integral(
    tail: &TailSpec,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    tail.validate(params)?;
    let d = params.d();
    let p = params.p();
    let order = params.kernel_order();
    let target = 0.05 * quad.tol;
    let r_hi = tail_cut_radius(tail, params, quad.r_tail, target)?;
    let angular = AngularTable::build(d, quad.angular);

    // |tail|^{p−1} averaged over the sphere of radius r, times surface
    // measure r^{d−1}.
    let mut shell = |r: f64| {
        let mut acc = 0.0;
        let mut buf = vec![0.0; d];
        for (omega, w) in &angular.pairs {
            for a in 0..d {
                buf[a] = r * omega[a];
            }
            let vp = tail.eval(&buf).abs().powf(p - 1.0);
            for a in 0..d {
                buf[a] = -r * omega[a];
            }
            let vm = tail.eval(&buf).abs().powf(p - 1.0);
            acc += w * (vp + vm);
        }
        acc * weight_kernel(r, order) * r.powf(d as f64 - 1.0)
    };

    // Smooth near the origin (profiles bounded), geometric shells beyond.
    let mut inner = integrate_smooth(&mut |r| shell(r), 1e-12, 1.0, 32, 8);
    let breaks: Vec<f64> = match tail {
        TailSpec::Analytic(crate::tail::AnalyticTail::CompactBump { radius, .. }) => {
            vec![*radius]
        }
        _ => vec![],
    };
    let radii = geometric_radii(1.0, r_hi, quad.ring_count, &breaks);
    // integrate_radial_kernel multiplies by r^{−1−sp}; fold the full weight
    // into the shell function instead and use a flat exponent of 0 there.
    let mut outer = QuadResult::zero();
    for win in radii.windows(2) {
        let r = match quad.rule {
            RadialRule::Gauss => {
                let hi = crate::quadrature::integrate_panel(&mut shell, win[0], win[1], 8);
                let lo = crate::quadrature::integrate_panel(&mut shell, win[0], win[1], 4);
                QuadResult::new(hi, (hi - lo).abs())
            }
            RadialRule::Midpoint => {
                let mut fine = 0.0;
                for k in 0..8 {
                    let pa = win[0] + (win[1] - win[0]) * k as f64 / 8.0;
                    let pb = win[0] + (win[1] - win[0]) * (k + 1) as f64 / 8.0;
                    fine += shell(0.5 * (pa + pb)) * (pb - pa);
                }
                let mut coarse = 0.0;
                for k in 0..4 {
                    let pa = win[0] + (win[1] - win[0]) * k as f64 / 4.0;
                    let pb = win[0] + (win[1] - win[0]) * (k + 1) as f64 / 4.0;
                    coarse += shell(0.5 * (pa + pb)) * (pb - pa);
                }
                QuadResult::new(fine, (fine - coarse).abs())
            }
        };
        outer += r;
    }
    inner += outer;
    inner.err += tail_integral_remainder(tail, params, r_hi);
    Ok(inner)
}

/// `∫_box |f(x)|^{p−1}/(1+|x|^{d+sp}) dx` by per-cell tensor Gauss panels.
fn box_weighted_integral(
    f: &dyn Fn(&[f64]) -> f64,
    grid: &crate::grid::Grid,
    params: &FracParams,
) -> QuadResult {
    let d = grid.d();
    let p = params.p();
    let order = params.kernel_order();
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for a in 0..d {
        let cells = grid.n()[a] - 1;
        let mut next = Vec::new();
        for (pt, w) in &pts {
            for c in 0..cells {
                let lo = grid.node_coord(a, c);
                let mid = lo + grid.h() / 2.0;
                for &(gx, gw) in gauss_nodes(4) {
                    let mut q = pt.clone();
                    q.push(mid + grid.h() / 2.0 * gx);
                    next.push((q, w * gw * grid.h() / 2.0));
                }
            }
        }
        pts = next;
    }
    let mut hi = 0.0;
    for (x, w) in &pts {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        hi += w * f(x).abs().powf(p - 1.0) * weight_kernel(r, order);
    }
    // Error proxy: repeat with 2-point panels.
    let mut pts2: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for a in 0..d {
        let cells = grid.n()[a] - 1;
        let mut next = Vec::new();
        for (pt, w) in &pts2 {
            for c in 0..cells {
                let lo = grid.node_coord(a, c);
                let mid = lo + grid.h() / 2.0;
                for &(gx, gw) in gauss_nodes(2) {
                    let mut q = pt.clone();
                    q.push(mid + grid.h() / 2.0 * gx);
                    next.push((q, w * gw * grid.h() / 2.0));
                }
            }
        }
        pts2 = next;
    }
    let mut lo_sum = 0.0;
    for (x, w) in &pts2 {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        lo_sum += w * f(x).abs().powf(p - 1.0) * weight_kernel(r, order);
    }
    QuadResult::new(hi, (hi - lo_sum).abs())
}

fn norm_from_integral(i: QuadResult, p: f64, tol: f64) -> Result<QuadResult> {
    if i.value < 0.0 {
        return Err(Error::Quadrature("negative integral in norm".into()));
    }
    let value = i.value.powf(1.0 / (p - 1.0));
    let err = if i.value > 0.0 { i.err * value / ((p - 1.0) * i.value) } else { i.err };
    if err > tol {
        return Err(Error::Quadrature(format!(
            "tail not integrable at requested tolerance: error estimate {err} > tol {tol}"
        )));
    }
    Ok(QuadResult::new(value, err))
}

/// Tail norm of a catalog profile taken as the function on all of `ℝᵈ`.
pub fn tail_norm_profile(
    tail: &TailSpec,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    let i = tail_profile_integral(tail, params, quad)?;
    norm_from_integral(i, params.p(), quad.tol)
}

/// Tail norm of a grid field with its exterior extension.
pub fn tail_norm_field(
    w: &GridField,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    // ∫_ℝᵈ = ∫_box (grid data) + [∫_ℝᵈ tail − ∫_box tail].
    let grid_part = box_weighted_integral(&|x| w.interp(x), w.grid(), params);
    let tail_all = tail_profile_integral(w.tail(), params, quad)?;
    let tail_box = box_weighted_integral(&|x| w.tail().eval(x), w.grid(), params);
    let total = QuadResult::new(
        grid_part.value + tail_all.value - tail_box.value,
        grid_part.err + tail_all.err + tail_box.err,
    );
    norm_from_integral(total, params.p(), quad.tol)
}

/// Gagliardo seminorm of `w` over `domain × domain`, `domain` given as
/// per-axis `(lo, hi)`.
pub fn gagliardo_seminorm(
    w: &(dyn Fn(&[f64]) -> f64 + Sync),
    domain: &[(f64, f64)],
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    let i = gagliardo_energy_integral(w, domain, params, quad)?;
    let p = params.p();
    if i.value < 0.0 {
        return Err(Error::Quadrature("negative energy integral".into()));
    }
    let value = i.value.powf(1.0 / p);
    let err = if i.value > 0.0 { i.err * value / (p * i.value) } else { i.err };
    Ok(QuadResult::new(value, err))
}

/// `∬_{D×D} |w(x)−w(y)|^p |x−y|^{−d−sp} dx dy` (the p-th power of the
/// seminorm). Outer integral by graded panels, inner by geometric shells
/// around each outer point, clipped to the domain.
pub fn gagliardo_energy_integral(
    w: &(dyn Fn(&[f64]) -> f64 + Sync),
    domain: &[(f64, f64)],
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    let d = params.d();
    if domain.len() != d {
        return Err(Error::Domain("domain dimension mismatch".into()));
    }
    let p = params.p();
    let sp = params.sp();
    let angular = AngularTable::build(d, quad.angular);
    let diam: f64 = domain.iter().map(|(lo, hi)| (hi - lo) * (hi - lo)).sum::<f64>().sqrt();
    if !(diam > 0.0) {
        return Err(Error::Domain("empty domain".into()));
    }

    // Outer points: per-axis panels, graded toward the boundary so the
    // near-face kernel mass is resolved.
    let outer_axis_points = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        let mut edges = vec![lo];
        let n_mid = 24usize;
        let w_face = (hi - lo) * 0.05;
        for k in (1..=4).rev() {
            edges.push(lo + w_face * 0.5f64.powi(k));
        }
        for k in 0..=n_mid {
            edges.push(lo + w_face + (hi - lo - 2.0 * w_face) * k as f64 / n_mid as f64);
        }
        for k in 1..=4 {
            edges.push(hi - w_face * 0.5f64.powi(k));
        }
        edges.push(hi);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut pts = Vec::new();
        for win in edges.windows(2) {
            let mid = 0.5 * (win[0] + win[1]);
            let half = 0.5 * (win[1] - win[0]);
            for &(gx, gw) in gauss_nodes(4) {
                pts.push((mid + half * gx, gw * half));
            }
        }
        pts
    };
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for a in 0..d {
        let axis = outer_axis_points(domain[a].0, domain[a].1);
        let mut next = Vec::new();
        for (pt, w0) in &pts {
            for &(x, w1) in &axis {
                let mut q = pt.clone();
                q.push(x);
                next.push((q, w0 * w1));
            }
        }
        pts = next;
    }

    use rayon::prelude::*;
    let results: Vec<QuadResult> = pts
        .par_iter()
        .map(|(x, wx)| {
            let w_x = w(x);
            let mut face_dists: Vec<f64> = Vec::new();
            for a in 0..d {
                face_dists.push((x[a] - domain[a].0).abs());
                face_dists.push((domain[a].1 - x[a]).abs());
            }
            let r_lo = diam * 1e-7;
            let r_hi = diam;
            let radii = geometric_radii(r_lo, r_hi, quad.ring_count, &face_dists);
            let mut buf = vec![0.0; d];
            let mut max_slope: f64 = 0.0;
            let mut g = |r: f64| {
                let mut acc = 0.0;
                for (omega, wa) in &angular.pairs {
                    for sign in [1.0f64, -1.0] {
                        let mut inside = true;
                        for a in 0..d {
                            buf[a] = x[a] + sign * r * omega[a];
                            if buf[a] < domain[a].0 || buf[a] > domain[a].1 {
                                inside = false;
                            }
                        }
                        if inside {
                            let diff = (w_x - w(&buf)).abs();
                            max_slope = max_slope.max(diff / r);
                            acc += wa * pow_abs(diff, p);
                        }
                    }
                }
                acc
            };
            let mut inner = integrate_radial_kernel(&mut g, &radii, sp, quad.rule);
            // near-diagonal remainder: |w(x)−w(y)| ≤ L|x−y| below r_lo
            let p_minus_sp = p - sp;
            inner.err +=
                max_slope.powf(p) * sphere_area(d) * r_lo.powf(p_minus_sp) / p_minus_sp;
            QuadResult::new(wx * inner.value, wx.abs() * inner.err)
        })
        .collect();
    let mut out = QuadResult::zero();
    for r in results {
        out += r;
    }
    Ok(out)
}

/// Time-varying part of the full-space Gagliardo energy of an extended grid
/// field (d = 1): `(1/p)·[ ∬_{B×B} + 2·∬_{B×exterior} ]`. The
/// exterior×exterior term is constant under a frozen tail and omitted.
pub fn extended_energy(
    u: &GridField,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<QuadResult> {
    if params.d() != 1 {
        return Err(Error::Domain("extended energy implemented for d = 1".into()));
    }
    let p = params.p();
    let sp = params.sp();
    let g = u.grid();
    let (lo, hi) = (g.lo(0), g.hi(0));
    let tail = u.tail();
    let far = tail.far_behavior();
    let (far_c, settle) = match &far {
        FarBehavior::ApproachesConstant { c, .. } => {
            (*c, tail.variation_radius(quad.tol).unwrap_or(1.0).max(hi.abs()).max(lo.abs()))
        }
        FarBehavior::Linear { .. } => {
            return Err(Error::Domain("extended energy needs a tail with a limit".into()))
        }
    };

    let wf = |x: &[f64]| u.interp(x);
    let box_part =
        gagliardo_energy_integral(&wf, &[(lo, hi)], params, quad)?;

    // Cross term 2·∫_box dx ∫_exterior |u(x) − tail(y)|^p K dy, with graded
    // x-panels toward the faces (the exterior kernel mass blows up there
    // when the boundary values do not match the tail).
    let mut edges = vec![lo];
    let n_mid = 48usize;
    let w_face = (hi - lo) * 0.04;
    for k in (1..=14).rev() {
        edges.push(lo + w_face * 0.5f64.powi(k));
    }
    for k in 0..=n_mid {
        edges.push(lo + w_face + (hi - lo - 2.0 * w_face) * k as f64 / n_mid as f64);
    }
    for k in 1..=14 {
        edges.push(hi - w_face * 0.5f64.powi(k));
    }
    edges.push(hi);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut cross = QuadResult::zero();
    let r_out = settle.max(hi - lo);
    for win in edges.windows(2) {
        let mid = 0.5 * (win[0] + win[1]);
        let half = 0.5 * (win[1] - win[0]);
        for &(gx, gw) in gauss_nodes(4) {
            let x = mid + half * gx;
            let wx = gw * half;
            let u_x = u.interp(&[x]);
            let mut acc = QuadResult::zero();
            // sampled exterior shells on each side out to ±r_out
            for (face, dir) in [(hi, 1.0f64), (lo, -1.0)] {
                let dist = (face - x).abs().max(1e-14);
                let radii = geometric_radii(dist, (r_out - x * dir).abs().max(2.0 * dist), quad.ring_count, &[]);
                let mut gfun = |r: f64| {
                    let y = x + dir * r;
                    pow_abs(u_x - tail.eval(&[y]), p)
                };
                acc += integrate_radial_kernel(&mut gfun, &radii, sp, quad.rule);
            }
            // analytic constant-tail remainder beyond ±r_out
            let dev = u_x - far_c;
            let m_right = ((r_out - x).abs()).powf(-sp) / sp;
            let m_left = ((r_out + x).abs()).powf(-sp) / sp;
            acc.value += pow_abs(dev, p) * (m_right + m_left);
            if let FarBehavior::ApproachesConstant { amp, beta, .. } = &far {
                if *amp > 0.0 {
                    let tail_dev = amp * r_out.powf(-beta);
                    acc.err +=
                        p * (dev.abs() + tail_dev).powf(p - 1.0) * tail_dev * (m_right + m_left);
                }
            }
            cross.value += wx * acc.value;
            cross.err += wx * acc.err;
        }
    }

    let total = QuadResult::new(
        (box_part.value + 2.0 * cross.value) / p,
        (box_part.err + 2.0 * cross.err) / p,
    );
    Ok(total)
}

/// `J_p`-weighted constant used in closed-form cross checks.
pub fn jp_of(value: f64, params: &FracParams) -> f64 {
    j_p(value, params.p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::params::make_params;
    use crate::tail::AnalyticTail;

    #[test]
    fn tail_norm_of_zero_is_zero() {
        let prm = make_params(0.5, 2.0, 1).unwrap();
        let quad = QuadConfig::new(0.01, 8, 1e-8, 64.0).unwrap();
        let r = tail_norm_profile(&TailSpec::Zero, &prm, &quad).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn constant_tail_norm_matches_arctan_integral() {
        // w ≡ 1, d = 1, s = 1/2, p = 2: ∫ dx/(1+x²) = π.
        let prm = make_params(0.5, 2.0, 1).unwrap();
        let quad = QuadConfig::new(0.01, 8, 1e-8, 64.0).unwrap();
        let r = tail_norm_profile(&TailSpec::Constant(1.0), &prm, &quad).unwrap();
        assert!(
            (r.value - std::f64::consts::PI).abs() < 1e-8,
            "{} vs pi, err {}",
            r.value,
            r.err
        );
        assert!(r.err <= 1e-8);
    }

    #[test]
    fn constant_tail_norm_p3_matches_closed_form_and_midpoint() {
        // w ≡ 1, d = 1, s = 1/2, p = 3: ∫ dx/(1+|x|^{5/2}) has the closed
        // form 2·(π/a)/sin(π/a) with a = 5/2; the norm is its square root.
        let prm = make_params(0.5, 3.0, 1).unwrap();
        let a = 2.5f64;
        let integral = 2.0 * (std::f64::consts::PI / a) / (std::f64::consts::PI / a).sin();
        let expected = integral.sqrt();
        let quad = QuadConfig::new(0.01, 8, 1e-9, 64.0).unwrap();
        let gauss = tail_norm_profile(&TailSpec::Constant(1.0), &prm, &quad).unwrap();
        // The midpoint rule converges at second order; give it enough
        // shells to certify the same digits independently.
        let quad_mid = QuadConfig::new(0.01, 2048, 1e-7, 64.0)
            .unwrap()
            .with_rule(RadialRule::Midpoint);
        let mid = tail_norm_profile(&TailSpec::Constant(1.0), &prm, &quad_mid).unwrap();
        assert!((gauss.value - expected).abs() < 1e-8, "{} vs {expected}", gauss.value);
        assert!((gauss.value - mid.value).abs() < 1e-8, "midpoint {}", mid.value);
    }

    #[test]
    fn tail_norm_monotone_in_pointwise_domination() {
        let prm = make_params(0.5, 3.0, 1).unwrap();
        let quad = QuadConfig::new(0.01, 8, 1e-6, 64.0).unwrap();
        let small = tail_norm_profile(&TailSpec::Constant(0.5), &prm, &quad).unwrap();
        let big = tail_norm_profile(&TailSpec::Constant(1.0), &prm, &quad).unwrap();
        assert!(small.value < big.value);
        let bump = TailSpec::Analytic(AnalyticTail::CompactBump { amplitude: 0.5, radius: 2.0 });
        let b = tail_norm_profile(&bump, &prm, &quad).unwrap();
        assert!(b.value < small.value); // |bump| ≤ 0.5 pointwise
    }

    #[test]
    fn grid_field_tail_norm_composes_interior_and_exterior() {
        // Field: 1 on the box via grid values, constant 1 tail → same as
        // the constant profile.
        let prm = make_params(0.5, 2.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 41).unwrap();
        let f = GridField::constant(g, 1.0, TailSpec::Constant(1.0)).unwrap();
        let quad = QuadConfig::new(0.01, 8, 1e-7, 64.0).unwrap();
        let r = tail_norm_field(&f, &prm, &quad).unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn gagliardo_constant_is_zero_and_linear_matches_closed_form() {
        let prm = make_params(0.5, 2.0, 1).unwrap();
        let quad = QuadConfig::new(0.01, 8, 1e-8, 64.0).unwrap();
        let c = gagliardo_seminorm(&|_x: &[f64]| 2.5, &[(0.0, 1.0)], &prm, &quad).unwrap();
        assert_eq!(c.value, 0.0);

        // w(x) = x on [0,1]: ∬ |x−y|^{p−sp−d} = 2/((p−sp)(p−sp+1)) = 1.
        let r = gagliardo_seminorm(&|x: &[f64]| x[0], &[(0.0, 1.0)], &prm, &quad).unwrap();
        assert!((r.value - 1.0).abs() < 2e-4, "{} err {}", r.value, r.err);

        // second closed form at p = 3, s = 1/2
        let prm3 = make_params(0.5, 3.0, 1).unwrap();
        let i3 = gagliardo_energy_integral(&|x: &[f64]| x[0], &[(0.0, 1.0)], &prm3, &quad).unwrap();
        let expect = 2.0 / (1.5 * 2.5);
        assert!((i3.value - expect).abs() < 2e-4, "{} vs {expect}", i3.value);
    }

    #[test]
    fn gagliardo_shift_scale_and_reflection_invariance() {
        let prm = make_params(0.6, 2.5, 1).unwrap();
        let quad = QuadConfig::new(0.01, 8, 1e-8, 64.0).unwrap();
        let w = |x: &[f64]| (2.1 * x[0]).sin() + 0.3 * x[0];
        let base = gagliardo_seminorm(&w, &[(-1.0, 1.0)], &prm, &quad).unwrap();

        let shifted = |x: &[f64]| w(x) + 7.0;
        let s = gagliardo_seminorm(&shifted, &[(-1.0, 1.0)], &prm, &quad).unwrap();
        assert!((s.value - base.value).abs() < 1e-9 * (1.0 + base.value));

        let lam = -1.7;
        let scaled = |x: &[f64]| lam * w(x);
        let sc = gagliardo_seminorm(&scaled, &[(-1.0, 1.0)], &prm, &quad).unwrap();
        assert!((sc.value - lam.abs() * base.value).abs() < 1e-9 * (1.0 + base.value));

        // swapping the integration variables == reflecting the function
        let refl = |x: &[f64]| w(&[-x[0]]);
        let rf = gagliardo_seminorm(&refl, &[(-1.0, 1.0)], &prm, &quad).unwrap();
        assert!((rf.value - base.value).abs() < 1e-8 * (1.0 + base.value));
    }

    #[test]
    fn extended_energy_zero_for_matching_constants() {
        let prm = make_params(0.5, 3.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 41).unwrap();
        let f = GridField::constant(g, 2.0, TailSpec::Constant(2.0)).unwrap();
        let quad = QuadConfig::for_grid(f.grid());
        let e = extended_energy(&f, &prm, &quad).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn extended_energy_finite_for_compatible_bump() {
        let prm = make_params(0.6, 2.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 101).unwrap();
        let f = GridField::sample(g, TailSpec::Zero, |x| {
            (1.0 - (x[0] / 0.5).powi(2)).max(0.0).powi(2)
        })
        .unwrap();
        let quad = QuadConfig::for_grid(f.grid());
        let e = extended_energy(&f, &prm, &quad).unwrap();
        assert!(e.value > 0.0 && e.value.is_finite());
        assert!(e.err < 1e-3 * e.value, "err {} vs {}", e.err, e.value);
    }
}
