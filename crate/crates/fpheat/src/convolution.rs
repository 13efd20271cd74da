//! Parabolic inf- and sup-convolutions
//! `u_ε(x,t) = inf_{y,τ} { u(y,τ) + (|y−x|² + |t−τ|)/ε }`
//! realized as exact discrete minimization over the stored grid samples,
//! and the shrunken domain on which they remain supersolutions.
//!
//! The search window exploits that any minimizer satisfies
//! `(|y−x|² + |t−τ|)/ε ≤ osc(u)`, so samples with penalty beyond
//! `2·ε·osc(u)` can never win.

use crate::error::{Error, Result};
use crate::grid::SpaceTimeField;
use rayon::prelude::*;

fn convolve(u: &SpaceTimeField, eps: f64, sign: f64) -> Result<SpaceTimeField> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive: {eps}")));
    }
    let g = u.grid();
    let d = g.d();
    let n_slices = u.len();
    let mut osc_lo = f64::INFINITY;
    let mut osc_hi = f64::NEG_INFINITY;
    for k in 0..n_slices {
        for &v in u.slice_values(k) {
            osc_lo = osc_lo.min(sign * v);
            osc_hi = osc_hi.max(sign * v);
        }
    }
    let osc = (osc_hi - osc_lo).max(0.0);
    // any minimizer satisfies penalty ≤ ε·osc; window at 2× for margin
    let pen_cap = 2.0 * eps * osc;
    let rad2_cap = pen_cap * eps; // |y−x|² ≤ ε·pen_cap
    let window_nodes = (rad2_cap.sqrt() / g.h()).ceil() as isize + 1;
    let times = u.times().to_vec();

    let mut out = SpaceTimeField::new(g.clone(), u.tail().clone());
    let slices: Vec<Vec<f64>> = (0..n_slices)
        .into_par_iter()
        .map(|k| {
            let t = times[k];
            (0..g.len())
                .map(|idx| {
                    let multi = g.unflatten(idx);
                    let x = g.node_position(idx);
                    let mut best = sign * u.slice_values(k)[idx]; // (y,τ) = (x,t)
                    for (kk, &tau) in times.iter().enumerate() {
                        let dt_pen = (t - tau).abs() / eps;
                        if dt_pen > pen_cap / eps {
                            continue;
                        }
                        let vals = u.slice_values(kk);
                        // box window around the node
                        let mut ranges = Vec::with_capacity(d);
                        for a in 0..d {
                            let lo = (multi[a] as isize - window_nodes).max(0) as usize;
                            let hi =
                                ((multi[a] as isize + window_nodes) as usize).min(g.n()[a] - 1);
                            ranges.push((lo, hi));
                        }
                        let mut cursor: Vec<usize> =
                            ranges.iter().map(|(lo, _)| *lo).collect();
                        loop {
                            let j = g.flatten(&cursor);
                            let mut dist2 = 0.0;
                            for a in 0..d {
                                let dy = g.node_coord(a, cursor[a]) - x[a];
                                dist2 += dy * dy;
                            }
                            let cand = sign * vals[j] + dist2 / eps + dt_pen;
                            if cand < best {
                                best = cand;
                            }
                            // advance the cursor
                            let mut a = 0;
                            loop {
                                if a == d {
                                    break;
                                }
                                cursor[a] += 1;
                                if cursor[a] <= ranges[a].1 {
                                    break;
                                }
                                cursor[a] = ranges[a].0;
                                a += 1;
                            }
                            if a == d {
                                break;
                            }
                        }
                    }
                    sign * best
                })
                .collect()
        })
        .collect();
    for (k, s) in slices.into_iter().enumerate() {
        out.push(times[k], s)?;
    }
    Ok(out)
}

/// Discrete inf-convolution: `u_ε ≤ u` everywhere, exactly on the samples.
pub fn inf_convolution(u: &SpaceTimeField, eps: f64) -> Result<SpaceTimeField> {
    convolve(u, eps, 1.0)
}

/// Discrete sup-convolution, `u^ε := −(−u)_ε`.
pub fn sup_convolution(u: &SpaceTimeField, eps: f64) -> Result<SpaceTimeField> {
    let neg = negate(u)?;
    let conv = inf_convolution(&neg, eps)?;
    negate(&conv)
}

fn negate(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    let mut out = SpaceTimeField::new(u.grid().clone(), u.tail().clone());
    for k in 0..u.len() {
        out.push(u.times()[k], u.slice_values(k).iter().map(|v| -v).collect())?;
    }
    Ok(out)
}

/// The domain on which the inf-convolution of a supersolution stays a
/// supersolution: the box shrunk by `2ε‖u‖∞` on every side, with the time
/// window starting `2ε‖u‖∞` later.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkDomain {
    /// Per-axis `(lo, hi)` of the shrunk box.
    pub box_bounds: Vec<(f64, f64)>,
    pub t_start: f64,
    pub t_end: f64,
}

pub fn shrunk_domain(
    box_bounds: &[(f64, f64)],
    t1: f64,
    t2: f64,
    eps: f64,
    sup_norm: f64,
) -> Result<ShrunkDomain> {
    if !(eps > 0.0) || sup_norm < 0.0 {
        return Err(Error::Domain("need eps > 0 and sup_norm >= 0".into()));
    }
    let margin = 2.0 * eps * sup_norm;
    let mut out = Vec::with_capacity(box_bounds.len());
    for &(lo, hi) in box_bounds {
        let (slo, shi) = (lo + margin, hi - margin);
        if slo >= shi {
            return Err(Error::Domain(format!(
                "empty shrunk domain: ({lo}, {hi}) with margin {margin}"
            )));
        }
        out.push((slo, shi));
    }
    let t_start = t1 + margin;
    if t_start >= t2 {
        return Err(Error::Domain(format!(
            "empty shrunk time window: ({t1}, {t2}] with margin {margin}"
        )));
    }
    Ok(ShrunkDomain { box_bounds: out, t_start, t_end: t2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridField, SpaceTimeField};
    use crate::tail::TailSpec;

    fn single_slice(f: impl Fn(f64) -> f64, half_width: f64, nodes: usize) -> SpaceTimeField {
        let g = Grid::symmetric_1d(half_width, nodes).unwrap();
        let field = GridField::sample(g.clone(), TailSpec::Zero, |x| f(x[0])).unwrap();
        let mut st = SpaceTimeField::new(g, TailSpec::Zero);
        st.push(0.0, field.values().to_vec()).unwrap();
        st
    }

    #[test]
    fn constant_field_is_invariant() {
        let u = single_slice(|_| 3.5, 1.0, 33);
        let ue = inf_convolution(&u, 0.7).unwrap();
        assert_eq!(ue.slice_values(0), u.slice_values(0));
        let us = sup_convolution(&u, 0.7).unwrap();
        assert_eq!(us.slice_values(0), u.slice_values(0));
    }

    #[test]
    fn abs_value_examples() {
        // u = |x|: at x = 0 the infimum is attained at y = 0 with value 0.
        let u = single_slice(|x| x.abs(), 2.0, 129); // h = 1/32, dyadic nodes
        let ue = inf_convolution(&u, 1.0).unwrap();
        let g = u.grid();
        let mid = g.len() / 2;
        assert_eq!(g.node_position(mid)[0], 0.0);
        assert_eq!(ue.slice_values(0)[mid], 0.0);

        // at x = 1 with ε = 1: inf_y |y| + (y−1)² = 3/4 at y = 1/2.
        let idx_one = (0..g.len()).find(|&i| g.node_position(i)[0] == 1.0).unwrap();
        assert_eq!(ue.slice_values(0)[idx_one], 0.75);

        // dual case: u = −|x| at x = 0 sup-convolves to 0
        let v = single_slice(|x| -x.abs(), 2.0, 129);
        let vs = sup_convolution(&v, 1.0).unwrap();
        assert_eq!(vs.slice_values(0)[mid], 0.0);
    }

    #[test]
    fn below_and_monotone_in_eps() {
        let u = single_slice(|x| (3.0 * x).sin() + 0.5 * x * x, 1.5, 97);
        let e1 = inf_convolution(&u, 0.05).unwrap();
        let e2 = inf_convolution(&u, 0.1).unwrap();
        for i in 0..u.grid().len() {
            assert!(e1.slice_values(0)[i] <= u.slice_values(0)[i]);
            assert!(e2.slice_values(0)[i] <= e1.slice_values(0)[i]);
        }
        // sup-convolution dominates
        let s1 = sup_convolution(&u, 0.05).unwrap();
        for i in 0..u.grid().len() {
            assert!(s1.slice_values(0)[i] >= u.slice_values(0)[i]);
        }
    }

    #[test]
    fn approximation_improves_along_eps_halvings() {
        let u = single_slice(|x| (2.0 * x).cos(), 1.0, 129);
        let mut prev_err = f64::INFINITY;
        for &eps in &[0.4, 0.2, 0.1, 0.05] {
            let ue = inf_convolution(&u, eps).unwrap();
            let err = u
                .slice_values(0)
                .iter()
                .zip(ue.slice_values(0))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(err <= prev_err + 1e-15);
            prev_err = err;
        }
        assert!(prev_err < 0.05);
    }

    #[test]
    fn semiconcavity_second_differences() {
        // x ↦ u_ε(x) − |x|²/ε has nonpositive second differences:
        // Δ²u_ε(x) ≤ 2h²/ε exactly on the grid.
        let u = single_slice(|x| (5.0 * x).sin().abs(), 1.0, 201);
        let eps = 0.3;
        let ue = inf_convolution(&u, eps).unwrap();
        let v = ue.slice_values(0);
        let h = u.grid().h();
        for i in 1..v.len() - 1 {
            let second = v[i + 1] - 2.0 * v[i] + v[i - 1];
            assert!(second <= 2.0 * h * h / eps + 1e-12, "node {i}: {second}");
        }
    }

    #[test]
    fn time_lipschitz_bound() {
        let g = Grid::symmetric_1d(1.0, 65).unwrap();
        let mut st = SpaceTimeField::new(g.clone(), TailSpec::Zero);
        for k in 0..8 {
            let t = k as f64 * 0.05;
            let f =
                GridField::sample(g.clone(), TailSpec::Zero, |x| (x[0] + t).sin() * (1.0 + t))
                    .unwrap();
            st.push(t, f.values().to_vec()).unwrap();
        }
        let eps = 0.25;
        let ue = inf_convolution(&st, eps).unwrap();
        for k in 0..7 {
            let dt = ue.times()[k + 1] - ue.times()[k];
            for i in 0..g.len() {
                let diff = (ue.slice_values(k + 1)[i] - ue.slice_values(k)[i]).abs();
                assert!(diff <= dt / eps + 1e-12, "slice {k} node {i}: {diff}");
            }
        }
    }

    #[test]
    fn sup_is_negated_inf_by_construction() {
        let u = single_slice(|x| (1.3 * x).sin() - 0.2 * x, 1.0, 65);
        let s = sup_convolution(&u, 0.15).unwrap();
        let n = negate(&u).unwrap();
        let ni = inf_convolution(&n, 0.15).unwrap();
        for i in 0..u.grid().len() {
            assert_eq!(s.slice_values(0)[i], -ni.slice_values(0)[i]);
        }
    }

    #[test]
    fn shrunk_domain_examples() {
        // Ω = (−1,1), ε‖u‖∞ = 0.1 → Ω_ε = (−0.8, 0.8)
        let d = shrunk_domain(&[(-1.0, 1.0)], -1.0, 0.0, 0.1, 1.0).unwrap();
        assert!((d.box_bounds[0].0 - (-0.8)).abs() < 1e-15);
        assert!((d.box_bounds[0].1 - 0.8).abs() < 1e-15);
        // t₁ = −1 → window starts at −0.8
        assert!((d.t_start - (-0.8)).abs() < 1e-15);
        // ε‖u‖∞ = 0.6 empties Ω = (−1,1)
        let err = shrunk_domain(&[(-1.0, 1.0)], -1.0, 0.0, 0.6, 1.0).unwrap_err();
        assert!(err.to_string().contains("empty shrunk domain"), "{err}");
    }
}
