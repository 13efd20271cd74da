//! Regularity probes: spatial Lipschitz/Hölder estimation from grid slices
//! and temporal exponent estimation from trajectories, by log-log
//! regression over dyadic separations (the smallest separation is dropped
//! to avoid discretization bias). Estimated exponents are lower-bound
//! evidence: they may exceed the predictions, never certify less.

use crate::error::{Error, Result};
use crate::grid::{GridField, SpaceTimeField};
use crate::norms::tail_norm_field;
use crate::params::{AlphaPrediction, FracParams};
use crate::quadrature::QuadConfig;

/// Power-law fit `M(ℓ) ≈ C·ℓ^κ` from log-log least squares.
#[derive(Debug, Clone, Copy)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// number of separations used (after discarding the smallest)
    pub points: usize,
}

fn ols_loglog(points: &[(f64, f64)]) -> Option<PowerFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if data.len() < 2 {
        return None;
    }
    let n = data.len() as f64;
    let sx: f64 = data.iter().map(|p| p.0).sum();
    let sy: f64 = data.iter().map(|p| p.1).sum();
    let sxx: f64 = data.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = data.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-14 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let y_mean = sy / n;
    let ss_tot: f64 = data.iter().map(|p| (p.1 - y_mean).powi(2)).sum();
    let ss_res: f64 =
        data.iter().map(|p| (p.1 - (slope * p.0 + intercept)).powi(2)).sum();
    let r_squared = if ss_tot < 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(PowerFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        points: data.len(),
    })
}

/// Spatial estimate over a sub-box: the max difference quotient and a
/// Hölder fit over dyadic node separations.
#[derive(Debug, Clone, Copy)]
pub struct SpatialEstimate {
    pub lipschitz: f64,
    /// `None` when the data is flat (no signal to fit).
    pub fit: Option<PowerFit>,
}

pub fn spatial_lipschitz_estimate(
    slice: &GridField,
    region: &[(f64, f64)],
) -> Result<SpatialEstimate> {
    let g = slice.grid();
    let d = g.d();
    if region.len() != d {
        return Err(Error::Domain("region dimension mismatch".into()));
    }
    for a in 0..d {
        if region[a].0 < g.lo(a) - 1e-12 || region[a].1 > g.hi(a) + 1e-12 {
            return Err(Error::Domain("region must sit inside the box".into()));
        }
    }
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let x = g.node_position(i);
            (0..d).all(|a| x[a] >= region[a].0 - 1e-12 && x[a] <= region[a].1 + 1e-12)
        })
        .collect();
    if nodes.len() < 2 {
        return Err(Error::Domain("region contains fewer than 2 nodes".into()));
    }

    let mut lipschitz = 0.0f64;
    for (ii, &i) in nodes.iter().enumerate() {
        let xi = g.node_position(i);
        for &j in nodes.iter().skip(ii + 1) {
            let xj = g.node_position(j);
            let dist: f64 =
                xi.iter().zip(&xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist > 0.0 {
                lipschitz =
                    lipschitz.max((slice.values()[i] - slice.values()[j]).abs() / dist);
            }
        }
    }

    // Dyadic separations along each axis: sup |Δu| at lag 2^k·h. Lags are
    // capped at half the region span so the supremum is not clipped by the
    // region boundary (which would bend the fitted power law).
    let span_min = (0..d).map(|a| region[a].1 - region[a].0).fold(f64::INFINITY, f64::min);
    let mut lags: Vec<(f64, f64)> = Vec::new();
    let mut k = 0usize;
    loop {
        let lag_nodes = 1usize << k;
        let lag = lag_nodes as f64 * g.h();
        if lag > span_min / 2.0 + 1e-12 {
            break;
        }
        let mut m = 0.0f64;
        let mut any = false;
        for &i in &nodes {
            let multi = g.unflatten(i);
            let xi = g.node_position(i);
            for a in 0..d {
                if multi[a] + lag_nodes < g.n()[a] {
                    let mut mj = multi.clone();
                    mj[a] += lag_nodes;
                    let j = g.flatten(&mj);
                    let xj = g.node_position(j);
                    let inside = (0..d)
                        .all(|b| xj[b] >= region[b].0 - 1e-12 && xj[b] <= region[b].1 + 1e-12);
                    let _ = xi;
                    if inside {
                        any = true;
                        m = m.max((slice.values()[i] - slice.values()[j]).abs());
                    }
                }
            }
        }
        if !any {
            break;
        }
        lags.push((lag, m));
        k += 1;
        if k > 30 {
            break;
        }
    }
    // discard the smallest separation (one grid step)
    let usable: Vec<(f64, f64)> = lags.into_iter().skip(1).collect();
    Ok(SpatialEstimate { lipschitz, fit: ols_loglog(&usable) })
}

/// `(τ, sup_{x ∈ region} |u(x,t) − u(x,t′)|)` over the dyadic separations
/// `τ = (t_hi − t_lo)/2^k` available among the stored times.
pub fn temporal_modulus_points(
    traj: &SpaceTimeField,
    region: &[(f64, f64)],
    t_lo: f64,
    t_hi: f64,
) -> Result<Vec<(f64, f64)>> {
    let g = traj.grid();
    let d = g.d();
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let x = g.node_position(i);
            (0..d).all(|a| x[a] >= region[a].0 - 1e-12 && x[a] <= region[a].1 + 1e-12)
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::Domain("empty probe region".into()));
    }
    let ks: Vec<usize> = (0..traj.len())
        .filter(|&k| traj.times()[k] >= t_lo - 1e-14 && traj.times()[k] <= t_hi + 1e-14)
        .collect();
    if ks.len() < 3 {
        return Err(Error::Domain("need at least 3 slices in the window".into()));
    }

    let span = t_hi - t_lo;
    let mut points = Vec::new();
    for k in 0..24 {
        let tau = span / (1u64 << k) as f64;
        let mut m: f64 = 0.0;
        let mut found = false;
        for &ki in &ks {
            for &kj in &ks {
                let ti = traj.times()[ki];
                let tj = traj.times()[kj];
                if (tj - ti - tau).abs() <= 1e-9 * span.max(1e-12) {
                    found = true;
                    let vi = traj.slice_values(ki);
                    let vj = traj.slice_values(kj);
                    for &n in &nodes {
                        m = m.max((vj[n] - vi[n]).abs());
                    }
                }
            }
        }
        if found && m > 0.0 {
            points.push((tau, m));
        }
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(points)
}

/// Temporal modulus estimate: `α̂` from log-log regression of
/// `sup_{x ∈ region} |u(x,t) − u(x,t′)|` against dyadic `|t−t′|`.
pub fn temporal_exponent_estimate(
    traj: &SpaceTimeField,
    region: &[(f64, f64)],
    t_lo: f64,
    t_hi: f64,
) -> Result<PowerFit> {
    let mut points = temporal_modulus_points(traj, region, t_lo, t_hi)?;
    if points.len() < 6 {
        if points.is_empty() {
            return Err(Error::Domain("no signal: slices are equal in the window".into()));
        }
        return Err(Error::Domain(format!(
            "need at least 6 dyadic separations, found {}",
            points.len()
        )));
    }
    // discard the smallest separation
    let usable = points.split_off(1);
    ols_loglog(&usable)
        .ok_or_else(|| Error::Domain("no signal: degenerate temporal data".into()))
}

/// One row of the verdict table.
#[derive(Debug, Clone)]
pub struct RegularityVerdict {
    pub k_norm: f64,
    pub lipschitz: f64,
    pub alpha_fit: Option<PowerFit>,
    pub alpha_predicted: AlphaPrediction,
    /// `None` when the trajectory carries no signal (vacuous pass).
    pub pass: Option<bool>,
    /// relative change of the Lipschitz estimate under grid refinement,
    /// when a refined run is supplied
    pub refinement_drift: Option<f64>,
}

/// Compares fitted exponents against the predicted regime:
/// pass = `α̂ ≥ predicted − 0.1` and `L̂/K` finite. Estimates exceeding the
/// prediction are fine (the theory gives lower bounds on regularity).
pub fn regularity_verdict(
    traj: &SpaceTimeField,
    params: &FracParams,
    quad: &QuadConfig,
    probe_region: &[(f64, f64)],
    refined_lipschitz: Option<f64>,
) -> Result<RegularityVerdict> {
    let last = traj.len() - 1;
    let slice = traj.slice_field(last);
    let spatial = spatial_lipschitz_estimate(&slice, probe_region)?;
    let sup: f64 = traj.sup_norm();
    // K only normalizes the report; a relative tolerance is plenty here.
    let mut k_quad = quad.clone();
    k_quad.tol = k_quad.tol.max(1e-5);
    let tail = tail_norm_field(&slice, params, &k_quad)?;
    let k_norm = sup + tail.value;

    let t_lo = traj.times()[0];
    let t_hi = *traj.times().last().unwrap();
    let alpha_fit = match temporal_exponent_estimate(traj, probe_region, t_lo, t_hi) {
        Ok(f) => Some(f),
        Err(_) => None,
    };
    let predicted = params.alpha_predicted();
    let pass = match (&alpha_fit, spatial.lipschitz) {
        (None, l) if l == 0.0 => None, // constant data: vacuous
        (None, _) => Some(false),
        (Some(f), l) => {
            let ratio_ok = k_norm > 0.0 && (l / k_norm).is_finite();
            Some(f.exponent >= predicted.value - 0.1 && ratio_ok)
        }
    };
    let refinement_drift = refined_lipschitz.map(|lr| {
        if spatial.lipschitz == 0.0 {
            0.0
        } else {
            (lr - spatial.lipschitz).abs() / spatial.lipschitz
        }
    });
    Ok(RegularityVerdict {
        k_norm,
        lipschitz: spatial.lipschitz,
        alpha_fit,
        alpha_predicted: predicted,
        pass,
        refinement_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::tail::TailSpec;

    #[test]
    fn linear_field_gives_slope_and_unit_exponent() {
        let g = Grid::symmetric_1d(1.0, 101).unwrap();
        let f = GridField::sample(g, TailSpec::Zero, |x| 3.0 * x[0]).unwrap();
        let est = spatial_lipschitz_estimate(&f, &[(-0.8, 0.8)]).unwrap();
        assert!((est.lipschitz - 3.0).abs() < 1e-12);
        let fit = est.fit.unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-10);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn constant_field_has_no_signal() {
        let g = Grid::symmetric_1d(1.0, 51).unwrap();
        let f = GridField::constant(g, 4.0, TailSpec::Zero).unwrap();
        let est = spatial_lipschitz_estimate(&f, &[(-0.5, 0.5)]).unwrap();
        assert_eq!(est.lipschitz, 0.0);
        assert!(est.fit.is_none());
    }

    #[test]
    fn sqrt_profile_fits_half_exponent() {
        let g = Grid::symmetric_1d(1.0, 257).unwrap();
        let f = GridField::sample(g, TailSpec::Zero, |x| x[0].abs().sqrt()).unwrap();
        let est = spatial_lipschitz_estimate(&f, &[(-0.9, 0.9)]).unwrap();
        let fit = est.fit.unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.05, "{}", fit.exponent);
    }

    #[test]
    fn region_too_small_is_rejected() {
        let g = Grid::symmetric_1d(1.0, 51).unwrap();
        let f = GridField::constant(g, 0.0, TailSpec::Zero).unwrap();
        assert!(spatial_lipschitz_estimate(&f, &[(0.001, 0.002)]).is_err());
    }

    fn synthetic_traj(f: impl Fn(f64, f64) -> f64) -> SpaceTimeField {
        let g = Grid::symmetric_1d(1.0, 33).unwrap();
        let mut st = SpaceTimeField::new(g.clone(), TailSpec::Zero);
        // dyadic-friendly times: k/256 for k = 0..=256 step 1 gives all
        // τ = 2^{-j} exactly
        for k in 0..=256u64 {
            let t = k as f64 / 256.0;
            let vals: Vec<f64> =
                (0..g.len()).map(|i| f(g.node_position(i)[0], t)).collect();
            if k == 0 {
                st.push(0.0, vals).unwrap();
            } else {
                st.push(t, vals).unwrap();
            }
        }
        st
    }

    #[test]
    fn linear_time_gives_unit_alpha() {
        let st = synthetic_traj(|_x, t| t);
        let fit = temporal_exponent_estimate(&st, &[(-0.5, 0.5)], 0.0, 1.0).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-10, "{}", fit.exponent);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn sqrt_time_gives_half_alpha_exactly() {
        let st = synthetic_traj(|_x, t| t.sqrt());
        let fit = temporal_exponent_estimate(&st, &[(-0.5, 0.5)], 0.0, 1.0).unwrap();
        // sup over pairs at separation τ is attained at t = 0: M(τ) = √τ
        assert!((fit.exponent - 0.5).abs() < 1e-10, "{}", fit.exponent);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn degenerate_slices_report_no_signal() {
        let st = synthetic_traj(|_x, _t| 1.0);
        let err = temporal_exponent_estimate(&st, &[(-0.5, 0.5)], 0.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("no signal"), "{err}");
    }

    #[test]
    fn estimates_shift_and_scale_as_expected() {
        let g = Grid::symmetric_1d(1.0, 101).unwrap();
        let w = |x: f64| (2.0 * x).sin();
        let f = GridField::sample(g.clone(), TailSpec::Zero, |x| w(x[0])).unwrap();
        let base = spatial_lipschitz_estimate(&f, &[(-0.8, 0.8)]).unwrap();

        let f_shift =
            GridField::sample(g.clone(), TailSpec::Constant(5.0), |x| w(x[0]) + 5.0).unwrap();
        let shifted = spatial_lipschitz_estimate(&f_shift, &[(-0.8, 0.8)]).unwrap();
        assert!((shifted.lipschitz - base.lipschitz).abs() < 1e-12);

        let f_scaled = GridField::sample(g, TailSpec::Zero, |x| -2.0 * w(x[0])).unwrap();
        let scaled = spatial_lipschitz_estimate(&f_scaled, &[(-0.8, 0.8)]).unwrap();
        assert!((scaled.lipschitz - 2.0 * base.lipschitz).abs() < 1e-12);
        // Hölder exponent unchanged under scaling
        let (a, b) = (base.fit.unwrap().exponent, scaled.fit.unwrap().exponent);
        assert!((a - b).abs() < 1e-12);

        // temporal exponent is scaling-invariant too
        let st = synthetic_traj(|x, t| t * (1.0 + 0.2 * x));
        let st2 = synthetic_traj(|x, t| -3.0 * t * (1.0 + 0.2 * x));
        let fa = temporal_exponent_estimate(&st, &[(-0.5, 0.5)], 0.0, 1.0).unwrap();
        let fb = temporal_exponent_estimate(&st2, &[(-0.5, 0.5)], 0.0, 1.0).unwrap();
        assert!((fa.exponent - fb.exponent).abs() < 1e-10);
    }

    #[test]
    fn constant_trajectory_report_is_vacuous_pass() {
        let g = Grid::symmetric_1d(1.0, 33).unwrap();
        let mut st = SpaceTimeField::new(g.clone(), TailSpec::Constant(2.0));
        for k in 0..=8u32 {
            st.push(k as f64 / 8.0, vec![2.0; g.len()]).unwrap();
        }
        let prm = crate::params::make_params(0.5, 3.0, 1).unwrap();
        let quad = QuadConfig::for_grid(&g);
        let rep = regularity_verdict(&st, &prm, &quad, &[(-0.5, 0.5)], None).unwrap();
        assert_eq!(rep.lipschitz, 0.0);
        assert!(rep.pass.is_none());
    }
}
