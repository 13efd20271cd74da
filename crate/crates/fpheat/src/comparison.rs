//! Discrete comparison principle: ordered data stays ordered under the
//! monotone scheme. Both members of a pair advance in lockstep with the
//! common (minimum) step bound, recomputed every step, which is what turns
//! order preservation into an exact statement about the update map.

use crate::error::{Error, Result};
use crate::evolution::{stable_dt_with, step_with, EvolveControls, SchemeStencil};
use crate::grid::GridField;
use crate::params::FracParams;
use crate::quadrature::QuadConfig;

/// Pointwise-ordered pair of initial fields on a shared grid.
#[derive(Debug, Clone)]
pub struct OrderedPair {
    pub upper: GridField,
    pub lower: GridField,
}

impl OrderedPair {
    /// Validates `upper ≥ lower` node-wise and tail-wise.
    pub fn new(upper: GridField, lower: GridField) -> Result<Self> {
        if upper.grid() != lower.grid() {
            return Err(Error::Domain("pair members live on different grids".into()));
        }
        if let Some(node) = upper.ge_nodewise(&lower)? {
            return Err(Error::Domain(format!(
                "ordering violated at input node {node}: upper {} < lower {}",
                upper.values()[node],
                lower.values()[node]
            )));
        }
        if !upper.tail().dominates(lower.tail(), upper.grid().d()) {
            return Err(Error::Domain("upper tail does not dominate lower tail".into()));
        }
        Ok(Self { upper, lower })
    }
}

/// One recorded ordering violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub step: usize,
    pub t: f64,
    pub node: usize,
    /// `lower − upper` at the node (positive = violation).
    pub excess: f64,
}

/// Outcome of a comparison run.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub violations: Vec<Violation>,
    pub steps: usize,
    pub t_end: f64,
    /// `(t, min node-wise gap upper − lower)` per step.
    pub gap_trace: Vec<(f64, f64)>,
}

impl ComparisonReport {
    pub fn count(&self) -> usize {
        self.violations.len()
    }
}

fn lockstep(
    pair: &OrderedPair,
    controls: &EvolveControls,
    params: &FracParams,
    quad: &QuadConfig,
    traced: Option<&mut (crate::grid::SpaceTimeField, crate::grid::SpaceTimeField)>,
) -> Result<ComparisonReport> {
    controls.validate()?;
    let up_stencil =
        SchemeStencil::build(pair.upper.grid(), pair.upper.tail(), params, quad)?;
    let lo_stencil = if pair.upper.tail() == pair.lower.tail() {
        None
    } else {
        Some(SchemeStencil::build(pair.lower.grid(), pair.lower.tail(), params, quad)?)
    };
    let delta = controls.osc_floor.unwrap_or_else(|| {
        (1e-8 * pair.upper.oscillation().max(pair.lower.oscillation())).max(1e-300)
    });

    let mut upper = pair.upper.clone();
    let mut lower = pair.lower.clone();
    let mut t = 0.0f64;
    let mut step = 0usize;
    let mut violations = Vec::new();
    let mut gap_trace = Vec::new();
    let mut traced = traced;

    let record_gap = |upper: &GridField, lower: &GridField| -> f64 {
        upper
            .values()
            .iter()
            .zip(lower.values())
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min)
    };
    gap_trace.push((0.0, record_gap(&upper, &lower)));
    if let Some((tu, tl)) = traced.as_deref_mut() {
        tu.push(0.0, upper.values().to_vec())?;
        tl.push(0.0, lower.values().to_vec())?;
    }

    while t < controls.t_end * (1.0 - 1e-14) {
        let lo_ref = lo_stencil.as_ref().unwrap_or(&up_stencil);
        let mut dt = stable_dt_with(&up_stencil, upper.values(), delta)
            .min(stable_dt_with(lo_ref, lower.values(), delta))
            .min(controls.dt_max);
        if let crate::evolution::DtPolicy::Fixed(fixed) = controls.dt_policy {
            dt = dt.min(fixed);
        }
        if t + dt > controls.t_end {
            dt = controls.t_end - t;
        }
        upper = step_with(&up_stencil, &upper, dt, delta)?;
        lower = step_with(lo_ref, &lower, dt, delta)?;
        t += dt;
        step += 1;
        for (node, (a, b)) in upper.values().iter().zip(lower.values()).enumerate() {
            if b > a {
                violations.push(Violation { step, t, node, excess: b - a });
            }
        }
        gap_trace.push((t, record_gap(&upper, &lower)));
        if let Some((tu, tl)) = traced.as_deref_mut() {
            tu.push(t, upper.values().to_vec())?;
            tl.push(t, lower.values().to_vec())?;
        }
    }
    Ok(ComparisonReport { violations, steps: step, t_end: t, gap_trace })
}

/// Evolves the pair with the common monotone step and reports every
/// node-time where the ordering fails. The contract for valid pairs is a
/// count of exactly zero.
pub fn check_comparison(
    pair: &OrderedPair,
    controls: &EvolveControls,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<ComparisonReport> {
    lockstep(pair, controls, params, quad, None)
}

/// `check_comparison` that also returns both member trajectories (every
/// step stored), for downstream diagnostics like the energy trace.
pub fn check_comparison_traced(
    pair: &OrderedPair,
    controls: &EvolveControls,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<(ComparisonReport, crate::grid::SpaceTimeField, crate::grid::SpaceTimeField)> {
    let mut trajs = (
        crate::grid::SpaceTimeField::new(pair.upper.grid().clone(), pair.upper.tail().clone()),
        crate::grid::SpaceTimeField::new(pair.lower.grid().clone(), pair.lower.tail().clone()),
    );
    let rep = lockstep(pair, controls, params, quad, Some(&mut trajs))?;
    Ok((rep, trajs.0, trajs.1))
}

/// The `(t, min gap)` sequence of the lockstep evolution.
pub fn ordering_gap_trace(
    pair: &OrderedPair,
    controls: &EvolveControls,
    params: &FracParams,
    quad: &QuadConfig,
) -> Result<Vec<(f64, f64)>> {
    Ok(lockstep(pair, controls, params, quad, None)?.gap_trace)
}

/// Seeded generator for random ordered pairs: `lower = upper − bump` with a
/// nonnegative compactly supported bump, equal tails.
pub fn random_ordered_pair(
    grid: &crate::grid::Grid,
    tail: &crate::tail::TailSpec,
    seed: u64,
) -> Result<OrderedPair> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut upper_bumps = Vec::new();
    for _ in 0..rng.random_range(1..=3usize) {
        let amp: f64 = rng.random_range(0.2..1.0);
        let center: f64 = rng.random_range(-0.4..0.4);
        let width: f64 = rng.random_range(0.2..0.5);
        upper_bumps.push((amp, center, width));
    }
    let gap_amp: f64 = rng.random_range(0.1..0.6);
    let gap_center: f64 = rng.random_range(-0.3..0.3);
    let gap_width: f64 = rng.random_range(0.15..0.4);

    let profile = move |x: f64| -> f64 {
        upper_bumps
            .iter()
            .map(|(a, c, w)| a * (1.0 - ((x - c) / w).powi(2)).max(0.0).powi(2))
            .sum()
    };
    let upper = GridField::sample(grid.clone(), tail.clone(), |x| profile(x[0]))?;
    let lower = GridField::sample(grid.clone(), tail.clone(), |x| {
        profile(x[0])
            - gap_amp * (1.0 - ((x[0] - gap_center) / gap_width).powi(2)).max(0.0).powi(2)
    })?;
    OrderedPair::new(upper, lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::params::make_params;
    use crate::tail::TailSpec;

    #[test]
    fn trivial_constant_pair_has_no_violations() {
        let prm = make_params(0.5, 3.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 41).unwrap();
        let upper = GridField::constant(g.clone(), 1.0, TailSpec::Constant(1.0)).unwrap();
        let lower = GridField::constant(g, 0.0, TailSpec::Zero).unwrap();
        let pair = OrderedPair::new(upper, lower).unwrap();
        let quad = QuadConfig::for_grid(pair.upper.grid());
        let rep = check_comparison(&pair, &EvolveControls::new(0.002), &prm, &quad).unwrap();
        assert_eq!(rep.count(), 0);
        // both are fixed points: the gap stays exactly 1
        assert!(rep.gap_trace.iter().all(|&(_, g)| g == 1.0));
    }

    #[test]
    fn ties_are_permitted() {
        let prm = make_params(0.6, 2.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 41).unwrap();
        let f = GridField::sample(g, TailSpec::Zero, |x| {
            (1.0 - (x[0] / 0.5).powi(2)).max(0.0).powi(2)
        })
        .unwrap();
        let pair = OrderedPair::new(f.clone(), f).unwrap();
        let quad = QuadConfig::for_grid(pair.upper.grid());
        let rep = check_comparison(&pair, &EvolveControls::new(0.002), &prm, &quad).unwrap();
        assert_eq!(rep.count(), 0);
        assert!(rep.gap_trace.iter().all(|&(_, g)| g == 0.0));
    }

    #[test]
    fn misordered_input_is_rejected_with_first_node() {
        let g = Grid::symmetric_1d(1.0, 5).unwrap();
        let upper = GridField::new(g.clone(), vec![0.0, 1.0, 0.5, 1.0, 0.0], TailSpec::Zero)
            .unwrap();
        let lower = GridField::new(g, vec![0.0, 1.0, 0.75, 1.0, 0.0], TailSpec::Zero).unwrap();
        let err = OrderedPair::new(upper, lower).unwrap_err();
        assert!(err.to_string().contains("node 2"), "{err}");
    }

    #[test]
    fn random_pairs_preserve_order() {
        let prm = make_params(0.5, 3.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 61).unwrap();
        let quad = QuadConfig::for_grid(&g);
        for seed in 0..6 {
            let pair = random_ordered_pair(&g, &TailSpec::Zero, seed).unwrap();
            let rep =
                check_comparison(&pair, &EvolveControls::new(0.004), &prm, &quad).unwrap();
            assert_eq!(rep.count(), 0, "seed {seed}");
            assert!(rep.gap_trace.iter().all(|&(_, g)| g >= 0.0));
        }
    }

    #[test]
    fn gap_trace_starts_at_initial_min_gap() {
        let prm = make_params(0.6, 2.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 61).unwrap();
        let quad = QuadConfig::for_grid(&g);
        let pair = random_ordered_pair(&g, &TailSpec::Zero, 42).unwrap();
        let expected: f64 = pair
            .upper
            .values()
            .iter()
            .zip(pair.lower.values())
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);
        let trace =
            ordering_gap_trace(&pair, &EvolveControls::new(0.002), &prm, &quad).unwrap();
        assert_eq!(trace[0].1, expected);
    }

    #[test]
    fn shifting_both_members_keeps_zero_violations() {
        let prm = make_params(0.5, 3.0, 1).unwrap();
        let g = Grid::symmetric_1d(1.0, 61).unwrap();
        let quad = QuadConfig::for_grid(&g);
        let pair = random_ordered_pair(&g, &TailSpec::Zero, 9).unwrap();
        let rep = check_comparison(&pair, &EvolveControls::new(0.002), &prm, &quad).unwrap();

        let shift = 3.0;
        let up2 = GridField::new(
            g.clone(),
            pair.upper.values().iter().map(|v| v + shift).collect(),
            TailSpec::Constant(shift),
        )
        .unwrap();
        let lo2 = GridField::new(
            g.clone(),
            pair.lower.values().iter().map(|v| v + shift).collect(),
            TailSpec::Constant(shift),
        )
        .unwrap();
        let pair2 = OrderedPair::new(up2, lo2).unwrap();
        let rep2 = check_comparison(&pair2, &EvolveControls::new(0.002), &prm, &quad).unwrap();
        assert_eq!(rep.count(), rep2.count());
        assert_eq!(rep.count(), 0);
    }
}
