//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities (run with `--nocapture` to see them).
//! Every tolerance is pinned here, not computed.

use fpheat::barrier::{c_claim_threshold, verify_supersolution};
use fpheat::cli::{self, config::parse_config};
use fpheat::comparison::{check_comparison_traced, random_ordered_pair};
use fpheat::convolution::{inf_convolution, sup_convolution};
use fpheat::doubling::{
    audited_delta0, cone_membership, in_d1, in_d2, increment_sandwich_audit, lipschitz_from_doubling,
    localizer_audit, Localizer, Modulus,
};
use fpheat::evolution::{energy_trace, evolve, EvolveControls};
use fpheat::grid::{Grid, GridField, SpaceTimeField};
use fpheat::operator::{
    chord_ratio_band, frac_p_laplacian_point, pv_local_bound, ExtendedField, FarField, FnField,
};
use fpheat::params::make_params;
use fpheat::quadrature::{QuadConfig, RadialRule};
use fpheat::regularity::{spatial_lipschitz_estimate, temporal_exponent_estimate};
use fpheat::tail::{norm2, AnalyticTail, TailSpec};

fn line(n: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance {n:02} [{name}]: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_operator_correctness() {
    let prm = make_params(0.5, 3.0, 1).unwrap();
    let grid = Grid::symmetric_1d(1.0, 201).unwrap();
    let quad = QuadConfig::for_grid(&grid);

    let c = GridField::constant(grid.clone(), 1.5, TailSpec::Constant(1.5)).unwrap();
    let v_const = frac_p_laplacian_point(&ExtendedField::new(&c), &[0.1], &prm, &quad)
        .unwrap()
        .value;

    let x0 = 0.25;
    let odd = FnField::new(
        1,
        move |x: &[f64]| (x[0] - x0).sin(),
        FarField::ApproachesConstant { c: 0.0, amp: 1.0, beta: 0.0, r0: 1.0 },
        40.0,
    );
    let quad_odd = QuadConfig::new(quad.eps_pv, 8, 1.0, 80.0).unwrap();
    let v_odd = frac_p_laplacian_point(&odd, &[x0], &prm, &quad_odd).unwrap().value;

    let lin = GridField::sample(
        grid,
        TailSpec::Analytic(AnalyticTail::Linear { gradient: vec![0.8] }),
        |x| 0.8 * x[0],
    )
    .unwrap();
    let v_lin = frac_p_laplacian_point(&ExtendedField::new(&lin), &[0.0], &prm, &quad)
        .unwrap()
        .value;

    // u(y) = y² on [−1,1] zero-extended, x = 0, p = 2, s = 1/2: the paired
    // integrand is identically −2 on the box, so the oracle value is −2.
    let prm2 = make_params(0.5, 2.0, 1).unwrap();
    let square = FnField {
        dim: 1,
        f: |x: &[f64]| if x[0].abs() <= 1.0 { x[0] * x[0] } else { 0.0 },
        far: FarField::ApproachesConstant { c: 0.0, amp: 0.0, beta: 1.0, r0: 1.0 },
        kinks: vec![1.0],
        kink_points: vec![],
        settled: 1.0,
    };
    let qsq = QuadConfig::new(0.005, 8, 1e-8, 64.0).unwrap();
    let gauss = frac_p_laplacian_point(&square, &[0.0], &prm2, &qsq).unwrap().value;
    let mid = frac_p_laplacian_point(
        &square,
        &[0.0],
        &prm2,
        &qsq.clone().with_rule(RadialRule::Midpoint),
    )
    .unwrap()
    .value;

    let ok = v_const.abs() <= 1e-10
        && v_odd.abs() <= 1e-10
        && v_lin.abs() <= 1e-10
        && (gauss - (-2.0)).abs() <= 1e-6
        && (gauss - mid).abs() <= 1e-6;
    line(
        1,
        "operator correctness",
        ok,
        &format!(
            "const {v_const:.2e}, odd {v_odd:.2e}, linear {v_lin:.2e}, \
             quadratic {gauss:.9} vs oracle -2 (midpoint {mid:.9})"
        ),
    );
}

#[test]
fn criterion_02_chord_sandwich_bands() {
    let mut detail = String::new();
    let mut ok = true;
    for &p in &[2.0, 2.5, 3.0, 3.5] {
        let (lo1, hi1) = chord_ratio_band(p, 10_000, 1234);
        let (lo2, hi2) = chord_ratio_band(p, 20_000, 98765);
        let stable = lo2 >= lo1 * 0.95 - 1e-12 && hi2 <= hi1 * 1.05 + 1e-12;
        ok &= lo1 > 0.0 && hi1.is_finite() && stable;
        detail.push_str(&format!("p={p}: [{lo1:.4},{hi1:.4}] "));
    }
    line(2, "chord-integral sandwich", ok, &detail);
}

#[test]
fn criterion_03_pv_local_bound_halvings() {
    let mut ok = true;
    let mut detail = String::new();
    for (s, p) in [(0.5, 2.0), (0.5, 3.0), (0.6, 2.0)] {
        let prm = make_params(s, p, 1).unwrap();
        let w = FnField::new(
            1,
            |x: &[f64]| x[0] * x[0],
            FarField::ApproachesConstant { c: 0.0, amp: 0.0, beta: 1.0, r0: 1e9 },
            1e9,
        );
        let quad = QuadConfig::new(1e-3, 8, 1e-6, 1e10).unwrap();
        let mut seq = Vec::new();
        for k in 0..=5 {
            let eps = 0.1 / 2f64.powi(k);
            seq.push(pv_local_bound(&w, &[0.3], eps, &prm, &quad).unwrap().value);
        }
        let monotone = seq.windows(2).all(|w| w[1] < w[0]);
        let decayed = seq[5] < 0.1 * seq[0];
        ok &= monotone && decayed;
        detail.push_str(&format!("(s={s},p={p}): ratio5 {:.4} ", seq[5] / seq[0]));
    }
    line(3, "local principal-value decay", ok, &detail);
}

#[test]
fn criterion_04_and_05_comparison_and_dissipation() {
    let grid = Grid::symmetric_1d(1.0, 201).unwrap();
    let quad = QuadConfig::for_grid(&grid);
    let controls = EvolveControls::new(0.02);
    let mut total_violations = 0usize;
    let mut worst_increase_rel = f64::NEG_INFINITY;
    let mut traces = 0usize;
    for (case, (s, p)) in [(0u64, (0.6, 2.0)), (1, (0.5, 3.0))].into_iter() {
        let prm = make_params(s, p, 1).unwrap();
        for i in 0..100u64 {
            let pair =
                random_ordered_pair(&grid, &TailSpec::Zero, 1000 * (case + 1) + i).unwrap();
            let (rep, upper, lower) =
                check_comparison_traced(&pair, &controls, &prm, &quad).unwrap();
            total_violations += rep.count();
            for traj in [&upper, &lower] {
                let tr = energy_trace(traj, &prm, &quad).unwrap();
                let f0 = tr.points[0].1.max(f64::MIN_POSITIVE);
                worst_increase_rel = worst_increase_rel.max(tr.max_increase / f0);
                traces += 1;
            }
        }
    }
    line(
        4,
        "discrete comparison",
        total_violations == 0,
        &format!("200 ordered pairs, {total_violations} violations"),
    );
    line(
        5,
        "energy dissipation",
        worst_increase_rel <= 1e-6,
        &format!("{traces} traces, worst per-step increase {worst_increase_rel:.2e} of F(u0)"),
    );
}

#[test]
fn criterion_06_convolution_properties() {
    // worked examples on a dyadic grid
    let g = Grid::symmetric_1d(2.0, 129).unwrap();
    let f = GridField::sample(g.clone(), TailSpec::Zero, |x| x[0].abs()).unwrap();
    let mut st = SpaceTimeField::new(g.clone(), TailSpec::Zero);
    st.push(0.0, f.values().to_vec()).unwrap();
    let inf1 = inf_convolution(&st, 1.0).unwrap();
    let idx0 = (0..g.len()).find(|&i| g.node_position(i)[0] == 0.0).unwrap();
    let idx1 = (0..g.len()).find(|&i| g.node_position(i)[0] == 1.0).unwrap();
    let ex_origin = inf1.slice_values(0)[idx0];
    let ex_one = inf1.slice_values(0)[idx1];
    let neg = GridField::sample(g.clone(), TailSpec::Zero, |x| -x[0].abs()).unwrap();
    let mut stn = SpaceTimeField::new(g.clone(), TailSpec::Zero);
    stn.push(0.0, neg.values().to_vec()).unwrap();
    let sup1 = sup_convolution(&stn, 1.0).unwrap();
    let ex_dual = sup1.slice_values(0)[idx0];

    // property checks on a time-dependent field
    let mut traj = SpaceTimeField::new(g.clone(), TailSpec::Zero);
    for k in 0..6u32 {
        let t = k as f64 * 0.08;
        let v: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.node_position(i)[0];
                (3.0 * x).sin().abs() * (1.0 + 0.3 * t)
            })
            .collect();
        traj.push(t, v).unwrap();
    }
    let eps = 0.3;
    let ue = inf_convolution(&traj, eps).unwrap();
    let us = sup_convolution(&traj, eps).unwrap();
    let mut below_ok = true;
    let mut above_ok = true;
    let mut semi_worst = f64::NEG_INFINITY;
    let mut tlip_worst = f64::NEG_INFINITY;
    let h = g.h();
    for k in 0..traj.len() {
        let (u, v, w) = (traj.slice_values(k), ue.slice_values(k), us.slice_values(k));
        for i in 0..u.len() {
            below_ok &= v[i] <= u[i];
            above_ok &= w[i] >= u[i];
        }
        for i in 1..u.len() - 1 {
            semi_worst = semi_worst.max(v[i + 1] - 2.0 * v[i] + v[i - 1] - 2.0 * h * h / eps);
        }
        if k + 1 < traj.len() {
            let dt = traj.times()[k + 1] - traj.times()[k];
            let vn = ue.slice_values(k + 1);
            for i in 0..u.len() {
                tlip_worst = tlip_worst.max((vn[i] - v[i]).abs() - dt / eps);
            }
        }
    }
    let ok = ex_origin == 0.0
        && ex_one == 0.75
        && ex_dual == 0.0
        && below_ok
        && above_ok
        && semi_worst <= 1e-12
        && tlip_worst <= 1e-12;
    line(
        6,
        "convolution properties",
        ok,
        &format!(
            "examples (0, 3/4, 0) = ({ex_origin}, {ex_one}, {ex_dual}), \
             semiconcavity excess {semi_worst:.2e}, time-Lipschitz excess {tlip_worst:.2e}"
        ),
    );
}

#[test]
fn criterion_07_region_geometry() {
    use rand::{Rng, SeedableRng};
    // exhaustive & exclusive partition over 1e5 points in B_{1/16}
    let a = [0.2, 0.05];
    let (d0, d1) = (0.1, 0.01);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut counted = 0usize;
    let mut region_counts = [0usize; 3];
    let mut box_samples = 0usize;
    while counted < 100_000 {
        let z = [
            rng.random_range(-1.0f64 / 16.0..1.0 / 16.0),
            rng.random_range(-1.0f64 / 16.0..1.0 / 16.0),
        ];
        box_samples += 1;
        if norm2(&z) >= 1.0 / 16.0 {
            continue;
        }
        let c = cone_membership(&a, &z, d0).unwrap();
        let r1 = in_d1(&z, &a, d0, d1).unwrap();
        let r2 = in_d2(&z, &a, d0, d1).unwrap();
        let total = usize::from(c) + usize::from(r1) + usize::from(r2);
        assert_eq!(total, 1, "partition broken at {z:?}");
        region_counts[if c { 0 } else if r1 { 1 } else { 2 }] += 1;
        counted += 1;
    }
    // Monte-Carlo measure: region fractions of the sampling box must sum
    // to |B_{1/16}| within 3σ
    let box_vol = (2.0 / 16.0) * (2.0 / 16.0);
    let ball_vol = std::f64::consts::PI / (16.0 * 16.0);
    let p_hat = counted as f64 / box_samples as f64;
    let sigma = (p_hat * (1.0 - p_hat) / box_samples as f64).sqrt();
    let measure = p_hat * box_vol;
    let measure_ok = (measure - ball_vol).abs() <= 3.0 * sigma * box_vol;

    // sandwich audits at the audited thresholds
    let mut sandwich_ok = true;
    let mut det = String::new();
    for gamma in [0.5, 0.9] {
        let m = Modulus::Holder { gamma };
        let d0h = audited_delta0(&m, 100_000, 55, 1).unwrap();
        let band = increment_sandwich_audit(&m, d0h, 100_000, 56, 1).unwrap();
        sandwich_ok &= band.min_ratio > 0.0 && band.max_ratio.is_finite();
        det.push_str(&format!("omega_{gamma}: c={:.3} C={:.3} @d0={d0h} ", band.min_ratio, band.max_ratio));
    }
    let d0t = audited_delta0(&Modulus::LipschitzLog, 100_000, 57, 2).unwrap();
    let band = increment_sandwich_audit(&Modulus::LipschitzLog, d0t, 100_000, 58, 2).unwrap();
    sandwich_ok &= band.min_ratio > 0.0 && band.max_ratio.is_finite();
    det.push_str(&format!("log-profile: c={:.3} C={:.3} @d0={d0t} ", band.min_ratio, band.max_ratio));

    // localizer audit: finite and stable
    let loc = Localizer::new(3).unwrap();
    let c1 = localizer_audit(&loc, 50_000, 59, 2);
    let c2 = localizer_audit(&loc, 100_000, 59, 2);
    let loc_ok = c1.is_finite() && c1 > 0.0 && (c2 - c1).abs() <= 0.05 * c1;

    line(
        7,
        "region decomposition and audits",
        measure_ok && sandwich_ok && loc_ok,
        &format!(
            "partition exact on 1e5 pts, MC measure {measure:.6} vs |B| {ball_vol:.6}; {det}; \
             localizer C = {c1:.3}"
        ),
    );
}

#[test]
fn criterion_08_lipschitz_via_doubling() {
    let g = Grid::symmetric_1d(1.25, 201).unwrap();
    let f = GridField::sample(g.clone(), TailSpec::Zero, |x| 3.0 * x[0]).unwrap();
    let l_linear = lipschitz_from_doubling(&f, 10.0, 1.0, 1e-3).unwrap();

    // solver output
    let prm = make_params(0.5, 3.0, 1).unwrap();
    let quad = QuadConfig::for_grid(&g);
    let u0 = GridField::sample(g.clone(), TailSpec::Zero, |x| {
        (1.0 - (x[0] / 0.4).powi(2)).max(0.0).powi(2)
    })
    .unwrap();
    let traj = evolve(&u0, &EvolveControls::new(0.005), &prm, &quad).unwrap();
    let slice = traj.slice_field(traj.len() - 1);
    let l_doubling = lipschitz_from_doubling(&slice, 10.0, 1.0, 1e-3).unwrap();
    let direct = spatial_lipschitz_estimate(&slice, &[(-0.5, 0.5)]).unwrap().lipschitz;
    let gap = (l_doubling - direct).abs() / direct;

    let ok = (l_linear - 3.0).abs() <= 0.3 && gap <= 0.10;
    line(
        8,
        "lipschitz via doubling",
        ok,
        &format!("u=3x -> {l_linear:.4}; solver slice {l_doubling:.4} vs direct {direct:.4} (gap {gap:.2e})"),
    );
}

#[test]
fn criterion_09_barrier_supersolution() {
    let mut ok = true;
    let mut detail = String::new();
    for (s, p) in [(0.5, 3.0), (0.6, 2.0)] {
        let prm = make_params(s, p, 1).unwrap();
        let g = Grid::symmetric_1d(2.0, 161).unwrap();
        let quad = QuadConfig::for_grid(&g);
        let u0 = GridField::sample(g.clone(), TailSpec::Zero, |x| {
            0.8 * (1.0 - (x[0] / 1.2).powi(2)).max(0.0).powi(2)
        })
        .unwrap();
        let mut controls = EvolveControls::new(0.01);
        controls.store_times = Some(vec![0.005, 0.01]);
        let ext = evolve(&u0, &controls, &prm, &quad).unwrap();
        let eta = 0.1;
        let c_star = c_claim_threshold(&prm, &ext, eta, 1.0, 6, 2, &quad).unwrap();
        let rep = verify_supersolution(&prm, &ext, eta, 1.0, 2.0 * c_star, 10, 3, &quad).unwrap();
        ok &= rep.strictly_positive();
        detail.push_str(&format!(
            "(s={s},p={p},gamma={}): min {:.4} ± {:.1e} at C = 2×{c_star}; ",
            prm.gamma_barrier(),
            rep.min_total,
            rep.min_err
        ));
    }
    line(9, "barrier supersolution", ok, &detail);
}

#[test]
fn criterion_10_regularity_exponents() {
    let mut ok = true;
    let mut detail = String::new();
    for (s, p, alpha_floor) in [(0.5, 3.0, 0.9), (0.6, 2.0, 1.0 / 1.2 - 0.1)] {
        let prm = make_params(s, p, 1).unwrap();
        let run = |nodes: usize| {
            let grid = Grid::symmetric_1d(1.0, nodes).unwrap();
            let quad = QuadConfig::for_grid(&grid);
            let u0 = GridField::sample(grid, TailSpec::Zero, |x| {
                (1.0 - x[0].abs() / 0.5).max(0.0)
            })
            .unwrap();
            let mut controls = EvolveControls::new(0.02);
            controls.store_times =
                Some((0..=9u32).map(|k| 0.02 / (1u64 << k) as f64).rev().collect::<Vec<_>>());
            evolve(&u0, &controls, &prm, &quad).unwrap()
        };
        let traj = run(201);
        let region = [(-0.5, 0.5)];
        let fit = temporal_exponent_estimate(&traj, &region, 0.0, 0.02).unwrap();
        let l_coarse = spatial_lipschitz_estimate(&traj.slice_field(traj.len() - 1), &region)
            .unwrap()
            .lipschitz;
        let refined = run(401);
        let l_fine = spatial_lipschitz_estimate(&refined.slice_field(refined.len() - 1), &region)
            .unwrap()
            .lipschitz;
        let drift = (l_fine - l_coarse).abs() / l_coarse;
        let case_ok = fit.exponent >= alpha_floor && fit.r_squared >= 0.95 && drift <= 0.10;
        ok &= case_ok;
        detail.push_str(&format!(
            "(s={s},p={p}): alpha {:.4} (floor {alpha_floor:.3}), R2 {:.4}, L {l_coarse:.3} drift {drift:.2e}; ",
            fit.exponent, fit.r_squared
        ));
    }
    line(10, "regularity exponents at desk scale", ok, &detail);
}

#[test]
fn criterion_11_determinism() {
    let base = std::env::temp_dir().join(format!("fpheat-acc11-{}", std::process::id()));
    std::fs::create_dir_all(&base).unwrap();
    let mk = |sub: &str| {
        format!(
            "experiment = comparison\nseed = 2718\nout = {}\n\n[params]\ns = 0.6\np = 2\n\n\
             [grid]\nhalf_width = 1.0\nnodes = 101\n\n[evolve]\nt_end = 0.004\n\n\
             [comparison]\npairs = 5\n",
            base.join(sub).display()
        )
    };
    let (d1, o1) = cli::run_experiment(&parse_config(&mk("run-a")).unwrap()).unwrap();
    let (d2, o2) = cli::run_experiment(&parse_config(&mk("run-b")).unwrap()).unwrap();
    assert!(o1.passed() && o2.passed());
    let mut identical = true;
    let mut compared = 0usize;
    for name in o1.outputs.iter().filter(|n| n.ends_with(".csv")) {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        identical &= a == b;
        compared += 1;
    }
    std::fs::remove_dir_all(&base).ok();
    line(
        11,
        "determinism",
        identical && compared > 0,
        &format!("{compared} CSV bodies byte-identical across reruns"),
    );
}
