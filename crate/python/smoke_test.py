#!/usr/bin/env python3
"""Smoke test for the fpheat_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/
(release preferred), copies it next to a temp dir as fpheat_py.so, imports
it, and exercises the main types and operations end to end.

Usage:
    cargo build -p fpheat-py --release
    python3 python/smoke_test.py
"""

import math
import os
import shutil
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_cdylib():
    candidates = [
        os.path.join(REPO, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libfpheat_py.so", "libfpheat_py.dylib", "fpheat_py.dll")
    ]
    for path in candidates:
        if os.path.exists(path):
            return path
    sys.exit(
        "fpheat_py cdylib not found; run `cargo build -p fpheat-py --release` first"
    )


def import_module():
    src = locate_cdylib()
    stage = tempfile.mkdtemp(prefix="fpheat-py-")
    ext = ".pyd" if src.endswith(".dll") else ".so"
    shutil.copy2(src, os.path.join(stage, "fpheat_py" + ext))
    sys.path.insert(0, stage)
    import fpheat_py

    return fpheat_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    fp = import_module()

    # parameter derivation
    prm = fp.Params(0.5, 3.0)
    approx(prm.q_c, 0.5)
    approx(prm.gamma_barrier, 1.0)
    value, strict = prm.alpha_predicted
    assert value == 1.0 and not strict
    prm2 = fp.Params(0.6, 2.0)
    approx(prm2.q_c, -0.2, 1e-12)
    value, strict = prm2.alpha_predicted
    approx(value, 1.0 / 1.2, 1e-12)
    assert strict
    try:
        fp.Params(0.5, 4.0)
        sys.exit("expected p = 4 at s = 0.5 to be rejected")
    except ValueError as e:
        assert "p out of range" in str(e)

    # J_p basics
    approx(fp.j_p(5.0, 2.0), 5.0)
    approx(fp.j_p(-2.0, 3.0), -4.0)

    # field + operator: constant data gives zero
    n = 101
    const = fp.Field(1.0, [2.0] * n, "constant 2")
    v, err = fp.frac_p_laplacian(const, 0.1, prm)
    assert abs(v) < 1e-10, v

    # a smooth bump flows, preserves the max principle, dissipates energy
    xs = [(-1.0 + 2.0 * i / (n - 1)) for i in range(n)]
    bump_vals = [max(0.0, 1.0 - (x / 0.5) ** 2) ** 2 for x in xs]
    bump = fp.Field(1.0, bump_vals, "zero")
    dt = fp.stable_dt(bump, prm)
    assert dt > 0.0
    traj = fp.evolve(bump, prm, 0.004)
    assert len(traj) >= 2
    final = traj.slice(len(traj) - 1)
    assert final.sup_norm() <= bump.sup_norm() + 1e-14
    points, dissipation_ok = fp.energy_trace(traj, prm)
    assert dissipation_ok
    assert points[-1][1] < points[0][1]

    # norms
    tn, _ = fp.tail_norm(fp.Field(1.0, [1.0] * 41, "constant 1"), fp.Params(0.5, 2.0))
    approx(tn, math.pi, 1e-4)
    gs, _ = fp.gagliardo_seminorm(bump, prm)
    assert gs > 0.0

    # inf/sup convolution pair
    tent = fp.Field(2.0, [abs(-2.0 + 4.0 * i / 128) for i in range(129)], "zero")
    lower = fp.inf_convolution(tent, 1.0)
    upper = fp.sup_convolution(tent, 1.0)
    for a, b, c in zip(lower.values, tent.values, upper.values):
        assert a <= b <= c
    approx(lower(1.0), 0.75, 1e-12)  # inf_y |y| + (y-1)^2 = 3/4

    # barrier eta optimization: f = eta + 1/eta minimized at 1
    approx(fp.eta_optimize(1.0, 2.0, 2.0), 1.0)

    # regularity probes on synthetic data
    lin = fp.Field(1.25, [3.0 * (-1.25 + 2.5 * i / 200) for i in range(201)], "zero")
    lip, kappa, r2 = fp.spatial_lipschitz(lin, -0.8, 0.8)
    approx(lip, 3.0, 1e-9)
    approx(kappa, 1.0, 1e-6)
    l_doubling = fp.lipschitz_from_doubling(lin)
    approx(l_doubling, 3.0, 0.05)

    # temporal exponent needs dyadic separations: store exact dyadic times
    dyadic = sorted(0.008 / 2**k for k in range(9))
    traj_dyadic = fp.evolve(bump, prm, 0.008, store_times=dyadic)
    alpha, r2 = fp.temporal_exponent(traj_dyadic, -0.5, 0.5)
    assert alpha > 0.5 and r2 > 0.9, (alpha, r2)

    print("fpheat_py smoke test: OK")


if __name__ == "__main__":
    main()
