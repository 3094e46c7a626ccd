#!/usr/bin/env python3
"""Benchmark: compiled vs pure-Python simulation kernels.

Times the two kernel backends on identical pre-drawn uniforms for the two
policy representations (policy tree with node tables; stationary grid
policy with a per-step Bayes filter and nearest-vertex lookup).  Outputs
only depend on the inputs, so both backends produce bit-identical totals;
the parity is asserted before timing is reported.

Run:  python3 benchmarks/bench_backends.py [--runs N] [--horizon T]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from beliefmdp import _pykernels
from beliefmdp.measures import Dist, FiniteSpace
from beliefmdp.models import PlatzmanModel
from beliefmdp.runtime import lift_policy
from beliefmdp.solver import finite_horizon_solve, infinite_horizon_grid_solve

try:
    from beliefmdp import _ckernels
except ImportError:
    _ckernels = None


def make_model(rng, nw=3, ny=2, na=2, discount=0.9):
    W = FiniteSpace(tuple(f"w{i}" for i in range(nw)))
    Y = FiniteSpace(tuple(f"y{i}" for i in range(ny)))
    A = FiniteSpace(tuple(f"a{i}" for i in range(na)))
    P = rng.dirichlet(np.ones(nw * ny), size=(nw, na)).reshape(nw, na, nw, ny)
    P0 = rng.dirichlet(np.ones(ny), size=nw)
    base = rng.uniform(0, 5, size=(nw, na))
    cost = np.repeat(base[:, None, :], ny, axis=1)
    return PlatzmanModel(W, Y, A, P, P0, cost, discount)


def time_call(fn, *args, repeats=1):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_tree(rng, n_runs, horizon):
    model = make_model(rng)
    p = Dist.uniform(model.W)
    sol = finite_horizon_solve(model, p, horizon, 0.9)
    lifted = lift_policy(model, sol.policy, p)
    args = lifted.kernel_args()
    uniforms = rng.random((n_runs, horizon + 2))
    call_args = (
        np.ascontiguousarray(p.weights),
        args["P0"],
        args["Pflat"],
        args["cost"],
        0.9,
        horizon,
        np.ascontiguousarray(args["actions"][:horizon]),
        args["child"],
        args["root"],
        uniforms,
    )
    return call_args


def bench_grid(rng, n_runs, horizon, k=20):
    model = make_model(rng)
    p = Dist.uniform(model.W)
    sol = infinite_horizon_grid_solve(model, k, 0.9, 1e-6)
    lifted = lift_policy(model, sol.policy, p)
    args = lifted.kernel_args()
    uniforms = rng.random((n_runs, horizon + 2))
    call_args = (
        np.ascontiguousarray(p.weights),
        args["P0"],
        args["Pfull"],
        args["cost"],
        0.9,
        horizon,
        args["vertices"],
        args["vertex_actions"],
        uniforms,
    )
    return call_args


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=20_000)
    ap.add_argument("--grid-runs", type=int, default=2_000)
    ap.add_argument("--horizon", type=int, default=5)
    ap.add_argument("--grid-horizon", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    for name, builder, fn_name, n_runs, horizon in (
        ("policy tree", bench_tree, "run_tree_trajectories", args.runs, args.horizon),
        (
            "grid + filter",
            bench_grid,
            "run_grid_trajectories",
            args.grid_runs,
            args.grid_horizon,
        ),
    ):
        call_args = builder(rng, n_runs, horizon)
        t_py, out_py = time_call(getattr(_pykernels, fn_name), *call_args)
        if _ckernels is not None:
            t_c, out_c = time_call(getattr(_ckernels, fn_name), *call_args, repeats=3)
            assert np.array_equal(out_py, out_c), "backends disagree!"
            rows.append((name, n_runs, horizon, t_py, t_c, t_py / t_c))
        else:
            rows.append((name, n_runs, horizon, t_py, None, None))

    print(f"{'workload':>14} {'runs':>7} {'T':>3} {'python':>10} "
          f"{'compiled':>10} {'speedup':>8}")
    for name, n_runs, horizon, t_py, t_c, speedup in rows:
        if t_c is None:
            print(
                f"{name:>14} {n_runs:>7} {horizon:>3} {t_py:>9.3f}s "
                f"{'n/a':>10} {'n/a':>8}"
            )
        else:
            print(
                f"{name:>14} {n_runs:>7} {horizon:>3} {t_py:>9.3f}s "
                f"{t_c:>9.3f}s {speedup:>7.1f}x"
            )
    if _ckernels is None:
        print("\ncompiled backend unavailable; install with Cython to compare")


if __name__ == "__main__":
    main()
