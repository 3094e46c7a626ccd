"""Bit-identity between the compiled and pure-Python simulation kernels."""

import os
import subprocess
import sys

import numpy as np
import pytest
from genmodels import random_mdpii, random_platzman, random_prior

from beliefmdp import _pykernels
from beliefmdp.measures import Dist
from beliefmdp.runtime import lift_policy, simulate
from beliefmdp.solver import finite_horizon_solve, infinite_horizon_grid_solve

ckernels = pytest.importorskip(
    "beliefmdp._ckernels", reason="compiled kernels not built"
)


def tree_inputs(seed=0, N=2000, T=3):
    rng = np.random.default_rng(seed)
    m = random_mdpii(rng, nw=3, ny=2, na=2)
    p = random_prior(rng, m.W)
    policy = finite_horizon_solve(m, p, T, 0.9).policy
    lifted = lift_policy(m, policy, p)
    args = lifted.kernel_args()
    uniforms = np.random.default_rng(seed + 1).random((N, T + 2))
    return (
        np.ascontiguousarray(p.weights),
        args["P0"],
        args["Pflat"],
        args["cost"],
        0.9,
        T,
        np.ascontiguousarray(args["actions"][:T]),
        args["child"],
        args["root"],
        uniforms,
    )


def grid_inputs(seed=0, N=1000, T=10):
    rng = np.random.default_rng(seed)
    m = random_platzman(rng, nw=3, ny=2, na=2, obs_free_cost=True, discount=0.9)
    sol = infinite_horizon_grid_solve(m, 6, 0.9, 1e-6)
    p = Dist.uniform(m.W)
    lifted = lift_policy(m, sol.policy, p)
    args = lifted.kernel_args()
    uniforms = np.random.default_rng(seed + 1).random((N, T + 2))
    return (
        np.ascontiguousarray(p.weights),
        args["P0"],
        args["Pfull"],
        args["cost"],
        0.9,
        T,
        args["vertices"],
        args["vertex_actions"],
        uniforms,
    )


@pytest.mark.parametrize("seed", range(3))
def test_tree_kernel_parity(seed):
    inputs = tree_inputs(seed)
    totals_c = ckernels.run_tree_trajectories(*inputs)
    totals_py = _pykernels.run_tree_trajectories(*inputs)
    assert np.array_equal(totals_c, totals_py)  # bitwise


def test_tree_kernel_parity_with_records():
    inputs = tree_inputs(7, N=200)
    out_c = ckernels.run_tree_trajectories(*inputs, record=True)
    out_py = _pykernels.run_tree_trajectories(*inputs, record=True)
    for a, b in zip(out_c, out_py):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("seed", range(3))
def test_grid_kernel_parity(seed):
    inputs = grid_inputs(seed)
    totals_c = ckernels.run_grid_trajectories(*inputs)
    totals_py = _pykernels.run_grid_trajectories(*inputs)
    assert np.array_equal(totals_c, totals_py)


def test_pure_env_var_selects_python_backend():
    code = (
        "from beliefmdp._backend import BACKEND; print(BACKEND)"
    )
    env = dict(os.environ, BELIEFMDP_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )
    assert out.stdout.strip() == "python"
    env.pop("BELIEFMDP_PURE")
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )
    assert out.stdout.strip() == "compiled"


def test_simulation_identical_across_backends():
    # End-to-end: simulate through the runtime under both backends in
    # subprocesses and compare the reprs of the trajectories.
    script = r"""
import numpy as np
from beliefmdp.measures import Dist, FiniteSpace
from beliefmdp.models import PlatzmanModel
from beliefmdp.solver import finite_horizon_solve
from beliefmdp.runtime import simulate, monte_carlo_value, BACKEND
rng = np.random.default_rng(5)
P = rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2)
m = PlatzmanModel(
    FiniteSpace(("w0", "w1")), FiniteSpace(("y0", "y1")), FiniteSpace(("a0", "a1")),
    P, rng.dirichlet(np.ones(2), size=2), rng.uniform(0, 5, (2, 2, 2)), 1.0)
p = Dist(m.W, rng.dirichlet(np.ones(2)))
sol = finite_horizon_solve(m, p, 3, 1.0)
traj = simulate(m, sol.policy, p, 3, 1.0, seed=17)
mc = monte_carlo_value(m, sol.policy, p, 3, 1.0, 400, seed=3)
print(repr((traj.steps, traj.discounted_total, mc)))
"""
    outs = {}
    for name, env_extra in (("compiled", {}), ("python", {"BELIEFMDP_PURE": "1"})):
        env = dict(os.environ)
        env.pop("BELIEFMDP_PURE", None)
        env.update(env_extra)
        res = subprocess.run(
            [sys.executable, "-c", script], capture_output=True, text=True, env=env
        )
        assert res.returncode == 0, res.stderr
        outs[name] = res.stdout
    assert outs["compiled"] == outs["python"]
