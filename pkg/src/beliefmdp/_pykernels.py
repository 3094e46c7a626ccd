"""Pure-Python trajectory-simulation kernels.

Reference implementation of the hot inner loops; ``beliefmdp._ckernels``
is the compiled twin.  Both consume pre-drawn uniforms and must perform
float operations in exactly the same order so that results are
bit-identical across backends (the parity test asserts this).

Conventions shared by both backends:

* categorical sampling scans the weight row accumulating partial sums and
  picks the first index whose running sum exceeds the uniform; if rounding
  leaves the total below the uniform, the last positive-weight index wins;
* discounted totals accumulate as ``total += apow * cost`` followed by
  ``apow *= alpha``;
* the belief filter update multiplies prior weights by kernel entries for
  the realized transition and normalizes by the column sum;
* nearest-vertex lookup scans vertices in storage order keeping the first
  strict improvement (ties resolve to the earliest vertex).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _categorical(u: float, weights, n: int) -> int:
    acc = 0.0
    for i in range(n):
        acc += weights[i]
        if u < acc:
            return i
    for i in range(n - 1, -1, -1):
        if weights[i] > 0.0:
            return i
    raise ValueError("all-zero weight row")


def run_tree_trajectories(
    p: np.ndarray,  # (nw,)
    P0: np.ndarray,  # (nw, ny)
    Pflat: np.ndarray,  # (nw, ny, na, nw*ny)
    cost: np.ndarray,  # (nw, ny, na)
    alpha: float,
    T: int,
    actions: np.ndarray,  # (T, n_nodes) action index per epoch, -1 invalid
    child: np.ndarray,  # (n_nodes, na, ny) child node id, -1 invalid
    root: np.ndarray,  # (ny,)
    uniforms: np.ndarray,  # (N, T+2)
    record: bool = False,
):
    """Simulate runs controlled by a compiled policy tree.

    Returns totals of shape (N,); with ``record`` also index paths
    (w_path (N, T+1), y_path (N, T+1), a_path (N, T), costs (N, T)).
    """
    N = uniforms.shape[0]
    nw, ny = P0.shape
    totals = np.empty(N)
    if record:
        w_path = np.empty((N, T + 1), dtype=np.int64)
        y_path = np.empty((N, T + 1), dtype=np.int64)
        a_path = np.empty((N, T), dtype=np.int64)
        costs = np.empty((N, T))
    for i in range(N):
        u = uniforms[i]
        w = _categorical(u[0], p, nw)
        y = _categorical(u[1], P0[w], ny)
        node = int(root[y])
        total = 0.0
        apow = 1.0
        if record:
            w_path[i, 0] = w
            y_path[i, 0] = y
        for t in range(T):
            a = int(actions[t, node])
            if a < 0:
                raise RuntimeError(f"policy has no action at epoch {t}")
            c = cost[w, y, a]
            total += apow * c
            apow *= alpha
            wy = _categorical(u[2 + t], Pflat[w, y, a], nw * ny)
            w = wy // ny
            y = wy - w * ny
            node = int(child[node, a, y])
            if node < 0:
                raise RuntimeError("sampled an observation outside the edge set")
            if record:
                a_path[i, t] = a
                costs[i, t] = c
                w_path[i, t + 1] = w
                y_path[i, t + 1] = y
        totals[i] = total
    if record:
        return totals, w_path, y_path, a_path, costs
    return totals


def run_grid_trajectories(
    p: np.ndarray,  # (nw,)
    P0: np.ndarray,  # (nw, ny)
    Pfull: np.ndarray,  # (nw, ny, na, nw, ny)
    cost: np.ndarray,  # (nw, ny, na)
    alpha: float,
    T: int,
    vertices: np.ndarray,  # (V, nw) vertex coordinates
    vertex_actions: np.ndarray,  # (V,)
    uniforms: np.ndarray,  # (N, T+2)
    record: bool = False,
):
    """Simulate runs under a stationary grid policy with a belief filter.

    The filter starts from the Bayes update of p on the initial
    observation and is updated each step with the realized observation.
    """
    N = uniforms.shape[0]
    nw, ny = P0.shape
    V = vertices.shape[0]
    totals = np.empty(N)
    if record:
        w_path = np.empty((N, T + 1), dtype=np.int64)
        y_path = np.empty((N, T + 1), dtype=np.int64)
        a_path = np.empty((N, T), dtype=np.int64)
        costs = np.empty((N, T))
    z = np.empty(nw)
    z_next = np.empty(nw)
    for i in range(N):
        u = uniforms[i]
        w = _categorical(u[0], p, nw)
        y = _categorical(u[1], P0[w], ny)
        norm = 0.0
        for j in range(nw):
            z[j] = p[j] * P0[j, y]
            norm += z[j]
        if norm > 0.0:
            for j in range(nw):
                z[j] /= norm
        else:
            for j in range(nw):
                z[j] = p[j]
        total = 0.0
        apow = 1.0
        if record:
            w_path[i, 0] = w
            y_path[i, 0] = y
        for t in range(T):
            best = np.inf
            vid = 0
            for v in range(V):
                d = 0.0
                for j in range(nw):
                    diff = vertices[v, j] - z[j]
                    d += diff if diff >= 0.0 else -diff
                if d < best:
                    best = d
                    vid = v
            a = int(vertex_actions[vid])
            c = cost[w, y, a]
            total += apow * c
            apow *= alpha
            wy = _categorical(u[2 + t], Pfull[w, y, a].reshape(-1), nw * ny)
            w_new = wy // ny
            y_new = wy - w_new * ny
            norm = 0.0
            for j in range(nw):
                z_next[j] = 0.0
                for jj in range(nw):
                    z_next[j] += z[jj] * Pfull[jj, y, a, j, y_new]
                norm += z_next[j]
            if norm <= 0.0:
                # Unreachable for sampled transitions: the filter gives the
                # realized state positive weight, so the column has mass.
                raise RuntimeError("belief filter lost the realized transition")
            for j in range(nw):
                z[j] = z_next[j] / norm
            w, y = w_new, y_new
            if record:
                a_path[i, t] = a
                costs[i, t] = c
                w_path[i, t + 1] = w
                y_path[i, t + 1] = y
        totals[i] = total
    if record:
        return totals, w_path, y_path, a_path, costs
    return totals
