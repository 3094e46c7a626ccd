# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory-simulation kernels.

Twin of ``beliefmdp._pykernels``: same inputs, same outputs, and the same
floating-point operation order, so results are bit-identical to the pure
Python path.  Only the inner loops are compiled; RNG stays outside (the
uniforms arrive pre-drawn).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


cdef inline Py_ssize_t _categorical(double u, const double* weights, Py_ssize_t n) except -1:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        acc += weights[i]
        if u < acc:
            return i
    for i in range(n - 1, -1, -1):
        if weights[i] > 0.0:
            return i
    raise ValueError("all-zero weight row")


def run_tree_trajectories(
    const double[::1] p,
    const double[:, ::1] P0,
    const double[:, :, :, ::1] Pflat,
    const double[:, :, ::1] cost,
    double alpha,
    Py_ssize_t T,
    const long long[:, ::1] actions,
    const long long[:, :, ::1] child,
    const long long[::1] root,
    const double[:, ::1] uniforms,
    bint record=False,
):
    cdef Py_ssize_t N = uniforms.shape[0]
    cdef Py_ssize_t nw = P0.shape[0]
    cdef Py_ssize_t ny = P0.shape[1]
    cdef cnp.ndarray totals_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] totals = totals_arr
    cdef cnp.ndarray w_arr, y_arr, a_arr, c_arr
    cdef long long[:, ::1] w_path, y_path, a_path
    cdef double[:, ::1] costs
    if record:
        w_arr = np.empty((N, T + 1), dtype=np.int64)
        y_arr = np.empty((N, T + 1), dtype=np.int64)
        a_arr = np.empty((N, T), dtype=np.int64)
        c_arr = np.empty((N, T), dtype=np.float64)
        w_path, y_path, a_path, costs = w_arr, y_arr, a_arr, c_arr

    cdef Py_ssize_t i, t, w, y, node, a, wy
    cdef double total, apow, c
    for i in range(N):
        w = _categorical(uniforms[i, 0], &p[0], nw)
        y = _categorical(uniforms[i, 1], &P0[w, 0], ny)
        node = <Py_ssize_t> root[y]
        total = 0.0
        apow = 1.0
        if record:
            w_path[i, 0] = w
            y_path[i, 0] = y
        for t in range(T):
            a = <Py_ssize_t> actions[t, node]
            if a < 0:
                raise RuntimeError(f"policy has no action at epoch {t}")
            c = cost[w, y, a]
            total += apow * c
            apow *= alpha
            wy = _categorical(uniforms[i, 2 + t], &Pflat[w, y, a, 0], nw * ny)
            w = wy // ny
            y = wy - w * ny
            node = <Py_ssize_t> child[node, a, y]
            if node < 0:
                raise RuntimeError("sampled an observation outside the edge set")
            if record:
                a_path[i, t] = a
                costs[i, t] = c
                w_path[i, t + 1] = w
                y_path[i, t + 1] = y
        totals[i] = total
    if record:
        return totals_arr, w_arr, y_arr, a_arr, c_arr
    return totals_arr


def run_grid_trajectories(
    const double[::1] p,
    const double[:, ::1] P0,
    const double[:, :, :, :, ::1] Pfull,
    const double[:, :, ::1] cost,
    double alpha,
    Py_ssize_t T,
    const double[:, ::1] vertices,
    const long long[::1] vertex_actions,
    const double[:, ::1] uniforms,
    bint record=False,
):
    cdef Py_ssize_t N = uniforms.shape[0]
    cdef Py_ssize_t nw = P0.shape[0]
    cdef Py_ssize_t ny = P0.shape[1]
    cdef Py_ssize_t V = vertices.shape[0]
    cdef cnp.ndarray totals_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] totals = totals_arr
    cdef cnp.ndarray w_arr, y_arr, a_arr, c_arr
    cdef long long[:, ::1] w_path, y_path, a_path
    cdef double[:, ::1] costs
    if record:
        w_arr = np.empty((N, T + 1), dtype=np.int64)
        y_arr = np.empty((N, T + 1), dtype=np.int64)
        a_arr = np.empty((N, T), dtype=np.int64)
        c_arr = np.empty((N, T), dtype=np.float64)
        w_path, y_path, a_path, costs = w_arr, y_arr, a_arr, c_arr

    cdef cnp.ndarray z_arr = np.empty(nw, dtype=np.float64)
    cdef cnp.ndarray zn_arr = np.empty(nw, dtype=np.float64)
    cdef double[::1] z = z_arr
    cdef double[::1] z_next = zn_arr

    cdef Py_ssize_t i, t, w, y, a, wy, w_new, y_new, j, jj, v, vid
    cdef double total, apow, c, norm, best, d, diff
    for i in range(N):
        w = _categorical(uniforms[i, 0], &p[0], nw)
        y = _categorical(uniforms[i, 1], &P0[w, 0], ny)
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
            a = <Py_ssize_t> vertex_actions[vid]
            c = cost[w, y, a]
            total += apow * c
            apow *= alpha
            wy = _categorical(uniforms[i, 2 + t], &Pfull[w, y, a, 0, 0], nw * ny)
            w_new = wy // ny
            y_new = wy - w_new * ny
            norm = 0.0
            for j in range(nw):
                z_next[j] = 0.0
                for jj in range(nw):
                    z_next[j] += z[jj] * Pfull[jj, y, a, j, y_new]
                norm += z_next[j]
            if norm <= 0.0:
                raise RuntimeError("belief filter lost the realized transition")
            for j in range(nw):
                z[j] = z_next[j] / norm
            w = w_new
            y = y_new
            if record:
                a_path[i, t] = a
                costs[i, t] = c
                w_path[i, t + 1] = w
                y_path[i, t + 1] = y
        totals[i] = total
    if record:
        return totals_arr, w_arr, y_arr, a_arr, c_arr
    return totals_arr
