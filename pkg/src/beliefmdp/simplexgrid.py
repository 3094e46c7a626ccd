"""Regular simplex lattice and barycentric interpolation.

The lattice at resolution k consists of all probability vectors whose
entries are multiples of 1/k.  Interpolation uses the Freudenthal (Kuhn)
triangulation: a query point is sent to staircase coordinates
u_j = k * sum_{i >= j} z_i, whose integer part plus sorted fractional
parts determine the containing simplex and the barycentric weights.  The
scheme reproduces affine functions exactly and is exact at lattice points.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

__all__ = ["SimplexGrid"]

#: Staircase coordinates this close to an integer are treated as exact.
_SNAP = 1e-9


class SimplexGrid:
    """Lattice {z : z_i = n_i / k} over a d-dimensional simplex."""

    def __init__(self, dim: int, resolution: int):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        if resolution < 1:
            raise ValueError("resolution must be at least 1")
        self.dim = dim
        self.k = resolution
        self.vertices = self._lattice(dim, resolution)
        self._index = {tuple(v): i for i, v in enumerate(self.vertices)}

    @staticmethod
    def _lattice(dim: int, k: int) -> np.ndarray:
        """All compositions of k into dim nonnegative parts, lexicographic."""
        combs = combinations(range(k + dim - 1), dim - 1)
        out = np.empty((_binom(k + dim - 1, dim - 1), dim), dtype=np.int64)
        for row, cut in enumerate(combs):
            prev = -1
            for j, c in enumerate(cut):
                out[row, j] = c - prev - 1
                prev = c
            out[row, dim - 1] = k + dim - 2 - prev
        return out

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def points(self) -> np.ndarray:
        """Vertex coordinates as probability vectors."""
        return self.vertices / self.k

    def vertex_id(self, composition) -> int:
        return self._index[tuple(int(c) for c in composition)]

    def barycentric(self, z: np.ndarray) -> list[tuple[int, float]]:
        """Vertex ids and convex weights reconstructing z.

        Weights are nonnegative, sum to one, and at most dim of them are
        returned (zero-weight corners of the containing cell are dropped).
        """
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"point must have {self.dim} coordinates")
        if self.dim == 1:
            return [(0, 1.0)]
        k = self.k
        # Staircase coordinates: u_j = k * sum_{i>=j} z_i; u_0 == k.
        u = k * np.cumsum(z[::-1])[::-1]
        u[0] = float(k)  # exact by construction; avoids summation dust
        base = np.floor(u).astype(np.int64)
        frac = u - base
        # Snap staircase coordinates that are within rounding dust of an
        # integer, so lattice points map to single vertices exactly.
        snap_up = frac > 1.0 - _SNAP
        base[snap_up] += 1
        frac[snap_up] = 0.0
        frac[frac < _SNAP] = 0.0
        # Clamp overshoot from cumsum rounding.
        over = base > k
        base[over] = k
        frac[over] = 0.0
        # Sort fractional parts descending; stable on ties by index.
        order = np.argsort(-frac, kind="stable")
        weights = np.empty(self.dim + 1)
        weights[0] = 1.0 - frac[order[0]] if self.dim else 1.0
        for m in range(self.dim - 1):
            weights[m + 1] = frac[order[m]] - frac[order[m + 1]]
        weights[self.dim] = frac[order[-1]]

        out: list[tuple[int, float]] = []
        corner = base.copy()
        for m in range(self.dim + 1):
            w = float(weights[m])
            if w > 0.0:
                comp = self._u_to_composition(corner)
                out.append((self._index[tuple(comp)], w))
            if m < self.dim:
                corner = corner.copy()
                corner[order[m]] += 1
        return out

    def _u_to_composition(self, u: np.ndarray) -> np.ndarray:
        comp = np.empty(self.dim, dtype=np.int64)
        comp[:-1] = u[:-1] - u[1:]
        comp[-1] = u[-1]
        return comp

    def interpolate(self, values: np.ndarray, z: np.ndarray) -> float:
        """Barycentric interpolation of per-vertex values at z."""
        return float(
            sum(w * values[i] for i, w in self.barycentric(z))
        )

    def nearest_vertex(self, z: np.ndarray) -> int:
        """Index of the L1-nearest lattice vertex; ties resolve to the
        lexicographically smallest composition (the storage order)."""
        z = np.asarray(z, dtype=float)
        dists = np.abs(self.points - z).sum(axis=1)
        return int(np.argmin(dists))


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)
