"""d-dimensional Delaunay triangulation via paraboloid lifting.

Points are lifted by appending sum(x_i^2); the lower convex hull of the
lifted cloud, projected back down, is the Delaunay triangulation.  One hull
code path therefore serves every dimension.  Degenerate configurations
(cospherical ties, flat lifted clouds) are resolved by a deterministic
random joggle of relative magnitude ~1e-9 whose seed is recorded on the
result, so identical inputs and seed reproduce identical triangulations.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .config import GeometryOptions
from .errors import DegenerateCloudError, TooFewPointsError

__all__ = [
    "Simplex",
    "Triangulation",
    "delaunay_triangulate",
    "enumerate_faces",
    "circumsphere_violations",
    "affine_rank",
    "affine_span_coordinates",
    "circumspheres",
    "geometric_dedup",
]


@dataclass(frozen=True, order=True)
class Simplex:
    """A face of the triangulation: sorted, distinct vertex indices."""

    vertex_indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.vertex_indices))
        if len(set(idx)) != len(idx):
            raise ValueError(f"repeated vertex index in {idx}")
        object.__setattr__(self, "vertex_indices", idx)

    @property
    def dim(self) -> int:
        return len(self.vertex_indices) - 1

    def faces(self, max_dim: int):
        for size in range(1, min(max_dim + 1, len(self.vertex_indices)) + 1):
            yield from itertools.combinations(self.vertex_indices, size)


@dataclass
class Triangulation:
    """Full-dimensional Delaunay cells plus the joggle seed, if one was used."""

    simplices: list[Simplex]
    perturbation_seed: int | None = None
    stats: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "cells": [list(s.vertex_indices) for s in self.simplices],
            "perturbation_seed": self.perturbation_seed,
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def geometric_dedup(points: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Indices of the retained points after merging near-coincident ones.

    The first occurrence wins; "near" means within rel_tol of the cloud's
    coordinate span.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] == 0:
        return np.zeros(0, dtype=int)
    span = float(np.ptp(pts, axis=0).max()) if pts.shape[0] > 1 else 1.0
    threshold = rel_tol * max(span, 1.0)
    kept: list[int] = []
    for i in range(pts.shape[0]):
        if not any(np.linalg.norm(pts[i] - pts[j]) <= threshold for j in kept):
            kept.append(i)
    return np.asarray(kept, dtype=int)


def affine_rank(points: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Dimension of the affine hull of the cloud."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] <= 1:
        return 0
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def affine_span_coordinates(points: np.ndarray, rank: int) -> np.ndarray:
    """Coordinates of the points within an orthonormal basis of their span.

    Used by callers that must triangulate a rank-deficient cloud: project
    down, triangulate in ``rank`` dimensions, keep the original indices.
    """
    pts = np.asarray(points, dtype=float)
    mean = pts.mean(axis=0)
    centered = pts - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return centered @ vt[:rank].T


def _lift(points: np.ndarray) -> np.ndarray:
    return np.hstack([points, (points**2).sum(axis=1, keepdims=True)])


def _lower_hull_cells(points: np.ndarray) -> list[tuple[int, ...]]:
    """Delaunay cells of ``points`` as index tuples, via the lifted hull."""
    n, k = points.shape
    if n == k + 1:
        # a single full-dimensional simplex is its own triangulation
        return [tuple(range(n))]
    hull = ConvexHull(_lift(points))
    normals = hull.equations[:, :-1]
    lower = normals[:, k] < -1e-9
    cells = []
    span = max(float(np.ptp(points, axis=0).max()), 1e-30)
    vol_tol = (1e-10 * span) ** k
    for cell in hull.simplices[lower]:
        edges = points[cell[1:]] - points[cell[0]]
        if abs(np.linalg.det(edges)) > vol_tol:
            cells.append(tuple(sorted(int(i) for i in cell)))
    return sorted(set(cells))


def circumspheres(points: np.ndarray, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumcenters and radii for an array of (k+1)-vertex cells."""
    pts = np.asarray(points, dtype=float)
    cells = np.asarray(cells, dtype=int)
    p0 = pts[cells[:, 0]]
    rel = pts[cells[:, 1:]] - p0[:, None, :]
    rhs = 0.5 * (rel**2).sum(axis=2)
    offsets = np.linalg.solve(rel, rhs[..., None])[..., 0]
    centers = p0 + offsets
    radii = np.linalg.norm(centers - p0, axis=1)
    return centers, radii


def _cospherical_tie(points: np.ndarray, cells: list[tuple[int, ...]], rel_tol: float) -> bool:
    """True when some non-vertex point sits on a cell's circumsphere boundary."""
    cell_arr = np.asarray(cells, dtype=int)
    centers, radii = circumspheres(points, cell_arr)
    dists = np.linalg.norm(points[None, :, :] - centers[:, None, :], axis=2)
    tol = np.maximum(rel_tol * radii, 1e-300)[:, None]
    on_boundary = np.abs(dists - radii[:, None]) <= tol
    for row, cell in zip(on_boundary, cell_arr):
        row = row.copy()
        row[cell] = False
        if row.any():
            return True
    return False


def delaunay_triangulate(points: np.ndarray, opts: GeometryOptions | None = None) -> Triangulation:
    """Delaunay triangulation of an (n, k) point matrix, k >= 2.

    Raises TooFewPointsError when fewer than k+1 distinct points remain
    after deduplication, and DegenerateCloudError when the cloud spans
    fewer than k dimensions (callers should project onto the affine span
    and triangulate there).
    """
    opts = opts or GeometryOptions()
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise DegenerateCloudError("need an (n, k) matrix with k >= 2")
    n, k = pts.shape
    keep = geometric_dedup(pts, opts.dedup_rel_tol)
    upts = pts[keep]
    if upts.shape[0] <= k:
        raise TooFewPointsError(
            f"triangulation needs at least {k + 1} distinct points, got {upts.shape[0]}"
        )
    rank = affine_rank(upts)
    if rank < k:
        raise DegenerateCloudError(
            f"points span only {rank} of {k} dimensions; "
            "project onto the affine span and triangulate there"
        )

    seed_used: int | None = None
    try:
        cells = _lower_hull_cells(upts)
        if not cells or _cospherical_tie(upts, cells, opts.boundary_rel_tol):
            raise QhullError("degenerate configuration")
    except (QhullError, np.linalg.LinAlgError):
        rng = np.random.default_rng(opts.seed)
        span = np.maximum(np.ptp(upts, axis=0), 1.0)
        joggled = upts + rng.uniform(-1.0, 1.0, upts.shape) * (opts.joggle_rel_magnitude * span)
        cells = _lower_hull_cells(joggled)
        seed_used = opts.seed

    simplices = [Simplex(tuple(int(keep[i]) for i in cell)) for cell in cells]
    simplices.sort()
    return Triangulation(
        simplices=simplices,
        perturbation_seed=seed_used,
        stats={"input_points": int(n), "distinct_points": int(upts.shape[0])},
    )


def path_triangulation(coords: np.ndarray, dedup_rel_tol: float = 1e-12) -> Triangulation:
    """Triangulation of a 1-dimensional cloud: consecutive-point segments.

    ``coords`` is an (n,) or (n, 1) array of positions along a line; the
    cells connect each point to its successor in sorted order.
    """
    values = np.asarray(coords, dtype=float).reshape(-1)
    keep = geometric_dedup(values.reshape(-1, 1), dedup_rel_tol)
    if keep.size < 2:
        raise TooFewPointsError("a path needs at least two distinct points")
    order = keep[np.argsort(values[keep], kind="stable")]
    simplices = [Simplex((int(a), int(b))) for a, b in zip(order[:-1], order[1:])]
    simplices.sort()
    return Triangulation(
        simplices=simplices,
        perturbation_seed=None,
        stats={"input_points": int(values.size), "distinct_points": int(keep.size)},
    )


def enumerate_faces(tri: Triangulation, max_dim: int) -> list[Simplex]:
    """All distinct faces of dimension <= max_dim, lexicographically sorted."""
    seen: set[tuple[int, ...]] = set()
    for cell in tri.simplices:
        seen.update(cell.faces(max_dim))
    return [Simplex(t) for t in sorted(seen)]


def circumsphere_violations(
    tri: Triangulation, points: np.ndarray, rel_tol: float = 1e-7
) -> list[tuple[int, int]]:
    """(cell_index, point_index) pairs where a point is strictly inside a
    cell's circumsphere beyond tolerance; empty iff the triangulation is
    Delaunay for ``points`` up to that tolerance."""
    pts = np.asarray(points, dtype=float)
    if not tri.simplices:
        return []
    cell_arr = np.asarray([s.vertex_indices for s in tri.simplices], dtype=int)
    centers, radii = circumspheres(pts, cell_arr)
    dists = np.linalg.norm(pts[None, :, :] - centers[:, None, :], axis=2)
    tol = np.maximum(rel_tol * radii, 1e-300)[:, None]
    inside = dists < radii[:, None] - tol
    violations = []
    for ci, (row, cell) in enumerate(zip(inside, cell_arr)):
        row = row.copy()
        row[cell] = False
        for pi in np.nonzero(row)[0]:
            violations.append((ci, int(pi)))
    return violations
