"""Selection of Delaunay faces into an inherently nondominated approximation.

The pipeline: triangulate the given mutually nondominated outcomes, pool
every face of dimension 0..k-1 as interpolation candidates, greedily keep
the faces that introduce no dominating pair (internally, against the given
outcomes, or against faces kept earlier), then drop faces whose vertex set
is contained in a larger kept face.  The union of the survivors is the
Pareto front approximation; each survivor is a simplicial polytope with at
most k vertices.

Pairwise dominance between polytopes is decided by a small LP
(``lp.max_dominating_gap``) in normalized objective space.  Two structural
facts keep the greedy pass cheap:

* a face whose vertex set is contained in an already-kept face inherits
  every clearance of that face (its hull is a subset), so it is accepted
  without solving anything and later removed as a subset polytope;
* a face never needs testing against its own vertices: those tests are
  dominated by the self-test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .config import FilterOptions, GeometryOptions, PaintConfig
from .errors import ContractError, NumericalError, PaintError, TooFewPointsError
from .geometry import Simplex, Triangulation
from .lp import max_dominating_gap
from .outcomes import OutcomeSet, compute_ranges, nondominated_mask

__all__ = [
    "Approximation",
    "candidate_faces",
    "filter_inherently_nondominated",
    "remove_subset_polytopes",
    "build_approximation",
    "update_approximation",
    "sample_polytope_points",
    "point_in_polytope",
]


@dataclass
class Approximation:
    """The accepted polytopes over a set of given Pareto optimal outcomes."""

    outcome_set: OutcomeSet
    polytopes: list[Simplex]
    stats: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.outcome_set.k

    def to_json_dict(self) -> dict:
        return {
            "outcomes": self.outcome_set.to_json_dict(),
            "polytopes": [list(s.vertex_indices) for s in self.polytopes],
            "stats": self.stats,
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Approximation":
        from .outcomes import parse_outcome_set

        outcome_set = parse_outcome_set(json.dumps(doc["outcomes"]), "json")
        polytopes = [Simplex(tuple(p)) for p in doc["polytopes"]]
        return cls(outcome_set=outcome_set, polytopes=polytopes, stats=doc.get("stats", {}))


def candidate_faces(tri: Triangulation, k: int) -> list[Simplex]:
    """Faces of dimension 0..k-1 (vertex counts 1..k), deduplicated, sorted."""
    return geometry.enumerate_faces(tri, max_dim=k - 1)


def _greedy_order(candidates: list[Simplex]) -> list[Simplex]:
    # decreasing dimension, lexicographic vertex order inside a dimension
    return sorted(candidates, key=lambda s: (-s.dim, s.vertex_indices))


def filter_inherently_nondominated(
    candidates: list[Simplex],
    outcome_set: OutcomeSet,
    tol: float = 1e-7,
    stats: dict | None = None,
) -> list[Simplex]:
    """Greedy acceptance of candidate faces that keep the union nondominated.

    Vertices (the given outcomes) are accepted unconditionally first; the
    remaining faces are visited largest-dimension-first and kept iff they
    contain no internal dominating pair and neither dominate nor are
    dominated by anything accepted before them.
    """
    stats = stats if stats is not None else {}
    ranges = compute_ranges(outcome_set)
    verts = ranges.normalize(outcome_set.points)

    vertices = [c for c in candidates if c.dim == 0]
    faces = _greedy_order([c for c in candidates if c.dim > 0])

    accepted: list[Simplex] = list(vertices)
    # only faces that are maximal so far need LP work; subset faces inherit
    # every clearance of their superset
    maximal: list[Simplex] = []
    maximal_sets: list[frozenset[int]] = []
    covered_vertices: set[int] = set()
    lp_failures = 0

    for cand in faces:
        cset = frozenset(cand.vertex_indices)
        if any(cset <= mset for mset in maximal_sets):
            accepted.append(cand)  # hull contained in a cleared face
            continue
        try:
            self_gap = max_dominating_gap(cand.vertex_indices, cand.vertex_indices, verts, tol)
            ok = self_gap is None or self_gap <= tol
            if ok:
                for other in maximal:
                    gap = max_dominating_gap(cand.vertex_indices, other.vertex_indices, verts, tol)
                    if gap is not None and gap > tol:
                        ok = False
                        break
                    gap = max_dominating_gap(other.vertex_indices, cand.vertex_indices, verts, tol)
                    if gap is not None and gap > tol:
                        ok = False
                        break
            if ok:
                # vertices not part of the candidate or of a cleared maximal
                # face still need both directions
                for vi in range(verts.shape[0]):
                    if vi in cset or vi in covered_vertices:
                        continue
                    gap = max_dominating_gap(cand.vertex_indices, (vi,), verts, tol)
                    if gap is not None and gap > tol:
                        ok = False
                        break
                    gap = max_dominating_gap((vi,), cand.vertex_indices, verts, tol)
                    if gap is not None and gap > tol:
                        ok = False
                        break
        except NumericalError:
            lp_failures += 1
            continue
        if ok:
            accepted.append(cand)
            maximal.append(cand)
            maximal_sets.append(cset)
            covered_vertices.update(cset)

    stats["lp_failures"] = lp_failures
    return accepted


def remove_subset_polytopes(accepted: list[Simplex]) -> list[Simplex]:
    """Drop every face whose vertex set is a strict subset of another's."""
    sets = [frozenset(s.vertex_indices) for s in accepted]
    keep = []
    for i, si in enumerate(sets):
        if not any(si < sj for j, sj in enumerate(sets) if j != i):
            keep.append(accepted[i])
    return sorted(set(keep))


def build_approximation(
    outcome_set: OutcomeSet, config: PaintConfig | None = None
) -> Approximation:
    """Run the full pipeline on a mutually nondominated outcome set."""
    config = config or PaintConfig()
    n, k = outcome_set.n, outcome_set.k
    if n < k + 1:
        raise TooFewPointsError(f"need at least k+1 = {k + 1} outcomes, got {n}")
    mask = nondominated_mask(outcome_set.points, config.dominance_tolerance)
    if not mask.all():
        bad = np.nonzero(~mask)[0].tolist()
        raise ContractError(f"outcome set contains dominated points at rows {bad}")

    points = outcome_set.points
    rank = geometry.affine_rank(points)
    if rank >= k:
        tri = geometry.delaunay_triangulate(points, config.geometry)
    elif rank >= 2:
        # flat cloud: triangulate inside its affine span, keep original indices
        span_coords = geometry.affine_span_coordinates(points, rank)
        tri = geometry.delaunay_triangulate(span_coords, config.geometry)
    elif rank == 1:
        span_coords = geometry.affine_span_coordinates(points, 1)
        tri = geometry.path_triangulation(span_coords, config.geometry.dedup_rel_tol)
    else:
        raise ContractError("all outcomes coincide; nothing to interpolate")
    candidates = candidate_faces(tri, k)
    filter_stats: dict = {}
    accepted = filter_inherently_nondominated(
        candidates, outcome_set, config.filter.gap_tolerance, filter_stats
    )
    polytopes = remove_subset_polytopes(accepted)

    stats = {
        "points": int(n),
        "distinct_points": tri.stats.get("distinct_points", int(n)),
        "affine_rank": int(rank),
        "cells": len(tri.simplices),
        "candidates": len(candidates),
        "accepted": len(accepted),
        "polytopes": len(polytopes),
        "lp_failures": filter_stats.get("lp_failures", 0),
        "perturbation_seed": tri.perturbation_seed,
    }
    return Approximation(outcome_set=outcome_set, polytopes=polytopes, stats=stats)


def update_approximation(
    approx: Approximation, new_outcomes: OutcomeSet, config: PaintConfig | None = None
) -> tuple[Approximation, list[str]]:
    """Merge new outcomes into the given set and rebuild.

    New points dominated by the union are rejected; old points dominated by
    a new point are dropped.  Both events produce warnings.  Returns the
    rebuilt approximation (or the original, untouched, when every new point
    was rejected) plus the warnings.
    """
    config = config or PaintConfig()
    old = approx.outcome_set
    if [s.name for s in new_outcomes.specs] != [s.name for s in old.specs]:
        raise ContractError("new outcomes declare different objectives")
    tol = config.dominance_tolerance
    warnings: list[str] = []

    # an outcome already in the set adds nothing; drop it up front
    scale = max(float(np.abs(old.points).max()), 1.0)
    fresh = []
    for i in range(new_outcomes.n):
        row = new_outcomes.points[i]
        if np.any(np.all(np.abs(old.points - row) <= 1e-12 * scale, axis=1)):
            warnings.append(f"new outcome {i} is already in the set; skipped")
        else:
            fresh.append(i)

    merged_points = np.vstack([old.points, new_outcomes.points[fresh]])
    merged_prov = list(old.provenance) + [new_outcomes.provenance[i] for i in fresh]
    mask = nondominated_mask(merged_points, tol)

    n_old = old.n
    rejected_new = [i for i in range(n_old, merged_points.shape[0]) if not mask[i]]
    dropped_old = [i for i in range(n_old) if not mask[i]]
    for i in rejected_new:
        warnings.append(f"new outcome {fresh[i - n_old]} is dominated; rejected")
    if len(rejected_new) == len(fresh):
        return approx, warnings
    for i in dropped_old:
        warnings.append(f"existing outcome {i} is dominated by a new outcome; dropped")

    merged = OutcomeSet(
        specs=old.specs,
        points=merged_points[mask],
        provenance=[p for p, keep in zip(merged_prov, mask) if keep],
    )
    return build_approximation(merged, config), warnings


def sample_polytope_points(
    approx: Approximation, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform barycentric samples from uniformly chosen polytopes (canonical space)."""
    points = approx.outcome_set.points
    out = np.empty((count, approx.k))
    choices = rng.integers(0, len(approx.polytopes), size=count)
    for row, poly_idx in enumerate(choices):
        verts = points[list(approx.polytopes[poly_idx].vertex_indices)]
        w = rng.dirichlet(np.ones(verts.shape[0]))
        out[row] = w @ verts
    return out


def point_in_polytope(
    point: np.ndarray, simplex: Simplex, points: np.ndarray, tol: float = 1e-8
) -> bool:
    """Membership of a point in conv(simplex vertices) via least squares.

    The simplices here are affinely independent, so barycentric coordinates
    are unique; membership means nonnegative coordinates and zero residual.
    """
    verts = np.asarray(points, dtype=float)[list(simplex.vertex_indices)]
    c = verts.shape[0]
    a = np.vstack([verts.T, np.ones(c)])
    b = np.concatenate([np.asarray(point, dtype=float), [1.0]])
    lam, *_ = np.linalg.lstsq(a, b, rcond=None)
    scale = max(1.0, float(np.abs(verts).max()))
    return bool(np.all(lam >= -tol) and np.linalg.norm(a @ lam - b) <= tol * scale)
