"""Partition of superposed axis-aligned meshes into smooth integration regions.

Breakpoint coordinates of all meshes are pooled per axis, merged within a
tolerance, and the Cartesian product of adjacent intervals forms candidate
boxes.  Each candidate is classified by locating its midpoint in every mesh;
candidates that fail the selection criterion are dropped.  The interior of a
surviving region crosses no element boundary of any contributing mesh, so all
integrands on it are smooth and plain Gauss quadrature applies.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .mesh import Box, element_box, locate_element, to_local


@dataclass(frozen=True)
class Contributor:
    """One element overlapping a region: level key, element index, local sub-box."""

    level: int
    element: tuple[int, ...]
    local_box: Box


@dataclass(frozen=True)
class IntegrationRegion:
    box: Box
    contributors: tuple[Contributor, ...]

    @property
    def levels(self) -> frozenset:
        return frozenset(c.level for c in self.contributors)


class RegionCriterion:
    """Predicate over the set of levels contributing to a candidate box."""

    def matches(self, levels: frozenset) -> bool:
        raise NotImplementedError


class AtLeastOne(RegionCriterion):
    def matches(self, levels):
        return len(levels) >= 1


class AllOf(RegionCriterion):
    def __init__(self, *levels):
        self.required = frozenset(levels)

    def matches(self, levels):
        return self.required <= levels


class Exactly(RegionCriterion):
    def __init__(self, *levels):
        self.required = frozenset(levels)

    def matches(self, levels):
        return self.required == levels


AT_LEAST_ONE = AtLeastOne()


def _pooled_axis(meshes, axis: int, eps: float) -> list[float]:
    coords = sorted(c for _, m in meshes for c in m.breakpoints[axis])
    merged = [coords[0]]
    for c in coords[1:]:
        if c - merged[-1] > eps:
            merged.append(c)
    return merged


def compute_regions(meshes, criterion: RegionCriterion, eps: float | None = None):
    """Admissible integration regions for a list of ``(level, mesh)`` pairs.

    Parameters
    ----------
    meshes : sequence of (level, CartesianMesh)
        Level keys must be unique; they tag the contributors.
    criterion : RegionCriterion
        Keeps a candidate box iff the set of levels containing its midpoint
        matches.
    eps : float, optional
        Merge tolerance for pooled breakpoints; defaults to 1e-10 x domain
        extent per axis.

    Returns
    -------
    list of IntegrationRegion, ordered lexicographically by interval index.
    """
    meshes = list(meshes)
    if not meshes:
        raise ValueError("at least one mesh is required")
    levels = [lv for lv, _ in meshes]
    if len(set(levels)) != len(levels):
        raise ValueError("duplicate level keys")
    dim = meshes[0][1].dim
    if any(m.dim != dim for _, m in meshes):
        raise ValueError("meshes must share one dimension")

    axes = []
    merge_tols = []
    for i in range(dim):
        lo = min(m.breakpoints[i][0] for _, m in meshes)
        hi = max(m.breakpoints[i][-1] for _, m in meshes)
        tol = 1e-10 * (hi - lo) if eps is None else eps
        if tol < 0:
            raise ValueError("merge tolerance must be non-negative")
        merge_tols.append(tol)
        axes.append(_pooled_axis(meshes, i, tol))
    # merged coordinates may sit up to the merge tolerance away from the
    # original breakpoints, so containment checks need the looser bound
    contain_tol = 2.0 * max(merge_tols) + 1e-14

    # midpoint classification factorizes per axis on tensor-product meshes:
    # precompute, per mesh and axis, which element interval (if any) contains
    # each pooled interval's midpoint
    from bisect import bisect_left

    tables = []
    for lv, m in meshes:
        per_axis = []
        for a in range(dim):
            bps = m.breakpoints[a]
            col = []
            for j in range(len(axes[a]) - 1):
                mid = 0.5 * (axes[a][j] + axes[a][j + 1])
                if mid < bps[0] or mid > bps[-1]:
                    col.append(-1)
                else:
                    col.append(max(bisect_left(bps, mid) - 1, 0))
            per_axis.append(col)
        tables.append((lv, m, per_axis))

    regions = []
    intervals = [range(len(axis) - 1) for axis in axes]
    for multi in product(*intervals):
        found = []
        for lv, m, per_axis in tables:
            idx = []
            for a, j in enumerate(multi):
                e = per_axis[a][j]
                if e < 0:
                    break
                idx.append(e)
            else:
                found.append((lv, m, tuple(idx)))
        if not criterion.matches(frozenset(lv for lv, _, _ in found)):
            continue
        lo = tuple(axes[i][j] for i, j in enumerate(multi))
        hi = tuple(axes[i][j + 1] for i, j in enumerate(multi))
        box = Box(lo, hi)
        contribs = tuple(
            Contributor(lv, idx, to_local(element_box(m, idx), box, tol=contain_tol))
            for lv, m, idx in found
        )
        regions.append(IntegrationRegion(box, contribs))
    return regions


def gauss_rule(n: int):
    """Gauss-Legendre points and weights on [-1, 1]; exact to degree 2n-1."""
    if not 1 <= n <= 64:
        raise ValueError("point count must be in [1, 64]")
    return _gauss_rule_cached(int(n))


@lru_cache(maxsize=None)
def _gauss_rule_cached(n: int):
    return np.polynomial.legendre.leggauss(n)


def region_quadrature(region: IntegrationRegion, n):
    """Tensor Gauss rule on a region, mapped into every contributor.

    Parameters
    ----------
    region : IntegrationRegion
    n : int or per-axis sequence of ints
        Gauss points per axis.

    Returns
    -------
    points : ndarray (npts, d)
        Global quadrature points.
    weights : ndarray (npts,)
        Global weights including the affine volume factor of the region box.
    local : dict
        ``contributor index -> ndarray (npts, d)`` of reference coordinates
        inside that contributor's parent element.
    """
    dim = region.box.dim
    if np.isscalar(n):
        n = (int(n),) * dim
    n = tuple(int(v) for v in n)
    rules = [gauss_rule(v) for v in n]
    ref = np.array(list(product(*(r[0] for r in rules))))
    w = np.array([np.prod(ws) for ws in product(*(r[1] for r in rules))])

    lo = np.array(region.box.lo)
    hi = np.array(region.box.hi)
    points = lo + 0.5 * (ref + 1.0) * (hi - lo)
    weights = w * np.prod(0.5 * (hi - lo))

    local = {}
    for ci, c in enumerate(region.contributors):
        slo = np.array(c.local_box.lo)
        shi = np.array(c.local_box.hi)
        local[ci] = slo + 0.5 * (ref + 1.0) * (shi - slo)
    return points, weights, local


def regions_to_csv(regions, path):
    """Debug export: one row per region with box bounds and contributor count."""
    import csv

    regions = list(regions)
    dim = regions[0].box.dim if regions else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"lo{i}" for i in range(dim)] + [f"hi{i}" for i in range(dim)]
        writer.writerow(header + ["contributors"])
        for r in regions:
            writer.writerow(list(r.box.lo) + list(r.box.hi) + [len(r.contributors)])
