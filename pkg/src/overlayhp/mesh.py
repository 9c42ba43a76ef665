"""Axis-aligned tensor-product meshes and affine reference maps.

A :class:`CartesianMesh` stores explicit per-axis breakpoints, so uniform
grids, bisection ladders and arbitrarily positioned overlay grids all share
one representation.  Meshes are immutable after construction.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from itertools import product
import math


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo[i], hi[i]]`` per axis, non-degenerate."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have equal length")
        if len(lo) == 0:
            raise ValueError("box must have at least one axis")
        for a, b in zip(lo, hi):
            if not a < b:
                raise ValueError(f"degenerate box: [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def extent(self, axis: int) -> float:
        return self.hi[axis] - self.lo[axis]

    def max_extent(self) -> float:
        return max(self.extent(i) for i in range(self.dim))

    def volume(self) -> float:
        return math.prod(self.extent(i) for i in range(self.dim))

    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (a + b) for a, b in zip(self.lo, self.hi))

    def contains(self, x, tol: float = 0.0) -> bool:
        return all(a - tol <= xi <= b + tol for xi, a, b in zip(x, self.lo, self.hi))

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        return all(
            a - tol <= oa and ob <= b + tol
            for a, b, oa, ob in zip(self.lo, self.hi, other.lo, other.hi)
        )


def geom_tol(box: Box) -> float:
    """Geometric tolerance for containment/clamping: 1e-12 x max extent."""
    return 1e-12 * box.max_extent()


class CartesianMesh:
    """Tensor-product element grid defined by strictly increasing breakpoints.

    Parameters
    ----------
    breakpoints : sequence of per-axis coordinate sequences
        Every axis needs at least two strictly increasing values.  Element
        ``(j_1, ..., j_d)`` occupies ``[breakpoints[i][j_i], breakpoints[i][j_i+1]]``
        on axis ``i``.
    """

    def __init__(self, breakpoints):
        bps = tuple(tuple(float(v) for v in axis) for axis in breakpoints)
        if len(bps) == 0:
            raise ValueError("mesh needs at least one axis")
        for axis in bps:
            if len(axis) < 2:
                raise ValueError("every axis needs at least 2 breakpoints")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise ValueError("breakpoints must be strictly increasing")
        self.breakpoints = bps
        self.shape = tuple(len(axis) - 1 for axis in bps)
        self.box = Box(tuple(axis[0] for axis in bps), tuple(axis[-1] for axis in bps))

    @property
    def dim(self) -> int:
        return len(self.breakpoints)

    @property
    def n_elements(self) -> int:
        return math.prod(self.shape)

    def element_indices(self):
        """All element multi-indices in row-major (lexicographic) order."""
        return product(*(range(n) for n in self.shape))

    def linear_index(self, idx: tuple[int, ...]) -> int:
        lin = 0
        for i, n in zip(idx, self.shape):
            lin = lin * n + i
        return lin

    def __repr__(self):
        return f"CartesianMesh(shape={self.shape}, box=[{self.box.lo}, {self.box.hi}])"


def build_uniform_mesh(box: Box, counts) -> CartesianMesh:
    """Equispaced mesh with ``counts[i]`` elements per axis, endpoints exact."""
    counts = tuple(int(c) for c in counts)
    if len(counts) != box.dim:
        raise ValueError("counts length must match box dimension")
    if any(c < 1 for c in counts):
        raise ValueError("counts must be positive")
    bps = []
    for lo, hi, n in zip(box.lo, box.hi, counts):
        # lo + j*(hi-lo)/n keeps the endpoints exact (no accumulation drift)
        axis = [lo + j * (hi - lo) / n for j in range(n + 1)]
        axis[-1] = hi
        bps.append(axis)
    return CartesianMesh(bps)


def locate_element(mesh: CartesianMesh, x) -> tuple[int, ...] | None:
    """Element multi-index whose closed box contains ``x``, or None if outside.

    A point exactly on an interior breakpoint is assigned to the lower
    element index, which keeps point loads and probes deterministic.
    """
    if len(x) != mesh.dim:
        raise ValueError("point dimension mismatch")
    idx = []
    for xi, axis in zip(x, mesh.breakpoints):
        if xi < axis[0] or xi > axis[-1]:
            return None
        j = bisect_left(axis, xi)
        idx.append(max(j - 1, 0))
    return tuple(idx)


def element_box(mesh: CartesianMesh, idx) -> Box:
    """Global box of element ``idx``."""
    idx = tuple(idx)
    if len(idx) != mesh.dim:
        raise ValueError("index dimension mismatch")
    for i, n in zip(idx, mesh.shape):
        if not 0 <= i < n:
            raise ValueError(f"element index {idx} out of range for shape {mesh.shape}")
    lo = tuple(axis[i] for axis, i in zip(mesh.breakpoints, idx))
    hi = tuple(axis[i + 1] for axis, i in zip(mesh.breakpoints, idx))
    return Box(lo, hi)


def to_local(elem_box: Box, global_box: Box, tol: float | None = None) -> Box:
    """Map a global sub-box into the element's [-1, 1]^d reference frame.

    ``global_box`` must be contained in ``elem_box`` up to ``tol`` (defaults
    to the element's geometric tolerance); the result is clamped to [-1, 1].
    """
    if tol is None:
        tol = geom_tol(elem_box)
    if not elem_box.contains_box(global_box, tol=tol):
        raise ValueError("sub-box exceeds element beyond tolerance")
    lo, hi = [], []
    for a, b, ga, gb in zip(elem_box.lo, elem_box.hi, global_box.lo, global_box.hi):
        h = b - a
        la = 2.0 * (ga - a) / h - 1.0
        lb = 2.0 * (gb - a) / h - 1.0
        lo.append(min(max(la, -1.0), 1.0))
        hi.append(min(max(lb, -1.0), 1.0))
    return Box(tuple(lo), tuple(hi))


def from_local(elem_box: Box, xi) -> tuple[float, ...]:
    """Forward affine map: reference point in [-1, 1]^d to global coordinates."""
    return tuple(
        a + 0.5 * (x + 1.0) * (b - a) for x, a, b in zip(xi, elem_box.lo, elem_box.hi)
    )
