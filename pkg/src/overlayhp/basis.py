"""Hierarchical 1D shape functions and their 2D tensor/trunk combinations.

The 1D family consists of the two vertex hats plus internal modes built from
antiderivatives of Legendre polynomials,

    N_0 = (1 - xi)/2,   N_1 = (1 + xi)/2,
    N_k = (P_k - P_{k-2}) / sqrt(4k - 2)   for k >= 2,

so every internal mode vanishes at xi = +-1.  The normalization makes the
quadratic mode peak at -sqrt(6)/4.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def eval_legendre_1d(p: int, xi):
    """Values and derivatives of the 1D basis of degree ``p`` at ``xi``.

    Parameters
    ----------
    p : int
        Polynomial degree, at least 1 (the vertex pair is the minimum).
    xi : float or ndarray
        Reference coordinates in [-1, 1].

    Returns
    -------
    values, derivatives : ndarray
        Shape ``xi.shape + (p+1,)``; entries 0 and 1 are the vertex hats,
        entries k >= 2 the internal modes.
    """
    if p < 1:
        raise ValueError("degree must be at least 1")
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) > 1.0 + 1e-14):
        raise ValueError("reference coordinate outside [-1, 1]")
    scalar = xi.ndim == 0
    xi = np.atleast_1d(xi)

    # Legendre values/derivatives by the three-term recurrence, up to order p.
    P = np.empty(xi.shape + (p + 1,))
    dP = np.empty_like(P)
    P[..., 0] = 1.0
    dP[..., 0] = 0.0
    P[..., 1] = xi
    dP[..., 1] = 1.0
    for k in range(1, p):
        P[..., k + 1] = ((2 * k + 1) * xi * P[..., k] - k * P[..., k - 1]) / (k + 1)
        dP[..., k + 1] = dP[..., k - 1] + (2 * k + 1) * P[..., k]

    values = np.empty_like(P)
    derivs = np.empty_like(P)
    values[..., 0] = 0.5 * (1.0 - xi)
    values[..., 1] = 0.5 * (1.0 + xi)
    derivs[..., 0] = -0.5
    derivs[..., 1] = 0.5
    for k in range(2, p + 1):
        scale = 1.0 / np.sqrt(4.0 * k - 2.0)
        values[..., k] = (P[..., k] - P[..., k - 2]) * scale
        derivs[..., k] = (dP[..., k] - dP[..., k - 2]) * scale

    if scalar:
        return values[0], derivs[0]
    return values, derivs


@dataclass(frozen=True)
class BasisSpec:
    """Element basis: isotropic degree ``p`` and tensor or trunk mode set."""

    p: int
    dim: int
    space_kind: str = "tensor"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("degree must be at least 1")
        if self.space_kind not in ("tensor", "trunk"):
            raise ValueError(f"unknown space_kind {self.space_kind!r}")
        if self.dim == 1:
            return  # tensor and trunk coincide in 1D
        if self.dim != 2:
            raise ValueError("only d = 1 and d = 2 bases are supported")

    @property
    def n_functions(self) -> int:
        return len(multi_indices(self))


def _trunk_internal_count(p: int) -> int:
    return (p - 2) * (p - 3) // 2 if p >= 3 else 0


@lru_cache(maxsize=None)
def _multi_indices_cached(p: int, dim: int, kind: str) -> tuple[tuple[int, ...], ...]:
    if dim == 1:
        return tuple((k,) for k in range(p + 1))
    out: list[tuple[int, int]] = []
    # vertices, then per-edge groups (bottom, top, left, right), then internal
    out += [(0, 0), (1, 0), (0, 1), (1, 1)]
    out += [(k, 0) for k in range(2, p + 1)]
    out += [(k, 1) for k in range(2, p + 1)]
    out += [(0, k) for k in range(2, p + 1)]
    out += [(1, k) for k in range(2, p + 1)]
    if kind == "tensor":
        out += [(k1, k2) for k1 in range(2, p + 1) for k2 in range(2, p + 1)]
    else:
        out += [
            (k1, k2)
            for k1 in range(2, p + 1)
            for k2 in range(2, p + 1)
            if k1 + k2 <= p
        ]
    return tuple(out)


def multi_indices(spec: BasisSpec) -> tuple[tuple[int, ...], ...]:
    """Mode multi-indices of ``spec`` in the documented stable ordering.

    Vertices first (1D: lo, hi; 2D: (0,0),(1,0),(0,1),(1,1)), then modes
    grouped per edge (bottom, top, left, right), then internal modes in
    lexicographic order.
    """
    return _multi_indices_cached(spec.p, spec.dim, spec.space_kind)


def trace_flags(k: int) -> tuple[bool, bool]:
    """(nonzero at xi=-1, nonzero at xi=+1) for 1D mode index ``k``."""
    if k == 0:
        return True, False
    if k == 1:
        return False, True
    return False, False


def eval_basis(spec: BasisSpec, xi):
    """Values and reference-coordinate gradients of all basis functions.

    Parameters
    ----------
    spec : BasisSpec
    xi : array-like, shape (d,) or (npts, d)
        Reference points in [-1, 1]^d.

    Returns
    -------
    values : ndarray, shape (npts, n)
    gradients : ndarray, shape (npts, n, d)
    """
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = np.atleast_2d(xi)
    if pts.shape[1] != spec.dim:
        raise ValueError("point dimension does not match basis dimension")
    modes = multi_indices(spec)
    n = len(modes)

    if spec.dim == 1:
        vals, ders = eval_legendre_1d(spec.p, pts[:, 0])
        values = vals
        gradients = ders[:, :, None]
    else:
        v1, d1 = eval_legendre_1d(spec.p, pts[:, 0])
        v2, d2 = eval_legendre_1d(spec.p, pts[:, 1])
        i1 = np.fromiter((m[0] for m in modes), dtype=int, count=n)
        i2 = np.fromiter((m[1] for m in modes), dtype=int, count=n)
        values = v1[:, i1] * v2[:, i2]
        gradients = np.empty((pts.shape[0], n, 2))
        gradients[:, :, 0] = d1[:, i1] * v2[:, i2]
        gradients[:, :, 1] = v1[:, i1] * d2[:, i2]

    if single:
        return values[0], gradients[0]
    return values, gradients
