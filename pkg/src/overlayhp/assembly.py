"""Coupled assembly of bilinear and linear forms over integration regions.

Every region carries the list of contributing elements across levels; their
shape functions are concatenated into one auxiliary element, local matrices
are integrated with a tensor Gauss rule on the region, and entries are
scattered by function status: active and Dirichlet functions into an
"extended" numbering (active block first), zero-constrained functions are
dropped.  Dirichlet elimination with right-hand-side transfer happens in
:func:`apply_constraints`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dsyrk

from .basis import BasisSpec, eval_basis
from .mesh import element_box, locate_element
from .regions import gauss_rule
from .space import MultiLevelSpace

# state below ~5k unknowns is accumulated densely; above that via triplets
_DENSE_LIMIT = 5000


@dataclass
class WeakForm:
    """Diffusion + optional mass and loads of a scalar second-order form.

    ``diffusion`` and ``source`` may be constants or callables taking an
    ``(npts, d)`` array of points and returning ``(npts,)`` values.  Point
    loads are ``(location, magnitude)`` pairs.
    """

    diffusion: object = 1.0
    source: object = None
    include_mass: bool = False
    point_loads: tuple = field(default_factory=tuple)


@dataclass
class SparseSystem:
    """Symmetric matrices and load vector in extended (active+Dirichlet) numbering."""

    K: sp.csr_matrix
    M: sp.csr_matrix | None
    F: np.ndarray
    n_active: int
    dirichlet_values: np.ndarray


@dataclass
class ReducedSystem:
    K: sp.csr_matrix
    M: sp.csr_matrix | None
    F: np.ndarray


@lru_cache(maxsize=None)
def _tensor_rule(n: tuple, dim: int):
    rules = [gauss_rule(v) for v in n]
    pts = np.array(list(product(*(r[0] for r in rules))))
    wts = np.array([np.prod(w) for w in product(*(r[1] for r in rules))])
    return pts.reshape(-1, dim), wts


def _eval_cached(cache, spec: BasisSpec, local_box, n: tuple):
    """Basis values/gradients at the tensor rule mapped into ``local_box``.

    Exploits the tensor-product structure: the 1D bases are evaluated on the
    per-axis point sets and combined, which is much cheaper than evaluating
    at all ``prod(n)`` points directly.
    """
    key = (spec, local_box.lo, local_box.hi, n)
    hit = cache.get(key)
    if hit is not None:
        return hit
    from .basis import eval_legendre_1d, multi_indices

    if spec.dim == 1:
        pts1, _ = gauss_rule(n[0])
        xi = local_box.lo[0] + 0.5 * (pts1 + 1.0) * (local_box.hi[0] - local_box.lo[0])
        vals, ders = eval_legendre_1d(spec.p, xi)
        out = (vals, ders[:, :, None])
        cache[key] = out
        return out
    modes = multi_indices(spec)
    nf = len(modes)
    i1 = np.fromiter((m[0] for m in modes), dtype=int, count=nf)
    i2 = np.fromiter((m[1] for m in modes), dtype=int, count=nf)
    axes_vals = []
    axes_ders = []
    for a in range(2):
        pts1, _ = gauss_rule(n[a])
        xi = local_box.lo[a] + 0.5 * (pts1 + 1.0) * (local_box.hi[a] - local_box.lo[a])
        v, d = eval_legendre_1d(spec.p, xi)
        axes_vals.append(v)
        axes_ders.append(d)
    ix = np.repeat(np.arange(n[0]), n[1])
    iy = np.tile(np.arange(n[1]), n[0])
    v1, v2 = axes_vals[0][ix], axes_vals[1][iy]
    d1, d2 = axes_ders[0][ix], axes_ders[1][iy]
    vals = v1[:, i1] * v2[:, i2]
    grads = np.empty((vals.shape[0], nf, 2))
    grads[:, :, 0] = d1[:, i1] * v2[:, i2]
    grads[:, :, 1] = v1[:, i1] * d2[:, i2]
    cache[key] = (vals, grads)
    return vals, grads


def _values(fn, pts, const_ok=True):
    if callable(fn):
        return np.asarray(fn(pts), dtype=float)
    return float(fn)


class _Accumulator:
    def __init__(self, n_ext: int):
        self.n_ext = n_ext
        self.dense = n_ext <= _DENSE_LIMIT
        if self.dense:
            self.mat = np.zeros((n_ext, n_ext))
        else:
            self.rows, self.cols, self.vals = [], [], []

    def add(self, ids, local):
        if self.dense:
            self.mat[np.ix_(ids, ids)] += local
        else:
            nk = ids.size
            self.rows.append(np.repeat(ids, nk))
            self.cols.append(np.tile(ids, nk))
            self.vals.append(local.ravel())

    def tocsr(self):
        if self.dense:
            return sp.csr_matrix(self.mat)
        if not self.rows:
            return sp.csr_matrix((self.n_ext, self.n_ext))
        coo = sp.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n_ext, self.n_ext),
        )
        return coo.tocsr()


def _region_setup(space: MultiLevelSpace, region, n: tuple, cache):
    """Concatenated values, per-axis global gradients and extended ids.

    Functions with zero status are dropped here, so the returned ids are all
    valid extended ids; gradients come back as one contiguous (npts, nfunc)
    array per axis so the stiffness contractions run as plain GEMMs.
    """
    dim = region.box.dim
    parts = []
    n_tot = 0
    for c in region.contributors:
        if not 0 <= c.level < space.n_levels:
            raise ValueError(f"region references unknown level {c.level}")
        lv = space.levels[c.level]
        v, g = _eval_cached(cache, lv.basis, c.local_box, n)
        ids_full = space.element_ids(c.level, c.element)
        keep = ids_full >= 0
        k = int(keep.sum())
        parts.append((v, g, element_box(lv.mesh, c.element), ids_full, keep, k))
        n_tot += k
    npts = parts[0][0].shape[0] if parts else 0
    vals = np.empty((npts, n_tot))
    grads = [np.empty((npts, n_tot)) for _ in range(dim)]
    ids = np.empty(n_tot, dtype=np.int64)
    o = 0
    for v, g, eb, ids_full, keep, k in parts:
        sl = slice(o, o + k)
        if k == ids_full.size:
            vals[:, sl] = v
            for a in range(dim):
                np.multiply(g[..., a], 2.0 / eb.extent(a), out=grads[a][:, sl])
            ids[sl] = ids_full
        else:
            vals[:, sl] = v[:, keep]
            for a in range(dim):
                np.multiply(g[:, keep, a], 2.0 / eb.extent(a), out=grads[a][:, sl])
            ids[sl] = ids_full[keep]
        o += k
    return vals, grads, ids


def _axis_eval(cache, p: int, lo: float, hi: float, n: int):
    """1D basis values/derivatives at an n-point Gauss rule mapped to [lo, hi]."""
    key = (p, lo, hi, n)
    hit = cache.get(key)
    if hit is not None:
        return hit
    from .basis import eval_legendre_1d

    pts, _ = gauss_rule(n)
    xi = lo + 0.5 * (pts + 1.0) * (hi - lo)
    out = eval_legendre_1d(p, xi)
    cache[key] = out
    return out


@lru_cache(maxsize=None)
def _mode_axis_indices(spec: BasisSpec):
    from .basis import multi_indices

    modes = multi_indices(spec)
    return tuple(
        np.fromiter((m[a] for m in modes), dtype=int, count=len(modes))
        for a in range(spec.dim)
    )


def _region_axis_setup(space: MultiLevelSpace, region, n: tuple, cache):
    """Separable per-axis factor tables for the region's auxiliary element.

    Every basis function is a product of 1D modes, so values and gradients on
    the tensor rule factorize per axis.  Returns the extended ids (zero-status
    functions dropped) and, per axis, the (n_a, naux) tables of 1D values and
    globally scaled 1D derivatives.
    """
    dim = region.box.dim
    parts = []
    n_tot = 0
    for c in region.contributors:
        if not 0 <= c.level < space.n_levels:
            raise ValueError(f"region references unknown level {c.level}")
        lv = space.levels[c.level]
        ids_full = space.element_ids(c.level, c.element)
        keep = ids_full >= 0
        k = int(keep.sum())
        kidx = _mode_axis_indices(lv.basis)
        eb = element_box(lv.mesh, c.element)
        axes = []
        for a in range(dim):
            v, d = _axis_eval(cache, lv.basis.p, c.local_box.lo[a], c.local_box.hi[a], n[a])
            idx = kidx[a] if k == ids_full.size else kidx[a][keep]
            axes.append((v, d, idx, 2.0 / eb.extent(a)))
        parts.append((ids_full if k == ids_full.size else ids_full[keep], k, axes))
        n_tot += k
    ids = np.empty(n_tot, dtype=np.int64)
    vals = [np.empty((n[a], n_tot)) for a in range(dim)]
    ders = [np.empty((n[a], n_tot)) for a in range(dim)]
    o = 0
    for ids_c, k, axes in parts:
        sl = slice(o, o + k)
        ids[sl] = ids_c
        for a, (v, d, idx, scale) in enumerate(axes):
            vals[a][:, sl] = v[:, idx]
            np.multiply(d[:, idx], scale, out=ders[a][:, sl])
        o += k
    return ids, vals, ders


def _region_values(vals, n: tuple):
    """Tensor-product 2D values (npts, naux) from the per-axis tables."""
    if len(vals) == 1:
        return vals[0]
    return (vals[0][:, None, :] * vals[1][None, :, :]).reshape(n[0] * n[1], -1)


def _weighted_gram(mats, w):
    """sum_a A_a^T diag(w) A_a via one symmetric rank-k update.

    Positive quadrature weights allow the sqrt factorization; the stacked
    syrk halves the flops of the naive per-axis GEMMs.
    """
    sw = np.sqrt(w)[:, None]
    if len(mats) == 1:
        B = mats[0] * sw
    else:
        npts, nf = mats[0].shape
        B = np.empty((len(mats) * npts, nf))
        for a, m in enumerate(mats):
            np.multiply(m, sw, out=B[a * npts : (a + 1) * npts])
    C = dsyrk(1.0, B, trans=1, lower=0)
    full = C + C.T
    np.fill_diagonal(full, np.diagonal(C))
    return full


def _region_points_weights(region, n: tuple):
    ref, wref = _tensor_rule(n, region.box.dim)
    lo = np.array(region.box.lo)
    hi = np.array(region.box.hi)
    pts = lo + 0.5 * (ref + 1.0) * (hi - lo)
    wts = wref * np.prod(0.5 * (hi - lo))
    return pts, wts


def _quad_order(space: MultiLevelSpace, region) -> tuple:
    for c in region.contributors:
        if not 0 <= c.level < space.n_levels:
            raise ValueError(f"region references unknown level {c.level}")
    p = max(space.levels[c.level].basis.p for c in region.contributors)
    return (p + 1,) * region.box.dim


def assemble(space: MultiLevelSpace, regions, form: WeakForm, over_integration: int = 1):
    """Assemble stiffness (and optionally mass) plus the load vector.

    ``regions`` must come from an at-least-one criterion over the space's
    meshes.  Stiffness and mass use ``max contributor degree + 1`` Gauss
    points per axis, which integrates the polynomial integrands exactly; the
    load is integrated with that count scaled by ``over_integration``.
    """
    if over_integration < 1:
        raise ValueError("over-integration factor must be >= 1")
    n_ext = space.n_active + space.n_dirichlet
    acc_k = _Accumulator(n_ext)
    acc_m = _Accumulator(n_ext) if form.include_mass else None
    F = np.zeros(n_ext)
    cache: dict = {}

    kappa_const = None if callable(form.diffusion) else float(form.diffusion)

    for region in regions:
        n = _quad_order(space, region)
        dim = region.box.dim
        vals2d = None
        if kappa_const is not None:
            # constant diffusion: the tensor-product integrands separate into
            # per-axis 1D Gram matrices combined by Hadamard products
            ids, vals_ax, ders_ax = _region_axis_setup(space, region, n, cache)
            if ids.size == 0:
                continue
            w_ax = []
            for a in range(dim):
                _, gw = gauss_rule(n[a])
                w_ax.append(gw * 0.5 * region.box.extent(a))
            if dim == 1:
                k_loc = kappa_const * _weighted_gram([ders_ax[0]], w_ax[0])
                m_loc = _weighted_gram([vals_ax[0]], w_ax[0]) if acc_m is not None else None
            else:
                gx = _weighted_gram([ders_ax[0]], w_ax[0])
                mx = _weighted_gram([vals_ax[0]], w_ax[0])
                gy = _weighted_gram([ders_ax[1]], w_ax[1])
                my = _weighted_gram([vals_ax[1]], w_ax[1])
                k_loc = kappa_const * (gx * my + mx * gy)
                m_loc = mx * my if acc_m is not None else None
            acc_k.add(ids, k_loc)
            if acc_m is not None:
                acc_m.add(ids, m_loc)
            if form.source is not None and over_integration == 1:
                vals2d = _region_values(vals_ax, n)
        else:
            vals2d, grads, ids = _region_setup(space, region, n, cache)
            if ids.size == 0:
                continue
            pts, wts = _region_points_weights(region, n)
            kw = wts * _values(form.diffusion, pts)
            acc_k.add(ids, _weighted_gram(grads, kw))
            if acc_m is not None:
                acc_m.add(ids, _weighted_gram([vals2d], wts))
        if form.source is not None:
            if over_integration == 1:
                pts, wl = _region_points_weights(region, n)
                vl = vals2d
                idl = ids
            else:
                nl = tuple(v * over_integration for v in n)
                vl, _, idl = _region_setup(space, region, nl, cache)
                pts, wl = _region_points_weights(region, nl)
            s = _values(form.source, pts)
            np.add.at(F, idl, vl.T @ (wl * s))

    for x0, f in form.point_loads:
        for li, lv in enumerate(space.levels):
            idx = locate_element(lv.mesh, x0)
            if idx is None:
                continue
            eb = element_box(lv.mesh, idx)
            xi = np.array(
                [2.0 * (x - a) / (b - a) - 1.0 for x, a, b in zip(x0, eb.lo, eb.hi)]
            )
            v, _ = eval_basis(lv.basis, xi)
            ids = space.element_ids(li, idx)
            keep = ids >= 0
            np.add.at(F, ids[keep], f * v[keep])

    K = acc_k.tocsr()
    M = acc_m.tocsr() if acc_m is not None else None
    return SparseSystem(K, M, F, space.n_active, space.dirichlet_values.copy())


def assemble_load(space: MultiLevelSpace, regions, source, over_integration: int = 1, bbox=None, cache=None):
    """Load vector only, in extended numbering.

    ``bbox`` (a Box) restricts integration to regions intersecting it, which
    keeps localized sources (moving heat spots) cheap on large meshes.  A
    ``cache`` dict may be shared across calls on the same space to reuse the
    basis evaluations.
    """
    n_ext = space.n_active + space.n_dirichlet
    F = np.zeros(n_ext)
    if cache is None:
        cache = {}
    for region in regions:
        if bbox is not None and not _boxes_intersect(region.box, bbox):
            continue
        n = _quad_order(space, region)
        nl = tuple(v * over_integration for v in n)
        vals, _, ids = _region_setup(space, region, nl, cache)
        if ids.size == 0:
            continue
        pts, wts = _region_points_weights(region, nl)
        s = np.asarray(source(pts), dtype=float)
        np.add.at(F, ids, vals.T @ (wts * s))
    return F


def _boxes_intersect(a, b) -> bool:
    return all(al <= bh and bl <= ah for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi))


def apply_constraints(system: SparseSystem):
    """Eliminate Dirichlet functions with consistent right-hand-side transfer.

    Returns the reduced system over active functions and a recovery map that
    reinserts the prescribed coefficients into the extended vector.
    """
    n = system.n_active
    g = system.dirichlet_values
    K = system.K.tocsc()
    K_red = K[:n, :n].tocsr()
    F_red = system.F[:n].copy()
    if g.size:
        F_red -= K[:n, n:] @ g
    M_red = None
    if system.M is not None:
        M_red = system.M.tocsc()[:n, :n].tocsr()

    def recover(x_active: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(x_active, dtype=float), g])

    return ReducedSystem(K_red, M_red, F_red), recover
