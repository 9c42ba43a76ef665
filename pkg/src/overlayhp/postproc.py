"""Field evaluation, energies, error measures, probes and grid sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product

import numpy as np

from .assembly import _quad_order, _region_points_weights, _region_setup, _values
from .basis import eval_basis
from .mesh import element_box, locate_element
from .space import MultiLevelSpace


@dataclass
class FieldSolution:
    """Coefficients of a superposed field, one entry per retained function.

    The vector is in extended numbering: the active block first, the
    prescribed (Dirichlet) block after it.  Zero-constrained functions carry
    an implicit zero, so the field evaluates anywhere in the domain as the
    sum of the level expansions.
    """

    space: MultiLevelSpace
    coefficients: np.ndarray

    @classmethod
    def from_reduced(cls, space: MultiLevelSpace, x_active) -> "FieldSolution":
        x = np.asarray(x_active, dtype=float)
        if x.size != space.n_active:
            raise ValueError("active coefficient count mismatch")
        return cls(space, np.concatenate([x, space.dirichlet_values]))

    @classmethod
    def zero(cls, space: MultiLevelSpace) -> "FieldSolution":
        return cls(space, np.zeros(space.n_active + space.n_dirichlet))


@dataclass
class ProbeRecord:
    t: float
    value: float
    gradient_magnitude: float


def evaluate(sol: FieldSolution, x):
    """Value and gradient of the field at a point, summed over all levels."""
    x = tuple(float(v) for v in x)
    if not sol.space.domain.contains(x, tol=sol.space.tol):
        raise ValueError(f"point {x} outside the domain")
    dim = sol.space.domain.dim
    value = 0.0
    grad = np.zeros(dim)
    for li, lv in enumerate(sol.space.levels):
        idx = locate_element(lv.mesh, x)
        if idx is None:
            continue
        eb = element_box(lv.mesh, idx)
        xi = np.array([2.0 * (v - a) / (b - a) - 1.0 for v, a, b in zip(x, eb.lo, eb.hi)])
        np.clip(xi, -1.0, 1.0, out=xi)
        vals, grads = eval_basis(lv.basis, xi)
        ids = sol.space.element_ids(li, idx)
        coeff = np.where(ids >= 0, sol.coefficients[np.maximum(ids, 0)], 0.0)
        value += float(vals @ coeff)
        scale = np.array([2.0 / eb.extent(a) for a in range(dim)])
        grad += (grads * scale).T @ coeff
    return value, grad


def compute_energy(sol: FieldSolution, regions, diffusion=1.0) -> float:
    """Direct integration of the bilinear-form energy of the field.

    Uses the assembly quadrature orders, so the result is exact for the
    piecewise-polynomial gradients regardless of Dirichlet data.
    """
    from .assembly import _region_axis_setup
    from .regions import gauss_rule

    space = sol.space
    cache: dict = {}
    kappa_const = None if callable(diffusion) else float(diffusion)
    total = 0.0
    for region in regions:
        n = _quad_order(space, region)
        if kappa_const is not None:
            ids, vals_ax, ders_ax = _region_axis_setup(space, region, n, cache)
            if ids.size == 0:
                continue
            coeff = sol.coefficients[ids]
            w_ax = [
                gauss_rule(n[a])[1] * 0.5 * region.box.extent(a)
                for a in range(region.box.dim)
            ]
            if region.box.dim == 1:
                gu = ders_ax[0] @ coeff
                total += kappa_const * float(np.sum(w_ax[0] * gu * gu))
            else:
                gux = ders_ax[0] @ (vals_ax[1] * coeff).T
                guy = vals_ax[0] @ (ders_ax[1] * coeff).T
                w2d = np.outer(w_ax[0], w_ax[1])
                total += kappa_const * float(np.sum(w2d * (gux * gux + guy * guy)))
            continue
        _, grads, ids = _region_setup(space, region, n, cache)
        if ids.size == 0:
            continue
        _, wts = _region_points_weights(region, n)
        coeff = sol.coefficients[ids]
        grad_sq = sum((ga @ coeff) ** 2 for ga in grads)
        pts, _ = _region_points_weights(region, n)
        kw = wts * _values(diffusion, pts)
        total += float(np.sum(kw * grad_sq))
    return total


def relative_energy_error(a_exact: float, a_num: float) -> float:
    """Energy-norm error in percent via the energy identity."""
    if not a_exact > 0:
        raise ValueError("exact energy must be positive")
    return float(np.sqrt(abs(a_exact - a_num) / abs(a_exact)) * 100.0)


def sample_grid(sol: FieldSolution, resolution):
    """Equispaced field samples including the domain corners.

    ``resolution`` counts intervals per axis, so ``(2, 2)`` yields 9 rows.
    Rows are ordered row-major; columns are the coordinates followed by the
    value and gradient components.
    """
    dom = sol.space.domain
    dim = dom.dim
    if np.isscalar(resolution):
        resolution = (int(resolution),) * dim
    axes = [np.linspace(dom.lo[a], dom.hi[a], int(resolution[a]) + 1) for a in range(dim)]
    rows = np.empty((int(np.prod([len(ax) for ax in axes])), 2 * dim + 1))
    for r, pt in enumerate(product(*axes)):
        value, grad = evaluate(sol, pt)
        rows[r, :dim] = pt
        rows[r, dim] = value
        rows[r, dim + 1 :] = grad
    return rows


def grid_to_csv(rows: np.ndarray, path):
    """Write grid samples with the canonical headers (1D or 2D)."""
    dim = (rows.shape[1] - 1) // 2
    header = ["x", "value", "grad"] if dim == 1 else ["x", "y", "value", "grad_x", "grad_y"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
