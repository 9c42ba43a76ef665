"""Theta-method time stepping, L2 state transfer, and overlay motion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import _axis_eval, _mode_axis_indices
from .mesh import Box, build_uniform_mesh
from .basis import BasisSpec
from .regions import AT_LEAST_ONE, compute_regions, gauss_rule
from .postproc import FieldSolution
from .solvers import SolverError, solve_direct
from .space import LevelSpec, MultiLevelSpace


@dataclass(frozen=True)
class ThetaScheme:
    """One-step integrator; theta = 1/2 is the trapezoidal (Crank-Nicolson) rule."""

    theta: float = 0.5
    dt: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.dt <= 0.0:
            raise ValueError("time step must be positive")


@dataclass(frozen=True)
class MovingSource:
    """Circular indicator source moving on a circular path.

    ``s(x, t) = intensity`` inside the disc of radius ``source_radius`` around
    ``center(t)`` and zero outside; the deposited power is constant in time.
    """

    path_radius: float = 2.5
    source_radius: float = 0.1
    phi0: float = -np.pi / 2.0
    phi_dot: float = np.pi / 2.0
    intensity: float = 10.0

    def center(self, t: float):
        phi = self.phi0 + self.phi_dot * t
        return (self.path_radius * np.cos(phi), self.path_radius * np.sin(phi))

    def __call__(self, pts: np.ndarray, t: float) -> np.ndarray:
        c = self.center(t)
        dist2 = (pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2
        return np.where(dist2 <= self.source_radius**2, self.intensity, 0.0)

    def bbox(self, t: float) -> Box:
        c = self.center(t)
        r = self.source_radius
        return Box((c[0] - r, c[1] - r), (c[0] + r, c[1] + r))


def theta_step(M, K, F0, F1, T, scheme: ThetaScheme, solve=None) -> np.ndarray:
    """One theta-method step of ``M T' + K T = F`` in reduced numbering.

    Solves ``[M/dt + theta K] T1 = [M/dt - (1-theta) K] T0 + theta F1 +
    (1-theta) F0``.  A prefactorized solver for the left-hand matrix can be
    supplied for repeated stepping.
    """
    th = scheme.theta
    rhs = (M / scheme.dt) @ T - (1.0 - th) * (K @ T) + th * F1 + (1.0 - th) * F0
    if solve is None:
        lhs = (M / scheme.dt) + th * K
        return solve_direct(lhs.tocsr(), rhs)
    return solve(rhs)


def l2_project(source: FieldSolution, target_space: MultiLevelSpace, regions=None) -> FieldSolution:
    """L2 projection of a field onto another space over the same domain.

    The integration regions must resolve the meshes of both spaces; when not
    supplied they are computed from the union, with source levels keyed after
    the target levels.  Target Dirichlet coefficients come from the target
    space's boundary data, with their mass-matrix columns transferred to the
    right-hand side.
    """
    src_space = source.space
    dom = target_space.domain
    if not (
        np.allclose(dom.lo, src_space.domain.lo, atol=target_space.tol)
        and np.allclose(dom.hi, src_space.domain.hi, atol=target_space.tol)
    ):
        raise ValueError("source and target must cover the same domain")

    nt = target_space.n_levels
    if regions is None:
        meshes = [(i, lv.mesh) for i, lv in enumerate(target_space.levels)]
        meshes += [(nt + i, lv.mesh) for i, lv in enumerate(src_space.levels)]
        regions = compute_regions(meshes, AT_LEAST_ONE)

    n_ext = target_space.n_active + target_space.n_dirichlet
    n = target_space.n_active
    dim = dom.dim
    mass = np.zeros((n_ext, n_ext))
    b = np.zeros(n_ext)
    cache: dict = {}

    def axis_tables(space, level, c, nq, with_coeff=None):
        """Per-axis 1D value tables (and gathered coefficients) for one element."""
        lv = space.levels[level]
        ids_full = space.element_ids(level, c.element)
        keep = ids_full >= 0
        kidx = _mode_axis_indices(lv.basis)
        tabs = []
        for a in range(dim):
            v, _ = _axis_eval(cache, lv.basis.p, c.local_box.lo[a], c.local_box.hi[a], nq[a])
            tabs.append(v[:, kidx[a]])
        if with_coeff is not None:
            cf = np.where(keep, with_coeff[np.maximum(ids_full, 0)], 0.0)
            return tabs, cf
        return [t[:, keep] for t in tabs], ids_full[keep]

    for region in regions:
        tgt = [c for c in region.contributors if c.level < nt]
        if not tgt:
            continue
        src = [c for c in region.contributors if c.level >= nt]
        degs = [
            target_space.levels[c.level].basis.p
            if c.level < nt
            else src_space.levels[c.level - nt].basis.p
            for c in region.contributors
        ]
        nq = (max(degs) + 1,) * dim
        w_ax = [gauss_rule(nq[a])[1] * 0.5 * region.box.extent(a) for a in range(dim)]

        t_tabs, t_ids = [], []
        for c in tgt:
            tabs, ids_c = axis_tables(target_space, c.level, c, nq)
            t_tabs.append(tabs)
            t_ids.append(ids_c)
        idt = np.concatenate(t_ids)
        if idt.size == 0:
            continue
        VT = [np.concatenate([tabs[a] for tabs in t_tabs], axis=1) for a in range(dim)]
        WVT = [VT[a] * w_ax[a][:, None] for a in range(dim)]
        m_loc = WVT[0].T @ VT[0]
        if dim == 2:
            m_loc = m_loc * (WVT[1].T @ VT[1])
        mass[np.ix_(idt, idt)] += m_loc

        for c in src:
            tabs, cf = axis_tables(
                src_space, c.level - nt, c, nq, with_coeff=source.coefficients
            )
            cross = WVT[0].T @ tabs[0]
            if dim == 2:
                cross = cross * (WVT[1].T @ tabs[1])
            b[idt] += cross @ cf

    import scipy.sparse as sp

    M = sp.csr_matrix(mass)
    g = target_space.dirichlet_values
    b_red = b[:n] - (M[:n, n:] @ g if g.size else 0.0)
    try:
        x = solve_direct(M[:n, :n].tocsr(), b_red)
    except SolverError as exc:
        raise SolverError(f"target mass matrix solve failed: {exc}") from exc
    return FieldSolution.from_reduced(target_space, x)


def advance_overlays(base: LevelSpec, t: float, overlay_sizes, overlay_degrees, overlay_counts, path: MovingSource, space_kind: str = "trunk"):
    """Level list with square overlays centered on the source at time ``t``.

    Overlay ``k`` is a square of side ``overlay_sizes[k]`` centered at the
    source location, intersected with the domain, meshed with
    ``overlay_counts[k]`` elements per axis at degree ``overlay_degrees[k]``.
    """
    if not len(overlay_sizes) == len(overlay_degrees) == len(overlay_counts):
        raise ValueError("overlay parameter lists must have equal length")
    dom = base.mesh.box
    c = path.center(t)
    levels = [base]
    for size, p, cnt in zip(overlay_sizes, overlay_degrees, overlay_counts):
        half = 0.5 * size
        lo = (max(c[0] - half, dom.lo[0]), max(c[1] - half, dom.lo[1]))
        hi = (min(c[0] + half, dom.hi[0]), min(c[1] + half, dom.hi[1]))
        if not (lo[0] < hi[0] and lo[1] < hi[1]):
            raise ValueError("overlay clipped to a degenerate box")
        mesh = build_uniform_mesh(Box(lo, hi), (cnt, cnt))
        levels.append(LevelSpec(mesh, BasisSpec(p, 2, space_kind)))
    return levels
