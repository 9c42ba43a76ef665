"""Multi-level approximation spaces built by superposing level discretizations.

Every level owns a mesh and an element basis.  Functions are identified with
mesh entities (vertices, edges, element interiors) so that the space is C0
within a level; functions are never identified across levels.  Overlay-level
functions with nonzero trace on an artificial overlay boundary (the part of
the overlay boundary not lying on the domain boundary) are constrained to
zero, which makes the superposed field globally C0.  An optional deactivation
pass supports the nested (fitted) refinement patterns used by the 1D bisection
and 2D corner ladders, where additional functions must be removed to keep the
level spaces independent.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .basis import BasisSpec, eval_legendre_1d, multi_indices
from .mesh import Box, CartesianMesh, geom_tol
from .regions import gauss_rule

# entity status codes; the two zero codes are distinguished internally because
# the deactivation sweep treats continuity zeros and dedup zeros differently
_ACTIVE = 0
_ZERO_OVERLAY = 1
_ZERO_DEDUP = 2
_DIRICHLET = 3


class DofStatus(Enum):
    ACTIVE = "active"
    ZERO = "zero"
    DIRICHLET = "dirichlet"


_KINDS_1D = ("vertex", "cell")
_KINDS_2D = ("vertex", "xedge", "yedge", "cell")


@dataclass(frozen=True)
class LevelSpec:
    """One discretization level: its mesh and element basis."""

    mesh: CartesianMesh
    basis: BasisSpec

    def __post_init__(self):
        if self.mesh.dim != self.basis.dim:
            raise ValueError("mesh and basis dimension mismatch")


def _entity_counts(level: LevelSpec) -> dict[str, int]:
    shape = level.mesh.shape
    if level.mesh.dim == 1:
        return {"vertex": shape[0] + 1, "cell": shape[0]}
    n1, n2 = shape
    return {
        "vertex": (n1 + 1) * (n2 + 1),
        "xedge": n1 * (n2 + 1),
        "yedge": (n1 + 1) * n2,
        "cell": n1 * n2,
    }


def _modes_per_entity(level: LevelSpec) -> dict[str, int]:
    p = level.basis.p
    n_total = len(multi_indices(level.basis))
    if level.mesh.dim == 1:
        return {"vertex": 1, "cell": p - 1}
    return {
        "vertex": 1,
        "xedge": p - 1,
        "yedge": p - 1,
        "cell": n_total - 4 - 4 * (p - 1),
    }


@lru_cache(maxsize=None)
def _gather_plan(p: int, dim: int, kind: str):
    """Per basis function: entity kind code, entity offset, mode index.

    Kind codes follow the per-level entity tables: 0 vertex, 1 x-edge,
    2 y-edge, 3 cell.  Offsets are relative to the element's multi-index.
    """
    modes = multi_indices(BasisSpec(p, dim, kind))
    kinds = np.empty(len(modes), dtype=np.int64)
    di = np.zeros(len(modes), dtype=np.int64)
    dj = np.zeros(len(modes), dtype=np.int64)
    mode = np.zeros(len(modes), dtype=np.int64)
    cell_counter = 0
    for pos, m in enumerate(modes):
        if dim == 1:
            (k,) = m
            if k <= 1:
                kinds[pos] = 0
                di[pos] = k
            else:
                kinds[pos] = 3
                mode[pos] = cell_counter
                cell_counter += 1
            continue
        k1, k2 = m
        if k1 <= 1 and k2 <= 1:
            kinds[pos] = 0
            di[pos], dj[pos] = k1, k2
        elif k1 >= 2 and k2 <= 1:
            kinds[pos] = 1  # x-edge (bottom k2=0, top k2=1)
            dj[pos] = k2
            mode[pos] = k1 - 2
        elif k2 >= 2 and k1 <= 1:
            kinds[pos] = 2  # y-edge (left k1=0, right k1=1)
            di[pos] = k1
            mode[pos] = k2 - 2
        else:
            kinds[pos] = 3
            mode[pos] = cell_counter
            cell_counter += 1
    return kinds, di, dj, mode


class MultiLevelSpace:
    """Status table and global numbering over all levels' functions.

    Instances are immutable; the constraint operations below return updated
    copies.  Global ids are dense over ACTIVE functions in (level, entity
    kind, entity, mode) lexicographic order; DIRICHLET functions get a second
    dense numbering appended after the active block, so an "extended" vector
    of length ``n_active + n_dirichlet`` holds one coefficient per retained
    function.
    """

    def __init__(self, levels, domain: Box, status=None, dirichlet=None):
        self.levels: tuple[LevelSpec, ...] = tuple(levels)
        if not self.levels:
            raise ValueError("at least one level is required")
        self.domain = domain
        self.tol = geom_tol(domain)
        if status is None:
            status = [
                {k: np.zeros(n, dtype=np.int8) for k, n in _entity_counts(lv).items()}
                for lv in self.levels
            ]
        self._status = status
        # (level, kind, entity id) -> per-mode prescribed coefficients
        self._dirichlet = dict(dirichlet) if dirichlet else {}
        self._renumber()

    # -- construction helpers -------------------------------------------------

    def _copy(self):
        status = [{k: v.copy() for k, v in lvl.items()} for lvl in self._status]
        return MultiLevelSpace(self.levels, self.domain, status, dict(self._dirichlet))

    def _kinds(self, level: int):
        return _KINDS_1D if self.levels[level].mesh.dim == 1 else _KINDS_2D

    def _renumber(self):
        n_active = 0
        n_dir = 0
        self._ext_ids = []
        dir_rows = []
        for li, lv in enumerate(self.levels):
            modes = _modes_per_entity(lv)
            table = {}
            for kind in self._kinds(li):
                st = self._status[li][kind]
                m = modes[kind]
                ids = np.full((st.size, m), -1, dtype=np.int64)
                if m > 0:
                    act = st == _ACTIVE
                    cnt = int(act.sum()) * m
                    ids[act] = np.arange(n_active, n_active + cnt).reshape(-1, m)
                    n_active += cnt
                    dr = st == _DIRICHLET
                    cntd = int(dr.sum()) * m
                    ids[dr] = np.arange(n_dir, n_dir + cntd).reshape(-1, m)
                    n_dir += cntd
                    if cntd:
                        for eid in np.nonzero(dr)[0]:
                            dir_rows.append((li, kind, int(eid)))
                table[kind] = ids
            self._ext_ids.append(table)
        self.n_active = n_active
        self.n_dirichlet = n_dir
        # dirichlet ids were assigned starting at zero; shift behind the
        # active block and collect the prescribed values in the same order
        vals = np.zeros(n_dir)
        for li in range(len(self.levels)):
            for kind in self._kinds(li):
                ids = self._ext_ids[li][kind]
                dr = self._status[li][kind] == _DIRICHLET
                ids[dr] += n_active
        for li, kind, eid in dir_rows:
            ids = self._ext_ids[li][kind][eid] - n_active
            coeffs = self._dirichlet.get((li, kind, eid))
            if coeffs is None:
                raise RuntimeError("missing Dirichlet coefficients")
            vals[ids] = coeffs
        self.dirichlet_values = vals
        self._ids_memo: dict = {}

    # -- queries ---------------------------------------------------------------

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def status(self, level: int, kind: str, entity: int) -> DofStatus:
        code = self._status[level][kind][entity]
        if code == _ACTIVE:
            return DofStatus.ACTIVE
        if code == _DIRICHLET:
            return DofStatus.DIRICHLET
        return DofStatus.ZERO

    def element_ids(self, level: int, elem) -> np.ndarray:
        """Extended function ids of an element, aligned with the basis ordering.

        Active functions map to [0, n_active), Dirichlet functions to
        [n_active, n_active + n_dirichlet), zero-constrained functions to -1.
        """
        memo_key = (level, tuple(elem))
        hit = self._ids_memo.get(memo_key)
        if hit is not None:
            return hit
        lv = self.levels[level]
        kinds, di, dj, mode = _gather_plan(lv.basis.p, lv.basis.dim, lv.basis.space_kind)
        tab = self._ext_ids[level]
        out = np.empty(kinds.size, dtype=np.int64)
        if lv.mesh.dim == 1:
            (i,) = elem
            vmask = kinds == 0
            out[vmask] = tab["vertex"][i + di[vmask], 0]
            cmask = kinds == 3
            out[cmask] = tab["cell"][i, mode[cmask]]
            self._ids_memo[memo_key] = out
            return out
        i, j = elem
        n2 = lv.mesh.shape[1]
        vmask = kinds == 0
        out[vmask] = tab["vertex"][(i + di[vmask]) * (n2 + 1) + (j + dj[vmask]), 0]
        xmask = kinds == 1
        out[xmask] = tab["xedge"][i * (n2 + 1) + (j + dj[xmask]), mode[xmask]]
        ymask = kinds == 2
        out[ymask] = tab["yedge"][(i + di[ymask]) * n2 + j, mode[ymask]]
        cmask = kinds == 3
        out[cmask] = tab["cell"][i * n2 + j, mode[cmask]]
        self._ids_memo[memo_key] = out
        return out


def count_active(space: MultiLevelSpace) -> int:
    """Number of globally active (unknown) functions."""
    return space.n_active


# -- face/entity geometry helpers ----------------------------------------------


def _face_entities(mesh: CartesianMesh, axis: int, side: int, coord: float, tol: float):
    """Entity ids (per kind) lying in the plane ``x_axis == coord``.

    ``side`` selects the mesh face when coord is a mesh bound; entities are
    matched by coordinate so the helper also works for domain faces cutting
    through an intermediate breakpoint plane.
    """
    bps = mesh.breakpoints
    out: dict[str, list[int]] = {}
    k = _axis_index(bps[axis], coord, tol)
    if k is None:
        return out
    if mesh.dim == 1:
        out["vertex"] = [k]
        return out
    n1, n2 = mesh.shape
    if axis == 0:
        out["vertex"] = [k * (n2 + 1) + iy for iy in range(n2 + 1)]
        out["yedge"] = [k * n2 + j for j in range(n2)]
    else:
        out["vertex"] = [ix * (n2 + 1) + k for ix in range(n1 + 1)]
        out["xedge"] = [i * (n2 + 1) + k for i in range(n1)]
    return out


def _axis_index(axis_bps, coord: float, tol: float):
    j = bisect_left(axis_bps, coord - tol)
    if j < len(axis_bps) and abs(axis_bps[j] - coord) <= tol:
        return j
    return None


def build_space(levels, domain: Box) -> MultiLevelSpace:
    """Superpose the levels and apply the overlay-boundary zero constraints.

    Level 0 must cover the domain exactly; every overlay level k >= 1 gets a
    ZERO status on each function with nonzero trace on a face of its mesh box
    that does not lie on the domain boundary.
    """
    levels = list(levels)
    if not levels:
        raise ValueError("at least one level is required")
    tol = geom_tol(domain)
    lv0 = levels[0].mesh.box
    if not (
        all(abs(a - b) <= tol for a, b in zip(lv0.lo, domain.lo))
        and all(abs(a - b) <= tol for a, b in zip(lv0.hi, domain.hi))
    ):
        raise ValueError("level 0 mesh must cover the domain")
    for lv in levels[1:]:
        if not domain.contains_box(lv.mesh.box, tol=tol):
            raise ValueError("overlay mesh not contained in the domain")

    space = MultiLevelSpace(levels, domain)
    status = [{k: v.copy() for k, v in lvl.items()} for lvl in space._status]
    for li, lv in enumerate(levels[1:], start=1):
        mesh = lv.mesh
        for axis in range(mesh.dim):
            for side in (0, 1):
                coord = mesh.box.lo[axis] if side == 0 else mesh.box.hi[axis]
                on_domain = (
                    abs(coord - domain.lo[axis]) <= tol
                    or abs(coord - domain.hi[axis]) <= tol
                )
                if on_domain:
                    continue
                for kind, ids in _face_entities(mesh, axis, side, coord, tol).items():
                    status[li][kind][ids] = _ZERO_OVERLAY
    return MultiLevelSpace(levels, domain, status)


def set_dirichlet(space: MultiLevelSpace, faces, g) -> MultiLevelSpace:
    """Prescribe ``g`` on domain-boundary faces by trace projection.

    ``faces`` is a list of ``(axis, side)`` pairs with side 0 (low) or
    1 (high).  Vertex coefficients are point values of ``g``; edge-mode
    coefficients come from a per-edge 1D L2 projection of ``g`` minus the
    linear vertex lift onto the edge bubbles.  Only ACTIVE functions are
    affected, so overlay-boundary zeros keep priority.
    """
    new = space._copy()
    dom = space.domain
    tol = space.tol
    pts, wts = gauss_rule(50)
    for axis, side in faces:
        if axis < 0 or axis >= dom.dim or side not in (0, 1):
            raise ValueError("face not on the domain boundary")
        coord = dom.lo[axis] if side == 0 else dom.hi[axis]
        for li, lv in enumerate(space.levels):
            mesh = lv.mesh
            ents = _face_entities(mesh, axis, side, coord, tol)
            for eid in ents.get("vertex", ()):
                if new._status[li]["vertex"][eid] not in (_ACTIVE, _DIRICHLET):
                    continue
                point = _vertex_point(mesh, eid)
                new._status[li]["vertex"][eid] = _DIRICHLET
                new._dirichlet[(li, "vertex", eid)] = np.array([float(g(point))])
            p = lv.basis.p
            if p < 2:
                continue
            vals_b, _ = eval_legendre_1d(p, pts)
            bub = vals_b[:, 2:]
            gram = bub.T @ (wts[:, None] * bub)
            for kind in ("xedge", "yedge"):
                for eid in ents.get(kind, ()):
                    st = new._status[li][kind][eid]
                    if st not in (_ACTIVE, _DIRICHLET):
                        continue
                    p0, p1 = _edge_endpoints(mesh, kind, eid)
                    # g along the edge in reference coordinates, minus the lift
                    xs = np.array(
                        [
                            [a + 0.5 * (t + 1.0) * (b - a) for a, b in zip(p0, p1)]
                            for t in pts
                        ]
                    )
                    gv = np.array([float(g(x)) for x in xs])
                    lift = vals_b[:, 0] * float(g(p0)) + vals_b[:, 1] * float(g(p1))
                    rhs = bub.T @ (wts * (gv - lift))
                    coeffs = np.linalg.solve(gram, rhs)
                    new._status[li][kind][eid] = _DIRICHLET
                    new._dirichlet[(li, kind, eid)] = coeffs
    return MultiLevelSpace(space.levels, space.domain, new._status, new._dirichlet)


def _vertex_point(mesh: CartesianMesh, vid: int):
    if mesh.dim == 1:
        return (mesh.breakpoints[0][vid],)
    n2 = mesh.shape[1]
    ix, iy = divmod(vid, n2 + 1)
    return (mesh.breakpoints[0][ix], mesh.breakpoints[1][iy])


def _edge_endpoints(mesh: CartesianMesh, kind: str, eid: int):
    n1, n2 = mesh.shape
    if kind == "xedge":
        i, j = divmod(eid, n2 + 1)
        y = mesh.breakpoints[1][j]
        return (mesh.breakpoints[0][i], y), (mesh.breakpoints[0][i + 1], y)
    i, j = divmod(eid, n2)
    x = mesh.breakpoints[0][i]
    return (x, mesh.breakpoints[1][j]), (x, mesh.breakpoints[1][j + 1])


# -- fitted (nested) deactivation ------------------------------------------------


def apply_fitted_deactivation(space: MultiLevelSpace, nesting=None) -> MultiLevelSpace:
    """Deactivation rules for nested dyadic refinement ladders.

    (a) internal modes of any element covered by the next level are zeroed;
    (b) a vertex/edge entity is zeroed when the same entity exists at the next
    level and the finer copy has not itself been removed by an overlay
    (continuity) constraint -- prescribed (Dirichlet) copies count as present.
    The sweep runs from the finest to the coarsest level, so chains of copies
    keep exactly the finest representative alive.
    """
    new = space._copy()
    levels = space.levels
    tol = space.tol
    L = len(levels)
    _validate_nesting(levels, tol)

    for k in range(L - 1):
        fine_box = levels[k + 1].mesh.box
        covered = None if nesting is None else set(map(tuple, nesting.get(k, ())))
        mesh = levels[k].mesh
        for elem in mesh.element_indices():
            if covered is not None:
                is_cov = elem in covered
            else:
                eb_lo = tuple(mesh.breakpoints[a][e] for a, e in enumerate(elem))
                eb_hi = tuple(mesh.breakpoints[a][e + 1] for a, e in enumerate(elem))
                is_cov = fine_box.contains_box(Box(eb_lo, eb_hi), tol=tol)
            if is_cov:
                cid = mesh.linear_index(elem)
                new._status[k]["cell"][cid] = _ZERO_DEDUP

    blocked = (_ACTIVE, _DIRICHLET, _ZERO_DEDUP)
    for k in range(L - 2, -1, -1):
        mesh = levels[k].mesh
        fine = levels[k + 1].mesh
        st = new._status[k]
        fst = new._status[k + 1]
        nv = _entity_counts(levels[k])["vertex"]
        for vid in range(nv):
            if st["vertex"][vid] == _ZERO_OVERLAY:
                continue
            point = _vertex_point(mesh, vid)
            fid = _vertex_lookup(fine, point, tol)
            if fid is not None and fst["vertex"][fid] in blocked:
                st["vertex"][vid] = _ZERO_DEDUP
                new._dirichlet.pop((k, "vertex", vid), None)
        if mesh.dim == 1:
            continue
        for kind in ("xedge", "yedge"):
            n_ent = _entity_counts(levels[k])[kind]
            for eid in range(n_ent):
                if st[kind][eid] == _ZERO_OVERLAY or levels[k].basis.p < 2:
                    continue
                if _edge_refined_and_blocked(mesh, fine, fst, kind, eid, tol, blocked):
                    st[kind][eid] = _ZERO_DEDUP
                    new._dirichlet.pop((k, kind, eid), None)
    return MultiLevelSpace(space.levels, space.domain, new._status, new._dirichlet)


def _vertex_lookup(mesh: CartesianMesh, point, tol: float):
    idx = []
    for a, x in enumerate(point):
        j = _axis_index(mesh.breakpoints[a], x, tol)
        if j is None:
            return None
        idx.append(j)
    if mesh.dim == 1:
        return idx[0]
    return idx[0] * (mesh.shape[1] + 1) + idx[1]


def _edge_refined_and_blocked(mesh, fine, fine_status, kind, eid, tol, blocked):
    """True when the fine level refines this edge and any piece stays present.

    The refined counterparts of an edge are the fine sub-edges tiling it and
    the fine vertices strictly inside it.
    """
    (x0, y0), (x1, y1) = _edge_endpoints(mesh, kind, eid)
    fn1, fn2 = fine.shape
    if kind == "xedge":
        row = _axis_index(fine.breakpoints[1], y0, tol)
        if row is None:
            return False
        a0 = _axis_index(fine.breakpoints[0], x0, tol)
        a1 = _axis_index(fine.breakpoints[0], x1, tol)
        if a0 is None or a1 is None:
            return False
        for i in range(a0, a1):
            if fine_status["xedge"][i * (fn2 + 1) + row] in blocked:
                return True
        for i in range(a0 + 1, a1):
            if fine_status["vertex"][i * (fn2 + 1) + row] in blocked:
                return True
        return False
    col = _axis_index(fine.breakpoints[0], x0, tol)
    if col is None:
        return False
    b0 = _axis_index(fine.breakpoints[1], y0, tol)
    b1 = _axis_index(fine.breakpoints[1], y1, tol)
    if b0 is None or b1 is None:
        return False
    for j in range(b0, b1):
        if fine_status["yedge"][col * fn2 + j] in blocked:
            return True
    for j in range(b0 + 1, b1):
        if fine_status["vertex"][col * (fn2 + 1) + j] in blocked:
            return True
    return False


def _validate_nesting(levels, tol: float):
    for k in range(1, len(levels)):
        parent = levels[k - 1].mesh
        child = levels[k].mesh
        for a in range(parent.dim):
            pb = parent.breakpoints[a]
            if _axis_index(pb, child.box.lo[a], tol) is None or _axis_index(
                pb, child.box.hi[a], tol
            ) is None:
                raise ValueError(f"level {k} box not aligned with level {k - 1} breakpoints")
            for c in child.breakpoints[a]:
                if _axis_index(pb, c, tol) is not None:
                    continue
                j = bisect_left(pb, c)
                mid = 0.5 * (pb[j - 1] + pb[j])
                if abs(c - mid) > tol:
                    raise ValueError(
                        f"level {k} breakpoint {c} is neither a level {k - 1} "
                        "breakpoint nor an element midpoint"
                    )
