import numpy as np
import pytest

from overlayhp.basis import BasisSpec
from overlayhp.mesh import Box, CartesianMesh, build_uniform_mesh
from overlayhp.space import (
    DofStatus,
    LevelSpec,
    apply_fitted_deactivation,
    build_space,
    count_active,
    set_dirichlet,
)


def _bar_fitted_levels(p):
    """Bisection ladder toward x = 2/3 with degrees p, p-1, ..., 1."""
    levels = [LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(p, 1))]
    lo, hi = 0.0, 1.0
    for k in range(1, p):
        mid = 0.5 * (lo + hi)
        levels.append(LevelSpec(CartesianMesh([(lo, mid, hi)]), BasisSpec(p - k, 1)))
        if 2.0 / 3.0 <= mid:
            hi = mid
        else:
            lo = mid
    return levels


def test_1d_overlay_statuses():
    base = LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(1, 1))
    overlay = LevelSpec(CartesianMesh([(1 / 3, 2 / 3, 1.0)]), BasisSpec(1, 1))
    space = build_space([base, overlay], Box((0.0,), (1.0,)))
    assert space.status(1, "vertex", 0) == DofStatus.ZERO
    assert space.status(1, "vertex", 1) == DofStatus.ACTIVE
    assert space.status(1, "vertex", 2) == DofStatus.ACTIVE  # on the domain boundary
    assert count_active(space) == 4


def test_2d_overlay_statuses():
    base = LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (1, 1)), BasisSpec(3, 2, "trunk"))
    overlay = LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (0.5, 0.5)), (1, 1)), BasisSpec(2, 2, "trunk"))
    space = build_space([base, overlay], Box((0.0, 0.0), (1.0, 1.0)))
    # overlay vertices: (0,0) id 0, (0,0.5) id 1, (0.5,0) id 2, (0.5,0.5) id 3
    assert space.status(1, "vertex", 0) == DofStatus.ACTIVE
    assert space.status(1, "vertex", 1) == DofStatus.ZERO
    assert space.status(1, "vertex", 2) == DofStatus.ZERO
    assert space.status(1, "vertex", 3) == DofStatus.ZERO
    # overlay active: 1 vertex + bottom edge + left edge = 3
    overlay_active = sum(
        1
        for kind, n in (("vertex", 4), ("xedge", 2), ("yedge", 2))
        for e in range(n)
        if space.status(1, kind, e) == DofStatus.ACTIVE
    )
    assert overlay_active == 3
    assert count_active(space) == 12 + 3


def test_single_level_all_active():
    lv = LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (2, 2)), BasisSpec(3, 2, "trunk"))
    space = build_space([lv], Box((0.0, 0.0), (1.0, 1.0)))
    # 9 vertices + 12 edges x 2 modes, no internal modes at p = 3
    assert count_active(space) == 33


def test_overlay_outside_domain_rejected():
    base = LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(1, 1))
    overlay = LevelSpec(CartesianMesh([(0.5, 1.5)]), BasisSpec(1, 1))
    with pytest.raises(ValueError):
        build_space([base, overlay], Box((0.0,), (1.0,)))


def test_empty_levels_rejected():
    with pytest.raises(ValueError):
        build_space([], Box((0.0,), (1.0,)))


def test_fitted_bar_p2_hand_case():
    levels = [
        LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(2, 1)),
        LevelSpec(CartesianMesh([(0.0, 0.5, 1.0)]), BasisSpec(1, 1)),
    ]
    space = build_space(levels, Box((0.0,), (1.0,)))
    space = apply_fitted_deactivation(space)
    # base vertices both have active level-1 counterparts, base bubble covered
    assert space.status(0, "vertex", 0) == DofStatus.ZERO
    assert space.status(0, "vertex", 1) == DofStatus.ZERO
    assert space.status(0, "cell", 0) == DofStatus.ZERO
    assert all(space.status(1, "vertex", v) == DofStatus.ACTIVE for v in range(3))
    assert count_active(space) == 3


def test_fitted_noop_without_overlays():
    lv = LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(3, 1))
    space = build_space([lv], Box((0.0,), (1.0,)))
    after = apply_fitted_deactivation(space)
    assert count_active(after) == count_active(space) == 4


def test_fitted_bar_dof_formula():
    dom = Box((0.0,), (1.0,))
    for p in range(2, 31):
        space = build_space(_bar_fitted_levels(p), dom)
        space = set_dirichlet(space, [(0, 0)], lambda x: 0.0)
        space = apply_fitted_deactivation(space)
        expected = 2 * (p - 1) + (p - 3) * (p - 2) // 2
        assert count_active(space) == expected, f"p={p}"


def test_fitted_bar_436_unknowns():
    space = build_space(_bar_fitted_levels(30), Box((0.0,), (1.0,)))
    space = set_dirichlet(space, [(0, 0)], lambda x: 0.0)
    space = apply_fitted_deactivation(space)
    assert count_active(space) == 436


def test_non_nested_rejected():
    base = LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(2, 1))
    overlay = LevelSpec(CartesianMesh([(1 / 3, 2 / 3, 1.0)]), BasisSpec(1, 1))
    space = build_space([base, overlay], Box((0.0,), (1.0,)))
    with pytest.raises(ValueError):
        apply_fitted_deactivation(space)


def _corner_fitted_levels(p):
    levels = [LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (1, 1)), BasisSpec(p, 2, "trunk"))]
    for k in range(1, p):
        s = 2.0 ** (1 - k)
        mesh = build_uniform_mesh(Box((0.0, 0.0), (s, s)), (2, 2))
        levels.append(LevelSpec(mesh, BasisSpec(p - k, 2, "trunk")))
    return levels


def _corner_unfitted_levels(p, alpha):
    levels = [LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (1, 1)), BasisSpec(p, 2, "trunk"))]
    for k in range(1, p):
        s = alpha**k
        mesh = build_uniform_mesh(Box((0.0, 0.0), (s, s)), (1, 1))
        levels.append(LevelSpec(mesh, BasisSpec(p - k, 2, "trunk")))
    return levels


def _sqrt_rho(x):
    return np.hypot(x[0], x[1]) ** 0.5


def test_corner_fitted_28_dofs():
    space = build_space(_corner_fitted_levels(4), Box((0.0, 0.0), (1.0, 1.0)))
    space = set_dirichlet(space, [(0, 1), (1, 1)], _sqrt_rho)
    space = apply_fitted_deactivation(space)
    assert count_active(space) == 28


def test_corner_fitted_3013_dofs():
    space = build_space(_corner_fitted_levels(19), Box((0.0, 0.0), (1.0, 1.0)))
    space = set_dirichlet(space, [(0, 1), (1, 1)], _sqrt_rho)
    space = apply_fitted_deactivation(space)
    assert count_active(space) == 3013


def test_corner_unfitted_17_dofs():
    space = build_space(_corner_unfitted_levels(4, 0.5), Box((0.0, 0.0), (1.0, 1.0)))
    space = set_dirichlet(space, [(0, 1), (1, 1)], _sqrt_rho)
    assert count_active(space) == 17


def test_corner_unfitted_1177_dofs():
    # the count only depends on the ladder depth, not the overlay size factor,
    # as long as the deepest overlay stays geometrically resolvable
    for alpha in (0.5, 0.3):
        space = build_space(_corner_unfitted_levels(19, alpha), Box((0.0, 0.0), (1.0, 1.0)))
        space = set_dirichlet(space, [(0, 1), (1, 1)], _sqrt_rho)
        assert count_active(space) == 1177


def _bar_unfitted_levels(p, alpha):
    levels = [LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(p, 1))]
    for k in range(1, p):
        w = alpha**k
        lo, hi = 2.0 / 3.0 - 0.5 * w, 2.0 / 3.0 + 0.5 * w
        levels.append(LevelSpec(CartesianMesh([(lo, 0.5 * (lo + hi), hi)]), BasisSpec(p - k, 1)))
    return levels


def test_bar_unfitted_212_dofs():
    space = build_space(_bar_unfitted_levels(15, 2.0 / 3.0), Box((0.0,), (1.0,)))
    space = set_dirichlet(space, [(0, 0)], lambda x: 0.0)
    # the level-1 overlay endpoint lies exactly on the free domain boundary
    # and therefore stays active, giving one more unknown than the target 211
    assert count_active(space) == 212


def test_heat_dof_counts_static():
    dom = Box((-5.0, -5.0), (5.0, 5.0))
    base = LevelSpec(build_uniform_mesh(dom, (11, 11)), BasisSpec(4, 2, "trunk"))
    space = build_space([base], dom)
    space = set_dirichlet(space, [(0, 0), (0, 1), (1, 0), (1, 1)], lambda x: 0.0)
    assert count_active(space) == 881


def test_heat_dof_counts_dynamic():
    dom = Box((-5.0, -5.0), (5.0, 5.0))
    levels = [LevelSpec(build_uniform_mesh(dom, (11, 11)), BasisSpec(4, 2, "trunk"))]
    center = (0.0, -2.5)
    for size, p in ((2.5, 3), (1.25, 2), (0.625, 1)):
        b = Box(
            (center[0] - size / 2, center[1] - size / 2),
            (center[0] + size / 2, center[1] + size / 2),
        )
        levels.append(LevelSpec(build_uniform_mesh(b, (11, 11)), BasisSpec(p, 2, "trunk")))
    space = build_space(levels, dom)
    space = set_dirichlet(space, [(0, 0), (0, 1), (1, 0), (1, 1)], lambda x: 0.0)
    assert count_active(space) == 1841


def test_heat_dof_counts_reference():
    dom = Box((-5.0, -5.0), (5.0, 5.0))
    base = LevelSpec(build_uniform_mesh(dom, (501, 501)), BasisSpec(1, 2, "tensor"))
    space = build_space([base], dom)
    space = set_dirichlet(space, [(0, 0), (0, 1), (1, 0), (1, 1)], lambda x: 0.0)
    assert count_active(space) == 250000


def test_global_ids_bijection():
    base = LevelSpec(build_uniform_mesh(Box((0.0, 0.0), (1.0, 1.0)), (2, 2)), BasisSpec(3, 2, "trunk"))
    overlay = LevelSpec(build_uniform_mesh(Box((0.1, 0.2), (0.7, 0.9)), (2, 2)), BasisSpec(2, 2, "trunk"))
    space = build_space([base, overlay], Box((0.0, 0.0), (1.0, 1.0)))
    seen = set()
    for li, lv in enumerate(space.levels):
        for elem in lv.mesh.element_indices():
            ids = space.element_ids(li, elem)
            seen.update(int(i) for i in ids if 0 <= i < space.n_active)
    assert seen == set(range(space.n_active))


def test_dirichlet_linear_reproduction():
    from overlayhp.space import _vertex_point

    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (2, 2)), BasisSpec(3, 2, "trunk"))
    space = build_space([base], dom)
    g = lambda x: 2.0 * x[0] - 0.5 * x[1] + 0.25
    space = set_dirichlet(space, [(0, 0)], g)
    # vertex coefficients reproduce g, all edge-mode coefficients vanish
    for (li, kind, eid), coeffs in space._dirichlet.items():
        if kind == "vertex":
            assert coeffs[0] == pytest.approx(g(_vertex_point(base.mesh, eid)))
        else:
            assert np.max(np.abs(coeffs)) < 1e-12


def test_dirichlet_projection_residual():
    # trace projection satisfies the bubble-orthogonality of the residual
    from overlayhp.basis import eval_legendre_1d
    from overlayhp.regions import gauss_rule

    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (1, 1)), BasisSpec(3, 2, "trunk"))
    space = build_space([base], dom)
    space = set_dirichlet(space, [(0, 1), (1, 1)], _sqrt_rho)
    pts, wts = gauss_rule(50)
    vals, _ = eval_legendre_1d(3, pts)
    # edge x = 1: varying y in [0, 1]
    ys = 0.5 * (pts + 1.0)
    gv = np.sqrt(np.hypot(1.0, ys))
    coeffs = space._dirichlet[(0, "yedge", 1)]
    lift = vals[:, 0] * _sqrt_rho((1.0, 0.0)) + vals[:, 1] * _sqrt_rho((1.0, 1.0))
    trace = lift + vals[:, 2:] @ coeffs
    for b in range(2, 4):
        resid = np.sum(wts * (trace - gv) * vals[:, b])
        assert abs(resid) < 1e-12


def test_homogeneous_dirichlet_zero_coefficients():
    dom = Box((0.0,), (1.0,))
    base = LevelSpec(CartesianMesh([(0.0, 0.5, 1.0)]), BasisSpec(3, 1))
    space = build_space([base], dom)
    space = set_dirichlet(space, [(0, 0), (0, 1)], lambda x: 0.0)
    assert space.n_dirichlet == 2
    assert np.all(space.dirichlet_values == 0.0)
