import numpy as np
import pytest

from overlayhp.assembly import WeakForm, apply_constraints, assemble
from overlayhp.basis import BasisSpec
from overlayhp.mesh import Box, CartesianMesh, build_uniform_mesh
from overlayhp.postproc import (
    FieldSolution,
    compute_energy,
    evaluate,
    grid_to_csv,
    relative_energy_error,
    sample_grid,
)
from overlayhp.regions import AT_LEAST_ONE, compute_regions
from overlayhp.solvers import solve_direct
from overlayhp.space import LevelSpec, build_space, set_dirichlet


def _regions_for(space):
    return compute_regions([(i, lv.mesh) for i, lv in enumerate(space.levels)], AT_LEAST_ONE)


def _linear_1d_solution():
    lv = LevelSpec(CartesianMesh([(0.0, 1.0)]), BasisSpec(1, 1))
    space = build_space([lv], Box((0.0,), (1.0,)))
    return FieldSolution(space, np.array([0.0, 1.0]))


def test_evaluate_linear_element():
    sol = _linear_1d_solution()
    for x in (0.1, 0.5, 0.95):
        value, grad = evaluate(sol, (x,))
        assert value == pytest.approx(x, abs=1e-14)
        assert grad[0] == pytest.approx(1.0, abs=1e-14)


def test_evaluate_outside_domain():
    sol = _linear_1d_solution()
    with pytest.raises(ValueError):
        evaluate(sol, (1.5,))


def test_overlay_contribution_vanishes_on_gamma_o():
    rng = np.random.default_rng(31)
    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (2, 2)), BasisSpec(2, 2, "trunk"))
    obox = Box((0.15, 0.25), (0.65, 0.85))
    overlay = LevelSpec(build_uniform_mesh(obox, (2, 2)), BasisSpec(2, 2, "trunk"))
    space = build_space([base, overlay], dom)
    coeffs = rng.standard_normal(space.n_active + space.n_dirichlet)
    sol = FieldSolution(space, coeffs)

    # isolate the overlay-level part of the field
    overlay_ids = set()
    for elem in overlay.mesh.element_indices():
        overlay_ids.update(int(i) for i in space.element_ids(1, elem) if i >= 0)
    iso = np.zeros_like(coeffs)
    for i in overlay_ids:
        iso[i] = coeffs[i]
    sol_overlay = FieldSolution(space, iso)

    ts = np.linspace(0.0, 1.0, 25)
    boundary_points = []
    for t in ts:
        boundary_points += [
            (obox.lo[0], obox.lo[1] + t * (obox.hi[1] - obox.lo[1])),
            (obox.hi[0], obox.lo[1] + t * (obox.hi[1] - obox.lo[1])),
            (obox.lo[0] + t * (obox.hi[0] - obox.lo[0]), obox.lo[1]),
            (obox.lo[0] + t * (obox.hi[0] - obox.lo[0]), obox.hi[1]),
        ]
    for pt in boundary_points:
        value, _ = evaluate(sol_overlay, pt)
        assert abs(value) < 1e-12


def test_field_continuous_across_overlay_boundary():
    rng = np.random.default_rng(77)
    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (3, 3)), BasisSpec(3, 2, "trunk"))
    obox = Box((0.12, 0.31), (0.74, 0.88))
    overlay = LevelSpec(build_uniform_mesh(obox, (3, 3)), BasisSpec(2, 2, "trunk"))
    space = build_space([base, overlay], dom)
    coeffs = rng.standard_normal(space.n_active + space.n_dirichlet)
    sol = FieldSolution(space, coeffs)
    delta = 1e-13
    scale = max(
        abs(evaluate(sol, pt)[0]) for pt in rng.uniform(0.05, 0.95, (20, 2))
    )
    for t in np.linspace(0.01, 0.99, 25):
        y = obox.lo[1] + t * (obox.hi[1] - obox.lo[1])
        for xf in (obox.lo[0], obox.hi[0]):
            inner, _ = evaluate(sol, (xf - delta, y))
            outer, _ = evaluate(sol, (xf + delta, y))
            assert abs(inner - outer) < 1e-10 * scale
        x = obox.lo[0] + t * (obox.hi[0] - obox.lo[0])
        for yf in (obox.lo[1], obox.hi[1]):
            inner, _ = evaluate(sol, (x, yf - delta))
            outer, _ = evaluate(sol, (x, yf + delta))
            assert abs(inner - outer) < 1e-10 * scale


def test_energy_of_linear_field():
    sol = _linear_1d_solution()
    space = sol.space
    assert compute_energy(sol, _regions_for(space)) == pytest.approx(1.0, rel=1e-14)


def test_energy_of_zero_field():
    sol = _linear_1d_solution()
    zero = FieldSolution(sol.space, np.zeros_like(sol.coefficients))
    assert compute_energy(zero, _regions_for(sol.space)) == 0.0


def test_corner_exact_energy_constant():
    # closed form evaluates to one quarter of log((sqrt(2)+2)/(2-sqrt(2)))
    value = 0.25 * np.log((np.sqrt(2.0) + 2.0) / (2.0 - np.sqrt(2.0)))
    assert value == pytest.approx(0.4406868, abs=1e-7)
    assert value == pytest.approx(0.5 * np.log(1.0 + np.sqrt(2.0)), rel=1e-15)


def test_relative_energy_error():
    assert relative_energy_error(1.0, 1.0) == 0.0
    assert relative_energy_error(1.0, 0.0) == 100.0
    assert relative_energy_error(1.0, 0.99) == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(ValueError):
        relative_energy_error(0.0, 1.0)
    e1 = relative_energy_error(1.0, 0.95)
    e2 = relative_energy_error(1.0, 0.90)
    assert e2 > e1


def test_energy_equals_quadratic_form():
    # cross-validation of assembly and evaluation, Dirichlet entries included
    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (2, 2)), BasisSpec(3, 2, "trunk"))
    overlay = LevelSpec(
        build_uniform_mesh(Box((0.2, 0.1), (0.8, 0.7)), (2, 2)), BasisSpec(2, 2, "trunk")
    )
    space = build_space([base, overlay], dom)
    g = lambda x: x[0] ** 2 - x[1]
    space = set_dirichlet(space, [(0, 0), (0, 1), (1, 0), (1, 1)], g)
    regions = _regions_for(space)
    system = assemble(space, regions, WeakForm(source=lambda p: np.cos(p[:, 0])))
    red, recover = apply_constraints(system)
    x = solve_direct(red)
    sol = FieldSolution(space, recover(x))
    quad_form = float(sol.coefficients @ (system.K @ sol.coefficients))
    energy = compute_energy(sol, regions)
    assert energy == pytest.approx(quad_form, rel=1e-10)


def test_sample_grid_shapes_and_values():
    sol = _linear_1d_solution()
    rows = sample_grid(sol, (4,))
    assert rows.shape == (5, 3)
    assert np.allclose(rows[:, 1], rows[:, 0])
    assert np.allclose(rows[:, 2], 1.0)

    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (1, 1)), BasisSpec(1, 2, "tensor"))
    space = build_space([base], dom)
    zero = FieldSolution.zero(space)
    rows = sample_grid(zero, (2, 2))
    assert rows.shape == (9, 5)
    assert np.allclose(rows[:, 2:], 0.0)


def test_grid_csv_headers(tmp_path):
    sol = _linear_1d_solution()
    path = tmp_path / "grid.csv"
    grid_to_csv(sample_grid(sol, (2,)), path)
    assert path.read_text().splitlines()[0] == "x,value,grad"

    dom = Box((0.0, 0.0), (1.0, 1.0))
    base = LevelSpec(build_uniform_mesh(dom, (1, 1)), BasisSpec(1, 2, "tensor"))
    zero = FieldSolution.zero(build_space([base], dom))
    path2 = tmp_path / "grid2.csv"
    grid_to_csv(sample_grid(zero, (2, 2)), path2)
    assert path2.read_text().splitlines()[0] == "x,y,value,grad_x,grad_y"
