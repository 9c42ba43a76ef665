import numpy as np
import pytest

from overlayhp.mesh import (
    Box,
    CartesianMesh,
    build_uniform_mesh,
    element_box,
    from_local,
    locate_element,
    to_local,
)


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        Box((0.0, 0.0), (1.0, 0.0))


def test_uniform_single_element():
    mesh = build_uniform_mesh(Box((0.0,), (1.0,)), (1,))
    assert mesh.breakpoints == ((0.0, 1.0),)
    assert mesh.n_elements == 1


def test_uniform_3x3_exact_breakpoints():
    mesh = build_uniform_mesh(Box((0.0, 0.0), (3.0, 3.0)), (3, 3))
    for axis in mesh.breakpoints:
        assert axis == (0.0, 1.0, 2.0, 3.0)
    assert mesh.n_elements == 9


def test_uniform_offset_overlay():
    mesh = build_uniform_mesh(Box((0.15, 0.15), (2.15, 2.15)), (2, 2))
    for axis in mesh.breakpoints:
        assert axis == pytest.approx((0.15, 1.15, 2.15), abs=0.0)


def test_uniform_endpoints_no_drift():
    mesh = build_uniform_mesh(Box((0.1,), (0.9,)), (7,))
    assert mesh.breakpoints[0][0] == 0.1
    assert mesh.breakpoints[0][-1] == 0.9


def test_locate_basic():
    mesh = build_uniform_mesh(Box((0.0,), (1.0,)), (1,))
    assert locate_element(mesh, (0.5,)) == (0,)


def test_locate_2d_and_outside():
    mesh = build_uniform_mesh(Box((0.0, 0.0), (3.0, 3.0)), (3, 3))
    assert locate_element(mesh, (2.5, 0.5)) == (2, 0)
    assert locate_element(mesh, (3.5, 0.5)) is None


def test_locate_tie_breaks_to_lower_element():
    mesh = build_uniform_mesh(Box((0.0,), (3.0,)), (3,))
    assert locate_element(mesh, (1.0,)) == (0,)
    assert locate_element(mesh, (2.0,)) == (1,)
    assert locate_element(mesh, (0.0,)) == (0,)
    assert locate_element(mesh, (3.0,)) == (2,)


def test_element_box_examples():
    mesh = CartesianMesh([(0.0, 1.0, 2.0, 3.0)])
    assert element_box(mesh, (1,)) == Box((1.0,), (2.0,))
    mesh2 = CartesianMesh([(0.15, 1.15, 2.15), (0.15, 1.15, 2.15)])
    b = element_box(mesh2, (0, 1))
    assert b.lo == (0.15, 1.15) and b.hi == (1.15, 2.15)
    mesh3 = CartesianMesh([(0.0, 1.0)])
    assert element_box(mesh3, (0,)) == Box((0.0,), (1.0,))
    with pytest.raises(ValueError):
        element_box(mesh, (3,))


def test_to_local_examples():
    e = Box((0.0,), (1.0,))
    loc = to_local(e, Box((0.25,), (0.75,)))
    assert loc.lo == (-0.5,) and loc.hi == (0.5,)
    loc = to_local(e, Box((0.0,), (1.0,)))
    assert loc.lo == (-1.0,) and loc.hi == (1.0,)
    e2 = Box((2.0, 1.0), (4.0, 4.0))
    loc = to_local(e2, Box((2.0, 1.0), (3.0, 1.5)))
    assert loc.lo == (-1.0, -1.0)
    assert loc.hi == pytest.approx((0.0, -2.0 / 3.0), abs=1e-15)


def test_to_local_rejects_outside():
    with pytest.raises(ValueError):
        to_local(Box((0.0,), (1.0,)), Box((0.5,), (1.5,)))


def test_partition_property():
    rng = np.random.default_rng(7)
    for _ in range(10):
        bps = np.sort(rng.uniform(0, 1, 5))
        while np.min(np.diff(bps)) < 1e-3:
            bps = np.sort(rng.uniform(0, 1, 5))
        mesh = CartesianMesh([bps, np.array([0.0, 0.4, 1.0])])
        total = sum(element_box(mesh, idx).volume() for idx in mesh.element_indices())
        assert total == pytest.approx(mesh.box.volume(), rel=1e-12)


def test_locate_centroids():
    mesh = CartesianMesh([(0.0, 0.3, 1.0, 1.4), (0.0, 0.5, 2.0)])
    for idx in mesh.element_indices():
        c = element_box(mesh, idx).center()
        assert locate_element(mesh, c) == idx


def test_roundtrip_affine():
    rng = np.random.default_rng(3)
    e = Box((2.0, 1.0), (4.5, 1.7))
    for _ in range(50):
        a = np.sort(rng.uniform(-1, 1, (2, 2)), axis=0)
        a[1] = np.maximum(a[1], a[0] + 1e-6)
        lo = from_local(e, a[0])
        hi = from_local(e, a[1])
        sub = to_local(e, Box(lo, hi))
        assert np.allclose(sub.lo, a[0], atol=1e-12)
        assert np.allclose(sub.hi, a[1], atol=1e-12)
