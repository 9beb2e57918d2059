import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cube, z_axis
from stabbing.geometry import (
    CoincidentPoints,
    ConvexityViolation,
    DegenerateQuadruple,
    Overlapping,
    PluckerLine,
    Polyhedron,
    classify_contact,
    incidence_residual,
    plucker_from_points,
    separating_plane_bodies,
    separating_planes_line_body,
    side_operator,
    stabs,
    tangent_at_edge,
    transversals_to_four_lines,
)

coord = st.floats(-10, 10, allow_nan=False)
point = st.tuples(coord, coord, coord).map(np.array)


def test_plucker_z_axis():
    L = plucker_from_points((0, 0, 0), (0, 0, 1))
    assert np.allclose(L.direction, [0, 0, 1])
    assert np.allclose(L.moment, 0)


def test_plucker_shifted_axis():
    L = plucker_from_points((1, 0, 0), (1, 0, 1))
    assert np.allclose(L.direction, [0, 0, 1])
    assert np.allclose(L.moment, [0, -1, 0])


def test_plucker_coincident_points():
    with pytest.raises(CoincidentPoints) as ei:
        plucker_from_points((1, 2, 3), (1, 2, 3))
    assert ei.value.code == "coincident-points"


@given(point, point)
def test_self_incidence(p, q):
    if np.linalg.norm(p - q) < 1e-3:
        return
    L = plucker_from_points(p, q)
    assert abs(side_operator(L, L)) <= 1e-9 * max(1.0, np.linalg.norm(L.moment)) * np.linalg.norm(L.direction)
    assert L.plucker_residual() <= 1e-12


def test_side_operator_cases():
    x = plucker_from_points((0, 0, 0), (1, 0, 0))
    y = plucker_from_points((0, 0, 0), (0, 1, 0))
    par = plucker_from_points((0, 1, 1), (1, 1, 1))
    skew = plucker_from_points((0, 0, 1), (0, 1, 1))
    assert side_operator(x, y) == 0.0
    assert side_operator(x, par) == 0.0
    # skew lines: d_x . m_skew with m_skew = (0,0,1) x (0,1,0) = (-1,0,0)
    assert side_operator(x, skew) == pytest.approx(-1.0)
    assert side_operator(x, skew.reversed()) == pytest.approx(1.0)


def test_four_lines_concurrent_is_degenerate():
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]
    lines = [PluckerLine.from_point_direction((0, 0, 0), d) for d in dirs]
    with pytest.raises(DegenerateQuadruple) as ei:
        transversals_to_four_lines(*lines)
    assert ei.value.code == "degenerate-quadruple"


def test_four_lines_random_residual_and_sweep(rng):
    for _ in range(50):
        lines = [PluckerLine.from_point_direction(rng.normal(size=3), rng.normal(size=3)) for _ in range(4)]
        sols = transversals_to_four_lines(*lines)
        assert len(sols) <= 2
        for s in sols:
            assert incidence_residual(s, lines) <= 1e-9
    # sweep oracle on a fixed quadruple: lines through a point of l1 and meeting l2, l3
    rng2 = np.random.default_rng(5)
    lines = [PluckerLine.from_point_direction(rng2.normal(size=3), rng2.normal(size=3)) for _ in range(4)]
    sols = transversals_to_four_lines(*lines)
    ts = np.linspace(-200, 200, 400001)
    vals = _sweep_residual(lines, ts)
    roots = ts[:-1][np.sign(vals[:-1]) * np.sign(vals[1:]) < 0]
    assert len(roots) == len(sols)


def _sweep_residual(lines, t):
    """Side operator with l4 of the unique line through l1(t) meeting l2 and l3."""
    l1, l2, l3, l4 = lines
    x = l1.point()[None, :] + t[:, None] * l1.unit_direction()[None, :]
    n2 = np.cross(l2.unit_direction(), l2.point() - x)
    n3 = np.cross(l3.unit_direction(), l3.point() - x)
    d = np.cross(n2, n3)
    d /= np.linalg.norm(d, axis=1)[:, None]
    m = np.cross(x, d)
    return d @ l4.moment + m @ l4.direction


def test_stabs_cube():
    C = cube()
    assert stabs(z_axis(), C)
    assert not stabs(PluckerLine.from_point_direction((5, 0, 0), (0, 0, 1)), C)


def test_stabs_grazing_edge():
    C = cube()
    # passes exactly through the edge x=1, y=1
    L = PluckerLine.from_point_direction((1, 1, 0), (1, -1, 0.3))
    assert stabs(L, C)
    assert not stabs(PluckerLine.from_point_direction((1.01, 1.01, 0), (1, -1, 0.3)), C)


def _edge_index(P, a, b):
    for e in P.edges:
        pts = {tuple(P.vertices[i]) for i in e.vertices}
        if pts == {tuple(map(float, a)), tuple(map(float, b))}:
            return e.index
    raise AssertionError("edge not found")


def test_tangent_at_edge_cases():
    C = cube()
    e = _edge_index(C, (1, 1, -1), (1, 1, 1))
    collinear = PluckerLine.from_point_direction((1, 1, 0), (0, 0, 1))
    assert not tangent_at_edge(collinear, C, e)
    crossing = PluckerLine.from_point_direction((1, 1, 0), (1, -1, 0.3))
    assert tangent_at_edge(crossing, C, e)
    through_end = PluckerLine.from_point_direction((1, 1, 1), (1, -1, 0.3))
    assert not tangent_at_edge(through_end, C, e)
    assert classify_contact(through_end, C).kind == "vertex"


def test_separating_planes_line_body_disjoint():
    P = cube((1, -1, -1), (3, 1, 1))
    hs = separating_planes_line_body(z_axis(), P)
    assert len(hs) == 1
    h = hs[0]
    # the plane contains the pivot and leaves the cube strictly on its negative side
    assert abs(h.normal @ [0, 0, 1]) < 1e-9
    assert np.all(h.signed_distance(P.vertices) < 0)
    assert np.allclose(h.signed_distance(np.array([[0, 0, z] for z in (-5, 0, 5)])), 0)


def test_separating_planes_line_body_pierced():
    hs = separating_planes_line_body(z_axis(), cube())
    assert len(hs) == 2
    zs = sorted(h.offset / h.normal[2] for h in hs)
    assert zs == pytest.approx([-1, 1])
    for h in hs:
        assert np.all(h.signed_distance(cube().vertices) <= 1e-12)


def test_separating_planes_random(rng):
    from stabbing.scenes import random_polytope

    for _ in range(10):
        P = random_polytope(rng, rng.uniform(3, 5, size=3) * rng.choice([-1, 1], size=3), 1.5, 12)
        h = separating_planes_line_body(z_axis(), P)[0]
        assert np.all(h.signed_distance(P.vertices) < 0)
        pts = np.array([[0, 0, z] for z in np.linspace(-20, 20, 41)])
        assert np.allclose(h.signed_distance(pts), 0, atol=1e-9)


def test_separating_plane_bodies():
    P = cube((-4, -1, -1), (-2, 1, 1))
    Q = cube((2, -1, -1), (4, 1, 1))
    h = separating_plane_bodies(P, Q)
    assert abs(abs(h.normal[0]) - 1) < 1e-6
    assert abs(h.offset) < 1e-6
    with pytest.raises(Overlapping) as ei:
        separating_plane_bodies(cube(), cube((0, 0, 0), (2, 2, 2)))
    assert ei.value.code == "overlapping"


def test_separating_plane_translated_copies(rng):
    from stabbing.scenes import random_polytope

    P = random_polytope(rng, np.zeros(3), 1.0, 10)
    Q = P.transformed(translation=[3.0, 0.5, -0.2])
    h = separating_plane_bodies(P, Q)
    sp, sq = h.signed_distance(P.vertices), h.signed_distance(Q.vertices)
    assert (sp.max() < 0 < sq.min()) or (sq.max() < 0 < sp.min())


def test_convexity_violation():
    V = [[0, 0, 0], [2, 0, 0], [2, 2, 0], [1, 0.5, 0], [0, 2, 0], [1, 1, 3]]
    F = [[0, 3, 2, 1], [0, 1, 5], [1, 2, 5], [2, 3, 5], [3, 4, 5], [4, 0, 5], [0, 4, 3]]
    with pytest.raises(ConvexityViolation):
        Polyhedron(V, F)


def test_polyhedron_counts():
    C = cube()
    assert (len(C.vertices), C.n_facets, len(C.edges)) == (8, 6, 12)
    for e in C.edges:
        assert len(set(e.facets)) == 2
