import math

import numpy as np
import pytest

from conftest import cube, make_scene
from stabbing.engine import UnknownMode, extremal_lines_through_line
from stabbing.extremal import certify, contacts_of, depth, extremality_probe, match_sets
from stabbing.geometry import PluckerLine, Polyhedron, stabs, tangent_at_edge
from stabbing.linespace import sigma_eval
from stabbing.oracle import brute_force_extremal_lines, brute_force_global
from stabbing.permutations import sample_transversals
from stabbing.regions import (
    extremal_lines_global,
    pairwise_region,
    region_disjoint_case,
    region_through_line,
    reguli_for_edge,
)
from stabbing.scenes import gen_random_scene

TILTED = PluckerLine.from_point_direction((0.1, -0.05, 0.0), (0.07, 0.04, 1.0))


def _cubes_scene():
    P = Polyhedron.box((-1, -1, -1), (1, 1, 1)).transformed(translation=[2.5, 0.3, 0.1])
    Q = Polyhedron.box((-1, -1, -1), (1, 1, 1)).transformed(translation=[-2.4, -0.2, 0.4])
    R = np.array([[0.96, -0.28, 0.0], [0.28, 0.96, 0.0], [0.0, 0.0, 1.0]])
    return make_scene([P.transformed(rotation=R), Q], pivot=TILTED)


def test_single_body_matches_oracle():
    scene = gen_random_scene(1, 8, seed=2)
    eng = extremal_lines_through_line(scene)
    orc = brute_force_extremal_lines(scene)
    assert match_sets(eng, orc) == ([], [])
    assert len(eng) > 0


@pytest.mark.parametrize("seed", [0, 1])
def test_random_scene_matches_oracle(seed):
    scene = gen_random_scene(3, 8, seed=seed, flags={"pivot_disjoint": False})
    eng = extremal_lines_through_line(scene)
    orc = brute_force_extremal_lines(scene)
    assert match_sets(eng, orc) == ([], [])


def test_modes_identical():
    scene = gen_random_scene(3, 8, seed=4, flags={"pivot_disjoint": False})
    a = extremal_lines_through_line(scene, "structured", seed=7)
    b = extremal_lines_through_line(scene, "randomized_dc", seed=7)
    assert [r.features for r in a] == [r.features for r in b]
    assert match_sets(a, b) == ([], [])


def test_unknown_mode():
    with pytest.raises(UnknownMode) as ei:
        extremal_lines_through_line(gen_random_scene(2, 6, seed=0), "greedy")
    assert ei.value.code == "unknown-mode"


def test_vertex_certification_and_probe():
    scene = gen_random_scene(3, 8, seed=5, flags={"pivot_disjoint": False})
    verts = extremal_lines_through_line(scene)
    assert verts
    for v in verts:
        assert v.depth == 0 and depth(v.line, scene) == 0
        for P in scene.polyhedra:
            assert stabs(v.line, P)
        for f in v.features:
            if f[1] == "e":
                assert tangent_at_edge(v.line, scene.polyhedra[f[0]], f[2])
        assert v.codim >= 3
        assert extremality_probe(v, scene, scene.pivot, delta=1e3 * 1e-9)


def test_empty_region_when_unreachable():
    # two cubes far apart on the same side: no line through the pivot meets both
    scene = make_scene([cube((3, -1, -1), (4, 1, 1)), cube((3, 50, -1), (4, 52, 1))], pivot=TILTED)
    reg = region_through_line(scene)
    assert reg.vertices == []
    assert reg.component_count(16) == 0


def test_nested_cubes_region_membership():
    from stabbing.oracle import grid_region_check

    scene = make_scene([cube((-1, -1, -2), (1, 1, -0.5)), cube((-0.8, -0.7, 0.5), (0.9, 0.8, 2))], pivot=TILTED)
    reg = region_through_line(scene)
    rep = grid_region_check(scene, 30, reg, band=1e-6)
    assert rep.count > 0
    assert rep.unexplained == []


def test_region_eq1_samples():
    scene = gen_random_scene(3, 8, seed=6, flags={"pivot_disjoint": False})
    reg = region_through_line(scene)
    samples = sample_transversals(scene, 300, seed=1)
    assert samples
    for c, _L in samples:
        lo = max(sigma_eval(P, c.theta, c.phi, "lower", scene.pivot) for P in scene.polyhedra)
        hi = min(sigma_eval(P, c.theta, c.phi, "upper", scene.pivot) for P in scene.polyhedra)
        assert lo <= c.z <= hi
        assert reg.contains(c.theta, c.phi, c.z)
        assert not reg.contains(c.theta, c.phi, hi + 1e-3)


def test_pairwise_far_apart_is_empty():
    P = cube((3, -1, -1), (4, 1, 1))
    Q = P.transformed(translation=[0, 40, 0])
    assert pairwise_region(P, Q, TILTED).vertices == []


def test_pairwise_nested_equals_inner():
    inner = Polyhedron.from_points(np.random.default_rng(3).normal(size=(10, 3)) * 0.4)
    lo, hi = inner.vertices.min(0) - 0.3, inner.vertices.max(0) + 0.3
    box = Polyhedron.box(lo, hi)
    pivot = PluckerLine.from_point_direction((0.05, 0.02, 0), (0.1, 0.06, 1))
    both = pairwise_region(box, inner, pivot)
    alone = region_through_line(make_scene([inner], pivot=pivot))
    for th in np.linspace(0.1, 6.2, 13):
        phis = np.linspace(0.1, 3.0, 15)
        a, b = both.bounds(float(th), phis)
        c, d = alone.bounds(float(th), phis)
        assert np.allclose(a, c, equal_nan=True) and np.allclose(b, d, equal_nan=True)


def test_pairwise_two_cubes_matches_oracle():
    scene = _cubes_scene()
    reg = pairwise_region(*scene.polyhedra, scene.pivot)
    orc = brute_force_extremal_lines(scene)
    assert match_sets(reg.vertices, orc) == ([], [])
    assert len(orc) > 0


def test_reguli_empty_when_no_common_tangent():
    P = cube((3, -1, -1), (4, 1, 1))
    Q = P.transformed(translation=[0, 40, 0])
    scene = make_scene([P, Q], pivot=TILTED)
    for e in P.edges:
        for r in reguli_for_edge((0, e.index), scene):
            for L in r.sample(4):
                assert not (stabs(L, P) and stabs(L, Q))


def test_reguli_lines_are_tangent():
    scene = _cubes_scene()
    found = 0
    for e in scene.polyhedra[0].edges:
        for r in reguli_for_edge((0, e.index), scene):
            for L in r.sample(3):
                found += 1
                assert tangent_at_edge(L, scene.polyhedra[0], r.edge0[1], 1e-7)
                k, j = r.edge
                a, b = scene.polyhedra[k].edge_points[j]
                n = np.cross(L.unit_direction(), b - a)
                assert abs((a - L.point()) @ n) / np.linalg.norm(n) < 1e-7
    assert found > 0


def test_disjoint_case_two_cubes_equals_pairwise():
    scene = _cubes_scene()
    a = region_disjoint_case(scene)
    b = pairwise_region(*scene.polyhedra, scene.pivot)
    assert match_sets(a.vertices, b.vertices) == ([], [])


def test_disjoint_case_k4_equals_structured():
    scene = gen_random_scene(4, 8, seed=9, flags={"pivot_disjoint": True})
    assert scene.flags["pivot_disjoint"]
    a = region_disjoint_case(scene)
    b = region_through_line(scene)
    assert match_sets(a.vertices, b.vertices) == ([], [])


def test_global_two_bodies_matches_oracle():
    scene = gen_random_scene(2, 6, seed=1)
    eng = extremal_lines_global(scene)
    orc = brute_force_global(scene)
    assert match_sets(eng, orc) == ([], [])
    assert eng


def test_global_empty_scene():
    assert extremal_lines_global(make_scene([])) == []
    assert extremal_lines_through_line(make_scene([])) == []


def test_depth_counts():
    scene = make_scene([cube(), cube((3, -1, -1), (5, 1, 1))])
    assert depth(PluckerLine.from_point_direction((0, 0, 0), (1, 0, 0.01)), scene) == 0
    assert depth(PluckerLine.from_point_direction((0, 10, 0), (1, 0, 0)), scene) == 2
    rng = np.random.default_rng(2)
    for _ in range(50):
        L = PluckerLine.from_point_direction(rng.normal(size=3) * 2, rng.normal(size=3))
        assert depth(L, scene) == sum(not stabs(L, P) for P in scene.polyhedra)
