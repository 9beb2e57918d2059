import math

import numpy as np
import pytest

from conftest import cube, make_scene
from stabbing.extremal import extremality_probe, match_sets
from stabbing.geometry import PluckerLine, Polyhedron, stabs, tangent_at_edge
from stabbing.oracle import (
    TooLarge,
    brute_force_extremal_lines,
    combination_count,
    grid_region_check,
)
from stabbing.regions import region_through_line
from stabbing.scenes import Scene, gen_random_scene

PIVOT = PluckerLine.from_point_direction((0.3, -0.2, 0.0), (0.11, 0.07, 1.0))


def _tetra(shift=(0.0, 0.0, 0.0)):
    V = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float) * 0.8 + [3.0, 0.4, 0.2] + np.asarray(shift)
    return Polyhedron.from_points(V)


def test_empty_scene():
    assert brute_force_extremal_lines(make_scene([])) == []


def test_tetrahedron_candidate_count():
    scene = make_scene([_tetra()], pivot=PIVOT)
    # vertex-edge, facet-edge and vertex-vertex pencils through the pivot
    assert combination_count(scene) == 4 * 6 + 4 * 6 + 4 * 4


def test_tetrahedron_stable_under_tiny_perturbation():
    base = brute_force_extremal_lines(make_scene([_tetra()], pivot=PIVOT))
    moved = brute_force_extremal_lines(make_scene([_tetra((1e-8, -1e-8, 1e-8))], pivot=PIVOT))
    assert base
    assert match_sets(base, moved, tol=1e-6) == ([], [])


def test_oracle_soundness():
    scene = gen_random_scene(3, 8, seed=12, flags={"pivot_disjoint": False})
    recs = brute_force_extremal_lines(scene)
    assert recs
    for r in recs:
        assert all(stabs(r.line, P) for P in scene.polyhedra)
        for f in r.features:
            if f[1] == "e":
                assert tangent_at_edge(r.line, scene.polyhedra[f[0]], f[2])
        assert extremality_probe(r, scene, scene.pivot, delta=1e-6)


def test_too_large():
    scene = gen_random_scene(3, 8, seed=12)
    with pytest.raises(TooLarge) as ei:
        brute_force_extremal_lines(scene, limit=10)
    assert ei.value.code == "too-large"


def test_grid_all_transversal_when_bodies_contain_pivot():
    box = Polyhedron.box((-2, -2, -20), (2, 2, 20))
    scene = make_scene([box, Polyhedron.box((-3, -3, -25), (3, 3, 25))], pivot=PIVOT)
    rep = grid_region_check(scene, 12, z_range=(-1.0, 1.0))
    assert rep.count == rep.inside.size


def test_grid_empty_region():
    P = cube((3, -1, -1), (4, 1, 1))
    scene = make_scene([P, P.transformed(translation=[0, 40, 0])], pivot=PIVOT)
    assert grid_region_check(scene, 16).count == 0


def test_grid_band_only_disagreements():
    scene = gen_random_scene(3, 8, seed=13, flags={"pivot_disjoint": False})
    reg = region_through_line(scene)
    rep = grid_region_check(scene, 24, reg)
    assert rep.count > 0
    assert rep.unexplained == []
    assert rep.to_dict()["outside_band"] == 0
