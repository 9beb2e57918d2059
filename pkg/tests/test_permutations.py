import math

import numpy as np
import pytest

from conftest import cube, make_scene
from stabbing.geometry import NotDisjoint, PluckerLine
from stabbing.linespace import LineCoords, line_from_coords
from stabbing.permutations import (
    PIVOT,
    GeometricPermutation,
    Labeler,
    NotTransversal,
    enumerate_permutations,
    label_conflicts,
    permutation_of,
    sample_transversals,
)
from stabbing.scenes import gen_lower_bound_scene, gen_paraboloid_scene, gen_random_scene, separation_richness

FAR_PIVOT = PluckerLine.from_point_direction((0, 10, 0), (0.02, 0.01, 1))


def _row_scene():
    return make_scene([cube((1.5, -0.5, -0.5), (2.5, 0.5, 0.5)), cube((3.5, -0.5, -0.5), (4.5, 0.5, 0.5)),
                       cube((5.5, -0.5, -0.5), (6.5, 0.5, 0.5))], pivot=FAR_PIVOT)


def test_permutation_of_x_axis():
    scene = _row_scene()
    x = PluckerLine.from_point_direction((0, 0, 0), (1, 0, 0))
    p = permutation_of(x, scene)
    assert p.order == (0, 1, 2)
    assert permutation_of(x.reversed(), scene).order == (2, 1, 0)
    assert p.reversed() == permutation_of(x.reversed(), scene)


def test_permutation_includes_pivot():
    scene = make_scene([cube((1.5, -0.5, -0.5), (2.5, 0.5, 0.5)), cube((-2.5, -0.5, -0.5), (-1.5, 0.5, 0.5))],
                       pivot=PluckerLine.from_point_direction((0, 0, 0), (0, 0, 1)))
    p = permutation_of(PluckerLine.from_point_direction((0, 0, 0), (1, 0, 0)), scene)
    assert p.order == (1, PIVOT, 0)
    assert p.bodies == (1, 0)
    assert str(p) == "(1 L0 0)"


def test_permutation_errors():
    scene = _row_scene()
    with pytest.raises(NotTransversal):
        permutation_of(PluckerLine.from_point_direction((0, 5, 0), (1, 0, 0)), scene)
    overlap = make_scene([cube(), cube((0, 0, 0), (2, 2, 2))], pivot=FAR_PIVOT)
    with pytest.raises(NotDisjoint):
        permutation_of(PluckerLine.from_point_direction((0, 0, 0), (1, 1, 1)), overlap)


def test_permutation_matches_clip_sort():
    from stabbing.geometry import clip_interval

    scene = gen_random_scene(4, 10, seed=2, flags={"scattered": True})
    for c, L in sample_transversals(scene, 200, seed=3):
        entries = [clip_interval(L, P)[0] for P in scene.polyhedra]
        assert permutation_of(L, scene, check_disjoint=False).bodies == tuple(np.argsort(entries))
        assert permutation_of(L.reversed(), scene, check_disjoint=False) == permutation_of(L, scene, check_disjoint=False).reversed()


def test_label_counts_two_bodies():
    scene = make_scene([cube((1.5, -0.5, -0.5), (2.5, 0.5, 0.5)), cube((-2.5, 0.5, 1.5), (-1.5, 1.5, 2.5))],
                       pivot=PluckerLine.from_point_direction((0, 0, 0), (0.03, 0.02, 1)))
    lab = Labeler.build(scene)
    assert lab.wedge_count <= 4
    assert lab.interval_count <= 2
    assert lab.label_count <= 8


def test_label_stability_under_perturbation():
    scene = gen_random_scene(3, 10, seed=5, flags={"scattered": True})
    lab = Labeler.build(scene)
    for c, L in sample_transversals(scene, 100, seed=1):
        c2 = LineCoords(c.theta + 1e-9, c.phi - 1e-9, c.z + 1e-9)
        L2 = line_from_coords(c2, scene.pivot)
        if lab.label_coords(c) == lab.label_coords(c2):
            assert permutation_of(L, scene, check_disjoint=False) == permutation_of(L2, scene, check_disjoint=False)


def test_no_label_conflicts():
    scene = gen_random_scene(4, 10, seed=8, flags={"scattered": True})
    samples = sample_transversals(scene, 1000, seed=0)
    conflicts, labelled, _ = label_conflicts(scene, samples)
    assert conflicts == []
    assert labelled >= 1


def test_single_body_one_permutation():
    scene = make_scene([cube((1.5, -0.5, -0.5), (2.5, 0.5, 0.5))], pivot=FAR_PIVOT)
    perms = enumerate_permutations(scene, resolution=24)
    assert len(perms) == 1


def test_permutation_count_bound():
    scene = gen_random_scene(4, 10, seed=3, flags={"scattered": True})
    lab = Labeler.build(scene)
    perms = enumerate_permutations(scene, resolution=32, labeler=lab)
    m = scene.k
    assert 1 <= len(perms) <= 2 * m * (math.comb(m, 2) + 1)
    assert len(perms) <= lab.label_count


@pytest.mark.parametrize("k", [4, 6])
def test_paraboloid_separation_richness(k):
    scene = gen_paraboloid_scene(k, eps=0.05)
    scene.verify_flags()
    assert separation_richness(scene) == []


def test_paraboloid_large_offset_fails_richness():
    assert separation_richness(gen_paraboloid_scene(4, eps=10.0)) != []


def test_lower_bound_plate_permutations():
    pairs = 3
    scene = gen_lower_bound_scene(pairs, 8, seed=0)
    plates = scene.subset(range(2 * pairs))
    seen = set()
    for _c, L in sample_transversals(scene, 400, seed=0):
        seen.add(permutation_of(L, plates, check_disjoint=False).undirected())
    assert len(seen) >= pairs
