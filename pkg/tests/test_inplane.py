import numpy as np
import pytest

from conftest import make_scene
from stabbing.extremal import match_sets
from stabbing.geometry import PluckerLine, stabs
from stabbing.inplane import DegeneratePlane, extremal_lines_in_plane, region_in_plane
from stabbing.oracle import brute_force_in_plane
from stabbing.scenes import gen_random_scene


def _normal_for(scene, seed):
    rng = np.random.default_rng(seed)
    n = rng.normal(size=3)
    return n / np.linalg.norm(n)


def _parallel_normal(scene, seed):
    w = scene.pivot.unit_direction()
    n = np.cross(w, np.random.default_rng(seed).normal(size=3))
    return n / np.linalg.norm(n)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generic_plane_matches_oracle(seed):
    scene = gen_random_scene(3, 8, seed=seed, flags={"pivot_disjoint": False})
    n = _normal_for(scene, seed)
    eng = extremal_lines_in_plane(scene, n)
    orc = brute_force_in_plane(scene, n)
    assert match_sets(eng, orc) == ([], [])
    for v in eng:
        assert abs(v.line.unit_direction() @ n) < 1e-9
        assert all(stabs(v.line, P) for P in scene.polyhedra)
        assert len({f[0] for f in v.features}) >= 2


@pytest.mark.parametrize("seed", [0, 3])
def test_parallel_plane_matches_oracle(seed):
    scene = gen_random_scene(3, 8, seed=seed, flags={"pivot_disjoint": False})
    # a plane parallel to the pivot through the bodies' common direction
    c = np.mean([P.vertices.mean(0) for P in scene.polyhedra], axis=0) - scene.pivot.point()
    n = np.cross(scene.pivot.unit_direction(), c)
    n /= np.linalg.norm(n)
    reg = region_in_plane(scene, n)
    assert reg.param == "phi"
    eng = extremal_lines_in_plane(scene, n)
    orc = brute_force_in_plane(scene, n)
    assert match_sets(eng, orc) == ([], [])


def test_arc_crossing_bounds():
    scene = gen_random_scene(3, 8, seed=4, flags={"pivot_disjoint": False})
    for n, limit in ((_normal_for(scene, 4), 2), (_parallel_normal(scene, 4), 1)):
        reg = region_in_plane(scene, n)
        from stabbing.envelope import numeric_crossings

        for a in reg.lower_arcs:
            for b in reg.upper_arcs:
                lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
                if hi - lo < 1e-9:
                    continue
                assert len(numeric_crossings(a, b, lo, hi, samples=400)) <= limit


def test_region_membership_matches_stabs():
    scene = gen_random_scene(3, 8, seed=5, flags={"pivot_disjoint": False})
    n = _normal_for(scene, 5)
    reg = region_in_plane(scene, n)
    # undirected lines: the azimuth runs over [0, pi)
    rng = np.random.default_rng(0)
    inside = 0
    for _ in range(3000):
        x = float(rng.uniform(0, np.pi))
        z = float(rng.uniform(-15, 15))
        want = all(stabs(reg.line_at(x, z), P, 0.0) for P in scene.polyhedra)
        got = reg.region.contains(x, z)
        if want != got:
            assert reg.region.contains(x, z, 1e-7) and not reg.region.contains(x, z, -1e-7)
        inside += want
    assert inside > 0


def test_empty_scene_is_degenerate():
    with pytest.raises(DegeneratePlane):
        region_in_plane(make_scene([]), np.array([1.0, 0, 0]))
