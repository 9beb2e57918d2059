"""Line transversals of convex polyhedra through a pivot line.

The main entry points are re-exported here; see the submodules for the
building blocks (Plücker geometry, line coordinates, sphere arrangements,
envelopes, the edge sweep, the brute-force oracle and scene I/O).
"""

from .engine import extremal_lines_through_line
from .extremal import ExtremalStabbingLine, match_sets
from .geometry import GeometryError, Plane, PluckerLine, Polyhedron
from .inplane import extremal_lines_in_plane, region_in_plane
from .oracle import brute_force_extremal_lines, brute_force_global, brute_force_in_plane, grid_region_check
from .permutations import GeometricPermutation, Labeler, enumerate_permutations, permutation_of
from .regions import StabbingRegion, extremal_lines_global, pairwise_region, region_disjoint_case, region_through_line
from .scenes import Scene, gen_lower_bound_scene, gen_random_scene, load_scene, save_scene
from .unbounded import region_unbounded_case, upper_envelope_EU

__all__ = [
    "ExtremalStabbingLine",
    "GeometricPermutation",
    "GeometryError",
    "Labeler",
    "Plane",
    "PluckerLine",
    "Polyhedron",
    "Scene",
    "StabbingRegion",
    "brute_force_extremal_lines",
    "brute_force_global",
    "brute_force_in_plane",
    "enumerate_permutations",
    "extremal_lines_global",
    "extremal_lines_in_plane",
    "extremal_lines_through_line",
    "gen_lower_bound_scene",
    "gen_random_scene",
    "grid_region_check",
    "load_scene",
    "match_sets",
    "pairwise_region",
    "permutation_of",
    "region_disjoint_case",
    "region_in_plane",
    "region_through_line",
    "region_unbounded_case",
    "save_scene",
    "upper_envelope_EU",
]
