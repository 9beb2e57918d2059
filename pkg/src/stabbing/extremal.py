"""Certification, canonical form and de-duplication of extremal stabbing lines.

Both the engine and the brute-force oracle hand their candidate lines to
:func:`certify_candidates`; extremality itself is defined once, by the
contact classification of :func:`stabbing.geometry.classify_contact`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import EPS, Contact, PluckerLine, classify_contact, clip_interval, contact_tolerance
from .linespace import DoesNotMeetPivot, IsPivot, LineCoords, coords_of_line, line_from_coords

# coordinate agreement used when matching two sets of extremal lines
MATCH_TOL = 1e-6


def canonical(line: PluckerLine) -> PluckerLine:
    """Unit-direction representative whose first significant direction component is positive."""
    L = line.normalized()
    d = L.direction
    i = int(np.argmax(np.abs(d) > 1e-6))
    if d[i] < 0:
        L = L.reversed()
    return L


def feature_of(k: int, c: Contact) -> tuple:
    if c.kind == "edge":
        return (k, "e", c.feature[0])
    if c.kind == "vertex":
        return (k, "v", c.feature[0])
    if c.kind == "collinear":
        return (k, "c", c.feature[0])
    if c.kind == "facet":
        return (k, "f", c.feature[0]) + tuple(c.feature[1])
    return (k, c.kind)


@dataclass(frozen=True, eq=False)
class ExtremalStabbingLine:
    line: PluckerLine
    features: tuple
    depth: int
    codim: int
    coords: LineCoords | None = None

    @property
    def key(self) -> tuple:
        return self.features

    def distance(self, other: "ExtremalStabbingLine") -> float:
        a, b = canonical(self.line), canonical(other.line)
        return float(np.linalg.norm(a.direction - b.direction) + np.linalg.norm(a.point() - b.point()))

    def to_dict(self) -> dict:
        out = {
            "point": [float(x) for x in self.line.point()],
            "direction": [float(x) for x in self.line.unit_direction()],
            "features": [list(f) for f in self.features],
            "depth": self.depth,
            "codim": self.codim,
        }
        if self.coords is not None:
            out["coords"] = {"theta": self.coords.theta, "phi": self.coords.phi, "z": self.coords.z}
        return out


def contacts_of(line: PluckerLine, polyhedra, eps: float = EPS) -> list[Contact]:
    return [classify_contact(line, P, contact_tolerance(P, line, eps)) for P in polyhedra]


def depth(line: PluckerLine, scene, eps: float = EPS) -> int:
    """Number of polyhedra the line does not stab."""
    return sum(1 for P in scene.polyhedra if clip_interval(line, P, contact_tolerance(P, line, eps)) is None)


def certify(line: PluckerLine, scene, eps: float = EPS):
    """``(depth, codim, features)`` of a line against a scene."""
    cs = contacts_of(line, scene.polyhedra, eps)
    dep = sum(1 for c in cs if c.kind == "miss")
    codim = sum(c.codim for c in cs)
    feats = tuple(sorted(feature_of(k, c) for k, c in enumerate(cs) if c.codim > 0))
    return dep, codim, feats


def _quick_depth(line: PluckerLine, scene, eps: float, max_depth: int) -> bool:
    miss = 0
    for P in scene.polyhedra:
        if clip_interval(line, P, contact_tolerance(P, line, eps)) is None:
            miss += 1
            if miss > max_depth:
                return False
    return True


def certify_candidates(lines, scene, min_codim: int = 3, max_depth: int = 0, pivot: PluckerLine | None = None,
                       eps: float = EPS, min_bodies: int = 1) -> list[ExtremalStabbingLine]:
    """Keep the candidates that are extremal, de-duplicated by features and position.

    ``min_bodies`` is the least number of distinct polyhedra the line must
    touch tangentially.
    """
    out: dict[tuple, list[ExtremalStabbingLine]] = {}
    for L in lines:
        if L is None:
            continue
        L = canonical(L)
        if not _quick_depth(L, scene, eps, max_depth):
            continue
        dep, codim, feats = certify(L, scene, eps)
        if dep > max_depth or codim < min_codim or len({f[0] for f in feats}) < min_bodies:
            continue
        coords = None
        if pivot is not None:
            try:
                coords = coords_of_line(L, pivot, eps)
            except (DoesNotMeetPivot, IsPivot):
                continue
        rec = ExtremalStabbingLine(L, feats, dep, codim, coords)
        bucket = out.setdefault(feats, [])
        if all(rec.distance(o) > MATCH_TOL for o in bucket):
            bucket.append(rec)
    return sorted((r for b in out.values() for r in b), key=lambda r: (r.features, tuple(np.round(r.line.point(), 9))))


def match_sets(A, B, tol: float = MATCH_TOL):
    """Pair records by identical features and coordinate distance <= tol.

    Returns ``(unmatched_in_A, unmatched_in_B)``.
    """
    pool: dict[tuple, list] = {}
    for b in B:
        pool.setdefault(b.features, []).append(b)
    missing = []
    for a in A:
        cand = pool.get(a.features, [])
        j = next((i for i, b in enumerate(cand) if a.distance(b) <= tol), None)
        if j is None:
            missing.append(a)
        else:
            cand.pop(j)
    extra = [b for v in pool.values() for b in v]
    return missing, extra


def extremality_probe(rec: ExtremalStabbingLine, scene, pivot: PluckerLine, delta: float = 1e-6, eps: float = EPS) -> bool:
    """True when every small move of the line within the lines through the pivot drops a defining contact."""
    c = coords_of_line(rec.line, pivot, eps)
    base = set(rec.features)
    for axis in range(3):
        for sgn in (1.0, -1.0):
            v = list(c.as_tuple())
            v[axis] += sgn * delta
            moved = line_from_coords(LineCoords(*v), pivot)
            _, _, feats = certify(moved, scene, eps * 1e-2)
            if base <= set(feats):
                return False
    return True
