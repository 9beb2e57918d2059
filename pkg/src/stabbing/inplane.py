"""Stabbing regions inside the two-parameter family of lines parallel to a plane.

For a plane ``h`` the family ``L_h`` holds the lines that meet the pivot and
are parallel to ``h``.  When ``h`` is not parallel to the pivot a line of
``L_h`` is fixed by its azimuth ``theta`` and its height ``z`` on the pivot
(the polar angle follows from ``theta``); otherwise every such line lies in
the one pivot plane parallel to ``h`` and is fixed by ``(phi, z)``.  In both
cases the transversals form a sandwich between the upper envelope of the
lower tangency heights and the lower envelope of the upper ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .envelope import MonotoneArc, Region2D, sandwich
from .extremal import ExtremalStabbingLine, certify_candidates
from .geometry import EPS, GeometryError, Plane, PluckerLine, _unit
from .linespace import PivotFrame, slice_points

# events closer than this (in radians) are merged
_EVENT_TOL = 1e-13


class DegeneratePlane(GeometryError):
    code = "degenerate-plane"


@dataclass
class InPlaneRegion:
    """Sandwich region of the transversals in ``L_h``.

    ``param`` is ``"theta"`` (generic plane, x-axis is the azimuth) or
    ``"phi"`` (plane parallel to the pivot, x-axis is the polar angle at the
    fixed azimuth ``theta_h``).
    """

    scene: object
    normal: np.ndarray
    param: str
    region: Region2D
    lower_arcs: list[MonotoneArc]
    upper_arcs: list[MonotoneArc]
    theta_h: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    def line_at(self, x: float, z: float) -> PluckerLine:
        fr = PivotFrame(self.scene.pivot)
        if self.param == "phi":
            d = fr.direction(self.theta_h, x)
        else:
            d = fr.direction(x, _phi_h(fr.R @ self.normal, x))
        return PluckerLine.from_point_direction(fr.origin + z * fr.w, d)

    def bounds(self, x: float) -> tuple[float, float]:
        """``(max lower height, min upper height)`` at parameter ``x``."""
        lo = max((a.value(x) for a in self.lower_arcs if a.lo <= x <= a.hi), default=-np.inf)
        hi = min((a.value(x) for a in self.upper_arcs if a.lo <= x <= a.hi), default=np.inf)
        return lo, hi


def plane_is_parallel(scene, normal, eps: float = EPS) -> bool:
    """True when ``h`` (given by its normal) is parallel to the pivot."""
    return abs(float(_unit(normal) @ scene.pivot.unit_direction())) <= eps


def _phi_h(n_local, theta):
    """Polar angle of the direction at azimuth ``theta`` orthogonal to ``n_local``."""
    a = n_local[0] * np.cos(theta) + n_local[1] * np.sin(theta)
    return np.arctan2(n_local[2], -a) if n_local[2] > 0 else np.arctan2(-n_local[2], a)


def _cot_h(n_local, theta):
    return -(n_local[0] * np.cos(theta) + n_local[1] * np.sin(theta)) / n_local[2]


def _split_events(events, lo: float, hi: float) -> list[float]:
    ev = np.sort(np.concatenate([[lo, hi], np.asarray(events, float)]))
    ev = ev[(ev >= lo) & (ev <= hi)]
    out = [float(ev[0])]
    for x in ev[1:]:
        if x - out[-1] > _EVENT_TOL:
            out.append(float(x))
    out[-1] = hi
    return out


def _merge_pieces(pieces):
    """Join adjacent ``(lo, hi, key)`` pieces that share a key."""
    out = []
    for lo, hi, key in pieces:
        if out and out[-1][2] == key and abs(out[-1][1] - lo) <= _EVENT_TOL:
            out[-1] = (out[-1][0], hi, key)
        else:
            out.append((lo, hi, key))
    return out


def _spans(pieces):
    """Maximal covered intervals of a list of ``(lo, hi, ...)`` pieces."""
    out: list[list[float]] = []
    for lo, hi, *_ in sorted(pieces, key=lambda p: p[0]):
        if out and lo <= out[-1][1] + _EVENT_TOL:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(s) for s in out]


def _intersect_spans(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi > lo:
                out.append((lo, hi))
    return sorted(out)


# generic plane -----------------------------------------------------------------


def _edge_height_fn(A, B, n_local):
    """Height on the pivot of the line of ``L_h`` through edge ``AB`` (local coordinates)."""
    D = B - A

    def fn(theta):
        theta = np.asarray(theta, float)
        c, s = np.cos(theta), np.sin(theta)
        sa = -s * A[0] + c * A[1]
        sd = -s * D[0] + c * D[1]
        lam = -sa / sd
        X = A[:, None] + np.multiply.outer(D, lam)
        r = X[0] * c + X[1] * s
        return X[2] - r * _cot_h(n_local, theta)

    return fn


def _generic_pieces(P, fr: PivotFrame, n_local):
    """Pieces ``(lo, hi, (lower edge, upper edge))`` of ``theta`` in ``[0, pi]``."""
    X = fr.to_local(P.vertices)
    E = np.array([e.vertices for e in P.edges])
    events = list(np.mod(np.arctan2(X[:, 1], X[:, 0]), math.pi))
    for nf in P.normals @ fr.R.T:
        c = np.cross(nf, n_local)
        if math.hypot(c[0], c[1]) > 1e-15:
            events.append(math.atan2(c[1], c[0]) % math.pi)
    cuts = _split_events(events, 0.0, math.pi)
    lows, ups = [], []
    for lo, hi in zip(cuts, cuts[1:]):
        th = 0.5 * (lo + hi)
        m = np.array([-math.sin(th), math.cos(th), 0.0])
        s = X @ m
        hit = np.where(s[E[:, 0]] * s[E[:, 1]] < 0)[0]
        if len(hit) == 0:
            continue
        A, B = X[E[hit, 0]], X[E[hit, 1]]
        lam = s[E[hit, 0]] / (s[E[hit, 0]] - s[E[hit, 1]])
        Y = A + lam[:, None] * (B - A)
        r = Y[:, 0] * math.cos(th) + Y[:, 1] * math.sin(th)
        z = Y[:, 2] - r * float(_cot_h(n_local, th))
        lows.append((lo, hi, int(hit[np.argmin(z)])))
        ups.append((lo, hi, int(hit[np.argmax(z)])))
    return _merge_pieces(lows), _merge_pieces(ups), X, E


def _generic_arcs(scene, n_world):
    fr = PivotFrame(scene.pivot)
    n_local = fr.R @ n_world
    lower, upper, spans = [], [], None
    for k, P in enumerate(scene.polyhedra):
        lows, ups, X, E = _generic_pieces(P, fr, n_local)
        sp = _spans(lows)
        spans = sp if spans is None else _intersect_spans(spans, sp)
        for side, pieces, out in (("lower", lows, lower), ("upper", ups, upper)):
            for lo, hi, j in pieces:
                fn = _edge_height_fn(X[E[j, 0]], X[E[j, 1]], n_local)
                out.append(MonotoneArc((k, side, "e", P.edges[j].index), lo, hi, fn, s=2, data=(k, j)))
    return lower, upper, spans or []


# plane parallel to the pivot ---------------------------------------------------------


def _point_height_fn(r: float, z: float):
    def fn(phi):
        return z - r / np.tan(np.asarray(phi, float))

    return fn


def _linear_crossings(a: MonotoneArc, b: MonotoneArc, lo: float, hi: float):
    (ra, za), (rb, zb) = a.data[1], b.data[1]
    if ra == rb:
        return []
    u = (za - zb) / (ra - rb)
    phi = math.atan2(1.0, u)
    return [phi] if lo < phi < hi else []


def _parallel_sections(scene, fr: PivotFrame, theta_h: float):
    plane = fr.slice_plane(theta_h)
    u = np.array([math.cos(theta_h), math.sin(theta_h)])
    out = []
    for P in scene.polyhedra:
        pts, feats = slice_points(P, plane)
        if len(pts) == 0:
            return None
        loc = fr.to_local(pts)
        rz = np.stack([loc[:, :2] @ u, loc[:, 2]], axis=1)
        try:
            idx = ConvexHull(rz).vertices if len(rz) >= 3 else np.arange(len(rz))
        except QhullError:
            idx = np.arange(len(rz))
        out.append((rz[idx], [feats[i] for i in idx]))
    return out


def _parallel_arcs(scene, fr: PivotFrame, theta_h: float):
    sections = _parallel_sections(scene, fr, theta_h)
    if sections is None:
        return [], [], [], None
    allr = np.sort(np.concatenate([s[0][:, 0] for s in sections]))
    allz = np.concatenate([s[0][:, 1] for s in sections])
    gaps = np.diff(allr)
    gaps = gaps[gaps > 1e-12 * scene.scale]
    span = float(allz.max() - allz.min()) + 1.0
    bound = 4.0 * span / (gaps.min() if len(gaps) else 1.0) + 1.0
    delta = 0.5 * math.atan2(1.0, bound)
    lo_d, hi_d = delta, math.pi - delta
    lower, upper = [], []
    for k, (rz, feats) in enumerate(sections):
        events = []
        m = len(rz)
        for i in range(m):
            j = (i + 1) % m
            dr = rz[j, 0] - rz[i, 0]
            if m > 1 and abs(dr) > 1e-15:
                events.append(math.atan2(1.0, (rz[j, 1] - rz[i, 1]) / dr))
        cuts = _split_events(events, lo_d, hi_d)
        lows, ups = [], []
        for a, b in zip(cuts, cuts[1:]):
            ph = 0.5 * (a + b)
            z = rz[:, 1] - rz[:, 0] / math.tan(ph)
            lows.append((a, b, int(np.argmin(z))))
            ups.append((a, b, int(np.argmax(z))))
        for side, pieces, out in (("lower", lows, lower), ("upper", ups, upper)):
            for a, b, i in _merge_pieces(lows if side == "lower" else ups):
                r, z = float(rz[i, 0]), float(rz[i, 1])
                lab = (k, side) + tuple(feats[i])
                out.append(MonotoneArc(lab, a, b, _point_height_fn(r, z), s=1, data=(k, (r, z))))
    return lower, upper, [(lo_d, hi_d)], sections


# public API ---------------------------------------------------------------------


def region_in_plane(scene, h, eps: float = EPS) -> InPlaneRegion:
    """Sandwich region of the transversals of ``scene`` inside ``L_h``.

    ``h`` is a :class:`Plane` or a normal vector; only its direction matters.
    """
    normal = _unit(h.normal if isinstance(h, Plane) else np.asarray(h, float))
    fr = PivotFrame(scene.pivot)
    if not scene.polyhedra:
        raise DegeneratePlane("scene has no polyhedra")
    if plane_is_parallel(scene, normal, eps):
        n_local = fr.R @ normal
        theta_h = math.atan2(-n_local[0], n_local[1]) % math.pi
        lower, upper, spans, _ = _parallel_arcs(scene, fr, theta_h)
        crossings, param = _linear_crossings, "phi"
    else:
        theta_h = None
        lower, upper, spans = _generic_arcs(scene, normal)
        crossings, param = None, "theta"
    slabs = []
    for lo, hi in spans:
        lows = [a for a in lower if a.hi > lo and a.lo < hi]
        ups = [a for a in upper if a.hi > lo and a.lo < hi]
        slabs.extend(sandwich(lows, ups, crossings=crossings, domain=(lo, hi), tol=eps).slabs)
    return InPlaneRegion(scene, normal, param, Region2D(slabs, eps), lower, upper, theta_h)


def extremal_lines_in_plane(scene, h, eps: float = EPS) -> list[ExtremalStabbingLine]:
    """Vertices of the stabbing region inside ``L_h``.

    Each returned line meets the pivot, is parallel to ``h``, stabs every
    polyhedron and is tangent to two of them.
    """
    reg = region_in_plane(scene, h, eps)
    cands = [reg.line_at(v.x, v.value) for v in reg.region.vertices]
    return certify_candidates(cands, scene, min_codim=2, max_depth=0, pivot=scene.pivot, eps=eps, min_bodies=2)
