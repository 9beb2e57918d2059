"""Coordinates for lines through the pivot, tangency heights, and per-edge frames.

A line meeting the pivot ``l0`` is written ``(theta, phi, z)``: ``theta`` and
``phi`` are the azimuth and polar angle of its direction in a frame whose
z-axis is ``l0``, and ``z`` is the height at which it crosses ``l0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    EPS,
    Edge,
    GeometryError,
    Plane,
    PluckerLine,
    Polyhedron,
    _unit,
    cross3,
    line_distance,
)

TWO_PI = 2.0 * math.pi


class DoesNotMeetPivot(GeometryError):
    code = "does-not-meet-pivot"


class IsPivot(GeometryError):
    code = "is-pivot"


class CoplanarEdge(GeometryError):
    code = "coplanar-edge"


class ParallelSlice(GeometryError):
    code = "parallel-slice"


def perpendicular_basis(w):
    """Right-handed orthonormal ``(e1, e2)`` completing unit ``w``.

    ``e1`` is the projection of the coordinate axis least aligned with ``w``,
    so the frame is a deterministic function of ``w``.
    """
    w = _unit(w)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(w)))] = 1.0
    e1 = axis - axis.dot(w) * w
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(w, e1)


@dataclass(frozen=True)
class LineCoords:
    theta: float
    phi: float
    z: float

    def reversed(self) -> "LineCoords":
        return LineCoords((self.theta + math.pi) % TWO_PI, math.pi - self.phi, self.z)

    def as_tuple(self):
        return (self.theta, self.phi, self.z)


class PivotFrame:
    """Orthonormal frame with origin on the pivot and z-axis along it."""

    def __init__(self, pivot: PluckerLine):
        self.pivot = pivot
        self.origin = pivot.point()
        self.w = pivot.unit_direction()
        self.e1, self.e2 = perpendicular_basis(self.w)
        self.R = np.array([self.e1, self.e2, self.w])  # world -> local

    def to_local(self, x) -> np.ndarray:
        return (np.asarray(x, float) - self.origin) @ self.R.T

    def to_world(self, x) -> np.ndarray:
        return np.asarray(x, float) @ self.R + self.origin

    def direction(self, theta, phi) -> np.ndarray:
        s = math.sin(phi)
        return self.R.T @ np.array([s * math.cos(theta), s * math.sin(theta), math.cos(phi)])

    def azimuth(self, x) -> np.ndarray:
        """Azimuth of points around the pivot, in [0, 2 pi)."""
        loc = self.to_local(x)
        return np.mod(np.arctan2(loc[..., 1], loc[..., 0]), TWO_PI)

    def slice_plane(self, theta) -> Plane:
        """The plane containing the pivot at azimuth ``theta`` (and ``theta + pi``)."""
        u = math.cos(theta) * self.e1 + math.sin(theta) * self.e2
        n = cross3(self.w, u)
        return Plane.through(self.origin, n)


def line_from_coords(c: LineCoords, pivot: PluckerLine) -> PluckerLine:
    fr = PivotFrame(pivot)
    p = fr.origin + c.z * fr.w
    return PluckerLine.from_point_direction(p, fr.direction(c.theta, c.phi))


def coords_of_line(l: PluckerLine, pivot: PluckerLine, eps: float = EPS) -> LineCoords:
    fr = PivotFrame(pivot)
    d = l.unit_direction()
    scale = max(1.0, float(np.linalg.norm(l.point())), float(np.linalg.norm(fr.origin)))
    if np.linalg.norm(cross3(d, fr.w)) <= eps and l.distance_to_point(fr.origin) <= eps * scale:
        raise IsPivot("line coincides with the pivot")
    if line_distance(l, pivot) > 1e3 * eps * scale:
        raise DoesNotMeetPivot("line does not meet the pivot")
    loc = fr.R @ d
    theta = math.atan2(loc[1], loc[0]) % TWO_PI
    phi = math.acos(max(-1.0, min(1.0, loc[2])))
    # height where l meets the pivot: closest point of the pivot to l
    p = l.point()
    c = cross3(d, fr.w)
    nc = float(c.dot(c))
    if nc < 1e-24:
        raise DoesNotMeetPivot("line is parallel to the pivot")
    # solve origin + z w = p + t d in least squares
    A = np.stack([fr.w, -d], axis=1)
    sol, *_ = np.linalg.lstsq(A, p - fr.origin, rcond=None)
    return LineCoords(theta, phi, float(sol[0]))


# tangency heights ------------------------------------------------------------


def slice_points(P: Polyhedron, plane: Plane, tol: float = 0.0):
    """Vertices of the section of ``P`` by ``plane``.

    Returns ``(points, features)`` where each feature is ``("v", i)`` for a
    polyhedron vertex on the plane or ``("e", j)`` for an edge crossing it.
    """
    d = plane.signed_distance(P.vertices)
    on = np.abs(d) <= tol
    pts = [P.vertices[i] for i in np.where(on)[0]]
    feats = [("v", int(i)) for i in np.where(on)[0]]
    E = np.array([e.vertices for e in P.edges])
    da, db = d[E[:, 0]], d[E[:, 1]]
    cross = (~on[E[:, 0]]) & (~on[E[:, 1]]) & (np.sign(da) != np.sign(db))
    idx = np.where(cross)[0]
    if len(idx):
        t = da[idx] / (da[idx] - db[idx])
        A = P.vertices[E[idx, 0]]
        B = P.vertices[E[idx, 1]]
        X = A + t[:, None] * (B - A)
        pts.extend(X)
        feats.extend(("e", int(j)) for j in idx)
    return (np.array(pts) if pts else np.zeros((0, 3))), feats


def sigma_eval(P: Polyhedron, theta: float, phi: float, side: str, pivot: PluckerLine | None = None):
    """Height on the pivot of the lower (``"lower"``) or upper tangent line.

    The tangent lines have direction ``(theta, phi)``.  Returns None when the
    section of ``P`` by the plane of that direction is empty.
    """
    if pivot is None:
        pivot = PluckerLine(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    fr = PivotFrame(pivot)
    pts, _ = slice_points(P, fr.slice_plane(theta))
    if len(pts) == 0:
        return None
    loc = fr.to_local(pts)
    u = np.array([math.cos(theta), math.sin(theta)])
    r = loc[:, :2] @ u
    h = loc[:, 2] - r * (math.cos(phi) / math.sin(phi))
    return float(h.min() if side == "lower" else h.max())


def sigma_eval_many(P: Polyhedron, theta: float, phis, pivot: PluckerLine):
    """Vectorized ``(sigma_lower, sigma_upper)`` over many polar angles at one azimuth."""
    fr = PivotFrame(pivot)
    pts, _ = slice_points(P, fr.slice_plane(theta))
    phis = np.asarray(phis, float)
    if len(pts) == 0:
        nan = np.full(phis.shape, np.nan)
        return nan, nan
    loc = fr.to_local(pts)
    r = loc[:, :2] @ np.array([math.cos(theta), math.sin(theta)])
    h = loc[None, :, 2] - r[None, :] * (np.cos(phis) / np.sin(phis))[:, None]
    return h.min(axis=1), h.max(axis=1)


# per-edge frames ---------------------------------------------------------------


@dataclass
class EdgeFrame:
    """Local frame of edge ``e0`` of polyhedron ``P0``.

    The edge runs along the local z-axis from height 0 to ``length``; one
    incident facet lies in the half-plane ``theta = 0`` and the polyhedron
    occupies ``theta`` in ``[-alpha, 0]``.  Planes through the edge with
    ``theta`` in ``(0, theta0)`` support ``P0``.  For such a plane the pivot
    meets it at ``q(theta)``; lines are oriented from ``q`` toward the edge and
    ``phi`` is their polar angle.
    """

    polyhedron: int
    edge: int
    origin: np.ndarray
    R: np.ndarray  # world -> local rows (x, y, z)
    length: float
    theta0: float
    pivot: PluckerLine
    piv_p: np.ndarray = field(init=False)
    piv_d: np.ndarray = field(init=False)

    def __post_init__(self):
        self.piv_p = self.to_local(self.pivot.point())
        self.piv_d = self.R @ self.pivot.unit_direction()

    @property
    def alpha(self) -> float:
        return math.pi - self.theta0

    def to_local(self, x) -> np.ndarray:
        return (np.asarray(x, float) - self.origin) @ self.R.T

    def to_world(self, x) -> np.ndarray:
        return np.asarray(x, float) @ self.R + self.origin

    def dir_to_world(self, d) -> np.ndarray:
        return np.asarray(d, float) @ self.R

    def normal(self, theta) -> np.ndarray:
        """Local normal of the plane at ``theta``."""
        return np.array([-math.sin(theta), math.cos(theta), 0.0])

    def theta_of_point(self, x_local) -> float:
        """Plane angle in [0, pi) of the plane through the edge line and a local point."""
        return math.atan2(x_local[1], x_local[0]) % math.pi

    def theta_of_direction(self, d_local) -> float:
        """Plane angle of the plane through the edge line parallel to a direction."""
        return math.atan2(d_local[1], d_local[0]) % math.pi

    @property
    def theta_star(self) -> float:
        """Plane angle of the plane parallel to the pivot."""
        return self.theta_of_direction(self.piv_d)

    def q(self, theta) -> np.ndarray:
        """Local coordinates of the pivot's crossing with the plane at ``theta``."""
        n = self.normal(theta)
        den = n.dot(self.piv_d)
        if abs(den) < 1e-13:
            raise ParallelSlice("the plane is parallel to the pivot")
        t = -n.dot(self.piv_p) / den
        return self.piv_p + t * self.piv_d

    def plane_coords(self, theta, x_local):
        """(rho, z) of local points lying in the plane at ``theta``."""
        u = np.array([math.cos(theta), math.sin(theta), 0.0])
        x = np.asarray(x_local, float)
        return x[..., :2] @ u[:2], x[..., 2]

    def phi_of_axis_point(self, theta, s):
        """Polar angle of the line from ``q(theta)`` to the edge-line point at height ``s``."""
        q = self.q(theta)
        rho, zq = self.plane_coords(theta, q)
        return np.arctan2(abs(rho), np.asarray(s, float) - zq)

    def axis_point_of_phi(self, theta, phi):
        q = self.q(theta)
        rho, zq = self.plane_coords(theta, q)
        return zq + abs(rho) / math.tan(phi)

    def phi_through(self, theta, x_local):
        """Polar angle of the line through ``q(theta)`` and a point in the plane.

        Returns nan when that line is parallel to the edge.
        """
        q = self.q(theta)
        rq, zq = self.plane_coords(theta, q)
        rx, zx = self.plane_coords(theta, x_local)
        den = rq - rx
        with np.errstate(divide="ignore", invalid="ignore"):
            dz = (zx - zq) * rq / den
            out = np.arctan2(abs(rq), dz)
        return np.where(np.abs(den) < 1e-15, np.nan, out)

    def line(self, theta, phi) -> PluckerLine:
        """World line through ``q(theta)`` at polar angle ``phi`` (oriented toward the edge)."""
        q = self.q(theta)
        rq, zq = self.plane_coords(theta, q)
        u = np.array([math.cos(theta), math.sin(theta), 0.0])
        s_sign = -1.0 if rq > 0 else 1.0
        d_local = math.sin(phi) * s_sign * u + math.cos(phi) * np.array([0, 0, 1.0])
        return PluckerLine.from_point_direction(self.to_world(q), self.dir_to_world(d_local))

    def forward_sign(self, theta) -> float:
        """+1 when ``q(theta)`` lies in half-plane ``theta``, -1 for ``theta + pi``."""
        rq, _ = self.plane_coords(theta, self.q(theta))
        return 1.0 if rq > 0 else -1.0


def edge_frame(P0: Polyhedron, e0: int | Edge, pivot: PluckerLine, P0_index: int = 0, eps: float = EPS) -> EdgeFrame:
    e = P0.edges[e0] if not isinstance(e0, Edge) else e0
    a, b = P0.vertices[list(e.vertices)]
    z = b - a
    length = float(np.linalg.norm(z))
    z /= length
    pd = pivot.unit_direction()
    # coplanar with the pivot: the pivot meets or is parallel to the edge line
    from .geometry import plucker_from_points, side_operator

    le = plucker_from_points(a, b)
    scale = max(P0.scale, float(np.linalg.norm(pivot.point())))
    if abs(side_operator(le.normalized(), pivot.normalized())) <= 1e3 * eps * scale:
        raise CoplanarEdge(f"edge {e.index} is coplanar with the pivot")
    f1, f2 = e.facets
    n1, n2 = P0.normals[f1], P0.normals[f2]
    # in-facet directions perpendicular to the edge; each points strictly
    # into the other facet's half-space
    x = np.cross(n1, z)
    if x.dot(n2) > 0:
        x = -x
    x /= np.linalg.norm(x)
    x2 = np.cross(n2, z)
    if x2.dot(n1) > 0:
        x2 = -x2
    y = np.cross(z, x)
    if y.dot(x2) > 0:
        # keep the solid at negative angles by reversing the edge direction
        z = -z
        a, b = b, a
        y = np.cross(z, x)
    R = np.array([x, y, z])
    loc2 = R @ x2
    ang = math.atan2(loc2[1], loc2[0])  # in (-pi, 0)
    alpha = -ang
    theta0 = math.pi - alpha
    return EdgeFrame(P0_index, e.index, a, R, length, theta0, pivot)


def legal_domain(frame: EdgeFrame, theta: float, eps: float = EPS):
    """Open interval ``(phi_lo, phi_hi)`` of lines from ``q(theta)`` crossing the edge."""
    if abs(((theta - frame.theta_star + math.pi / 2) % math.pi) - math.pi / 2) <= 1e3 * eps:
        raise ParallelSlice("theta is the parallel orientation")
    p = frame.phi_of_axis_point(theta, np.array([0.0, frame.length]))
    return float(min(p)), float(max(p))


# stabbing in a slice ------------------------------------------------------------

LABELS = ("on", "after", "before")


def slice_interval(frame: EdgeFrame, P: Polyhedron, theta: float, label: str, tol: float = 0.0):
    """Interval of polar angles at ``theta`` whose lines stab ``P`` with the given order.

    ``label`` is ``"on"`` (the pivot point lies in ``P``), ``"after"`` (``P``
    comes after the pivot point along the oriented line) or ``"before"``.
    Returns ``(lo, hi, lo_feature, hi_feature)`` with None features for
    unbounded sides, or None when no such line exists.  The interval is not
    yet clipped to the legal domain.
    """
    if label == "on":
        return (0.0, math.pi, None, None)
    plane = Plane(frame.dir_to_world(frame.normal(theta)), 0.0)
    plane = Plane.through(frame.origin, plane.normal)
    pts, feats = slice_points(P, plane, tol)
    if len(pts) == 0:
        return None
    loc = frame.to_local(pts)
    q = frame.q(theta)
    rq, zq = frame.plane_coords(theta, q)
    rx, zx = frame.plane_coords(theta, loc)
    # parameter along the line from q to its axis point: t = 1 - rho / rq
    t = 1.0 - rx / rq
    side = t > 0 if label == "after" else t < 0
    if not np.any(side):
        return None
    phis = frame.phi_through(theta, loc)
    lo = hi = None
    lof = hif = None
    if np.all(side):
        i, j = int(np.nanargmin(phis)), int(np.nanargmax(phis))
        return (float(phis[i]), float(phis[j]), feats[i], feats[j])
    # the polygon straddles the line through q parallel to the edge; the
    # chosen side projects to a ray running off to phi = 0 or phi = pi
    sel = np.where(side)[0]
    i0 = int(np.where(t > 0)[0][0])
    j0 = int(np.where(t < 0)[0][0])
    z_chord = zx[i0] + (zx[j0] - zx[i0]) * (t[i0] / (t[i0] - t[j0]))
    up = (z_chord > zq) == (label == "after")
    ps = phis[sel]
    if up:
        j = sel[int(np.nanargmax(ps))]
        return (0.0, float(phis[j]), None, feats[j])
    i = sel[int(np.nanargmin(ps))]
    return (float(phis[i]), math.pi, feats[i], None)


# vectorized curves in an edge frame ---------------------------------------------


def _q_many(fr: EdgeFrame, th):
    c, s = np.cos(th), np.sin(th)
    den = -s * fr.piv_d[0] + c * fr.piv_d[1]
    num = s * fr.piv_p[0] - c * fr.piv_p[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / den
    q = fr.piv_p[None, :] + t[:, None] * fr.piv_d[None, :]
    rq = q[:, 0] * c + q[:, 1] * s
    return q, rq, q[:, 2]


def _phi(rq, zq, rx, zx):
    with np.errstate(divide="ignore", invalid="ignore"):
        dz = (zx - zq) * rq / (rq - rx)
        return np.arctan2(np.abs(rq), dz)


def edge_arc_fn(fr: EdgeFrame, a, b):
    """Polar angle of the line from ``q(theta)`` through the crossing of edge line ``ab`` with the plane."""
    a = np.asarray(a, float)
    d = np.asarray(b, float) - a

    def fn(th):
        th = np.atleast_1d(np.asarray(th, float))
        c, s = np.cos(th), np.sin(th)
        _, rq, zq = _q_many(fr, th)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = (s * a[0] - c * a[1]) / (-s * d[0] + c * d[1])
        x = a[None, :] + lam[:, None] * d[None, :]
        rx = x[:, 0] * c + x[:, 1] * s
        return _phi(rq, zq, rx, x[:, 2])

    return fn


def point_arc_fn(fr: EdgeFrame, x):
    x = np.asarray(x, float)

    def fn(th):
        th = np.atleast_1d(np.asarray(th, float))
        _, rq, zq = _q_many(fr, th)
        rx = x[0] * np.cos(th) + x[1] * np.sin(th)
        return _phi(rq, zq, rx, x[2])

    return fn


def axis_arc_fn(fr: EdgeFrame, s_axis: float):
    def fn(th):
        th = np.atleast_1d(np.asarray(th, float))
        _, rq, zq = _q_many(fr, th)
        return np.arctan2(np.abs(rq), s_axis - zq)

    return fn


def parallel_arc_fn(fr: EdgeFrame, n_local):
    """Polar angle of the line from ``q(theta)`` parallel to a plane of normal ``n_local``."""
    n = np.asarray(n_local, float)

    def fn(th):
        th = np.atleast_1d(np.asarray(th, float))
        q, rq, zq = _q_many(fr, th)
        s_h = (q @ n) / n[2]
        return np.arctan2(np.abs(rq), s_h - zq)

    return fn


# gamma profiles ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TangencyArc:
    """One piece of a gamma function over ``[lo, hi]``.

    ``kind`` is ``"edge"`` (tangent at an edge of the polyhedron),
    ``"vertex"``, or one of the sentinels ``"phi-"``/``"phi+"`` copying the
    legal-domain bounds.
    """

    kind: str
    feature: tuple | None
    lo: float
    hi: float
    fn: object

    def __call__(self, theta):
        return self.fn(theta)


@dataclass
class GammaProfile:
    """Piecewise ``(gamma-(theta), gamma+(theta))`` for one polyhedron and one order label."""

    polyhedron: int
    label: str
    frame: EdgeFrame
    pieces: list[tuple[float, float, TangencyArc, TangencyArc]]

    def piece_at(self, theta: float):
        for p in self.pieces:
            if p[0] <= theta <= p[1]:
                return p
        return None

    def evaluate(self, theta: float) -> tuple[float, float]:
        p = self.piece_at(theta)
        if p is None:
            raise ValueError("theta outside the profile range")
        return float(p[2](theta)[0]), float(p[3](theta)[0])

    def contains(self, theta: float, phi: float, tol: float = 0.0) -> bool:
        lo, hi = self.evaluate(theta)
        return lo - tol <= phi <= hi + tol

    @property
    def breakpoints(self) -> list[float]:
        return [p[1] for p in self.pieces[:-1]]


def polyhedron_events(frame: EdgeFrame, P: Polyhedron) -> np.ndarray:
    """Plane angles where the section of ``P`` seen from ``q(theta)`` changes combinatorially."""
    pp, pd = frame.piv_p, frame.piv_d
    V = frame.to_local(P.vertices)
    th = [np.mod(np.arctan2(V[:, 1], V[:, 0]), math.pi)]
    N = P.normals @ frame.R.T
    off = P.offsets - P.normals @ frame.origin
    den = N @ pd
    ok = np.abs(den) > 1e-13
    t = (off[ok] - N[ok] @ pp) / den[ok]
    Q = pp[None, :] + t[:, None] * pd[None, :]
    th.append(np.mod(np.arctan2(Q[:, 1], Q[:, 0]), math.pi))
    E = np.array([e.vertices for e in P.edges])
    A, B = V[E[:, 0]], V[E[:, 1]]
    C = np.cross(np.array([0.0, 0.0, 1.0])[None, :], B - A)
    den = C @ pd
    ok = np.abs(den) > 1e-13
    t = -np.einsum("ij,ij->i", pp[None, :] - A[ok], C[ok]) / den[ok]
    Q = pp[None, :] + t[:, None] * pd[None, :]
    th.append(np.mod(np.arctan2(Q[:, 1], Q[:, 0]), math.pi))
    return np.concatenate(th)


def _sentinel(frame: EdgeFrame, which: str, lo: float, hi: float) -> TangencyArc:
    s_axis = frame.length if which == "phi-" else 0.0
    return TangencyArc(which, None, lo, hi, axis_arc_fn(frame, s_axis))


def gamma_profile(P: Polyhedron, frame: EdgeFrame, label: str, polyhedron: int = 0, theta_range=None) -> GammaProfile:
    """Tangent-arc description of the polar angles whose lines stab ``P`` with order ``label``.

    ``label`` is ``"on"`` (the pivot point lies in ``P``: every legal angle
    works), ``"after"`` or ``"before"``.  Empty pieces carry the inverted
    sentinel pair ``(phi+, phi-)``; unbounded sides carry a copy of the
    corresponding legal bound.
    """
    lo, hi = (0.0, frame.theta0) if theta_range is None else theta_range
    if label == "on":
        return GammaProfile(polyhedron, label, frame, [(lo, hi, _sentinel(frame, "phi-", lo, hi), _sentinel(frame, "phi+", lo, hi))])
    ev = polyhedron_events(frame, P)
    ev = np.concatenate([[lo, hi, frame.theta_star], ev])
    ev = np.unique(ev[(ev >= lo) & (ev <= hi)])
    pieces = []
    for a, b in zip(ev, ev[1:]):
        if b - a < 1e-12:
            continue
        m = 0.5 * (a + b)
        try:
            iv = slice_interval(frame, P, m, label)
        except ParallelSlice:
            iv = None
        if iv is None:
            pieces.append((a, b, _sentinel(frame, "phi+", a, b), _sentinel(frame, "phi-", a, b)))
            continue
        arcs = []
        for feat, which in ((iv[2], "phi-"), (iv[3], "phi+")):
            if feat is None:
                arcs.append(_sentinel(frame, which, a, b))
            elif feat[0] == "e":
                ends = frame.to_local(P.edge_points[feat[1]])
                arcs.append(TangencyArc("edge", (polyhedron, "e", feat[1]), a, b, edge_arc_fn(frame, ends[0], ends[1])))
            else:
                x = frame.to_local(P.vertices[feat[1]])
                arcs.append(TangencyArc("vertex", (polyhedron, "v", feat[1]), a, b, point_arc_fn(frame, x)))
        pieces.append((a, b, arcs[0], arcs[1]))
    return GammaProfile(polyhedron, label, frame, pieces)


# tangency patches ------------------------------------------------------------------


@dataclass(frozen=True)
class PatchDomain:
    """Directions ``(theta, phi)`` of lines through the pivot that can touch ``P`` at one edge.

    ``theta`` runs over ``[theta_lo, theta_hi]`` (``theta_hi`` may exceed
    2 pi when the range wraps).  ``phi`` lies between the polar angles
    ``tau`` of the directions parallel to ``lower_facet`` and
    ``upper_facet``; None stands for the sentinel 0 (lower) or pi (upper).
    The antipodal copy holds the same lines with reversed orientation.
    """

    edge: int
    theta_lo: float
    theta_hi: float
    lower_facet: int | None
    upper_facet: int | None
    antipodal: bool
    normals: tuple  # local facet normals keyed like the facet indices

    def _tau(self, f, theta):
        return _tau_local(dict(self.normals)[f], theta)

    def phi_bounds(self, theta: float) -> tuple[float, float]:
        lo = 0.0 if self.lower_facet is None else self._tau(self.lower_facet, theta)
        hi = math.pi if self.upper_facet is None else self._tau(self.upper_facet, theta)
        return lo, hi

    def contains(self, theta: float, phi: float) -> bool:
        if (theta - self.theta_lo) % TWO_PI > self.theta_hi - self.theta_lo:
            return False
        lo, hi = self.phi_bounds(theta)
        return lo <= phi <= hi

    def antipode(self) -> "PatchDomain":
        return PatchDomain(self.edge, (self.theta_lo + math.pi) % TWO_PI, (self.theta_lo + math.pi) % TWO_PI + self.theta_hi - self.theta_lo,
                           self.upper_facet, self.lower_facet, not self.antipodal, self.normals)


def _tau_local(n, theta) -> float | None:
    A = math.cos(theta) * n[0] + math.sin(theta) * n[1]
    if abs(n[2]) < 1e-15:
        return None
    return math.atan2(abs(n[2]), -A * math.copysign(1.0, n[2]))


def patch_domains(P: Polyhedron, pivot: PluckerLine) -> list[PatchDomain]:
    """Direction domains of the tangency patches of ``P``, one per edge and two for silhouette edges.

    An edge is a silhouette edge here when its two facets face opposite
    ways along the pivot direction; its domain then splits into a part
    reaching ``phi = 0`` and a part reaching ``phi = pi``.
    """
    fr = PivotFrame(pivot)
    out = []
    for e in P.edges:
        a, b = fr.to_local(P.edge_points[e.index])
        ta = math.atan2(a[1], a[0]) % TWO_PI
        tb = math.atan2(b[1], b[0]) % TWO_PI
        lo, hi = (ta, tb) if (tb - ta) % TWO_PI <= math.pi else (tb, ta)
        span = (hi - lo) % TWO_PI
        f1, f2 = e.facets
        n1, n2 = fr.R @ P.normals[f1], fr.R @ P.normals[f2]
        normals = ((f1, tuple(n1)), (f2, tuple(n2)))
        mid = lo + 0.5 * span
        t1, t2 = _tau_local(n1, mid), _tau_local(n2, mid)
        if t1 is None or t2 is None:
            continue
        (fa, ta_), (fb, tb_) = sorted([(f1, t1), (f2, t2)], key=lambda x: x[1])
        if n1[2] * n2[2] > 0:
            out.append(PatchDomain(e.index, lo, lo + span, fa, fb, False, normals))
        else:
            out.append(PatchDomain(e.index, lo, lo + span, None, fa, False, normals))
            out.append(PatchDomain(e.index, lo, lo + span, fb, None, False, normals))
    return out
