"""Polyhedra, Plücker lines, planes and the incidence predicates built on them.

Sign convention for the side operator: ``side(a, b) = a.d . b.m + b.d . a.m``
with ``m = p x d``.  It is positive when ``b`` passes ``a`` in the
left-handed sense; only its zero set matters to the rest of the package.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull

EPS = 1e-9
# Incidence tests (contact classification) run at EPS * CONTACT_FACTOR * scale.
CONTACT_FACTOR = 1e3
# A contact segment longer than this (relative to scale) counts as an overlap.
OVERLAP_FRACTION = 1e-5


class GeometryError(Exception):
    """Base class; ``code`` is a stable machine-readable identifier."""

    code = "geometry"


class CoincidentPoints(GeometryError):
    code = "coincident-points"


class DegenerateQuadruple(GeometryError):
    code = "degenerate-quadruple"


class GeneralPositionError(GeometryError):
    code = "general-position"


class NotSeparable(GeometryError):
    code = "not-separable"


class NotDisjoint(GeometryError):
    code = "not-disjoint"


class Overlapping(GeometryError):
    code = "overlapping"


class ConvexityViolation(GeometryError):
    code = "convexity-violation"


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for single vectors)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise GeometryError("zero vector")
    return v / n


@dataclass(frozen=True, eq=False)
class PluckerLine:
    """Directed line with direction ``d`` and moment ``m = p x d``.

    ``anchor`` optionally keeps the point the line was built from, so that
    a serialized line reads back bit for bit.
    """

    direction: np.ndarray
    moment: np.ndarray
    anchor: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=float))
        if self.anchor is not None:
            object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    @classmethod
    def from_point_direction(cls, p, d) -> "PluckerLine":
        p = np.asarray(p, dtype=float)
        d = _unit(d)
        return cls(d, cross3(p, d), p)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.direction, self.moment])

    def normalized(self) -> "PluckerLine":
        n = np.linalg.norm(self.direction)
        return PluckerLine(self.direction / n, self.moment / n)

    def reversed(self) -> "PluckerLine":
        return PluckerLine(-self.direction, -self.moment)

    def point(self) -> np.ndarray:
        """Point of the line closest to the origin."""
        d = self.direction
        return cross3(d, self.moment) / d.dot(d)

    def unit_direction(self) -> np.ndarray:
        return self.direction / np.linalg.norm(self.direction)

    def at(self, t: float) -> np.ndarray:
        return self.point() + t * self.unit_direction()

    def distance_to_point(self, x) -> float:
        u = self.unit_direction()
        w = np.asarray(x, dtype=float) - self.point()
        return float(np.linalg.norm(w - w.dot(u) * u))

    def plucker_residual(self) -> float:
        """Relative violation of the Grassmann-Plücker relation."""
        d, m = self.direction, self.moment
        s = np.linalg.norm(d) * max(np.linalg.norm(m), 1.0)
        return abs(float(d.dot(m))) / s

    def __repr__(self):
        return f"PluckerLine(d={np.round(self.direction, 6)}, p={np.round(self.point(), 6)})"


def line_at_infinity(normal) -> PluckerLine:
    """The line at infinity of planes with this normal.

    A finite line meets it exactly when it is parallel to those planes.  Only
    usable as an input to :func:`transversals_to_four_lines`.
    """
    return PluckerLine(np.zeros(3), _unit(normal))


def plucker_from_points(p, q, eps: float = EPS) -> PluckerLine:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    scale = max(1.0, np.linalg.norm(p), np.linalg.norm(q))
    if np.linalg.norm(d) <= eps * scale:
        raise CoincidentPoints(f"points {p} and {q} coincide")
    return PluckerLine(d, cross3(p, d))


def side_operator(a: PluckerLine, b: PluckerLine) -> float:
    """Reciprocal product; zero iff the lines are coplanar."""
    return float(a.direction.dot(b.moment) + b.direction.dot(a.moment))


def line_distance(a: PluckerLine, b: PluckerLine) -> float:
    """Euclidean distance between two lines (0 for meeting or parallel-coincident)."""
    da, db = a.unit_direction(), b.unit_direction()
    c = cross3(da, db)
    nc = np.linalg.norm(c)
    if nc < 1e-12:
        return b.distance_to_point(a.point())
    return abs(float((b.point() - a.point()).dot(c))) / nc


@dataclass(frozen=True, eq=False)
class Plane:
    """Plane ``{x : normal . x = offset}``; positive side is ``normal . x > offset``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        s = np.linalg.norm(n)
        object.__setattr__(self, "normal", n / s)
        object.__setattr__(self, "offset", float(self.offset) / s)

    @classmethod
    def through(cls, point, normal) -> "Plane":
        n = _unit(normal)
        return cls(n, float(n.dot(point)))

    def signed_distance(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def flipped(self) -> "Plane":
        return Plane(-self.normal, -self.offset)

    def intersect_line(self, line: PluckerLine):
        """Intersection point with a line, or None when parallel."""
        d = line.direction
        den = self.normal.dot(d)
        if abs(den) < 1e-14 * np.linalg.norm(d):
            return None
        p = line.point()
        t = (self.offset - self.normal.dot(p)) / den
        return p + t * d


@dataclass(frozen=True)
class Edge:
    index: int
    vertices: tuple[int, int]
    facets: tuple[int, int]


class Polyhedron:
    """Convex polyhedron given by vertices and outward-oriented facets.

    Facets are vertex-index cycles ordered counter-clockwise when seen from
    outside.  ``unbounded_dir`` marks a prism that is unbounded in that
    direction; the stored solid is its bounded core.
    """

    def __init__(self, vertices, facets, unbounded_dir=None, eps: float = EPS, validate: bool = True):
        self.vertices = np.asarray(vertices, dtype=float)
        self.facets = [tuple(int(i) for i in f) for f in facets]
        self.unbounded_dir = None if unbounded_dir is None else _unit(unbounded_dir)
        self.eps = eps
        if validate:
            self.validate()

    @classmethod
    def from_points(cls, points, unbounded_dir=None, eps: float = EPS) -> "Polyhedron":
        """Convex hull of ``points`` with coplanar hull triangles merged into facets."""
        pts = np.asarray(points, dtype=float)
        hull = ConvexHull(pts)
        used = sorted(set(hull.vertices.tolist()))
        remap = {old: new for new, old in enumerate(used)}
        verts = pts[used]
        scale = max(1.0, float(np.abs(verts).max()))
        groups: list[tuple[np.ndarray, float, set[int]]] = []
        for simplex, eq in zip(hull.simplices, hull.equations):
            n, off = eq[:3], -eq[3]
            for gn, goff, members in groups:
                if np.allclose(gn, n, atol=1e-9) and abs(goff - off) <= 1e-9 * scale:
                    members.update(remap[i] for i in simplex)
                    break
            else:
                groups.append((n, off, {remap[i] for i in simplex}))
        facets = []
        for n, _, members in groups:
            idx = np.array(sorted(members))
            c = verts[idx].mean(axis=0)
            u = verts[idx[0]] - c
            u /= np.linalg.norm(u)
            w = np.cross(n, u)
            ang = np.arctan2((verts[idx] - c) @ w, (verts[idx] - c) @ u)
            facets.append(tuple(int(i) for i in idx[np.argsort(ang)]))
        return cls(verts, facets, unbounded_dir=unbounded_dir, eps=eps)

    @classmethod
    def box(cls, lo, hi, unbounded_dir=None) -> "Polyhedron":
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        corners = [[(lo, hi)[i][0], (lo, hi)[j][1], (lo, hi)[k][2]] for i in (0, 1) for j in (0, 1) for k in (0, 1)]
        return cls.from_points(corners, unbounded_dir=unbounded_dir)

    # derived data ---------------------------------------------------------

    @cached_property
    def scale(self) -> float:
        return max(1.0, float(np.linalg.norm(self.vertices, axis=1).max()))

    @cached_property
    def planes(self) -> list[Plane]:
        out = []
        for f in self.facets:
            pts = self.vertices[list(f)]
            # Newell's method
            n = np.zeros(3)
            for a, b in zip(pts, np.roll(pts, -1, axis=0)):
                n += np.cross(a, b)
            out.append(Plane(n, float(_unit(n).dot(pts.mean(axis=0))) * np.linalg.norm(n)))
        return out

    @cached_property
    def normals(self) -> np.ndarray:
        return np.array([p.normal for p in self.planes])

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([p.offset for p in self.planes])

    @cached_property
    def edges(self) -> list[Edge]:
        owner: dict[tuple[int, int], list[int]] = {}
        for fi, f in enumerate(self.facets):
            for a, b in zip(f, f[1:] + f[:1]):
                owner.setdefault((min(a, b), max(a, b)), []).append(fi)
        out = []
        for i, (key, fs) in enumerate(sorted(owner.items())):
            if len(fs) != 2:
                raise ConvexityViolation(f"edge {key} has {len(fs)} incident facets")
            out.append(Edge(i, key, (fs[0], fs[1])))
        return out

    @cached_property
    def edge_points(self) -> np.ndarray:
        """Array (E, 2, 3) of edge endpoints."""
        return np.array([self.vertices[list(e.vertices)] for e in self.edges])

    @cached_property
    def edge_lines(self) -> list[PluckerLine]:
        return [plucker_from_points(a, b) for a, b in self.edge_points]

    @cached_property
    def vertex_facets(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.vertices]
        for fi, f in enumerate(self.facets):
            for v in f:
                out[v].append(fi)
        return out

    @cached_property
    def vertex_edges(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.vertices]
        for e in self.edges:
            for v in e.vertices:
                out[v].append(e.index)
        return out

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    def validate(self) -> None:
        tol = self.eps * CONTACT_FACTOR * self.scale
        if len(self.vertices) < 4 or len(self.facets) < 4:
            raise ConvexityViolation("a polyhedron needs at least 4 vertices and 4 facets")
        for fi, (f, pl) in enumerate(zip(self.facets, self.planes)):
            d = pl.signed_distance(self.vertices)
            if np.any(d > tol):
                raise ConvexityViolation(f"vertex {int(np.argmax(d))} lies outside facet {fi}")
            if np.any(np.abs(d[list(f)]) > tol):
                raise ConvexityViolation(f"facet {fi} is not planar")
        if len(self.vertices) - len(self.edges) + len(self.facets) != 2:
            raise ConvexityViolation("Euler characteristic of the boundary is not 2")
        centroid = self.vertices.mean(axis=0)
        if np.any(self.normals @ centroid - self.offsets >= 0):
            raise ConvexityViolation("facets are not outward oriented")

    def contains_point(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.normals @ np.asarray(x, float) - self.offsets <= tol))

    def transformed(self, rotation=None, translation=None) -> "Polyhedron":
        R = np.eye(3) if rotation is None else np.asarray(rotation, float)
        t = np.zeros(3) if translation is None else np.asarray(translation, float)
        v = self.vertices @ R.T + t
        ud = None if self.unbounded_dir is None else R @ self.unbounded_dir
        return Polyhedron(v, self.facets, unbounded_dir=ud, eps=self.eps)

    def extended(self, length: float, direction=None) -> "Polyhedron":
        """Bounded stand-in for an unbounded prism: the core swept by ``length``.

        ``direction`` overrides the sweep direction (bounded polyhedra are
        returned unchanged otherwise).  The result keeps the core's tolerance
        scale so that the long sweep does not loosen contact tests.
        """
        d = self.unbounded_dir if direction is None else _unit(direction)
        if d is None:
            return self
        pts = np.vstack([self.vertices, self.vertices + length * d])
        out = Polyhedron.from_points(pts, unbounded_dir=None, eps=self.eps)
        out.__dict__["scale"] = self.scale
        return out

    def __repr__(self):
        return f"Polyhedron(V={len(self.vertices)}, F={len(self.facets)}, E={len(self.edges)})"


# line / polyhedron predicates ----------------------------------------------


def contact_tolerance(P: Polyhedron, line: PluckerLine | None = None, eps: float = EPS) -> float:
    s = P.scale
    if line is not None:
        s = max(s, float(np.linalg.norm(line.point())))
    return eps * CONTACT_FACTOR * s


def clip_interval(line: PluckerLine, P: Polyhedron, tol: float = 0.0):
    """Parameter interval ``[t0, t1]`` of ``line`` inside ``P`` grown by ``tol``, or None.

    Parameters are arc length along the unit direction from ``line.point()``.
    """
    p0 = line.point()
    u = line.unit_direction()
    a = P.normals @ u
    c = P.normals @ p0 - P.offsets
    lo, hi = -np.inf, np.inf
    par = np.abs(a) < 1e-13
    if np.any(c[par] > tol):
        return None
    pos = a > 0
    neg = (~pos) & (~par)
    if np.any(pos):
        hi = float(np.min((tol - c[pos]) / a[pos]))
    if np.any(neg):
        lo = float(np.max((tol - c[neg]) / a[neg]))
    if lo > hi:
        return None
    return lo, hi


def stabs(line: PluckerLine, P: Polyhedron, tol: float | None = None) -> bool:
    """Closed intersection test; tangency counts as stabbing."""
    if tol is None:
        tol = contact_tolerance(P, line)
    return clip_interval(line, P, tol) is not None


@dataclass(frozen=True)
class Contact:
    """How a line meets a polyhedron.

    ``kind`` is one of miss, cross, edge, vertex, facet, collinear.  ``codim`` is
    the number of independent conditions the contact imposes on the line:
    0 for miss/cross, 1 for an edge, 2 for a vertex or a facet overlap (plus
    one per facet vertex the overlapping line passes), 4 for a line
    supporting an edge.
    """

    kind: str
    codim: int
    feature: tuple = ()
    interval: tuple[float, float] | None = None

    @property
    def tangent(self) -> bool:
        return self.codim > 0

    @property
    def touches(self) -> bool:
        return self.kind != "miss"


def _segment_line_params(line: PluckerLine, A: np.ndarray, B: np.ndarray):
    """Closest-point parameter on each segment A->B and the distance to the line."""
    p0 = line.point()
    u = line.unit_direction()
    D = B - A
    W = A - p0
    Dp = D - np.outer(D @ u, u)
    Wp = W - np.outer(W @ u, u)
    den = np.einsum("ij,ij->i", Dp, Dp)
    s = np.where(den > 1e-300, -np.einsum("ij,ij->i", Wp, Dp) / np.where(den > 1e-300, den, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    R = Wp + s[:, None] * Dp
    return s, np.linalg.norm(R, axis=1)


def classify_contact(line: PluckerLine, P: Polyhedron, tol: float | None = None) -> Contact:
    """Contact type of ``line`` with ``P`` (see :class:`Contact`)."""
    if tol is None:
        tol = contact_tolerance(P, line)
    iv = clip_interval(line, P, tol)
    if iv is None:
        return Contact("miss", 0)
    inner = clip_interval(line, P, -tol)
    if inner is not None and inner[1] - inner[0] > tol:
        return Contact("cross", 0, (), inner)
    p0 = line.point()
    u = line.unit_direction()
    # facets whose plane contains the line along the whole extent of P
    ext = (P.vertices - p0) @ u
    t_lo, t_hi = ext.min(), ext.max()
    c = P.normals @ p0 - P.offsets
    a = P.normals @ u
    in_plane = np.where((np.abs(c + a * t_lo) <= tol) & (np.abs(c + a * t_hi) <= tol))[0]
    W = P.vertices - p0
    vdist = np.linalg.norm(W - np.outer(W @ u, u), axis=1)
    on_verts = np.where(vdist <= tol)[0]
    # two facet planes hold the line: it supports their common edge, or
    # (facets meeting only at a vertex) it just passes that vertex
    for f1, f2 in itertools.combinations(in_plane.tolist(), 2):
        e = _shared_edge(P, int(f1), int(f2))
        if e >= 0:
            return Contact("collinear", 4, (e,), iv)
    if len(in_plane) >= 2:
        in_plane = in_plane[:0]
    overlap = OVERLAP_FRACTION * P.scale
    if len(in_plane) == 1 and iv[1] - iv[0] > overlap:
        f = int(in_plane[0])
        vs = tuple(sorted(int(v) for v in on_verts if v in P.facets[f]))
        return Contact("facet", min(2 + len(vs), 4), (f, vs), iv)
    if len(on_verts) >= 1:
        v = int(on_verts[np.argmin(vdist[on_verts])])
        return Contact("vertex", 2, (v,), iv)
    s, dist = _segment_line_params(line, P.edge_points[:, 0], P.edge_points[:, 1])
    cand = np.where(dist <= tol)[0]
    if len(cand) >= 1:
        e = int(cand[np.argmin(dist[cand])])
        return Contact("edge", 1, (e,), iv)
    # numerically tangent but no feature within tolerance: report as crossing
    return Contact("cross", 0, (), iv)


def _shared_edge(P: Polyhedron, f1: int, f2: int) -> int:
    for e in P.edges:
        if set(e.facets) == {f1, f2}:
            return e.index
    return -1


def tangent_at_edge(line: PluckerLine, P: Polyhedron, e: int | Edge, tol: float | None = None) -> bool:
    """True iff ``line`` touches ``P`` exactly at the relative interior of edge ``e``."""
    idx = e.index if isinstance(e, Edge) else int(e)
    c = classify_contact(line, P, tol)
    return c.kind == "edge" and c.feature == (idx,)


# four lines -----------------------------------------------------------------


def _swap(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v[3:], v[:3]])


def _klein(x: np.ndarray, y: np.ndarray) -> float:
    return 0.5 * float(x[:3].dot(y[3:]) + y[:3].dot(x[3:]))


def transversals_to_four_lines(l1, l2, l3, l4, eps: float = EPS) -> list[PluckerLine]:
    """Real lines meeting all four given lines (0, 1 or 2 of them).

    Lines at infinity (zero direction) are accepted as inputs and encode a
    parallelism constraint.  Raises :class:`DegenerateQuadruple` when the
    solutions form a continuous family.
    """
    lines = [l1, l2, l3, l4]
    finite = [l for l in lines if np.linalg.norm(l.direction) > 0]
    # translate to the centroid of the inputs for conditioning
    c = np.mean([l.point() for l in finite], axis=0) if finite else np.zeros(3)
    rows = []
    for l in lines:
        d = l.direction
        nd = np.linalg.norm(d)
        if nd > 0:
            d = d / nd
            m = (l.moment / nd) - np.cross(c, d)
        else:
            m = l.moment / np.linalg.norm(l.moment)
        rows.append(_swap(np.concatenate([d, m])))
    M = np.array(rows)
    _, sv, Vt = np.linalg.svd(M)
    if sv[3] <= 1e-10 * sv[0]:
        raise DegenerateQuadruple("incidence conditions have rank < 4")
    A, B = Vt[4], Vt[5]
    qa, qb, qab = _klein(A, A), _klein(B, B), _klein(A, B)
    # solve qa s^2 + 2 qab s t + qb t^2 = 0 over [s : t]
    if abs(qa) < 1e-14 and abs(qb) < 1e-14 and abs(qab) < 1e-14:
        raise DegenerateQuadruple("pencil lies on the Klein quadric")
    disc = qab * qab - qa * qb
    norm = max(abs(qa), abs(qb), abs(qab))
    if disc < -1e-12 * norm * norm:
        return []
    disc = max(disc, 0.0)
    sols = []
    r = np.sqrt(disc)
    if abs(qa) >= abs(qb):
        for t in ({1.0} if r == 0 else {1.0, -1.0}):
            # s/t = (-qab +- r)/qa ; use t = qa to avoid division
            s = -qab + t * r
            sols.append(s * A + qa * B)
    else:
        for t in ({1.0} if r == 0 else {1.0, -1.0}):
            s = -qab + t * r
            sols.append(qb * A + s * B)
    out = []
    for x in sols:
        d, m = x[:3], x[3:]
        nd = np.linalg.norm(d)
        if nd < 1e-9 * np.linalg.norm(x):
            continue  # line at infinity
        d, m = d / nd, m / nd
        m = m + np.cross(c, d)
        L = _project_klein(PluckerLine(d, m))
        L = _refine(L, lines)
        if not any(_same_line(L, o) for o in out):
            out.append(L)
    return out


def _project_klein(L: PluckerLine) -> PluckerLine:
    d, m = L.direction, L.moment
    d = d / np.linalg.norm(d)
    return PluckerLine(d, m - d.dot(m) * d)


def _refine(L: PluckerLine, lines, iters: int = 3) -> PluckerLine:
    """Gauss-Newton polish of the incidence residuals (point + direction form)."""
    p = L.point()
    d = L.unit_direction()
    for _ in range(iters):
        def res(p, d):
            m = np.cross(p, d)
            return np.array([d.dot(l.moment) + l.direction.dot(m) for l in lines])

        r = res(p, d)
        if np.max(np.abs(r)) < 1e-15:
            break
        # parameters: two shifts orthogonal to d, two rotations of d
        e1 = np.cross(d, [1.0, 0, 0])
        if np.linalg.norm(e1) < 0.5:
            e1 = np.cross(d, [0, 1.0, 0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(d, e1)
        J = np.empty((len(lines), 4))
        h = 1e-7 * max(1.0, np.linalg.norm(p))
        for j, (dp, dd) in enumerate([(e1, 0), (e2, 0), (0, e1), (0, e2)]):
            pp = p + h * np.asarray(dp if not np.isscalar(dp) else np.zeros(3))
            ddv = d + 1e-7 * np.asarray(dd if not np.isscalar(dd) else np.zeros(3))
            J[:, j] = (res(pp, ddv / np.linalg.norm(ddv)) - r) / (h if j < 2 else 1e-7)
        try:
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        except np.linalg.LinAlgError:
            break
        p_new = p + step[0] * e1 + step[1] * e2
        d_new = d + step[2] * e1 + step[3] * e2
        d_new /= np.linalg.norm(d_new)
        if np.max(np.abs(res(p_new, d_new))) >= np.max(np.abs(r)):
            break
        p, d = p_new, d_new
    return PluckerLine(d, np.cross(p, d))


def _same_line(a: PluckerLine, b: PluckerLine, tol: float = 1e-9) -> bool:
    ua, ub = a.unit_direction(), b.unit_direction()
    if np.linalg.norm(np.cross(ua, ub)) > tol:
        return False
    return b.distance_to_point(a.point()) <= tol * max(1.0, np.linalg.norm(a.point()))


def incidence_residual(x: PluckerLine, lines) -> float:
    """Max distance-like incidence residual of ``x`` against ``lines``."""
    xs = x.normalized()
    out = 0.0
    for l in lines:
        nd = np.linalg.norm(l.direction)
        ln = PluckerLine(l.direction / nd, l.moment / nd) if nd > 0 else PluckerLine(l.direction, _unit(l.moment))
        out = max(out, abs(side_operator(xs, ln)))
    return out


# separating planes ----------------------------------------------------------


def separating_planes_line_body(pivot: PluckerLine, P: Polyhedron, eps: float = EPS) -> list[Plane]:
    """One plane per connected component of ``pivot`` minus ``P``.

    Every returned normal points away from ``P``.  When the pivot misses ``P``
    the single plane contains the pivot.  Otherwise each plane supports the
    facet through which the pivot leaves ``P`` toward that component.
    """
    tol = contact_tolerance(P, pivot, eps)
    iv = clip_interval(pivot, P, 0.0)
    if iv is None:
        return [_plane_containing_line(pivot, P, tol)]
    t0, t1 = iv
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise NotSeparable("pivot has an unbounded part inside the polyhedron")
    if t1 - t0 <= tol:
        raise NotSeparable("pivot is tangent to the polyhedron")
    p0, u = pivot.point(), pivot.unit_direction()
    out = []
    for t, sgn in ((t0, -1.0), (t1, 1.0)):
        x = p0 + t * u
        d = np.abs(P.normals @ x - P.offsets)
        a = P.normals @ u * sgn
        # facet(s) containing the exit point with the pivot leaving through them
        cand = [i for i in np.argsort(d) if d[i] <= tol and a[i] > 0]
        if len(cand) != 1:
            raise NotSeparable("pivot leaves the polyhedron through an edge or vertex")
        out.append(P.planes[cand[0]])
    return out


def _plane_containing_line(pivot: PluckerLine, P: Polyhedron, tol: float) -> Plane:
    p0, u = pivot.point(), pivot.unit_direction()
    e1 = np.cross(u, [1.0, 0, 0])
    if np.linalg.norm(e1) < 0.5:
        e1 = np.cross(u, [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    w = P.vertices - p0
    ang = np.sort(np.arctan2(w @ e2, w @ e1))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    i = int(np.argmax(gaps))
    if gaps[i] <= np.pi:
        raise NotSeparable("pivot pierces the polyhedron's projection")
    mid = ang[i] + gaps[i] / 2.0  # direction of the empty side
    # the plane contains the pivot and the bisector of the free gap's complement
    # normal points toward the empty side, away from P
    nrm = np.cos(mid) * e1 + np.sin(mid) * e2
    # rotate so the normal is orthogonal to the plane through pivot at angle mid +- pi/2
    plane = Plane.through(p0, nrm)
    if np.max(plane.signed_distance(P.vertices)) >= -tol:
        raise NotSeparable("no strictly separating plane through the pivot")
    return plane


def separating_plane_bodies(P: Polyhedron, Q: Polyhedron, eps: float = EPS) -> Plane:
    """Max-margin plane with ``P`` on the negative and ``Q`` on the positive side."""
    c = 0.5 * (P.vertices.mean(axis=0) + Q.vertices.mean(axis=0))
    VP = P.vertices - c
    VQ = Q.vertices - c
    # variables: n (3), b, margin ; maximize margin with |n_i| <= 1
    nP, nQ = len(VP), len(VQ)
    A = np.zeros((nP + nQ, 5))
    A[:nP, :3] = VP
    A[:nP, 3] = -1.0
    A[:nP, 4] = 1.0
    A[nP:, :3] = -VQ
    A[nP:, 3] = 1.0
    A[nP:, 4] = 1.0
    res = linprog(
        c=[0, 0, 0, 0, -1.0],
        A_ub=A,
        b_ub=np.zeros(nP + nQ),
        bounds=[(-1, 1)] * 3 + [(None, None), (None, 1.0)],
        method="highs",
    )
    scale = max(P.scale, Q.scale)
    if res.status != 0 or res.x[4] <= eps * scale:
        raise Overlapping("polyhedra are not strictly separable")
    # Euclidean max margin: min |n|^2 subject to unit functional margins,
    # started from the LP plane rescaled to margin 1
    x0 = res.x[:4] / res.x[4]
    G = np.vstack([np.hstack([-VP, np.ones((nP, 1))]), np.hstack([VQ, -np.ones((nQ, 1))])])
    svm = minimize(
        lambda x: x[:3].dot(x[:3]),
        x0,
        jac=lambda x: np.concatenate([2 * x[:3], [0.0]]),
        constraints=[{"type": "ineq", "fun": lambda x: G @ x - 1.0, "jac": lambda x: G}],
        method="SLSQP",
        options={"maxiter": 200, "ftol": 1e-14},
    )
    x = svm.x if svm.success and np.all(G @ svm.x > 0) else x0
    n, b = x[:3], x[3]
    return Plane(n, b + n.dot(c))


def batch_transversals(D: np.ndarray, M: np.ndarray, center=None):
    """Vectorized four-lines solver.

    ``D`` and ``M`` have shape (N, 4, 3): directions and moments of N
    quadruples of finite lines.  Returns ``(dirs, moms, valid)`` of shapes
    (N, 2, 3), (N, 2, 3), (N, 2).  Degenerate quadruples (rank < 4) are
    reported invalid rather than raised; use
    :func:`transversals_to_four_lines` to diagnose them.
    """
    D = np.asarray(D, float)
    M = np.asarray(M, float)
    N = D.shape[0]
    nd = np.linalg.norm(D, axis=2, keepdims=True)
    Du = D / nd
    Mu = M / nd
    P = np.cross(Du, Mu)  # closest points
    c = P.mean(axis=1) if center is None else np.broadcast_to(np.asarray(center, float), (N, 3))
    Mc = Mu - np.cross(c[:, None, :], Du)
    rows = np.concatenate([Mc, Du], axis=2)  # swap(d, m)
    _, sv, Vt = np.linalg.svd(rows, full_matrices=True)
    rank_ok = sv[:, 3] > 1e-10 * sv[:, 0]
    A, B = Vt[:, 4, :], Vt[:, 5, :]

    def klein(x, y):
        return 0.5 * (np.einsum("ij,ij->i", x[:, :3], y[:, 3:]) + np.einsum("ij,ij->i", y[:, :3], x[:, 3:]))

    qa, qb, qab = klein(A, A), klein(B, B), klein(A, B)
    disc = qab * qab - qa * qb
    norm = np.maximum(np.maximum(np.abs(qa), np.abs(qb)), np.abs(qab))
    real = disc >= -1e-12 * norm * norm
    r = np.sqrt(np.maximum(disc, 0.0))
    use_a = np.abs(qa) >= np.abs(qb)
    sols = []
    for sgn in (1.0, -1.0):
        s = -qab + sgn * r
        X = np.where(use_a[:, None], s[:, None] * A + qa[:, None] * B, qb[:, None] * A + s[:, None] * B)
        sols.append(X)
    X = np.stack(sols, axis=1)  # (N, 2, 6)
    d = X[:, :, :3]
    m = X[:, :, 3:]
    ndx = np.linalg.norm(d, axis=2)
    valid = rank_ok[:, None] & real[:, None] & (ndx > 1e-9 * np.linalg.norm(X, axis=2))
    safe = np.where(ndx > 0, ndx, 1.0)
    d = d / safe[:, :, None]
    m = m / safe[:, :, None]
    m = m + np.cross(c[:, None, :], d)
    # project onto the Klein quadric
    m = m - np.einsum("nij,nij->ni", d, m)[:, :, None] * d
    # a double root yields the same line twice
    same = np.linalg.norm(d[:, 0] - d[:, 1], axis=1) + np.linalg.norm(m[:, 0] - m[:, 1], axis=1) < 1e-12
    valid[:, 1] &= ~same
    return d, m, valid
