"""Scene model, JSON round-trips, general-position audit and scene generators."""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.transform import Rotation

from .geometry import (
    CONTACT_FACTOR,
    EPS,
    ConvexityViolation,
    DegenerateQuadruple,
    GeometryError,
    NotSeparable,
    Overlapping,
    PluckerLine,
    Polyhedron,
    clip_interval,
    line_distance,
    plucker_from_points,
    separating_plane_bodies,
    separating_planes_line_body,
    side_operator,
    transversals_to_four_lines,
)

SCHEMA_VERSION = 1
# generated scenes keep every audited coincidence at least this far (relative to scale)
GENERATOR_MARGIN = 1e-4


class ParseError(GeometryError):
    code = "parse-error"


class FlagMismatch(GeometryError):
    code = "flag-mismatch"


class PackingFailed(GeometryError):
    code = "packing-failed"


class AuditFailedAfterRetries(GeometryError):
    code = "audit-failed"


FLAG_NAMES = ("pairwise_disjoint", "pivot_disjoint", "unbounded_parallel")


@dataclass
class Scene:
    polyhedra: list[Polyhedron]
    pivot: PluckerLine
    seed: int = 0
    flags: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.polyhedra)

    @property
    def n(self) -> int:
        return sum(P.n_facets for P in self.polyhedra)

    @property
    def scale(self) -> float:
        s = [P.scale for P in self.polyhedra] + [float(np.linalg.norm(self.pivot.point())), 1.0]
        return max(s)

    def subset(self, idx) -> "Scene":
        return Scene([self.polyhedra[i] for i in idx], self.pivot, self.seed, dict(self.flags))

    def with_pivot(self, pivot: PluckerLine) -> "Scene":
        return Scene(self.polyhedra, pivot, self.seed, dict(self.flags))

    def digest(self) -> str:
        return hashlib.sha256(dumps_scene(self).encode()).hexdigest()[:16]

    def verify_flags(self, eps: float = EPS) -> None:
        f = self.flags
        if f.get("pairwise_disjoint"):
            for P, Q in itertools.combinations(self.polyhedra, 2):
                try:
                    separating_plane_bodies(P, Q, eps)
                except Overlapping as exc:
                    raise FlagMismatch("pairwise_disjoint is set but two polyhedra overlap") from exc
        if f.get("pivot_disjoint"):
            for P in self.polyhedra:
                if clip_interval(self.pivot, P, 0.0) is not None:
                    raise FlagMismatch("pivot_disjoint is set but the pivot meets a polyhedron")
        if f.get("unbounded_parallel"):
            w = self.pivot.unit_direction()
            for P in self.polyhedra:
                if P.unbounded_dir is None or abs(float(P.unbounded_dir.dot(w)) - 1.0) > 1e-9:
                    raise FlagMismatch("unbounded_parallel is set but a polyhedron is not unbounded along the pivot")


# serialization -----------------------------------------------------------------


def _canonical_polyhedron(P: Polyhedron) -> dict:
    order = sorted(range(len(P.vertices)), key=lambda i: tuple(P.vertices[i]))
    remap = {old: new for new, old in enumerate(order)}
    facets = []
    for f in P.facets:
        g = [remap[i] for i in f]
        r = g.index(min(g))
        facets.append(g[r:] + g[:r])
    facets.sort()
    out = {"vertices": [[float(x) for x in P.vertices[i]] for i in order], "facets": facets}
    if P.unbounded_dir is not None:
        out["unbounded_dir"] = [float(x) for x in P.unbounded_dir]
    return out


def _pivot_dict(pivot: PluckerLine) -> dict:
    if pivot.anchor is not None:
        p, d = pivot.anchor, pivot.direction
    else:
        p, d = pivot.point(), pivot.unit_direction()
    return {"point": [float(x) for x in p], "direction": [float(x) for x in d]}


def _pivot_from_dict(piv: dict) -> PluckerLine:
    p = np.asarray(piv["point"], dtype=float)
    d = np.asarray(piv["direction"], dtype=float)
    if p.shape != (3,) or d.shape != (3,):
        raise ParseError("pivot point and direction must have three coordinates")
    n = float(np.linalg.norm(d))
    if n == 0.0:
        raise ParseError("pivot direction is zero")
    if abs(n - 1.0) > 1e-12:
        d = d / n
    # keep the stored numbers so that a loaded scene serializes identically
    return PluckerLine(d, np.cross(p, d), p)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "seed": int(scene.seed),
        "pivot": _pivot_dict(scene.pivot),
        "flags": {k: bool(scene.flags.get(k, False)) for k in FLAG_NAMES},
        "polyhedra": [_canonical_polyhedron(P) for P in scene.polyhedra],
    }


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=1, sort_keys=True)


def scene_from_dict(d: dict, verify: bool = True) -> Scene:
    try:
        if d.get("version") != SCHEMA_VERSION:
            raise ParseError(f"unsupported scene version {d.get('version')}")
        pivot = _pivot_from_dict(d["pivot"])
        polys = [
            Polyhedron(p["vertices"], p["facets"], unbounded_dir=p.get("unbounded_dir"))
            for p in d["polyhedra"]
        ]
        scene = Scene(polys, pivot, int(d.get("seed", 0)), dict(d.get("flags", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    if verify:
        scene.verify_flags()
    return scene


def loads_scene(text: str, verify: bool = True) -> Scene:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return scene_from_dict(d, verify)


def load_scene(path, verify: bool = True) -> Scene:
    return loads_scene(Path(path).read_text(), verify)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene))


# general-position audit ----------------------------------------------------------


@dataclass(frozen=True)
class AuditIssue:
    kind: str
    detail: tuple

    def to_dict(self):
        return {"kind": self.kind, "detail": list(self.detail)}


def audit_general_position(scene: Scene, eps: float = EPS, thorough: bool = False, margin: float | None = None) -> list[AuditIssue]:
    """Degeneracies that the engine assumes away.

    Checks edges coplanar with the pivot, edges lying in a facet plane of
    another polyhedron, vertices close to a facet plane of another
    polyhedron, lines through two vertices of different polyhedra
    that meet the pivot, vertices on the pivot, and (with ``thorough``) edge
    triples whose transversals through the pivot form a continuous family.
    ``margin`` replaces the contact tolerance as the distance below which a
    coincidence is reported; generators use a wider margin so that their
    scenes stay clear of near-degeneracies.
    """
    issues: list[AuditIssue] = []
    pivot = scene.pivot.normalized()
    tol = eps * CONTACT_FACTOR * scene.scale if margin is None else margin
    for k, P in enumerate(scene.polyhedra):
        for e, L in zip(P.edges, P.edge_lines):
            if P.unbounded_dir is not None and np.linalg.norm(np.cross(L.unit_direction(), P.unbounded_dir)) < 1e-9:
                continue  # walls of a prism unbounded along the pivot are parallel to it by construction
            if abs(side_operator(L.normalized(), pivot)) <= tol:
                issues.append(AuditIssue("edge-coplanar-with-pivot", (k, e.index)))
        for v, x in enumerate(P.vertices):
            if pivot.distance_to_point(x) <= tol:
                issues.append(AuditIssue("vertex-on-pivot", (k, v)))
    for (i, P), (j, Q) in itertools.permutations(list(enumerate(scene.polyhedra)), 2):
        d = np.abs(Q.normals @ P.vertices.T - Q.offsets[:, None])  # (F_Q, V_P)
        for e in P.edges:
            a, b = e.vertices
            hit = np.where((d[:, a] <= tol) & (d[:, b] <= tol))[0]
            for f in hit:
                issues.append(AuditIssue("edge-in-foreign-facet-plane", (i, e.index, j, int(f))))
        # a vertex near a foreign facet plane: lines from it toward the facet graze it
        for f, v in zip(*np.where(d <= tol)):
            issues.append(AuditIssue("vertex-near-foreign-facet", (i, int(v), j, int(f))))
    for (i, P), (j, Q) in itertools.combinations(list(enumerate(scene.polyhedra)), 2):
        for a, x in enumerate(P.vertices):
            D = Q.vertices - x
            n = np.linalg.norm(D, axis=1)
            for b in range(len(Q.vertices)):
                if n[b] <= tol:
                    issues.append(AuditIssue("shared-vertex", (i, a, j, b)))
                    continue
                L = PluckerLine(D[b] / n[b], np.cross(x, D[b] / n[b]))
                if line_distance(L, pivot) <= tol:
                    issues.append(AuditIssue("vertex-pair-meets-pivot", (i, a, j, b)))
    if thorough:
        lines = [(k, e.index, L) for k, P in enumerate(scene.polyhedra) for e, L in zip(P.edges, P.edge_lines)]
        for (a, ea, La), (b, eb, Lb), (c, ec, Lc) in itertools.combinations(lines, 3):
            if len({a, b, c}) < 3:
                continue
            try:
                transversals_to_four_lines(pivot, La, Lb, Lc, eps)
            except DegenerateQuadruple:
                issues.append(AuditIssue("degenerate-quadruple", (a, ea, b, eb, c, ec)))
    return issues


def perturb_general_position(scene: Scene, delta: float, seed: int | None = None, retries: int = 20, eps: float = EPS) -> Scene:
    """Small random rigid motion of every polyhedron until the audit passes.

    Rigid motions keep facets planar.  Unbounded prisms only rotate about
    axes parallel to their unbounded direction so that direction is kept.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not audit_general_position(scene, eps):
        return scene
    rng = np.random.default_rng(scene.seed if seed is None else seed)
    for _ in range(retries):
        polys = []
        for P in scene.polyhedra:
            c = P.vertices.mean(axis=0)
            if P.unbounded_dir is None:
                rot = Rotation.from_rotvec(rng.normal(size=3) * delta / max(1.0, P.scale)).as_matrix()
            else:
                rot = Rotation.from_rotvec(P.unbounded_dir * rng.normal() * delta / max(1.0, P.scale)).as_matrix()
            t = rng.normal(size=3) * delta
            if P.unbounded_dir is not None:
                t -= t.dot(P.unbounded_dir) * P.unbounded_dir
            v = (P.vertices - c) @ rot.T + c + t
            polys.append(Polyhedron(v, P.facets, unbounded_dir=P.unbounded_dir, eps=P.eps))
        out = Scene(polys, scene.pivot, scene.seed, dict(scene.flags))
        if not audit_general_position(out, eps):
            try:
                out.verify_flags(eps)
            except FlagMismatch:
                continue
            return out
    raise AuditFailedAfterRetries(f"general position not reached after {retries} perturbations")


# generators ------------------------------------------------------------------------


def random_polytope(rng, center, radius, n_facets: int, anisotropy: float = 0.3) -> Polyhedron:
    """Hull of points on a randomly stretched sphere; about ``n_facets`` triangular facets."""
    m = max(4, n_facets // 2 + 2)
    # spread the points so that no edge or facet is tiny
    sep = 0.6 * math.sqrt(4 * math.pi / m)
    for _ in range(50):
        pts = []
        while len(pts) < m:
            x = rng.normal(size=3)
            x /= np.linalg.norm(x)
            if all(math.acos(min(1.0, float(x.dot(y)))) >= sep for y in pts):
                pts.append(x)
        pts = np.array(pts)
        stretch = 1.0 + anisotropy * rng.uniform(-1, 1, size=3)
        pts = pts * stretch * radius + center
        try:
            P = Polyhedron.from_points(pts)
        except (ConvexityViolation, ValueError):
            continue
        if len(P.vertices) == m:
            return P
    raise PackingFailed("could not build a random polytope")


def _random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def gen_random_scene(k: int, n_per_body: int = 12, bounding_box: float = 10.0, seed: int = 0, flags: dict | None = None) -> Scene:
    """Random scene whose bodies cluster around a line meeting the pivot.

    Bodies are random polytopes strung along a random "spine" line that
    crosses the pivot, so transversals through the pivot usually exist.
    Flags: ``pivot_disjoint`` keeps the pivot outside every body (otherwise
    one body straddles it), ``unbounded_parallel`` emits prisms unbounded
    along the pivot, ``scattered`` stacks the bodies along the pivot on one
    side of it (always pivot-disjoint), so that transversals meet them in
    more than one order.  Bodies are always pairwise disjoint.
    """
    flags = dict(flags or {})
    rng = np.random.default_rng(seed)
    if flags.get("unbounded_parallel"):
        return _gen_prism_scene(k, n_per_body, bounding_box, rng, seed, flags)
    if flags.pop("scattered", False):
        return _gen_scattered_scene(k, n_per_body, bounding_box, rng, seed)
    pivot_disjoint = bool(flags.get("pivot_disjoint", False))
    for _attempt in range(200):
        p0 = rng.uniform(-1, 1, size=3) * 0.2 * bounding_box
        w = _random_unit(rng)
        pivot = PluckerLine.from_point_direction(p0, w)
        X = p0 + rng.uniform(-0.2, 0.2) * bounding_box * w
        d = _random_unit(rng)
        # keep the spine well away from the pivot direction
        d = d - 0.8 * d.dot(w) * w
        d /= np.linalg.norm(d)
        sin = float(np.linalg.norm(np.cross(d, w)))
        r = 0.08 * bounding_box
        step = 2.6 * r
        ts = []
        if pivot_disjoint:
            t0 = 1.5 * r / sin
            side = rng.permutation([i for i in range(k)])
            for i in range(k):
                sgn = 1 if (side[i] % 2 == 0) else -1
                ts.append(sgn * (t0 + (i // 2) * step))
        else:
            start = -(k // 2) * step
            ts = [start + i * step for i in range(k)]
            j = int(np.argmin(np.abs(ts)))
            ts = [t - ts[j] for t in ts]
        polys = []
        for t in ts:
            off = rng.normal(size=3) * 0.25 * r
            off -= off.dot(d) * d
            radius = r * rng.uniform(0.8, 1.0)
            polys.append(random_polytope(rng, X + t * d + off, radius, n_per_body))
        scene = Scene(polys, pivot, seed, {"pairwise_disjoint": True, "pivot_disjoint": pivot_disjoint, "unbounded_parallel": False})
        try:
            scene.verify_flags()
        except FlagMismatch:
            continue
        if not pivot_disjoint and all(clip_interval(pivot, P, 0.0) is None for P in polys):
            continue
        try:
            for P in polys:
                separating_planes_line_body(pivot, P)
        except NotSeparable:
            continue
        if audit_general_position(scene, margin=GENERATOR_MARGIN * scene.scale):
            continue
        return scene
    raise PackingFailed("could not place a scene satisfying the requested flags")


def _has_transversal(scene, resolution: int = 48) -> bool:
    from .linespace import sigma_eval_many

    phis = (np.arange(resolution) + 0.5) * (math.pi / resolution)
    for i in range(resolution):
        theta = (i + 0.5) * (2 * math.pi / resolution)
        lo = np.full(resolution, -np.inf)
        hi = np.full(resolution, np.inf)
        for P in scene.polyhedra:
            a, b = sigma_eval_many(P, theta, phis, scene.pivot)
            lo, hi = np.maximum(lo, a), np.minimum(hi, b)
        if np.any(hi > lo):
            return True
    return False


def _gen_scattered_scene(k, n_per_body, bounding_box, rng, seed) -> Scene:
    from .linespace import perpendicular_basis

    for _attempt in range(500):
        p0 = rng.uniform(-1, 1, size=3) * 0.1 * bounding_box
        w = _random_unit(rng)
        pivot = PluckerLine.from_point_direction(p0, w)
        e1, e2 = perpendicular_basis(w)
        r = 0.1 * bounding_box
        # one stack along the pivot: steep lines cross it upward or downward
        a = rng.uniform(0, 2 * math.pi)
        centers = []
        for i in range(k):
            ang = a + rng.uniform(-0.25, 0.25)
            u = math.cos(ang) * e1 + math.sin(ang) * e2
            centers.append(p0 + rng.uniform(1.6, 2.4) * r * u + (i * 2.15 + rng.uniform(-0.05, 0.05)) * r * w)
        polys = [random_polytope(rng, c, r * rng.uniform(0.8, 1.0), n_per_body) for c in centers]
        scene = Scene(polys, pivot, seed, {"pairwise_disjoint": True, "pivot_disjoint": False, "unbounded_parallel": False})
        try:
            scene.verify_flags()
            for P in polys:
                separating_planes_line_body(pivot, P)
        except (FlagMismatch, NotSeparable):
            continue
        if audit_general_position(scene, margin=GENERATOR_MARGIN * scene.scale):
            continue
        if not _has_transversal(scene):
            continue
        return scene
    raise PackingFailed("could not place a scattered scene with a transversal")


def prism(polygon_2d, frame, z0: float, height: float, unbounded: bool = True) -> Polyhedron:
    """Prism over a convex polygon given in a (e1, e2, w) frame, from height z0 upward."""
    e1, e2, w, origin = frame
    base = [origin + x * e1 + y * e2 + z0 * w for x, y in polygon_2d]
    pts = base + [b + height * w for b in base]
    return Polyhedron.from_points(pts, unbounded_dir=w if unbounded else None)


def _gen_prism_scene(k, n_per_body, bounding_box, rng, seed, flags) -> Scene:
    """Prisms unbounded along the pivot whose footprints line up through it.

    Footprints are disjoint polygons strung along a random line through the
    pivot's trace (alternating sides, none containing it), so lines through
    the pivot can stab every prism.
    """
    from .linespace import perpendicular_basis

    m = max(3, n_per_body - 2)
    for _attempt in range(200):
        p0 = rng.uniform(-1, 1, size=3) * 0.1 * bounding_box
        w = _random_unit(rng)
        pivot = PluckerLine.from_point_direction(p0, w)
        e1, e2 = perpendicular_basis(w)
        r = 0.1 * bounding_box
        a = rng.uniform(0, 2 * math.pi)
        u = np.array([math.cos(a), math.sin(a)])
        v = np.array([-u[1], u[0]])
        polys = []
        for i in range(k):
            side = 1.0 if i % 2 == 0 else -1.0
            c = side * (1.5 * r + (i // 2) * 2.2 * r) * u + rng.normal() * 0.15 * r * v
            angs = np.sort(rng.uniform(0, 2 * math.pi, size=m))
            rad = r * rng.uniform(0.6, 0.9)
            poly = [c + rad * np.array([math.cos(t), math.sin(t)]) for t in angs]
            z0 = rng.uniform(-0.3, 0.3) * bounding_box
            try:
                polys.append(prism(poly, (e1, e2, w, p0), z0, 0.2 * bounding_box))
            except (ConvexityViolation, ValueError):
                break
        if len(polys) < k:
            continue
        scene = Scene(polys, pivot, seed, {"pairwise_disjoint": True, "pivot_disjoint": True, "unbounded_parallel": True})
        try:
            scene.verify_flags()
        except FlagMismatch:
            continue
        if audit_general_position(scene, margin=GENERATOR_MARGIN * scene.scale):
            continue
        return scene
    raise PackingFailed("could not place a prism scene")


def _plate(center, normal, width_dir, half_thick, half_width, half_len, axis) -> list:
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            for s3 in (-1, 1):
                pts.append(center + s1 * half_thick * normal + s2 * half_width * width_dir + s3 * half_len * axis)
    return pts


def _segments_cross(p, q, r, s) -> bool:
    def side(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    return side(p, q, r) != side(p, q, s) and side(r, s, p) != side(r, s, q)


def _tilt_bodies(scene: Scene, angle: float, seed: int, retries: int = 20, eps: float = EPS) -> Scene:
    """Random rigid motions scaled to each body: a tilt of about ``angle`` radians
    and a shift of about ``angle / 100`` of the body's horizontal size.

    Unlike :func:`perturb_general_position` the motion does not shrink with the
    body's size, which matters when bodies span several orders of magnitude.
    """
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        polys = []
        for P in scene.polyhedra:
            c = P.vertices.mean(axis=0)
            size = float(np.linalg.norm(P.vertices[:, :2] - c[:2], axis=1).max())
            rot = Rotation.from_rotvec(rng.normal(size=3) * angle).as_matrix()
            t = rng.normal(size=3) * angle * 0.01 * size
            polys.append(Polyhedron((P.vertices - c) @ rot.T + c + t, P.facets, eps=P.eps))
        out = Scene(polys, scene.pivot, scene.seed, dict(scene.flags))
        if audit_general_position(out, eps):
            continue
        try:
            out.verify_flags(eps)
        except FlagMismatch:
            continue
        return out
    raise AuditFailedAfterRetries(f"general position not reached after {retries} perturbations")


def gen_lower_bound_scene(pairs: int, drum_facets: int, seed: int = 0, perturb: float = 3e-3, gap: float | None = None) -> Scene:
    """Plates in point-symmetric pairs around the pivot plus a drum prism.

    The pivot is the z-axis.  Pair ``i`` consists of two vertical plates at
    distance ``d_i`` on either side of the pivot, much wider than the gap
    ``2 d_i`` between them, so a line through the pivot misses the pair only
    for azimuths in a short arc around the plates' direction.  These arcs sit
    at ``pi i / pairs``; the transversals of all plates therefore split into
    ``pairs`` azimuth ranges, each with its own order of the plates.  Wide
    plates of different pairs would cross, so pairs are nested: each pair is
    pushed outward until it clears the previous ones.

    The drum is a prism with ``drum_facets`` long side facets, axis along x,
    hanging just above the plates and pierced by the pivot.  Its cross
    section is a shallow polygonal arc whose facet planes cross the pivot
    inside the plates' height band, so each facet yields lines lying in its
    plane that thread every plate; these meet the walls of every azimuth
    range and give about ``2 * pairs`` extremal lines per facet.

    ``gap`` is the ratio of pair separation to plate width (default
    ``cot beta`` with arcs covering 80% of the spacing); it must be below
    ``tan(pi / (2 pairs))``.  A seeded tilt of about ``perturb`` radians per
    body restores general position.
    """
    if pairs < 1 or drum_facets < 3:
        raise ValueError("pairs >= 1 and drum_facets >= 3 are required")
    spacing = math.pi / pairs
    if gap is None:
        # a single pair uses the plate shape of two pairs; narrower plates leave no room for the drum
        beta = math.pi / 2 - 0.4 * math.pi / max(pairs, 2)
    else:
        if not 0 < gap < math.tan(spacing / 2):
            raise ValueError(f"gap must lie in (0, {math.tan(spacing / 2):.4g}) for {pairs} pairs")
        beta = math.atan(1.0 / gap)
    w = np.array([0.0, 0.0, 1.0])
    pivot = PluckerLine(w, np.zeros(3))
    # nested plate pairs, checked for crossings in the xy-projection with 10% slack
    specs, chords = [], []
    for i in range(pairs):
        a = spacing * i - math.pi / 2
        n2 = np.array([math.cos(a), math.sin(a)])
        t2 = np.array([-n2[1], n2[0]])
        d = specs[-1][1] if specs else 1.0
        while True:
            half = 1.1 * d * math.tan(beta)
            segs = [(s * d * n2 - half * t2, s * d * n2 + half * t2) for s in (1, -1)]
            if not any(_segments_cross(*u, *v) for u in segs for v in chords):
                break
            d *= 1.02
        chords += segs
        specs.append((a, d))
    reach = max(d / math.cos(beta) for _, d in specs)
    half_len = 0.5 * reach
    polys = []
    for a, d in specs:
        normal = np.array([math.cos(a), math.sin(a), 0.0])
        width_dir = np.array([-math.sin(a), math.cos(a), 0.0])
        for sgn in (1, -1):
            polys.append(Polyhedron.from_points(_plate(sgn * d * normal, normal, width_dir, 0.01 * d, d * math.tan(beta), half_len, w)))
    # drum cross-section: arc of radius R0 whose lowest point is just above the plates
    R0 = 3.0 * reach
    zc = half_len + 0.02 * reach + R0
    us = np.linspace(0.0, 1.2, 4001)
    zf = zc - R0 / np.cos(us)
    ok = np.abs(zf) + 0.5 * reach * np.tan(us) <= half_len
    u_lo, u_hi = float(us[ok].min()), float(us[ok].max())
    arc = [(R0 * math.sin(u), zc - R0 * math.cos(u)) for u in np.linspace(u_lo, u_hi, (drum_facets - 1) // 2 + 1)]
    ring = [(-y, z) for y, z in arc[::-1]] + arc
    if len(ring) < drum_facets:
        ring.append((0.0, zc - R0 * math.cos(u_hi) + R0 * math.sin(u_hi)))
    while len(ring) > drum_facets:
        ring.pop(len(ring) // 2)
    L = 4.0 * reach
    polys.append(Polyhedron.from_points([np.array([sx * L, y, z]) for sx in (-1, 1) for y, z in ring]))
    scene = Scene(polys, pivot, seed, {"pairwise_disjoint": True, "pivot_disjoint": False, "unbounded_parallel": False})
    scene.verify_flags()
    if perturb > 0:
        scene = _tilt_bodies(scene, perturb, seed)
    return scene


def gen_paraboloid_scene(k: int, eps: float = 0.05, seed: int = 0, half_length: float | None = None, thickness: float | None = None) -> Scene:
    """Thin slabs around the two rulings families of ``z = x y``.

    Family one: lines ``x = i, z = i y``; family two: ``y = j, z = j x``
    lifted by ``eps``; ``i, j = 1 .. k/2``.  The pivot is the vertical line
    through ``(-1, -1)``, which misses every slab.

    Slabs reach well past every crossing (``half_length`` defaults to
    ``5 (k/2 + 1)``) and are thinner than the closest approach
    ``eps / sqrt(2 (k/2)^2 + 1)`` of two lines from different families.
    """
    if k % 2 or k < 2:
        raise ValueError("k must be even and positive")
    if eps <= 0:
        raise ValueError("eps must be positive")
    half = k // 2
    gap = eps / math.sqrt(2 * half * half + 1)
    th = min(0.3 * gap, 0.02) if thickness is None else thickness
    half_length = 5.0 * (half + 1) if half_length is None else half_length
    polys = []
    for i in range(1, half + 1):
        p = np.array([i, 0.0, 0.0])
        d = np.array([0.0, 1.0, float(i)]) / math.hypot(1.0, i)
        polys.append(_slab(p, d, th, half_length))
    for j in range(1, half + 1):
        p = np.array([0.0, j, eps])
        d = np.array([1.0, 0.0, float(j)]) / math.hypot(1.0, j)
        polys.append(_slab(p, d, th, half_length))
    pivot = PluckerLine.from_point_direction([-1.0, -1.0, 0.0], [0.0, 0.0, 1.0])
    scene = Scene(polys, pivot, seed, {"pairwise_disjoint": True, "pivot_disjoint": False, "unbounded_parallel": False})
    return scene


def _slab(p, d, th, half_length) -> Polyhedron:
    a = np.cross(d, [0.0, 0.0, 1.0])
    if np.linalg.norm(a) < 1e-9:
        a = np.array([1.0, 0.0, 0.0])
    a /= np.linalg.norm(a)
    b = np.cross(d, a)
    pts = [p + s1 * half_length * d + s2 * th * a + s3 * th * b for s1 in (-1, 1) for s2 in (-1, 1) for s3 in (-1, 1)]
    return Polyhedron.from_points(pts)


def separation_richness(scene: Scene, tol: float = 1e-9) -> list[tuple[int, int, int, str]]:
    """Cross pairs with a separating plane that misses some third slab.

    For a paraboloid scene with ``k`` slabs (first half one family), every
    plane separating a slab of one family from a slab of the other should
    meet all remaining slabs.  Returns the violations ``(i, j, other, side)``
    found by linear feasibility over slab vertices.
    """
    half = scene.k // 2
    bad = []
    for i in range(half):
        for j in range(half, scene.k):
            for o in range(scene.k):
                if o in (i, j):
                    continue
                for side in ("with_first", "with_second"):
                    if _separable_three(scene.polyhedra[i], scene.polyhedra[j], scene.polyhedra[o], side):
                        bad.append((i, j, o, side))
    return bad


def _separable_three(A: Polyhedron, B: Polyhedron, C: Polyhedron, side: str) -> bool:
    """Is there a plane with A and C on one side (or B and C) and the other body strictly opposite."""
    neg = [A.vertices, C.vertices] if side == "with_first" else [A.vertices]
    pos = [B.vertices] if side == "with_first" else [B.vertices, C.vertices]
    Vn = np.vstack(neg)
    Vp = np.vstack(pos)
    rows = np.vstack([np.hstack([Vn, -np.ones((len(Vn), 1)), np.ones((len(Vn), 1))]),
                      np.hstack([-Vp, np.ones((len(Vp), 1)), np.ones((len(Vp), 1))])])
    res = linprog([0, 0, 0, 0, -1.0], A_ub=rows, b_ub=np.zeros(len(rows)),
                  bounds=[(-1, 1)] * 3 + [(None, None), (None, 1.0)], method="highs")
    return res.status == 0 and res.x[4] > 1e-9
