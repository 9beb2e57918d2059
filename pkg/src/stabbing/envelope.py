"""Envelopes and sandwich regions of partially defined x-monotone arcs.

Arcs are functions of one parameter (an angle in the callers) defined on a
closed interval.  Envelopes are built by divide and conquer; every merge
needs the crossings of two arcs, which callers can supply analytically
through a ``crossings(a, b, lo, hi)`` hook, with a sampled bisection search
as the fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable

import numpy as np
from scipy.optimize import brentq

from .geometry import GeometryError

CrossingFn = Callable[["MonotoneArc", "MonotoneArc", float, float], "list[float] | None"]


class CrossingBoundViolated(GeometryError):
    code = "crossing-bound-violated"


class DegenerateOverlap(GeometryError):
    code = "degenerate-overlap"


@dataclass(eq=False)
class MonotoneArc:
    """Graph of ``fn`` over ``[lo, hi]``; ``fn`` must accept numpy arrays."""

    label: Hashable
    lo: float
    hi: float
    fn: Callable[[np.ndarray], np.ndarray]
    s: int = 2
    data: object = None

    def __call__(self, x):
        return self.fn(x)

    def value(self, x: float) -> float:
        return float(np.asarray(self.fn(np.array([x], float)))[0])


def constant_arc(label, value: float, lo: float, hi: float) -> MonotoneArc:
    return MonotoneArc(label, lo, hi, lambda x, v=value: np.full(np.shape(x), v, float), s=1)


def numeric_crossings(a: MonotoneArc, b: MonotoneArc, lo: float, hi: float, samples: int = 48, tol: float = 1e-12):
    """Sign changes of ``a - b`` on ``[lo, hi]`` refined by Brent's method."""
    if hi <= lo:
        return []
    xs = np.linspace(lo, hi, samples + 1)
    d = np.asarray(a(xs), float) - np.asarray(b(xs), float)
    scale = max(1.0, float(np.nanmax(np.abs(np.asarray(a(xs), float)))))
    if np.all(np.abs(d) <= 1e-10 * scale):
        raise DegenerateOverlap(f"arcs {a.label} and {b.label} coincide")
    out = []
    for i in range(samples):
        if not (np.isfinite(d[i]) and np.isfinite(d[i + 1])):
            continue
        if d[i] == 0.0 and i > 0:
            out.append(float(xs[i]))
        elif d[i] * d[i + 1] < 0:
            f = lambda x: a.value(x) - b.value(x)
            out.append(float(brentq(f, xs[i], xs[i + 1], xtol=tol)))
    return out


def intersection_points(a: MonotoneArc, b: MonotoneArc, crossings: CrossingFn | None = None):
    """Crossings of two arcs on their common interval (at most ``max(a.s, b.s)``)."""
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if hi <= lo:
        return []
    pts = None if crossings is None else crossings(a, b, lo, hi)
    if pts is None:
        pts = numeric_crossings(a, b, lo, hi)
    pts = sorted(p for p in pts if lo < p < hi)
    if len(pts) > max(a.s, b.s):
        raise CrossingBoundViolated(f"arcs {a.label} and {b.label} cross {len(pts)} times")
    return pts


# envelopes ---------------------------------------------------------------------


@dataclass
class Envelope:
    """Pointwise max (``sense=+1``) or min (``sense=-1``) of a set of arcs.

    ``pieces`` is a sorted list of ``(lo, hi, arc)``; gaps mean no arc is
    defined there.
    """

    pieces: list[tuple[float, float, MonotoneArc]]
    sense: int

    def arc_at(self, x: float):
        for lo, hi, a in self.pieces:
            if lo <= x <= hi:
                return a
        return None

    def value(self, x):
        x = np.atleast_1d(np.asarray(x, float))
        out = np.full(x.shape, -np.inf if self.sense > 0 else np.inf)
        for lo, hi, a in self.pieces:
            m = (x >= lo) & (x <= hi)
            if np.any(m):
                out[m] = a(x[m])
        return out

    def breakpoints(self):
        """``(x, value, left label, right label)`` where the envelope switches arcs."""
        out = []
        for (l1, h1, a1), (l2, h2, a2) in zip(self.pieces, self.pieces[1:]):
            if h1 == l2 and a1.label != a2.label:
                out.append((h1, a1.value(h1), a1.label, a2.label))
        return out


def _coalesce(pieces):
    out = []
    for lo, hi, a in pieces:
        if hi <= lo:
            continue
        if out and out[-1][2] is a and out[-1][1] == lo:
            out[-1] = (out[-1][0], hi, a)
        else:
            out.append((lo, hi, a))
    return out


def _merge(e1: Envelope, e2: Envelope, sense: int, crossings: CrossingFn | None) -> Envelope:
    cuts = sorted({x for lo, hi, _ in e1.pieces + e2.pieces for x in (lo, hi)})
    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        a, b = e1.arc_at(mid), e2.arc_at(mid)
        if a is None and b is None:
            continue
        if a is None or b is None:
            pieces.append((lo, hi, a or b))
            continue
        xs = [lo] + [p for p in _cross(a, b, lo, hi, crossings)] + [hi]
        for x0, x1 in zip(xs, xs[1:]):
            m = 0.5 * (x0 + x1)
            va, vb = a.value(m), b.value(m)
            win = a if (va >= vb) == (sense > 0) else b
            pieces.append((x0, x1, win))
    return Envelope(_coalesce(pieces), sense)


def _cross(a, b, lo, hi, crossings):
    if a is b:
        return []
    pts = None if crossings is None else crossings(a, b, lo, hi)
    if pts is None:
        pts = numeric_crossings(a, b, lo, hi)
    return sorted(p for p in pts if lo < p < hi)


def _envelope(arcs, sense, crossings) -> Envelope:
    arcs = list(arcs)
    if not arcs:
        return Envelope([], sense)
    if len(arcs) == 1:
        a = arcs[0]
        return Envelope([(a.lo, a.hi, a)] if a.hi > a.lo else [], sense)
    mid = len(arcs) // 2
    return _merge(_envelope(arcs[:mid], sense, crossings), _envelope(arcs[mid:], sense, crossings), sense, crossings)


def upper_envelope(arcs, crossings: CrossingFn | None = None) -> Envelope:
    return _envelope(arcs, +1, crossings)


def lower_envelope(arcs, crossings: CrossingFn | None = None) -> Envelope:
    return _envelope(arcs, -1, crossings)


# regions -------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionVertex:
    x: float
    value: float
    labels: tuple
    kind: str  # "lower", "upper" (envelope breakpoints), "cross" (tips), "end"


@dataclass
class Slab:
    lo: float
    hi: float
    lower: MonotoneArc | None
    upper: MonotoneArc | None

    def bounds(self, x):
        lv = -np.inf if self.lower is None else self.lower.value(x)
        uv = np.inf if self.upper is None else self.upper.value(x)
        return lv, uv


@dataclass
class Region2D:
    """Union of slabs ``{lo <= x <= hi, lower(x) <= y <= upper(x)}``."""

    slabs: list[Slab] = field(default_factory=list)
    tol: float = 1e-9

    @property
    def empty(self) -> bool:
        return not self.slabs

    def contains(self, x: float, y: float, tol: float = 0.0) -> bool:
        for s in self.slabs:
            if s.lo <= x <= s.hi:
                lv, uv = s.bounds(x)
                if lv - tol <= y <= uv + tol:
                    return True
        return False

    def components(self) -> int:
        n = 0
        prev = None
        for s in self.slabs:
            if prev is None or prev.hi != s.lo:
                n += 1
            prev = s
        return n

    @property
    def vertices(self) -> list[RegionVertex]:
        out: list[RegionVertex] = []
        prev = None
        for i, s in enumerate(self.slabs):
            nxt = self.slabs[i + 1] if i + 1 < len(self.slabs) else None
            if prev is None or prev.hi != s.lo:
                out.extend(self._end(s, s.lo))
            else:
                if _lab(prev.lower) != _lab(s.lower) and s.lower is not None and prev.lower is not None:
                    out.append(RegionVertex(s.lo, s.lower.value(s.lo), (_lab(prev.lower), _lab(s.lower)), "lower"))
                if _lab(prev.upper) != _lab(s.upper) and s.upper is not None and prev.upper is not None:
                    out.append(RegionVertex(s.lo, s.upper.value(s.lo), (_lab(prev.upper), _lab(s.upper)), "upper"))
            if nxt is None or nxt.lo != s.hi:
                out.extend(self._end(s, s.hi))
            prev = s
        return out

    def _end(self, s: Slab, x: float):
        lv, uv = s.bounds(x)
        if np.isfinite(lv) and np.isfinite(uv) and abs(uv - lv) <= self.tol * max(1.0, abs(lv)) * 1e3:
            return [RegionVertex(x, 0.5 * (lv + uv), (_lab(s.lower), _lab(s.upper)), "cross")]
        out = []
        if np.isfinite(lv):
            out.append(RegionVertex(x, lv, (_lab(s.lower), None), "end"))
        if np.isfinite(uv):
            out.append(RegionVertex(x, uv, (None, _lab(s.upper)), "end"))
        return out

    def sample_boundary(self, n: int = 32):
        """Polyline samples ``(xs, lower, upper)`` per slab, for plotting."""
        out = []
        for s in self.slabs:
            xs = np.linspace(s.lo, s.hi, n)
            lv = np.full(n, np.nan) if s.lower is None else np.asarray(s.lower(xs), float)
            uv = np.full(n, np.nan) if s.upper is None else np.asarray(s.upper(xs), float)
            out.append((xs, lv, uv))
        return out


def _lab(a):
    return None if a is None else a.label


def _slabs_between(L: Envelope, U: Envelope, lo: float, hi: float, crossings, out: list[Slab]):
    cuts = sorted({lo, hi} | {x for a, b, _ in L.pieces + U.pieces for x in (a, b) if lo < x < hi})
    for c0, c1 in zip(cuts, cuts[1:]):
        if c1 <= c0:
            continue
        mid = 0.5 * (c0 + c1)
        la, ua = L.arc_at(mid), U.arc_at(mid)
        xs = [c0, c1]
        if la is not None and ua is not None:
            xs = [c0] + _cross(la, ua, c0, c1, crossings) + [c1]
        for x0, x1 in zip(xs, xs[1:]):
            m = 0.5 * (x0 + x1)
            lv = -np.inf if la is None else la.value(m)
            uv = np.inf if ua is None else ua.value(m)
            if lv < uv:
                if out and out[-1].hi == x0 and out[-1].lower is la and out[-1].upper is ua:
                    out[-1].hi = x1
                else:
                    out.append(Slab(x0, x1, la, ua))


def sandwich(lower_arcs, upper_arcs, crossings: CrossingFn | None = None, domain=None, tol: float = 1e-9) -> Region2D:
    """Region above every lower arc and below every upper arc.

    Without ``domain`` the region lives where at least one arc of each
    family is defined; a missing family means no bound on that side.
    """
    lower_arcs, upper_arcs = list(lower_arcs), list(upper_arcs)
    L = upper_envelope(lower_arcs, crossings)
    U = lower_envelope(upper_arcs, crossings)
    if domain is None:
        spans = [(a.lo, a.hi) for a in lower_arcs + upper_arcs]
        if not spans:
            return Region2D([], tol)
        domain = (min(s[0] for s in spans), max(s[1] for s in spans))
    out: list[Slab] = []
    _slabs_between(L, U, domain[0], domain[1], crossings, out)
    return Region2D(out, tol)


def intersect_regions(a: Region2D, b: Region2D, crossings: CrossingFn | None = None) -> Region2D:
    """Pointwise conjunction of two slab regions over the same parameter strip."""
    out: list[Slab] = []
    i = j = 0
    A, B = a.slabs, b.slabs
    while i < len(A) and j < len(B):
        lo, hi = max(A[i].lo, B[j].lo), min(A[i].hi, B[j].hi)
        if hi > lo:
            lows = [s for s in (A[i].lower, B[j].lower) if s is not None]
            ups = [s for s in (A[i].upper, B[j].upper) if s is not None]
            L = _clip_env(upper_envelope(lows, crossings), lo, hi)
            U = _clip_env(lower_envelope(ups, crossings), lo, hi)
            _slabs_between(L, U, lo, hi, crossings, out)
        if A[i].hi <= B[j].hi:
            i += 1
        else:
            j += 1
    return Region2D(out, min(a.tol, b.tol))


def _clip_env(env: Envelope, lo: float, hi: float) -> Envelope:
    pieces = [(max(l, lo), min(h, hi), arc) for l, h, arc in env.pieces if min(h, hi) > max(l, lo)]
    return Envelope(pieces, env.sense)


def full_strip(lower: MonotoneArc, upper: MonotoneArc) -> Region2D:
    lo, hi = max(lower.lo, upper.lo), min(lower.hi, upper.hi)
    return sandwich([lower], [upper], domain=(lo, hi))
