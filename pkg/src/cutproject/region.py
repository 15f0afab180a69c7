"""Exact geometry of internal-space regions.

Two representations share one interface: Region1D is a sorted union of
disjoint closed intervals, Region2D a union of interior-disjoint convex
polygons (counterclockwise vertex tuples).  All Boolean operations are
regularized: the result is the closure of its interior, so zero-measure
components (shared endpoints, shared edges, slivers) are discarded at every
construction site.  Coordinates are FieldScalars, so every predicate is
exact.

Point queries (``contains``/``classify``) carry a certified float prescreen:
a cached float sketch of the region decides points whose distance from the
boundary exceeds a rigorous error bound, and only the remaining thin band
falls back to exact field arithmetic.  Results are identical to the fully
exact computation; only the speed differs.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .field import FieldScalar, SingularMatrixError

__all__ = [
    "CutterLimitError",
    "Region1D",
    "Region2D",
    "SignCell",
    "reg_bool",
    "subtract",
    "linear_image",
    "translate",
    "measure",
    "minkowski",
    "arrangement_cells",
    "congruent_by_translation",
    "region_eq",
    "boundary_segments",
    "region_to_json",
    "region_from_json",
]


class CutterLimitError(ValueError):
    """Too many cutters passed to arrangement_cells."""


def _zero():
    return FieldScalar.rational(0, 2)


# ---------------------------------------------------------------------------
# certified float prescreening
#
# Exact coordinates are converted through 48-bit outward rational brackets,
# so every cached float is within 2^-48 (plus one rounding) of the true
# value.  Query margins are compared against a tolerance that dominates the
# conversion and dot-product rounding error by several orders of magnitude;
# only queries inside that tolerance band take the exact slow path.

_FBITS = 48


def _fval(x):
    """Float approximation of an exact coordinate, off by at most ~2^-48."""
    if isinstance(x, FieldScalar):
        return float(x.lower_bound(_FBITS))
    return float(x)


# ---------------------------------------------------------------------------
# 1D regions


def _merge_pairs(pairs):
    cleaned = []
    for lo, hi in pairs:
        if lo > hi:
            lo, hi = hi, lo
        if lo < hi:
            cleaned.append((lo, hi))
    cleaned.sort()
    merged = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


class Region1D:
    """A finite union of closed intervals with exact endpoints."""

    __slots__ = ("intervals", "_fdata")
    dim = 1

    def __init__(self, intervals=()):
        object.__setattr__(self, "intervals", tuple(intervals))
        object.__setattr__(self, "_fdata", None)

    def __setattr__(self, name, value):
        raise AttributeError("Region1D is immutable")

    @classmethod
    def from_pairs(cls, pairs):
        """Normalize arbitrary (lo, hi) pairs: swap, drop points, merge."""
        return cls(_merge_pairs(pairs))

    @property
    def is_empty(self):
        return not self.intervals

    def _float_margin(self, xf, hw=0.0):
        """Certified screen: (margin, tol), decisive when |margin| > tol.

        margin > tol certifies the point interior, margin < -tol certifies
        it outside; ``hw`` widens the tolerance for a point known only to
        within an infinity-norm halfwidth.
        """
        fd = self._fdata
        if fd is None:
            pairs = tuple(
                (_fval(lo), _fval(hi)) for lo, hi in self.intervals
            )
            scale = max(
                [1.0] + [abs(v) for pair in pairs for v in pair]
            )
            fd = (pairs, scale)
            object.__setattr__(self, "_fdata", fd)
        pairs, scale = fd
        m = float("-inf")
        for lo, hi in pairs:
            d = min(xf - lo, hi - xf)
            if d > m:
                m = d
        return m, 1e-9 * (1.0 + abs(xf) + scale) + hw

    def contains(self, p):
        x = p[0] if isinstance(p, tuple) else p
        m, tol = self._float_margin(_fval(x))
        if m > tol:
            return True
        if m < -tol:
            return False
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def classify(self, p):
        x = p[0] if isinstance(p, tuple) else p
        m, tol = self._float_margin(_fval(x))
        if m > tol:
            return "interior"
        if m < -tol:
            return "outside"
        for lo, hi in self.intervals:
            if lo < x < hi:
                return "interior"
            if x == lo or x == hi:
                return "boundary"
        return "outside"

    def on_boundary(self, p):
        return self.classify(p) == "boundary"

    def __repr__(self):
        return f"Region1D({len(self.intervals)} intervals)"


def _and_1d(x, y):
    out = []
    for alo, ahi in x.intervals:
        for blo, bhi in y.intervals:
            lo = alo if alo > blo else blo
            hi = ahi if ahi < bhi else bhi
            if lo < hi:
                out.append((lo, hi))
    return Region1D.from_pairs(out)


def _subtract_1d(x, y):
    out = []
    for lo, hi in x.intervals:
        chunks = [(lo, hi)]
        for blo, bhi in y.intervals:
            nxt = []
            for clo, chi in chunks:
                if bhi <= clo or blo >= chi:
                    nxt.append((clo, chi))
                    continue
                if blo > clo:
                    nxt.append((clo, blo))
                if bhi < chi:
                    nxt.append((bhi, chi))
            chunks = nxt
        out.extend(chunks)
    return Region1D.from_pairs(out)


# ---------------------------------------------------------------------------
# convex polygon primitives


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _convex_hull(points):
    """CCW hull starting at the lexicographic minimum, or None if degenerate.

    Collinear and duplicate points are dropped, so the output doubles as the
    canonical form of a convex polygon.
    """
    pts = sorted(set(points))
    if len(pts) < 3:
        return None
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p).sign() <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p).sign() <= 0:
            upper.pop()
        upper.append(p)
    hull = tuple(lower[:-1] + upper[:-1])
    return hull if len(hull) >= 3 else None


def _poly_edges(pts):
    """Half-planes (a, c) with interior = {x : a . x <= c}, for CCW pts."""
    k = len(pts)
    for i in range(k):
        v, w = pts[i], pts[(i + 1) % k]
        a = (w[1] - v[1], v[0] - w[0])
        yield a, a[0] * v[0] + a[1] * v[1]


def _clip(pts, a, c):
    """Clip a convex polygon to the half-plane a . x <= c; None if empty."""
    out = []
    vals = [a[0] * p[0] + a[1] * p[1] - c for p in pts]
    signs = [v.sign() for v in vals]
    k = len(pts)
    for i in range(k):
        j = (i + 1) % k
        if signs[i] <= 0:
            out.append(pts[i])
        if signs[i] * signs[j] < 0:
            t = vals[i] / (vals[i] - vals[j])
            pi, pj = pts[i], pts[j]
            out.append((pi[0] + t * (pj[0] - pi[0]), pi[1] + t * (pj[1] - pi[1])))
    return _convex_hull(out) if out else None


def _poly_intersect(p, q):
    cur = p
    for a, c in _poly_edges(q):
        cur = _clip(cur, a, c)
        if cur is None:
            return None
    return cur


def _poly_subtract(p, q):
    """Convex pieces covering the closure of p minus q (interior-disjoint)."""
    pieces = []
    rem = p
    for a, c in _poly_edges(q):
        outside = _clip(rem, (-a[0], -a[1]), -c)
        if outside is not None:
            pieces.append(outside)
        rem = _clip(rem, a, c)
        if rem is None:
            break
    return pieces


def _poly_area2(pts):
    acc = _zero()
    for i in range(2, len(pts)):
        acc = acc + _cross(pts[0], pts[i - 1], pts[i])
    return acc


def _point_in_poly(pts, p):
    return all((a[0] * p[0] + a[1] * p[1] - c).sign() <= 0 for a, c in _poly_edges(pts))


class Region2D:
    """A finite union of interior-disjoint convex polygons."""

    __slots__ = ("polygons", "_boundary", "_fdata")
    dim = 2

    def __init__(self, polygons=()):
        object.__setattr__(self, "polygons", tuple(polygons))
        object.__setattr__(self, "_boundary", None)
        object.__setattr__(self, "_fdata", None)

    def __setattr__(self, name, value):
        raise AttributeError("Region2D is immutable")

    @classmethod
    def from_convex(cls, points):
        hull = _convex_hull(points)
        return cls((hull,) if hull else ())

    @classmethod
    def rect(cls, lo, hi):
        return cls.from_convex(
            [lo, (hi[0], lo[1]), hi, (lo[0], hi[1])]
        )

    @property
    def is_empty(self):
        return not self.polygons

    def _float_margin(self, xf, hw=0.0):
        """Certified screen: (margin, tol), decisive when |margin| > tol.

        The margin of a point against one convex piece is the minimum of
        c - a . x over its half-planes (positive strictly inside); the
        region margin is the maximum over pieces.  That sign pattern is only
        trusted beyond a tolerance dominating all float error, including an
        optional infinity-norm halfwidth ``hw`` of the query point.
        """
        fd = self._fdata
        if fd is None:
            polys = []
            scale = 1.0
            for pts in self.polygons:
                edges = []
                for a, c in _poly_edges(pts):
                    a0, a1, cf = _fval(a[0]), _fval(a[1]), _fval(c)
                    edges.append((a0, a1, cf))
                    scale = max(scale, abs(a0) + abs(a1) + abs(cf))
                polys.append(tuple(edges))
            fd = (tuple(polys), scale)
            object.__setattr__(self, "_fdata", fd)
        polys, scale = fd
        x0, x1 = xf
        m = float("-inf")
        for edges in polys:
            d = float("inf")
            for a0, a1, cf in edges:
                v = cf - a0 * x0 - a1 * x1
                if v < d:
                    d = v
            if d > m:
                m = d
        span = abs(x0) + abs(x1)
        return m, 1e-9 * (1.0 + span + scale + scale * span) + scale * hw

    def contains(self, p):
        m, tol = self._float_margin((_fval(p[0]), _fval(p[1])))
        if m > tol:
            return True
        if m < -tol:
            return False
        return any(_point_in_poly(pts, p) for pts in self.polygons)

    def classify(self, p):
        m, tol = self._float_margin((_fval(p[0]), _fval(p[1])))
        if m > tol:
            return "interior"
        if m < -tol:
            return "outside"
        if not any(_point_in_poly(pts, p) for pts in self.polygons):
            return "outside"
        for a, b in boundary_segments(self):
            if _on_segment(a, b, p):
                return "boundary"
        return "interior"

    def on_boundary(self, p):
        return self.classify(p) == "boundary"

    def __repr__(self):
        return f"Region2D({len(self.polygons)} polygons)"


def _on_segment(a, b, p):
    if _cross(a, b, p).sign() != 0:
        return False
    d = (b[0] - a[0], b[1] - a[1])
    t = d[0] * (p[0] - a[0]) + d[1] * (p[1] - a[1])
    return t.sign() >= 0 and t <= d[0] * d[0] + d[1] * d[1]


# ---------------------------------------------------------------------------
# shared operations


def _check_dims(x, y):
    if x.dim != y.dim:
        raise ValueError("regions have different dimensions")


def _box_to_region(dim, box):
    if isinstance(box, (Region1D, Region2D)):
        return box
    lo, hi = box
    if dim == 1:
        return Region1D.from_pairs([(lo, hi)])
    return Region2D.rect(lo, hi)


def reg_bool(op, x, y):
    """Regularized Boolean operation: op in {"and", "or", "not"}.

    For "not", y is the bounding box (a region, or a (lo, hi) pair) within
    which the complement is taken.
    """
    if op == "not":
        return subtract(_box_to_region(x.dim, y), x)
    _check_dims(x, y)
    if op == "and":
        if x.dim == 1:
            return _and_1d(x, y)
        pieces = []
        for p in x.polygons:
            for q in y.polygons:
                hit = _poly_intersect(p, q)
                if hit is not None:
                    pieces.append(hit)
        return Region2D(pieces)
    if op == "or":
        if x.dim == 1:
            return Region1D.from_pairs(list(x.intervals) + list(y.intervals))
        return Region2D(x.polygons + subtract(y, x).polygons)
    raise ValueError(f"unknown operation {op!r}")


def subtract(x, y):
    """Regularized difference: closure of x minus y."""
    _check_dims(x, y)
    if x.dim == 1:
        return _subtract_1d(x, y)
    pieces = list(x.polygons)
    for q in y.polygons:
        pieces = [part for p in pieces for part in _poly_subtract(p, q)]
    return Region2D(pieces)


def measure(x):
    """Exact total length (1D) or area (2D)."""
    if x.dim == 1:
        acc = _zero()
        for lo, hi in x.intervals:
            acc = acc + (hi - lo)
        return acc
    acc = _zero()
    for pts in x.polygons:
        acc = acc + _poly_area2(pts)
    return acc / 2


def linear_image(x, t):
    """Exact image of a region under an invertible linear map."""
    if x.dim == 1:
        scale = t[0][0] if isinstance(t, tuple) else t
        if scale.is_zero():
            raise SingularMatrixError("scale factor is zero")
        return Region1D.from_pairs(
            [(scale * lo, scale * hi) for lo, hi in x.intervals]
        )
    (a, b), (c, d) = t
    if (a * d - b * c).is_zero():
        raise SingularMatrixError("linear map is singular")
    out = []
    for pts in x.polygons:
        mapped = [(a * px + b * py, c * px + d * py) for px, py in pts]
        hull = _convex_hull(mapped)
        if hull is not None:
            out.append(hull)
    return Region2D(out)


def translate(x, v):
    """Translate a region by an exact vector (always given as a tuple)."""
    if x.dim == 1:
        s = v[0] if isinstance(v, tuple) else v
        return Region1D(tuple((lo + s, hi + s) for lo, hi in x.intervals))
    sx, sy = v
    return Region2D(
        tuple(
            _rotate_to_min(tuple((px + sx, py + sy) for px, py in pts))
            for pts in x.polygons
        )
    )


def _rotate_to_min(pts):
    i = min(range(len(pts)), key=lambda j: pts[j])
    return pts[i:] + pts[:i]


def minkowski(x, y):
    """Minkowski sum of two regions of equal dimension."""
    _check_dims(x, y)
    if x.dim == 1:
        return Region1D.from_pairs(
            [
                (alo + blo, ahi + bhi)
                for alo, ahi in x.intervals
                for blo, bhi in y.intervals
            ]
        )
    out = Region2D(())
    for p in x.polygons:
        for q in y.polygons:
            s = Region2D.from_convex([(a[0] + b[0], a[1] + b[1]) for a in p for b in q])
            out = reg_bool("or", out, s)
    return out


@dataclass(frozen=True)
class SignCell:
    """One cell of an arrangement: a region plus an in/out sign per cutter."""

    region: object
    signs: tuple


def arrangement_cells(base, cutters, max_cutters=64):
    """Split base by each cutter's boundary into definite-sign cells.

    Cells are interior-disjoint, cover base exactly, and each carries one
    bool per cutter (True = inside).  Cell count can grow exponentially, so
    the number of cutters is capped.
    """
    if len(cutters) > max_cutters:
        raise CutterLimitError(
            f"{len(cutters)} cutters exceed the limit of {max_cutters}"
        )
    cells = [(base, ())]
    for cutter in cutters:
        nxt = []
        for region, signs in cells:
            inside = reg_bool("and", region, cutter)
            outside = subtract(region, cutter)
            if not inside.is_empty:
                nxt.append((inside, signs + (True,)))
            if not outside.is_empty:
                nxt.append((outside, signs + (False,)))
        cells = nxt
    return [SignCell(region, signs) for region, signs in cells if not region.is_empty]


def region_eq(x, y):
    """Exact set equality (independent of the internal decomposition)."""
    _check_dims(x, y)
    if x.dim == 1:
        return x.intervals == y.intervals
    return subtract(x, y).is_empty and subtract(y, x).is_empty


def _lex_min_point(x):
    if x.dim == 1:
        return (x.intervals[0][0],)
    return min(p for pts in x.polygons for p in pts)


def congruent_by_translation(x, y):
    """The unique shift s with x = y + s, or None.

    Compares the underlying sets, so differing convex decompositions of the
    same set are recognized as congruent.
    """
    _check_dims(x, y)
    if x.is_empty or y.is_empty:
        return None
    s = tuple(a - b for a, b in zip(_lex_min_point(x), _lex_min_point(y)))
    return s if region_eq(x, translate(y, s)) else None


# ---------------------------------------------------------------------------
# boundary structure


def _line_key(v, w):
    """Canonical (normal, offset, direction) for the line through v, w."""
    d = (w[0] - v[0], w[1] - v[1])
    n = (d[1], -d[0])
    lead = n[0] if not n[0].is_zero() else n[1]
    n = (n[0] / lead, n[1] / lead)
    c = n[0] * v[0] + n[1] * v[1]
    u = (-n[1], n[0])
    return (n, c), u


def boundary_segments(x):
    """Maximal-ish segments of the true boundary of a 2D region.

    Edges shared by two pieces cancel (opposite orientations along the same
    line), so interior seams between convex pieces do not appear.  Cached on
    the region.
    """
    if x._boundary is not None:
        return x._boundary
    lines = defaultdict(list)
    for pts in x.polygons:
        k = len(pts)
        for i in range(k):
            v, w = pts[i], pts[(i + 1) % k]
            key, u = _line_key(v, w)
            tv = u[0] * v[0] + u[1] * v[1]
            tw = u[0] * w[0] + u[1] * w[1]
            sgn = 1 if tv < tw else -1
            lines[key].append((min(tv, tw), max(tv, tw), sgn))
    segments = []
    for (n, c), spans in lines.items():
        u = (-n[1], n[0])
        uu = u[0] * u[0] + u[1] * u[1]
        nn = n[0] * n[0] + n[1] * n[1]
        base = (n[0] * c / nn, n[1] * c / nn)

        def point_at(t):
            f = t / uu
            return (base[0] + f * u[0], base[1] + f * u[1])

        events = defaultdict(int)
        for t0, t1, sgn in spans:
            events[t0] += sgn
            events[t1] -= sgn
        ts = sorted(events)
        running = 0
        for i in range(len(ts) - 1):
            running += events[ts[i]]
            if running != 0:
                segments.append((point_at(ts[i]), point_at(ts[i + 1])))
    segments = tuple(segments)
    object.__setattr__(x, "_boundary", segments)
    return segments


# ---------------------------------------------------------------------------
# serialization


def region_to_json(x):
    if x.dim == 1:
        return {
            "intervals": [
                [lo.to_json(), hi.to_json()] for lo, hi in x.intervals
            ]
        }
    return {
        "polygons": [
            [[p[0].to_json(), p[1].to_json()] for p in pts] for pts in x.polygons
        ]
    }


def region_from_json(data):
    if "intervals" in data:
        return Region1D.from_pairs(
            [
                (FieldScalar.from_json(lo), FieldScalar.from_json(hi))
                for lo, hi in data["intervals"]
            ]
        )
    return Region2D(
        tuple(
            tuple(
                (FieldScalar.from_json(px), FieldScalar.from_json(py))
                for px, py in pts
            )
            for pts in data["polygons"]
        )
    )
