"""Exact generation of cut-and-project point sets and their local statistics.

``generate`` enumerates every lattice point whose physical projection lies in
a closed ball and whose internal projection lies in the (shifted) window,
using the certified enumeration from :mod:`cutproject.lattice_enum` and exact
classification of every candidate.  Membership on the window boundary is never
silently resolved: boundary hits are recorded as flags, as are candidates an
IFS window cannot decide at its configured depth.  Output order is
lexicographic, so results are deterministic however the work is split up.

The other operations are radius-local pattern statistics: exact gap multisets
for one-dimensional patterns, recentred patches, indicator sets (points whose
displaced copies satisfy in/out constraints), and the torus parameter of the
generation shift.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .field import FieldScalar, solve_rational, vec_add
from .region import Region1D, Region2D, translate
from .lattice_enum import lattice_points
from .window import IfsWindow, Window

__all__ = [
    "OutOfRadiusError",
    "Patch",
    "PointSet",
    "gaps_1d",
    "generate",
    "indicator_set",
    "patch_at",
    "pointset_to_csv",
    "pointset_to_json",
    "torus_param",
]

_FLAG_KINDS = frozenset({"boundary", "undetermined", "provisional"})


class OutOfRadiusError(ValueError):
    """A requested patch is not fully contained in the generated ball."""


def _as_scalar(x, D):
    if isinstance(x, FieldScalar):
        if x.D != D:
            raise ValueError(f"scalar over sqrt{x.D}, expected sqrt{D}")
        return x
    return FieldScalar.rational(x, D)


def _as_shift(t, n, D):
    if t is None:
        return tuple(FieldScalar.zero(D) for _ in range(n))
    t = tuple(_as_scalar(x, D) for x in t)
    if len(t) != n:
        raise ValueError(f"expected an internal vector of length {n}")
    return t


def _norm2(v):
    acc = v[0] * v[0]
    for x in v[1:]:
        acc = acc + x * x
    return acc


class PointSet:
    """An exactly generated pattern: the lattice points gamma with
    ``|gamma_phys| <= R`` and ``star(gamma)`` in the interior of the shifted
    window ``W - t``, listed as (gamma, colour) pairs in lexicographic order.

    ``flags`` records every candidate whose membership could not be settled
    cleanly: window-boundary hits, verdicts still undetermined at the
    configured depth for IFS windows, and points produced by a substitution
    step whose parent lay outside the certified margin.  Each flag is
    (gamma, colour, kind) with kind ``"boundary"``, ``"undetermined"`` or
    ``"provisional"``.
    """

    __slots__ = ("scheme", "window", "t", "R", "points", "flags")

    def __init__(self, scheme, window, t, R, points, flags=()):
        D, k, n = scheme.D, scheme.k, scheme.n
        t = _as_shift(t, n, D)
        R = _as_scalar(R, D)
        if R.sign() < 0:
            raise ValueError("radius must be nonnegative")
        points = tuple((tuple(g), c) for g, c in points)
        flags = tuple((tuple(g), c, kind) for g, c, kind in flags)
        for g, _c in points:
            if len(g) != k or not all(isinstance(x, int) for x in g):
                raise ValueError("points must be integer lattice vectors")
        if list(points) != sorted(points) or len(set(points)) != len(points):
            raise ValueError("points must be sorted and duplicate-free")
        for _g, _c, kind in flags:
            if kind not in _FLAG_KINDS:
                raise ValueError(f"unknown flag kind {kind!r}")
        for name, value in (("scheme", scheme), ("window", window), ("t", t),
                            ("R", R), ("points", points), ("flags", flags)):
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("PointSet is immutable")

    def __repr__(self):
        return (f"PointSet({len(self.points)} points, "
                f"{len(self.flags)} flags, R={self.R})")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def nonsingular(self):
        """True when no membership question was left open in this ball.

        This is a radius-local certificate only: it says nothing about
        boundary hits beyond the generated radius.
        """
        return not self.flags

    def gammas(self):
        """The distinct lattice vectors of the pattern, in order."""
        out, last = [], None
        for g, _c in self.points:
            if g != last:
                out.append(g)
                last = g
        return out


def _box_region(ifs):
    r = FieldScalar(ifs.r0, 0, ifs.D)
    if ifs.dim == 1:
        return Region1D.from_pairs([(-r, r)])
    return Region2D.rect((-r, -r), (r, r))


def generate(scheme, window, t, R):
    """All lattice points in the R-ball whose star lies in ``window - t``.

    ``window`` is either a :class:`~cutproject.window.Window` (exact interior
    /boundary/outside classification per colour) or an
    :class:`~cutproject.window.IfsWindow` (membership oracle; undetermined
    verdicts are flagged and reported with a warning, never guessed).
    """
    D, n = scheme.D, scheme.n
    t = _as_shift(t, n, D)
    R = _as_scalar(R, D)
    if R.sign() < 0:
        raise ValueError("radius must be nonnegative")
    points, flags = [], []
    if isinstance(window, IfsWindow):
        if window.dim != n or window.D != D:
            raise ValueError("IFS window does not match the scheme")
        region = translate(_box_region(window), tuple(-x for x in t))
        for gamma in lattice_points(scheme, R, region):
            verdict = window.member(vec_add(scheme.star(gamma), t))
            if verdict == "inside":
                points.append((gamma, 0))
            elif verdict == "undetermined":
                flags.append((gamma, 0, "undetermined"))
        undecided = len(flags)
        if undecided:
            warnings.warn(
                f"IFS window left {undecided} lattice point(s) undetermined; "
                "they are flagged, not classified",
                stacklevel=2,
            )
    else:
        if window.dim != n:
            raise ValueError("window dimension does not match the scheme")
        region = translate(window.union_region(), tuple(-x for x in t))
        for gamma in lattice_points(scheme, R, region):
            st = vec_add(scheme.star(gamma), t)
            for colour, comp in window.components:
                cls = comp.classify(st)
                if cls == "interior":
                    points.append((gamma, colour))
                elif cls == "boundary":
                    flags.append((gamma, colour, "boundary"))
    return PointSet(scheme, window, t, R, points, flags)


def gaps_1d(ps):
    """Exact multiset of successive gaps of a one-dimensional pattern.

    Returns ``{gap: count}`` with exact FieldScalar keys in increasing order.
    """
    if ps.scheme.d != 1:
        raise ValueError("gap statistics require a one-dimensional pattern")
    xs = sorted(ps.scheme.project_phys(g)[0] for g in ps.gammas())
    if len(xs) < 2:
        raise ValueError("need at least 2 points to measure gaps")
    counts = {}
    for a, b in zip(xs, xs[1:]):
        counts[b - a] = counts.get(b - a, 0) + 1
    return dict(sorted(counts.items()))


@dataclass(frozen=True, eq=False)
class Patch:
    """A recentred patch: the pattern within distance r of a centre point.

    Patches compare equal when radius and relative content agree; the centre
    is kept only as provenance.
    """

    centre: tuple
    r: FieldScalar
    points: tuple

    def __eq__(self, other):
        if not isinstance(other, Patch):
            return NotImplemented
        return self.r == other.r and self.points == other.points

    def __hash__(self):
        return hash((self.r, self.points))


def patch_at(ps, gamma, r):
    """The exact patch of radius r centred at a point of the pattern.

    The closed r-ball around the centre must lie inside the generated ball
    (else :class:`OutOfRadiusError`), and no flagged candidate may fall in it
    (else the patch content would be uncertain).
    """
    gamma = tuple(gamma)
    scheme = ps.scheme
    r = _as_scalar(r, scheme.D)
    if r.sign() < 0:
        raise ValueError("patch radius must be nonnegative")
    if gamma not in set(ps.gammas()):
        raise ValueError(f"{gamma} is not a point of the pattern")
    slack = ps.R - r
    centre_phys = scheme.project_phys(gamma)
    if slack.sign() < 0 or _norm2(centre_phys) > slack * slack:
        raise OutOfRadiusError(
            f"patch of radius {r} at {gamma} exceeds the generated ball"
        )
    r2 = r * r
    rel = []
    for g, c, _kind in ps.flags:
        d = tuple(x - y for x, y in zip(scheme.project_phys(g), centre_phys))
        if _norm2(d) <= r2:
            raise ValueError(
                f"flagged candidate {g} lies inside the requested patch"
            )
    for g, c in ps.points:
        d = tuple(x - y for x, y in zip(scheme.project_phys(g), centre_phys))
        if _norm2(d) <= r2:
            rel.append((tuple(a - b for a, b in zip(g, gamma)), c))
    return Patch(centre=gamma, r=r, points=tuple(sorted(rel)))


def indicator_set(ps, ind):
    """The points x whose displaced copies satisfy the indicator.

    For each in-entry (colour, gamma) the point x + gamma must be present
    with that colour; for each out-entry it must be absent.  Only points for
    which every displaced copy lies inside the generated ball are eligible
    (the conditions are untestable farther out).  Flagged candidates count as
    possibly present: they block membership but never establish it.
    """
    if ind.empty:
        return []
    scheme = ps.scheme
    pts = set(ps.points)
    flagged = {(g, c) for g, c, _k in ps.flags}
    r2 = ps.R * ps.R
    out = []
    for x in ps.gammas():
        ok = True
        for colour, g_e, _star, is_in in ind.entries:
            disp = vec_add(x, g_e)
            if _norm2(scheme.project_phys(disp)) > r2:
                ok = False
                break
            pair = (disp, colour)
            if is_in:
                if pair not in pts or pair in flagged:
                    ok = False
                    break
            elif pair in pts or pair in flagged:
                ok = False
                break
        if ok:
            out.append(x)
    return out


def torus_param(ps):
    """Canonical representative of the generation shift on the torus.

    The star map is a bijection from rational lattice coordinates onto
    rational field vectors, so the shift is star(q) for a unique q; shifts
    differing by the star of an integer vector generate lattice translates of
    the same pattern.  The representative returned is star of the
    componentwise fractional part of q (lattice coordinates in [0, 1)^k).
    """
    scheme = ps.scheme
    rows, rhs = [], []
    for j in range(scheme.n):
        rows.append([scheme.proj_int[j][i].a for i in range(scheme.k)])
        rows.append([scheme.proj_int[j][i].b for i in range(scheme.k)])
        rhs.extend([ps.t[j].a, ps.t[j].b])
    q = solve_rational(rows, rhs)
    if q is None:  # pragma: no cover - star is onto the rational vectors
        raise ValueError("shift is not in the rational span of the star map")
    return scheme.star(tuple(qi - math.floor(qi) for qi in q))


# ---------------------------------------------------------------------------
# serialization


def _rows(ps):
    scheme = ps.scheme
    for g, c in ps.points:
        yield g, c, "interior"
    for g, c, kind in ps.flags:
        yield g, c, kind


def pointset_to_csv(ps):
    """CSV text: one row per point or flagged candidate.

    Columns: lattice coordinates, colour, status (interior / boundary /
    undetermined), then each physical and internal coordinate as an exact
    literal plus a float approximation.
    """
    scheme = ps.scheme
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [f"g{i}" for i in range(scheme.k)] + ["colour", "status"]
    for j in range(scheme.d):
        header += [f"phys{j}", f"phys{j}_float"]
    for j in range(scheme.n):
        header += [f"int{j}", f"int{j}_float"]
    writer.writerow(header)
    for g, c, status in _rows(ps):
        row = list(g) + [c, status]
        for x in scheme.project_phys(g):
            row += [str(x), float(x)]
        for x in scheme.star(g):
            row += [str(x), float(x)]
        writer.writerow(row)
    return buf.getvalue()


def pointset_to_json(ps):
    """JSON-ready mirror of the pattern: scheme, shift, radius, points, flags."""
    return {
        "scheme": ps.scheme.to_json(),
        "t": [x.to_json() for x in ps.t],
        "R": ps.R.to_json(),
        "points": [{"gamma": list(g), "colour": c} for g, c in ps.points],
        "flags": [
            {"gamma": list(g), "colour": c, "kind": kind}
            for g, c, kind in ps.flags
        ],
    }
