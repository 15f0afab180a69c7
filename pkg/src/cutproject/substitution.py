"""Substitution structure of cut-and-project sets: decision and synthesis.

A pattern is substitutional when some power of the expansive lattice map sends
it into itself up to the window bookkeeping: the inflated window ``A^m W``,
copied along finitely many lattice translates, tiles ``W`` again.  This module
decides that property exactly, constructs explicit rules, applies and verifies
them, and derives the auxiliary invariants that come with a rule.

``decide_sub`` reduces the decision to two finite checks on the window (shape
invariance under the internal contraction, and rationality of the vertex data)
plus a matrix-order computation, and reports the power at which a rule is
guaranteed.  ``derive_rule`` synthesises a concrete rule at a given power: it
first tries a single-cell cover of the window by translated copies of
``A^m W`` (searching outward with a symmetry-aware greedy cover), and falls
back to a cell decomposition of ``A^m W`` by window translates when no
single-cell cover exists.  Every derived rule is revalidated from scratch by
exact region arithmetic before it is returned, so a rule object is itself a
certificate of self-similarity.

``apply_rule`` maps a generated pattern one substitution step forward, with a
certified radius: children inside the shrunk radius are attributed to a unique
parent (any failure raises), children beyond it are flagged provisional rather
than guessed.  ``verify_self_similarity`` cross-checks a rule against direct
generation.  ``lids_power`` computes, for a given shift, the least power at
which the substitution fixes the local indistinguishability class of the
pattern, ``symmetry_check`` tests whether a lattice automorphism is a symmetry
of the pattern family, and ``emit_gifs`` rewrites a rule as a graph-directed
iterated function system on the deflated cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .field import (
    FieldScalar,
    isqrt,
    mat_det,
    mat_inv,
    mat_mul,
    mat_mul_vec,
    solve_rational,
    vec_add,
    vec_sub,
)
from .region import (
    Region1D,
    Region2D,
    CutterLimitError,
    arrangement_cells,
    linear_image,
    minkowski,
    reg_bool,
    region_eq,
    region_from_json,
    region_to_json,
    subtract,
    translate,
    congruent_by_translation,
)
from .window import IfsWindow, Window, fd_check, rationality_check
from .lattice_enum import lattice_points
from .pattern import PointSet, generate

__all__ = [
    "BoundExceededError",
    "RuleCell",
    "RuleDerivationError",
    "SubVerdict",
    "SubstitutionRule",
    "SymmetryResult",
    "UnsupportedWindowError",
    "VerifyReport",
    "apply_rule",
    "decide_sub",
    "derive_rule",
    "emit_gifs",
    "lids_power",
    "minimal_rule",
    "symmetry_check",
    "verify_self_similarity",
]


class UnsupportedWindowError(ValueError):
    """The requested operation needs a polytopal window."""


class RuleDerivationError(RuntimeError):
    """No rule could be derived under the given parameters."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class BoundExceededError(RuleDerivationError):
    """A deterministic search cap was reached before an answer was found."""


# ---------------------------------------------------------------------------
# small exact linear algebra over the integers / rationals


def _imat_mul(a, b):
    k = len(a)
    return tuple(
        tuple(sum(a[r][i] * b[i][c] for i in range(k)) for c in range(k))
        for r in range(k)
    )


def _imat_vec(a, v):
    k = len(v)
    return tuple(sum(a[r][i] * v[i] for i in range(k)) for r in range(k))


def _imat_pow(m, e):
    k = len(m)
    out = tuple(tuple(1 if r == c else 0 for c in range(k)) for r in range(k))
    for _ in range(e):
        out = _imat_mul(out, m)
    return out


def _imat_det(m):
    """Exact determinant of a rational square matrix."""
    a = [[Fraction(x) for x in row] for row in m]
    k = len(a)
    det = Fraction(1)
    for col in range(k):
        piv = next((r for r in range(col, k) if a[r][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, k):
            f = a[r][col] * inv
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


def _imat_inv_frac(m):
    """Exact inverse of an integer square matrix, as Fractions."""
    k = len(m)
    rows = [list(row) for row in m]
    cols = []
    for i in range(k):
        e = [Fraction(0)] * k
        e[i] = Fraction(1)
        sol = solve_rational(rows, e)
        if sol is None:
            raise ValueError("matrix is singular")
        cols.append(sol)
    return tuple(tuple(Fraction(cols[c][r]) for c in range(k)) for r in range(k))


def _field_mat_pow(a, e):
    out = a
    for _ in range(e - 1):
        out = mat_mul(out, a)
    return out


def _mat_order_mod(m, n, cap=10**6):
    """Multiplicative order of an integer matrix modulo n (n >= 1)."""
    if n == 1:
        return 1
    k = len(m)
    ident = tuple(tuple((1 if r == c else 0) for c in range(k)) for r in range(k))
    red = tuple(tuple(x % n for x in row) for row in m)
    cur = red
    for order in range(1, cap + 1):
        if cur == ident:
            return order
        cur = tuple(tuple(x % n for x in row) for row in _imat_mul(cur, red))
    raise BoundExceededError(
        f"matrix order modulo {n} not found within {cap} steps"
    )


def _sqrt_upper(q):
    """A rational r >= 0 with r*r >= q, tight to the integer square root."""
    q = Fraction(q)
    if q <= 0:
        return Fraction(0)
    p, s = q.numerator, q.denominator
    return Fraction(isqrt(p * s) + 1, s)


def _sqrt_lower(q):
    """A rational r >= 0 with r*r <= q, tight to the integer square root."""
    q = Fraction(q)
    if q <= 0:
        return Fraction(0)
    p, s = q.numerator, q.denominator
    return Fraction(isqrt(p * s), s)


def _norm2(v):
    acc = v[0] * v[0]
    for x in v[1:]:
        acc = acc + x * x
    return acc


def _star_inverse(scheme, target):
    """The unique rational q with star(q) == target.

    The star map is a bijection from rational lattice combinations onto
    field vectors, so the preimage always exists and is found by solving
    the rational linear system split into field coordinates.
    """
    rows = []
    rhs = []
    for j in range(scheme.n):
        rows.append([scheme.proj_int[j][i].a for i in range(scheme.k)])
        rows.append([scheme.proj_int[j][i].b for i in range(scheme.k)])
        rhs.extend([target[j].a, target[j].b])
    sol = solve_rational(rows, rhs)
    if sol is None:  # pragma: no cover - the system is always solvable
        raise RuntimeError("internal: star map preimage not found")
    return tuple(Fraction(x) for x in sol)


def _int_or_none(q):
    out = []
    for x in q:
        if Fraction(x).denominator != 1:
            return None
        out.append(int(x))
    return tuple(out)


# ---------------------------------------------------------------------------
# window plumbing


def _window_region(window, scheme):
    if isinstance(window, IfsWindow):
        raise UnsupportedWindowError(
            "this operation requires a polytopal window; IFS windows carry "
            "their own self-similar structure"
        )
    if not isinstance(window, Window):
        raise TypeError(f"expected a Window, got {type(window).__name__}")
    if window.dim != scheme.n:
        raise ValueError("window dimension does not match the scheme")
    reg = window.union_region()
    if reg.is_empty:
        raise ValueError("window is empty")
    return reg


def _inflate(scheme, reg, m):
    am = _field_mat_pow(scheme.A_mat, m)
    if reg.dim == 1:
        return linear_image(reg, am[0][0]), am
    return linear_image(reg, am), am


def _bounds(reg):
    if reg.dim == 1:
        los = [lo for lo, _ in reg.intervals]
        his = [hi for _, hi in reg.intervals]
        return ((min(los), max(his)),)
    xs = [p[0] for poly in reg.polygons for p in poly]
    ys = [p[1] for poly in reg.polygons for p in poly]
    return ((min(xs), max(xs)), (min(ys), max(ys)))


def _reflect(reg):
    if reg.dim == 1:
        one = FieldScalar(1, 0, _region_field(reg))
        return linear_image(reg, -one)
    one = FieldScalar(1, 0, _region_field(reg))
    zero = FieldScalar(0, 0, one.D)
    return linear_image(reg, ((-one, zero), (zero, -one)))


def _region_field(reg):
    if reg.dim == 1:
        return reg.intervals[0][0].D
    return reg.polygons[0][0][0].D


def _erode(w, k):
    """{t : k + t is contained in w}, exactly, for unions of convex pieces.

    Computed by complementation: a shift t is bad exactly when some point of
    ``k + t`` escapes ``w``, i.e. when t lies in ``(box \\ w) + (-k)``, so the
    erosion is the candidate box minus that Minkowski sum.  The boxes are
    padded so every relevant complement piece is present.
    """
    if w.is_empty or k.is_empty:
        return w.__class__(()) if w.dim == 2 else Region1D()
    d = _region_field(w)
    one = FieldScalar(1, 0, d)
    wb, kb = _bounds(w), _bounds(k)
    lo = [wl - kl for (wl, _), (kl, _) in zip(wb, kb)]
    hi = [wh - kh for (_, wh), (_, kh) in zip(wb, kb)]
    if any((h - l).sign() < 0 for l, h in zip(lo, hi)):
        return w.__class__(()) if w.dim == 2 else Region1D()
    if w.dim == 1:
        cand = Region1D.from_pairs([(lo[0], hi[0])])
        big = Region1D.from_pairs([(wb[0][0] - one, wb[0][1] + one)])
    else:
        cand = Region2D.rect((lo[0], lo[1]), (hi[0], hi[1]))
        big = Region2D.rect(
            (wb[0][0] - one, wb[1][0] - one), (wb[0][1] + one, wb[1][1] + one)
        )
    bad = minkowski(subtract(big, w), _reflect(k))
    return subtract(cand, bad)


def _centroid(reg):
    if reg.dim == 1:
        lo, hi = reg.intervals[0]
        half = FieldScalar(Fraction(1, 2), 0, lo.D)
        return ((lo + hi) * half,)
    pts = reg.polygons[0]
    d = pts[0][0].D
    a2 = FieldScalar(0, 0, d)
    cx = FieldScalar(0, 0, d)
    cy = FieldScalar(0, 0, d)
    m = len(pts)
    for i in range(m):
        p, q = pts[i], pts[(i + 1) % m]
        cr = p[0] * q[1] - q[0] * p[1]
        a2 = a2 + cr
        cx = cx + (p[0] + q[0]) * cr
        cy = cy + (p[1] + q[1]) * cr
    inv = (a2 * FieldScalar(3, 0, d)).inverse()
    return (cx * inv, cy * inv)


def _window_isometries(reg, dim, d):
    """Affine maps h(x) = g x + u with h(reg) == reg, as (g, u) pairs.

    In one dimension these are the identity and (when the region is
    symmetric) the flip about its midpoint.  In two dimensions, for a single
    convex component, candidate linear parts are read off from vertex
    adjacency around the centroid and validated on the full vertex set;
    multi-component planar regions get the identity only, which merely makes
    the cover search below symmetry-blind, never wrong.
    """
    one = FieldScalar(1, 0, d)
    zero = FieldScalar(0, 0, d)
    ident = ((((one,),), (zero,)),)
    if dim == 1:
        out = list(ident)
        lo = min(a for a, _ in reg.intervals)
        hi = max(b for _, b in reg.intervals)
        flipped = translate(_reflect(reg), (lo + hi,))
        if region_eq(flipped, reg):
            out.append((((-one,),), (lo + hi,)))
        return out
    if len(reg.polygons) != 1:
        return [((( one, zero), (zero, one)), (zero, zero))]
    ctr = _centroid(reg)
    pts = list(reg.polygons[0])
    rel = [vec_sub(p, ctr) for p in pts]
    relset = set(rel)
    nverts = len(pts)
    u0, u1 = rel[0], rel[1]
    uinv = mat_inv(((u0[0], u1[0]), (u0[1], u1[1])))
    out = []
    seen = set()
    for j in range(nverts):
        for orient in (1, -1):
            w0 = rel[j]
            w1 = rel[(j + orient) % nverts]
            g = mat_mul(((w0[0], w1[0]), (w0[1], w1[1])), uinv)
            key = tuple(tuple((x.a, x.b) for x in row) for row in g)
            if key in seen:
                continue
            if {tuple(mat_mul_vec(g, r)) for r in rel} == relset:
                seen.add(key)
                out.append((g, vec_sub(ctr, mat_mul_vec(g, ctr))))
    return out


def _lattice_symmetries(scheme, reg, dim, am):
    """Integer actions z -> sigma z + w permuting valid cover translates.

    A window isometry h(x) = g x + u yields such an action when g commutes
    with the internal contraction, g lifts to an integer lattice map through
    the star bijection, and the induced shift is a lattice vector; then h
    maps the piece at z onto the piece at sigma z + w, so validity and
    coverage are orbit-wise notions.
    """
    acts = []
    for g, u in _window_isometries(reg, dim, scheme.D):
        if dim == 2 and mat_mul(g, am) != mat_mul(am, g):
            continue
        cols = []
        ok = True
        for i in range(scheme.k):
            e = [0] * scheme.k
            e[i] = 1
            s = scheme.star(e)
            target = (
                tuple(g[0][0] * x for x in s) if dim == 1 else mat_mul_vec(g, s)
            )
            zi = _int_or_none(_star_inverse(scheme, target))
            if zi is None:
                ok = False
                break
            cols.append(zi)
        if not ok:
            continue
        sigma = tuple(
            tuple(cols[i][r] for i in range(scheme.k)) for r in range(scheme.k)
        )
        au = tuple(am[0][0] * x for x in u) if dim == 1 else mat_mul_vec(am, u)
        w = _int_or_none(_star_inverse(scheme, vec_sub(u, au)))
        if w is None:
            continue
        acts.append((sigma, w))
    return acts


def _apply_act(act, z):
    sigma, w = act
    k = len(z)
    return tuple(
        sum(sigma[r][i] * z[i] for i in range(k)) + w[r] for r in range(k)
    )


def _claim_key(scheme, z):
    return (_norm2(scheme.project_phys(z)), z)


# ---------------------------------------------------------------------------
# cover search (single-cell rules)


def _sample_points(reg):
    """Boundary samples every valid cover must reach: vertices/endpoints."""
    if reg.dim == 1:
        out = []
        for lo, hi in reg.intervals:
            out.append((lo,))
            out.append((hi,))
        return out
    return [p for poly in reg.polygons for p in poly]


def _fast_cover(scheme, reg, dim, rho, aw, am, erosion):
    """A set Z with union over z in Z of (aw + star z) == reg, or None.

    Candidates are lattice points whose star lies in the erosion (so every
    candidate piece sits inside the window by construction), closed under the
    window's lattice symmetries.  Whole symmetry orbits are added greedily in
    order of increasing physical distance, then pruned in reverse, keeping
    the result canonical: the same cover comes back for every search radius
    large enough to close, because the covering orbits carry the smallest
    keys and forced pieces (the unique candidates at each window vertex) are
    never prunable.
    """
    cands = set(lattice_points(scheme, rho, erosion))
    if not cands:
        return None
    pieces = {}

    def piece(z):
        got = pieces.get(z)
        if got is None:
            got = pieces[z] = translate(aw, scheme.star(z))
        return got

    # cheap necessary condition before any exact boolean work
    for v in _sample_points(reg):
        if not any(piece(z).contains(v) for z in cands):
            return None
    acts = _lattice_symmetries(scheme, reg, dim, am)
    frontier = list(cands)
    while frontier:
        z = frontier.pop()
        for act in acts:
            y = _apply_act(act, z)
            if y not in cands:
                cands.add(y)
                frontier.append(y)
    orbits = []
    unassigned = set(cands)
    while unassigned:
        z0 = next(iter(unassigned))
        orb = {z0}
        frontier = [z0]
        while frontier:
            z = frontier.pop()
            for act in acts:
                y = _apply_act(act, z)
                if y not in orb:
                    orb.add(y)
                    frontier.append(y)
        orbits.append(sorted(orb))
        unassigned -= orb
    orbits.sort(key=lambda orb: min(_claim_key(scheme, z) for z in orb))
    for orb in orbits:
        for z in orb:
            if not subtract(piece(z), reg).is_empty:  # pragma: no cover
                raise RuntimeError("internal: cover candidate escapes window")
    uncovered = reg
    added = []
    for orb in orbits:
        if uncovered.is_empty:
            break
        if not any(
            not reg_bool("and", piece(z), uncovered).is_empty for z in orb
        ):
            continue
        added.append(orb)
        for z in orb:
            uncovered = subtract(uncovered, piece(z))
    if not uncovered.is_empty:
        return None
    kept = list(added)
    for orb in reversed(added):
        trial = [o for o in kept if o is not orb]
        acc = reg
        for o in trial:
            for z in o:
                acc = subtract(acc, piece(z))
            if acc.is_empty:
                break
        if acc.is_empty:
            kept = trial
    zs = sorted({z for orb in kept for z in orb})
    left = reg
    for z in zs:
        left = subtract(left, piece(z))
        if left.is_empty:
            break
    if not left.is_empty:  # pragma: no cover - greedy guarantees this
        raise RuntimeError("internal: pruned cover lost exact coverage")
    return zs


# ---------------------------------------------------------------------------
# cell decomposition (general rules)


def _general_cells(scheme, reg, dim, rho, aw, max_cutters=160):
    """Cell decomposition of the inflated window with per-cell clusters.

    Cells are the arrangement of ``aw`` under all window translates that
    meet it; a cell's cluster is every translate whose window copy contains
    the whole cell.  Returns (cells, clusters) on success, None when some
    cell has no cluster vector or the assembled pieces fail to tile the
    window exactly (both cured by a larger search radius, if at all).
    """
    cyl = minkowski(reg, _reflect(aw))
    zs = sorted(set(lattice_points(scheme, rho, cyl)),
                key=lambda z: _claim_key(scheme, z))
    cutters = []
    kept = []
    for z in zs:
        cut = translate(reg, tuple(-x for x in scheme.star(z)))
        if not reg_bool("and", cut, aw).is_empty:
            kept.append((z, cut))
            cutters.append(cut)
    if len(kept) > max_cutters:
        raise BoundExceededError(
            f"{len(kept)} window translates meet the inflated window; "
            f"the arrangement cap is {max_cutters}",
            {"cutters": len(kept), "cap": max_cutters},
        )
    cells = arrangement_cells(aw, cutters, max_cutters=max_cutters)
    out_cells = []
    left = reg
    for cell in cells:
        cluster = tuple(
            z for z, cut in kept if subtract(cell.region, cut).is_empty
        )
        if not cluster:
            return None
        out_cells.append((cell.region, cluster))
        for z in cluster:
            if left.is_empty:
                break
            left = subtract(left, translate(cell.region, scheme.star(z)))
    if not left.is_empty:
        return None
    return out_cells


# ---------------------------------------------------------------------------
# the decision


@dataclass(frozen=True)
class SubVerdict:
    """Outcome of the substitutionality decision.

    ``substitutional`` is the yes/no answer.  For a yes, ``p`` is the shape
    period (least power with ``A^p W`` congruent to a subset-compatible copy
    of ``W`` in the finite-decomposition sense), ``N`` the common denominator
    of the window data on the lattice, and ``m`` a power at which a rule is
    guaranteed to exist (never larger than twice the period times the
    denominator order, the doubling restoring orientation).  For a no,
    ``witness`` carries the finite obstruction: ("fd", data) when no power of
    the contraction preserves the window shape, ("rationality", data) when
    the window data is incommensurate with the lattice.
    """

    substitutional: bool
    p: int | None
    N: int | None
    m: int | None
    witness: tuple | None

    def to_json(self):
        wit = None
        if self.witness is not None:
            kind, data = self.witness
            wit = {"kind": kind, "data": _jsonish(data)}
        return {
            "substitutional": self.substitutional,
            "p": self.p,
            "N": self.N,
            "m": self.m,
            "witness": wit,
        }


def _jsonish(x):
    if isinstance(x, FieldScalar):
        return x.to_json()
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    if isinstance(x, (tuple, list)):
        return [_jsonish(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonish(v) for k, v in x.items()}
    return x


def decide_sub(scheme, window):
    """Decide whether the pattern family of ``window`` is substitutional.

    The decision is exact and terminates on two finite certificates: the
    window shape must recur under the internal contraction (else no inflation
    power can map the window into itself piecewise), and the window data must
    be rational over the lattice (else the bookkeeping translates cannot be
    lattice vectors).  Both failures come with witnesses.  On a yes, the
    guaranteed power combines the shape period, the order of the lattice map
    modulo the window denominator, and an orientation-restoring doubling when
    the contraction reverses orientation at that power.
    """
    _window_region(window, scheme)
    fd = fd_check(window, scheme)
    if not fd.invariant:
        return SubVerdict(False, None, None, None, ("fd", fd.witness))
    rat = rationality_check(window, scheme)
    if not rat.rational:
        return SubVerdict(False, fd.order, None, None,
                          ("rationality", rat.witness))
    p, n = fd.order, rat.N
    base = p * _mat_order_mod(_imat_pow(scheme.M, p), n)
    det_neg = mat_det(scheme.A_mat).sign() < 0
    m = base * (2 if det_neg and base % 2 == 1 else 1)
    return SubVerdict(True, p, n, m, None)


# ---------------------------------------------------------------------------
# rules


@dataclass(frozen=True)
class RuleCell:
    """One cell of the inflated window with the translates that cover it."""

    region: object
    cluster: tuple


class SubstitutionRule:
    """A certified substitution rule at power ``m``.

    The rule consists of a decomposition of the inflated window ``A^m W``
    into closed cells and, for each cell, the cluster of lattice translates
    z whose window copy ``W - star(z)`` contains the whole cell; every point
    of the pattern sitting over a cell therefore produces exactly the
    children in that cell's cluster.  ``Z0`` is the union of all clusters
    and ``claim_order`` fixes the deterministic parent-attribution order
    (increasing exact physical distance, ties lexicographic).

    The constructor revalidates everything by exact region arithmetic unless
    ``validate=False`` is passed (a trusted-load escape hatch used by tests
    to inject faults): clusters must be nonempty, every translated cell must
    land inside the window, the cells must tile the inflated window, and the
    translated cells must tile the window itself.  A validated rule is thus
    a proof of self-similarity, not a heuristic.

    Rules over IFS windows carry no cell decomposition: the attractor
    identity itself plays that role, with the digit set as the single
    cluster.
    """

    __slots__ = ("scheme", "window", "m", "Z0", "cells", "claim_order")

    def __init__(self, scheme, window, m, Z0, cells, claim_order=None,
                 validate=True):
        m = int(m)
        if m < 1:
            raise ValueError("substitution power must be a positive integer")
        k = scheme.k
        z0 = []
        for z in Z0:
            z = tuple(z)
            if len(z) != k or not all(isinstance(x, int) for x in z):
                raise ValueError("Z0 must consist of integer lattice vectors")
            z0.append(z)
        z0 = tuple(sorted(set(z0)))
        if not z0:
            raise ValueError("Z0 must be nonempty")
        if claim_order is None:
            order = tuple(sorted(z0, key=lambda z: _claim_key(scheme, z)))
        else:
            order = tuple(tuple(z) for z in claim_order)
            if sorted(order) != list(z0):
                raise ValueError("claim_order must be a permutation of Z0")
        cells = tuple(
            RuleCell(c.region, tuple(tuple(z) for z in c.cluster))
            if isinstance(c, RuleCell)
            else RuleCell(c[0], tuple(tuple(z) for z in c[1]))
            for c in cells
        )
        if isinstance(window, IfsWindow):
            if window.dim != scheme.n or window.D != scheme.D:
                raise ValueError("IFS window does not match the scheme")
            if window.A_mat != scheme.A_mat:
                raise ValueError(
                    "IFS window was built for a different contraction"
                )
            if m != 1:
                raise ValueError("IFS-window rules exist at power 1 only")
            if cells:
                raise ValueError("IFS-window rules carry no cell decomposition")
            if set(z0) != set(tuple(z) for z in window.Z):
                raise ValueError("Z0 must equal the IFS digit set")
        else:
            if not isinstance(window, Window):
                raise TypeError(
                    f"expected a Window, got {type(window).__name__}"
                )
            if not cells:
                raise ValueError("a rule needs at least one cell")
            zset = set(z0)
            for c in cells:
                if not c.cluster:
                    raise ValueError("every cell needs a nonempty cluster")
                if not set(c.cluster) <= zset:
                    raise ValueError("cell clusters must be subsets of Z0")
            if validate:
                self._validate_geometry(scheme, window, m, cells)
        for name, value in (("scheme", scheme), ("window", window), ("m", m),
                            ("Z0", z0), ("cells", cells),
                            ("claim_order", order)):
            object.__setattr__(self, name, value)

    @staticmethod
    def _validate_geometry(scheme, window, m, cells):
        reg = _window_region(window, scheme)
        aw, _ = _inflate(scheme, reg, m)
        # Coverage is checked by a shrinking subtract chain: with every piece
        # proved inside the target first, an empty remainder is exactly the
        # regularized equality of union and target.
        aw_left = aw
        reg_left = reg
        for c in cells:
            if not subtract(c.region, aw).is_empty:
                raise ValueError("a cell leaks out of the inflated window")
            aw_left = subtract(aw_left, c.region)
            for z in c.cluster:
                p = translate(c.region, scheme.star(z))
                if not subtract(p, reg).is_empty:
                    raise ValueError(
                        f"translated cell at z={z} is not inside the window"
                    )
                if not reg_left.is_empty:
                    reg_left = subtract(reg_left, p)
        if not aw_left.is_empty:
            raise ValueError("cells do not tile the inflated window")
        if not reg_left.is_empty:
            raise ValueError("translated cells do not tile the window")

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("SubstitutionRule is immutable")

    def __repr__(self):
        return (f"SubstitutionRule(m={self.m}, |Z0|={len(self.Z0)}, "
                f"{len(self.cells)} cells)")

    @property
    def dim(self):
        return self.scheme.n

    def to_json(self):
        return {
            "m": self.m,
            "Z0": [list(z) for z in self.Z0],
            "cells": [
                {
                    "region": region_to_json(c.region),
                    "cluster": [list(z) for z in c.cluster],
                }
                for c in self.cells
            ],
            "claim_order": [list(z) for z in self.claim_order],
        }

    @classmethod
    def from_json(cls, scheme, window, data, validate=True):
        cells = [
            (region_from_json(c["region"]),
             [tuple(int(x) for x in z) for z in c["cluster"]])
            for c in data["cells"]
        ]
        return cls(
            scheme,
            window,
            int(data["m"]),
            [tuple(int(x) for x in z) for z in data["Z0"]],
            cells,
            claim_order=[tuple(int(x) for x in z)
                         for z in data["claim_order"]],
            validate=validate,
        )


# ---------------------------------------------------------------------------
# rule derivation


def _denseness_radius(scheme, window, dim):
    """A starting search radius from the pattern's empirical denseness.

    One trial generation estimates the covering radius of the physical
    pattern (largest gap in one dimension, a grid sweep in two); the result
    is snapped up to a 1/64 grid so the search schedule is reproducible.
    """
    r_trial = Fraction(12 if dim == 1 else 6)
    ps = generate(scheme, window, None, r_trial)
    gammas = list(ps.gammas()) + [g for g, _c, _k in ps.flags]
    pts = [tuple(x.to_float() for x in scheme.project_phys(g))
           for g in sorted(set(gammas))]
    est = 1.0
    if dim == 1 and len(pts) >= 2:
        xs = sorted(p[0] for p in pts)
        est = max(b - a for a, b in zip(xs, xs[1:]))
    elif dim == 2 and pts:
        est = 0.0
        lim = float(r_trial) - 1.5
        steps = int(lim / 0.5)
        for i in range(-steps, steps + 1):
            for j in range(-steps, steps + 1):
                gx, gy = i * 0.5, j * 0.5
                if gx * gx + gy * gy > lim * lim:
                    continue
                best = min(
                    (px - gx) ** 2 + (py - gy) ** 2 for px, py in pts
                )
                est = max(est, math.sqrt(best))
        est += 0.36  # half-diagonal of the sweep grid
    snapped = Fraction(math.ceil(est * 64), 64)
    return max(snapped, Fraction(1, 4))


def derive_rule(scheme, window, m, *, rho=None, rho_cap=None, path="auto"):
    """Derive a certified substitution rule at power ``m``.

    For polytopal windows the search first checks whether a single-cell rule
    can exist at all (the erosion of the window by its inflated copy must
    reassemble the window); if so, translates are searched outward along a
    deterministic radius schedule (the empirical denseness radius, doubled
    until the cover closes or ``rho_cap`` is passed).  Otherwise the general
    cell decomposition is built along the same schedule.  ``path`` can force
    ``"fast"`` or ``"general"``; ``rho`` pins a single search radius.

    For an IFS window the attractor identity is already a one-step rule:
    the digit set is the cluster and no cell decomposition is carried.

    Raises :class:`RuleDerivationError` when no rule is found under the
    given bounds, with diagnostics describing the failed attempts.
    """
    if isinstance(window, IfsWindow):
        if int(m) != 1:
            raise ValueError("IFS-window rules exist at power 1 only")
        return SubstitutionRule(scheme, window, 1, tuple(window.Z), ())
    reg = _window_region(window, scheme)
    dim = reg.dim
    m = int(m)
    if m < 1:
        raise ValueError("substitution power must be a positive integer")
    if path not in ("auto", "fast", "general"):
        raise ValueError("path must be 'auto', 'fast' or 'general'")
    aw, am = _inflate(scheme, reg, m)
    erosion = _erode(reg, aw)
    fast_feasible = (not erosion.is_empty) and region_eq(
        minkowski(erosion, aw), reg
    )
    if path == "fast" and not fast_feasible:
        raise RuleDerivationError(
            "no single-cell rule exists at this power: the erosion of the "
            "window does not reassemble it",
            {"m": m, "path": "fast"},
        )
    use_fast = fast_feasible if path == "auto" else path == "fast"
    if rho is not None:
        schedule = [Fraction(rho)]
    else:
        r = _denseness_radius(scheme, window, dim)
        cap = Fraction(rho_cap) if rho_cap is not None else Fraction(64)
        schedule = []
        while r <= cap:
            schedule.append(r)
            r *= 2
        if not schedule:
            raise ValueError("rho_cap is below the starting search radius")
    attempts = []
    for r in schedule:
        if use_fast:
            zs = _fast_cover(scheme, reg, dim, r, aw, am, erosion)
            if zs is not None:
                return SubstitutionRule(
                    scheme, window, m, zs, ((aw, tuple(zs)),)
                )
            attempts.append({"rho": str(r), "path": "fast"})
        else:
            got = _general_cells(scheme, reg, dim, r, aw)
            if got is not None:
                z0 = sorted({z for _, cluster in got for z in cluster})
                return SubstitutionRule(scheme, window, m, z0, got)
            attempts.append({"rho": str(r), "path": "general"})
    raise RuleDerivationError(
        f"no rule found at power {m} with search radius up to "
        f"{schedule[-1]}",
        {"m": m, "attempts": attempts},
    )


def minimal_rule(scheme, window, verdict=None, *, rho=None, rho_cap=None,
                 verify_radius=None, verify_shift=None):
    """The smallest certified power: derive, verify, return the first winner.

    Candidate powers are the multiples of the shape period up to the
    guaranteed power from :func:`decide_sub`.  Each derived rule is verified
    against direct generation at a generic nonsingular shift before being
    accepted, so the returned power is backed by an end-to-end check, not
    just the geometric certificate.
    """
    if verdict is None:
        verdict = decide_sub(scheme, window)
    if not verdict.substitutional:
        raise ValueError(
            f"the pattern is not substitutional: witness {verdict.witness!r}"
        )
    reg = _window_region(window, scheme)
    radius = verify_radius
    if radius is None:
        radius = 40 if reg.dim == 1 else 8
    shift = verify_shift
    if shift is None:
        shift = _generic_shift(scheme, window, Fraction(radius))
    last = None
    for power in range(verdict.p, verdict.m + 1, verdict.p):
        try:
            rule = derive_rule(scheme, window, power, rho=rho,
                               rho_cap=rho_cap)
        except RuleDerivationError as exc:
            last = exc
            continue
        report = verify_self_similarity(scheme, window, rule, shift,
                                        Fraction(radius))
        if report.ok:
            return rule
    raise RuleDerivationError(
        f"no verified rule at any power up to {verdict.m}"
    ) from last


def _generic_shift(scheme, window, radius):
    """A deterministic shift that is nonsingular out to ``radius``."""
    for prime in (7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        q = tuple(Fraction(i + 1, prime) for i in range(scheme.k))
        t = scheme.star(q)
        if not generate(scheme, window, t, radius).flags:
            return t
    raise RuntimeError(  # pragma: no cover - ten misses is implausible
        "no nonsingular trial shift found"
    )


# ---------------------------------------------------------------------------
# applying a rule


def _check_same_scheme(a, b):
    if a is b:
        return
    if a.M != b.M or a.D != b.D:
        raise ValueError("pattern and rule belong to different schemes")


def _f(x):
    """Float sketch of an exact scalar (certified within ~2^-48 relative)."""
    return float(x.lower_bound(48))


def _same_window(a, b):
    if a is b:
        return True
    if isinstance(a, IfsWindow) or isinstance(b, IfsWindow):
        return (isinstance(a, IfsWindow) and isinstance(b, IfsWindow)
                and a.Z == b.Z and a.D == b.D and a.A_mat == b.A_mat)
    return a.to_json() == b.to_json()


def _successor_radius(scheme, m, z0, r_pred):
    """A certified radius for one substitution step, as an exact Fraction.

    Children within this radius of the origin have their parent inside the
    predecessor ball: the physical expansion stretches every direction by at
    least the smallest singular value of L^m (lower-bounded exactly), and a
    child sits at most the largest cluster displacement away from its
    stretched parent.
    """
    lm = _field_mat_pow(scheme.L_mat, m)
    d = scheme.d
    gram = tuple(
        tuple(
            sum(lm[i][r] * lm[i][c] for i in range(d)) for c in range(d)
        )
        for r in range(d)
    )
    diagonal = all(
        gram[r][c].is_zero() for r in range(d) for c in range(d) if r != c
    )
    if diagonal:
        # exact singular values: the Gram matrix is diagonal (covers the
        # one-dimensional, axis-aligned and similarity cases)
        sigma = None
        for i in range(d):
            lo = Fraction(gram[i][i].lower_bound(64))
            s = _sqrt_lower(max(lo, Fraction(0)))
            sigma = s if sigma is None else min(sigma, s)
    else:
        inv = mat_inv(lm)
        fro2 = _norm2([x for row in inv for x in row])
        sigma = 1 / _sqrt_upper(fro2.upper_bound(64))
    rho = Fraction(0)
    for z in z0:
        n2 = _norm2(scheme.project_phys(z))
        rho = max(rho, _sqrt_upper(n2.upper_bound(64)))
    r = sigma * Fraction(r_pred) - rho
    return max(r, Fraction(0))


def apply_rule(rule, pattern):
    """One substitution step: map a generated pattern to its successor.

    The successor's shift is the contracted shift, its certified radius the
    expanded-and-trimmed predecessor radius.  Every child inside that radius
    is attributed, through the claim order, to the unique cluster translate
    whose inflated-window copy contains it, and the resulting parent must be
    present in the predecessor (anything else raises, since the radius
    arithmetic guarantees it).  Children beyond the certified radius are
    flagged ``provisional``; children or claims landing on boundaries are
    flagged ``boundary``.  The predecessor must be flag-free.
    """
    scheme = rule.scheme
    _check_same_scheme(scheme, pattern.scheme)
    if not _same_window(rule.window, pattern.window):
        raise ValueError("pattern and rule use different windows")
    if pattern.flags:
        raise ValueError(
            "predecessor pattern has unresolved flags; resolve or regenerate "
            "before substituting"
        )
    d_field = scheme.D
    m = rule.m
    mm = _imat_pow(scheme.M, m)
    am = _field_mat_pow(scheme.A_mat, m)
    t_succ = tuple(mat_mul_vec(am, pattern.t))
    r_pred = Fraction(pattern.R.lower_bound(64))
    r_succ = _successor_radius(scheme, m, rule.Z0, r_pred)
    r2 = FieldScalar.rational(r_succ * r_succ, d_field)
    if isinstance(rule.window, IfsWindow):
        return _apply_ifs(rule, pattern, mm, t_succ, r_succ, r2)
    det = _imat_det(mm)
    minv = _imat_inv_frac(mm)
    if abs(det) == 1:
        groups = None
        claim_all = rule.claim_order
    else:
        groups = {}
        for z in rule.claim_order:
            key = tuple(x % 1 for x in _imat_vec(minv, z))
            groups.setdefault(key, []).append(z)
        claim_all = None
    reg = _window_region(rule.window, scheme)
    aw, _ = _inflate(scheme, reg, m)
    single = rule.cells[0] if len(rule.cells) == 1 else None
    star_z = {z: scheme.star(z) for z in rule.Z0}
    star_zf = {z: tuple(_f(c) for c in s) for z, s in star_z.items()}
    # Certified float prescreens, in the same style as the region module:
    # decisions are taken on float sketches only when the margin dominates
    # every conversion error by orders of magnitude; anything in the thin
    # band falls back to exact arithmetic, so results never depend on floats.
    phys_f = tuple(tuple(_f(x) for x in row) for row in scheme.proj_phys)
    r2_frac = r_succ * r_succ
    r2f = float(r2_frac)
    pred_set = set()
    proposals = {}
    for gp, _colour in pattern.points:
        if gp in pred_set:
            continue
        pred_set.add(gp)
        gq = _imat_vec(mm, gp)
        xq = vec_add(scheme.star(gq), t_succ)
        if single is not None:
            clusters = (single.cluster,)
        else:
            clusters = tuple(
                c.cluster for c in rule.cells if c.region.contains(xq)
            )
            if not clusters:  # pragma: no cover - parents sit inside A^m W
                raise RuntimeError(
                    "internal: successor position escaped the inflated window"
                )
        for cluster in clusters:
            for z in cluster:
                gc = tuple(a + b for a, b in zip(gq, z))
                if gc not in proposals:
                    proposals[gc] = vec_add(xq, star_z[z])
    points, flags = [], []
    for gc in sorted(proposals):
        x = proposals[gc]
        verdicts = []
        for colour, comp in rule.window.components:
            cls = comp.classify(x)
            if cls == "interior":
                verdicts.append((colour, "point"))
            elif cls == "boundary":
                verdicts.append((colour, "boundary"))
        if not verdicts:  # pragma: no cover - children land in the window
            raise RuntimeError("internal: proposed child escaped the window")
        n2f = 0.0
        for row in phys_f:
            acc = 0.0
            for coef, gi in zip(row, gc):
                acc += coef * gi
            n2f += acc * acc
        band = 1e-6 * (1.0 + n2f + r2f)
        if n2f > r2f + band:
            in_margin = False
        elif n2f < r2f - band:
            in_margin = True
        else:
            in_margin = (_norm2(scheme.project_phys(gc)) - r2).sign() <= 0
        if not in_margin:
            for colour, kind in verdicts:
                flags.append(
                    (gc, colour,
                     "provisional" if kind == "point" else "boundary")
                )
            continue
        if groups is None:
            cand = claim_all
        else:
            cand = groups.get(
                tuple(v % 1 for v in _imat_vec(minv, gc)), ()
            )
        xf = tuple(_f(c) for c in x)
        hw = 1e-10 * (1.0 + sum(abs(c) for c in xf))
        claimant = None
        ambiguous = False
        for z in cand:
            zf = star_zf[z]
            if len(xf) == 1:
                qf = xf[0] - zf[0]
            else:
                qf = (xf[0] - zf[0], xf[1] - zf[1])
            mg, tol = aw._float_margin(qf, hw)
            if mg > tol:
                claimant = z
                break
            if mg < -tol:
                continue
            cls = aw.classify(vec_sub(x, star_z[z]))
            if cls == "interior":
                claimant = z
                break
            if cls == "boundary":
                ambiguous = True
                break
        if ambiguous:
            for colour, _kind in verdicts:
                flags.append((gc, colour, "boundary"))
            continue
        if claimant is None:  # pragma: no cover - the generator claims
            raise RuntimeError("internal: no claimant for an in-window child")
        parent = _imat_vec(minv, tuple(a - b for a, b in zip(gc, claimant)))
        parent = tuple(int(v) for v in parent)
        if parent not in pred_set:
            raise ValueError(
                f"child {gc} claims parent {parent}, which is missing from "
                "the predecessor; the input pattern is inconsistent with its "
                "stated radius"
            )
        for colour, kind in verdicts:
            if kind == "point":
                points.append((gc, colour))
            else:
                flags.append((gc, colour, "boundary"))
    points.sort()
    flags.sort()
    return PointSet(scheme, rule.window, t_succ,
                    FieldScalar.rational(r_succ, d_field), points, flags)


def _apply_ifs(rule, pattern, mm, t_succ, r_succ, r2):
    scheme = rule.scheme
    w = rule.window
    pred_set = set()
    proposals = set()
    for gp, _colour in pattern.points:
        pred_set.add(gp)
        gq = _imat_vec(mm, gp)
        for z in rule.Z0:
            proposals.add(tuple(a + b for a, b in zip(gq, z)))
    points, flags = [], []
    for gc in sorted(proposals):
        x = vec_add(scheme.star(gc), t_succ)
        verdict = w.member(x)
        if verdict == "undetermined":
            flags.append((gc, 0, "undetermined"))
            continue
        if verdict == "outside":  # pragma: no cover - children stay inside
            raise RuntimeError("internal: proposed child escaped the window")
        in_margin = (_norm2(scheme.project_phys(gc)) - r2).sign() <= 0
        if not in_margin:
            flags.append((gc, 0, "provisional"))
            continue
        claimant = None
        undecided = False
        for z in rule.claim_order:
            y = mat_mul_vec(w.Ainv, vec_sub(x, scheme.star(z)))
            v = w.member(y)
            if v == "inside":
                claimant = z
                break
            if v == "undetermined":
                undecided = True
                break
        if undecided:
            flags.append((gc, 0, "undetermined"))
            continue
        if claimant is None:  # pragma: no cover - the generator claims
            raise RuntimeError("internal: no claimant for an in-window child")
        parent = tuple(a - b for a, b in zip(gc, claimant))
        parent = tuple(int(x) for x in _imat_vec(_imat_inv_frac(mm), parent))
        if parent not in pred_set:
            raise ValueError(
                f"child {gc} claims parent {parent}, which is missing from "
                "the predecessor"
            )
        points.append((gc, 0))
    points.sort()
    flags.sort()
    return PointSet(scheme, w, t_succ,
                    FieldScalar.rational(r_succ, scheme.D), points, flags)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerifyReport:
    """Outcome of one self-similarity check.

    ``radius`` is the exact radius on which the substituted pattern and the
    directly generated successor were compared (the smaller of the request
    and the certified radius); ``checked`` counts the compared positions and
    ``mismatches`` lists up to fifty differences as (kind, gamma, colour)
    with kind ``"missing"`` (generated but not produced by the rule) or
    ``"extra"`` (produced but not generated).
    """

    ok: bool
    radius: object
    checked: int
    mismatches: tuple

    def to_json(self):
        return {
            "ok": self.ok,
            "radius": self.radius.to_json(),
            "checked": self.checked,
            "mismatches": [
                {"kind": kind, "gamma": list(g), "colour": c}
                for kind, g, c in self.mismatches
            ],
        }


def verify_self_similarity(scheme, window, rule, t, R):
    """Check ``rule`` against direct generation at shift ``t``, radius ``R``.

    Generates the pattern at ``t``, substitutes once, and generates the
    successor pattern directly at the contracted shift; the two are compared
    exactly on the ball where both are certified.  The shift must be
    nonsingular at this radius for both patterns (boundary flags raise,
    since set comparison is meaningless with unresolved memberships).
    """
    _check_same_scheme(scheme, rule.scheme)
    pred = generate(scheme, window, t, R)
    if pred.flags:
        raise ValueError(
            "shift is singular at this radius; pick a nonsingular shift"
        )
    succ = apply_rule(rule, pred)
    direct = generate(scheme, window, succ.t, R)
    if direct.flags:
        raise ValueError(
            "contracted shift is singular at this radius; pick another shift"
        )
    radius = succ.R if (succ.R - direct.R).sign() <= 0 else direct.R
    r2 = radius * radius

    def ball(ps):
        out = set()
        for g, c in ps.points:
            if (_norm2(scheme.project_phys(g)) - r2).sign() <= 0:
                out.add((g, c))
        return out

    produced = ball(succ)
    generated = ball(direct)
    mism = []
    for g, c in sorted(generated - produced):
        mism.append(("missing", g, c))
    for g, c in sorted(produced - generated):
        mism.append(("extra", g, c))
    return VerifyReport(
        ok=not mism,
        radius=radius,
        checked=len(produced | generated),
        mismatches=tuple(mism[:50]),
    )


# ---------------------------------------------------------------------------
# least power fixing the local class


def lids_power(scheme, window, s, m=1):
    """Least multiple of ``m`` at which substitution fixes the local class.

    The pattern at shift ``s`` is locally indistinguishable from its image
    under the power-``l`` substitution exactly when the torus parameter
    returns to itself: ``(M^l - I)`` must carry the rational preimage of
    ``s`` into the lattice, and when ``s`` is singular (its orbit hits a
    window vertex) the power must additionally preserve orientation in
    internal space, since the reflected pattern of a singular shift differs
    from itself by a boundary choice.  The search terminates within twice
    the order of ``M^m`` modulo the denominator of the preimage.
    """
    reg = _window_region(window, scheme)
    m = int(m)
    if m < 1:
        raise ValueError("power must be a positive integer")
    d_field = scheme.D
    s = tuple(
        x if isinstance(x, FieldScalar) else FieldScalar.rational(x, d_field)
        for x in s
    )
    if len(s) != scheme.n:
        raise ValueError("shift must be an internal vector")
    q = _star_inverse(scheme, s)
    singular = False
    for v in window.vertices():
        qv = _star_inverse(scheme, v)
        if all((a - b).denominator == 1 for a, b in zip(q, qv)):
            singular = True
            break
    n = 1
    for x in q:
        n = n * x.denominator // math.gcd(n, x.denominator)
    mm = _imat_pow(scheme.M, m)
    det_neg = mat_det(scheme.A_mat).sign() < 0
    cap = 2 * _mat_order_mod(mm, n) + 2
    cur = mm
    for j in range(1, cap + 1):
        power = m * j
        image = _imat_vec(cur, q)
        if all((a - b).denominator == 1 for a, b in zip(image, q)):
            if not singular or not det_neg or power % 2 == 0:
                return power
        cur = _imat_mul(cur, mm)
    raise BoundExceededError(  # pragma: no cover - the orbit is periodic
        f"no return of the torus parameter within {cap} steps"
    )


# ---------------------------------------------------------------------------
# symmetries


@dataclass(frozen=True)
class SymmetryResult:
    """Outcome of a pattern-family symmetry test.

    ``symmetric`` says whether the internal image of the window is a
    translate of the window, in which case the lattice automorphism permutes
    the shifted patterns of the family.  ``shift`` is the exact internal
    translation; ``lattice_shift`` its lattice preimage when that happens to
    be integral (then the automorphism maps each pattern onto a translate of
    itself, not merely onto a sibling).  ``internal`` is the induced action
    on internal space.
    """

    symmetric: bool
    shift: tuple | None
    lattice_shift: tuple | None
    internal: tuple

    def to_json(self):
        return {
            "symmetric": self.symmetric,
            "shift": None if self.shift is None else [
                x.to_json() for x in self.shift
            ],
            "lattice_shift": None if self.lattice_shift is None else list(
                self.lattice_shift
            ),
            "internal": [[x.to_json() for x in row] for row in self.internal],
        }


def symmetry_check(scheme, window, S):
    """Test a lattice automorphism as a symmetry of the pattern family.

    ``S`` must be an integer matrix of determinant +-1 that preserves the
    eigenspace splitting (else it does not act on the projections at all and
    a ValueError is raised).  Its induced internal action is applied to the
    window; when the image is an exact translate, every pattern of the
    family is mapped to the pattern at the translated shift.
    """
    reg = _window_region(window, scheme)
    k = scheme.k
    S = tuple(tuple(int(x) for x in row) for row in S)
    if len(S) != k or any(len(row) != k for row in S):
        raise ValueError(f"expected a {k}x{k} integer matrix")
    if abs(_imat_det(S)) != 1:
        raise ValueError("the matrix must be a lattice automorphism "
                         "(determinant +-1)")
    for basis, proj, name in (
        (scheme.int_basis, scheme.proj_phys, "internal"),
        (scheme.phys_basis, scheme.proj_int, "physical"),
    ):
        for b in basis:
            sb = tuple(
                sum(FieldScalar.rational(S[r][i], scheme.D) * b[i]
                    for i in range(k))
                for r in range(k)
            )
            if any(not x.is_zero() for x in mat_mul_vec(proj, sb)):
                raise ValueError(
                    f"the matrix does not preserve the {name} eigenspace"
                )
    s_int = tuple(
        tuple(
            sum(scheme.proj_int[r][i] *
                sum(FieldScalar.rational(S[i][j], scheme.D) *
                    scheme.int_basis[c][j] for j in range(k))
                for i in range(k))
            for c in range(scheme.n)
        )
        for r in range(scheme.n)
    )
    image = linear_image(reg, s_int[0][0] if reg.dim == 1 else s_int)
    shift = congruent_by_translation(reg, image)
    if shift is None:
        return SymmetryResult(False, None, None, s_int)
    lattice = _int_or_none(_star_inverse(scheme, shift))
    return SymmetryResult(True, tuple(shift), lattice, s_int)


# ---------------------------------------------------------------------------
# graph-directed IFS emission


def emit_gifs(rule, window=None):
    """Rewrite a rule as a graph-directed IFS on the deflated cells.

    Each cell, pulled back through the inflation, becomes a component
    ``U_i``; a map (i, j, z) contracts component ``U_j`` by the inflation
    and translates it by ``star(z)``, and is emitted whenever its image
    lands inside ``U_i``.  The emission is verified: every component must be
    exactly the union of its assigned images, which holds precisely when
    the cell system refines its own inflation (a RuleDerivationError
    otherwise).  The window is the union of the components' inflations
    along their clusters, so the returned system generates the window.
    """
    if window is None:
        window = rule.window
    elif not _same_window(window, rule.window):
        raise ValueError("rule and window do not match")
    if isinstance(window, IfsWindow):
        raise UnsupportedWindowError(
            "an IFS window is already its own function system"
        )
    scheme = rule.scheme
    m = rule.m
    am = _field_mat_pow(scheme.A_mat, m)
    am_inv = mat_inv(am)
    comps = [
        linear_image(c.region, am_inv[0][0] if rule.dim == 1 else am_inv)
        for c in rule.cells
    ]
    maps = []
    assigned = [[] for _ in comps]
    for i, u in enumerate(comps):
        for j, c in enumerate(rule.cells):
            for z in c.cluster:
                piece = translate(c.region, scheme.star(z))
                if subtract(piece, u).is_empty:
                    maps.append((i, j, z))
                    assigned[i].append(piece)
    for i, (u, pieces) in enumerate(zip(comps, assigned)):
        left = u
        for p in pieces:
            if left.is_empty:
                break
            left = subtract(left, p)
        if not left.is_empty:
            raise RuleDerivationError(
                "the cell system does not refine its own inflation; no "
                "graph-directed system on these components",
                {"component": i},
            )
    return {
        "m": m,
        "components": [region_to_json(u) for u in comps],
        "maps": [
            {"target": i, "source": j, "z": list(z)} for i, j, z in maps
        ],
        "verified": True,
    }
