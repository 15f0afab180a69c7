"""Windows over a cut-and-project scheme.

A window is a finite list of coloured, compact, topologically regular regions
in internal space.  This module derives the window's face data (supporting
hyperplanes, their linear subspaces, vertices), evaluates acceptance domains
of finite in/out constraints, partitions the window by the r-patch its points
realize, and decides the two structural properties behind substitutionality:
invariance of the supporting subspaces under the internal contraction A, and
rationality of the vertex differences over the projected lattice.

It also builds IFS-attractor windows: given the contraction A and a finite
set Z of lattice vectors, the unique compact solution of

    W = union over z in Z of  A(W) + star(z)

is a window candidate.  Its exact membership oracle brackets the attractor
between an escape ball (certified outside) and an optional core region K with
K contained in X(K) (certified inside, since such a K always lies inside the
attractor); everything in between is reported as undetermined rather than
guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import isqrt

from .field import (
    FieldScalar,
    SingularMatrixError,
    mat_inv,
    mat_mul,
    mat_mul_vec,
    solve_rational,
)
from .lattice_enum import lattice_points
from .region import (
    Region1D,
    Region2D,
    _line_key,
    arrangement_cells,
    boundary_segments,
    linear_image,
    minkowski,
    reg_bool,
    region_eq,
    region_from_json,
    region_to_json,
    subtract,
    translate,
)

_BITS = 48

__all__ = [
    "Window",
    "Indicator",
    "FdResult",
    "RationalityResult",
    "IfsWindow",
    "InvalidIfsError",
    "acceptance_domain",
    "acceptance_partition",
    "fd_check",
    "rationality_check",
    "ifs_attractor",
    "window_to_json",
    "window_from_json",
    "ifs_to_json",
    "ifs_from_json",
]


class InvalidIfsError(ValueError):
    """The data does not define a usable contractive IFS window."""


# ---------------------------------------------------------------------------
# windows


class Window:
    """Coloured list of regions in internal space, with derived face data."""

    __slots__ = ("components", "_union", "_cyl")

    def __init__(self, components):
        comps = [(int(colour), region) for colour, region in components]
        if not comps:
            raise ValueError("a window needs at least one component")
        if len({region.dim for _, region in comps}) != 1:
            raise ValueError("window components must share one dimension")
        colours = [c for c, _ in comps]
        if len(set(colours)) != len(colours):
            raise ValueError("duplicate colour in window components")
        comps.sort(key=lambda t: t[0])
        object.__setattr__(self, "components", tuple(comps))
        object.__setattr__(self, "_union", None)
        object.__setattr__(self, "_cyl", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("Window is immutable")

    def __repr__(self):
        return f"Window({len(self.components)} components, dim={self.dim})"

    @classmethod
    def single(cls, region, colour=0):
        return cls(((colour, region),))

    @classmethod
    def canonical(cls, scheme, colour=0):
        """The star image of the unit cube: hull of star(v), v in {0,1}^k."""
        pts = [scheme.star(v) for v in product((0, 1), repeat=scheme.k)]
        if scheme.n == 1:
            vals = [p[0] for p in pts]
            region = Region1D.from_pairs([(min(vals), max(vals))])
        else:
            region = Region2D.from_convex(pts)
        return cls.single(region, colour)

    @property
    def dim(self):
        return self.components[0][1].dim

    @property
    def is_empty(self):
        return all(region.is_empty for _, region in self.components)

    def colours(self):
        return tuple(c for c, _ in self.components)

    def region_of(self, colour):
        for c, region in self.components:
            if c == colour:
                return region
        raise ValueError(f"window has no colour {colour}")

    def union_region(self):
        if self._union is None:
            acc = self.components[0][1]
            for _, region in self.components[1:]:
                acc = reg_bool("or", acc, region)
            object.__setattr__(self, "_union", acc)
        return self._union

    def cylinder(self):
        """The difference body W - W containing every admissible star value."""
        if self._cyl is None:
            W = self.union_region()
            object.__setattr__(self, "_cyl", minkowski(W, _reflect(W)))
        return self._cyl

    def vertices(self):
        """All vertices of all components, as sorted internal-space points."""
        pts = set()
        for _, region in self.components:
            if region.dim == 1:
                for lo, hi in region.intervals:
                    pts.add((lo,))
                    pts.add((hi,))
            else:
                for v, w in boundary_segments(region):
                    pts.add(v)
                    pts.add(w)
        return tuple(sorted(pts))

    def hyperplanes(self):
        """Supporting hyperplanes: boundary points (1D) or (normal, offset)
        pairs of boundary edge lines (2D), canonicalized and sorted."""
        if self.dim == 1:
            return tuple(sorted({v[0] for v in self.vertices()}))
        keys = set()
        for _, region in self.components:
            for v, w in boundary_segments(region):
                key, _ = _line_key(v, w)
                keys.add(key)
        return tuple(sorted(keys))

    def subspaces(self):
        """Linear subspaces parallel to the supporting hyperplanes, as
        canonical normals (first nonzero coordinate scaled to 1)."""
        if self.dim == 1:
            return ()
        return tuple(sorted({n for n, _ in self.hyperplanes()}))

    def to_json(self):
        return window_to_json(self)

    @classmethod
    def from_json(cls, data):
        return window_from_json(data)


def _reflect(region):
    if region.is_empty:
        return region
    if region.dim == 1:
        lo = region.intervals[0][0]
        return linear_image(region, -FieldScalar(1, 0, lo.D))
    D = region.polygons[0][0][0].D
    one = FieldScalar(1, 0, D)
    zero = FieldScalar(0, 0, D)
    return linear_image(region, ((-one, zero), (zero, -one)))


def _empty_like(region):
    return Region1D() if region.dim == 1 else Region2D(())


def window_to_json(window):
    return {
        "components": [
            {"colour": c, "region": region_to_json(region)}
            for c, region in window.components
        ]
    }


def window_from_json(data):
    return Window(
        tuple(
            (comp["colour"], region_from_json(comp["region"]))
            for comp in data["components"]
        )
    )


# ---------------------------------------------------------------------------
# indicators and acceptance domains


@dataclass(frozen=True)
class Indicator:
    """Finite in/out constraints: per colour, lattice translates that must be
    present (in) or absent (out) around a point.

    Cylinder membership of each vector is resolved at construction: an "in"
    vector whose star value falls outside W - W makes every acceptance domain
    empty (flagged via ``empty``), while such an "out" vector is vacuous and
    is dropped.
    """

    entries: tuple  # (colour, gamma, star, is_in)
    empty: bool

    @classmethod
    def build(cls, scheme, window, gamma_in=(), gamma_out=()):
        cyl = window.cylinder()
        entries = []
        empty = False
        for colour, g in _colourwise(gamma_in):
            window.region_of(colour)  # validates the colour
            s = scheme.star(g)
            if not cyl.contains(s):
                empty = True
            entries.append((colour, g, s, True))
        for colour, g in _colourwise(gamma_out):
            window.region_of(colour)
            s = scheme.star(g)
            if not cyl.contains(s):
                continue
            entries.append((colour, g, s, False))
        return cls(tuple(entries), empty)


def _colourwise(spec):
    if isinstance(spec, dict):
        for colour in sorted(spec):
            for g in spec[colour]:
                yield int(colour), tuple(int(c) for c in g)
    else:
        for g in spec:
            yield 0, tuple(int(c) for c in g)


def acceptance_domain(window, ind):
    """The set of internal positions realizing the indicator: the regularized
    intersection of W with each translate W_i - star(gamma) for "in" vectors,
    minus each such translate for "out" vectors.  Empty is a valid value."""
    W = window.union_region()
    if ind.empty:
        return _empty_like(W)
    acc = W
    for colour, _, s, is_in in ind.entries:
        shifted = translate(window.region_of(colour), tuple(-x for x in s))
        acc = reg_bool("and", acc, shifted) if is_in else subtract(acc, shifted)
    return acc


def acceptance_partition(window, scheme, r, max_cutters=64):
    """Cells of W on which the r-patch is constant, each labelled by it.

    Cutters are the translates W_i - star(gamma) over all lattice vectors in
    the cylinder with physical norm at most r; a cell's label lists the
    (gamma, colour) pairs its interior points accept.
    """
    pts = lattice_points(scheme, r, window.cylinder())
    cutters = []
    labels = []
    for g in pts:
        s = scheme.star(g)
        shift = tuple(-x for x in s)
        for colour in window.colours():
            cutters.append(translate(window.region_of(colour), shift))
            labels.append((g, colour))
    cells = arrangement_cells(window.union_region(), cutters, max_cutters)
    return [
        (cell, tuple(lab for lab, sg in zip(labels, cell.signs) if sg))
        for cell in cells
    ]


# ---------------------------------------------------------------------------
# FD-invariance


@dataclass(frozen=True)
class FdResult:
    invariant: bool
    order: int | None
    witness: tuple | None


def _canon_normal(v):
    lead = v[0] if not v[0].is_zero() else v[1]
    return (v[0] / lead, v[1] / lead)


def fd_check(window, scheme):
    """Does A permute the supporting subspaces? If so, with what order?

    1D windows always pass with order 1: the only supporting subspace is the
    trivial one.  In 2D each subspace is spanned by an edge direction; A acts
    on directions, and the result is the order of the induced permutation, or
    a witness subspace that A maps outside the collection.
    """
    if window.dim == 1:
        return FdResult(True, 1, None)
    subs = window.subspaces()
    if not subs:
        return FdResult(True, 1, None)
    A = scheme.A_mat
    sset = set(subs)
    succ = {}
    for nrm in subs:
        u = (-nrm[1], nrm[0])  # direction spanning the subspace
        au = (A[0][0] * u[0] + A[0][1] * u[1], A[1][0] * u[0] + A[1][1] * u[1])
        img = _canon_normal((au[1], -au[0]))
        if img not in sset:
            return FdResult(False, None, nrm)
        succ[nrm] = img
    order = 1
    seen = set()
    for start in subs:
        if start in seen:
            continue
        length = 0
        cur = start
        while True:
            cur = succ[cur]
            length += 1
            seen.add(cur)
            if cur == start:
                break
        order = math.lcm(order, length)
    return FdResult(True, order, None)


# ---------------------------------------------------------------------------
# rationality


@dataclass(frozen=True)
class RationalityResult:
    rational: bool
    N: int | None
    witness: tuple | None


def rationality_check(window, scheme):
    """Is every vertex difference a rational combination of projected basis
    vectors?  Returns the lcm N of the denominators, so differences lie in
    (1/N) of the projected lattice.

    Splitting each field coordinate into its rational and sqrt(D) parts turns
    v - v0 = sum_i q_i star(e_i) into a rational linear system; any solution
    certifies membership.
    """
    verts = window.vertices()
    if len(verts) <= 1:
        return RationalityResult(True, 1, None)
    rows = []
    for j in range(scheme.n):
        rows.append([scheme.proj_int[j][i].a for i in range(scheme.k)])
        rows.append([scheme.proj_int[j][i].b for i in range(scheme.k)])
    v0 = verts[0]
    denom = 1
    for v in verts[1:]:
        rhs = []
        for j in range(scheme.n):
            d = v[j] - v0[j]
            rhs.extend([d.a, d.b])
        q = solve_rational(rows, rhs)
        if q is None:
            return RationalityResult(False, None, (v, v0))
        for qi in q:
            denom = math.lcm(denom, qi.denominator)
    return RationalityResult(True, denom, None)


# ---------------------------------------------------------------------------
# IFS attractor windows


def _sqrt_upper(q):
    """A rational upper bound on sqrt(q), q a nonnegative Fraction."""
    if q < 0:
        raise ValueError("negative radicand")
    num = q.numerator * q.denominator
    s = isqrt(num)
    if s * s < num:
        s += 1
    return Fraction(s, q.denominator)


def _spectral_upper(A):
    """A certified rational upper bound on the spectral radius of A."""
    n = len(A)
    if all(A[i][j].is_zero() for i in range(n) for j in range(n) if i != j):
        return max(abs(A[i][i]).upper_bound(_BITS) for i in range(n))
    if n == 2 and A[0][0] == A[1][1] and (A[0][1] + A[1][0]).is_zero():
        m2 = A[0][0] * A[0][0] + A[0][1] * A[0][1]
        return _sqrt_upper(m2.upper_bound(_BITS))
    norm1 = Fraction(0)
    norminf = Fraction(0)
    for i in range(n):
        rowsum = abs(A[i][0])
        colsum = abs(A[0][i])
        for j in range(1, n):
            rowsum = rowsum + abs(A[i][j])
            colsum = colsum + abs(A[j][i])
        norminf = max(norminf, rowsum.upper_bound(_BITS))
        norm1 = max(norm1, colsum.upper_bound(_BITS))
    return _sqrt_upper(norm1 * norminf)


def _norm2(x):
    acc = x[0] * x[0]
    for c in x[1:]:
        acc = acc + c * c
    return acc


class IfsWindow:
    """Attractor of x -> A(x) + star(z), z in Z, with an exact membership
    oracle and a float renderer."""

    __slots__ = (
        "A_mat", "Ainv", "Z", "z_stars", "dim", "D", "r0", "core",
        "cover_certified", "depth", "_r0sq",
    )

    def __init__(self, **kw):
        for name in ("A_mat", "Ainv", "Z", "z_stars", "dim", "D", "r0",
                     "core", "cover_certified", "depth"):
            object.__setattr__(self, name, kw[name])
        object.__setattr__(self, "_r0sq", kw["r0"] * kw["r0"])

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("IfsWindow is immutable")

    def __repr__(self):
        tag = "certified" if self.cover_certified else "uncertified"
        return f"IfsWindow({len(self.Z)} maps, dim={self.dim}, {tag})"

    def image(self, region):
        """One application of the Hutchinson operator X."""
        acc = None
        for s in self.z_stars:
            piece = translate(linear_image(region, self.A_mat), s)
            acc = piece if acc is None else reg_bool("or", acc, piece)
        return acc

    def member(self, x, depth=None):
        """Exact membership verdict: inside, outside, or undetermined.

        Outside is certified by escape from the containment ball under
        repeated preimages; inside by reaching the core region along a
        preimage path that stays in the ball.  Verdicts are monotone in
        depth: they refine but never flip.
        """
        if depth is None:
            depth = self.depth
        return self._member(tuple(x), depth)

    def _member(self, x, depth):
        if _norm2(x) > self._r0sq:
            return "outside"
        if self.core is not None and self.core.contains(x):
            return "inside"
        if depth == 0:
            return "undetermined"
        all_out = True
        for s in self.z_stars:
            y = mat_mul_vec(self.Ainv, tuple(a - b for a, b in zip(x, s)))
            v = self._member(y, depth - 1)
            if v == "inside":
                return "inside"
            if v != "outside":
                all_out = False
        return "outside" if all_out else "undetermined"

    def _seed(self):
        if self.cover_certified:
            return self.core
        r = FieldScalar(self.r0, 0, self.D)
        if self.dim == 1:
            return Region1D.from_pairs([(-r, r)])
        return Region2D.rect((-r, -r), (r, r))

    def render(self, depth=None, cap=4096):
        """Float pieces of X^depth(seed): intervals (1D) or polygons (2D).

        With a certified core the seed is the core (an inner approximation
        growing towards the attractor); otherwise it is the containment box
        (an outer approximation shrinking onto it).
        """
        if depth is None:
            depth = self.depth
        shifts = {tuple(FieldScalar(0, 0, self.D) for _ in range(self.dim))}
        power = tuple(
            tuple(
                FieldScalar(int(i == j), 0, self.D) for j in range(self.dim)
            )
            for i in range(self.dim)
        )
        for _ in range(depth):
            shifts = {
                tuple(a + b for a, b in zip(mat_mul_vec(self.A_mat, t), s))
                for t in shifts
                for s in self.z_stars
            }
            if len(shifts) > cap:
                raise ValueError(
                    f"render would exceed {cap} pieces at this depth"
                )
            power = mat_mul(self.A_mat, power)
        piece0 = linear_image(self._seed(), power)
        out = []
        for t in sorted(shifts):
            piece = translate(piece0, t)
            if piece.dim == 1:
                for lo, hi in piece.intervals:
                    out.append((lo.to_float(), hi.to_float()))
            else:
                for pts in piece.polygons:
                    out.append([(p[0].to_float(), p[1].to_float()) for p in pts])
        return out

    def to_json(self):
        return ifs_to_json(self)


def _auto_core(A, stars, dim):
    """Candidate core: 1D closed-form fixed interval; 2D hull of the map
    fixed points (exact for self-affine tile covers, whose extreme points
    are fixed points of the vertex maps)."""
    if dim == 1:
        lam = A[0][0]
        vals = [s[0] for s in stars]
        mnc, mxc = min(vals), max(vals)
        one = FieldScalar(1, 0, lam.D)
        if lam.sign() > 0:
            lo, hi = mnc / (one - lam), mxc / (one - lam)
        else:
            lo = (lam * mxc + mnc) / (one - lam * lam)
            hi = (lam * mnc + mxc) / (one - lam * lam)
        if lo < hi:
            return Region1D.from_pairs([(lo, hi)])
        return None
    one = FieldScalar(1, 0, A[0][0].D)
    ia = ((one - A[0][0], -A[0][1]), (-A[1][0], one - A[1][1]))
    try:
        inv = mat_inv(ia)
    except SingularMatrixError:
        return None
    region = Region2D.from_convex([mat_mul_vec(inv, s) for s in stars])
    return None if region.is_empty else region


def ifs_attractor(A_mat, Z, scheme, core="auto", depth=12):
    """Build the IFS window for contraction A and translate set Z.

    The attractor always exists for contracting A; what varies is how much
    of it can be certified.  ``core`` may be "auto" (search for a region K
    with K inside X(K), which then certifies "inside" verdicts), None (no
    inside certification), or an explicit region, which is checked exactly
    and rejected with InvalidIfsError if the cover condition fails.
    """
    if not Z:
        raise InvalidIfsError("Z must be nonempty")
    dim = len(A_mat)
    rho = _spectral_upper(A_mat)
    if rho >= 1:
        raise InvalidIfsError(
            f"A is not certified contracting (spectral bound {rho})"
        )
    try:
        ainv = mat_inv(A_mat)
    except SingularMatrixError as exc:
        raise InvalidIfsError("A must be invertible") from exc
    zt = tuple(tuple(int(c) for c in z) for z in Z)
    stars = tuple(scheme.star(z) for z in zt)
    zmax = Fraction(0)
    for s in stars:
        zmax = max(zmax, _sqrt_upper(_norm2(s).upper_bound(_BITS)))
    r0 = zmax / (1 - rho)

    def image(region):
        acc = None
        for s in stars:
            piece = translate(linear_image(region, A_mat), s)
            acc = piece if acc is None else reg_bool("or", acc, piece)
        return acc

    core_region = None
    certified = False
    if core == "auto":
        cand = _auto_core(A_mat, stars, dim)
        if cand is not None and subtract(cand, image(cand)).is_empty:
            core_region, certified = cand, True
    elif core is not None:
        if core.is_empty or not subtract(core, image(core)).is_empty:
            raise InvalidIfsError("supplied core fails the cover condition")
        core_region, certified = core, True
    return IfsWindow(
        A_mat=A_mat, Ainv=ainv, Z=zt, z_stars=stars, dim=dim, D=scheme.D,
        r0=r0, core=core_region, cover_certified=certified, depth=int(depth),
    )


def ifs_to_json(ifs):
    return {"Z": [list(z) for z in ifs.Z], "depth": ifs.depth}


def ifs_from_json(data, scheme, core="auto"):
    return ifs_attractor(
        scheme.A_mat,
        [tuple(z) for z in data["Z"]],
        scheme,
        core=core,
        depth=int(data["depth"]),
    )
