"""Certified enumeration of lattice points under exact projection constraints.

``lattice_points`` returns every lattice vector whose physical projection has
Euclidean norm at most ``r`` and whose internal projection lies in a given
region.  The search is organised as a depth-first walk over the integer
coordinates with interval propagation: all intervals are floats widened
outward past every rounding error, so pruning never discards a feasible
prefix.  Each surviving candidate is then accepted or rejected by a certified
float margin when the decision is clear, and by exact field arithmetic when
it is not, so the result is complete and exact.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor

from .field import FieldScalar

_BITS = 48

__all__ = ["lattice_points"]


def _region_box(region):
    """Per-coordinate closed bounds of a region, or None if empty."""
    if region.is_empty:
        return None
    if region.dim == 1:
        return ((region.intervals[0][0], region.intervals[-1][1]),)
    xs = [p[0] for pts in region.polygons for p in pts]
    ys = [p[1] for pts in region.polygons for p in pts]
    return ((min(xs), max(xs)), (min(ys), max(ys)))


def _pad(v):
    """Outward widening dominating accumulated float error at scale |v|."""
    return 1e-9 * (1.0 + abs(v))


def _fbracket(x):
    """Padded float interval certainly containing the exact scalar x."""
    lo = float(x.lower_bound(_BITS))
    hi = float(x.upper_bound(_BITS))
    return lo - _pad(lo), hi + _pad(hi)


def _imul(c, g):
    """Product of two float intervals, widened outward."""
    vals = (c[0] * g[0], c[0] * g[1], c[1] * g[0], c[1] * g[1])
    lo, hi = min(vals), max(vals)
    return lo - _pad(lo), hi + _pad(hi)


def lattice_points(scheme, r_phys, int_region):
    """All gamma in Z^k with ||gamma_phys|| <= r and star(gamma) in the region.

    Membership is closed on both constraints and the output is sorted
    lexicographically.  ``r_phys`` may be a FieldScalar, Fraction, or int.
    """
    box = _region_box(int_region)
    if box is None:
        return []
    r = r_phys if isinstance(r_phys, FieldScalar) else FieldScalar(
        Fraction(r_phys), 0, scheme.D
    )
    if r.sign() < 0:
        return []
    r2 = r * r
    r2lo, r2hi = _fbracket(r2)
    k = scheme.k
    d = scheme.d

    # Float constraint intervals: each physical coordinate is bounded by
    # [-r, r] (a coordinate cannot exceed the Euclidean norm), each internal
    # coordinate by the region's bounding box.
    _, r_up = _fbracket(r)
    coord_bounds = [(-r_up, r_up)] * d
    for lo, hi in box:
        coord_bounds.append((_fbracket(lo)[0], _fbracket(hi)[1]))

    # Linear forms: row . gamma must land in the corresponding bound, with
    # outward-widened float brackets for the irrational coefficients.
    rows = list(scheme.proj_phys) + list(scheme.proj_int)
    forms = []
    for row, (flo, fhi) in zip(rows, coord_bounds):
        forms.append(([_fbracket(c) for c in row], flo, fhi))

    # Global integer range per coordinate: gamma = sum_j c_j * basis_j with
    # the eigencoordinates c_j confined to the constraint box.
    bases = list(scheme.phys_basis) + list(scheme.int_basis)
    granges = []
    for i in range(k):
        lo = hi = 0.0
        for j in range(k):
            plo, phi = _imul(_fbracket(bases[j][i]), coord_bounds[j])
            lo, hi = lo + plo, hi + phi
        if lo > hi:
            return []
        granges.append((ceil(lo), floor(hi)))

    # Suffix interval of each form over coordinates j..k-1.
    suffix = [[(0.0, 0.0)] * len(forms) for _ in range(k + 1)]
    for j in range(k - 1, -1, -1):
        for f, (coeffs, _, _) in enumerate(forms):
            slo, shi = suffix[j + 1][f]
            plo, phi = _imul(coeffs[j], granges[j])
            suffix[j][f] = (slo + plo, shi + phi)

    out = []
    gamma = [0] * k

    def exact_norm_ok():
        phys = scheme.project_phys(gamma)
        n2 = phys[0] * phys[0]
        for x in phys[1:]:
            n2 = n2 + x * x
        return n2 <= r2

    def leaf_ok(partial):
        # At a leaf, partial[f] is a certified interval for form f, so both
        # constraints can usually be decided without exact arithmetic.
        n2lo = n2hi = 0.0
        for f in range(d):
            plo, phi = partial[f]
            sq_lo, sq_hi = plo * plo, phi * phi
            if not plo <= 0.0 <= phi:
                n2lo += min(sq_lo, sq_hi)
            n2hi += max(sq_lo, sq_hi)
        if n2lo > r2hi:
            return False
        norm_sure = n2hi <= r2lo
        mids = []
        hw = 0.0
        for f in range(d, k):
            plo, phi = partial[f]
            mids.append(0.5 * (plo + phi))
            hw = max(hw, 0.5 * (phi - plo))
        if int_region.dim == 1:
            m, tol = int_region._float_margin(mids[0], hw)
        else:
            m, tol = int_region._float_margin(tuple(mids), hw)
        if m < -tol:
            return False
        if norm_sure and m > tol:
            return True
        if not norm_sure and not exact_norm_ok():
            return False
        return int_region.contains(scheme.star(gamma))

    def walk(j, partial):
        if j == k:
            if leaf_ok(partial):
                out.append(tuple(gamma))
            return
        glo, ghi = granges[j]
        # Narrow the range using each form: the remaining budget for
        # coefficient * g is an interval; divide conservatively.
        for f, (coeffs, flo, fhi) in enumerate(forms):
            clo, chi = coeffs[j]
            if clo <= 0.0 <= chi:
                continue
            slo, shi = suffix[j + 1][f]
            plo, phi = partial[f]
            nlo = flo - phi - shi
            nhi = fhi - plo - slo
            if nlo > nhi:
                return
            ratios = (nlo / clo, nlo / chi, nhi / clo, nhi / chi)
            rmin, rmax = min(ratios), max(ratios)
            glo = max(glo, ceil(rmin - _pad(rmin)))
            ghi = min(ghi, floor(rmax + _pad(rmax)))
        for g in range(glo, ghi + 1):
            nxt = []
            dead = False
            for f, (coeffs, flo, fhi) in enumerate(forms):
                plo, phi = _imul(coeffs[j], (float(g), float(g)))
                plo, phi = partial[f][0] + plo, partial[f][1] + phi
                slo, shi = suffix[j + 1][f]
                if plo + slo > fhi or phi + shi < flo:
                    dead = True
                    break
                nxt.append((plo, phi))
            if dead:
                continue
            gamma[j] = g
            walk(j + 1, nxt)
        gamma[j] = 0

    walk(0, [(0.0, 0.0)] * len(forms))
    return out
