"""Continued fractions of quadratic irrationals and 2x2 matrix synthesis.

Every real quadratic irrational has an eventually periodic continued
fraction.  :func:`cf_expand` computes it exactly by iterating the Gauss map
on the surd itself and detecting the first repeated state.  Going the other
way, :func:`cf_to_matrix` turns the periodic part into a hyperbolic matrix
M in GL(2,Z) fixing the line of slope theta = [0; period, period, ...],
together with the GL(2,Z) change of line accounting for the preperiod.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from .field import FieldScalar


class NotQuadraticIrrational(ValueError):
    """Raised when a CF expansion is requested for a rational number."""


class CFValidationError(ValueError):
    """Raised for malformed continued-fraction data."""


@dataclass(frozen=True)
class ContinuedFraction:
    """Eventually periodic CF: quotients are preperiod then period repeated."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    def validate(self) -> None:
        if not self.period:
            raise CFValidationError("continued fraction period must be nonempty")
        if any(not isinstance(a, int) or a < 1 for a in self.period):
            raise CFValidationError("period quotients must be positive integers")
        for i, a in enumerate(self.preperiod):
            if not isinstance(a, int) or (i > 0 and a < 1):
                raise CFValidationError(
                    "preperiod quotients after the first must be positive integers"
                )

    def terms(self, n: int) -> tuple[int, ...]:
        """The first n quotients of the full expansion."""
        out = list(self.preperiod)
        while len(out) < n:
            out.extend(self.period)
        return tuple(out[:n])


def cf_expand(alpha: FieldScalar) -> ContinuedFraction:
    """Exact eventually periodic continued fraction of a quadratic irrational.

    The period is detected by repetition of the exact surd state under the
    Gauss map x -> 1/(x - floor(x)), never numerically.
    """
    if alpha.is_rational():
        raise NotQuadraticIrrational(f"{alpha} is rational, not a quadratic irrational")
    quotients: list[int] = []
    seen: dict[FieldScalar, int] = {}
    x = alpha
    while x not in seen:
        seen[x] = len(quotients)
        q = x.floor()
        quotients.append(q)
        x = 1 / (x - q)
    start = seen[x]
    return ContinuedFraction(tuple(quotients[:start]), tuple(quotients[start:]))


def _square_free_decompose(n: int) -> tuple[int, int]:
    """n = s^2 * d with d squarefree; returns (s, d)."""
    s, d = 1, n
    p = 2
    while p * p <= d:
        while d % (p * p) == 0:
            d //= p * p
            s *= p
        p += 1
    return s, d


IntMat = tuple[tuple[int, int], tuple[int, int]]


def _imul(x: IntMat, y: IntMat) -> IntMat:
    return (
        (x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
        (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]),
    )


def _iinv_unimodular(m: IntMat) -> IntMat:
    (a, b), (c, d) = m
    det = a * d - b * c
    if abs(det) != 1:
        raise CFValidationError("matrix is not in GL(2,Z)")
    return ((d // det, -b // det), (-c // det, a // det))


def cf_value(cf: ContinuedFraction) -> FieldScalar:
    """The exact value of an eventually periodic continued fraction."""
    cf.validate()
    # Purely periodic tail t = [a0; a1, ..., a_{s-1}, a0, ...] satisfies the
    # Mobius fixed-point equation of the composed maps x -> a + 1/x.
    comp: IntMat = ((1, 0), (0, 1))
    for a in cf.period:
        comp = _imul(comp, ((a, 1), (1, 0)))
    (p, q), (r, s) = comp
    # t = (p t + q)/(r t + s):  r t^2 + (s - p) t - q = 0.
    disc = (s - p) * (s - p) + 4 * r * q
    sq, D = _square_free_decompose(disc)
    if D < 2:
        raise CFValidationError("periodic tail is not a quadratic irrational")
    t = FieldScalar(Fraction(p - s, 2 * r), Fraction(sq, 2 * r), D)
    if t < 1:  # purely periodic values exceed 1; take the other root
        t = FieldScalar(Fraction(p - s, 2 * r), Fraction(-sq, 2 * r), D)
    value = t
    for u in reversed(cf.preperiod):
        value = u + 1 / value
    return value


@dataclass(frozen=True)
class CFMatrixResult:
    """Outcome of the matrix synthesis for an eventually periodic CF.

    M fixes the line (1, slope) with 0 < slope < 1 (the purely periodic
    normalization of the input's line), with M (1, slope) = eigenvalue *
    (1, slope) and |eigenvalue| > 1.  T is the GL(2,Z) transform carrying
    that normalized line to the line of the original value.
    """

    M: IntMat
    T: IntMat
    slope: FieldScalar
    eigenvalue: FieldScalar


def cf_to_matrix(cf: ContinuedFraction) -> CFMatrixResult:
    """Hyperbolic M in GL(2,Z) fixing the slope line of the CF's periodic part.

    The period [a0, ..., a_{s-1}] gives M as the product of the blocks
    [[a, 1], [1, 0]]; the slope map of each block is x -> 1/(a + x), so M
    fixes the slope theta = [0; period repeated].  The preperiod is folded
    into the reported change-of-line transform T.
    """
    cf.validate()
    M: IntMat = ((1, 0), (0, 1))
    for a in cf.period:
        M = _imul(M, ((a, 1), (1, 0)))
    (m00, m01), (m10, m11) = M
    # Fixed slopes solve m01 x^2 + (m00 - m11) x - m10 = 0.
    disc = (m00 - m11) * (m00 - m11) + 4 * m01 * m10
    sq, D = _square_free_decompose(disc)
    if D < 2:
        raise CFValidationError("slope is not a quadratic irrational")
    slope = None
    for sgn in (1, -1):
        cand = FieldScalar(Fraction(m11 - m00, 2 * m01), Fraction(sgn * sq, 2 * m01), D)
        if FieldScalar.zero(D) < cand < FieldScalar.one(D):
            slope = cand
            break
    if slope is None:  # pragma: no cover - impossible for valid periods
        raise CFValidationError("no fixed slope in (0,1)")
    eigenvalue = m00 + m01 * slope
    if abs(eigenvalue) <= 1:  # pragma: no cover - positive products expand
        M = _iinv_unimodular(M)
        eigenvalue = 1 / eigenvalue
    # T carries line(slope) to line(original value):  the preperiod factors
    # [[0,1],[1,u]] realize x -> u + 1/x on lines, and the closing swap
    # accounts for the purely periodic value being 1/slope.
    T: IntMat = ((1, 0), (0, 1))
    for u in cf.preperiod:
        T = _imul(T, ((0, 1), (1, u)))
    T = _imul(T, ((0, 1), (1, 0)))
    return CFMatrixResult(M=M, T=T, slope=slope, eigenvalue=eigenvalue)
