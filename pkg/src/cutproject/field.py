"""Exact arithmetic in real quadratic fields Q(sqrt(D)).

A :class:`FieldScalar` represents a + b*sqrt(D) with rational a, b and a
positive squarefree integer D.  All predicates (signs, comparisons, floors)
are decided by rational sign analysis, never by floating point; floats appear
only in the convenience :meth:`FieldScalar.to_float` used for rendering.

Vectors and matrices over the field are plain tuples of scalars (tuples of
row tuples for matrices); the module-level functions below give them exact
linear algebra up to the small dimensions (k <= 4) used by schemes.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from math import isqrt


class FieldError(ArithmeticError):
    """Base class for exact-field errors."""


class FieldMismatchError(FieldError):
    """Raised when two scalars from different quadratic fields meet."""


class SingularMatrixError(FieldError):
    """Raised when a matrix inverse/solve is requested for det = 0."""


def _is_squarefree(D: int) -> bool:
    for p in range(2, isqrt(D) + 1):
        if D % (p * p) == 0:
            return False
    return True


def _sign_fraction(q: Fraction) -> int:
    return (q > 0) - (q < 0)


class FieldScalar:
    """An element a + b*sqrt(D) of Q(sqrt(D)), immutable."""

    __slots__ = ("a", "b", "D")

    def __init__(self, a, b=0, D: int | None = None):
        if D is None:
            raise ValueError("FieldScalar requires the field discriminant D")
        if not isinstance(D, int) or D < 2 or not _is_squarefree(D):
            raise ValueError(f"D must be a squarefree integer >= 2, got {D!r}")
        object.__setattr__(self, "a", Fraction(a))
        object.__setattr__(self, "b", Fraction(b))
        object.__setattr__(self, "D", D)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("FieldScalar is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, D: int) -> "FieldScalar":
        return cls(0, 0, D)

    @classmethod
    def one(cls, D: int) -> "FieldScalar":
        return cls(1, 0, D)

    @classmethod
    def rational(cls, q, D: int) -> "FieldScalar":
        return cls(Fraction(q), 0, D)

    @classmethod
    def sqrtD(cls, D: int) -> "FieldScalar":
        return cls(0, 1, D)

    # -- coercion ---------------------------------------------------------

    def _pair(self, other):
        """Coerce (self, other) into a common field; rationals lift freely."""
        if isinstance(other, (int, Fraction)):
            return self, FieldScalar(other, 0, self.D)
        if not isinstance(other, FieldScalar):
            return None
        if other.D == self.D:
            return self, other
        if other.b == 0:
            return self, FieldScalar(other.a, 0, self.D)
        if self.b == 0:
            return FieldScalar(self.a, 0, other.D), other
        raise FieldMismatchError(
            f"cannot mix sqrt({self.D}) and sqrt({other.D}) elements"
        )

    # -- predicates -------------------------------------------------------

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def sign(self) -> int:
        """Exact sign in {-1, 0, 1}, by comparing a^2 against b^2*D."""
        a, b = self.a, self.b
        if b == 0:
            return _sign_fraction(a)
        if a == 0:
            return _sign_fraction(b)
        sa, sb = _sign_fraction(a), _sign_fraction(b)
        if sa == sb:
            return sa
        # Opposite signs: the larger of |a| and |b|*sqrt(D) decides.
        diff = a * a - b * b * self.D
        if diff == 0:
            # Would make sqrt(D) rational; impossible for squarefree D >= 2.
            raise FieldError("internal: a^2 == b^2 D for irrational sqrt(D)")
        return sa if diff > 0 else sb

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        x, y = pair
        return FieldScalar(x.a + y.a, x.b + y.b, x.D)

    __radd__ = __add__

    def __sub__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        x, y = pair
        return FieldScalar(x.a - y.a, x.b - y.b, x.D)

    def __rsub__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        x, y = pair
        return FieldScalar(y.a - x.a, y.b - x.b, x.D)

    def __neg__(self):
        return FieldScalar(-self.a, -self.b, self.D)

    def __mul__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        x, y = pair
        return FieldScalar(
            x.a * y.a + x.b * y.b * x.D,
            x.a * y.b + x.b * y.a,
            x.D,
        )

    __rmul__ = __mul__

    def inverse(self) -> "FieldScalar":
        norm = self.a * self.a - self.b * self.b * self.D
        if self.is_zero():
            raise ZeroDivisionError("division by zero FieldScalar")
        return FieldScalar(self.a / norm, -self.b / norm, self.D)

    def __truediv__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        x, y = pair
        return x * y.inverse()

    def __rtruediv__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        x, y = pair
        return y * x.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = FieldScalar.one(self.D)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __abs__(self):
        return self if self.sign() >= 0 else -self

    def conjugate(self) -> "FieldScalar":
        """The Galois conjugate a - b*sqrt(D)."""
        return FieldScalar(self.a, -self.b, self.D)

    # -- comparisons ------------------------------------------------------

    def _cmp(self, other) -> int:
        pair = self._pair(other)
        if pair is None:
            raise TypeError(f"cannot compare FieldScalar with {type(other).__name__}")
        x, y = pair
        return (x - y).sign()

    def __eq__(self, other):
        if isinstance(other, FieldScalar):
            if self.b == 0 and other.b == 0:
                return self.a == other.a
            if self.D != other.D:
                return False
            return self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.D))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    # -- rounding and bounds ----------------------------------------------

    def lower_bound(self, bits: int = 40) -> Fraction:
        """A rational lower bound, within 2^-(bits-1) of the exact value."""
        lo, _ = self._bracket(bits)
        return lo

    def upper_bound(self, bits: int = 40) -> Fraction:
        """A rational upper bound, within 2^-(bits-1) of the exact value."""
        _, hi = self._bracket(bits)
        return hi

    def _bracket(self, bits: int) -> tuple[Fraction, Fraction]:
        if self.b == 0:
            return self.a, self.a
        scale_bits = bits + (abs(self.b.numerator) // self.b.denominator).bit_length()
        s = 1 << scale_bits
        r = isqrt(self.D * s * s)
        root_lo, root_hi = Fraction(r, s), Fraction(r + 1, s)
        if self.b > 0:
            return self.a + self.b * root_lo, self.a + self.b * root_hi
        return self.a + self.b * root_hi, self.a + self.b * root_lo

    def floor(self) -> int:
        n = math.floor(self.lower_bound())
        while self >= n + 1:
            n += 1
        return n

    def ceil(self) -> int:
        return -((-self).floor())

    def to_float(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.D)

    __float__ = to_float

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), "D": self.D}

    @classmethod
    def from_json(cls, data: dict) -> "FieldScalar":
        return cls(Fraction(data["a"]), Fraction(data["b"]), int(data["D"]))

    _TERM_RE = re.compile(
        r"^(?P<coef>\d+(?:/\d+)?)?(?P<star>\*)?(?:sqrt(?P<d>\d+))?$"
    )

    @classmethod
    def parse(cls, text: str, D: int | None = None) -> "FieldScalar":
        """Parse the CLI syntax ``p/q+r/s*sqrtD`` (spaces and parens allowed).

        The field D is inferred from a sqrt term when present; for purely
        rational input it must be supplied via the ``D`` argument.
        """
        s = text.strip()
        while s.startswith("(") and s.endswith(")"):
            s = s[1:-1].strip()
        s = s.replace(" ", "")
        if not s:
            raise ValueError("empty FieldScalar literal")
        # Split into signed terms.
        terms: list[tuple[int, str]] = []
        i = 0
        sign = 1
        buf = ""
        if s[0] in "+-":
            sign = -1 if s[0] == "-" else 1
            i = 1
        while i < len(s):
            c = s[i]
            if c in "+-":
                terms.append((sign, buf))
                sign = -1 if c == "-" else 1
                buf = ""
            else:
                buf += c
            i += 1
        terms.append((sign, buf))

        a = Fraction(0)
        b = Fraction(0)
        seen_D: int | None = None
        for sgn, term in terms:
            m = cls._TERM_RE.match(term)
            if not m or (m.group("coef") is None and m.group("d") is None):
                raise ValueError(f"cannot parse FieldScalar term {term!r} in {text!r}")
            if m.group("star") and (m.group("coef") is None or m.group("d") is None):
                raise ValueError(f"misplaced '*' in FieldScalar term {term!r}")
            coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
            if m.group("d") is not None:
                d = int(m.group("d"))
                if seen_D is not None and seen_D != d:
                    raise ValueError(f"mixed discriminants in {text!r}")
                seen_D = d
                b += sgn * coef
            else:
                a += sgn * coef
        if seen_D is None:
            if D is None:
                raise ValueError(
                    f"no sqrt term in {text!r}; supply the field discriminant D"
                )
            seen_D = D
        elif D is not None and D != seen_D:
            raise ValueError(f"literal {text!r} is in sqrt{seen_D}, expected sqrt{D}")
        return cls(a, b, seen_D)

    def __repr__(self):
        return f"FieldScalar({self.a}, {self.b}, sqrt{self.D})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        b = f"{self.b}*sqrt{self.D}" if self.b != 1 else f"sqrt{self.D}"
        if self.a == 0:
            return b
        return f"{self.a}+{b}" if self.b > 0 else f"{self.a}{b}"


def field_cmp(x: FieldScalar, y: FieldScalar) -> int:
    """Exact three-way comparison: -1, 0 or 1 as x <, =, > y."""
    if isinstance(x, FieldScalar):
        return x._cmp(y)
    return FieldScalar(Fraction(x), 0, y.D)._cmp(y)


def galois_conj(x: FieldScalar) -> FieldScalar:
    """The Galois conjugate a - b*sqrt(D) of a + b*sqrt(D)."""
    return x.conjugate()


# ---------------------------------------------------------------------------
# Vectors and matrices (tuples of FieldScalar)
# ---------------------------------------------------------------------------

Vec = tuple
Mat = tuple


def vec_add(u: Vec, v: Vec) -> Vec:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def vec_sub(u: Vec, v: Vec) -> Vec:
    return tuple(a - b for a, b in zip(u, v, strict=True))


def vec_neg(u: Vec) -> Vec:
    return tuple(-a for a in u)


def vec_scale(s, u: Vec) -> Vec:
    return tuple(s * a for a in u)


def vec_dot(u: Vec, v: Vec) -> FieldScalar:
    parts = [a * b for a, b in zip(u, v, strict=True)]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def vec_zero(k: int, D: int) -> Vec:
    return tuple(FieldScalar.zero(D) for _ in range(k))


def mat_identity(k: int, D: int) -> Mat:
    one, zero = FieldScalar.one(D), FieldScalar.zero(D)
    return tuple(tuple(one if i == j else zero for j in range(k)) for i in range(k))


def mat_from_rows(rows, D: int) -> Mat:
    """Lift a matrix of ints/Fractions/FieldScalars into Q(sqrt(D))."""

    def lift(x):
        if isinstance(x, FieldScalar):
            if x.D != D and x.b != 0:
                raise FieldMismatchError("matrix entry from a different field")
            return FieldScalar(x.a, x.b, D) if x.D != D else x
        return FieldScalar(x, 0, D)

    return tuple(tuple(lift(x) for x in row) for row in rows)


def mat_transpose(M: Mat) -> Mat:
    return tuple(zip(*M, strict=True))


def mat_mul(A: Mat, B: Mat) -> Mat:
    Bt = mat_transpose(B)
    return tuple(tuple(vec_dot(row, col) for col in Bt) for row in A)


def mat_mul_vec(A: Mat, v: Vec) -> Vec:
    return tuple(vec_dot(row, v) for row in A)


def mat_scale(s, A: Mat) -> Mat:
    return tuple(tuple(s * x for x in row) for row in A)


def mat_det(A: Mat) -> FieldScalar:
    k = len(A)
    D = A[0][0].D
    if k == 1:
        return A[0][0]
    if k == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    det = FieldScalar.zero(D)
    # Laplace expansion along the first row; k <= 4 keeps this cheap.
    for j in range(k):
        if A[0][j].is_zero():
            continue
        minor = tuple(
            tuple(A[i][jj] for jj in range(k) if jj != j) for i in range(1, k)
        )
        term = A[0][j] * mat_det(minor)
        det = det + term if j % 2 == 0 else det - term
    return det


def mat_solve(M: Mat, v: Vec) -> Vec:
    """Exact solution x of Mx = v by Gaussian elimination.

    Raises :class:`SingularMatrixError` when det(M) = 0.
    """
    k = len(M)
    if any(len(row) != k for row in M) or len(v) != k:
        raise ValueError("mat_solve requires a square system")
    aug = [list(row) + [v[i]] for i, row in enumerate(M)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if not aug[r][col].is_zero()), None)
        if pivot is None:
            raise SingularMatrixError("singular matrix in mat_solve")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv for x in aug[col]]
        for r in range(k):
            if r != col and not aug[r][col].is_zero():
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return tuple(aug[i][k] for i in range(k))


def mat_inv(M: Mat) -> Mat:
    k = len(M)
    D = M[0][0].D
    one, zero = FieldScalar.one(D), FieldScalar.zero(D)
    cols = []
    for j in range(k):
        e = tuple(one if i == j else zero for i in range(k))
        cols.append(mat_solve(M, e))
    return mat_transpose(tuple(cols))


def solve_rational(rows, rhs):
    """Any rational solution q of rows . q = rhs, or None if inconsistent.

    ``rows`` is a list of equal-length lists of Fractions (or ints) and
    ``rhs`` a list of the same length as ``rows``; underdetermined systems
    get free variables set to zero.
    """
    m = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    ncols = len(rows[0])
    rank = 0
    pivots = []
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = m[rank][col]
        m[rank] = [x / inv for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        pivots.append(col)
        rank += 1
    if any(m[i][ncols] != 0 for i in range(rank, len(m))):
        return None
    q = [Fraction(0)] * ncols
    for i, col in enumerate(pivots):
        q[col] = m[i][ncols]
    return q
