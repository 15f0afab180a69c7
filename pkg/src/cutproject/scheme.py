"""Cut-and-project scheme construction from hyperbolic unimodular matrices.

A scheme is built from M in GL(k, Z) whose spectrum splits into an expanding
part (the physical directions) and a contracting part (the internal
directions), with all eigenvalues lying in a single real quadratic field.
Supported sizes are k = 2 (d = n = 1) and k = 4 (d = n = 2); in the
unimodular quadratic case each irreducible factor x^2 + p x +- 1 contributes
one expanding and one contracting eigenvalue, so d = n = k/2 always.

Because every accepted eigenvalue is a quadratic irrational, no nonzero
integer vector lies in either eigenspace (an integer eigenvector would force
a rational eigenvalue), so the internal projection is injective on Z^k; for
the same reason no rational covector annihilates the internal space, so the
projected lattice is dense there.  Construction therefore certifies both
properties without numerical checks.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

from .field import (
    FieldScalar,
    SingularMatrixError,
    mat_from_rows,
    mat_inv,
    mat_mul,
    mat_mul_vec,
)

__all__ = [
    "NotUnimodularError",
    "NotHyperbolicError",
    "UnsupportedSpectrumError",
    "Scheme",
    "build_scheme",
    "companion_scheme",
    "blockdiag",
    "star",
    "project_phys",
]


class NotUnimodularError(ValueError):
    """Matrix is not in GL(k, Z)."""


class NotHyperbolicError(ValueError):
    """Matrix has an eigenvalue of modulus one."""


class UnsupportedSpectrumError(ValueError):
    """Spectrum is not real-quadratic over a single field Q(sqrt D)."""


# ---------------------------------------------------------------------------
# integer polynomial helpers (coefficient lists, ascending degree)


def _poly_add(p, q):
    m = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(m)]


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _poly_scale(p, c):
    return [c * a for a in p]


def _poly_det(rows):
    """Determinant of a matrix of integer polynomials (Laplace expansion)."""
    k = len(rows)
    if k == 1:
        return rows[0][0]
    acc = [0]
    for j in range(k):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        term = _poly_mul(rows[0][j], _poly_det(minor))
        acc = _poly_add(acc, _poly_scale(term, 1 if j % 2 == 0 else -1))
    return acc


def _char_poly(M):
    """Monic characteristic polynomial det(x I - M) as an int list."""
    k = len(M)
    rows = [
        [[-M[i][j], 1] if i == j else [-M[i][j]] for j in range(k)] for i in range(k)
    ]
    return _poly_det(rows)


def _poly_eval(p, x):
    v = 0
    for c in reversed(p):
        v = v * x + c
    return v


def _squarefree_decompose(m):
    """m = s^2 * d with d squarefree; returns (s, d) for m > 0."""
    s, d, f = 1, 1, 2
    while f * f <= m:
        e = 0
        while m % f == 0:
            m //= f
            e += 1
        s *= f ** (e // 2)
        if e % 2:
            d *= f
        f += 1
    return s, d * m


# ---------------------------------------------------------------------------
# spectrum


def _factor_quartic(p):
    """Split monic quartic into two monic integer quadratics, or None.

    p = [p0, p1, p2, p3, 1]; a factorization (x^2+a x+b)(x^2+c x+d) requires
    b*d = p0 = +-1, hence b, d in {+-1}.
    """
    p0, p1, p2, p3 = p[0], p[1], p[2], p[3]
    for b in (1, -1):
        if p0 % b:
            continue
        d = p0 // b
        if d not in (1, -1):
            continue
        if b != d:
            num = p1 - b * p3
            if num % (d - b):
                continue
            a = num // (d - b)
            c = p3 - a
            if b + d + a * c == p2:
                return ((a, b), (c, d))
        else:
            if p1 != b * p3:
                continue
            disc = p3 * p3 - 4 * (p2 - 2 * b)
            if disc < 0:
                continue
            r = isqrt(disc)
            if r * r != disc or (p3 + r) % 2:
                continue
            a = (p3 + r) // 2
            c = p3 - a
            return ((a, b), (c, d))
    return None


def _quadratic_roots(a, b, D=None):
    """Roots of x^2 + a x + b as FieldScalars; validates the discriminant.

    Returns (expanding_root, contracting_root, D).
    """
    disc = a * a - 4 * b
    if disc <= 0:
        raise UnsupportedSpectrumError(
            f"factor x^2 + {a}x + {b} has non-real or repeated roots"
        )
    s, d0 = _squarefree_decompose(disc)
    if d0 == 1:
        raise UnsupportedSpectrumError(
            f"factor x^2 + {a}x + {b} has rational roots"
        )
    if D is not None and d0 != D:
        raise UnsupportedSpectrumError(
            f"eigenvalues lie in Q(sqrt{d0}), not Q(sqrt{D})"
        )
    lo = FieldScalar(Fraction(-a, 2), Fraction(-s, 2), d0)
    hi = FieldScalar(Fraction(-a, 2), Fraction(s, 2), d0)
    one = FieldScalar.one(d0)
    exp = hi if abs(hi) > one else lo
    con = lo if exp is hi else hi
    if not (abs(exp) > one and abs(con) < one):
        raise NotHyperbolicError("eigenvalue of modulus one")
    return exp, con, d0


def _eigen_kernel(M, lam):
    """Basis of ker(M - lam I) over Q(sqrt D), free variables set to one."""
    k = len(M)
    D = lam.D
    rows = [
        [
            (FieldScalar.rational(M[i][j], D) - lam if i == j
             else FieldScalar.rational(M[i][j], D))
            for j in range(k)
        ]
        for i in range(k)
    ]
    pivots = []
    r = 0
    for c in range(k):
        pr = next((i for i in range(r, k) if not rows[i][c].is_zero()), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [x * inv for x in rows[r]]
        for i in range(k):
            if i != r and not rows[i][c].is_zero():
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(k) if c not in pivots]
    basis = []
    zero, one = FieldScalar.zero(D), FieldScalar.one(D)
    for f in free:
        v = [zero] * k
        v[f] = one
        for ri, c in enumerate(pivots):
            v[c] = -rows[ri][f]
        basis.append(tuple(v))
    return basis


# ---------------------------------------------------------------------------
# scheme


class Scheme:
    """A Euclidean cut-and-project scheme (R^k, physical, internal, Z^k).

    Attributes:
        k, d, n: total, physical, internal dimensions (d = n = k // 2).
        D: squarefree discriminant of the eigenvalue field Q(sqrt D).
        M: the defining matrix, a k-tuple of k-tuples of ints.
        phys_basis, int_basis: eigenvector bases of the two invariant spaces.
        proj_phys, proj_int: coordinate maps Z^k -> field^d / field^n in the
            eigenbases (rows of the inverse basis matrix).
        L_mat, A_mat: the restriction of M to the physical / internal spaces
            in those coordinates (diagonal here, since M is diagonalizable).
        label: optional human-readable name, kept through serialization.
    """

    __slots__ = (
        "k", "d", "n", "D", "M", "phys_basis", "int_basis",
        "proj_phys", "proj_int", "L_mat", "A_mat", "label",
    )

    def __init__(self, **kw):
        for name in Scheme.__slots__:
            object.__setattr__(self, name, kw[name])

    def __setattr__(self, name, value):
        raise AttributeError("Scheme is immutable")

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"Scheme(k={self.k}, D={self.D}{tag})"

    def star(self, gamma):
        """Internal coordinates of a lattice point (the star map)."""
        return mat_mul_vec(self.proj_int, self._lift(gamma))

    def project_phys(self, gamma):
        """Physical coordinates of a lattice point."""
        return mat_mul_vec(self.proj_phys, self._lift(gamma))

    def _lift(self, gamma):
        if len(gamma) != self.k:
            raise ValueError(f"expected a vector of length {self.k}")
        return tuple(FieldScalar.rational(g, self.D) for g in gamma)

    def apply_M(self, gamma):
        """M gamma for an integer vector gamma."""
        return tuple(
            sum(self.M[i][j] * gamma[j] for j in range(self.k))
            for i in range(self.k)
        )

    def to_json(self):
        data = {"k": self.k, "D": self.D, "M": [list(row) for row in self.M]}
        if self.label is not None:
            data["label"] = self.label
        return data

    @classmethod
    def from_json(cls, data):
        M = tuple(tuple(int(x) for x in row) for row in data["M"])
        return build_scheme(M, int(data["D"]), label=data.get("label"))


def build_scheme(M, D=None, label=None):
    """Build a scheme from M in GL(k, Z), k in {2, 4}.

    If D is given it must match the squarefree discriminant of the spectrum.
    Raises NotUnimodularError, NotHyperbolicError or UnsupportedSpectrumError
    when M does not define a scheme of the supported kind.
    """
    M = tuple(tuple(int(x) for x in row) for row in M)
    k = len(M)
    if any(len(row) != k for row in M):
        raise ValueError("matrix must be square")
    if k not in (2, 4):
        raise UnsupportedSpectrumError(f"unsupported size k={k} (need 2 or 4)")
    chi = _char_poly(M)
    det = chi[0] * (1 if k % 2 == 0 else -1)
    if det not in (1, -1):
        raise NotUnimodularError(f"det M = {det}, not +-1")
    for unit in (1, -1):
        if _poly_eval(chi, unit) == 0:
            raise NotHyperbolicError(f"{unit} is an eigenvalue of M")

    if k == 2:
        factors = ((chi[1], chi[0]),)
    else:
        split = _factor_quartic(chi)
        if split is None:
            raise UnsupportedSpectrumError(
                "characteristic polynomial has no integer quadratic factorization"
            )
        factors = split

    expanding, contracting = [], []
    for a, b in factors:
        exp, con, D = _quadratic_roots(a, b, D)
        expanding.append(exp)
        contracting.append(con)

    phys_basis, exp_vals = [], []
    int_basis, con_vals = [], []
    for vals, basis, out_vals in (
        (expanding, phys_basis, exp_vals),
        (contracting, int_basis, con_vals),
    ):
        for lam in vals:
            if lam in out_vals:
                continue  # repeated factor: one kernel computation suffices
            mult = vals.count(lam)
            kernel = _eigen_kernel(M, lam)
            if len(kernel) != mult:
                raise UnsupportedSpectrumError(
                    f"eigenvalue {lam} is defective "
                    f"(eigenspace dim {len(kernel)}, multiplicity {mult})"
                )
            basis.extend(kernel)
            out_vals.extend([lam] * mult)

    d, n = len(phys_basis), len(int_basis)
    columns = phys_basis + int_basis
    E = mat_from_rows([[columns[c][i] for c in range(k)] for i in range(k)], D)
    try:
        Einv = mat_inv(E)
    except SingularMatrixError:  # pragma: no cover - eigenbases are independent
        raise UnsupportedSpectrumError("eigenvectors do not span R^k")
    Mf = mat_from_rows(M, D)
    F = mat_mul(Einv, mat_mul(Mf, E))
    assert all(
        F[i][j].is_zero()
        for i in range(k)
        for j in range(k)
        if (i < d) != (j < d)
    ), "basis change did not block-diagonalize M"
    return Scheme(
        k=k, d=d, n=n, D=D, M=M,
        phys_basis=tuple(phys_basis), int_basis=tuple(int_basis),
        proj_phys=tuple(Einv[:d]), proj_int=tuple(Einv[d:]),
        L_mat=tuple(row[:d] for row in F[:d]),
        A_mat=tuple(row[d:] for row in F[d:]),
        label=label,
    )


def companion_scheme(coeffs, label=None):
    """Scheme of the companion matrix of x^m + c_{m-1} x^{m-1} + ... + c_0.

    coeffs lists [c_0, ..., c_{m-1}] (the monic leading 1 is implied).  The
    companion matrix has first row (-c_{m-1}, ..., -c_0) and ones on the
    subdiagonal, so [-1, -1] yields the Fibonacci matrix ((1, 1), (1, 0)).
    """
    coeffs = [int(c) for c in coeffs]
    m = len(coeffs)
    if m < 2:
        raise ValueError("polynomial degree must be at least 2")
    if coeffs[0] not in (1, -1):
        raise NotUnimodularError(
            f"constant coefficient {coeffs[0]} is not +-1, companion matrix "
            "is not unimodular"
        )
    first = tuple(-c for c in reversed(coeffs))
    rows = [first]
    for i in range(m - 1):
        rows.append(tuple(1 if j == i else 0 for j in range(m)))
    return build_scheme(tuple(rows), label=label)


def blockdiag(*blocks):
    """Block-diagonal integer matrix from square integer blocks."""
    k = sum(len(b) for b in blocks)
    rows = []
    offset = 0
    for b in blocks:
        for row in b:
            rows.append(
                tuple([0] * offset + [int(x) for x in row]
                      + [0] * (k - offset - len(row)))
            )
        offset += len(b)
    return tuple(rows)


def star(scheme, gamma):
    """Internal coordinates of a lattice point (the star map)."""
    return scheme.star(gamma)


def project_phys(scheme, gamma):
    """Physical coordinates of a lattice point."""
    return scheme.project_phys(gamma)
