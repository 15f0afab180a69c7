"""Tests for exact quadratic-field arithmetic."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutproject.field import (
    FieldMismatchError,
    FieldScalar,
    SingularMatrixError,
    field_cmp,
    galois_conj,
    mat_identity,
    mat_inv,
    mat_mul,
    mat_mul_vec,
    mat_solve,
)

from oracles import decimal_floor, decimal_sign

PHI = FieldScalar(Fraction(1, 2), Fraction(1, 2), 5)


def fs(a, b, D):
    return FieldScalar(Fraction(a), Fraction(b), D)


rationals = st.fractions(
    min_value=Fraction(-(10**6)), max_value=Fraction(10**6), max_denominator=10**4
)
scalars5 = st.builds(lambda a, b: FieldScalar(a, b, 5), rationals, rationals)


class TestComparison:
    def test_spec_examples(self):
        assert field_cmp(fs(1, 1, 5), fs(3, 0, 5)) > 0  # 1+sqrt5 > 3
        x = fs(Fraction(7, 3), Fraction(-2, 5), 13)
        assert field_cmp(x, x) == 0
        assert field_cmp(fs(0, 1, 2), fs(1, 0, 2)) > 0  # sqrt2 > 1

    def test_mismatched_d_rejected(self):
        with pytest.raises(FieldMismatchError):
            field_cmp(fs(1, 1, 5), fs(1, 1, 2))
        with pytest.raises(FieldMismatchError):
            fs(1, 1, 5) + fs(1, 1, 2)

    def test_near_tie(self):
        # 161/72 is a very good rational approximation of sqrt(5).
        assert field_cmp(fs(Fraction(161, 72), 0, 5), fs(0, 1, 5)) > 0
        assert field_cmp(fs(Fraction(682, 305), 0, 5), fs(0, 1, 5)) < 0

    def test_sign_agrees_with_decimal_oracle(self):
        rng = random.Random(20260825)
        for _ in range(10_000):
            a = Fraction(rng.randint(-50, 50), rng.randint(1, 20))
            b = Fraction(rng.randint(-50, 50), rng.randint(1, 20))
            D = rng.choice([2, 3, 5, 7, 13])
            x = FieldScalar(a, b, D)
            assert x.sign() == decimal_sign(a, b, D)

    def test_ordering_operators(self):
        assert fs(0, 1, 5) < fs(0, 2, 5)
        assert fs(-1, 1, 5) > fs(0, 0, 5)
        assert fs(1, 0, 5) <= fs(1, 0, 5)
        assert sorted([fs(3, 0, 2), fs(0, 1, 2), fs(0, 2, 2)]) == [
            fs(0, 1, 2),
            fs(0, 2, 2),
            fs(3, 0, 2),
        ]


class TestArithmetic:
    def test_ring_ops(self):
        phi = PHI
        assert phi * phi == phi + 1  # phi^2 = phi + 1
        assert phi * galois_conj(phi) == -1  # norm of the golden ratio
        assert (phi - phi).is_zero()

    def test_division_and_inverse(self):
        phi = PHI
        assert (1 / phi) == phi - 1
        x = fs(Fraction(3, 7), Fraction(-2, 3), 13)
        assert x * (1 / x) == fs(1, 0, 13)
        with pytest.raises(ZeroDivisionError):
            1 / fs(0, 0, 13)

    def test_powers(self):
        phi = PHI
        assert phi**3 == 2 * phi + 1
        assert phi**0 == fs(1, 0, 5)
        assert phi**-1 == phi - 1

    def test_floor(self):
        rng = random.Random(7)
        for _ in range(500):
            a = Fraction(rng.randint(-40, 40), rng.randint(1, 15))
            b = Fraction(rng.randint(-40, 40), rng.randint(1, 15))
            D = rng.choice([2, 3, 5, 7])
            x = FieldScalar(a, b, D)
            assert x.floor() == decimal_floor(a, b, D)

    @given(scalars5, scalars5)
    @settings(max_examples=200)
    def test_galois_conj_is_ring_hom(self, x, y):
        assert galois_conj(x + y) == galois_conj(x) + galois_conj(y)
        assert galois_conj(x * y) == galois_conj(x) * galois_conj(y)

    @given(scalars5)
    def test_galois_conj_involution(self, x):
        assert galois_conj(galois_conj(x)) == x

    def test_galois_conj_spec_values(self):
        assert galois_conj(PHI) == fs(Fraction(1, 2), Fraction(-1, 2), 5)
        assert galois_conj(fs(Fraction(22, 7), 0, 5)) == fs(Fraction(22, 7), 0, 5)


class TestLinearAlgebra:
    def test_identity_solve(self):
        ident = mat_identity(3, 5)
        v = (fs(1, 2, 5), fs(0, -1, 5), fs(Fraction(2, 3), 0, 5))
        assert mat_solve(ident, v) == v

    def test_fibonacci_eigenbasis_decomposition(self):
        phi, phic = PHI, galois_conj(PHI)
        one, zero = fs(1, 0, 5), fs(0, 0, 5)
        M = ((phi, phic), (one, one))
        x = mat_solve(M, (one, zero))
        # e1 = (1/sqrt5)(phi,1) - (1/sqrt5)(phi',1), and 1/sqrt5 = sqrt5/5.
        assert x == (fs(0, Fraction(1, 5), 5), fs(0, Fraction(-1, 5), 5))
        # Back-substitution check.
        assert mat_mul_vec(M, x) == (one, zero)

    def test_singular_matrix_rejected(self):
        one = fs(1, 0, 5)
        two = fs(2, 0, 5)
        M = ((one, two), (two, two + two))
        with pytest.raises(SingularMatrixError):
            mat_solve(M, (one, one))
        with pytest.raises(SingularMatrixError):
            mat_inv(M)

    @given(st.lists(rationals, min_size=4, max_size=4), st.lists(rationals, min_size=2, max_size=2))
    @settings(max_examples=100)
    def test_solve_round_trip(self, entries, rhs):
        M = tuple(
            tuple(FieldScalar(entries[2 * i + j], 0, 5) for j in range(2)) for i in range(2)
        )
        v = tuple(FieldScalar(r, 0, 5) for r in rhs)
        det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
        if det.is_zero():
            with pytest.raises(SingularMatrixError):
                mat_solve(M, v)
        else:
            assert mat_mul_vec(M, mat_solve(M, v)) == v

    def test_inverse(self):
        phi = PHI
        one, zero = fs(1, 0, 5), fs(0, 0, 5)
        M = ((phi, one), (one, zero))
        assert mat_mul(M, mat_inv(M)) == mat_identity(2, 5)


class TestSerialization:
    def test_json_round_trip(self):
        x = fs(Fraction(-3, 7), Fraction(2, 5), 13)
        data = x.to_json()
        assert data == {"a": "-3/7", "b": "2/5", "D": 13}
        assert FieldScalar.from_json(data) == x

    def test_parse_cli_syntax(self):
        assert FieldScalar.parse("1/2+1/2*sqrt5") == PHI
        assert FieldScalar.parse("(-1+sqrt2)") == fs(-1, 1, 2)
        assert FieldScalar.parse("3/7", D=5) == fs(Fraction(3, 7), 0, 5)
        assert FieldScalar.parse("-2*sqrt5") == fs(0, -2, 5)
        assert FieldScalar.parse("1 - sqrt2") == fs(1, -1, 2)

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            FieldScalar.parse("sqrt")
        with pytest.raises(ValueError):
            FieldScalar.parse("1+2i", D=5)
        with pytest.raises(ValueError):
            FieldScalar.parse("")

    def test_parse_requires_d_for_pure_rational(self):
        with pytest.raises(ValueError):
            FieldScalar.parse("3/7")


class TestBounds:
    def test_rational_bounds_bracket_value(self):
        rng = random.Random(11)
        for _ in range(300):
            a = Fraction(rng.randint(-30, 30), rng.randint(1, 11))
            b = Fraction(rng.randint(-30, 30), rng.randint(1, 11))
            x = FieldScalar(a, b, 5)
            lo, hi = x.lower_bound(), x.upper_bound()
            assert lo <= hi
            assert (x - lo).sign() >= 0
            assert (hi - x).sign() >= 0
            assert hi - lo <= Fraction(1, 10**9)
