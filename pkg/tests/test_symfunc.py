from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rmtlab.partitions import partitions_of_size, partitions_up_to_size, dominates
from rmtlab.symfunc import (
    DEGREE_CAP,
    SymmetricPolynomial,
    as_theta,
    eval_poly,
    expand_in_jack_basis,
    jack_in_monomials,
    jack_normalized_eval,
    jack_poly,
    jack_principal_value,
    multiply_power_sum,
    poly_from_json,
    poly_to_json,
    power_sum_poly,
    schur_poly,
    skew_schur_one_var,
)

THETAS = [Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(2)]


def _det(rows):
    """Exact determinant by fraction-free-ish Gaussian elimination."""
    n = len(rows)
    mat = [[Fraction(v) for v in row] for row in rows]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if mat[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            mat[col], mat[pivot] = mat[pivot], mat[col]
            det = -det
        det *= mat[col][col]
        inv = 1 / mat[col][col]
        for r in range(col + 1, n):
            factor = mat[r][col] * inv
            if factor:
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[col])]
    return det


def bialternant_schur(lam, xs):
    """Ratio-of-alternants Schur value at distinct points — independent oracle."""
    n = len(xs)
    full = list(lam) + [0] * (n - len(lam))
    num = _det([[x ** (full[j] + n - 1 - j) for j in range(n)] for x in xs])
    den = _det([[x ** (n - 1 - j) for j in range(n)] for x in xs])
    return num / den


def test_theta_validation():
    assert as_theta("2/3") == Fraction(2, 3)
    with pytest.raises(ValueError):
        as_theta(0)
    with pytest.raises(ValueError):
        as_theta(Fraction(-1, 2))


def test_eval_examples():
    m1 = SymmetricPolynomial(2, {(1,): Fraction(1)})
    m11 = SymmetricPolynomial(2, {(1, 1): Fraction(1)})
    assert eval_poly(m1, [2, 3]) == 5
    assert eval_poly(m11, [2, 3]) == 6
    assert eval_poly(schur_poly((2, 1), 3), [1, 1, 1]) == 8


def test_schur_examples():
    assert schur_poly((1,), 2).coeffs == {(1,): 1}
    assert schur_poly((2,), 2).coeffs == {(2,): 1, (1, 1): 1}
    with pytest.raises(ValueError):
        schur_poly((1, 1, 1), 2)


def test_schur_against_bialternant():
    points = [Fraction(2), Fraction(3, 2), Fraction(-1, 3), Fraction(5, 7)]
    for size in range(1, 7):
        for lam in partitions_of_size(size, 4):
            for n in range(len(lam), 5):
                xs = points[:n]
                if n == 0:
                    continue
                expected = bialternant_schur(lam, xs)
                got = eval_poly(schur_poly(lam, n), xs)
                assert got == expected, (lam, n)


def test_skew_schur_one_var():
    b = Fraction(3, 5)
    assert skew_schur_one_var((2, 1), (1,), b) == b**2
    assert skew_schur_one_var((2, 2), (1,), b) == 0
    assert skew_schur_one_var((2, 1), (2, 1), b) == 1
    assert skew_schur_one_var((1,), (2,), b) == 0


def test_branching_rule():
    # s_lam(a_1..a_N) = sum_mu s_{lam/mu}(a_N) * s_mu(a_1..a_{N-1})
    points = [Fraction(1, 2), Fraction(2), Fraction(-2, 3), Fraction(7, 4)]
    for size in range(0, 7):
        for lam in partitions_of_size(size, 4):
            for n in range(max(len(lam), 1), 5):
                xs = points[:n]
                lhs = eval_poly(schur_poly(lam, n), xs)
                rhs = Fraction(0)
                for mu in partitions_up_to_size(size):
                    if len(mu) > n - 1:
                        continue
                    strip = skew_schur_one_var(lam, mu, xs[-1])
                    if strip == 0:
                        continue
                    if n == 1:
                        inner = Fraction(1) if mu == () else Fraction(0)
                    else:
                        inner = eval_poly(schur_poly(mu, n - 1), xs[:-1])
                    rhs += strip * inner
                assert lhs == rhs, (lam, n)


def test_cauchy_truncation():
    a = [Fraction(1, 3), Fraction(1, 5)]
    b = [Fraction(1, 2), Fraction(1, 4)]
    cutoff = 14
    total = Fraction(0)
    for size in range(cutoff + 1):
        for lam in partitions_of_size(size, len(a)):
            total += eval_poly(schur_poly(lam, len(a)), a) * eval_poly(
                schur_poly(lam, len(b)), b
            )
    target = Fraction(1)
    for x in a:
        for y in b:
            target /= 1 - x * y
    # geometric tail: sum_{s>K} C(s+3, s) r^s with r = max a_i b_j
    r = max(x * y for x in a for y in b)
    s0 = cutoff + 1
    term = Fraction(
        (s0 + 3) * (s0 + 2) * (s0 + 1), 6
    ) * r**s0
    ratio = Fraction(s0 + 4, s0 + 1) * r
    assert ratio < 1
    tail = term / (1 - ratio)
    assert abs(target - total) <= tail


def test_jack_examples():
    for theta in THETAS:
        for k in range(1, 5):
            lam = (1,) * k
            assert jack_poly(lam, 4, theta).coeffs == {lam: 1}
        got = jack_poly((2,), 2, theta).coeffs
        assert got == {(2,): 1, (1, 1): 2 * theta / (theta + 1)}
    assert jack_poly((2,), 2, 1).coeffs == schur_poly((2,), 2).coeffs
    with pytest.raises(ValueError):
        jack_poly((2, 1), 1, Fraction(1, 2))
    with pytest.raises(ValueError):
        jack_poly((2,), 2, 0)


def test_jack_theta_one_is_schur():
    for size in range(1, 7):
        for lam in partitions_of_size(size, 4):
            n = max(len(lam), 1)
            assert jack_poly(lam, n, 1).coeffs == schur_poly(lam, n).coeffs


def test_jack_dominance_triangularity():
    for theta in THETAS:
        for size in range(1, 7):
            for lam in partitions_of_size(size):
                coeffs = jack_in_monomials(lam, theta)
                assert coeffs[lam] == 1
                for mu in coeffs:
                    assert dominates(lam, mu), (lam, mu, theta)


def test_jack_normalized_eval():
    assert jack_normalized_eval((2, 1), [1, 1, 1], Fraction(3, 2)) == 1
    a, b = Fraction(2), Fraction(5)
    assert jack_normalized_eval((1,), [a, b], Fraction(7, 3)) == (a + b) / 2
    assert jack_normalized_eval((2,), [1, 0], 1) == Fraction(1, 3)


def test_jack_principal_value_binomial():
    # P_(1^k)(1^N) counts monomials: C(N, k)
    assert jack_principal_value((1, 1), 4, Fraction(2, 3)) == 6
    assert jack_principal_value((1, 1, 1), 3, Fraction(1, 2)) == 1


def test_expand_in_jack_basis_examples():
    for theta in THETAS:
        p1 = power_sum_poly(1, 3)
        assert expand_in_jack_basis(p1, theta) == {(1,): 1}
        p2 = power_sum_poly(2, 3)
        assert expand_in_jack_basis(p2, theta) == {
            (2,): 1,
            (1, 1): -2 * theta / (1 + theta),
        }
        p1sq = multiply_power_sum(p1, 1)
        assert expand_in_jack_basis(p1sq, theta) == {
            (2,): 1,
            (1, 1): 2 / (1 + theta),
        }


@settings(deadline=None, max_examples=25)
@given(
    st.integers(0, 5).flatmap(lambda n: st.sampled_from(partitions_of_size(n) or [()])),
    st.sampled_from(THETAS),
)
def test_expand_inverts_jack(lam, theta):
    n = max(len(lam), 1)
    poly = jack_poly(lam, n, theta)
    assert expand_in_jack_basis(poly, theta) == {lam: 1}


def test_multiply_power_sum_rule():
    # p_2 * m_(1) in 2 vars: x^3+y^3 + x y^2 + x^2 y = m_(3) + m_(2,1)
    m1 = SymmetricPolynomial(2, {(1,): Fraction(1)})
    got = multiply_power_sum(m1, 2)
    assert got.coeffs == {(3,): 1, (2, 1): 1}
    # keys longer than num_vars are dropped: (1,1,1) needs three variables
    m11 = SymmetricPolynomial(2, {(1, 1): Fraction(1)})
    got2 = multiply_power_sum(m11, 1)
    assert got2.coeffs == {(2, 1): 1}


def test_degree_cap():
    with pytest.raises(ValueError):
        jack_in_monomials((DEGREE_CAP + 1,), 1)


def test_json_round_trip():
    poly = jack_poly((2, 1), 3, Fraction(2, 3))
    text = poly_to_json(poly)
    back = poly_from_json(text)
    assert back.num_vars == poly.num_vars
    assert back.coeffs == poly.coeffs


def test_float_eval_matches_exact():
    poly = schur_poly((2, 1), 3)
    exact = eval_poly(poly, [Fraction(1, 2), Fraction(1, 3), Fraction(1, 5)])
    approx = eval_poly(poly, [0.5, 1 / 3, 0.2])
    assert abs(float(exact) - approx) < 1e-12
