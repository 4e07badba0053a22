import math
from fractions import Fraction

import numpy as np
import pytest

from volrank import detalg
from volrank.models import DomainError
from volrank.util import make_rng

A = np.array([[1, 0], [0, 0]])
I2 = np.eye(2, dtype=int)


def test_det():
    assert detalg.det([[1.0, 2.0], [3.0, 4.0]]) == pytest.approx(-2.0)
    stack = np.stack([np.eye(3), 2 * np.eye(3)])
    assert np.allclose(detalg.det(stack), [1.0, 8.0])
    with pytest.raises(DomainError):
        detalg.det([[1.0, 2.0]])


def test_det_exact():
    assert detalg.det_exact([[1, 2], [3, 4]]) == -2
    assert detalg.det_exact([[Fraction(1, 3), 0], [0, 3]]) == 1
    assert detalg.det_exact([[2, 0, 1], [1, 3, 2], [1, 1, 2]]) == 6


def test_rank():
    assert detalg.rank(A) == 1
    assert detalg.rank(np.zeros((3, 3))) == 0
    assert detalg.rank(np.eye(4)) == 4
    with pytest.raises(DomainError):
        detalg.rank(A, tol=0.0)


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_random_rank_matrix(r: int):
    m = detalg.random_rank_matrix(make_rng(r, 0), 4, r)
    assert detalg.rank(m) <= r


def test_test_function_f():
    assert detalg.test_function_f([[1.0, 0.0], [0.0, 2.0]]) == pytest.approx(4.0)
    # swapping two vectors flips the sign of det, not of f
    assert detalg.test_function_f([[1.0, 2.0], [3.0, 4.0]]) == pytest.approx(
        detalg.test_function_f([[3.0, 4.0], [1.0, 2.0]])
    )


def test_column_selections():
    assert len(list(detalg.column_selections((1, 1)))) == 2
    assert len(list(detalg.column_selections((2, 1)))) == 3
    assert len(list(detalg.column_selections((1, 1, 1)))) == 6
    assert len(list(detalg.column_selections((2, 2)))) == 6
    assert list(detalg.column_selections((-1, 3))) == []


def test_mixed_matrix_batched():
    a = np.arange(8.0).reshape(2, 2, 2)
    b = -np.arange(8.0).reshape(2, 2, 2)
    selection = next(detalg.column_selections((1, 1)))
    mixed = detalg.mixed_matrix([a, b], selection)
    assert mixed.shape == (2, 2, 2)
    for k in range(2):
        cols = [a, b]
        expected = np.column_stack(
            [cols[selection.assignment[j]][k][:, j] for j in range(2)]
        )
        assert np.array_equal(mixed[k], expected)


def test_gamma_r():
    assert detalg.gamma_r(1, A, I2, exact=True) == 1
    assert detalg.gamma_r(1, A, I2) == pytest.approx(1.0)
    assert detalg.gamma_r(2, A, I2, exact=True) == 0  # det(a)
    assert detalg.gamma_r(0, A, I2, exact=True) == 1  # det(b)
    assert detalg.gamma_r(-1, A, I2) == 0.0
    with pytest.raises(DomainError):
        detalg.gamma_r(3, A, I2)
    with pytest.raises(DomainError):
        detalg.gamma_r(1, A, np.eye(3))


def test_gamma_r_many():
    a = np.stack([A, 2 * A])
    b = np.stack([I2, I2])
    assert np.allclose(detalg.gamma_r_many(1, a, b), [1.0, 2.0])
    assert np.allclose(detalg.gamma_r_many(-1, a, b), [0.0, 0.0])


def test_gamma_prime_r():
    assert detalg.gamma_prime_r(0, A, I2, I2, exact=True) == 2
    assert detalg.gamma_prime_r(1, A, I2, I2) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        detalg.gamma_prime_r(2, A, I2, I2)


def test_multilinear_expansion():
    rng = make_rng(3, 0)
    terms = [rng.integers(-5, 6, size=(3, 3)) for _ in range(3)]
    assert detalg.multilinear_expansion(terms, exact=True) == detalg.det_exact(sum(terms))
    assert detalg.multilinear_expansion(terms) == pytest.approx(detalg.det(sum(terms)))
    with pytest.raises(DomainError):
        detalg.multilinear_expansion([])


def test_det_polynomial():
    # det(a + h I) = h + h^2
    assert detalg.det_polynomial(A, I2, exact=True) == [0, 1, 1]
    assert np.allclose(detalg.det_polynomial(A, I2), [0.0, 1.0, 1.0])


def test_oracle_suite():
    report = detalg.oracle_suite(n_cases=40, seed=1)
    assert report.passed
    assert report.n_cases == 40
    assert report.max_float_coefficient_error < 1e-6


def _column_norms(m) -> list[int]:
    return [int(np.abs(np.asarray(m)[:, j]).sum()) for j in range(np.shape(m)[1])]


@pytest.mark.parametrize("d, r", [(2, 0), (2, 1), (3, 1), (3, 2)])
def test_second_order_expansion_is_bounded(d: int, r: int):
    rng = make_rng(d, r)
    a = detalg.random_rank_matrix(rng, d, r, low=-1, high=1)
    while detalg.rank(a) != r:
        a = detalg.random_rank_matrix(rng, d, r, low=-1, high=1)
    b = rng.integers(-1, 2, size=(d, d))
    c = rng.integers(-1, 2, size=(d, d))
    first = detalg.gamma_r(r, a, b, exact=True)
    second = detalg.gamma_r(r - 1, a, b, exact=True) + detalg.gamma_prime_r(
        r, a, b, c, exact=True
    )
    # every coefficient of det(a + h b + h^2 c) is bounded by this product
    bound = math.prod(
        [x + y + z for x, y, z in zip(_column_norms(a), _column_norms(b), _column_norms(c))]
    )
    for k in range(4, 13):
        h = Fraction(1, 2**k)
        m = [
            [int(a[i, j]) + h * int(b[i, j]) + h * h * int(c[i, j]) for j in range(d)]
            for i in range(d)
        ]
        residual = detalg.det_exact(m) - h ** (d - r) * first - h ** (d - r + 1) * second
        assert abs(residual / h ** (d - r + 2)) <= bound


def test_column_swap_antisymmetry():
    rng = make_rng(8, 0)
    for d in (2, 3, 4):
        a = rng.integers(-5, 6, size=(d, d))
        b = rng.integers(-5, 6, size=(d, d))
        swapped = [1, 0] + list(range(2, d))
        for r in range(d + 1):
            value = detalg.gamma_r(r, a, b, exact=True)
            assert detalg.gamma_r(r, a[:, swapped], b[:, swapped], exact=True) == -value

        cycle = list(range(1, d)) + [0]  # signature (-1)^(d - 1)
        sign = (-1) ** (d - 1)
        for r in range(d + 1):
            value = detalg.gamma_r(r, a, b, exact=True)
            assert detalg.gamma_r(r, a[:, cycle], b[:, cycle], exact=True) == sign * value
