"""Determinant algebra module.

Determinants, numerical ranks, the mixed-column sums gamma_r / gamma'_r and the
multi-linear expansion of det(A_1 + ... + A_m). Every function is pure.

The float functions accept stacks of matrices (leading batch axes), which is how
the limit-law sampler evaluates thousands of draws at once. The ``exact`` variants
work on Python integers and fractions and serve as the oracle layer of the tests.
"""
import dataclasses
import itertools
from collections.abc import Iterator, Sequence
from fractions import Fraction
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from volrank.models import ColumnSelection, DomainError, FloatArray
from volrank.util import get_logger, make_rng

_LOGGER = get_logger("detalg")

Exact = int | Fraction


def _as_square(m: ArrayLike) -> FloatArray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2] or arr.shape[-1] < 1:
        raise DomainError(f"expected square matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def _as_exact(m: Any) -> list[list[Exact]]:
    rows = [[_exact_scalar(x) for x in row] for row in np.asarray(m, dtype=object).tolist()]
    if not rows or any(len(row) != len(rows) for row in rows):
        raise DomainError("expected a non-empty square matrix")
    return rows


def _exact_scalar(x: Any) -> Exact:
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return x
    # floats convert without rounding
    return Fraction(float(x))


def det(m: ArrayLike) -> Any:
    """Determinant by LU factorization with partial pivoting.

    Returns a float for a single matrix and an array for a stack.
    """
    arr = _as_square(m)
    value = np.linalg.det(arr)
    return float(value) if arr.ndim == 2 else value


def det_exact(m: Any) -> Exact:
    """Determinant by cofactor expansion in exact arithmetic."""
    return _cofactor(_as_exact(m))


def _cofactor(rows: list[list[Exact]]) -> Exact:
    size = len(rows)
    if size == 1:
        return rows[0][0]
    if size == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total: Exact = 0
    for j, pivot in enumerate(rows[0]):
        if pivot == 0:
            continue
        minor = [row[:j] + row[j + 1 :] for row in rows[1:]]
        sign = 1 if j % 2 == 0 else -1
        total += sign * pivot * _cofactor(minor)
    return total


def rank(m: ArrayLike, tol: float = 1e-10) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    arr = _as_square(m)
    if arr.ndim != 2:
        raise DomainError("rank takes a single matrix")
    singular = np.linalg.svd(arr, compute_uv=False)
    if singular[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular > tol * singular[0]))


def test_function_f(vectors: ArrayLike) -> Any:
    """Squared determinant of the matrix whose i-th column is ``vectors[..., i, :]``.

    det(M) = det(M^T), so the vectors are used as rows directly.
    """
    return det(vectors) ** 2


# The module-level name above starts with ``test_``; keep pytest from collecting it.
test_function_f.__test__ = False  # type: ignore[attr-defined]


def column_selections(counts: Sequence[int]) -> Iterator[ColumnSelection]:
    """All assignments of ``sum(counts)`` columns with ``counts[k]`` from source k."""
    if any(c < 0 for c in counts):
        return
    size = sum(counts)

    def _fill(
        source: int, free: tuple[int, ...], assignment: list[int]
    ) -> Iterator[list[int]]:
        if source == len(counts) - 1:
            for col in free:
                assignment[col] = source
            yield assignment
            return
        for chosen in itertools.combinations(free, counts[source]):
            for col in chosen:
                assignment[col] = source
            rest = tuple(col for col in free if col not in chosen)
            yield from _fill(source + 1, rest, assignment)

    if not counts:
        return
    for assignment in _fill(0, tuple(range(size)), [0] * size):
        yield ColumnSelection(tuple(assignment), tuple(counts))


def mixed_matrix(matrices: Sequence[ArrayLike], selection: ColumnSelection) -> FloatArray:
    """Matrix whose column j is column j of ``matrices[selection.assignment[j]]``.

    Works on stacks: every source may carry the same leading batch axes.
    """
    stack = np.stack([np.asarray(m, dtype=float) for m in matrices])
    cols = np.arange(len(selection.assignment))
    picked = stack[list(selection.assignment), ..., cols]
    # picked has the column axis first, then batch axes, then rows
    return np.moveaxis(picked, 0, -1)


def _mixed_exact(
    matrices: Sequence[list[list[Exact]]], assignment: Sequence[int]
) -> list[list[Exact]]:
    size = len(assignment)
    return [[matrices[assignment[j]][i][j] for j in range(size)] for i in range(size)]


def _selection_sum(matrices: Sequence[ArrayLike], counts: Sequence[int]) -> Any:
    total: Any = 0.0
    for selection in column_selections(counts):
        total = total + det(mixed_matrix(matrices, selection))
    return total


def _selection_sum_exact(matrices: Sequence[Any], counts: Sequence[int]) -> Exact:
    exact = [_as_exact(m) for m in matrices]
    total: Exact = 0
    for selection in column_selections(counts):
        total += _cofactor(_mixed_exact(exact, selection.assignment))
    return total


def _check_same_dim(*matrices: Any) -> int:
    dims = {np.shape(m)[-1] for m in matrices}
    if len(dims) != 1:
        raise DomainError(f"matrices must share one dimension, got {sorted(dims)}")
    return int(dims.pop())


def gamma_r_many(r: int, a: ArrayLike, b: ArrayLike) -> Any:
    """gamma_r over stacks of matrix pairs, in floating point."""
    d = _check_same_dim(a, b)
    if r == -1:
        return np.zeros(np.shape(a)[:-2]) if np.ndim(a) > 2 else 0.0
    if not 0 <= r <= d:
        raise DomainError(f"r must lie in 0..{d}, got {r}")
    return _selection_sum([_as_square(a), _as_square(b)], (r, d - r))


def gamma_r(r: int, a: Any, b: Any, exact: bool = False) -> float | Exact:
    """Sum of det(G) over the C(d, r) matrices G with r columns of a and d - r of b.

    Columns keep their position. ``gamma_r(-1, a, b)`` is 0 by convention.
    """
    if not exact:
        return float(gamma_r_many(r, a, b))
    d = _check_same_dim(a, b)
    if r == -1:
        return 0
    if not 0 <= r <= d:
        raise DomainError(f"r must lie in 0..{d}, got {r}")
    return _selection_sum_exact([a, b], (r, d - r))


def gamma_prime_r(r: int, a: Any, b: Any, c: Any, exact: bool = False) -> float | Exact:
    """Sum of det(G) over placements of r columns of a, d - r - 1 of b and one of c."""
    d = _check_same_dim(a, b, c)
    if not 0 <= r <= d - 1:
        raise DomainError(f"r must lie in 0..{d - 1}, got {r}")
    counts = (r, d - r - 1, 1)
    if exact:
        return _selection_sum_exact([a, b, c], counts)
    return float(_selection_sum([_as_square(a), _as_square(b), _as_square(c)], counts))


def multilinear_expansion(matrices: Sequence[Any], exact: bool = False) -> float | Exact:
    """Sum of det(G) over every assignment of columns to the given matrices.

    Computed term by term, it equals det(A_1 + ... + A_m).
    """
    if not matrices:
        raise DomainError("multilinear_expansion needs at least one matrix")
    d = _check_same_dim(*matrices)
    sources = range(len(matrices))
    if exact:
        exact_rows = [_as_exact(m) for m in matrices]
        total: Exact = 0
        for assignment in itertools.product(sources, repeat=d):
            total += _cofactor(_mixed_exact(exact_rows, assignment))
        return total
    stack = np.stack([_as_square(m) for m in matrices])
    cols = np.arange(d)
    value = 0.0
    for assignment in itertools.product(sources, repeat=d):
        value += det(stack[list(assignment), :, cols].T)
    return value


def det_polynomial(a: Any, b: Any, exact: bool = False) -> list[float] | list[Exact]:
    """Coefficients c_0..c_d of h -> det(a + h b).

    Obtained by interpolation at the nodes h = 1, 1/2, ..., 1/2^d.
    """
    d = _check_same_dim(a, b)
    if exact:
        ea, eb = _as_exact(a), _as_exact(b)
        nodes = [Fraction(1, 2**k) for k in range(d + 1)]
        values = [
            _cofactor([[x + h * y for x, y in zip(ra, rb)] for ra, rb in zip(ea, eb)])
            for h in nodes
        ]
        vander = [[h**j for j in range(d + 1)] for h in nodes]
        return _solve_exact(vander, values)
    fa, fb = _as_square(a), _as_square(b)
    float_nodes = 0.5 ** np.arange(d + 1)
    float_values = np.array([det(fa + h * fb) for h in float_nodes])
    coeffs = np.linalg.solve(np.vander(float_nodes, increasing=True), float_values)
    return [float(c) for c in coeffs]


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Exact]) -> list[Exact]:
    size = len(rhs)
    aug = [[Fraction(x) for x in row] + [Fraction(y)] for row, y in zip(matrix, rhs)]
    for col in range(size):
        pivot = next(i for i in range(col, size) if aug[i][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for i in range(size):
            if i != col and aug[i][col] != 0:
                factor = aug[i][col] / aug[col][col]
                aug[i] = [x - factor * y for x, y in zip(aug[i], aug[col])]
    solution: list[Exact] = []
    for i in range(size):
        value = aug[i][size] / aug[i][i]
        solution.append(int(value) if value.denominator == 1 else value)
    return solution


@dataclasses.dataclass(frozen=True)
class OracleReport:
    """Outcome of the randomized determinant oracle suite."""

    n_cases: int
    seed: int
    multilinear_failures: int
    coefficient_failures: int
    lower_coefficient_failures: int
    degeneracy_failures: int
    max_float_coefficient_error: float

    @property
    def passed(self) -> bool:
        return (
            self.multilinear_failures
            + self.coefficient_failures
            + self.lower_coefficient_failures
            + self.degeneracy_failures
            == 0
        )


def random_rank_matrix(
    rng: np.random.Generator, d: int, r: int, low: int = -5, high: int = 5
) -> Any:
    """Integer d x d matrix of rank at most r, built as a product L R."""
    if r == 0:
        return np.zeros((d, d), dtype=np.int64)
    left = rng.integers(low, high + 1, size=(d, r))
    right = rng.integers(low, high + 1, size=(r, d))
    return left @ right


def oracle_suite(
    n_cases: int = 200, seed: int = 0, max_dim: int = 4, max_terms: int = 3
) -> OracleReport:
    """Check the determinant identities on random integer matrices.

    Per case: the multi-linear expansion equals the determinant of the sum; for
    a of rank r, gamma_r(a, b) is the h^(d - r) coefficient of det(a + h b) and the
    lower coefficients vanish; for a of rank below r, gamma_r(a, b) is zero.
    """
    rng = make_rng(seed, 0)
    multilinear = coefficient = lower = degenerate = 0
    max_float_error = 0.0
    for case in range(n_cases):
        d = int(rng.integers(1, max_dim + 1))
        m = int(rng.integers(1, max_terms + 1))
        terms = [rng.integers(-5, 6, size=(d, d)) for _ in range(m)]
        if multilinear_expansion(terms, exact=True) != det_exact(sum(terms)):
            multilinear += 1
            _LOGGER.debug(f"case {case}: multi-linear identity failed for d={d}, m={m}")

        r = int(rng.integers(0, d + 1))
        a = random_rank_matrix(rng, d, r)
        b = rng.integers(-5, 6, size=(d, d))
        true_rank = rank(a) if np.any(a) else 0
        coeffs = det_polynomial(a, b, exact=True)
        expected = gamma_r(true_rank, a, b, exact=True)
        if coeffs[d - true_rank] != expected:
            coefficient += 1
            _LOGGER.debug(f"case {case}: gamma_{true_rank} differs from coefficient")
        if any(c != 0 for c in coeffs[: d - true_rank]):
            lower += 1
            _LOGGER.debug(f"case {case}: lower coefficients do not vanish")
        float_coeffs = det_polynomial(a, b)
        scale = max(1.0, max(abs(float(c)) for c in coeffs))
        max_float_error = max(
            max_float_error,
            max(abs(f - float(c)) for f, c in zip(float_coeffs, coeffs)) / scale,
        )

        if true_rank < d and gamma_r(true_rank + 1, a, b, exact=True) != 0:
            degenerate += 1
            _LOGGER.debug(f"case {case}: gamma_{true_rank + 1} nonzero for rank {true_rank}")

    report = OracleReport(
        n_cases=n_cases,
        seed=seed,
        multilinear_failures=multilinear,
        coefficient_failures=coefficient,
        lower_coefficient_failures=lower,
        degeneracy_failures=degenerate,
        max_float_coefficient_error=max_float_error,
    )
    _LOGGER.info(f"Determinant oracle suite: {report}")
    return report
