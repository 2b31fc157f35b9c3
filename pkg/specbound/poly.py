"""Sparse homogeneous polynomials and polynomial maps.

A :class:`HomoPoly` stores the monomial coefficients ``c_j`` of
``x_1^{j_1} ... x_n^{j_n}`` for exponent vectors with ``|j| = p``. The
symmetric tensor entry of the same monomial is ``c_j * j! / p!``; that
weight only enters :func:`hs_norm` and the tensor conversions.

Terms are kept in graded lexicographic order (for a fixed degree this is
plain lexicographic order, highest power of ``x_1`` first) so every sum and
every serialized document is deterministic.
"""

from __future__ import annotations

import logging
import math
from functools import cached_property, lru_cache
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import gammaln

from .common import BudgetExceededError, InvalidArgumentError, get_monomial_budget

logger = logging.getLogger(__name__)

# keys must stay below this so sums of two keys never overflow int64
_KEY_LIMIT = 2**62
# exponent pairs expanded at once inside multiply
_BLOCK_PAIRS = 1 << 22


@lru_cache(maxsize=None)
def _log_factorials(p: int) -> np.ndarray:
    table = gammaln(np.arange(p + 1, dtype=float) + 1.0)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=4096)
def multinomial_coefficient(j: tuple[int, ...]) -> int:
    """Return the exact integer ``p! / (j_1! ... j_n!)`` with ``p = sum(j)``."""
    result = 1
    total = 0
    for e in j:
        if e < 0:
            raise InvalidArgumentError(f"Negative exponent in {j}")
        total += e
        result *= math.comb(total, e)
    return result


def multinomial_weight(j: Sequence[int], p: int) -> float:
    """Return ``j_1! ... j_n! / p!`` computed in log space."""
    j = tuple(int(e) for e in j)
    if any(e < 0 for e in j):
        raise InvalidArgumentError(f"Negative exponent in {j}")
    if sum(j) != p:
        raise InvalidArgumentError(f"Exponents {j} do not sum to degree {p}")
    table = _log_factorials(p)
    return float(np.exp(sum(table[e] for e in j) - table[p]))


def multinomial_weights(exponents: np.ndarray, p: int) -> np.ndarray:
    """Vectorized :func:`multinomial_weight` over the rows of ``exponents``."""
    table = _log_factorials(p)
    return np.exp(table[exponents].sum(axis=1) - table[p])


def _key_weights(n: int, base: int) -> Optional[np.ndarray]:
    # x_1 is the most significant digit so descending keys are grlex order
    if n == 1:
        return np.zeros(0, dtype=np.int64)
    if base ** (n - 1) >= _KEY_LIMIT:
        return None
    return np.array([base ** (n - 2 - i) for i in range(n - 1)], dtype=np.int64)


def _encode(exponents: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return exponents[:, :-1] @ weights


def _decode(keys: np.ndarray, n: int, p: int, base: int, weights: np.ndarray) -> np.ndarray:
    out = np.empty((keys.size, n), dtype=np.int64)
    for i, w in enumerate(weights):
        out[:, i] = (keys // w) % base
    out[:, -1] = p - out[:, :-1].sum(axis=1)
    return out


def _grlex_order(exponents: np.ndarray) -> np.ndarray:
    n = exponents.shape[1]
    return np.lexsort(tuple(-exponents[:, i] for i in range(n - 1, -1, -1)))


def _canonicalize(n: int, p: int, exponents: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge duplicate exponents, drop exact zeros and sort in grlex order."""
    if coeffs.size == 0:
        return np.zeros((0, n), dtype=np.int64), np.zeros(0)
    weights = _key_weights(n, p + 1)
    if weights is not None:
        keys = _encode(exponents, weights)
        uniq, inv = np.unique(keys, return_inverse=True)
        sums = np.bincount(inv.reshape(-1), weights=coeffs, minlength=uniq.size)
        uniq, sums = uniq[::-1], sums[::-1]
        keep = sums != 0
        return _decode(uniq[keep], n, p, p + 1, weights), np.ascontiguousarray(sums[keep])
    uniq_rows, inv = np.unique(exponents, axis=0, return_inverse=True)
    sums = np.bincount(inv.reshape(-1), weights=coeffs, minlength=uniq_rows.shape[0])
    order = _grlex_order(uniq_rows)
    uniq_rows, sums = uniq_rows[order], sums[order]
    keep = sums != 0
    return uniq_rows[keep], sums[keep]


def _budget_error(terms: int, budget: int, what: str = "Product") -> BudgetExceededError:
    return BudgetExceededError(
        f"{what} needs {terms} terms, monomial budget is {budget}",
        terms=terms,
        budget=budget,
    )


class HomoPoly:
    """Sparse homogeneous polynomial of degree ``p`` in ``n`` variables.

    ``exponents`` is an integer matrix with one row per monomial and
    ``coeffs`` the matching monomial coefficients. Duplicate rows are
    summed, exact zeros are dropped and rows are put in grlex order.
    Instances are immutable.
    """

    def __init__(self, n: int, p: int, exponents: Iterable = (), coeffs: Iterable = ()) -> None:
        n, p = int(n), int(p)
        if n < 1:
            raise InvalidArgumentError(f"Dimension must be positive, got {n}")
        if p < 0:
            raise InvalidArgumentError(f"Degree must be nonnegative, got {p}")
        try:
            E = np.asarray(exponents, dtype=np.int64)
            c = np.asarray(coeffs, dtype=float).reshape(-1)
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"Malformed polynomial terms: {exc}") from exc
        if E.size == 0:
            E = E.reshape(0, n)
        if E.ndim != 2 or E.shape[1] != n:
            raise InvalidArgumentError(f"Exponent vectors must have length {n}")
        if E.shape[0] != c.size:
            raise InvalidArgumentError(f"Got {E.shape[0]} exponent vectors but {c.size} coefficients")
        if (E < 0).any():
            raise InvalidArgumentError("Exponents must be nonnegative")
        if (E.sum(axis=1) != p).any():
            raise InvalidArgumentError(f"Every exponent vector must sum to degree {p}")
        if not np.isfinite(c).all():
            raise InvalidArgumentError("Coefficients must be finite")
        E, c = _canonicalize(n, p, E, c)
        self._assign(n, p, E, c)

    def _assign(self, n: int, p: int, exponents: np.ndarray, coeffs: np.ndarray) -> None:
        exponents.setflags(write=False)
        coeffs.setflags(write=False)
        self._n = n
        self._p = p
        self._exponents = exponents
        self._coeffs = coeffs

    @classmethod
    def _from_canonical(cls, n: int, p: int, exponents: np.ndarray, coeffs: np.ndarray) -> "HomoPoly":
        # rows already unique and in grlex order
        keep = coeffs != 0
        if not keep.all():
            exponents, coeffs = exponents[keep], coeffs[keep]
        obj = cls.__new__(cls)
        obj._assign(n, p, np.array(exponents, dtype=np.int64), np.array(coeffs, dtype=float))
        return obj

    @classmethod
    def _from_arrays(cls, n: int, p: int, exponents: np.ndarray, coeffs: np.ndarray) -> "HomoPoly":
        obj = cls.__new__(cls)
        obj._assign(n, p, *_canonicalize(n, p, exponents, coeffs))
        return obj

    @classmethod
    def from_terms(cls, n: int, p: int, terms: Mapping[Sequence[int], float]) -> "HomoPoly":
        """Build from a mapping of exponent tuples to coefficients."""
        rows = [tuple(j) for j in terms]
        return cls(n, p, rows, [terms[j] for j in terms])

    @classmethod
    def zero(cls, n: int, p: int) -> "HomoPoly":
        return cls(n, p)

    @classmethod
    def one(cls, n: int) -> "HomoPoly":
        return cls(n, 0, [[0] * n], [1.0])

    @classmethod
    def monomial(cls, j: Sequence[int], c: float = 1.0) -> "HomoPoly":
        j = [int(e) for e in j]
        return cls(len(j), sum(j), [j], [c])

    @classmethod
    def linear(cls, c: Sequence[float]) -> "HomoPoly":
        """Return the linear form ``c^T x``."""
        c = np.asarray(c, dtype=float).reshape(-1)
        return cls(c.size, 1, np.eye(c.size, dtype=np.int64), c)

    @property
    def n(self) -> int:
        return self._n

    @property
    def p(self) -> int:
        return self._p

    @property
    def exponents(self) -> np.ndarray:
        return self._exponents

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def is_zero(self) -> bool:
        return self._coeffs.size == 0

    @cached_property
    def terms(self) -> Mapping[tuple[int, ...], float]:
        """Read-only ``{exponents: coefficient}`` view in grlex order."""
        return MappingProxyType(
            {tuple(int(e) for e in row): float(c) for row, c in zip(self._exponents, self._coeffs)}
        )

    def __len__(self) -> int:
        return int(self._coeffs.size)

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], float]]:
        return iter(self.terms.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HomoPoly):
            return NotImplemented
        return (
            self._n == other._n
            and self._p == other._p
            and np.array_equal(self._exponents, other._exponents)
            and np.array_equal(self._coeffs, other._coeffs)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        shown = ", ".join(f"{j}: {c!r}" for j, c in list(self.terms.items())[:4])
        more = ", ..." if len(self) > 4 else ""
        return f"HomoPoly(n={self._n}, p={self._p}, {{{shown}{more}}})"

    def __call__(self, x: Sequence[float]) -> float:
        return evaluate(self, x)

    def __neg__(self) -> "HomoPoly":
        return scale(self, -1.0)

    def __add__(self, other: "HomoPoly") -> "HomoPoly":
        return add(self, other)

    def __sub__(self, other: "HomoPoly") -> "HomoPoly":
        return linear_combination([self, other], [1.0, -1.0])

    def __mul__(self, other: "HomoPoly | float") -> "HomoPoly":
        if isinstance(other, HomoPoly):
            return multiply(self, other)
        return scale(self, float(other))

    def __rmul__(self, other: float) -> "HomoPoly":
        return scale(self, float(other))

    def __pow__(self, k: int) -> "HomoPoly":
        return power(self, k)


def _require_same_shape(polys: Sequence[HomoPoly]) -> tuple[int, int]:
    n, p = polys[0].n, polys[0].p
    for f in polys[1:]:
        if f.n != n or f.p != p:
            raise InvalidArgumentError(
                f"Polynomials must share dimension and degree: ({n}, {p}) vs ({f.n}, {f.p})"
            )
    return n, p


def _as_point(x: Sequence[float], n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != n:
        raise InvalidArgumentError(f"Point has length {x.size}, expected {n}")
    return x


def scale(f: HomoPoly, a: float) -> HomoPoly:
    if a == 0:
        return HomoPoly.zero(f.n, f.p)
    return HomoPoly._from_canonical(f.n, f.p, f.exponents, f.coeffs * a)


def linear_combination(polys: Sequence[HomoPoly], coeffs: Sequence[float]) -> HomoPoly:
    """Return ``sum_i coeffs[i] * polys[i]`` for polynomials of one shape."""
    polys = list(polys)
    weights = np.asarray(coeffs, dtype=float).reshape(-1)
    if not polys:
        raise InvalidArgumentError("Need at least one polynomial")
    if weights.size != len(polys):
        raise InvalidArgumentError(f"Got {len(polys)} polynomials but {weights.size} coefficients")
    n, p = _require_same_shape(polys)
    E = np.concatenate([f.exponents for f in polys])
    c = np.concatenate([f.coeffs * a for f, a in zip(polys, weights)])
    return HomoPoly._from_arrays(n, p, E, c)


def add(f: HomoPoly, g: HomoPoly) -> HomoPoly:
    return linear_combination([f, g], [1.0, 1.0])


def evaluate(f: HomoPoly, x: Sequence[float]) -> float:
    """Return ``f(x)`` summed in grlex order with compensated summation."""
    x = _as_point(x, f.n)
    if f.is_zero:
        return 0.0
    values = f.coeffs * np.prod(x[None, :] ** f.exponents, axis=1)
    return math.fsum(values)


def evaluate_many(f: HomoPoly, points: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` at every row of ``points``."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != f.n:
        raise InvalidArgumentError(f"Points must have shape (N, {f.n})")
    out = np.zeros(X.shape[0])
    if f.is_zero:
        return out
    powers = X[:, :, None] ** np.arange(f.p + 1)
    cols = np.arange(f.n)
    for e, c in zip(f.exponents, f.coeffs):
        out += c * np.prod(powers[:, cols, e], axis=1)
    return out


def hs_norm(f: HomoPoly) -> float:
    """Return the Hilbert-Schmidt norm ``sqrt(sum_j (j!/p!) c_j^2)``."""
    if f.is_zero:
        return 0.0
    return math.sqrt(math.fsum(multinomial_weights(f.exponents, f.p) * f.coeffs**2))


def _multiply_dict(f: HomoPoly, g: HomoPoly, budget: int) -> HomoPoly:
    acc: dict[tuple[int, ...], float] = {}
    for jf, cf in f:
        for jg, cg in g:
            key = tuple(a + b for a, b in zip(jf, jg))
            acc[key] = acc.get(key, 0.0) + cf * cg
        if len(acc) > budget:
            raise _budget_error(len(acc), budget)
    result = HomoPoly(f.n, f.p + g.p, list(acc), list(acc.values()))
    if len(result) > budget:
        raise _budget_error(len(result), budget)
    return result


def multiply(f: HomoPoly, g: HomoPoly, budget: Optional[int] = None) -> HomoPoly:
    """Return the product ``f * g`` by exact coefficient convolution.

    Raises :class:`BudgetExceededError` when the product would hold more
    than ``budget`` terms.
    """
    if f.n != g.n:
        raise InvalidArgumentError(f"Dimension mismatch: {f.n} vs {g.n}")
    n, p = f.n, f.p + g.p
    if f.is_zero or g.is_zero:
        return HomoPoly.zero(n, p)
    budget = get_monomial_budget() if budget is None else budget
    base = p + 1
    weights = _key_weights(n, base)
    if weights is None:
        return _multiply_dict(f, g, budget)

    # exponent keys add without carry because every digit stays below base
    kf, kg = _encode(f.exponents, weights), _encode(g.exponents, weights)
    rows = max(1, _BLOCK_PAIRS // kg.size)
    part_keys: list[np.ndarray] = []
    part_vals: list[np.ndarray] = []
    for start in range(0, kf.size, rows):
        block = slice(start, start + rows)
        keys = (kf[block, None] + kg[None, :]).ravel()
        vals = (f.coeffs[block, None] * g.coeffs[None, :]).ravel()
        uniq, inv = np.unique(keys, return_inverse=True)
        if uniq.size > budget:
            raise _budget_error(uniq.size, budget)
        part_keys.append(uniq)
        part_vals.append(np.bincount(inv.reshape(-1), weights=vals, minlength=uniq.size))
    if len(part_keys) == 1:
        keys, vals = part_keys[0], part_vals[0]
    else:
        keys, inv = np.unique(np.concatenate(part_keys), return_inverse=True)
        vals = np.bincount(inv.reshape(-1), weights=np.concatenate(part_vals), minlength=keys.size)
    keep = vals != 0
    keys, vals = keys[keep][::-1], vals[keep][::-1]
    if keys.size > budget:
        raise _budget_error(keys.size, budget)
    logger.debug("multiply: %d x %d terms -> %d terms (degree %d)", len(f), len(g), keys.size, p)
    return HomoPoly._from_canonical(n, p, _decode(keys, n, p, base, weights), vals)


def power(f: HomoPoly, k: int, budget: Optional[int] = None) -> HomoPoly:
    """Return ``f**k`` by square-and-multiply."""
    if k < 1:
        raise InvalidArgumentError(f"Power must be at least 1, got {k}")
    result: Optional[HomoPoly] = None
    base = f
    remaining = k
    try:
        while remaining:
            if remaining & 1:
                result = base if result is None else multiply(result, base, budget)
            remaining >>= 1
            if remaining:
                base = multiply(base, base, budget)
    except BudgetExceededError as exc:
        raise BudgetExceededError(
            f"Computing power k={k}: {exc}", terms=exc.terms, budget=exc.budget, k=k
        ) from exc
    assert result is not None
    return result


def partial(f: HomoPoly, i: int) -> HomoPoly:
    """Return the partial derivative of ``f`` with respect to ``x_{i+1}``."""
    if f.p == 0:
        raise InvalidArgumentError("Cannot differentiate a constant polynomial")
    if not 0 <= i < f.n:
        raise InvalidArgumentError(f"Variable index {i} out of range for n={f.n}")
    col = f.exponents[:, i]
    mask = col > 0
    E = f.exponents[mask].copy()
    E[:, i] -= 1
    return HomoPoly._from_canonical(f.n, f.p - 1, E, f.coeffs[mask] * col[mask])


def gradient_map(f: HomoPoly) -> "PolyMap":
    """Return ``F = grad(f) / p``; it satisfies ``sum_i x_i F_i(x) = f(x)``."""
    if f.p < 1:
        raise InvalidArgumentError("Gradient map needs a polynomial of degree at least 1")
    return PolyMap([scale(partial(f, i), 1.0 / f.p) for i in range(f.n)])


def tensor_entries(f: HomoPoly) -> dict[tuple[int, ...], float]:
    """Return the symmetric tensor entries ``phi_j = c_j / multinomial(j)``."""
    return {j: c / multinomial_coefficient(j) for j, c in f}


def from_tensor_entries(n: int, p: int, entries: Mapping[Sequence[int], float]) -> HomoPoly:
    """Inverse of :func:`tensor_entries`."""
    rows = [tuple(int(e) for e in j) for j in entries]
    coeffs = [float(v) * multinomial_coefficient(j) for j, v in zip(rows, entries.values())]
    return HomoPoly(n, p, rows, coeffs)


def majorizes(f: HomoPoly, g: HomoPoly) -> bool:
    """Return True when every tensor entry of ``f`` dominates ``|entry|`` of ``g``."""
    _require_same_shape([f, g])
    phi = tensor_entries(f)
    if any(v < 0 for v in phi.values()):
        raise InvalidArgumentError("Majorizing polynomial must have nonnegative tensor entries")
    return all(phi.get(j, 0.0) >= abs(v) for j, v in tensor_entries(g).items())


def is_rank_one_power(f: HomoPoly, tol: float = 1e-9, budget: Optional[int] = None) -> bool:
    """Heuristic test for ``f = a (c^T x)^p``.

    Uses the equality case of ``||f g||_HS <= ||f||_HS ||g||_HS`` with
    ``g = f``.
    """
    if f.is_zero:
        return False
    if f.p == 0:
        return True
    h = hs_norm(f)
    return hs_norm(multiply(f, f, budget)) >= h * h * (1.0 - tol)


class PolyMap:
    """Map ``R^n -> R^m`` whose coordinates are homogeneous of one degree."""

    def __init__(self, coords: Iterable[HomoPoly]) -> None:
        coords = tuple(coords)
        if not coords:
            raise InvalidArgumentError("A polynomial map needs at least one coordinate")
        _require_same_shape(coords)
        self._coords = coords

    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        return cls.from_matrix(np.eye(n))

    @classmethod
    def from_matrix(cls, A: np.ndarray) -> "PolyMap":
        """Return the linear map ``x -> A x``."""
        A = np.asarray(A, dtype=float)
        if A.ndim != 2:
            raise InvalidArgumentError("Linear map needs a 2-D matrix")
        return cls(HomoPoly.linear(row) for row in A)

    @property
    def n(self) -> int:
        return self._coords[0].n

    @property
    def m(self) -> int:
        return len(self._coords)

    @property
    def p(self) -> int:
        return self._coords[0].p

    @property
    def coords(self) -> tuple[HomoPoly, ...]:
        return self._coords

    def __len__(self) -> int:
        return len(self._coords)

    def __iter__(self) -> Iterator[HomoPoly]:
        return iter(self._coords)

    def __getitem__(self, i: int) -> HomoPoly:
        return self._coords[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self._coords == other._coords

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"PolyMap(n={self.n}, m={self.m}, p={self.p})"

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return evaluate_map(self, x)


def evaluate_map(F: PolyMap, x: Sequence[float]) -> np.ndarray:
    x = _as_point(x, F.n)
    return np.array([evaluate(f, x) for f in F])


def scale_map(F: PolyMap, a: float) -> PolyMap:
    return PolyMap(scale(f, a) for f in F)


def hs_norm_map(F: PolyMap) -> float:
    """Return ``sqrt(sum_i ||F_i||_HS^2)``."""
    return math.sqrt(math.fsum(hs_norm(f) ** 2 for f in F))


def jacobian_polys(F: PolyMap) -> list[list[HomoPoly]]:
    """Return ``[[dF_i/dx_j]]`` as polynomials of degree ``p - 1``."""
    return [[partial(f, j) for j in range(F.n)] for f in F]


def evaluate_jacobian(polys: Sequence[Sequence[HomoPoly]], x: Sequence[float]) -> np.ndarray:
    return np.array([[evaluate(d, x) for d in row] for row in polys])


def euler_form(F: PolyMap) -> HomoPoly:
    """Return ``sum_i x_i F_i(x)`` for a square map."""
    if F.m != F.n:
        raise InvalidArgumentError(f"Euler form needs a square map, got m={F.m}, n={F.n}")
    eye = np.eye(F.n, dtype=np.int64)
    E = np.concatenate([f.exponents + eye[i] for i, f in enumerate(F)])
    c = np.concatenate([f.coeffs for f in F])
    return HomoPoly._from_arrays(F.n, F.p + 1, E, c)


def is_gradient_map(F: PolyMap, tol: float = 1e-10) -> bool:
    """Return True when ``F`` is the gradient map of its Euler form.

    This holds exactly when the tensor behind ``F`` is fully symmetric.
    """
    if F.m != F.n:
        return False
    G = gradient_map(euler_form(F))
    scale_ = max(1.0, hs_norm_map(F))
    return all(hs_norm(f - g) <= tol * scale_ for f, g in zip(F, G))


class _PowerCache:
    """Powers ``F_i**e`` built incrementally and shared across one composition."""

    def __init__(self, F: PolyMap, budget: Optional[int]) -> None:
        self._F = F
        self._budget = budget
        self._powers = [[HomoPoly.one(F.n)] for _ in range(F.m)]

    def get(self, i: int, e: int) -> HomoPoly:
        powers = self._powers[i]
        while len(powers) <= e:
            powers.append(multiply(powers[-1], self._F[i], self._budget))
        return powers[e]


def _compose(g: HomoPoly, F: PolyMap, cache: _PowerCache, budget: int) -> HomoPoly:
    if g.n != F.m:
        raise InvalidArgumentError(f"Cannot compose: polynomial has {g.n} variables, map has {F.m} outputs")
    q = g.p * F.p
    if g.is_zero:
        return HomoPoly.zero(F.n, q)
    products = []
    for e in g.exponents:
        term: Optional[HomoPoly] = None
        for i in np.flatnonzero(e):
            factor = cache.get(int(i), int(e[i]))
            term = factor if term is None else multiply(term, factor, budget)
        products.append(term if term is not None else HomoPoly.one(F.n))
    result = linear_combination(products, g.coeffs)
    if len(result) > budget:
        raise _budget_error(len(result), budget, "Composition")
    return result


def compose(g: HomoPoly, F: PolyMap, budget: Optional[int] = None) -> HomoPoly:
    """Return ``g(F(x))``, a polynomial of degree ``g.p * F.p``."""
    budget = get_monomial_budget() if budget is None else budget
    return _compose(g, F, _PowerCache(F, budget), budget)


def compose_map(G: PolyMap, F: PolyMap, budget: Optional[int] = None) -> PolyMap:
    """Return the map ``x -> G(F(x))``."""
    budget = get_monomial_budget() if budget is None else budget
    cache = _PowerCache(F, budget)
    return PolyMap(_compose(g, F, cache, budget) for g in G)


def map_iterate(F: PolyMap, k: int, budget: Optional[int] = None) -> PolyMap:
    """Return the ``k``-fold composition ``F o ... o F``."""
    if F.m != F.n:
        raise InvalidArgumentError("Only square maps can be iterated")
    if k < 1:
        raise InvalidArgumentError(f"Iterate index must be at least 1, got {k}")
    result = F
    for _ in range(k - 1):
        result = compose_map(F, result, budget)
    return result


def rotate(f: HomoPoly, Q: np.ndarray, tol: float = 1e-10) -> HomoPoly:
    """Return ``x -> f(Q x)`` for an orthogonal ``Q``."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (f.n, f.n):
        raise InvalidArgumentError(f"Rotation must be {f.n}x{f.n}, got {Q.shape}")
    defect = float(np.abs(Q.T @ Q - np.eye(f.n)).max())
    if defect > tol:
        raise InvalidArgumentError(f"Matrix is not orthogonal (max |Q^T Q - I| = {defect:.3e})")
    return compose(f, PolyMap.from_matrix(Q))


class PolyTerm(BaseModel):
    j: list[int]
    c: float = Field(allow_inf_nan=False)


class PolyDocument(BaseModel):
    n: int = Field(ge=1)
    p: int = Field(ge=0)
    terms: list[PolyTerm] = Field(default_factory=list)


class PolyMapDocument(BaseModel):
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    p: int = Field(ge=0)
    coords: list[PolyDocument]


def poly_to_document(f: HomoPoly) -> PolyDocument:
    return PolyDocument(n=f.n, p=f.p, terms=[PolyTerm(j=list(j), c=c) for j, c in f])


def poly_from_document(doc: PolyDocument) -> HomoPoly:
    return HomoPoly(doc.n, doc.p, [t.j for t in doc.terms], [t.c for t in doc.terms])


def poly_to_json(f: HomoPoly, indent: Optional[int] = None) -> str:
    return poly_to_document(f).model_dump_json(indent=indent)


def poly_from_json(text: str | bytes) -> HomoPoly:
    return poly_from_document(PolyDocument.model_validate_json(text))


def map_to_json(F: PolyMap, indent: Optional[int] = None) -> str:
    doc = PolyMapDocument(n=F.n, m=F.m, p=F.p, coords=[poly_to_document(f) for f in F])
    return doc.model_dump_json(indent=indent)


def map_from_document(doc: PolyMapDocument) -> PolyMap:
    if len(doc.coords) != doc.m:
        raise InvalidArgumentError(f"Map declares m={doc.m} but has {len(doc.coords)} coordinates")
    coords = [poly_from_document(c) for c in doc.coords]
    for f in coords:
        if f.n != doc.n or f.p != doc.p:
            raise InvalidArgumentError(f"Coordinate shape ({f.n}, {f.p}) does not match ({doc.n}, {doc.p})")
    return PolyMap(coords)


def map_from_json(text: str | bytes) -> PolyMap:
    return map_from_document(PolyMapDocument.model_validate_json(text))
