"""Dense tensors: norms, products, symmetrization, contractions and HOPM."""

from __future__ import annotations

import itertools
import logging
import math
from typing import Annotated, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, PositiveInt, model_validator

from .common import InvalidArgumentError, get_default_seed, make_rng
from .poly import HomoPoly, multinomial_coefficient

logger = logging.getLogger(__name__)

FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]


class DenseTensor:
    """Immutable real tensor with ``d >= 1`` modes stored row-major."""

    def __init__(self, data: Iterable) -> None:
        try:
            arr = np.array(data, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"Malformed tensor data: {exc}") from exc
        if arr.ndim < 1 or arr.size == 0:
            raise InvalidArgumentError("A tensor needs at least one mode of positive size")
        if not np.isfinite(arr).all():
            raise InvalidArgumentError("Tensor entries must be finite")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_dense(cls, dims: Sequence[int], flat: Sequence[float]) -> "DenseTensor":
        dims = tuple(int(n) for n in dims)
        flat = np.asarray(flat, dtype=float).reshape(-1)
        if not dims or any(n < 1 for n in dims):
            raise InvalidArgumentError(f"Invalid dims {dims}")
        if flat.size != math.prod(dims):
            raise InvalidArgumentError(f"Dense data has {flat.size} values, dims {dims} need {math.prod(dims)}")
        return cls(flat.reshape(dims))

    @classmethod
    def from_entries(cls, dims: Sequence[int], entries: Iterable[tuple[Sequence[int], float]]) -> "DenseTensor":
        """Build from ``(idx, value)`` pairs with 1-based indices; the rest is zero."""
        dims = tuple(int(n) for n in dims)
        if not dims or any(n < 1 for n in dims):
            raise InvalidArgumentError(f"Invalid dims {dims}")
        data = np.zeros(dims)
        seen: set[tuple[int, ...]] = set()
        for idx, value in entries:
            idx = tuple(int(i) for i in idx)
            if len(idx) != len(dims) or any(not 1 <= i <= n for i, n in zip(idx, dims)):
                raise InvalidArgumentError(f"Index {list(idx)} out of range for dims {list(dims)}")
            if idx in seen:
                raise InvalidArgumentError(f"Duplicate entry for index {list(idx)}")
            seen.add(idx)
            data[tuple(i - 1 for i in idx)] = value
        return cls(data)

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "DenseTensor":
        return cls(np.zeros(tuple(dims)))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self._data.shape)

    @property
    def d(self) -> int:
        return self._data.ndim

    @property
    def is_equidimensional(self) -> bool:
        return len(set(self.dims)) == 1

    @property
    def is_zero(self) -> bool:
        return not self._data.any()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self._data, other._data)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"DenseTensor(dims={list(self.dims)})"


def _require_equidimensional(T: DenseTensor, what: str) -> int:
    if not T.is_equidimensional:
        raise InvalidArgumentError(f"{what} needs equal dimensions, got {list(T.dims)}")
    return T.dims[0]


def hs_norm_tensor(T: DenseTensor) -> float:
    return math.sqrt(math.fsum((T.data**2).ravel()))


def inner(S: DenseTensor, T: DenseTensor) -> float:
    if S.dims != T.dims:
        raise InvalidArgumentError(f"Shape mismatch: {list(S.dims)} vs {list(T.dims)}")
    return math.fsum((S.data * T.data).ravel())


def kron(A: DenseTensor, B: DenseTensor) -> DenseTensor:
    """Return the outer product with ``A.d + B.d`` modes."""
    return DenseTensor(np.multiply.outer(A.data, B.data))


def abs_tensor(T: DenseTensor) -> DenseTensor:
    return DenseTensor(np.abs(T.data))


def is_symmetric(T: DenseTensor, tol: float = 1e-12) -> bool:
    """Return True when ``T`` is invariant under every index permutation."""
    if not T.is_equidimensional:
        return False
    # adjacent transpositions generate the symmetric group
    return all(
        np.abs(T.data - np.swapaxes(T.data, i, i + 1)).max(initial=0.0) <= tol for i in range(T.d - 1)
    )


def symmetrize(T: DenseTensor) -> DenseTensor:
    """Average ``T`` over all permutations of its modes."""
    _require_equidimensional(T, "Symmetrization")
    perms = list(itertools.permutations(range(T.d)))
    total = np.zeros(T.dims)
    for perm in perms:
        total += np.transpose(T.data, perm)
    return DenseTensor(total / len(perms))


def partial_symmetrize(T: DenseTensor) -> DenseTensor:
    """Average ``T`` over permutations of its trailing modes."""
    if T.d < 2 or len(set(T.dims[1:])) != 1:
        raise InvalidArgumentError(f"Partial symmetrization needs dims (m, n, ..., n), got {list(T.dims)}")
    perms = list(itertools.permutations(range(1, T.d)))
    total = np.zeros(T.dims)
    for perm in perms:
        total += np.transpose(T.data, (0,) + perm)
    return DenseTensor(total / len(perms))


def contract_power(T: DenseTensor, x: Sequence[float]) -> np.ndarray:
    """Return ``T x ... x`` contracted on every mode but the first."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if any(n != x.size for n in T.dims[1:]):
        raise InvalidArgumentError(f"Vector of length {x.size} does not match dims {list(T.dims)}")
    out = T.data
    for _ in range(T.d - 1):
        out = out @ x
    return np.asarray(out, dtype=float).reshape(-1)


def multilinear(T: DenseTensor, vectors: Sequence[Sequence[float]]) -> float:
    """Return ``<T, x_1 (x) ... (x) x_d>``."""
    if len(vectors) != T.d:
        raise InvalidArgumentError(f"Need {T.d} vectors, got {len(vectors)}")
    out = T.data
    for v, n in zip(reversed(vectors), reversed(T.dims)):
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != n:
            raise InvalidArgumentError(f"Vector of length {v.size} does not match mode size {n}")
        out = out @ v
    return float(out)


def slice_matrix(T: DenseTensor, *vectors: Sequence[float]) -> np.ndarray:
    """Contract modes 3..d with ``vectors`` and return the remaining matrix."""
    if T.d < 3:
        raise InvalidArgumentError("Slicing needs a tensor with at least three modes")
    if len(vectors) != T.d - 2:
        raise InvalidArgumentError(f"Need {T.d - 2} vectors, got {len(vectors)}")
    out = T.data
    for v, n in zip(reversed(vectors), reversed(T.dims[2:])):
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size != n:
            raise InvalidArgumentError(f"Vector of length {v.size} does not match mode size {n}")
        out = out @ v
    return np.array(out)


def poly_to_tensor(f: HomoPoly) -> DenseTensor:
    """Return the symmetric tensor of ``f``; dims are ``(n,) * p``."""
    n, p = f.n, f.p
    if p < 1:
        raise InvalidArgumentError("Degree-0 polynomials have no tensor form")
    base = p + 1
    if base**n >= 2**62:
        raise InvalidArgumentError(f"Tensor of dimension {n} and order {p} is too large to materialize")
    if f.is_zero:
        return DenseTensor.zeros((n,) * p)
    # the base-(p+1) digits of a key count how often each index occurs
    idx = np.indices((n,) * p, dtype=np.int64)
    keys = (base**idx).sum(axis=0)
    pows = base ** np.arange(n, dtype=np.int64)
    term_keys = f.exponents @ pows
    phi = f.coeffs / np.array([float(multinomial_coefficient(tuple(int(e) for e in j))) for j in f.exponents])
    order = np.argsort(term_keys)
    sorted_keys, sorted_phi = term_keys[order], phi[order]
    pos = np.clip(np.searchsorted(sorted_keys, keys), 0, sorted_keys.size - 1)
    data = np.where(sorted_keys[pos] == keys, sorted_phi[pos], 0.0)
    return DenseTensor(data)


def tensor_to_poly(T: DenseTensor, tol: float = 1e-12) -> HomoPoly:
    """Return the polynomial ``<T, x (x) ... (x) x>`` of a symmetric tensor."""
    if not is_symmetric(T, tol):
        raise InvalidArgumentError("Tensor is not symmetric")
    n, p = T.dims[0], T.d
    reps = np.array(list(itertools.combinations_with_replacement(range(n), p)), dtype=np.int64)
    values = T.data[tuple(reps.T)]
    E = np.stack([np.bincount(r, minlength=n) for r in reps])
    multinom = np.array([float(multinomial_coefficient(tuple(int(e) for e in j))) for j in E])
    return HomoPoly(n, p, E, values * multinom)


class HopmResult(BaseModel):
    value: float
    factors: list[list[float]]
    converged: bool
    iterations: int
    start: int
    seed: int


def _contract_except(data: np.ndarray, xs: Sequence[np.ndarray], j: int) -> np.ndarray:
    out = np.moveaxis(data, j, 0)
    for k in range(len(xs) - 1, -1, -1):
        if k != j:
            out = out @ xs[k]
    return out


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def hopm_spectral_estimate(
    T: DenseTensor,
    starts: int = 32,
    iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
) -> HopmResult:
    """Return a lower estimate of the spectral norm by alternating updates.

    Every factor in turn is replaced by the normalized contraction of ``T``
    with all other factors, so the objective never decreases. The best of
    ``starts`` seeded random starts wins, ties going to the lowest start.
    """
    if starts < 1:
        raise InvalidArgumentError(f"starts must be at least 1, got {starts}")
    seed = get_default_seed() if seed is None else seed
    if T.is_zero:
        factors = [np.eye(n)[0].tolist() for n in T.dims]
        return HopmResult(value=0.0, factors=factors, converged=True, iterations=0, start=0, seed=seed)

    best: Optional[HopmResult] = None
    for s in range(starts):
        rng = make_rng(seed, s)
        xs = [_unit(rng.standard_normal(n)) for n in T.dims]
        value = abs(multilinear(T, xs))
        converged = False
        it = 0
        for it in range(1, iters + 1):
            for j in range(T.d):
                g = _contract_except(T.data, xs, j)
                if np.linalg.norm(g) > 0:
                    xs[j] = _unit(g)
            new = abs(multilinear(T, xs))
            if new - value <= tol * max(1.0, new):
                value = max(value, new)
                converged = True
                break
            value = new
        if multilinear(T, xs) < 0:
            xs[-1] = -xs[-1]
        logger.debug("hopm start %d: value=%r after %d iterations", s, value, it)
        if best is None or value > best.value:
            best = HopmResult(
                value=value,
                factors=[x.tolist() for x in xs],
                converged=converged,
                iterations=it,
                start=s,
                seed=seed,
            )
    assert best is not None
    return best


class TensorEntry(BaseModel):
    idx: list[PositiveInt]
    v: FiniteFloat


class TensorDocument(BaseModel):
    dims: list[PositiveInt] = Field(min_length=1)
    entries: Optional[list[TensorEntry]] = None
    dense: Optional[list[FiniteFloat]] = None

    @model_validator(mode="after")
    def _one_layout(self) -> "TensorDocument":
        if (self.entries is None) == (self.dense is None):
            raise ValueError("exactly one of 'entries' or 'dense' must be given")
        return self


def tensor_from_document(doc: TensorDocument) -> DenseTensor:
    if doc.dense is not None:
        return DenseTensor.from_dense(doc.dims, doc.dense)
    return DenseTensor.from_entries(doc.dims, [(e.idx, e.v) for e in doc.entries or []])


def tensor_to_document(T: DenseTensor) -> TensorDocument:
    nz = np.argwhere(T.data != 0)
    entries = [TensorEntry(idx=[int(i) + 1 for i in idx], v=float(T.data[tuple(idx)])) for idx in nz]
    return TensorDocument(dims=list(T.dims), entries=entries)


def tensor_to_json(T: DenseTensor, indent: Optional[int] = None) -> str:
    return tensor_to_document(T).model_dump_json(indent=indent, exclude_none=True)


def tensor_from_json(text: str | bytes) -> DenseTensor:
    return tensor_from_document(TensorDocument.model_validate_json(text))
