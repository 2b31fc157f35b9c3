"""Upper bounds on spectral norms and the assembled bound report.

Every value tagged as certified is a proven upper bound on the spectral
norm of the input; the lower end of the bracket comes from the heuristic
searches in :mod:`specbound.oracle`.
"""

from __future__ import annotations

import asyncio
import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterator, Literal, Optional

import numpy as np
from pydantic import BaseModel

from . import version_string
from .common import (
    BoundConfig,
    BracketViolationError,
    BudgetExceededError,
    InvalidArgumentError,
    get_default_seed,
    get_monomial_budget,
    get_thread_count,
    make_rng,
)
from .oracle import eigen_residual, grid_oracle, map_sigma_estimate, shopm_lower_bound
from .poly import (
    HomoPoly,
    PolyMap,
    compose_map,
    gradient_map,
    hs_norm,
    hs_norm_map,
    is_gradient_map,
    linear_combination,
    multiply,
    poly_to_json,
    scale,
    scale_map,
)
from .tensor import (
    DenseTensor,
    abs_tensor,
    contract_power,
    hopm_spectral_estimate,
    hs_norm_tensor,
    is_symmetric,
    poly_to_tensor,
    tensor_to_json,
    tensor_to_poly,
)

logger = logging.getLogger(__name__)

# largest symmetric tensor the report materializes from a polynomial
MAX_DENSE_ENTRIES = 1_000_000
BRACKET_TOL = 1e-9

SequenceMethod = Literal["rho1", "rho2", "rho3", "matrix"]
Termination = Literal["converged", "budget", "kmax"]


class BoundSequence(BaseModel):
    method: SequenceMethod
    ks: list[int]
    values: list[float]
    terminated_by: Termination
    budget_used: list[int]
    estimate: float
    certified: bool = True
    degenerate: bool = False
    reference: Optional[float] = None
    note: Optional[str] = None


class EigenEstimate(BaseModel):
    value: float
    upper: float
    residual: float
    iterations: int
    converged: bool


class CollatzWielandtResult(BaseModel):
    bound: float
    spread: Optional[float]
    x: list[float]
    iterations: int
    converged: bool
    eigen_residual: float
    attached: bool = False


def doubling_schedule(kmax: int) -> list[int]:
    """Return ``[1, 2, 4, ...]`` up to ``kmax``."""
    ks = []
    k = 1
    while k <= kmax:
        ks.append(k)
        k *= 2
    return ks


def _degenerate(method: SequenceMethod, note: str) -> BoundSequence:
    return BoundSequence(
        method=method,
        ks=[1],
        values=[0.0],
        terminated_by="converged",
        budget_used=[0],
        estimate=0.0,
        degenerate=True,
        note=note,
    )


def _settled(previous: float, value: float, tol: float) -> bool:
    return abs(previous - value) <= tol * value


def rho1_bounds(
    f: HomoPoly,
    kmax: int = 32,
    budget: Optional[int] = None,
    sequence_tol: float = 1e-12,
) -> BoundSequence:
    """Return ``||f^k||_HS^(1/k)`` for ``k = 1, 2, 4, ...`` up to ``kmax``.

    Every value is an upper bound on the spectral norm of ``f`` and the
    values do not increase along the schedule. ``f`` is scaled to unit HS
    norm first and the log of ``||f^k||_HS`` is carried separately so high
    powers never overflow.
    """
    if f.p < 1:
        raise InvalidArgumentError("rho1 needs a polynomial of degree at least 1")
    budget = get_monomial_budget() if budget is None else budget
    h = hs_norm(f)
    if h == 0:
        return _degenerate("rho1", "zero polynomial")

    cur = scale(f, 1.0 / h)
    log_norm = 0.0
    ks, values, used = [1], [h], [len(f)]
    terminated: Termination = "kmax"
    for k in doubling_schedule(kmax)[1:]:
        try:
            sq = multiply(cur, cur, budget)
        except BudgetExceededError as exc:
            logger.warning("rho1 stopped before k=%d: %s", k, exc)
            terminated = "budget"
            break
        nrm = hs_norm(sq)
        log_norm = 2.0 * log_norm + math.log(nrm)
        cur = scale(sq, 1.0 / nrm)
        value = h * math.exp(log_norm / k)
        ks.append(k)
        values.append(value)
        used.append(len(sq))
        logger.info("rho1 k=%d value=%r terms=%d", k, value, len(sq))
        if _settled(values[-2], value, sequence_tol):
            terminated = "converged"
            break
    return BoundSequence(
        method="rho1",
        ks=ks,
        values=values,
        terminated_by=terminated,
        budget_used=used,
        estimate=values[-1],
    )


def _check_square_map(F: PolyMap) -> None:
    if F.m != F.n:
        raise InvalidArgumentError(f"Map iteration needs a square map, got m={F.m}, n={F.n}")
    if F.p < 2:
        raise InvalidArgumentError(f"Map iteration bounds need degree p >= 2, got p={F.p}")


def _map_iterates(G: PolyMap, kmax: int, budget: int) -> Iterator[tuple[int, PolyMap, float]]:
    """Yield ``(k, G^k / ||G^k||_HS, log ||G^k||_HS)`` for a unit-norm ``G``."""
    cur = G
    log_norm = 0.0
    for k in range(1, kmax + 1):
        if k > 1:
            nxt = compose_map(G, cur, budget)
            nrm = hs_norm_map(nxt)
            log_norm = G.p * log_norm + math.log(nrm)
            cur = scale_map(nxt, 1.0 / nrm)
        yield k, cur, log_norm


def _iterate_exponent(p: int, k: int) -> int:
    return (p**k - 1) // (p - 1)


def rho2_bounds(
    F: PolyMap,
    kmax: int = 4,
    budget: Optional[int] = None,
    sequence_tol: float = 1e-12,
) -> BoundSequence:
    """Return ``||F^k||_HS^((p-1)/(p^k-1))`` for ``k = 1..kmax``.

    ``F^k`` is the k-fold composition. When ``F`` is a gradient map every
    value bounds the spectral norm of its Euler form and the quoted
    estimate is the smallest value; otherwise the sequence is marked
    uncertified.
    """
    _check_square_map(F)
    budget = get_monomial_budget() if budget is None else budget
    h = hs_norm_map(F)
    if h == 0:
        return _degenerate("rho2", "zero map")
    p = F.p
    ks: list[int] = []
    values: list[float] = []
    used: list[int] = []
    terminated: Termination = "kmax"
    try:
        for k, cur, log_norm in _map_iterates(scale_map(F, 1.0 / h), kmax, budget):
            value = h * math.exp(log_norm / _iterate_exponent(p, k))
            ks.append(k)
            values.append(value)
            used.append(sum(len(c) for c in cur))
            logger.info("rho2 k=%d value=%r terms=%d", k, value, used[-1])
            if len(values) > 1 and _settled(values[-2], value, sequence_tol):
                terminated = "converged"
                break
    except BudgetExceededError as exc:
        logger.warning("rho2 stopped at k=%d: %s", len(ks) + 1, exc)
        terminated = "budget"
    certified = is_gradient_map(F)
    return BoundSequence(
        method="rho2",
        ks=ks,
        values=values,
        terminated_by=terminated,
        budget_used=used,
        estimate=min(values),
        certified=certified,
        note=None if certified else "map is not a gradient map; only doubling indices bound rho2",
    )


def rho3_diagnostic(
    F: PolyMap,
    kmax: int = 4,
    budget: Optional[int] = None,
    starts: int = 8,
    iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
) -> BoundSequence:
    """Return heuristic ``||F^k||_sigma^((p-1)/(p^k-1))`` values.

    The spectral norm of each iterate is only estimated from below, so the
    sequence is never certified.
    """
    _check_square_map(F)
    budget = get_monomial_budget() if budget is None else budget
    h = hs_norm_map(F)
    if h == 0:
        seq = _degenerate("rho3", "zero map")
        return seq.model_copy(update={"certified": False})
    p = F.p
    ks: list[int] = []
    values: list[float] = []
    used: list[int] = []
    terminated: Termination = "kmax"
    try:
        for k, cur, log_norm in _map_iterates(scale_map(F, 1.0 / h), kmax, budget):
            sigma = map_sigma_estimate(cur, starts=starts, iters=iters, tol=tol, seed=seed).value
            value = 0.0 if sigma == 0 else h * math.exp((log_norm + math.log(sigma)) / _iterate_exponent(p, k))
            ks.append(k)
            values.append(value)
            used.append(sum(len(c) for c in cur))
            logger.info("rho3 k=%d value=%r", k, value)
    except BudgetExceededError as exc:
        logger.warning("rho3 stopped at k=%d: %s", len(ks) + 1, exc)
        terminated = "budget"
    return BoundSequence(
        method="rho3",
        ks=ks,
        values=values,
        terminated_by=terminated,
        budget_used=used,
        estimate=values[-1],
        certified=False,
        note="diagnostic: spectral norms of iterates are heuristic estimates",
    )


def _check_symmetric_matrix(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidArgumentError(f"Expected a square matrix, got shape {S.shape}")
    if np.abs(S - S.T).max(initial=0.0) > 1e-12:
        raise InvalidArgumentError("Matrix is not symmetric")
    return S


def dominant_eigenvalue(
    S: np.ndarray,
    tol: float = 1e-12,
    iters: int = 10_000,
    seed: Optional[int] = None,
) -> EigenEstimate:
    """Estimate the largest ``|eigenvalue|`` of a symmetric matrix.

    Power iteration runs on ``S @ S`` from a seeded random start and stops
    when the Rayleigh quotient settles. A settled quotient can still sit
    on a close second eigenvalue, so ``upper`` is the larger of the
    residual enclosure and the dense ``eigvalsh`` spectrum padded by its
    backward error.
    """
    S = _check_symmetric_matrix(S)
    n = S.shape[0]
    B = S @ S
    x = make_rng(get_default_seed() if seed is None else seed, 0).standard_normal(n)
    x /= np.linalg.norm(x)
    rho = float(x @ B @ x)
    converged = False
    it = 0
    for it in range(1, iters + 1):
        y = B @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return EigenEstimate(value=0.0, upper=0.0, residual=0.0, iterations=it, converged=True)
        x = y / ny
        new = float(x @ B @ x)
        if abs(new - rho) <= tol * new:
            rho = new
            converged = True
            break
        rho = new
    residual = float(np.linalg.norm(B @ x - rho * x))
    spectrum = np.abs(np.linalg.eigvalsh(S))
    dense = float(spectrum.max()) + n * np.finfo(float).eps * float(np.linalg.norm(S))
    value = math.sqrt(max(rho, 0.0))
    upper = max(math.sqrt(max(rho, 0.0) + residual), dense)
    if dense > value * (1.0 + 1e-9):
        logger.debug("power iteration settled at %r below the dense estimate %r", value, dense)
    return EigenEstimate(
        value=value,
        upper=upper,
        residual=residual,
        iterations=it,
        converged=converged,
    )


def matrix_power_bounds(S: np.ndarray, levels: int = 6, seed: Optional[int] = None) -> BoundSequence:
    """Return ``||S^k||_HS^(1/k)`` for ``k = 1, 2, ..., 2^levels`` by repeated squaring."""
    S = _check_symmetric_matrix(S)
    h = float(np.linalg.norm(S))
    if h == 0:
        return _degenerate("matrix", "zero matrix")
    A = S / h
    log_norm = 0.0
    ks, values = [1], [h]
    for k in doubling_schedule(2**levels)[1:]:
        A = A @ A
        nrm = float(np.linalg.norm(A))
        if nrm == 0:
            break
        log_norm = 2.0 * log_norm + math.log(nrm)
        A = A / nrm
        ks.append(k)
        values.append(h * math.exp(log_norm / k))
    reference = dominant_eigenvalue(S, seed=seed).value
    logger.info("matrix bounds: last=%r dominant |eigenvalue|=%r", values[-1], reference)
    return BoundSequence(
        method="matrix",
        ks=ks,
        values=values,
        terminated_by="kmax",
        budget_used=[S.size] * len(ks),
        estimate=values[-1],
        reference=reference,
    )


def matrix_bound_d3(T: DenseTensor, seed: Optional[int] = None) -> float:
    """Return ``sqrt(lambda_max(M))`` with ``M_kl = sum_ij t_ijk t_ijl``."""
    if T.d != 3:
        raise InvalidArgumentError(f"Matrix bound needs a 3-mode tensor, got d={T.d}")
    if T.is_zero:
        return 0.0
    M = np.einsum("ijk,ijl->kl", T.data, T.data)
    M = (M + M.T) / 2
    est = dominant_eigenvalue(M, seed=seed)
    bound = math.sqrt(est.upper)
    logger.debug("matrix_d3: lambda_max=%r residual=%r", est.value, est.residual)
    return min(bound, hs_norm_tensor(T))


def tau_polynomial(S: DenseTensor) -> HomoPoly:
    """Return ``x -> ||S(x, ..., x)||_F^2`` with ``d - 2`` copies of ``x``."""
    if S.d < 3:
        raise InvalidArgumentError("tau needs a tensor with at least three modes")
    if not is_symmetric(S):
        raise InvalidArgumentError("tau needs a symmetric tensor")
    n = S.dims[0]
    squares, weights = [], []
    for i in range(n):
        for j in range(i, n):
            entry = tensor_to_poly(DenseTensor(S.data[i, j]))
            squares.append(multiply(entry, entry))
            weights.append(1.0 if i == j else 2.0)
    return linear_combination(squares, weights)


def tau_tilde_bound(S: DenseTensor, kmax: int = 4, budget: Optional[int] = None) -> float:
    """Bound the spectral norm of ``S`` by the power bounds of its tau polynomial.

    ``tau`` is nonnegative, so its maximum on the sphere equals its spectral
    norm and every ``||tau^k||_HS^(1/k)`` bounds it. Returns the square root
    of the smallest such value for ``k = 1..kmax``.
    """
    budget = get_monomial_budget() if budget is None else budget
    tau = tau_polynomial(S)
    h = hs_norm(tau)
    if h == 0:
        return 0.0
    g = scale(tau, 1.0 / h)
    cur = g
    log_norm = 0.0
    best = h
    for k in range(2, kmax + 1):
        try:
            nxt = multiply(cur, g, budget)
        except BudgetExceededError as exc:
            logger.warning("tau bound stopped at k=%d: %s", k, exc)
            break
        nrm = hs_norm(nxt)
        log_norm += math.log(nrm)
        cur = scale(nxt, 1.0 / nrm)
        best = min(best, h * math.exp(log_norm / k))
    return math.sqrt(best)


def collatz_wielandt_bound(
    T: DenseTensor,
    x0: Optional[np.ndarray] = None,
    iters: int = 2000,
    tol: float = 1e-12,
) -> CollatzWielandtResult:
    """Upper bound on the spectral radius of ``|T|`` from Collatz-Wielandt quotients.

    Runs ``x <- (|T| x^{d-1})^{1/(d-1)}`` normalized to sum one and keeps the
    smallest ``max_i (|T| x^{d-1})_i / x_i^{d-1}`` seen. The iteration stops
    when the quotients agree within ``tol`` or an entry of ``x`` vanishes.
    """
    if T.d < 2 or not T.is_equidimensional:
        raise InvalidArgumentError(f"Collatz-Wielandt needs an equidimensional tensor with d >= 2, got {list(T.dims)}")
    n, d = T.dims[0], T.d
    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.size != n or not (x > 0).all():
        raise InvalidArgumentError("Start vector must be strictly positive with length n")
    A = abs_tensor(T)
    x = x / x.sum()
    if A.is_zero:
        return CollatzWielandtResult(
            bound=0.0, spread=None, x=x.tolist(), iterations=0, converged=True, eigen_residual=0.0
        )

    best = math.inf
    best_x = x
    spread: Optional[float] = None
    converged = False
    it = 0
    for it in range(1, iters + 1):
        xp = x ** (d - 1)
        if (xp == 0).any():
            break
        y = contract_power(A, x)
        q = y / xp
        qmax, qmin = float(q.max()), float(q.min())
        if qmax < best:
            best, best_x = qmax, x
            spread = qmax / qmin if qmin > 0 else None
        if qmax - qmin <= tol * qmax:
            converged = True
            break
        root = y ** (1.0 / (d - 1))
        total = root.sum()
        if total == 0:
            break
        x = root / total
    u = best_x / np.linalg.norm(best_x, ord=d)
    residual = eigen_residual(A, u, best)
    logger.info("collatz-wielandt bound=%r spread=%r after %d iterations", best, spread, it)
    return CollatzWielandtResult(
        bound=best,
        spread=spread,
        x=best_x.tolist(),
        iterations=it,
        converged=converged,
        eigen_residual=residual,
    )


class InputDescriptor(BaseModel):
    kind: Literal["poly", "tensor"]
    n: int
    d: int
    dims: list[int]
    symmetric: bool
    source: Optional[str] = None
    sha256: str


class OracleEstimate(BaseModel):
    method: str
    value: float
    x: list[float]
    converged: bool = True
    residual: Optional[float] = None
    factors: Optional[list[list[float]]] = None


class Bracket(BaseModel):
    lower: float
    upper: float
    lower_method: str
    upper_method: str


class MethodFailure(BaseModel):
    method: str
    error_type: str
    message: str


class BoundReport(BaseModel):
    version: str
    input: InputDescriptor
    config: BoundConfig
    seed: int
    sequences: list[BoundSequence]
    hs_trivial: float
    matrix_d3: Optional[float] = None
    tau_tilde: Optional[float] = None
    collatz_wielandt: Optional[CollatzWielandtResult] = None
    oracles: list[OracleEstimate]
    oracle_lower: Optional[OracleEstimate] = None
    bracket: Bracket
    failures: list[MethodFailure]
    truncated: bool
    timings: Optional[dict[str, float]] = None

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def sequence(self, method: str) -> Optional[BoundSequence]:
        return next((s for s in self.sequences if s.method == method), None)


def report_rows(report: BoundReport) -> list[dict[str, Any]]:
    """Flatten a report into ``method, k, value, terminated_by`` rows."""
    rows: list[dict[str, Any]] = []
    for seq in report.sequences:
        for k, value in zip(seq.ks, seq.values):
            rows.append({"method": seq.method, "k": k, "value": value, "terminated_by": seq.terminated_by})
    scalars = {
        "hs_trivial": report.hs_trivial,
        "matrix_d3": report.matrix_d3,
        "tau_tilde": report.tau_tilde,
        "collatz_wielandt": report.collatz_wielandt.bound if report.collatz_wielandt else None,
    }
    for method, value in scalars.items():
        if value is not None:
            rows.append({"method": method, "k": "", "value": value, "terminated_by": ""})
    for est in report.oracles:
        rows.append({"method": f"oracle_{est.method}", "k": "", "value": est.value, "terminated_by": ""})
    rows.append({"method": "bracket_lower", "k": "", "value": report.bracket.lower, "terminated_by": ""})
    rows.append({"method": "bracket_upper", "k": "", "value": report.bracket.upper, "terminated_by": ""})
    return rows


def _describe(source: HomoPoly | DenseTensor, name: Optional[str]) -> tuple[Optional[HomoPoly], Optional[DenseTensor], InputDescriptor]:
    if isinstance(source, HomoPoly):
        f = source
        if f.p < 1:
            raise InvalidArgumentError("Bounds need a polynomial of degree at least 1")
        T = poly_to_tensor(f) if f.n**f.p <= MAX_DENSE_ENTRIES else None
        canonical = poly_to_json(f)
        desc = InputDescriptor(
            kind="poly", n=f.n, d=f.p, dims=[f.n] * f.p, symmetric=True, source=name,
            sha256=hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        )
        return f, T, desc
    T = source
    symmetric = is_symmetric(T)
    f = tensor_to_poly(T) if symmetric else None
    desc = InputDescriptor(
        kind="tensor", n=T.dims[0], d=T.d, dims=list(T.dims), symmetric=symmetric, source=name,
        sha256=hashlib.sha256(tensor_to_json(T).encode("utf-8")).hexdigest(),
    )
    return f, T, desc


def _plan(f: Optional[HomoPoly], T: Optional[DenseTensor], config: BoundConfig) -> list[tuple[str, Callable[[], Any]]]:
    seed = config.seed
    jobs: list[tuple[str, Callable[[], Any]]] = []
    if f is not None:
        jobs.append(("rho1", lambda: rho1_bounds(f, config.rho1_kmax, config.budget, config.sequence_tol)))
        if f.p >= 3:
            F = gradient_map(f)
            jobs.append(("rho2", lambda: rho2_bounds(F, config.rho2_kmax, config.budget, config.sequence_tol)))
            jobs.append(
                (
                    "rho3",
                    lambda: rho3_diagnostic(
                        F, config.rho2_kmax, config.budget, config.starts, config.iters, config.tol, seed
                    ),
                )
            )
        if f.p == 2 and T is not None:
            jobs.append(("matrix", lambda: matrix_power_bounds(T.data, config.matrix_levels, seed)))
        if f.p >= 3 and T is not None:
            jobs.append(("tau_tilde", lambda: tau_tilde_bound(T, config.tau_kmax, config.budget)))
        jobs.append(("shopm", lambda: shopm_lower_bound(f, config.starts, config.iters, config.tol, seed=seed)))
        if f.n <= 3:
            jobs.append(("grid", lambda: grid_oracle(f)))
    elif T is not None:
        jobs.append(("hopm", lambda: hopm_spectral_estimate(T, config.starts, config.iters, config.tol, seed)))
    if T is not None and T.d == 3:
        jobs.append(("matrix_d3", lambda: matrix_bound_d3(T, seed)))
    if T is not None and T.d >= 2 and T.is_equidimensional:
        jobs.append(("collatz_wielandt", lambda: collatz_wielandt_bound(T, iters=config.cw_iters, tol=config.tol)))
    return jobs


def _timed(fn: Callable[[], Any]) -> tuple[Any, float]:
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


async def assemble_report_async(
    source: HomoPoly | DenseTensor,
    config: Optional[BoundConfig] = None,
    source_name: Optional[str] = None,
) -> BoundReport:
    """Run every applicable method concurrently and build the bracket.

    A method that raises is recorded in ``failures`` and the others still
    run. Raises :class:`BracketViolationError` when an oracle value exceeds
    a certified upper bound.
    """
    config = config or BoundConfig.from_env()
    f, T, desc = _describe(source, source_name)
    hs = hs_norm(f) if f is not None else hs_norm_tensor(T)
    jobs = _plan(f, T, config)
    logger.info("running %d methods on %s input (n=%d, d=%d)", len(jobs), desc.kind, desc.n, desc.d)

    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=get_thread_count()) as pool:
        outcomes = await asyncio.gather(
            *(loop.run_in_executor(pool, _timed, fn) for _, fn in jobs),
            return_exceptions=True,
        )

    sequences: list[BoundSequence] = []
    oracles: list[OracleEstimate] = []
    failures: list[MethodFailure] = []
    timings: dict[str, float] = {}
    uppers: list[tuple[str, float]] = [("hs_trivial", hs)]
    matrix_d3 = tau_tilde = None
    cw: Optional[CollatzWielandtResult] = None
    symmetric = desc.symmetric

    for (name, _), outcome in zip(jobs, outcomes):
        if isinstance(outcome, BaseException):
            if not isinstance(outcome, Exception):
                raise outcome
            logger.warning("method %s failed: %s", name, outcome)
            failures.append(MethodFailure(method=name, error_type=type(outcome).__name__, message=str(outcome)))
            continue
        result, seconds = outcome
        timings[name] = seconds
        if isinstance(result, BoundSequence):
            sequences.append(result)
            if result.certified:
                uppers.append((name, result.estimate))
        elif name == "matrix_d3":
            matrix_d3 = result
            uppers.append((name, result))
        elif name == "tau_tilde":
            tau_tilde = result
            uppers.append((name, result))
        elif name == "collatz_wielandt":
            cw = result.model_copy(update={"attached": symmetric and desc.d % 2 == 0})
            if cw.attached:
                uppers.append((name, cw.bound))
        elif name == "shopm":
            oracles.append(
                OracleEstimate(method=name, value=result.value, x=result.x, converged=result.converged, residual=result.residual)
            )
        elif name == "grid":
            oracles.append(OracleEstimate(method=name, value=result.value, x=result.x))
        elif name == "hopm":
            oracles.append(
                OracleEstimate(
                    method=name, value=result.value, x=result.factors[0], converged=result.converged, factors=result.factors
                )
            )

    upper_method, upper = min(uppers, key=lambda item: item[1])
    best_oracle = max(oracles, key=lambda o: o.value) if oracles else None
    lower = best_oracle.value if best_oracle else 0.0
    report = BoundReport(
        version=version_string(),
        input=desc,
        config=config,
        seed=config.seed,
        sequences=sequences,
        hs_trivial=hs,
        matrix_d3=matrix_d3,
        tau_tilde=tau_tilde,
        collatz_wielandt=cw,
        oracles=oracles,
        oracle_lower=best_oracle,
        bracket=Bracket(
            lower=lower,
            upper=upper,
            lower_method=best_oracle.method if best_oracle else "none",
            upper_method=upper_method,
        ),
        failures=failures,
        truncated=any(s.terminated_by == "budget" for s in sequences),
        timings=timings if config.include_timings else None,
    )
    if lower > upper + BRACKET_TOL * max(1.0, upper):
        msg = f"Bracket violation: lower {lower!r} ({report.bracket.lower_method}) > upper {upper!r} ({upper_method})"
        logger.error(msg)
        raise BracketViolationError(msg, report)
    logger.info("bracket [%r, %r] from %s / %s", lower, upper, report.bracket.lower_method, upper_method)
    return report


def assemble_report(
    source: HomoPoly | DenseTensor,
    config: Optional[BoundConfig] = None,
    source_name: Optional[str] = None,
) -> BoundReport:
    """Synchronous wrapper around :func:`assemble_report_async`."""
    return asyncio.run(assemble_report_async(source, config, source_name))
