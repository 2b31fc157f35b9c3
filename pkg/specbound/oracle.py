"""Heuristic lower estimates of spectral norms.

Everything here returns values attained at actual unit vectors, so each
result is a valid lower bound even when the search has not converged.
"""

from __future__ import annotations

import logging
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.optimize import minimize_scalar

from .common import InvalidArgumentError, get_default_seed, make_rng
from .poly import (
    HomoPoly,
    PolyMap,
    evaluate,
    evaluate_jacobian,
    evaluate_many,
    evaluate_map,
    gradient_map,
    jacobian_polys,
)
from .tensor import DenseTensor, contract_power

logger = logging.getLogger(__name__)

# alpha is halved on rejected steps; below this the search stops
MIN_DAMPING = 1e-8
# points evaluated at once by the grid search
GRID_CHUNK = 1 << 16


class ShopmResult(BaseModel):
    value: float
    x: list[float]
    residual: float
    converged: bool
    iterations: int
    start: int
    seed: int


class GridResult(BaseModel):
    value: float
    x: list[float]
    points: int


class MapSigmaResult(BaseModel):
    value: float
    x: list[float]
    converged: bool
    iterations: int
    start: int
    seed: int


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def default_damping(p: int) -> float:
    return 0.9 if p % 2 == 0 else 0.5


def witness_residual(f: HomoPoly, x: Sequence[float]) -> float:
    """Return ``||F(x) - f(x) x||_2`` with ``F`` the gradient map of ``f``."""
    x = np.asarray(x, dtype=float)
    F = gradient_map(f)
    return float(np.linalg.norm(evaluate_map(F, x) - evaluate(f, x) * x))


def shopm_lower_bound(
    f: HomoPoly,
    starts: int = 32,
    iters: int = 500,
    tol: float = 1e-10,
    damping: Optional[float] = None,
    seed: Optional[int] = None,
) -> ShopmResult:
    """Symmetric higher-order power method for ``max |f(x)|`` on the unit sphere.

    Steps move ``x`` towards ``sign(f(x)) F(x) / ||F(x)||`` by a fraction
    ``damping`` of the way and are only accepted when ``|f|`` does not
    drop; a rejected step halves the damping.
    """
    if starts < 1:
        raise InvalidArgumentError(f"starts must be at least 1, got {starts}")
    if f.p < 1:
        raise InvalidArgumentError("Spectral norm search needs degree at least 1")
    seed = get_default_seed() if seed is None else seed
    n = f.n
    if f.is_zero:
        e1 = np.eye(n)[0].tolist()
        return ShopmResult(value=0.0, x=e1, residual=0.0, converged=True, iterations=0, start=0, seed=seed)
    if f.p == 1:
        c = np.array([f.terms.get(tuple(int(i == k) for i in range(n)), 0.0) for k in range(n)])
        x = _unit(c)
        return ShopmResult(
            value=float(np.linalg.norm(c)), x=x.tolist(), residual=witness_residual(f, x),
            converged=True, iterations=0, start=0, seed=seed,
        )

    alpha0 = default_damping(f.p) if damping is None else damping
    if not 0 < alpha0 <= 1:
        raise InvalidArgumentError(f"damping must lie in (0, 1], got {alpha0}")
    F = gradient_map(f)
    step_tol = 1e3 * tol
    best: Optional[ShopmResult] = None
    for s in range(starts):
        rng = make_rng(seed, s)
        x = _unit(rng.standard_normal(n))
        fx = evaluate(f, x)
        converged = False
        it = 0
        for it in range(1, iters + 1):
            g = evaluate_map(F, x)
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            direction = (1.0 if fx >= 0 else -1.0) * g / gn
            alpha = alpha0
            while alpha >= MIN_DAMPING:
                cand = _unit((1.0 - alpha) * x + alpha * direction)
                fc = evaluate(f, cand)
                if abs(fc) >= abs(fx):
                    break
                alpha /= 2
            else:
                converged = True
                break
            step = np.linalg.norm(cand - x)
            x, fx = cand, fc
            if step <= step_tol:
                converged = True
                break
        value = abs(fx)
        logger.debug("shopm start %d: value=%r after %d iterations", s, value, it)
        if best is None or value > best.value:
            best = ShopmResult(
                value=value,
                x=x.tolist(),
                residual=witness_residual(f, x),
                converged=converged,
                iterations=it,
                start=s,
                seed=seed,
            )
    assert best is not None
    return best


def _abs_values(f: HomoPoly, points: np.ndarray) -> np.ndarray:
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], GRID_CHUNK):
        out[start : start + GRID_CHUNK] = np.abs(evaluate_many(f, points[start : start + GRID_CHUNK]))
    return out


def _circle(theta: float | np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _sphere(theta: float | np.ndarray, phi: float | np.ndarray) -> np.ndarray:
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta) * np.ones_like(phi)],
        axis=-1,
    )


def _refine(objective, center: float, half_width: float) -> tuple[float, float]:
    res = minimize_scalar(
        lambda t: -objective(t),
        bounds=(center - half_width, center + half_width),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(-res.fun)


def grid_oracle(f: HomoPoly, resolution: Optional[int] = None) -> GridResult:
    """Brute-force ``max |f|`` on the unit sphere for ``n <= 3``.

    Scans a uniform angular grid over half the sphere (``|f|`` is even)
    and then refines the best point with a bounded scalar search along each
    angle.
    """
    n = f.n
    if n > 3:
        raise InvalidArgumentError(f"Grid search supports n <= 3, got n={n}")
    if n == 1:
        return GridResult(value=abs(evaluate(f, [1.0])), x=[1.0], points=1)

    def value_at(x: np.ndarray) -> float:
        return abs(evaluate(f, x))

    if n == 2:
        res = resolution or 2000
        thetas = np.linspace(0.0, np.pi, res, endpoint=False)
        vals = _abs_values(f, _circle(thetas))
        i = int(np.argmax(vals))
        theta, refined = _refine(lambda t: value_at(_circle(t)), thetas[i], np.pi / res)
        best_x, best = (_circle(theta), refined) if refined >= vals[i] else (_circle(thetas[i]), float(vals[i]))
        return GridResult(value=best, x=best_x.tolist(), points=res)

    res = resolution or 720
    thetas = np.linspace(0.0, np.pi, res)
    phis = np.linspace(0.0, np.pi, res, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    vals = _abs_values(f, _sphere(tt.ravel(), pp.ravel()))
    i = int(np.argmax(vals))
    theta, phi = float(tt.ravel()[i]), float(pp.ravel()[i])
    best = float(vals[i])
    t_new, v = _refine(lambda t: value_at(_sphere(t, phi)), theta, np.pi / res)
    if v >= best:
        theta, best = t_new, v
    p_new, v = _refine(lambda q: value_at(_sphere(theta, q)), phi, np.pi / res)
    if v >= best:
        phi, best = p_new, v
    return GridResult(value=best, x=_sphere(theta, phi).tolist(), points=res * res)


def eigen_residual(
    obj: DenseTensor | HomoPoly,
    x: Sequence[float],
    lam: float,
    kind: Literal["d", "sigma"] = "d",
) -> float:
    """Return the residual of an eigenpair candidate ``(lam, x)``.

    ``kind="d"`` measures ``T x^{d-1} - lam x^{o(d-1)}`` (entrywise power),
    ``kind="sigma"`` the fixed-point form ``T x^{d-1} - lam x``. A
    polynomial stands for its symmetric tensor.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(obj, HomoPoly):
        d = obj.p
        y = evaluate_map(gradient_map(obj), x)
    else:
        d = obj.d
        if not obj.is_equidimensional:
            raise InvalidArgumentError("Eigenpairs need an equidimensional tensor")
        y = contract_power(obj, x)
    if kind == "d":
        target = lam * x ** (d - 1)
    elif kind == "sigma":
        target = lam * x
    else:
        raise InvalidArgumentError(f"Unknown residual kind {kind!r}")
    return float(np.linalg.norm(y - target))


def map_sigma_estimate(
    F: PolyMap,
    starts: int = 32,
    iters: int = 500,
    tol: float = 1e-10,
    seed: Optional[int] = None,
) -> MapSigmaResult:
    """Lower estimate of ``max ||F(x)||_2`` over unit ``x``.

    Alternates ``y = F(x) / ||F(x)||`` with ``x <- J_F(x)^T y`` normalized,
    which is the two-block power method on the tensor of ``F`` without
    materializing it. Steps are accepted only when ``||F(x)||`` does not
    drop.
    """
    if starts < 1:
        raise InvalidArgumentError(f"starts must be at least 1, got {starts}")
    seed = get_default_seed() if seed is None else seed
    n = F.n
    if all(f.is_zero for f in F):
        return MapSigmaResult(value=0.0, x=np.eye(n)[0].tolist(), converged=True, iterations=0, start=0, seed=seed)
    jac = jacobian_polys(F) if F.p >= 1 else None
    step_tol = 1e3 * tol
    best: Optional[MapSigmaResult] = None
    for s in range(starts):
        rng = make_rng(seed, s)
        x = _unit(rng.standard_normal(n))
        fx = np.linalg.norm(evaluate_map(F, x))
        converged = jac is None
        it = 0
        for it in range(1, (iters if jac is not None else 0) + 1):
            y = evaluate_map(F, x)
            yn = np.linalg.norm(y)
            if yn == 0:
                break
            direction = _unit(evaluate_jacobian(jac, x).T @ (y / yn))
            alpha = 1.0
            while alpha >= MIN_DAMPING:
                cand = _unit((1.0 - alpha) * x + alpha * direction)
                fc = np.linalg.norm(evaluate_map(F, cand))
                if fc >= fx:
                    break
                alpha /= 2
            else:
                converged = True
                break
            step = np.linalg.norm(cand - x)
            x, fx = cand, fc
            if step <= step_tol:
                converged = True
                break
        if best is None or fx > best.value:
            best = MapSigmaResult(
                value=float(fx), x=x.tolist(), converged=converged, iterations=it, start=s, seed=seed
            )
    assert best is not None
    return best
