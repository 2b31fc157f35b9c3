"""Closed-form cases with known bound values, run by ``specbound demo``."""

from __future__ import annotations

import argparse
import logging
import math
from typing import Callable

import numpy as np
from pydantic import BaseModel

from .bounds import collatz_wielandt_bound, matrix_bound_d3, matrix_power_bounds, rho1_bounds, rho2_bounds
from .common import setup_logging
from .poly import HomoPoly, PolyMap, hs_norm, power
from .tensor import DenseTensor, hs_norm_tensor

logger = logging.getLogger(__name__)


class DemoCheck(BaseModel):
    name: str
    expected: float
    actual: float
    tolerance: float
    passed: bool


def _check(name: str, expected: float, actual: float, tolerance: float = 1e-9) -> DemoCheck:
    passed = abs(actual - expected) <= tolerance * max(1.0, abs(expected))
    return DemoCheck(name=name, expected=expected, actual=actual, tolerance=tolerance, passed=passed)


def _rank_one() -> list[DemoCheck]:
    f = HomoPoly.from_terms(2, 2, {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0})
    return [
        _check(f"rank-one (x1+x2)^2 rho1 k={k}", 2.0, hs_norm(power(f, k)) ** (1.0 / k))
        for k in (1, 2, 4, 8, 16, 32)
    ]


def _diagonal_rho1() -> list[DemoCheck]:
    f = HomoPoly.from_terms(2, 2, {(2, 0): 1.0, (0, 2): 1.0})
    seq = rho1_bounds(f, kmax=2)
    return [
        _check("diagonal x1^2+x2^2 rho1 k=1", math.sqrt(2.0), seq.values[0], 1e-12),
        _check("diagonal x1^2+x2^2 rho1 k=2", (8.0 / 3.0) ** 0.25, seq.values[1], 1e-12),
    ]


def _diagonal_rho2() -> list[DemoCheck]:
    F = PolyMap([HomoPoly.monomial((2, 0)), HomoPoly.monomial((0, 2))])
    seq = rho2_bounds(F, kmax=4)
    return [
        _check(f"diagonal map (x1^2, x2^2) rho2 k={k}", math.sqrt(2.0) ** (1.0 / (2**k - 1)), v)
        for k, v in zip(seq.ks, seq.values)
    ]


def _matrix() -> list[DemoCheck]:
    seq = matrix_power_bounds(np.diag([3.0, 1.0]), levels=6)
    return [
        _check("matrix diag(3,1) k=1", math.sqrt(10.0), seq.values[0]),
        _check("matrix diag(3,1) k=2", 82.0**0.25, seq.values[1]),
        _check("matrix diag(3,1) k=64", 3.0, seq.values[-1], 1e-6),
    ]


def _matrix_d3() -> list[DemoCheck]:
    T = DenseTensor.from_entries((2, 2, 2), [((1, 1, 1), 1.0), ((2, 2, 2), 1.0)])
    return [
        _check("d=3 matrix bound, diagonal (1,1)", 1.0, matrix_bound_d3(T), 1e-10),
        _check("d=3 HS norm, diagonal (1,1)", math.sqrt(2.0), hs_norm_tensor(T), 1e-12),
    ]


def _collatz_wielandt() -> list[DemoCheck]:
    diag = DenseTensor.from_entries((2, 2, 2, 2), [((1, 1, 1, 1), 1.0), ((2, 2, 2, 2), 0.5)])
    ones = DenseTensor(np.ones((2, 2, 2, 2)))
    return [
        _check("Collatz-Wielandt diagonal (1, 0.5)", 1.0, collatz_wielandt_bound(diag).bound),
        _check("Collatz-Wielandt all-ones 2x2x2x2", 8.0, collatz_wielandt_bound(ones).bound),
    ]


SUITES: list[Callable[[], list[DemoCheck]]] = [
    _rank_one,
    _diagonal_rho1,
    _diagonal_rho2,
    _matrix,
    _matrix_d3,
    _collatz_wielandt,
]


def run_demo() -> list[DemoCheck]:
    """Run every closed-form check and return the results."""
    checks: list[DemoCheck] = []
    for suite in SUITES:
        checks.extend(suite())
    for check in checks:
        if not check.passed:
            logger.error("demo check failed: %s expected %r got %r", check.name, check.expected, check.actual)
    return checks


def main() -> None:
    parser = argparse.ArgumentParser(description="Run the closed-form bound checks")
    parser.parse_args()
    setup_logging()
    checks = run_demo()
    for check in checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.actual!r}")
    raise SystemExit(0 if all(c.passed for c in checks) else 1)


if __name__ == "__main__":
    main()
