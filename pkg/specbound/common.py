"""Configuration, errors and shared helpers for the bound utilities."""

from __future__ import annotations

import datetime
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Optional

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, Field

ENV_FILE = Path(__file__).resolve().parents[1] / ".env"

DEFAULT_MONOMIAL_BUDGET = 2_000_000
DEFAULT_SEED = 20210419
MAX_SEED = 2**64


class InvalidArgumentError(ValueError):
    """Raised when an input violates a documented precondition."""


class BudgetExceededError(RuntimeError):
    """Raised when a polynomial would exceed the monomial budget."""

    def __init__(
        self,
        message: str,
        *,
        terms: Optional[int] = None,
        budget: Optional[int] = None,
        k: Optional[int] = None,
    ) -> None:
        super().__init__(message)
        self.terms = terms
        self.budget = budget
        self.k = k


class BracketViolationError(RuntimeError):
    """Raised when a lower estimate exceeds a certified upper bound."""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


def load_env() -> dict[str, str]:
    """Return values from the repository ``.env`` file, if present."""
    if not ENV_FILE.exists():
        return {}
    return {k: v for k, v in dotenv_values(ENV_FILE).items() if v is not None}


def _get_setting(name: str) -> Optional[str]:
    # process environment wins over the .env file
    value = os.getenv(name)
    if value is None:
        value = load_env().get(name)
    if value is None or not value.strip():
        return None
    return value.strip()


def _get_int(name: str, default: int, minimum: int, maximum: Optional[int] = None) -> int:
    raw = _get_setting(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidArgumentError(f"{name} must be an integer, got {raw!r}") from exc
    if value < minimum or (maximum is not None and value >= maximum):
        raise InvalidArgumentError(f"{name} is out of range: {value}")
    return value


def get_monomial_budget() -> int:
    """Return the maximum number of stored terms per polynomial."""
    return _get_int("SPECBOUND_MONOMIAL_BUDGET", DEFAULT_MONOMIAL_BUDGET, 1)


def get_thread_count() -> int:
    """Return the worker count used for concurrent bound methods."""
    default = min(4, os.cpu_count() or 1)
    return _get_int("SPECBOUND_THREADS", default, 1)


def get_default_seed() -> int:
    """Return the 64-bit seed used when none is given on the command line."""
    return _get_int("SPECBOUND_SEED", DEFAULT_SEED, 0, MAX_SEED)


def get_log_level() -> str:
    """Return the logging level name from the environment or ``INFO``."""
    level = (_get_setting("SPECBOUND_LOG_LEVEL") or "INFO").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise InvalidArgumentError(f"Unknown log level {level!r}")
    return level


def setup_logging() -> None:
    """Send log records to stderr so stdout stays machine readable."""
    logging.basicConfig(level=get_log_level(), stream=sys.stderr)


def get_output_dir() -> Path:
    """Return a directory for writing saved reports."""
    configured = _get_setting("SPECBOUND_OUTPUT_DIR")
    if configured:
        out_dir = Path(configured)
    else:
        out_dir = Path(tempfile.gettempdir()) / "specbound"
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def make_report_filename(tool: str, ext: str = "json") -> str:
    """Return a lowercase path like ``tool_YYYYMMDD_HHMMSS.json``."""
    ts = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
    name = f"{tool}_{ts}.{ext}".lower()
    return str(get_output_dir() / name)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return an independent counter-based generator for ``(seed, *stream)``.

    Streams are derived from the seed by spawn key, so the numbers drawn for
    one start never depend on how many other starts run.
    """
    seq = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(seq))


class BoundConfig(BaseModel):
    """Parameters shared by every bound method and the report assembly."""

    rho1_kmax: int = Field(32, ge=1)
    rho2_kmax: int = Field(4, ge=1)
    tau_kmax: int = Field(4, ge=1)
    matrix_levels: int = Field(6, ge=0)
    budget: int = Field(DEFAULT_MONOMIAL_BUDGET, ge=1)
    seed: int = Field(DEFAULT_SEED, ge=0, lt=MAX_SEED)
    starts: int = Field(32, ge=1)
    iters: int = Field(500, ge=1)
    tol: float = Field(1e-10, gt=0)
    sequence_tol: float = Field(1e-12, ge=0)
    cw_iters: int = Field(2000, ge=1)
    strict: bool = False
    include_timings: bool = False

    @classmethod
    def from_env(cls, **overrides: Any) -> "BoundConfig":
        """Build a config from environment defaults plus non-None overrides."""
        values: dict[str, Any] = {
            "budget": get_monomial_budget(),
            "seed": get_default_seed(),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
