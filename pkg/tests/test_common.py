import logging
import re

import numpy as np
import pytest
from pydantic import ValidationError

from specbound import common as mod
from specbound import version_string


def test_defaults_without_environment():
    assert mod.get_monomial_budget() == mod.DEFAULT_MONOMIAL_BUDGET
    assert mod.get_default_seed() == mod.DEFAULT_SEED
    assert mod.get_log_level() == "INFO"
    assert 1 <= mod.get_thread_count() <= 4


def test_env_file_is_loaded(tmp_path, monkeypatch):
    env = tmp_path / ".env"
    env.write_text("SPECBOUND_MONOMIAL_BUDGET=1234\nSPECBOUND_SEED=99\n")
    monkeypatch.setattr(mod, "ENV_FILE", env)
    assert mod.get_monomial_budget() == 1234
    assert mod.get_default_seed() == 99


def test_process_environment_wins(tmp_path, monkeypatch):
    env = tmp_path / ".env"
    env.write_text("SPECBOUND_THREADS=3\n")
    monkeypatch.setattr(mod, "ENV_FILE", env)
    monkeypatch.setenv("SPECBOUND_THREADS", "2")
    assert mod.get_thread_count() == 2


def test_blank_values_fall_back_to_defaults(monkeypatch):
    monkeypatch.setenv("SPECBOUND_SEED", "  ")
    assert mod.get_default_seed() == mod.DEFAULT_SEED


@pytest.mark.parametrize(
    "name,value",
    [
        ("SPECBOUND_MONOMIAL_BUDGET", "lots"),
        ("SPECBOUND_MONOMIAL_BUDGET", "0"),
        ("SPECBOUND_THREADS", "-1"),
        ("SPECBOUND_SEED", str(2**64)),
        ("SPECBOUND_LOG_LEVEL", "chatty"),
    ],
)
def test_invalid_settings_raise(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    getters = {
        "SPECBOUND_MONOMIAL_BUDGET": mod.get_monomial_budget,
        "SPECBOUND_THREADS": mod.get_thread_count,
        "SPECBOUND_SEED": mod.get_default_seed,
        "SPECBOUND_LOG_LEVEL": mod.get_log_level,
    }
    with pytest.raises(mod.InvalidArgumentError):
        getters[name]()


def test_log_level_is_normalized(monkeypatch):
    monkeypatch.setenv("SPECBOUND_LOG_LEVEL", "debug")
    assert mod.get_log_level() == "DEBUG"
    assert logging.getLevelName(mod.get_log_level()) == logging.DEBUG


def test_bound_config_from_env(monkeypatch):
    monkeypatch.setenv("SPECBOUND_MONOMIAL_BUDGET", "500")
    monkeypatch.setenv("SPECBOUND_SEED", "17")
    config = mod.BoundConfig.from_env(rho1_kmax=8, starts=None)
    assert config.budget == 500
    assert config.seed == 17
    assert config.rho1_kmax == 8
    assert config.starts == 32

    assert mod.BoundConfig.from_env(seed=3, budget=10).seed == 3


def test_bound_config_validation():
    with pytest.raises(ValidationError):
        mod.BoundConfig(rho1_kmax=0)
    with pytest.raises(ValidationError):
        mod.BoundConfig(tol=0.0)
    with pytest.raises(ValidationError):
        mod.BoundConfig(seed=-1)


def test_make_report_filename(tmp_path, monkeypatch):
    monkeypatch.setenv("SPECBOUND_OUTPUT_DIR", str(tmp_path / "out"))
    name = mod.make_report_filename("Bound", "CSV")
    assert re.search(r"bound_\d{8}_\d{6}\.csv$", name)
    assert (tmp_path / "out").is_dir()


def test_make_rng_streams_are_reproducible():
    a = mod.make_rng(7, 3).standard_normal(4)
    b = mod.make_rng(7, 3).standard_normal(4)
    c = mod.make_rng(7, 4).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_budget_error_carries_context():
    err = mod.BudgetExceededError("too big", terms=10, budget=5, k=4)
    assert (err.terms, err.budget, err.k) == (10, 5, 4)
    assert isinstance(mod.InvalidArgumentError("x"), ValueError)


def test_version_string():
    assert version_string().startswith("v")
