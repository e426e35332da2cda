"""Acceptance criteria 1-12 at their stated tolerances, one line each."""

import pytest

from bifurcata.nonlinearity import Nonlinearity
from bifurcata.verification import Env, run_criterion

KEYS = [str(i) for i in range(1, 13)]


@pytest.fixture(scope="module")
def env():
    return Env(Nonlinearity("cubic"))


@pytest.fixture(scope="module")
def sine_env():
    return Env(Nonlinearity("sine"))


@pytest.mark.parametrize("key", KEYS)
def test_criterion(key, env, sine_env):
    r = run_criterion(key, env, sine_env)
    print(r.line())
    assert r.passed, r.detail
