from __future__ import annotations

import pytest

from hypermt import asymptotics_lab as lab
from hypermt.radial_solver import ShootingConfig, solve_for_lambda

# criterion number -> (passed, message), filled by test_acceptance
ACCEPTANCE: dict = {}

_SOLUTIONS: dict = {}
_SWEEPS: dict = {}


def cached_solution(lam: float, config: ShootingConfig | None = None):
    key = (lam, (config or ShootingConfig()).key())
    if key not in _SOLUTIONS:
        _SOLUTIONS[key] = solve_for_lambda(lam, config)
    return _SOLUTIONS[key]


def cached_sweep(grid=lab.DEFAULT_SWEEP):
    key = tuple(grid)
    if key not in _SWEEPS:
        _SWEEPS[key] = lab.run_sweep(grid, threads=1)
    return _SWEEPS[key]


@pytest.fixture(scope="session")
def solution():
    return cached_solution


@pytest.fixture(scope="session")
def sweep():
    return {r.lam: r for r in cached_sweep()}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
