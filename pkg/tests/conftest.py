import os
import pathlib
import shutil

import pytest
from hypothesis import HealthCheck, settings

# one profile for the whole suite: derandomized (reproducible runs, no
# hidden RNG state) and without per-example deadlines, since several
# properties execute small interpreters or external processes
settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("suite")

REPO = pathlib.Path(__file__).resolve().parent.parent


def find_solver_cmd() -> str | None:
    cmd = os.environ.get("APC_SOLVER")
    if cmd:
        return cmd
    wrapper = REPO / "scripts" / "solver" / "z3cli.js"
    installed = REPO / "scripts" / "solver" / "node_modules" / "z3-solver"
    if wrapper.exists() and installed.exists() and shutil.which("node"):
        return f"node {wrapper}"
    return None


@pytest.fixture(scope="session")
def solver_cmd() -> str:
    cmd = find_solver_cmd()
    if cmd is None:
        pytest.skip("no SMT solver configured (set APC_SOLVER or npm install in scripts/solver)")
    return cmd


@pytest.fixture(scope="session")
def solver_config(solver_cmd):
    from apc.smt import SolverConfig

    return SolverConfig(cmd=solver_cmd, timeout=120.0)
