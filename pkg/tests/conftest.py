import time
from pathlib import Path

import pytest

from shouldertwin.anatomy import REFERENCE_LIMITS, GoniometerLimits, build_reach_cone

SUITE_BUDGET_S = 60.0
_VERDICTS: list[str] = []
_RUN = {"start": 0.0, "modules": set()}


def record_verdict(line: str) -> None:
    _VERDICTS.append(line)


def pytest_sessionstart(session):
    _RUN["start"] = time.perf_counter()


def pytest_collection_modifyitems(items):
    _RUN["modules"] = {Path(str(item.fspath)).name for item in items}


def _full_suite_line(terminalreporter):
    # only meaningful when every test module took part in this session
    on_disk = {p.name for p in Path(__file__).parent.glob("test_*.py")}
    if not on_disk <= _RUN["modules"]:
        return None
    elapsed = time.perf_counter() - _RUN["start"]
    failed = len(terminalreporter.stats.get("failed", [])) + len(terminalreporter.stats.get("error", []))
    ok = elapsed < SUITE_BUDGET_S and failed == 0
    return (f"criterion 7 (suite): {'PASS' if ok else 'FAIL'}  full suite {elapsed:.1f} s "
            f"(budget {SUITE_BUDGET_S:.0f} s), {failed} failing tests")


def pytest_terminal_summary(terminalreporter):
    lines = list(_VERDICTS)
    if _VERDICTS:
        suite = _full_suite_line(terminalreporter)
        if suite:
            lines.append(suite)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_cone():
    return build_reach_cone(REFERENCE_LIMITS)


@pytest.fixture(scope="session")
def hemisphere_cone():
    return build_reach_cone(GoniometerLimits(90.0, 90.0, 90.0, 90.0))


def _shipped_text(name):
    from importlib import resources
    return resources.files("shouldertwin").joinpath("data", "trajectories", f"{name}.toml").read_text()


SHIPPED = ("abduction_sweep", "excursion", "interior_hold")


@pytest.fixture(scope="session")
def human():
    from shouldertwin.coupling import family_for_profile
    from shouldertwin.profiles import resolve_profile
    profile = resolve_profile("human")
    return profile, family_for_profile(profile)


@pytest.fixture(scope="session")
def shipped_trajectories():
    from shouldertwin.harness import load_trajectory
    return {name: load_trajectory(_shipped_text(name)) for name in SHIPPED}


@pytest.fixture(scope="session")
def shipped_logs(human, shipped_trajectories):
    """One default run per shipped trajectory at its own rate."""
    from shouldertwin.harness import run_trajectory
    profile, family = human
    return {name: run_trajectory(profile, family, traj, grasp)
            for name, (traj, grasp) in shipped_trajectories.items()}


@pytest.fixture(scope="session")
def refined_logs(human, shipped_trajectories):
    """The same runs at twice the rate."""
    from shouldertwin.harness import run_trajectory, with_rate
    profile, family = human
    return {name: run_trajectory(profile, family, with_rate(traj, 2 * traj.rate), grasp)
            for name, (traj, grasp) in shipped_trajectories.items()}


@pytest.fixture(scope="session")
def replayed(human, shipped_logs):
    """Torques and regimes re-rendered offline from each shipped log's poses."""
    from shouldertwin.harness import replay_torques
    profile, family = human
    return {name: replay_torques(log, profile, family) for name, log in shipped_logs.items()}
