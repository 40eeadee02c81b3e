import numpy as np
import pytest
from hypothesis import settings

from stepanov.jets import manifest_from_dict

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sphere2():
    """Unit 2-sphere in polar coordinates, away from the poles."""
    return manifest_from_dict(
        {
            "name": "s2",
            "dim": 2,
            "coords": ["θ", "φ"],
            "signature": [1, 1],
            "domain": [[0.2, 2.9], [-3, 3]],
            "metric": {"1,1": "1", "2,2": "sin(θ)^2"},
        }
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Record one pass/fail line; the lines are repeated in the terminal summary."""

    def record(number: int, title: str, ok: bool, measured: str, bound: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {measured} (bound {bound})"
        _CRITERIA.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
