import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def small_synth():
    from texturekit.dataset import SynthConfig, generate

    return generate(SynthConfig(n_per_class=4, size=48, seed=7, difficulty=0.0))


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(name, passed, seconds, limit, detail)``."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(name, passed, seconds, limit=None, detail=""):
        budget = f" (limit {limit:g}s)" if limit is not None else ""
        line = f"{'PASS' if passed else 'FAIL'}  {name}  [{seconds:.2f}s{budget}] {detail}".rstrip()
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
