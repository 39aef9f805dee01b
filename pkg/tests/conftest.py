import numpy as np
import pytest

from raindet import rainsynth


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def noise_scene():
    """Drop-free 128x128 moving-noise sequence of 10 frames."""
    return rainsynth.moving_noise_sequence(128, 128, n_frames=10, shift=2, seed=7)


@pytest.fixture(scope="session")
def drop_scene():
    """Moving noise with one static circular drop of radius 20 at the center."""
    spec = rainsynth.DropSpec(rainsynth.DropShape.CIRCLE, 20, (64, 64), 255, 5, 17, 0.4)
    return rainsynth.moving_noise_sequence(128, 128, n_frames=10, shift=2, seed=11, drops=[spec])


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion; shown in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(key, ok, detail):
        status = "PASS" if ok is True else "FAIL" if ok is False else ok
        line = f"criterion {key}: {status}  {detail}"
        lines[str(key)] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
