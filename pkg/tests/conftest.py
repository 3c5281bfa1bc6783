import numpy as np
import pytest

from respiscreen.synth import Scenario, render
from respiscreen.thermal import Calibration, RadiometricClip

FPS = 8.7


def clip_from_temps(temps, fps=FPS, cal=Calibration(0.01, 0.0)):
    """Quantize a (n, h, w) temperature stack into a uniformly sampled clip."""
    temps = np.asarray(temps, dtype=np.float64)
    n = temps.shape[0]
    ts = np.floor(np.arange(n) * (1e6 / fps) + 0.5).astype(np.uint64)
    return RadiometricClip(cal.to_counts(temps), ts, fps, cal)


@pytest.fixture(scope="session")
def render_cached():
    cache = {}

    def _render(**kw):
        key = tuple(sorted((k, tuple(map(tuple, v)) if k == "apnea_windows" else v) for k, v in kw.items()))
        if key not in cache:
            cache[key] = render(Scenario(**kw))
        return cache[key]

    return _render


@pytest.fixture(scope="session")
def phantom(render_cached):
    """Noise-free, static 15 bpm phantom."""
    return render_cached(breath_rate=15.0)


ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, ok, detail)``; lines are echoed live and again in the summary."""
    results = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def _record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        results[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
