import numpy as np
import pytest

from motionfid import _kernels
from motionfid.model import HUMANML3D_22, MotionSequence


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    with _kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def motion(data, source="simulated", state=(), meta=None, fps=30.0):
    data = np.asarray(data, dtype=np.float64)
    return MotionSequence(HUMANML3D_22, data, fps, source, frozenset(state), meta or {})


def random_motion(rng, T=20, source="simulated"):
    return motion(rng.standard_normal((T, 22, 3)), source=source)


# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
