import json
from pathlib import Path

import numpy as np
import pytest

from nirenberg.landscape import Landscape

LANDSCAPES = Path(__file__).resolve().parent.parent / "landscapes"


def axis(n, k, sign=1.0):
    v = [0.0] * (n + 1)
    v[k] = sign
    return v


def point(name, position, beta, b, K=1.0, **extra):
    return {"name": name, "position": list(position), "beta": beta, "b": list(b), "K": K, **extra}


def make_landscape(n, points, **kw):
    return Landscape.from_dict({"n": n, "critical_points": points, **kw})


def spread_positions(n, count, rng=None):
    """Well separated unit vectors: +-e_k first, then random ones far from all previous."""
    out = []
    for k in range(n + 1):
        for s in (1.0, -1.0):
            out.append(axis(n, k, s))
    return out[:count]


def load_example(name):
    return Landscape.load(LANDSCAPES / name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def landscapes_dir():
    return LANDSCAPES


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj), encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not getattr(module, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
