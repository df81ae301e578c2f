import difflib
import json
import math
import os
from pathlib import Path

import pytest

from ..quad import QuadratureSpec

GOLDENS_ENV = "HERZLAB_UPDATE_GOLDENS"


def _close(a, b, rel_tol: float) -> bool:
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_close(a[k], b[k], rel_tol) for k in a)
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(_close(x, y, rel_tol) for x, y in zip(a, b))
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=rel_tol, abs_tol=1e-300)
    return a == b


def golden_check(name: str, report, golden_dir, rel_tol: float = 1e-6):
    """Compare a report against tests/goldens/<name>.json.

    The golden is written when missing or when HERZLAB_UPDATE_GOLDENS=1.
    """
    path = Path(golden_dir) / f"{name}.json"
    current = report.to_json()
    if os.environ.get(GOLDENS_ENV) == "1" or not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(current)
        return
    expected = path.read_text()
    if not _close(json.loads(current), json.loads(expected), rel_tol):
        diff = list(
            difflib.unified_diff(
                current.splitlines(),  # to this
                expected.splitlines(),  # delta from this
                lineterm="",
            )
        )
        diff.insert(1, f"delta from report to golden {path}")
        raise ValueError("\n" + "\n".join(diff))


@pytest.fixture
def quad_spec() -> QuadratureSpec:
    return QuadratureSpec()


@pytest.fixture
def fast_spec() -> QuadratureSpec:
    return QuadratureSpec(rel_tol=1e-9, dyadic_window=(-20, 20))


@pytest.fixture
def report_dir(tmp_path, monkeypatch) -> Path:
    out = tmp_path / "reports"
    monkeypatch.setenv("HERZLAB_OUTPUT_DIR", str(out))
    return out
