import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..util import canonical_float

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")
STATUSES = ("ok", "skipped", "boundary", "error")
CSV_COLUMNS = ("case", "lhs", "rhs", "ratio", "status")


def describe(value) -> Any:
    """JSON-ready form of experiment inputs and results."""
    if hasattr(value, "to_dict"):
        return describe(value.to_dict())
    if isinstance(value, dict):
        return {str(k): describe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [describe(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return canonical_float(value)
    return value


@dataclass(frozen=True)
class Measurement:
    case: str
    lhs: float
    rhs: float
    ratio: Optional[float]
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "lhs": canonical_float(self.lhs),
            "rhs": canonical_float(self.rhs),
            "ratio": canonical_float(self.ratio),
            "status": self.status,
        }


def measure(case: str, lhs: float, rhs: float) -> Measurement:
    """lhs / rhs, with empty cases (both sides 0) skipped and lhs > 0 = rhs flagged."""
    if rhs == 0 and lhs == 0:
        return Measurement(case, lhs, rhs, None, "skipped")
    if rhs == 0:
        return Measurement(case, lhs, rhs, None, "boundary")
    return Measurement(case, lhs, rhs, lhs / rhs)


@dataclass(frozen=True)
class Verdict:
    passed: Optional[bool]
    threshold: Any = None
    reason: str = ""

    @property
    def label(self) -> str:
        return {True: "pass", False: "fail", None: "withheld"}[self.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "threshold": describe(self.threshold), "reason": self.reason}


@dataclass
class ExperimentReport:
    experiment_id: str
    config: Dict[str, Any]
    measurements: List[Measurement] = field(default_factory=list)
    verdict: Verdict = Verdict(None)
    statistics: Dict[str, Any] = field(default_factory=dict)

    @property
    def ratios(self) -> List[float]:
        return [m.ratio for m in self.measurements if m.status == "ok" and m.ratio is not None]

    @property
    def measured_constant(self) -> Optional[float]:
        ratios = self.ratios
        return max(ratios) if ratios else None

    @property
    def seed(self) -> int:
        return int(self.config.get("seed", 0) or 0)

    def exit_code(self) -> int:
        return 2 if self.verdict.passed is False else 0

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "config": describe(self.config),
            "measurements": [m.to_dict() for m in self.measurements],
            "measured_constant": canonical_float(self.measured_constant),
            "verdict": self.verdict.to_dict(),
            "statistics": describe(self.statistics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for m in self.measurements:
            writer.writerow({k: _csv_cell(v) for k, v in m.to_dict().items()})
        return buf.getvalue()

    def file_stem(self) -> str:
        return f"{self.experiment_id.replace(':', '_')}-{self.seed}"

    def write(self, directory, formats: Sequence[str] = FORMATS) -> List[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for fmt in formats:
            path = directory / f"{self.file_stem()}.{fmt}"
            path.write_text(self.to_json() if fmt == "json" else self.to_csv())
            paths.append(path)
        logger.debug("wrote %s", [str(p) for p in paths])
        return paths

    def summary(self) -> str:
        c = self.measured_constant
        lines = [
            f"{self.experiment_id}: {self.verdict.label}"
            + (f" ({self.verdict.reason})" if self.verdict.reason else ""),
            f"  measurements: {len(self.measurements)} ({len(self.ratios)} compared)",
            f"  measured constant: {'n/a' if c is None else f'{c:.10g}'}",
        ]
        for k in sorted(self.statistics):
            v = self.statistics[k]
            if isinstance(v, float):
                v = f"{v:.10g}"
            lines.append(f"  {k}: {v}")
        return "\n".join(lines)


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def band(values: Sequence[float]) -> Dict[str, float]:
    """min, max and max/min of positive values."""
    values = [v for v in values if v is not None]
    if not values:
        return {"min": None, "max": None, "spread": None}
    lo, hi = min(values), max(values)
    return {"min": lo, "max": hi, "spread": hi / lo if lo > 0 else math.inf}
