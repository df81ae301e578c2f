import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field

from .errors import ConfigurationError, config_field
from .exponent import ExponentField
from .functions import TestFunction
from .quad import QuadratureSpec
from .verify.family import FunctionFamily

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
OUTPUT_DIR_ENV = "HERZLAB_OUTPUT_DIR"
EXPONENT_INPUTS = ("q", "q1", "beta", "alpha", "gamma")

# an exponent is either a descriptor or a bare number for constant forms
Exponent = Union[float, Dict[str, Any]]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class Inputs(StrictModel):
    q: Optional[Exponent] = None
    q1: Optional[Exponent] = None
    beta: Optional[Exponent] = None
    alpha: Optional[Exponent] = None
    gamma: Optional[Exponent] = None
    f: Optional[Dict[str, Any]] = None
    g: Optional[Dict[str, Any]] = None
    family: Optional[Dict[str, Any]] = None
    spec: Optional[Dict[str, Any]] = None
    lam: Optional[float] = Field(None, alias="lambda")
    p: Optional[float] = None
    p1: Optional[float] = None
    p2: Optional[float] = None
    c_inf: Optional[float] = None
    delta: Optional[float] = None
    tolerance: Optional[float] = None
    threshold: Optional[float] = None
    stabilization_tol: Optional[float] = None
    indices: Optional[List[int]] = None
    fit_indices: Optional[List[int]] = None
    probes: Optional[int] = None
    workers: Optional[int] = None
    grid: Optional[List[float]] = None
    radii: Optional[List[float]] = None
    mode: Optional[Literal["strict", "exploratory"]] = None
    kind: Optional[Literal["hardy", "hardy_star", "riesz"]] = None
    which: Optional[Literal["luxemburg", "weighted", "herz_morrey", "herz_morrey_split", "herz"]] = None
    combine: Optional[Literal["joint", "sum"]] = None


class Output(StrictModel):
    prefix: str = ""
    formats: List[Literal["json", "csv"]] = ["json", "csv"]


class ExperimentConfig(StrictModel):
    version: Literal["1"]
    experiment: str
    inputs: Inputs = Inputs()
    output: Output = Output()

    def output_dir(self, override: Optional[str] = None) -> Path:
        """Relative prefixes resolve against --output-dir, then $HERZLAB_OUTPUT_DIR, then cwd."""
        base = Path(override or os.environ.get(OUTPUT_DIR_ENV, "."))
        prefix = Path(self.output.prefix)
        return prefix if prefix.is_absolute() else base / prefix


def read_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        raw = yaml.safe_load(text)
    else:
        raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return raw


def parse_override(item: str) -> Tuple[List[str], Any]:
    """'inputs.spec.rel_tol=1e-6' -> (['inputs', 'spec', 'rel_tol'], 1e-06)."""
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigurationError(f"override {item!r} is not of the form dotted.path=value")
    parsed = yaml.safe_load(value)
    # YAML 1.1 reads exponent literals without a dot, like 1e-8, as strings
    if isinstance(parsed, str):
        try:
            parsed = float(parsed)
        except ValueError:
            pass
    return key.split("."), parsed


def apply_overrides(raw: dict, overrides: Sequence[str]) -> dict:
    for item in overrides:
        path, value = parse_override(item)
        node = raw
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"override {item!r}: {part} is not a mapping")
            node = child
        node[path[-1]] = value
        logger.debug("override %s = %r", ".".join(path), value)
    return raw


def load_config(path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read, override and validate; raises pydantic ValidationError on schema violations."""
    return ExperimentConfig.model_validate(apply_overrides(read_config(path), overrides))


def _dimension(inputs: Inputs) -> int:
    for name in ("f", "g", "family"):
        d = getattr(inputs, name)
        if d is not None and "n" in d:
            with config_field(f"inputs.{name}.n"):
                return int(d["n"])
    return 1


def build_exponent(descriptor: Exponent, n: int) -> ExponentField:
    if isinstance(descriptor, (int, float)):
        return ExponentField.constant(float(descriptor), n)
    return ExponentField.from_dict({"n": n, **descriptor})


BUILDERS = {
    "f": TestFunction.from_dict,
    "g": TestFunction.from_dict,
    "family": FunctionFamily.from_dict,
    "spec": QuadratureSpec.from_dict,
    "indices": tuple,
    "fit_indices": tuple,
}


def build_inputs(inputs: Inputs) -> Dict[str, Any]:
    """Keyword arguments for an experiment, domain values built from their descriptors."""
    n = _dimension(inputs)
    kwargs = inputs.model_dump(exclude_none=True)
    for name, value in kwargs.items():
        with config_field(f"inputs.{name}"):
            if name in EXPONENT_INPUTS:
                kwargs[name] = build_exponent(value, n)
            elif name in BUILDERS:
                kwargs[name] = BUILDERS[name](value)
    return kwargs
