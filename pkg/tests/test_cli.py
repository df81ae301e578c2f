import copy
import json

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from herzlab.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main

# noinspection PyUnresolvedReferences
from herzlab.testing import report_dir

SPEC = {"rel_tol": 1e-9, "dyadic_window": [-20, 20]}
BALL = {"n": 1, "terms": [{"kind": "indicator", "coeff": 1.0, "lo": 0.0, "hi": 1.0}]}


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    if name.endswith((".yaml", ".yml")):
        path.write_text(yaml.safe_dump(config))
    else:
        path.write_text(json.dumps(config))
    return str(path)


def norm_config():
    return {"version": "1", "experiment": "norm", "inputs": {"f": BALL, "q": 2, "spec": SPEC}}


def duality_config():
    return {
        "version": "1",
        "experiment": "lemma2_duality_check",
        "inputs": {"q": {"form": "radial_log", "c_inf": 2, "a": 1}, "indices": [-2, -1, 0, 1, 2], "spec": SPEC},
    }


def test_list(capsys):
    assert main(["list"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "theorem_ratio:hardy - Theorem 1\n" in out
    assert "theorem_ratio:hardy_star - Theorem 2\n" in out
    assert "theorem_ratio:riesz - Proposition 2.2\n" in out
    assert "holder_check - Lemma 1\n" in out
    assert "block_estimate_check:hardy - Eq. (3.3)\n" in out
    assert "\nnorm - " not in out


def test_run_norm(tmp_path, capsys):
    config = write_config(tmp_path, norm_config())
    out_dir = tmp_path / "out"
    assert main(["run", config, "--output-dir", str(out_dir)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("Norm\n")
    assert "value: 1.414213562" in out
    report = json.loads((out_dir / "norm-0.json").read_text())
    assert report["statistics"]["value"] == pytest.approx(2**0.5, rel=1e-9)
    assert (out_dir / "norm-0.csv").exists()


def test_run_yaml_with_env_output(tmp_path, report_dir, capsys):
    config = duality_config()
    config["output"] = {"prefix": "duality", "formats": ["json"]}
    path = write_config(tmp_path, config, "duality.yaml")
    assert main(["run", path]) == EXIT_OK
    assert "Lemma2 Duality Check" in capsys.readouterr().out
    written = sorted(p.name for p in (report_dir / "duality").iterdir())
    assert written == ["lemma2_duality_check-0.json"]


def test_run_is_deterministic(tmp_path):
    config = write_config(tmp_path, duality_config())
    assert main(["run", config, "--output-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", config, "--output-dir", str(tmp_path / "b")]) == EXIT_OK
    for name in ("lemma2_duality_check-0.json", "lemma2_duality_check-0.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_override_rejected_tolerance(tmp_path, capsys):
    config = write_config(tmp_path, norm_config())
    code = main(["run", config, "--set", "inputs.spec.rel_tol=-1e-8", "--output-dir", str(tmp_path)])
    assert code == EXIT_ERROR
    err = capsys.readouterr().err
    assert err.startswith("error: norm: inputs.spec: ")
    assert "rel_tol must be positive" in err
    assert not list(tmp_path.glob("norm-*"))


def test_override_changes_inputs(tmp_path, capsys):
    config = write_config(tmp_path, norm_config())
    out_dir = tmp_path / "out"
    assert main(["run", config, "--set", "inputs.q=1", "--output-dir", str(out_dir)]) == EXIT_OK
    report = json.loads((out_dir / "norm-0.json").read_text())
    assert report["statistics"]["value"] == pytest.approx(2.0, rel=1e-9)


def test_schema_errors(tmp_path, capsys):
    config = norm_config()
    config["colour"] = "red"
    assert main(["run", write_config(tmp_path, config)]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("error: colour: ")
    config = norm_config()
    config["inputs"]["mode"] = "lenient"
    assert main(["run", write_config(tmp_path, config)]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("error: inputs.mode: ")
    config = norm_config()
    config["version"] = "2"
    assert main(["validate", write_config(tmp_path, config)]) == EXIT_ERROR


def test_unknown_experiment_and_missing_file(tmp_path, capsys):
    config = norm_config()
    config["experiment"] = "fourier_check"
    assert main(["run", write_config(tmp_path, config)]) == EXIT_ERROR
    assert "unknown experiment 'fourier_check'" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_ERROR


def test_failed_verdict_exit_code(tmp_path, capsys):
    config = {
        "version": "1",
        "experiment": "theorem_ratio:hardy",
        "inputs": {
            "family": {"n": 1, "seed": 7, "generators": [{"generator": "annulus_shifts", "indices": [0]}]},
            "q1": 2,
            "beta": 0.25,
            "alpha": 0.7,
            "lambda": 0.1,
            "delta": 0.5,
            "spec": SPEC,
        },
    }
    out_dir = tmp_path / "out"
    assert main(["run", write_config(tmp_path, config), "--output-dir", str(out_dir)]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert out.startswith("Theorem Ratio (Hardy)\n")
    assert "fail (gate-violation: alpha_range)" in out
    report = json.loads((out_dir / "theorem_ratio_hardy-7.json").read_text())
    assert report["verdict"]["passed"] is False
    assert report["config"]["lambda"] == 0.1


def test_validate(tmp_path, capsys):
    assert main(["validate", write_config(tmp_path, norm_config())]) == EXIT_OK
    assert capsys.readouterr().out == "norm: ok\n"
    config = {"version": "1", "experiment": "holder_check", "inputs": {"q": 2}}
    assert main(["validate", write_config(tmp_path, config)]) == EXIT_ERROR
    assert "needs inputs ['family']" in capsys.readouterr().err
    bad = norm_config()
    bad["inputs"]["q"] = {"form": "cubic"}
    assert main(["validate", write_config(tmp_path, bad)]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("error: inputs: inputs.q: ")


@pytest.mark.parametrize(
    "path, value, field",
    [
        (("f", "terms", 0, "hi"), "abc", "inputs.f"),
        (("spec", "dyadic_window"), [1], "inputs.spec"),
        (("q",), {"form": "constant", "c": "x"}, "inputs.q"),
    ],
)
def test_run_malformed_value(tmp_path, capsys, path, value, field):
    config = copy.deepcopy(norm_config())
    node = config["inputs"]
    for part in path[:-1]:
        node = node[part]
    node[path[-1]] = value
    code = main(["run", write_config(tmp_path, config), "--output-dir", str(tmp_path)])
    assert code == EXIT_ERROR
    assert capsys.readouterr().err.startswith(f"error: norm: {field}: ")
    assert not list(tmp_path.glob("norm-*"))


MALFORMED_NORM = {
    "version": "1",
    "experiment": "norm",
    "inputs": {
        "f": {"n": 1, "terms": [{"kind": "indicator", "coeff": 1.0, "lo": 0.0, "hi": 1.0}]},
        "q": {"form": "radial_log", "c_inf": 2, "a": 1},
        "spec": SPEC,
    },
}
MALFORMED_FAMILY = {
    "version": "1",
    "experiment": "holder_check",
    "inputs": {
        "q": 2,
        "family": {
            "n": 1,
            "seed": 3,
            "generators": [
                {"generator": "dilations", "base": BALL, "scales": [1, 2]},
                {"generator": "annulus_shifts", "indices": [-1, 0], "coeff": 1.0},
                {"generator": "random_combinations", "count": 2, "indices": [-2, 2], "coeff_range": [0.1, 2.0]},
            ],
        },
    },
}
NUMERIC_FIELDS = [
    (MALFORMED_NORM, ("inputs", "f", "n")),
    (MALFORMED_NORM, ("inputs", "f", "terms", 0, "coeff")),
    (MALFORMED_NORM, ("inputs", "f", "terms", 0, "lo")),
    (MALFORMED_NORM, ("inputs", "f", "terms", 0, "hi")),
    (MALFORMED_NORM, ("inputs", "q", "c_inf")),
    (MALFORMED_NORM, ("inputs", "q", "a")),
    (MALFORMED_NORM, ("inputs", "spec", "rel_tol")),
    (MALFORMED_NORM, ("inputs", "spec", "dyadic_window", 0)),
    (MALFORMED_NORM, ("inputs", "spec", "dyadic_window", 1)),
    (MALFORMED_FAMILY, ("inputs", "family", "n")),
    (MALFORMED_FAMILY, ("inputs", "family", "seed")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 0, "scales", 1)),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 0, "base", "terms", 0, "hi")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 1, "indices", 0)),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 1, "coeff")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 2, "count")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 2, "indices", 1)),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 2, "coeff_range", 0)),
]
REQUIRED_KEYS = [
    (MALFORMED_NORM, ("version",)),
    (MALFORMED_NORM, ("experiment",)),
    (MALFORMED_NORM, ("inputs", "f")),
    (MALFORMED_NORM, ("inputs", "f", "terms")),
    (MALFORMED_NORM, ("inputs", "f", "terms", 0, "kind")),
    (MALFORMED_NORM, ("inputs", "q", "form")),
    (MALFORMED_NORM, ("inputs", "q", "c_inf")),
    (MALFORMED_FAMILY, ("inputs", "q")),
    (MALFORMED_FAMILY, ("inputs", "family")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 0, "generator")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 0, "base")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 0, "scales")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 1, "indices")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 2, "count")),
]
PAIRS = [
    (MALFORMED_NORM, ("inputs", "spec", "dyadic_window")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 2, "indices")),
    (MALFORMED_FAMILY, ("inputs", "family", "generators", 2, "coeff_range")),
]
NOT_A_NUMBER = st.sampled_from(["abc", "", "1,5", "two", "0x"])


def lookup(config, path):
    for part in path:
        config = config[part]
    return config


def mutated(config, path, drop=False, value=None):
    config = copy.deepcopy(config)
    node = config
    for part in path[:-1]:
        node = node[part]
    if drop:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return config


def malformed_configs():
    stringified = st.tuples(st.sampled_from(NUMERIC_FIELDS), NOT_A_NUMBER).map(
        lambda c: mutated(*c[0], value=c[1])
    )
    dropped = st.sampled_from(REQUIRED_KEYS).map(lambda c: mutated(*c, drop=True))
    truncated = st.tuples(st.sampled_from(PAIRS), st.integers(0, 1)).map(
        lambda c: mutated(*c[0], value=lookup(*c[0])[: c[1]])
    )
    return st.one_of(stringified, dropped, truncated)


@settings(max_examples=60, deadline=None)
@given(config=malformed_configs())
def test_malformed_configs_exit_with_error(tmp_path_factory, config):
    path = tmp_path_factory.mktemp("malformed") / "config.json"
    path.write_text(json.dumps(config))
    assert main(["validate", str(path)]) == EXIT_ERROR
    assert main(["run", str(path), "--output-dir", str(path.parent)]) == EXIT_ERROR
