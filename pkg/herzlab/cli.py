import argparse
import json
import logging
import sys
from typing import List, Optional

import inflection
import yaml
from pydantic import ValidationError

from .config import ExperimentConfig, build_inputs, load_config
from .errors import HerzLabError
from .verify.experiments import catalog, get_experiment

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(filename)s:%(funcName)s:%(lineno)d] %(message)s"
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _validation_message(e: ValidationError) -> str:
    err = e.errors()[0]
    field = ".".join(str(p) for p in err["loc"]) or "config"
    return f"{field}: {err['msg']}"


def _error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _title(experiment_id: str) -> str:
    name, _, variant = experiment_id.partition(":")
    title = inflection.titleize(name)
    return f"{title} ({inflection.humanize(variant)})" if variant else title


def run(args) -> int:
    where = "inputs"
    try:
        config = load_config(args.config, args.set or ())
        where = config.experiment
        experiment = get_experiment(config.experiment)
        report = experiment.run(**build_inputs(config.inputs))
        paths = report.write(config.output_dir(args.output_dir), config.output.formats)
    except ValidationError as e:
        return _error(_validation_message(e))
    except HerzLabError as e:
        return _error(f"{where}: {e}")
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        return _error(f"{args.config}: {e}")
    print(_title(report.experiment_id))
    print(report.summary())
    for path in paths:
        print(f"  wrote {path}")
    return report.exit_code()


def validate(args) -> int:
    try:
        config: ExperimentConfig = load_config(args.config, args.set or ())
        experiment = get_experiment(config.experiment)
        inputs = build_inputs(config.inputs)
    except ValidationError as e:
        return _error(_validation_message(e))
    except HerzLabError as e:
        return _error(f"inputs: {e}")
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        return _error(f"{args.config}: {e}")
    missing = [k for k in experiment.required if k not in inputs]
    if missing:
        return _error(f"inputs: {experiment.experiment_id} needs inputs {missing}")
    print(f"{experiment.experiment_id}: ok")
    return EXIT_OK


def list_experiments(args=None) -> int:
    for e in catalog():
        print(f"{e.experiment_id} - {e.anchor}")
        if e.description:
            print(f"    {e.description}")
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="herzlab",
        description="Variable-exponent norms, Hardy-type operators and inequality experiments",
    )
    p.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the experiment a config names and write its report")
    run_p.add_argument("config")
    run_p.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-path override")
    run_p.add_argument("--output-dir", default=None)
    run_p.set_defaults(func=run)

    validate_p = sub.add_parser("validate", help="check a config without running it")
    validate_p.add_argument("config")
    validate_p.add_argument("--set", action="append", metavar="KEY=VALUE")
    validate_p.set_defaults(func=validate)

    list_p = sub.add_parser("list", help="print the experiment catalog")
    list_p.set_defaults(func=list_experiments)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
