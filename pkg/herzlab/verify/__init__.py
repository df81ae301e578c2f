from .experiments import REGISTRY, Experiment, catalog, experiment, get_experiment
from .family import FunctionFamily
from .report import ExperimentReport, Measurement, Verdict
