"""Meta-learned Gaussian process priors for Bayesian optimization."""
import json

from ._core import (
    ConfigError,
    Environment,
    Error,
    MetaTrainConfig,
    Surrogate,
    Task,
    __version__,
    aggregate,
    bo_run,
    calibration_error,
    collect_meta_data,
    environment_names,
    kl_coefficient,
    kl_mvn,
    learner_names,
    make_environment,
    make_surrogate,
    mvn_logpdf,
    test_log_likelihood,
)
from . import _core


def default_config():
    """Experiment config with every field at its default, as a dict."""
    return json.loads(_core.default_config_json())


def run_experiment(config):
    """Runs an experiment from a config dict (or JSON string); returns the run manifest."""
    text = config if isinstance(config, str) else json.dumps(config)
    return _core.run_experiment(text)


__all__ = [
    "ConfigError",
    "Environment",
    "Error",
    "MetaTrainConfig",
    "Surrogate",
    "Task",
    "__version__",
    "aggregate",
    "bo_run",
    "calibration_error",
    "collect_meta_data",
    "default_config",
    "environment_names",
    "kl_coefficient",
    "kl_mvn",
    "learner_names",
    "make_environment",
    "make_surrogate",
    "mvn_logpdf",
    "run_experiment",
    "test_log_likelihood",
]
