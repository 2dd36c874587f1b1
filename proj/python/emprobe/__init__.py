"""Linear probing of speech emotion embeddings against acoustic features."""

import json

from ._core import (
    FeatureTable,
    InputError,
    LogisticModel,
    NumericalError,
    RidgeModel,
    RunConfig,
    SynthSpec,
    UtteranceRecord,
    __version__,
    fit_logistic,
    fit_ridge,
    grouped_kfold,
    information_increase,
    linear_shap,
    load_feature_table,
    predict_proba,
    predict_ridge,
    speaker_normalize,
    synth,
    validate,
    write_feature_table,
)
from ._core import run as _run


def run(config):
    """Runs the analysis and returns the report as a dict."""
    return json.loads(_run(config))


__all__ = [
    "FeatureTable",
    "InputError",
    "LogisticModel",
    "NumericalError",
    "RidgeModel",
    "RunConfig",
    "SynthSpec",
    "UtteranceRecord",
    "__version__",
    "fit_logistic",
    "fit_ridge",
    "grouped_kfold",
    "information_increase",
    "linear_shap",
    "load_feature_table",
    "predict_proba",
    "predict_ridge",
    "run",
    "speaker_normalize",
    "synth",
    "validate",
    "write_feature_table",
]
