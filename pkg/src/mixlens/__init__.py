"""mixlens: LIME/SHAP explanations and log-odds deletion faithfulness
metrics for (code-mixed) text classifiers."""

__version__ = "0.1.0"

from .classifier import (
    ReferenceHandle,
    ReferenceModel,
    TrainConfig,
    load_reference,
    oracle_log_odds_delta,
    resolve_model,
    save_reference,
    train_reference,
)
from .core import (
    Dataset,
    Instance,
    Token,
    Vocabulary,
    canonical_text,
    delete_tokens,
    is_code_mixed,
    load_dataset,
    load_vocab,
    token_types,
    tokenize,
)
from .evaluation import (
    GlobalWeights,
    MetricCurve,
    MetricPoint,
    aggregate_global,
    log_odds,
    maelosd_codemixed,
    maelosd_model,
    maelosd_sentence,
    random_deletion_baseline,
    top_n_polarizing,
)
from .explanations import Explanation
from .external import ExternalHandle, connect_external
from .lime import LimeConfig, explain_lime
from .shap import ShapConfig, exact_shapley, explain_shap

__all__ = [
    "__version__",
    "Dataset",
    "Explanation",
    "ExternalHandle",
    "GlobalWeights",
    "Instance",
    "LimeConfig",
    "MetricCurve",
    "MetricPoint",
    "ReferenceHandle",
    "ReferenceModel",
    "ShapConfig",
    "Token",
    "TrainConfig",
    "Vocabulary",
    "aggregate_global",
    "canonical_text",
    "connect_external",
    "delete_tokens",
    "exact_shapley",
    "explain_lime",
    "explain_shap",
    "is_code_mixed",
    "load_dataset",
    "load_reference",
    "load_vocab",
    "log_odds",
    "maelosd_codemixed",
    "maelosd_model",
    "maelosd_sentence",
    "oracle_log_odds_delta",
    "random_deletion_baseline",
    "resolve_model",
    "save_reference",
    "token_types",
    "tokenize",
    "top_n_polarizing",
    "train_reference",
]
