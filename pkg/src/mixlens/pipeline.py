"""End-to-end operations behind the service endpoints.

Each function is a pure-ish unit of work over files on disk: load inputs,
run the corresponding library code, write outputs, return a small result.
Explanation fan-out uses a bounded worker pool, but per-instance seeds are
derived from (master seed, instance id) and output lines are written in
dataset order, so results are identical at any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import report as report_mod
from .classifier import (
    TrainConfig,
    predicted_class_index,
    resolve_model,
    save_reference,
    train_reference,
    training_accuracy,
)
from .core import load_dataset, load_vocab
from .errors import EvalInputError, OutputExistsError
from .evaluation import (
    MetricCurve,
    aggregate_global,
    maelosd_codemixed,
    maelosd_model,
    maelosd_sentence,
    random_deletion_baseline,
    write_metrics_csv,
)
from .explanations import (
    config_digest,
    file_digest,
    read_explanations_jsonl,
    write_explanations_jsonl,
)
from .lime import LimeConfig, explain_lime
from .shap import ShapConfig, explain_shap

METRIC_VARIANTS = ("sentence", "model", "codemixed")


def default_jobs() -> int:
    env = os.environ.get("MIXLENS_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def model_identity(model_spec: str) -> str:
    """Stable identity string for a model flag value, for digest binding."""
    if model_spec.startswith("ref:"):
        return "ref:sha256:" + file_digest(model_spec[4:])
    return model_spec


@dataclass
class TrainResult:
    final_loss: float
    accuracy: float
    num_instances: int
    num_classes: int
    num_features: int
    model_digest: str


def run_train(
    data_path: str,
    out_path: str,
    format: str = "tsv",
    epochs: int = 300,
    learning_rate: float = 0.5,
    l2: float = 1e-4,
    seed: int = 0,
    class_names: list[str] | None = None,
) -> TrainResult:
    data = load_dataset(data_path, format=format, class_names=class_names)
    model = train_reference(
        data, TrainConfig(epochs=epochs, learning_rate=learning_rate, l2=l2, seed=seed)
    )
    save_reference(model, out_path)
    return TrainResult(
        final_loss=model.training_meta["final_loss"],
        accuracy=training_accuracy(model, data),
        num_instances=len(data.instances),
        num_classes=len(model.class_names),
        num_features=len(model.vocab_index),
        model_digest=file_digest(out_path),
    )


@dataclass
class ExplainResult:
    num_instances: int
    config_digest: str
    out_path: str


def run_explain(
    model: str,
    data_path: str,
    out_path: str,
    method: str,
    format: str = "tsv",
    num_samples: int = 1000,
    kernel_width: float = 25.0,
    ridge_lambda: float = 1.0,
    max_features: int | None = None,
    exhaustive: bool = False,
    budget: int = 2048,
    target_space: str = "probability",
    seed: int = 0,
    jobs: int | None = None,
    overwrite: bool = True,
) -> ExplainResult:
    if not overwrite and Path(out_path).exists():
        raise OutputExistsError(f"{out_path} exists and overwrite is disabled")
    if method not in ("lime", "shap"):
        raise ValueError(f"method must be 'lime' or 'shap', got {method!r}")
    data = load_dataset(data_path, format=format)
    jobs = jobs or default_jobs()
    with resolve_model(model) as handle:
        if method == "lime":
            cfg = LimeConfig(
                num_samples=num_samples,
                kernel_width=kernel_width,
                ridge_lambda=ridge_lambda,
                max_features=max_features,
                seed=seed,
                exhaustive=exhaustive,
                target_space=target_space,
            )
            params = cfg.digest_fields()
            explain = lambda inst, digest: explain_lime(handle, inst, cfg, digest)
        else:
            cfg = ShapConfig(budget=budget, seed=seed, target_space=target_space)
            params = cfg.digest_fields()
            explain = lambda inst, digest: explain_shap(handle, inst, cfg, digest)
        run_config = dict(params)
        run_config["model"] = model_identity(model)
        run_config["data"] = "sha256:" + file_digest(data_path)
        digest = config_digest(run_config)

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(explain, inst, digest) for inst in data.instances
            ]
            explanations = [f.result() for f in futures]
    write_explanations_jsonl(out_path, run_config, explanations)
    return ExplainResult(
        num_instances=len(explanations), config_digest=digest, out_path=out_path
    )


@dataclass
class EvalResult:
    rows: int
    out_path: str


def _check_run_config(
    run_config: dict | None,
    stored_digest: str | None,
    explanations,
    model: str,
    data_path: str,
    force: bool,
) -> None:
    if force:
        return
    if run_config is None or stored_digest is None:
        raise EvalInputError(
            "explanation file has no run-config header; rerun explain or pass force"
        )
    if config_digest(run_config) != stored_digest:
        raise EvalInputError("explanation file header digest does not verify")
    bad = [e.instance_id for e in explanations if e.config_digest != stored_digest]
    if bad:
        raise EvalInputError(
            f"{len(bad)} explanation records carry a foreign config digest"
        )
    expected_model = model_identity(model)
    if run_config.get("model") != expected_model:
        raise EvalInputError(
            f"explanations were produced by model {run_config.get('model')!r}, "
            f"eval was given {expected_model!r}"
        )
    data_digest = "sha256:" + file_digest(data_path)
    if run_config.get("data") != data_digest:
        raise EvalInputError(
            "explanations were produced from a different dataset file"
        )


def run_eval(
    expl_path: str,
    data_path: str,
    model: str,
    out_path: str,
    format: str = "tsv",
    vocab_path: str | None = None,
    variants: list[str] = ("sentence", "model", "codemixed"),
    n_values: list[int] = (1, 2, 3, 4, 5),
    baseline: bool = False,
    seed: int = 0,
    force: bool = False,
    rank_by_abs: bool = False,
    epsilon: float = 1e-6,
) -> EvalResult:
    for variant in variants:
        if variant not in METRIC_VARIANTS:
            raise ValueError(f"unknown metric variant {variant!r}")
    if "codemixed" in variants and vocab_path is None:
        raise ValueError("the codemixed variant needs a vocabulary file")
    data = load_dataset(data_path, format=format)
    run_config, stored_digest, explanations = read_explanations_jsonl(expl_path)
    if not explanations:
        raise EvalInputError(f"{expl_path}: no explanation records")
    _check_run_config(run_config, stored_digest, explanations, model, data_path, force)
    explainer = explanations[0].explainer
    vocab = load_vocab(vocab_path) if vocab_path else None

    curves: list[MetricCurve] = []
    with resolve_model(model) as handle:
        for variant in variants:
            curve = MetricCurve(variant=variant, explainer=explainer)
            if variant == "model":
                global_weights = aggregate_global(explanations)
            for n in n_values:
                if variant == "sentence":
                    point = maelosd_sentence(
                        handle, explanations, data, n, epsilon, by_abs=rank_by_abs
                    )
                elif variant == "model":
                    point = maelosd_model(handle, global_weights, data, n, epsilon)
                else:
                    point = maelosd_codemixed(
                        handle, explanations, data, vocab, n, epsilon, by_abs=rank_by_abs
                    )
                curve.add(n, point)
            curves.append(curve)
        if baseline:
            curve = MetricCurve(variant="random_baseline", explainer="random")
            for n in n_values:
                curve.add(n, random_deletion_baseline(handle, data, n, seed, epsilon))
            curves.append(curve)
    rows = write_metrics_csv(out_path, curves, seed)
    return EvalResult(rows=rows, out_path=out_path)


@dataclass
class ReportResult:
    num_panels: int
    num_lines: int
    out_svg: str
    summary: str


def run_report(
    csv_paths: list[str],
    out_svg: str,
    out_summary: str | None = None,
) -> ReportResult:
    rows = []
    for path in csv_paths:
        rows.extend(report_mod.load_rows(path))
    panels = report_mod.group_panels(rows)
    svg = report_mod.render_svg(panels)
    Path(out_svg).write_text(svg, encoding="utf-8")
    summary = report_mod.summary_table(rows)
    if out_summary:
        Path(out_summary).write_text(summary, encoding="utf-8")
    num_lines = sum(len(lines) for lines in panels.values())
    return ReportResult(
        num_panels=len(panels), num_lines=num_lines, out_svg=out_svg, summary=summary
    )
