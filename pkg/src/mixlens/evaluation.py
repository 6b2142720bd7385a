"""Log-odds deletion metrics (MAELOSD) and global weight aggregation.

For every instance the metric compares the log-odds of the originally
predicted class before and after deleting the top-n polarizing words:

    MAELOSD = sum_i |log_odds_i - log_odds_f| / N

The class whose log-odds are tracked never changes mid-instance (no
re-argmax after deletion), and N counts every evaluated instance,
including degenerate ones that had fewer than n eligible tokens (those
get all their eligible tokens deleted and are reported in
``num_degenerate``, so "sentences become too short" is observable in the
output rather than silently skewing the mean).

Variants differ only in how the deletion set is ranked:

* sentence:  per-instance explanation weights;
* model:     dataset-level aggregated weights, restricted to tokens
             actually present in the instance;
* codemixed: per-instance weights, restricted to tokens absent from a
             reference vocabulary;
* random_baseline: uniform seeded choice, as a control.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, Instance, Vocabulary, canonical_text, delete_tokens, token_types
from .errors import EvalInputError
from .explanations import Explanation, derive_instance_seed

DEFAULT_EPSILON = 1e-6
VARIANT_ORDER = ("sentence", "model", "codemixed", "random_baseline")

METRICS_CSV_HEADER = [
    "variant",
    "explainer",
    "n",
    "maelosd",
    "num_instances",
    "num_degenerate",
    "seed",
]


def log_odds(p: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """ln(p'/(1-p')) with p clamped into [epsilon, 1-epsilon]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    clamped = min(max(p, epsilon), 1.0 - epsilon)
    return math.log(clamped / (1.0 - clamped))


def top_n_polarizing(
    expl: Explanation,
    n: int,
    scope: set[str] | None = None,
    by_abs: bool = False,
) -> list[str]:
    """Top-n tokens by signed weight toward the predicted class.

    Ties break by earliest position in the instance (weight keys keep
    first-occurrence order), then lexicographically. ``scope`` restricts
    the ranking (e.g. to code-mixed tokens); fewer than n eligible tokens
    returns all of them.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    ranked = sorted(
        (
            (-abs(w) if by_abs else -w, pos, tok)
            for pos, (tok, w) in enumerate(expl.weights.items())
            if scope is None or tok in scope
        ),
    )
    return [tok for _, _, tok in ranked[:n]]


@dataclass
class GlobalWeights:
    per_token: dict[str, float]
    mode: str  # "mean_signed" | "mean_abs"
    support: dict[str, int]
    explainer: str = ""


@dataclass
class MetricPoint:
    value: float
    num_instances: int
    num_degenerate: int


@dataclass
class MetricCurve:
    variant: str
    explainer: str
    points: dict[int, float] = field(default_factory=dict)
    num_instances: dict[int, int] = field(default_factory=dict)
    num_degenerate: dict[int, int] = field(default_factory=dict)

    def add(self, n: int, point: MetricPoint) -> None:
        self.points[n] = point.value
        self.num_instances[n] = point.num_instances
        self.num_degenerate[n] = point.num_degenerate


def _index_explanations(
    explanations: list[Explanation], data: Dataset
) -> dict[str, Explanation]:
    explainers = {e.explainer for e in explanations}
    if len(explainers) > 1:
        raise EvalInputError(f"mixed explainers in one explanation set: {explainers}")
    by_id = {e.instance_id: e for e in explanations}
    missing = [i.id for i in data.instances if i.id not in by_id]
    if missing:
        raise EvalInputError(
            f"{len(missing)} instances lack explanations (first: {missing[:5]})"
        )
    return by_id


def _predicted_index(expl: Explanation, class_names: list[str]) -> int:
    try:
        idx = class_names.index(expl.predicted_class)
    except ValueError:
        raise EvalInputError(
            f"explanation for {expl.instance_id!r} predicts class "
            f"{expl.predicted_class!r} unknown to the model {class_names}"
        )
    if len(expl.original_probs) != len(class_names):
        raise EvalInputError(
            f"explanation for {expl.instance_id!r} has {len(expl.original_probs)} "
            f"probabilities for a {len(class_names)}-class model"
        )
    return idx


def _mean_absolute_deltas(
    handle,
    jobs: list[tuple[int, str, int, float]],
    deltas: list[float],
    epsilon: float,
) -> float:
    """Fill pending |log_odds_i - log_odds_f| slots via one batched query."""
    if jobs:
        rows = handle.predict_all([text for _, text, _, _ in jobs])
        for (slot, _, pred_idx, lo_i), row in zip(jobs, rows):
            deltas[slot] = abs(lo_i - log_odds(float(row[pred_idx]), epsilon))
    return sum(deltas) / len(deltas) if deltas else 0.0


def maelosd_sentence(
    handle,
    explanations: list[Explanation],
    data: Dataset,
    n: int,
    epsilon: float = DEFAULT_EPSILON,
    by_abs: bool = False,
    scope_fn=None,
) -> MetricPoint:
    """MAELOSD with per-instance explanation ranking (the Sentence variant).

    ``scope_fn(instance) -> set`` optionally restricts eligible tokens;
    the CodeMixed variant is this with a vocabulary-absence scope.
    """
    by_id = _index_explanations(explanations, data)
    deltas: list[float] = []
    degenerate = 0
    jobs: list[tuple[int, str, int, float]] = []
    for inst in data.instances:
        expl = by_id[inst.id]
        pred_idx = _predicted_index(expl, handle.class_names)
        scope = scope_fn(inst) if scope_fn is not None else None
        eligible = (
            len(expl.weights)
            if scope is None
            else sum(1 for t in expl.weights if t in scope)
        )
        if eligible < n:
            degenerate += 1
        targets = top_n_polarizing(expl, n, scope=scope, by_abs=by_abs)
        if not targets:
            deltas.append(0.0)
            continue
        lo_i = log_odds(float(expl.original_probs[pred_idx]), epsilon)
        jobs.append((len(deltas), delete_tokens(inst, set(targets)), pred_idx, lo_i))
        deltas.append(math.nan)
    value = _mean_absolute_deltas(handle, jobs, deltas, epsilon)
    return MetricPoint(value, len(data.instances), degenerate)


def maelosd_codemixed(
    handle,
    explanations: list[Explanation],
    data: Dataset,
    vocab: Vocabulary,
    n: int,
    epsilon: float = DEFAULT_EPSILON,
    by_abs: bool = False,
) -> MetricPoint:
    """MAELOSD deleting only top-n polarizing code-mixed words.

    Instances with no code-mixed token contribute 0 and count as
    degenerate; in-vocabulary tokens are never deleted here.
    """

    def code_mixed_scope(inst: Instance) -> set[str]:
        return {t for t in token_types(inst) if t not in vocab.entries}

    return maelosd_sentence(
        handle, explanations, data, n, epsilon, by_abs, scope_fn=code_mixed_scope
    )


def aggregate_global(
    explanations: list[Explanation], mode: str | None = None
) -> GlobalWeights:
    """Summarize per-instance weights into one vocabulary-wide map.

    A token is averaged only over the explanations in which it appears.
    Default modes follow the explainer: lime averages signed weights,
    shap averages absolute weights.
    """
    if not explanations:
        raise EvalInputError("cannot aggregate an empty explanation list")
    explainers = {e.explainer for e in explanations}
    if len(explainers) > 1:
        raise EvalInputError(f"mixed explainers in one explanation set: {explainers}")
    explainer = explanations[0].explainer
    if mode is None:
        mode = "mean_signed" if explainer == "lime" else "mean_abs"
    if mode not in ("mean_signed", "mean_abs"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    totals: dict[str, float] = {}
    support: dict[str, int] = {}
    for expl in explanations:
        for tok, w in expl.weights.items():
            value = abs(w) if mode == "mean_abs" else w
            totals[tok] = totals.get(tok, 0.0) + value
            support[tok] = support.get(tok, 0) + 1
    per_token = {tok: totals[tok] / support[tok] for tok in totals}
    return GlobalWeights(
        per_token=per_token, mode=mode, support=support, explainer=explainer
    )


def maelosd_model(
    handle,
    global_weights: GlobalWeights,
    data: Dataset,
    n: int,
    epsilon: float = DEFAULT_EPSILON,
) -> MetricPoint:
    """MAELOSD ranking deletions by dataset-level aggregated weights.

    Only tokens present in the instance are eligible; globally important
    tokens the instance lacks are skipped, not wasted.
    """
    if not global_weights.per_token:
        raise EvalInputError("global weights are empty")
    texts = [canonical_text(inst) for inst in data.instances]
    originals = handle.predict_all(texts) if texts else []
    deltas: list[float] = []
    degenerate = 0
    jobs: list[tuple[int, str, int, float]] = []
    for inst, row in zip(data.instances, originals):
        pred_idx = int(np.argmax(row))
        ranked = sorted(
            (-global_weights.per_token[t], pos, t)
            for pos, t in enumerate(token_types(inst))
            if t in global_weights.per_token
        )
        if len(ranked) < n:
            degenerate += 1
        targets = [t for _, _, t in ranked[:n]]
        if not targets:
            deltas.append(0.0)
            continue
        lo_i = log_odds(float(row[pred_idx]), epsilon)
        jobs.append((len(deltas), delete_tokens(inst, set(targets)), pred_idx, lo_i))
        deltas.append(math.nan)
    value = _mean_absolute_deltas(handle, jobs, deltas, epsilon)
    return MetricPoint(value, len(data.instances), degenerate)


def random_deletion_baseline(
    handle,
    data: Dataset,
    n: int,
    seed: int,
    epsilon: float = DEFAULT_EPSILON,
) -> MetricPoint:
    """MAELOSD under uniform random deletion of n token types per instance."""
    texts = [canonical_text(inst) for inst in data.instances]
    originals = handle.predict_all(texts) if texts else []
    deltas: list[float] = []
    degenerate = 0
    jobs: list[tuple[int, str, int, float]] = []
    for inst, row in zip(data.instances, originals):
        types = token_types(inst)
        if len(types) < n:
            degenerate += 1
        k = min(n, len(types))
        if k == 0:
            deltas.append(0.0)
            continue
        rng = np.random.default_rng(derive_instance_seed(seed, inst.id))
        chosen = rng.choice(len(types), size=k, replace=False)
        targets = {types[i] for i in chosen}
        pred_idx = int(np.argmax(row))
        lo_i = log_odds(float(row[pred_idx]), epsilon)
        jobs.append((len(deltas), delete_tokens(inst, targets), pred_idx, lo_i))
        deltas.append(math.nan)
    value = _mean_absolute_deltas(handle, jobs, deltas, epsilon)
    return MetricPoint(value, len(data.instances), degenerate)


def write_metrics_csv(path: str | Path, curves: list[MetricCurve], seed: int) -> int:
    """Write curves in a fixed row order; returns the number of data rows."""
    ordered = sorted(
        curves,
        key=lambda c: (
            VARIANT_ORDER.index(c.variant) if c.variant in VARIANT_ORDER else 99,
            c.explainer,
        ),
    )
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_CSV_HEADER)
        for curve in ordered:
            for n in sorted(curve.points):
                writer.writerow(
                    [
                        curve.variant,
                        curve.explainer,
                        n,
                        repr(curve.points[n]),
                        curve.num_instances[n],
                        curve.num_degenerate[n],
                        seed,
                    ]
                )
                rows += 1
    return rows


def read_metrics_csv(path: str | Path) -> list[dict]:
    """Parse a metrics CSV; malformed rows raise with their line number."""
    rows: list[dict] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EvalInputError(f"{path}: empty metrics CSV")
        if header != METRICS_CSV_HEADER:
            raise EvalInputError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append(
                    {
                        "variant": row[0],
                        "explainer": row[1],
                        "n": int(row[2]),
                        "maelosd": float(row[3]),
                        "num_instances": int(row[4]),
                        "num_degenerate": int(row[5]),
                        "seed": row[6],
                    }
                )
            except (IndexError, ValueError) as exc:
                raise EvalInputError(f"{path}: malformed row at line {lineno}: {row}") from exc
    if not rows:
        raise EvalInputError(f"{path}: metrics CSV has no data rows")
    return rows
