"""Black-box prediction interface and the trainable reference classifier.

The reference classifier is a multinomial logistic regression over raw
bag-of-words counts, trained by deterministic full-batch gradient descent
from zero-initialized weights. Its logits are linear in token counts, so
the log-odds change under any deletion has a closed form
(:func:`oracle_log_odds_delta`), which is what makes the deletion metrics
exactly checkable.

External classifiers speak the line-JSON wire protocol (see
:mod:`mixlens.external`); both kinds are used through the same handle
surface: ``class_names``, ``batch_limit``, ``predict_proba`` and
``predict_all``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, Instance, canonical_text, tokenize
from .errors import DivergenceError, OracleError, PredictionError, TrainingError

MODEL_FORMAT_VERSION = 1
DEFAULT_BATCH_LIMIT = 64

PROB_SUM_TOL = 1e-6


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def check_prob_rows(rows: np.ndarray, num_classes: int) -> None:
    """Validate a batch of probability vectors against the ProbDist contract."""
    if rows.ndim != 2 or rows.shape[1] != num_classes:
        raise PredictionError(
            f"expected probability rows of width {num_classes}, got shape {rows.shape}"
        )
    if rows.shape[0] == 0:
        return
    if not np.all(np.isfinite(rows)):
        raise PredictionError("probability rows contain non-finite values")
    if rows.min() < -PROB_SUM_TOL or rows.max() > 1 + PROB_SUM_TOL:
        raise PredictionError("probability entries outside [0, 1]")
    sums = rows.sum(axis=1)
    if np.abs(sums - 1.0).max() > PROB_SUM_TOL:
        raise PredictionError("probability rows do not sum to 1 within 1e-6")


def predicted_class_index(probs: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest class index."""
    return int(np.argmax(probs))


@dataclass
class TrainConfig:
    epochs: int = 300
    learning_rate: float = 0.5
    l2: float = 1e-4
    seed: int = 0


@dataclass
class ReferenceModel:
    class_names: list[str]
    vocab_index: dict[str, int]
    weights: np.ndarray  # [num_classes, num_features]
    bias: np.ndarray  # [num_classes]
    training_meta: dict = field(default_factory=dict)

    def features(self, text: str) -> np.ndarray:
        counts = np.zeros(len(self.vocab_index))
        for tok in tokenize(text):
            idx = self.vocab_index.get(tok.lookup_form)
            if idx is not None:
                counts[idx] += 1.0
        return counts

    def predict_proba(self, texts: list[str]) -> np.ndarray:
        x = np.stack([self.features(t) for t in texts]) if texts else np.zeros((0, len(self.vocab_index)))
        logits = x @ self.weights.T + self.bias
        return softmax(logits)


def _count_matrix(data: Dataset, vocab_index: dict[str, int]) -> np.ndarray:
    x = np.zeros((len(data.instances), len(vocab_index)))
    for row, inst in enumerate(data.instances):
        for tok in inst.tokens:
            idx = vocab_index.get(tok.lookup_form)
            if idx is not None:
                x[row, idx] += 1.0
    return x


def train_reference(data: Dataset, hyper: TrainConfig | None = None) -> ReferenceModel:
    """Fit the reference classifier on a labeled dataset.

    Full-batch gradient descent from zero weights; the run is a pure
    function of (data, hyper), so identical inputs give a bit-identical
    model. The bias is not regularized.
    """
    hyper = hyper or TrainConfig()
    labeled = [inst for inst in data.instances if inst.label is not None]
    if len(data.class_names) < 2:
        raise TrainingError(
            f"need at least 2 classes to train, got {data.class_names}"
        )
    per_class = {c: 0 for c in data.class_names}
    for inst in labeled:
        per_class[inst.label] += 1
    missing = [c for c, n in per_class.items() if n == 0]
    if missing:
        raise TrainingError(f"classes with no labeled instances: {missing}")

    vocab = sorted(
        {tok.lookup_form for inst in labeled for tok in inst.tokens if tok.lookup_form}
    )
    vocab_index = {form: i for i, form in enumerate(vocab)}
    class_to_idx = {c: i for i, c in enumerate(data.class_names)}

    sub = Dataset(name=data.name, instances=labeled, class_names=data.class_names)
    x = _count_matrix(sub, vocab_index)
    y = np.zeros((len(labeled), len(data.class_names)))
    for row, inst in enumerate(labeled):
        y[row, class_to_idx[inst.label]] = 1.0

    n = len(labeled)
    w = np.zeros((len(data.class_names), len(vocab_index)))
    b = np.zeros(len(data.class_names))
    loss = math.nan
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is checked below
        for _ in range(hyper.epochs):
            probs = softmax(x @ w.T + b)
            loss = -np.log(np.clip((probs * y).sum(axis=1), 1e-300, None)).mean()
            loss += 0.5 * hyper.l2 * float((w * w).sum())
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"training loss became non-finite (epoch loss={loss}); "
                    "reduce learning_rate",
                    hyperparameter="learning_rate",
                )
            resid = probs - y
            w -= hyper.learning_rate * (resid.T @ x / n + hyper.l2 * w)
            b -= hyper.learning_rate * resid.mean(axis=0)

    if hyper.epochs == 0:
        probs = softmax(x @ w.T + b)
        loss = -np.log(np.clip((probs * y).sum(axis=1), 1e-300, None)).mean()

    meta = {
        "seed": hyper.seed,
        "epochs": hyper.epochs,
        "learning_rate": hyper.learning_rate,
        "l2": hyper.l2,
        "final_loss": float(loss),
        "num_training_instances": n,
    }
    return ReferenceModel(
        class_names=list(data.class_names),
        vocab_index=vocab_index,
        weights=w,
        bias=b,
        training_meta=meta,
    )


def training_accuracy(model: ReferenceModel, data: Dataset) -> float:
    labeled = [i for i in data.instances if i.label is not None]
    if not labeled:
        return 0.0
    probs = model.predict_proba([canonical_text(i) for i in labeled])
    hits = sum(
        1
        for inst, row in zip(labeled, probs)
        if model.class_names[predicted_class_index(row)] == inst.label
    )
    return hits / len(labeled)


def save_reference(model: ReferenceModel, path: str | Path) -> None:
    """Write the model as a JSON artifact; round-trips bit-exactly."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "class_names": model.class_names,
        "vocab_index": model.vocab_index,
        "weights": [list(row) for row in model.weights.tolist()],
        "bias": model.bias.tolist(),
        "training_meta": model.training_meta,
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False), encoding="utf-8"
    )


def load_reference(path: str | Path) -> ReferenceModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise TrainingError(
            f"unsupported model format_version {version!r} in {path}"
        )
    weights = np.array(payload["weights"], dtype=float)
    bias = np.array(payload["bias"], dtype=float)
    if weights.shape != (len(payload["class_names"]), len(payload["vocab_index"])):
        raise TrainingError(f"inconsistent weight matrix shape in {path}")
    return ReferenceModel(
        class_names=payload["class_names"],
        vocab_index=payload["vocab_index"],
        weights=weights,
        bias=bias,
        training_meta=payload["training_meta"],
    )


class ReferenceHandle:
    """Classifier handle over an in-process reference model. Pure, reentrant."""

    kind = "reference"

    def __init__(self, model: ReferenceModel, batch_limit: int = DEFAULT_BATCH_LIMIT):
        self.model = model
        self.class_names = list(model.class_names)
        self.batch_limit = batch_limit

    def predict_proba(self, texts: list[str]) -> np.ndarray:
        if len(texts) > self.batch_limit:
            raise ValueError(
                f"batch of {len(texts)} exceeds batch_limit {self.batch_limit}"
            )
        rows = self.model.predict_proba(texts)
        check_prob_rows(rows, len(self.class_names))
        return rows

    def predict_all(self, texts: list[str]) -> np.ndarray:
        return predict_in_batches(self, texts)

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def predict_in_batches(handle, texts: list[str]) -> np.ndarray:
    """Chunk an arbitrary-length query into batch_limit-sized calls."""
    if not texts:
        return np.zeros((0, len(handle.class_names)))
    rows = []
    for start in range(0, len(texts), handle.batch_limit):
        rows.append(handle.predict_proba(texts[start : start + handle.batch_limit]))
    return np.concatenate(rows, axis=0)


def oracle_log_odds_delta(
    model: ReferenceModel, instance: Instance, targets: set[str]
) -> float:
    """Closed-form |log_odds_i - log_odds_f| for a binary reference model.

    The predicted-class logit margin is linear in token counts, so deleting
    a set of lookup_forms changes it by exactly the summed per-occurrence
    weight differences. No probabilities (and no clamping) are involved.
    """
    if len(model.class_names) != 2:
        raise OracleError(
            f"log-odds oracle needs a binary model, got {len(model.class_names)} classes"
        )
    probs = model.predict_proba([canonical_text(instance)])[0]
    pred = predicted_class_index(probs)
    other = 1 - pred
    delta = 0.0
    for tok in instance.tokens:
        if tok.lookup_form in targets:
            idx = model.vocab_index.get(tok.lookup_form)
            if idx is not None:
                delta += model.weights[pred, idx] - model.weights[other, idx]
    return abs(delta)


def resolve_model(spec: str, batch_limit: int = DEFAULT_BATCH_LIMIT):
    """Open a classifier handle from a ``ref:<path>`` or ``ext:<command>`` string."""
    if spec.startswith("ref:"):
        return ReferenceHandle(load_reference(spec[4:]), batch_limit=batch_limit)
    if spec.startswith("ext:"):
        from .external import connect_external

        return connect_external(spec[4:])
    raise ValueError(f"model spec must start with 'ref:' or 'ext:', got {spec!r}")
