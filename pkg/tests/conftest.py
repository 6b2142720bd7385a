import numpy as np
import pytest

from mixlens.classifier import ReferenceHandle, ReferenceModel
from mixlens.core import Dataset, Instance


def make_binary_model(weights_toward_positive: dict[str, float],
                      classes=("negative", "positive"),
                      bias=(0.0, 0.0)) -> ReferenceModel:
    """Binary model whose positive-class logit carries the given weights."""
    vocab = sorted(weights_toward_positive)
    vocab_index = {tok: i for i, tok in enumerate(vocab)}
    w = np.zeros((2, len(vocab)))
    for tok, value in weights_toward_positive.items():
        w[1, vocab_index[tok]] = value
    return ReferenceModel(
        class_names=list(classes),
        vocab_index=vocab_index,
        weights=w,
        bias=np.array(bias, dtype=float),
        training_meta={"seed": 0, "epochs": 0, "learning_rate": 0.0, "l2": 0.0,
                       "final_loss": 0.0, "num_training_instances": 0},
    )


@pytest.fixture
def good_bad_model() -> ReferenceModel:
    return make_binary_model({"good": 2.0, "bad": -2.0, "movie": 0.0})


@pytest.fixture
def good_bad_handle(good_bad_model) -> ReferenceHandle:
    return ReferenceHandle(good_bad_model)


@pytest.fixture
def good_bad_dataset() -> Dataset:
    return Dataset(
        name="toy",
        instances=[
            Instance.from_text("0", "good movie", "positive"),
            Instance.from_text("1", "bad movie", "negative"),
        ],
        class_names=["negative", "positive"],
    )


def write_tsv(path, rows, header=("text", "label")):
    lines = ["\t".join(header)]
    lines += ["\t".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
