"""Tokenization, dataset/vocabulary loading, and deletion-based text surgery.

Everything downstream (classifiers, explainers, metrics) shares the token
conventions defined here:

* tokens are whitespace-split fragments of the raw text, kept verbatim as
  ``surface`` so sentences can be reconstructed losslessly;
* ``lookup_form`` is the lowercased surface with leading/trailing
  non-alphanumeric characters stripped, and is the key used for vocabulary
  membership, explanation weights, and deletion targets;
* deletion is type-level: removing a lookup_form removes every occurrence.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataFormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Token:
    surface: str
    lookup_form: str
    position: int


@dataclass
class Instance:
    """One text sample. ``tokens`` is always ``tokenize(text)``."""

    id: str
    text: str
    tokens: list[Token]
    label: str | None = None

    @classmethod
    def from_text(cls, id: str, text: str, label: str | None = None) -> "Instance":
        return cls(id=id, text=text, tokens=tokenize(text), label=label)


@dataclass
class Dataset:
    name: str
    instances: list[Instance]
    class_names: list[str]
    num_rejected: int = 0

    def __len__(self) -> int:
        return len(self.instances)


@dataclass
class Vocabulary:
    """Set of lowercase tokens; membership is exact string equality."""

    entries: set[str]
    source_name: str = ""

    def __contains__(self, form: str) -> bool:
        return form in self.entries


def _strip_edge_punct(fragment: str) -> str:
    start, end = 0, len(fragment)
    while start < end and not fragment[start].isalnum():
        start += 1
    while end > start and not fragment[end - 1].isalnum():
        end -= 1
    return fragment[start:end]


def tokenize(text: str) -> list[Token]:
    """Split on Unicode whitespace; empty text gives an empty list."""
    tokens = []
    for position, surface in enumerate(text.split()):
        tokens.append(
            Token(
                surface=surface,
                lookup_form=_strip_edge_punct(surface.lower()),
                position=position,
            )
        )
    return tokens


def token_types(instance: Instance) -> list[str]:
    """Distinct non-empty lookup_forms in first-occurrence order.

    These are the maskable features of an instance. All-punctuation tokens
    (empty lookup_form) are exempt from masking and never appear here.
    """
    seen: dict[str, None] = {}
    for tok in instance.tokens:
        if tok.lookup_form and tok.lookup_form not in seen:
            seen[tok.lookup_form] = None
    return list(seen)


def delete_tokens(instance: Instance, targets: set[str]) -> str:
    """Rejoin surfaces of all tokens whose lookup_form is not targeted.

    Type-level deletion: every occurrence of a targeted lookup_form goes.
    The result may be the empty string.
    """
    kept = [t.surface for t in instance.tokens if t.lookup_form not in targets]
    return " ".join(kept)


def canonical_text(instance: Instance) -> str:
    """Whitespace-normalized form of the instance, i.e. zero deletions.

    All model queries use this form so that "delete nothing" is the exact
    identity on the model input.
    """
    return delete_tokens(instance, set())


def is_code_mixed(token: Token, vocab: Vocabulary) -> bool:
    """A word is code-mixed iff its lookup_form is absent from the vocabulary.

    All-punctuation tokens are not words and are never code-mixed.
    """
    return bool(token.lookup_form) and token.lookup_form not in vocab.entries


def bundled_vocab_path() -> Path:
    """Path of the small English vocabulary shipped with the package."""
    import importlib.resources

    return Path(
        importlib.resources.files("mixlens").joinpath("data/toy_vocab.txt")
    )


def load_vocab(path: str | Path) -> Vocabulary:
    """Read a one-token-per-line vocabulary file (UTF-8, LF or CRLF)."""
    path = Path(path)
    entries: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            form = line.strip().lower()
            if form:
                entries.add(form)
    if not entries:
        logger.warning(
            "vocabulary %s is empty: every word will count as code-mixed", path
        )
    return Vocabulary(entries=entries, source_name=path.name)


_DELIMITERS = {"tsv": "\t", "csv": ","}


def load_dataset(
    path: str | Path,
    format: str = "tsv",
    class_names: list[str] | None = None,
) -> Dataset:
    """Load a delimited text dataset with a header row.

    Columns: ``text`` (required), ``label`` and ``id`` (optional). Rows with
    an empty text cell are rejected and counted in ``Dataset.num_rejected``.
    Unless ``class_names`` is given, classes are the sorted distinct labels.
    """
    path = Path(path)
    if format not in _DELIMITERS:
        raise DataFormatError(f"unknown dataset format {format!r}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=_DELIMITERS[format])
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty, expected a header row")
        columns = {name.strip().lower(): i for i, name in enumerate(header)}
        if "text" not in columns:
            raise DataFormatError(f"{path}: header has no 'text' column: {header}")
        text_col = columns["text"]
        label_col = columns.get("label")
        id_col = columns.get("id")

        instances: list[Instance] = []
        seen_ids: set[str] = set()
        rejected = 0
        for row_index, row in enumerate(reader):
            text = row[text_col] if text_col < len(row) else ""
            if not text.strip():
                rejected += 1
                continue
            label = None
            if label_col is not None and label_col < len(row) and row[label_col] != "":
                label = row[label_col]
            inst_id = (
                row[id_col]
                if id_col is not None and id_col < len(row)
                else str(row_index)
            )
            if inst_id in seen_ids:
                raise DataFormatError(f"{path}: duplicate instance id {inst_id!r}")
            seen_ids.add(inst_id)
            instances.append(Instance.from_text(inst_id, text, label))

    if rejected:
        logger.warning("%s: rejected %d rows with empty text", path, rejected)
    if not instances:
        logger.warning("%s: dataset has no instances", path)

    labels = sorted({i.label for i in instances if i.label is not None})
    if class_names is None:
        class_names = labels
    else:
        unknown = [l for l in labels if l not in class_names]
        if unknown:
            raise DataFormatError(
                f"{path}: labels {unknown} not in declared classes {class_names}"
            )
        if len(set(class_names)) != len(class_names):
            raise DataFormatError(f"declared class list has duplicates: {class_names}")
    return Dataset(
        name=path.stem,
        instances=instances,
        class_names=list(class_names),
        num_rejected=rejected,
    )
