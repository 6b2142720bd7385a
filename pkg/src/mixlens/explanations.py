"""Explanation records, seed derivation, config digests, and JSONL persistence.

One JSONL record per instance:

    {"id": "...", "explainer": "lime|shap", "predicted_class": "...",
     "probs": [...], "intercept": r, "weights": {"tok": r, ...},
     "diagnostics": {...}, "config_digest": "hex"}

Files produced by the pipeline start with one run-config header line
(``{"type": "run_config", "config": {...}, "config_digest": "hex"}``) so a
later eval run can verify it is looking at explanations produced by the
model and settings it was handed. Weight keys keep the token's
first-occurrence order in the instance; ranking tie-breaks rely on it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator


@dataclass
class Explanation:
    instance_id: str
    explainer: str  # "lime" | "shap"
    predicted_class: str
    original_probs: list[float]
    weights: dict[str, float]
    intercept: float
    diagnostics: dict = field(default_factory=dict)
    config_digest: str = ""

    def to_record(self) -> dict:
        return {
            "id": self.instance_id,
            "explainer": self.explainer,
            "predicted_class": self.predicted_class,
            "probs": [float(p) for p in self.original_probs],
            "intercept": float(self.intercept),
            "weights": {k: float(v) for k, v in self.weights.items()},
            "diagnostics": self.diagnostics,
            "config_digest": self.config_digest,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Explanation":
        return cls(
            instance_id=record["id"],
            explainer=record["explainer"],
            predicted_class=record["predicted_class"],
            original_probs=list(record["probs"]),
            weights=dict(record["weights"]),
            intercept=record["intercept"],
            diagnostics=record.get("diagnostics", {}),
            config_digest=record.get("config_digest", ""),
        )


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def derive_instance_seed(master_seed: int, instance_id: str) -> int:
    """Stable per-instance seed, independent of worker scheduling."""
    digest = hashlib.sha256(f"{master_seed}:{instance_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def write_explanations_jsonl(
    path: str | Path, config: dict, explanations: Iterable[Explanation]
) -> str:
    """Write a header line plus one record per explanation; returns the digest."""
    digest = config_digest(config)
    header = {"type": "run_config", "config": config, "config_digest": digest}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_record(header) + "\n")
        for expl in explanations:
            fh.write(dump_record(expl.to_record()) + "\n")
    return digest


def read_explanations_jsonl(
    path: str | Path,
) -> tuple[dict | None, str | None, list[Explanation]]:
    """Read (run config, its digest, explanations); header is optional."""
    config = None
    digest = None
    explanations: list[Explanation] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("type") == "run_config":
                config = record.get("config")
                digest = record.get("config_digest")
                continue
            explanations.append(Explanation.from_record(record))
    return config, digest, explanations
