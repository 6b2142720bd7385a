"""Synthetic planted-polarity corpus used by service/CLI/acceptance tests.

Every sentence gets one strong polarity word plus two weak words of the
same polarity; the rest is neutral filler. Each slot draws its word from
an English or a Hinglish-style sublist, the latter absent from the bundled
toy vocabulary, so roughly 30% of tokens count as code-mixed. Labels
follow the planted polarity, which makes a trained reference model put
large weights exactly where the generator planted them.
"""

from __future__ import annotations

import numpy as np

from mixlens.core import bundled_vocab_path, load_vocab

STRONG = {
    "positive": {
        "en": ["fantastic", "superb", "brilliant", "excellent"],
        "cm": ["zabardast", "jhakaas", "badhiya", "shandaar"],
    },
    "negative": {
        "en": ["terrible", "awful", "horrible", "unwatchable"],
        "cm": ["bakwaas", "ghatiya", "bekaar", "raddi"],
    },
}
WEAK = {
    "positive": {
        "en": ["good", "enjoyable", "nice", "fun"],
        "cm": ["mast", "sahi", "jhakkas"],
    },
    "negative": {
        "en": ["boring", "weak", "dull", "poor"],
        "cm": ["faltu", "thanda", "bogus"],
    },
}
FILLER = {
    "en": ["the", "movie", "film", "story", "acting", "plot", "music",
           "scene", "ending", "screenplay", "camera", "dialogue"],
    "cm": ["yaar", "bhai", "ekdum", "kahani", "gaana", "bilkul"],
}

CM_RATE_POLAR = 0.45
CM_RATE_FILLER = 0.2


def _pick(rng, pool: dict, cm_rate: float, used: set[str]) -> str:
    for _ in range(50):
        variant = "cm" if rng.random() < cm_rate else "en"
        word = pool[variant][int(rng.integers(len(pool[variant])))]
        if word not in used:
            return word
    raise RuntimeError("word pools exhausted")


def generate_corpus(num_instances: int = 220, seed: int = 0) -> list[tuple[str, str]]:
    """Returns (text, label) rows; 5-10 tokens each, binary labels."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(num_instances):
        label = "positive" if i % 2 == 0 else "negative"
        used: set[str] = set()
        words = [_pick(rng, STRONG[label], CM_RATE_POLAR, used)]
        used.update(words)
        for _ in range(2):
            word = _pick(rng, WEAK[label], CM_RATE_POLAR, used)
            words.append(word)
            used.add(word)
        length = int(rng.integers(5, 11))
        while len(words) < length:
            word = _pick(rng, FILLER, CM_RATE_FILLER, used)
            words.append(word)
            used.add(word)
        order = rng.permutation(len(words))
        rows.append((" ".join(words[j] for j in order), label))
    return rows


def write_corpus_tsv(path, rows) -> None:
    lines = ["text\tlabel"] + [f"{text}\t{label}" for text, label in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def code_mixed_fraction(rows) -> float:
    vocab = load_vocab(bundled_vocab_path())
    total = mixed = 0
    for text, _ in rows:
        for word in text.split():
            total += 1
            mixed += word not in vocab.entries
    return mixed / total
