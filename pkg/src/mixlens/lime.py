"""Local surrogate explainer over token-type deletion perturbations.

The interpretable features of an instance are its distinct token types
(lookup_forms); a perturbation mask keeps or deletes all occurrences of a
type. The black box is queried on the reconstructed texts and a
kernel-weighted ridge regression over the masks approximates its behavior
around the instance. Coefficients are the per-type weights toward the
predicted class.

The surrogate target is the predicted class's probability. A logit-space
"test mode" (``target_space="logit"``) exists so that, against the linear
reference classifier, the surrogate recovers per-token logit deltas
exactly and the whole path can be verified against a closed form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Instance, delete_tokens, token_types
from .errors import ExplanationError
from .evaluation import log_odds
from .explanations import Explanation, config_digest, derive_instance_seed

TARGET_SPACES = ("probability", "logit")


@dataclass
class LimeConfig:
    num_samples: int = 1000
    kernel_width: float = 25.0
    ridge_lambda: float = 1.0
    max_features: int | None = None
    seed: int = 0
    exhaustive: bool = False  # enumerate all 2^m masks instead of sampling
    target_space: str = "probability"

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if not self.kernel_width > 0:
            raise ValueError(f"kernel_width must be > 0, got {self.kernel_width}")
        if self.ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.target_space not in TARGET_SPACES:
            raise ValueError(f"target_space must be one of {TARGET_SPACES}")

    def digest_fields(self) -> dict:
        return {
            "method": "lime",
            "num_samples": self.num_samples,
            "kernel_width": self.kernel_width,
            "ridge_lambda": self.ridge_lambda,
            "max_features": self.max_features,
            "seed": self.seed,
            "exhaustive": self.exhaustive,
            "target_space": self.target_space,
        }


def sample_perturbations(m: int, num_samples: int, seed: int) -> np.ndarray:
    """Draw perturbation masks over m token types; first mask is all-ones.

    Each remaining mask removes a uniform k-subset with k drawn uniformly
    from {1..m}, so anything from one word up to the whole sentence can
    disappear (the all-zeros mask is permitted).
    """
    if m < 1:
        raise ValueError(f"need at least one token type, got m={m}")
    masks = np.ones((num_samples, m), dtype=np.int8)
    rng = np.random.default_rng(seed)
    for i in range(1, num_samples):
        k = int(rng.integers(1, m + 1))
        removed = rng.choice(m, size=k, replace=False)
        masks[i, removed] = 0
    return masks


def enumerate_masks(m: int) -> np.ndarray:
    """All 2^m masks, all-ones first, then fixed binary-product order."""
    rest = [
        mask for mask in itertools.product((0, 1), repeat=m) if 0 in mask
    ]
    return np.array([(1,) * m] + rest, dtype=np.int8)


def kernel_weight(mask: np.ndarray, kernel_width: float) -> float:
    """Exponential locality kernel over cosine distance to the full mask.

    A mask with k of m ones sits at cosine distance 1 - sqrt(k/m) from the
    all-ones mask; the all-zeros mask is at distance 1.
    """
    m = len(mask)
    k = int(np.sum(mask))
    d = 1.0 - math.sqrt(k / m)
    return math.exp(-(d * d) / (kernel_width * kernel_width))


def fit_local_surrogate(
    masks: np.ndarray,
    targets: np.ndarray,
    sample_weights: np.ndarray,
    ridge_lambda: float,
) -> tuple[np.ndarray, float, bool]:
    """Weighted ridge regression with an unpenalized intercept.

    Minimizes sum_i w_i (y_i - beta.z_i - beta0)^2 + lambda ||beta||^2 by a
    direct normal-equations solve (Cholesky). A singular system (possible
    with lambda=0) falls back to the minimum-norm least-squares solution
    and reports degeneracy via the returned flag.
    """
    z = np.asarray(masks, dtype=float)
    y = np.asarray(targets, dtype=float)
    w = np.asarray(sample_weights, dtype=float)
    if z.shape[0] < 2:
        raise ValueError("need at least 2 masks to fit a surrogate")
    if not np.all(np.isfinite(y)):
        raise ValueError("surrogate targets contain non-finite values")
    n, m = z.shape
    design = np.hstack([z, np.ones((n, 1))])
    wd = design * w[:, None]
    gram = design.T @ wd
    gram[np.arange(m), np.arange(m)] += ridge_lambda  # intercept unpenalized
    rhs = wd.T @ y
    try:
        chol = scipy.linalg.cho_factor(gram)
        solution = scipy.linalg.cho_solve(chol, rhs)
        degenerate = False
    except scipy.linalg.LinAlgError:
        sqrt_w = np.sqrt(w)
        solution, *_ = np.linalg.lstsq(design * sqrt_w[:, None], y * sqrt_w, rcond=None)
        degenerate = True
    return solution[:m], float(solution[m]), degenerate


def _weighted_r2(z, y, w, coef, intercept) -> float:
    pred = z @ coef + intercept
    ss_res = float(np.sum(w * (y - pred) ** 2))
    mean = float(np.sum(w * y) / np.sum(w))
    ss_tot = float(np.sum(w * (y - mean) ** 2))
    if ss_tot <= 0.0:
        return 1.0 if ss_res <= 1e-18 else -math.inf
    return 1.0 - ss_res / ss_tot


def explain_lime(
    handle,
    instance: Instance,
    cfg: LimeConfig | None = None,
    digest: str = "",
) -> Explanation:
    """Explain one instance by fitting a local surrogate to the black box."""
    cfg = cfg or LimeConfig()
    types = token_types(instance)
    m = len(types)
    if m == 0:
        raise ExplanationError(
            f"instance {instance.id!r} has no maskable token types"
        )
    if cfg.exhaustive:
        masks = enumerate_masks(m)
    else:
        masks = sample_perturbations(
            m, cfg.num_samples, derive_instance_seed(cfg.seed, instance.id)
        )
    texts = [
        delete_tokens(instance, {types[j] for j in range(m) if mask[j] == 0})
        for mask in masks
    ]
    probs = handle.predict_all(texts)
    original = probs[0]
    pred_idx = int(np.argmax(original))
    y = probs[:, pred_idx].astype(float)
    if cfg.target_space == "logit":
        y = np.array([log_odds(float(p)) for p in y])
    weights_per_mask = np.array([kernel_weight(mask, cfg.kernel_width) for mask in masks])
    coef, intercept, degenerate = fit_local_surrogate(
        masks, y, weights_per_mask, cfg.ridge_lambda
    )
    r2 = _weighted_r2(masks.astype(float), y, weights_per_mask, coef, intercept)

    weights = {types[j]: float(coef[j]) for j in range(m)}
    if cfg.max_features is not None and cfg.max_features < m:
        keep = set(
            sorted(weights, key=lambda t: (-abs(weights[t]), types.index(t)))[
                : cfg.max_features
            ]
        )
        weights = {t: w for t, w in weights.items() if t in keep}
    return Explanation(
        instance_id=instance.id,
        explainer="lime",
        predicted_class=handle.class_names[pred_idx],
        original_probs=[float(p) for p in original],
        weights=weights,
        intercept=intercept,
        diagnostics={
            "surrogate_r2": r2,
            "num_masks": int(masks.shape[0]),
            "exhaustive": cfg.exhaustive,
            "degenerate_fit": degenerate,
            "target_space": cfg.target_space,
        },
        config_digest=digest or config_digest(cfg.digest_fields()),
    )
