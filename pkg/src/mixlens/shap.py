"""Shapley-kernel explainer over token-type coalitions, plus an exact oracle.

A coalition is a subset of the instance's token types kept present; its
value v(S) is the classifier's predicted-class output on the text with all
other types deleted (the baseline is the fully-deleted text). Attributions
solve a kernel-weighted least squares with two hard constraints:

    phi_0 = v(empty)        and        sum_i phi_i = v(full) - v(empty)

so efficiency holds exactly by construction. Small instances are solved
over every nontrivial coalition (exact mode, equal to true Shapley
values); larger ones sample coalitions proportional to the Shapley kernel
within a fixed evaluation budget.

:func:`exact_shapley` computes the same attributions by direct subset
enumeration of the permutation formula; it shares nothing with the kernel
path past the value function and is the verification oracle for it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .core import Instance, delete_tokens, token_types
from .errors import ExplanationError, SizeLimitError
from .evaluation import log_odds
from .explanations import Explanation, config_digest, derive_instance_seed

EXACT_SHAPLEY_MAX_TYPES = 12
TARGET_SPACES = ("probability", "logit")


@dataclass
class ShapConfig:
    budget: int = 2048  # max coalition evaluations
    exact_threshold: int | None = None  # None: exact whenever 2^m - 2 <= budget
    seed: int = 0
    target_space: str = "probability"

    def __post_init__(self):
        if self.budget < 2:
            raise ValueError(f"budget must be >= 2, got {self.budget}")
        if self.target_space not in TARGET_SPACES:
            raise ValueError(f"target_space must be one of {TARGET_SPACES}")

    def digest_fields(self) -> dict:
        return {
            "method": "shap",
            "budget": self.budget,
            "exact_threshold": self.exact_threshold,
            "seed": self.seed,
            "target_space": self.target_space,
        }


def shapley_kernel_weight(m: int, k: int) -> float:
    """(m-1) / (C(m,k) * k * (m-k)) for a size-k coalition of m players.

    Empty and full coalitions are excluded: they enter the solve as hard
    constraints, not as weighted rows.
    """
    if k <= 0 or k >= m:
        raise ValueError(f"coalition size k={k} out of range 1..{m - 1}")
    return (m - 1) / (math.comb(m, k) * k * (m - k))


def _is_exact(m: int, cfg: ShapConfig) -> bool:
    if cfg.exact_threshold is not None:
        return m <= cfg.exact_threshold
    return 2**m - 2 <= cfg.budget


def enumerate_or_sample_coalitions(m: int, cfg: ShapConfig) -> tuple[np.ndarray, bool]:
    """Return (masks, exact_mode) for m token types under the budget.

    Exact mode lists every nontrivial coalition grouped by size. Sampled
    mode draws ``budget`` coalitions (duplicates allowed) with size
    probability proportional to C(m,k) * kernel(m,k), then a uniform
    subset of that size; deterministic given cfg.seed.
    """
    if m < 1:
        raise ValueError(f"need at least one token type, got m={m}")
    if m == 1:
        return np.zeros((0, 1), dtype=np.int8), True
    if _is_exact(m, cfg):
        masks = np.zeros((2**m - 2, m), dtype=np.int8)
        row = 0
        for k in range(1, m):
            for members in itertools.combinations(range(m), k):
                masks[row, list(members)] = 1
                row += 1
        return masks, True
    size_probs = np.array([(m - 1) / (k * (m - k)) for k in range(1, m)])
    size_probs /= size_probs.sum()
    rng = np.random.default_rng(cfg.seed)
    masks = np.zeros((cfg.budget, m), dtype=np.int8)
    for i in range(cfg.budget):
        k = 1 + int(rng.choice(m - 1, p=size_probs))
        members = rng.choice(m, size=k, replace=False)
        masks[i, members] = 1
    return masks, False


def solve_constrained_wls(
    masks: np.ndarray,
    values: np.ndarray,
    kernel_weights: np.ndarray,
    v_empty: float,
    v_full: float,
) -> tuple[np.ndarray, bool]:
    """Solve the Shapley-kernel least squares under both hard constraints.

    phi_0 = v_empty is substituted directly; the efficiency constraint is
    eliminated by expressing the last attribution through the others, then
    the reduced system is solved by Cholesky on the normal equations. Rank
    deficiency (possible in sampled mode) falls back to the minimum-norm
    solution, flagged via the returned bool.
    """
    masks = np.asarray(masks, dtype=float)
    m = masks.shape[1]
    total = v_full - v_empty
    if not np.all(np.isfinite(values)):
        raise ValueError("coalition values contain non-finite entries")
    if m == 1:
        return np.array([total]), False
    z_last = masks[:, m - 1]
    design = masks[:, : m - 1] - z_last[:, None]
    y = np.asarray(values, dtype=float) - v_empty - z_last * total
    w = np.asarray(kernel_weights, dtype=float)
    wd = design * w[:, None]
    gram = design.T @ wd
    rhs = wd.T @ y
    try:
        chol = scipy.linalg.cho_factor(gram)
        head = scipy.linalg.cho_solve(chol, rhs)
        degenerate = False
    except (scipy.linalg.LinAlgError, ValueError):
        sqrt_w = np.sqrt(w)
        head, *_ = np.linalg.lstsq(design * sqrt_w[:, None], y * sqrt_w, rcond=None)
        degenerate = True
    phi = np.append(head, total - head.sum())
    return phi, degenerate


def _coalition_text(instance: Instance, types: list[str], present) -> str:
    absent = {types[j] for j in range(len(types)) if not present(j)}
    return delete_tokens(instance, absent)


def exact_shapley(
    handle, instance: Instance, value_space: str = "probability"
) -> np.ndarray:
    """Exact Shapley values by full subset enumeration (m <= 12).

    phi_i = sum_S |S|!(m-|S|-1)!/m! * (v(S+i) - v(S)), with v(S) the
    predicted-class output on the text whose types outside S are deleted.
    Returned in token_types(instance) order.
    """
    types = token_types(instance)
    m = len(types)
    if m == 0:
        raise ExplanationError(f"instance {instance.id!r} has no maskable token types")
    if m > EXACT_SHAPLEY_MAX_TYPES:
        raise SizeLimitError(
            f"exact Shapley needs 2^{m} queries; limit is m <= {EXACT_SHAPLEY_MAX_TYPES}"
        )
    texts = [
        _coalition_text(instance, types, lambda j, s=s: s >> j & 1)
        for s in range(2**m)
    ]
    probs = handle.predict_all(texts)
    pred_idx = int(np.argmax(probs[2**m - 1]))
    v = probs[:, pred_idx].astype(float)
    if value_space == "logit":
        v = np.array([log_odds(float(p)) for p in v])

    fact = [math.factorial(i) for i in range(m + 1)]
    phi = np.zeros(m)
    for s in range(2**m):
        size = bin(s).count("1")
        for i in range(m):
            if s >> i & 1:
                continue
            coef = fact[size] * fact[m - size - 1] / fact[m]
            phi[i] += coef * (v[s | (1 << i)] - v[s])
    return phi


def explain_shap(
    handle,
    instance: Instance,
    cfg: ShapConfig | None = None,
    digest: str = "",
) -> Explanation:
    """Explain one instance with Shapley-kernel attributions.

    weights are the attributions keyed by lookup_form, intercept is the
    empty-coalition value, and diagnostics record the efficiency gap
    |sum(phi) + phi_0 - v(full)| together with the mode used.
    """
    cfg = cfg or ShapConfig()
    types = token_types(instance)
    m = len(types)
    if m == 0:
        raise ExplanationError(f"instance {instance.id!r} has no maskable token types")
    local = replace(cfg, seed=derive_instance_seed(cfg.seed, instance.id))
    masks, exact = enumerate_or_sample_coalitions(m, local)
    full_text = _coalition_text(instance, types, lambda j: True)
    empty_text = _coalition_text(instance, types, lambda j: False)
    mask_texts = [
        _coalition_text(instance, types, lambda j, mk=mask: bool(mk[j]))
        for mask in masks
    ]
    probs = handle.predict_all([full_text, empty_text] + mask_texts)
    pred_idx = int(np.argmax(probs[0]))
    targets = probs[:, pred_idx].astype(float)
    if cfg.target_space == "logit":
        targets = np.array([log_odds(float(p)) for p in targets])
    v_full, v_empty = float(targets[0]), float(targets[1])
    values = targets[2:]
    if exact:
        weights_per_mask = np.array(
            [shapley_kernel_weight(m, int(mask.sum())) for mask in masks]
        )
    else:
        weights_per_mask = np.ones(len(masks))
    phi, degenerate = solve_constrained_wls(
        masks, values, weights_per_mask, v_empty, v_full
    )
    gap = abs(float(phi.sum()) + v_empty - v_full)
    return Explanation(
        instance_id=instance.id,
        explainer="shap",
        predicted_class=handle.class_names[pred_idx],
        original_probs=[float(p) for p in probs[0]],
        weights={types[j]: float(phi[j]) for j in range(m)},
        intercept=v_empty,
        diagnostics={
            "efficiency_gap": gap,
            "exact_mode": exact,
            "num_coalitions": int(masks.shape[0]),
            "degenerate_fit": degenerate,
            "target_space": cfg.target_space,
        },
        config_digest=digest or config_digest(cfg.digest_fields()),
    )
