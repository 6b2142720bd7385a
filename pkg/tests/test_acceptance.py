"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion (a failed assertion is the FAIL case).
"""

import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

import synth
from conftest import make_binary_model
from mixlens.classifier import (
    ReferenceHandle,
    TrainConfig,
    oracle_log_odds_delta,
    train_reference,
)
from mixlens.cli import main as cli_main
from mixlens.core import (
    Dataset,
    Instance,
    bundled_vocab_path,
    load_dataset,
    load_vocab,
    token_types,
    tokenize,
)
from mixlens.core import is_code_mixed
from mixlens.evaluation import maelosd_sentence, read_metrics_csv, top_n_polarizing
from mixlens.explanations import Explanation
from mixlens.lime import LimeConfig, explain_lime
from mixlens.shap import ShapConfig, exact_shapley, explain_shap

UNIFORM_KERNEL = float("inf")


def passed(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS", flush=True)


@pytest.fixture(scope="module")
def trained_setup(tmp_path_factory):
    """Reference model trained on a small planted corpus, plus its word pool."""
    root = tmp_path_factory.mktemp("acc")
    data_path = root / "train.tsv"
    synth.write_corpus_tsv(data_path, synth.generate_corpus(80, seed=21))
    data = load_dataset(data_path, format="tsv")
    model = train_reference(data, TrainConfig(epochs=200, seed=21))
    pool = sorted(model.vocab_index)
    return {"model": model, "handle": ReferenceHandle(model), "pool": pool}


def random_instance(rng, pool, num_types, ident) -> Instance:
    words = rng.choice(len(pool), size=num_types, replace=False)
    return Instance.from_text(ident, " ".join(pool[i] for i in words))


class TestAcceptance:
    def test_exact_shapley_equivalence(self, trained_setup):
        """explain_shap (exact mode) == exact_shapley within 1e-6 on 50 instances."""
        start = time.monotonic()
        handle = trained_setup["handle"]
        rng = np.random.default_rng(101)
        checked = 0
        for i in range(50):
            m = int(rng.integers(3, 11))  # 3..10 token types
            inst = random_instance(rng, trained_setup["pool"], m, f"r{i}")
            expl = explain_shap(handle, inst, ShapConfig(seed=5))
            assert expl.diagnostics["exact_mode"]
            assert expl.diagnostics["efficiency_gap"] <= 1e-6
            oracle = exact_shapley(handle, inst)
            got = np.array([expl.weights[t] for t in token_types(inst)])
            np.testing.assert_allclose(got, oracle, atol=1e-6)
            checked += 1
        elapsed = time.monotonic() - start
        assert checked == 50
        assert elapsed < 60.0, f"took {elapsed:.1f}s, budget is 60s"
        passed(f"exact-shapley-equivalence ({elapsed:.1f}s)")

    def test_lime_linear_recovery(self, trained_setup):
        """Exhaustive logit-mode LIME recovers per-token logit deltas (<=1e-6);
        sampled mode with 5000 samples and the default kernel stays within 0.05."""
        model = trained_setup["model"]
        handle = trained_setup["handle"]
        rng = np.random.default_rng(202)
        exact_cfg = LimeConfig(
            kernel_width=UNIFORM_KERNEL, ridge_lambda=0.0, exhaustive=True,
            target_space="logit", seed=1,
        )
        sampled_cfg = LimeConfig(num_samples=5000, target_space="logit", seed=1)

        def logit_deltas(inst):
            probs = model.predict_proba([inst.text])[0]
            pred = int(np.argmax(probs))
            deltas = {}
            for form in token_types(inst):
                idx = model.vocab_index.get(form)
                deltas[form] = (
                    0.0 if idx is None
                    else model.weights[pred, idx] - model.weights[1 - pred, idx]
                )
            return deltas

        for i in range(10):
            m = int(rng.integers(3, 9))  # m <= 8 for full enumeration
            inst = random_instance(rng, trained_setup["pool"], m, f"l{i}")
            truth = logit_deltas(inst)
            exact = explain_lime(handle, inst, exact_cfg)
            for form, delta in truth.items():
                assert abs(exact.weights[form] - delta) <= 1e-6, (form, i)
            sampled = explain_lime(handle, inst, sampled_cfg)
            for form, delta in truth.items():
                assert abs(sampled.weights[form] - delta) <= 0.05, (form, i)
        passed("lime-linear-recovery")

    def test_eq1_oracle_two_sentence_corpus(self):
        """MAELOSD-Sentence(n=1) on the +/-2 corpus is 2.0 via both paths."""
        model = make_binary_model({"good": 2.0, "bad": -2.0, "movie": 0.0})
        handle = ReferenceHandle(model)
        data = Dataset(
            "toy",
            [
                Instance.from_text("0", "good movie", "positive"),
                Instance.from_text("1", "bad movie", "negative"),
            ],
            ["negative", "positive"],
        )
        explanations = []
        for inst in data.instances:
            probs = model.predict_proba([inst.text])[0]
            pred = int(np.argmax(probs))
            weights = {}
            for form in token_types(inst):
                idx = model.vocab_index[form]
                weights[form] = model.weights[pred, idx] - model.weights[1 - pred, idx]
            explanations.append(
                Explanation(inst.id, "lime", model.class_names[pred],
                            [float(p) for p in probs], weights, 0.0)
            )
        empirical = maelosd_sentence(handle, explanations, data, n=1)
        assert empirical.value == pytest.approx(2.0, abs=1e-9)
        oracle_values = [
            oracle_log_odds_delta(model, inst, set(top_n_polarizing(expl, 1)))
            for inst, expl in zip(data.instances, explanations)
        ]
        assert sum(oracle_values) / len(oracle_values) == pytest.approx(2.0, abs=1e-9)
        passed("eq1-oracle")

    def test_paper_trends_on_planted_corpus(self, tmp_path):
        """>=200 planted sentences, ~30% code-mixed; LIME/SHAP beat the random
        baseline >=2x at n=1; Sentence and CodeMixed curves are nondecreasing
        for n=1..3; degenerate counts grow with n. Full CLI pipeline, <5 min."""
        start = time.monotonic()
        rows = synth.generate_corpus(220, seed=0)
        fraction = synth.code_mixed_fraction(rows)
        assert 0.2 <= fraction <= 0.4, f"code-mixed fraction {fraction:.2f}"
        data = tmp_path / "corpus.tsv"
        synth.write_corpus_tsv(data, rows)
        model = tmp_path / "model.ref"
        runner = CliRunner()

        def run(args):
            result = runner.invoke(cli_main, args)
            assert result.exit_code == 0, result.output
            return result

        run(["train", "--data", str(data), "--out", str(model), "--seed", "1"])
        csvs = {}
        for method in ("lime", "shap"):
            jsonl = tmp_path / f"{method}.jsonl"
            run([
                "explain", "--method", method, "--model", f"ref:{model}",
                "--data", str(data), "--out", str(jsonl),
                "--samples", "300", "--seed", "9",
            ])
            out_csv = tmp_path / f"metrics_{method}.csv"
            run([
                "eval", "--variant", "all", "--n", "1:5",
                "--expl", str(jsonl), "--data", str(data),
                "--model", f"ref:{model}", "--vocab", str(bundled_vocab_path()),
                "--baseline", "random", "--seed", "9", "--out", str(out_csv),
            ])
            csvs[method] = read_metrics_csv(out_csv)
        run([
            "report", str(tmp_path / "metrics_lime.csv"),
            str(tmp_path / "metrics_shap.csv"), "--out", str(tmp_path / "fig.svg"),
        ])
        assert (tmp_path / "fig.svg").exists()

        def series(rows_, variant, explainer, field="maelosd"):
            return {
                r["n"]: r[field]
                for r in rows_
                if r["variant"] == variant and r["explainer"] == explainer
            }

        baseline = series(csvs["lime"], "random_baseline", "random")
        for method in ("lime", "shap"):
            sentence = series(csvs[method], "sentence", method)
            assert sentence[1] >= 2.0 * baseline[1], (
                f"{method}: sentence {sentence[1]:.3f} vs baseline {baseline[1]:.3f}"
            )
            codemixed = series(csvs[method], "codemixed", method)
            for n in (2, 3):
                assert sentence[n] >= sentence[n - 1], (method, "sentence", n)
                assert codemixed[n] >= codemixed[n - 1], (method, "codemixed", n)
            degenerate = series(csvs[method], "codemixed", method, "num_degenerate")
            for n in range(2, 6):
                assert degenerate[n] >= degenerate[n - 1]
            assert degenerate[5] > degenerate[1]
            assert degenerate[5] > 0
        elapsed = time.monotonic() - start
        assert elapsed < 300.0, f"took {elapsed:.1f}s, budget is 300s"
        passed(f"paper-trend-reproduction ({elapsed:.1f}s)")

    def test_full_pipeline_determinism_across_jobs(self, tmp_path):
        """train -> explain -> eval reruns are byte-identical at any --jobs."""
        data = tmp_path / "corpus.tsv"
        synth.write_corpus_tsv(data, synth.generate_corpus(60, seed=13))
        runner = CliRunner()

        def pipeline(tag, jobs):
            model = tmp_path / f"model_{tag}.ref"
            outputs = []
            result = runner.invoke(cli_main, [
                "train", "--data", str(data), "--out", str(model), "--seed", "2",
            ])
            assert result.exit_code == 0, result.output
            outputs.append(model.read_bytes())
            for method in ("lime", "shap"):
                jsonl = tmp_path / f"{method}_{tag}.jsonl"
                result = runner.invoke(cli_main, [
                    "explain", "--method", method, "--model", f"ref:{model}",
                    "--data", str(data), "--out", str(jsonl),
                    "--samples", "100", "--budget", "256",
                    "--seed", "3", "--jobs", str(jobs),
                ])
                assert result.exit_code == 0, result.output
                outputs.append(jsonl.read_bytes())
                out_csv = tmp_path / f"metrics_{method}_{tag}.csv"
                result = runner.invoke(cli_main, [
                    "eval", "--variant", "all", "--n", "1:4",
                    "--expl", str(jsonl), "--data", str(data),
                    "--model", f"ref:{model}", "--vocab", str(bundled_vocab_path()),
                    "--baseline", "random", "--seed", "3", "--out", str(out_csv),
                ])
                assert result.exit_code == 0, result.output
                outputs.append(out_csv.read_bytes())
            return outputs

        serial = pipeline("a", jobs=1)
        parallel = pipeline("b", jobs=4)
        again = pipeline("c", jobs=4)
        assert serial == parallel == again
        passed("pipeline-determinism")

    def test_code_mixed_detection_against_bundled_vocab(self):
        """'accha' counts as code-mixed; English words do not; punctuation exempt."""
        vocab = load_vocab(bundled_vocab_path())
        (accha,) = tokenize("accha")
        assert is_code_mixed(accha, vocab)
        for word in ("movie", "good", "The", "story"):
            (tok,) = tokenize(word)
            assert not is_code_mixed(tok, vocab), word
        (punct,) = tokenize("!!!")
        assert not is_code_mixed(punct, vocab)
        passed("code-mixed-detection")
