"""Command-line surface: a thin client over the mixlens service.

Commands post to a running server when --server (or MIXLENS_SERVER) is
set; otherwise they run against an in-process instance of the same app,
so one-shot pipeline runs need no daemon. Either way all work happens
behind the service endpoints.

Exit codes: 0 ok, 1 operation error, 2 usage, 3 refused overwrite,
4 explanation/model/data mismatch, 5 unusable report input.
"""

from __future__ import annotations

import json
import sys

import click

EXIT_BY_CODE = {"output_exists": 3, "eval_mismatch": 4, "report_input": 5}


class ServiceError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class ServiceClient:
    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._http = httpx.Client(base_url=server, timeout=3600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # some starlette/httpx pairings warn at import; not actionable here
                warnings.filterwarnings("ignore", message="Using `httpx` with")
                from fastapi.testclient import TestClient

            from .service.app import create_app

            self._http = TestClient(create_app())

    def call(self, path: str, payload: dict) -> dict:
        response = self._http.post(path, json=payload)
        if response.status_code == 200:
            return response.json()
        code, message = "error", response.text
        try:
            detail = response.json().get("detail")
            if isinstance(detail, dict):
                code = detail.get("code", code)
                message = detail.get("message", message)
            elif detail:
                message = str(detail)
        except ValueError:
            pass
        raise ServiceError(code, message)


def _invoke(server: str | None, path: str, payload: dict) -> dict:
    try:
        return ServiceClient(server).call(path, payload)
    except ServiceError as err:
        click.echo(f"error: {err.message}", err=True)
        sys.exit(EXIT_BY_CODE.get(err.code, 1))
    except Exception as err:  # connection failures etc.
        click.echo(f"error: {err}", err=True)
        sys.exit(1)


def _parse_n_range(spec: str) -> list[int]:
    try:
        if ":" in spec:
            lo, hi = spec.split(":", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(part) for part in spec.split(",")]
    except ValueError:
        raise click.UsageError(f"cannot parse n range {spec!r} (use e.g. 1:5 or 1,3,5)")
    if not values or any(n < 0 for n in values):
        raise click.UsageError(f"n values must be >= 0, got {spec!r}")
    return values


@click.group()
@click.option(
    "--server",
    envvar="MIXLENS_SERVER",
    default=None,
    help="URL of a running mixlens service; default runs in-process.",
)
@click.pass_context
def main(ctx, server):
    """Explanations and deletion-faithfulness metrics for text classifiers."""
    ctx.obj = server


@main.command()
@click.option("--data", required=True, help="Training dataset (TSV/CSV with header).")
@click.option("--out", required=True, help="Where to write the model artifact.")
@click.option("--format", "fmt", type=click.Choice(["tsv", "csv"]), default="tsv")
@click.option("--epochs", default=300, show_default=True)
@click.option("--lr", default=0.5, show_default=True)
@click.option("--l2", default=1e-4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--classes", default=None, help="Comma-separated class order override.")
@click.pass_context
def train(ctx, data, out, fmt, epochs, lr, l2, seed, classes):
    """Train the built-in reference classifier."""
    result = _invoke(
        ctx.obj,
        "/train",
        {
            "data_path": data,
            "out_path": out,
            "format": fmt,
            "epochs": epochs,
            "learning_rate": lr,
            "l2": l2,
            "seed": seed,
            "class_names": classes.split(",") if classes else None,
        },
    )
    click.echo(
        f"trained {result['num_classes']}-class model on {result['num_instances']} "
        f"instances ({result['num_features']} features): "
        f"final_loss={result['final_loss']:.6f} accuracy={result['accuracy']:.4f}"
    )
    click.echo(f"wrote {out} (sha256 {result['model_digest'][:12]})")


@main.command()
@click.option("--method", required=True, type=click.Choice(["lime", "shap"]))
@click.option("--model", required=True, help="ref:<path> or ext:<command>.")
@click.option("--data", required=True)
@click.option("--out", required=True, help="Output explanations JSONL.")
@click.option("--format", "fmt", type=click.Choice(["tsv", "csv"]), default="tsv")
@click.option("--samples", default=1000, show_default=True, help="LIME perturbations.")
@click.option("--kernel-width", default=25.0, show_default=True)
@click.option("--ridge-lambda", default=1.0, show_default=True)
@click.option("--max-features", default=None, type=int)
@click.option("--exhaustive", is_flag=True, help="Enumerate all LIME masks (small m).")
@click.option("--budget", default=2048, show_default=True, help="SHAP evaluations.")
@click.option(
    "--target-space",
    type=click.Choice(["probability", "logit"]),
    default="probability",
)
@click.option("--seed", default=0, show_default=True)
@click.option("--jobs", default=None, type=int, help="Workers; MIXLENS_JOBS overrides default.")
@click.option("--no-overwrite", is_flag=True, help="Refuse to replace an existing output.")
@click.pass_context
def explain(ctx, method, model, data, out, fmt, samples, kernel_width, ridge_lambda,
            max_features, exhaustive, budget, target_space, seed, jobs, no_overwrite):
    """Write one explanation per instance as JSON lines."""
    result = _invoke(
        ctx.obj,
        "/explain",
        {
            "model": model,
            "data_path": data,
            "out_path": out,
            "method": method,
            "format": fmt,
            "num_samples": samples,
            "kernel_width": kernel_width,
            "ridge_lambda": ridge_lambda,
            "max_features": max_features,
            "exhaustive": exhaustive,
            "budget": budget,
            "target_space": target_space,
            "seed": seed,
            "jobs": jobs,
            "overwrite": not no_overwrite,
        },
    )
    click.echo(
        f"explained {result['num_instances']} instances -> {result['out_path']} "
        f"(config {result['config_digest'][:12]})"
    )


@main.command(name="eval")
@click.option(
    "--variant",
    "variants",
    multiple=True,
    type=click.Choice(["sentence", "model", "codemixed", "all"]),
    default=("all",),
    show_default=True,
)
@click.option("--n", "n_range", default="1:5", show_default=True, help="e.g. 1:5 or 1,3,5.")
@click.option("--expl", required=True, help="Explanations JSONL from `explain`.")
@click.option("--data", required=True)
@click.option("--model", required=True)
@click.option("--format", "fmt", type=click.Choice(["tsv", "csv"]), default="tsv")
@click.option("--vocab", default=None, help="Vocabulary file for code-mixed detection.")
@click.option("--baseline", type=click.Choice(["random"]), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--force", is_flag=True, help="Skip config-digest verification.")
@click.option("--rank-abs", is_flag=True, help="Rank deletions by |weight|.")
@click.option("--out", required=True, help="Output metrics CSV.")
@click.pass_context
def eval_cmd(ctx, variants, n_range, expl, data, model, fmt, vocab, baseline, seed,
             force, rank_abs, out):
    """Compute MAELOSD curves over a range of deletion counts."""
    resolved = []
    for variant in variants:
        if variant == "all":
            resolved.extend(["sentence", "model", "codemixed"])
        else:
            resolved.append(variant)
    resolved = list(dict.fromkeys(resolved))
    if "codemixed" in resolved and not vocab:
        raise click.UsageError("--variant codemixed (or all) requires --vocab")
    result = _invoke(
        ctx.obj,
        "/eval",
        {
            "expl_path": expl,
            "data_path": data,
            "model": model,
            "out_path": out,
            "format": fmt,
            "vocab_path": vocab,
            "variants": resolved,
            "n_values": _parse_n_range(n_range),
            "baseline": baseline == "random",
            "seed": seed,
            "force": force,
            "rank_by_abs": rank_abs,
        },
    )
    click.echo(f"wrote {result['rows']} metric rows -> {result['out_path']}")


@main.command()
@click.argument("csvs", nargs=-1, required=True)
@click.option("--out", required=True, help="Output SVG figure.")
@click.option("--summary", default=None, help="Also write the text table here.")
@click.pass_context
def report(ctx, csvs, out, summary):
    """Render metric CSVs into a multi-panel SVG plus a summary table."""
    result = _invoke(
        ctx.obj,
        "/report",
        {"csv_paths": list(csvs), "out_svg": out, "out_summary": summary},
    )
    click.echo(result["summary"], nl=False)
    click.echo(
        f"wrote {result['out_svg']} ({result['num_panels']} panels, "
        f"{result['num_lines']} lines)"
    )


@main.command()
@click.option("--model", required=True)
@click.option("--text", "texts", multiple=True, required=True)
@click.pass_context
def predict(ctx, model, texts):
    """Query a classifier and print one probability row per text."""
    result = _invoke(ctx.obj, "/predict", {"model": model, "texts": list(texts)})
    click.echo(json.dumps({"classes": result["classes"]}))
    for text, row in zip(texts, result["probs"]):
        click.echo(json.dumps({"text": text, "probs": row}))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
def serve(host, port):
    """Run the mixlens service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
