"""Metric-curve reporting: a multi-panel SVG and a plain-text summary.

One panel per metric variant, one line per explainer, x = number of
deleted words, y = MAELOSD. The SVG is emitted directly as text so reports
stay dependency-free and diffable.
"""

from __future__ import annotations

from .errors import EvalInputError
from .evaluation import VARIANT_ORDER, read_metrics_csv

PANEL_W, PANEL_H = 360, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 52, 16, 34, 42
GAP = 24

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def load_rows(path: str) -> list[dict]:
    return read_metrics_csv(path)


def group_panels(rows: list[dict]) -> dict[str, dict[str, list[tuple[int, float]]]]:
    """variant -> explainer -> [(n, maelosd)] sorted by n, variants in fixed order."""
    panels: dict[str, dict[str, list[tuple[int, float]]]] = {}
    for row in rows:
        lines = panels.setdefault(row["variant"], {})
        lines.setdefault(row["explainer"], []).append((row["n"], row["maelosd"]))
    for lines in panels.values():
        for points in lines.values():
            points.sort()
    ordered = sorted(
        panels.items(),
        key=lambda kv: VARIANT_ORDER.index(kv[0]) if kv[0] in VARIANT_ORDER else 99,
    )
    return dict(ordered)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _ticks(high: float, count: int = 5) -> list[float]:
    return [high * i / (count - 1) for i in range(count)]


def render_svg(panels: dict[str, dict[str, list[tuple[int, float]]]]) -> str:
    if not panels:
        raise EvalInputError("nothing to plot: no metric rows")
    explainers = sorted({e for lines in panels.values() for e in lines})
    colors = {e: PALETTE[i % len(PALETTE)] for i, e in enumerate(explainers)}
    total_w = len(panels) * PANEL_W + (len(panels) - 1) * GAP + 8
    total_h = PANEL_H + 30
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" '
        f'height="{total_h}" font-family="sans-serif" font-size="11">'
    ]
    out.append(f'<rect width="{total_w}" height="{total_h}" fill="white"/>')
    for index, (variant, lines) in enumerate(panels.items()):
        x0 = index * (PANEL_W + GAP) + 4
        out.append(_render_panel(x0, variant, lines, colors))
    legend_x = 8
    for i, explainer in enumerate(explainers):
        y = PANEL_H + 18
        out.append(
            f'<rect x="{legend_x}" y="{y - 9}" width="10" height="10" '
            f'fill="{colors[explainer]}"/>'
            f'<text x="{legend_x + 14}" y="{y}">{explainer}</text>'
        )
        legend_x += 14 + 7 * len(explainer) + 24
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _render_panel(x0, variant, lines, colors) -> str:
    plot_w = PANEL_W - MARGIN_L - MARGIN_R
    plot_h = PANEL_H - MARGIN_T - MARGIN_B
    xs = sorted({n for pts in lines.values() for n, _ in pts})
    y_max = max((v for pts in lines.values() for _, v in pts), default=0.0)
    if y_max <= 0:
        y_max = 1.0
    y_max *= 1.05
    x_lo, x_hi = min(xs), max(xs)
    span = max(x_hi - x_lo, 1)

    def px(n: float) -> float:
        return x0 + MARGIN_L + (n - x_lo) / span * plot_w

    def py(v: float) -> float:
        return MARGIN_T + plot_h - v / y_max * plot_h

    parts = [
        f'<text x="{x0 + MARGIN_L + plot_w / 2:.1f}" y="{MARGIN_T - 14}" '
        f'text-anchor="middle" font-size="13">{variant}</text>'
    ]
    axis_y = MARGIN_T + plot_h
    parts.append(
        f'<line x1="{x0 + MARGIN_L}" y1="{axis_y}" x2="{x0 + MARGIN_L + plot_w}" '
        f'y2="{axis_y}" stroke="black"/>'
        f'<line x1="{x0 + MARGIN_L}" y1="{MARGIN_T}" x2="{x0 + MARGIN_L}" '
        f'y2="{axis_y}" stroke="black"/>'
    )
    for n in xs:
        parts.append(
            f'<line x1="{px(n):.1f}" y1="{axis_y}" x2="{px(n):.1f}" y2="{axis_y + 4}" '
            f'stroke="black"/>'
            f'<text x="{px(n):.1f}" y="{axis_y + 16}" text-anchor="middle">{n}</text>'
        )
    for tick in _ticks(y_max):
        parts.append(
            f'<line x1="{x0 + MARGIN_L - 4}" y1="{py(tick):.1f}" x2="{x0 + MARGIN_L}" '
            f'y2="{py(tick):.1f}" stroke="black"/>'
            f'<text x="{x0 + MARGIN_L - 7}" y="{py(tick) + 3:.1f}" '
            f'text-anchor="end">{_fmt(tick)}</text>'
        )
    parts.append(
        f'<text x="{x0 + MARGIN_L + plot_w / 2:.1f}" y="{PANEL_H - 6}" '
        f'text-anchor="middle">words deleted (n)</text>'
    )
    for explainer in sorted(lines):
        pts = lines[explainer]
        coords = " ".join(f"{px(n):.1f},{py(v):.1f}" for n, v in pts)
        color = colors[explainer]
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        for n, v in pts:
            parts.append(
                f'<circle cx="{px(n):.1f}" cy="{py(v):.1f}" r="2.6" fill="{color}"/>'
            )
    return "".join(parts)


def summary_table(rows: list[dict]) -> str:
    header = ("variant", "explainer", "n", "maelosd", "instances", "degenerate")
    cells = [
        (
            row["variant"],
            row["explainer"],
            str(row["n"]),
            _fmt(row["maelosd"]),
            str(row["num_instances"]),
            str(row["num_degenerate"]),
        )
        for row in sorted(
            rows,
            key=lambda r: (
                VARIANT_ORDER.index(r["variant"]) if r["variant"] in VARIANT_ORDER else 99,
                r["explainer"],
                r["n"],
            ),
        )
    ]
    widths = [
        max(len(header[i]), max((len(c[i]) for c in cells), default=0))
        for i in range(len(header))
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for cell in cells:
        lines.append("  ".join(cell[i].ljust(widths[i]) for i in range(len(cell))).rstrip())
    return "\n".join(lines) + "\n"
