"""Run artifacts: trace CSV, summary JSON and a distortion-vs-queries SVG."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Sequence

from ..attackers import TraceRecord
from .metrics import MetricsSummary, write_per_example_csv

TRACE_HEADER = ["stage", "config_id", "origin", "queries_cumulative", "best_lambda"]

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def write_trace_csv(trace: Sequence[TraceRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([r.stage_index, r.config_id, r.origin, r.queries_cumulative, repr(float(r.best_lambda))])


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        return [
            TraceRecord(int(row["queries_cumulative"]), float(row["best_lambda"]), int(row["config_id"]),
                        int(row["stage"]), row["origin"])
            for row in csv.DictReader(fh)
        ]


def trace_svg(trace: Sequence[TraceRecord], width: int = 640, height: int = 400, title: str = "") -> str:
    """One polyline per configuration; dashed verticals where a stage starts."""
    pad = 50
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if trace:
        qs = [r.queries_cumulative for r in trace]
        ls = [r.best_lambda for r in trace]
        q_lo, q_hi = min(qs), max(qs)
        l_lo, l_hi = min(ls), max(ls)
        q_span = (q_hi - q_lo) or 1
        l_span = (l_hi - l_lo) or 1.0

        def sx(q):
            return pad + (q - q_lo) / q_span * (width - 2 * pad)

        def sy(l):
            return height - pad - (l - l_lo) / l_span * (height - 2 * pad)

        stage_start: dict[int, int] = {}
        for r in trace:
            stage_start.setdefault(r.stage_index, r.queries_cumulative)
        for stage, q in sorted(stage_start.items()):
            x = sx(q)
            lines.append(
                f'<line class="stage-marker" data-stage="{stage}" x1="{x:.2f}" y1="{pad}" x2="{x:.2f}" '
                f'y2="{height - pad}" stroke="#999" stroke-dasharray="4,3"/>'
            )
        by_cfg: dict[int, list[TraceRecord]] = defaultdict(list)
        for r in trace:
            by_cfg[r.config_id].append(r)
        for cid in sorted(by_cfg):
            recs = by_cfg[cid]
            pts = " ".join(f"{sx(r.queries_cumulative):.2f},{sy(r.best_lambda):.2f}" for r in recs)
            color = _PALETTE[cid % len(_PALETTE)]
            dash = ' stroke-dasharray="2,2"' if recs[0].origin == "resampled" else ""
            lines.append(
                f'<polyline data-config="{cid}" data-origin="{recs[0].origin}" fill="none" stroke="{color}" '
                f'stroke-width="1.2"{dash} points="{pts}"/>'
            )
        lines.append(f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="12">queries ({q_lo} to {q_hi})</text>')
        lines.append(
            f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 14 {height / 2:.0f})">L2 distortion ({l_lo:.4g} to {l_hi:.4g})</text>'
        )
    lines.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
    lines.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
    if title:
        lines.append(f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_outputs(
    out_dir,
    summary: MetricsSummary,
    traces: Sequence[Sequence[TraceRecord]] = (),
    extra: dict | None = None,
) -> list[Path]:
    """Write summary, per-example CSV and one trace CSV + SVG per example.

    File contents depend only on the inputs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    doc = summary.to_dict()
    if extra:
        doc.update(extra)
    p = out / "summary.json"
    p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written.append(p)
    p = out / "per_example.csv"
    write_per_example_csv(summary, p)
    written.append(p)
    for i, trace in enumerate(traces):
        p = out / f"trace_{i:03d}.csv"
        write_trace_csv(trace, p)
        written.append(p)
        p = out / f"trace_{i:03d}.svg"
        p.write_text(trace_svg(trace, title=f"example {i}"))
        written.append(p)
    return written
