"""Serialisation of reports: JSON, CSV tables and minimal SVG histograms."""

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def to_json(obj):
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def dict_rows_to_table(rows):
    """List of flat dicts to a header + rows table (nested values are skipped)."""
    keys = []
    for row in rows:
        for k, v in row.items():
            if k not in keys and not isinstance(v, (dict, list)):
                keys.append(k)
    table = [keys]
    for row in rows:
        table.append(["" if row.get(k) is None else row.get(k) for k in keys])
    return table


def histogram_table(hist):
    edges, counts = hist["bin_edges"], hist["counts"]
    rows = [["bin_left", "bin_right", "count"]]
    for i, c in enumerate(counts):
        rows.append([repr(edges[i]), repr(edges[i + 1]), c])
    return rows


def histogram_svg(hist, title="", markers=(), width=480, height=300):
    """Bar chart of a histogram with optional vertical marker lines ``(x, style)``."""
    edges = [float(v) for v in hist["bin_edges"]]
    counts = hist["counts"]
    pad = 30
    lo, hi = edges[0], edges[-1]
    for x, _ in markers:
        lo, hi = min(lo, x), max(hi, x)
    span = hi - lo or 1.0
    top = max(counts) or 1

    def sx(x):
        return pad + (x - lo) / span * (width - 2 * pad)

    def sy(c):
        return height - pad - c / top * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for i, c in enumerate(counts):
        x0, x1 = sx(edges[i]), sx(edges[i + 1])
        parts.append(
            f'<rect x="{x0:.2f}" y="{sy(c):.2f}" width="{max(x1 - x0 - 0.5, 0.5):.2f}" '
            f'height="{height - pad - sy(c):.2f}" fill="#7a9cc6"/>'
        )
    for x, style in markers:
        dash = ' stroke-dasharray="5,4"' if style == "dashed" else ""
        parts.append(
            f'<line x1="{sx(x):.2f}" y1="{pad}" x2="{sx(x):.2f}" y2="{height - pad}" stroke="#c0392b"{dash}/>'
        )
    parts.append(
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>'
    )
    parts.append(f'<text x="{pad}" y="{height - 8}" font-size="10">{lo:.3g}</text>')
    parts.append(f'<text x="{width - pad}" y="{height - 8}" font-size="10" text-anchor="end">{hi:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(directory, name, text):
    path = Path(directory) / name
    path.write_text(text)
    return path
