"""Deterministic CSV tables, metadata sidecars and small log-log SVG charts."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{float(x.real)!r}{float(x.imag):+.17g}j"
    if isinstance(x, (list, tuple, np.ndarray)):
        return " ".join(_fmt(v) for v in x)
    return str(x)


def write_csv(path, header, rows, config: dict, extra_meta: dict | None = None) -> Path:
    """Write rows under a header and a ``<name>.json`` sidecar next to it."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])
    meta = {"file": path.name, "columns": list(header), "rows": len(rows),
            "config_hash": config_hash(config), "tool": "cornervanish", "version": __version__}
    if extra_meta:
        meta.update(extra_meta)
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def loglog_svg(path, series: dict, title: str = "", width: int = 480, height: int = 320) -> Path:
    """One polyline per named (x, y) series on log-log axes; nonpositive points dropped."""
    pad = 40
    clean = {}
    for name, (x, y) in series.items():
        x, y = np.asarray(x, float), np.abs(np.asarray(y))
        ok = (x > 0) & (y > 0) & np.isfinite(y)
        if ok.sum() >= 1:
            clean[name] = (np.log10(x[ok]), np.log10(y[ok]))
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{pad}" y="20" font-size="12">{title}</text>']
    if clean:
        ax = np.concatenate([c[0] for c in clean.values()])
        ay = np.concatenate([c[1] for c in clean.values()])
        x0, x1 = ax.min(), max(ax.max(), ax.min() + 1e-12)
        y0, y1 = ay.min(), max(ay.max(), ay.min() + 1e-12)
        sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)
        sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)
        lines.append(f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
                     'fill="none" stroke="black"/>')
        lines.append(f'<text x="{pad}" y="{height - 10}" font-size="10">log10 x: {x0:.2f} .. {x1:.2f}, '
                     f'log10 y: {y0:.2f} .. {y1:.2f}</text>')
        colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
        for i, (name, (lx, ly)) in enumerate(clean.items()):
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
            col = colours[i % len(colours)]
            lines.append(f'<polyline fill="none" stroke="{col}" points="{pts}"/>')
            lines.append(f'<text x="{width - pad - 100}" y="{pad + 14 * (i + 1)}" font-size="10" '
                         f'fill="{col}">{name}</text>')
    lines.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def finite_or_nan(x) -> float:
    x = float(x)
    return x if math.isfinite(x) else float("nan")
