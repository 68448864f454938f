"""CSV, JSON-summary and SVG output for experiment reports.

Output is byte-for-byte reproducible: floats go to CSV via ``repr`` (exact
round trip) and SVG coordinates use fixed precision.
"""

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import CSV_COLUMNS, ExperimentReport, Record, summarize

FORMATS = ("csv", "svg")


class ReportIOError(OSError):
    pass


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_to_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in report.records:
        writer.writerow([_fmt(v) for v in rec.as_row()])
    return buf.getvalue()


def read_records(path):
    """Parse a report CSV back into :class:`Record` objects."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        out = []
        for row in reader:
            kw = {}
            for c in CSV_COLUMNS:
                kw[c] = row[c] if c in ("experiment_id", "status") else float(row[c])
            out.append(Record(**kw))
    return out


def read_report(csv_path, summary_path=None):
    """Rebuild a report from its CSV (and optional JSON summary for kind/metadata)."""
    records = read_records(csv_path)
    summary_path = Path(summary_path) if summary_path else Path(csv_path).with_name(
        Path(csv_path).stem + "_summary.json"
    )
    meta = json.loads(summary_path.read_text())
    kind = meta["kind"]
    exp_id = meta["experiment_id"]
    return ExperimentReport(exp_id, kind, tuple(records), summarize(kind, records), meta.get("metadata", {}))


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (tuple, np.ndarray)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def summary_json(report):
    doc = {
        "experiment_id": report.experiment_id,
        "kind": report.kind,
        "aggregates": {k: (None if math.isnan(v) else v) for k, v in report.aggregates.items()},
        "metadata": report.metadata,
    }
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


# -- SVG ----------------------------------------------------------------------

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def angle_color(norm, vmax):
    """Red for small angle norms through to blue for large ones."""
    t = 0.0 if vmax <= 0 else min(max(norm / vmax, 0.0), 1.0)
    r = int(round(220 * (1 - t) + 30 * t))
    g = int(round(40 + 80 * math.sin(math.pi * t)))
    b = int(round(30 * (1 - t) + 220 * t))
    return f"#{r:02x}{g:02x}{b:02x}"


class _Axes:
    def __init__(self, xs, ys):
        xs = np.asarray([x for x in xs if math.isfinite(x)], dtype=float)
        ys = np.asarray([y for y in ys if math.isfinite(y)], dtype=float)
        self.x0, self.x1 = self._span(xs)
        self.y0, self.y1 = self._span(ys)

    @staticmethod
    def _span(v):
        if v.size == 0:
            return 0.0, 1.0
        lo, hi = float(v.min()), float(v.max())
        if hi - lo < 1e-12:
            pad = max(abs(lo) * 0.05, 1.0)
        else:
            pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def px(self, x):
        return _ML + (x - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def py(self, y):
        return _H - _MB - (y - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)


def _svg_document(title, xlabel, ylabel, axes, body):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">{escape(title)}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" fill="none" stroke="black"/>',
    ]
    for i in range(5):
        xv = axes.x0 + (axes.x1 - axes.x0) * i / 4
        yv = axes.y0 + (axes.y1 - axes.y0) * i / 4
        parts.append(
            f'<text x="{axes.px(xv):.2f}" y="{_H - _MB + 16}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{axes.py(yv) + 4:.2f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{yv:.4g}</text>'
        )
    parts.append(
        f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle" font-size="12" font-family="sans-serif">{escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="16" y="{_H / 2:.1f}" text-anchor="middle" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 16 {_H / 2:.1f})">{escape(ylabel)}</text>'
    )
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_plot(title, xlabel, ylabel, series, hline=None, marker=None):
    """Render line/scatter series.

    ``series`` is a list of dicts with keys ``x``, ``y``, ``color``, ``kind``
    (``"line"`` or ``"scatter"``) and optional ``label``. ``hline`` draws a
    dashed reference value; ``marker`` draws a cross at an ``(x, y)`` point.
    """
    xs = [x for s in series for x in s["x"]]
    ys = [y for s in series for y in s["y"]]
    if hline is not None:
        ys.append(hline)
    if marker is not None:
        xs.append(marker[0])
        ys.append(marker[1])
    ax = _Axes(xs, ys)
    body = []
    if hline is not None:
        body.append(
            f'<line x1="{_ML}" y1="{ax.py(hline):.2f}" x2="{_W - _MR}" y2="{ax.py(hline):.2f}" '
            'stroke="#888888" stroke-dasharray="5,4"/>'
        )
    legend_y = _MT + 14
    for s in series:
        pts = [(x, y) for x, y in zip(s["x"], s["y"]) if math.isfinite(x) and math.isfinite(y)]
        colors = s["color"] if isinstance(s["color"], (list, tuple)) else [s["color"]] * len(s["x"])
        colors = [c for c, x, y in zip(colors, s["x"], s["y"]) if math.isfinite(x) and math.isfinite(y)]
        if s.get("kind", "line") == "line" and len(pts) > 1:
            path = " ".join(f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in pts)
            body.append(f'<polyline points="{path}" fill="none" stroke="{colors[0]}" stroke-width="1.5"/>')
        for (x, y), c in zip(pts, colors):
            body.append(f'<circle cx="{ax.px(x):.2f}" cy="{ax.py(y):.2f}" r="2.5" fill="{c}"/>')
        if s.get("label"):
            c = colors[0] if colors else "black"
            body.append(
                f'<text x="{_W - _MR - 8}" y="{legend_y}" text-anchor="end" font-size="11" '
                f'font-family="sans-serif" fill="{c}">{escape(s["label"])}</text>'
            )
            legend_y += 14
    if marker is not None:
        mx, my = ax.px(marker[0]), ax.py(marker[1])
        body.append(
            f'<path d="M{mx - 7:.2f},{my - 7:.2f} L{mx + 7:.2f},{my + 7:.2f} M{mx - 7:.2f},{my + 7:.2f} '
            f'L{mx + 7:.2f},{my - 7:.2f}" stroke="red" stroke-width="2"/>'
        )
    return _svg_document(title, xlabel, ylabel, ax, body)


def _gt(report, p):
    for r in report.records:
        est, err = getattr(r, f"{p}_est"), getattr(r, f"{p}_err")
        if math.isfinite(est) and math.isfinite(err):
            return est - err
    return None


def _figures(report):
    rid = report.experiment_id
    recs = report.records
    figs = {}
    if report.kind == "focal_sweep":
        for p, name in (("fv", "f_v"), ("fu", "f_u")):
            x = [r.pan_deg for r in recs]
            y = [getattr(r, f"{p}_est") for r in recs]
            figs[f"{rid}_{p}.svg"] = svg_plot(
                f"{name} estimate vs rotation angle",
                "rotation angle (deg)",
                f"{name} (px)",
                [{"x": x, "y": y, "color": "#1f5fbf", "kind": "line", "label": "estimate"}],
                hline=_gt(report, p),
            )
    elif report.kind == "pp_grid":
        ok = [r for r in recs if r.ok]
        norms = [math.hypot(r.pan_deg, r.tilt_deg) for r in ok]
        vmax = max(norms, default=1.0)
        colors = [angle_color(n, vmax) for n in norms]
        series = []
        for p, label in (("v0", "v_0 error"), ("u0", "u_0 error")):
            series.append(
                {"x": norms, "y": [getattr(r, f"{p}_err") for r in ok], "color": colors, "kind": "scatter", "label": label}
            )
        # v_0 in the palette, u_0 in grey so the two clouds stay distinguishable
        series[1]["color"] = "#777777"
        figs[f"{rid}_grid.svg"] = svg_plot(
            "principal-point error vs |(pan, tilt)|", "L2 norm of (pan, tilt) (deg)", "error (px)", series, hline=0.0
        )
        gt_v, gt_u = _gt(report, "v0"), _gt(report, "u0")
        figs[f"{rid}_scatter.svg"] = svg_plot(
            "estimated principal points",
            "v_0 (px)",
            "u_0 (px)",
            [{"x": [r.v0_est for r in ok], "y": [r.u0_est for r in ok], "color": colors, "kind": "scatter"}],
            marker=(gt_v, gt_u) if gt_v is not None else None,
        )
    elif report.kind == "monte_carlo":
        ok = [r for r in recs if r.ok]
        series = []
        palette = ("#c0392b", "#27ae60", "#2c6fbb", "#8e44ad")
        for p, c in zip(("fv", "fu", "v0", "u0"), palette):
            series.append(
                {"x": list(range(len(ok))), "y": [getattr(r, f"{p}_err") for r in ok], "color": c, "kind": "scatter", "label": p}
            )
        figs[f"{rid}_errors.svg"] = svg_plot("per-run estimation error", "run", "error (px)", series, hline=0.0)
    elif report.kind in ("angular_noise", "pixel_noise"):
        xkey = "angle_err_deg" if report.kind == "angular_noise" else "sigma_pixel"
        xlabel = "angle error (deg)" if report.kind == "angular_noise" else "sigma_pixel (px)"
        bases = sorted({r.pan_deg for r in recs})
        vmax = max((abs(b) for b in bases), default=1.0)
        for p in ("fv", "fu", "v0", "u0"):
            series = []
            for b in bases:
                rows = [r for r in recs if r.pan_deg == b and r.ok]
                # noise-study colouring: blue for small angles, red for large ones
                color = angle_color(vmax - abs(b), vmax)
                kind = "line" if report.kind == "angular_noise" else "scatter"
                series.append(
                    {
                        "x": [getattr(r, xkey) for r in rows],
                        "y": [getattr(r, f"{p}_err") for r in rows],
                        "color": color,
                        "kind": kind,
                        "label": f"base {b:g} deg",
                    }
                )
            figs[f"{rid}_{p}.svg"] = svg_plot(f"{p} error vs {xlabel}", xlabel, f"{p} error (px)", series, hline=0.0)
    return figs


def emit_report(report, fmt, path):
    """Write ``report`` into directory ``path``; returns the list of files written.

    ``fmt="csv"`` writes ``<id>.csv`` plus ``<id>_summary.json``;
    ``fmt="svg"`` writes one SVG per figure.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt == "csv":
            files = {
                f"{report.experiment_id}.csv": report_to_csv(report),
                f"{report.experiment_id}_summary.json": summary_json(report),
            }
        else:
            files = _figures(report)
        for name, text in files.items():
            target = out / name
            with open(target, "w", newline="") as fh:
                fh.write(text)
            written.append(target)
    except OSError as err:
        raise ReportIOError(f"cannot write report to {out}: {err}") from err
    return written
