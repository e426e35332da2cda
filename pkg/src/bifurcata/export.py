"""CSV, JSON and SVG output.

CSV floats carry 17 significant digits so every value round-trips exactly.
The SVG plot reads nothing but a diagram CSV, so the picture can never
disagree with the data next to it.

Diagram CSV columns, in order:

    branch_id, lambda, beta1, beta2, u1, D, morse

``u1`` is u(1); ``D`` is the degeneracy determinant (nan on the trivial
branch and at primary bifurcation points); ``morse`` is empty when it was
not computed.  Branch ids are ``trivial``, ``{odd,even}_k{k}{+,-}``,
``sec_k{k}{+,-}`` for secondary branches, and ``bif_n{n}`` / ``bif_k{k}{+,-}``
for single-row bifurcation points.
"""

from __future__ import annotations

import csv
import json
import math
from html import escape

import numpy as np

DIAGRAM_COLUMNS = ("branch_id", "lambda", "beta1", "beta2", "u1", "D", "morse")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(value)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


# ----------------------------------------------------------------------- SVG

_COLORS = {"trivial": "#000000", "odd": "#1f5fbf", "even": "#2a9d3a", "sec": "#c0392b", "bif": "#000000"}
W, H = 720, 480
ML, MR, MT, MB = 60, 20, 30, 45


def _family(branch_id: str) -> str:
    return branch_id.split("_", 1)[0]


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * span:
        out.append(round(t, 12))
        t += step
    return out


def svg_from_csv(csv_path, svg_path, title: str = "") -> None:
    """Plot u(1) against lambda from a diagram CSV."""
    rows = read_csv(csv_path)
    lams = [float(r["lambda"]) for r in rows]
    x_hi = max(lams) if lams else 1.0
    x_hi = x_hi if x_hi > 0 else 1.0
    y_lo, y_hi = -1.05, 1.05

    def X(lam):
        return ML + (W - ML - MR) * lam / x_hi

    def Y(u):
        return MT + (H - MT - MB) * (y_hi - u) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    x0, x1, y0, y1 = ML, W - MR, MT, H - MB
    out.append(f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" fill="none" stroke="#444"/>')
    for t in _ticks(0.0, x_hi):
        px = X(t)
        out.append(f'<line x1="{px:.2f}" y1="{y1}" x2="{px:.2f}" y2="{y1 + 5}" stroke="#444"/>')
        out.append(f'<text x="{px:.2f}" y="{y1 + 18}" font-size="11" text-anchor="middle">{t:g}</text>')
    for t in (-1.0, -0.5, 0.0, 0.5, 1.0):
        py = Y(t)
        out.append(f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="#444"/>')
        out.append(f'<text x="{x0 - 8}" y="{py + 4:.2f}" font-size="11" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{H - 8}" font-size="13" text-anchor="middle">lambda</text>')
    out.append(f'<text x="14" y="{(y0 + y1) / 2:.2f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 14 {(y0 + y1) / 2:.2f})">u(1)</text>')
    if title:
        out.append(f'<text x="{x1}" y="{y0 - 10}" font-size="12" text-anchor="end">{escape(title)}</text>')

    # group consecutive rows by branch id, keeping file order
    groups: list[tuple[str, list[dict]]] = []
    for r in rows:
        if groups and groups[-1][0] == r["branch_id"]:
            groups[-1][1].append(r)
        else:
            groups.append((r["branch_id"], [r]))
    markers = []
    for bid, pts in groups:
        fam = _family(bid)
        color = _COLORS.get(fam, "#777777")
        if fam == "bif":
            markers.extend(pts)
            continue
        coords = " ".join(f"{X(float(p['lambda'])):.2f},{Y(float(p['u1'])):.2f}" for p in pts)
        dash = ' stroke-dasharray="5,3"' if fam == "sec" else ""
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}>'
                   f"<title>{escape(bid)}</title></polyline>")
        # one label per run of equal Morse index
        run_start = 0
        for i in range(1, len(pts) + 1):
            if i == len(pts) or pts[i]["morse"] != pts[run_start]["morse"]:
                m = pts[run_start]["morse"]
                if m != "":
                    mid = pts[(run_start + i - 1) // 2]
                    out.append(f'<text x="{X(float(mid["lambda"])):.2f}" y="{Y(float(mid["u1"])) - 4:.2f}" '
                               f'font-size="10" fill="{color}">i={escape(m)}</text>')
                run_start = i
    for p in markers:
        out.append(f'<circle cx="{X(float(p["lambda"])):.2f}" cy="{Y(float(p["u1"])):.2f}" r="3.5" '
                   f'fill="white" stroke="black"><title>{escape(p["branch_id"])}</title></circle>')
    legend = [("trivial", "trivial"), ("odd", "odd"), ("even", "even"), ("sec", "secondary")]
    for i, (fam, name) in enumerate(legend):
        ly = y0 + 14 + 14 * i
        out.append(f'<line x1="{x0 + 10}" y1="{ly - 4}" x2="{x0 + 30}" y2="{ly - 4}" stroke="{_COLORS[fam]}" stroke-width="2"/>')
        out.append(f'<text x="{x0 + 35}" y="{ly}" font-size="11">{name}</text>')
    out.append("</svg>")
    with open(svg_path, "w") as fh:
        fh.write("\n".join(out) + "\n")
