"""CSV, JSON and SVG writers with byte-stable float formatting."""

import json
import math

import numpy as np

SCHEMA_VERSION = 1
PATH_COLUMNS = ("t", "mu_star", "gamma", "A", "eta2", "lambda")


def fmt(x):
    """Shortest round-trip decimal; infinities and NaN as ``inf``/``-inf``/``nan``."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_json(path, obj):
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2, separators=(",", ":"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def path_rows(times, mu, gamma, A, eta2, lam):
    for row in zip(times, mu, gamma, A, eta2, lam):
        t = row[0]
        yield (int(t) if float(t).is_integer() else float(t),) + tuple(row[1:])


def write_svg(path, x, series, title="", xlabel="t", width=640, height=400):
    """Static line chart; ``series`` maps a label to y-values aligned with ``x``."""
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 40
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    finite = [v[np.isfinite(v)] for v in ys.values()]
    finite = [v for v in finite if v.size]
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if x.size and finite:
        x0, x1 = float(x.min()), float(x.max())
        y0 = min(float(v.min()) for v in finite)
        y1 = max(float(v.max()) for v in finite)
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        w = width - pad_l - pad_r
        h = height - pad_t - pad_b

        def sx(v):
            return pad_l + (v - x0) / (x1 - x0) * w

        def sy(v):
            return pad_t + (y1 - v) / (y1 - y0) * h

        lines.append(
            f'<rect x="{pad_l}" y="{pad_t}" width="{w}" height="{h}" fill="none" stroke="black"/>'
        )
        for v, anchor_y in ((y0, sy(y0)), (y1, sy(y1))):
            lines.append(
                f'<text x="{pad_l - 5}" y="{anchor_y:.2f}" font-size="11" '
                f'text-anchor="end">{v:.4g}</text>'
            )
        for v in (x0, x1):
            lines.append(
                f'<text x="{sx(v):.2f}" y="{height - pad_b + 15}" font-size="11" '
                f'text-anchor="middle">{v:.4g}</text>'
            )
        for i, (label, y) in enumerate(ys.items()):
            ok = np.isfinite(y)
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
            color = colors[i % len(colors)]
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
            lines.append(
                f'<text x="{pad_l + 10}" y="{pad_t + 15 + 14 * i}" font-size="12" '
                f'fill="{color}">{label}</text>'
            )
    lines.append(f'<text x="{width / 2:.0f}" y="18" font-size="14" text-anchor="middle">{title}</text>')
    lines.append(
        f'<text x="{width / 2:.0f}" y="{height - 8}" font-size="12" text-anchor="middle">{xlabel}</text>'
    )
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
