"""Report emission: CSV rows, versioned JSON and a polar SVG heatmap."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ..report import SCHEMA_VERSION, Report

CSV_COLUMNS = ("scenario", "quantity", "value", "argmax_re", "argmax_im", "grid_rings", "pass")


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _quantity_pass(rep: Report, name: str) -> str:
    flags = [o.passed for o in rep.outcomes if o.expectation.quantity == name]
    if not flags:
        return ""
    return "true" if all(flags) else "false"


def csv_rows(rep: Report) -> list[dict]:
    rings = rep.grid.get("rings", "")
    rows = []
    for name, q in rep.quantities.items():
        v = q.display_value()
        rows.append({
            "scenario": rep.scenario,
            "quantity": name,
            "value": repr(v) if isinstance(v, float) else v,
            "argmax_re": "" if q.argmax is None else repr(q.argmax.real),
            "argmax_im": "" if q.argmax is None else repr(q.argmax.imag),
            "grid_rings": rings,
            "pass": _quantity_pass(rep, name),
        })
    if rep.error:
        rows.append({"scenario": rep.scenario, "quantity": "status", "value": "failed",
                     "argmax_re": "", "argmax_im": "", "grid_rings": rings, "pass": "false"})
    return rows


def to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rep in reports:
        w.writerows(csv_rows(rep))
    return buf.getvalue()


def to_json(rep: Report) -> str:
    return json.dumps(rep.to_dict(), indent=2, allow_nan=False) + "\n"


def bundle_json(reports, command: str) -> str:
    reports = list(reports)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "status": "passed" if all(r.passed for r in reports) else "failed",
        "reports": [r.to_dict() for r in reports],
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# -- heatmap ------------------------------------------------------------------------------------

_PALETTE = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))


def _color(t: float) -> str:
    if not math.isfinite(t):
        return "#bbbbbb"
    t = min(max(t, 0.0), 1.0) * (len(_PALETTE) - 1)
    i = min(int(t), len(_PALETTE) - 2)
    u = t - i
    c = [round(a + (b - a) * u) for a, b in zip(_PALETTE[i], _PALETTE[i + 1])]
    return "#{:02x}{:02x}{:02x}".format(*c)


def heatmap_svg(z: np.ndarray, values: np.ndarray, title: str, sectors: int = 64, size: int = 480) -> str:
    """log10 of ``values`` on a polar layout; ring ``j`` of ``J`` is drawn at radius ``j/J``.

    Nodes are binned into ``sectors`` angular cells per ring (max per cell) to
    keep the file small.
    """
    z = np.asarray(z)
    v = np.asarray(values, dtype=float)
    mod = np.abs(z)
    ring = np.rint(-np.log2(np.maximum(1.0 - mod, 1e-300))).astype(int)
    ring[mod == 0] = 0
    J = max(int(ring.max()), 1)
    sector = np.floor((np.angle(z) % (2 * np.pi)) / (2 * np.pi) * sectors).astype(int) % sectors
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = np.where(v > 0, np.log10(v), np.nan)
    finite = logv[np.isfinite(logv)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0

    cx = cy = size / 2
    R = size / 2 - 20
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 160}" height="{size + 30}" '
             f'viewBox="0 0 {size + 160} {size + 30}">',
             f'<title>{title}</title>',
             f'<text x="10" y="{size + 20}" font-size="12">{title}: log10 ratio, ring j at radius j/{J}</text>']
    for j in range(J + 1):
        sel = ring == j
        if not sel.any():
            continue
        r0, r1 = R * max(j - 0.5, 0) / J, R * (j + 0.5) / J
        for s in range(sectors):
            cell = logv[sel & (sector == s)]
            cell = cell[np.isfinite(cell)]
            if j == 0:
                if s == 0:
                    col = _color((cell.max() - lo) / span) if cell.size else _color(float("nan"))
                    parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r1:.2f}" fill="{col}"/>')
                continue
            if not cell.size:
                continue
            a0, a1 = 2 * np.pi * s / sectors, 2 * np.pi * (s + 1) / sectors
            pts = [(cx + rr * math.cos(a), cy - rr * math.sin(a)) for rr, a in ((r1, a0), (r1, a1), (r0, a1), (r0, a0))]
            d = (f"M{pts[0][0]:.2f},{pts[0][1]:.2f} A{r1:.2f},{r1:.2f} 0 0 0 {pts[1][0]:.2f},{pts[1][1]:.2f} "
                 f"L{pts[2][0]:.2f},{pts[2][1]:.2f} A{r0:.2f},{r0:.2f} 0 0 1 {pts[3][0]:.2f},{pts[3][1]:.2f} Z")
            parts.append(f'<path d="{d}" fill="{_color((cell.max() - lo) / span)}"/>')
    for k in range(5):
        t = k / 4
        y = 30 + (1 - t) * (size - 60)
        parts.append(f'<rect x="{size + 20}" y="{y - 10:.1f}" width="20" height="20" fill="{_color(t)}"/>')
        parts.append(f'<text x="{size + 46}" y="{y + 4:.1f}" font-size="12">{lo + t * span:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- writing ---------------------------------------------------------------------------------------

def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.+" else "_" for c in name)


def emit(reports, fmt: str, output, command: str, stdout=None) -> list[Path]:
    """Write reports; returns the written paths (empty when printing to ``stdout``).

    ``output`` is a file for csv, and a directory for json/svg+json (one JSON
    per report).  Without ``output`` everything goes to ``stdout``.
    """
    reports = list(reports)
    written: list[Path] = []
    if output is None:
        text = to_csv(reports) if fmt == "csv" else bundle_json(reports, command)
        if stdout is not None:
            stdout.write(text)
        return written
    if fmt == "csv":
        return [atomic_write(output, to_csv(reports))]
    out = Path(output)
    for rep in reports:
        written.append(atomic_write(out / f"{_safe_name(rep.scenario)}.json", to_json(rep)))
        if fmt == "svg+json" and "ratio" in rep.fields:
            z, ratio = rep.fields["ratio"]
            svg = heatmap_svg(z, ratio, rep.scenario)
            written.append(atomic_write(out / f"{_safe_name(rep.scenario)}.svg", svg))
    return written
