"""Interpretation artifacts: PC plots, matrix plots, 2-D region plots, exact text reports.

Plots are written as plain SVG 1.1 with a CSV companion.  The CSV holds the
exact model quantities (shortest round-trip float repr); the SVG geometry is
derived from the same values.  No timestamps or random ids are emitted, so
output is byte-deterministic.
"""
from __future__ import annotations

import io
import re
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError
from .model import (as_plnn, configurations, group_configurations, linear_equation, is_trivial,
                    region_inequalities)

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
)
MIN_LINEWIDTH = 0.5


def region_color(label: str) -> str:
    return PALETTE[zlib.crc32(label.encode()) % len(PALETTE)]


def _num(v: float) -> str:
    return repr(float(v))


def _px(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


class _Svg:
    def __init__(self, width, height):
        self.width, self.height = width, height
        self.parts = []

    def add(self, s):
        self.parts.append(s)

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(f'<line x1="{_px(x1)}" y1="{_px(y1)}" x2="{_px(x2)}" y2="{_px(y2)}" '
                 f'stroke="{stroke}" stroke-width="{_px(width)}"{extra}/>')

    def text(self, x, y, s, size=11, anchor="middle"):
        s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        self.add(f'<text x="{_px(x)}" y="{_px(y)}" font-size="{size}" text-anchor="{anchor}" '
                 f'font-family="sans-serif">{s}</text>')

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.width}" height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="100%" height="100%" fill="#ffffff"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


@dataclass
class PlotArtifact:
    svg: str
    csv: str
    meta: dict = field(default_factory=dict)

    def write(self, path_svg, path_csv=None):
        with open(path_svg, "w", encoding="utf-8") as fh:
            fh.write(self.svg)
        if path_csv is not None:
            with open(path_csv, "w", encoding="utf-8") as fh:
                fh.write(self.csv)


def _predictor_index(feature_names, predictors):
    names = list(feature_names)
    if predictors is None:
        return list(range(len(names))), names
    idx = []
    for p in predictors:
        if p not in names:
            raise DataError(f"unknown predictor {p!r}; known: {', '.join(names)}")
        idx.append(names.index(p))
    return idx, list(predictors)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(r) + "\n")
    return buf.getvalue()


def select_regions(census, mixed_only=False, top_k=None):
    regions = [r for r in census if not (mixed_only and not r.mixed)]
    if top_k is not None:
        order = sorted(range(len(regions)), key=lambda k: (-regions[k].instance_count, k))
        regions = [regions[k] for k in sorted(order[:top_k])]
    return regions


def linewidths(counts, max_width: float = 6.0) -> list[float]:
    """Linear in the instance count, floored at ``MIN_LINEWIDTH``."""
    top = max(counts) if counts else 0
    if top <= 0:
        return [MIN_LINEWIDTH for _ in counts]
    return [max(MIN_LINEWIDTH, max_width * c / top) for c in counts]


def pc_plot(census, feature_names, predictors=None, mixed_only=False, top_k=None,
            title="Linear equation weights by region", max_width=6.0) -> PlotArtifact:
    """Parallel-coordinate plot of per-region equation weights.

    One polyline per region, one axis per predictor, linewidth proportional
    to the region's instance count.
    """
    if not census:
        raise DataError("empty census")
    idx, names = _predictor_index(feature_names, predictors)
    regions = select_regions(census, mixed_only, top_k)

    header = ["region", "config", "count", "class0", "class1", *names]
    rows = []
    for k, r in enumerate(regions):
        w = r.equation.w
        rows.append([str(k), r.label, str(r.instance_count), str(r.class_counts[0]),
                     str(r.class_counts[1]), *[_num(w[i]) for i in idx]])
    csv_text = _csv_text(header, rows)

    # geometry derived from the CSV values
    weights = np.array([[float(v) for v in row[5:]] for row in rows]) if rows else np.zeros((0, len(idx)))
    span = float(np.max(np.abs(weights))) if weights.size else 1.0
    span = span or 1.0
    W_, H_, L, R, T, Bm = 120 + 90 * max(len(names), 2), 420, 70, 40, 40, 70
    svg = _Svg(W_, H_)
    xs = [L + (W_ - L - R) * (k / max(len(names) - 1, 1)) for k in range(len(names))]

    def ypos(v):
        return T + (H_ - T - Bm) * (0.5 - 0.5 * v / span)

    svg.text(W_ / 2, 22, title, size=14)
    svg.line(L, ypos(0), W_ - R, ypos(0), stroke="#999", width=0.8, dash="4,3")
    for x, name in zip(xs, names):
        svg.line(x, T, x, H_ - Bm, stroke="#444", width=1)
        svg.text(x, H_ - Bm + 18, name, size=10)
    svg.text(L - 8, ypos(span) + 4, _num(span), size=9, anchor="end")
    svg.text(L - 8, ypos(-span) + 4, _num(-span), size=9, anchor="end")
    widths = linewidths([int(row[2]) for row in rows], max_width)
    for row, wrow, lw in zip(rows, weights, widths):
        pts = " ".join(f"{_px(x)},{_px(ypos(v))}" for x, v in zip(xs, wrow))
        svg.add(f'<polyline points="{pts}" fill="none" stroke="{region_color(row[1])}" '
                f'stroke-width="{_px(lw)}" stroke-opacity="0.85"><title>{row[1]} n={row[2]}</title></polyline>')
    return PlotArtifact(svg.render(), csv_text, {"regions": len(rows), "linewidths": widths})


def instance_slopes(model, X) -> tuple[np.ndarray, list]:
    """Per-instance gradient of the logit (the region's equation weights) and region labels."""
    net = as_plnn(model)
    bits = configurations(net, X)
    configs, inverse, _, _ = group_configurations(bits)
    table = np.array([linear_equation(net, c).w for c in configs])
    return table[inverse], [configs[g] for g in inverse]


def matrix_plot(model, X, feature_names, predictors=None, max_points: int = 2000,
                cell: int = 150) -> PlotArtifact:
    """Grid of ``dy/dx_j`` (column j) against ``x_i`` (row i) over the instances."""
    X = np.asarray(X, dtype=float)
    idx, names = _predictor_index(feature_names, predictors)
    slopes, _ = instance_slopes(model, X)

    header = ["instance", "i", "j", "x_i", "slope"]
    rows = []
    for n in range(X.shape[0]):
        for a, i in zip(names, idx):
            for b, j in zip(names, idx):
                rows.append([str(n), a, b, _num(X[n, i]), _num(slopes[n, j])])
    csv_text = _csv_text(header, rows)

    p = len(idx)
    pad = 40
    svg = _Svg(pad + p * cell + 10, pad + p * cell + 10)
    shown = min(max_points, X.shape[0])
    for r, i in enumerate(idx):
        xv = X[:shown, i]
        xlo, xhi = float(xv.min()), float(xv.max())
        xhi = xhi if xhi > xlo else xlo + 1.0
        for c, j in enumerate(idx):
            sv = slopes[:shown, j]
            s = float(np.max(np.abs(sv))) or 1.0
            x0, y0 = pad + c * cell, pad + r * cell
            svg.add(f'<rect x="{x0}" y="{y0}" width="{cell - 6}" height="{cell - 6}" fill="none" stroke="#888"/>')
            for xval, sval in zip(xv, sv):
                cx = x0 + 4 + (cell - 14) * (xval - xlo) / (xhi - xlo)
                cy = y0 + (cell - 6) * (0.5 - 0.45 * sval / s)
                svg.add(f'<circle cx="{_px(cx)}" cy="{_px(cy)}" r="1.2" fill="#1f77b4" fill-opacity="0.5"/>')
        svg.text(12, pad + r * cell + cell / 2, names[r], size=10, anchor="start")
    for c in range(p):
        svg.text(pad + c * cell + cell / 2, pad - 10, f"d/d {names[c]}", size=10)
    return PlotArtifact(svg.render(), csv_text, {"points_shown": shown})


def clip_line(w, b, halfplanes, t_span=1e6):
    """Segment of ``{z : w.z + b = 0}`` inside ``{z : a.z + c >= 0}`` for each ``(a, c)``."""
    w = np.asarray(w, dtype=float)
    nn = w @ w
    if nn == 0:
        return None
    p0 = -b * w / nn
    d = np.array([-w[1], w[0]]) / np.sqrt(nn)
    lo, hi = -t_span, t_span
    for a, c in halfplanes:
        ad = a @ d
        rhs = -(a @ p0 + c)
        if abs(ad) < 1e-15:
            if rhs > 0:
                return None
            continue
        if ad > 0:
            lo = max(lo, rhs / ad)
        else:
            hi = min(hi, rhs / ad)
        if lo > hi:
            return None
    return p0 + lo * d, p0 + hi * d


@dataclass
class RegionPlot:
    svg: str
    segments: list          # (config label, z_start, z_end)
    colors: dict            # config label -> colour

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.svg)


def region_plot_2d(model, X, y, size: int = 520, margin: float = 0.05) -> RegionPlot:
    """Instances coloured by region, with each nontrivial region's decision boundary clipped to it."""
    net = as_plnn(model)
    X = np.asarray(X, dtype=float)
    if net.input_dim != 2 or X.ndim != 2 or X.shape[1] != 2:
        raise ShapeError("region plots need 2-D inputs")
    y = np.asarray(y).reshape(-1)
    bits = configurations(net, X)
    configs, inverse, _, _ = group_configurations(bits)
    labels = ["".join(map(str, c)) for c in configs]

    lo, hi = X.min(axis=0), X.max(axis=0)
    pad = (hi - lo) * margin + 1e-9
    lo, hi = lo - pad, hi + pad
    box = [(np.array([1.0, 0.0]), -lo[0]), (np.array([-1.0, 0.0]), hi[0]),
           (np.array([0.0, 1.0]), -lo[1]), (np.array([0.0, -1.0]), hi[1])]

    segments = []
    for c, lab in zip(configs, labels):
        if is_trivial(net, c):
            continue
        eq = linear_equation(net, c)
        # strict "<" sides are closed up for drawing
        hp = [(q.w, q.b) if q.sense == ">=" else (-q.w, -q.b) for q in region_inequalities(net, c)]
        seg = clip_line(eq.w, eq.b, hp + box)
        if seg is not None:
            segments.append((lab, seg[0], seg[1]))

    svg = _Svg(size, size)

    def to_px(z):
        return (20 + (size - 40) * (z[0] - lo[0]) / (hi[0] - lo[0]),
                size - 20 - (size - 40) * (z[1] - lo[1]) / (hi[1] - lo[1]))

    svg.add(f'<rect x="20" y="20" width="{size - 40}" height="{size - 40}" fill="none" stroke="#444"/>')
    colors = {lab: region_color(lab) for lab in labels}
    for n in range(X.shape[0]):
        px, py = to_px(X[n])
        col = colors[labels[inverse[n]]]
        if y[n] == 1:
            svg.add(f'<rect x="{_px(px - 1.8)}" y="{_px(py - 1.8)}" width="3.6" height="3.6" fill="{col}"/>')
        else:
            svg.add(f'<circle cx="{_px(px)}" cy="{_px(py)}" r="1.8" fill="{col}"/>')
    for lab, a, b in segments:
        (x1, y1), (x2, y2) = to_px(a), to_px(b)
        svg.line(x1, y1, x2, y2, stroke=colors[lab], width=2.5)
    return RegionPlot(svg.render(), segments, colors)


# --------------------------------------------------------------------------
# exact textual interpretation

RULE = "-" * 72


def _vec(w) -> str:
    return "[" + ", ".join(_num(v) for v in w) + "]"


def _affine(w, b) -> str:
    sign = "-" if np.signbit(b) and b != 0 else "+"
    return f"{_vec(w)} · x {sign} {_num(abs(b))}"


def config_label(config) -> str:
    return "[" + ", ".join(f"{float(c)}" for c in config) + "]"


def exact_interpretation(model, census) -> str:
    """Per active configuration: its boundary inequalities, then its local linear equation."""
    net = as_plnn(model)
    out = ["Region Boundary Inequalities", ""]
    for r in census:
        out.append(f"Configuration '{config_label(r.config)}':")
        out.append(RULE)
        for q in region_inequalities(net, r.config):
            rel = "≥" if q.sense == ">=" else "<"
            out.append(f"{_affine(q.w, q.b)} {rel} 0")
            out.append(RULE)
        out.append("")
    out += ["Local Linear Equations", ""]
    for r in census:
        eq = linear_equation(net, r.config)
        out.append(f"Configuration '{config_label(r.config)}':")
        out.append(RULE)
        out.append(f"z = {_affine(eq.w, eq.b)}")
        out.append(RULE)
        out.append("")
    return "\n".join(out)


_AFFINE_RE = re.compile(r"^(?:z = )?\[(?P<w>[^\]]*)\] · x (?P<sign>[+-]) (?P<b>\S+)(?: (?P<rel>≥|<) 0)?$")
_CONFIG_RE = re.compile(r"^Configuration '\[(?P<bits>[^\]]*)\]':$")


def parse_interpretation(text: str) -> dict:
    """Inverse of :func:`exact_interpretation`.

    Returns ``{config: {"inequalities": [(w, b, sense)], "equation": (w, b)}}``.
    """
    out: dict = {}
    section = None
    current = None
    for line in text.splitlines():
        if line == "Region Boundary Inequalities":
            section = "ineq"
            continue
        if line == "Local Linear Equations":
            section = "eq"
            continue
        m = _CONFIG_RE.match(line)
        if m:
            current = tuple(int(float(v)) for v in m.group("bits").split(","))
            out.setdefault(current, {"inequalities": [], "equation": None})
            continue
        m = _AFFINE_RE.match(line)
        if not m or current is None:
            continue
        w = np.array([float(v) for v in m.group("w").split(",")]) if m.group("w").strip() else np.zeros(0)
        b = float(m.group("b")) * (-1.0 if m.group("sign") == "-" else 1.0)
        if section == "ineq":
            out[current]["inequalities"].append((w, b, ">=" if m.group("rel") == "≥" else "<"))
        else:
            out[current]["equation"] = (w, b)
    return out
