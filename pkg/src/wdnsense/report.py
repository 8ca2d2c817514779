"""Delimited tables and SVG rendering.

Every writer has a matching reader so outputs can be re-loaded. Floats are
written with ``repr`` so they read back bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from xml.sax.saxutils import escape, quoteattr

from .metrics import MetricSummary, NodeWeightTable
from .network import Network
from .optimizer import ObjectiveValues, ParetoRecord, Placement

SUMMARY_COLUMNS = (
    "network", "N", "L", "L_pipes", "k_max", "mean_degree", "mean_degree_pipes",
    "mean_path_length", "clustering", "diameter", "f_c", "f_c_mode", "betweenness",
    "closeness", "connected",
)
WEIGHT_COLUMNS = ("node_id", "kind", "demand", "g", "f", "f_norm")
PARETO_COLUMNS = ("w_low", "w_high", "F", "F1", "F2", "sensors")
BASELINE_COLUMNS = ("metric", "F", "F1", "F2", "sensors")
DISPERSION_COLUMNS = ("w_low", "w_high", "dispersion", "disconnected", "sensors")


def _f(x: float) -> str:
    return repr(float(x))


def _write(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read(text: str, header) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != tuple(header):
        raise ValueError(f"unexpected columns {reader.fieldnames}; expected {list(header)}")
    return list(reader)


# -- metric summary ----------------------------------------------------------

def write_summary(name: str, s: MetricSummary) -> str:
    return _write(SUMMARY_COLUMNS, [[
        name, s.n_nodes, s.n_links, s.n_pipes, s.k_max, _f(s.mean_degree), _f(s.mean_degree_pipes),
        _f(s.mean_path_length), _f(s.clustering_avg), s.diameter, _f(s.critical_fraction), s.fc_mode,
        _f(s.betweenness_mean), _f(s.closeness_mean), int(s.connected),
    ]])


def read_summary(text: str) -> tuple[str, MetricSummary]:
    (row,) = _read(text, SUMMARY_COLUMNS)
    return row["network"], MetricSummary(
        n_nodes=int(row["N"]), n_links=int(row["L"]), n_pipes=int(row["L_pipes"]),
        k_max=int(row["k_max"]), mean_degree=float(row["mean_degree"]),
        mean_degree_pipes=float(row["mean_degree_pipes"]),
        mean_path_length=float(row["mean_path_length"]), clustering_avg=float(row["clustering"]),
        diameter=int(row["diameter"]), critical_fraction=float(row["f_c"]), fc_mode=row["f_c_mode"],
        betweenness_mean=float(row["betweenness"]), closeness_mean=float(row["closeness"]),
        connected=bool(int(row["connected"])),
    )


# -- node weights --------------------------------------------------------------

def write_weights(table: NodeWeightTable) -> str:
    return _write(WEIGHT_COLUMNS, [
        [r.node_id, r.kind.value, _f(r.demand), _f(r.g), _f(r.f), _f(r.f_norm)] for r in table.rows
    ])


def read_weights(text: str) -> list[dict[str, object]]:
    out = []
    for row in _read(text, WEIGHT_COLUMNS):
        out.append({"node_id": row["node_id"], "kind": row["kind"],
                    **{k: float(row[k]) for k in ("demand", "g", "f", "f_norm")}})
    return out


# -- placements ------------------------------------------------------------------

def write_pareto(records: list[ParetoRecord]) -> str:
    return _write(PARETO_COLUMNS, [
        [_f(r.w_low), _f(r.w_high), _f(r.values.scalar), _f(r.values.f1), _f(r.values.f2_reported),
         " ".join(r.placement.sensors)]
        for r in records
    ])


def read_pareto(text: str) -> list[ParetoRecord]:
    out = []
    for row in _read(text, PARETO_COLUMNS):
        w_high = float(row["w_high"])
        values = ObjectiveValues(float(row["F1"]), -float(row["F2"]), float(row["F"]), w_high)
        out.append(ParetoRecord(float(row["w_low"]), w_high, Placement(row["sensors"].split()), values))
    return out


def write_baseline(rows: list[tuple[str, Placement, ObjectiveValues]]) -> str:
    return _write(BASELINE_COLUMNS, [
        [metric, _f(v.scalar), _f(v.f1), _f(v.f2_reported), " ".join(pl.sensors)] for metric, pl, v in rows
    ])


def read_baseline(text: str) -> list[tuple[str, Placement, dict[str, float]]]:
    return [
        (row["metric"], Placement(row["sensors"].split()),
         {k: float(row[k]) for k in ("F", "F1", "F2")})
        for row in _read(text, BASELINE_COLUMNS)
    ]


def write_dispersion(rows: list[tuple[float, float, float, bool, Placement]]) -> str:
    return _write(DISPERSION_COLUMNS, [
        [_f(lo), _f(hi), _f(d), int(flag), " ".join(pl.sensors)] for lo, hi, d, flag, pl in rows
    ])


def read_dispersion(text: str) -> list[tuple[float, float, float, bool, Placement]]:
    return [
        (float(r["w_low"]), float(r["w_high"]), float(r["dispersion"]), bool(int(r["disconnected"])),
         Placement(r["sensors"].split()))
        for r in _read(text, DISPERSION_COLUMNS)
    ]


# -- rendering -------------------------------------------------------------------

@dataclass(frozen=True)
class RenderSpec:
    width: int = 800
    height: int = 600
    margin: int = 30
    node_radius: float = 3.0
    sensor_radius: float = 7.0
    sensor_color: str = "#d62728"
    node_color: str = "#1f77b4"
    edge_color: str = "#999999"
    coverage_radius: float | None = None  # canvas pixels

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float)) and f.name != "margin" and value is not None and value <= 0:
                raise ValueError(f"{f.name} must be positive")
        if self.margin < 0 or 2 * self.margin >= min(self.width, self.height):
            raise ValueError("margin leaves no drawing area")


def layout(net: Network) -> tuple[dict[str, tuple[float, float]], bool]:
    """Node positions: stored coordinates when every node has them, else a
    row-major grid in node order. The flag tells which was used."""
    if net.nodes and all(n.coord is not None for n in net.nodes):
        return {n.id: n.coord for n in net.nodes}, False
    cols = max(1, math.ceil(math.sqrt(net.n_nodes)))
    return {n.id: (float(i % cols), -float(i // cols)) for i, n in enumerate(net.nodes)}, True


def render_svg(net: Network, placement: Placement | None = None, spec: RenderSpec = RenderSpec()) -> str:
    pos, synthetic = layout(net)
    sensors = set(placement.sensors) if placement else set()
    xs = [p[0] for p in pos.values()] or [0.0]
    ys = [p[1] for p in pos.values()] or [0.0]
    span_x = (max(xs) - min(xs)) or 1.0
    span_y = (max(ys) - min(ys)) or 1.0
    scale = min((spec.width - 2 * spec.margin) / span_x, (spec.height - 2 * spec.margin) / span_y)

    def to_px(p: tuple[float, float]) -> tuple[str, str]:
        x = spec.margin + (p[0] - min(xs)) * scale
        y = spec.height - spec.margin - (p[1] - min(ys)) * scale  # svg y grows downward
        return f"{x:.2f}", f"{y:.2f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
        f"<title>{escape(net.name or 'network')}</title>",
    ]
    if synthetic:
        out.append("<desc>grid layout (no stored coordinates)</desc>")
    out.append(f'<g id="links" stroke="{spec.edge_color}" stroke-width="1">')
    for link in net.links:
        x1, y1 = to_px(pos[link.start])
        x2, y2 = to_px(pos[link.end])
        out.append(f'<line id={quoteattr(link.id)} class="{link.kind.value}" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    if spec.coverage_radius and sensors:
        out.append(f'<g id="coverage" fill="none" stroke="{spec.sensor_color}" stroke-dasharray="4 3">')
        for nid in sorted(sensors):
            cx, cy = to_px(pos[nid])
            out.append(f'<circle cx="{cx}" cy="{cy}" r="{spec.coverage_radius:.2f}"/>')
        out.append("</g>")
    out.append('<g id="nodes">')
    for node in net.nodes:
        cx, cy = to_px(pos[node.id])
        if node.id in sensors:
            attrs = f'class="sensor" r="{spec.sensor_radius:.2f}" fill="{spec.sensor_color}" stroke="black"'
        else:
            attrs = f'class="{node.kind.value}" r="{spec.node_radius:.2f}" fill="{spec.node_color}"'
        out.append(f'<circle id={quoteattr(node.id)} cx="{cx}" cy="{cy}" {attrs}/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
