"""Command-line front end.

Settings come from an optional JSON config file (``--config``); any flag
given on the command line overrides the file. The default output directory
is taken from ``$WDNSENSE_OUT`` when set.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import __version__
from .errors import DisconnectedPlacement, WdnError
from .metrics import anc_terms, demand_adjusted, metric_summary, shortest_paths
from .network import HydraulicSeries, Network, ingest_hydraulics, load_network
from .optimizer import CENTRALITY_METRICS, Placement, PlacementProblem, centrality_baseline, dispersion, most_frequent_sensors
from .report import (
    RenderSpec,
    render_svg,
    write_baseline,
    write_dispersion,
    write_pareto,
    write_summary,
    write_weights,
)
from .scenarios import coverage_relation, coverage_stats, generate_scenarios, write_coverage

log = logging.getLogger("wdnsense")

OUT_ENV = "WDNSENSE_OUT"


@dataclass(frozen=True)
class RunConfig:
    net: str | None = None
    hyd: str | None = None
    horizon_s: float = 24 * 3600
    interval_s: float = 300
    duration_s: float = 7200
    coverage_time_s: float = 7200
    p: int = 5
    grid_step: float = 0.05
    log_base: str = "e"
    candidates: str = "all"
    fc_mode: str = "analytic"
    fc_trials: int = 100
    seed: int = 0
    fixed_traversal_s: float = 0.0
    out: str | None = None

    def __post_init__(self):
        for name in ("horizon_s", "interval_s", "duration_s", "coverage_time_s", "p", "grid_step", "fc_trials"):
            if not getattr(self, name) > 0:
                raise ValueError(f"config field {name} must be positive")
        if self.log_base not in ("e", "2"):
            raise ValueError("log_base must be 'e' or '2'")
        if self.candidates not in ("all", "junctions"):
            raise ValueError("candidates must be 'all' or 'junctions'")
        if self.fc_mode not in ("analytic", "empirical"):
            raise ValueError("fc_mode must be 'analytic' or 'empirical'")

    @property
    def log_base_value(self) -> float:
        return math.e if self.log_base == "e" else 2.0

    @property
    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "wdnsense-out")

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    return replace(cfg, **overrides)


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ValueError(f"missing required setting(s): {', '.join('--' + m for m in missing)}")


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _load(cfg: RunConfig, hydraulics: bool) -> tuple[Network, HydraulicSeries | None]:
    _require(cfg, "net", *(("hyd",) if hydraulics else ()))
    net = load_network(cfg.net)
    series = None
    if hydraulics:
        with open(cfg.hyd, encoding="utf-8") as fh:
            series = ingest_hydraulics(fh.read(), net)
    return net, series


def _problem(cfg: RunConfig) -> tuple[Network, PlacementProblem]:
    net, series = _load(cfg, hydraulics=True)
    scen = generate_scenarios(cfg.horizon_s, cfg.interval_s, cfg.duration_s, cfg.coverage_time_s)
    rel = coverage_relation(net, series, scen, fixed_traversal_s=cfg.fixed_traversal_s)
    weights = demand_adjusted(net, cfg.log_base_value)
    return net, PlacementProblem(rel, weights, anc_terms(net), cfg.candidates)


# -- subcommands ---------------------------------------------------------------

def cmd_metrics(cfg: RunConfig) -> list[Path]:
    net, _ = _load(cfg, hydraulics=False)
    summary = metric_summary(net, cfg.fc_mode, cfg.fc_trials, cfg.seed)
    return [
        _write(cfg.out_dir, "metrics_summary.csv", write_summary(net.name or Path(cfg.net).stem, summary)),
        _write(cfg.out_dir, "node_weights.csv", write_weights(demand_adjusted(net, cfg.log_base_value))),
    ]


def cmd_weights(cfg: RunConfig) -> list[Path]:
    net, _ = _load(cfg, hydraulics=False)
    return [_write(cfg.out_dir, "node_weights.csv", write_weights(demand_adjusted(net, cfg.log_base_value)))]


def cmd_scenarios(cfg: RunConfig) -> list[Path]:
    net, series = _load(cfg, hydraulics=True)
    scen = generate_scenarios(cfg.horizon_s, cfg.interval_s, cfg.duration_s, cfg.coverage_time_s)
    rel = coverage_relation(net, series, scen, fixed_traversal_s=cfg.fixed_traversal_s)
    stats = coverage_stats(rel)
    log.info("%d scenarios x %d nodes = %d injection events", len(scen), net.n_nodes, scen.event_count(net.n_nodes))
    rows = "\n".join(f"{s.index},{s.start_time!r},{s.duration!r}" for s in scen.scenarios)
    cov = "\n".join(f"{nid},{c}" for nid, c in stats.per_sensor.items())
    return [
        _write(cfg.out_dir, "scenarios.csv", "index,start_time_s,duration_s\n" + rows + "\n"),
        _write(cfg.out_dir, "coverage.txt", write_coverage(rel)),
        _write(cfg.out_dir, "coverage_stats.csv", "node_id,covered_pairs\n" + cov + "\n"),
    ]


def _dispersion_row(pl: Placement, dm) -> tuple[float, bool]:
    try:
        return dispersion(pl, dm), False
    except DisconnectedPlacement as exc:
        values = list(exc.per_component.values())
        return sum(values) / len(values), True


def cmd_optimize(cfg: RunConfig) -> list[Path]:
    net, problem = _problem(cfg)
    records = problem.pareto_sweep(cfg.p, cfg.grid_step)
    dm = shortest_paths(net)
    disp = [(r.w_low, r.w_high, *_dispersion_row(r.placement, dm), r.placement) for r in records]
    top = most_frequent_sensors(records, cfg.p)
    counts = {s: sum(s in r.placement.sensors for r in records) for s in top.sensors}
    ranked = sorted(top.sensors, key=lambda s: (-counts[s], s))
    freq = "rank,node_id,records\n" + "".join(f"{k},{s},{counts[s]}\n" for k, s in enumerate(ranked, 1))
    return [
        _write(cfg.out_dir, "pareto.csv", write_pareto(records)),
        _write(cfg.out_dir, "dispersion.csv", write_dispersion(disp)),
        _write(cfg.out_dir, "most_frequent.csv", freq),
    ]


def cmd_baseline(cfg: RunConfig, metric: str = "all", w: float = 0.0) -> list[Path]:
    net, problem = _problem(cfg)
    metrics = CENTRALITY_METRICS if metric == "all" else (metric,)
    rows = [(m, *centrality_baseline(net, problem, m, cfg.p, w)) for m in metrics]
    return [_write(cfg.out_dir, "baseline.csv", write_baseline(rows))]


def cmd_render(cfg: RunConfig, sensors: list[str], spec: RenderSpec, name: str = "network.svg") -> list[Path]:
    net, _ = _load(cfg, hydraulics=False)
    for s in sensors:
        net.index(s)
    return [_write(cfg.out_dir, name, render_svg(net, Placement(sensors) if sensors else None, spec))]


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run settings (override --config)")
    g.add_argument("--config", help="JSON file with run settings")
    g.add_argument("--net", help="network file (.inp subset or wdn-net v1)")
    g.add_argument("--hyd", help="hydraulic result table (CSV)")
    g.add_argument("--p", type=int, help="number of sensors (default 5)")
    g.add_argument("--coverage-time-s", dest="coverage_time_s", type=float, help="coverage time T (default 7200)")
    g.add_argument("--interval-s", dest="interval_s", type=float, help="scenario start interval (default 300)")
    g.add_argument("--horizon-s", dest="horizon_s", type=float, help="scenario horizon (default 86400)")
    g.add_argument("--duration-s", dest="duration_s", type=float, help="injection duration (default 7200)")
    g.add_argument("--grid-step", dest="grid_step", type=float, help="weight grid step (default 0.05)")
    g.add_argument("--log-base", dest="log_base", choices=("e", "2"), help="entropy log base (default e)")
    g.add_argument("--candidates", choices=("all", "junctions"), help="sensor candidate policy (default all)")
    g.add_argument("--fc-mode", dest="fc_mode", choices=("analytic", "empirical"),
                   help="critical-fraction method (default analytic)")
    g.add_argument("--fc-trials", dest="fc_trials", type=int, help="empirical percolation trials (default 100)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--fixed-traversal-s", dest="fixed_traversal_s", type=float,
                   help="transit time through pumps and valves (default 0)")
    g.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./wdnsense-out)")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wdnsense", description="Sensor placement on water distribution networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("metrics", parents=[common], help="topology summary and node weights")
    sub.add_parser("weights", parents=[common], help="node weight table only")
    sub.add_parser("scenarios", parents=[common], help="scenario grid and coverage relation")
    sub.add_parser("optimize", parents=[common], help="weight sweep over the bi-objective placement")
    b = sub.add_parser("baseline", parents=[common], help="centrality-ranked placements")
    b.add_argument("--metric", choices=CENTRALITY_METRICS + ("all",), default="all")
    b.add_argument("--w", type=float, default=0.0, help="weight used to report F (default 0)")
    r = sub.add_parser("render", parents=[common], help="draw the network as SVG")
    r.add_argument("--sensors", default="", help="comma-separated sensor node ids to highlight")
    r.add_argument("--coverage-radius", dest="coverage_radius", type=float, help="circle radius in pixels")
    r.add_argument("--width", type=int, default=800)
    r.add_argument("--height", type=int, default=600)
    r.add_argument("--name", default="network.svg", help="output file name")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _resolve(args)
        if args.command == "metrics":
            paths = cmd_metrics(cfg)
        elif args.command == "weights":
            paths = cmd_weights(cfg)
        elif args.command == "scenarios":
            paths = cmd_scenarios(cfg)
        elif args.command == "optimize":
            paths = cmd_optimize(cfg)
        elif args.command == "baseline":
            paths = cmd_baseline(cfg, args.metric, args.w)
        else:
            spec = RenderSpec(width=args.width, height=args.height, coverage_radius=args.coverage_radius)
            sensors = [s for s in args.sensors.split(",") if s]
            paths = cmd_render(cfg, sensors, spec, args.name)
    except (WdnError, ValueError, OSError) as exc:
        print(f"wdnsense: error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
