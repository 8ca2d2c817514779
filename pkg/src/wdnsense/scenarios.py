"""Contamination scenarios, downstream travel times and the coverage relation.

Transport is quasi-static: a scenario propagates under the single hydraulic
snapshot in force at its start time (the latest snapshot at or before it).
A sensor at ``j`` covers source ``i`` in scenario ``s`` when the contaminant
travel time from ``i`` to ``j`` under that snapshot is at most the coverage
time ``T``.
"""

from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedSection, NoSnapshotBefore, NonDivisibleHorizon
from .network import HydraulicSeries, HydraulicSnapshot, Network

DAY_S = 24 * 3600


@dataclass(frozen=True)
class Scenario:
    index: int
    start_time: float
    duration: float


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    horizon: float
    interval: float
    duration: float
    coverage_time: float

    def __len__(self) -> int:
        return len(self.scenarios)

    def event_count(self, n_nodes: int) -> int:
        """One injection per node per scenario."""
        return len(self.scenarios) * n_nodes


def generate_scenarios(
    horizon_s: float = DAY_S,
    interval_s: float = 300,
    duration_s: float = 7200,
    coverage_time_s: float = 7200,
) -> ScenarioSet:
    for name, value in (("horizon", horizon_s), ("interval", interval_s),
                        ("duration", duration_s), ("coverage time", coverage_time_s)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    if coverage_time_s > duration_s:
        raise ValueError("coverage time cannot exceed the longest event duration")
    count = horizon_s / interval_s
    if count != int(count):
        raise NonDivisibleHorizon(f"interval {interval_s} s does not divide horizon {horizon_s} s")
    scenarios = tuple(Scenario(k, k * interval_s, duration_s) for k in range(int(count)))
    return ScenarioSet(scenarios, horizon_s, interval_s, duration_s, coverage_time_s)


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowDigraph:
    """Directed arcs along the flow; ``arcs[u]`` lists ``(v, seconds, link_id)``."""

    node_ids: tuple[str, ...]
    arcs: tuple[tuple[tuple[int, float, str], ...], ...]

    def arc_list(self) -> list[tuple[str, str, float, str]]:
        return [(self.node_ids[u], self.node_ids[v], t, lid)
                for u, out in enumerate(self.arcs) for v, t, lid in out]


def flow_digraph(net: Network, snap: HydraulicSnapshot, fixed_traversal_s: float = 0.0) -> FlowDigraph:
    """One arc per flowing link, pointing downstream.

    Pipes take ``length / velocity`` seconds; pumps and valves, which have no
    length, take ``fixed_traversal_s``. Links with zero flow carry nothing.
    """
    if snap.link_ids != tuple(link.id for link in net.links):
        raise MalformedSection("snapshot links do not match the network")
    arcs: list[list[tuple[int, float, str]]] = [[] for _ in net.nodes]
    for link, v, sign in zip(net.links, snap.velocity, snap.flow_sign):
        if sign == 0:
            continue
        a, b = net.index(link.start), net.index(link.end)
        if sign < 0:
            a, b = b, a
        t = link.length / v if link.length is not None else fixed_traversal_s
        arcs[a].append((b, t, link.id))
    return FlowDigraph(tuple(net.node_ids), tuple(tuple(a) for a in arcs))


def _dijkstra(graph: FlowDigraph, source: int) -> list[float]:
    dist = [math.inf] * len(graph.arcs)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, t, _ in graph.arcs[u]:
            nd = d + t
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


@dataclass(frozen=True)
class TravelTimeField:
    """Earliest arrival time (s) at every node; ``math.inf`` when unreachable."""

    source: str
    node_ids: tuple[str, ...]
    times: tuple[float, ...]

    def __getitem__(self, node_id: str) -> float:
        return self.times[self.node_ids.index(node_id)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.node_ids, self.times))


def travel_times(net: Network, snap: HydraulicSnapshot, source: str,
                 fixed_traversal_s: float = 0.0) -> TravelTimeField:
    s = net.index(source)
    graph = flow_digraph(net, snap, fixed_traversal_s)
    return TravelTimeField(source, graph.node_ids, tuple(_dijkstra(graph, s)))


def travel_time_matrix(net: Network, snap: HydraulicSnapshot, fixed_traversal_s: float = 0.0) -> np.ndarray:
    """``t[i, j]``: travel time from source ``i`` to node ``j``."""
    graph = flow_digraph(net, snap, fixed_traversal_s)
    return np.array([_dijkstra(graph, s) for s in range(net.n_nodes)], dtype=float).reshape(
        net.n_nodes, net.n_nodes)


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageRelation:
    """``covers[i, j, s]``: a sensor at ``j`` detects an injection at ``i``
    in scenario ``s`` within the coverage time."""

    node_ids: tuple[str, ...]
    covers: np.ndarray = field(repr=False)
    coverage_time: float

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        n = len(self.node_ids)
        if self.covers.ndim != 3 or self.covers.shape[:2] != (n, n):
            raise ValueError(f"covers must have shape (N, N, S) with N={n}")
        if self.covers.dtype != np.bool_:
            object.__setattr__(self, "covers", self.covers.astype(bool))
        self.covers.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_scenarios(self) -> int:
        return self.covers.shape[2]

    def covering_set(self, source: str, scenario: int) -> set[str]:
        i = self.node_ids.index(source)
        return {self.node_ids[j] for j in np.flatnonzero(self.covers[i, :, scenario])}

    def __eq__(self, other):
        if not isinstance(other, CoverageRelation):
            return NotImplemented
        return (self.node_ids == other.node_ids and self.coverage_time == other.coverage_time
                and np.array_equal(self.covers, other.covers))

    __hash__ = None


def snapshot_for(series: HydraulicSeries, start_time: float) -> int:
    """Index of the latest snapshot at or before ``start_time``."""
    k = bisect.bisect_right(series.times, start_time) - 1
    if k < 0:
        raise NoSnapshotBefore(f"no hydraulic snapshot at or before t={start_time} s")
    return k


def coverage_relation(
    net: Network,
    series: HydraulicSeries,
    scenario_set: ScenarioSet,
    *,
    coverage_time_s: float | None = None,
    fixed_traversal_s: float = 0.0,
) -> CoverageRelation:
    """Materialise ``covers[i, j, s] = t_ijs <= T`` for every scenario.

    Travel times are computed once per distinct snapshot. ``coverage_time_s``
    overrides the scenario set's coverage time.
    """
    T = scenario_set.coverage_time if coverage_time_s is None else coverage_time_s
    if not T > 0:
        raise ValueError("coverage time must be positive")
    n = net.n_nodes
    cache: dict[int, np.ndarray] = {}
    covers = np.zeros((n, n, len(scenario_set)), dtype=bool)
    for s, scen in enumerate(scenario_set.scenarios):
        k = snapshot_for(series, scen.start_time)
        if k not in cache:
            cache[k] = travel_time_matrix(net, series.snapshots[k], fixed_traversal_s) <= T
        covers[:, :, s] = cache[k]
    return CoverageRelation(tuple(net.node_ids), covers, float(T))


@dataclass(frozen=True)
class CoverageStats:
    per_sensor: dict[str, int]
    per_scenario: tuple[int, ...]


def coverage_stats(rel: CoverageRelation) -> CoverageStats:
    """Per candidate sensor, the number of (source, scenario) pairs it covers;
    per scenario, the number of sources some sensor could detect."""
    per_sensor = rel.covers.sum(axis=(0, 2))
    per_scenario = rel.covers.any(axis=1).sum(axis=0)
    return CoverageStats(
        {nid: int(c) for nid, c in zip(rel.node_ids, per_sensor)},
        tuple(int(c) for c in per_scenario),
    )


COVERAGE_HEADER = "wdn-cover v1"


def write_coverage(rel: CoverageRelation) -> str:
    """Sparse text form: a header with N, S and T, the node ids, then one
    ``i j s`` triple (zero-based indices) per true entry."""
    lines = [
        f"{COVERAGE_HEADER} N={rel.n_nodes} S={rel.n_scenarios} T={rel.coverage_time!r}",
        "nodes " + " ".join(rel.node_ids),
    ]
    for i, j, s in zip(*np.nonzero(rel.covers)):
        lines.append(f"{i} {j} {s}")
    return "\n".join(lines) + "\n"


def read_coverage(text: str) -> CoverageRelation:
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith(COVERAGE_HEADER):
        raise MalformedSection(f"expected {COVERAGE_HEADER!r} header")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
        n, n_s, T = int(fields["N"]), int(fields["S"]), float(fields["T"])
    except (KeyError, ValueError):
        raise MalformedSection("coverage header needs N=, S= and T=") from None
    ids = tuple(lines[1].split()[1:])
    if len(ids) != n:
        raise MalformedSection(f"header says N={n} but {len(ids)} node ids listed")
    covers = np.zeros((n, n, n_s), dtype=bool)
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        try:
            i, j, s = (int(x) for x in line.split())
            if min(i, j, s) < 0:
                raise IndexError
            covers[i, j, s] = True
        except (ValueError, IndexError):
            raise MalformedSection(f"line {lineno}: bad triple {line!r}") from None
    return CoverageRelation(ids, covers, T)
