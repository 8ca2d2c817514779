"""Topological metrics, capacity-entropy node weights and ANC terms.

All path-based metrics work on the simple undirected projection of the
network: parallel links collapse, flow direction is ignored. Degree is the
multigraph degree (every incident link counts, pumps and valves included).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateGraph, IsolatedNode, NotAPipe
from .network import Link, Network, NodeKind, components

UNREACHABLE = -1


# ---------------------------------------------------------------------------
# degree
# ---------------------------------------------------------------------------

def degree_stats(net: Network) -> tuple[int, float, dict[str, int]]:
    """Return ``(k_max, mean_degree, per_node)`` using multigraph degree."""
    per_node = {n.id: 0 for n in net.nodes}
    for link in net.links:
        per_node[link.start] += 1
        per_node[link.end] += 1
    if not per_node:
        return 0, 0.0, per_node
    return max(per_node.values()), 2 * net.n_links / net.n_nodes, per_node


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------

def _bfs(adj: Sequence[set[int]], source: int) -> list[int]:
    dist = [UNREACHABLE] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] == UNREACHABLE:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


@dataclass(frozen=True)
class DistanceMatrix:
    """Hop counts between all node pairs; ``UNREACHABLE`` marks no path."""

    node_ids: tuple[str, ...]
    d: np.ndarray = field(repr=False)

    @property
    def reachable_pairs(self) -> int:
        return int(np.count_nonzero(self.d > 0))

    @property
    def connected(self) -> bool:
        return not bool(np.any(self.d == UNREACHABLE))

    @property
    def mean_path_length(self) -> float:
        """Mean over ordered reachable pairs ``i != j``; equals the usual
        ``sum / (N (N-1))`` on connected graphs."""
        pairs = self.reachable_pairs
        if pairs == 0:
            return 0.0
        return int(self.d[self.d > 0].sum()) / pairs

    @property
    def diameter(self) -> int:
        return int(self.d.max()) if self.d.size else 0

    def distance(self, a: str, b: str) -> int:
        return int(self.d[self.node_ids.index(a), self.node_ids.index(b)])


def shortest_paths(net: Network) -> DistanceMatrix:
    adj = net.adjacency()
    d = np.array([_bfs(adj, s) for s in range(len(adj))], dtype=np.int64).reshape(len(adj), len(adj))
    return DistanceMatrix(tuple(net.node_ids), d)


# ---------------------------------------------------------------------------
# clustering, betweenness, closeness
# ---------------------------------------------------------------------------

def clustering(net: Network) -> tuple[dict[str, float], float]:
    """Local clustering ``2 e_i / (k_i (k_i - 1))`` and its mean over all nodes.

    Nodes with fewer than two neighbours get 0.
    """
    adj = net.adjacency()
    per_node = {}
    for i, nid in enumerate(net.node_ids):
        nbrs = adj[i]
        k = len(nbrs)
        if k < 2:
            per_node[nid] = 0.0
            continue
        links = sum(len(adj[u] & nbrs) for u in nbrs) // 2
        per_node[nid] = 2 * links / (k * (k - 1))
    avg = sum(per_node.values()) / len(per_node) if per_node else 0.0
    return per_node, avg


def betweenness(net: Network, *, exact: bool = False) -> dict[str, float]:
    """Normalised shortest-path betweenness over ordered pairs.

    Brandes accumulation: one BFS per source with integer path counts, then
    dependencies are back-propagated in order of decreasing distance. With
    ``exact=True`` the dependencies are accumulated as fractions so the result
    is the correctly rounded value of the rational betweenness (slow on large
    graphs).
    """
    n = net.n_nodes
    if n < 3:
        raise DegenerateGraph(f"betweenness needs at least 3 nodes, got {n}")
    adj = [sorted(a) for a in net.adjacency()]
    zero = Fraction(0) if exact else 0.0
    total = [zero] * n
    for s in range(n):
        sigma = [0] * n
        dist = [-1] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma[s], dist[s] = 1, 0
        order = []
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = [zero] * n
        for w in reversed(order):
            for v in preds[w]:
                if exact:
                    delta[v] += Fraction(sigma[v], sigma[w]) * (1 + delta[w])
                else:
                    delta[v] += sigma[v] / sigma[w] * (1 + delta[w])
            if w != s:
                total[w] += delta[w]
    scale = (n - 1) * (n - 2)
    if exact:
        return {nid: float(total[i] / scale) for i, nid in enumerate(net.node_ids)}
    return {nid: total[i] / scale for i, nid in enumerate(net.node_ids)}


def closeness(net: Network, *, skip_isolated: bool = False) -> dict[str, float]:
    """``(n_c - 1) / sum_j d_ij`` within each node's own component.

    Isolated nodes raise :class:`IsolatedNode` unless ``skip_isolated`` is
    set, in which case they are reported as 0.
    """
    adj = net.adjacency()
    out = {}
    for i, nid in enumerate(net.node_ids):
        dist = _bfs(adj, i)
        reach = [d for d in dist if d > 0]
        if not reach:
            if skip_isolated:
                out[nid] = 0.0
                continue
            raise IsolatedNode(f"node {nid!r} has no neighbours; closeness undefined")
        out[nid] = len(reach) / sum(reach)
    return out


# ---------------------------------------------------------------------------
# percolation
# ---------------------------------------------------------------------------

def molloy_reed_ratio(net: Network) -> float:
    """``<k^2> / <k>``; 0 for a graph without links."""
    _, mean_k, per_node = degree_stats(net)
    if mean_k == 0:
        return 0.0
    k2 = sum(k * k for k in per_node.values()) / net.n_nodes
    return k2 / mean_k


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return self.size[ra]
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return self.size[ra]


def _removal_threshold(adj: Sequence[set[int]], order: Sequence[int], limit: float) -> int:
    """Number of nodes removed (in ``order``) before the largest component
    holds fewer than ``limit`` nodes.

    Runs the removal backwards: nodes are re-inserted from the end of
    ``order`` and the largest component is tracked with union-find.
    """
    n = len(order)
    ds = _DisjointSet(n)
    present = [False] * n
    largest_after = [0] * (n + 1)  # largest component after removing k nodes
    largest = 0
    for k in range(n - 1, -1, -1):
        u = order[k]
        present[u] = True
        largest = max(largest, 1)
        for v in adj[u]:
            if present[v]:
                largest = max(largest, ds.union(u, v))
        largest_after[k] = largest
    for k in range(n + 1):
        if largest_after[k] < limit:
            return k
    return n


def critical_fraction(
    net: Network,
    mode: Literal["analytic", "empirical"] = "analytic",
    trials: int = 100,
    seed: int = 0,
    threshold: float = 0.05,
) -> float:
    """Fraction of nodes whose removal stops the network percolating.

    ``analytic`` uses the Molloy-Reed estimate ``1 - 1/(kappa - 1)`` with
    ``kappa = <k^2>/<k>``, clamped to [0, 1]; a graph with ``kappa <= 1``
    yields 0 (see :func:`molloy_reed_ratio` to detect that case).
    ``empirical`` removes nodes in uniformly random order until the largest
    component is smaller than ``threshold * N`` and averages the removed
    fraction over ``trials`` seeded runs.
    """
    if mode == "analytic":
        kappa = molloy_reed_ratio(net)
        if kappa <= 1:
            return 0.0
        return min(1.0, max(0.0, 1.0 - 1.0 / (kappa - 1.0)))
    if mode != "empirical":
        raise ValueError(f"unknown critical-fraction mode {mode!r}")
    n = net.n_nodes
    if n == 0:
        return 0.0
    if trials < 1:
        raise ValueError("trials must be positive")
    adj = net.adjacency()
    rng = np.random.default_rng(seed)
    limit = threshold * n
    removed = [_removal_threshold(adj, rng.permutation(n).tolist(), limit) for _ in range(trials)]
    return sum(removed) / (trials * n)


# ---------------------------------------------------------------------------
# capacity and entropic degree
# ---------------------------------------------------------------------------

def link_capacity(link: Link) -> float:
    """Pipe volume ``pi L D^2 / 4`` in the file's mixed units (ft * in^2)."""
    if not link.is_pipe or link.length is None or link.diameter is None:
        raise NotAPipe(f"{link.kind.value} {link.id} has no capacity")
    return math.pi * link.length * link.diameter ** 2 / 4


def _neighbour_capacities(net: Network, node_id: str) -> dict[str, float]:
    # parallel pipes to the same neighbour pool their capacity
    caps: dict[str, float] = {}
    for link in net.links:
        if not link.is_pipe or node_id not in (link.start, link.end):
            continue
        other = link.end if link.start == node_id else link.start
        caps[other] = caps.get(other, 0.0) + link_capacity(link)
    return caps


def _entropic(caps: Sequence[float], log_base: float) -> float:
    total = sum(caps)
    if total <= 0:
        return 0.0
    entropy = 0.0
    for w in caps:
        p = w / total
        if p > 0:
            entropy -= p * math.log(p, log_base)
    return (1.0 + entropy) * total


def entropic_degree(net: Network, node: str, log_base: float = math.e) -> float:
    """``(1 - sum_k p_k log p_k) * sum_k w_k`` over the node's pipe neighbours.

    A node reached only through pumps or valves has zero capacity and gets 0;
    :func:`demand_adjusted` flags such nodes.
    """
    net.index(node)
    return _entropic(list(_neighbour_capacities(net, node).values()), log_base)


def adjusted_entropic_degree(g: float, demand: float, max_demand: float) -> float:
    """``g/2 * (1 + demand/max_demand)``; plain ``g/2`` when ``max_demand <= 0``."""
    if max_demand <= 0:
        return g / 2
    return g / 2 * (1 + demand / max_demand)


@dataclass(frozen=True)
class NodeWeight:
    node_id: str
    kind: NodeKind
    demand: float
    w_sum: float
    g: float
    f: float
    f_norm: float


@dataclass(frozen=True)
class NodeWeightTable:
    rows: tuple[NodeWeight, ...]
    max_demand: float
    f_total: float
    log_base: float
    zero_capacity: tuple[str, ...] = ()
    no_demand: bool = False

    def __getitem__(self, node_id: str) -> NodeWeight:
        for row in self.rows:
            if row.node_id == node_id:
                return row
        raise KeyError(node_id)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(r.node_id for r in self.rows)

    def f_norm(self) -> dict[str, float]:
        return {r.node_id: r.f_norm for r in self.rows}


def demand_adjusted(net: Network, log_base: float = math.e) -> NodeWeightTable:
    """Demand-adjusted entropic degree ``f = g/2 (1 + d/M_d)`` per node.

    ``M_d`` is the largest junction base demand. Tanks and reservoirs are
    reported with ``f = 1`` and ``f_norm = 0``; ``f_norm`` divides junction
    ``f`` by the junction total. Without any positive demand ``f = g/2`` and
    ``no_demand`` is set.
    """
    junction_demands = [n.base_demand for n in net.nodes if n.kind is NodeKind.JUNCTION]
    max_d = max(junction_demands, default=0.0)
    raw = []
    zero_cap = []
    for node in net.nodes:
        caps = list(_neighbour_capacities(net, node.id).values())
        w_sum = sum(caps)
        if w_sum <= 0:
            zero_cap.append(node.id)
        g = _entropic(caps, log_base)
        f = 1.0 if node.kind is not NodeKind.JUNCTION else adjusted_entropic_degree(g, node.base_demand, max_d)
        raw.append((node, w_sum, g, f))
    f_total = sum(f for node, _, _, f in raw if node.kind is NodeKind.JUNCTION)
    rows = tuple(
        NodeWeight(
            node.id, node.kind, node.base_demand, w_sum, g, f,
            f / f_total if node.kind is NodeKind.JUNCTION and f_total > 0 else 0.0,
        )
        for node, w_sum, g, f in raw
    )
    return NodeWeightTable(rows, max_d, f_total, log_base, tuple(zero_cap), max_d <= 0)


# ---------------------------------------------------------------------------
# ANC terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AncTerm:
    node_id: str
    cs_minus_1: int
    lgd: int
    anc: float


@dataclass(frozen=True)
class AncTermTable:
    rows: tuple[AncTerm, ...]
    singletons: tuple[str, ...] = ()
    per_node_eccentricity: bool = False

    def anc(self) -> dict[str, float]:
        return {r.node_id: r.anc for r in self.rows}

    def __getitem__(self, node_id: str) -> AncTerm:
        for row in self.rows:
            if row.node_id == node_id:
                return row
        raise KeyError(node_id)


def anc_terms(net: Network, *, per_node_eccentricity: bool = False) -> AncTermTable:
    """``(component size - 1) / largest geodesic distance`` for every node.

    The divisor is the diameter of the node's component; with
    ``per_node_eccentricity`` it is the node's own eccentricity instead (an
    alternative reading, off by default). Single-node components get 0 and
    are listed in ``singletons``.
    """
    adj = net.adjacency()
    ids = net.node_ids
    ecc = [max(d for d in _bfs(adj, i)) for i in range(len(adj))]
    rows: list[AncTerm | None] = [None] * len(ids)
    singletons = []
    for comp in components(adj):
        size = len(comp)
        lgd_comp = max(ecc[i] for i in comp)
        for i in comp:
            lgd = ecc[i] if per_node_eccentricity else lgd_comp
            if size == 1:
                singletons.append(ids[i])
                rows[i] = AncTerm(ids[i], 0, 0, 0.0)
            else:
                rows[i] = AncTerm(ids[i], size - 1, lgd, (size - 1) / lgd)
    return AncTermTable(tuple(rows), tuple(singletons), per_node_eccentricity)


# ---------------------------------------------------------------------------
# summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricSummary:
    n_nodes: int
    n_links: int
    n_pipes: int
    k_max: int
    mean_degree: float
    mean_degree_pipes: float
    mean_path_length: float
    clustering_avg: float
    diameter: int
    critical_fraction: float
    fc_mode: str
    betweenness_mean: float
    closeness_mean: float
    connected: bool
    fc_degenerate: bool = False


def metric_summary(
    net: Network,
    fc_mode: Literal["analytic", "empirical"] = "analytic",
    trials: int = 100,
    seed: int = 0,
) -> MetricSummary:
    """All scalar topology metrics in one record.

    Both the all-links and the pipes-only link counts are reported, with the
    matching mean degrees, since conventions differ on which elements count
    as links.
    """
    k_max, mean_k, _ = degree_stats(net)
    dm = shortest_paths(net)
    _, c_avg = clustering(net)
    n = net.n_nodes
    b_mean = sum(betweenness(net).values()) / n if n >= 3 else 0.0
    cl = closeness(net, skip_isolated=True)
    return MetricSummary(
        n_nodes=n,
        n_links=net.n_links,
        n_pipes=net.n_pipes,
        k_max=k_max,
        mean_degree=mean_k,
        mean_degree_pipes=2 * net.n_pipes / n if n else 0.0,
        mean_path_length=dm.mean_path_length,
        clustering_avg=c_avg,
        diameter=dm.diameter,
        critical_fraction=critical_fraction(net, fc_mode, trials, seed),
        fc_mode=fc_mode,
        betweenness_mean=b_mean,
        closeness_mean=sum(cl.values()) / n if n else 0.0,
        connected=dm.connected,
        fc_degenerate=fc_mode == "analytic" and molloy_reed_ratio(net) <= 1,
    )
