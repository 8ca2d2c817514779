"""Graph builders and brute-force oracles shared by the tests.

The oracles deliberately avoid the package's own algorithms: shortest paths
come from enumerating every simple path, placements from enumerating every
subset.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from wdnsense.network import HydraulicSnapshot, Link, LinkKind, Network, Node, NodeKind


def make_net(edges, n=None, *, lengths=None, diameters=None, demands=None, name="test") -> Network:
    ids = sorted({x for e in edges for x in e}, key=str) if n is None else [str(i) for i in range(n)]
    nodes = tuple(Node(str(i), NodeKind.JUNCTION, (demands or {}).get(str(i), 0.0)) for i in ids)
    links = tuple(
        Link(f"P{k}", LinkKind.PIPE, str(a), str(b),
             (lengths or {}).get(k, 100.0), (diameters or {}).get(k, 8.0))
        for k, (a, b) in enumerate(edges)
    )
    return Network(nodes, links, name)


def triangle():
    return make_net([(0, 1), (1, 2), (2, 0)])


def star4():
    return make_net([(0, 1), (0, 2), (0, 3)])


def path(n):
    return make_net([(i, i + 1) for i in range(n - 1)])


def cycle(n):
    return make_net([(i, (i + 1) % n) for i in range(n)])


def triangle_pendant():
    return make_net([(0, 1), (1, 2), (2, 0), (2, 3)])


def snapshot(net: Network, flows: dict[str, float], time: float = 0.0) -> HydraulicSnapshot:
    """Snapshot from signed velocities keyed by link id; unlisted links are still."""
    v = [flows.get(link.id, 0.0) for link in net.links]
    return HydraulicSnapshot(time, tuple(link.id for link in net.links),
                             tuple(abs(x) for x in v), tuple((x > 0) - (x < 0) for x in v))


# -- path-enumeration oracle --------------------------------------------------

def _adj(net: Network) -> dict[str, set[str]]:
    adj = {n.id: set() for n in net.nodes}
    for link in net.links:
        if link.start != link.end:
            adj[link.start].add(link.end)
            adj[link.end].add(link.start)
    return adj


def _paths_of_length(adj, s, t, length):
    out = []

    def walk(u, trail):
        if len(trail) - 1 == length:
            if u == t:
                out.append(list(trail))
            return
        for v in adj[u]:
            if v not in trail:
                trail.append(v)
                walk(v, trail)
                trail.pop()

    walk(s, [s])
    return out


def oracle_geodesics(net: Network):
    """For each ordered pair: (distance or None, list of shortest paths).

    Simple paths are enumerated one length at a time; the first length with
    any path is the distance.
    """
    adj = _adj(net)
    ids = [n.id for n in net.nodes]
    out = {}
    for s, t in itertools.permutations(ids, 2):
        out[s, t] = (None, [])
        for length in range(1, len(ids)):
            paths = _paths_of_length(adj, s, t, length)
            if paths:
                out[s, t] = (length, paths)
                break
    return out


def oracle_betweenness(net: Network, geo=None) -> dict[str, Fraction]:
    ids = [n.id for n in net.nodes]
    n = len(ids)
    geo = geo or oracle_geodesics(net)
    out = {}
    for i in ids:
        total = Fraction(0)
        for (s, t), (_, paths) in geo.items():
            if i in (s, t) or not paths:
                continue
            total += Fraction(sum(i in p for p in paths), len(paths))
        out[i] = total / ((n - 1) * (n - 2))
    return out


def oracle_closeness(net: Network, geo=None) -> dict[str, Fraction]:
    ids = [n.id for n in net.nodes]
    geo = geo or oracle_geodesics(net)
    out = {}
    for i in ids:
        ds = [geo[i, j][0] for j in ids if j != i and geo[i, j][0] is not None]
        out[i] = Fraction(len(ds), sum(ds)) if ds else None
    return out


def oracle_clustering(net: Network) -> dict[str, Fraction]:
    adj = _adj(net)
    out = {}
    for i, nbrs in adj.items():
        k = len(nbrs)
        if k < 2:
            out[i] = Fraction(0)
            continue
        tri = sum(1 for a, b in itertools.combinations(sorted(nbrs), 2) if b in adj[a])
        out[i] = Fraction(2 * tri, k * (k - 1))
    return out


# -- placement oracle ---------------------------------------------------------

def oracle_placements(covers: np.ndarray, ids, f_norm, anc, p, w, candidates=None):
    """Every p-subset scored from first principles; returns the sorted list of
    (scalar, sorted ids, f1, f2)."""
    n = len(ids)
    cand = sorted(candidates if candidates is not None else ids)
    pos = {x: k for k, x in enumerate(ids)}
    scored = []
    for combo in itertools.combinations(cand, p):
        uncovered = 0
        for i in range(n):
            for s in range(covers.shape[2]):
                if not any(covers[i, pos[j], s] for j in combo):
                    uncovered += 1
        f1 = uncovered / (n * (n - 1))
        f2 = math.fsum(f_norm[j] * anc[j] for j in combo)
        scored.append((w * f1 - (1 - w) * f2, tuple(combo), f1, f2))
    scored.sort()
    return scored
