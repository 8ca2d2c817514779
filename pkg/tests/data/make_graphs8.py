"""Regenerate graphs8.g6: one graph per isomorphism class on 8 nodes.

Every 8-node graph minus one node is a 7-node graph, so extending each
7-node atlas graph by a node joined to every subset of the others reaches
all classes; duplicates are dropped with an exact isomorphism test.

    python3 tests/data/make_graphs8.py > tests/data/graphs8.g6
"""

import sys

import networkx as nx


def invariant(g):
    return tuple(sorted((g.degree(v), nx.triangles(g, v), tuple(sorted(g.degree(u) for u in g[v]))) for v in g))


def main():
    buckets = {}
    for base in nx.graph_atlas_g():
        if base.number_of_nodes() != 7:
            continue
        for mask in range(1 << 7):
            g = base.copy()
            g.add_node(7)
            g.add_edges_from((7, k) for k in range(7) if mask >> k & 1)
            seen = buckets.setdefault(invariant(g), [])
            if not any(nx.is_isomorphic(g, h) for h in seen):
                seen.append(g)
                sys.stdout.write(nx.to_graph6_bytes(g, header=False).decode())


if __name__ == "__main__":
    main()
