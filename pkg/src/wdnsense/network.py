"""Network data model, file parsers and structural validation.

Lengths are kept in feet and diameters in inches exactly as they appear in
the input file. Nothing is converted: capacity weights downstream are
computed in these mixed units.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    DanglingEndpoint,
    DuplicateId,
    MalformedSection,
    MissingLink,
    NonmonotoneTime,
    SchemaViolation,
    UnknownLink,
    UnknownNode,
)

NATIVE_HEADER = "wdn-net v1"
HYDRAULICS_HEADER = ("link_id", "time_s", "velocity_ftps", "flow_sign")
NA = "#N/A"


class NodeKind(str, enum.Enum):
    JUNCTION = "junction"
    RESERVOIR = "reservoir"
    TANK = "tank"


class LinkKind(str, enum.Enum):
    PIPE = "pipe"
    PUMP = "pump"
    VALVE = "valve"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    base_demand: float = 0.0
    coord: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be nonempty")
        if self.kind is not NodeKind.JUNCTION and self.base_demand != 0.0:
            raise ValueError(f"{self.kind.value} {self.id} cannot carry a base demand")
        if self.base_demand < 0:
            raise ValueError(f"junction {self.id} has negative base demand")


@dataclass(frozen=True)
class Link:
    id: str
    kind: LinkKind
    start: str
    end: str
    length: float | None = None  # ft
    diameter: float | None = None  # in

    def __post_init__(self):
        if not self.id:
            raise ValueError("link id must be nonempty")
        if self.length is not None and not self.length > 0:
            raise ValueError(f"link {self.id}: length must be positive")
        if self.diameter is not None and not self.diameter > 0:
            raise ValueError(f"link {self.id}: diameter must be positive")

    @property
    def is_pipe(self) -> bool:
        return self.kind is LinkKind.PIPE


@dataclass(frozen=True)
class Network:
    """Undirected multigraph of nodes and links. Immutable once built."""

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    name: str = ""
    allow_self_loops: bool = field(default=False, compare=False)
    _node_index: Mapping[str, int] = field(init=False, repr=False, compare=False)
    _link_index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        node_index: dict[str, int] = {}
        for i, node in enumerate(self.nodes):
            if node.id in node_index:
                raise DuplicateId(f"duplicate node id {node.id!r}")
            node_index[node.id] = i
        link_index: dict[str, int] = {}
        for i, link in enumerate(self.links):
            if link.id in link_index:
                raise DuplicateId(f"duplicate link id {link.id!r}")
            for end in (link.start, link.end):
                if end not in node_index:
                    raise DanglingEndpoint(f"link {link.id!r} references unknown node {end!r}")
            if link.start == link.end and not self.allow_self_loops:
                raise MalformedSection(f"link {link.id!r} is a self-loop on {link.start!r}")
            link_index[link.id] = i
        object.__setattr__(self, "_node_index", node_index)
        object.__setattr__(self, "_link_index", link_index)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_pipes(self) -> int:
        return sum(link.is_pipe for link in self.links)

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def index(self, node_id: str) -> int:
        try:
            return self._node_index[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def node(self, node_id: str) -> Node:
        return self.nodes[self.index(node_id)]

    def link(self, link_id: str) -> Link:
        try:
            return self.links[self._link_index[link_id]]
        except KeyError:
            raise UnknownLink(f"unknown link {link_id!r}") from None

    def link_position(self, link_id: str) -> int:
        try:
            return self._link_index[link_id]
        except KeyError:
            raise UnknownLink(f"unknown link {link_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_index

    def has_link(self, link_id: str) -> bool:
        return link_id in self._link_index

    def incident(self) -> list[list[int]]:
        """Link positions incident to each node, in node order."""
        out: list[list[int]] = [[] for _ in self.nodes]
        for li, link in enumerate(self.links):
            out[self._node_index[link.start]].append(li)
            if link.end != link.start:
                out[self._node_index[link.end]].append(li)
        return out

    def adjacency(self) -> list[set[int]]:
        """Simple undirected projection: neighbour index sets, no self-loops."""
        adj: list[set[int]] = [set() for _ in self.nodes]
        for link in self.links:
            a, b = self._node_index[link.start], self._node_index[link.end]
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
        return adj


# ---------------------------------------------------------------------------
# simulator input format
# ---------------------------------------------------------------------------

_KNOWN_SECTIONS = {
    "TITLE", "JUNCTIONS", "RESERVOIRS", "TANKS", "PIPES", "PUMPS",
    "VALVES", "COORDINATES", "DEMANDS", "END",
}


def _sections(text: str) -> dict[str, list[tuple[int, list[str]]]]:
    sections: dict[str, list[tuple[int, list[str]]]] = defaultdict(list)
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise MalformedSection(f"line {lineno}: bad section header {raw.strip()!r}")
            current = line[1:-1].strip().upper()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise MalformedSection(f"line {lineno}: data before any section header")
        if current == "TITLE":
            sections[current].append((lineno, [line]))
        else:
            sections[current].append((lineno, line.split()))
    return sections


def _num(tok: str, lineno: int, what: str) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise MalformedSection(f"line {lineno}: {what} {tok!r} is not a number") from None
    if not math.isfinite(value):
        raise MalformedSection(f"line {lineno}: {what} must be finite")
    return value


def _need(row: list[str], n: int, lineno: int, section: str) -> None:
    if len(row) < n:
        raise MalformedSection(f"line {lineno}: [{section}] row needs at least {n} columns")


def parse_inp(text: str, *, allow_self_loops: bool = False) -> Network:
    """Parse the supported subset of an EPANET-style ``.inp`` file.

    Supported sections are JUNCTIONS, RESERVOIRS, TANKS, PIPES, PUMPS, VALVES,
    COORDINATES and DEMANDS (TITLE supplies the network name). Any other
    section is skipped and reported through a single ``UserWarning``.
    """
    sections = _sections(text)
    for required in ("JUNCTIONS", "PIPES"):
        if required not in sections:
            raise MalformedSection(f"missing required [{required}] section")
    skipped = [s for s in sections if s not in _KNOWN_SECTIONS]
    if skipped:
        warnings.warn(f"skipped unsupported sections: {', '.join(skipped)}", UserWarning, stacklevel=2)

    kinds: dict[str, NodeKind] = {}
    demand: dict[str, float] = {}
    order: list[str] = []

    def declare(node_id: str, kind: NodeKind, lineno: int) -> None:
        if node_id in kinds:
            raise DuplicateId(f"line {lineno}: duplicate node id {node_id!r}")
        kinds[node_id] = kind
        demand[node_id] = 0.0
        order.append(node_id)

    for lineno, row in sections.get("JUNCTIONS", []):
        _need(row, 2, lineno, "JUNCTIONS")
        declare(row[0], NodeKind.JUNCTION, lineno)
        _num(row[1], lineno, "elevation")
        if len(row) >= 3:
            d = _num(row[2], lineno, "demand")
            if d < 0:
                raise MalformedSection(f"line {lineno}: negative demand at {row[0]!r}")
            demand[row[0]] = d
    for lineno, row in sections.get("RESERVOIRS", []):
        _need(row, 2, lineno, "RESERVOIRS")
        declare(row[0], NodeKind.RESERVOIR, lineno)
        _num(row[1], lineno, "head")
    for lineno, row in sections.get("TANKS", []):
        _need(row, 2, lineno, "TANKS")
        declare(row[0], NodeKind.TANK, lineno)
        _num(row[1], lineno, "elevation")

    # [DEMANDS] replaces the junction's own demand; categories add up
    category_demand: dict[str, float] = defaultdict(float)
    for lineno, row in sections.get("DEMANDS", []):
        _need(row, 2, lineno, "DEMANDS")
        if kinds.get(row[0]) is not NodeKind.JUNCTION:
            raise DanglingEndpoint(f"line {lineno}: demand for unknown junction {row[0]!r}")
        d = _num(row[1], lineno, "demand")
        if d < 0:
            raise MalformedSection(f"line {lineno}: negative demand at {row[0]!r}")
        category_demand[row[0]] += d
    demand.update(category_demand)

    coords: dict[str, tuple[float, float]] = {}
    for lineno, row in sections.get("COORDINATES", []):
        _need(row, 3, lineno, "COORDINATES")
        if row[0] not in kinds:
            raise DanglingEndpoint(f"line {lineno}: coordinates for unknown node {row[0]!r}")
        coords[row[0]] = (_num(row[1], lineno, "x"), _num(row[2], lineno, "y"))

    links: list[Link] = []
    seen_links: set[str] = set()

    def add_link(lineno: int, row: list[str], kind: LinkKind, length=None, diameter=None) -> None:
        if row[0] in seen_links:
            raise DuplicateId(f"line {lineno}: duplicate link id {row[0]!r}")
        for end in row[1:3]:
            if end not in kinds:
                raise DanglingEndpoint(f"line {lineno}: link {row[0]!r} references unknown node {end!r}")
        if row[1] == row[2] and not allow_self_loops:
            raise MalformedSection(f"line {lineno}: link {row[0]!r} is a self-loop")
        try:
            links.append(Link(row[0], kind, row[1], row[2], length, diameter))
        except ValueError as exc:
            raise MalformedSection(f"line {lineno}: {exc}") from None
        seen_links.add(row[0])

    for lineno, row in sections.get("PIPES", []):
        _need(row, 5, lineno, "PIPES")
        add_link(lineno, row, LinkKind.PIPE,
                 _num(row[3], lineno, "length"), _num(row[4], lineno, "diameter"))
    for lineno, row in sections.get("PUMPS", []):
        _need(row, 3, lineno, "PUMPS")
        add_link(lineno, row, LinkKind.PUMP)
    for lineno, row in sections.get("VALVES", []):
        _need(row, 4, lineno, "VALVES")
        add_link(lineno, row, LinkKind.VALVE, None, _num(row[3], lineno, "diameter"))

    title = sections.get("TITLE", [])
    name = title[0][1][0] if title else ""
    nodes = tuple(Node(i, kinds[i], demand[i], coords.get(i)) for i in order)
    return Network(nodes, tuple(links), name, allow_self_loops=allow_self_loops)


# ---------------------------------------------------------------------------
# native line format
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_native(net: Network) -> str:
    lines = [NATIVE_HEADER]
    if net.name:
        lines.append(f"name {net.name}")
    for n in net.nodes:
        rec = f"node {n.id} {n.kind.value} {_fmt(n.base_demand)}"
        if n.coord is not None:
            rec += f" {_fmt(n.coord[0])} {_fmt(n.coord[1])}"
        lines.append(rec)
    for link in net.links:
        rec = f"link {link.id} {link.kind.value} {link.start} {link.end}"
        if link.length is not None:
            rec += f" len={_fmt(link.length)}"
        if link.diameter is not None:
            rec += f" dia={_fmt(link.diameter)}"
        lines.append(rec)
    return "\n".join(lines) + "\n"


def _native_float(tok: str, path: str) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise SchemaViolation(path, f"{tok!r} is not a number") from None
    if not math.isfinite(value):
        raise SchemaViolation(path, "must be finite")
    return value


def parse_native(text: str, *, allow_self_loops: bool = False) -> Network:
    """Parse the ``wdn-net v1`` line format written by :func:`serialize_native`.

    Blank lines and lines starting with ``#`` are ignored.
    """
    rows = [
        (lineno, raw.strip())
        for lineno, raw in enumerate(text.splitlines(), start=1)
        if raw.strip() and not raw.strip().startswith("#")
    ]
    if not rows or rows[0][1] != NATIVE_HEADER:
        raise SchemaViolation("line 1", f"expected header {NATIVE_HEADER!r}")
    name = ""
    nodes: list[Node] = []
    links: list[Link] = []
    for lineno, line in rows[1:]:
        tokens = line.split()
        where = f"line {lineno}"
        if tokens[0] == "name":
            name = line[len("name"):].strip()
        elif tokens[0] == "node":
            if len(tokens) not in (4, 6):
                raise SchemaViolation(where, "node needs <id> <kind> <demand> [<x> <y>]")
            _, nid, kind, dem, *xy = tokens
            where = f"{where}: node {nid}"
            try:
                nkind = NodeKind(kind)
            except ValueError:
                raise SchemaViolation(f"{where}: kind", f"unknown node kind {kind!r}") from None
            d = _native_float(dem, f"{where}: demand")
            coord = None
            if xy:
                coord = (_native_float(xy[0], f"{where}: x"), _native_float(xy[1], f"{where}: y"))
            try:
                nodes.append(Node(nid, nkind, d, coord))
            except ValueError as exc:
                raise SchemaViolation(f"{where}: demand", str(exc)) from None
        elif tokens[0] == "link":
            if len(tokens) < 5:
                raise SchemaViolation(where, "link needs <id> <kind> <from> <to>")
            _, lid, kind, start, end, *attrs = tokens
            where = f"{where}: link {lid}"
            try:
                lkind = LinkKind(kind)
            except ValueError:
                raise SchemaViolation(f"{where}: kind", f"unknown link kind {kind!r}") from None
            values: dict[str, float] = {}
            for attr in attrs:
                key, sep, val = attr.partition("=")
                if not sep or key not in ("len", "dia") or key in values:
                    raise SchemaViolation(f"{where}: {attr}", "expected len=<ft> or dia=<in>")
                values[key] = _native_float(val, f"{where}: {key}")
            if lkind is LinkKind.PIPE:
                for key in ("len", "dia"):
                    if key not in values:
                        raise SchemaViolation(f"{where}: {key}", "required on a pipe")
            elif "len" in values:
                raise SchemaViolation(f"{where}: len", f"not allowed on a {lkind.value}")
            elif lkind is LinkKind.PUMP and "dia" in values:
                raise SchemaViolation(f"{where}: dia", "not allowed on a pump")
            try:
                links.append(Link(lid, lkind, start, end, values.get("len"), values.get("dia")))
            except ValueError as exc:
                raise SchemaViolation(where, str(exc)) from None
        else:
            raise SchemaViolation(where, f"unknown record type {tokens[0]!r}")
    return Network(tuple(nodes), tuple(links), name, allow_self_loops=allow_self_loops)


def load_network(path: str) -> Network:
    """Read a network file, choosing the parser from its content."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    first = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if first == NATIVE_HEADER:
        return parse_native(text)
    return parse_inp(text)


# ---------------------------------------------------------------------------
# hydraulic results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HydraulicSnapshot:
    """Link velocities (ft/s) and flow signs at one time, in network link order."""

    time: float
    link_ids: tuple[str, ...]
    velocity: tuple[float, ...]
    flow_sign: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.link_ids) == len(self.velocity) == len(self.flow_sign)):
            raise ValueError("snapshot columns differ in length")
        for lid, v, s in zip(self.link_ids, self.velocity, self.flow_sign):
            if v < 0 or s not in (-1, 0, 1) or (s == 0) != (v == 0):
                raise ValueError(f"link {lid}: inconsistent velocity {v} / flow sign {s}")

    def record(self, link_id: str) -> tuple[float, int]:
        i = self.link_ids.index(link_id)
        return self.velocity[i], self.flow_sign[i]


@dataclass(frozen=True)
class HydraulicSeries:
    snapshots: tuple[HydraulicSnapshot, ...]

    def __post_init__(self):
        times = [s.time for s in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise NonmonotoneTime("snapshot times must be strictly increasing")
        if len({s.link_ids for s in self.snapshots}) > 1:
            raise ValueError("snapshots cover different link sets")

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def times(self) -> list[float]:
        return [s.time for s in self.snapshots]


def _parse_cell(tok: str, what: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MalformedSection(f"row {lineno}: {what} {tok!r} is not a number") from None


def _sign_of(v: float) -> int:
    return (v > 0) - (v < 0)


def ingest_hydraulics(text: str, net: Network) -> HydraulicSeries:
    """Read a hydraulic result table and align it to ``net``'s links.

    Two layouts are accepted, comma or tab delimited:

    * long: header ``link_id,time_s,velocity_ftps,flow_sign`` (extra
      auxiliary columns such as start node or ``#N/A`` lengths are ignored),
      one row per link and time step;
    * wide: a ``link_id`` column plus one ``v@<seconds>`` column per time
      step holding the signed velocity relative to the link's orientation.
    """
    dialect = "excel-tab" if "\t" in text.split("\n", 1)[0] else "excel"
    reader = csv.reader(io.StringIO(text), dialect=dialect)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedSection("empty hydraulic table") from None
    body = [(n, [c.strip() for c in row]) for n, row in enumerate(reader, start=2) if any(c.strip() for c in row)]
    col = {h: i for i, h in enumerate(header)}
    if "link_id" not in col:
        raise MalformedSection("hydraulic table needs a link_id column")

    table: dict[float, dict[str, tuple[float, int]]] = {}
    if all(h in col for h in HYDRAULICS_HEADER):
        last_time = None
        for lineno, row in body:
            if len(row) < len(header):
                raise MalformedSection(f"row {lineno}: expected {len(header)} cells")
            lid = row[col["link_id"]]
            t = _parse_cell(row[col["time_s"]], "time", lineno)
            v = _parse_cell(row[col["velocity_ftps"]], "velocity", lineno)
            s = int(_parse_cell(row[col["flow_sign"]], "flow sign", lineno))
            if last_time is not None and t < last_time:
                raise NonmonotoneTime(f"row {lineno}: time {t} precedes {last_time}")
            last_time = t
            _store(table, t, lid, abs(v), s, net, lineno)
    else:
        vcols = [(h, i) for h, i in col.items() if h.startswith("v@")]
        if not vcols:
            raise MalformedSection("hydraulic table has neither long-format columns nor v@<seconds> columns")
        times = []
        for h, i in vcols:
            t = _parse_cell(h[2:], "time header", 1)
            times.append((t, i))
        if any(b[0] <= a[0] for a, b in zip(times, times[1:])):
            raise NonmonotoneTime("v@<seconds> columns must have increasing times")
        for lineno, row in body:
            if len(row) < len(header):
                raise MalformedSection(f"row {lineno}: expected {len(header)} cells")
            lid = row[col["link_id"]]
            for t, i in times:
                v = _parse_cell(row[i], "velocity", lineno)
                _store(table, t, lid, abs(v), _sign_of(v), net, lineno)

    snapshots = []
    ids = tuple(link.id for link in net.links)
    for t in sorted(table):
        recs = table[t]
        missing = [lid for lid in ids if lid not in recs]
        if missing:
            raise MissingLink(f"time {t}: no record for link(s) {', '.join(missing[:5])}")
        try:
            snapshots.append(HydraulicSnapshot(
                t, ids, tuple(recs[i][0] for i in ids), tuple(recs[i][1] for i in ids)))
        except ValueError as exc:
            raise MalformedSection(f"time {t}: {exc}") from None
    if not snapshots:
        raise MissingLink("hydraulic table has no rows")
    return HydraulicSeries(tuple(snapshots))


def _store(table, t, lid, v, s, net: Network, lineno: int) -> None:
    if not net.has_link(lid):
        raise UnknownLink(f"row {lineno}: link {lid!r} is not in the network")
    if t < 0:
        raise MalformedSection(f"row {lineno}: negative time")
    if s not in (-1, 0, 1) or (s == 0) != (v == 0):
        raise MalformedSection(f"row {lineno}: link {lid}: velocity {v} inconsistent with flow sign {s}")
    recs = table.setdefault(t, {})
    if lid in recs:
        raise DuplicateId(f"row {lineno}: link {lid!r} repeated at time {t}")
    recs[lid] = (v, s)


def write_hydraulics(series: HydraulicSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HYDRAULICS_HEADER)
    for snap in series.snapshots:
        for lid, v, s in zip(snap.link_ids, snap.velocity, snap.flow_sign):
            w.writerow([lid, _fmt(snap.time), _fmt(v), s])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    connected: bool
    components: tuple[tuple[str, ...], ...]
    isolated: tuple[str, ...]
    parallel_links: tuple[tuple[str, ...], ...]
    self_loops: tuple[str, ...]
    degree_histogram: dict[int, int]
    n_nodes: int
    n_links: int
    n_pipes: int

    @property
    def n_components(self) -> int:
        return len(self.components)


def components(adj: Sequence[Iterable[int]]) -> list[list[int]]:
    """Connected components as sorted index lists, ordered by smallest member."""
    seen = [False] * len(adj)
    out = []
    for root in range(len(adj)):
        if seen[root]:
            continue
        seen[root] = True
        comp, stack = [root], [root]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        out.append(sorted(comp))
    return out


def validate(net: Network) -> ValidationReport:
    """Structural report on ``net``; never raises and never mutates."""
    ids = net.node_ids
    comps = components(net.adjacency())
    degree = Counter()
    for link in net.links:
        degree[link.start] += 1
        degree[link.end] += 1
    by_pair: dict[frozenset, list[str]] = defaultdict(list)
    for link in net.links:
        if link.start != link.end:
            by_pair[frozenset((link.start, link.end))].append(link.id)
    return ValidationReport(
        connected=len(comps) <= 1,
        components=tuple(tuple(ids[i] for i in c) for c in comps),
        isolated=tuple(n.id for n in net.nodes if degree[n.id] == 0),
        parallel_links=tuple(tuple(g) for g in by_pair.values() if len(g) > 1),
        self_loops=tuple(link.id for link in net.links if link.start == link.end),
        degree_histogram=dict(sorted(Counter(degree[i] for i in ids).items())),
        n_nodes=net.n_nodes,
        n_links=net.n_links,
        n_pipes=net.n_pipes,
    )
