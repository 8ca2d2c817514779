import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_net, star4, triangle
from wdnsense.errors import (
    DanglingEndpoint,
    DuplicateId,
    MalformedSection,
    MissingLink,
    NonmonotoneTime,
    SchemaViolation,
    UnknownLink,
)
from wdnsense.network import (
    HydraulicSeries,
    LinkKind,
    Network,
    NodeKind,
    ingest_hydraulics,
    load_network,
    parse_inp,
    parse_native,
    serialize_native,
    validate,
    write_hydraulics,
)

MINIMAL_INP = """\
[JUNCTIONS]
;ID  Elev  Demand
 6    700   1.85
 7    690   0
[PIPES]
 LINK-8  6  7  502  8  100  0  Open
[END]
"""


class TestParseInp:
    def test_minimal(self):
        net = parse_inp(MINIMAL_INP)
        assert (net.n_nodes, net.n_links) == (2, 1)
        link = net.link("LINK-8")
        assert (link.start, link.end, link.length, link.diameter) == ("6", "7", 502.0, 8.0)
        assert net.node("6").base_demand == 1.85

    def test_dangling_endpoint(self):
        text = MINIMAL_INP.replace("LINK-8  6  7", "LINK-8  6  X")
        with pytest.raises(DanglingEndpoint):
            parse_inp(text)

    def test_duplicate_node(self):
        with pytest.raises(DuplicateId):
            parse_inp(MINIMAL_INP.replace(" 7    690", " 6    690"))

    def test_duplicate_link(self):
        text = MINIMAL_INP.replace("[END]", "") + " LINK-8  7  6  10  8\n"
        with pytest.raises(DuplicateId):
            parse_inp(text)

    @pytest.mark.parametrize("bad", ["LINK-8  6  7  abc  8", "LINK-8  6  7", "LINK-8  6  7  0  8"])
    def test_malformed_rows(self, bad):
        with pytest.raises(MalformedSection):
            parse_inp(MINIMAL_INP.replace("LINK-8  6  7  502  8  100  0  Open", bad))

    def test_requires_junctions_and_pipes(self):
        with pytest.raises(MalformedSection):
            parse_inp("[JUNCTIONS]\n 1 0 0\n")

    def test_self_loop_rejected_unless_allowed(self):
        text = MINIMAL_INP.replace("LINK-8  6  7", "LINK-8  6  6")
        with pytest.raises(MalformedSection):
            parse_inp(text)
        assert parse_inp(text, allow_self_loops=True).n_links == 1

    def test_unknown_section_warns(self):
        with pytest.warns(UserWarning, match="OPTIONS"):
            parse_inp(MINIMAL_INP + "[OPTIONS]\n Units GPM\n")

    def test_demands_section_overrides(self):
        text = MINIMAL_INP.replace("[END]", "[DEMANDS]\n 7 3.0 pat\n 7 0.5\n")
        net = parse_inp(text)
        assert net.node("7").base_demand == 3.5
        assert net.node("6").base_demand == 1.85

    def test_pumps_valves_coords(self):
        text = MINIMAL_INP.replace("[END]", """\
[RESERVOIRS]
 R1 800
[TANKS]
 T1 850 120 100 150 50.5 0
[PUMPS]
 PUMP-1 R1 6 HEAD 1
[VALVES]
 VALVE-1 7 T1 6 PRV 50 0
[COORDINATES]
 6 1.5 2.5
""")
        net = parse_inp(text)
        assert net.node("R1").kind is NodeKind.RESERVOIR
        assert net.node("T1").kind is NodeKind.TANK
        pump, valve = net.link("PUMP-1"), net.link("VALVE-1")
        assert pump.kind is LinkKind.PUMP and pump.length is None and pump.diameter is None
        assert valve.kind is LinkKind.VALVE and valve.length is None and valve.diameter == 6.0
        assert net.node("6").coord == (1.5, 2.5)
        assert net.node("7").coord is None

    def test_epanet_net1(self, data_dir):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            net = load_network(str(data_dir / "Net1.inp"))
        assert net.n_nodes == 11
        assert (net.n_pipes, net.n_links) == (12, 13)
        assert net.node("9").kind is NodeKind.RESERVOIR
        assert net.node("2").kind is NodeKind.TANK
        assert net.link("10").length == 10530.0
        assert validate(net).connected

    def test_lengths_preserved_verbatim(self):
        text = MINIMAL_INP.replace("502  8", "7401  20.453411")
        link = parse_inp(text).link("LINK-8")
        assert repr(link.length) == "7401.0"
        assert repr(link.diameter) == "20.453411"


class TestNative:
    def test_round_trip(self):
        net = parse_inp(MINIMAL_INP)
        assert parse_native(serialize_native(net)) == net

    def test_round_trip_fixture(self, data_dir):
        net = load_network(str(data_dir / "six.net"))
        assert serialize_native(net) == (data_dir / "six.net").read_text()
        assert parse_native(serialize_native(net)) == net

    def test_triangle_counts(self):
        text = "wdn-net v1\n" + "".join(f"node {c} junction 0\n" for c in "abc") + \
            "link 1 pipe a b len=1 dia=1\nlink 2 pipe b c len=1 dia=1\nlink 3 pipe c a len=1 dia=1\n"
        net = parse_native(text)
        assert (net.n_nodes, net.n_links) == (3, 3)

    def test_pipe_without_length(self):
        text = "wdn-net v1\nnode a junction 0\nnode b junction 0\nlink P1 pipe a b dia=8\n"
        with pytest.raises(SchemaViolation) as info:
            parse_native(text)
        assert info.value.path == "line 4: link P1: len"

    @pytest.mark.parametrize("line, field", [
        ("node a pond 0", "kind"),
        ("node a junction lots", "demand"),
        ("link P1 pump a b len=3", "len"),
        ("link P1 pump a b dia=3", "dia"),
        ("link P1 pipe a b len=1 dia=1 foo=2", "foo=2"),
    ])
    def test_schema_paths(self, line, field):
        text = "wdn-net v1\nnode b junction 0\n" + line + "\n"
        if line.startswith("link"):
            text = "wdn-net v1\nnode a junction 0\nnode b junction 0\n" + line + "\n"
        with pytest.raises(SchemaViolation) as info:
            parse_native(text)
        assert info.value.path.endswith(field)

    def test_missing_header(self):
        with pytest.raises(SchemaViolation):
            parse_native("node a junction 0\n")

    def test_tank_cannot_have_demand(self):
        with pytest.raises(SchemaViolation):
            parse_native("wdn-net v1\nnode t tank 5\n")


ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-_", min_size=1, max_size=6)
finite = st.floats(min_value=1e-3, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def networks(draw):
    node_ids = draw(st.lists(ids, min_size=2, max_size=8, unique=True))
    kinds = [draw(st.sampled_from(list(NodeKind))) for _ in node_ids]
    from wdnsense.network import Link, Node

    nodes = [
        Node(i, k, draw(finite) if k is NodeKind.JUNCTION and draw(st.booleans()) else 0.0,
             (draw(finite), draw(finite)) if draw(st.booleans()) else None)
        for i, k in zip(node_ids, kinds)
    ]
    n_links = draw(st.integers(0, 10))
    links = []
    for k in range(n_links):
        a, b = draw(st.lists(st.sampled_from(node_ids), min_size=2, max_size=2, unique=True))
        kind = draw(st.sampled_from(list(LinkKind)))
        length = draw(finite) if kind is LinkKind.PIPE else None
        dia = draw(finite) if kind is LinkKind.PIPE or (kind is LinkKind.VALVE and draw(st.booleans())) else None
        links.append(Link(f"L{k}", kind, a, b, length, dia))
    return Network(tuple(nodes), tuple(links), "")


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(networks())
    def test_native_round_trip(self, net):
        assert parse_native(serialize_native(net)) == net

    @settings(max_examples=100, deadline=None)
    @given(networks())
    def test_adjacency_symmetric(self, net):
        adj = net.adjacency()
        for u, nbrs in enumerate(adj):
            for v in nbrs:
                assert u in adj[v]


class TestHydraulics:
    def test_link_excerpt(self, data_dir):
        net = load_network(str(data_dir / "link_sample.net"))
        series = ingest_hydraulics((data_dir / "link_sample.csv").read_text(), net)
        assert len(series) == 1
        snap = series.snapshots[0]
        assert snap.record("LINK-8") == (0.0, 0)
        assert snap.record("LINK-7") == (0.49, 1)
        assert snap.record("PUMP-170") == (0.0, 0)

    def test_two_snapshots(self):
        net = make_net([(0, 1)])
        text = "link_id,time_s,velocity_ftps,flow_sign\nP0,0,1.0,1\nP0,300,0.5,-1\n"
        series = ingest_hydraulics(text, net)
        assert isinstance(series, HydraulicSeries)
        assert series.times == [0.0, 300.0]
        assert series.snapshots[1].record("P0") == (0.5, -1)

    def test_wide_format_signed(self):
        net = make_net([(0, 1), (1, 2)])
        text = "link_id\tv@0\tv@3600\nP0\t1.5\t-0.5\nP1\t0\t2\n"
        series = ingest_hydraulics(text, net)
        assert series.snapshots[0].flow_sign == (1, 0)
        assert series.snapshots[1].record("P0") == (0.5, -1)

    def test_missing_link(self):
        net = make_net([(0, 1), (1, 2)])
        with pytest.raises(MissingLink):
            ingest_hydraulics("link_id,time_s,velocity_ftps,flow_sign\nP0,0,1,1\n", net)

    def test_missing_one_of_many(self):
        edges = [(i, i + 1) for i in range(168)]
        net = make_net(edges)
        rows = "".join(f"P{k},0,1,1\n" for k in range(167))
        with pytest.raises(MissingLink):
            ingest_hydraulics("link_id,time_s,velocity_ftps,flow_sign\n" + rows, net)

    def test_unknown_link(self):
        net = make_net([(0, 1)])
        with pytest.raises(UnknownLink):
            ingest_hydraulics("link_id,time_s,velocity_ftps,flow_sign\nP0,0,1,1\nZZ,0,1,1\n", net)

    def test_nonmonotone_time(self):
        net = make_net([(0, 1)])
        with pytest.raises(NonmonotoneTime):
            ingest_hydraulics("link_id,time_s,velocity_ftps,flow_sign\nP0,300,1,1\nP0,0,1,1\n", net)

    def test_sign_velocity_consistency(self):
        net = make_net([(0, 1)])
        with pytest.raises(MalformedSection):
            ingest_hydraulics("link_id,time_s,velocity_ftps,flow_sign\nP0,0,0,1\n", net)

    def test_write_round_trip(self, data_dir):
        net = load_network(str(data_dir / "six.net"))
        series = ingest_hydraulics((data_dir / "six_hyd.csv").read_text(), net)
        assert ingest_hydraulics(write_hydraulics(series), net) == series


class TestValidate:
    def test_triangle(self):
        report = validate(triangle())
        assert report.connected and report.isolated == ()

    def test_two_disjoint_edges(self):
        report = validate(make_net([(0, 1), (2, 3)]))
        assert not report.connected
        assert report.n_components == 2

    def test_star_histogram(self):
        assert validate(star4()).degree_histogram == {1: 3, 3: 1}

    def test_isolated_and_parallel(self):
        net = make_net([(0, 1), (1, 0)], n=3)
        report = validate(net)
        assert report.isolated == ("2",)
        assert report.parallel_links == (("P0", "P1"),)
        assert report.n_links == 2

    def test_does_not_mutate(self):
        net = triangle()
        before = serialize_native(net)
        validate(net)
        assert serialize_native(net) == before
