import json
import random
from datetime import date

import numpy as np
import pydot
import pytest

from mobiflow.errors import UnknownWeekError
from mobiflow.ingest import FlowRecord, GeoPoint, WeeklyFlowTable
from mobiflow.network import build_week_network, edge_threshold_subgraph, to_dot, to_geojson
from mobiflow.synth import gen_planted_flow_network

W = date(2020, 3, 2)
CENTS = {"a": GeoPoint(40.0, -75.0), "b": GeoPoint(41.0, -80.0), "c": GeoPoint(35.0, -90.0)}


def table(rows, week=W):
    recs = [FlowRecord(week, o, d, float(v), float(v) * 2) for o, d, v in rows]
    return WeeklyFlowTable(tuple(recs), CENTS)


def test_symmetrised_weight():
    g = build_week_network(table([("a", "b", 3), ("b", "a", 5)]), W)
    assert g.edges == {("a", "b"): 8.0}


def test_self_loop_goes_to_total_flow():
    g = build_week_network(table([("a", "a", 100)]), W)
    assert g.nodes == ("a",)
    assert g.edges == {}
    assert g.total_flow["a"] >= 100


def test_three_region_hand_sums():
    rows = [("a", "b", 1), ("b", "a", 2), ("a", "c", 4), ("c", "a", 8), ("b", "c", 16), ("c", "b", 32)]
    g = build_week_network(table(rows), W)
    assert g.edges == {("a", "b"): 3.0, ("a", "c"): 12.0, ("b", "c"): 48.0}
    assert g.total_flow == {"a": 5.0, "b": 18.0, "c": 40.0}


def test_population_kind():
    g = build_week_network(table([("a", "b", 3), ("b", "a", 5)]), W, "population")
    assert g.edges == {("a", "b"): 16.0}


def test_errors():
    t = table([("a", "b", 3)])
    with pytest.raises(UnknownWeekError):
        build_week_network(t, date(2020, 3, 9))
    with pytest.raises(ValueError, match="flow_kind"):
        build_week_network(t, W, "walking")


def test_absent_nodes_dropped():
    g = build_week_network(table([("a", "b", 3)]), W)
    assert g.nodes == ("a", "b")


def test_order_independence_and_conservation():
    planted = gen_planted_flow_network([4, 5], 100, 3, seed=9)
    recs = list(planted.table.records)
    g1 = build_week_network(planted.table, W)
    random.Random(1).shuffle(recs)
    g2 = build_week_network(WeeklyFlowTable(tuple(recs), planted.table.centroids), W)
    assert g1 == g2
    assert sum(g1.total_flow.values()) == pytest.approx(sum(r.visitor_flow for r in recs), rel=1e-12)


def test_threshold_boundary():
    rows = [("a", "b", 8), ("a", "c", 12000), ("b", "c", 9999)]
    h = edge_threshold_subgraph(build_week_network(table(rows), W), 10000)
    assert h.edges == {("a", "c"): 12000.0}
    assert h.nodes == ("a", "b", "c")


def test_threshold_smallest_positive_is_identity():
    g = build_week_network(table([("a", "b", 3), ("b", "c", 1)]), W)
    assert edge_threshold_subgraph(g, np.nextafter(0, 1)) == g
    with pytest.raises(ValueError):
        edge_threshold_subgraph(g, 0)


def test_threshold_median_matches_filter():
    planted = gen_planted_flow_network([6, 6], 100, 5, seed=4)
    g = build_week_network(planted.table, W)
    med = float(np.median(list(g.edges.values())))
    expected = sum(1 for w in g.edges.values() if w >= med)
    assert len(edge_threshold_subgraph(g, med).edges) == expected


def test_threshold_composition():
    planted = gen_planted_flow_network([5, 5], 100, 5, seed=2)
    g = build_week_network(planted.table, W)
    t1, t2 = 12.0, 190.0
    assert edge_threshold_subgraph(edge_threshold_subgraph(g, t1), t2) == edge_threshold_subgraph(g, t2)


def test_dot_reparses():
    planted = gen_planted_flow_network([4, 4], 20000, 100, seed=1)
    g = edge_threshold_subgraph(build_week_network(planted.table, W), 10000)
    (parsed,) = pydot.graph_from_dot_data(to_dot(g))
    assert len(parsed.get_edges()) == len(g.edges)
    nodes = {n.get_name().strip('"'): n for n in parsed.get_nodes()}
    assert set(nodes) == set(g.nodes)
    some = g.nodes[0]
    assert float(nodes[some].get_attributes()["total_flow"]) == g.total_flow[some]


def test_geojson_layout():
    g = build_week_network(table([("a", "b", 3), ("b", "a", 5)]), W)
    doc = json.loads(json.dumps(to_geojson(g)))
    kinds = [f["geometry"]["type"] for f in doc["features"]]
    assert kinds == ["Point", "Point", "LineString"]
    assert doc["features"][0]["geometry"]["coordinates"] == [-75.0, 40.0]
    assert doc["features"][2]["properties"]["weight"] == 8.0
