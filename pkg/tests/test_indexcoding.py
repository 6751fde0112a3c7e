import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import THREE_WCS_ORDER
from edgecache.caching import from_requests, random_instance
from edgecache.indexcoding import (
    ConflictGraph,
    XorPlan,
    back_degrees,
    build_conflict_graph,
    check_coloring_soundness,
    check_theorem3,
    degeneracy_ordering,
    greedy_color_dynamic,
    greedy_color_static,
    index_code,
    instance_from_json,
    instance_to_json,
    max_back_degree,
    plan_document,
    plan_from_coloring,
    random_ordering,
    theorem3_bound,
    theorem3_pool_size,
    verify_plan,
)

V1, V2, V3, V4 = (0, 0), (1, 0), (1, 1), (2, 2)


def brute_edges(inst):
    verts = [(i, f) for i, r in enumerate(inst.requests) for f in r]
    out = set()
    for (a, fa), (b, fb) in itertools.combinations(sorted(verts), 2):
        if fa != fb and not (fa in inst.prev[b] and fb in inst.prev[a]):
            out.add(((a, fa), (b, fb)))
    return out


def brute_degeneracy(adj):
    """max over vertex subsets of the subset's minimum degree"""
    n = len(adj)
    best = 0
    for mask in range(1, 1 << n):
        idx = [v for v in range(n) if mask >> v & 1]
        sub = adj[np.ix_(idx, idx)]
        best = max(best, int(sub.sum(axis=1).min()))
    return best


def graph_from_adj(adj):
    adj = np.asarray(adj, dtype=bool)
    verts = tuple((0, f) for f in range(len(adj)))
    return ConflictGraph(verts, adj, np.zeros((1, len(adj)), dtype=bool))


def test_three_wcs_graph(three_wcs):
    g = build_conflict_graph(three_wcs)
    assert g.vertices == (V1, V2, V3, V4)
    assert g.edges() == {(V1, V3), (V1, V4), (V2, V3), (V3, V4)}
    assert g.edges() == brute_edges(three_wcs)
    assert g.neighbours(V2) == {V3}


def test_three_wcs_static_three_colors(three_wcs):
    g = build_conflict_graph(three_wcs)
    col = greedy_color_static(g, THREE_WCS_ORDER)
    assert col.num_colors == 3
    assert col.is_proper()
    assert [col.color(v) for v in (V2, V3, V4, V1)] == [1, 2, 1, 3]
    assert verify_plan(plan_from_coloring(col), three_wcs, dynamic=False).ok


def test_three_wcs_dynamic_two_colors(three_wcs):
    g = build_conflict_graph(three_wcs)
    col = greedy_color_dynamic(three_wcs, g, THREE_WCS_ORDER)
    assert col.num_colors == 2
    plan = plan_from_coloring(col)
    assert [set(t) for t in plan.transmissions] == [{0, 2}, {0, 1}]
    rep = verify_plan(plan, three_wcs)
    assert rep.ok
    assert sorted(rep.trace) == sorted([(1, 0, 1), (2, 2, 1), (0, 0, 2), (1, 1, 2)])
    # the second broadcast needs b1 learned from the first
    assert not verify_plan(plan, three_wcs, dynamic=False).ok


def test_single_wcs_complete_graph():
    inst = from_requests([{0, 1, 2, 3}], [{4}])
    g = build_conflict_graph(inst)
    assert len(g.edges()) == 6
    for order in (degeneracy_ordering(g), np.arange(4)):
        assert greedy_color_static(g, order).num_colors == 4
        assert greedy_color_dynamic(inst, g, order).num_colors == 4


def test_common_file_one_transmission():
    inst = from_requests([{5}, {5}, {5}], [{0}, {1}, {2}])
    plan, col, rep = index_code(inst, "degeneracy", dynamic=False)
    assert plan.transmissions == ((5,),)
    assert rep.ok


def test_empty_instance():
    inst = from_requests([set(), set()], [{0}, {1}])
    g = build_conflict_graph(inst)
    assert len(g) == 0
    assert greedy_color_static(g, degeneracy_ordering(g)).num_colors == 0
    assert len(plan_from_coloring(greedy_color_dynamic(inst, g, []))) == 0
    assert verify_plan(XorPlan(()), inst).ok


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1))
def test_edges_match_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 20))
    inst = random_instance(rng, int(rng.integers(1, 6)), m, int(rng.integers(1, m)))
    g = build_conflict_graph(inst)
    assert g.edges() == brute_edges(inst)
    assert (g.adj == g.adj.T).all() and not g.adj.diagonal().any()


def test_path_degeneracy_order():
    adj = np.zeros((4, 4), dtype=bool)
    for a, b in ((0, 1), (1, 2), (2, 3)):
        adj[a, b] = adj[b, a] = True
    g = graph_from_adj(adj)
    assert degeneracy_ordering(g).tolist() == [3, 2, 1, 0]
    assert max_back_degree(g, degeneracy_ordering(g)) == 1
    assert greedy_color_static(g, degeneracy_ordering(g)).num_colors == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 11), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_degeneracy_ordering_oracle(n, density, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < density, 1)
    adj = upper | upper.T
    g = graph_from_adj(adj)
    order = degeneracy_ordering(g)
    assert sorted(order.tolist()) == list(range(n))
    d = brute_degeneracy(adj)
    assert max_back_degree(g, order) == d
    col = greedy_color_static(g, order)
    assert col.is_proper() and col.num_colors <= d + 1


def test_back_degrees_small():
    adj = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=bool)
    g = graph_from_adj(adj)
    assert back_degrees(g, np.array([0, 1, 2])).tolist() == [0, 1, 1]
    assert back_degrees(g, np.array([1, 2, 0])).tolist() == [2, 0, 0]


def test_order_validation(three_wcs):
    g = build_conflict_graph(three_wcs)
    with pytest.raises(ValueError):
        greedy_color_static(g, [0, 1, 2])
    with pytest.raises(ValueError):
        greedy_color_static(g, [0, 0, 1, 2])
    with pytest.raises(ValueError):
        g.order_of([V1, V2, V3])
    assert g.order_of([V2, V3, V4, V1]).tolist() == THREE_WCS_ORDER


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_colorings_sound_and_bounded(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 30))
    inst = random_instance(rng, int(rng.integers(1, 7)), m, int(rng.integers(1, m)))
    g = build_conflict_graph(inst)
    for order in (random_ordering(g, rng), degeneracy_ordering(g)):
        d = max_back_degree(g, order)
        static = greedy_color_static(g, order)
        dyn = greedy_color_dynamic(inst, g, order)
        assert static.is_proper()
        assert verify_plan(plan_from_coloring(static), inst, dynamic=False).ok
        assert verify_plan(plan_from_coloring(dyn), inst, dynamic=True).ok
        if len(g):
            assert static.num_colors <= d + 1
            assert dyn.num_colors <= d + 1
        assert static.num_colors <= len(g)


def test_dynamic_not_worse_on_average():
    rng = np.random.default_rng(11)
    static, dynamic = [], []
    for _ in range(200):
        inst = random_instance(rng, 6, 30, 10)
        g = build_conflict_graph(inst)
        order = degeneracy_ordering(g)
        static.append(greedy_color_static(g, order).num_colors)
        dynamic.append(greedy_color_dynamic(inst, g, order).num_colors)
    assert np.mean(dynamic) <= np.mean(static)


def test_verify_plan_rejects_incomplete(three_wcs):
    rep = verify_plan(XorPlan.of([[0, 2]]), three_wcs)
    assert not rep.ok
    assert rep.undecodable == [(0, 0), (1, 1)]
    with pytest.raises(ValueError):
        XorPlan.of([[1, 1]])


def test_json_round_trips(three_wcs):
    plan, _, rep = index_code(three_wcs, "degeneracy", dynamic=True)
    doc = plan_document(plan, rep)
    assert XorPlan.from_json(doc) == plan
    assert doc["trace"] == [list(t) for t in rep.trace]
    again = instance_from_json(instance_to_json(three_wcs))
    assert again.requests == three_wcs.requests and again.prev == three_wcs.prev
    with pytest.raises(ValueError):
        instance_from_json({"prev": []})


def test_index_code_ordering_errors(three_wcs):
    with pytest.raises(ValueError):
        index_code(three_wcs, "random", dynamic=False)
    with pytest.raises(ValueError):
        index_code(three_wcs, "bogus", dynamic=False)


def test_theorem3_formula():
    assert theorem3_bound(50, 25, 40) == pytest.approx(250 * (1 - 40 / (250 * np.log(40))))
    assert theorem3_bound(50, 25, 40) == pytest.approx(239.16, abs=0.01)
    assert theorem3_bound(5, 0, 3) == 0.0
    with pytest.raises(ValueError):
        theorem3_bound(5, 4, 1)
    assert theorem3_pool_size(50, 25, 40, 1.0, 6.25) == 250
    with pytest.raises(ValueError):
        theorem3_pool_size(50, 25, 40, 1.0, 3.0)


def test_theorem3_zero_drift():
    rep = check_theorem3(5, 0, 3, 1.0, 2.0, 5, np.random.default_rng(0))
    assert rep.colors == [0] * 5 and rep.fraction == 1.0


def test_soundness_report_small():
    rep = check_coloring_soundness(100, np.random.default_rng(5))
    assert rep.ok, rep.failures
    assert rep.dynamic_colors <= rep.static_colors
