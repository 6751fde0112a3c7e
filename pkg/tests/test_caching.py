import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgecache.caching import (
    CacheState,
    SystemConfig,
    build_update,
    check_theorem1,
    check_topset_threshold,
    from_requests,
    random_instance,
    top_s_cache,
    uncoded_transmissions,
)
from edgecache.popularity import Ranking, max_distance_same_topset


def test_config_validation():
    SystemConfig(10, 2, 3)
    for bad in ((3, 1, 3), (3, 0, 1), (3, 1, 0)):
        with pytest.raises(ValueError):
            SystemConfig(*bad)


def test_top_s_cache():
    caches = top_s_cache([Ranking([3, 1, 2, 4]), Ranking([1, 2, 3, 4])], 2)
    assert caches.sets == (frozenset({1, 2}), frozenset({0, 1}))
    with pytest.raises(ValueError):
        top_s_cache([Ranking.identity(4)], 4)


def test_cache_state_check():
    cfg = SystemConfig(5, 2, 2)
    CacheState(({0, 1}, {2, 3})).check(cfg)
    with pytest.raises(ValueError):
        CacheState(({0, 1},)).check(cfg)
    with pytest.raises(ValueError):
        CacheState(({0, 1}, {2})).check(cfg)
    with pytest.raises(ValueError):
        CacheState(({0, 1}, {2, 9})).check(cfg)


def test_three_wcs_sets(three_wcs):
    assert three_wcs.requests == (frozenset({0}), frozenset({0, 1}), frozenset({2}))
    assert three_wcs.union_requests == {0, 1, 2}
    assert three_wcs.t_un == uncoded_transmissions(three_wcs) == 3
    # each WCS already holds exactly one file of the union
    assert [len(o) for o in three_wcs.overlaps] == [1, 1, 1]


def test_build_update_from_caches():
    inst = build_update(CacheState(({0, 1}, {0, 2})), CacheState(({0, 3}, {0, 2})))
    assert inst.requests == (frozenset({3}), frozenset())
    assert inst.union_requests == {3}
    assert inst.overlaps == (frozenset(), frozenset())
    assert inst.side_info(0) == {0, 1}
    with pytest.raises(ValueError):
        build_update(CacheState(({0},)), CacheState(({0}, {1})))


def test_from_requests_rejects_overlap():
    with pytest.raises(ValueError):
        from_requests([{1}], [{1, 2}])
    with pytest.raises(ValueError):
        from_requests([{1}], [])


@settings(max_examples=80)
@given(st.integers(1, 6), st.integers(2, 30), st.data())
def test_update_invariants(n, m, data):
    s = data.draw(st.integers(1, m - 1))
    inst = random_instance(np.random.default_rng(data.draw(st.integers(0, 2**32))), n, m, s)
    assert inst.union_requests == frozenset().union(*inst.requests)
    for i in range(n):
        assert not inst.requests[i] & inst.prev[i]
        assert inst.requests[i] <= inst.cur[i]
        assert inst.overlaps[i] == inst.union_requests & inst.prev[i]
        assert inst.overlaps[i].isdisjoint(inst.requests[i])
        assert len(inst.cur[i]) == len(inst.prev[i]) == s
    assert inst.t_un <= min(m, sum(len(r) for r in inst.requests))


def test_theorem1_small_grid():
    rng = np.random.default_rng(2)
    for m, n, s, c in [(20, 4, 5, 4), (50, 6, 10, 9), (30, 3, 15, 16), (10, 2, 3, 0)]:
        rep = check_theorem1(SystemConfig(m, n, s), c, 100, rng)
        assert rep.ok, rep.summary()
        assert rep.max_requests <= rep.per_wcs_bound
        assert rep.max_t_un <= rep.total_bound


def test_topset_threshold_m4():
    for s in (1, 2, 3):
        rep = check_topset_threshold(4, s)
        assert rep.ok
        assert rep.pairs == 24 * 24
        a, b, k = rep.witness_at_bound
        assert k == max_distance_same_topset(4, s)
    # product-form threshold is already broken on four files
    assert check_topset_threshold(4, 2).printed_counterexample is not None
