"""Cache bookkeeping and per-slot refresh instances.

A refresh instance compares each WCS's previous cache with the one it wants
now.  The files it lacks are its requests; the MBS must deliver the union of
all requests, and whatever a WCS already holds is side information for
coded delivery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import isqrt

import numpy as np

from .popularity import Ranking, drift_bounded, kendall_tau, max_distance_same_topset, printed_topset_threshold


@dataclass(frozen=True)
class SystemConfig:
    m: int = 100
    n: int = 10
    s: int = 20

    def __post_init__(self):
        if not 1 <= self.s < self.m:
            raise ValueError(f"need 1 <= s < m, got s={self.s}, m={self.m}")
        if self.n < 1:
            raise ValueError("need at least one WCS")


@dataclass(frozen=True)
class CacheState:
    """Cached file ids per WCS."""

    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(int(f) for f in s) for s in self.sets))

    @property
    def n(self) -> int:
        return len(self.sets)

    def __getitem__(self, i: int) -> frozenset[int]:
        return self.sets[i]

    def __iter__(self):
        return iter(self.sets)

    def check(self, config: SystemConfig) -> None:
        """Raise if the state does not fit ``config`` (n sets of exactly s files)."""
        if self.n != config.n:
            raise ValueError(f"expected {config.n} caches, got {self.n}")
        for i, s in enumerate(self.sets):
            if len(s) != config.s:
                raise ValueError(f"WCS {i} caches {len(s)} files, expected {config.s}")
            if any(not 0 <= f < config.m for f in s):
                raise ValueError(f"WCS {i} caches a file id outside 0..{config.m - 1}")


@dataclass(frozen=True)
class UpdateInstance:
    prev: CacheState
    cur: CacheState
    requests: tuple[frozenset[int], ...] = field(init=False)
    union_requests: frozenset[int] = field(init=False)
    overlaps: tuple[frozenset[int], ...] = field(init=False)

    def __post_init__(self):
        if self.prev.n != self.cur.n:
            raise ValueError(f"prev has {self.prev.n} caches, cur has {self.cur.n}")
        requests = tuple(c - p for p, c in zip(self.prev, self.cur))
        union = frozenset().union(*requests)
        object.__setattr__(self, "requests", requests)
        object.__setattr__(self, "union_requests", union)
        object.__setattr__(self, "overlaps", tuple(union & p for p in self.prev))

    @property
    def n(self) -> int:
        return self.prev.n

    @property
    def t_un(self) -> int:
        return len(self.union_requests)

    def side_info(self, i: int) -> frozenset[int]:
        # the whole previous cache is still on disk during the refresh broadcast
        return self.prev[i]

    def files(self) -> int:
        """Smallest pool size covering every id mentioned."""
        ids = set().union(*self.prev.sets, *self.cur.sets)
        return max(ids) + 1 if ids else 0


def top_s_cache(rankings: list[Ranking], s: int) -> CacheState:
    for r in rankings:
        if not 1 <= s < r.m:
            raise ValueError(f"need 1 <= s < m, got s={s}, m={r.m}")
    return CacheState(tuple(r.top(s) for r in rankings))


def build_update(prev: CacheState, cur: CacheState) -> UpdateInstance:
    return UpdateInstance(prev, cur)


def from_requests(requests, side_info) -> UpdateInstance:
    """Instance with arbitrary per-WCS requests and side information.

    Convenience for hand-built index-coding examples where cache sizes need
    not match: prev = side info, cur = side info plus requests.
    """
    requests = [frozenset(r) for r in requests]
    side_info = [frozenset(h) for h in side_info]
    if len(requests) != len(side_info):
        raise ValueError("requests and side_info must have one entry per WCS")
    for i, (r, h) in enumerate(zip(requests, side_info)):
        if r & h:
            raise ValueError(f"WCS {i} requests files it already holds: {sorted(r & h)}")
    return UpdateInstance(CacheState(tuple(side_info)), CacheState(tuple(h | r for r, h in zip(requests, side_info))))


def uncoded_transmissions(inst: UpdateInstance) -> int:
    return inst.t_un


def random_instance(rng: np.random.Generator, n: int, m: int, s: int) -> UpdateInstance:
    """Random cache refresh: every WCS swaps a random number of its files."""
    prev, cur = [], []
    for _ in range(n):
        perm = rng.permutation(m)
        held, outside = perm[:s], perm[s:]
        k = int(rng.integers(0, min(s, m - s) + 1))
        keep = rng.permutation(held)[: s - k]
        new = rng.permutation(outside)[:k]
        prev.append(frozenset(held.tolist()))
        cur.append(frozenset(keep.tolist()) | frozenset(new.tolist()))
    return UpdateInstance(CacheState(tuple(prev)), CacheState(tuple(cur)))


# ---------------------------------------------------------------------------
# uncoded worst-case checks


@dataclass
class Theorem1Report:
    config: SystemConfig
    c: int
    trials: int
    per_wcs_bound: int
    total_bound: int
    max_requests: int = 0
    max_t_un: int = 0
    violations: list = field(default_factory=list)
    kendall_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.kendall_violations

    def summary(self) -> str:
        return (
            f"uncoded bound m={self.config.m} n={self.config.n} s={self.config.s} c={self.c}: "
            f"{self.trials} trials, max |R_i|={self.max_requests} (bound {self.per_wcs_bound}), "
            f"max T_un={self.max_t_un} (bound {self.total_bound}), "
            f"violations={len(self.violations) + len(self.kendall_violations)}"
        )


def check_theorem1(config: SystemConfig, c: int, trials: int, rng: np.random.Generator) -> Theorem1Report:
    """Random rankings, one bounded-drift step per WCS, then check the uncoded bounds.

    Per WCS: ``|R_i|**2 <= K(prev, cur) <= c`` and so ``|R_i| <= isqrt(c)``;
    overall ``T_un <= min(n * isqrt(c), m)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    root = isqrt(c)
    report = Theorem1Report(config, c, trials, root, min(config.n * root, config.m))
    for trial in range(trials):
        before = [Ranking.from_order(rng.permutation(config.m)) for _ in range(config.n)]
        after = [drift_bounded(r, c, rng) for r in before]
        inst = build_update(top_s_cache(before, config.s), top_s_cache(after, config.s))
        for i, req in enumerate(inst.requests):
            k = kendall_tau(before[i], after[i])
            if not len(req) ** 2 <= k <= c:
                report.kendall_violations.append((trial, i, len(req), k))
            if len(req) > root:
                report.violations.append(("per-wcs", trial, i, len(req)))
            report.max_requests = max(report.max_requests, len(req))
        if inst.t_un > report.total_bound:
            report.violations.append(("total", trial, inst.t_un))
        report.max_t_un = max(report.max_t_un, inst.t_un)
    return report


@dataclass
class TopsetReport:
    m: int
    s: int
    bound: int
    printed_bound: float
    pairs: int = 0
    violations: list = field(default_factory=list)
    witness_at_bound: tuple | None = None
    printed_counterexample: tuple | None = None

    @property
    def ok(self) -> bool:
        return not self.violations


def _all_rankings(m: int) -> np.ndarray:
    """Every permutation of 1..m as rows of ranks."""
    return np.array(list(itertools.permutations(range(1, m + 1))), dtype=np.int64)


def check_topset_threshold(m: int, s: int) -> TopsetReport:
    """Exhaustive check over all ranking pairs on ``m`` files.

    Confirms that distance above C(s,2)+C(m-s,2) always changes the top-s
    set, finds a pair sitting exactly at that bound with equal top-s sets,
    and looks for a pair breaking the product-form threshold.

    Distances come from pair-sign vectors (one matrix product), not from
    :func:`kendall_tau`, so this doubles as an independent oracle.
    """
    bound = max_distance_same_topset(m, s)
    printed = printed_topset_threshold(m, s)
    ranks = _all_rankings(m)
    i, j = np.triu_indices(m, 1)
    signs = np.sign(ranks[:, i] - ranks[:, j])
    dist = (len(i) - signs @ signs.T) // 2
    topkey = ((ranks <= s) * (1 << np.arange(m))).sum(axis=1)
    same_top = topkey[:, None] == topkey[None, :]
    report = TopsetReport(m, s, bound, printed, pairs=len(ranks) ** 2)
    bad = np.argwhere(same_top & (dist > bound))
    report.violations = [(ranks[a].tolist(), ranks[b].tolist()) for a, b in bad[:10]]
    at = np.argwhere(same_top & (dist == bound))
    if len(at):
        a, b = at[0]
        report.witness_at_bound = (ranks[a].tolist(), ranks[b].tolist(), int(dist[a, b]))
    over = np.argwhere(same_top & (dist > printed))
    if len(over):
        a, b = over[0]
        report.printed_counterexample = (ranks[a].tolist(), ranks[b].tolist(), int(dist[a, b]))
    return report
