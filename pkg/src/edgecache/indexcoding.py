"""Index-coded cache refresh via greedy coloring of the conflict graph.

Each (WCS, requested file) pair is a vertex.  Two vertices conflict unless
they want the same file or each WCS already holds the other's file; every
color class becomes one XOR broadcast.

Dynamic coloring additionally lets a WCS use files it decoded from earlier
broadcasts as side information for later ones.  A vertex ``v = (i, j)``
may join color class ``k`` only if, for each member ``u = (i_u, j_u)``,
either ``j == j_u`` or WCS ``i`` knows ``j_u`` and WCS ``i_u`` knows ``j``
strictly before transmission ``k``.  Requiring *strictly before* keeps the
plan decodable in broadcast order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .caching import CacheState, UpdateInstance, build_update, random_instance, top_s_cache
from .popularity import Ranking, drift_bounded

Vertex = tuple[int, int]


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    vertices: tuple[Vertex, ...]
    adj: np.ndarray = field(repr=False)
    side: np.ndarray = field(repr=False)  # side[i, f]: WCS i caches f

    @property
    def vw(self) -> np.ndarray:
        return np.array([v[0] for v in self.vertices], dtype=np.int64)

    @property
    def vf(self) -> np.ndarray:
        return np.array([v[1] for v in self.vertices], dtype=np.int64)

    def __len__(self):
        return len(self.vertices)

    def index(self, v: Vertex) -> int:
        return self.vertices.index(tuple(v))

    def order_of(self, vertices: Sequence[Vertex]) -> np.ndarray:
        """Vertex-index order from a list of (wcs, file) pairs."""
        order = np.array([self.index(v) for v in vertices], dtype=np.int64)
        if sorted(order.tolist()) != list(range(len(self))):
            raise ValueError("order must list every vertex exactly once")
        return order

    def edges(self) -> set[tuple[Vertex, Vertex]]:
        a, b = np.nonzero(np.triu(self.adj, 1))
        return {(self.vertices[x], self.vertices[y]) for x, y in zip(a.tolist(), b.tolist())}

    def neighbours(self, v: Vertex) -> set[Vertex]:
        row = self.adj[self.index(v)]
        return {self.vertices[u] for u in np.flatnonzero(row)}


def _side_matrix(inst: UpdateInstance) -> np.ndarray:
    m = inst.files()
    side = np.zeros((inst.n, max(m, 1)), dtype=bool)
    for i, held in enumerate(inst.prev):
        if held:
            side[i, sorted(held)] = True
    return side


def build_conflict_graph(inst: UpdateInstance) -> ConflictGraph:
    vertices = tuple((i, f) for i, req in enumerate(inst.requests) for f in sorted(req))
    side = _side_matrix(inst)
    vw = np.array([v[0] for v in vertices], dtype=np.int64)
    vf = np.array([v[1] for v in vertices], dtype=np.int64)
    adj = kernels.conflict_adjacency(vw, vf, side) if vertices else np.zeros((0, 0), dtype=bool)
    adj = np.asarray(adj, dtype=bool)
    adj.setflags(write=False)
    side.setflags(write=False)
    return ConflictGraph(vertices, adj, side)


# ---------------------------------------------------------------------------
# orderings


def random_ordering(g: ConflictGraph, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(len(g)).astype(np.int64)


def degeneracy_ordering(g: ConflictGraph) -> np.ndarray:
    """Reverse of the min-degree peeling sequence.

    Peeling always removes the remaining vertex of least degree, ties going
    to the smallest (wcs, file) pair; the last vertex removed comes first.
    """
    if len(g) == 0:
        return np.zeros(0, dtype=np.int64)
    return kernels.degeneracy_removal(g.adj)[::-1].copy()


def back_degrees(g: ConflictGraph, order: np.ndarray) -> np.ndarray:
    """Per vertex, the number of neighbours placed earlier in ``order``."""
    if len(g) == 0:
        return np.zeros(0, dtype=np.int64)
    return kernels.back_degrees(g.adj, np.asarray(order, dtype=np.int64))


def max_back_degree(g: ConflictGraph, order: np.ndarray) -> int:
    d = back_degrees(g, order)
    return int(d.max()) if d.size else 0


# ---------------------------------------------------------------------------
# coloring


@dataclass(frozen=True, eq=False)
class Coloring:
    graph: ConflictGraph = field(repr=False)
    colors: np.ndarray  # 1-based, indexed like graph.vertices

    @property
    def num_colors(self) -> int:
        return int(self.colors.max()) if self.colors.size else 0

    def color(self, v: Vertex) -> int:
        return int(self.colors[self.graph.index(v)])

    def classes(self) -> list[list[Vertex]]:
        out: list[list[Vertex]] = [[] for _ in range(self.num_colors)]
        for v, c in zip(self.graph.vertices, self.colors.tolist()):
            out[c - 1].append(v)
        return out

    def is_proper(self) -> bool:
        c = self.colors
        return not bool((self.graph.adj & (c[:, None] == c[None, :])).any())


def _check_order(g: ConflictGraph, order) -> np.ndarray:
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (len(g),) or not np.array_equal(np.sort(order), np.arange(len(g))):
        raise ValueError("order must be a permutation of the graph's vertices")
    return order


def greedy_color_static(g: ConflictGraph, order) -> Coloring:
    """First-fit coloring in ``order``: smallest color unused by colored neighbours."""
    order = _check_order(g, order)
    if len(g) == 0:
        return Coloring(g, np.zeros(0, dtype=np.int64))
    return Coloring(g, kernels.greedy_static(g.adj, order))


def greedy_color_dynamic(inst: UpdateInstance, g: ConflictGraph, order) -> Coloring:
    """First-fit coloring that tracks what each WCS has decoded so far.

    Coloring ``(i, j)`` with ``k`` records that WCS ``i`` learns ``j`` at
    transmission ``k``.  The result may be improper for ``g`` but always
    yields a plan that :func:`verify_plan` accepts.
    """
    order = _check_order(g, order)
    if len(g) == 0:
        return Coloring(g, np.zeros(0, dtype=np.int64))
    known = np.where(g.side, 0, kernels.NEVER).astype(np.int64)
    return Coloring(g, kernels.greedy_dynamic(order, g.vw, g.vf, known))


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class XorPlan:
    transmissions: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.transmissions)

    def to_json(self) -> dict:
        return {"transmissions": [list(t) for t in self.transmissions]}

    @classmethod
    def from_json(cls, data) -> "XorPlan":
        txs = data["transmissions"] if isinstance(data, dict) else data
        return cls.of(txs)

    @classmethod
    def of(cls, transmissions) -> "XorPlan":
        out = []
        for t in transmissions:
            t = [int(f) for f in t]
            if len(set(t)) != len(t):
                raise ValueError(f"transmission {t} repeats a file")
            out.append(tuple(sorted(t)))
        return cls(tuple(out))

    @classmethod
    def uncoded(cls, inst: UpdateInstance) -> "XorPlan":
        return cls(tuple((f,) for f in sorted(inst.union_requests)))


def plan_from_coloring(coloring: Coloring) -> XorPlan:
    return XorPlan(tuple(tuple(sorted({f for _, f in cls})) for cls in coloring.classes()))


@dataclass
class DecodeReport:
    ok: bool
    trace: list[tuple[int, int, int]]  # (wcs, file, 1-based transmission)
    undecodable: list[Vertex]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "trace": [list(t) for t in self.trace],
            "undecodable": [list(v) for v in self.undecodable],
        }


def verify_plan(plan: XorPlan, inst: UpdateInstance, dynamic: bool = True) -> DecodeReport:
    """Replay the broadcasts and track which requests each WCS can decode.

    A WCS decodes a requested file from a transmission when it knows every
    other file in the XOR.  With ``dynamic`` on, decoded files count as side
    information for later transmissions; with it off, only the cache does.
    """
    decoded = [set() for _ in range(inst.n)]
    trace = []
    for t, xs in enumerate(plan.transmissions, start=1):
        xs = frozenset(xs)
        for i in range(inst.n):
            known = inst.side_info(i) | decoded[i] if dynamic else inst.side_info(i)
            missing = xs - known
            if len(missing) != 1:
                continue
            (f,) = missing
            if f in inst.requests[i] and f not in decoded[i]:
                decoded[i].add(f)
                trace.append((i, f, t))
    undecodable = [(i, f) for i in range(inst.n) for f in sorted(inst.requests[i] - decoded[i])]
    return DecodeReport(not undecodable, trace, undecodable)


def plan_document(plan: XorPlan, report: DecodeReport | None = None) -> dict:
    doc = plan.to_json()
    if report is not None:
        doc["trace"] = [list(t) for t in report.trace]
    return doc


def instance_to_json(inst: UpdateInstance) -> dict:
    return {"prev": [sorted(s) for s in inst.prev], "cur": [sorted(s) for s in inst.cur]}


def instance_from_json(data: dict) -> UpdateInstance:
    if "prev" in data and "cur" in data:
        return build_update(CacheState(tuple(data["prev"])), CacheState(tuple(data["cur"])))
    raise ValueError("instance JSON needs 'prev' and 'cur' lists of cached file ids per WCS")


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# scheme wrapper used by the harness


def index_code(inst: UpdateInstance, ordering: str, dynamic: bool, rng: np.random.Generator | None = None):
    """Color with the named ordering, build the plan, and verify it.

    Returns ``(plan, coloring, report)``.  Static plans are verified without
    dynamic side information, which a proper coloring never needs.
    """
    g = build_conflict_graph(inst)
    if ordering == "random":
        if rng is None:
            raise ValueError("random ordering needs a generator")
        order = random_ordering(g, rng)
    elif ordering == "degeneracy":
        order = degeneracy_ordering(g)
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    coloring = greedy_color_dynamic(inst, g, order) if dynamic else greedy_color_static(g, order)
    plan = plan_from_coloring(coloring)
    return plan, coloring, verify_plan(plan, inst, dynamic=dynamic)


# ---------------------------------------------------------------------------
# checks


def theorem3_bound(n: int, c: int, s: int) -> float:
    """n*sqrt(c) * (1 - s / (n*sqrt(c)*ln s))."""
    if s <= 1:
        raise ValueError("bound needs s > 1 (log s must be positive)")
    total = n * math.sqrt(c)
    if total == 0:
        return 0.0
    return total * (1 - s / (total * math.log(s)))


@dataclass
class Theorem3Report:
    n: int
    c: int
    s: int
    m: int
    bound: float
    colors: list[int] = field(default_factory=list)
    max_degrees: list[int] = field(default_factory=list)
    vertices: list[int] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.colors)

    @property
    def fraction(self) -> float:
        if not self.colors:
            return 1.0
        return sum(k <= self.bound for k in self.colors) / len(self.colors)

    def histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for k in self.colors:
            hist[k] = hist.get(k, 0) + 1
        return dict(sorted(hist.items()))

    def summary(self) -> str:
        return (
            f"index-coding bound n={self.n} c={self.c} s={self.s} m={self.m}: bound={self.bound:.2f}, "
            f"{self.trials} trials, max colors={max(self.colors, default=0)}, "
            f"fraction within bound={self.fraction:.3f}"
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "s": self.s,
            "m": self.m,
            "bound": self.bound,
            "fraction": self.fraction,
            "histogram": {str(k): v for k, v in self.histogram().items()},
            "colors": self.colors,
            "max_degree": self.max_degrees,
            "vertices": self.vertices,
        }


def theorem3_pool_size(n: int, c: int, s: int, beta1: float, beta2: float | None = None) -> int:
    m = int(round(beta1 * n * math.sqrt(c)))
    if c == 0 and beta2 is not None:
        # no drift: beta1 pins nothing, take the pool from beta2
        m = int(round(beta2 * s))
    if beta1 < 1 or (beta2 is not None and beta2 < 1):
        raise ValueError("beta1 and beta2 must be >= 1")
    if beta2 is not None and c > 0 and abs(m - beta2 * s) > max(1.0, 0.01 * m):
        raise ValueError(f"m={m} from beta1 is inconsistent with beta2*s={beta2 * s:g}")
    if not 1 <= s < m:
        raise ValueError(f"need 1 <= s < m, got s={s}, m={m}")
    return m


def check_theorem3(
    n: int, c: int, s: int, beta1: float, beta2: float | None, trials: int, rng: np.random.Generator
) -> Theorem3Report:
    """Independent uniform rankings, one bounded drift step, degeneracy-ordered greedy coloring."""
    bound = theorem3_bound(n, c, s)
    m = theorem3_pool_size(n, c, s, beta1, beta2)
    report = Theorem3Report(n, c, s, m, bound)
    for _ in range(trials):
        before = [Ranking.from_order(rng.permutation(m)) for _ in range(n)]
        after = [drift_bounded(r, c, rng) for r in before]
        inst = build_update(top_s_cache(before, s), top_s_cache(after, s))
        g = build_conflict_graph(inst)
        order = degeneracy_ordering(g)
        coloring = greedy_color_static(g, order)
        report.colors.append(coloring.num_colors)
        report.vertices.append(len(g))
        report.max_degrees.append(int(g.adj.sum(axis=1).max()) if len(g) else 0)
    return report


@dataclass
class SoundnessReport:
    trials: int
    failures: list = field(default_factory=list)
    static_colors: int = 0
    dynamic_colors: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        return (
            f"coloring soundness: {self.trials} instances, static colors={self.static_colors}, "
            f"dynamic colors={self.dynamic_colors}, failures={len(self.failures)}"
        )


def check_coloring_soundness(
    trials: int, rng: np.random.Generator, n_max: int = 8, m_max: int = 40, s_max: int = 12
) -> SoundnessReport:
    """Per random instance and per ordering (random, degeneracy):

    * the static coloring is proper and its plan decodes from caches alone;
    * the dynamic plan decodes with accumulated side information;
    * both use at most max-back-degree + 1 colors.
    """
    report = SoundnessReport(trials)
    for trial in range(trials):
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(2, m_max + 1))
        s = int(rng.integers(1, min(s_max, m - 1) + 1))
        inst = random_instance(rng, n, m, s)
        g = build_conflict_graph(inst)
        for name, order in (("random", random_ordering(g, rng)), ("degeneracy", degeneracy_ordering(g))):
            d = max_back_degree(g, order)
            static = greedy_color_static(g, order)
            dyn = greedy_color_dynamic(inst, g, order)
            report.static_colors += static.num_colors
            report.dynamic_colors += dyn.num_colors
            if not static.is_proper():
                report.failures.append((trial, name, "static coloring not proper"))
            if not verify_plan(plan_from_coloring(static), inst, dynamic=False).ok:
                report.failures.append((trial, name, "static plan undecodable from caches"))
            if not verify_plan(plan_from_coloring(dyn), inst, dynamic=True).ok:
                report.failures.append((trial, name, "dynamic plan undecodable"))
            if len(g) and (static.num_colors > d + 1 or dyn.num_colors > d + 1):
                report.failures.append((trial, name, f"colors exceed d+1={d + 1}"))
    return report


__all__ = [
    "ConflictGraph",
    "Coloring",
    "XorPlan",
    "DecodeReport",
    "build_conflict_graph",
    "random_ordering",
    "degeneracy_ordering",
    "back_degrees",
    "max_back_degree",
    "greedy_color_static",
    "greedy_color_dynamic",
    "plan_from_coloring",
    "verify_plan",
    "index_code",
    "check_theorem3",
    "check_coloring_soundness",
    "theorem3_bound",
]
