"""Popularity rankings, Kendall tau distance and the two drift processes.

Files are integer ids ``0..m-1``.  A :class:`Ranking` stores, for every
file, its rank in ``1..m`` (1 = most popular).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from . import kernels


class RankingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Ranking:
    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.int64)
        if pos.ndim != 1 or pos.size == 0:
            raise RankingError("ranking must be a non-empty 1-D array")
        if not np.array_equal(np.sort(pos), np.arange(1, pos.size + 1)):
            raise RankingError(f"positions are not a permutation of 1..{pos.size}: {pos.tolist()}")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return int(self.positions.size)

    @classmethod
    def from_order(cls, order) -> "Ranking":
        """Build from file ids listed most-popular first."""
        order = np.asarray(order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(order.size)):
            raise RankingError(f"order is not a permutation of 0..{order.size - 1}: {order.tolist()}")
        pos = np.empty(order.size, dtype=np.int64)
        pos[order] = np.arange(1, order.size + 1)
        return cls(pos)

    @classmethod
    def identity(cls, m: int) -> "Ranking":
        return cls(np.arange(1, m + 1))

    def order(self) -> np.ndarray:
        """File ids sorted from most to least popular."""
        return np.argsort(self.positions, kind="stable")

    def top(self, s: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.positions <= s).tolist())

    def __eq__(self, other):
        if not isinstance(other, Ranking):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    def __hash__(self):
        return hash(self.positions.tobytes())

    def __repr__(self):
        return f"Ranking({self.positions.tolist()})"


def kendall_tau(a: Ranking, b: Ranking) -> int:
    """Number of file pairs ordered differently by ``a`` and ``b``.

    Reads ``b``'s ranks in ``a``'s order and counts inversions, O(m log m).
    """
    if a.m != b.m:
        raise RankingError(f"rankings cover different file pools ({a.m} vs {b.m})")
    return int(kernels.count_inversions(b.positions[a.order()]))


def max_distance_same_topset(m: int, s: int) -> int:
    """Largest Kendall distance two rankings can have while sharing their top-s set.

    Only pairs inside the top block or inside the bottom block can disagree,
    so the maximum is C(s,2) + C(m-s,2).
    """
    if not 1 <= s < m:
        raise ValueError(f"need 1 <= s < m, got s={s}, m={m}")
    return comb(s, 2) + comb(m - s, 2)


def printed_topset_threshold(m: int, s: int) -> float:
    """The product-form threshold s(s-1)(m-s)(m-s-1)/4, kept for comparison reports."""
    return s * (s - 1) * (m - s) * (m - s - 1) / 4


def rank_from_values(values) -> Ranking:
    """Rank 1 goes to the largest value; ties favour the smaller file id."""
    values = np.asarray(values, dtype=np.float64)
    if np.isnan(values).any():
        raise RankingError("popularity values contain NaN")
    order = np.lexsort((np.arange(values.size), -values))
    return Ranking.from_order(order)


SPLIT_MODES = ("resample", "fixed")


@dataclass(frozen=True)
class DriftParams:
    """Drift knobs.

    ``c`` bounds the per-slot Kendall distance in bounded mode; ``p`` is the
    width of the per-slot value step; ``q`` is the fraction of files that
    drift independently at each WCS.  ``split`` picks whether that local
    subset is redrawn every slot (``resample``) or fixed per WCS for the
    whole run (``fixed``).
    """

    c: int = 0
    p: float = 0.1
    q: float = 0.2
    split: str = "resample"

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("drift budget c must be >= 0")
        if self.p < 0:
            raise ValueError("drift magnitude p must be >= 0")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("spatial fraction q must lie in [0, 1]")
        if self.split not in SPLIT_MODES:
            raise ValueError(f"split must be one of {SPLIT_MODES}")


def _local_mask(n: int, m: int, q: float, rng: np.random.Generator) -> np.ndarray:
    """Per WCS, ``round(q*m)`` distinct files chosen uniformly at random."""
    k = int(round(q * m))
    mask = np.zeros((n, m), dtype=bool)
    picks = np.argsort(rng.random((n, m)), axis=1)[:, :k]
    np.put_along_axis(mask, picks, True, axis=1)
    return mask


@dataclass(frozen=True, eq=False)
class PopularityState:
    """Per-WCS popularity values and the local/shared split last used.

    ``local_mask[i, f]`` marks files that drift independently at WCS ``i``;
    every other file moved by the step shared across WCSs.
    """

    values: np.ndarray
    local_mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        mask = np.array(self.local_mask, dtype=bool)
        if vals.ndim != 2 or mask.shape != vals.shape:
            raise ValueError("values and local_mask must both be n x m")
        if np.isnan(vals).any() or (vals < 0).any() or (vals > 1).any():
            raise ValueError("popularity values must lie in [0, 1]")
        vals.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "local_mask", mask)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def global_files(self) -> frozenset[int]:
        """Files that shared the common step at every WCS."""
        return frozenset(np.flatnonzero(~self.local_mask.any(axis=0)).tolist())

    @property
    def local_files(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.local_mask.any(axis=0)).tolist())

    def rankings(self) -> list[Ranking]:
        return [rank_from_values(row) for row in self.values]

    @classmethod
    def initial(cls, n: int, m: int, q: float, rng: np.random.Generator) -> "PopularityState":
        """One uniform [0,1] value per file, identical at every WCS."""
        mask = _local_mask(n, m, q, rng)
        values = np.broadcast_to(rng.random(m), (n, m))
        return cls(values, mask)


def drift_values(state: PopularityState, params: DriftParams, rng: np.random.Generator) -> PopularityState:
    """One slot of value drift: uniform [-p/2, p/2] steps, clamped to [0, 1].

    Shared files get one step per file applied at every WCS; local files get
    an independent step per (WCS, file).  All draws are made regardless of
    ``q`` so the generator advances identically.
    """
    n, m = state.values.shape
    half = params.p / 2
    if params.split == "resample":
        mask = _local_mask(n, m, params.q, rng)
    else:
        mask = state.local_mask
    shared = rng.uniform(-half, half, size=m)
    per_wcs = rng.uniform(-half, half, size=(n, m))
    step = np.where(mask, per_wcs, shared[None, :])
    return PopularityState(np.clip(state.values + step, 0.0, 1.0), mask)


def drift_bounded(r: Ranking, c: int, rng: np.random.Generator) -> Ranking:
    """Apply exactly ``c`` uniformly random adjacent swaps to the popularity order.

    Each swap moves the Kendall distance by one, so the result is within
    distance ``c`` of ``r``.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0 or r.m < 2:
        return r
    order = r.order()
    for k in rng.integers(0, r.m - 1, size=c):
        order[k], order[k + 1] = order[k + 1], order[k]
    return Ranking.from_order(order)


# ---------------------------------------------------------------------------
# trace files: CSV "slot,wcs,ranking", ranking = ';'-joined ids, most popular first

TRACE_HEADER = ("slot", "wcs", "ranking")


class TraceError(ValueError):
    pass


def load_trace(path) -> list[list[Ranking]]:
    """Read a popularity trace into ``rankings[slot][wcs]``.

    Slots and WCS ids must each form a contiguous range starting at 0, and
    every row must list each file exactly once.
    """
    path = Path(path)
    cells: dict[tuple[int, int], Ranking] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise TraceError(f"{path}: expected header {','.join(TRACE_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise TraceError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                slot, wcs = int(row[0]), int(row[1])
                order = [int(x) for x in row[2].split(";")]
            except ValueError as exc:
                raise TraceError(f"{path}:{lineno}: {exc}") from None
            try:
                ranking = Ranking.from_order(order)
            except RankingError as exc:
                raise TraceError(f"{path}:{lineno}: slot {slot} wcs {wcs}: {exc}") from None
            if (slot, wcs) in cells:
                raise TraceError(f"{path}:{lineno}: duplicate entry for slot {slot} wcs {wcs}")
            cells[(slot, wcs)] = ranking
    if not cells:
        raise TraceError(f"{path}: trace is empty")
    slots = sorted({k[0] for k in cells})
    wcss = sorted({k[1] for k in cells})
    if slots != list(range(len(slots))) or wcss != list(range(len(wcss))):
        raise TraceError(f"{path}: slot and wcs ids must be contiguous from 0")
    missing = [(t, i) for t in slots for i in wcss if (t, i) not in cells]
    if missing:
        raise TraceError(f"{path}: missing rankings for (slot, wcs) {missing[:5]}")
    ms = {r.m for r in cells.values()}
    if len(ms) != 1:
        raise TraceError(f"{path}: rankings cover different file pool sizes {sorted(ms)}")
    return [[cells[(t, i)] for i in wcss] for t in slots]


def write_trace(rankings: list[list[Ranking]], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for t, row in enumerate(rankings):
            for i, r in enumerate(row):
                writer.writerow([t, i, ";".join(str(f) for f in r.order().tolist())])
