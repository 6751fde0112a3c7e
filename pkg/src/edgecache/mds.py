"""MDS-coded cache refresh over GF(2^w).

The MBS sends ``T = T_un - min_i |S+_i|`` linear combinations of the files in
``R_t``, where ``S+_i`` is the part of ``R_t`` WCS ``i`` already caches.  The
coefficient matrix is a ``T x T_un`` Vandermonde matrix on distinct nonzero
points, so any ``T`` of its columns are linearly independent and every WCS
can solve for the files it is missing.

Field polynomials: GF(2^8) uses 0x11D (x^8+x^4+x^3+x^2+1), GF(2^16) uses
0x1100B (x^16+x^12+x^3+x+1).  Both are primitive, so ``x`` generates the
multiplicative group.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .caching import UpdateInstance, random_instance

POLYNOMIALS = {8: 0x11D, 16: 0x1100B}


class MdsError(RuntimeError):
    """Raised when a decode system is singular (the MDS property was violated)."""


class GF:
    """Table-driven GF(2^w) arithmetic."""

    def __init__(self, w: int):
        if w not in POLYNOMIALS:
            raise ValueError(f"unsupported field width {w}; choose one of {sorted(POLYNOMIALS)}")
        self.w = w
        self.poly = POLYNOMIALS[w]
        self.size = 1 << w
        self.order = self.size - 1
        exp = np.zeros(2 * self.order + 2, dtype=np.int64)
        log = np.zeros(self.size, dtype=np.int64)
        x = 1
        for i in range(self.order):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.size:
                x ^= self.poly
        if x != 1 or len(set(exp[: self.order].tolist())) != self.order:
            raise AssertionError(f"polynomial {self.poly:#x} is not primitive")
        exp[self.order : 2 * self.order] = exp[: self.order]
        exp.setflags(write=False)
        log.setflags(write=False)
        self.exp = exp
        self.log = log

    def __repr__(self):
        return f"GF(2^{self.w})"

    def _check(self, *xs):
        for x in xs:
            if not 0 <= x < self.size:
                raise ValueError(f"{x} is not an element of {self}")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in {self}")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def power(self, a: int, k: int) -> int:
        self._check(a)
        if a == 0:
            return 1 if k == 0 else 0
        return int(self.exp[(self.log[a] * k) % self.order])

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return kernels.gf_matmul(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64), self.exp, self.log)

    def solve(self, a: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, int]:
        """Row-reduce ``a @ x = y``; returns ``(x, rank)``."""
        x, rank = kernels.gf_solve(
            np.asarray(a, dtype=np.int64), np.asarray(y, dtype=np.int64), self.exp, self.log, self.order
        )
        return x, int(rank)

    def rank(self, a: np.ndarray) -> int:
        a = np.asarray(a, dtype=np.int64)
        return self.solve(a, np.zeros((a.shape[0], 1), dtype=np.int64))[1]

    # payload <-> symbol vectors
    def to_symbols(self, payload: bytes) -> np.ndarray:
        if len(payload) % (self.w // 8):
            raise ValueError(f"payload length {len(payload)} is not a multiple of {self.w // 8} bytes")
        dtype = np.uint8 if self.w == 8 else np.dtype(">u2")
        return np.frombuffer(payload, dtype=dtype).astype(np.int64)

    def to_bytes(self, symbols: np.ndarray) -> bytes:
        dtype = np.uint8 if self.w == 8 else np.dtype(">u2")
        return np.asarray(symbols).astype(dtype).tobytes()


@lru_cache(maxsize=None)
def field_for(w: int) -> GF:
    return GF(w)


def field_width(t_un: int) -> int:
    """Smallest supported width with enough distinct nonzero evaluation points."""
    if t_un < 256:
        return 8
    if t_un < 1 << 16:
        return 16
    raise ValueError(f"T_un={t_un} needs more than 2^16-1 evaluation points; unsupported")


def vandermonde(rows: int, cols: int, gf: GF) -> np.ndarray:
    """``rows x cols`` matrix with entry ``alpha_j ** r`` for ``alpha_j = x**j``."""
    if cols > gf.order:
        raise ValueError(f"{gf} has only {gf.order} nonzero points, need {cols}")
    r = np.arange(rows, dtype=np.int64)[:, None]
    j = np.arange(cols, dtype=np.int64)[None, :]
    return gf.exp[(r * j) % gf.order].astype(np.int64)


@dataclass(frozen=True)
class MdsPlan:
    coeffs: np.ndarray = field(repr=False)
    file_order: tuple[int, ...]
    T: int
    w: int = 8

    @property
    def t_un(self) -> int:
        return len(self.file_order)

    @property
    def field(self) -> GF:
        return field_for(self.w)

    def column(self, f: int) -> int:
        return self.file_order.index(f)


def build_mds_plan(inst: UpdateInstance) -> MdsPlan:
    files = tuple(sorted(inst.union_requests))
    t_un = len(files)
    if t_un == 0:
        return MdsPlan(np.zeros((0, 0), dtype=np.int64), (), 0)
    w = field_width(t_un)
    T = t_un - min(len(o) for o in inst.overlaps)
    coeffs = vandermonde(T, t_un, field_for(w))
    coeffs.setflags(write=False)
    return MdsPlan(coeffs, files, T, w)


def _stack(plan: MdsPlan, files: Sequence[int], payloads: Mapping[int, bytes]) -> np.ndarray:
    gf = plan.field
    rows = [gf.to_symbols(payloads[f]) for f in files]
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise ValueError(f"payloads differ in length: {sorted(len(payloads[f]) for f in files)}")
    return np.vstack(rows) if rows else np.zeros((0, 0), dtype=np.int64)


def mds_encode(plan: MdsPlan, files: Mapping[int, bytes]) -> list[bytes]:
    """Coded transmissions ``x = A b`` for the files in ``plan.file_order``."""
    if plan.T == 0:
        return []
    missing = [f for f in plan.file_order if f not in files]
    if missing:
        raise KeyError(f"no payload for files {missing}")
    b = _stack(plan, plan.file_order, files)
    x = plan.field.matmul(plan.coeffs, b)
    return [plan.field.to_bytes(row) for row in x]


def mds_decode(plan: MdsPlan, side_files: Mapping[int, bytes], transmissions: Sequence[bytes]) -> dict[int, bytes]:
    """Recover every file of ``R_t`` the WCS does not already hold.

    ``side_files`` maps the WCS's cached files in ``R_t`` to their payloads;
    entries outside ``R_t`` are ignored.
    """
    known = [f for f in plan.file_order if f in side_files]
    unknown = [f for f in plan.file_order if f not in side_files]
    if not unknown:
        return {}
    if len(transmissions) != plan.T:
        raise ValueError(f"expected {plan.T} transmissions, got {len(transmissions)}")
    if len(unknown) > plan.T:
        raise MdsError(f"{len(unknown)} unknown files but only {plan.T} transmissions")
    gf = plan.field
    x = np.vstack([gf.to_symbols(t) for t in transmissions])
    if known:
        cols = [plan.column(f) for f in known]
        x = x ^ gf.matmul(plan.coeffs[:, cols], _stack(plan, known, side_files))
    cols = [plan.column(f) for f in unknown]
    sol, rank = gf.solve(plan.coeffs[:, cols], x)
    if rank < len(unknown):
        raise MdsError(f"decode system for files {unknown} is singular (rank {rank})")
    return {f: gf.to_bytes(sol[k]) for k, f in enumerate(unknown)}


def is_mds(coeffs: np.ndarray, gf: GF, limit: int | None = None, rng: np.random.Generator | None = None) -> bool:
    """Check that every set of ``T`` columns is invertible.

    Enumerates all column subsets, or ``limit`` random ones when given.
    """
    T, cols = coeffs.shape
    if T == 0:
        return True
    if limit is None:
        subsets = itertools.combinations(range(cols), T)
    else:
        rng = rng or np.random.default_rng(0)
        subsets = (sorted(rng.choice(cols, size=T, replace=False)) for _ in range(limit))
    return all(gf.rank(coeffs[:, list(sub)]) == T for sub in subsets)


# ---------------------------------------------------------------------------


@dataclass
class Theorem2Report:
    trials: int
    failures: list = field(default_factory=list)
    saved: int = 0
    uncoded: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        return (
            f"mds round-trip: {self.trials} instances, {self.uncoded} uncoded vs "
            f"{self.uncoded - self.saved} coded transmissions, failures={len(self.failures)}"
        )


def verify_mds_round_trip(inst: UpdateInstance, rng: np.random.Generator, payload_len: int = 64) -> MdsPlan:
    """Encode random payloads for ``inst`` and decode them at every WCS.

    Raises :class:`MdsError` on any mismatch; returns the plan used.
    """
    plan = build_mds_plan(inst)
    expected_T = inst.t_un - (min(len(o) for o in inst.overlaps) if inst.t_un else 0)
    if plan.T != expected_T:
        raise MdsError(f"plan uses {plan.T} transmissions, expected {expected_T}")
    if plan.T == 0:
        return plan
    payloads = {f: rng.bytes(payload_len) for f in plan.file_order}
    sent = mds_encode(plan, payloads)
    for i in range(inst.n):
        side = {f: payloads[f] for f in inst.overlaps[i]}
        got = mds_decode(plan, side, sent)
        for f in inst.requests[i]:
            if got.get(f) != payloads[f]:
                raise MdsError(f"WCS {i} failed to recover file {f}")
        for f, data in got.items():
            if data != payloads[f]:
                raise MdsError(f"WCS {i} recovered a corrupted copy of file {f}")
    return plan


def check_theorem2(
    trials: int,
    rng: np.random.Generator,
    n_max: int = 8,
    m_max: int = 40,
    s_max: int = 12,
    payload_len: int = 64,
) -> Theorem2Report:
    report = Theorem2Report(trials)
    for trial in range(trials):
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(2, m_max + 1))
        s = int(rng.integers(1, min(s_max, m - 1) + 1))
        inst = random_instance(rng, n, m, s)
        try:
            plan = verify_mds_round_trip(inst, rng, payload_len)
        except MdsError as exc:
            report.failures.append((trial, n, m, s, str(exc)))
            continue
        report.uncoded += inst.t_un
        report.saved += inst.t_un - plan.T
    return report
