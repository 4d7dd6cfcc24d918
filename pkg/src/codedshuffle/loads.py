"""Closed-form shuffle loads, lower convex envelopes, and phase times.

Everything here is exact Fraction arithmetic; no floats. Empty summation
ranges evaluate to zero, which is exactly the no-shuffle case r = K.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, comb

from .errors import EmptyInput, InfeasibleParams, UndefinedLoad, UnsupportedReplication
from .model import Allocation, SystemParams, TaskParams


@lru_cache(maxsize=None)
def cdc_shuffle_load(r1: int, s: int, k: int) -> Fraction:
    """Normalized communication load of the solver-exchange subsystem.

    For replication degree r1 over k solvers with reduce replication s:

        sum over l in [max(r1+1, s), min(r1+s, k)] of
            C(k,l) * C(l-1,r1) * C(r1,l-s) / (C(k,r1) * C(k,s)) * l/(l-1)

    The s = 1 specialization collapses to (1/r1) * (1 - r1/k).
    """
    if not (0 <= r1 <= k and 1 <= s <= k):
        raise InfeasibleParams(f"cdc_shuffle_load needs 0 <= r1 <= k, 1 <= s <= k; got r1={r1}, s={s}, k={k}")
    if r1 == 0 and s == 1:
        raise UndefinedLoad("solver exchange with unstored files (r1=0, s=1) is infeasible")
    total = Fraction(0)
    for l in range(max(r1 + 1, s), min(r1 + s, k) + 1):
        total += (
            Fraction(comb(k, l) * comb(l - 1, r1) * comb(r1, l - s), comb(k, r1) * comb(k, s))
            * Fraction(l, l - 1)
        )
    return total


@lru_cache(maxsize=None)
def acdc_shuffle_load(r2: int, s: int, k: int) -> Fraction:
    """Normalized communication load of the helper-assisted subsystem.

    Same summation range as cdc_shuffle_load without the l/(l-1) factor;
    r2 = 0 means helpers broadcast uncoded (load 1 at s = 1), r2 = k means
    solvers already store everything (load 0).
    """
    if not (0 <= r2 <= k and 1 <= s <= k):
        raise InfeasibleParams(f"acdc_shuffle_load needs 0 <= r2 <= k, 1 <= s <= k; got r2={r2}, s={s}, k={k}")
    total = Fraction(0)
    for l in range(max(r2 + 1, s), min(r2 + s, k) + 1):
        total += Fraction(
            comb(k, l) * comb(l - 1, r2) * comb(r2, l - s), comb(k, r2) * comb(k, s)
        )
    return total


@dataclass(frozen=True)
class LoadEnvelope:
    """Lower convex envelope of (r, load) points, evaluable at rational r."""

    vertices: tuple[tuple[Fraction, Fraction], ...]

    def __call__(self, r) -> Fraction:
        r = Fraction(r)
        xs = [v[0] for v in self.vertices]
        if not xs[0] <= r <= xs[-1]:
            raise ValueError(f"r={r} outside envelope domain [{xs[0]}, {xs[-1]}]")
        for (x0, y0), (x1, y1) in zip(self.vertices, self.vertices[1:]):
            if x0 <= r <= x1:
                return y0 + (y1 - y0) * (r - x0) / (x1 - x0)
        return self.vertices[-1][1]


def lower_envelope(points) -> LoadEnvelope:
    """Lower convex hull of (r, load) points with distinct increasing r.

    Monotone-chain construction; collinear interior points are dropped,
    which leaves values unchanged everywhere.
    """
    pts = [(Fraction(r), Fraction(v)) for r, v in points]
    if not pts:
        raise EmptyInput("no points to build an envelope from")
    if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
        raise ValueError("points must be sorted by r with distinct r values")
    hull: list[tuple[Fraction, Fraction]] = []
    for p in pts:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (p[1] - y0) - (p[0] - x0) * (y1 - y0) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return LoadEnvelope(tuple(hull))


def cdc_load_envelope(s: int, k: int) -> LoadEnvelope:
    """Envelope of the solver-exchange load over integer r1 in [0, k].

    The r1 = 0 point is skipped at s = 1 where the load is undefined.
    """
    start = 1 if s == 1 else 0
    return lower_envelope([(r, cdc_shuffle_load(r, s, k)) for r in range(start, k + 1)])


def acdc_load_envelope(s: int, k: int) -> LoadEnvelope:
    """Envelope of the helper-assisted load over integer r2 in [0, k]."""
    return lower_envelope([(r, acdc_shuffle_load(r, s, k)) for r in range(0, k + 1)])


@dataclass(frozen=True)
class TimeBreakdown:
    """Per-phase execution times under the sequential map/shuffle/reduce model."""

    t_map: Fraction
    t_shuffle: Fraction
    t_reduce: Fraction

    @property
    def total(self) -> Fraction:
        return self.t_map + self.t_shuffle + self.t_reduce

    def scaled(self, factor) -> "TimeBreakdown":
        f = Fraction(factor)
        return TimeBreakdown(self.t_map * f, self.t_shuffle * f, self.t_reduce * f)


def cdc_time(r1: int, kc: int, task: TaskParams, system: SystemParams) -> TimeBreakdown:
    """Execution time of the pure solver-exchange scheme on kc nodes.

    Map c_m*r1/kc, shuffle c_s * load, reduce c_r*s*Q/kc. Requires
    1 <= r1 <= kc <= K and replication budget r1 <= M/N.
    """
    if not 1 <= r1 <= kc <= system.n_nodes:
        raise InfeasibleParams(f"need 1 <= r1 <= kc <= K; got r1={r1}, kc={kc}, K={system.n_nodes}")
    if task.replication > kc:
        raise InfeasibleParams(f"replication s={task.replication} exceeds kc={kc}")
    if Fraction(r1) > Fraction(system.storage, task.n_files):
        raise InfeasibleParams(
            f"r1={r1} exceeds storage budget M/N = {Fraction(system.storage, task.n_files)}"
        )
    return TimeBreakdown(
        t_map=system.c_map * Fraction(r1, kc),
        t_shuffle=system.c_shuffle * cdc_shuffle_load(r1, task.replication, kc),
        t_reduce=system.c_reduce * Fraction(task.replication * task.n_reduce, kc),
    )


def acdc_time(r2: int, ks: int, kh: int, task: TaskParams, system: SystemParams) -> TimeBreakdown:
    """Execution time of the pure helper-assisted scheme.

    Map c_m*max(r2/ks, 1/kh), shuffle c_s * load, reduce c_r*s*Q/ks.
    Every file costs r2 solver copies plus one helper copy, so the
    storage budget requires r2 + 1 <= M/N.
    """
    if ks + kh > system.n_nodes:
        raise InfeasibleParams(f"ks + kh = {ks + kh} exceeds K = {system.n_nodes}")
    if kh < 1:
        raise InfeasibleParams("helper-assisted scheme needs at least one helper")
    if not 0 <= r2 <= ks:
        raise InfeasibleParams(f"need 0 <= r2 <= ks; got r2={r2}, ks={ks}")
    if task.replication > ks:
        raise InfeasibleParams(f"replication s={task.replication} exceeds ks={ks}")
    if Fraction(r2 + 1) > Fraction(system.storage, task.n_files):
        raise InfeasibleParams(
            f"r2+1={r2 + 1} exceeds storage budget M/N = {Fraction(system.storage, task.n_files)}"
        )
    return TimeBreakdown(
        t_map=system.c_map * max(Fraction(r2, ks), Fraction(1, kh)),
        t_shuffle=system.c_shuffle * acdc_shuffle_load(r2, task.replication, ks),
        t_reduce=system.c_reduce * Fraction(task.replication * task.n_reduce, ks),
    )


def hybrid_time(
    alloc: Allocation,
    task: TaskParams,
    system: SystemParams,
    env1: LoadEnvelope | None = None,
    env2: LoadEnvelope | None = None,
) -> TimeBreakdown:
    """Execution time of the hybrid scheme at one allocation.

    Shuffle cost is alpha*c_s*L1 + (1-alpha)*c_s*L2 where L1/L2 come from
    the envelopes when given (planner mode) and from the raw integer-point
    formulas otherwise (what the simulator realizes). With alpha = 1 the
    helper arm of the map maximum is 0 by convention, even when kh = 0.
    """
    alloc.validate(task, system)
    ks, kh = alloc.n_solvers, alloc.n_helpers
    a, abar = alloc.alpha, alloc.alpha_bar
    s = task.replication

    solver_arm = (a * alloc.r1 + abar * alloc.r2) / ks
    helper_arm = Fraction(0) if abar == 0 else abar / kh
    t_map = system.c_map * max(solver_arm, helper_arm)

    t_shuffle = Fraction(0)
    if a > 0:
        load1 = env1(alloc.r1) if env1 is not None else cdc_shuffle_load(alloc.r1, s, ks)
        t_shuffle += a * system.c_shuffle * load1
    if abar > 0:
        load2 = env2(alloc.r2) if env2 is not None else acdc_shuffle_load(alloc.r2, s, ks)
        t_shuffle += abar * system.c_shuffle * load2

    t_reduce = system.c_reduce * Fraction(s * task.n_reduce, ks)
    return TimeBreakdown(t_map, t_shuffle, t_reduce)


def acdc_sufficiency_threshold(
    task: TaskParams, system: SystemParams
) -> tuple[int, int | None, int]:
    """Resource levels beyond which the helper-assisted scheme is optimal.

    Returns (r2_star, k_min, m_min): the replication degree minimizing
    c_m*r/Q + c_s/(r+1)*(1-r/Q) over integers 0..Q (ties to the smaller
    r), the node count above which that point is optimal, and the storage
    needed, m_min = (r2_star+1)*N. k_min is Q + ceil(Q/r2_star) for
    0 < r2_star < Q and Q for r2_star = Q; at r2_star = 0 no node
    threshold is defined and None is returned.
    """
    if task.replication != 1:
        raise UnsupportedReplication("threshold only derived for replication s = 1")
    q = task.n_reduce

    def objective(r: int) -> Fraction:
        return system.c_map * Fraction(r, q) + system.c_shuffle * Fraction(1, r + 1) * (
            1 - Fraction(r, q)
        )

    r2_star = min(range(q + 1), key=lambda r: (objective(r), r))
    if r2_star == 0:
        k_min = None
    elif r2_star == q:
        k_min = q
    else:
        k_min = q + ceil(Fraction(q, r2_star))
    return r2_star, k_min, (r2_star + 1) * task.n_files
