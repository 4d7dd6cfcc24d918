"""Exhaustive minimization of the hybrid execution time, plus pure-scheme
enumerators, the closed-form allocation shortcut, and parameter sweeps.

The search space is small at desk scale (tens of thousands of discrete
tuples), and for each discrete tuple the time is piecewise linear in
alpha, so only the feasible-interval endpoints and the map-arm crossing
need to be evaluated. Ties break toward the lexicographically smallest
(n_solvers, n_helpers, r1, r2, alpha).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from math import floor

from .errors import Infeasible, InfeasibleParams, UnsupportedReplication
from .loads import (
    LoadEnvelope,
    TimeBreakdown,
    acdc_load_envelope,
    acdc_shuffle_load,
    acdc_time,
    cdc_load_envelope,
    cdc_shuffle_load,
    cdc_time,
)
from .model import Allocation, SystemParams, TaskParams, divisibility_report
from .rational import sqrt_fraction


@dataclass(frozen=True)
class Plan:
    """Optimizer output: the chosen allocation and its time, with the
    raw-load time alongside (what the simulator would actually measure)."""

    alloc: Allocation
    time: TimeBreakdown
    time_raw: TimeBreakdown
    simulatable: bool
    runner_up: tuple[tuple[Allocation, Fraction], ...] = ()


def _phase_times(
    alpha: Fraction,
    r1: int,
    r2: int,
    ks: int,
    kh: int,
    task: TaskParams,
    system: SystemParams,
    load1: Fraction,
    load2: Fraction,
) -> TimeBreakdown:
    abar = 1 - alpha
    solver_arm = (alpha * r1 + abar * r2) / ks
    helper_arm = Fraction(0) if abar == 0 else abar / kh
    return TimeBreakdown(
        t_map=system.c_map * max(solver_arm, helper_arm),
        t_shuffle=system.c_shuffle * (alpha * load1 + abar * load2),
        t_reduce=system.c_reduce * Fraction(task.replication * task.n_reduce, ks),
    )


def best_alpha(
    r1: int,
    r2: int,
    ks: int,
    kh: int,
    task: TaskParams,
    system: SystemParams,
    env1: LoadEnvelope | None = None,
    env2: LoadEnvelope | None = None,
) -> tuple[Fraction, TimeBreakdown]:
    """Minimize the hybrid time over alpha for fixed discrete variables.

    Candidates are the endpoints of the storage-feasible alpha interval
    and the crossing point of the two map arms; ties go to the smaller
    alpha. Raises Infeasible when no alpha satisfies the storage budget.
    """
    if kh < 1:
        raise InfeasibleParams("best_alpha needs kh >= 1; use alpha = 1 directly")
    s = task.replication
    load1 = env1(r1) if env1 is not None else cdc_shuffle_load(r1, s, ks)
    load2 = env2(r2) if env2 is not None else acdc_shuffle_load(r2, s, ks)

    budget = Fraction(system.storage, task.n_files)
    lo, hi = Fraction(0), Fraction(1)
    slope = r1 - (r2 + 1)
    if slope > 0:
        hi = min(hi, Fraction(budget - (r2 + 1), slope))
    elif slope < 0:
        lo = max(lo, Fraction((r2 + 1) - budget, -slope))
    elif Fraction(r1) > budget:
        raise Infeasible(f"storage budget M/N = {budget} cannot host r1 = {r1}")
    if lo > hi:
        raise Infeasible(
            f"no alpha satisfies alpha*{r1} + (1-alpha)*{r2 + 1} <= {budget}"
        )

    candidates = {lo, hi}
    denom = ks + kh * (r1 - r2)
    if denom != 0:
        crossing = Fraction(ks - kh * r2, denom)
        if lo < crossing < hi:
            candidates.add(crossing)

    best: tuple[Fraction, TimeBreakdown] | None = None
    for alpha in sorted(candidates):
        t = _phase_times(alpha, r1, r2, ks, kh, task, system, load1, load2)
        if best is None or t.total < best[1].total:
            best = (alpha, t)
    return best


def _simulatable_alphas(r1, r2, ks, kh, task, lo, hi):
    out = []
    for numer in range(task.n_files + 1):
        alpha = Fraction(numer, task.n_files)
        if not lo <= alpha <= hi:
            continue
        if alpha < 1 and kh == 0:
            continue
        cand = Allocation(alpha, r1, r2, ks, kh)
        if not divisibility_report(cand, task):
            out.append(alpha)
    return out


def optimize(
    task: TaskParams,
    system: SystemParams,
    require_simulatable: bool = False,
    keep_runners: int = 6,
) -> Plan:
    """Global minimum of the hybrid execution time.

    Enumerates n_solvers in [max(1,s), min(K,Q)], n_helpers in
    [0, K-n_solvers], r1 in [1, n_solvers], r2 in [0, n_solvers], and
    optimizes alpha per tuple. Envelope loads are used by default; with
    require_simulatable the search sticks to raw integer-point loads and
    to allocations whose divisibility report is empty.
    """
    if system.storage < task.n_files:
        raise Infeasible(
            f"storage M = {system.storage} below file count N = {task.n_files}"
        )
    s = task.replication
    budget = Fraction(system.storage, task.n_files)
    best: tuple[Fraction, Allocation, TimeBreakdown] | None = None
    runners: list[tuple[Fraction, Allocation, TimeBreakdown]] = []

    def consider(alloc: Allocation, t: TimeBreakdown):
        nonlocal best
        entry = (t.total, alloc, t)
        if best is None or t.total < best[0]:
            if best is not None:
                runners.append(best)
            best = entry
        else:
            runners.append(entry)

    for ks in range(max(1, s), min(system.n_nodes, task.n_reduce) + 1):
        env1 = None if require_simulatable else cdc_load_envelope(s, ks)
        env2 = None if require_simulatable else acdc_load_envelope(s, ks)
        for kh in range(0, system.n_nodes - ks + 1):
            if kh == 0:
                for r1 in range(1, ks + 1):
                    if Fraction(r1) > budget:
                        continue
                    alloc = Allocation(Fraction(1), r1, 0, ks, 0)
                    if require_simulatable and divisibility_report(alloc, task):
                        continue
                    load1 = env1(r1) if env1 is not None else cdc_shuffle_load(r1, s, ks)
                    consider(alloc, _phase_times(Fraction(1), r1, 0, ks, 0, task, system, load1, Fraction(0)))
                continue
            for r1 in range(1, ks + 1):
                for r2 in range(0, ks + 1):
                    if require_simulatable:
                        lo, hi = Fraction(0), Fraction(1)
                        slope = r1 - (r2 + 1)
                        if slope > 0:
                            hi = min(hi, Fraction(budget - (r2 + 1), slope))
                        elif slope < 0:
                            lo = max(lo, Fraction((r2 + 1) - budget, -slope))
                        elif Fraction(r1) > budget:
                            continue
                        if lo > hi:
                            continue
                        for alpha in _simulatable_alphas(r1, r2, ks, kh, task, lo, hi):
                            alloc = Allocation(alpha, r1, r2, ks, kh)
                            load1 = cdc_shuffle_load(r1, s, ks)
                            load2 = acdc_shuffle_load(r2, s, ks)
                            consider(alloc, _phase_times(alpha, r1, r2, ks, kh, task, system, load1, load2))
                        continue
                    try:
                        alpha, t = best_alpha(r1, r2, ks, kh, task, system, env1, env2)
                    except Infeasible:
                        continue
                    consider(Allocation(alpha, r1, r2, ks, kh), t)

    if best is None:
        raise Infeasible("no feasible allocation for these parameters")

    total, alloc, t = best
    runners.sort(key=lambda e: e[0])
    seen = set()
    top = []
    for rt, ra, _ in runners:
        key = (ra.n_solvers, ra.n_helpers, ra.r1, ra.r2, ra.alpha)
        if key in seen:
            continue
        seen.add(key)
        top.append((ra, rt))
        if len(top) >= keep_runners:
            break
    t_raw = _phase_times(
        alloc.alpha,
        alloc.r1,
        alloc.r2,
        alloc.n_solvers,
        alloc.n_helpers,
        task,
        system,
        cdc_shuffle_load(alloc.r1, s, alloc.n_solvers),
        acdc_shuffle_load(alloc.r2, s, alloc.n_solvers),
    )
    return Plan(
        alloc=alloc,
        time=t,
        time_raw=t_raw,
        simulatable=not divisibility_report(alloc, task),
        runner_up=tuple(top),
    )


@dataclass(frozen=True)
class PureCdcPlan:
    kc: int
    r1: int
    time: TimeBreakdown


@dataclass(frozen=True)
class PureAcdcPlan:
    ks: int
    kh: int
    r2: int
    time: TimeBreakdown


def best_pure_cdc(task: TaskParams, system: SystemParams) -> PureCdcPlan:
    """Best pure solver-exchange point: kc <= K, 1 <= r1 <= min(kc, M/N)."""
    best = None
    r_cap = floor(Fraction(system.storage, task.n_files))
    for kc in range(max(1, task.replication), system.n_nodes + 1):
        for r1 in range(1, min(kc, r_cap) + 1):
            t = cdc_time(r1, kc, task, system)
            if best is None or t.total < best.time.total:
                best = PureCdcPlan(kc, r1, t)
    if best is None:
        raise Infeasible("no feasible pure solver-exchange point (check M >= N)")
    return best


def pure_acdc_candidates(task: TaskParams, system: SystemParams) -> list[PureAcdcPlan]:
    """All feasible pure helper-assisted points.

    The enumeration uses every node (ks + kh = K): extra helpers only
    lower the map time, so leaving nodes idle is never useful in the pure
    scheme. r2 stays below ks (r2 = ks would mean no helper traffic at
    all) and each file costs r2 + 1 stored copies.
    """
    out = []
    budget = Fraction(system.storage, task.n_files)
    for ks in range(max(1, task.replication), system.n_nodes):
        kh = system.n_nodes - ks
        for r2 in range(0, ks):
            if Fraction(r2 + 1) > budget:
                continue
            out.append(PureAcdcPlan(ks, kh, r2, acdc_time(r2, ks, kh, task, system)))
    return out


def best_pure_acdc(task: TaskParams, system: SystemParams) -> PureAcdcPlan:
    candidates = pure_acdc_candidates(task, system)
    if not candidates:
        raise Infeasible("no feasible pure helper-assisted point")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.time.total < best.time.total:
            best = cand
    return best


def analytic_cdc_allocation(
    task: TaskParams, system: SystemParams
) -> tuple[Fraction, Fraction]:
    """Closed-form (r1*, ks*) for the pure solver-exchange scheme at s = 1,
    ignoring integrality and the reduce phase.

    With kk = min(K, Q), m = M/N and rho = c_shuffle/c_map, the
    unconstrained minimizer of c_m*r/kk + c_s*(1/r)*(1 - r/kk) sits at
    r = sqrt(rho*kk); clamping to [1, min(kk, m)] reproduces every case
    of the piecewise answer. When storage binds (r1* = m) and shuffling
    dominates (rho >= m), shrinking the solver set to m nodes is at least
    as good, so both candidates are evaluated exactly and ties go to the
    smaller solver count.
    """
    if task.replication != 1:
        raise UnsupportedReplication("closed-form allocation only derived for s = 1")
    kk = Fraction(min(system.n_nodes, task.n_reduce))
    m = Fraction(system.storage, task.n_files)
    rho = system.c_shuffle / system.c_map

    def time_at(r: Fraction, ks: Fraction) -> Fraction:
        return system.c_map * r / ks + system.c_shuffle * (1 / r) * (1 - r / ks)

    r_star = min(max(sqrt_fraction(rho * kk), Fraction(1)), min(kk, m))
    candidates = [(r_star, kk)]
    if 1 <= m < kk and r_star == m:
        candidates.append((m, m))
    best = min(candidates, key=lambda c: (time_at(*c), c[1]))
    return best


_TASK_FIELDS = {"N": "n_files", "Q": "n_reduce", "s": "replication", "V": "value_bits"}
_SYSTEM_FIELDS = {"K": "n_nodes", "M": "storage", "c_m": "c_map", "c_s": "c_shuffle", "c_r": "c_reduce"}


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: object
    t_cdc: Fraction | None
    t_acdc: Fraction | None
    t_hybrid: Fraction | None
    alloc: Allocation | None
    status: str


def sweep(task: TaskParams, system: SystemParams, param: str, values) -> list[SweepRow]:
    """Best pure and hybrid times for each value of one varied parameter.

    Infeasible rows are flagged rather than raised so a sweep across a
    feasibility boundary still yields a complete table.
    """
    if param not in _TASK_FIELDS and param not in _SYSTEM_FIELDS:
        raise ValueError(f"unknown sweep parameter {param!r}")
    rows = []
    for value in values:
        if param in _TASK_FIELDS:
            t = replace(task, **{_TASK_FIELDS[param]: value})
            sy = system
        else:
            sy = replace(system, **{_SYSTEM_FIELDS[param]: value})
            t = task
        try:
            cdc = best_pure_cdc(t, sy).time.total
        except (Infeasible, InfeasibleParams):
            cdc = None
        try:
            acdc = best_pure_acdc(t, sy).time.total
        except (Infeasible, InfeasibleParams):
            acdc = None
        try:
            plan = optimize(t, sy)
            rows.append(SweepRow(param, value, cdc, acdc, plan.time.total, plan.alloc, "ok"))
        except (Infeasible, InfeasibleParams) as exc:
            rows.append(SweepRow(param, value, cdc, acdc, None, None, f"infeasible: {exc}"))
    return rows
