"""Executable converse: counting bounds on the communication load and on
per-phase times, for arbitrary placements and reduce assignments.

All operations work on plain mappings (node -> stored file set, node ->
reduce set) so externally supplied placements can be checked; adapters
from the scheme's own Placement/ReduceAssignment types are provided.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .errors import AssignmentNotSymmetric
from .loads import LoadEnvelope, TimeBreakdown, acdc_load_envelope, cdc_load_envelope
from .model import Placement, ReduceAssignment, SystemParams, TaskParams

NodeFiles = dict[int, frozenset[int]]
ReduceSets = dict[int, frozenset[int]]


def placement_maps(placement: Placement) -> NodeFiles:
    return dict(placement.node_files)


def reduce_maps(assignment: ReduceAssignment, n_nodes: int) -> ReduceSets:
    return {
        k: frozenset(assignment.reduce_sets.get(k, frozenset()))
        for k in range(1, n_nodes + 1)
    }


def tally_availability(
    node_files: NodeFiles, reduce_sets: ReduceSets, n_files: int, n_reduce: int
) -> dict[tuple[int, int], int]:
    """Count intermediate values by (stored-at j nodes, needed-by d nodes)."""
    counts: dict[tuple[int, int], int] = {}
    storers = {
        n: frozenset(k for k, files in node_files.items() if n in files)
        for n in range(1, n_files + 1)
    }
    needers = {
        q: frozenset(k for k, funcs in reduce_sets.items() if q in funcs)
        for q in range(1, n_reduce + 1)
    }
    for q in range(1, n_reduce + 1):
        for n in range(1, n_files + 1):
            j = len(storers[n])
            d = len(needers[q] - storers[n])
            counts[(j, d)] = counts.get((j, d), 0) + 1
    return counts


def counting_lower_bound(
    counts: dict[tuple[int, int], int], n_files: int, n_reduce: int
) -> Fraction:
    """Generic cut-set style lower bound on the communication load:
    (1/QN) * sum a_{j,d} * d/(j+d-1) over entries needed somewhere."""
    total = Fraction(0)
    for (j, d), a in counts.items():
        if d >= 1:
            total += Fraction(a * d, j + d - 1)
    return total / (n_files * n_reduce)


def split_by_reduce_role(reduce_sets: ReduceSets) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Solvers are the nodes with nonempty reduce sets; the rest help."""
    solvers = tuple(sorted(k for k, funcs in reduce_sets.items() if funcs))
    helpers = tuple(sorted(k for k, funcs in reduce_sets.items() if not funcs))
    return solvers, helpers


def check_weakly_symmetric(reduce_sets: ReduceSets, n_reduce: int) -> tuple[tuple[int, ...], int]:
    """Verify the assignment is one batch per size-s solver subset.

    Returns (solver ids, s). Raises AssignmentNotSymmetric when reducer
    sets have uneven sizes or the per-subset function counts differ.
    """
    solvers, _ = split_by_reduce_role(reduce_sets)
    if not solvers:
        raise AssignmentNotSymmetric("no node computes any reduce function")
    owners: dict[int, frozenset[int]] = {}
    for q in range(1, n_reduce + 1):
        owner = frozenset(k for k in solvers if q in reduce_sets[k])
        if not owner:
            raise AssignmentNotSymmetric(f"function {q} is assigned to no node")
        owners[q] = owner
    sizes = {len(o) for o in owners.values()}
    if len(sizes) != 1:
        raise AssignmentNotSymmetric(f"uneven replication degrees {sorted(sizes)}")
    s = sizes.pop()
    per_subset: dict[frozenset[int], int] = {}
    for owner in owners.values():
        per_subset[owner] = per_subset.get(owner, 0) + 1
    expected = {frozenset(c) for c in itertools.combinations(solvers, s)}
    if set(per_subset) != expected or len(set(per_subset.values())) != 1:
        raise AssignmentNotSymmetric(
            "function batches are not spread evenly over all size-s solver subsets"
        )
    return solvers, s


@dataclass(frozen=True)
class StorageProfile:
    """Per-degree file counts split by whether any helper stores the file.

    b1[j] counts files stored at exactly j solvers and no helper, b2[j]
    files at exactly j solvers and at least one helper. alpha, r1, r2 are
    the rational operating-point coordinates these counts induce.
    """

    n_files: int
    solver_ids: tuple[int, ...]
    helper_ids: tuple[int, ...]
    b1: dict[int, int]
    b2: dict[int, int]
    alpha: Fraction
    r1: Fraction | None
    r2: Fraction | None

    @property
    def solver_copies(self) -> int:
        return sum(j * c for j, c in self.b1.items()) + sum(
            j * c for j, c in self.b2.items()
        )


def tally_storage_profile(node_files: NodeFiles, reduce_sets: ReduceSets, n_files: int) -> StorageProfile:
    """Derive the (alpha, r1, r2) coordinates of an arbitrary placement."""
    solvers, helpers = split_by_reduce_role(reduce_sets)
    solver_set, helper_set = set(solvers), set(helpers)
    b1: dict[int, int] = {}
    b2: dict[int, int] = {}
    for n in range(1, n_files + 1):
        storers = {k for k, files in node_files.items() if n in files}
        if not storers:
            raise ValueError(f"file {n} is stored nowhere")
        j = len(storers & solver_set)
        if storers & helper_set:
            b2[j] = b2.get(j, 0) + 1
        else:
            if j == 0:
                raise ValueError(f"file {n} is stored nowhere")
            b1[j] = b1.get(j, 0) + 1
    n1 = sum(b1.values())
    n2 = sum(b2.values())
    alpha = Fraction(n1, n_files)
    r1 = Fraction(sum(j * c for j, c in b1.items()), n1) if n1 else None
    r2 = Fraction(sum(j * c for j, c in b2.items()), n2) if n2 else None
    return StorageProfile(n_files, solvers, helpers, b1, b2, alpha, r1, r2)


def profile_to_availability(
    profile: StorageProfile, s: int, n_reduce: int
) -> tuple[dict[tuple[int, int], Fraction], dict[tuple[int, int], Fraction]]:
    """Availability tables of the helper-merged system from the storage
    profile, assuming a weakly symmetric assignment:

        a_i[j, d] = Q/C(ks, s) * b_i[j] * C(ks-j, d) * C(j, j+d-s)
    """
    ks = len(profile.solver_ids)
    groups = comb(ks, s)
    a1: dict[tuple[int, int], Fraction] = {}
    a2: dict[tuple[int, int], Fraction] = {}
    for table, b in ((a1, profile.b1), (a2, profile.b2)):
        for j, count in b.items():
            for d in range(max(1, s - j), min(s, ks - j) + 1):
                value = Fraction(n_reduce, groups) * count * comb(ks - j, d) * comb(
                    j, j + d - s
                )
                if value:
                    table[(j, d)] = value
    return a1, a2


def enhanced_availability(
    node_files: NodeFiles, reduce_sets: ReduceSets, n_files: int, n_reduce: int
) -> tuple[dict[tuple[int, int], int], dict[tuple[int, int], int]]:
    """Direct enumeration oracle for the helper-merged system.

    j counts solver storers only; values also stored by any helper land in
    the second table. Entries with d = 0 are dropped to match the formula
    tables' ranges.
    """
    solvers, helpers = split_by_reduce_role(reduce_sets)
    solver_set, helper_set = set(solvers), set(helpers)
    a1: dict[tuple[int, int], int] = {}
    a2: dict[tuple[int, int], int] = {}
    for n in range(1, n_files + 1):
        storers = {k for k, files in node_files.items() if n in files}
        j = len(storers & solver_set)
        merged = bool(storers & helper_set)
        for q in range(1, n_reduce + 1):
            d = sum(1 for k in solver_set if q in reduce_sets[k] and n not in node_files[k])
            if d == 0:
                continue
            table = a2 if merged else a1
            table[(j, d)] = table.get((j, d), 0) + 1
    return a1, a2


@dataclass(frozen=True)
class EnhancedBound:
    """Converse value for one placement: the envelope form actually used,
    plus the sharper pre-relaxation sum it was derived from."""

    value: Fraction
    pre_jensen: Fraction
    alpha: Fraction
    r1: Fraction | None
    r2: Fraction | None
    ks: int
    kh: int


def enhanced_lower_bound(
    profile: StorageProfile,
    s: int,
    n_reduce: int,
    env1: LoadEnvelope | None = None,
    env2: LoadEnvelope | None = None,
) -> EnhancedBound:
    """Lower bound on communication load under weak symmetry.

    value = alpha * env1(r1) + (1-alpha) * env2(r2) with the load
    envelopes evaluated at the profile's fractional coordinates.
    pre_jensen is the exact per-degree sum before averaging the storage
    degrees, and always dominates value.
    """
    ks = len(profile.solver_ids)
    kh = len(profile.helper_ids)
    groups = comb(ks, s)

    pre = Fraction(0)
    for b, cascade in ((profile.b1, True), (profile.b2, False)):
        for j, count in b.items():
            inner = Fraction(0)
            for ell in range(max(j + 1, s), min(j + s, ks) + 1):
                term = Fraction(comb(ks - j, ell - j) * comb(j, ell - s) * (ell - j))
                inner += term / (ell - 1 if cascade else ell)
            pre += Fraction(count, 1) * inner
    pre /= profile.n_files * groups

    value = Fraction(0)
    if profile.alpha > 0:
        env1 = env1 or cdc_load_envelope(s, ks)
        value += profile.alpha * env1(profile.r1)
    if profile.alpha < 1:
        env2 = env2 or acdc_load_envelope(s, ks)
        value += (1 - profile.alpha) * env2(profile.r2)
    return EnhancedBound(value, pre, profile.alpha, profile.r1, profile.r2, ks, kh)


def phase_lower_bounds(
    profile: StorageProfile, task: TaskParams, system: SystemParams
) -> TimeBreakdown:
    """Per-phase time lower bounds for any weakly symmetric scheme with
    this placement's storage profile."""
    ks = len(profile.solver_ids)
    kh = len(profile.helper_ids)
    alpha = profile.alpha
    abar = 1 - alpha
    solver_arm = Fraction(0)
    if alpha > 0:
        solver_arm += alpha * profile.r1 / ks
    if abar > 0:
        solver_arm += abar * profile.r2 / ks
    helper_arm = Fraction(0) if abar == 0 else abar / kh
    shuffle = enhanced_lower_bound(profile, task.replication, task.n_reduce)
    return TimeBreakdown(
        t_map=system.c_map * max(solver_arm, helper_arm),
        t_shuffle=system.c_shuffle * shuffle.value,
        t_reduce=system.c_reduce
        * Fraction(task.replication * task.n_reduce, ks),
    )
