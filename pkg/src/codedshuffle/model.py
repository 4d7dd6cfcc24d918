"""Domain types, reduce assignment, and the hybrid file placement.

Node ids are 1..K. Solvers (nodes that compute reduce functions) take ids
1..Ks, helpers (map/shuffle only) take Ks+1..Ks+Kh; further ids stay idle.
All subset enumeration is lexicographic over sorted node ids and all
batch-to-subset maps hand out contiguous blocks in index order, so two
runs with equal inputs produce identical structures.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import NamedTuple

from .errors import DivisibilityError, InfeasibleParams


class IvId(NamedTuple):
    """Identity of one intermediate value: function index q, file index n."""

    q: int
    n: int


@dataclass(frozen=True)
class TaskParams:
    """Parameters fixed by the computation itself.

    n_files: number of input files (N)
    n_reduce: number of output/reduce functions (Q)
    replication: how many distinct nodes compute each reduce function (s)
    value_bits: length in bits of one intermediate value (V)
    """

    n_files: int
    n_reduce: int
    replication: int = 1
    value_bits: int = 1

    def __post_init__(self):
        if self.n_files < 1:
            raise ValueError("n_files must be >= 1")
        if self.n_reduce < 1:
            raise ValueError("n_reduce must be >= 1")
        if not 1 <= self.replication <= self.n_reduce:
            raise ValueError("replication must satisfy 1 <= s <= n_reduce")
        if self.value_bits < 1:
            raise ValueError("value_bits must be >= 1")


@dataclass(frozen=True)
class SystemParams:
    """Parameters fixed by the available infrastructure.

    n_nodes: available compute nodes (K)
    storage: total input-file storage budget across all nodes, in files (M)
    c_map / c_shuffle / c_reduce: time per unit of map load, per unit of
    communication load, and per reduce function (all positive rationals)
    """

    n_nodes: int
    storage: int
    c_map: Fraction = Fraction(1)
    c_shuffle: Fraction = Fraction(1)
    c_reduce: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "c_map", Fraction(self.c_map))
        object.__setattr__(self, "c_shuffle", Fraction(self.c_shuffle))
        object.__setattr__(self, "c_reduce", Fraction(self.c_reduce))
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.storage < 1:
            raise ValueError("storage must be >= 1")
        if self.c_map <= 0 or self.c_shuffle <= 0 or self.c_reduce < 0:
            raise ValueError("cost coefficients must be positive")


@dataclass(frozen=True)
class Allocation:
    """One operating point of the hybrid scheme.

    alpha is the fraction of files handled by the solver-exchange
    subsystem; r1 and r2 are the per-file solver replication degrees of
    the two subsystems; n_solvers and n_helpers split the nodes.
    """

    alpha: Fraction
    r1: int
    r2: int
    n_solvers: int
    n_helpers: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))

    @property
    def alpha_bar(self) -> Fraction:
        return 1 - self.alpha

    @property
    def storage_per_file(self) -> Fraction:
        """Files stored per input file: alpha*r1 + (1-alpha)*(r2+1).

        The +1 accounts for the single helper copy of every file in the
        helper-assisted subsystem.
        """
        return self.alpha * self.r1 + self.alpha_bar * (self.r2 + 1)

    def violations(self, task: TaskParams, system: SystemParams) -> list[str]:
        """All feasibility constraints this allocation breaks (empty = ok)."""
        out = []
        ks, kh = self.n_solvers, self.n_helpers
        if not 0 <= self.alpha <= 1:
            out.append(f"alpha={self.alpha} outside [0, 1]")
        if ks < 1 or ks > task.n_reduce:
            out.append(f"need 1 <= n_solvers <= Q, got n_solvers={ks}, Q={task.n_reduce}")
        if kh < 0 or ks + kh > system.n_nodes:
            out.append(f"need n_solvers + n_helpers <= K, got {ks}+{kh} > {system.n_nodes}")
        if task.replication > ks:
            out.append(f"replication s={task.replication} exceeds n_solvers={ks}")
        for name, r in (("r1", self.r1), ("r2", self.r2)):
            if not 0 <= r <= ks:
                out.append(f"{name}={r} outside [0, n_solvers={ks}]")
        budget = Fraction(system.storage, task.n_files)
        if self.storage_per_file > budget:
            out.append(
                f"storage alpha*r1 + (1-alpha)*(r2+1) = {self.storage_per_file} "
                f"exceeds M/N = {budget}"
            )
        if self.alpha < 1 and kh == 0:
            out.append("alpha < 1 requires at least one helper")
        if self.alpha > 0 and self.r1 < 1:
            out.append("alpha > 0 requires r1 >= 1")
        return out

    def validate(self, task: TaskParams, system: SystemParams) -> None:
        bad = self.violations(task, system)
        if bad:
            raise InfeasibleParams("; ".join(bad))


@dataclass(frozen=True)
class ReduceAssignment:
    """Weakly symmetric reduce assignment over the solver set.

    The function indices 1..Q are handed out in contiguous blocks to the
    size-s solver subsets in lexicographic order; a solver computes a
    block iff it belongs to the block's subset. batches maps each subset
    to its block, reduce_sets maps each solver to its full W_k.
    """

    solver_ids: tuple[int, ...]
    replication: int
    n_reduce: int
    batches: dict[tuple[int, ...], tuple[int, ...]]
    reduce_sets: dict[int, frozenset[int]] = field(repr=False)
    owners: dict[int, tuple[int, ...]] = field(repr=False)

    def reducers_of(self, q: int) -> tuple[int, ...]:
        """The s solver ids that compute function q."""
        return self.owners[q]


def build_reduce_assignment(solver_ids, s: int, n_reduce: int) -> ReduceAssignment:
    """Split n_reduce functions evenly over the size-s subsets of solvers."""
    solvers = tuple(sorted(solver_ids))
    if s > len(solvers):
        raise InfeasibleParams(f"replication s={s} exceeds solver count {len(solvers)}")
    groups = comb(len(solvers), s)
    if n_reduce % groups != 0:
        nearest = max(groups, round(n_reduce / groups) * groups)
        raise DivisibilityError(
            [
                f"C({len(solvers)}, {s}) = {groups} does not divide Q = {n_reduce} "
                f"(nearest feasible Q: {nearest})"
            ]
        )
    per_batch = n_reduce // groups
    batches: dict[tuple[int, ...], tuple[int, ...]] = {}
    owners: dict[int, tuple[int, ...]] = {}
    nxt = 1
    for subset in itertools.combinations(solvers, s):
        block = tuple(range(nxt, nxt + per_batch))
        batches[subset] = block
        for q in block:
            owners[q] = subset
        nxt += per_batch
    reduce_sets = {
        k: frozenset(q for subset, block in batches.items() if k in subset for q in block)
        for k in solvers
    }
    return ReduceAssignment(solvers, s, n_reduce, batches, reduce_sets, owners)


@dataclass(frozen=True)
class Placement:
    """Per-node file sets plus the batch structure that generated them."""

    n_nodes: int
    solver_ids: tuple[int, ...]
    helper_ids: tuple[int, ...]
    group1_files: tuple[int, ...]
    group2_files: tuple[int, ...]
    batches1: dict[tuple[int, ...], tuple[int, ...]]
    batches2: dict[tuple[tuple[int, ...], int], tuple[int, ...]]
    node_files: dict[int, frozenset[int]] = field(repr=False)
    solver_storers: dict[int, tuple[int, ...]] = field(repr=False)
    helper_of: dict[int, int | None] = field(repr=False)

    def files_of(self, node: int) -> frozenset[int]:
        return self.node_files[node]

    def total_stored(self) -> int:
        return sum(len(files) for files in self.node_files.values())


def divisibility_report(alloc: Allocation, task: TaskParams) -> list[str]:
    """Integrality constraints the concrete scheme needs; empty means ok.

    The planner's formulas hold for any rational operating point, but the
    executable scheme additionally needs whole files per batch, whole
    functions per reduce batch, and (for the solver exchange) segment
    splits that divide the value length.
    """
    out = []
    n1 = alloc.alpha * task.n_files
    if n1.denominator != 1:
        out.append(f"alpha*N = {n1} is not an integer")
        return out
    n1 = int(n1)
    n2 = task.n_files - n1
    ks, kh = alloc.n_solvers, alloc.n_helpers
    if alloc.alpha > 0:
        b1 = comb(ks, alloc.r1)
        if b1 == 0 or n1 % b1 != 0:
            out.append(f"C({ks}, {alloc.r1}) = {b1} does not divide N1 = {n1}")
        if alloc.r1 >= 1 and task.value_bits % alloc.r1 != 0:
            out.append(
                f"r1 = {alloc.r1} does not divide value_bits = {task.value_bits} "
                "(needed for the segment split)"
            )
    if alloc.alpha < 1:
        b2 = kh * comb(ks, alloc.r2)
        if b2 == 0 or n2 % b2 != 0:
            out.append(f"Kh*C({ks}, {alloc.r2}) = {b2} does not divide N2 = {n2}")
    groups = comb(ks, task.replication)
    if groups == 0 or task.n_reduce % groups != 0:
        out.append(
            f"C({ks}, {task.replication}) = {groups} does not divide Q = {task.n_reduce}"
        )
    return out


def build_hybrid_placement(alloc: Allocation, task: TaskParams, n_nodes: int) -> Placement:
    """Materialize the two-subsystem file placement for one allocation.

    Group-1 files (the first alpha*N) are split into one batch per size-r1
    solver subset and stored by exactly that subset. Group-2 files are
    split into one batch per (size-r2 solver subset, helper) pair and
    stored by that subset plus the one helper.
    """
    problems = divisibility_report(alloc, task)
    if problems:
        raise DivisibilityError(problems)

    ks, kh = alloc.n_solvers, alloc.n_helpers
    solvers = tuple(range(1, ks + 1))
    helpers = tuple(range(ks + 1, ks + kh + 1))
    n1 = int(alloc.alpha * task.n_files)
    files1 = tuple(range(1, n1 + 1))
    files2 = tuple(range(n1 + 1, task.n_files + 1))

    node_files: dict[int, set[int]] = {k: set() for k in range(1, n_nodes + 1)}
    solver_storers: dict[int, tuple[int, ...]] = {}
    helper_of: dict[int, int | None] = {}

    batches1: dict[tuple[int, ...], tuple[int, ...]] = {}
    if files1:
        per = len(files1) // comb(ks, alloc.r1)
        pos = 0
        for subset in itertools.combinations(solvers, alloc.r1):
            batch = files1[pos : pos + per]
            pos += per
            batches1[subset] = batch
            for n in batch:
                solver_storers[n] = subset
                helper_of[n] = None
                for k in subset:
                    node_files[k].add(n)

    batches2: dict[tuple[tuple[int, ...], int], tuple[int, ...]] = {}
    if files2:
        per = len(files2) // (kh * comb(ks, alloc.r2))
        pos = 0
        for helper in helpers:
            for subset in itertools.combinations(solvers, alloc.r2):
                batch = files2[pos : pos + per]
                pos += per
                batches2[(subset, helper)] = batch
                for n in batch:
                    solver_storers[n] = subset
                    helper_of[n] = helper
                    node_files[helper].add(n)
                    for k in subset:
                        node_files[k].add(n)

    return Placement(
        n_nodes=n_nodes,
        solver_ids=solvers,
        helper_ids=helpers,
        group1_files=files1,
        group2_files=files2,
        batches1=batches1,
        batches2=batches2,
        node_files={k: frozenset(v) for k, v in node_files.items()},
        solver_storers=solver_storers,
        helper_of=helper_of,
    )


def peak_computation_load(placement: Placement, n_files: int) -> Fraction:
    """Largest per-node fraction of files mapped."""
    heaviest = max(len(files) for files in placement.node_files.values())
    return Fraction(heaviest, n_files)
