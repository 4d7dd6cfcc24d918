"""Bit-exact execution of map, coded shuffle, and reduce for one allocation.

The two shuffle subsystems share the same skeleton: enumerate solver
subsets S in a fixed size range, form the value groups exclusively stored
by each size-r subset inside S (plus one helper in the helper-assisted
subsystem), Vandermonde-code the group payloads, and multicast. Receivers
subtract the symbols they can rebuild from their own mapped values and
invert the remaining square system.

Transcripts record the unpadded bit count of every multicast, so measured
communication loads are exact rationals; the word padding introduced by
the field width is tracked separately and never enters load accounting.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .codec import (
    GaloisField,
    SymbolVector,
    decode_vandermonde,
    default_field,
    encode_vandermonde,
    symbol_from_bits,
    symbol_to_bits,
)
from .errors import (
    DecodeFailure,
    DivisibilityError,
    MissingValue,
    PayloadMismatch,
)
from .loads import TimeBreakdown, acdc_shuffle_load, cdc_shuffle_load, hybrid_time
from .model import (
    Allocation,
    IvId,
    Placement,
    ReduceAssignment,
    SystemParams,
    TaskParams,
    build_hybrid_placement,
    build_reduce_assignment,
    divisibility_report,
    peak_computation_load,
)

IvStore = dict[int, dict[IvId, int]]


def iv_payload(seed: int, q: int, n: int, value_bits: int) -> int:
    """Deterministic pseudorandom bits for intermediate value (q, n)."""
    if value_bits < 1:
        raise ValueError("value_bits must be >= 1")
    out = b""
    block = 0
    while len(out) * 8 < value_bits:
        h = hashlib.blake2b(
            struct.pack(">QQQ", q, n, block),
            key=seed.to_bytes(8, "big", signed=False),
            digest_size=32,
        )
        out += h.digest()
        block += 1
    return int.from_bytes(out, "big") >> (len(out) * 8 - value_bits)


def map_phase(placement: Placement, task: TaskParams, seed: int) -> IvStore:
    """Each node maps its stored files into all Q intermediate values."""
    stores: IvStore = {}
    for node, files in placement.node_files.items():
        store = {}
        for n in files:
            for q in range(1, task.n_reduce + 1):
                store[IvId(q, n)] = iv_payload(seed, q, n, task.value_bits)
        stores[node] = store
    return stores


@dataclass(frozen=True)
class ValueGroup:
    """Intermediate values stored exactly by s1 (plus helper) and needed
    by every solver in subset minus s1."""

    subsystem: int
    subset: tuple[int, ...]
    s1: tuple[int, ...]
    helper: int | None
    members: tuple[IvId, ...]
    payload: int
    bits: int


def build_group(
    subsystem: int,
    subset,
    s1,
    helper: int | None,
    assignment: ReduceAssignment,
    placement: Placement,
    values,
    value_bits: int,
) -> ValueGroup:
    """Assemble one value group from a node's local store.

    Members are the (q, n) pairs where q's reducer set lies between
    subset minus s1 and subset, and n's storer set is exactly s1 (plus
    exactly the given helper in subsystem 2). Members are sorted by
    (q, n) and concatenated MSB-first into the payload.
    """
    subset = tuple(sorted(subset))
    s1 = tuple(sorted(s1))
    need = set(subset) - set(s1)
    extra = assignment.replication - len(need)

    qs: list[int] = []
    if 0 <= extra <= len(s1):
        for add in itertools.combinations(s1, extra):
            owners = tuple(sorted(need | set(add)))
            qs.extend(assignment.batches.get(owners, ()))
    qs.sort()

    if subsystem == 1:
        files = placement.batches1.get(s1, ())
    else:
        files = placement.batches2.get((s1, helper), ())

    members = tuple(IvId(q, n) for q in qs for n in sorted(files))
    payload = 0
    for iv in members:
        payload = (payload << value_bits) | values[iv]
    return ValueGroup(
        subsystem, subset, s1, helper, members, payload, len(members) * value_bits
    )


@dataclass(frozen=True)
class MulticastRecord:
    """One multicast: a coded symbol from one sender to a recipient set."""

    subsystem: int
    sender: int
    recipients: tuple[int, ...]
    subset: tuple[int, ...]
    row: int
    bits: int
    words: tuple[int, ...] = field(repr=False)


@dataclass
class ShuffleTranscript:
    """Ordered multicast records with exact bit accounting."""

    field_width: int
    records: list[MulticastRecord] = field(default_factory=list)

    def total_bits(self, subsystem: int | None = None) -> int:
        return sum(r.bits for r in self.records if subsystem in (None, r.subsystem))

    def padded_bits(self, subsystem: int | None = None) -> int:
        return sum(
            len(r.words) * self.field_width - r.bits
            for r in self.records
            if subsystem in (None, r.subsystem)
        )

    def load(self, task: TaskParams) -> Fraction:
        """Total communication load normalized by N*Q*V."""
        return Fraction(
            self.total_bits(), task.n_files * task.n_reduce * task.value_bits
        )

    def extend(self, other: "ShuffleTranscript") -> None:
        if other.field_width != self.field_width:
            raise ValueError("cannot merge transcripts with different field widths")
        self.records.extend(other.records)

    def export_jsonl(self, path, include_payloads: bool = False) -> None:
        hex_digits = self.field_width // 4
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                row = {
                    "subsystem": r.subsystem,
                    "sender": r.sender,
                    "recipients": list(r.recipients),
                    "subset": list(r.subset),
                    "row": r.row,
                    "bits": r.bits,
                }
                if include_payloads:
                    row["payload"] = "".join(f"{w:0{hex_digits}x}" for w in r.words)
                fh.write(json.dumps(row, sort_keys=True) + "\n")


def _subset_range(r: int, s: int, ks: int):
    """Subset sizes that carry any shuffle traffic for replication r."""
    return range(max(r + 1, s), min(r + s, ks) + 1)


def _segment(group: ValueGroup, index: int, count: int) -> tuple[int, int]:
    """The index-th of `count` equal MSB-first slices of a group payload."""
    seg_bits = group.bits // count
    shift = group.bits - (index + 1) * seg_bits
    return (group.payload >> shift) & ((1 << seg_bits) - 1), seg_bits


def _sender_symbols_cdc(
    sender: int,
    subset: tuple[int, ...],
    r1: int,
    assignment: ReduceAssignment,
    placement: Placement,
    values,
    value_bits: int,
    gf: GaloisField,
) -> list[SymbolVector]:
    """Sub-segments associated with one sender, in lexicographic S1 order."""
    symbols = []
    for s1 in itertools.combinations(subset, r1):
        if sender not in s1:
            continue
        group = build_group(1, subset, s1, None, assignment, placement, values, value_bits)
        seg, seg_bits = _segment(group, s1.index(sender), r1)
        symbols.append(symbol_from_bits(seg, seg_bits, gf))
    return symbols


def shuffle_cdc(
    stores: IvStore,
    placement: Placement,
    assignment: ReduceAssignment,
    alloc: Allocation,
    task: TaskParams,
    gf: GaloisField | None = None,
) -> ShuffleTranscript:
    """Solver-exchange shuffle over the group-1 files.

    Every group is split into r1 equal sub-segments, one owned by each
    storer. Each sender codes its owned sub-segments across all groups of
    a subset S and multicasts C(|S|-2, r1-1) combinations to S; every
    receiver already knows the sub-segments whose group it stores, which
    is exactly enough side information to invert the rest.
    """
    gf = gf or default_field()
    transcript = ShuffleTranscript(gf.width)
    if alloc.alpha == 0 or not placement.group1_files:
        return transcript
    ks = alloc.n_solvers
    r1 = alloc.r1
    if r1 >= ks:
        return transcript
    for size in _subset_range(r1, task.replication, ks):
        n_out = comb(size - 2, r1 - 1)
        for subset in itertools.combinations(placement.solver_ids, size):
            for sender in subset:
                symbols = _sender_symbols_cdc(
                    sender, subset, r1, assignment, placement, stores[sender], task.value_bits, gf
                )
                coded = encode_vandermonde(gf, symbols, n_out, gf.coefficients(len(symbols)))
                recipients = tuple(k for k in subset if k != sender)
                for row, sym in enumerate(coded):
                    transcript.records.append(
                        MulticastRecord(1, sender, recipients, subset, row, sym.bit_length, sym.words)
                    )
    return transcript


def shuffle_acdc(
    stores: IvStore,
    placement: Placement,
    assignment: ReduceAssignment,
    alloc: Allocation,
    task: TaskParams,
    gf: GaloisField | None = None,
) -> ShuffleTranscript:
    """Helper-broadcast shuffle over the group-2 files.

    For each solver subset S and each helper, the helper codes the
    C(|S|, r2) group payloads down to C(|S|-1, r2) combinations and
    multicasts them to S. Solvers store r2-subsets' worth of the groups
    themselves, which again matches the missing-symbol count exactly.
    """
    gf = gf or default_field()
    transcript = ShuffleTranscript(gf.width)
    if alloc.alpha == 1 or not placement.group2_files:
        return transcript
    ks = alloc.n_solvers
    r2 = alloc.r2
    if r2 >= ks:
        return transcript
    for size in _subset_range(r2, task.replication, ks):
        n_out = comb(size - 1, r2)
        for subset in itertools.combinations(placement.solver_ids, size):
            for helper in placement.helper_ids:
                symbols = [
                    symbol_from_bits(group.payload, group.bits, gf)
                    for s1 in itertools.combinations(subset, r2)
                    for group in [
                        build_group(2, subset, s1, helper, assignment, placement, stores[helper], task.value_bits)
                    ]
                ]
                coded = encode_vandermonde(gf, symbols, n_out, gf.coefficients(len(symbols)))
                for row, sym in enumerate(coded):
                    transcript.records.append(
                        MulticastRecord(2, helper, subset, subset, row, sym.bit_length, sym.words)
                    )
    return transcript


def _unpack_group(members: tuple[IvId, ...], payload: int, value_bits: int, store) -> None:
    for i, iv in enumerate(members):
        shift = value_bits * (len(members) - 1 - i)
        store[iv] = (payload >> shift) & ((1 << value_bits) - 1)


def deliver(
    transcript: ShuffleTranscript,
    stores: IvStore,
    placement: Placement,
    assignment: ReduceAssignment,
    alloc: Allocation,
    task: TaskParams,
    gf: GaloisField | None = None,
) -> None:
    """Decode every multicast at every recipient, updating their stores.

    Raises DecodeFailure when the per-sender rate match (unknown symbols
    versus received rows) breaks, which would indicate a construction bug
    or a tampered transcript shape.
    """
    gf = gf or default_field()
    v = task.value_bits

    by_key: dict[tuple[int, tuple[int, ...], int], list[MulticastRecord]] = {}
    for rec in transcript.records:
        by_key.setdefault((rec.subsystem, rec.subset, rec.sender), []).append(rec)

    # receiver -> (subset, s1, sender) -> decoded sub-segment bits
    segments: dict[int, dict[tuple, int]] = {}

    for (subsystem, subset, sender), recs in by_key.items():
        recs = sorted(recs, key=lambda r: r.row)
        rows = [SymbolVector(r.words, r.bits) for r in recs]
        r = alloc.r1 if subsystem == 1 else alloc.r2
        s1_list = [
            s1
            for s1 in itertools.combinations(subset, r)
            if subsystem == 2 or sender in s1
        ]
        alphas = gf.coefficients(len(s1_list))
        recipients = recs[0].recipients

        for node in recipients:
            known = {}
            unknown_keys = []
            for idx, s1 in enumerate(s1_list):
                if node in s1:
                    if subsystem == 1:
                        group = build_group(1, subset, s1, None, assignment, placement, stores[node], v)
                        seg, seg_bits = _segment(group, s1.index(sender), r)
                        known[idx] = symbol_from_bits(seg, seg_bits, gf)
                    else:
                        group = build_group(2, subset, s1, sender, assignment, placement, stores[node], v)
                        known[idx] = symbol_from_bits(group.payload, group.bits, gf)
                else:
                    unknown_keys.append(idx)
            if len(unknown_keys) != len(rows):
                raise DecodeFailure(
                    f"node {node} expects {len(unknown_keys)} unknown symbols from "
                    f"sender {sender} on subset {subset} but received {len(rows)} rows"
                )
            symbols = decode_vandermonde(gf, rows, alphas, known)

            if subsystem == 2:
                for idx in unknown_keys:
                    s1 = s1_list[idx]
                    grp = _group_members(2, subset, s1, sender, assignment, placement)
                    payload = symbol_to_bits(symbols[idx], gf)
                    _unpack_group(grp, payload, v, stores[node])
            else:
                for idx in unknown_keys:
                    s1 = s1_list[idx]
                    segments.setdefault(node, {})[(subset, s1, sender)] = symbol_to_bits(
                        symbols[idx], gf
                    )

    # Stitch solver-exchange sub-segments back into whole groups.
    for receiver, cache in segments.items():
        groups: dict[tuple, dict[int, int]] = {}
        for (subset, s1, sender), seg in cache.items():
            groups.setdefault((subset, s1), {})[s1.index(sender)] = seg
        for (subset, s1), segs in groups.items():
            members = _group_members(1, subset, s1, None, assignment, placement)
            if not members:
                continue
            if sorted(segs) != list(range(len(s1))):
                raise DecodeFailure(
                    f"node {receiver} holds segments {sorted(segs)} of group {s1} in {subset}"
                )
            seg_bits = len(members) * v // len(s1)
            payload = 0
            for i in range(len(s1)):
                payload = (payload << seg_bits) | segs[i]
            _unpack_group(members, payload, v, stores[receiver])


def _group_members(
    subsystem: int,
    subset,
    s1,
    helper: int | None,
    assignment: ReduceAssignment,
    placement: Placement,
) -> tuple[IvId, ...]:
    """Member list of a group, independent of any payloads."""
    dummy = build_group(
        subsystem, subset, s1, helper, assignment, placement, _ZeroValues(), 1
    )
    return dummy.members


class _ZeroValues:
    def __getitem__(self, key):
        return 0


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class ReduceReport:
    """Outcome of the reduce phase: per-function digests, replica-checked."""

    digests: dict[int, int]
    replicas_checked: int


def reduce_phase(
    stores: IvStore,
    assignment: ReduceAssignment,
    task: TaskParams,
    seed: int,
) -> ReduceReport:
    """Verify every reducer holds correct values and digest the outputs.

    Each held value is compared bit-for-bit against its regeneration; the
    per-function output digest is a 64-bit FNV-1a over the concatenated
    values, and all replicas of a function must agree.
    """
    v = task.value_bits
    nbytes = (v + 7) // 8
    digests: dict[int, dict[int, int]] = {}
    for k in assignment.solver_ids:
        store = stores[k]
        for q in sorted(assignment.reduce_sets[k]):
            blob = bytearray()
            for n in range(1, task.n_files + 1):
                iv = IvId(q, n)
                if iv not in store:
                    raise MissingValue(f"node {k} is missing value (q={q}, n={n})")
                expect = iv_payload(seed, q, n, v)
                if store[iv] != expect:
                    raise PayloadMismatch(
                        f"node {k} holds corrupted value (q={q}, n={n})"
                    )
                blob += store[iv].to_bytes(nbytes, "big")
            digests.setdefault(q, {})[k] = _fnv1a64(bytes(blob))

    replicas = 0
    for q, per_node in digests.items():
        replicas += len(per_node)
        if len(set(per_node.values())) != 1:
            raise PayloadMismatch(f"replica digests disagree for function {q}")
    return ReduceReport({q: next(iter(d.values())) for q, d in digests.items()}, replicas)


@dataclass(frozen=True)
class SimReport:
    """Everything measured in one end-to-end run, with predictions alongside."""

    alloc: Allocation
    seed: int
    measured: TimeBreakdown
    predicted: TimeBreakdown
    load_total: Fraction
    load_sub1: Fraction | None
    load_sub2: Fraction | None
    predicted_load1: Fraction | None
    predicted_load2: Fraction | None
    padded_bits: int
    decode_ok: bool
    reduce_ok: bool
    digests: dict[int, int] = field(repr=False, default_factory=dict)

    @property
    def matches_prediction(self) -> bool:
        return (
            self.measured == self.predicted
            and (self.load_sub1 is None or self.load_sub1 == self.predicted_load1)
            and (self.load_sub2 is None or self.load_sub2 == self.predicted_load2)
        )


def run(
    alloc: Allocation,
    task: TaskParams,
    system: SystemParams,
    seed: int = 0,
    field_width: int = 16,
) -> tuple[SimReport, ShuffleTranscript]:
    """Execute one allocation end to end and account every bit."""
    alloc.validate(task, system)
    problems = divisibility_report(alloc, task)
    if problems:
        raise DivisibilityError(problems)

    gf = default_field(field_width)
    assignment = build_reduce_assignment(
        range(1, alloc.n_solvers + 1), task.replication, task.n_reduce
    )
    placement = build_hybrid_placement(alloc, task, system.n_nodes)
    stores = map_phase(placement, task, seed)

    transcript = shuffle_cdc(stores, placement, assignment, alloc, task, gf)
    t2 = shuffle_acdc(stores, placement, assignment, alloc, task, gf)
    deliver(transcript, stores, placement, assignment, alloc, task, gf)
    deliver(t2, stores, placement, assignment, alloc, task, gf)
    sub1_bits = transcript.total_bits()
    padded = transcript.padded_bits() + t2.padded_bits()
    transcript.extend(t2)

    reduce_report = reduce_phase(stores, assignment, task, seed)

    n, q, v = task.n_files, task.n_reduce, task.value_bits
    n1 = len(placement.group1_files)
    n2 = len(placement.group2_files)
    sub2_bits = transcript.total_bits(2)

    measured = TimeBreakdown(
        t_map=system.c_map * peak_computation_load(placement, n),
        t_shuffle=system.c_shuffle * Fraction(transcript.total_bits(), n * q * v),
        t_reduce=system.c_reduce
        * max(len(assignment.reduce_sets[k]) for k in assignment.solver_ids),
    )
    predicted = hybrid_time(alloc, task, system)

    s = task.replication
    report = SimReport(
        alloc=alloc,
        seed=seed,
        measured=measured,
        predicted=predicted,
        load_total=Fraction(transcript.total_bits(), n * q * v),
        load_sub1=Fraction(sub1_bits, n1 * q * v) if n1 else None,
        load_sub2=Fraction(sub2_bits, n2 * q * v) if n2 else None,
        predicted_load1=cdc_shuffle_load(alloc.r1, s, alloc.n_solvers) if n1 else None,
        predicted_load2=acdc_shuffle_load(alloc.r2, s, alloc.n_solvers) if n2 else None,
        padded_bits=padded,
        decode_ok=True,
        reduce_ok=True,
        digests=reduce_report.digests,
    )
    return report, transcript
