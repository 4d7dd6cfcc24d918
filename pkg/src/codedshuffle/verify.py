"""Built-in consistency suites: closed forms vs direct summation, codec
round trips, and formula-vs-enumeration converse tables.

These are the same dual-route checks the test suite runs, packaged so a
deployment can re-verify itself from the command line.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from . import bounds
from .codec import GaloisField, decode_vandermonde, encode_vandermonde, symbol_from_bits
from .loads import acdc_shuffle_load, acdc_time, cdc_shuffle_load, cdc_time, hybrid_time
from .model import Allocation, SystemParams, TaskParams
from .simulator import run


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def _loads_suite() -> list[CheckResult]:
    out = []
    ok = True
    detail = ""
    for k in range(1, 13):
        for r in range(1, k + 1):
            if cdc_shuffle_load(r, 1, k) != Fraction(1, r) * (1 - Fraction(r, k)):
                ok, detail = False, f"solver-exchange closed form off at r={r}, k={k}"
            if acdc_shuffle_load(r, 1, k) != Fraction(1, r + 1) * (1 - Fraction(r, k)):
                ok, detail = False, f"helper closed form off at r={r}, k={k}"
    out.append(CheckResult("loads", "s=1 closed forms, k <= 12", ok, detail))

    ok = all(
        cdc_shuffle_load(k, s, k) == 0 and acdc_shuffle_load(k, s, k) == 0
        for k in range(1, 9)
        for s in range(1, k + 1)
    )
    out.append(CheckResult("loads", "full replication needs no shuffle", ok))

    ok = True
    for k in range(2, 8):
        for s in range(1, min(3, k) + 1):
            for r in range(0 if s > 1 else 1, k + 1):
                if cdc_shuffle_load(r, s, k) < 0 or acdc_shuffle_load(r, s, k) < 0:
                    ok = False
    out.append(CheckResult("loads", "loads nonnegative", ok))

    task = TaskParams(12, 6, 2, 4)
    system = SystemParams(8, 60, 3, 2, 1)
    budget = Fraction(system.storage, task.n_files)
    ok = True
    for ks in range(2, 7):
        for r in range(1, ks + 1):
            if Fraction(r) > budget:
                continue
            pure = cdc_time(r, ks, task, system)
            mixed = hybrid_time(Allocation(Fraction(1), r, 0, ks, 0), task, system)
            if pure != mixed:
                ok = False
        for r in range(0, ks):
            if Fraction(r + 1) > budget:
                continue
            pure = acdc_time(r, ks, 2, task, system)
            mixed = hybrid_time(Allocation(Fraction(0), 1, r, ks, 2), task, system)
            if pure != mixed:
                ok = False
    out.append(CheckResult("loads", "hybrid at alpha in {0,1} equals pure forms", ok))
    return out


def _codec_suite() -> list[CheckResult]:
    out = []
    gf8 = GaloisField(8)
    ok = all(gf8.mul(a, gf8.inv(a)) == 1 for a in range(1, 256))
    out.append(CheckResult("codec", "all inverses in GF(2^8)", ok))

    rng = random.Random(20240817)
    ok = True
    for _ in range(500):
        a, b, c = (rng.randrange(256) for _ in range(3))
        if gf8.mul(a, gf8.mul(b, c)) != gf8.mul(gf8.mul(a, b), c):
            ok = False
        if gf8.mul(a, b ^ c) != gf8.mul(a, b) ^ gf8.mul(a, c):
            ok = False
    out.append(CheckResult("codec", "associativity/distributivity samples", ok))

    gf = GaloisField(16)
    ok = True
    detail = ""
    for n in range(1, 7):
        alphas = gf.coefficients(n)
        for bits in (3, 17, 64):
            symbols = [
                symbol_from_bits(rng.getrandbits(bits), bits, gf) for _ in range(n)
            ]
            for n_coded in range(1, n + 1):
                coded = encode_vandermonde(gf, symbols, n_coded, alphas)
                for known_idx in itertools.combinations(range(n), n - n_coded):
                    known = {i: symbols[i] for i in known_idx}
                    got = decode_vandermonde(gf, coded, alphas, known)
                    if got != symbols:
                        ok, detail = False, f"round trip failed at n={n}, rows={n_coded}"
    out.append(CheckResult("codec", "round trips over all known subsets, n <= 6", ok, detail))
    return out


def _random_symmetric_instance(rng: random.Random):
    ks = rng.randint(2, 5)
    kh = rng.randint(1, 3)
    s = rng.randint(1, min(2, ks))
    from math import comb

    n_reduce = comb(ks, s) * rng.randint(1, 2)
    n_files = rng.randint(4, 10)
    from .model import build_reduce_assignment

    assignment = build_reduce_assignment(range(1, ks + 1), s, n_reduce)
    solvers = list(range(1, ks + 1))
    helpers = list(range(ks + 1, ks + kh + 1))
    node_files = {k: set() for k in solvers + helpers}
    for n in range(1, n_files + 1):
        if rng.random() < 0.5:
            for k in rng.sample(solvers, rng.randint(1, ks)):
                node_files[k].add(n)
        else:
            for k in rng.sample(helpers, rng.randint(1, kh)):
                node_files[k].add(n)
            for k in rng.sample(solvers, rng.randint(0, ks)):
                node_files[k].add(n)
    nf = {k: frozenset(v) for k, v in node_files.items()}
    rs = bounds.reduce_maps(assignment, ks + kh)
    return nf, rs, n_files, n_reduce


def _bounds_suite(instances: int = 25) -> list[CheckResult]:
    out = []
    rng = random.Random(991)
    ok = True
    detail = ""
    for i in range(instances):
        nf, rs, n_files, n_reduce = _random_symmetric_instance(rng)
        solvers, s = bounds.check_weakly_symmetric(rs, n_reduce)
        profile = bounds.tally_storage_profile(nf, rs, n_files)
        a1f, a2f = bounds.profile_to_availability(profile, s, n_reduce)
        a1d, a2d = bounds.enhanced_availability(nf, rs, n_files, n_reduce)
        if a1f != {k: Fraction(v) for k, v in a1d.items()} or a2f != {
            k: Fraction(v) for k, v in a2d.items()
        }:
            ok, detail = False, f"table mismatch on instance {i}"
        eb = bounds.enhanced_lower_bound(profile, s, n_reduce)
        if eb.pre_jensen < eb.value:
            ok, detail = False, f"pre-relaxation sum below envelope bound on instance {i}"
    out.append(
        CheckResult("bounds", f"formula vs enumeration on {instances} random instances", ok, detail)
    )
    return out


def _simulator_suite() -> list[CheckResult]:
    out = []
    cases = [
        (TaskParams(3, 3, 1, 8), SystemParams(4, 20, 2, 1, 1), Allocation(Fraction(0), 1, 1, 3, 1)),
        (TaskParams(4, 2, 1, 8), SystemParams(3, 12, 2, 1, 1), Allocation(Fraction(1, 2), 1, 1, 2, 1)),
        (TaskParams(3, 3, 2, 8), SystemParams(3, 20, 2, 1, 1), Allocation(Fraction(1), 1, 0, 3, 0)),
    ]
    ok = True
    detail = ""
    for task, system, alloc in cases:
        report, _ = run(alloc, task, system, seed=17)
        if not report.matches_prediction:
            ok, detail = False, f"measured != predicted at {alloc}"
    out.append(CheckResult("simulator", "measured equals predicted on sample points", ok, detail))
    return out


SUITES = {
    "loads": _loads_suite,
    "codec": _codec_suite,
    "bounds": _bounds_suite,
    "simulator": _simulator_suite,
}


def run_suites(names=None) -> list[CheckResult]:
    results = []
    for name in names or sorted(SUITES):
        results.extend(SUITES[name]())
    return results
