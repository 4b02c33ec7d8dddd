"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with `python3 scripts/run_acceptance.py` or `pytest tests/test_acceptance.py -s`.
"""
import json
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from moore_tower.chain import (ChainComplex, base_change, direct_sum_complex, find_homotopy_equivalence,
                               homotopy_classes, is_nullhomotopic, k_invariant, postnikov_section)
from moore_tower.compare import BaseChange, comparison_les, mod_p_homotopy, random_bisimplicial, spiral_sequence
from moore_tower.emext import class_to_extension, em_classes, em_object, extension_to_class
from moore_tower.exactalg import FgModule, RingSpec, ZZ, enumerate_extensions, extensions_equivalent
from moore_tower.lift import LiftProblem, brute_force_realize, enumerate_lifts, lift_corpus
from moore_tower.simplicial import (dold_kan, dold_kan_comparison, homotopy_groups, postnikov_section_simplicial,
                                    random_free_complex, random_simplicial)

from oracles import form_order, free_complex_homology, tensor_tor_forms

ROOT = Path(__file__).resolve().parent.parent
Z4 = RingSpec.mod(4)


@pytest.fixture
def verdict(capsys):
    def emit(label: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}{': ' + detail if detail else ''}")
        return ok
    return emit


def matrices(c):
    return [[list(r) for r in d.matrix.data] for d in c.diffs]


def periodic_z4():
    return ChainComplex.free(Z4, [1, 1, 1], [[[2]], [[2]]])


# ---------------------------------------------------------------- 1


def test_criterion_1_dold_kan_roundtrip(verdict):
    rng = random.Random(1)
    start = time.perf_counter()
    failures = []
    for i in range(200):
        c = random_free_complex(rng, ZZ, rng.randint(0, 5), max_rank=4, max_entry=3)
        x = dold_kan(c, c.top_degree + 1)
        phi = dold_kan_comparison(c, x)
        ok = all(f.is_iso() for f in phi.components)
        ok &= all(homotopy_groups(x, n).isomorphic(c.homology(n)) for n in range(c.top_degree + 1))
        if not ok:
            failures.append(i)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    verdict("criterion 1 Dold-Kan roundtrip", ok, f"200 complexes, {len(failures)} failures, {elapsed:.1f}s")
    assert ok, failures


# ---------------------------------------------------------------- 2


def test_criterion_2_postnikov_axioms(verdict):
    rng = random.Random(2)
    failures = []
    for i in range(200):
        c = random_free_complex(rng, ZZ, rng.randint(1, 4), max_rank=3, max_entry=3)
        n = rng.randint(0, c.top_degree)
        p, r = postnikov_section(c, n)
        for k in range(max(c.top_degree, p.top_degree) + 2):
            h = p.homology(k) if k <= p.top_degree else FgModule.zero(ZZ)
            good = (r.induced(k).is_iso() and h.isomorphic(c.homology(k))) if k <= n else h.is_zero()
            if not good:
                failures.append(("complex", i, k))
    for i in range(100):
        x = random_simplicial(rng, ZZ, 4, max_rank=2)
        n = rng.randint(0, 2)
        p, _ = postnikov_section_simplicial(x, n)
        for k in range(p.level):
            good = homotopy_groups(p, k).isomorphic(homotopy_groups(x, k)) if k <= n else \
                homotopy_groups(p, k).is_zero()
            if not good:
                failures.append(("simplicial", i, k))
    ok = verdict("criterion 2 Postnikov axioms", not failures,
                 f"200 complexes + 100 simplicial modules, {len(failures)} failures")
    assert ok, failures


# ---------------------------------------------------------------- 3


def test_criterion_3a_free_complexes_have_null_k_invariants(verdict):
    rng = random.Random(3)
    failures = []
    for i in range(100):
        c = random_free_complex(rng, ZZ, rng.randint(1, 4), max_rank=3, max_entry=3)
        for n in range(c.top_degree):
            _, k = k_invariant(c, n)
            if not is_nullhomotopic(k):
                failures.append((i, n))
    ok = verdict("criterion 3a k-invariants of free Z-complexes are null", not failures,
                 f"100 complexes, {len(failures)} non-null")
    assert ok, failures


@pytest.mark.xfail(strict=True, reason="H_1 of the periodic complex is 0, so the degree-0 k-invariant "
                                       "has a contractible target; the non-null one sits in degree 1")
def test_criterion_3b_periodic_k0_as_stated(verdict):
    _, k0 = k_invariant(periodic_z4(), 0)
    null = is_nullhomotopic(k0)
    verdict("criterion 3b (as stated) periodic Z/4 complex has non-null k_0", not null,
            "k_0 is null-homotopic")
    assert not null


def test_criterion_3b_periodic_complex_is_not_split(verdict):
    c = periodic_z4()
    _, k1 = k_invariant(c, 1)
    hc = homotopy_classes(k1.source, k1.target)
    non_null = not is_nullhomotopic(k1) and any(hc.classify(k1))
    split = direct_sum_complex([ChainComplex.sphere(Z4, 0, FgModule.cyclic(Z4, 2)),
                                ChainComplex.sphere(Z4, 2, FgModule.cyclic(Z4, 2))])
    same_homology = c.homology_forms() == split.homology_forms()
    inequivalent = find_homotopy_equivalence(c, split) is None
    ok = non_null and same_homology and inequivalent
    verdict("criterion 3b periodic Z/4 complex: non-null k_1, inequivalent to the split complex", ok,
            f"k_1 class {hc.classify(k1)}, same homology {same_homology}, inequivalent {inequivalent}")
    assert ok


# ---------------------------------------------------------------- 4


def test_criterion_4_extension_bijection(verdict):
    small = {"Z/2": [2], "Z/3": [3], "Z/4": [4], "Z/2+Z/2": [2, 2]}
    failures = []
    counts = {}
    for qn, qi in small.items():
        for sn, si in small.items():
            q, s = FgModule.from_invariants(ZZ, qi), FgModule.from_invariants(ZZ, si)
            reps = enumerate_extensions(q, s)
            for n in (2, 3):
                classes = em_classes(em_object(q, n), em_object(s, n + 1))
                images = [extension_to_class(r, n).coords for r in reps]
                ok = len(reps) == len(classes) and sorted(images) == sorted(c.coords for c in classes)
                ok &= all(extension_to_class(class_to_extension(c), n).coords == c.coords for c in classes)
                ok &= all(extensions_equivalent(class_to_extension(extension_to_class(r, n)), r) for r in reps)
                counts.setdefault((qn, sn), set()).add(len(classes))
                if not ok:
                    failures.append((qn, sn, n))
    stable = all(len(v) == 1 for v in counts.values())
    z2z2 = counts[("Z/2", "Z/2")] == {2}
    ok = not failures and stable and z2z2
    verdict("criterion 4 extension bijection", ok,
            f"16 pairs x n in {{2,3}}, {len(failures)} failures, stable {stable}, (Z/2,Z/2) -> 2: {z2z2}")
    assert ok, failures


# ---------------------------------------------------------------- 5


def test_criterion_5_mod_p_short_exact_sequence(verdict):
    rng = random.Random(5)
    failures = []
    for i in range(200):
        x = random_simplicial(rng, ZZ, 3, max_rank=3)
        for p in (2, 3):
            for k in range(x.level):
                res = mod_p_homotopy(x, p, k)
                positions = [v.exact for v in res.report.verdicts]
                if len(positions) != 3 or not all(positions):
                    failures.append((i, p, k))
    ok = verdict("criterion 5 mod-p short exact sequence", not failures,
                 f"200 simplicial modules x p in {{2,3}}, {len(failures)} failures")
    assert ok, failures


# ---------------------------------------------------------------- 6


def test_criterion_6_spiral_exact_sequence(verdict):
    rng = random.Random(6)
    start = time.perf_counter()
    failures = []
    for i in range(100):
        x = random_bisimplicial(rng, ZZ, rng.randint(2, 4), rng.randint(1, 4), max_rank=3)
        rep = spiral_sequence(x)
        if not (rep.exact and all(rep.h0_iso.values())):
            failures.append(i)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 300
    verdict("criterion 6 spiral exact sequence", ok,
            f"100 bisimplicial modules, {len(failures)} failures, {elapsed:.1f}s")
    assert ok, failures


# ---------------------------------------------------------------- 7


def test_criterion_7_comparison_sequence_against_snake_oracle(verdict):
    rng = random.Random(7)
    failures = []
    for i in range(200):
        x = random_free_complex(rng, ZZ, rng.randint(1, 4), max_rank=3, max_entry=3)
        p = (2, 3)[i % 2]
        data = comparison_les(x, BaseChange(p))
        ok = data.report.exact
        tx = base_change(x, RingSpec.mod(p))
        for n in range(x.top_degree + 1):
            # 0 -> x -p-> x -> x/p -> 0: Gamma_n is H_n(x) with s = multiplication by p
            hn = free_complex_homology(x.ranks(), matrices(x), n)
            tens, tor = tensor_tor_forms(hn, p)
            ok &= data.gamma[n].canonical_form() == hn
            ok &= data.s[n].cokernel()[0].canonical_form() == tens
            ok &= data.s[n].kernel()[0].canonical_form() == tor
            prev = tensor_tor_forms(free_complex_homology(x.ranks(), matrices(x), n - 1), p)[1] if n else (0, ())
            ok &= tx.homology(n).order() == form_order(tens) * form_order(prev)
        if not ok:
            failures.append(i)
    ok = verdict("criterion 7 comparison sequence matches the snake-lemma oracle", not failures,
                 f"200 complexes, {len(failures)} failures")
    assert ok, failures


# ---------------------------------------------------------------- 8


def test_criterion_8_lifting_agrees_with_brute_force(verdict):
    start = time.perf_counter()
    corpus = lift_corpus()
    disagreements, unverified, unrealizable = [], [], []
    for name, target in corpus:
        problem = LiftProblem(target)
        res = enumerate_lifts(problem)
        witness = brute_force_realize(problem)
        if (len(res) > 0) != (witness is not None):
            disagreements.append(name)
        if witness is None:
            unrealizable.append(name)
        for y, _ in res:
            if find_homotopy_equivalence(base_change(y, Z4), target) is None:
                unverified.append(name)
    elapsed = time.perf_counter() - start
    ok = len(corpus) >= 20 and unrealizable and not disagreements and not unverified and elapsed < 600
    verdict("criterion 8 lifting agrees with brute force", bool(ok),
            f"{len(corpus)} targets, {len(unrealizable)} unrealizable, {len(disagreements)} disagreements, "
            f"{len(unverified)} unverified lifts, {elapsed:.1f}s")
    assert ok, (disagreements, unverified)


# ---------------------------------------------------------------- 9


def test_criterion_9_cli_goldens_are_byte_stable(verdict, tmp_path):
    sys.path.insert(0, str(ROOT / "scripts"))
    try:
        import make_goldens
    finally:
        sys.path.pop(0)
    golden = ROOT / "tests" / "golden"
    codes = json.loads((golden / "exit_codes.json").read_text())
    mismatches = []
    for run in (1, 2):
        for name, argv in make_goldens.CORPUS:
            out = tmp_path / f"{name}.{run}"
            proc = subprocess.run([sys.executable, "-m", "moore_tower", *make_goldens.corpus_argv(argv),
                                   "--no-timing", "--out", str(out)], cwd=golden, capture_output=True)
            expected = (golden / make_goldens.golden_name(name, argv)).read_bytes()
            if proc.returncode != codes[name] or out.read_bytes() != expected:
                mismatches.append((run, name))
    ok = verdict("criterion 9 CLI golden corpus is byte-identical across two runs", not mismatches,
                 f"{len(make_goldens.CORPUS)} commands x 2 runs, {len(mismatches)} mismatches")
    assert ok, mismatches
