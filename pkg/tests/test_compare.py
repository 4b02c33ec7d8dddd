import random

import pytest
from hypothesis import given, settings, strategies as st

from moore_tower.chain import ChainComplex, ChainMap, base_change
from moore_tower.compare import (BaseChange, ExactSequenceReport, comparison_ladder, comparison_les,
                                 externally_constant, mod_p_homotopy, random_bisimplicial,
                                 random_double_complex, spiral_sequence)
from moore_tower.exactalg import ExactMatrix, FgModule, ModuleMap, RingSpec, ZZ
from moore_tower.simplicial import (DoubleComplex, TruncationError, dold_kan, gamma2, homotopy_groups,
                                    random_free_complex, random_simplicial)
from oracles import finite_homology_order, form_order, free_complex_homology, tensor_tor_forms

seeds = st.integers(0, 10 ** 6)


def matrices(c):
    return [[list(r) for r in d.matrix.data] for d in c.diffs]


# --- exact sequence reports -------------------------------------------------------

def test_report_detects_inexactness():
    z = FgModule.free(ZZ, 1)
    two = ModuleMap(z, z, ExactMatrix(ZZ, 1, 1, [[2]]))
    zero = ModuleMap.zero(z, z)
    # 0 -> Z -2-> Z: exact at the source, cokernel Z/2 at the target
    rep = ExactSequenceReport.build([z, z], [two], ["a", "b"], zero_left=True, zero_right=True)
    assert [v.exact for v in rep.verdicts] == [True, False]
    # Z -0-> Z -2-> Z is exact in the middle (ker 2 = 0)
    assert ExactSequenceReport.build([z, z, z], [zero, two], list("abc")).exact
    # Z -2-> Z -2-> Z is not: the composite is nonzero
    rep = ExactSequenceReport.build([z, z, z], [two, two], list("abc"))
    assert not rep.exact and not rep.verdicts[0].composite_zero


def test_report_table_has_one_row_per_term():
    z2 = FgModule.cyclic(ZZ, 2)
    ident = ModuleMap.identity(z2)
    terms = [z2] * 6
    rep = ExactSequenceReport.build(terms, [ident, ModuleMap.zero(z2, z2)] * 2 + [ident], list("abcdef"))
    rows = rep.table()
    assert len(rows) == 6 and all(("exact" in r) or r.rstrip().endswith("-") for r in rows)
    assert rep.recompute().to_json() == rep.to_json()


# --- comparison sequence ------------------------------------------------------------

def test_identity_functor_has_trivial_gamma():
    c = random_free_complex(random.Random(3), ZZ, 3)
    data = comparison_les(c, BaseChange(0))
    assert all(g.is_zero() for g in data.gamma.groups.values())
    assert all(data.h[n].is_iso() for n in data.h)
    assert data.report.exact


def test_gamma_of_z_mod_two():
    data = comparison_les(ChainComplex.free(ZZ, [1, 1], [[[2]]]), BaseChange(2))
    assert data.gamma.forms() == {-1: (0, ()), 0: (0, (2,)), 1: (0, ())}
    assert data.report.exact


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_comparison_matches_snake_oracle(seed, p):
    """For free x the cocone of x -> x/p is x itself with s = multiplication by p."""
    x = random_free_complex(random.Random(seed), ZZ, 3, max_rank=3)
    data = comparison_les(x, BaseChange(p))
    assert data.report.exact
    for n in range(x.top_degree + 1):
        hn = free_complex_homology(x.ranks(), matrices(x), n)
        tens, tor = tensor_tor_forms(hn, p)
        assert data.gamma[n].canonical_form() == hn
        s = data.s[n]
        assert s.cokernel()[0].canonical_form() == tens
        assert s.kernel()[0].canonical_form() == tor
        prev = tensor_tor_forms(free_complex_homology(x.ranks(), matrices(x), n - 1), p)[1] if n else (0, ())
        tx = base_change(x, RingSpec.mod(p))
        assert finite_homology_order(tx.ranks(), matrices(tx), n, p) == form_order(tens) * form_order(prev)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_comparison_ladder_commutes(seed):
    rng = random.Random(seed)
    x = random_free_complex(rng, ZZ, 2, max_rank=2)
    # a chain map x -> x + x (diagonal) twisted by a random scalar on the second copy
    from moore_tower.chain import direct_sum_complex
    y = direct_sum_complex([x, x])
    k = rng.randint(-2, 2)
    comps = []
    for n in range(x.top_degree + 1):
        r = x.term(n).ngens
        rows = [[1 if i == j else 0 for j in range(r)] for i in range(r)] + \
               [[k if i == j else 0 for j in range(r)] for i in range(r)]
        comps.append(ModuleMap(x.term(n), y.term(n), ExactMatrix(ZZ, 2 * r, r, rows) if r else
                               ExactMatrix.zero(ZZ, 0, 0)))
    f = ChainMap(x, y, comps)
    assert all(comparison_ladder(f, BaseChange(2)))


# --- mod-p homotopy -----------------------------------------------------------------

def sphere_object(k, level, p=None):
    ranks = [0] * k + ([1] if p is None else [1, 1])
    mats = [ExactMatrix.zero(ZZ, ranks[i], ranks[i + 1]) for i in range(len(ranks) - 1)]
    if p is not None:
        mats[-1] = [[p]]
    return dold_kan(ChainComplex.free(ZZ, ranks, mats), level)


@pytest.mark.parametrize("p", [2, 3])
def test_mod_p_of_free_homotopy(p):
    x = sphere_object(2, 4)
    assert mod_p_homotopy(x, p, 2).group.describe() == f"Z/{p}"
    assert mod_p_homotopy(x, p, 3).group.is_zero()


@pytest.mark.parametrize("p", [2, 3])
def test_mod_p_of_cyclic_homotopy(p):
    x = sphere_object(1, 4, p)            # pi_1 = Z/p, pi_0 = 0
    assert mod_p_homotopy(x, p, 1).group.describe() == f"Z/{p}"
    assert mod_p_homotopy(x, p, 2).group.describe() == f"Z/{p}"
    assert mod_p_homotopy(x, p, 0).group.is_zero()


def test_mod_p_truncation_error():
    with pytest.raises(TruncationError):
        mod_p_homotopy(sphere_object(1, 2), 2, 2)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([2, 3]), st.integers(0, 2))
def test_mod_p_short_exact_sequence(seed, p, k):
    x = random_simplicial(random.Random(seed), ZZ, 3, max_rank=3)
    res = mod_p_homotopy(x, p, k)
    assert res.report.exact
    pk = homotopy_groups(x, k).canonical_form()
    pk1 = homotopy_groups(x, k - 1).canonical_form() if k else (0, ())
    assert res.tensor.canonical_form() == tensor_tor_forms(pk, p)[0]
    assert res.tor.canonical_form() == tensor_tor_forms(pk1, p)[1]
    assert res.group.order() == form_order(res.tensor.canonical_form()) * form_order(res.tor.canonical_form())


def test_mod_p_over_z4_ring():
    # Z/4 in degree 0 as a simplicial Z/4-module: mod-2 homotopy in degree 0 is Z/2
    x = dold_kan(ChainComplex.free(RingSpec.mod(4), [1], []), 2)
    assert mod_p_homotopy(x, 2, 0).group.describe() == "Z/2"
    assert mod_p_homotopy(x, 2, 1).group.describe() == "Z/2"


# --- spiral sequence ------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_spiral_exact_on_random_inputs(seed, ext_level, int_level):
    x = random_bisimplicial(random.Random(seed), ZZ, ext_level, int_level, max_rank=2)
    rep = spiral_sequence(x)
    assert rep.fibrant and rep.exact and all(rep.h0_iso.values())
    assert all(v for v in rep.loop_iso.values())
    # consecutive composites vanish before exactness is even asked
    for sec in rep.sections.values():
        assert all(v.composite_zero for v in sec.verdicts)


def test_random_double_complex_rows_are_exact():
    dc = random_double_complex(random.Random(7), ZZ, 3, 3, max_rank=3)
    for q in range(1, 4):
        row = ChainComplex(ZZ, [dc.term(p, q) for p in range(4)], [dc.h(p, q) for p in range(1, 4)])
        assert all(h == (0, ()) for h in row.homology_forms())


def test_externally_constant_collapses():
    y = sphere_object(1, 3, 2)
    x = externally_constant(y, 3)
    rep = spiral_sequence(x)
    assert rep.exact and all(rep.h0_iso.values())
    for (n, i), m in rep.natural.items():
        assert m.is_zero() or n == 0
    assert rep.natural[(0, 1)].describe() == "Z/2"


@pytest.mark.parametrize("m", [0, 1, 2])
def test_sphere_shift(m):
    """An internal complex A placed in external degree m: pi-natural and
    pi pi_* are H_*(A) in external degree m and zero elsewhere."""
    a = random_free_complex(random.Random(m + 11), ZZ, 2, max_rank=2)
    terms = {(m, q): a.term(q) for q in range(3)}
    dv = {(m, q): a.d(q) for q in range(1, 3)}
    dc = DoubleComplex(ZZ, m, 2, terms, {}, dv)
    x = gamma2(dc, m + 2, 3)
    rep = spiral_sequence(x)
    assert rep.exact
    for i in range(3):
        h = a.homology(i).canonical_form()
        sec = rep.sections[i]
        for n in range(m + 2):
            nat = rep.natural[(n, i)].canonical_form()
            pipi = sec.terms[sec.labels.index(f"pi_{n} pi_*")].canonical_form()
            expected = h if n == m else (0, ())
            assert nat == expected and pipi == expected


def test_spiral_truncation_error():
    x = random_bisimplicial(random.Random(1), ZZ, 1, 2)
    with pytest.raises(TruncationError):
        spiral_sequence(x)
