import itertools
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from moore_tower.exactalg import (ExactMatrix, FgModule, ModuleMap, RingSpec, ZZ, Subquotient,
                                  direct_sum, enumerate_extensions, extensions_equivalent,
                                  hom_and_ext, module_from_presentation, smith_normal_form, tensor,
                                  tor1)
from oracles import det, invariant_factors, module_form

Z4 = RingSpec.mod(4)


def small_matrix(max_dim=4, bound=6):
    return st.integers(1, max_dim).flatmap(
        lambda r: st.integers(1, max_dim).flatmap(
            lambda c: st.lists(st.lists(st.integers(-bound, bound), min_size=c, max_size=c),
                               min_size=r, max_size=r)))


def is_divisibility_chain(ds):
    nz = [d for d in ds if d]
    return all(b % a == 0 for a, b in zip(nz, nz[1:])) and all(ds[i] for i in range(len(nz)))


# --- ring and matrix plumbing -----------------------------------------------

def test_ring_parse_roundtrip():
    assert RingSpec.parse("Z") == ZZ
    assert RingSpec.parse("Zmod:4") == Z4
    assert str(Z4) == "Zmod:4"
    with pytest.raises(ValueError):
        RingSpec.parse("Zmod:1")


def test_matrix_entries_reduced_mod_m():
    m = ExactMatrix(Z4, 1, 3, [[5, -1, 8]])
    assert m.data == ((1, 3, 0),)


def test_matrix_json_roundtrip():
    m = ExactMatrix(ZZ, 2, 2, [[10 ** 30, -1], [0, 7]])
    assert ExactMatrix.from_json(ZZ, m.to_json()) == m


# --- Smith normal form ----------------------------------------------------------

def test_snf_example_2468():
    u, d, v = smith_normal_form(ExactMatrix(ZZ, 2, 2, [[2, 4], [6, 8]]))
    assert d.data == ((2, 0), (0, 4))
    # independent check: invariant factors from minors
    assert invariant_factors([[2, 4], [6, 8]]) == [2, 4]


def test_snf_zero_and_identity():
    u, d, v = smith_normal_form(ExactMatrix.zero(ZZ, 2, 3))
    assert d.is_zero() and u == ExactMatrix.identity(ZZ, 2) and v == ExactMatrix.identity(ZZ, 3)
    u, d, v = smith_normal_form(ExactMatrix.identity(ZZ, 3))
    assert d == ExactMatrix.identity(ZZ, 3)


@settings(max_examples=150, deadline=None)
@given(small_matrix())
def test_snf_is_a_factorization(rows):
    m = ExactMatrix(ZZ, len(rows), len(rows[0]), rows)
    u, d, v = smith_normal_form(m)
    assert u @ m @ v == d
    assert abs(det([list(r) for r in u.data])) == 1
    assert abs(det([list(r) for r in v.data])) == 1
    diag = [d.entry(i, i) for i in range(min(d.rows, d.cols))]
    assert all(d.entry(i, j) == 0 for i in range(d.rows) for j in range(d.cols) if i != j)
    assert is_divisibility_chain(diag)
    assert [x for x in diag if x] == invariant_factors(rows)


@settings(max_examples=60, deadline=None)
@given(small_matrix())
def test_snf_deterministic(rows):
    m = ExactMatrix(ZZ, len(rows), len(rows[0]), rows)
    assert smith_normal_form(m) == smith_normal_form(m)


@settings(max_examples=80, deadline=None)
@given(small_matrix(max_dim=3, bound=9))
def test_snf_over_z4(rows):
    m = ExactMatrix(Z4, len(rows), len(rows[0]), rows)
    u, d, v = smith_normal_form(m)
    assert u @ m @ v == d
    diag = [d.entry(i, i) for i in range(min(d.rows, d.cols))]
    assert all(x in (0, 1, 2) for x in diag)


# --- modules ------------------------------------------------------------------

def test_module_examples():
    assert module_from_presentation(ExactMatrix(ZZ, 1, 1, [[2]])).describe() == "Z/2"
    assert FgModule.free(ZZ, 2).canonical_form() == (2, ())
    assert FgModule.from_invariants(ZZ, [2, 3]).canonical_form() == (0, (6,))


@settings(max_examples=100, deadline=None)
@given(small_matrix())
def test_module_canonical_form_matches_minors(rows):
    m = module_from_presentation(ExactMatrix(ZZ, len(rows), len(rows[0]), rows))
    assert m.canonical_form() == module_form(len(rows), rows)


@settings(max_examples=60, deadline=None)
@given(small_matrix(), st.randoms(use_true_random=False))
def test_module_form_invariant_under_shuffles(rows, rnd):
    perm_r = list(range(len(rows)))
    perm_c = list(range(len(rows[0])))
    rnd.shuffle(perm_r)
    rnd.shuffle(perm_c)
    shuffled = [[rows[i][j] for j in perm_c] for i in perm_r]
    a = module_from_presentation(ExactMatrix(ZZ, len(rows), len(rows[0]), rows))
    b = module_from_presentation(ExactMatrix(ZZ, len(rows), len(rows[0]), shuffled))
    assert a.isomorphic(b)


def test_coords_and_element_roundtrip():
    m = FgModule(ZZ, 2, ExactMatrix(ZZ, 2, 1, [[2], [4]]))
    for c in [(1, 0), (0, 1), (3, 5)]:
        x = m.element(c)
        assert m.coords(x) == m.coords(m.element(m.coords(x)))


def test_multiplication_by_two_on_z4():
    a = FgModule.cyclic(ZZ, 4)
    f = ModuleMap(a, a, ExactMatrix(ZZ, 1, 1, [[2]]))
    k, _ = f.kernel()
    i, _, _ = f.image()
    c, _ = f.cokernel()
    assert k.describe() == i.describe() == c.describe() == "Z/2"


def test_ill_defined_map_rejected():
    from moore_tower.exactalg import IllDefinedMap
    with pytest.raises(IllDefinedMap):
        ModuleMap(FgModule.cyclic(ZZ, 2), FgModule.free(ZZ, 1), ExactMatrix(ZZ, 1, 1, [[1]]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=4, max_size=4),
       st.sampled_from([(2,), (3,), (4,), (2, 2), (4, 6)]))
def test_kernel_image_orders(entries, inv):
    """|source| = |ker| * |im| and |target| = |im| * |coker| for finite modules."""
    src = FgModule.from_invariants(ZZ, [2, 4])
    tgt = FgModule.from_invariants(ZZ, inv)
    # entry (k, i) is a multiple of t_k / gcd(t_k, s_i), so the map is well defined
    cols = [[entries[2 * i + k] * (t // gcd(t, s)) for k, t in enumerate(inv)]
            for i, s in enumerate((2, 4))]
    f = ModuleMap.from_columns(src, tgt, cols)
    k, _ = f.kernel()
    i, _, _ = f.image()
    c, _ = f.cokernel()
    assert k.order() * i.order() == src.order()
    assert i.order() * c.order() == tgt.order()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=6, max_size=6))
def test_preimage_is_a_preimage(entries):
    src = FgModule.free(ZZ, 3)
    tgt = FgModule.free(ZZ, 2)
    f = ModuleMap(src, tgt, ExactMatrix(ZZ, 2, 3, [entries[:3], entries[3:]]))
    for x in itertools.product(range(-2, 3), repeat=3):
        y = f.apply(x)
        pre = f.preimage(y)
        assert pre is not None and f.apply(pre) == y


def test_subquotient_homology_of_z_mod_2_complex():
    a = FgModule.free(ZZ, 1)
    f = ModuleMap(a, a, ExactMatrix(ZZ, 1, 1, [[2]]))
    sq = Subquotient(f, None, a)
    assert sq.module.describe() == "Z/2"


# --- Hom, Ext, Tor --------------------------------------------------------------

@pytest.mark.parametrize("a,b,hom,ext", [
    ((2,), (4,), "Z/2", "Z/2"),
    ((5,), (0,), "0", "Z/5"),
    ((0,), (3,), "Z/3", "0"),
    ((2, 3), (6,), "Z/6", "Z/6"),
])
def test_hom_ext_over_z(a, b, hom, ext):
    h, e = hom_and_ext(FgModule.from_invariants(ZZ, a), FgModule.from_invariants(ZZ, b))
    assert h.describe() == hom and e.describe() == ext


def test_tor_over_z():
    assert tor1(FgModule.cyclic(ZZ, 4), FgModule.cyclic(ZZ, 6)).describe() == "Z/2"
    assert tor1(FgModule.cyclic(ZZ, 2), FgModule.cyclic(ZZ, 2)).describe() == "Z/2"
    assert tor1(FgModule.free(ZZ, 1), FgModule.cyclic(ZZ, 2)).is_zero()


def test_hom_ext_tor_over_z4():
    a = FgModule.cyclic(Z4, 2)
    h, e = hom_and_ext(a, a)
    assert h.describe() == e.describe() == tor1(a, a).describe() == "Z/2"


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4, 6, 0]), st.sampled_from([2, 3, 4, 6, 0]))
def test_tensor_and_tor_of_cyclics(a, b):
    """Z/a (x) Z/b = Z/gcd and Tor(Z/a, Z/b) = Z/gcd (zero for a free factor)."""
    ma, mb = FgModule.from_invariants(ZZ, [a]), FgModule.from_invariants(ZZ, [b])
    g = gcd(a, b)
    assert tensor(ma, mb).canonical_form() == ((1, ()) if g == 0 else (0, (g,) if g > 1 else ()))
    expected = (0, (g,) if a and b and g > 1 else ())
    assert tor1(ma, mb).canonical_form() == expected


# --- extensions ----------------------------------------------------------------

FAMILY = [(2,), (3,), (4,), (2, 2)]


@pytest.mark.parametrize("q,s", list(itertools.product(FAMILY, FAMILY)))
def test_extension_count_matches_ext(q, s):
    quotient, sub = FgModule.from_invariants(ZZ, q), FgModule.from_invariants(ZZ, s)
    reps = enumerate_extensions(quotient, sub)
    assert len(reps) == hom_and_ext(quotient, sub)[1].order()
    for r in reps:
        r.validate()


def test_extensions_of_z2_by_z2():
    z2 = FgModule.cyclic(ZZ, 2)
    reps = enumerate_extensions(z2, z2)
    assert sorted(r.total.describe() for r in reps) == ["Z/2 + Z/2", "Z/4"]
    split = [r for r in reps if r.is_split()]
    assert len(split) == 1
    assert not extensions_equivalent(reps[0], reps[1])


def test_direct_sum_form():
    m = direct_sum([FgModule.cyclic(ZZ, 2), FgModule.cyclic(ZZ, 3), FgModule.free(ZZ, 1)])
    assert m.canonical_form() == (1, (6,))
