"""Lifting a Z/m chain complex G to a complex X over Z with X (x) Z/m ~ G.

The search builds a tower of modified Postnikov sections X^<n>. Stage n
holds the homology J_0..J_n of the lift so far together with the m-torsion
module I_{n+1} = J_{n+1}/mJ_{n+1}, realized as a sum of two-term EM
complexes, and a map rho: G -> P_{n+1} T X^<n> that is an isomorphism on
homology through degree n+1. Going up one stage:

* chi_n = k_{n+1}(T X^<n>) o rho decides whether rho lifts to
  G -> P_{n+2} T X^<n>; lifts form a torsor and are enumerated as classes.
* each lift rho' gives C = Coker(pi_{n+2} rho'), the reduction mod m of the
  kernel module K = m J_{n+1}; K is rebuilt from C (cyclic factors of order m
  become Z).
* J_{n+1} runs over extensions 0 -> K -> J -> I -> 0 with mJ = K that are
  allowable for the modified k-invariant of X^<n>.
* the next I is what is left of H_{n+2} G after removing Tor(J_{n+1}, Z/m),
  and the next rho is found by search and checked on homology.

Every lift that comes out is checked independently with
`find_homotopy_equivalence(base_change(x), G)`.

`brute_force_realize` is the oracle: it walks all complexes over Z within
the bounds, pruning by the mod-m homology already fixed by the matrices
chosen so far.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .chain import (ChainComplex, ChainMap, HomotopyClasses, _induced_on_classes, base_change,
                    direct_sum_complex, find_homotopy_equivalence, homotopy_classes, is_nullhomotopic,
                    k_invariant, mapping_cone, postnikov_section)
from .compare import BaseChange
from .emext import CohomologyClass, EMObject, em_map, em_object, is_allowable
from .exactalg import (ExactMatrix, ExtensionClass, FgModule, ModuleMap, RingSpec, ZZ, block_matrix,
                       hom_and_ext)


class ObstructionError(ValueError):
    """The obstruction class of the stage does not vanish."""


class DeadBranch(ValueError):
    """A choice leads to no next stage; `reason` says why."""

    def __init__(self, reason: str, detail: dict | None = None):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail or {}


# ----------------------------------------------------------------------------
# problem data


@dataclass(frozen=True)
class Bounds:
    max_degree: int = 3
    max_rank: int = 2
    max_entry: int = 3

    def __post_init__(self):
        if self.max_degree < 0 or self.max_rank < 1 or self.max_entry < 1:
            raise ValueError("bounds must be positive")

    def to_json(self) -> dict:
        return {"deg": self.max_degree, "rank": self.max_rank, "entry": self.max_entry}


@dataclass
class LiftProblem:
    target: ChainComplex
    bounds: Bounds = field(default_factory=Bounds)
    source_ring: RingSpec = ZZ

    def __post_init__(self):
        if not self.source_ring.is_integers:
            raise ValueError("lifts are sought over Z")
        if self.target.ring.is_integers:
            raise ValueError("the target must live over Z/m")
        if not self.target.is_free():
            raise ValueError("the target must be degreewise free")
        self.target.validate()
        self.target = self.target.trimmed()

    @property
    def ring(self) -> RingSpec:
        return self.target.ring

    @property
    def modulus(self) -> int:
        return self.target.ring.modulus


@dataclass
class KernelImageSplit:
    """Candidate kernel, image and cokernel data of h_{n+1} at one stage.

    K is a module over Z, I and C are m-torsion."""
    K: FgModule
    I: FgModule
    C: FgModule

    def forms(self) -> dict:
        return {"K": self.K.canonical_form(), "I": self.I.canonical_form(), "C": self.C.canonical_form()}


@dataclass
class TowerChoice:
    lift: tuple[int, ...]          # class in [G, P_{n+2} T X^<n>] over rho
    khat: CohomologyClass
    extension: ExtensionClass


@dataclass
class TowerStage:
    n: int
    homology: tuple[FgModule, ...]     # J_0 .. J_n
    top: FgModule                      # I_{n+1}
    xhat: ChainComplex
    pieces: tuple[EMObject, ...]
    rho: ChainMap                      # G -> P_{n+1} T xhat
    rho_coords: tuple[int, ...]
    rho_inverse: tuple[ModuleMap, ...]  # inverses of H_k(rho), k <= n+1
    chi: CohomologyClass | None = None
    choice: TowerChoice | None = None
    phat: ChainMap | None = None       # xhat -> previous xhat

    def to_json(self) -> dict:
        out = {"n": self.n,
               "homology": [list(_form_json(j)) for j in self.homology],
               "top": list(_form_json(self.top)),
               "xhat_ranks": self.xhat.ranks(),
               "rho": list(self.rho_coords)}
        if self.chi is not None:
            out["chi"] = {"group": list(self.chi.classes.group.invariants), "coords": list(self.chi.coords)}
        if self.choice is not None:
            out["choice"] = {"lift": list(self.choice.lift),
                             "khat": list(self.choice.khat.coords),
                             "extension": list(_form_json(self.choice.extension.total))}
        return out


@dataclass(frozen=True)
class TowerLedger:
    problem: LiftProblem
    stages: tuple[TowerStage, ...]

    @property
    def last(self) -> TowerStage:
        return self.stages[-1]

    def stage(self, n: int) -> TowerStage:
        for s in self.stages:
            if s.n == n:
                return s
        raise KeyError(n)

    def to_json(self) -> dict:
        return {"modulus": self.problem.modulus, "bounds": self.problem.bounds.to_json(),
                "stages": [s.to_json() for s in self.stages]}


def _form_json(m: FgModule):
    free, tors = m.canonical_form()
    return free, list(tors)


# ----------------------------------------------------------------------------
# modified Postnikov sections and k-invariants


def _kernel_cycles(x: ChainComplex, n: int, t: BaseChange) -> list[tuple[int, ...]]:
    """Cycle representatives of SNF-adapted generators of Ker(H_n x -> H_n Tx)."""
    if n > x.top_degree:
        return []
    h = t.unit(x).induced(n)
    kmod, kincl = h.kernel()
    sq = x.homology_data(n)
    reps = []
    for j in range(kmod.rank):
        unit = tuple(1 if i == j else 0 for i in range(kmod.rank))
        v = kincl.apply(kmod.element(unit))
        reps.append(sq.representative(sq.module.coords(v)))
    return reps


def modified_postnikov_section(x: ChainComplex, n: int, t: BaseChange
                               ) -> tuple[ChainComplex, ChainMap, ChainMap]:
    """(xhat, phat: x -> xhat, pcheck: xhat -> P_n x).

    Cells in degree n+2 kill the kernel of h_{n+1}: H_{n+1} x -> H_{n+1} Tx;
    xhat is P_{n+1} of the resulting cone."""
    ring = x.ring
    reps = _kernel_cycles(x, n + 1, t)
    f = FgModule.free(ring, len(reps))
    attach = ChainComplex.from_terms(ring, {n + 1: f}, {})
    comps = [ModuleMap.zero(attach.term(k), x.term(k)) for k in range(n + 1)]
    comps.append(ModuleMap.from_columns(f, x.term(n + 1), reps, check=False))
    phi = ChainMap(attach, x, comps)
    cone, incl, _ = mapping_cone(phi)
    xhat, r = postnikov_section(cone, n + 1)
    phat = r @ incl
    pn, _ = postnikov_section(x, n)
    pc = []
    for k in range(xhat.top_degree + 1):
        src = xhat.term(k)
        if k <= n + 1:
            rows = x.term(k).ngens
            mat = ExactMatrix.from_rows(ring, [[1 if i == j else 0 for j in range(src.ngens)]
                                               for i in range(rows)]) if rows else \
                ExactMatrix.zero(ring, 0, src.ngens)
            pc.append(ModuleMap(src, pn.term(k), mat, check=False))
        elif k == n + 2 and pn.top_degree >= n + 2:
            both = ModuleMap(src, x.term(n + 1), cone.d(n + 2).matrix, check=False)
            pc.append(both.lift_through(pn.d(n + 2)))
        else:
            pc.append(ModuleMap.zero(src, pn.term(k)))
    pcheck = ChainMap(xhat, pn, pc)
    return xhat, phat, pcheck


def _em_of_kinv(e: ChainComplex, dim: int) -> EMObject:
    """EM object structure on the target of `chain.k_invariant`."""
    ring = e.ring
    if e.top_degree >= dim + 1:
        mod, cover = e.d(dim + 1).cokernel()
    else:
        mod, cover = e.term(dim), ModuleMap.identity(e.term(dim))
    return EMObject(mod, dim, e, cover)


def modified_k_invariant(x: ChainComplex, n: int, t: BaseChange) -> CohomologyClass:
    """Class of P_n xhat -> E(I_{n+1}, n+2), xhat the modified section of x."""
    xhat, _, _ = modified_postnikov_section(x, n, t)
    e, k = k_invariant(xhat, n)
    em = _em_of_kinv(e, n + 2)
    hc = homotopy_classes(k.source, e)
    return CohomologyClass(hc, em, hc.classify_original(k), k.source)


# ----------------------------------------------------------------------------
# module bookkeeping


def _prime_powers(order: int) -> list[int]:
    out = []
    p = 2
    while p * p <= order:
        if order % p == 0:
            q = 1
            while order % p == 0:
                order //= p
                q *= p
            out.append(q)
        p += 1
    if order > 1:
        out.append(order)
    return out


def _orders(m: FgModule) -> Counter:
    """Prime-power cyclic factors of a finite module."""
    c = Counter()
    for d in m.invariants:
        if d == 0:
            raise ValueError("module is infinite")
        c.update(_prime_powers(d))
    return c


def _tor_orders(j: FgModule, modulus: int) -> Counter:
    c = Counter()
    for d in j.invariants:
        if d:
            c.update(_prime_powers(math.gcd(d, modulus)))
    return c


def _torsion_module(orders: Counter) -> FgModule:
    return FgModule.from_invariants(ZZ, sorted(orders.elements()))


def _as_integer_module(m: FgModule) -> FgModule:
    """A finite Z/m module as a module over Z."""
    return FgModule.from_invariants(ZZ, list(m.invariants))


def kernel_from_cokernel(c: FgModule, modulus: int) -> FgModule:
    """K over Z with K/mK = c: factors of order m become Z."""
    return FgModule.from_invariants(ZZ, [0 if d == modulus else d for d in c.invariants])


def _extensions(quotient: FgModule, sub: FgModule) -> Iterator[ExtensionClass]:
    """Representatives of 0 -> sub -> J -> quotient -> 0 (quotient finite).

    One relation d_j e_j = alpha_j per canonical generator of the quotient,
    with alpha_j running over sub / d_j sub."""
    ring = sub.ring
    s_inv, q_inv = sub.invariants, quotient.invariants
    ks, kq = len(s_inv), len(q_inv)
    ranges = []
    for d in q_inv:
        ranges.append(itertools.product(*[range(math.gcd(s, d) if s else d) for s in s_inv]))
    sc, qc = sub.canonical_module(), quotient.canonical_module()
    s_to = ModuleMap(sub, sc, _rows_matrix(sub), check=False)
    q_from = ModuleMap(qc, quotient, ExactMatrix.from_columns(ring, quotient.canon.from_cols, quotient.ngens),
                       check=False)
    size = ks + kq
    for alphas in itertools.product(*[list(r) for r in ranges]):
        cols = []
        for i, d in enumerate(s_inv):
            if d:
                cols.append([d if k == i else 0 for k in range(size)])
        for j, d in enumerate(q_inv):
            col = [0] * size
            for i, a in enumerate(alphas[j]):
                col[i] = -a
            col[ks + j] = d
            cols.append(col)
        total = FgModule(ring, size, ExactMatrix.from_columns(ring, cols, size))
        incl = ModuleMap.from_columns(sc, total, [[1 if k == i else 0 for k in range(size)] for i in range(ks)])
        proj = ModuleMap(total, qc, ExactMatrix(ring, kq, size,
                                                [[1 if k == ks + j else 0 for k in range(size)]
                                                 for j in range(kq)]))
        ext = ExtensionClass(sub, quotient, total, incl @ s_to, q_from @ proj)
        ext.validate()
        yield ext


def _rows_matrix(m: FgModule) -> ExactMatrix:
    rows = []
    for row in m.canon.to_rows:
        r = [0] * m.ngens
        for k, v in row.items():
            r[k] = v
        rows.append(r)
    return ExactMatrix(m.ring, len(rows), m.ngens, rows)


def kernel_is_multiple(ext: ExtensionClass, modulus: int) -> bool:
    """mJ equals the image of the sub module."""
    total = ext.total
    mult = ModuleMap.identity(total).scale(modulus)
    for v in total.generator_vectors():
        if ext.inclusion.preimage(mult.apply(v)) is None:
            return False
    for v in ext.sub.generator_vectors():
        if mult.preimage(ext.inclusion.apply(v)) is None:
            return False
    return True


# ----------------------------------------------------------------------------
# homotopy classes with linear homology data


class _LinearClasses:
    """[G, D] with the induced homology maps of basis classes, so that
    H_k of any class is a linear combination."""

    def __init__(self, hc: HomotopyClasses, degrees: Sequence[int]):
        self.hc = hc
        basis = [hc.to_map(tuple(1 if i == j else 0 for i in range(hc.group.rank)))
                 for j in range(hc.group.rank)]
        self.degrees = list(degrees)
        self.induced = {}
        for k in self.degrees:
            zero = ModuleMap.zero(hc.source.homology(k), hc.target.homology(k))
            self.induced[k] = (zero, [f.induced(k) if k <= hc.source.top_degree else zero for f in basis])

    def at(self, coords: Sequence[int], k: int) -> ModuleMap:
        zero, mats = self.induced[k]
        out = zero
        for c, f in zip(coords, mats):
            if c:
                out = out + f.scale(c)
        return out

    def is_equivalence(self, coords: Sequence[int], upto: int) -> bool:
        return all(self.at(coords, k).is_iso() for k in self.degrees if k <= upto)


def _find_rho(g: ChainComplex, tx: ChainComplex, n: int) -> tuple[ChainMap, tuple[int, ...], tuple]:
    """First class G -> P_{n+1} tx inducing isomorphisms through degree n+1."""
    p, _ = postnikov_section(tx, n + 1)
    hc = homotopy_classes(g, p, derived=False)
    lin = _LinearClasses(hc, range(n + 2))
    for coords in hc.elements():
        if lin.is_equivalence(coords, n + 1):
            rho = hc.to_map(coords)
            inverse = tuple(rho.induced(k).inverse() for k in range(n + 2))
            return rho, tuple(coords), inverse
    raise DeadBranch("no_equivalence", {"stage": n})


def _make_stage(problem: LiftProblem, n: int, homology: Sequence[FgModule], top: FgModule) -> TowerStage:
    pieces = tuple(em_object(j, k) for k, j in enumerate(homology)) + (em_object(top, n + 1),)
    xhat = direct_sum_complex([p.realization for p in pieces])
    tx = base_change(xhat, problem.ring)
    rho, coords, inverse = _find_rho(problem.target, tx, n)
    # the homotopy profile: one degree above the section sits Tor(I, Z/m) = I
    extra = tx.homology(n + 2)
    if _orders(_as_integer_module(extra)) != _orders(top):
        raise AssertionError("T xhat does not have the expected top homotopy")
    return TowerStage(n, tuple(homology), top, xhat, pieces, rho, coords, inverse)


def start_tower(problem: LiftProblem) -> TowerLedger:
    """Stage -1: X^<-1> = E(H_0 G, 0) with H_0 G read as a module over Z."""
    h0 = _as_integer_module(problem.target.homology(0))
    return TowerLedger(problem, (_make_stage(problem, -1, (), h0),))


# ----------------------------------------------------------------------------
# obstruction and lifts


@dataclass
class _StageMaps:
    tx: ChainComplex
    p: ChainComplex
    r: ChainMap
    e: ChainComplex
    k: ChainMap
    hc_t: HomotopyClasses
    hc_p: HomotopyClasses
    hc_e: HomotopyClasses
    r_star: ModuleMap
    k_star: ModuleMap
    em: EMObject


def _stage_maps(ledger: TowerLedger, n: int) -> _StageMaps:
    st = ledger.stage(n)
    g = ledger.problem.target
    tx = base_change(st.xhat, ledger.problem.ring)
    p, r = postnikov_section(tx, n + 1)
    e, k = k_invariant(tx, n + 1)
    hc_t = homotopy_classes(g, tx, derived=False)
    hc_p = homotopy_classes(g, p, derived=False)
    hc_e = homotopy_classes(g, e, derived=False)
    r_star = _induced_on_classes(hc_t, hc_p, lambda f: r @ f)
    k_star = _induced_on_classes(hc_p, hc_e, lambda f: k @ f)
    return _StageMaps(tx, p, r, e, k, hc_t, hc_p, hc_e, r_star, k_star, _em_of_kinv(e, n + 3))


def _chi(sm: _StageMaps, rho_coords: Sequence[int]) -> CohomologyClass:
    vec = sm.k_star.apply(tuple(rho_coords))
    coords = sm.hc_e.group.coords(vec)
    return CohomologyClass(sm.hc_e, sm.em, coords, sm.hc_e.source)


def obstruction_class(ledger: TowerLedger, n: int) -> CohomologyClass:
    """chi_n = k_{n+1}(T xhat) o rho in H^{n+3}(G; I_{n+1})."""
    sm = _stage_maps(ledger, n)
    st = ledger.stage(n)
    chi = _chi(sm, st.rho_coords)
    null = is_nullhomotopic(sm.k @ st.rho)
    if null != chi.is_zero():
        raise AssertionError("class arithmetic and nullhomotopy solver disagree on chi")
    return chi


def lift_choices(ledger: TowerLedger, n: int) -> list[tuple[tuple[int, ...], KernelImageSplit]]:
    """Lifts G -> P_{n+2} T xhat of some equivalence G -> P_{n+1} T xhat, one
    per isomorphism type of C = Coker(pi_{n+2}), in canonical order.

    Raises DeadBranch when no lift exists, with the obstruction classes of
    all equivalences in the detail."""
    sm = _stage_maps(ledger, n)
    st = ledger.stage(n)
    modulus = ledger.problem.modulus
    lin = _LinearClasses(sm.hc_t, range(n + 3))
    seen: dict = {}
    for coords in sm.hc_t.elements():
        if not lin.is_equivalence(coords, n + 1):
            continue
        c_mod, _ = lin.at(coords, n + 2).cokernel()
        key = c_mod.canonical_form()
        if key not in seen:
            c_int = _as_integer_module(c_mod)
            seen[key] = (tuple(coords), KernelImageSplit(kernel_from_cokernel(c_mod, modulus), st.top, c_int))
    if seen:
        return list(seen.values())
    # no lift: certify by the obstruction of every equivalence
    lin_p = _LinearClasses(sm.hc_p, range(n + 2))
    chis = []
    for coords in sm.hc_p.elements():
        if lin_p.is_equivalence(coords, n + 1):
            chi = _chi(sm, coords)
            if chi.is_zero():
                raise AssertionError("chi vanishes but no lift was found")
            chis.append(list(chi.coords))
    if not chis:
        raise DeadBranch("no_equivalence", {"stage": n})
    raise DeadBranch("obstruction", {"stage": n, "chi": chis[:8], "equivalences": len(chis)})


def classify_pi_extension(ledger: TowerLedger, n: int, split: KernelImageSplit | None = None,
                          khat: CohomologyClass | None = None
                          ) -> tuple[FgModule, list[ExtensionClass]]:
    """Ext(I, K) and the allowable extensions with mJ = K, one per isomorphism
    type of J."""
    if split is None:
        split = lift_choices(ledger, n)[0][1]
    st = ledger.stage(n)
    t = BaseChange(ledger.problem.modulus)
    khat = khat or modified_k_invariant(st.xhat, n, t)
    quotient = khat.target.module
    _, ext_group = hom_and_ext(quotient, split.K)
    out, seen = [], set()
    for ext in _extensions(quotient, split.K):
        if not kernel_is_multiple(ext, ledger.problem.modulus):
            continue
        key = ext.total.canonical_form()
        if key in seen:
            continue
        if not is_allowable(ext, khat, n):
            continue
        seen.add(key)
        out.append(ext)
    return ext_group, out


def _top_homology_map(khat: CohomologyClass, st: TowerStage) -> ModuleMap:
    """khat's coefficient module -> I_{n+1} of the stage (both are H_{n+1} xhat)."""
    n = st.n
    em = khat.target
    xh = st.xhat
    sq = xh.homology_data(n + 1)
    top_piece = st.pieces[-1]
    # the top piece sits after all the lower pieces in every degree
    offset = sum(p.realization.term(n + 1).ngens for p in st.pieces[:-1])
    to_h = ModuleMap.from_columns(
        top_piece.module, sq.module,
        [sq.project(_pad(top_piece.cover.preimage(v), offset, xh.term(n + 1).ngens))
         for v in top_piece.module.generator_vectors()])
    src = khat.classes.source if khat.original_source is None else khat.original_source
    # src is P_n xhat; its degree n+2 term is Z_{n+1} xhat
    incl = src.d(n + 2) if src.top_degree >= n + 2 else None
    cols = []
    for v in em.module.generator_vectors():
        z = em.cover.preimage(v)
        cyc = incl.apply(z) if incl is not None else z
        cols.append(to_h.preimage(sq.project(cyc)))
    return ModuleMap.from_columns(em.module, top_piece.module, cols)


def _pad(v: Sequence[int], offset: int, size: int) -> tuple[int, ...]:
    out = [0] * size
    for i, a in enumerate(v):
        out[offset + i] = a
    return tuple(out)


def _structure_map(new: TowerStage, old: TowerStage, proj: ModuleMap) -> ChainMap:
    """X^<n+1> -> X^<n>: identity on E(J_k, k) for k <= n, E(J_{n+1}) -> E(I_{n+1})
    through proj, zero on the new top piece."""
    ring = new.xhat.ring
    blocks = {}
    for i, piece in enumerate(old.pieces[:-1]):
        blocks[(i, i)] = ChainMap.identity(piece.realization)
    blocks[(len(old.pieces) - 1, len(old.pieces) - 1)] = em_map(proj, new.pieces[-2], old.pieces[-1])
    comps = []
    for k in range(new.xhat.top_degree + 1):
        rows = [p.realization.term(k).ngens for p in old.pieces]
        cols = [p.realization.term(k).ngens for p in new.pieces]
        mats = {ij: f.component(k).matrix for ij, f in blocks.items()
                if k <= f.source.top_degree and k <= f.target.top_degree}
        comps.append(ModuleMap(new.xhat.term(k), old.xhat.term(k), block_matrix(ring, rows, cols, mats),
                               check=False))
    return ChainMap(new.xhat, old.xhat, comps)


def extend_tower(ledger: TowerLedger, n: int, choice: TowerChoice) -> TowerLedger:
    """Stage n+1 from stage n and a choice (lift, khat, extension)."""
    problem = ledger.problem
    st = ledger.last
    if st.n != n:
        raise ValueError(f"ledger ends at stage {st.n}, not {n}")
    sm = _stage_maps(ledger, n)
    g = sm.hc_t.group
    if len(choice.lift) != g.rank or any(c < 0 or (d and c >= d) for c, d in zip(choice.lift, g.invariants)):
        raise ValueError("lift class is not in [G, P_{n+2} T xhat]")
    rho_coords = sm.hc_p.group.coords(sm.r_star.apply(tuple(choice.lift)))
    lin = _LinearClasses(sm.hc_p, range(n + 2))
    if not lin.is_equivalence(rho_coords, n + 1):
        raise ValueError("lift does not cover an equivalence")
    chi = _chi(sm, rho_coords)
    if not chi.is_zero():
        raise ObstructionError(f"obstruction class at stage {n} is nonzero")
    ext = choice.extension
    if choice.khat.target.dimension != n + 2:
        raise ValueError("khat has the wrong dimension")
    if not kernel_is_multiple(ext, problem.modulus):
        raise ValueError("extension fails mJ = K")
    if not is_allowable(ext, choice.khat, n):
        raise ValueError("extension is not allowable")
    j = ext.total
    h_next = problem.target.homology(n + 2)
    left = _orders(_as_integer_module(h_next))
    left.subtract(_tor_orders(j, problem.modulus))
    if any(v < 0 for v in left.values()):
        raise DeadBranch("homology", {"stage": n + 1})
    top = _torsion_module(+left)
    new = _make_stage(problem, n + 1, st.homology + (j,), top)
    proj = _top_homology_map(choice.khat, st) @ ext.projection
    phat = _structure_map(new, st, proj)
    old = replace(st, chi=chi, choice=choice)
    return TowerLedger(problem, ledger.stages[:-1] + (old, replace(new, phat=phat)))


# ----------------------------------------------------------------------------
# search


def _lift_ranks(homology: Sequence[FgModule]) -> list[int]:
    """Ranks of the sum of EM complexes with the given homology."""
    top = len(homology)
    ranks = [0] * (top + 1)
    for k, j in enumerate(homology):
        ranks[k] += j.rank
        ranks[k + 1] += sum(1 for d in j.invariants if d)
    while len(ranks) > 1 and ranks[-1] == 0:
        ranks.pop()
    return ranks


def _within(homology: Sequence[FgModule], bounds: Bounds) -> bool:
    ranks = _lift_ranks(homology)
    if len(ranks) - 1 > bounds.max_degree or max(ranks) > bounds.max_rank:
        return False
    return all(d <= bounds.max_entry for j in homology for d in j.invariants if d)


@dataclass
class LiftSearch:
    """Lifts found, each with its ledger; when empty, the certificate lists
    why every branch died."""
    lifts: list
    certificate: list
    bound_exhausted: bool

    def __len__(self):
        return len(self.lifts)

    def __iter__(self):
        return iter(self.lifts)

    def __getitem__(self, i):
        return self.lifts[i]

    def to_json(self) -> dict:
        return {"found": bool(self.lifts),
                "lifts": [{"ranks": x.ranks(), "homology": [list(_form_json(h)) for h in
                                                            (x.homology(k) for k in range(x.top_degree + 1))],
                           "ledger": ledger.to_json()} for x, ledger in self.lifts],
                "certificate": self.certificate,
                "bound_exhausted": self.bound_exhausted}


def _terminal(ledger: TowerLedger) -> bool:
    st = ledger.last
    return st.top.is_zero() and st.n + 2 > ledger.problem.target.top_degree


def enumerate_lifts(problem: LiftProblem, max_lifts: int | None = None) -> LiftSearch:
    """Depth-first search over (lift, khat, extension) choices."""
    g = problem.target
    t = BaseChange(problem.modulus)
    lifts, cert = [], []
    found_keys = set()
    exhausted = False
    # a subquotient of (Z/m)^r needs at most r generators, so H_k G bounds rank_k X
    b = problem.bounds
    for k in range(g.top_degree + 1):
        h = g.homology(k)
        if h.rank > b.max_rank or (k > b.max_degree + 1 and not h.is_zero()):
            return LiftSearch([], [{"reason": "bounds", "stage": k - 1}], True)
    try:
        root = start_tower(problem)
    except DeadBranch as e:
        return LiftSearch([], [{"reason": e.reason, **e.detail}], False)
    stack = [root]
    while stack:
        ledger = stack.pop()
        st = ledger.last
        if _terminal(ledger):
            x = st.xhat.trimmed()
            if not _within(st.homology, problem.bounds):
                exhausted = True
                cert.append({"reason": "bounds", "stage": st.n})
                continue
            if find_homotopy_equivalence(base_change(x, problem.ring), g) is None:
                cert.append({"reason": "final_check", "stage": st.n})
                continue
            key = tuple(x.homology_forms())
            if key not in found_keys:
                found_keys.add(key)
                lifts.append((x, ledger))
                if max_lifts is not None and len(lifts) >= max_lifts:
                    break
            continue
        if st.n + 1 > problem.bounds.max_degree:
            exhausted = True
            cert.append({"reason": "bounds", "stage": st.n})
            continue
        try:
            choices = lift_choices(ledger, st.n)
        except DeadBranch as e:
            cert.append({"reason": e.reason, **e.detail})
            continue
        khat = modified_k_invariant(st.xhat, st.n, t)
        children = []
        for lift, split in choices:
            _, exts = classify_pi_extension(ledger, st.n, split, khat)
            for ext in exts:
                if not _within(st.homology + (ext.total,), problem.bounds):
                    exhausted = True
                    cert.append({"reason": "bounds", "stage": st.n + 1})
                    continue
                try:
                    children.append(extend_tower(ledger, st.n, TowerChoice(lift, khat, ext)))
                except DeadBranch as e:
                    cert.append({"reason": e.reason, **e.detail})
        stack.extend(reversed(children))
    return LiftSearch(lifts, [] if lifts else cert, exhausted and not lifts)


# ----------------------------------------------------------------------------
# brute-force oracle


def _entry_order(e: int) -> list[int]:
    out = [0]
    for a in range(1, e + 1):
        out += [a, -a]
    return out


def _matrices(rows: int, cols: int, entries: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    for flat in itertools.product(entries, repeat=rows * cols):
        yield tuple(tuple(flat[i * cols:(i + 1) * cols]) for i in range(rows))


def _kernel_matrices(prev, rows: int, cols: int, entries: Sequence[int]
                     ) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Matrices d (rows x cols) with prev d = 0, in the order of `_matrices`.

    Columns of d are drawn from the bounded kernel vectors of prev."""
    if not prev:
        yield from _matrices(rows, cols, entries)
        return
    vecs = [v for v in itertools.product(entries, repeat=rows)
            if all(sum(a * b for a, b in zip(row, v)) == 0 for row in prev)]
    pos = {e: i for i, e in enumerate(entries)}
    mats = [tuple(tuple(c[i] for c in columns) for i in range(rows))
            for columns in itertools.product(vecs, repeat=cols)]
    mats.sort(key=lambda mm: tuple(pos[v] for row in mm for v in row))
    yield from mats


def _det(mat) -> int:
    if len(mat) == 1:
        return mat[0][0]
    return sum((-1) ** j * mat[0][j] * _det([row[:j] + row[j + 1:] for row in mat[1:]])
               for j in range(len(mat)))


@lru_cache(maxsize=None)
def _invariant_factors(mat: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    """Nonzero invariant factors of an integer matrix from its determinantal divisors."""
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    divisors = [1]
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for ri in itertools.combinations(range(rows), k):
            for ci in itertools.combinations(range(cols), k):
                g = math.gcd(g, _det([[mat[i][j] for j in ci] for i in ri]))
        if g == 0:
            break
        divisors.append(g)
    return tuple(divisors[i] // divisors[i - 1] for i in range(1, len(divisors)))


def _integer_homology_key(ranks: Sequence[int], mats) -> tuple:
    """Homology of a free complex over Z: free rank r_k - rk d_k - rk d_{k+1}
    and torsion the non-unit invariant factors of d_{k+1}."""
    invs = [()] + [_invariant_factors(m) if m and m[0] else () for m in mats] + [()]
    key = []
    for k, r in enumerate(ranks):
        free = r - len(invs[k]) - len(invs[k + 1])
        key.append((free, tuple(d for d in invs[k + 1] if d != 1)))
    while len(key) > 1 and key[-1] == (0, ()):
        key.pop()
    return tuple(key)


def _composes_to_zero(a, b) -> bool:
    """a b = 0 for integer matrices given as row tuples."""
    if not a or not b:
        return True
    inner = len(b)
    cols = len(b[0])
    for row in a:
        for j in range(cols):
            if sum(row[k] * b[k][j] for k in range(inner)):
                return False
    return True


class _ModHomology:
    """Cached H_j of T x from (d_j, d_{j+1}) reduced mod m."""

    def __init__(self, ring: RingSpec):
        self.ring = ring
        self.cache: dict = {}

    def form(self, ranks: tuple[int, int, int], d_in, d_out) -> tuple:
        m = self.ring.modulus
        red = lambda mat: tuple(tuple(v % m for v in row) for row in mat) if mat is not None else None
        key = (ranks, red(d_in), red(d_out))
        f = self.cache.get(key)
        if f is None:
            r_prev, r, r_next = ranks
            mats, rks = [], []
            if d_out is not None:
                rks.append(r_prev)
                mats.append(d_out)
            rks.append(r)
            if d_in is not None:
                rks.append(r_next)
                mats.append(d_in)
            c = ChainComplex.free(self.ring, rks, [list(map(list, mm)) for mm in mats], check=False)
            f = c.homology(1 if d_out is not None else 0).canonical_form()
            self.cache[key] = f
        return f


def _rank_tuples(bounds: Bounds) -> list[tuple[int, ...]]:
    tuples = itertools.product(range(bounds.max_rank + 1), repeat=bounds.max_degree + 1)
    return sorted(tuples, key=lambda r: (sum(r), r))


def brute_force_realize(problem: LiftProblem) -> ChainComplex | None:
    """First complex over Z within the bounds whose base change is equivalent
    to the target, ordered by total rank, ranks, then matrix entries with
    small magnitudes first; None certifies that there is none.

    Cost: at most prod over degrees of (2e+1)^(r_k r_{k-1}) matrix tuples per
    rank pattern, cut down by d^2 = 0 and by the mod-m homology of the
    partial complex, which is fixed degree by degree.
    """
    g = problem.target
    b = problem.bounds
    ring = problem.ring
    m = problem.modulus
    top = b.max_degree
    forms = [g.homology(k).canonical_form() for k in range(top + 2)]
    if any(f != (0, ()) for f in (g.homology(k).canonical_form() for k in range(top + 1, g.top_degree + 1))):
        return None
    orders = [g.homology(k).order() for k in range(top + 1)]
    log_ratio = Fraction(1)
    for k, o in enumerate(orders):
        log_ratio *= Fraction(o) ** (1 if k % 2 == 0 else -1)
    gens = [g.homology(k).rank for k in range(top + 1)]
    entries = _entry_order(b.max_entry)
    hom = _ModHomology(ring)
    verdicts: dict = {}

    def euler_ok(ranks) -> bool:
        chi = sum((-1) ** k * r for k, r in enumerate(ranks))
        return Fraction(m) ** chi == log_ratio

    def search(ranks, mats):
        k = len(mats) + 1          # next differential d_k: ranks[k] -> ranks[k-1]
        if k > top:
            j = top
            f = hom.form((ranks[j - 1] if j else 0, ranks[j], 0), None, mats[-1] if mats else None) \
                if j else hom.form((0, ranks[0], 0), None, None)
            if f != forms[j]:
                return None
            key = _integer_homology_key(ranks, mats)
            ok = verdicts.get(key)
            x = None
            if ok is None:
                x = ChainComplex.free(ZZ, list(ranks), [list(map(list, mm)) for mm in mats]).trimmed()
                ok = find_homotopy_equivalence(base_change(x, ring), g) is not None
                verdicts[key] = ok
            if not ok:
                return None
            x = x or ChainComplex.free(ZZ, list(ranks), [list(map(list, mm)) for mm in mats]).trimmed()
            return x
        prev = mats[-1] if mats else None
        for d in _kernel_matrices(prev, ranks[k - 1], ranks[k], entries):
            j = k - 1
            f = hom.form((ranks[j - 1] if j else 0, ranks[j], ranks[k]), d, prev)
            if f != forms[j]:
                continue
            found = search(ranks, mats + [d])
            if found is not None:
                return found
        return None

    for ranks in _rank_tuples(b):
        if not euler_ok(ranks) or any(gn > r for gn, r in zip(gens, ranks)):
            continue
        x = search(ranks, [])
        if x is not None:
            return x
    return None


# ----------------------------------------------------------------------------
# test corpus


def _interval_sum(ring: RingSpec, intervals: Sequence[tuple[int, int]]) -> ChainComplex:
    """Sum over [a, b] of Z/m -2-> ... -2-> Z/m in degrees b..a."""
    top = max(b for _, b in intervals)
    pieces = []
    for a, b in intervals:
        ranks = [1 if a <= k <= b else 0 for k in range(top + 1)]
        mats = [[[2]] if a < k <= b else [[0] * ranks[k]] * ranks[k - 1] for k in range(1, top + 1)]
        pieces.append(ChainComplex.free(ring, ranks, mats))
    return direct_sum_complex(pieces)


def _random_mod_complex(rng, ring: RingSpec, top: int, max_rank: int) -> ChainComplex:
    m = ring.modulus
    while True:
        ranks = [rng.randint(0, max_rank) for _ in range(top + 1)]
        mats = [[[rng.randrange(m) for _ in range(ranks[k])] for _ in range(ranks[k - 1])]
                for k in range(1, top + 1)]
        if all(not any(v % m for row in _mul(mats[k - 1], mats[k]) for v in row) for k in range(1, top)):
            return ChainComplex.free(ring, ranks, mats)


def _mul(a, b):
    if not a or not b or not b[0]:
        return []
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def lift_corpus(seed: int = 0, modulus: int = 4) -> list[tuple[str, ChainComplex]]:
    """Targets over Z/m with degree <= 3, ranks <= 2, entries in [0, m).

    Interval sums include unrealizable ones ([0, 2] + [1, 3] has homology
    compatible with a lift but a nonzero obstruction), base changes of
    random complexes over Z are realizable, random complexes over Z/m are
    whatever they are."""
    import random
    from .simplicial import random_free_complex
    ring = RingSpec.mod(modulus)
    rng = random.Random(seed)
    out = []
    for ivs in [[(0, 0)], [(0, 1)], [(1, 2), (3, 3)], [(0, 2)], [(0, 3)], [(0, 2), (1, 3)],
                [(0, 1), (2, 3)], [(0, 0), (1, 3)], [(1, 1), (2, 2)]]:
        out.append(("intervals " + " ".join(f"[{a},{b}]" for a, b in ivs), _interval_sum(ring, ivs)))
    k = 0
    while k < 8:
        x = random_free_complex(rng, ZZ, rng.randint(1, 3), max_rank=2, max_entry=3)
        out.append((f"base change #{k}", base_change(x, ring)))
        k += 1
    k = 0
    while k < 7:
        g = _random_mod_complex(rng, ring, rng.randint(1, 3), 2)
        if any(g.ranks()):
            out.append((f"random mod #{k}", g))
            k += 1
    return out
